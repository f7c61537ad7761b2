use crate::error::{Error, Result};

const WEIGHT_TOL: f64 = 1e-12;

/// Slab discrete-ordinates set, directions sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularQuadrature {
    mu: Vec<f64>,
    w: Vec<f64>,
    mirror: Vec<usize>,
}

impl AngularQuadrature {
    pub fn new(mu: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if mu.is_empty() || mu.len() != w.len() {
            return Err(Error::dims("AngularQuadrature", mu.len(), w.len()));
        }
        if mu.iter().any(|&m| !(m > -1.0 && m < 1.0) || m == 0.0) {
            return Err(Error::InvalidInput("directions must lie in (-1, 1) and be nonzero".into()));
        }
        if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput("weights must be positive".into()));
        }
        let total: f64 = w.iter().sum();
        if (total - 2.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidInput(format!("weights sum to {total}, expected 2")));
        }
        let mut order: Vec<usize> = (0..mu.len()).collect();
        order.sort_by(|&a, &b| mu[a].total_cmp(&mu[b]));
        let mu: Vec<f64> = order.iter().map(|&i| mu[i]).collect();
        let w: Vec<f64> = order.iter().map(|&i| w[i]).collect();
        let n = mu.len();
        for i in 0..n {
            let j = n - 1 - i;
            if (mu[i] + mu[j]).abs() > 1e-14 || (w[i] - w[j]).abs() > 1e-14 {
                return Err(Error::InvalidInput("direction set is not symmetric".into()));
            }
        }
        let mirror = (0..n).rev().collect();
        Ok(Self { mu, w, mirror })
    }

    /// Gauss-Legendre set of even order `n`.
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("quadrature order {n} must be even and positive")));
        }
        let mut mu = vec![0.0; n];
        let mut w = vec![0.0; n];
        for i in 0..n / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let weight = 2.0 / ((1.0 - x * x) * dp * dp);
            mu[i] = -x;
            mu[n - 1 - i] = x;
            w[i] = weight;
            w[n - 1 - i] = weight;
        }
        // remove the last ulp-level drift so the weights sum to 2 exactly enough
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x *= 2.0 / total);
        Self::new(mu, w)
    }

    pub fn n_dirs(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// Index of the direction `−μ_n`.
    pub fn mirror(&self, n: usize) -> usize {
        self.mirror[n]
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s2() {
        let q = AngularQuadrature::gauss_legendre(2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((q.mu()[0] + r).abs() < 1e-15 && (q.mu()[1] - r).abs() < 1e-15);
        assert_eq!(q.weights(), &[1.0, 1.0]);
        assert_eq!(q.mirror(0), 1);
    }

    #[test]
    fn integrates_polynomials() {
        for n in [2, 4, 8, 16, 32] {
            let q = AngularQuadrature::gauss_legendre(n).unwrap();
            assert!((q.weights().iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for p in 0..2 * n {
                let got: f64 = q.mu().iter().zip(q.weights()).map(|(m, w)| w * m.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-13, "n={n} p={p} got {got}");
            }
        }
    }

    #[test]
    fn rejects_bad_sets() {
        assert!(AngularQuadrature::gauss_legendre(3).is_err());
        assert!(AngularQuadrature::new(vec![0.0, 0.5], vec![1.0, 1.0]).is_err());
        assert!(AngularQuadrature::new(vec![-0.5, 0.4], vec![1.0, 1.0]).is_err());
        assert!(AngularQuadrature::new(vec![-0.5, 0.5], vec![1.0, 0.9]).is_err());
    }
}
