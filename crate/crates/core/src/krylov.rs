//! Restarted GMRES with right preconditioning.
//!
//! The preconditioned system `A M⁻¹ x̃ = b` is solved in the Krylov space and
//! the solution recovered as `x = x₀ + M⁻¹ (V y)`. Right preconditioning keeps
//! the minimized residual equal to the true residual, so the stopping test is
//! `‖b − A x‖ ≤ rtol ‖b‖`.

use crate::error::{Error, Result};
use crate::operator::LinearOperator;
use crate::sparse::{axpy, dot, norm2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresParams {
    pub rtol: f64,
    pub restart: usize,
    pub maxit: usize,
}

impl GmresParams {
    /// `maxit` defaults to ten restart cycles.
    pub fn new(rtol: f64, restart: usize) -> Self {
        Self {
            rtol,
            restart,
            maxit: 10 * restart,
        }
    }

    pub fn with_maxit(mut self, maxit: usize) -> Self {
        self.maxit = maxit;
        self
    }
}

impl Default for GmresParams {
    fn default() -> Self {
        Self::new(1e-8, 30)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    /// Arnoldi steps across all restart cycles.
    pub iterations: usize,
    /// Least-squares residual estimates: the initial residual of every cycle
    /// followed by one entry per Arnoldi step.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub final_true_residual: f64,
}

pub fn gmres(
    a: &dyn LinearOperator,
    precond: Option<&dyn LinearOperator>,
    b: &[f64],
    x0: Option<&[f64]>,
    params: &GmresParams,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::dims("gmres", n, b.len()));
    }
    if let Some(m) = precond {
        if m.dim() != n {
            return Err(Error::dims("gmres preconditioner", n, m.dim()));
        }
    }
    if let Some(x0) = x0 {
        if x0.len() != n {
            return Err(Error::dims("gmres x0", n, x0.len()));
        }
    }
    if !(params.rtol > 0.0) || params.restart == 0 {
        return Err(Error::InvalidInput(
            "gmres needs rtol > 0 and restart >= 1".into(),
        ));
    }

    let mut report = SolveReport::default();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        report.converged = true;
        report.residual_history.push(0.0);
        return Ok((vec![0.0; n], report));
    }
    let target = params.rtol * b_norm;

    let m = params.restart;
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    // Hessenberg columns, each of length m + 1.
    let mut h = vec![vec![0.0; m + 1]; m];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];

    loop {
        a.apply(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm2(&r);
        report.final_true_residual = beta;
        if beta <= target {
            report.converged = true;
            break;
        }
        if report.iterations >= params.maxit {
            break;
        }

        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = beta;
        report.residual_history.push(beta);

        let mut k = 0;
        while k < m && report.iterations < params.maxit {
            match precond {
                Some(pc) => {
                    pc.apply(&basis[k], &mut z);
                    a.apply(&z, &mut w);
                }
                None => a.apply(&basis[k], &mut w),
            }
            let w_norm_before = norm2(&w);
            let col = &mut h[k];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                col[i] = hij;
                axpy(-hij, v, &mut w);
            }
            let h_next = norm2(&w);
            col[k + 1] = h_next;

            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[k].hypot(col[k + 1]);
            if denom == 0.0 {
                // A M⁻¹ annihilated the Krylov vector; nothing more to gain.
                break;
            }
            cs[k] = col[k] / denom;
            sn[k] = col[k + 1] / denom;
            col[k] = denom;
            col[k + 1] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];

            report.iterations += 1;
            k += 1;
            let estimate = g[k].abs();
            report.residual_history.push(estimate);

            let happy = h_next <= f64::EPSILON * w_norm_before;
            if happy || estimate <= target {
                break;
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }

        if k == 0 {
            break;
        }
        // Back substitution for y, then u = V y.
        let mut y = g[..k].to_vec();
        for i in (0..k).rev() {
            for j in i + 1..k {
                y[i] -= h[j][i] * y[j];
            }
            y[i] /= h[i][i];
        }
        let mut u = vec![0.0; n];
        for (yj, v) in y.iter().zip(&basis) {
            axpy(*yj, v, &mut u);
        }
        match precond {
            Some(pc) => {
                pc.apply(&u, &mut z);
                axpy(1.0, &z, &mut x);
            }
            None => axpy(1.0, &u, &mut x),
        }
    }
    Ok((x, report))
}
