//! Generalized eigensolvers for `A Φ = (1/k) B Φ`: inverse power iteration
//! and a Jacobian-free Newton-Krylov accelerator on
//! `F(Φ) = A Φ − B Φ / ‖B Φ‖`.

use crate::error::{Error, Result};
use crate::krylov::{gmres, GmresParams, SolveReport};
use crate::operator::{FnOperator, LinearOperator};
use crate::sparse::{axpy, norm2, DenseVector};

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub phi: DenseVector,
    pub k: f64,
}

impl EigenPair {
    /// Flips the sign so the first numerically nonzero entry of `phi`
    /// (magnitude above `√ε · max|φ|`) is positive.
    fn from_raw(mut phi: Vec<f64>, k: f64) -> Result<Self> {
        let cutoff = f64::EPSILON.sqrt() * phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(first) = phi.iter().find(|v| v.abs() > cutoff) {
            if *first < 0.0 {
                phi.iter_mut().for_each(|v| *v = -*v);
            }
        }
        Ok(Self {
            phi: DenseVector::new(phi)?,
            k,
        })
    }
}

/// Linear solves `A x = b` by right-preconditioned GMRES, counting work.
pub struct KrylovSolver<'a> {
    pub operator: &'a dyn LinearOperator,
    pub preconditioner: Option<&'a dyn LinearOperator>,
    pub params: GmresParams,
    stats: std::cell::Cell<(usize, usize)>,
}

impl<'a> KrylovSolver<'a> {
    pub fn new(
        operator: &'a dyn LinearOperator,
        preconditioner: Option<&'a dyn LinearOperator>,
        params: GmresParams,
    ) -> Self {
        Self {
            operator,
            preconditioner,
            params,
            stats: Default::default(),
        }
    }

    pub fn solve(&self, b: &[f64], x0: Option<&[f64]>) -> Result<(Vec<f64>, SolveReport)> {
        let (x, report) = gmres(self.operator, self.preconditioner, b, x0, &self.params)?;
        let (s, i) = self.stats.get();
        self.stats.set((s + 1, i + report.iterations));
        Ok((x, report))
    }

    /// `(solves, total GMRES iterations)`.
    pub fn stats(&self) -> (usize, usize) {
        self.stats.get()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PowerReport {
    pub iterations: usize,
    pub k_history: Vec<f64>,
    pub converged: bool,
}

/// Inverse power iteration: `A Φₙ₊₁ = B Φₙ`, `kₙ₊₁ = ‖B Φₙ₊₁‖`, then the
/// fission source is rescaled by `1/kₙ₊₁`. Stops after `iters` steps or when
/// `|kₙ₊₁ − kₙ| ≤ tol · kₙ₊₁`.
pub fn inverse_power<S>(
    mut solve_a: S,
    apply_b: &dyn LinearOperator,
    phi0: &[f64],
    iters: usize,
    tol: f64,
) -> Result<(EigenPair, PowerReport)>
where
    S: FnMut(&[f64], &[f64]) -> Result<Vec<f64>>,
{
    if phi0.len() != apply_b.dim() {
        return Err(Error::dims("inverse_power", apply_b.dim(), phi0.len()));
    }
    let mut phi = phi0.to_vec();
    let mut source = apply_b.apply_vec(&phi);
    let mut k = norm2(&source);
    if k == 0.0 {
        return Err(Error::DegenerateFission);
    }
    source.iter_mut().for_each(|v| *v /= k);
    let mut report = PowerReport {
        k_history: vec![k],
        ..Default::default()
    };
    for _ in 0..iters {
        phi = solve_a(&source, &phi)?;
        source = apply_b.apply_vec(&phi);
        let k_new = norm2(&source);
        if k_new == 0.0 || !k_new.is_finite() {
            return Err(Error::DegenerateFission);
        }
        source.iter_mut().for_each(|v| *v /= k_new);
        report.iterations += 1;
        report.k_history.push(k_new);
        let done = (k_new - k).abs() <= tol * k_new;
        k = k_new;
        if done {
            report.converged = true;
            break;
        }
    }
    Ok((EigenPair::from_raw(phi, k)?, report))
}

/// `F(Φ) = A Φ − B Φ / ‖B Φ‖`.
pub fn newton_residual(phi: &[f64], apply_a: &dyn LinearOperator, apply_b: &dyn LinearOperator) -> Result<Vec<f64>> {
    if phi.len() != apply_a.dim() || phi.len() != apply_b.dim() {
        return Err(Error::dims("newton_residual", apply_a.dim(), phi.len()));
    }
    let mut f = apply_a.apply_vec(phi);
    let bphi = apply_b.apply_vec(phi);
    let nb = norm2(&bphi);
    if nb == 0.0 {
        return Err(Error::DegenerateFission);
    }
    axpy(-1.0 / nb, &bphi, &mut f);
    Ok(f)
}

/// Finite-difference step `β = √ε · √(1 + ‖Φ‖) / ‖v‖`.
pub fn fd_step(phi: &[f64], v: &[f64]) -> f64 {
    let nv = norm2(v);
    if nv == 0.0 {
        return 0.0;
    }
    f64::EPSILON.sqrt() * (1.0 + norm2(phi)).sqrt() / nv
}

/// Matrix-free Jacobian action `(F(Φ + βv) − F(Φ)) / β`.
pub fn jacobian_action(
    phi: &[f64],
    f_phi: &[f64],
    v: &[f64],
    apply_a: &dyn LinearOperator,
    apply_b: &dyn LinearOperator,
) -> Result<Vec<f64>> {
    let beta = fd_step(phi, v);
    if beta == 0.0 {
        return Ok(vec![0.0; v.len()]);
    }
    let shifted: Vec<f64> = phi.iter().zip(v).map(|(p, vi)| p + beta * vi).collect();
    let mut out = newton_residual(&shifted, apply_a, apply_b)?;
    for (o, f) in out.iter_mut().zip(f_phi) {
        *o = (*o - f) / beta;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JfnkParams {
    pub init_power_iters: usize,
    pub newton_tol: f64,
    pub linear_rtol: f64,
    pub max_newton: usize,
    pub restart: usize,
    pub linear_maxit: usize,
    pub armijo: f64,
    pub max_halvings: usize,
}

impl Default for JfnkParams {
    fn default() -> Self {
        Self {
            init_power_iters: 2,
            newton_tol: 1e-3,
            linear_rtol: 1e-2,
            max_newton: 50,
            restart: 30,
            linear_maxit: 300,
            armijo: 1e-4,
            max_halvings: 8,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct JfnkReport {
    pub power: PowerReport,
    pub newton_iterations: usize,
    /// `‖F(Φₙ)‖` for every accepted iterate, starting with the initial guess.
    pub residual_norms: Vec<f64>,
    pub linear_solves: usize,
    pub linear_iterations: usize,
    pub converged: bool,
}

impl JfnkReport {
    /// Inverse power steps plus Newton steps.
    pub fn outer_iterations(&self) -> usize {
        self.power.iterations + self.newton_iterations
    }
}

/// Newton-accelerated eigensolve. A few inverse power iterations supply the
/// initial guess; each Newton step solves `J ΔΦ = −F` with GMRES using the
/// finite-difference Jacobian and `precond`, followed by a backtracking line
/// search on `‖F‖₂`.
pub fn jfnk_eigen(
    apply_a: &dyn LinearOperator,
    apply_b: &dyn LinearOperator,
    precond: Option<&dyn LinearOperator>,
    phi0: &[f64],
    params: &JfnkParams,
) -> Result<(EigenPair, JfnkReport)> {
    let n = apply_a.dim();
    if apply_b.dim() != n || phi0.len() != n {
        return Err(Error::dims("jfnk_eigen", n, phi0.len()));
    }
    let gmres_params = GmresParams::new(params.linear_rtol, params.restart).with_maxit(params.linear_maxit);
    let solver = KrylovSolver::new(apply_a, precond, gmres_params);
    let (start, power) = inverse_power(
        |b, x| solver.solve(b, Some(x)).map(|(x, _)| x),
        apply_b,
        phi0,
        params.init_power_iters,
        0.0,
    )?;
    let (mut linear_solves, mut linear_iterations) = solver.stats();

    let mut phi = start.phi.into_inner();
    let mut f = newton_residual(&phi, apply_a, apply_b)?;
    let mut f_norm = norm2(&f);
    let f0 = f_norm;
    let mut report = JfnkReport {
        power,
        residual_norms: vec![f_norm],
        ..Default::default()
    };

    loop {
        let floor = roundoff_floor(&phi, apply_a);
        if f_norm <= params.newton_tol * f0 || f_norm <= floor {
            report.converged = true;
            break;
        }
        if report.newton_iterations >= params.max_newton {
            break;
        }
        let jac = FnOperator::new(n, |v: &[f64], out: &mut [f64]| {
            let jv = jacobian_action(&phi, &f, v, apply_a, apply_b).expect("fission source vanished in Jacobian action");
            out.copy_from_slice(&jv);
        });
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let (step, lin) = gmres(&jac, precond, &rhs, None, &gmres_params)?;
        linear_solves += 1;
        linear_iterations += lin.iterations;

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=params.max_halvings {
            let trial: Vec<f64> = phi.iter().zip(&step).map(|(p, s)| p + alpha * s).collect();
            if let Ok(f_trial) = newton_residual(&trial, apply_a, apply_b) {
                let nt = norm2(&f_trial);
                if nt.is_finite() && nt <= (1.0 - params.armijo * alpha) * f_norm {
                    accepted = Some((trial, f_trial, nt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        report.newton_iterations += 1;
        match accepted {
            Some((p, fp, nf)) => {
                phi = p;
                f = fp;
                f_norm = nf;
                report.residual_norms.push(nf);
            }
            None => {
                let k = norm2(&apply_b.apply_vec(&phi));
                return Err(Error::Stagnation {
                    best: Box::new(EigenPair::from_raw(phi, k)?),
                    residual: f_norm,
                    newton_iterations: report.newton_iterations,
                });
            }
        }
    }
    report.linear_solves = linear_solves;
    report.linear_iterations = linear_iterations;
    let k = norm2(&apply_b.apply_vec(&phi));
    Ok((EigenPair::from_raw(phi, k)?, report))
}

/// Residual level below which `F` is indistinguishable from rounding noise.
fn roundoff_floor(phi: &[f64], apply_a: &dyn LinearOperator) -> f64 {
    let scale = norm2(&apply_a.apply_vec(phi));
    16.0 * f64::EPSILON * (phi.len() as f64).sqrt() * scale
}
