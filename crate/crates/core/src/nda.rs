//! Nonlinear diffusion acceleration: transport fixed-source solves
//! alternate with closed low-order diffusion eigensolves until the scalar
//! flux stops changing.

use std::str::FromStr;
use std::time::Instant;

use crate::discretization::{
    assemble_closed_diffusion_operators, assemble_diffusion_operators, assemble_diffusion_preconditioner,
    assemble_transport_operator, face_coefficient, face_currents, face_psi, group_count, scalar_flux, tau,
    transport_source, vacuum_coefficient, AngularQuadrature, Boundary, CrossSections, SlabMesh,
    TransportEigenProblem, TransportOperator,
};
use crate::eigen::{jfnk_eigen, EigenPair, JfnkParams, JfnkReport};
use crate::error::{Error, Result};
use crate::krylov::{gmres, GmresParams, SolveReport};
use crate::multilevel::{MultilevelParams, Preconditioner, PreconditionerKind};
use crate::operator::LinearOperator;
use crate::sparse::{norm2, DenseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClosureMode {
    /// Face drift coefficients fitted to the transport face currents.
    #[default]
    Drift,
    /// Functional closure: `D̃` drift term on faces and a `1/4 + γ` Robin
    /// boundary.
    SaafFunctional,
}

impl FromStr for ClosureMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "drift" => Ok(Self::Drift),
            "saaf_functional" => Ok(Self::SaafFunctional),
            other => Err(format!("unknown closure mode `{other}` (drift|saaf_functional)")),
        }
    }
}

/// Closure terms on all `n_cells + 1` faces (face `f` separates cells `f−1`
/// and `f`), indexed `[face][g]`.
///
/// The low-order face current is `J = −d_f (φ_R − φ_L) − dhat (φ_L + φ_R)`.
/// On a vacuum boundary in drift mode the outgoing current is
/// `(κ + dhat) φ_c`, `κ` the plain vacuum coefficient; in functional mode it
/// follows from the Robin condition with `1/4 + γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureCoefficients {
    pub mode: ClosureMode,
    pub dhat: Vec<Vec<f64>>,
    /// `[side][g]`, side 0 = left.
    pub gamma: [Vec<f64>; 2],
    /// Face values of `D̃`; filled in functional mode only.
    pub dtilde: Vec<Vec<f64>>,
}

impl ClosureCoefficients {
    pub fn zero(n_cells: usize, groups: usize, mode: ClosureMode) -> Self {
        Self {
            mode,
            dhat: vec![vec![0.0; groups]; n_cells + 1],
            gamma: [vec![0.0; groups], vec![0.0; groups]],
            dtilde: vec![vec![0.0; groups]; n_cells + 1],
        }
    }

    pub(crate) fn check_shape(&self, n_cells: usize, groups: usize) -> Result<()> {
        let faces_ok = |v: &Vec<Vec<f64>>| v.len() == n_cells + 1 && v.iter().all(|r| r.len() == groups);
        if !faces_ok(&self.dhat) || !faces_ok(&self.dtilde) || self.gamma.iter().any(|g| g.len() != groups) {
            return Err(Error::InvalidInput(format!(
                "closure shape does not match {n_cells} cells and {groups} groups"
            )));
        }
        let all = self.dhat.iter().chain(&self.dtilde).flatten().chain(self.gamma.iter().flatten());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("closure coefficients must be finite".into()));
        }
        Ok(())
    }
}

/// Stabilization constants used by the functional closure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauParams {
    pub c: f64,
    pub varsigma: f64,
}

impl Default for TauParams {
    fn default() -> Self {
        Self { c: 1.0, varsigma: 0.5 }
    }
}

/// Solves `(L + R) Ψ = q(Φ, k)` by preconditioned GMRES.
#[allow(clippy::too_many_arguments)]
pub fn solve_transport_fixed_source(
    phi: &[f64],
    k: f64,
    mesh: &SlabMesh,
    xs: &[CrossSections],
    quad: &AngularQuadrature,
    operator: &TransportOperator,
    precond: Option<&dyn LinearOperator>,
    params: &GmresParams,
    psi0: Option<&[f64]>,
) -> Result<(DenseVector, SolveReport)> {
    let rhs = transport_source(phi, k, mesh, xs, quad)?;
    let (psi, report) = gmres(operator, precond, &rhs, psi0, params)?;
    if !report.converged {
        return Err(Error::SolverFailure {
            context: "transport fixed-source solve".into(),
            report: Box::new(report),
        });
    }
    Ok((DenseVector::new(psi)?, report))
}

pub fn compute_closure(
    psi: &[f64],
    phi_ho: &[f64],
    mesh: &SlabMesh,
    xs: &[CrossSections],
    quad: &AngularQuadrature,
    mode: ClosureMode,
    tau_params: TauParams,
) -> Result<ClosureCoefficients> {
    let groups = group_count(mesh, xs)?;
    let nc = mesh.n_cells();
    if phi_ho.len() != groups * nc {
        return Err(Error::dims("compute_closure", groups * nc, phi_ho.len()));
    }
    let j_face = face_currents(psi, mesh, quad, groups)?;
    let mut cl = ClosureCoefficients::zero(nc, groups, mode);
    let phi = |g: usize, c: usize| phi_ho[g * nc + c];

    for g in 0..groups {
        for side in 0..2 {
            cl.gamma[side][g] = boundary_gamma(psi, mesh, quad, g, side)?;
        }
        match mode {
            ClosureMode::Drift => {
                for f in 1..nc {
                    let (l, r) = (f - 1, f);
                    let df = face_coefficient(
                        xs[mesh.material(l)].diffusion(g),
                        mesh.width(l),
                        xs[mesh.material(r)].diffusion(g),
                        mesh.width(r),
                    );
                    let sum = phi(g, l) + phi(g, r);
                    if sum == 0.0 {
                        return Err(Error::DegenerateFlux { face: f, group: g });
                    }
                    cl.dhat[f][g] = -(j_face[f][g] + df * (phi(g, r) - phi(g, l))) / sum;
                }
                for (side, face, cell, bc) in [(0, 0, 0, mesh.bc_left()), (1, nc, nc - 1, mesh.bc_right())] {
                    if bc == Boundary::Reflective {
                        continue;
                    }
                    if phi(g, cell) == 0.0 {
                        return Err(Error::DegenerateFlux { face, group: g });
                    }
                    let outward = if side == 0 { -j_face[face][g] } else { j_face[face][g] };
                    let kappa = vacuum_coefficient(xs[mesh.material(cell)].diffusion(g), mesh.width(cell));
                    cl.dhat[face][g] = outward / phi(g, cell) - kappa;
                }
            }
            ClosureMode::SaafFunctional => {
                for f in 1..nc {
                    let dt = face_dtilde(psi, mesh, xs, quad, g, f, tau_params)?;
                    cl.dtilde[f][g] = dt;
                    cl.dhat[f][g] = 0.5 * dt;
                }
            }
        }
    }
    Ok(cl)
}

/// `Σ_{outgoing} w |μ| Ψ / Σ w Ψ − 1/4` on boundary `side` (0 = left).
fn boundary_gamma(psi: &[f64], mesh: &SlabMesh, quad: &AngularQuadrature, g: usize, side: usize) -> Result<f64> {
    let face = if side == 0 { 0 } else { mesh.n_cells() };
    let (mut out, mut total) = (0.0, 0.0);
    for n in 0..quad.n_dirs() {
        let mu = quad.mu()[n];
        let v = quad.weights()[n] * face_psi(psi, mesh, quad, g, n, face);
        total += v;
        if (side == 0 && mu < 0.0) || (side == 1 && mu > 0.0) {
            out += mu.abs() * v;
        }
    }
    if total == 0.0 {
        return Err(Error::DegenerateFlux { face, group: g });
    }
    Ok(out / total - 0.25)
}

/// Slab form of the functional drift coefficient at interior face `f`, with
/// face data averaged from the two neighbouring cells.
fn face_dtilde(
    psi: &[f64],
    mesh: &SlabMesh,
    xs: &[CrossSections],
    quad: &AngularQuadrature,
    g: usize,
    f: usize,
    tp: TauParams,
) -> Result<f64> {
    let nc = mesh.n_cells();
    let nd = quad.n_dirs();
    let groups = xs[0].groups();
    let (l, r) = (f - 1, f);
    let (ml, mr) = (&xs[mesh.material(l)], &xs[mesh.material(r)]);
    let hf = 0.5 * (mesh.width(l) + mesh.width(r));
    let st = 0.5 * (ml.sigma_t(g) + mr.sigma_t(g));
    let d = 0.5 * (ml.diffusion(g) + mr.diffusion(g));
    let t = tau(st, hf, tp.c, tp.varsigma)?;
    let at = |gg: usize, n: usize, c: usize| psi[(gg * nd + n) * nc + c];
    let (mut num, mut den) = (0.0, 0.0);
    for n in 0..nd {
        let (mu, w) = (quad.mu()[n], quad.weights()[n]);
        let grad = (at(g, n, r) - at(g, n, l)) / hf;
        let avg = 0.5 * (at(g, n, l) + at(g, n, r));
        let s1: f64 = (0..groups)
            .map(|gp| 0.5 * (ml.sigma_s1(gp, g) + mr.sigma_s1(gp, g)) * 0.5 * (at(gp, n, l) + at(gp, n, r)))
            .sum();
        num += w * (t * mu * mu * grad + (t * st - 1.0) * mu * avg - t * mu * s1 - d * grad);
        den += w * avg;
    }
    if den == 0.0 {
        return Err(Error::DegenerateFlux { face: f, group: g });
    }
    Ok(num / den)
}

/// Diffusion eigensolver settings shared by the plain and closed solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionSolverParams {
    pub jfnk: JfnkParams,
    pub preconditioner: PreconditionerKind,
    pub multilevel: MultilevelParams,
}

impl Default for DiffusionSolverParams {
    fn default() -> Self {
        Self {
            jfnk: JfnkParams::default(),
            preconditioner: PreconditionerKind::Sgmasm,
            multilevel: MultilevelParams::default(),
        }
    }
}

/// Preconditioner build figures.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SetupStats {
    pub rows_split: usize,
    pub nnz_processed: usize,
    pub storage_bytes: usize,
    pub complexity: f64,
    pub seconds: f64,
}

impl SetupStats {
    fn of(pc: &Preconditioner, seconds: f64) -> Self {
        let w = pc.setup_work();
        Self {
            rows_split: w.rows_split,
            nnz_processed: w.nnz_processed,
            storage_bytes: pc.storage_bytes(),
            complexity: pc.operator_complexity(),
            seconds,
        }
    }
}

/// JFNK on the (optionally closed) diffusion eigenproblem, preconditioned
/// by the energy-decoupled diffusion matrix.
pub fn solve_closed_diffusion_eigen(
    closure: Option<&ClosureCoefficients>,
    mesh: &SlabMesh,
    xs: &[CrossSections],
    params: &DiffusionSolverParams,
    phi0: Option<&[f64]>,
) -> Result<(EigenPair, JfnkReport, SetupStats)> {
    let ops = match closure {
        Some(cl) => assemble_closed_diffusion_operators(mesh, xs, cl)?,
        None => assemble_diffusion_operators(mesh, xs)?,
    };
    let t0 = Instant::now();
    let m = assemble_diffusion_preconditioner(mesh, xs, closure)?;
    let pc = Preconditioner::build(params.preconditioner, &m, &params.multilevel)?;
    let setup = SetupStats::of(&pc, t0.elapsed().as_secs_f64());
    let ones;
    let start = match phi0 {
        Some(p) => p,
        None => {
            ones = vec![1.0; ops.a.n_rows()];
            &ones
        }
    };
    let (pair, report) = jfnk_eigen(&ops.a, &ops.b, Some(&pc), start, &params.jfnk)?;
    Ok((pair, report, setup))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdaParams {
    pub max_nda: usize,
    pub tol: f64,
    pub closure_mode: ClosureMode,
    pub tau: TauParams,
    pub diffusion: DiffusionSolverParams,
    pub transport_preconditioner: PreconditionerKind,
    pub transport_multilevel: MultilevelParams,
    pub transport_gmres: GmresParams,
}

impl Default for NdaParams {
    fn default() -> Self {
        Self {
            max_nda: 50,
            tol: 1e-6,
            closure_mode: ClosureMode::Drift,
            tau: TauParams::default(),
            diffusion: DiffusionSolverParams::default(),
            transport_preconditioner: PreconditionerKind::Sgmasm,
            transport_multilevel: MultilevelParams::default(),
            transport_gmres: GmresParams::new(1e-5, 30),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NdaReport {
    pub picard_iterations: usize,
    pub eps_history: Vec<f64>,
    pub k_history: Vec<f64>,
    /// Transport GMRES iterations per Picard iteration.
    pub its_sweep: Vec<usize>,
    /// Newton steps per closed diffusion solve.
    pub its_newton: Vec<usize>,
    /// Diffusion GMRES iterations per closed diffusion solve.
    pub its_linear: Vec<usize>,
    /// Diffusion linear solves (power and Newton) per closed diffusion solve.
    pub linear_solves: Vec<usize>,
    pub initial_diffusion: JfnkReport,
    pub eigen: EigenPair,
    pub psi: Option<DenseVector>,
    pub closure: ClosureCoefficients,
    pub transport_setup: SetupStats,
    pub diffusion_setup: SetupStats,
    pub transport_seconds: f64,
    pub diffusion_seconds: f64,
    pub converged: bool,
}

/// NDA from a flat initial flux.
pub fn nda_solve(
    mesh: &SlabMesh,
    xs: &[CrossSections],
    quad: &AngularQuadrature,
    params: &NdaParams,
) -> std::result::Result<NdaReport, NdaError> {
    let groups = group_count(mesh, xs).map_err(NdaError::setup)?;
    nda_solve_from(mesh, xs, quad, params, &vec![1.0; groups * mesh.n_cells()])
}

/// Failure inside the Picard loop together with what was computed so far.
#[derive(Debug, thiserror::Error)]
#[error("nonlinear diffusion acceleration failed: {source}")]
pub struct NdaError {
    #[source]
    pub source: Error,
    pub partial: Option<Box<NdaReport>>,
}

impl NdaError {
    fn setup(source: Error) -> Self {
        Self { source, partial: None }
    }
}

pub fn nda_solve_from(
    mesh: &SlabMesh,
    xs: &[CrossSections],
    quad: &AngularQuadrature,
    params: &NdaParams,
    phi0: &[f64],
) -> std::result::Result<NdaReport, NdaError> {
    let groups = group_count(mesh, xs).map_err(NdaError::setup)?;
    let nc = mesh.n_cells();
    let t_diff = Instant::now();
    let (mut eigen, initial, diffusion_setup) =
        solve_closed_diffusion_eigen(None, mesh, xs, &params.diffusion, Some(phi0)).map_err(NdaError::setup)?;
    let mut diffusion_seconds = t_diff.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let operator = assemble_transport_operator(mesh, xs, quad).map_err(NdaError::setup)?;
    let pc = Preconditioner::build(
        params.transport_preconditioner,
        operator.block_diagonal(),
        &params.transport_multilevel,
    )
    .map_err(NdaError::setup)?;
    let transport_setup = SetupStats::of(&pc, t0.elapsed().as_secs_f64());

    let mut report = NdaReport {
        picard_iterations: 0,
        eps_history: Vec::new(),
        k_history: vec![eigen.k],
        its_sweep: Vec::new(),
        its_newton: Vec::new(),
        its_linear: Vec::new(),
        linear_solves: Vec::new(),
        initial_diffusion: initial,
        eigen: eigen.clone(),
        psi: None,
        closure: ClosureCoefficients::zero(nc, groups, params.closure_mode),
        transport_setup,
        diffusion_setup,
        transport_seconds: 0.0,
        diffusion_seconds,
        converged: false,
    };
    let fail = |source: Error, report: &NdaReport| NdaError {
        source,
        partial: Some(Box::new(report.clone())),
    };

    let mut psi_prev: Option<Vec<f64>> = None;
    while report.picard_iterations < params.max_nda {
        let t_tr = Instant::now();
        let (psi, tr) = match solve_transport_fixed_source(
            &eigen.phi,
            eigen.k,
            mesh,
            xs,
            quad,
            &operator,
            Some(&pc),
            &params.transport_gmres,
            psi_prev.as_deref(),
        ) {
            Ok(v) => v,
            Err(e) => return Err(fail(e, &report)),
        };
        report.transport_seconds += t_tr.elapsed().as_secs_f64();
        report.its_sweep.push(tr.iterations);

        let t_d = Instant::now();
        let step = scalar_flux(&psi, quad, groups, nc)
            .and_then(|phi_ho| compute_closure(&psi, &phi_ho, mesh, xs, quad, params.closure_mode, params.tau))
            .and_then(|cl| {
                let out = solve_closed_diffusion_eigen(Some(&cl), mesh, xs, &params.diffusion, Some(&eigen.phi))?;
                Ok((cl, out))
            });
        let (closure, (next, jr, setup)) = match step {
            Ok(v) => v,
            Err(e) => {
                report.psi = Some(psi);
                return Err(fail(e, &report));
            }
        };
        diffusion_seconds += t_d.elapsed().as_secs_f64();
        report.diffusion_seconds = diffusion_seconds;
        report.diffusion_setup = setup;
        report.its_newton.push(jr.newton_iterations);
        report.its_linear.push(jr.linear_iterations);
        report.linear_solves.push(jr.linear_solves);

        let diff: Vec<f64> = next.phi.iter().zip(eigen.phi.iter()).map(|(a, b)| a - b).collect();
        let eps = norm2(&diff) / norm2(&next.phi);
        report.picard_iterations += 1;
        report.eps_history.push(eps);
        report.k_history.push(next.k);
        report.closure = closure;
        psi_prev = Some(psi.as_slice().to_vec());
        report.psi = Some(psi);
        eigen = next;
        report.eigen = eigen.clone();
        if eps <= params.tol {
            report.converged = true;
            break;
        }
    }
    Ok(report)
}

/// Settings of the unaccelerated angular-flux eigensolve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportEigenParams {
    pub jfnk: JfnkParams,
    pub preconditioner: PreconditionerKind,
    pub multilevel: MultilevelParams,
}

impl Default for TransportEigenParams {
    fn default() -> Self {
        Self {
            jfnk: JfnkParams::default(),
            preconditioner: PreconditionerKind::Sgmasm,
            multilevel: MultilevelParams::default(),
        }
    }
}

/// JFNK directly on `(L + R − S) Ψ = (1/k) F Ψ`, preconditioned by the
/// block-diagonal streaming operator. Returns the angular eigenpair.
pub fn transport_eigen_solve(
    mesh: &SlabMesh,
    xs: &[CrossSections],
    quad: &AngularQuadrature,
    params: &TransportEigenParams,
) -> Result<(EigenPair, JfnkReport, SetupStats)> {
    let problem = TransportEigenProblem::new(mesh, xs, quad)?;
    let t0 = Instant::now();
    let pc = Preconditioner::build(params.preconditioner, problem.operator().block_diagonal(), &params.multilevel)?;
    let setup = SetupStats::of(&pc, t0.elapsed().as_secs_f64());
    let start = vec![1.0; problem.operator().dim()];
    let (pair, report) = jfnk_eigen(&problem.loss(), &problem.fission(), Some(&pc), &start, &params.jfnk)?;
    Ok((pair, report, setup))
}
