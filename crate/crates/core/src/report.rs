//! Run orchestration and result files.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use crate::config::{ProblemConfig, RunConfig, SolverConfig};
use crate::dense::DenseLu;
use crate::discretization::{
    assemble_diffusion_operators, assemble_transport_operator, scalar_flux, transport_source,
};
use crate::eigen::JfnkReport;
use crate::error::{Error, Result};
use crate::krylov::gmres;
use crate::multilevel::{MultilevelHierarchy, Preconditioner};
use crate::nda::{nda_solve, solve_closed_diffusion_eigen, transport_eigen_solve, NdaReport, SetupStats};
use crate::schwarz::RasPreconditioner;
use crate::sparse::{SparseMatrix, VALUE_BYTES};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Nda,
    TransportEigen,
    DiffusionEigen,
    /// One transport fixed-source solve with flat flux and `k = 1`.
    Bench,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "nda" => Ok(Self::Nda),
            "transport-eigen" => Ok(Self::TransportEigen),
            "diffusion-eigen" => Ok(Self::DiffusionEigen),
            "bench" => Ok(Self::Bench),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Nda => "nda",
            Self::TransportEigen => "transport-eigen",
            Self::DiffusionEigen => "diffusion-eigen",
            Self::Bench => "bench",
        })
    }
}

pub const METRICS_HEADER: &str =
    "np,delta,theta,agg,mem_bytes,its_newton,its_linear,its_sweep,comp,setup_nnz,time_setup,time_apply,time_total";

/// One row of `metrics.csv`.
///
/// `its_newton` is the total Newton step count, `its_linear` the mean GMRES
/// iterations per diffusion (or angular, in transport-eigen mode) linear
/// solve, `its_sweep` the mean transport GMRES iterations per fixed-source
/// solve. `apply_count` counts Krylov steps, one preconditioner application
/// each; it is not written to the CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsRow {
    pub np: usize,
    pub delta: usize,
    pub theta: f64,
    pub agg: usize,
    pub mem_bytes: usize,
    pub its_newton: usize,
    pub its_linear: f64,
    pub its_sweep: f64,
    pub comp: f64,
    pub setup_nnz: usize,
    pub apply_count: usize,
    pub time_setup: f64,
    pub time_apply: f64,
    pub time_total: f64,
}

impl MetricsRow {
    fn for_solver(s: &SolverConfig) -> Self {
        Self {
            np: s.np1 * s.np2,
            delta: s.delta,
            theta: s.theta,
            agg: s.agg,
            comp: 1.0,
            ..Self::default()
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.4},{:.4},{:.6},{},{:.6},{:.6},{:.6}",
            self.np,
            self.delta,
            self.theta,
            self.agg,
            self.mem_bytes,
            self.its_newton,
            self.its_linear,
            self.its_sweep,
            self.comp,
            self.setup_nnz,
            self.time_setup,
            self.time_apply,
            self.time_total
        )
    }
}

/// Anything with a deterministic byte footprint.
pub trait Storage {
    fn storage_bytes(&self) -> usize;
}

impl Storage for SparseMatrix {
    fn storage_bytes(&self) -> usize {
        SparseMatrix::storage_bytes(self)
    }
}

impl Storage for MultilevelHierarchy {
    fn storage_bytes(&self) -> usize {
        MultilevelHierarchy::storage_bytes(self)
    }
}

impl Storage for Preconditioner {
    fn storage_bytes(&self) -> usize {
        Preconditioner::storage_bytes(self)
    }
}

impl Storage for RasPreconditioner {
    fn storage_bytes(&self) -> usize {
        RasPreconditioner::storage_bytes(self)
    }
}

impl Storage for DenseLu {
    fn storage_bytes(&self) -> usize {
        DenseLu::storage_bytes(self)
    }
}

/// `Σ stored bytes + 8 · vector_entries`. A sparse matrix stores
/// `nnz · (8 + 4) + (n_rows + 1) · 8` bytes; hierarchies add up their level
/// operators, interpolations, subdomain matrices and coarsest factorization.
pub fn estimate_memory(objects: &[&dyn Storage], vector_entries: usize) -> usize {
    objects.iter().map(|o| o.storage_bytes()).sum::<usize>() + vector_entries * VALUE_BYTES
}

/// Result of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub metrics: MetricsRow,
    pub k: Option<f64>,
    /// Scalar flux, `g·n_cells + c`.
    pub phi: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{source}")]
    Solver {
        #[source]
        source: Error,
        /// Completed rows followed by a partial row for the failed run.
        metrics: Vec<MetricsRow>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn mean(total: usize, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        total as f64 / count as f64
    }
}

fn vector_entries(problem: &ProblemConfig, s: &SolverConfig, angular: bool) -> usize {
    let scalar = problem.groups * problem.mesh.n_cells();
    let psi = scalar * problem.quadrature.n_dirs();
    // Krylov basis plus work vectors of the largest system, flux iterates
    let system = if angular { psi } else { scalar };
    (s.restart + 4) * system + 4 * scalar + if angular { 2 * psi } else { 0 }
}

fn nda_metrics(row: &mut MetricsRow, rep: &NdaReport) {
    let newton: usize = rep.its_newton.iter().sum::<usize>() + rep.initial_diffusion.newton_iterations;
    let lin: usize = rep.its_linear.iter().sum::<usize>() + rep.initial_diffusion.linear_iterations;
    let sweeps: usize = rep.its_sweep.iter().sum();
    let solves = rep.initial_diffusion.linear_solves + rep.linear_solves.iter().sum::<usize>();
    row.its_newton = newton;
    row.its_linear = mean(lin, solves);
    row.its_sweep = mean(sweeps, rep.its_sweep.len());
    row.comp = rep.transport_setup.complexity;
    row.setup_nnz = rep.transport_setup.nnz_processed;
    row.apply_count = lin + sweeps;
    row.time_setup = rep.transport_setup.seconds + rep.diffusion_setup.seconds;
    row.time_apply = rep.transport_seconds + rep.diffusion_seconds;
}

fn jfnk_metrics(row: &mut MetricsRow, rep: &JfnkReport, setup: &SetupStats) {
    row.its_newton = rep.newton_iterations;
    row.its_linear = mean(rep.linear_iterations, rep.linear_solves);
    row.comp = setup.complexity;
    row.setup_nnz = setup.nnz_processed;
    row.apply_count = rep.linear_iterations;
    row.time_setup = setup.seconds;
}

/// Runs one sweep point.
pub fn run_single(problem: &ProblemConfig, s: &SolverConfig, mode: Mode) -> std::result::Result<RunOutcome, (Error, MetricsRow)> {
    let t0 = Instant::now();
    let mut row = MetricsRow::for_solver(s);
    let (mesh, xs, quad) = (&problem.mesh, &problem.xs[..], &problem.quadrature);
    let groups = problem.groups;
    let nc = mesh.n_cells();
    let fail = |e: Error, row: &MetricsRow| (e, row.clone());

    let diffusion_ops = assemble_diffusion_operators(mesh, xs).map_err(|e| fail(e, &row))?;
    let transport_op = assemble_transport_operator(mesh, xs, quad).map_err(|e| fail(e, &row))?;
    let diffusion_store: [&dyn Storage; 2] = [&diffusion_ops.a, &diffusion_ops.b];
    let base_scalar = estimate_memory(&diffusion_store, vector_entries(problem, s, false));
    let transport_store: [&dyn Storage; 2] = [transport_op.block_diagonal().full(), transport_op.reflective_coupling()];
    let base_angular = estimate_memory(&transport_store, vector_entries(problem, s, true));

    let outcome = match mode {
        Mode::Nda => match nda_solve(mesh, xs, quad, &s.nda()) {
            Ok(rep) => {
                nda_metrics(&mut row, &rep);
                row.mem_bytes = base_scalar + base_angular + rep.transport_setup.storage_bytes + rep.diffusion_setup.storage_bytes;
                if !rep.converged {
                    row.time_total = t0.elapsed().as_secs_f64();
                    return Err(fail(
                        Error::InvalidInput(format!(
                            "NDA did not converge in {} iterations (last eps {:e})",
                            rep.picard_iterations,
                            rep.eps_history.last().copied().unwrap_or(f64::NAN)
                        )),
                        &row,
                    ));
                }
                RunOutcome {
                    metrics: row.clone(),
                    k: Some(rep.eigen.k),
                    phi: rep.eigen.phi.into_inner(),
                }
            }
            Err(e) => {
                if let Some(p) = &e.partial {
                    nda_metrics(&mut row, p);
                }
                row.time_total = t0.elapsed().as_secs_f64();
                return Err(fail(e.source, &row));
            }
        },
        Mode::TransportEigen => {
            let (pair, rep, setup) = transport_eigen_solve(mesh, xs, quad, &s.transport_eigen()).map_err(|e| fail(e, &row))?;
            jfnk_metrics(&mut row, &rep, &setup);
            row.mem_bytes = base_angular + setup.storage_bytes;
            row.time_apply = t0.elapsed().as_secs_f64() - setup.seconds;
            if !rep.converged {
                return Err(fail(Error::InvalidInput("Newton iteration did not converge".into()), &row));
            }
            let phi = scalar_flux(&pair.phi, quad, groups, nc).map_err(|e| fail(e, &row))?;
            RunOutcome {
                metrics: row.clone(),
                k: Some(pair.k),
                phi,
            }
        }
        Mode::DiffusionEigen => {
            let (pair, rep, setup) =
                solve_closed_diffusion_eigen(None, mesh, xs, &s.diffusion(), None).map_err(|e| fail(e, &row))?;
            jfnk_metrics(&mut row, &rep, &setup);
            row.mem_bytes = base_scalar + setup.storage_bytes;
            row.time_apply = t0.elapsed().as_secs_f64() - setup.seconds;
            if !rep.converged {
                return Err(fail(Error::InvalidInput("Newton iteration did not converge".into()), &row));
            }
            RunOutcome {
                metrics: row.clone(),
                k: Some(pair.k),
                phi: pair.phi.into_inner(),
            }
        }
        Mode::Bench => {
            let ts = Instant::now();
            let pc = Preconditioner::build(s.preconditioner, transport_op.block_diagonal(), &s.multilevel())
                .map_err(|e| fail(e, &row))?;
            let setup = SetupStats {
                rows_split: pc.setup_work().rows_split,
                nnz_processed: pc.setup_work().nnz_processed,
                storage_bytes: pc.storage_bytes(),
                complexity: pc.operator_complexity(),
                seconds: ts.elapsed().as_secs_f64(),
            };
            row.comp = setup.complexity;
            row.setup_nnz = setup.nnz_processed;
            row.time_setup = setup.seconds;
            row.mem_bytes = base_angular + setup.storage_bytes;
            let ta = Instant::now();
            let rhs = transport_source(&vec![1.0; groups * nc], 1.0, mesh, xs, quad).map_err(|e| fail(e, &row))?;
            let (psi, rep) = gmres(&transport_op, Some(&pc), &rhs, None, &s.transport_gmres()).map_err(|e| fail(e, &row))?;
            row.time_apply = ta.elapsed().as_secs_f64();
            row.its_sweep = rep.iterations as f64;
            row.apply_count = rep.iterations;
            if !rep.converged {
                row.time_total = t0.elapsed().as_secs_f64();
                return Err(fail(
                    Error::SolverFailure {
                        context: "transport fixed-source solve".into(),
                        report: Box::new(rep),
                    },
                    &row,
                ));
            }
            let phi = scalar_flux(&psi, quad, groups, nc).map_err(|e| fail(e, &row))?;
            RunOutcome {
                metrics: row.clone(),
                k: None,
                phi,
            }
        }
    };
    let mut outcome = outcome;
    outcome.metrics.time_total = t0.elapsed().as_secs_f64();
    Ok(outcome)
}

pub fn write_solution_csv<W: Write>(mut w: W, phi: &[f64], groups: usize, n_cells: usize) -> Result<()> {
    writeln!(w, "cell,group,phi")?;
    for c in 0..n_cells {
        for g in 0..groups {
            writeln!(w, "{c},{g},{:.17e}", phi[g * n_cells + c])?;
        }
    }
    Ok(())
}

pub fn write_metrics_csv<W: Write>(mut w: W, rows: &[MetricsRow]) -> Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

fn write_manifest(path: &Path, cfg: &RunConfig, mode: Mode) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "critkit_version = {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(f, "mode = {mode}")?;
    writeln!(f, "runs = {}", cfg.runs.len())?;
    let seeds: Vec<String> = cfg.runs.iter().map(|r| r.seed.to_string()).collect();
    writeln!(f, "seed = {}", seeds.join(","))?;
    writeln!(f, "threads = {}", rayon::current_num_threads())?;
    writeln!(f, "\n# config")?;
    f.write_all(cfg.text.as_bytes())?;
    if let Some(p) = &cfg.problem.xs_path {
        writeln!(f, "\n# cross sections: {}", p.display())?;
        f.write_all(std::fs::read_to_string(p)?.as_bytes())?;
    }
    Ok(())
}

fn solution_name(i: usize, runs: usize) -> String {
    if runs == 1 {
        "solution.csv".into()
    } else {
        format!("solution_{i}.csv")
    }
}

/// Runs every sweep point and writes `solution*.csv`, `metrics.csv`,
/// `eigenvalue.csv` (eigen modes) and `manifest.txt` into `out`. On a solver
/// failure the metrics of completed and failed runs are still written.
pub fn run(cfg: &RunConfig, mode: Mode, out: &Path) -> std::result::Result<Vec<RunOutcome>, RunError> {
    std::fs::create_dir_all(out)?;
    write_manifest(&out.join("manifest.txt"), cfg, mode)?;
    let groups = cfg.problem.groups;
    let nc = cfg.problem.mesh.n_cells();
    let mut outcomes = Vec::with_capacity(cfg.runs.len());
    let mut rows = Vec::with_capacity(cfg.runs.len());
    for (i, s) in cfg.runs.iter().enumerate() {
        match run_single(&cfg.problem, s, mode) {
            Ok(o) => {
                let file = std::fs::File::create(out.join(solution_name(i, cfg.runs.len())))?;
                write_solution_csv(std::io::BufWriter::new(file), &o.phi, groups, nc).map_err(to_io)?;
                rows.push(o.metrics.clone());
                outcomes.push(o);
            }
            Err((source, partial)) => {
                rows.push(partial);
                write_metrics_csv(std::fs::File::create(out.join("metrics.csv"))?, &rows).map_err(to_io)?;
                return Err(RunError::Solver { source, metrics: rows });
            }
        }
    }
    write_metrics_csv(std::fs::File::create(out.join("metrics.csv"))?, &rows).map_err(to_io)?;
    if mode != Mode::Bench {
        let mut f = std::fs::File::create(out.join("eigenvalue.csv"))?;
        writeln!(f, "run,k")?;
        for (i, o) in outcomes.iter().enumerate() {
            writeln!(f, "{i},{:.15}", o.k.unwrap_or(f64::NAN))?;
        }
    }
    Ok(outcomes)
}

fn to_io(e: Error) -> std::io::Error {
    match e {
        Error::Io(io) => io,
        other => std::io::Error::other(other.to_string()),
    }
}
