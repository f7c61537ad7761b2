//! Python bindings: sparse matrices, slab problems and the eigensolvers.

use critkit::coarsen::CoarseningParams;
use critkit::discretization::{AngularQuadrature, Boundary, CrossSections, SlabMesh};
use critkit::eigen::JfnkParams;
use critkit::krylov::GmresParams;
use critkit::multilevel::{MultiComponentMatrix, MultilevelParams, Preconditioner, PreconditionerKind};
use critkit::nda::{
    nda_solve, solve_closed_diffusion_eigen, transport_eigen_solve, ClosureMode, DiffusionSolverParams, NdaParams,
    TransportEigenParams,
};
use critkit::report::Mode;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: critkit::Error) -> PyErr {
    match e {
        critkit::Error::Config { .. }
        | critkit::Error::InvalidInput(_)
        | critkit::Error::InvalidStructure(_)
        | critkit::Error::IndexOutOfRange { .. }
        | critkit::Error::DimensionMismatch { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| PyValueError::new_err(e.to_string()))
}

#[pyclass(name = "SparseMatrix", module = "critkit", skip_from_py_object)]
#[derive(Clone)]
struct PySparseMatrix(critkit::SparseMatrix);

#[pymethods]
impl PySparseMatrix {
    #[new]
    fn new(n_rows: usize, n_cols: usize, triplets: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        critkit::SparseMatrix::from_triplets(n_rows, n_cols, &triplets).map(Self).map_err(err)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.n_rows(), self.0.n_cols())
    }

    #[getter]
    fn nnz(&self) -> usize {
        self.0.nnz()
    }

    fn matvec(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.spmv(&x).map_err(err)
    }

    fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    fn matmul(&self, other: &Self) -> PyResult<Self> {
        self.0.matmul(&other.0).map(Self).map_err(err)
    }

    fn to_dense(&self) -> Vec<Vec<f64>> {
        self.0.to_dense()
    }

    fn __repr__(&self) -> String {
        format!("SparseMatrix({}x{}, nnz={})", self.0.n_rows(), self.0.n_cols(), self.0.nnz())
    }
}

/// Solves `A x = b` with restarted GMRES, optionally preconditioned.
/// Returns `(x, iterations, converged)`.
#[pyfunction]
#[pyo3(signature = (a, b, rtol=1e-8, restart=30, preconditioner="none", np1=1, delta=1, min_coarse=50))]
fn gmres(
    a: &PySparseMatrix,
    b: Vec<f64>,
    rtol: f64,
    restart: usize,
    preconditioner: &str,
    np1: usize,
    delta: usize,
    min_coarse: usize,
) -> PyResult<(Vec<f64>, usize, bool)> {
    let kind: PreconditionerKind = parse(preconditioner)?;
    let params = GmresParams::new(rtol, restart);
    let (x, rep) = if kind == PreconditionerKind::None {
        critkit::krylov::gmres(&a.0, None, &b, None, &params).map_err(err)?
    } else {
        let m = MultiComponentMatrix::new(a.0.clone(), 1).map_err(err)?;
        let ml = MultilevelParams {
            coarsening: CoarseningParams {
                min_coarse,
                ..Default::default()
            },
            np1,
            delta,
            ..Default::default()
        };
        let pc = Preconditioner::build(kind, &m, &ml).map_err(err)?;
        critkit::krylov::gmres(&a.0, Some(&pc), &b, None, &params).map_err(err)?
    };
    Ok((x, rep.iterations, rep.converged))
}

/// One-dimensional multigroup slab problem.
#[pyclass(name = "SlabProblem", module = "critkit")]
struct PySlabProblem {
    mesh: SlabMesh,
    xs: Vec<CrossSections>,
    quad: AngularQuadrature,
}

#[pymethods]
impl PySlabProblem {
    /// `materials` is a list of `(sigma_t, sigma_s, nu_sigma_f, chi)` with
    /// `sigma_s` flattened as `[from * G + to]`.
    #[new]
    #[pyo3(signature = (widths, material, materials, quadrature=8, bc_left="vacuum", bc_right="vacuum"))]
    #[allow(clippy::type_complexity)]
    fn new(
        widths: Vec<f64>,
        material: Vec<usize>,
        materials: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)>,
        quadrature: usize,
        bc_left: &str,
        bc_right: &str,
    ) -> PyResult<Self> {
        let (bl, br): (Boundary, Boundary) = (parse(bc_left)?, parse(bc_right)?);
        let xs = materials
            .into_iter()
            .map(|(st, ss, nsf, chi)| CrossSections::new(st, ss, nsf, chi))
            .collect::<critkit::Result<Vec<_>>>()
            .map_err(err)?;
        Ok(Self {
            mesh: SlabMesh::new(widths, material, bl, br).map_err(err)?,
            xs,
            quad: AngularQuadrature::gauss_legendre(quadrature).map_err(err)?,
        })
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.mesh.n_cells()
    }

    #[getter]
    fn groups(&self) -> usize {
        self.xs[0].groups()
    }

    /// Diffusion eigenpair `(k, phi)`.
    #[pyo3(signature = (newton_tol=1e-10, linear_rtol=1e-6))]
    fn diffusion_eigen(&self, newton_tol: f64, linear_rtol: f64) -> PyResult<(f64, Vec<f64>)> {
        let params = DiffusionSolverParams {
            jfnk: jfnk(newton_tol, linear_rtol),
            ..Default::default()
        };
        let (pair, _, _) = solve_closed_diffusion_eigen(None, &self.mesh, &self.xs, &params, None).map_err(err)?;
        Ok((pair.k, pair.phi.into_inner()))
    }

    /// Unaccelerated transport eigenvalue.
    #[pyo3(signature = (newton_tol=1e-10, linear_rtol=1e-6))]
    fn transport_eigen(&self, newton_tol: f64, linear_rtol: f64) -> PyResult<f64> {
        let params = TransportEigenParams {
            jfnk: jfnk(newton_tol, linear_rtol),
            ..Default::default()
        };
        let (pair, _, _) = transport_eigen_solve(&self.mesh, &self.xs, &self.quad, &params).map_err(err)?;
        Ok(pair.k)
    }

    /// NDA eigenpair `(k, phi, picard_iterations)`.
    #[pyo3(signature = (tol=1e-8, closure_mode="drift", transport_rtol=1e-10, newton_tol=1e-10))]
    fn nda(&self, tol: f64, closure_mode: &str, transport_rtol: f64, newton_tol: f64) -> PyResult<(f64, Vec<f64>, usize)> {
        let mode: ClosureMode = parse(closure_mode)?;
        let mut p = NdaParams {
            tol,
            closure_mode: mode,
            transport_gmres: GmresParams::new(transport_rtol, 30),
            ..Default::default()
        };
        p.diffusion.jfnk = jfnk(newton_tol, 1e-6);
        let rep = nda_solve(&self.mesh, &self.xs, &self.quad, &p).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok((rep.eigen.k, rep.eigen.phi.into_inner(), rep.picard_iterations))
    }
}

fn jfnk(newton_tol: f64, linear_rtol: f64) -> JfnkParams {
    JfnkParams {
        newton_tol,
        linear_rtol,
        ..Default::default()
    }
}

/// Runs a config file like `critkit solve` and returns the eigenvalue of
/// every sweep point (`None` in bench mode).
#[pyfunction]
#[pyo3(signature = (config, mode="nda", out="out"))]
fn solve(config: &str, mode: &str, out: &str) -> PyResult<Vec<Option<f64>>> {
    let mode: Mode = parse(mode)?;
    let cfg = critkit::config::RunConfig::from_file(std::path::Path::new(config)).map_err(err)?;
    let outcomes = critkit::report::run(&cfg, mode, std::path::Path::new(out))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(outcomes.iter().map(|o| o.k).collect())
}

#[pymodule(name = "critkit")]
fn critkit_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySparseMatrix>()?;
    m.add_class::<PySlabProblem>()?;
    m.add_function(wrap_pyfunction!(gmres, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    Ok(())
}
