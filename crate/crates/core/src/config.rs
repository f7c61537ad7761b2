//! Run configuration: `[problem]`, `[solver]` and optional inline
//! `[material N]` sections in `key = value` form.
//!
//! `region = <cells> <width> <material>` may repeat; regions are laid out
//! left to right. The solver keys `np1`, `np2`, `delta`, `theta` and `agg`
//! accept comma-separated lists, expanded into one run per combination.

use std::path::{Path, PathBuf};

use crate::coarsen::CoarseningParams;
use crate::discretization::{parse_xs_library, AngularQuadrature, Boundary, CrossSections, SlabMesh};
use crate::eigen::JfnkParams;
use crate::error::{Error, Result};
use crate::keyvalue::{parse_sections, Entry, Section};
use crate::krylov::GmresParams;
use crate::multilevel::{MultilevelParams, PreconditionerKind};
use crate::nda::{ClosureMode, DiffusionSolverParams, NdaParams, TauParams, TransportEigenParams};
use crate::schwarz::SorParams;

const PROBLEM_KEYS: &[&str] = &["groups", "quadrature", "xs_file", "bc_left", "bc_right", "region"];
const SOLVER_KEYS: &[&str] = &[
    "preconditioner",
    "theta",
    "delta",
    "agg",
    "max_levels",
    "min_coarse",
    "restart",
    "linear_maxit",
    "rtol_transport",
    "rtol_linear_diffusion",
    "newton_tol",
    "nda_tol",
    "max_nda",
    "np1",
    "np2",
    "component_index",
    "closure_mode",
    "init_power_iters",
    "max_newton",
    "sor_sweeps",
    "sor_omega",
    "tau_c",
    "tau_varsigma",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub groups: usize,
    pub quadrature: AngularQuadrature,
    pub mesh: SlabMesh,
    pub xs: Vec<CrossSections>,
    pub xs_path: Option<PathBuf>,
}

/// One fully resolved solver setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub preconditioner: PreconditionerKind,
    pub theta: f64,
    pub delta: usize,
    pub agg: usize,
    pub max_levels: usize,
    pub min_coarse: usize,
    pub restart: usize,
    pub linear_maxit: usize,
    pub rtol_transport: f64,
    pub rtol_linear_diffusion: f64,
    pub newton_tol: f64,
    pub nda_tol: f64,
    pub max_nda: usize,
    pub np1: usize,
    pub np2: usize,
    pub component_index: usize,
    pub closure_mode: ClosureMode,
    pub init_power_iters: usize,
    pub max_newton: usize,
    pub sor_sweeps: usize,
    pub sor_omega: f64,
    pub tau_c: f64,
    pub tau_varsigma: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            preconditioner: PreconditionerKind::Sgmasm,
            theta: 0.25,
            delta: 1,
            agg: 0,
            max_levels: 10,
            min_coarse: 50,
            restart: 30,
            linear_maxit: 300,
            rtol_transport: 1e-5,
            rtol_linear_diffusion: 1e-2,
            newton_tol: 1e-3,
            nda_tol: 1e-6,
            max_nda: 50,
            np1: 1,
            np2: 1,
            component_index: 0,
            closure_mode: ClosureMode::Drift,
            init_power_iters: 2,
            max_newton: 50,
            sor_sweeps: 1,
            sor_omega: 1.0,
            tau_c: 1.0,
            tau_varsigma: 0.5,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn multilevel(&self) -> MultilevelParams {
        MultilevelParams {
            coarsening: CoarseningParams {
                theta: self.theta,
                agg: self.agg,
                max_levels: self.max_levels,
                min_coarse: self.min_coarse,
            },
            delta: self.delta,
            sor: SorParams {
                sweeps: self.sor_sweeps,
                omega: self.sor_omega,
            },
            component_index: self.component_index,
            np1: self.np1,
            np2: self.np2,
            ..MultilevelParams::default()
        }
    }

    pub fn jfnk(&self, linear_rtol: f64) -> JfnkParams {
        JfnkParams {
            init_power_iters: self.init_power_iters,
            newton_tol: self.newton_tol,
            linear_rtol,
            max_newton: self.max_newton,
            restart: self.restart,
            linear_maxit: self.linear_maxit,
            ..JfnkParams::default()
        }
    }

    pub fn diffusion(&self) -> DiffusionSolverParams {
        DiffusionSolverParams {
            jfnk: self.jfnk(self.rtol_linear_diffusion),
            preconditioner: self.preconditioner,
            multilevel: self.multilevel(),
        }
    }

    pub fn transport_gmres(&self) -> GmresParams {
        GmresParams::new(self.rtol_transport, self.restart).with_maxit(self.linear_maxit)
    }

    pub fn nda(&self) -> NdaParams {
        NdaParams {
            max_nda: self.max_nda,
            tol: self.nda_tol,
            closure_mode: self.closure_mode,
            tau: TauParams {
                c: self.tau_c,
                varsigma: self.tau_varsigma,
            },
            diffusion: self.diffusion(),
            transport_preconditioner: self.preconditioner,
            transport_multilevel: self.multilevel(),
            transport_gmres: self.transport_gmres(),
        }
    }

    /// Newton on the angular system uses the transport linear tolerance.
    pub fn transport_eigen(&self) -> TransportEigenParams {
        TransportEigenParams {
            jfnk: self.jfnk(self.rtol_transport),
            preconditioner: self.preconditioner,
            multilevel: self.multilevel(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    /// One entry per sweep point; a single entry without lists.
    pub runs: Vec<SolverConfig>,
    pub text: String,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(0, path.display().to_string(), format!("cannot read config: {e}")))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// `base` resolves a relative `xs_file`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let sections = parse_sections(text)?;
        let mut problem = None;
        let mut solver = None;
        let mut inline_xs = String::new();
        for s in &sections {
            match s.name.as_str() {
                "problem" => problem = Some(s),
                "solver" => solver = Some(s),
                name if name.starts_with("material") => {
                    inline_xs.push_str(&format!("[{name}]\n"));
                    for e in &s.entries {
                        inline_xs.push_str(&format!("{} = {}\n", e.key, e.value));
                    }
                }
                "" => return Err(Error::config(s.entries[0].line, &s.entries[0].key, "entry outside any section")),
                other => return Err(Error::config(s.line, other, "unknown section")),
            }
        }
        let problem = problem.ok_or_else(|| Error::config(0, "problem", "missing [problem] section"))?;
        let problem = parse_problem(problem, base, &inline_xs)?;
        let runs = match solver {
            Some(s) => parse_solver(s, &problem)?,
            None => vec![SolverConfig::default()],
        };
        Ok(Self {
            problem,
            runs,
            text: text.to_string(),
        })
    }
}

fn check_keys(section: &Section, allowed: &[&str]) -> Result<()> {
    for e in &section.entries {
        if !allowed.contains(&e.key.as_str()) {
            return Err(Error::config(e.line, &e.key, format!("unknown key in [{}]", section.name)));
        }
    }
    for (i, e) in section.entries.iter().enumerate() {
        if e.key != "region" && section.entries[..i].iter().any(|p| p.key == e.key) {
            return Err(Error::config(e.line, &e.key, "duplicate key"));
        }
    }
    Ok(())
}

fn required<'a>(section: &'a Section, key: &str) -> Result<&'a Entry> {
    section
        .get(key)
        .ok_or_else(|| Error::config(section.line, key, format!("missing key in [{}]", section.name)))
}

fn invalid(e: &Entry, message: impl Into<String>) -> Error {
    Error::config(e.line, &e.key, message)
}

fn parse_problem(section: &Section, base: &Path, inline_xs: &str) -> Result<ProblemConfig> {
    check_keys(section, PROBLEM_KEYS)?;
    let groups_entry = required(section, "groups")?;
    let groups: usize = groups_entry.parse()?;
    if groups == 0 {
        return Err(invalid(groups_entry, "must be at least 1"));
    }
    let quad_entry = required(section, "quadrature")?;
    let quadrature = AngularQuadrature::gauss_legendre(quad_entry.parse()?)
        .map_err(|e| invalid(quad_entry, e.to_string()))?;
    let bc = |key: &str| -> Result<Boundary> {
        match section.get(key) {
            Some(e) => e.value.parse().map_err(|err: Error| invalid(e, err.to_string())),
            None => Ok(Boundary::Vacuum),
        }
    };
    let (bc_left, bc_right) = (bc("bc_left")?, bc("bc_right")?);

    let (xs, xs_path) = match section.get("xs_file") {
        Some(e) => {
            if !inline_xs.is_empty() {
                return Err(invalid(e, "xs_file given together with inline [material] sections"));
            }
            let path = base.join(&e.value);
            let text = std::fs::read_to_string(&path)
                .map_err(|err| invalid(e, format!("cannot read {}: {err}", path.display())))?;
            (parse_xs_library(&text)?, Some(path))
        }
        None if !inline_xs.is_empty() => (parse_xs_library(inline_xs)?, None),
        None => return Err(Error::config(section.line, "xs_file", "no cross sections given")),
    };
    if let Some(m) = xs.iter().find(|m| m.groups() != groups) {
        return Err(invalid(groups_entry, format!("cross sections have {} groups", m.groups())));
    }

    let mut widths = Vec::new();
    let mut materials = Vec::new();
    for e in section.get_all("region") {
        let parts: Vec<&str> = e.value.split_whitespace().collect();
        let bad = || invalid(e, "expected `region = <cells> <width> <material>`");
        if parts.len() != 3 {
            return Err(bad());
        }
        let cells: usize = parts[0].parse().map_err(|_| bad())?;
        let width: f64 = parts[1].parse().map_err(|_| bad())?;
        let material: usize = parts[2].parse().map_err(|_| bad())?;
        if cells == 0 || !(width > 0.0) || !width.is_finite() {
            return Err(invalid(e, "cell count and width must be positive"));
        }
        if material >= xs.len() {
            return Err(invalid(e, format!("material {material} not defined")));
        }
        widths.extend(std::iter::repeat_n(width, cells));
        materials.extend(std::iter::repeat_n(material, cells));
    }
    if widths.is_empty() {
        return Err(Error::config(section.line, "region", "at least one region is required"));
    }
    let mesh = SlabMesh::new(widths, materials, bc_left, bc_right)?;
    Ok(ProblemConfig {
        groups,
        quadrature,
        mesh,
        xs,
        xs_path,
    })
}

fn parse_solver(section: &Section, problem: &ProblemConfig) -> Result<Vec<SolverConfig>> {
    check_keys(section, SOLVER_KEYS)?;
    let mut base = SolverConfig::default();
    macro_rules! scalar {
        ($key:literal, $field:ident) => {
            if let Some(e) = section.get($key) {
                base.$field = e.parse()?;
            }
        };
    }
    if let Some(e) = section.get("preconditioner") {
        base.preconditioner = e.value.parse().map_err(|m: String| invalid(e, m))?;
    }
    if let Some(e) = section.get("closure_mode") {
        base.closure_mode = e.value.parse().map_err(|m: String| invalid(e, m))?;
    }
    scalar!("max_levels", max_levels);
    scalar!("min_coarse", min_coarse);
    scalar!("restart", restart);
    scalar!("linear_maxit", linear_maxit);
    scalar!("rtol_transport", rtol_transport);
    scalar!("rtol_linear_diffusion", rtol_linear_diffusion);
    scalar!("newton_tol", newton_tol);
    scalar!("nda_tol", nda_tol);
    scalar!("max_nda", max_nda);
    scalar!("component_index", component_index);
    scalar!("init_power_iters", init_power_iters);
    scalar!("max_newton", max_newton);
    scalar!("sor_sweeps", sor_sweeps);
    scalar!("sor_omega", sor_omega);
    scalar!("tau_c", tau_c);
    scalar!("tau_varsigma", tau_varsigma);
    scalar!("seed", seed);

    let list = |key: &str, default: f64| -> Result<Vec<f64>> {
        match section.get(key) {
            Some(e) => {
                let v: Vec<f64> = e.parse_list()?;
                if v.is_empty() {
                    return Err(invalid(e, "empty list"));
                }
                Ok(v)
            }
            None => Ok(vec![default]),
        }
    };
    let counts = |key: &str, default: usize| -> Result<Vec<usize>> {
        match section.get(key) {
            Some(e) => {
                let v: Vec<usize> = e.parse_list()?;
                if v.is_empty() {
                    return Err(invalid(e, "empty list"));
                }
                Ok(v)
            }
            None => Ok(vec![default]),
        }
    };
    let np1s = counts("np1", base.np1)?;
    let np2s = counts("np2", base.np2)?;
    let deltas = counts("delta", base.delta)?;
    let thetas = list("theta", base.theta)?;
    let aggs = counts("agg", base.agg)?;

    let at = |key: &str| section.get(key).map_or(section.line, |e| e.line);
    let check = |ok: bool, key: &str, msg: &str| -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::config(at(key), key, msg))
        }
    };
    check(thetas.iter().all(|t| (0.0..1.0).contains(t)), "theta", "must lie in [0, 1)")?;
    check(aggs.iter().all(|&a| a <= 2), "agg", "must be 0, 1 or 2")?;
    check(np1s.iter().chain(&np2s).all(|&n| n >= 1), "np1", "partition counts must be at least 1")?;
    let cells = problem.mesh.n_cells();
    check(
        np1s.iter().all(|a| np2s.iter().all(|b| a * b <= cells)),
        "np1",
        "np1*np2 exceeds the number of cells",
    )?;
    check(base.max_levels >= 1, "max_levels", "must be at least 1")?;
    check(base.min_coarse >= 1, "min_coarse", "must be at least 1")?;
    check(base.restart >= 1, "restart", "must be at least 1")?;
    check(base.linear_maxit >= 1, "linear_maxit", "must be at least 1")?;
    for (key, v) in [
        ("rtol_transport", base.rtol_transport),
        ("rtol_linear_diffusion", base.rtol_linear_diffusion),
        ("newton_tol", base.newton_tol),
        ("nda_tol", base.nda_tol),
        ("tau_c", base.tau_c),
        ("tau_varsigma", base.tau_varsigma),
    ] {
        check(v > 0.0 && v.is_finite(), key, "must be positive")?;
    }
    check(base.sor_omega > 0.0 && base.sor_omega < 2.0, "sor_omega", "must lie in (0, 2)")?;
    check(base.sor_sweeps >= 1, "sor_sweeps", "must be at least 1")?;
    check(base.init_power_iters >= 1, "init_power_iters", "must be at least 1")?;
    check(
        base.component_index < problem.groups,
        "component_index",
        "must be smaller than the group count",
    )?;

    let mut runs = Vec::new();
    for &np1 in &np1s {
        for &np2 in &np2s {
            for &delta in &deltas {
                for &theta in &thetas {
                    for &agg in &aggs {
                        runs.push(SolverConfig {
                            np1,
                            np2,
                            delta,
                            theta,
                            agg,
                            ..base
                        });
                    }
                }
            }
        }
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    const INLINE: &str = "\
[problem]
groups = 1
quadrature = 4
bc_left = reflective
bc_right = reflective
region = 2 0.5 0

[solver]
delta = 0, 1, 2

[material 0]
sigma_t = 1.0
sigma_s = 0.6
nu_sigma_f = 0.5
chi = 1
";

    #[test]
    fn inline_materials_and_sweep() {
        let cfg = RunConfig::parse(INLINE, Path::new(".")).unwrap();
        assert_eq!(cfg.problem.mesh.n_cells(), 2);
        assert_eq!(cfg.runs.len(), 3);
        assert_eq!(cfg.runs.iter().map(|r| r.delta).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn diagnostics_name_line_and_key() {
        let bad = INLINE.replace("delta = 0, 1, 2", "theta = 1.5");
        let err = RunConfig::parse(&bad, Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Config { line: 9, ref key, .. } if key == "theta"), "{err}");
        let bad = INLINE.replace("delta", "detla");
        let err = RunConfig::parse(&bad, Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Config { line: 9, ref key, .. } if key == "detla"));
        let bad = INLINE.replace("region = 2 0.5 0", "region = 2 0.5 3");
        assert!(matches!(RunConfig::parse(&bad, Path::new(".")), Err(Error::Config { line: 6, .. })));
    }
}
