//! Multigroup macroscopic cross sections and the material library format.

use crate::error::{Error, Result};
use crate::keyvalue::{parse_sections, Section};

const CHI_TOL: f64 = 1e-12;

/// One material. Scattering matrices are stored row-major as `[from][to]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSections {
    groups: usize,
    sigma_t: Vec<f64>,
    sigma_s: Vec<f64>,
    sigma_s1: Vec<f64>,
    nu_sigma_f: Vec<f64>,
    chi: Vec<f64>,
    d: Vec<f64>,
}

fn check_len(name: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::InvalidInput(format!("{name}: expected {want} values, found {got}")));
    }
    Ok(())
}

fn check_nonneg(name: &str, v: &[f64]) -> Result<()> {
    if let Some(x) = v.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidInput(format!("{name}: entry {x} is negative or not finite")));
    }
    Ok(())
}

impl CrossSections {
    /// `sigma_s` is `G×G` row-major with `sigma_s[g'·G + g]` the `g'→g`
    /// transfer. `D` defaults to `1/(3Σt)`.
    pub fn new(sigma_t: Vec<f64>, sigma_s: Vec<f64>, nu_sigma_f: Vec<f64>, chi: Vec<f64>) -> Result<Self> {
        let groups = sigma_t.len();
        if groups == 0 {
            return Err(Error::InvalidInput("cross sections need at least one group".into()));
        }
        check_len("sigma_s", sigma_s.len(), groups * groups)?;
        check_len("nu_sigma_f", nu_sigma_f.len(), groups)?;
        check_len("chi", chi.len(), groups)?;
        for (name, v) in [("sigma_t", &sigma_t), ("sigma_s", &sigma_s), ("nu_sigma_f", &nu_sigma_f), ("chi", &chi)] {
            check_nonneg(name, v)?;
        }
        if nu_sigma_f.iter().any(|&f| f > 0.0) {
            let total: f64 = chi.iter().sum();
            if (total - 1.0).abs() > CHI_TOL {
                return Err(Error::InvalidInput(format!("chi sums to {total}, expected 1")));
            }
        }
        for from in 0..groups {
            let out: f64 = sigma_s[from * groups..(from + 1) * groups].iter().sum();
            if out > sigma_t[from] * (1.0 + 1e-14) {
                return Err(Error::InvalidInput(format!(
                    "group {from}: total scattering {out} exceeds sigma_t {}",
                    sigma_t[from]
                )));
            }
        }
        let d = sigma_t
            .iter()
            .map(|&st| if st > 0.0 { 1.0 / (3.0 * st) } else { f64::INFINITY })
            .collect();
        Ok(Self {
            groups,
            sigma_t,
            sigma_s,
            sigma_s1: vec![0.0; groups * groups],
            nu_sigma_f,
            chi,
            d,
        })
    }

    pub fn with_diffusion(mut self, d: Vec<f64>) -> Result<Self> {
        check_len("D", d.len(), self.groups)?;
        if let Some(x) = d.iter().find(|x| !x.is_finite() || **x <= 0.0) {
            return Err(Error::InvalidInput(format!("D: entry {x} must be positive")));
        }
        self.d = d;
        Ok(self)
    }

    pub fn with_sigma_s1(mut self, s1: Vec<f64>) -> Result<Self> {
        check_len("sigma_s1", s1.len(), self.groups * self.groups)?;
        if s1.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("sigma_s1: entries must be finite".into()));
        }
        self.sigma_s1 = s1;
        Ok(self)
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn sigma_t(&self, g: usize) -> f64 {
        self.sigma_t[g]
    }

    /// `from → to` scattering.
    pub fn sigma_s(&self, from: usize, to: usize) -> f64 {
        self.sigma_s[from * self.groups + to]
    }

    pub fn sigma_s1(&self, from: usize, to: usize) -> f64 {
        self.sigma_s1[from * self.groups + to]
    }

    pub fn nu_sigma_f(&self, g: usize) -> f64 {
        self.nu_sigma_f[g]
    }

    pub fn chi(&self, g: usize) -> f64 {
        self.chi[g]
    }

    pub fn diffusion(&self, g: usize) -> f64 {
        self.d[g]
    }

    pub fn removal(&self, g: usize) -> f64 {
        self.sigma_t[g] - self.sigma_s(g, g)
    }

    pub fn is_fissile(&self) -> bool {
        self.nu_sigma_f.iter().any(|&f| f > 0.0)
    }
}

/// Parses `[material <id>]` blocks. Ids must cover `0..n` exactly once.
pub fn parse_xs_library(text: &str) -> Result<Vec<CrossSections>> {
    let mut found: Vec<(usize, usize, CrossSections)> = Vec::new();
    for section in parse_sections(text)? {
        let id = section
            .name
            .strip_prefix("material")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::config(section.line, &section.name, "expected `[material <id>]`"))?;
        if found.iter().any(|(other, _, _)| *other == id) {
            return Err(Error::config(section.line, &section.name, "duplicate material id"));
        }
        found.push((id, section.line, material_from_section(&section)?));
    }
    found.sort_by_key(|(id, _, _)| *id);
    for (expected, (id, line, _)) in found.iter().enumerate() {
        if *id != expected {
            return Err(Error::config(*line, "material", format!("ids must be contiguous from 0, missing {expected}")));
        }
    }
    if let Some((_, line, xs)) = found.iter().find(|(_, _, x)| x.groups != found[0].2.groups) {
        return Err(Error::config(*line, "sigma_t", format!("{} groups, expected {}", xs.groups, found[0].2.groups)));
    }
    Ok(found.into_iter().map(|(_, _, xs)| xs).collect())
}

fn material_from_section(section: &Section) -> Result<CrossSections> {
    let required = |key: &str| {
        section
            .get(key)
            .ok_or_else(|| Error::config(section.line, key, "missing key"))?
            .parse_list::<f64>()
    };
    let attach = |key: &str, err: Error| match err {
        Error::InvalidInput(msg) => Error::config(section.get(key).map_or(section.line, |e| e.line), key, msg),
        other => other,
    };
    let xs = CrossSections::new(
        required("sigma_t")?,
        required("sigma_s")?,
        required("nu_sigma_f")?,
        required("chi")?,
    )
    .map_err(|e| attach("sigma_t", e))?;
    let xs = match section.get("D") {
        Some(entry) => xs.with_diffusion(entry.parse_list()?).map_err(|e| attach("D", e))?,
        None => xs,
    };
    match section.get("sigma_s1") {
        Some(entry) => xs.with_sigma_s1(entry.parse_list()?).map_err(|e| attach("sigma_s1", e)),
        None => Ok(xs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let xs = CrossSections::new(vec![1.0], vec![0.6], vec![0.5], vec![1.0]).unwrap();
        assert!((xs.diffusion(0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((xs.removal(0) - 0.4).abs() < 1e-15);
        assert_eq!(xs.sigma_s1(0, 0), 0.0);
    }

    #[test]
    fn invariants() {
        assert!(CrossSections::new(vec![1.0], vec![1.5], vec![0.0], vec![0.0]).is_err());
        assert!(CrossSections::new(vec![1.0], vec![0.5], vec![0.1], vec![0.9]).is_err());
        assert!(CrossSections::new(vec![1.0], vec![-0.1], vec![0.0], vec![0.0]).is_err());
        assert!(CrossSections::new(vec![1.0, 2.0], vec![0.5], vec![0.0; 2], vec![0.0; 2]).is_err());
    }

    #[test]
    fn library() {
        let text = "\
[material 1]
sigma_t = 2.0
sigma_s = 1.0
nu_sigma_f = 0
chi = 0
[material 0]
sigma_t = 1.0
sigma_s = 0.6
nu_sigma_f = 0.5
chi = 1
D = 0.5
";
        let lib = parse_xs_library(text).unwrap();
        assert_eq!(lib.len(), 2);
        assert_eq!(lib[0].diffusion(0), 0.5);
        assert_eq!(lib[1].sigma_t(0), 2.0);
    }

    #[test]
    fn library_errors_carry_lines() {
        let err = parse_xs_library("[material 0]\nsigma_t = 1\nsigma_s = 2\nnu_sigma_f = 0\nchi = 0\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err:?}");
        let err = parse_xs_library("[material 0]\nsigma_t = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "sigma_s"));
        let err = parse_xs_library("[material 2]\nsigma_t = 1\nsigma_s = 0\nnu_sigma_f = 0\nchi = 0\n").unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }
}
