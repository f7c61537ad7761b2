use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Vacuum,
    Reflective,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vacuum" => Ok(Self::Vacuum),
            "reflective" | "reflecting" => Ok(Self::Reflective),
            other => Err(Error::InvalidInput(format!("unknown boundary `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlabMesh {
    widths: Vec<f64>,
    material: Vec<usize>,
    bc_left: Boundary,
    bc_right: Boundary,
}

impl SlabMesh {
    pub fn new(widths: Vec<f64>, material: Vec<usize>, bc_left: Boundary, bc_right: Boundary) -> Result<Self> {
        if widths.is_empty() {
            return Err(Error::InvalidInput("mesh has no cells".into()));
        }
        if widths.len() != material.len() {
            return Err(Error::dims("SlabMesh::new", widths.len(), material.len()));
        }
        if let Some(h) = widths.iter().find(|h| !h.is_finite() || **h <= 0.0) {
            return Err(Error::InvalidInput(format!("cell width {h} must be positive")));
        }
        Ok(Self {
            widths,
            material,
            bc_left,
            bc_right,
        })
    }

    pub fn uniform(n_cells: usize, width: f64, material: usize, bc_left: Boundary, bc_right: Boundary) -> Result<Self> {
        Self::new(vec![width; n_cells], vec![material; n_cells], bc_left, bc_right)
    }

    pub fn n_cells(&self) -> usize {
        self.widths.len()
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn width(&self, c: usize) -> f64 {
        self.widths[c]
    }

    pub fn materials(&self) -> &[usize] {
        &self.material
    }

    pub fn material(&self, c: usize) -> usize {
        self.material[c]
    }

    pub fn bc_left(&self) -> Boundary {
        self.bc_left
    }

    pub fn bc_right(&self) -> Boundary {
        self.bc_right
    }

    pub fn length(&self) -> f64 {
        self.widths.iter().sum()
    }

    pub(crate) fn check_materials(&self, n_materials: usize) -> Result<()> {
        match self.material.iter().find(|&&m| m >= n_materials) {
            Some(&m) => Err(Error::IndexOutOfRange {
                index: m,
                bound: n_materials,
            }),
            None => Ok(()),
        }
    }
}
