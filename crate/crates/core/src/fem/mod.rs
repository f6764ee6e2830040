//! Plane-strain linear elasticity on the hierarchical mesh: solution
//! spaces, the all-DOF / conforming-DOF split, assembly, and the
//! preconditioned conjugate gradient solver.

mod assemble;
mod dirichlet;
mod pcg;
mod prolongation;
mod space;

pub use assemble::{assemble_stiffness, assemble_stiffness_serial};
pub use dirichlet::{apply_dirichlet, DirichletBc, ReducedSystem};
pub use pcg::{default_max_iter, pcg_solve, PcgSolution};
pub use prolongation::{build_prolongation, form_conforming};
pub use space::{DofMap, FeSpace};
pub(crate) use space::side_lattice_indices;

use crate::error::{Error, Result};

/// Isotropic material of one solid.
#[derive(Debug, Clone, Copy)]
pub struct Material {
    pub young: f64,
    pub poisson: f64,
}

impl Material {
    pub fn new(young: f64, poisson: f64) -> Result<Self> {
        if !(young > 0.0) {
            return Err(Error::Config("Young's modulus must be positive".into()));
        }
        if !(0.0..0.5).contains(&poisson) {
            return Err(Error::Config("Poisson ratio must lie in [0, 0.5)".into()));
        }
        Ok(Material { young, poisson })
    }

    /// Plane-strain stiffness in Voigt order (xx, yy, xy with engineering
    /// shear strain).
    pub fn stiffness_matrix(&self) -> [[f64; 3]; 3] {
        let e = self.young;
        let nu = self.poisson;
        let f = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
        [
            [f * (1.0 - nu), f * nu, 0.0],
            [f * nu, f * (1.0 - nu), 0.0],
            [0.0, 0.0, f * (1.0 - 2.0 * nu) / 2.0],
        ]
    }

    /// Inverse of [`Material::stiffness_matrix`] (in-plane compliance).
    pub fn compliance_matrix(&self) -> [[f64; 3]; 3] {
        let d = self.stiffness_matrix();
        let det = d[0][0] * d[1][1] - d[0][1] * d[1][0];
        [
            [d[1][1] / det, -d[0][1] / det, 0.0],
            [-d[1][0] / det, d[0][0] / det, 0.0],
            [0.0, 0.0, 1.0 / d[2][2]],
        ]
    }
}

/// Materials of the two solids, indexed by solid id (1 or 2).
#[derive(Debug, Clone, Copy)]
pub struct Materials {
    pub solid1: Material,
    pub solid2: Material,
}

impl Materials {
    pub fn uniform(m: Material) -> Self {
        Materials {
            solid1: m,
            solid2: m,
        }
    }

    pub fn of(&self, solid: u8) -> Result<Material> {
        match solid {
            1 => Ok(self.solid1),
            2 => Ok(self.solid2),
            other => Err(Error::Config(format!("unknown solid id {other}"))),
        }
    }
}
