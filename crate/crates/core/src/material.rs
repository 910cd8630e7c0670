//! Isotropic linear elasticity per region.
//!
//! The 2D operator is plane strain: `sigma = lambda tr(eps) I + 2 mu eps`
//! with the Lamé constants obtained from `(E, nu)` by the 3D formulas.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Matrix2, Matrix3};
use thiserror::Error;

use crate::mesh::Mesh;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("Young's modulus must be positive and finite, got {0}")]
    Modulus(f64),
    #[error("Poisson's ratio {0} is incompressible (nu = 0.5)")]
    Incompressible(f64),
    #[error("Poisson's ratio must satisfy 0 <= nu < 0.5, got {0}")]
    Poisson(f64),
    #[error("penalty scale gamma0 must be positive, got {0}")]
    Gamma0(f64),
    #[error("no material for region tag {0}")]
    MissingRegion(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicElastic {
    pub e: f64,
    pub nu: f64,
    pub lambda: f64,
    pub mu: f64,
}

/// `(lambda, mu)` from Young's modulus and Poisson's ratio.
pub fn lame_from_e_nu(e: f64, nu: f64) -> Result<(f64, f64), MaterialError> {
    if !(e > 0.0 && e.is_finite()) {
        return Err(MaterialError::Modulus(e));
    }
    if nu == 0.5 {
        return Err(MaterialError::Incompressible(nu));
    }
    if !(0.0..0.5).contains(&nu) {
        return Err(MaterialError::Poisson(nu));
    }
    let mu = e / (2.0 * (1.0 + nu));
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    Ok((lambda, mu))
}

impl IsotropicElastic {
    pub fn new(e: f64, nu: f64) -> Result<Self, MaterialError> {
        let (lambda, mu) = lame_from_e_nu(e, nu)?;
        Ok(Self { e, nu, lambda, mu })
    }

    /// Plane-strain stiffness in Voigt order `(xx, yy, xy)` with engineering
    /// shear strain.
    pub fn voigt(&self) -> Matrix3<f64> {
        let (l, m) = (self.lambda, self.mu);
        Matrix3::new(l + 2.0 * m, l, 0.0, l, l + 2.0 * m, 0.0, 0.0, 0.0, m)
    }

    /// `2 mu + 3 lambda`, which equals `E / (1 - 2 nu)`.
    pub fn penalty_modulus(&self) -> f64 {
        2.0 * self.mu + 3.0 * self.lambda
    }
}

pub fn stress(strain: &Matrix2<f64>, material: &IsotropicElastic) -> Matrix2<f64> {
    Matrix2::identity() * (material.lambda * strain.trace()) + strain * (2.0 * material.mu)
}

/// `gamma = (2 mu + 3 lambda) gamma0`.
pub fn penalty_gamma(material: &IsotropicElastic, gamma0: f64) -> Result<f64, MaterialError> {
    if !(gamma0 > 0.0 && gamma0.is_finite()) {
        return Err(MaterialError::Gamma0(gamma0));
    }
    Ok(material.penalty_modulus() * gamma0)
}

/// Region tag to material map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialField {
    regions: BTreeMap<u32, IsotropicElastic>,
}

impl MaterialField {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn uniform(tags: impl IntoIterator<Item = u32>, material: IsotropicElastic) -> Self {
        Self {
            regions: tags.into_iter().map(|t| (t, material)).collect(),
        }
    }

    pub fn insert(&mut self, tag: u32, material: IsotropicElastic) {
        self.regions.insert(tag, material);
    }

    pub fn get(&self, tag: u32) -> Result<&IsotropicElastic, MaterialError> {
        self.regions.get(&tag).ok_or(MaterialError::MissingRegion(tag))
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &IsotropicElastic)> {
        self.regions.iter().map(|(&t, m)| (t, m))
    }

    pub fn check_covers(&self, tags: &BTreeSet<u32>) -> Result<(), MaterialError> {
        match tags.iter().find(|t| !self.regions.contains_key(t)) {
            Some(&t) => Err(MaterialError::MissingRegion(t)),
            None => Ok(()),
        }
    }

    /// Material of triangle `t`.
    pub fn of(&self, mesh: &Mesh, t: usize) -> &IsotropicElastic {
        &self.regions[&mesh.triangles()[t].region]
    }

    /// Penalty on face `f`: the larger of the adjacent materials' values.
    pub fn face_gamma(&self, mesh: &Mesh, f: usize, gamma0: f64) -> f64 {
        let face = mesh.face(f);
        let plus = self.of(mesh, face.plus).penalty_modulus();
        let modulus = match face.minus {
            Some(m) => plus.max(self.of(mesh, m).penalty_modulus()),
            None => plus,
        };
        modulus * gamma0
    }
}
