//! Discontinuous P1 discretization with Nitsche-blended interfaces.
//!
//! On every interior and Dirichlet face the form couples the trace jump
//! `j = [[u]]` and the average flux `s = <sigma(u) n>` through the interface
//! stiffness `S_h = (eps I + K)^-1`, `eps = h_F / gamma`. Writing
//! `K = S_h^-1 - eps I`, the face terms
//!
//! ```text
//! -s_u.(j_v + K s_v) - s_v.(j_u + K s_u) + s_v.K s_u + S_h (j_u + K s_u).(j_v + K s_v)
//! ```
//!
//! reduce to `(j_u - eps s_u)^T S_h (j_v - eps s_v) - eps s_u.s_v`, which is
//! what is assembled: it avoids the cancellation of the expanded form when
//! `K` is large and stays finite when a direction becomes traction-free.
//! In a traction-free direction `S_h` vanishes and the remaining
//! `-eps s_u.s_v` coupling is dropped too, so a fully separated face carries
//! nothing. Dirichlet faces use `K = 0` on the prescribed components.

mod element;
pub mod quadrature;

pub use element::{von_mises, ElementGeometry};

use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::{Matrix2, Point2, SMatrix, Vector2};
use rayon::prelude::*;
use thiserror::Error;

use crate::cohesive::SecantCompliance;
use crate::material::{stress, MaterialError, MaterialField};
use crate::mesh::{FaceKind, Mesh};
use crate::sparse::{CscMatrix, Pattern, Triplets};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DgError {
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("triangle {0} has non-positive area")]
    Degenerate(usize),
    #[error("no prescribed displacement for Dirichlet tag {0}")]
    MissingDisplacement(u32),
    #[error("load data given for tag {0}, which is not a {1:?} boundary of the mesh")]
    UnknownTag(u32, FaceKind),
    #[error("interface stiffness on face {face} is not positive semi-definite: {s:?}")]
    NotPsd { face: usize, s: Matrix2<f64> },
    #[error("expected {expected} face compliances, got {got}")]
    ComplianceCount { expected: usize, got: usize },
    #[error("expected a vector of {expected} dofs, got {got}")]
    DofCount { expected: usize, got: usize },
    #[error("gamma0 must be positive, got {0}")]
    Gamma0(f64),
}

/// Per-element dof numbering: triangle `t`, vertex `i`, component `c` maps
/// to `6 t + 2 i + c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    n_elements: usize,
}

impl DofMap {
    pub fn new(n_elements: usize) -> Self {
        Self { n_elements }
    }

    pub fn n_dofs(&self) -> usize {
        6 * self.n_elements
    }

    pub fn dof(&self, t: usize, vertex: usize, component: usize) -> usize {
        6 * t + 2 * vertex + component
    }

    pub fn element_dofs(&self, t: usize) -> [usize; 6] {
        std::array::from_fn(|k| 6 * t + k)
    }

    pub fn element<'a>(&self, u: &'a [f64], t: usize) -> &'a [f64] {
        &u[6 * t..6 * t + 6]
    }
}

/// Interface stiffness `s` and the projector `p` onto directions of finite
/// compliance, both in global coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceOperator {
    pub s: Matrix2<f64>,
    pub p: Matrix2<f64>,
}

impl FaceOperator {
    pub const FREE: FaceOperator = FaceOperator {
        s: Matrix2::new(0.0, 0.0, 0.0, 0.0),
        p: Matrix2::new(0.0, 0.0, 0.0, 0.0),
    };

    /// From a compliance given in the face frame `(n, t)`.
    pub fn cohesive(k: &SecantCompliance, eps: f64, n: &Vector2<f64>, t: &Vector2<f64>) -> Self {
        let (s, p) = match *k {
            SecantCompliance::Zero => (Matrix2::identity() / eps, Matrix2::identity()),
            SecantCompliance::Diagonal { normal, tangential } => {
                let s = |c: Option<f64>| c.map_or(0.0, |c| 1.0 / (eps + c));
                let p = |c: Option<f64>| if c.is_some() { 1.0 } else { 0.0 };
                (
                    Matrix2::new(s(normal), 0.0, 0.0, s(tangential)),
                    Matrix2::new(p(normal), 0.0, 0.0, p(tangential)),
                )
            }
            SecantCompliance::Full(k) => {
                let s = (Matrix2::identity() * eps + k).try_inverse().unwrap_or_else(Matrix2::zeros);
                (s, Matrix2::identity())
            }
        };
        let r = Matrix2::from_columns(&[*n, *t]);
        FaceOperator {
            s: r * s * r.transpose(),
            p: r * p * r.transpose(),
        }
    }

    /// Prescribed components `mask` with no compliance.
    pub fn dirichlet(mask: [bool; 2], eps: f64) -> Self {
        let m = Matrix2::new(
            if mask[0] { 1.0 } else { 0.0 },
            0.0,
            0.0,
            if mask[1] { 1.0 } else { 0.0 },
        );
        FaceOperator { s: m / eps, p: m }
    }

    fn is_psd(&self) -> bool {
        let s = &self.s;
        let scale = s.abs().max();
        let asym = (s[(0, 1)] - s[(1, 0)]).abs();
        let tr = s.trace();
        let det = s.determinant();
        asym <= 1e-10 * scale && tr >= -1e-12 * scale && det >= -1e-10 * scale * scale
    }
}

pub type VectorField = Box<dyn Fn(&Point2<f64>) -> Vector2<f64> + Send + Sync>;

/// Loads entering the right-hand side. Neumann tags without an entry are
/// traction-free.
#[derive(Default)]
pub struct LoadCase {
    pub body_force: Option<VectorField>,
    pub tractions: BTreeMap<u32, VectorField>,
    pub displacements: BTreeMap<u32, VectorField>,
}

impl LoadCase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn body_force(mut self, f: impl Fn(&Point2<f64>) -> Vector2<f64> + Send + Sync + 'static) -> Self {
        self.body_force = Some(Box::new(f));
        self
    }

    pub fn traction(mut self, tag: u32, h: impl Fn(&Point2<f64>) -> Vector2<f64> + Send + Sync + 'static) -> Self {
        self.tractions.insert(tag, Box::new(h));
        self
    }

    pub fn displacement(mut self, tag: u32, g: impl Fn(&Point2<f64>) -> Vector2<f64> + Send + Sync + 'static) -> Self {
        self.displacements.insert(tag, Box::new(g));
        self
    }

    pub fn constant_traction(self, tag: u32, h: Vector2<f64>) -> Self {
        self.traction(tag, move |_| h)
    }

    pub fn constant_displacement(self, tag: u32, g: Vector2<f64>) -> Self {
        self.displacement(tag, move |_| g)
    }
}

impl std::fmt::Debug for LoadCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LoadCase")
            .field("body_force", &self.body_force.is_some())
            .field("tractions", &self.tractions.keys().collect::<Vec<_>>())
            .field("displacements", &self.displacements.keys().collect::<Vec<_>>())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledSystem {
    pub matrix: CscMatrix,
    pub rhs: Vec<f64>,
}

impl AssembledSystem {
    pub fn n_dofs(&self) -> usize {
        self.rhs.len()
    }
}

/// Mesh, materials and penalty data for assembling the discrete form.
#[derive(Debug)]
pub struct DgModel {
    mesh: Mesh,
    materials: MaterialField,
    gamma0: f64,
    dofs: DofMap,
    geometry: Vec<ElementGeometry>,
    gamma: Vec<f64>,
    masks: BTreeMap<u32, [bool; 2]>,
    pattern: OnceLock<Pattern>,
}

impl DgModel {
    /// `masks` selects the prescribed components per Dirichlet tag; tags
    /// without an entry prescribe both.
    pub fn new(
        mesh: Mesh,
        materials: MaterialField,
        gamma0: f64,
        masks: BTreeMap<u32, [bool; 2]>,
    ) -> Result<Self, DgError> {
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(DgError::Gamma0(gamma0));
        }
        materials.check_covers(&mesh.region_tags())?;
        let geometry = (0..mesh.n_triangles())
            .map(|t| ElementGeometry::new(mesh.vertices(t)).ok_or(DgError::Degenerate(t)))
            .collect::<Result<Vec<_>, _>>()?;
        let gamma = (0..mesh.n_faces())
            .map(|f| materials.face_gamma(&mesh, f, gamma0))
            .collect();
        for &tag in masks.keys() {
            if !mesh
                .faces()
                .iter()
                .any(|f| f.kind == FaceKind::Dirichlet && f.boundary_tag == Some(tag))
            {
                return Err(DgError::UnknownTag(tag, FaceKind::Dirichlet));
            }
        }
        Ok(Self {
            dofs: DofMap::new(mesh.n_triangles()),
            mesh,
            materials,
            gamma0,
            geometry,
            gamma,
            masks,
            pattern: OnceLock::new(),
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn materials(&self) -> &MaterialField {
        &self.materials
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.n_dofs()
    }

    pub fn geometry(&self, t: usize) -> &ElementGeometry {
        &self.geometry[t]
    }

    pub fn face_gamma(&self, f: usize) -> f64 {
        self.gamma[f]
    }

    /// `h_F / gamma` of face `f`.
    pub fn epsilon(&self, f: usize) -> f64 {
        self.mesh.face(f).h_f / self.gamma[f]
    }

    pub fn mask(&self, tag: u32) -> [bool; 2] {
        self.masks.get(&tag).copied().unwrap_or([true, true])
    }

    /// Face operators from per-face compliances in the `(n, t)` frame.
    /// Entries of boundary faces are ignored.
    pub fn face_operators(&self, compliance: &[SecantCompliance]) -> Result<Vec<FaceOperator>, DgError> {
        if compliance.len() != self.mesh.n_faces() {
            return Err(DgError::ComplianceCount {
                expected: self.mesh.n_faces(),
                got: compliance.len(),
            });
        }
        self.mesh
            .faces()
            .iter()
            .enumerate()
            .map(|(f, face)| {
                let op = match face.kind {
                    FaceKind::Interior => {
                        FaceOperator::cohesive(&compliance[f], self.epsilon(f), &face.normal, &face.tangent)
                    }
                    FaceKind::Dirichlet => FaceOperator::dirichlet(self.mask(face.boundary_tag.unwrap_or(0)), self.epsilon(f)),
                    FaceKind::Neumann => FaceOperator::FREE,
                };
                if op.is_psd() {
                    Ok(op)
                } else {
                    Err(DgError::NotPsd { face: f, s: op.s })
                }
            })
            .collect()
    }

    /// Operators with every interior face bonded (`K = 0`).
    pub fn rigid_operators(&self) -> Vec<FaceOperator> {
        self.face_operators(&vec![SecantCompliance::Zero; self.mesh.n_faces()])
            .expect("rigid operators are positive definite")
    }

    fn flux(&self, t: usize, n: &Vector2<f64>) -> SMatrix<f64, 2, 6> {
        self.geometry[t].flux_map(self.materials.of(&self.mesh, t), n)
    }

    /// Jump and average-flux maps at face parameter `s` over the dofs of
    /// `plus` then `minus`.
    fn face_maps(&self, f: usize, s: f64) -> (SMatrix<f64, 2, 12>, SMatrix<f64, 2, 12>) {
        let face = self.mesh.face(f);
        let x = self.mesh.face_point(f, s);
        let mut j = SMatrix::<f64, 2, 12>::zeros();
        let mut a = SMatrix::<f64, 2, 12>::zeros();
        j.fixed_view_mut::<2, 6>(0, 0).copy_from(&self.geometry[face.plus].value_map(&x));
        let fp = self.flux(face.plus, &face.normal);
        match face.minus {
            Some(m) => {
                j.fixed_view_mut::<2, 6>(0, 6).copy_from(&(-self.geometry[m].value_map(&x)));
                a.fixed_view_mut::<2, 6>(0, 0).copy_from(&(fp * 0.5));
                a.fixed_view_mut::<2, 6>(0, 6).copy_from(&(self.flux(m, &face.normal) * 0.5));
            }
            None => a.fixed_view_mut::<2, 6>(0, 0).copy_from(&fp),
        }
        (j, a)
    }

    fn face_dofs(&self, f: usize) -> Vec<usize> {
        let face = self.mesh.face(f);
        let mut d = self.dofs.element_dofs(face.plus).to_vec();
        if let Some(m) = face.minus {
            d.extend(self.dofs.element_dofs(m));
        }
        d
    }

    fn face_block(&self, f: usize, op: &FaceOperator) -> SMatrix<f64, 12, 12> {
        let eps = self.epsilon(f);
        let len = self.mesh.face(f).length;
        let mut block = SMatrix::<f64, 12, 12>::zeros();
        for (s, w) in quadrature::gauss2() {
            let (j, a) = self.face_maps(f, s);
            let b = j - a * eps;
            block += (b.transpose() * op.s * b - a.transpose() * op.p * a * eps) * (w * len);
        }
        (block + block.transpose()) * 0.5
    }

    /// Coordinate triplets of the matrix: element blocks in triangle order,
    /// then face blocks in face order. Neumann faces add nothing.
    pub fn assemble_triplets(&self, ops: &[FaceOperator]) -> Triplets {
        let elements: Vec<SMatrix<f64, 6, 6>> = (0..self.mesh.n_triangles())
            .into_par_iter()
            .map(|t| self.geometry[t].stiffness(self.materials.of(&self.mesh, t)))
            .collect();
        let faces: Vec<Option<SMatrix<f64, 12, 12>>> = (0..self.mesh.n_faces())
            .into_par_iter()
            .map(|f| (self.mesh.face(f).kind != FaceKind::Neumann).then(|| self.face_block(f, &ops[f])))
            .collect();
        let mut t = Triplets::with_capacity(36 * elements.len() + 144 * faces.len());
        for (e, k) in elements.iter().enumerate() {
            t.push_block(&self.dofs.element_dofs(e), |i, j| k[(i, j)]);
        }
        for (f, block) in faces.iter().enumerate() {
            if let Some(b) = block {
                t.push_block(&self.face_dofs(f), |i, j| b[(i, j)]);
            }
        }
        t
    }

    pub fn assemble_matrix(&self, ops: &[FaceOperator]) -> CscMatrix {
        let t = self.assemble_triplets(ops);
        self.pattern.get_or_init(|| Pattern::new(self.n_dofs(), &t)).assemble(&t)
    }

    /// `L_h(v)`: body force, Neumann tractions and the Dirichlet coupling
    /// `g^T S_h (v - eps sigma(v) n)`.
    pub fn assemble_rhs(&self, load: &LoadCase, ops: &[FaceOperator]) -> Result<Vec<f64>, DgError> {
        self.check_load(load)?;
        let mut rhs = vec![0.0; self.n_dofs()];
        if let Some(f) = &load.body_force {
            let parts: Vec<SMatrix<f64, 6, 1>> = (0..self.mesh.n_triangles())
                .into_par_iter()
                .map(|t| {
                    let geo = &self.geometry[t];
                    let mut v = SMatrix::<f64, 6, 1>::zeros();
                    for (bary, w) in quadrature::triangle7() {
                        let x = geo.point(&bary);
                        v += geo.value_map(&x).transpose() * f(&x) * (w * geo.area);
                    }
                    v
                })
                .collect();
            for (t, v) in parts.iter().enumerate() {
                for (k, d) in self.dofs.element_dofs(t).iter().enumerate() {
                    rhs[*d] += v[k];
                }
            }
        }
        for (f, face) in self.mesh.faces().iter().enumerate() {
            let Some(tag) = face.boundary_tag else { continue };
            let geo = &self.geometry[face.plus];
            let mut v = SMatrix::<f64, 6, 1>::zeros();
            match face.kind {
                FaceKind::Neumann => {
                    let Some(h) = load.tractions.get(&tag) else { continue };
                    for (s, w) in quadrature::gauss2() {
                        let x = self.mesh.face_point(f, s);
                        v += geo.value_map(&x).transpose() * h(&x) * (w * face.length);
                    }
                }
                FaceKind::Dirichlet => {
                    let g = &load.displacements[&tag];
                    let eps = self.epsilon(f);
                    let flux = self.flux(face.plus, &face.normal);
                    for (s, w) in quadrature::gauss2() {
                        let x = self.mesh.face_point(f, s);
                        let test = geo.value_map(&x) - flux * eps;
                        v += test.transpose() * (ops[f].s * g(&x)) * (w * face.length);
                    }
                }
                FaceKind::Interior => unreachable!("interior faces carry no tag"),
            }
            for (k, d) in self.dofs.element_dofs(face.plus).iter().enumerate() {
                rhs[*d] += v[k];
            }
        }
        Ok(rhs)
    }

    fn check_load(&self, load: &LoadCase) -> Result<(), DgError> {
        let tags_of = |kind: FaceKind| -> std::collections::BTreeSet<u32> {
            self.mesh
                .faces()
                .iter()
                .filter(|f| f.kind == kind)
                .filter_map(|f| f.boundary_tag)
                .collect()
        };
        let dirichlet = tags_of(FaceKind::Dirichlet);
        let neumann = tags_of(FaceKind::Neumann);
        if let Some(&tag) = dirichlet.iter().find(|t| !load.displacements.contains_key(t)) {
            return Err(DgError::MissingDisplacement(tag));
        }
        if let Some(&tag) = load.displacements.keys().find(|t| !dirichlet.contains(t)) {
            return Err(DgError::UnknownTag(tag, FaceKind::Dirichlet));
        }
        if let Some(&tag) = load.tractions.keys().find(|t| !neumann.contains(t)) {
            return Err(DgError::UnknownTag(tag, FaceKind::Neumann));
        }
        Ok(())
    }

    pub fn assemble(&self, load: &LoadCase, ops: &[FaceOperator]) -> Result<AssembledSystem, DgError> {
        Ok(AssembledSystem {
            rhs: self.assemble_rhs(load, ops)?,
            matrix: self.assemble_matrix(ops),
        })
    }

    fn check_len(&self, u: &[f64]) -> Result<(), DgError> {
        if u.len() != self.n_dofs() {
            return Err(DgError::DofCount {
                expected: self.n_dofs(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Force per unit thickness exerted by the Dirichlet boundary `tag` on
    /// the body: the integral of the Nitsche flux
    /// `sigma(u) n + S_h (g - u - eps sigma(u) n)` reduced to `S_h (g - u + eps sigma(u) n)`.
    pub fn reaction(&self, u: &[f64], load: &LoadCase, tag: u32) -> Result<Vector2<f64>, DgError> {
        self.check_len(u)?;
        let g = load.displacements.get(&tag).ok_or(DgError::MissingDisplacement(tag))?;
        let mut total = Vector2::zeros();
        for (f, face) in self.mesh.faces().iter().enumerate() {
            if face.kind != FaceKind::Dirichlet || face.boundary_tag != Some(tag) {
                continue;
            }
            let op = FaceOperator::dirichlet(self.mask(tag), self.epsilon(f));
            let eps = self.epsilon(f);
            let ue = self.dofs.element(u, face.plus);
            let geo = &self.geometry[face.plus];
            let flux = self.flux(face.plus, &face.normal) * SMatrix::<f64, 6, 1>::from_column_slice(ue);
            for (s, w) in quadrature::gauss2() {
                let x = self.mesh.face_point(f, s);
                let trace = geo.value_map(&x) * SMatrix::<f64, 6, 1>::from_column_slice(ue);
                total += op.s * (g(&x) - trace + flux * eps) * (w * face.length);
            }
        }
        Ok(total)
    }

    pub fn evaluate(&self, u: &[f64], t: usize, p: &Point2<f64>) -> Vector2<f64> {
        self.geometry[t].value_map(p) * SMatrix::<f64, 6, 1>::from_column_slice(self.dofs.element(u, t))
    }

    pub fn element_stress(&self, u: &[f64], t: usize) -> Matrix2<f64> {
        stress(&self.geometry[t].strain(self.dofs.element(u, t)), self.materials.of(&self.mesh, t))
    }

    /// `[[u]] = u+ - u-` at face parameter `s`; `u+` on boundary faces.
    pub fn jump(&self, u: &[f64], f: usize, s: f64) -> Vector2<f64> {
        let face = self.mesh.face(f);
        let x = self.mesh.face_point(f, s);
        let plus = self.evaluate(u, face.plus, &x);
        match face.minus {
            Some(m) => plus - self.evaluate(u, m, &x),
            None => plus,
        }
    }

    /// `<sigma(u) n>` (constant along the face).
    pub fn average_flux(&self, u: &[f64], f: usize) -> Vector2<f64> {
        let face = self.mesh.face(f);
        let s = |t: usize| self.element_stress(u, t) * face.normal;
        match face.minus {
            Some(m) => (s(face.plus) + s(m)) * 0.5,
            None => s(face.plus),
        }
    }

    /// Opening `(u_n, u_t)` at the face midpoint, with separation `-[[u]]`
    /// so that moving apart is positive.
    pub fn separation(&self, u: &[f64], f: usize) -> (f64, f64) {
        let face = self.mesh.face(f);
        let d = -self.jump(u, f, 0.5);
        (d.dot(&face.normal), d.dot(&face.tangent))
    }

    /// Traction transmitted through face `f` at its midpoint,
    /// `S_h (delta + eps <sigma n>)`, in the face frame `(n, t)`.
    pub fn interface_traction(&self, u: &[f64], f: usize, op: &FaceOperator) -> (f64, f64) {
        let face = self.mesh.face(f);
        let delta = -self.jump(u, f, 0.5);
        let t = op.s * (delta + self.average_flux(u, f) * self.epsilon(f));
        (t.dot(&face.normal), t.dot(&face.tangent))
    }

    /// Broken L2 norm of `u - exact`.
    pub fn l2_error(&self, u: &[f64], exact: impl Fn(&Point2<f64>) -> Vector2<f64> + Sync) -> f64 {
        (0..self.mesh.n_triangles())
            .into_par_iter()
            .map(|t| {
                let geo = &self.geometry[t];
                quadrature::triangle7()
                    .iter()
                    .map(|(bary, w)| {
                        let x = geo.point(bary);
                        (self.evaluate(u, t, &x) - exact(&x)).norm_squared() * w * geo.area
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum::<f64>()
            .sqrt()
    }

    /// Broken energy norm `(sum_T int sigma(e):eps(e))^(1/2)` of
    /// `e = u - exact`, given the exact displacement gradient.
    pub fn energy_error(&self, u: &[f64], exact_grad: impl Fn(&Point2<f64>) -> Matrix2<f64> + Sync) -> f64 {
        (0..self.mesh.n_triangles())
            .into_par_iter()
            .map(|t| {
                let geo = &self.geometry[t];
                let mat = self.materials.of(&self.mesh, t);
                let gh = geo.displacement_gradient(self.dofs.element(u, t));
                quadrature::triangle7()
                    .iter()
                    .map(|(bary, w)| {
                        let d = gh - exact_grad(&geo.point(bary));
                        let e = (d + d.transpose()) * 0.5;
                        stress(&e, mat).component_mul(&e).sum() * w * geo.area
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum::<f64>()
            .sqrt()
    }

    /// Energy stored in the bulk, `1/2 sum_T int sigma:eps`.
    pub fn strain_energy(&self, u: &[f64]) -> f64 {
        (0..self.mesh.n_triangles())
            .map(|t| {
                let e = self.geometry[t].strain(self.dofs.element(u, t));
                0.5 * stress(&e, self.materials.of(&self.mesh, t)).component_mul(&e).sum() * self.geometry[t].area
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::IsotropicElastic;
    use crate::mesh::{read_mesh, BoundaryKind};
    use approx::assert_relative_eq;

    const SQUARE: &str = "$Nodes\n4\n0 0 0\n1 1 0\n2 1 1\n3 0 1\n$Triangles\n2\n0 0 0 1 2\n1 0 0 2 3\n$BoundaryEdges\n4\n0 1 0 1\n1 2 1 2\n2 3 2 3\n3 4 3 0\n";

    fn model(kinds: [BoundaryKind; 4]) -> DgModel {
        let kinds: BTreeMap<u32, BoundaryKind> = (1..=4).zip(kinds).collect();
        let mesh = read_mesh(SQUARE).unwrap().build(&kinds).unwrap();
        let mat = MaterialField::uniform([0], IsotropicElastic::new(10.0, 0.3).unwrap());
        DgModel::new(mesh, mat, 10.0, BTreeMap::new()).unwrap()
    }

    #[test]
    fn dof_map_layout() {
        let d = DofMap::new(3);
        assert_eq!(d.n_dofs(), 18);
        assert_eq!(d.dof(1, 2, 1), 11);
        assert_eq!(d.element_dofs(2), [12, 13, 14, 15, 16, 17]);
    }

    #[test]
    fn zero_data_gives_zero_rhs() {
        use BoundaryKind::*;
        let m = model([Dirichlet, Neumann, Neumann, Neumann]);
        let load = LoadCase::new().constant_displacement(1, Vector2::zeros());
        let ops = m.rigid_operators();
        assert!(m.assemble_rhs(&load, &ops).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_edge_traction_splits_equally() {
        use BoundaryKind::*;
        let m = model([Neumann; 4]);
        let load = LoadCase::new().constant_traction(2, Vector2::new(3.0, 0.0));
        let rhs = m.assemble_rhs(&load, &m.rigid_operators()).unwrap();
        // the right edge (1,0)-(1,1) belongs to triangle 0, vertices 1 and 2
        assert_relative_eq!(rhs[2], 1.5, max_relative = 1e-14);
        assert_relative_eq!(rhs[4], 1.5, max_relative = 1e-14);
        assert_relative_eq!(rhs.iter().sum::<f64>(), 3.0, max_relative = 1e-14);
    }

    #[test]
    fn missing_and_unknown_tags() {
        use BoundaryKind::*;
        let m = model([Dirichlet, Neumann, Neumann, Neumann]);
        let ops = m.rigid_operators();
        assert_eq!(m.assemble_rhs(&LoadCase::new(), &ops), Err(DgError::MissingDisplacement(1)));
        let stray = LoadCase::new()
            .constant_displacement(1, Vector2::zeros())
            .constant_traction(7, Vector2::zeros());
        assert!(matches!(m.assemble_rhs(&stray, &ops), Err(DgError::UnknownTag(7, _))));
    }

    #[test]
    fn rigid_operator_is_penalty() {
        let op = FaceOperator::cohesive(&SecantCompliance::Zero, 0.01, &Vector2::new(0.6, 0.8), &Vector2::new(-0.8, 0.6));
        assert_relative_eq!(op.s, Matrix2::identity() * 100.0, max_relative = 1e-12);
        assert_relative_eq!(op.p, Matrix2::identity(), max_relative = 1e-12);
        let free = FaceOperator::cohesive(&SecantCompliance::FREE, 0.01, &Vector2::x(), &Vector2::y());
        assert_eq!(free, FaceOperator::FREE);
    }

    #[test]
    fn dirichlet_mask_operator() {
        let op = FaceOperator::dirichlet([false, true], 0.5);
        assert_eq!(op.s, Matrix2::new(0.0, 0.0, 0.0, 2.0));
        assert_eq!(op.p, Matrix2::new(0.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn failed_faces_leave_block_diagonal_volume_matrix() {
        use BoundaryKind::*;
        let m = model([Neumann; 4]);
        let ops = m.face_operators(&vec![SecantCompliance::FREE; m.mesh().n_faces()]).unwrap();
        let a = m.assemble_matrix(&ops).to_dense();
        for i in 0..6 {
            for j in 6..12 {
                assert_eq!(a[(i, j)], 0.0);
                assert_eq!(a[(j, i)], 0.0);
            }
        }
        let k0 = m.geometry(0).stiffness(m.materials().of(m.mesh(), 0));
        for i in 0..6 {
            for j in 0..6 {
                assert_relative_eq!(a[(i, j)], k0[(i, j)], max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn negative_compliance_is_rejected() {
        use BoundaryKind::*;
        let m = model([Neumann; 4]);
        let bad = SecantCompliance::Full(Matrix2::identity() * -1.0);
        let mut k = vec![SecantCompliance::Zero; m.mesh().n_faces()];
        let interior = m.mesh().interior_faces().next().unwrap();
        k[interior] = bad;
        assert!(matches!(m.face_operators(&k), Err(DgError::NotPsd { .. })));
    }
}
