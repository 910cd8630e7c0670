//! Verification suites with independent oracles.
//!
//! Each suite returns a [`Report`] of named measurements and the bound each
//! must satisfy; `Display` gives one machine-readable line per check.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use czdg_core::cohesive::{
    gamma_surface, tractions, CohesiveParams, FaceState, PureModeLaw, SecantCompliance,
};
use czdg_core::dg::{DgModel, FaceOperator, LoadCase};
use czdg_core::material::{penalty_gamma, IsotropicElastic, MaterialField};
use czdg_core::mesh::{generate_rect, tags, BoundaryKind, FaceKind, RectSpec, Region, Shape};
use czdg_core::solver::{
    cholesky_factorizes, linear_solve, LoadSchedule, NonlinearSettings, QuasiStaticProblem,
};
use nalgebra::{DMatrix, Matrix2, Point2, Vector2};

pub const SUITES: [&str; 7] = [
    "patch",
    "sipg",
    "limits",
    "convergence",
    "cohesive-grad",
    "dissipation",
    "symmetry",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Within(f64, f64),
}

impl Bound {
    fn holds(&self, x: f64) -> bool {
        match *self {
            Bound::AtMost(b) => x <= b,
            Bound::AtLeast(b) => x >= b,
            Bound::Within(lo, hi) => x >= lo && x <= hi,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost(b) => write!(f, "<={b:e}"),
            Bound::AtLeast(b) => write!(f, ">={b:e}"),
            Bound::Within(lo, hi) => write!(f, "[{lo},{hi}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: Bound,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, bound: Bound) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
        }
    }

    /// NaN never passes.
    pub fn passed(&self) -> bool {
        self.bound.holds(self.measured)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
    /// Supporting measurements, `key=value` pairs.
    pub notes: Vec<String>,
}

impl Report {
    fn new(suite: &str) -> Self {
        Self {
            suite: suite.into(),
            ..Self::default()
        }
    }

    fn check(&mut self, name: &str, measured: f64, bound: Bound) {
        self.checks.push(Check::new(name, measured, bound));
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(Check::passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.notes {
            writeln!(f, "suite={} note {n}", self.suite)?;
        }
        for c in &self.checks {
            writeln!(
                f,
                "suite={} check={} measured={:e} bound={} result={}",
                self.suite,
                c.name,
                c.measured,
                c.bound,
                if c.passed() { "pass" } else { "fail" }
            )?;
        }
        write!(
            f,
            "suite={} result={}",
            self.suite,
            if self.passed() { "pass" } else { "fail" }
        )
    }
}

/// Runs a suite by name; `None` for an unknown name.
pub fn run_suite(name: &str) -> Option<Report> {
    Some(match name {
        "patch" => patch_test(),
        "sipg" => sipg_equivalence(),
        "limits" => cohesive_limits(),
        "convergence" => convergence(),
        "cohesive-grad" => cohesive_gradient(),
        "dissipation" => dissipation(),
        "symmetry" => symmetry(),
        _ => return None,
    })
}

/// Tags in generator order: bottom, right, top, left.
fn rect_model(
    rect: RectSpec,
    regions: &[Region],
    materials: MaterialField,
    kinds: [BoundaryKind; 4],
    masks: BTreeMap<u32, [bool; 2]>,
) -> DgModel {
    let kinds: BTreeMap<u32, BoundaryKind> = [tags::BOTTOM, tags::RIGHT, tags::TOP, tags::LEFT]
        .into_iter()
        .zip(kinds)
        .collect();
    let mesh = generate_rect(&rect, regions)
        .and_then(|d| d.build(&kinds))
        .expect("valid rectangle");
    DgModel::new(mesh, materials, 10.0, masks).expect("valid model")
}

fn square(n: usize, crossed: bool) -> RectSpec {
    RectSpec {
        width: 1.0,
        height: 1.0,
        nx: n,
        ny: n,
        crossed,
    }
}

/// Unit-square bar under uniaxial traction with one vertical column of
/// interface faces of constant compliance `beta`. The exact solution is
/// affine on either side with a jump `beta * sigma0` in `u_x`.
pub fn patch_test() -> Report {
    let (e, nu, sigma0, beta) = (100.0, 0.3, 1.0, 0.01);
    let mat = IsotropicElastic::new(e, nu).expect("valid material");
    let masks = BTreeMap::from([(tags::LEFT, [true, false]), (tags::BOTTOM, [false, true])]);
    use BoundaryKind::{Dirichlet, Neumann};
    let model = rect_model(
        square(4, false),
        &[],
        MaterialField::uniform([0], mat),
        [Dirichlet, Neumann, Neumann, Dirichlet],
        masks,
    );
    let mesh = model.mesh();
    let interface: Vec<usize> = mesh
        .interior_faces()
        .filter(|&f| {
            let face = mesh.face(f);
            (mesh.face_midpoint(f).x - 0.5).abs() < 1e-12 && face.normal.x.abs() > 1.0 - 1e-12
        })
        .collect();
    let compliance: Vec<SecantCompliance> = (0..mesh.n_faces())
        .map(|f| {
            if interface.contains(&f) {
                SecantCompliance::Diagonal {
                    normal: Some(beta),
                    tangential: Some(beta),
                }
            } else {
                SecantCompliance::Zero
            }
        })
        .collect();
    let load = LoadCase::new()
        .constant_displacement(tags::LEFT, Vector2::zeros())
        .constant_displacement(tags::BOTTOM, Vector2::zeros())
        .constant_traction(tags::RIGHT, Vector2::new(sigma0, 0.0));
    let ops = model.face_operators(&compliance).expect("admissible compliance");
    let system = model.assemble(&load, &ops).expect("complete load");
    let u = linear_solve(&system).expect("SPD system");

    let exx = sigma0 * (1.0 - nu * nu) / e;
    let eyy = -nu * (1.0 + nu) * sigma0 / e;
    let exact = |p: &Point2<f64>, right: bool| {
        Vector2::new(exx * p.x + if right { beta * sigma0 } else { 0.0 }, eyy * p.y)
    };
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for t in 0..mesh.n_triangles() {
        let right = mesh.centroid(t).x > 0.5;
        for v in mesh.vertices(t) {
            let ex = exact(&v, right);
            err = err.max((model.evaluate(&u, t, &v) - ex).norm());
            scale = scale.max(ex.norm());
        }
    }
    let mut jump_err: f64 = 0.0;
    for &f in &interface {
        let face = mesh.face(f);
        let minus = face.minus.expect("interior face");
        let (l, r) = if mesh.centroid(face.plus).x < 0.5 {
            (face.plus, minus)
        } else {
            (minus, face.plus)
        };
        for s in [0.0, 0.5, 1.0] {
            let p = mesh.face_point(f, s);
            let open = model.evaluate(&u, r, &p).x - model.evaluate(&u, l, &p).x;
            jump_err = jump_err.max((open - beta * sigma0).abs() / (beta * sigma0));
        }
    }
    let mut r = Report::new("patch");
    r.notes.push(format!("interface_faces={}", interface.len()));
    r.check("interface_jump_rel_error", jump_err, Bound::AtMost(1e-10));
    r.check("affine_solution_rel_error", err / scale, Bound::AtMost(1e-10));
    r
}

/// Independent dense assembly of the symmetric interior penalty bilinear
/// form, with the penalty `gamma0 (2 mu + 3 lambda)` (largest neighbour) over
/// `h_F` on interior and Dirichlet faces.
pub fn sipg_reference(model: &DgModel, gamma0: f64, e_nu: &BTreeMap<u32, (f64, f64)>) -> DMatrix<f64> {
    let mesh = model.mesh();
    let n = 6 * mesh.n_triangles();
    let mut a = DMatrix::zeros(n, n);
    let lame = |tag: u32| {
        let (e, nu) = e_nu[&tag];
        (e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu)))
    };
    // barycentric gradients and area of each triangle
    let geo: Vec<([Vector2<f64>; 3], f64, [Point2<f64>; 3])> = (0..mesh.n_triangles())
        .map(|t| {
            let x = mesh.vertices(t);
            let det = (x[1].x - x[0].x) * (x[2].y - x[0].y) - (x[2].x - x[0].x) * (x[1].y - x[0].y);
            let g = |i: usize| {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                Vector2::new(x[j].y - x[k].y, x[k].x - x[j].x) / det
            };
            ([g(0), g(1), g(2)], 0.5 * det.abs(), x)
        })
        .collect();
    // sigma(phi_{i,c}) for the shape function of vertex i, component c
    let basis_stress = |t: usize, i: usize, c: usize| -> Matrix2<f64> {
        let (lam, mu) = lame(mesh.triangles()[t].region);
        let mut grad = Matrix2::zeros();
        grad.set_row(c, &geo[t].0[i].transpose());
        let eps = (grad + grad.transpose()) * 0.5;
        Matrix2::identity() * (lam * eps.trace()) + eps * (2.0 * mu)
    };
    let value = |t: usize, p: &Point2<f64>| -> [f64; 3] {
        let (g, _, x) = &geo[t];
        let d = p - x[0];
        [1.0 + g[0].dot(&d), g[1].dot(&d), g[2].dot(&d)]
    };
    for t in 0..mesh.n_triangles() {
        for i in 0..3 {
            for ci in 0..2 {
                let si = basis_stress(t, i, ci);
                for j in 0..3 {
                    for cj in 0..2 {
                        let mut gj = Matrix2::zeros();
                        gj.set_row(cj, &geo[t].0[j].transpose());
                        let ej = (gj + gj.transpose()) * 0.5;
                        a[(6 * t + 2 * i + ci, 6 * t + 2 * j + cj)] += si.component_mul(&ej).sum() * geo[t].1;
                    }
                }
            }
        }
    }
    let gauss = [(0.5 - 0.5 / 3f64.sqrt(), 0.5), (0.5 + 0.5 / 3f64.sqrt(), 0.5)];
    for face in mesh.faces() {
        if face.kind == FaceKind::Neumann {
            continue;
        }
        let [pa, pb] = face.nodes.map(|k| mesh.nodes()[k]);
        let len = (pb - pa).norm();
        let mut normal = Vector2::new(pb.y - pa.y, pa.x - pb.x) / len;
        let cp = mesh.centroid(face.plus);
        if normal.dot(&(cp - pa)) > 0.0 {
            normal = -normal;
        }
        let sides: Vec<(usize, f64)> = match face.minus {
            Some(m) => vec![(face.plus, 1.0), (m, -1.0)],
            None => vec![(face.plus, 1.0)],
        };
        let weight = if face.minus.is_some() { 0.5 } else { 1.0 };
        let area_sum: f64 = sides.iter().map(|&(t, _)| geo[t].1).sum();
        let h_f = area_sum / (sides.len() as f64 * len);
        let gamma = sides
            .iter()
            .map(|&(t, _)| {
                let (lam, mu) = lame(mesh.triangles()[t].region);
                gamma0 * (2.0 * mu + 3.0 * lam)
            })
            .fold(0.0, f64::max);
        for &(s, w) in &gauss {
            let p = pa + (pb - pa) * s;
            let jw = w * len;
            for &(tv, sv) in &sides {
                let phi_v = value(tv, &p);
                for &(tu, su) in &sides {
                    let phi_u = value(tu, &p);
                    for i in 0..3 {
                        for ci in 0..2 {
                            let row = 6 * tv + 2 * i + ci;
                            let flux_v = basis_stress(tv, i, ci) * normal * weight;
                            for j in 0..3 {
                                for cj in 0..2 {
                                    let col = 6 * tu + 2 * j + cj;
                                    let flux_u = basis_stress(tu, j, cj) * normal * weight;
                                    // [[v]] = sv phi_v e_ci, [[u]] = su phi_u e_cj
                                    let jv = sv * phi_v[i];
                                    let ju = su * phi_u[j];
                                    let mut entry = -flux_u[ci] * jv - flux_v[cj] * ju;
                                    if ci == cj {
                                        entry += gamma / h_f * ju * jv;
                                    }
                                    a[(row, col)] += entry * jw;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    a
}

/// With zero compliance on every face the discrete operator is the standard
/// symmetric interior penalty method.
pub fn sipg_equivalence() -> Report {
    let e_nu = BTreeMap::from([(0, (10.0, 0.3)), (1, (70.0, 0.2))]);
    let mut mats = MaterialField::new();
    for (&t, &(e, nu)) in &e_nu {
        mats.insert(t, IsotropicElastic::new(e, nu).expect("valid material"));
    }
    let region = Region {
        shape: Shape::Rect {
            min: Point2::new(0.6, -1.0),
            max: Point2::new(2.0, 2.0),
        },
        tag: 1,
    };
    use BoundaryKind::{Dirichlet, Neumann};
    let rect = RectSpec {
        width: 1.25,
        height: 1.0,
        nx: 5,
        ny: 4,
        crossed: true,
    };
    let model = rect_model(rect, &[region], mats, [Dirichlet, Dirichlet, Neumann, Dirichlet], BTreeMap::new());
    let compliance = vec![SecantCompliance::Zero; model.mesh().n_faces()];
    let ops = model.face_operators(&compliance).expect("zero compliance");
    let ours = model.assemble_matrix(&ops).to_dense();
    let reference = sipg_reference(&model, model.gamma0(), &e_nu);
    let diff = (&ours - &reference).abs().max();
    let scale = reference.abs().max();
    let mut r = Report::new("sipg");
    r.notes.push(format!("elements={}", model.mesh().n_triangles()));
    r.notes.push(format!("max_abs_difference={diff:e}"));
    r.notes.push(format!("max_abs_entry={scale:e}"));
    r.check("max_norm_rel_difference", diff / scale, Bound::AtMost(1e-12));
    r
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Interface stiffness against the cohesive compliance as the face size
/// shrinks, plus the two end regimes of the blended operator.
pub fn cohesive_limits() -> Report {
    let mut r = Report::new("limits");
    let mat = IsotropicElastic::new(10.0, 0.45).expect("valid material");
    let gamma = penalty_gamma(&mat, 10.0).expect("positive penalty");
    let theta: f64 = 0.4;
    let n = Vector2::new(theta.cos(), theta.sin());
    let t = Vector2::new(-n.y, n.x);
    let rot = Matrix2::from_columns(&[n, t]);
    let k = Matrix2::new(0.03, 0.01, 0.01, 0.02);
    let k_inv_global = rot * k.try_inverse().expect("invertible") * rot.transpose();
    let hs: Vec<f64> = (0..5).map(|i| 0.1 / 2f64.powi(i)).collect();
    let errs: Vec<f64> = hs
        .iter()
        .map(|h| {
            let op = FaceOperator::cohesive(&SecantCompliance::Full(k), h / gamma, &n, &t);
            (op.s - k_inv_global).norm() / k_inv_global.norm()
        })
        .collect();
    for (h, e) in hs.iter().zip(&errs) {
        r.notes.push(format!("h_f={h} rel_error={e:e}"));
    }
    r.check("cohesive_limit_slope", log_slope(&hs, &errs), Bound::Within(0.9, 1.1));
    // K = 0: plain penalty gamma / h_F on the full jump
    let h = 0.05;
    let zero = FaceOperator::cohesive(&SecantCompliance::Zero, h / gamma, &n, &t);
    let pen = (zero.s - Matrix2::identity() * (gamma / h)).norm() / (gamma / h);
    r.check("zero_compliance_penalty_rel_error", pen, Bound::AtMost(1e-14));
    // unbounded compliance: the face carries nothing
    let free = FaceOperator::cohesive(&SecantCompliance::FREE, h / gamma, &n, &t);
    r.check("free_face_operator_norm", free.s.norm() + free.p.norm(), Bound::AtMost(0.0));
    r
}

/// Smooth manufactured displacement with its gradient and body force.
pub struct Manufactured {
    pub lambda: f64,
    pub mu: f64,
}

impl Manufactured {
    const A: f64 = 0.3;
    const B: f64 = -0.2;

    pub fn u(&self, p: &Point2<f64>) -> Vector2<f64> {
        let s = (PI * p.x).sin() * (PI * p.y).sin();
        Vector2::new(Self::A * s + 0.1 + 0.2 * p.x - 0.1 * p.y, Self::B * s - 0.05 + 0.1 * p.x + 0.3 * p.y)
    }

    /// `grad[(i, j)] = d u_i / d x_j`.
    pub fn grad(&self, p: &Point2<f64>) -> Matrix2<f64> {
        let sx = PI * (PI * p.x).cos() * (PI * p.y).sin();
        let sy = PI * (PI * p.x).sin() * (PI * p.y).cos();
        Matrix2::new(Self::A * sx + 0.2, Self::A * sy - 0.1, Self::B * sx + 0.1, Self::B * sy + 0.3)
    }

    /// `f = -div sigma = -(mu lap u + (lambda + mu) grad div u)`.
    pub fn body_force(&self, p: &Point2<f64>) -> Vector2<f64> {
        let s = (PI * p.x).sin() * (PI * p.y).sin();
        let c = (PI * p.x).cos() * (PI * p.y).cos();
        let pi2 = PI * PI;
        let lap = Vector2::new(Self::A, Self::B) * (-2.0 * pi2 * s);
        let grad_div = Vector2::new(
            -Self::A * pi2 * s + Self::B * pi2 * c,
            Self::A * pi2 * c - Self::B * pi2 * s,
        );
        -(lap * self.mu + grad_div * (self.lambda + self.mu))
    }
}

/// Errors `(h, L2, energy)` on uniform meshes with `n` cells per side.
pub fn convergence_errors(ns: &[usize]) -> Vec<(f64, f64, f64)> {
    let mat = IsotropicElastic::new(10.0, 0.3).expect("valid material");
    let ms = std::sync::Arc::new(Manufactured {
        lambda: mat.lambda,
        mu: mat.mu,
    });
    ns.iter()
        .map(|&n| {
            let model = rect_model(
                square(n, false),
                &[],
                MaterialField::uniform([0], mat),
                [BoundaryKind::Dirichlet; 4],
                BTreeMap::new(),
            );
            let m = ms.clone();
            let mut load = LoadCase::new().body_force(move |p| m.body_force(p));
            for tag in [tags::BOTTOM, tags::RIGHT, tags::TOP, tags::LEFT] {
                let m = ms.clone();
                load = load.displacement(tag, move |p| m.u(p));
            }
            let compliance = vec![SecantCompliance::Zero; model.mesh().n_faces()];
            let ops = model.face_operators(&compliance).expect("zero compliance");
            let system = model.assemble(&load, &ops).expect("complete load");
            let u = linear_solve(&system).expect("SPD system");
            let l2 = model.l2_error(&u, |p| ms.u(p));
            let en = model.energy_error(&u, |p| ms.grad(p));
            (1.0 / n as f64, l2, en)
        })
        .collect()
}

pub fn convergence() -> Report {
    let mut r = Report::new("convergence");
    let data = convergence_errors(&[8, 16, 32, 64]);
    for w in data.windows(2) {
        r.notes.push(format!(
            "h={} l2_rate={:.4} energy_rate={:.4}",
            w[1].0,
            (w[0].1 / w[1].1).log2(),
            (w[0].2 / w[1].2).log2()
        ));
    }
    for (h, l2, en) in &data {
        r.notes.push(format!("h={h} l2_error={l2:e} energy_error={en:e}"));
    }
    let h: Vec<f64> = data.iter().map(|d| d.0).collect();
    let l2: Vec<f64> = data.iter().map(|d| d.1).collect();
    let en: Vec<f64> = data.iter().map(|d| d.2).collect();
    r.check("l2_rate", log_slope(&h, &l2), Bound::AtLeast(1.9));
    r.check("energy_rate", log_slope(&h, &en), Bound::AtLeast(0.9));
    r
}

/// `(u_n, u_t)` with the given effective separation and mode mix.
fn opening_at(lambda: f64, phi: f64, p: &CohesiveParams) -> (f64, f64) {
    let (a, b) = (p.u_nc(), p.u_tc());
    // mode mix is atan2(u_nc u_n, u_tc u_t); pick the ray, then scale
    let (dn, dt) = (phi.sin() / a, phi.cos() / b);
    let scale = lambda / ((dn / a).powi(2) + (dt / b).powi(2)).sqrt();
    (dn * scale, dt * scale)
}

/// Largest relative difference between the law's tractions and central
/// differences of the energy surface over an interior `(lambda, phi)` grid.
pub fn gradient_error(params: &CohesiveParams, n: usize) -> f64 {
    let energy = |u_n: f64, u_t: f64| {
        let lam = czdg_core::cohesive::effective_separation(u_n, u_t, params);
        let phi = czdg_core::cohesive::mode_mix(u_n, u_t, params).unwrap_or(FRAC_PI_2);
        gamma_surface(lam, phi, params)
    };
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let lam = (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let phi = (j as f64 + 0.5) / n as f64 * FRAC_PI_2;
            let (u_n, u_t) = opening_at(lam, phi, params);
            let state = FaceState {
                lambda_max: lam,
                failed: false,
            };
            let (t_n, t_t) = tractions(u_n, u_t, &state, params).expect("softening point");
            let h = 1e-7 * params.u_nc().min(params.u_tc());
            let fd_n = (energy(u_n + h, u_t) - energy(u_n - h, u_t)) / (2.0 * h);
            let fd_t = (energy(u_n, u_t + h) - energy(u_n, u_t - h)) / (2.0 * h);
            let scale = t_n.hypot(t_t);
            worst = worst.max((t_n - fd_n).abs() / scale).max((t_t - fd_t).abs() / scale);
        }
    }
    worst
}

pub fn cohesive_gradient() -> Report {
    let mut r = Report::new("cohesive-grad");
    let law = |s, u| PureModeLaw::new(s, u).expect("valid law");
    let equal = CohesiveParams::new(law(1.0, 0.02), law(1.0, 0.02));
    let mixed = CohesiveParams::new(law(1.0, 0.02), law(0.7, 0.03));
    r.check("equal_modes_max_rel_error", gradient_error(&equal, 20), Bound::AtMost(1e-6));
    r.check("unequal_modes_max_rel_error", gradient_error(&mixed, 20), Bound::AtMost(1e-6));
    r
}

/// Work and solver-reported dissipation of a bar pulled apart at a single
/// cohesive face, with the expected fracture energy times face length.
#[derive(Debug, Clone, PartialEq)]
pub struct BarDissipation {
    pub work: f64,
    pub dissipated: f64,
    pub expected: f64,
    pub peak_force: f64,
    pub final_force: f64,
}

pub fn bar_dissipation(sigma_max: f64, u_c: f64, steps: usize) -> BarDissipation {
    let mat = IsotropicElastic::new(1e4, 0.0).expect("valid material");
    let masks = BTreeMap::from([
        (tags::LEFT, [true, false]),
        (tags::BOTTOM, [false, true]),
        (tags::RIGHT, [true, false]),
    ]);
    use BoundaryKind::{Dirichlet, Neumann};
    let rect = RectSpec {
        width: 2.0,
        height: 1.0,
        nx: 2,
        ny: 1,
        crossed: false,
    };
    let model = rect_model(rect, &[], MaterialField::uniform([0], mat), [Dirichlet, Dirichlet, Neumann, Dirichlet], masks);
    let mesh = model.mesh();
    let face: BTreeSet<usize> = mesh
        .interior_faces()
        .filter(|&f| (mesh.face_midpoint(f).x - 1.0).abs() < 1e-12 && mesh.face(f).normal.x.abs() > 0.5)
        .collect();
    assert_eq!(face.len(), 1, "one vertical face at mid-length");
    let length = mesh.face(*face.first().expect("one face")).length;
    let law = PureModeLaw::new(sigma_max, u_c).expect("valid law");
    let problem = QuasiStaticProblem {
        model,
        cohesive: Some(CohesiveParams::new(law, law)),
        cohesive_faces: Some(face),
        initial_failed: BTreeSet::new(),
        load: Box::new(|d| {
            LoadCase::new()
                .constant_displacement(tags::LEFT, Vector2::zeros())
                .constant_displacement(tags::BOTTOM, Vector2::zeros())
                .constant_displacement(tags::RIGHT, Vector2::new(d, 0.0))
        }),
        reaction_tag: Some(tags::RIGHT),
        settings: NonlinearSettings {
            max_iter: 500,
            tol_rel: 1e-9,
            ..NonlinearSettings::default()
        },
    };
    let schedule = LoadSchedule::uniform(1.5 * u_c, steps).expect("valid schedule");
    let (results, error) = problem.run_quasi_static(&schedule, |_| {});
    assert!(error.is_none(), "bar run failed: {error:?}");
    let mut work = 0.0;
    let mut prev = (0.0, 0.0);
    for s in &results {
        work += 0.5 * (s.reaction.x + prev.1) * (s.delta - prev.0);
        prev = (s.delta, s.reaction.x);
    }
    BarDissipation {
        work,
        dissipated: results.iter().map(|s| s.dissipated).sum(),
        expected: 0.5 * sigma_max * u_c * length,
        peak_force: results.iter().map(|s| s.reaction.x).fold(0.0, f64::max),
        final_force: prev.1,
    }
}

pub fn dissipation() -> Report {
    let mut r = Report::new("dissipation");
    let b = bar_dissipation(1.0, 0.02, 300);
    r.notes.push(format!("work={:e} dissipated={:e} expected={:e}", b.work, b.dissipated, b.expected));
    r.notes.push(format!("peak_force={} final_force={:e}", b.peak_force, b.final_force));
    r.check("work_rel_error", (b.work - b.expected).abs() / b.expected, Bound::AtMost(0.02));
    r.check("dissipated_rel_error", (b.dissipated - b.expected).abs() / b.expected, Bound::AtMost(0.02));
    r
}

/// Rectangles used for the symmetry and definiteness checks: name, mesh,
/// inclusions and per-region `(E, nu)`.
pub fn test_meshes() -> Vec<(&'static str, RectSpec, Vec<Region>, BTreeMap<u32, (f64, f64)>)> {
    let homogeneous = BTreeMap::from([(0, (10.0, 0.3))]);
    let stiff = BTreeMap::from([(0, (10.0, 0.45)), (1, (1000.0, 0.45))]);
    let disc = |x, y, r| Region {
        shape: Shape::Circle {
            center: Point2::new(x, y),
            radius: r,
        },
        tag: 1,
    };
    vec![
        ("square_4", square(4, false), vec![], homogeneous.clone()),
        ("square_crossed_5", square(5, true), vec![], homogeneous),
        (
            "strip_8x2",
            RectSpec {
                width: 4.0,
                height: 1.0,
                nx: 8,
                ny: 2,
                crossed: false,
            },
            vec![],
            BTreeMap::from([(0, (1.0, 0.0))]),
        ),
        (
            "inclusion_crossed_5x10",
            RectSpec {
                width: 1.0,
                height: 2.0,
                nx: 5,
                ny: 10,
                crossed: true,
            },
            vec![disc(0.5, 1.0, 0.3)],
            stiff,
        ),
    ]
}

fn materials_of(e_nu: &BTreeMap<u32, (f64, f64)>) -> MaterialField {
    let mut m = MaterialField::new();
    for (&t, &(e, nu)) in e_nu {
        m.insert(t, IsotropicElastic::new(e, nu).expect("valid material"));
    }
    m
}

/// Deterministic mix of bonded, softening, anisotropic and failed faces.
pub fn mixed_compliance(n_faces: usize) -> Vec<SecantCompliance> {
    (0..n_faces)
        .map(|f| match f % 5 {
            0 => SecantCompliance::Zero,
            1 => SecantCompliance::Diagonal {
                normal: Some(0.001 * (1 + f % 7) as f64),
                tangential: Some(0.002),
            },
            2 => SecantCompliance::Diagonal {
                normal: None,
                tangential: Some(0.01),
            },
            3 => SecantCompliance::Full(Matrix2::new(0.02, 0.005, 0.005, 0.01)),
            _ => SecantCompliance::FREE,
        })
        .collect()
}

pub fn symmetry() -> Report {
    let mut r = Report::new("symmetry");
    let mut worst_sym: f64 = 0.0;
    let mut worst_mixed: f64 = 0.0;
    let mut factorized = 0usize;
    let mut min_eig = f64::INFINITY;
    let meshes = test_meshes();
    for (name, rect, regions, e_nu) in &meshes {
        let model = rect_model(*rect, regions, materials_of(e_nu), [BoundaryKind::Dirichlet; 4], BTreeMap::new());
        let zero = vec![SecantCompliance::Zero; model.mesh().n_faces()];
        let a = model.assemble_matrix(&model.face_operators(&zero).expect("zero compliance"));
        worst_sym = worst_sym.max(a.symmetry_error());
        if cholesky_factorizes(&a) {
            factorized += 1;
        }
        let dense = a.to_dense();
        let sym = (&dense + dense.transpose()) * 0.5;
        let scale = a.max_abs();
        let eig = sym.symmetric_eigenvalues().min() / scale;
        min_eig = min_eig.min(eig);
        r.notes.push(format!("mesh={name} elements={} min_eigenvalue_rel={eig:e}", model.mesh().n_triangles()));
        let mixed = model
            .face_operators(&mixed_compliance(model.mesh().n_faces()))
            .expect("admissible compliance");
        worst_mixed = worst_mixed.max(model.assemble_matrix(&mixed).symmetry_error());
    }
    r.check("bonded_symmetry_rel_error", worst_sym, Bound::AtMost(1e-12));
    r.check("mixed_state_symmetry_rel_error", worst_mixed, Bound::AtMost(1e-12));
    r.check("meshes_not_factorized", (meshes.len() - factorized) as f64, Bound::AtMost(0.0));
    r.check("min_eigenvalue_rel", min_eig, Bound::AtLeast(f64::MIN_POSITIVE));
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 0.5, 0.25];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        assert!((log_slope(&x, &y) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bounds() {
        assert!(Check::new("a", 1.0, Bound::AtMost(1.0)).passed());
        assert!(!Check::new("a", f64::NAN, Bound::AtMost(1.0)).passed());
        assert!(!Check::new("a", 0.5, Bound::Within(0.9, 1.1)).passed());
        assert!(Check::new("a", 2.0, Bound::AtLeast(1.9)).passed());
        assert!(!Report::new("empty").passed());
    }

    #[test]
    fn manufactured_force_matches_finite_differences() {
        let m = Manufactured { lambda: 1.7, mu: 0.9 };
        let p = Point2::new(0.31, 0.77);
        let h = 1e-4;
        // div sigma by central differences of the exact stress
        let sigma = |q: &Point2<f64>| {
            let g = m.grad(q);
            let e = (g + g.transpose()) * 0.5;
            Matrix2::identity() * (m.lambda * e.trace()) + e * (2.0 * m.mu)
        };
        let dx = (sigma(&Point2::new(p.x + h, p.y)) - sigma(&Point2::new(p.x - h, p.y))) / (2.0 * h);
        let dy = (sigma(&Point2::new(p.x, p.y + h)) - sigma(&Point2::new(p.x, p.y - h))) / (2.0 * h);
        let div = Vector2::new(dx[(0, 0)] + dy[(0, 1)], dx[(1, 0)] + dy[(1, 1)]);
        assert!((m.body_force(&p) + div).norm() < 1e-6);
        // gradient against the displacement
        let du = (m.u(&Point2::new(p.x + h, p.y)) - m.u(&Point2::new(p.x - h, p.y))) / (2.0 * h);
        assert!((m.grad(&p).column(0) - du).norm() < 1e-6);
    }

    #[test]
    fn opening_hits_requested_lambda_and_phi() {
        let law = |s, u| PureModeLaw::new(s, u).unwrap();
        let p = CohesiveParams::new(law(1.0, 0.02), law(0.7, 0.03));
        let (u_n, u_t) = opening_at(0.4, 0.3, &p);
        let lam = czdg_core::cohesive::effective_separation(u_n, u_t, &p);
        let phi = czdg_core::cohesive::mode_mix(u_n, u_t, &p).unwrap();
        assert!((lam - 0.4).abs() < 1e-12 && (phi - 0.3).abs() < 1e-12);
    }
}
