//! Structural properties of the assembled DG operator.

use std::collections::BTreeMap;

use czdg_core::cohesive::SecantCompliance;
use czdg_core::dg::{DgModel, LoadCase};
use czdg_core::material::{IsotropicElastic, MaterialField};
use czdg_core::mesh::{generate_rect, tags, BoundaryKind, FaceKind, Mesh, RectSpec, Region, Shape};
use czdg_core::solver::{cholesky_factorizes, linear_solve};
use nalgebra::{Matrix2, Point2, Vector2};
use proptest::prelude::*;

fn mesh(nx: usize, ny: usize, crossed: bool, dirichlet: &[u32]) -> Mesh {
    let kinds: BTreeMap<u32, BoundaryKind> = (1..=4)
        .map(|t| {
            let k = if dirichlet.contains(&t) {
                BoundaryKind::Dirichlet
            } else {
                BoundaryKind::Neumann
            };
            (t, k)
        })
        .collect();
    let spec = RectSpec {
        width: 1.0,
        height: 1.0,
        nx,
        ny,
        crossed,
    };
    let disc = Region {
        shape: Shape::Circle {
            center: Point2::new(0.5, 0.5),
            radius: 0.3,
        },
        tag: 1,
    };
    generate_rect(&spec, &[disc]).unwrap().build(&kinds).unwrap()
}

fn materials() -> MaterialField {
    let mut m = MaterialField::new();
    m.insert(0, IsotropicElastic::new(10.0, 0.3).unwrap());
    m.insert(1, IsotropicElastic::new(400.0, 0.45).unwrap());
    m
}

fn model(mesh: Mesh) -> DgModel {
    DgModel::new(mesh, materials(), 10.0, BTreeMap::new()).unwrap()
}

/// Rigid motions are continuous, strain free and jump free, so the operator
/// with bonded faces and no Dirichlet data must annihilate them.
#[test]
fn rigid_motions_are_in_the_kernel() {
    let model = model(mesh(4, 3, true, &[]));
    let a = model.assemble_matrix(&model.rigid_operators());
    let fields: [fn(&Point2<f64>) -> Vector2<f64>; 3] = [
        |_| Vector2::new(1.0, 0.0),
        |_| Vector2::new(0.0, 1.0),
        |p| Vector2::new(-p.y, p.x),
    ];
    for field in fields {
        let mut r = vec![0.0; model.n_dofs()];
        for t in 0..model.mesh().n_triangles() {
            for (i, p) in model.mesh().vertices(t).iter().enumerate() {
                let v = field(p);
                r[model.dofs().dof(t, i, 0)] = v.x;
                r[model.dofs().dof(t, i, 1)] = v.y;
            }
        }
        let ar = a.matvec(&r);
        let worst = ar.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(worst < 1e-9 * a.max_abs(), "rigid mode residual {worst:e}");
    }
}

/// Affine Dirichlet data on the whole boundary is reproduced exactly. Both
/// regions get the same material so the exact field has no kink.
#[test]
fn affine_dirichlet_data_is_reproduced() {
    let exact = |p: &Point2<f64>| Vector2::new(0.1 + 0.02 * p.x - 0.03 * p.y, -0.05 + 0.01 * p.x + 0.04 * p.y);
    let model = DgModel::new(
        mesh(5, 4, false, &[1, 2, 3, 4]),
        MaterialField::uniform([0, 1], IsotropicElastic::new(10.0, 0.3).unwrap()),
        10.0,
        BTreeMap::new(),
    )
    .unwrap();
    let mut load = LoadCase::new();
    for tag in 1..=4 {
        load = load.displacement(tag, exact);
    }
    let system = model.assemble(&load, &model.rigid_operators()).unwrap();
    let u = linear_solve(&system).unwrap();
    assert!(model.l2_error(&u, exact) < 1e-11);
}

#[test]
fn flipping_faces_leaves_the_operator_unchanged() {
    let base = mesh(3, 3, true, &[tags::BOTTOM]);
    let mut flipped = base.clone();
    let interior: Vec<usize> = base.interior_faces().collect();
    for &f in interior.iter().step_by(3) {
        flipped.flip_face(f);
    }
    let n = base.n_faces();
    let mut compliance = vec![SecantCompliance::Zero; n];
    for (k, &f) in interior.iter().enumerate() {
        compliance[f] = match k % 4 {
            0 => SecantCompliance::Zero,
            1 => SecantCompliance::Diagonal {
                normal: Some(0.05),
                tangential: Some(0.2),
            },
            2 => SecantCompliance::Diagonal {
                normal: None,
                tangential: Some(0.1),
            },
            _ => SecantCompliance::Full(Matrix2::new(0.1, 0.02, 0.02, 0.3)),
        };
    }
    let (a, b) = (model(base), model(flipped));
    let ka = a.assemble_matrix(&a.face_operators(&compliance).unwrap()).to_dense();
    let kb = b.assemble_matrix(&b.face_operators(&compliance).unwrap()).to_dense();
    assert!((&ka - &kb).abs().max() < 1e-12 * kb.abs().max());

    // the jump changes sign with the orientation, the separation does not
    let mut u = vec![0.0; a.n_dofs()];
    for (i, v) in u.iter_mut().enumerate() {
        *v = ((i * 7919) % 101) as f64 / 100.0;
    }
    for &f in &interior {
        let (ja, jb) = (a.jump(&u, f, 0.5), b.jump(&u, f, 0.5));
        let same = a.mesh().face(f).plus == b.mesh().face(f).plus;
        let expect = if same { ja } else { -ja };
        assert!((jb - expect).norm() < 1e-14);
        let (sa, sb) = (a.separation(&u, f), b.separation(&u, f));
        // n and t both reverse with the jump
        assert!((sa.0 - sb.0).abs() < 1e-14);
        assert!((sa.1 - sb.1).abs() < 1e-14);
    }
}

#[test]
fn all_faces_failed_decouples_elements() {
    let model = model(mesh(2, 2, false, &[]));
    let compliance = vec![SecantCompliance::FREE; model.mesh().n_faces()];
    let a = model.assemble_matrix(&model.face_operators(&compliance).unwrap());
    for t in 0..model.mesh().n_triangles() {
        let own = model.dofs().element_dofs(t);
        for &r in &own {
            for c in 0..model.n_dofs() {
                if !own.contains(&c) {
                    assert_eq!(a.get(r, c), 0.0);
                }
            }
        }
    }
}

fn compliance_strategy() -> impl Strategy<Value = SecantCompliance> {
    prop_oneof![
        Just(SecantCompliance::Zero),
        (0.0..1.0f64, 0.0..1.0f64).prop_map(|(n, t)| SecantCompliance::Diagonal {
            normal: Some(n),
            tangential: Some(t),
        }),
        (0.0..1.0f64, 0.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b, c)| {
            // symmetric positive semidefinite by construction
            let l = Matrix2::new(a, 0.0, c * a.min(b), b);
            SecantCompliance::Full(l * l.transpose())
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_is_symmetric_positive_definite(states in prop::collection::vec(compliance_strategy(), 80)) {
        let model = model(mesh(3, 3, true, &[tags::BOTTOM]));
        let interior: Vec<usize> = model.mesh().interior_faces().collect();
        let mut compliance = vec![SecantCompliance::Zero; model.mesh().n_faces()];
        for (k, &f) in interior.iter().enumerate() {
            compliance[f] = states[k % states.len()];
        }
        let a = model.assemble_matrix(&model.face_operators(&compliance).unwrap());
        prop_assert!(a.symmetry_error() <= 1e-12 * a.max_abs());
        prop_assert!(cholesky_factorizes(&a));
        let eig = a.to_dense().symmetric_eigenvalues();
        prop_assert!(eig.min() > 0.0);
    }
}

#[test]
fn face_classification_counts() {
    let m = mesh(4, 2, false, &[tags::LEFT, tags::RIGHT]);
    assert_eq!(m.count(FaceKind::Dirichlet), 2 * 2);
    assert_eq!(m.count(FaceKind::Neumann), 2 * 4);
    // horizontal, vertical and diagonal interior edges
    assert_eq!(m.count(FaceKind::Interior), 4 + 3 * 2 + 8);
}
