//! Load stepping on small problems with known answers.

use std::collections::{BTreeMap, BTreeSet};

use czdg_core::cohesive::{CohesiveParams, PureModeLaw};
use czdg_core::dg::{DgModel, LoadCase};
use czdg_core::material::{IsotropicElastic, MaterialField};
use czdg_core::mesh::{generate_rect, tags, BoundaryKind, RectSpec};
use czdg_core::solver::{LoadSchedule, NonlinearSettings, QuasiStaticProblem, StepResult};
use nalgebra::Vector2;

const SIGMA: f64 = 1.0;
const U_C: f64 = 0.02;

/// 2 x 1 bar, rollers on left/bottom, pulled at the right edge, with one
/// cohesive face across the middle. Stiff bulk so the face dominates.
fn bar(initial_failed: bool, cohesive: bool) -> QuasiStaticProblem {
    use BoundaryKind::{Dirichlet, Neumann};
    let kinds = BTreeMap::from([
        (tags::BOTTOM, Dirichlet),
        (tags::RIGHT, Dirichlet),
        (tags::TOP, Neumann),
        (tags::LEFT, Dirichlet),
    ]);
    let spec = RectSpec {
        width: 2.0,
        height: 1.0,
        nx: 2,
        ny: 1,
        crossed: false,
    };
    let mesh = generate_rect(&spec, &[]).unwrap().build(&kinds).unwrap();
    let mid: BTreeSet<usize> = mesh
        .interior_faces()
        .filter(|&f| (mesh.face_midpoint(f).x - 1.0).abs() < 1e-12 && mesh.face(f).normal.x.abs() > 0.5)
        .collect();
    assert_eq!(mid.len(), 1);
    let masks = BTreeMap::from([
        (tags::LEFT, [true, false]),
        (tags::BOTTOM, [false, true]),
        (tags::RIGHT, [true, false]),
    ]);
    let materials = MaterialField::uniform([0], IsotropicElastic::new(1e4, 0.0).unwrap());
    let model = DgModel::new(mesh, materials, 10.0, masks).unwrap();
    let law = PureModeLaw::new(SIGMA, U_C).unwrap();
    QuasiStaticProblem {
        model,
        cohesive: cohesive.then(|| CohesiveParams::new(law, law)),
        cohesive_faces: Some(mid.clone()),
        initial_failed: if initial_failed { mid } else { BTreeSet::new() },
        load: Box::new(|d| {
            LoadCase::new()
                .constant_displacement(tags::LEFT, Vector2::zeros())
                .constant_displacement(tags::BOTTOM, Vector2::zeros())
                .constant_displacement(tags::RIGHT, Vector2::new(d, 0.0))
        }),
        reaction_tag: Some(tags::RIGHT),
        settings: NonlinearSettings {
            tol_rel: 1e-9,
            max_iter: 500,
            ..NonlinearSettings::default()
        },
    }
}

fn run(problem: &QuasiStaticProblem, deltas: Vec<f64>) -> Vec<StepResult> {
    let (steps, error) = problem.run_quasi_static(&LoadSchedule::new(deltas).unwrap(), |_| {});
    assert!(error.is_none(), "{error:?}");
    steps
}

#[test]
fn elastic_response_is_linear_and_takes_one_iteration() {
    let problem = bar(false, false);
    let steps = run(&problem, vec![0.001, 0.002, 0.005, 0.01]);
    let k = steps[0].reaction.x / steps[0].delta;
    assert!(k > 0.0);
    for s in &steps {
        assert_eq!(s.iterations, 1);
        assert!((s.reaction.x / s.delta - k).abs() < 1e-9 * k);
        assert!(s.failed_faces.is_empty());
        assert_eq!(s.dissipated, 0.0);
    }
    // a bonded face transmits the bulk stiffness: E * height / length, up
    // to the O(1/gamma) softness of the penalty coupling
    assert!((k - 1e4 / 2.0).abs() / (1e4 / 2.0) < 0.05, "k = {k}");
}

#[test]
fn pre_failed_face_carries_nothing() {
    for cohesive in [true, false] {
        let steps = run(&bar(true, cohesive), vec![0.01, 0.05]);
        for s in &steps {
            assert!(s.reaction.x.abs() < 1e-9, "{}", s.reaction.x);
            assert_eq!(s.failed_faces.len(), 1);
        }
    }
}

#[test]
fn bar_peaks_at_strength_and_fails_after_critical_opening() {
    let problem = bar(false, true);
    let deltas: Vec<f64> = (1..=150).map(|k| 1.5 * U_C * k as f64 / 150.0).collect();
    let steps = run(&problem, deltas);
    let peak = steps.iter().map(|s| s.reaction.x).fold(0.0, f64::max);
    // unit face length: the peak force is the strength
    assert!((peak - SIGMA).abs() < 0.03 * SIGMA, "peak {peak}");
    let last = steps.last().unwrap();
    assert!(last.reaction.x.abs() < 1e-6);
    assert_eq!(last.failed_faces.len(), 1);
    let dissipated: f64 = steps.iter().map(|s| s.dissipated).sum();
    let g_c = 0.5 * SIGMA * U_C;
    assert!((dissipated - g_c).abs() < 0.02 * g_c, "dissipated {dissipated}");
}

#[test]
fn unloading_is_elastic_towards_the_origin() {
    let problem = bar(false, true);
    let up: Vec<f64> = (1..=40).map(|k| 0.5 * U_C * k as f64 / 40.0).collect();
    let mut deltas = up.clone();
    deltas.extend([0.4, 0.3, 0.2, 0.1].map(|f| f * U_C));
    deltas.extend([0.2, 0.3, 0.4, 0.5].map(|f| f * U_C));
    // the schedule type only accepts nondecreasing levels, so step through
    // the solver directly for the unload and reload legs
    assert!(LoadSchedule::new(deltas.clone()).is_err());

    let mut solver = czdg_core::solver::LinearSolver::new();
    let mut state = problem.initial_state();
    let mut results = Vec::new();
    for (i, &d) in deltas.iter().enumerate() {
        let (next, r) = problem.load_step(state, i + 1, d, &mut solver).unwrap();
        results.push(r);
        state = next;
    }
    let at_turn = &results[up.len() - 1];
    let secant = at_turn.reaction.x / at_turn.delta;
    let before: f64 = results[..up.len()].iter().map(|s| s.dissipated).sum();
    assert!(before > 0.0);
    // the last reload step returns to the previous maximum opening, which
    // the iteration only hits to within its tolerance
    let tol = problem.settings.tol_rel;
    for r in &results[up.len()..] {
        assert!(r.dissipated.abs() < 10.0 * tol * before, "dissipation while unloading: {}", r.dissipated);
        let k = r.reaction.x / r.delta;
        assert!((k - secant).abs() < 1e-3 * secant, "secant {k} vs {secant}");
    }
    // back at the turning point the load curve continues where it left off
    let back = results.last().unwrap();
    assert!((back.reaction.x - at_turn.reaction.x).abs() < 1e-3 * at_turn.reaction.x.abs());
}

#[test]
fn reruns_are_bitwise_identical() {
    let deltas: Vec<f64> = (1..=30).map(|k| 1.2 * U_C * k as f64 / 30.0).collect();
    let a = run(&bar(false, true), deltas.clone());
    let b = run(&bar(false, true), deltas);
    assert_eq!(a, b);
}

#[test]
fn empty_schedule_runs_no_steps() {
    let (steps, error) = bar(false, true).run_quasi_static(&LoadSchedule::default(), |_| panic!("no steps"));
    assert!(steps.is_empty() && error.is_none());
}
