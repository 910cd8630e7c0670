//! Post-processing of crack paths and load curves.

use std::collections::{BTreeSet, VecDeque};

use czdg_core::mesh::Mesh;
use czdg_core::solver::StepResult;

/// Whether the failed faces connect the initial crack to a boundary edge
/// carrying one of `free_tags`. Faces are linked through shared nodes.
pub fn reaches_free_edge(mesh: &Mesh, initial: &BTreeSet<usize>, failed: &BTreeSet<usize>, free_tags: &[u32]) -> bool {
    let mut boundary_nodes = BTreeSet::new();
    for face in mesh.faces() {
        if face.boundary_tag.is_some_and(|t| free_tags.contains(&t)) {
            boundary_nodes.extend(face.nodes);
        }
    }
    let mut by_node: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_nodes()];
    for &f in failed {
        for n in mesh.face(f).nodes {
            by_node[n].push(f);
        }
    }
    let mut seen: BTreeSet<usize> = initial.intersection(failed).copied().collect();
    let mut queue: VecDeque<usize> = seen.iter().copied().collect();
    while let Some(f) = queue.pop_front() {
        for n in mesh.face(f).nodes {
            if boundary_nodes.contains(&n) {
                return true;
            }
            for &g in &by_node[n] {
                if seen.insert(g) {
                    queue.push_back(g);
                }
            }
        }
    }
    false
}

/// Failed faces with both neighbours in one of the `regions`.
pub fn faces_inside(mesh: &Mesh, failed: &BTreeSet<usize>, regions: &[u32]) -> BTreeSet<usize> {
    failed
        .iter()
        .copied()
        .filter(|&f| {
            let face = mesh.face(f);
            let inside = |t: usize| regions.contains(&mesh.triangles()[t].region);
            inside(face.plus) && face.minus.is_some_and(inside)
        })
        .collect()
}

/// Index of the first step with more failed faces than the first step had
/// at the start, i.e. the first newly failed face.
pub fn first_new_failure(steps: &[StepResult], initial: usize) -> Option<usize> {
    steps.iter().position(|s| s.failed_faces.len() > initial)
}

/// Largest relative deviation of the secant stiffness `R / delta` from the
/// first step's value over `steps`. Zero-displacement steps are skipped.
pub fn linearity_deviation(steps: &[StepResult], axis: usize) -> f64 {
    let mut k0 = None;
    let mut worst: f64 = 0.0;
    for s in steps {
        if s.delta == 0.0 {
            continue;
        }
        let k = s.reaction[axis] / s.delta;
        match k0 {
            None => k0 = Some(k),
            Some(k0) => worst = worst.max((k - k0).abs() / k0.abs()),
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use czdg_core::mesh::{generate_rect, tags, BoundaryKind, RectSpec};
    use nalgebra::Vector2;
    use std::collections::BTreeMap;

    fn strip() -> Mesh {
        let kinds: BTreeMap<u32, BoundaryKind> = (1..=4).map(|t| (t, BoundaryKind::Neumann)).collect();
        let spec = RectSpec {
            width: 3.0,
            height: 1.0,
            nx: 3,
            ny: 1,
            crossed: false,
        };
        generate_rect(&spec, &[]).unwrap().build(&kinds).unwrap()
    }

    fn vertical(mesh: &Mesh, x: f64) -> usize {
        mesh.interior_faces()
            .find(|&f| (mesh.face_midpoint(f).x - x).abs() < 1e-12 && mesh.face(f).normal.x.abs() > 0.9)
            .unwrap()
    }

    #[test]
    fn connectivity_to_free_edges() {
        let mesh = strip();
        let a = vertical(&mesh, 1.0);
        let b = vertical(&mesh, 2.0);
        let init = BTreeSet::from([a]);
        // a vertical interior face touches both top and bottom edges
        assert!(reaches_free_edge(&mesh, &init, &init, &[tags::TOP]));
        assert!(!reaches_free_edge(&mesh, &init, &init, &[tags::LEFT, tags::RIGHT]));
        assert!(!reaches_free_edge(&mesh, &init, &BTreeSet::from([b]), &[tags::TOP]));
        assert!(!reaches_free_edge(&mesh, &BTreeSet::new(), &init, &[tags::TOP]));
    }

    fn step(delta: f64, r: f64, failed: usize) -> StepResult {
        StepResult {
            step: 0,
            delta,
            displacement: vec![],
            reaction: Vector2::new(0.0, r),
            failed_faces: (0..failed).collect(),
            iterations: 1,
            bisections: 0,
            converged: true,
            dissipated: 0.0,
            faces: vec![],
        }
    }

    #[test]
    fn load_curve_measures() {
        let steps = [step(1.0, 2.0, 3), step(2.0, 4.0, 3), step(3.0, 5.7, 3), step(4.0, 0.0, 9)];
        assert_eq!(first_new_failure(&steps, 3), Some(3));
        assert_eq!(linearity_deviation(&steps[..2], 1), 0.0);
        assert!((linearity_deviation(&steps[..3], 1) - 0.05).abs() < 1e-12);
    }
}
