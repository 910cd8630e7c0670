use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use nalgebra::{Point2, Vector2};

use super::Mesh;

/// Straight initial crack given by its centre, length and inclination
/// (degrees, counter-clockwise from the x axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrackSegment {
    pub center: Point2<f64>,
    pub length: f64,
    pub angle_deg: f64,
}

impl CrackSegment {
    pub fn endpoints(&self) -> (Point2<f64>, Point2<f64>) {
        let a = self.angle_deg.to_radians();
        let half = Vector2::new(a.cos(), a.sin()) * (0.5 * self.length);
        (self.center - half, self.center + half)
    }

    pub fn distance(&self, p: &Point2<f64>) -> f64 {
        let (a, b) = self.endpoints();
        let d = b - a;
        let len2 = d.norm_squared();
        let s = if len2 == 0.0 {
            0.0
        } else {
            ((p - a).dot(&d) / len2).clamp(0.0, 1.0)
        };
        (p - (a + d * s)).norm()
    }
}

/// Interior faces whose two endpoints both lie within `tol` of the segment.
pub fn mark_initial_crack(mesh: &Mesh, segment: &CrackSegment, tol: f64) -> BTreeSet<usize> {
    let near: Vec<bool> = mesh
        .nodes()
        .iter()
        .map(|p| segment.distance(p) <= tol)
        .collect();
    let faces: BTreeSet<usize> = mesh
        .interior_faces()
        .filter(|&f| mesh.face(f).nodes.iter().all(|&n| near[n]))
        .collect();
    if faces.is_empty() {
        log::warn!("initial crack {segment:?} (tol {tol}) matches no interior face");
    }
    faces
}

/// Interior faces forming the mesh path closest to the segment.
///
/// The path runs along interior faces between the nodes nearest the two
/// segment ends and minimises `integral (eta + dist) ds`, where `dist` is the
/// distance to the segment and `eta` a tenth of the mean face length.
pub fn trace_crack_path(mesh: &Mesh, segment: &CrackSegment) -> BTreeSet<usize> {
    let (a, b) = segment.endpoints();
    let nearest = |p: Point2<f64>| {
        (0..mesh.n_nodes())
            .min_by(|&i, &j| {
                let (di, dj) = ((mesh.nodes()[i] - p).norm(), (mesh.nodes()[j] - p).norm());
                di.total_cmp(&dj).then(i.cmp(&j))
            })
    };
    let (Some(start), Some(goal)) = (nearest(a), nearest(b)) else {
        return BTreeSet::new();
    };
    let dist: Vec<f64> = mesh.nodes().iter().map(|p| segment.distance(p)).collect();
    let interior: Vec<usize> = mesh.interior_faces().collect();
    let eta = 0.1 * interior.iter().map(|&f| mesh.face(f).length).sum::<f64>() / interior.len().max(1) as f64;
    let mut adj: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); mesh.n_nodes()];
    for &f in &interior {
        let face = mesh.face(f);
        let [p, q] = face.nodes;
        let w = face.length * (eta + 0.5 * (dist[p] + dist[q]));
        adj[p].push((q, f, w));
        adj[q].push((p, f, w));
    }

    let mut cost = vec![f64::INFINITY; mesh.n_nodes()];
    let mut via: Vec<Option<(usize, usize)>> = vec![None; mesh.n_nodes()];
    let mut heap = BinaryHeap::new();
    cost[start] = 0.0;
    heap.push(Reverse((Ordered(0.0), start)));
    while let Some(Reverse((Ordered(c), n))) = heap.pop() {
        if n == goal {
            break;
        }
        if c > cost[n] {
            continue;
        }
        for &(m, f, w) in &adj[n] {
            if c + w < cost[m] {
                cost[m] = c + w;
                via[m] = Some((n, f));
                heap.push(Reverse((Ordered(c + w), m)));
            }
        }
    }

    let mut faces = BTreeSet::new();
    let mut n = goal;
    while let Some((prev, f)) = via[n] {
        faces.insert(f);
        n = prev;
    }
    if faces.is_empty() {
        log::warn!("initial crack {segment:?} traces no interior face");
    }
    faces
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Ordered(f64);

impl Eq for Ordered {}

impl PartialOrd for Ordered {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ordered {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, HashMap};

    use super::*;
    use crate::mesh::{generate_rect, tags, BoundaryKind, RectSpec};

    fn mesh(nx: usize, ny: usize, crossed: bool) -> Mesh {
        let kinds: BTreeMap<u32, BoundaryKind> = [tags::BOTTOM, tags::RIGHT, tags::TOP, tags::LEFT]
            .into_iter()
            .map(|t| (t, BoundaryKind::Neumann))
            .collect();
        generate_rect(
            &RectSpec {
                width: 1.0,
                height: 2.0,
                nx,
                ny,
                crossed,
            },
            &[],
        )
        .unwrap()
        .build(&kinds)
        .unwrap()
    }

    #[test]
    fn horizontal_segment_on_grid_line() {
        let m = mesh(4, 4, false);
        // y = 1.0 is a grid line (height 2, ny 4)
        let seg = CrackSegment {
            center: Point2::new(0.5, 1.0),
            length: 0.5,
            angle_deg: 0.0,
        };
        let found = mark_initial_crack(&m, &seg, 1e-9);
        assert_eq!(found.len(), 2);
        assert_eq!(trace_crack_path(&m, &seg), found);
        for &f in &found {
            let face = m.face(f);
            assert!(face.normal.x.abs() < 1e-12);
            let mid = m.face_midpoint(f);
            assert!((mid.y - 1.0).abs() < 1e-12 && mid.x > 0.25 && mid.x < 0.75);
        }
    }

    #[test]
    fn zero_tolerance_without_aligned_faces_is_empty() {
        let m = mesh(5, 10, true);
        let seg = CrackSegment {
            center: Point2::new(0.41, 0.93),
            length: 0.2,
            angle_deg: 33.0,
        };
        assert!(mark_initial_crack(&m, &seg, 0.0).is_empty());
    }

    #[test]
    fn degenerate_segment_is_empty() {
        let m = mesh(5, 10, true);
        let seg = CrackSegment {
            center: Point2::new(0.4, 0.8),
            length: 0.0,
            angle_deg: 33.0,
        };
        assert!(trace_crack_path(&m, &seg).is_empty());
    }

    #[test]
    fn inclined_crack_is_a_connected_chain() {
        let m = mesh(25, 50, true);
        let seg = CrackSegment {
            center: Point2::new(0.40, 0.90),
            length: 0.2,
            angle_deg: 33.0,
        };
        let h = 1.0 / 25.0;
        let found = trace_crack_path(&m, &seg);
        assert!(!found.is_empty());
        // connected: the union of faces forms a single component through shared nodes
        let mut degree: HashMap<usize, usize> = HashMap::new();
        for &f in &found {
            for &n in &m.face(f).nodes {
                *degree.entry(n).or_default() += 1;
            }
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![*found.iter().next().unwrap()];
        while let Some(f) = stack.pop() {
            if !seen.insert(f) {
                continue;
            }
            for &g in &found {
                if !seen.contains(&g) && m.face(g).nodes.iter().any(|n| m.face(f).nodes.contains(n)) {
                    stack.push(g);
                }
            }
        }
        assert_eq!(seen.len(), found.len());
        // a chain: no branching
        assert!(degree.values().all(|&d| d <= 2));
        let (a, b) = seg.endpoints();
        let span: f64 = found.iter().map(|&f| m.face(f).length).sum();
        assert!(span >= (b - a).norm() - 2.0 * h, "chain length {span}");
        assert!(span <= 1.5 * (b - a).norm(), "chain length {span}");
        for &f in &found {
            assert!(seg.distance(&m.face_midpoint(f)) < h, "face {f} strays from the segment");
        }
    }
}
