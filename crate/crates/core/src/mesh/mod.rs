//! Conforming triangular meshes and their face structure.
//!
//! A [`MeshData`] is the raw description (nodes, tagged triangles, tagged
//! boundary edges) as read from disk or produced by a generator. Building a
//! [`Mesh`] enumerates every element edge exactly once as a [`Face`],
//! classifies it as interior, Dirichlet or Neumann, and precomputes the face
//! geometry used by the discontinuous Galerkin assembly.

mod crack;
mod generate;
mod io;

pub use crack::{mark_initial_crack, trace_crack_path, CrackSegment};
pub use generate::{generate_rect, tags, RectSpec, Region, Shape};
pub use io::{read_mesh, write_mesh};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::{Point2, Vector2};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifold(usize, usize),
    #[error("boundary edge ({0}, {1}) carries no boundary tag")]
    UntaggedBoundary(usize, usize),
    #[error("boundary tag {0} has no Dirichlet/Neumann classification")]
    UnclassifiedTag(u32),
    #[error("tagged edge ({0}, {1}) is not a boundary edge of the mesh")]
    StrayBoundaryEdge(usize, usize),
    #[error("triangle {0} references node {1}, but the mesh has {2} nodes")]
    NodeOutOfRange(usize, usize, usize),
    #[error("triangle {0} has non-positive signed area {1:e}")]
    Degenerate(usize, f64),
    #[error("face {0} has zero length")]
    DegenerateFace(usize),
    #[error("node {0} has non-finite coordinates")]
    NonFinite(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid mesh parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    /// Counter-clockwise node indices.
    pub nodes: [usize; 3],
    pub region: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceKind {
    Interior,
    Dirichlet,
    Neumann,
}

/// Unclassified mesh description.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeshData {
    pub nodes: Vec<Point2<f64>>,
    pub triangles: Vec<Triangle>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

impl MeshData {
    pub fn region_tags(&self) -> BTreeSet<u32> {
        self.triangles.iter().map(|t| t.region).collect()
    }

    pub fn boundary_tags(&self) -> BTreeSet<u32> {
        self.boundary_edges.iter().map(|e| e.tag).collect()
    }

    /// Classifies every boundary tag and builds the face structure.
    pub fn build(&self, kinds: &BTreeMap<u32, BoundaryKind>) -> Result<Mesh, MeshError> {
        build_faces(
            self.nodes.clone(),
            self.triangles.clone(),
            &self.boundary_edges,
            kinds,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// Endpoints ordered counter-clockwise with respect to `plus`.
    pub nodes: [usize; 2],
    pub plus: usize,
    pub minus: Option<usize>,
    pub kind: FaceKind,
    /// Unit normal pointing out of `plus`.
    pub normal: Vector2<f64>,
    /// Unit tangent completing the right-handed pair `(normal, tangent)`.
    pub tangent: Vector2<f64>,
    pub length: f64,
    pub h_f: f64,
    pub boundary_tag: Option<u32>,
}

impl Face {
    pub fn is_interior(&self) -> bool {
        self.kind == FaceKind::Interior
    }
}

/// Conforming triangle mesh with classified faces. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point2<f64>>,
    triangles: Vec<Triangle>,
    areas: Vec<f64>,
    faces: Vec<Face>,
    element_faces: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
}

pub fn signed_area(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Enumerates and classifies the faces of a conforming triangulation.
///
/// Shared edges become interior faces whose `plus` side is the triangle with
/// the smaller id. Unshared edges must carry a boundary tag, and every tag must
/// be classified in `kinds`.
pub fn build_faces(
    nodes: Vec<Point2<f64>>,
    triangles: Vec<Triangle>,
    boundary_edges: &[BoundaryEdge],
    kinds: &BTreeMap<u32, BoundaryKind>,
) -> Result<Mesh, MeshError> {
    for (i, p) in nodes.iter().enumerate() {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(MeshError::NonFinite(i));
        }
    }
    let mut areas = Vec::with_capacity(triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        for &n in &tri.nodes {
            if n >= nodes.len() {
                return Err(MeshError::NodeOutOfRange(t, n, nodes.len()));
            }
        }
        let [a, b, c] = tri.nodes;
        let area = signed_area(&nodes[a], &nodes[b], &nodes[c]);
        if area <= 0.0 {
            return Err(MeshError::Degenerate(t, area));
        }
        areas.push(area);
    }

    let mut adjacency: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let key = edge_key(tri.nodes[k], tri.nodes[(k + 1) % 3]);
            let entry = adjacency.entry(key).or_default();
            entry.push(t);
            if entry.len() > 2 {
                return Err(MeshError::NonManifold(key.0, key.1));
            }
        }
    }

    let mut tag_of: HashMap<(usize, usize), u32> = HashMap::new();
    for e in boundary_edges {
        let key = edge_key(e.nodes[0], e.nodes[1]);
        match adjacency.get(&key) {
            Some(owners) if owners.len() == 1 => {
                tag_of.insert(key, e.tag);
            }
            _ => return Err(MeshError::StrayBoundaryEdge(e.nodes[0], e.nodes[1])),
        }
    }

    let mut faces = Vec::new();
    let mut face_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut element_faces = vec![[usize::MAX; 3]; triangles.len()];
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri.nodes[k], tri.nodes[(k + 1) % 3]);
            let key = edge_key(a, b);
            if let Some(&f) = face_of.get(&key) {
                element_faces[t][k] = f;
                continue;
            }
            let owners = &adjacency[&key];
            let minus = owners.iter().copied().find(|&o| o != t);
            let (kind, boundary_tag) = match minus {
                Some(_) => (FaceKind::Interior, None),
                None => {
                    let tag = *tag_of
                        .get(&key)
                        .ok_or(MeshError::UntaggedBoundary(key.0, key.1))?;
                    let kind = match kinds.get(&tag) {
                        Some(BoundaryKind::Dirichlet) => FaceKind::Dirichlet,
                        Some(BoundaryKind::Neumann) => FaceKind::Neumann,
                        None => return Err(MeshError::UnclassifiedTag(tag)),
                    };
                    (kind, Some(tag))
                }
            };
            let id = faces.len();
            let d = nodes[b] - nodes[a];
            let length = d.norm();
            if length == 0.0 {
                return Err(MeshError::DegenerateFace(id));
            }
            let tangent = d / length;
            let normal = Vector2::new(tangent.y, -tangent.x);
            faces.push(Face {
                nodes: [a, b],
                plus: t,
                minus,
                kind,
                normal,
                tangent,
                length,
                h_f: 0.0,
                boundary_tag,
            });
            face_of.insert(key, id);
            element_faces[t][k] = id;
        }
    }

    let mut mesh = Mesh {
        nodes,
        triangles,
        areas,
        faces,
        element_faces,
        boundary_edges: boundary_edges.to_vec(),
    };
    for f in 0..mesh.faces.len() {
        let h = compute_h_f(&mesh.faces[f], &mesh)?;
        mesh.faces[f].h_f = h;
    }
    mesh.check_partition();
    Ok(mesh)
}

/// Face measure: `(|T+| + |T-|) / (2 |F|)` on interior faces and `|T| / |F|`
/// on boundary faces.
pub fn compute_h_f(face: &Face, mesh: &Mesh) -> Result<f64, MeshError> {
    if face.length <= 0.0 {
        return Err(MeshError::DegenerateFace(
            mesh.faces.iter().position(|f| f == face).unwrap_or(usize::MAX),
        ));
    }
    let plus = mesh.areas[face.plus];
    Ok(match face.minus {
        Some(m) => (plus + mesh.areas[m]) / (2.0 * face.length),
        None => plus / face.length,
    })
}

impl Mesh {
    pub fn nodes(&self) -> &[Point2<f64>] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, id: usize) -> &Face {
        &self.faces[id]
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn element_faces(&self, t: usize) -> [usize; 3] {
        self.element_faces[t]
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self, t: usize) -> [Point2<f64>; 3] {
        self.triangles[t].nodes.map(|n| self.nodes[n])
    }

    pub fn centroid(&self, t: usize) -> Point2<f64> {
        let [a, b, c] = self.vertices(t);
        Point2::from((a.coords + b.coords + c.coords) / 3.0)
    }

    pub fn face_point(&self, f: usize, s: f64) -> Point2<f64> {
        let [a, b] = self.faces[f].nodes;
        self.nodes[a] + (self.nodes[b] - self.nodes[a]) * s
    }

    pub fn face_midpoint(&self, f: usize) -> Point2<f64> {
        self.face_point(f, 0.5)
    }

    pub fn region_tags(&self) -> BTreeSet<u32> {
        self.triangles.iter().map(|t| t.region).collect()
    }

    pub fn boundary_tags(&self) -> BTreeSet<u32> {
        self.boundary_edges.iter().map(|e| e.tag).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn count(&self, kind: FaceKind) -> usize {
        self.faces.iter().filter(|f| f.kind == kind).count()
    }

    pub fn interior_faces(&self) -> impl Iterator<Item = usize> + '_ {
        self.faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.is_interior())
            .map(|(i, _)| i)
    }

    /// Faces that share a node with face `f` (excluding `f`).
    pub fn face_neighbours(&self, f: usize) -> Vec<usize> {
        let nodes = self.faces[f].nodes;
        self.faces
            .iter()
            .enumerate()
            .filter(|&(g, face)| g != f && face.nodes.iter().any(|n| nodes.contains(n)))
            .map(|(g, _)| g)
            .collect()
    }

    /// Recovers the unclassified description, e.g. for writing to disk.
    pub fn data(&self) -> MeshData {
        MeshData {
            nodes: self.nodes.clone(),
            triangles: self.triangles.clone(),
            boundary_edges: self.boundary_edges.clone(),
        }
    }

    /// Swaps the `+`/`-` sides of an interior face and reverses its normal.
    /// The discrete forms do not depend on this choice.
    pub fn flip_face(&mut self, f: usize) {
        let face = &mut self.faces[f];
        let Some(minus) = face.minus else {
            return;
        };
        face.minus = Some(face.plus);
        face.plus = minus;
        face.nodes.swap(0, 1);
        face.normal = -face.normal;
        face.tangent = -face.tangent;
    }

    fn check_partition(&self) {
        let n_i = self.count(FaceKind::Interior);
        let n_d = self.count(FaceKind::Dirichlet);
        let n_n = self.count(FaceKind::Neumann);
        assert_eq!(n_i + n_d + n_n, self.faces.len());
        debug_assert!(self
            .element_faces
            .iter()
            .all(|fs| fs.iter().all(|&f| f < self.faces.len())));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn unit_square() -> MeshData {
        MeshData {
            nodes: vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
            triangles: vec![
                Triangle { nodes: [0, 1, 2], region: 0 },
                Triangle { nodes: [0, 2, 3], region: 0 },
            ],
            boundary_edges: vec![
                BoundaryEdge { nodes: [0, 1], tag: 1 },
                BoundaryEdge { nodes: [1, 2], tag: 2 },
                BoundaryEdge { nodes: [2, 3], tag: 3 },
                BoundaryEdge { nodes: [3, 0], tag: 4 },
            ],
        }
    }

    fn kinds(tags: &[u32], kind: BoundaryKind) -> BTreeMap<u32, BoundaryKind> {
        tags.iter().map(|&t| (t, kind)).collect()
    }

    #[test]
    fn two_triangle_square_has_one_interior_face() {
        let mesh = unit_square()
            .build(&kinds(&[1, 2, 3, 4], BoundaryKind::Neumann))
            .unwrap();
        assert_eq!(mesh.n_faces(), 5);
        assert_eq!(mesh.count(FaceKind::Interior), 1);
        assert_eq!(mesh.count(FaceKind::Neumann), 4);
        let diag = mesh.faces().iter().find(|f| f.is_interior()).unwrap();
        assert_eq!(diag.plus, 0);
        assert_eq!(diag.minus, Some(1));
        // (0.5 + 0.5) / (2 * sqrt 2)
        assert!((diag.h_f - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn single_triangle_all_neumann() {
        let data = MeshData {
            nodes: vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            triangles: vec![Triangle { nodes: [0, 1, 2], region: 0 }],
            boundary_edges: vec![
                BoundaryEdge { nodes: [0, 1], tag: 7 },
                BoundaryEdge { nodes: [1, 2], tag: 7 },
                BoundaryEdge { nodes: [2, 0], tag: 7 },
            ],
        };
        let mesh = data.build(&kinds(&[7], BoundaryKind::Neumann)).unwrap();
        assert_eq!(mesh.count(FaceKind::Interior), 0);
        assert_eq!(mesh.count(FaceKind::Neumann), 3);
    }

    #[test]
    fn boundary_h_f_is_area_over_length() {
        let mesh = unit_square()
            .build(&kinds(&[1, 2, 3, 4], BoundaryKind::Dirichlet))
            .unwrap();
        for f in mesh.faces().iter().filter(|f| !f.is_interior()) {
            assert!((f.h_f - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn interior_h_f_for_unit_areas() {
        // Two triangles of area 0.5 sharing a face of length 1.
        let data = MeshData {
            nodes: vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
                Point2::new(1.0, -1.0),
            ],
            triangles: vec![
                Triangle { nodes: [0, 1, 2], region: 0 },
                Triangle { nodes: [0, 3, 1], region: 0 },
            ],
            boundary_edges: vec![
                BoundaryEdge { nodes: [1, 2], tag: 1 },
                BoundaryEdge { nodes: [2, 0], tag: 1 },
                BoundaryEdge { nodes: [0, 3], tag: 1 },
                BoundaryEdge { nodes: [3, 1], tag: 1 },
            ],
        };
        let mesh = data.build(&kinds(&[1], BoundaryKind::Neumann)).unwrap();
        let f = mesh.interior_faces().next().unwrap();
        assert_eq!(mesh.face(f).length, 1.0);
        assert!((mesh.face(f).h_f - 0.5).abs() < 1e-15);
    }

    #[test]
    fn normals_point_out_of_plus_and_frame_is_right_handed() {
        let mesh = unit_square()
            .build(&kinds(&[1, 2, 3, 4], BoundaryKind::Neumann))
            .unwrap();
        for f in mesh.faces() {
            assert!((f.normal.norm() - 1.0).abs() < 1e-15);
            let cross = f.normal.x * f.tangent.y - f.normal.y * f.tangent.x;
            assert!((cross - 1.0).abs() < 1e-15);
            let mid = mesh.face_midpoint(mesh.faces().iter().position(|g| g == f).unwrap());
            let out = mid - mesh.centroid(f.plus);
            assert!(out.dot(&f.normal) > 0.0);
            if let Some(m) = f.minus {
                assert!((mesh.centroid(m) - mesh.centroid(f.plus)).dot(&f.normal) > 0.0);
            }
        }
    }

    #[test]
    fn non_manifold_edge_is_rejected() {
        let data = MeshData {
            nodes: vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.5, 1.0),
                Point2::new(0.5, -1.0),
                Point2::new(0.5, 2.0),
            ],
            triangles: vec![
                Triangle { nodes: [0, 1, 2], region: 0 },
                Triangle { nodes: [1, 0, 3], region: 0 },
                Triangle { nodes: [0, 1, 4], region: 0 },
            ],
            boundary_edges: vec![],
        };
        assert!(matches!(
            data.build(&BTreeMap::new()),
            Err(MeshError::NonManifold(0, 1))
        ));
    }

    #[test]
    fn untagged_and_unclassified_boundaries_are_errors() {
        let mut data = unit_square();
        data.boundary_edges.pop();
        assert!(matches!(
            data.build(&kinds(&[1, 2, 3], BoundaryKind::Neumann)),
            Err(MeshError::UntaggedBoundary(0, 3))
        ));
        let data = unit_square();
        assert!(matches!(
            data.build(&kinds(&[1, 2, 3], BoundaryKind::Neumann)),
            Err(MeshError::UnclassifiedTag(4))
        ));
    }

    #[test]
    fn flipping_a_face_swaps_sides() {
        let mut mesh = unit_square()
            .build(&kinds(&[1, 2, 3, 4], BoundaryKind::Neumann))
            .unwrap();
        let f = mesh.interior_faces().next().unwrap();
        let before = mesh.face(f).clone();
        mesh.flip_face(f);
        let after = mesh.face(f);
        assert_eq!(after.plus, 1);
        assert_eq!(after.minus, Some(0));
        assert_eq!(after.normal, -before.normal);
        assert_eq!(after.h_f, before.h_f);
    }
}
