use nalgebra::Point2;

use super::{BoundaryEdge, MeshData, MeshError, Triangle};

/// Boundary tags assigned by [`generate_rect`].
pub mod tags {
    pub const BOTTOM: u32 = 1;
    pub const RIGHT: u32 = 2;
    pub const TOP: u32 = 3;
    pub const LEFT: u32 = 4;

    pub fn name(tag: u32) -> Option<&'static str> {
        match tag {
            BOTTOM => Some("bottom"),
            RIGHT => Some("right"),
            TOP => Some("top"),
            LEFT => Some("left"),
            _ => None,
        }
    }

    pub fn from_name(name: &str) -> Option<u32> {
        match name {
            "bottom" => Some(BOTTOM),
            "right" => Some(RIGHT),
            "top" => Some(TOP),
            "left" => Some(LEFT),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Circle { center: Point2<f64>, radius: f64 },
    Rect { min: Point2<f64>, max: Point2<f64> },
}

impl Shape {
    pub fn contains(&self, p: &Point2<f64>) -> bool {
        match *self {
            Shape::Circle { center, radius } => (p - center).norm_squared() <= radius * radius,
            Shape::Rect { min, max } => p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y,
        }
    }
}

/// A tagged region; triangles take the tag of the first region containing
/// their centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub shape: Shape,
    pub tag: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectSpec {
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    /// Split every cell into four triangles around its centre instead of two
    /// along the diagonal.
    pub crossed: bool,
}

/// Structured triangulation of `[0, W] x [0, H]` with tagged boundary edges.
pub fn generate_rect(spec: &RectSpec, regions: &[Region]) -> Result<MeshData, MeshError> {
    let RectSpec {
        width,
        height,
        nx,
        ny,
        crossed,
    } = *spec;
    if nx == 0 || ny == 0 {
        return Err(MeshError::Parameter(format!("nx = {nx}, ny = {ny} must be >= 1")));
    }
    if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
        return Err(MeshError::Parameter(format!(
            "width = {width}, height = {height} must be positive"
        )));
    }
    let dx = width / nx as f64;
    let dy = height / ny as f64;
    let corner = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) + if crossed { nx * ny } else { 0 });
    for j in 0..=ny {
        for i in 0..=nx {
            // snap the far edges exactly onto the rectangle
            let x = if i == nx { width } else { i as f64 * dx };
            let y = if j == ny { height } else { j as f64 * dy };
            nodes.push(Point2::new(x, y));
        }
    }
    let mut triangles = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (
                corner(i, j),
                corner(i + 1, j),
                corner(i + 1, j + 1),
                corner(i, j + 1),
            );
            if crossed {
                let m = nodes.len();
                nodes.push(Point2::new((i as f64 + 0.5) * dx, (j as f64 + 0.5) * dy));
                for [p, q] in [[a, b], [b, c], [c, d], [d, a]] {
                    triangles.push([p, q, m]);
                }
            } else {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
    }
    let triangles = triangles
        .into_iter()
        .map(|nodes_of| {
            let [p, q, r] = nodes_of.map(|n| nodes[n]);
            let centroid = Point2::from((p.coords + q.coords + r.coords) / 3.0);
            let region = regions
                .iter()
                .find(|reg| reg.shape.contains(&centroid))
                .map_or(0, |reg| reg.tag);
            Triangle {
                nodes: nodes_of,
                region,
            }
        })
        .collect();

    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge {
            nodes: [corner(i, 0), corner(i + 1, 0)],
            tag: tags::BOTTOM,
        });
        boundary_edges.push(BoundaryEdge {
            nodes: [corner(i + 1, ny), corner(i, ny)],
            tag: tags::TOP,
        });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge {
            nodes: [corner(nx, j), corner(nx, j + 1)],
            tag: tags::RIGHT,
        });
        boundary_edges.push(BoundaryEdge {
            nodes: [corner(0, j + 1), corner(0, j)],
            tag: tags::LEFT,
        });
    }
    Ok(MeshData {
        nodes,
        triangles,
        boundary_edges,
    })
}
