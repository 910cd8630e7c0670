use nalgebra::{Matrix2, Point2, SMatrix, Vector2};

use crate::material::IsotropicElastic;

/// Constant-strain triangle data for discontinuous P1 fields.
///
/// Element dofs are vertex-major, component-minor: `[u0x, u0y, u1x, u1y, u2x, u2y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub vertices: [Point2<f64>; 3],
    pub area: f64,
    pub grads: [Vector2<f64>; 3],
}

impl ElementGeometry {
    /// `None` for a triangle of non-positive area.
    pub fn new(v: [Point2<f64>; 3]) -> Option<Self> {
        let twice = (v[1] - v[0]).perp(&(v[2] - v[0]));
        if !(twice > 0.0) {
            return None;
        }
        let g = |a: usize, b: usize| Vector2::new(v[a].y - v[b].y, v[b].x - v[a].x) / twice;
        Some(Self {
            vertices: v,
            area: 0.5 * twice,
            grads: [g(1, 2), g(2, 0), g(0, 1)],
        })
    }

    pub fn shape_values(&self, p: &Point2<f64>) -> [f64; 3] {
        let d = p - self.vertices[0];
        [
            1.0 + self.grads[0].dot(&d),
            self.grads[1].dot(&d),
            self.grads[2].dot(&d),
        ]
    }

    pub fn point(&self, bary: &[f64; 3]) -> Point2<f64> {
        Point2::from(
            self.vertices[0].coords * bary[0] + self.vertices[1].coords * bary[1] + self.vertices[2].coords * bary[2],
        )
    }

    /// `u(p) = N(p) u_T`.
    pub fn value_map(&self, p: &Point2<f64>) -> SMatrix<f64, 2, 6> {
        let phi = self.shape_values(p);
        let mut n = SMatrix::<f64, 2, 6>::zeros();
        for i in 0..3 {
            n[(0, 2 * i)] = phi[i];
            n[(1, 2 * i + 1)] = phi[i];
        }
        n
    }

    /// Strain in Voigt order `(xx, yy, 2xy)`.
    pub fn strain_map(&self) -> SMatrix<f64, 3, 6> {
        let mut b = SMatrix::<f64, 3, 6>::zeros();
        for (i, g) in self.grads.iter().enumerate() {
            b[(0, 2 * i)] = g.x;
            b[(1, 2 * i + 1)] = g.y;
            b[(2, 2 * i)] = g.y;
            b[(2, 2 * i + 1)] = g.x;
        }
        b
    }

    /// `sigma(u) n` as a map of the element dofs.
    pub fn flux_map(&self, material: &IsotropicElastic, n: &Vector2<f64>) -> SMatrix<f64, 2, 6> {
        let proj = SMatrix::<f64, 2, 3>::new(n.x, 0.0, n.y, 0.0, n.y, n.x);
        proj * material.voigt() * self.strain_map()
    }

    pub fn stiffness(&self, material: &IsotropicElastic) -> SMatrix<f64, 6, 6> {
        let b = self.strain_map();
        let k = b.transpose() * material.voigt() * b * self.area;
        (k + k.transpose()) * 0.5
    }

    pub fn displacement_gradient(&self, u: &[f64]) -> Matrix2<f64> {
        let mut g = Matrix2::zeros();
        for i in 0..3 {
            let ui = Vector2::new(u[2 * i], u[2 * i + 1]);
            g += ui * self.grads[i].transpose();
        }
        g
    }

    pub fn strain(&self, u: &[f64]) -> Matrix2<f64> {
        let g = self.displacement_gradient(u);
        (g + g.transpose()) * 0.5
    }
}

/// Plane-strain von Mises stress, including the out-of-plane component.
pub fn von_mises(stress: &Matrix2<f64>, material: &IsotropicElastic) -> f64 {
    let (sx, sy, sxy) = (stress[(0, 0)], stress[(1, 1)], stress[(0, 1)]);
    let sz = material.nu * (sx + sy);
    (0.5 * ((sx - sy).powi(2) + (sy - sz).powi(2) + (sz - sx).powi(2)) + 3.0 * sxy * sxy).sqrt()
}
