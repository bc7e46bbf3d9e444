//! P2 and P1 shape functions on the reference triangle and affine maps.
//!
//! Reference vertices are (0,0), (1,0), (0,1) with barycentrics
//! `l1 = 1 - ξ - η`, `l2 = ξ`, `l3 = η`. Local P2 numbering: vertices 0..3,
//! then midpoints of sides (0,1), (1,2), (2,0).

use crate::mesh::Point;
use crate::quadrature::{triangle_rule, TriPoint};

pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    let [l1, l2, l3] = l;
    [
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        l3 * (2.0 * l3 - 1.0),
        4.0 * l1 * l2,
        4.0 * l2 * l3,
        4.0 * l3 * l1,
    ]
}

/// Gradients with respect to the reference coordinates (ξ, η).
pub fn p2_ref_gradients(l: [f64; 3]) -> [[f64; 2]; 6] {
    let [l1, l2, l3] = l;
    [
        [-(4.0 * l1 - 1.0), -(4.0 * l1 - 1.0)],
        [4.0 * l2 - 1.0, 0.0],
        [0.0, 4.0 * l3 - 1.0],
        [4.0 * (l1 - l2), -4.0 * l2],
        [4.0 * l3, 4.0 * l2],
        [-4.0 * l3, 4.0 * (l1 - l3)],
    ]
}

pub const P1_REF_GRADIENTS: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

/// Basis values and reference gradients at every point of the volume rule.
#[derive(Clone, Debug)]
pub struct ReferenceTables {
    pub points: Vec<TriPoint>,
    pub p2: Vec<[f64; 6]>,
    pub p2_grad: Vec<[[f64; 2]; 6]>,
}

impl ReferenceTables {
    pub fn new() -> Self {
        let points = triangle_rule();
        let p2 = points.iter().map(|q| p2_values(q.bary)).collect();
        let p2_grad = points.iter().map(|q| p2_ref_gradients(q.bary)).collect();
        Self {
            points,
            p2,
            p2_grad,
        }
    }
}

impl Default for ReferenceTables {
    fn default() -> Self {
        Self::new()
    }
}

/// Affine map from the reference triangle onto a physical one.
#[derive(Clone, Copy, Debug)]
pub struct AffineMap {
    pub origin: Point,
    /// Columns are `p1 - p0` and `p2 - p0`.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    /// Inverse transpose of `jac`, maps reference gradients to physical ones.
    pub inv_t: [[f64; 2]; 2],
}

impl AffineMap {
    pub fn new(v: [Point; 3]) -> Self {
        let jac = [
            [v[1][0] - v[0][0], v[2][0] - v[0][0]],
            [v[1][1] - v[0][1], v[2][1] - v[0][1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv_t = [
            [jac[1][1] / det, -jac[1][0] / det],
            [-jac[0][1] / det, jac[0][0] / det],
        ];
        Self {
            origin: v[0],
            jac,
            det,
            inv_t,
        }
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det.abs()
    }

    pub fn to_physical(&self, l: [f64; 3]) -> Point {
        let (xi, eta) = (l[1], l[2]);
        [
            self.origin[0] + self.jac[0][0] * xi + self.jac[0][1] * eta,
            self.origin[1] + self.jac[1][0] * xi + self.jac[1][1] * eta,
        ]
    }

    pub fn barycentric(&self, p: Point) -> [f64; 3] {
        let d = [p[0] - self.origin[0], p[1] - self.origin[1]];
        let xi = (self.jac[1][1] * d[0] - self.jac[0][1] * d[1]) / self.det;
        let eta = (-self.jac[1][0] * d[0] + self.jac[0][0] * d[1]) / self.det;
        [1.0 - xi - eta, xi, eta]
    }

    pub fn gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_t[0][0] * g[0] + self.inv_t[0][1] * g[1],
            self.inv_t[1][0] * g[0] + self.inv_t[1][1] * g[1],
        ]
    }
}
