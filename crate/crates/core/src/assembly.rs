//! Finite element assembly of the velocity and pressure operators.
//!
//! Element loops run under an [`Execution`] policy: each element yields its
//! own triplets, which are concatenated in element order and compressed with
//! a stable sort, so the result is independent of the thread count.

use std::sync::OnceLock;

use crate::element::{AffineMap, ReferenceTables};
use crate::error::Result;
use crate::exec::Execution;
use crate::friction::{FrictionModulus, LambdaSpace};
use crate::mesh::{Gamma1Trace, Mesh, Point};
use crate::sparse::{SparseOperator, TripletBuffer};
use crate::spaces::DofMap;

pub(crate) fn reference_tables() -> &'static ReferenceTables {
    static TABLES: OnceLock<ReferenceTables> = OnceLock::new();
    TABLES.get_or_init(ReferenceTables::new)
}

/// Quadrature data of one triangle: physical weights and basis gradients.
pub(crate) struct ElementQuadrature {
    pub map: AffineMap,
    pub weights: Vec<f64>,
    pub grads: Vec<[[f64; 2]; 6]>,
}

impl ElementQuadrature {
    pub fn new(mesh: &Mesh, t: usize) -> Self {
        let tables = reference_tables();
        let map = AffineMap::new(mesh.triangle_coords(t));
        let area = map.area();
        let weights = tables.points.iter().map(|q| q.weight * area).collect();
        let grads = tables
            .p2_grad
            .iter()
            .map(|g| std::array::from_fn(|a| map.gradient(g[a])))
            .collect();
        Self { map, weights, grads }
    }
}

/// Local 12×12 matrix of `a(·,·)` in raw local order `2a + c`.
pub fn element_strain_matrix(mesh: &Mesh, t: usize, nu: f64) -> [[f64; 12]; 12] {
    let eq = ElementQuadrature::new(mesh, t);
    let mut k = [[0.0; 12]; 12];
    for (w, g) in eq.weights.iter().zip(&eq.grads) {
        for a in 0..6 {
            let [ax, ay] = g[a];
            for b in 0..6 {
                let [bx, by] = g[b];
                k[2 * a][2 * b] += nu * w * (2.0 * ax * bx + ay * by);
                k[2 * a][2 * b + 1] += nu * w * ay * bx;
                k[2 * a + 1][2 * b] += nu * w * ax * by;
                k[2 * a + 1][2 * b + 1] += nu * w * (ax * bx + 2.0 * ay * by);
            }
        }
    }
    k
}

/// Local matrix of `∫ u·v + ∇u:∇v` in raw local order.
fn element_h1_matrix(mesh: &Mesh, t: usize) -> [[f64; 12]; 12] {
    let tables = reference_tables();
    let eq = ElementQuadrature::new(mesh, t);
    let mut k = [[0.0; 12]; 12];
    for ((w, g), phi) in eq.weights.iter().zip(&eq.grads).zip(&tables.p2) {
        for a in 0..6 {
            for b in 0..6 {
                let v = w * (phi[a] * phi[b] + g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                k[2 * a][2 * b] += v;
                k[2 * a + 1][2 * b + 1] += v;
            }
        }
    }
    k
}

fn scatter_velocity_matrix(
    mesh: &Mesh,
    dofmap: &DofMap,
    exec: Execution,
    local: impl Fn(usize) -> [[f64; 12]; 12] + Sync + Send,
) -> SparseOperator {
    let n = dofmap.free_velocity_count();
    let per_element = exec.map_range(mesh.triangle_count(), |t| {
        let nodes = mesh.triangle_p2_nodes(t);
        let free: [Option<usize>; 12] =
            std::array::from_fn(|i| dofmap.free_index(2 * nodes[i / 2] + i % 2));
        let k = local(t);
        let mut out = Vec::with_capacity(144);
        for i in 0..12 {
            let Some(r) = free[i] else { continue };
            for j in 0..12 {
                if let Some(c) = free[j] {
                    if k[i][j] != 0.0 {
                        out.push((r, c, k[i][j]));
                    }
                }
            }
        }
        out
    });
    let mut buf = TripletBuffer::new(n, n);
    for e in per_element {
        buf.extend(e);
    }
    buf.compress(exec)
}

/// `a(u, v) = 2ν ∫ e(u):e(v)` on the free velocity dofs.
pub fn assemble_a(mesh: &Mesh, dofmap: &DofMap, nu: f64, exec: Execution) -> SparseOperator {
    scatter_velocity_matrix(mesh, dofmap, exec, |t| element_strain_matrix(mesh, t, nu))
}

/// Gram matrix of the full H¹ inner product on the free velocity dofs.
pub fn assemble_h1_gram(mesh: &Mesh, dofmap: &DofMap, exec: Execution) -> SparseOperator {
    scatter_velocity_matrix(mesh, dofmap, exec, |t| element_h1_matrix(mesh, t))
}

/// `b(v, q) = -∫ div v q`, shaped pressure dofs × free velocity dofs.
pub fn assemble_b(mesh: &Mesh, dofmap: &DofMap, exec: Execution) -> SparseOperator {
    let tables = reference_tables();
    let per_element = exec.map_range(mesh.triangle_count(), |t| {
        let nodes = mesh.triangle_p2_nodes(t);
        let verts = mesh.triangles[t];
        let eq = ElementQuadrature::new(mesh, t);
        let mut local = [[0.0; 12]; 3];
        for ((w, g), q) in eq.weights.iter().zip(&eq.grads).zip(&tables.points) {
            for (row, psi) in local.iter_mut().zip(q.bary) {
                for a in 0..6 {
                    row[2 * a] -= w * psi * g[a][0];
                    row[2 * a + 1] -= w * psi * g[a][1];
                }
            }
        }
        let mut out = Vec::with_capacity(36);
        for i in 0..3 {
            for (j, v) in local[i].iter().enumerate() {
                if let Some(c) = dofmap.free_index(2 * nodes[j / 2] + j % 2) {
                    out.push((verts[i], c, *v));
                }
            }
        }
        out
    });
    let mut buf = TripletBuffer::new(dofmap.pressure_count(), dofmap.free_velocity_count());
    for e in per_element {
        buf.extend(e);
    }
    buf.compress(exec)
}

/// `∫ ψ_q` for every P1 pressure basis function.
pub fn pressure_weights(mesh: &Mesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.vertex_count()];
    for t in 0..mesh.triangle_count() {
        let third = mesh.signed_area(t).abs() / 3.0;
        for &v in &mesh.triangles[t] {
            m[v] += third;
        }
    }
    m
}

/// P1 mass matrix on all vertices.
pub fn assemble_pressure_mass(mesh: &Mesh, exec: Execution) -> SparseOperator {
    let per_element = exec.map_range(mesh.triangle_count(), |t| {
        let area = mesh.signed_area(t).abs();
        let v = mesh.triangles[t];
        let mut out = Vec::with_capacity(9);
        for i in 0..3 {
            for j in 0..3 {
                let f = if i == j { 2.0 } else { 1.0 };
                out.push((v[i], v[j], f * area / 12.0));
            }
        }
        out
    });
    let n = mesh.vertex_count();
    let mut buf = TripletBuffer::new(n, n);
    for e in per_element {
        buf.extend(e);
    }
    buf.compress(exec)
}

pub trait BodyForce: Sync {
    fn force(&self, p: Point) -> [f64; 2];
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantForce(pub [f64; 2]);

impl BodyForce for ConstantForce {
    fn force(&self, _p: Point) -> [f64; 2] {
        self.0
    }
}

/// `(f, v)` on the free velocity dofs.
pub fn assemble_load(mesh: &Mesh, dofmap: &DofMap, force: &dyn BodyForce, exec: Execution) -> Vec<f64> {
    let tables = reference_tables();
    let per_element = exec.map_range(mesh.triangle_count(), |t| {
        let nodes = mesh.triangle_p2_nodes(t);
        let eq = ElementQuadrature::new(mesh, t);
        let mut local = [0.0; 12];
        for ((w, q), phi) in eq.weights.iter().zip(&tables.points).zip(&tables.p2) {
            let f = force.force(eq.map.to_physical(q.bary));
            for a in 0..6 {
                local[2 * a] += w * f[0] * phi[a];
                local[2 * a + 1] += w * f[1] * phi[a];
            }
        }
        (nodes, local)
    });
    let mut load = vec![0.0; dofmap.free_velocity_count()];
    for (nodes, local) in per_element {
        for (i, v) in local.iter().enumerate() {
            if let Some(r) = dofmap.free_index(2 * nodes[i / 2] + i % 2) {
                load[r] += v;
            }
        }
    }
    load
}

/// Coupling `C[j, k] = (φ_k trace, ψ_j)_Λ` between multiplier dofs and free
/// velocity dofs; one entry `g(M) w(M)` per interior trace node.
pub fn assemble_trace_coupling(
    trace: &Gamma1Trace,
    dofmap: &DofMap,
    g: &FrictionModulus,
) -> Result<SparseOperator> {
    let space = LambdaSpace::new(trace, g)?;
    Ok(SparseOperator::from_triplets(
        dofmap.multiplier_count(),
        dofmap.free_velocity_count(),
        dofmap
            .trace_free_dofs()
            .into_iter()
            .zip(space.interior_weights())
            .enumerate()
            .map(|(j, (k, &w))| (j, k, w)),
    ))
}

/// The manufactured flow on the unit square.
///
/// With `ψ = 10 X(x) W(y)`, `X = x²(1-x)²`, `W = y²(1-y)²`, the velocity is
/// `(ψ_y, -ψ_x)`. The force is `-νΔu + ∇p`, so the same `(u, p)` solves the
/// adhesive problem for every `ν`.
#[derive(Clone, Copy, Debug)]
pub struct ManufacturedCase {
    pub nu: f64,
}

impl Default for ManufacturedCase {
    fn default() -> Self {
        Self { nu: 1.0 }
    }
}

/// `s²(1-s)²` and its first three derivatives.
fn bump(s: f64) -> [f64; 4] {
    [
        s * s * (1.0 - s) * (1.0 - s),
        2.0 * s * (1.0 - s) * (1.0 - 2.0 * s),
        2.0 - 12.0 * s + 12.0 * s * s,
        24.0 * s - 12.0,
    ]
}

/// `6x⁵ - 15x⁴ + 10x³`.
fn smoothstep(x: f64) -> f64 {
    x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
}

impl ManufacturedCase {
    pub fn velocity(&self, p: Point) -> [f64; 2] {
        let (x, y) = (bump(p[0]), bump(p[1]));
        [10.0 * x[0] * y[1], -10.0 * x[1] * y[0]]
    }

    /// `[[∂u1/∂x, ∂u1/∂y], [∂u2/∂x, ∂u2/∂y]]`.
    pub fn velocity_gradient(&self, p: Point) -> [[f64; 2]; 2] {
        let (x, y) = (bump(p[0]), bump(p[1]));
        [
            [10.0 * x[1] * y[1], 10.0 * x[0] * y[2]],
            [-10.0 * x[2] * y[0], -10.0 * x[1] * y[1]],
        ]
    }

    pub fn pressure(&self, p: Point) -> f64 {
        let (x, y) = (bump(p[0]), bump(p[1]));
        10.0 * x[1] * y[1] + 4.0 * smoothstep(p[0]) * (2.0 * p[1] - 1.0) - 2.0
    }

    pub fn body_force(&self, p: Point) -> [f64; 2] {
        let (x, y) = (bump(p[0]), bump(p[1]));
        let lap1 = 10.0 * (x[2] * y[1] + x[0] * y[3]);
        let lap2 = -10.0 * (x[3] * y[0] + x[1] * y[2]);
        let px = 10.0 * x[2] * y[1] + 120.0 * x[0] * (2.0 * p[1] - 1.0);
        let py = 10.0 * x[1] * y[2] + 8.0 * smoothstep(p[0]);
        [-self.nu * lap1 + px, -self.nu * lap2 + py]
    }

    /// Tangential stress on the top side.
    pub fn sigma_tau(&self, x: f64) -> f64 {
        20.0 * self.nu * bump(x)[0]
    }

    /// Normal stress on the top side.
    pub fn sigma_n(&self, x: f64) -> f64 {
        2.0 - 4.0 * smoothstep(x)
    }
}

impl BodyForce for ManufacturedCase {
    fn force(&self, p: Point) -> [f64; 2] {
        self.body_force(p)
    }
}

/// Nodal P2 interpolant of a vector field, as a raw velocity vector.
pub fn interpolate_velocity(mesh: &Mesh, field: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
    let mut out = vec![0.0; 2 * mesh.p2_node_count()];
    for k in 0..mesh.p2_node_count() {
        let v = field(mesh.p2_node_coords(k));
        out[2 * k] = v[0];
        out[2 * k + 1] = v[1];
    }
    out
}

/// Nodal P1 interpolant of a scalar field.
pub fn interpolate_pressure(mesh: &Mesh, field: impl Fn(Point) -> f64) -> Vec<f64> {
    mesh.vertices.iter().map(|&p| field(p)).collect()
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_friedrichs_keller, extract_gamma1_trace};
    use crate::spaces::{build_dof_map, BcKind};

    #[test]
    fn a_is_symmetric() {
        let mesh = build_friedrichs_keller(4).unwrap();
        let d = build_dof_map(&mesh, BcKind::Sbcf);
        let a = assemble_a(&mesh, &d, 1.0, Execution::Sequential);
        assert!(a.max_asymmetry() <= 1e-13);
    }

    #[test]
    fn rigid_translation_has_no_strain() {
        let mesh = build_friedrichs_keller(3).unwrap();
        let k = element_strain_matrix(&mesh, 7, 1.0);
        let v: Vec<f64> = (0..12).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        for row in &k {
            let s: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!(s.abs() < 1e-13);
        }
    }

    #[test]
    fn constant_pressure_annihilates_sbcf_divergence() {
        let mesh = build_friedrichs_keller(4).unwrap();
        let ones = vec![1.0; mesh.vertex_count()];
        let s = build_dof_map(&mesh, BcKind::Sbcf);
        let bt1 = assemble_b(&mesh, &s, Execution::Sequential).mul_transpose_vec(&ones);
        assert!(bt1.iter().all(|v| v.abs() <= 1e-12));
        let l = build_dof_map(&mesh, BcKind::Lbcf);
        let bt1 = assemble_b(&mesh, &l, Execution::Sequential).mul_transpose_vec(&ones);
        assert!(bt1.iter().any(|v| v.abs() > 1e-3));
    }

    #[test]
    fn solenoidal_interpolant_has_zero_divergence() {
        let mesh = build_friedrichs_keller(3).unwrap();
        let d = DofMap::unconstrained(&mesh, BcKind::Sbcf);
        let v = interpolate_velocity(&mesh, |p| [p[1], p[0]]);
        let b = assemble_b(&mesh, &d, Execution::Sequential);
        assert!(b.mul_vec(&v).iter().all(|x| x.abs() <= 1e-12));
    }

    #[test]
    fn load_partition_of_unity() {
        let mesh = build_friedrichs_keller(3).unwrap();
        let d = DofMap::unconstrained(&mesh, BcKind::Sbcf);
        let zero = assemble_load(&mesh, &d, &ConstantForce([0.0, 0.0]), Execution::Sequential);
        assert!(zero.iter().all(|&v| v == 0.0));
        let f = assemble_load(&mesh, &d, &ConstantForce([0.0, 1.0]), Execution::Sequential);
        let sy: f64 = f.iter().skip(1).step_by(2).sum();
        let sx: f64 = f.iter().step_by(2).sum();
        assert!((sy - 1.0).abs() < 1e-14 && sx == 0.0);
    }

    #[test]
    fn manufactured_force_matches_closed_form() {
        let c = ManufacturedCase::default();
        assert!((c.body_force([0.5, 0.5])[1] - 4.0).abs() < 1e-14);
        let closed = |x: f64, y: f64| {
            120.0 * (2.0 * x - 1.0) * y * y * (1.0 - y).powi(2)
                + 80.0 * x * (1.0 - x) * (1.0 - 2.0 * x) * (6.0 * y * y - 6.0 * y + 1.0)
                + 8.0 * smoothstep(x)
        };
        for &(x, y) in &[(0.1, 0.7), (0.33, 0.2), (0.9, 0.95)] {
            let f = c.body_force([x, y]);
            assert!(f[0].abs() < 1e-12);
            assert!((f[1] - closed(x, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn manufactured_fields_match_definitions() {
        let c = ManufacturedCase::default();
        let (x, y): (f64, f64) = (0.3, 0.8);
        let u = c.velocity([x, y]);
        let u1 = 20.0 * x * x * (1.0 - x).powi(2) * y * (1.0 - y) * (1.0 - 2.0 * y);
        let u2 = -20.0 * x * (1.0 - x) * (1.0 - 2.0 * x) * y * y * (1.0 - y).powi(2);
        assert!((u[0] - u1).abs() < 1e-14 && (u[1] - u2).abs() < 1e-14);
        let p = 40.0 * x * (1.0 - x) * (1.0 - 2.0 * x) * y * (1.0 - y) * (1.0 - 2.0 * y)
            + 4.0 * smoothstep(x) * (2.0 * y - 1.0)
            - 2.0;
        assert!((c.pressure([x, y]) - p).abs() < 1e-14);
        let g = c.velocity_gradient([x, y]);
        assert!((g[0][0] + g[1][1]).abs() < 1e-14);
        let h = 1e-6;
        let fd = |dx: f64, dy: f64| {
            let a = c.velocity([x + dx, y + dy]);
            let b = c.velocity([x - dx, y - dy]);
            [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
        };
        let (gx, gy) = (fd(h, 0.0), fd(0.0, h));
        assert!((gx[0] - g[0][0]).abs() < 1e-7 && (gy[0] - g[0][1]).abs() < 1e-7);
        assert!((gx[1] - g[1][0]).abs() < 1e-7 && (gy[1] - g[1][1]).abs() < 1e-7);
    }

    #[test]
    fn boundary_stress_maxima() {
        let c = ManufacturedCase::default();
        let xs: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let mt = xs.iter().map(|&x| c.sigma_tau(x).abs()).fold(0.0, f64::max);
        let mn = xs.iter().map(|&x| c.sigma_n(x).abs()).fold(0.0, f64::max);
        assert!((mt - 1.25).abs() < 1e-12);
        assert!((mn - 2.0).abs() < 1e-12);
    }

    #[test]
    fn trace_coupling_weights() {
        let mesh = build_friedrichs_keller(2).unwrap();
        let d = build_dof_map(&mesh, BcKind::Sbcf);
        let t = extract_gamma1_trace(&mesh);
        let c = assemble_trace_coupling(&t, &d, &FrictionModulus::Constant(1.0)).unwrap();
        let dofs = d.trace_free_dofs();
        assert!((c.get(0, dofs[0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.get(1, dofs[1]) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(c.nnz(), 3);
    }

    #[test]
    fn parallel_assembly_is_bitwise_identical() {
        let mesh = build_friedrichs_keller(6).unwrap();
        let d = build_dof_map(&mesh, BcKind::Lbcf);
        assert_eq!(
            assemble_a(&mesh, &d, 1.0, Execution::Sequential),
            assemble_a(&mesh, &d, 1.0, Execution::Parallel)
        );
        let c = ManufacturedCase::default();
        assert_eq!(
            assemble_load(&mesh, &d, &c, Execution::Sequential),
            assemble_load(&mesh, &d, &c, Execution::Parallel)
        );
    }
}
