//! Uniform Friedrichs–Keller triangulation of the unit square.
//!
//! Each of the N×N cells is cut along its lower-left to upper-right diagonal.
//! The top side `y = 1` is the friction boundary Γ1; the other three sides
//! (including both top corners) form the no-slip boundary Γ0.
//!
//! Quadratic (P2) nodes are the points of the `(2N+1)×(2N+1)` half-step
//! lattice: vertices sit at even lattice positions, edge midpoints at the
//! rest. Node `(I, J)` of the lattice has index `J * (2N + 1) + I`.

use std::io::Write;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryTag {
    Gamma0,
    Gamma1,
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub midpoint: Point,
    /// P2 lattice node at the midpoint.
    pub p2_node: usize,
    pub tag: Option<BoundaryTag>,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    n: usize,
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Indices into `edges` of the edges lying on ∂Ω.
    pub boundary_edges: Vec<usize>,
}

/// Build the N×N Friedrichs–Keller mesh. Requires `N >= 2`.
pub fn build_friedrichs_keller(n: usize) -> Result<Mesh> {
    if n < 2 {
        return Err(Error::InvalidMesh(format!(
            "division count must be at least 2, got {n}"
        )));
    }
    let nv = n + 1;
    let nf = n as f64;
    let vertices: Vec<Point> = (0..nv * nv)
        .map(|k| [(k % nv) as f64 / nf, (k / nv) as f64 / nf])
        .collect();

    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v00 = j * nv + i;
            let v10 = v00 + 1;
            let v01 = v00 + nv;
            let v11 = v01 + 1;
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let mut mesh = Mesh {
        n,
        vertices,
        triangles,
        edges: Vec::new(),
        boundary_edges: Vec::new(),
    };
    mesh.edges = mesh.collect_edges();
    mesh.boundary_edges = mesh
        .edges
        .iter()
        .enumerate()
        .filter(|(_, e)| e.tag.is_some())
        .map(|(k, _)| k)
        .collect();
    Ok(mesh)
}

impl Mesh {
    pub fn divisions(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Side length of the P2 lattice, `2N + 1`.
    pub fn lattice_side(&self) -> usize {
        2 * self.n + 1
    }

    pub fn p2_node_count(&self) -> usize {
        self.lattice_side() * self.lattice_side()
    }

    pub fn p2_node_coords(&self, node: usize) -> Point {
        let side = self.lattice_side();
        let denom = (2 * self.n) as f64;
        [(node % side) as f64 / denom, (node / side) as f64 / denom]
    }

    pub fn vertex_to_p2(&self, v: usize) -> usize {
        let nv = self.n + 1;
        let (i, j) = (v % nv, v / nv);
        2 * j * self.lattice_side() + 2 * i
    }

    /// P2 node carried by a lattice position whose coordinates are both even
    /// (a vertex), or `None` for midpoints.
    pub fn p2_to_vertex(&self, node: usize) -> Option<usize> {
        let side = self.lattice_side();
        let (li, lj) = (node % side, node / side);
        (li % 2 == 0 && lj % 2 == 0).then(|| (lj / 2) * (self.n + 1) + li / 2)
    }

    fn midpoint_node(&self, a: usize, b: usize) -> usize {
        let side = self.lattice_side();
        let (pa, pb) = (self.vertex_to_p2(a), self.vertex_to_p2(b));
        let (ia, ja) = (pa % side, pa / side);
        let (ib, jb) = (pb % side, pb / side);
        ((ja + jb) / 2) * side + (ia + ib) / 2
    }

    /// Local P2 nodes of a triangle: the three vertices, then the midpoints of
    /// sides (0,1), (1,2), (2,0).
    pub fn triangle_p2_nodes(&self, t: usize) -> [usize; 6] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertex_to_p2(a),
            self.vertex_to_p2(b),
            self.vertex_to_p2(c),
            self.midpoint_node(a, b),
            self.midpoint_node(b, c),
            self.midpoint_node(c, a),
        ]
    }

    pub fn triangle_coords(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_coords(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn is_boundary_point(p: Point) -> bool {
        p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0
    }

    /// Which part of the boundary a point lies on. Γ1 is the open top side;
    /// the top corners belong to Γ0.
    pub fn boundary_tag(p: Point) -> Option<BoundaryTag> {
        if !Self::is_boundary_point(p) {
            None
        } else if p[1] == 1.0 && p[0] > 0.0 && p[0] < 1.0 {
            Some(BoundaryTag::Gamma1)
        } else {
            Some(BoundaryTag::Gamma0)
        }
    }

    fn collect_edges(&self) -> Vec<Edge> {
        let mut keys: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter()
            .map(|(a, b)| {
                let (pa, pb) = (self.vertices[a], self.vertices[b]);
                let p2_node = self.midpoint_node(a, b);
                let midpoint = self.p2_node_coords(p2_node);
                let on_same_side = (pa[0] == pb[0] && (pa[0] == 0.0 || pa[0] == 1.0))
                    || (pa[1] == pb[1] && (pa[1] == 0.0 || pa[1] == 1.0));
                let tag = on_same_side.then(|| {
                    if pa[1] == 1.0 && pb[1] == 1.0 {
                        BoundaryTag::Gamma1
                    } else {
                        BoundaryTag::Gamma0
                    }
                });
                Edge {
                    vertices: [a, b],
                    midpoint,
                    p2_node,
                    tag,
                }
            })
            .collect()
    }

    /// Triangle containing `p`; ties on shared edges resolve to the cell and
    /// half found first. Points outside the closed square are clamped.
    pub fn locate(&self, p: Point) -> usize {
        let n = self.n;
        let nf = n as f64;
        let i = ((p[0] * nf).floor() as isize).clamp(0, n as isize - 1) as usize;
        let j = ((p[1] * nf).floor() as isize).clamp(0, n as isize - 1) as usize;
        let (lx, ly) = (p[0] * nf - i as f64, p[1] * nf - j as f64);
        let cell = j * n + i;
        if ly <= lx {
            2 * cell
        } else {
            2 * cell + 1
        }
    }

    /// Plain-text dump: one `x y` line per vertex, then one `i j k` line per
    /// triangle (zero-based), preceded by the two counts.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.vertices.len(), self.triangles.len())?;
        for v in &self.vertices {
            writeln!(w, "{:e} {:e}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

/// Longest triangle side.
pub fn mesh_size(mesh: &Mesh) -> f64 {
    mesh.triangles
        .iter()
        .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
        .map(|(a, b)| {
            let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
            (p[0] - q[0]).hypot(p[1] - q[1])
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceNodeKind {
    Vertex,
    Midpoint,
}

#[derive(Clone, Copy, Debug)]
pub struct TraceNode {
    pub point: Point,
    pub p2_node: usize,
    pub kind: TraceNodeKind,
}

/// The node chain M_1, M_{3/2}, M_2, …, M_{m+1} along the closed top side,
/// in ascending x.
#[derive(Clone, Debug)]
pub struct Gamma1Trace {
    pub nodes: Vec<TraceNode>,
    /// `|e_i|` for the m sides.
    pub segment_lengths: Vec<f64>,
}

pub fn extract_gamma1_trace(mesh: &Mesh) -> Gamma1Trace {
    let side = mesh.lattice_side();
    let top = side * (side - 1);
    let nodes: Vec<TraceNode> = (0..side)
        .map(|k| TraceNode {
            point: mesh.p2_node_coords(top + k),
            p2_node: top + k,
            kind: if k % 2 == 0 {
                TraceNodeKind::Vertex
            } else {
                TraceNodeKind::Midpoint
            },
        })
        .collect();
    let segment_lengths = (0..mesh.divisions())
        .map(|i| nodes[2 * i + 2].point[0] - nodes[2 * i].point[0])
        .collect();
    Gamma1Trace {
        nodes,
        segment_lengths,
    }
}

impl Gamma1Trace {
    /// Number of sides m.
    pub fn segments(&self) -> usize {
        self.segment_lengths.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_extreme(&self, k: usize) -> bool {
        k == 0 || k + 1 == self.nodes.len()
    }

    /// Nodes strictly inside Γ1 (the extreme points excluded).
    pub fn interior(&self) -> std::ops::Range<usize> {
        1..self.nodes.len() - 1
    }

    /// Simpson weights per node: `(|e_{i-1}| + |e_i|)/6` at vertices and
    /// `4|e_i|/6` at side midpoints.
    pub fn simpson_weights(&self) -> Vec<f64> {
        let m = self.segments();
        let mut w = vec![0.0; 2 * m + 1];
        for (i, &len) in self.segment_lengths.iter().enumerate() {
            w[2 * i] += len / 6.0;
            w[2 * i + 1] += 4.0 * len / 6.0;
            w[2 * i + 2] += len / 6.0;
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_single_cell() {
        assert!(matches!(build_friedrichs_keller(1), Err(Error::InvalidMesh(_))));
        assert!(build_friedrichs_keller(0).is_err());
    }

    #[test]
    fn counts_for_small_meshes() {
        let m = build_friedrichs_keller(2).unwrap();
        assert_eq!((m.vertex_count(), m.triangle_count(), m.edges.len()), (9, 8, 16));
        let m = build_friedrichs_keller(10).unwrap();
        assert_eq!((m.vertex_count(), m.triangle_count(), m.edges.len()), (121, 200, 320));
    }

    #[test]
    fn trace_for_two_divisions() {
        let m = build_friedrichs_keller(2).unwrap();
        let t = extract_gamma1_trace(&m);
        let xs: Vec<f64> = t.nodes.iter().map(|n| n.point[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(t.nodes.iter().all(|n| n.point[1] == 1.0));
        assert_eq!(t.simpson_weights()[1], 4.0 * 0.5 / 6.0);
        assert_eq!(t.simpson_weights()[2], (0.5 + 0.5) / 6.0);
    }

    #[test]
    fn locate_finds_containing_triangle() {
        let m = build_friedrichs_keller(4).unwrap();
        for t in 0..m.triangle_count() {
            let [a, b, c] = m.triangle_coords(t);
            let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
            assert_eq!(m.locate(centroid), t);
        }
    }

    #[test]
    fn lattice_round_trip() {
        let m = build_friedrichs_keller(3).unwrap();
        for v in 0..m.vertex_count() {
            let node = m.vertex_to_p2(v);
            assert_eq!(m.p2_to_vertex(node), Some(v));
            assert_eq!(m.p2_node_coords(node), m.vertices[v]);
        }
    }
}
