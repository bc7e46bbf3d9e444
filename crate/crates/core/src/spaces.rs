//! Degree-of-freedom bookkeeping for the P2 velocity, P1 pressure and
//! boundary multiplier spaces.
//!
//! Raw velocity dof of P2 node `k`, component `c` is `2k + c`. Essential
//! constraints are removed by elimination: the free velocity dofs are the
//! unconstrained raw dofs, numbered in raw order. On Γ1 the outward normal is
//! `(0, 1)` and the tangent `(1, 0)`, so the normal and tangential parts are
//! single components and no rotation is needed.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Gamma1Trace, Mesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BcKind {
    /// Slip of friction type: `u_n = 0`, friction acts on `u_τ`.
    Sbcf,
    /// Leak of friction type: `u_τ = 0`, friction acts on `u_n`.
    Lbcf,
}

impl BcKind {
    /// Velocity component that carries the frictional trace.
    pub fn trace_component(self) -> usize {
        match self {
            BcKind::Sbcf => 0,
            BcKind::Lbcf => 1,
        }
    }

    pub fn pinned_component(self) -> usize {
        1 - self.trace_component()
    }

    pub fn name(self) -> &'static str {
        match self {
            BcKind::Sbcf => "sbcf",
            BcKind::Lbcf => "lbcf",
        }
    }
}

impl fmt::Display for BcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BcKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sbcf" | "slip" => Ok(BcKind::Sbcf),
            "lbcf" | "leak" => Ok(BcKind::Lbcf),
            other => Err(Error::InvalidArgument(format!(
                "unknown boundary condition '{other}' (expected sbcf or lbcf)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintClass {
    Free,
    /// Γ0 nodes, including the two extreme points of Γ1.
    PinnedBoth,
    /// Interior Γ1 node under SBCF: y-velocity eliminated.
    NormalPinned,
    /// Interior Γ1 node under LBCF: x-velocity eliminated.
    TangentPinned,
}

impl ConstraintClass {
    pub fn is_pinned(self, component: usize) -> bool {
        match self {
            ConstraintClass::Free => false,
            ConstraintClass::PinnedBoth => true,
            ConstraintClass::NormalPinned => component == 1,
            ConstraintClass::TangentPinned => component == 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DofMap {
    bc: BcKind,
    node_class: Vec<ConstraintClass>,
    free_of_raw: Vec<Option<usize>>,
    raw_of_free: Vec<usize>,
    pressure_count: usize,
    trace_nodes: Vec<usize>,
}

pub fn build_dof_map(mesh: &Mesh, bc: BcKind) -> DofMap {
    let node_class = (0..mesh.p2_node_count())
        .map(|k| match Mesh::boundary_tag(mesh.p2_node_coords(k)) {
            None => ConstraintClass::Free,
            Some(BoundaryTag::Gamma0) => ConstraintClass::PinnedBoth,
            Some(BoundaryTag::Gamma1) => match bc {
                BcKind::Sbcf => ConstraintClass::NormalPinned,
                BcKind::Lbcf => ConstraintClass::TangentPinned,
            },
        })
        .collect();
    DofMap::from_classes(mesh, bc, node_class)
}

impl DofMap {
    /// Map with every velocity dof free; used for diagnostics that need the
    /// whole of V_h.
    pub fn unconstrained(mesh: &Mesh, bc: BcKind) -> Self {
        Self::from_classes(mesh, bc, vec![ConstraintClass::Free; mesh.p2_node_count()])
    }

    fn from_classes(mesh: &Mesh, bc: BcKind, node_class: Vec<ConstraintClass>) -> Self {
        let mut free_of_raw = vec![None; 2 * node_class.len()];
        let mut raw_of_free = Vec::new();
        for (k, class) in node_class.iter().enumerate() {
            for c in 0..2 {
                if !class.is_pinned(c) {
                    free_of_raw[2 * k + c] = Some(raw_of_free.len());
                    raw_of_free.push(2 * k + c);
                }
            }
        }
        let trace = crate::mesh::extract_gamma1_trace(mesh);
        let trace_nodes = trace.interior().map(|k| trace.nodes[k].p2_node).collect();
        Self {
            bc,
            node_class,
            free_of_raw,
            raw_of_free,
            pressure_count: mesh.vertex_count(),
            trace_nodes,
        }
    }

    pub fn bc(&self) -> BcKind {
        self.bc
    }

    pub fn p2_node_count(&self) -> usize {
        self.node_class.len()
    }

    pub fn raw_velocity_count(&self) -> usize {
        2 * self.node_class.len()
    }

    pub fn free_velocity_count(&self) -> usize {
        self.raw_of_free.len()
    }

    pub fn eliminated_count(&self) -> usize {
        self.raw_velocity_count() - self.free_velocity_count()
    }

    pub fn pressure_count(&self) -> usize {
        self.pressure_count
    }

    pub fn multiplier_count(&self) -> usize {
        self.trace_nodes.len()
    }

    pub fn class(&self, node: usize) -> ConstraintClass {
        self.node_class[node]
    }

    pub fn free_index(&self, raw: usize) -> Option<usize> {
        self.free_of_raw[raw]
    }

    pub fn raw_index(&self, free: usize) -> usize {
        self.raw_of_free[free]
    }

    /// P2 nodes of the interior Γ1 chain, one per multiplier dof.
    pub fn trace_nodes(&self) -> &[usize] {
        &self.trace_nodes
    }

    /// Free dof of the frictional component at each multiplier node.
    pub fn trace_free_dofs(&self) -> Vec<usize> {
        let c = self.bc.trace_component();
        self.trace_nodes
            .iter()
            .map(|&k| self.free_of_raw[2 * k + c].expect("trace component is free"))
            .collect()
    }

    pub fn restrict_to_free(&self, full: &[f64]) -> Result<Vec<f64>> {
        if full.len() != self.raw_velocity_count() {
            return Err(Error::LengthMismatch {
                expected: self.raw_velocity_count(),
                actual: full.len(),
            });
        }
        Ok(self.raw_of_free.iter().map(|&r| full[r]).collect())
    }

    /// Inverse of [`DofMap::restrict_to_free`]; constrained entries are zero.
    pub fn prolong(&self, free: &[f64]) -> Result<Vec<f64>> {
        if free.len() != self.free_velocity_count() {
            return Err(Error::LengthMismatch {
                expected: self.free_velocity_count(),
                actual: free.len(),
            });
        }
        let mut full = vec![0.0; self.raw_velocity_count()];
        for (f, &r) in self.raw_of_free.iter().enumerate() {
            full[r] = free[f];
        }
        Ok(full)
    }

    /// Frictional trace of a raw velocity vector on the full Γ1 chain
    /// (endpoint slots included).
    pub fn trace_values(&self, trace: &Gamma1Trace, raw_velocity: &[f64]) -> Vec<f64> {
        let c = self.bc.trace_component();
        trace
            .nodes
            .iter()
            .map(|n| raw_velocity[2 * n.p2_node + c])
            .collect()
    }
}
