//! Multiplier space on the friction boundary.
//!
//! A [`BoundaryTrace`] stores one coefficient per node of the Γ1 chain,
//! extreme points included; those two slots are always zero. The inner
//! product and the discrete friction functional are both g-weighted Simpson
//! sums over the chain, so each reduces to a nodal weight `g(M) w(M)`.

use crate::error::{Error, Result};
use crate::mesh::Gamma1Trace;
use crate::quadrature::gauss_legendre_unit;

/// `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    values: Vec<f64>,
}

impl BoundaryTrace {
    /// Zero trace over a chain with `m` sides (`2m + 1` slots).
    pub fn zeros(m: usize) -> Self {
        Self {
            values: vec![0.0; 2 * m + 1],
        }
    }

    pub fn constant(m: usize, value: f64) -> Self {
        let mut t = Self::zeros(m);
        for k in 1..2 * m {
            t.values[k] = value;
        }
        t
    }

    /// Build from the `2m - 1` interior values.
    pub fn from_interior(interior: &[f64]) -> Self {
        let mut values = Vec::with_capacity(interior.len() + 2);
        values.push(0.0);
        values.extend_from_slice(interior);
        values.push(0.0);
        Self { values }
    }

    /// Build from full-chain values; the endpoint slots are forced to zero.
    pub fn from_chain(mut values: Vec<f64>) -> Self {
        if let Some(first) = values.first_mut() {
            *first = 0.0;
        }
        if let Some(last) = values.last_mut() {
            *last = 0.0;
        }
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.values.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn segments(&self) -> usize {
        (self.values.len() - 1) / 2
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    /// Whether the trace lies in the clipped set (|value| ≤ 1, endpoints 0).
    pub fn is_admissible(&self) -> bool {
        self.values[0] == 0.0
            && *self.values.last().unwrap() == 0.0
            && self.values.iter().all(|v| v.abs() <= 1.0)
    }
}

/// Modulus of friction on the closed top side, parametrized by `x`.
#[derive(Clone, Debug, PartialEq)]
pub enum FrictionModulus {
    Constant(f64),
    /// `g(x) = intercept + slope * x`.
    Affine { intercept: f64, slope: f64 },
    /// Values at every node of the chain; quadratic on each side in between.
    Nodal(Vec<f64>),
}

impl FrictionModulus {
    /// Nodal values on the chain, checked positive at interior nodes.
    pub fn nodal_values(&self, trace: &Gamma1Trace) -> Result<Vec<f64>> {
        let values: Vec<f64> = match self {
            FrictionModulus::Nodal(v) => {
                if v.len() != trace.len() {
                    return Err(Error::LengthMismatch {
                        expected: trace.len(),
                        actual: v.len(),
                    });
                }
                v.clone()
            }
            _ => trace.nodes.iter().map(|n| self.eval_analytic(n.point[0])).collect(),
        };
        for k in trace.interior() {
            if !(values[k] > 0.0) {
                return Err(Error::InvalidModulus {
                    node: k,
                    value: values[k],
                });
            }
        }
        Ok(values)
    }

    fn eval_analytic(&self, x: f64) -> f64 {
        match *self {
            FrictionModulus::Constant(g) => g,
            FrictionModulus::Affine { intercept, slope } => intercept + slope * x,
            FrictionModulus::Nodal(_) => unreachable!("nodal modulus has no closed form"),
        }
    }

    /// `g` at local coordinate `s ∈ [0, 1]` of side `i`.
    fn eval_on_side(&self, trace: &Gamma1Trace, nodal: &[f64], i: usize, s: f64) -> f64 {
        match self {
            FrictionModulus::Nodal(_) => quadratic_on_side(nodal[2 * i], nodal[2 * i + 1], nodal[2 * i + 2], s),
            _ => {
                let x0 = trace.nodes[2 * i].point[0];
                self.eval_analytic(x0 + s * trace.segment_lengths[i])
            }
        }
    }

    pub fn max_on(&self, trace: &Gamma1Trace) -> Result<f64> {
        Ok(self.nodal_values(trace)?.into_iter().fold(f64::MIN, f64::max))
    }
}

/// Lagrange quadratic through values at `s = 0, 1/2, 1`.
fn quadratic_on_side(v0: f64, vm: f64, v1: f64, s: f64) -> f64 {
    v0 * (1.0 - s) * (1.0 - 2.0 * s) + 4.0 * vm * s * (1.0 - s) + v1 * s * (2.0 * s - 1.0)
}

/// Precomputed nodal weights `g(M) w(M)` for a chain and a modulus.
#[derive(Clone, Debug)]
pub struct LambdaSpace {
    weights: Vec<f64>,
}

impl LambdaSpace {
    pub fn new(trace: &Gamma1Trace, g: &FrictionModulus) -> Result<Self> {
        let gv = g.nodal_values(trace)?;
        let weights = trace
            .simpson_weights()
            .into_iter()
            .zip(gv)
            .map(|(w, g)| w * g)
            .collect();
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodal weights of the interior chain, one per multiplier dof.
    pub fn interior_weights(&self) -> &[f64] {
        &self.weights[1..self.weights.len() - 1]
    }

    fn check(&self, t: &BoundaryTrace) -> Result<()> {
        if t.len() != self.weights.len() {
            return Err(Error::LengthMismatch {
                expected: self.weights.len(),
                actual: t.len(),
            });
        }
        Ok(())
    }

    pub fn inner(&self, a: &BoundaryTrace, b: &BoundaryTrace) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.inner_slices(a.values(), b.values()))
    }

    pub(crate) fn inner_slices(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    pub fn norm(&self, a: &BoundaryTrace) -> Result<f64> {
        Ok(self.inner(a, a)?.sqrt())
    }

    pub fn j_h(&self, eta: &BoundaryTrace) -> Result<f64> {
        self.check(eta)?;
        Ok(self.j_h_slice(eta.values()))
    }

    pub(crate) fn j_h_slice(&self, eta: &[f64]) -> f64 {
        self.weights.iter().zip(eta).map(|(w, e)| w * e.abs()).sum()
    }
}

/// The g-weighted Simpson inner product of two traces.
pub fn lambda_inner(
    a: &BoundaryTrace,
    b: &BoundaryTrace,
    g: &FrictionModulus,
    trace: &Gamma1Trace,
) -> Result<f64> {
    LambdaSpace::new(trace, g)?.inner(a, b)
}

/// Simpson approximation of `∫ g |η| ds`.
pub fn j_h(eta: &BoundaryTrace, g: &FrictionModulus, trace: &Gamma1Trace) -> Result<f64> {
    LambdaSpace::new(trace, g)?.j_h(eta)
}

pub const MIN_EXACT_POINTS: usize = 32;

/// `∫_{Γ1} g |η| ds` for the piecewise-quadratic `η`, split at the sign
/// changes of `η` on each side so that the integrand is a polynomial on every
/// piece, then integrated by Gauss–Legendre with `points_per_piece` nodes.
pub fn j_exact(
    eta: &BoundaryTrace,
    g: &FrictionModulus,
    trace: &Gamma1Trace,
    points_per_piece: usize,
) -> Result<f64> {
    if points_per_piece < MIN_EXACT_POINTS {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_EXACT_POINTS} quadrature points per side are required, got {points_per_piece}"
        )));
    }
    if eta.len() != trace.len() {
        return Err(Error::LengthMismatch {
            expected: trace.len(),
            actual: eta.len(),
        });
    }
    let nodal = g.nodal_values(trace)?;
    let rule = gauss_legendre_unit(points_per_piece);
    let v = eta.values();
    let mut total = 0.0;
    for (i, &len) in trace.segment_lengths.iter().enumerate() {
        let (e0, em, e1) = (v[2 * i], v[2 * i + 1], v[2 * i + 2]);
        let mut cuts = vec![0.0];
        cuts.extend(quadratic_roots_in_unit(e0, em, e1));
        cuts.push(1.0);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let piece: f64 = rule
                .iter()
                .map(|&(t, wt)| {
                    let s = a + (b - a) * t;
                    wt * g.eval_on_side(trace, &nodal, i, s) * quadratic_on_side(e0, em, e1, s).abs()
                })
                .sum();
            total += piece * (b - a) * len;
        }
    }
    Ok(total)
}

/// Roots in the open unit interval of the quadratic interpolating
/// `(0, e0), (1/2, em), (1, e1)`, ascending.
fn quadratic_roots_in_unit(e0: f64, em: f64, e1: f64) -> Vec<f64> {
    let c0 = e0;
    let c1 = -3.0 * e0 + 4.0 * em - e1;
    let c2 = 2.0 * e0 - 4.0 * em + 2.0 * e1;
    let scale = e0.abs().max(em.abs()).max(e1.abs());
    let mut roots = Vec::new();
    if scale == 0.0 {
        return roots;
    }
    if c2.abs() <= 1e-14 * scale {
        if c1.abs() > 1e-14 * scale {
            roots.push(-c0 / c1);
        }
    } else {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc > 0.0 {
            let sq = disc.sqrt();
            let q = -0.5 * (c1 + if c1 >= 0.0 { sq } else { -sq });
            roots.push(q / c2);
            if q != 0.0 {
                roots.push(c0 / q);
            }
        }
    }
    roots.retain(|r| *r > 0.0 && *r < 1.0);
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}

/// Nodewise clipping into `[-1, 1]`; the endpoint slots stay zero.
pub fn project_tilde(mu: &BoundaryTrace) -> BoundaryTrace {
    BoundaryTrace::from_chain(mu.values().iter().map(|v| v.clamp(-1.0, 1.0)).collect())
}
