//! Projected Uzawa iteration for the friction problem.
//!
//! Step 1 solves the Stokes system with the multiplier frozen; step 2 moves
//! the multiplier along the frictional trace and clips it back into
//! `[-1, 1]`. The run stops at the first `k ≥ 2` whose H¹ velocity increment
//! is at most `tol`.

use crate::assembly::BodyForce;
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::friction::{project_tilde, sgn, BoundaryTrace, FrictionModulus, LambdaSpace};
use crate::saddle::PressureGauge;
use crate::spaces::BcKind;

pub const DEFAULT_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_ITER: usize = 1000;

/// Step sizes used for the reference multiplier table, keyed by `(bc, g)`.
const TABLE_RHO: [(BcKind, f64, f64); 6] = [
    (BcKind::Sbcf, 0.1, 1000.0),
    (BcKind::Sbcf, 0.8, 50.0),
    (BcKind::Sbcf, 2.0, 3.0),
    (BcKind::Lbcf, 0.1, 20.0),
    (BcKind::Lbcf, 1.2, 30.0),
    (BcKind::Lbcf, 3.0, 2.0),
];

/// Default step: the tabulated value when `(bc, g)` matches one, else `8/g²`; the stick-regime gain of the modulus-scaled step grows like `ρ g²`.
pub fn default_rho(bc: BcKind, g: f64) -> f64 {
    TABLE_RHO
        .iter()
        .find(|(b, gg, _)| *b == bc && (*gg - g).abs() < 1e-12)
        .map(|t| t.2)
        .unwrap_or(8.0 / (g * g))
}

/// How the multiplier step is scaled at each Γ1 node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StepScaling {
    /// `λ ← Proj(λ + ρ g(M) u(M))`; reproduces the reference iteration
    /// counts closely.
    #[default]
    Modulus,
    /// `λ ← Proj(λ + ρ u(M))`.
    Plain,
}

impl StepScaling {
    pub fn name(self) -> &'static str {
        match self {
            StepScaling::Modulus => "modulus",
            StepScaling::Plain => "plain",
        }
    }

    /// Per-node step along the chain.
    fn steps(self, rho: f64, g_nodal: &[f64]) -> Vec<f64> {
        match self {
            StepScaling::Modulus => g_nodal.iter().map(|g| rho * g).collect(),
            StepScaling::Plain => vec![rho; g_nodal.len()],
        }
    }
}

impl std::str::FromStr for StepScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modulus" => Ok(StepScaling::Modulus),
            "plain" => Ok(StepScaling::Plain),
            other => Err(Error::InvalidArgument(format!("unknown step scaling '{other}'"))),
        }
    }
}

/// `Proj(λ + s ⊙ u)` with a per-node step `s`.
fn projected_step(lambda: &BoundaryTrace, steps: &[f64], trace: &BoundaryTrace) -> BoundaryTrace {
    let moved = lambda
        .values()
        .iter()
        .zip(steps)
        .zip(trace.values())
        .map(|((l, s), u)| l + s * u)
        .collect();
    project_tilde(&BoundaryTrace::from_chain(moved))
}

#[derive(Clone, Debug, PartialEq)]
pub enum LambdaInit {
    Constant(f64),
    Trace(BoundaryTrace),
}

impl LambdaInit {
    fn materialize(&self, m: usize) -> Result<BoundaryTrace> {
        match self {
            LambdaInit::Constant(c) => Ok(BoundaryTrace::constant(m, *c)),
            LambdaInit::Trace(t) if t.len() == 2 * m + 1 => Ok(t.clone()),
            LambdaInit::Trace(t) => Err(Error::LengthMismatch {
                expected: 2 * m + 1,
                actual: t.len(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UzawaParams {
    rho: f64,
    lambda_init: LambdaInit,
    pub scaling: StepScaling,
    pub tol: f64,
    pub max_iter: usize,
}

impl UzawaParams {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        Ok(Self {
            rho,
            lambda_init: LambdaInit::Constant(0.0),
            scaling: StepScaling::default(),
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        })
    }

    /// Constant initial multiplier, clipped into `[-1, 1]`.
    pub fn with_lambda_constant(mut self, c: f64) -> Self {
        self.lambda_init = LambdaInit::Constant(c.clamp(-1.0, 1.0));
        self
    }

    /// Initial multiplier trace, clipped into the admissible set.
    pub fn with_lambda_trace(mut self, t: &BoundaryTrace) -> Self {
        self.lambda_init = LambdaInit::Trace(project_tilde(t));
        self
    }

    pub fn with_scaling(mut self, scaling: StepScaling) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lambda_init(&self) -> &LambdaInit {
        &self.lambda_init
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `None` at `k = 1`, where there is no previous iterate.
    pub increment_h1: Option<f64>,
    pub energy_residual: f64,
    /// Interior nodes with `|λ^{k+1}| = 1`.
    pub n_active: usize,
}

#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    pub bc: BcKind,
    pub divisions: usize,
    /// Raw P2 velocity, two entries per node; constrained entries are zero.
    pub velocity: Vec<f64>,
    /// P1 pressure at the mesh vertices.
    pub pressure: Vec<f64>,
    pub multiplier: BoundaryTrace,
    /// Frictional velocity component on the Γ1 chain.
    pub trace_velocity: BoundaryTrace,
    /// `x` coordinate of every Γ1 chain node.
    pub trace_x: Vec<f64>,
    pub iterations: usize,
    pub final_increment: f64,
    pub rho: f64,
    pub scaling: StepScaling,
    pub log: Vec<IterationRecord>,
}

impl DiscreteSolution {
    /// Multiplier at the chain vertex nearest to `x`.
    pub fn multiplier_at(&self, x: f64) -> f64 {
        let m = self.multiplier.segments();
        let i = (x * m as f64).round().clamp(0.0, m as f64) as usize;
        self.multiplier.values()[2 * i]
    }

    pub fn max_trace_speed(&self) -> f64 {
        self.trace_velocity.values().iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

fn energy_residual(
    disc: &Discretization,
    space: &LambdaSpace,
    load: &[f64],
    free: &[f64],
    trace: &BoundaryTrace,
) -> f64 {
    let fu: f64 = load.iter().zip(free).map(|(a, b)| a * b).sum();
    let auu = disc.a().bilinear(free, free);
    (auu + space.j_h_slice(trace.values()) - fu).abs() / fu.abs().max(1.0)
}

/// Run the projected Uzawa iteration on `disc` with body force `force`.
pub fn run_uzawa(
    disc: &Discretization,
    force: &dyn BodyForce,
    g: &FrictionModulus,
    params: &UzawaParams,
) -> Result<DiscreteSolution> {
    let bc = disc.bc();
    let expected = PressureGauge::for_bc(bc);
    if disc.gauge() != expected {
        return Err(Error::InvalidPairing {
            bc: bc.name(),
            expected: expected.name(),
            actual: disc.gauge().name(),
        });
    }
    let space = disc.lambda_space(g)?;
    let load = disc.load(force, Execution::default());
    let m = disc.trace().segments();
    let trace_x: Vec<f64> = disc.trace().nodes.iter().map(|n| n.point[0]).collect();
    let steps = params.scaling.steps(params.rho, &g.nodal_values(disc.trace())?);
    let mut lambda = project_tilde(&params.lambda_init.materialize(m)?);
    let mut previous: Option<Vec<f64>> = None;
    let mut log = Vec::new();
    let mut last_increment = f64::INFINITY;
    let mut last = None;
    for k in 1..=params.max_iter.max(1) {
        let (free, pressure) = disc.solve_with_multiplier(&load, &space, &lambda)?;
        let trace = disc.trace_of_free(&free);
        let next = projected_step(&lambda, &steps, &trace);
        let increment = previous.as_ref().map(|prev| {
            let d: Vec<f64> = free.iter().zip(prev).map(|(a, b)| a - b).collect();
            disc.h1_norm(&d)
        });
        log.push(IterationRecord {
            k,
            increment_h1: increment,
            energy_residual: energy_residual(disc, &space, &load, &free, &trace),
            n_active: next.interior().iter().filter(|v| v.abs() == 1.0).count(),
        });
        if let Some(inc) = increment {
            last_increment = inc;
        }
        let solution = |free: &[f64], pressure: Vec<f64>, lambda: BoundaryTrace, log: Vec<IterationRecord>| {
            Ok::<_, Error>(DiscreteSolution {
                bc,
                divisions: disc.mesh().divisions(),
                velocity: disc.dofmap().prolong(free)?,
                pressure,
                multiplier: lambda,
                trace_velocity: trace.clone(),
                trace_x: trace_x.clone(),
                iterations: k,
                final_increment: last_increment,
                rho: params.rho,
                scaling: params.scaling,
                log,
            })
        };
        if matches!(increment, Some(inc) if inc <= params.tol) {
            return solution(&free, pressure, lambda, log);
        }
        if k == params.max_iter.max(1) {
            last = Some(solution(&free, pressure, lambda.clone(), log.clone())?);
        }
        lambda = next;
        previous = Some(free);
    }
    Err(Error::NonConvergence {
        max_iter: params.max_iter,
        last_increment,
        last_iterate: Box::new(last.expect("at least one iteration ran")),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeState {
    /// Trace velocity within the threshold.
    Stick,
    /// Slip (SBCF) or leak (LBCF).
    Active,
}

#[derive(Clone, Debug)]
pub struct NodeReport {
    pub x: f64,
    pub trace: f64,
    pub lambda: f64,
    pub state: NodeState,
    /// `|λ - sgn(trace)|` at active nodes, zero at stick nodes.
    pub mismatch: f64,
}

#[derive(Clone, Debug)]
pub struct ComplementarityReport {
    pub nodes: Vec<NodeReport>,
}

impl ComplementarityReport {
    pub fn active_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.state == NodeState::Active).count()
    }

    pub fn max_mismatch(&self) -> f64 {
        self.nodes.iter().fold(0.0, |a, n| a.max(n.mismatch))
    }

    pub fn max_stick_abs_lambda(&self) -> f64 {
        self.nodes
            .iter()
            .filter(|n| n.state == NodeState::Stick)
            .fold(0.0, |a, n| a.max(n.lambda.abs()))
    }

    /// Number of active nodes with positive and negative trace.
    pub fn signed_counts(&self) -> (usize, usize) {
        let active = self.nodes.iter().filter(|n| n.state == NodeState::Active);
        let pos = active.clone().filter(|n| n.trace > 0.0).count();
        (pos, active.count() - pos)
    }
}

/// Classify every interior Γ1 node by its trace velocity.
pub fn complementarity_report(sol: &DiscreteSolution, slip_threshold: f64) -> ComplementarityReport {
    let t = sol.trace_velocity.values();
    let l = sol.multiplier.values();
    let nodes = (1..t.len() - 1)
        .map(|k| {
            let active = t[k].abs() > slip_threshold;
            NodeReport {
                x: sol.trace_x[k],
                trace: t[k],
                lambda: l[k],
                state: if active { NodeState::Active } else { NodeState::Stick },
                mismatch: if active { (l[k] - sgn(t[k])).abs() } else { 0.0 },
            }
        })
        .collect();
    ComplementarityReport { nodes }
}

/// `|a(u,u) + j_h(u_trace) - (f,u)| / max(1, |(f,u)|)`.
pub fn energy_identity_residual(
    sol: &DiscreteSolution,
    disc: &Discretization,
    force: &dyn BodyForce,
    g: &FrictionModulus,
) -> Result<f64> {
    let space = disc.lambda_space(g)?;
    let free = disc.dofmap().restrict_to_free(&sol.velocity)?;
    let load = disc.load(force, Execution::default());
    let trace = disc.trace_of_free(&free);
    Ok(energy_residual(disc, &space, &load, &free, &trace))
}

/// `‖Proj(λ + ρ u_trace) - λ‖_Λ`.
pub fn fixed_point_residual(
    sol: &DiscreteSolution,
    disc: &Discretization,
    g: &FrictionModulus,
) -> Result<f64> {
    let space = disc.lambda_space(g)?;
    let moved = project_tilde(&sol.multiplier.axpy(sol.rho, &sol.trace_velocity));
    space.norm(&moved.axpy(-1.0, &sol.multiplier))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{ConstantForce, ManufacturedCase};

    #[test]
    fn default_rho_lookup() {
        assert_eq!(default_rho(BcKind::Sbcf, 0.8), 50.0);
        assert_eq!(default_rho(BcKind::Lbcf, 3.0), 2.0);
        assert_eq!(default_rho(BcKind::Sbcf, 4.0), 0.5);
    }

    #[test]
    fn params_validate_and_clip() {
        assert!(UzawaParams::new(0.0).is_err());
        let p = UzawaParams::new(1.0).unwrap().with_lambda_constant(3.0);
        assert_eq!(p.lambda_init(), &LambdaInit::Constant(1.0));
    }

    #[test]
    fn zero_force_gives_zero_solution() {
        let d = Discretization::new(4, BcKind::Sbcf, 1.0, Execution::Sequential).unwrap();
        let g = FrictionModulus::Constant(1.0);
        let s = run_uzawa(&d, &ConstantForce([0.0, 0.0]), &g, &UzawaParams::new(1.0).unwrap()).unwrap();
        assert_eq!(s.iterations, 2);
        assert!(s.velocity.iter().all(|&v| v == 0.0));
        assert_eq!(energy_identity_residual(&s, &d, &ConstantForce([0.0, 0.0]), &g).unwrap(), 0.0);
    }

    #[test]
    fn rejects_mismatched_gauge() {
        let d = Discretization::with_gauge(3, BcKind::Lbcf, 1.0, PressureGauge::MeanZero, Execution::Sequential)
            .unwrap();
        let r = run_uzawa(
            &d,
            &ManufacturedCase::default(),
            &FrictionModulus::Constant(1.0),
            &UzawaParams::new(1.0).unwrap(),
        );
        assert!(matches!(r, Err(Error::InvalidPairing { .. })));
    }

    #[test]
    fn nonconvergence_carries_last_iterate() {
        let d = Discretization::new(4, BcKind::Sbcf, 1.0, Execution::Sequential).unwrap();
        let r = run_uzawa(
            &d,
            &ManufacturedCase::default(),
            &FrictionModulus::Constant(0.8),
            &UzawaParams::new(50.0).unwrap().with_max_iter(1),
        );
        match r {
            Err(Error::NonConvergence { max_iter, last_iterate, .. }) => {
                assert_eq!(max_iter, 1);
                assert_eq!(last_iterate.log.len(), 1);
                assert!(last_iterate.log[0].increment_h1.is_none());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn step_scalings_share_the_fixed_point() {
        let d = Discretization::new(4, BcKind::Sbcf, 1.0, Execution::Sequential).unwrap();
        let g = FrictionModulus::Constant(0.8);
        let run = |scaling| {
            let p = UzawaParams::new(20.0).unwrap().with_scaling(scaling).with_tol(1e-10);
            run_uzawa(&d, &ManufacturedCase::default(), &g, &p).unwrap()
        };
        let (a, b) = (run(StepScaling::Modulus), run(StepScaling::Plain));
        let diff = a.multiplier.axpy(-1.0, &b.multiplier);
        assert!(diff.values().iter().all(|v| v.abs() < 1e-6), "{diff:?}");
    }

    #[test]
    fn step_scaling_parses() {
        assert_eq!("plain".parse::<StepScaling>().unwrap(), StepScaling::Plain);
        assert_eq!(StepScaling::Modulus.name().parse::<StepScaling>().unwrap(), StepScaling::Modulus);
        assert!("other".parse::<StepScaling>().is_err());
    }
}
