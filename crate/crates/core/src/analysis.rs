//! Error norms between nested solutions, convergence studies and the
//! threshold experiment.

use std::fmt::Write as _;

use crate::assembly::{reference_tables, ManufacturedCase};
use crate::discretization::shared;
use crate::element::{p2_ref_gradients, p2_values, AffineMap};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::friction::FrictionModulus;
use crate::mesh::{build_friedrichs_keller, Mesh, Point};
use crate::spaces::BcKind;
use crate::uzawa::{
    complementarity_report, default_rho, run_uzawa, DiscreteSolution, NodeState, StepScaling,
    UzawaParams, DEFAULT_MAX_ITER, DEFAULT_TOL,
};

/// Velocity, velocity gradient and pressure at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub velocity: [f64; 2],
    /// `grad[i][j] = ∂u_i/∂x_j`.
    pub grad: [[f64; 2]; 2],
    pub pressure: f64,
}

/// A velocity/pressure pair that can be sampled pointwise.
///
/// `hint` lies strictly inside the fine cell that contains `p`; piecewise
/// fields use it to pick their element so that points on shared edges are
/// evaluated from the correct side.
pub trait FlowField: Sync {
    fn sample(&self, hint: Point, p: Point) -> FieldSample;
}

impl FlowField for ManufacturedCase {
    fn sample(&self, _hint: Point, p: Point) -> FieldSample {
        FieldSample {
            velocity: self.velocity(p),
            grad: self.velocity_gradient(p),
            pressure: self.pressure(p),
        }
    }
}

/// P2 velocity and P1 pressure on a uniform mesh.
#[derive(Clone, Debug)]
pub struct DiscreteField<'a> {
    mesh: Mesh,
    velocity: &'a [f64],
    pressure: &'a [f64],
}

impl<'a> DiscreteField<'a> {
    pub fn new(mesh: Mesh, velocity: &'a [f64], pressure: &'a [f64]) -> Result<Self> {
        if velocity.len() != 2 * mesh.p2_node_count() {
            return Err(Error::LengthMismatch {
                expected: 2 * mesh.p2_node_count(),
                actual: velocity.len(),
            });
        }
        if pressure.len() != mesh.vertex_count() {
            return Err(Error::LengthMismatch {
                expected: mesh.vertex_count(),
                actual: pressure.len(),
            });
        }
        Ok(Self {
            mesh,
            velocity,
            pressure,
        })
    }

    pub fn from_solution(sol: &'a DiscreteSolution) -> Result<Self> {
        Self::new(build_friedrichs_keller(sol.divisions)?, &sol.velocity, &sol.pressure)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// Pressure at mesh vertex `v`.
    pub fn vertex_pressure(&self, v: usize) -> f64 {
        self.pressure[v]
    }
}

impl FlowField for DiscreteField<'_> {
    fn sample(&self, hint: Point, p: Point) -> FieldSample {
        let t = self.mesh.locate(hint);
        let map = AffineMap::new(self.mesh.triangle_coords(t));
        let l = map.barycentric(p);
        let nodes = self.mesh.triangle_p2_nodes(t);
        let phi = p2_values(l);
        let dphi = p2_ref_gradients(l);
        let mut velocity = [0.0; 2];
        let mut grad = [[0.0; 2]; 2];
        for (a, &k) in nodes.iter().enumerate() {
            let d = map.gradient(dphi[a]);
            for c in 0..2 {
                let u = self.velocity[2 * k + c];
                velocity[c] += u * phi[a];
                grad[c][0] += u * d[0];
                grad[c][1] += u * d[1];
            }
        }
        let tri = self.mesh.triangles[t];
        let pressure = (0..3).map(|i| l[i] * self.pressure[tri[i]]).sum();
        FieldSample {
            velocity,
            grad,
            pressure,
        }
    }
}

/// `∫ f(a, b)` over `mesh` with the degree-8 rule, where `a` and `b` are
/// samples of the two fields. Cell sums are combined in cell order.
fn integrate_pair(
    mesh: &Mesh,
    a: &dyn FlowField,
    b: &dyn FlowField,
    f: impl Fn(&FieldSample, &FieldSample) -> f64 + Sync + Send,
) -> f64 {
    let tables = reference_tables();
    let cells = Execution::default().map_range(mesh.triangle_count(), |t| {
        let map = AffineMap::new(mesh.triangle_coords(t));
        let hint = map.to_physical([1.0 / 3.0; 3]);
        let mut s = 0.0;
        for q in &tables.points {
            let p = map.to_physical(q.bary);
            s += q.weight * f(&a.sample(hint, p), &b.sample(hint, p));
        }
        s * map.area()
    });
    cells.iter().sum()
}

fn check_nested(coarse: usize, fine: usize) -> Result<()> {
    if coarse == 0 || !fine.is_multiple_of(coarse) {
        return Err(Error::NonNested { coarse, fine });
    }
    Ok(())
}

/// `‖a - b‖_{H¹(Ω)²}` integrated on `fine_mesh`. Exact when `a` and `b` are
/// polynomial on every fine cell up to the rule's degree.
pub fn h1_distance(fine_mesh: &Mesh, a: &dyn FlowField, b: &dyn FlowField) -> f64 {
    integrate_pair(fine_mesh, a, b, |x, y| {
        let mut s = 0.0;
        for c in 0..2 {
            s += (x.velocity[c] - y.velocity[c]).powi(2);
            for d in 0..2 {
                s += (x.grad[c][d] - y.grad[c][d]).powi(2);
            }
        }
        s
    })
    .max(0.0)
    .sqrt()
}

/// `‖(a + shift) - b‖_{L²(Ω)}` for the pressures, integrated on `fine_mesh`.
pub fn l2_pressure_distance(fine_mesh: &Mesh, a: &dyn FlowField, b: &dyn FlowField, shift: f64) -> f64 {
    integrate_pair(fine_mesh, a, b, |x, y| (x.pressure + shift - y.pressure).powi(2))
        .max(0.0)
        .sqrt()
}

fn pressure_integral(mesh: &Mesh, a: &dyn FlowField) -> f64 {
    integrate_pair(mesh, a, a, |x, _| x.pressure)
}

/// How the free additive constant of a pressure is fixed before comparing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PressureNormalization {
    /// Shift so that both pressures agree at this point.
    PointMatch(Point),
    /// Shift so that both pressures have the same mean.
    MeanZero,
}

impl Default for PressureNormalization {
    fn default() -> Self {
        PressureNormalization::PointMatch([0.0, 0.0])
    }
}

impl PressureNormalization {
    pub fn name(&self) -> String {
        match self {
            PressureNormalization::PointMatch(p) => format!("point({},{})", p[0], p[1]),
            PressureNormalization::MeanZero => "mean".to_string(),
        }
    }

    /// Constant to add to `a`'s pressure so that it is normalized like `b`'s.
    pub fn shift(&self, fine_mesh: &Mesh, a: &dyn FlowField, b: &dyn FlowField) -> f64 {
        match *self {
            PressureNormalization::PointMatch(p) => {
                let hint = fine_mesh.triangle_coords(fine_mesh.locate(p));
                let c = [
                    (hint[0][0] + hint[1][0] + hint[2][0]) / 3.0,
                    (hint[0][1] + hint[1][1] + hint[2][1]) / 3.0,
                ];
                b.sample(c, p).pressure - a.sample(c, p).pressure
            }
            PressureNormalization::MeanZero => {
                pressure_integral(fine_mesh, b) - pressure_integral(fine_mesh, a)
            }
        }
    }
}

/// H¹ velocity error of `coarse` against the nested `fine` solution.
pub fn h1_error(coarse: &DiscreteSolution, fine: &DiscreteSolution) -> Result<f64> {
    check_nested(coarse.divisions, fine.divisions)?;
    let c = DiscreteField::from_solution(coarse)?;
    let f = DiscreteField::from_solution(fine)?;
    Ok(h1_distance(f.mesh(), &c, &f))
}

/// L² pressure error of `coarse` against the nested `fine` solution after
/// normalizing the additive constant.
pub fn l2_pressure_error(
    coarse: &DiscreteSolution,
    fine: &DiscreteSolution,
    normalization: PressureNormalization,
) -> Result<f64> {
    check_nested(coarse.divisions, fine.divisions)?;
    let c = DiscreteField::from_solution(coarse)?;
    let f = DiscreteField::from_solution(fine)?;
    let shift = normalization.shift(f.mesh(), &c, &f);
    Ok(l2_pressure_distance(f.mesh(), &c, &f, shift))
}

/// Inputs of a convergence study.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub bc: BcKind,
    pub g: f64,
    pub levels: Vec<usize>,
    pub reference: usize,
    pub nu: f64,
    /// `None` selects [`default_rho`].
    pub rho: Option<f64>,
    pub lambda_init: f64,
    pub scaling: StepScaling,
    pub tol: f64,
    pub max_iter: usize,
    pub normalization: PressureNormalization,
}

pub const STUDY_LEVELS: [usize; 7] = [10, 12, 15, 20, 24, 30, 40];
pub const STUDY_REFERENCE: usize = 120;
pub const FALLBACK_LEVELS: [usize; 3] = [10, 20, 40];
pub const FALLBACK_REFERENCE: usize = 80;

impl StudyConfig {
    pub fn new(bc: BcKind, g: f64) -> Self {
        Self {
            bc,
            g,
            levels: STUDY_LEVELS.to_vec(),
            reference: STUDY_REFERENCE,
            nu: 1.0,
            rho: None,
            lambda_init: 0.0,
            scaling: StepScaling::default(),
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            normalization: PressureNormalization::default(),
        }
    }

    /// The smaller `{10, 20, 40}` against `80` variant.
    pub fn fallback(bc: BcKind, g: f64) -> Self {
        Self {
            levels: FALLBACK_LEVELS.to_vec(),
            reference: FALLBACK_REFERENCE,
            ..Self::new(bc, g)
        }
    }

    pub fn params(&self) -> Result<UzawaParams> {
        Ok(UzawaParams::new(self.rho.unwrap_or_else(|| default_rho(self.bc, self.g)))?
            .with_lambda_constant(self.lambda_init)
            .with_scaling(self.scaling)
            .with_tol(self.tol)
            .with_max_iter(self.max_iter))
    }

    fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidArgument("no levels given".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("levels must be strictly increasing".into()));
        }
        for &n in &self.levels {
            check_nested(n, self.reference)?;
        }
        if !(self.g > 0.0) {
            return Err(Error::InvalidArgument(format!("g must be positive, got {}", self.g)));
        }
        Ok(())
    }
}

/// Solve the manufactured problem at level `n`.
pub fn solve_level(n: usize, config: &StudyConfig) -> Result<DiscreteSolution> {
    let disc = shared(n, config.bc, config.nu, Execution::default())?;
    run_uzawa(
        &disc,
        &ManufacturedCase { nu: config.nu },
        &FrictionModulus::Constant(config.g),
        &config.params()?,
    )
    .map_err(|e| Error::Level {
        level: n,
        source: Box::new(e),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub h: f64,
    pub h1_error: f64,
    pub h1_rate: Option<f64>,
    pub l2_error: f64,
    pub l2_rate: Option<f64>,
    pub k_itr: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceStudy {
    pub config: StudyConfig,
    pub reference_iterations: usize,
    pub rows: Vec<StudyRow>,
}

/// `log(e_i / e_{i+1}) / log(N_{i+1} / N_i)`.
pub fn pair_rate(n0: usize, e0: f64, n1: usize, e1: f64) -> f64 {
    (e0 / e1).ln() / (n1 as f64 / n0 as f64).ln()
}

/// Least-squares slope of `log e` against `log(1/N)`; `None` below two points.
pub fn fitted_slope(ns: &[usize], errors: &[f64]) -> Option<f64> {
    if ns.len() < 2 || ns.len() != errors.len() {
        return None;
    }
    let xs: Vec<f64> = ns.iter().map(|&n| -(n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

impl ConvergenceStudy {
    fn column(&self, f: impl Fn(&StudyRow) -> f64) -> (Vec<usize>, Vec<f64>) {
        (self.rows.iter().map(|r| r.n).collect(), self.rows.iter().map(f).collect())
    }

    pub fn h1_slope(&self) -> Option<f64> {
        let (n, e) = self.column(|r| r.h1_error);
        fitted_slope(&n, &e)
    }

    pub fn l2_slope(&self) -> Option<f64> {
        let (n, e) = self.column(|r| r.l2_error);
        fitted_slope(&n, &e)
    }

    /// All pair rates of both columns.
    pub fn pair_rates(&self) -> Vec<f64> {
        self.rows
            .iter()
            .flat_map(|r| [r.h1_rate, r.l2_rate])
            .flatten()
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,h,h1_error,h1_rate,l2_error,l2_rate,k_itr\n");
        let rate = |r: Option<f64>| r.map(|v| format!("{v:.5e}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.5e},{:.5e},{},{:.5e},{},{}",
                r.n,
                r.h,
                r.h1_error,
                rate(r.h1_rate),
                r.l2_error,
                rate(r.l2_rate),
                r.k_itr
            );
        }
        out
    }
}

/// Solve every level and the reference, then tabulate errors and rates.
/// Levels run concurrently; the reference is solved once and shared.
pub fn run_convergence_study(config: &StudyConfig) -> Result<ConvergenceStudy> {
    config.validate()?;
    let reference = solve_level(config.reference, config)?;
    let fine = DiscreteField::from_solution(&reference)?;
    let measured = Execution::default().map(&config.levels, |&n| -> Result<(usize, f64, f64, usize)> {
        let sol = solve_level(n, config)?;
        let coarse = DiscreteField::from_solution(&sol)?;
        let h1 = h1_distance(fine.mesh(), &coarse, &fine);
        let shift = config.normalization.shift(fine.mesh(), &coarse, &fine);
        let l2 = l2_pressure_distance(fine.mesh(), &coarse, &fine, shift);
        Ok((n, h1, l2, sol.iterations))
    });
    let mut rows: Vec<StudyRow> = Vec::with_capacity(measured.len());
    for m in measured {
        let (n, h1_error, l2_error, k_itr) = m?;
        let (h1_rate, l2_rate) = match rows.last() {
            Some(p) => (
                Some(pair_rate(p.n, p.h1_error, n, h1_error)),
                Some(pair_rate(p.n, p.l2_error, n, l2_error)),
            ),
            None => (None, None),
        };
        rows.push(StudyRow {
            n,
            h: 1.0 / n as f64,
            h1_error,
            h1_rate,
            l2_error,
            l2_rate,
            k_itr,
        });
    }
    Ok(ConvergenceStudy {
        config: config.clone(),
        reference_iterations: reference.iterations,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdEntry {
    pub g: f64,
    pub rho: f64,
    pub iterations: usize,
    pub max_trace_speed: f64,
    /// Interior trace nodes at rest.
    pub stick: usize,
    /// Moving nodes with positive / negative trace velocity.
    pub positive: usize,
    pub negative: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdReport {
    pub bc: BcKind,
    pub divisions: usize,
    pub entries: Vec<ThresholdEntry>,
}

impl ThresholdReport {
    /// Whether a larger `g` never produces a larger trace speed, up to `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        let mut sorted: Vec<&ThresholdEntry> = self.entries.iter().collect();
        sorted.sort_by(|a, b| a.g.total_cmp(&b.g));
        sorted
            .windows(2)
            .all(|w| w[1].max_trace_speed <= w[0].max_trace_speed + slack)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("g,rho,k_itr,max_trace_speed,stick,positive,negative\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{:.5e},{:.5e},{},{:.5e},{},{},{}",
                e.g, e.rho, e.iterations, e.max_trace_speed, e.stick, e.positive, e.negative
            );
        }
        out
    }
}

/// Nodes with `|u| ≤ slip_threshold` count as resting.
pub const SLIP_THRESHOLD: f64 = 1e-4;

/// Solve the manufactured problem at level `n` for each `g` and record how
/// much the boundary moves.
pub fn threshold_experiment(
    bc: BcKind,
    g_values: &[f64],
    n: usize,
    scaling: StepScaling,
) -> Result<ThresholdReport> {
    let disc = shared(n, bc, 1.0, Execution::default())?;
    let mut entries = Vec::with_capacity(g_values.len());
    for &g in g_values {
        let rho = default_rho(bc, g);
        let params = UzawaParams::new(rho)?.with_scaling(scaling);
        let sol = run_uzawa(&disc, &ManufacturedCase::default(), &FrictionModulus::Constant(g), &params)?;
        let report = complementarity_report(&sol, SLIP_THRESHOLD);
        let (positive, negative) = report.signed_counts();
        let stick = report.nodes.iter().filter(|r| r.state == NodeState::Stick).count();
        entries.push(ThresholdEntry {
            g,
            rho,
            iterations: sol.iterations,
            max_trace_speed: sol.max_trace_speed(),
            stick,
            positive,
            negative,
        });
    }
    Ok(ThresholdReport {
        bc,
        divisions: n,
        entries,
    })
}

/// One column of a multiplier table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplierColumn {
    pub bc: BcKind,
    pub g: f64,
    pub rho: f64,
    pub lambda_init: f64,
}

impl MultiplierColumn {
    pub fn label(&self) -> String {
        format!("{}:{}:{}:{}", self.bc, self.g, self.rho, self.lambda_init)
    }
}

impl std::str::FromStr for MultiplierColumn {
    type Err = Error;

    /// `bc:g:rho:lambda`, e.g. `lbcf:3.0:2.0:0.2`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [bc, g, rho, l] = parts[..] else {
            return Err(Error::InvalidArgument(format!(
                "column '{s}' must have the form bc:g:rho:lambda"
            )));
        };
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("column '{s}': cannot parse '{v}'")))
        };
        let (g, rho, lambda_init) = (num(g)?, num(rho)?, num(l)?);
        if !(g > 0.0) || !(rho > 0.0) {
            return Err(Error::InvalidArgument(format!("column '{s}': g and rho must be positive")));
        }
        Ok(Self {
            bc: bc.parse()?,
            g,
            rho,
            lambda_init,
        })
    }
}

/// The seven columns of the reference multiplier table.
pub fn table_columns() -> Vec<MultiplierColumn> {
    [
        (BcKind::Sbcf, 0.1, 1000.0, 0.0),
        (BcKind::Sbcf, 0.8, 50.0, 0.0),
        (BcKind::Sbcf, 2.0, 3.0, 0.0),
        (BcKind::Lbcf, 0.1, 20.0, 0.0),
        (BcKind::Lbcf, 1.2, 30.0, 0.0),
        (BcKind::Lbcf, 3.0, 2.0, 0.0),
        (BcKind::Lbcf, 3.0, 2.0, 0.2),
    ]
    .into_iter()
    .map(|(bc, g, rho, lambda_init)| MultiplierColumn {
        bc,
        g,
        rho,
        lambda_init,
    })
    .collect()
}

/// Sample abscissae `0.0, 0.1, …, 1.0`.
pub fn table_abscissae() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Clone, Debug)]
pub struct MultiplierTable {
    pub divisions: usize,
    pub columns: Vec<MultiplierColumn>,
    pub solutions: Vec<DiscreteSolution>,
}

impl MultiplierTable {
    /// `values[c][i]`: column `c` at the `i`-th abscissa.
    pub fn values(&self) -> Vec<Vec<f64>> {
        self.solutions
            .iter()
            .map(|s| table_abscissae().iter().map(|&x| s.multiplier_at(x)).collect())
            .collect()
    }

    pub fn iterations(&self) -> Vec<usize> {
        self.solutions.iter().map(|s| s.iterations).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x");
        for c in &self.columns {
            out.push(',');
            out.push_str(&c.label());
        }
        out.push('\n');
        let values = self.values();
        for (i, x) in table_abscissae().iter().enumerate() {
            out.push_str(&format!("{x:.5e}"));
            for col in &values {
                let _ = write!(out, ",{:.5e}", col[i]);
            }
            out.push('\n');
        }
        out.push_str("k_itr");
        for k in self.iterations() {
            let _ = write!(out, ",{k}");
        }
        out.push('\n');
        out
    }
}

/// Run every column at level `n` on the manufactured problem.
pub fn multiplier_table(
    columns: &[MultiplierColumn],
    n: usize,
    scaling: StepScaling,
    tol: f64,
    max_iter: usize,
) -> Result<MultiplierTable> {
    let solutions = columns
        .iter()
        .map(|c| {
            let disc = shared(n, c.bc, 1.0, Execution::default())?;
            let params = UzawaParams::new(c.rho)?
                .with_lambda_constant(c.lambda_init)
                .with_scaling(scaling)
                .with_tol(tol)
                .with_max_iter(max_iter);
            run_uzawa(&disc, &ManufacturedCase::default(), &FrictionModulus::Constant(c.g), &params)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiplierTable {
        divisions: n,
        columns: columns.to_vec(),
        solutions,
    })
}
