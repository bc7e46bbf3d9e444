//! Direct solver for the velocity–pressure saddle-point system
//!
//! ```text
//! [ A  Bᵀ  0 ] [u]   [F]
//! [ B  0   m ] [p] = [G]
//! [ 0  mᵀ  0 ] [s]   [0]
//! ```
//!
//! The last row and column exist only for [`PressureGauge::MeanZero`], with
//! `m_q = ∫ ψ_q`.
//!
//! The matrix `K` is not factorized directly. Instead a quasi-definite
//! neighbour `K_δ` is: the pressure diagonal becomes `-δ/ν` times the lumped
//! pressure mass and the gauge diagonal becomes `+δ`. A quasi-definite matrix
//! admits an `LDLᵀ` factorization under any symmetric ordering, so the
//! sparse factorization runs with an AMD ordering and no pivoting. Solves
//! with `K` then use iterative refinement `x ← x + K_δ⁻¹(b − Kx)`, which
//! contracts by roughly `δ / (β² + δ)` per step with `β` the inf-sup
//! constant. A singular `K` shows up as refinement that does not converge on
//! a probe right-hand side; the factorization then reports
//! [`Error::Singular`]. Everything runs sequentially, so solves are bitwise
//! reproducible.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::{LdltParams, LdltRegularization};
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, LdltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, MatMut, Par, Side, Spec};

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;
use crate::spaces::BcKind;

pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Relative size of the quasi-definite shift.
pub const REGULARIZATION: f64 = 1e-6;
const MAX_REFINEMENT_STEPS: usize = 40;
/// Relative probe error above which the matrix is reported singular.
const SINGULAR_PROBE_ERROR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PressureGauge {
    /// Pressures restricted to `∫ p = 0` through a bordered row.
    MeanZero,
    /// The full P1 pressure space.
    Full,
}

impl PressureGauge {
    pub fn for_bc(bc: BcKind) -> Self {
        match bc {
            BcKind::Sbcf => PressureGauge::MeanZero,
            BcKind::Lbcf => PressureGauge::Full,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PressureGauge::MeanZero => "mean-zero",
            PressureGauge::Full => "full",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SaddleSystem {
    a: SparseOperator,
    b: SparseOperator,
    gauge: PressureGauge,
    pressure_weights: Vec<f64>,
    nu: f64,
}

impl SaddleSystem {
    /// `pressure_weights` holds `∫ ψ_q`; it borders the mean-zero system
    /// and scales the quasi-definite shift. `nu` is the viscosity in `A`.
    pub fn new(
        a: SparseOperator,
        b: SparseOperator,
        gauge: PressureGauge,
        pressure_weights: Vec<f64>,
        nu: f64,
    ) -> Result<Self> {
        let (nv, np) = (a.nrows(), b.nrows());
        if a.ncols() != nv || b.ncols() != nv {
            return Err(Error::LengthMismatch {
                expected: nv,
                actual: b.ncols(),
            });
        }
        if pressure_weights.len() != np {
            return Err(Error::LengthMismatch {
                expected: np,
                actual: pressure_weights.len(),
            });
        }
        if !(nu > 0.0) {
            return Err(Error::InvalidArgument(format!("viscosity must be positive, got {nu}")));
        }
        Ok(Self {
            a,
            b,
            gauge,
            pressure_weights,
            nu,
        })
    }

    pub fn a(&self) -> &SparseOperator {
        &self.a
    }

    pub fn b(&self) -> &SparseOperator {
        &self.b
    }

    pub fn gauge(&self) -> PressureGauge {
        self.gauge
    }

    pub fn pressure_weights(&self) -> &[f64] {
        &self.pressure_weights
    }

    pub fn velocity_count(&self) -> usize {
        self.a.nrows()
    }

    pub fn pressure_count(&self) -> usize {
        self.b.nrows()
    }

    pub fn dim(&self) -> usize {
        let border = usize::from(self.gauge == PressureGauge::MeanZero);
        self.velocity_count() + self.pressure_count() + border
    }

    fn entries(&self, shift: f64) -> Vec<(usize, usize, f64)> {
        let (nv, np) = (self.velocity_count(), self.pressure_count());
        let mut entries: Vec<(usize, usize, f64)> = self.a.triplets().collect();
        for (q, k, v) in self.b.triplets() {
            entries.push((nv + q, k, v));
            entries.push((k, nv + q, v));
        }
        if shift != 0.0 {
            for (q, &m) in self.pressure_weights.iter().enumerate() {
                entries.push((nv + q, nv + q, -shift / self.nu * m));
            }
        }
        if self.gauge == PressureGauge::MeanZero {
            let s = nv + np;
            for (q, &m) in self.pressure_weights.iter().enumerate() {
                entries.push((nv + q, s, m));
                entries.push((s, nv + q, m));
            }
            if shift != 0.0 {
                entries.push((s, s, shift));
            }
        }
        entries
    }

    /// The assembled KKT matrix.
    pub fn kkt(&self) -> SparseOperator {
        SparseOperator::from_triplets(self.dim(), self.dim(), self.entries(0.0))
    }

    pub fn factorize(&self) -> Result<Factorization> {
        Factorization::new(self)
    }
}

/// Reusable factors of a [`SaddleSystem`]. Immutable once built; solves take
/// `&self` and allocate their own scratch, so they may run concurrently.
pub struct Factorization {
    kkt: SparseOperator,
    nv: usize,
    np: usize,
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    probe_error: f64,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization")
            .field("dim", &self.kkt.nrows())
            .field("nnz_factor", &self.values.len())
            .field("probe_error", &self.probe_error)
            .finish()
    }
}

fn backend(e: impl std::fmt::Debug) -> Error {
    Error::Backend(format!("{e:?}"))
}

impl Factorization {
    fn new(system: &SaddleSystem) -> Result<Self> {
        let n = system.dim();
        let lower: Vec<Triplet<usize, usize, f64>> = SparseOperator::from_triplets(
            n,
            n,
            system.entries(REGULARIZATION).into_iter().filter(|&(r, c, _)| r >= c),
        )
        .triplets()
        .map(|(r, c, v)| Triplet::new(r, c, v))
        .collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &lower).map_err(backend)?;
        let symbolic = factorize_symbolic_cholesky(
            mat.symbolic(),
            Side::Lower,
            SymmetricOrdering::Amd,
            Default::default(),
        )
        .map_err(backend)?;
        let mut values = vec![0.0; symbolic.len_val()];
        let params: Spec<LdltParams, f64> = Default::default();
        let mut mem = MemBuffer::try_new(symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, params))
            .map_err(backend)?;
        symbolic
            .factorize_numeric_ldlt(
                &mut values,
                mat.as_ref(),
                Side::Lower,
                LdltRegularization::default(),
                Par::Seq,
                MemStack::new(&mut mem),
                params,
            )
            .map_err(|e| match e {
                faer::linalg::cholesky::ldlt::factor::LdltError::ZeroPivot { index } => {
                    Error::Singular { index }
                }
            })?;
        let mut fact = Self {
            kkt: system.kkt(),
            nv: system.velocity_count(),
            np: system.pressure_count(),
            symbolic,
            values,
            probe_error: 0.0,
        };
        let (err, worst) = fact.probe();
        fact.probe_error = err;
        if !(err <= SINGULAR_PROBE_ERROR) {
            return Err(Error::Singular { index: worst });
        }
        Ok(fact)
    }

    pub fn dim(&self) -> usize {
        self.kkt.nrows()
    }

    /// Relative error of the refined solve against a known solution, measured
    /// when the factorization was built.
    pub fn probe_error(&self) -> f64 {
        self.probe_error
    }

    fn regularized_solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        let req = self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq);
        let mut mem = MemBuffer::new(req);
        let x = MatMut::from_column_major_slice_mut(rhs, n, 1);
        LdltRef::new(&self.symbolic, &self.values).solve_in_place_with_conj(
            Conj::No,
            x,
            Par::Seq,
            MemStack::new(&mut mem),
        );
    }

    /// Refined solve of `K x = rhs`; returns `x` and the relative residual.
    fn refined_solve(&self, rhs: &[f64]) -> (Vec<f64>, f64) {
        let rhs_norm = norm2(rhs);
        let mut x = rhs.to_vec();
        self.regularized_solve(&mut x);
        let mut achieved = f64::INFINITY;
        for _ in 0..MAX_REFINEMENT_STEPS {
            let kx = self.kkt.mul_vec(&x);
            let mut r: Vec<f64> = rhs.iter().zip(&kx).map(|(b, k)| b - k).collect();
            let res = norm2(&r) / rhs_norm;
            let stalled = res > 0.5 * achieved;
            achieved = achieved.min(res);
            if res <= RESIDUAL_TOLERANCE * 1e-3 || stalled {
                break;
            }
            self.regularized_solve(&mut r);
            for (xi, di) in x.iter_mut().zip(&r) {
                *xi += di;
            }
        }
        (x, achieved)
    }

    fn probe(&self) -> (f64, usize) {
        let n = self.dim();
        let exact: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.754_877_666).fract() - 0.5).collect();
        let rhs = self.kkt.mul_vec(&exact);
        let (x, _) = self.refined_solve(&rhs);
        let diff: Vec<f64> = x.iter().zip(&exact).map(|(a, b)| a - b).collect();
        let worst = argmax_abs(&diff);
        let scale = exact.iter().map(|v| v.abs()).fold(0.0, f64::max);
        (diff[worst].abs() / scale, worst)
    }

    /// Solve for `(velocity, pressure)` given the momentum and continuity
    /// right-hand sides. The relative KKT residual is at most
    /// [`RESIDUAL_TOLERANCE`] or an error is returned.
    pub fn solve(&self, momentum: &[f64], continuity: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if momentum.len() != self.nv {
            return Err(Error::LengthMismatch {
                expected: self.nv,
                actual: momentum.len(),
            });
        }
        if continuity.len() != self.np {
            return Err(Error::LengthMismatch {
                expected: self.np,
                actual: continuity.len(),
            });
        }
        let mut rhs = vec![0.0; self.dim()];
        rhs[..self.nv].copy_from_slice(momentum);
        rhs[self.nv..self.nv + self.np].copy_from_slice(continuity);
        if rhs.iter().all(|&v| v == 0.0) {
            return Ok((vec![0.0; self.nv], vec![0.0; self.np]));
        }
        let (mut x, achieved) = self.refined_solve(&rhs);
        if !(achieved <= RESIDUAL_TOLERANCE) {
            return Err(Error::ResidualFailure {
                achieved,
                tolerance: RESIDUAL_TOLERANCE,
            });
        }
        let p = x[self.nv..self.nv + self.np].to_vec();
        x.truncate(self.nv);
        Ok((x, p))
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn argmax_abs(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, -1.0), |(bi, bv), (i, x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) })
        .0
}
