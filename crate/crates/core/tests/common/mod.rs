//! Checks shared by several integration-test targets.
#![allow(dead_code)]

use friction_stokes::friction::{j_exact, j_h, lambda_inner, project_tilde, BoundaryTrace, FrictionModulus, LambdaSpace};
use friction_stokes::mesh::{build_friedrichs_keller, extract_gamma1_trace, Gamma1Trace};
use friction_stokes::quadrature::gauss_legendre_unit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SEED: u64 = 0x5eed_f1c7;

pub fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ stream)
}

pub fn chain(m: usize) -> Gamma1Trace {
    extract_gamma1_trace(&build_friedrichs_keller(m).unwrap())
}

pub fn random_trace(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> BoundaryTrace {
    let interior: Vec<f64> = (0..2 * m - 1).map(|_| rng.random_range(-scale..scale)).collect();
    BoundaryTrace::from_interior(&interior)
}

/// Positive modulus: constant or affine in `x`, chosen at random.
pub fn random_modulus(rng: &mut ChaCha8Rng) -> FrictionModulus {
    if rng.random_bool(0.5) {
        FrictionModulus::Constant(rng.random_range(0.05..3.0))
    } else {
        let a: f64 = rng.random_range(0.1..2.0);
        let b: f64 = rng.random_range(-a * 0.9..2.0);
        FrictionModulus::Affine { intercept: a, slope: b }
    }
}

/// `‖η‖_{L²(Γ1)}` of the piecewise-quadratic trace by 16-point Gauss per side.
pub fn l2_norm(eta: &BoundaryTrace, trace: &Gamma1Trace) -> f64 {
    let rule = gauss_legendre_unit(16);
    let v = eta.values();
    let mut s = 0.0;
    for (i, &len) in trace.segment_lengths.iter().enumerate() {
        let (e0, em, e1) = (v[2 * i], v[2 * i + 1], v[2 * i + 2]);
        for &(t, w) in &rule {
            let q = e0 * (1.0 - t) * (1.0 - 2.0 * t) + 4.0 * em * t * (1.0 - t) + e1 * t * (2.0 * t - 1.0);
            s += w * len * q * q;
        }
    }
    s.sqrt()
}

/// Trace whose quadratic is of one sign on every side: a sign per side,
/// zero at vertices where the sign flips, and midpoints above the chord.
pub fn sign_constant_trace(rng: &mut ChaCha8Rng, m: usize) -> BoundaryTrace {
    let signs: Vec<f64> = (0..m).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let mut v = vec![0.0; 2 * m + 1];
    for i in 1..m {
        if signs[i - 1] == signs[i] {
            v[2 * i] = signs[i] * rng.random_range(0.0..2.0);
        }
    }
    for i in 0..m {
        let chord = 0.5 * (v[2 * i].abs() + v[2 * i + 2].abs());
        v[2 * i + 1] = signs[i] * (chord + rng.random_range(0.0..2.0));
    }
    BoundaryTrace::from_chain(v)
}

/// Largest `|j_h - j_exact|` over random affine moduli and sign-constant traces.
pub fn simpson_exactness_gap(cases: usize) -> f64 {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for c in 0..cases {
        let m = [2, 3, 5, 10][c % 4];
        let t = chain(m);
        let a: f64 = r.random_range(0.1..2.0);
        let g = FrictionModulus::Affine {
            intercept: a,
            slope: r.random_range(-0.9 * a..2.0),
        };
        let eta = sign_constant_trace(&mut r, m);
        let gap = (j_h(&eta, &g, &t).unwrap() - j_exact(&eta, &g, &t, 32).unwrap()).abs();
        worst = worst.max(gap);
    }
    worst
}

/// Largest ratio `j_h(η) / (|Γ1|^½ (5/2)^½ sup g ‖η‖_{L²})` over 1000 random
/// traces at each `m ∈ {2, 5, 10}`; the bound holds when this is ≤ 1.
pub fn continuity_bound_ratio() -> f64 {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for m in [2, 5, 10] {
        let t = chain(m);
        for _ in 0..1000 {
            let g = random_modulus(&mut r);
            let eta = random_trace(&mut r, m, 1.0);
            let sup_g = g.max_on(&t).unwrap();
            let bound = 1.0f64.sqrt() * 2.5f64.sqrt() * sup_g * l2_norm(&eta, &t);
            worst = worst.max(j_h(&eta, &g, &t).unwrap() / bound);
        }
    }
    worst
}

/// Largest `‖Pμ - Pν‖ - ‖μ - ν‖` in the Λ-norm over 1000 random pairs.
pub fn nonexpansive_excess() -> f64 {
    let mut r = rng(3);
    let mut worst = f64::MIN;
    for k in 0..1000 {
        let m = [2, 5, 10][k % 3];
        let t = chain(m);
        let space = LambdaSpace::new(&t, &random_modulus(&mut r)).unwrap();
        let mu = random_trace(&mut r, m, 3.0);
        let nu = random_trace(&mut r, m, 3.0);
        let lhs = space.norm(&project_tilde(&mu).axpy(-1.0, &project_tilde(&nu))).unwrap();
        let rhs = space.norm(&mu.axpy(-1.0, &nu)).unwrap();
        worst = worst.max(lhs - rhs);
    }
    worst
}

/// Membership in the clipped set decided by the `2(2m-1)` one-hot probes
/// `±e_k`, compared with the direct nodewise test. Returns the number of
/// disagreements over `cases` random multipliers at `m ∈ {2, 3}`.
pub fn probe_characterization_mismatches(cases: usize) -> usize {
    let mut r = rng(4);
    let mut bad = 0;
    for c in 0..cases {
        let m = 2 + c % 2;
        let t = chain(m);
        let g = random_modulus(&mut r);
        let lambda = random_trace(&mut r, m, 1.3);
        let mut by_probes = true;
        for k in 0..2 * m - 1 {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; 2 * m - 1];
                e[k] = s;
                let eta = BoundaryTrace::from_interior(&e);
                let lhs = lambda_inner(&eta, &lambda, &g, &t).unwrap();
                if lhs > j_h(&eta, &g, &t).unwrap() {
                    by_probes = false;
                }
            }
        }
        if by_probes != lambda.is_admissible() {
            bad += 1;
        }
    }
    bad
}

/// Largest `|(η, λ)_Λ|` where `g λ ≡ δ` and `η` runs over a basis of the
/// zero-mean traces, at `m ∈ {2, 3}` with non-constant `g`.
pub fn zero_mean_annihilation() -> f64 {
    let mut worst: f64 = 0.0;
    for m in [2, 3] {
        let t = chain(m);
        let g = FrictionModulus::Affine { intercept: 0.7, slope: 1.1 };
        let nodal = g.nodal_values(&t).unwrap();
        let delta = 0.37;
        let lambda = BoundaryTrace::from_chain(
            nodal.iter().enumerate().map(|(k, gk)| if t.is_extreme(k) { 0.0 } else { delta / gk }).collect(),
        );
        // Plain Simpson weights give ∫η ds exactly for piecewise quadratics.
        let w = t.simpson_weights();
        let interior: Vec<usize> = t.interior().collect();
        for &k in &interior[1..] {
            let mut v = vec![0.0; t.len()];
            v[interior[0]] = w[k];
            v[k] = -w[interior[0]];
            let eta = BoundaryTrace::from_chain(v);
            let mean: f64 = eta.values().iter().zip(&w).map(|(a, b)| a * b).sum();
            assert!(mean.abs() < 1e-15);
            worst = worst.max(lambda_inner(&eta, &lambda, &g, &t).unwrap().abs());
        }
    }
    worst
}
