//! Fixed quadrature rules.
//!
//! Triangle integrals use the 16-point symmetric Dunavant rule, exact for
//! polynomials of total degree 8. It covers the degree-6 body force times a
//! quadratic test function, so one rule serves every volume term.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

/// Barycentric point `(l1, l2, l3)` and weight, normalized so the weights
/// sum to one (multiply by the triangle area).
#[derive(Clone, Copy, Debug)]
pub struct TriPoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

pub const DEGREE: usize = 8;

fn orbit3(a: f64, w: f64) -> [TriPoint; 3] {
    let b = 0.5 * (1.0 - a);
    [
        TriPoint { bary: [a, b, b], weight: w },
        TriPoint { bary: [b, a, b], weight: w },
        TriPoint { bary: [b, b, a], weight: w },
    ]
}

fn orbit6(a: f64, b: f64, w: f64) -> [TriPoint; 6] {
    let c = 1.0 - a - b;
    [
        TriPoint { bary: [a, b, c], weight: w },
        TriPoint { bary: [a, c, b], weight: w },
        TriPoint { bary: [b, a, c], weight: w },
        TriPoint { bary: [b, c, a], weight: w },
        TriPoint { bary: [c, a, b], weight: w },
        TriPoint { bary: [c, b, a], weight: w },
    ]
}

pub fn triangle_rule() -> Vec<TriPoint> {
    let mut pts = vec![TriPoint {
        bary: [1.0 / 3.0; 3],
        weight: 0.144_315_607_677_787,
    }];
    pts.extend(orbit3(0.081_414_823_414_554, 0.095_091_634_267_285));
    pts.extend(orbit3(0.658_861_384_496_480, 0.103_217_370_534_718));
    pts.extend(orbit3(0.898_905_543_365_938, 0.032_458_497_623_198));
    pts.extend(orbit6(
        0.008_394_777_409_958,
        0.263_112_829_634_638,
        0.027_230_314_174_435,
    ));
    pts
}

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`.
pub fn gauss_legendre_unit(points: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(points.max(1)).expect("nonzero");
    GaussLegendre::new(n)
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}
