//! Digamma, trigamma and log-gamma.
//!
//! ψ and ψ′ use upward recurrence into x ≥ 10 followed by the asymptotic
//! Bernoulli series; both are accurate to ~1e-13 relative for x ≥ 1e-6.

/// B_{2k} / (2k) for k = 1..7.
const DIGAMMA_SERIES: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

/// B_{2k} for k = 1..7.
const TRIGAMMA_SERIES: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

const ASYMPTOTIC_THRESHOLD: f64 = 10.0;

/// ψ(x) for x > 0. Returns NaN for non-positive or NaN input.
pub fn digamma(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return f64::NAN;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    let mut shift = 0.0;
    let mut z = x;
    while z < ASYMPTOTIC_THRESHOLD {
        shift -= 1.0 / z;
        z += 1.0;
    }
    let inv2 = 1.0 / (z * z);
    let mut term = inv2;
    let mut series = 0.0;
    for c in DIGAMMA_SERIES {
        series += c * term;
        term *= inv2;
    }
    shift + z.ln() - 0.5 / z - series
}

/// ψ′(x) for x > 0. Returns NaN for non-positive or NaN input.
pub fn trigamma(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return f64::NAN;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let mut shift = 0.0;
    let mut z = x;
    while z < ASYMPTOTIC_THRESHOLD {
        shift += 1.0 / (z * z);
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut term = inv2 * inv;
    let mut series = 0.0;
    for c in TRIGAMMA_SERIES {
        series += c * term;
        term *= inv2;
    }
    shift + inv + 0.5 * inv2 + series
}

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// E[log x_m] under Dirichlet(param): ψ(param_m) − ψ(Σ param).
pub fn dirichlet_expected_log(param: &[f64]) -> Vec<f64> {
    let total = digamma(param.iter().sum());
    param.iter().map(|&g| digamma(g) - total).collect()
}

/// Differential entropy of Dirichlet(param).
pub fn dirichlet_entropy(param: &[f64]) -> f64 {
    let total: f64 = param.iter().sum();
    let psi_total = digamma(total);
    let mut h = -ln_gamma(total);
    for &g in param {
        h += ln_gamma(g) - (g - 1.0) * (digamma(g) - psi_total);
    }
    h
}
