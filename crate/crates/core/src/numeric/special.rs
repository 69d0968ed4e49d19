//! Log-space combinatorics.
//!
//! Binomial coefficients of the sizes met here (counts of 10^4 and beyond,
//! orders up to a few hundred) overflow `f64` long before the ratios we need
//! do, so everything is carried as logarithms and exponentiated at the end.

pub use statrs::function::gamma::ln_gamma;

/// `ln B(a, b)` for `a, b > 0`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `ln C(n, k)`, `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Row of `ln C(m, k)` for `k = 0..=m`, built from exact partial sums of logs.
pub fn ln_binomial_row(m: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(m + 1);
    let mut acc = 0.0;
    row.push(0.0);
    for k in 1..=m {
        acc += ((m + 1 - k) as f64).ln() - (k as f64).ln();
        row.push(acc);
    }
    // exact symmetry keeps C(m,k) and C(m,m-k) bit-identical
    for k in 0..=m / 2 {
        row[m - k] = row[k];
    }
    row
}

/// Prefix logs of the falling factorial: entry `k` is
/// `ln(x (x-1) ... (x-k+1))` for `k = 0..=k_max`.
///
/// `x` is an integral count (possibly far beyond `2^53`); once `k > x` the
/// falling factorial is zero and the entry is `-inf`.
pub fn ln_falling_prefix(x: f64, k_max: usize, out: &mut Vec<f64>) {
    out.clear();
    out.push(0.0);
    let mut acc = 0.0;
    for t in 0..k_max {
        let factor = x - t as f64;
        if factor <= 0.0 {
            out.resize(k_max + 1, f64::NEG_INFINITY);
            return;
        }
        acc += factor.ln();
        out.push(acc);
    }
}
