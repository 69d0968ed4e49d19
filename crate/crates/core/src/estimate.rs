//! Beta-moment density estimation from a branch sequence.
//!
//! For integers `a, b` the statistic
//!
//! ```text
//! φ^{a,b}(i, j) = C(i+j-a-b, i-a) / C(i+j, i)   (i ≥ a, j ≥ b; else 0)
//! ```
//!
//! averaged over the transitions `(Z_{k-1}, Z_k)` with `Z_{k-1} ≥ a` estimates
//! the beta moment `m^{a,b}`. The order-`M` density estimate is piecewise
//! constant, equal to `(M+1) C(M,k) m̂^{k,M-k}` on the cell `⌊Mx⌋ = k`.
//!
//! `φ` is computed as a ratio of falling factorials,
//! `[i]_a [j]_b / [i+j]_{a+b}`, whose logarithm is a sum of `a + b` terms and
//! stays accurate for counts of any magnitude.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::density::EnvDensity;
use crate::error::{Error, Result};
use crate::numeric::special::{ln_binomial_row, ln_falling_prefix};
use crate::numeric::NeumaierSum;
use crate::simulate::BranchSequence;

/// Largest order accepted by the alternating-sum CDF reconstruction.
pub const CDF_MAX_ORDER: usize = 40;

/// Piecewise-constant function on `[0, 1]` with `M + 1` coefficients:
/// coefficient `k < M` on `[k/M, (k+1)/M)`, coefficient `M` at `x = 1` only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseDensity {
    coeffs: Vec<f64>,
}

impl PiecewiseDensity {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::ParameterDomain(
                "a piecewise density needs M >= 1 (at least two coefficients)".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self, x: f64) -> f64 {
        self.coeffs[cell_index(x, self.order())]
    }
}

/// `⌊Mx⌋` clamped to `0..=M`, with `x = 1` (and beyond) mapped to `M`.
pub fn cell_index(x: f64, m: usize) -> usize {
    if x >= 1.0 {
        return m;
    }
    if !(x > 0.0) {
        return 0;
    }
    ((m as f64 * x).floor() as usize).min(m - 1)
}

fn ln_phi_parts(a: usize, b: usize, i: f64, j: f64) -> f64 {
    let (ai, bj) = (a as f64, b as f64);
    if i < ai || j < bj {
        return f64::NEG_INFINITY;
    }
    let mut ln = 0.0;
    for t in 0..a {
        ln += (i - t as f64).ln();
    }
    for t in 0..b {
        ln += (j - t as f64).ln();
    }
    for t in 0..a + b {
        ln -= (i + j - t as f64).ln();
    }
    ln.min(0.0)
}

/// `φ^{a,b}(i, j)` for integral counts `i, j ≥ 0`.
pub fn phi(a: usize, b: usize, i: f64, j: f64) -> f64 {
    ln_phi_parts(a, b, i, j).exp()
}

/// `N_n^a`: number of `k ∈ 1..=n` with `Z_{k-1} ≥ a`.
pub fn visit_count(z: &BranchSequence, a: usize) -> usize {
    let a = a as f64;
    z.values()[..z.n()].iter().filter(|v| **v >= a).count()
}

/// `m̂_n^{a,b}`; zero when no transition qualifies.
pub fn moment_estimate(z: &BranchSequence, a: usize, b: usize) -> f64 {
    let visits = visit_count(z, a);
    if visits == 0 {
        return 0.0;
    }
    let sum: f64 = z.transitions().map(|(i, j)| phi(a, b, i, j)).sum();
    sum / visits as f64
}

/// Estimated beta moments with their visit counts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MomentTable {
    pub n: usize,
    pub entries: BTreeMap<(usize, usize), MomentEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEntry {
    pub estimate: f64,
    pub visits: usize,
}

impl MomentTable {
    pub fn compute(z: &BranchSequence, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let entries = pairs
            .into_iter()
            .map(|(a, b)| {
                let entry = MomentEntry {
                    estimate: moment_estimate(z, a, b),
                    visits: visit_count(z, a),
                };
                ((a, b), entry)
            })
            .collect();
        Self { n: z.n(), entries }
    }

    /// The pairs `(k, M - k)` used by the order-`M` estimate.
    pub fn for_order(z: &BranchSequence, m: usize) -> Self {
        Self::compute(z, (0..=m).map(|k| (k, m - k)))
    }

    pub fn get(&self, a: usize, b: usize) -> Option<MomentEntry> {
        self.entries.get(&(a, b)).copied()
    }
}

/// The order-`M` estimate `f̂_n^M`.
///
/// Each summand `(M+1) C(M,k) φ^{k,M-k}(Z_{k-1}, Z_k)` is assembled in log
/// space and exponentiated individually before the average over
/// transitions. `C(M,k) φ^{k,M-k}` is a hypergeometric probability, so every
/// summand, and therefore every coefficient, lies in `[0, M+1]`.
pub fn density_estimate(z: &BranchSequence, m: usize) -> Result<PiecewiseDensity> {
    if m == 0 {
        return Err(Error::ParameterDomain("order M must be at least 1".into()));
    }
    let ln_binom = ln_binomial_row(m);
    let scale = (m + 1) as f64;
    let mut sums = vec![NeumaierSum::new(); m + 1];
    let mut ln_fall_i = Vec::with_capacity(m + 1);
    let mut ln_fall_j = Vec::with_capacity(m + 1);
    for (i, j) in z.transitions() {
        if i + j < m as f64 {
            continue;
        }
        ln_falling_prefix(i, m, &mut ln_fall_i);
        ln_falling_prefix(j, m, &mut ln_fall_j);
        let mut ln_fall_total = Vec::with_capacity(1);
        ln_falling_prefix(i + j, m, &mut ln_fall_total);
        let ln_den = ln_fall_total[m];
        // k ≤ i and M - k ≤ j
        let k_lo = m.saturating_sub(j.min(m as f64) as usize);
        let k_hi = i.min(m as f64) as usize;
        for (k, sum) in sums.iter_mut().enumerate().take(k_hi + 1).skip(k_lo) {
            let ln_hyper = (ln_binom[k] + ln_fall_i[k] + ln_fall_j[m - k] - ln_den).min(0.0);
            sum.add(scale * ln_hyper.exp());
        }
    }
    let coeffs = sums
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let visits = visit_count(z, k);
            if visits == 0 {
                0.0
            } else {
                // the mean of values in [0, M+1]; clamp away summation rounding
                (s.value() / visits as f64).clamp(0.0, scale)
            }
        })
        .collect();
    PiecewiseDensity::new(coeffs)
}

/// The deterministic approximation `f^M` built from exact beta moments,
/// `(M+1) C(M,k) m^{k,M-k}` on cell `k`.
pub fn oracle_fm(d: &EnvDensity, m: usize) -> Result<PiecewiseDensity> {
    if m == 0 {
        return Err(Error::ParameterDomain("order M must be at least 1".into()));
    }
    let ln_binom = ln_binomial_row(m);
    let ln_scale = ((m + 1) as f64).ln();
    let coeffs = (0..=m)
        .map(|k| {
            let moment = d.beta_moment(k as u32, (m - k) as u32).value;
            if moment == 0.0 {
                0.0
            } else {
                (ln_scale + ln_binom[k] + moment.ln()).exp()
            }
        })
        .collect();
    PiecewiseDensity::new(coeffs)
}

fn binomial_table(m: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<u128>> = vec![vec![1]];
    for r in 1..=m {
        let prev = &rows[r - 1];
        let mut row = vec![1u128; r + 1];
        for k in 1..r {
            row[k] = prev[k - 1] + prev[k];
        }
        rows.push(row);
    }
    rows.into_iter()
        .map(|r| r.into_iter().map(|v| v as f64).collect())
        .collect()
}

fn check_moments(mu: &[f64]) -> Result<usize> {
    if mu.len() < 2 {
        return Err(Error::ParameterDomain(
            "need moments μ_0..μ_M with M >= 1".into(),
        ));
    }
    let m = mu.len() - 1;
    if m > CDF_MAX_ORDER {
        return Err(Error::Stability {
            m,
            max: CDF_MAX_ORDER,
        });
    }
    if (mu[0] - 1.0).abs() > 1e-9 {
        return Err(Error::ParameterDomain(format!(
            "μ_0 must be 1, got {}",
            mu[0]
        )));
    }
    Ok(m)
}

/// `Σ_{j=k}^{M} C(M,j) C(j,k) (-1)^{j-k} μ_j`, the mass the reconstruction
/// puts on cell `k`.
fn cell_mass(mu: &[f64], binom: &[Vec<f64>], k: usize) -> f64 {
    let m = mu.len() - 1;
    let mut s = NeumaierSum::new();
    for j in k..=m {
        let term = binom[m][j] * binom[j][k] * mu[j];
        s.add(if (j - k).is_multiple_of(2) {
            term
        } else {
            -term
        });
    }
    s.value()
}

fn check_unit(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::ParameterDomain(format!(
            "x must lie in [0, 1], got {x}"
        )));
    }
    Ok(())
}

/// Moment-based CDF approximation
/// `ν_M([0,x]) = Σ_{k=0}^{⌊Mx⌋} Σ_{j=k}^M C(M,j) C(j,k) (-1)^{j-k} μ_j`
/// from ordinary moments `μ_0 = 1, μ_1, ..., μ_M`.
///
/// The alternating sums lose precision quickly; orders above
/// [`CDF_MAX_ORDER`] are refused.
pub fn cdf_reconstruction(mu: &[f64], x: f64) -> Result<f64> {
    let m = check_moments(mu)?;
    check_unit(x)?;
    let binom = binomial_table(m);
    let top = (m as f64 * x).floor() as usize;
    let total: NeumaierSum = (0..=top.min(m)).map(|k| cell_mass(mu, &binom, k)).collect();
    Ok(total.value())
}

/// `f^M(x)` from the CDF reconstruction: `(M+1)` times the increment of
/// `ν_M` over the cell containing `x`, i.e.
/// `(M+1)(ν_M([0, x]) - ν_M([0, x - 1/M]))` with `ν_M` zero left of 0.
pub fn fm_from_cdf(mu: &[f64], m: usize, x: f64) -> Result<f64> {
    let order = check_moments(mu)?;
    if order != m {
        return Err(Error::ParameterDomain(format!(
            "expected {} moments for M = {m}, got {}",
            m + 1,
            mu.len()
        )));
    }
    check_unit(x)?;
    let binom = binomial_table(m);
    let k = (m as f64 * x).floor() as usize;
    Ok((m + 1) as f64 * cell_mass(mu, &binom, k.min(m)))
}

/// Ordinary moments `μ_j = m^{j,0}` for `j = 0..=M`.
pub fn ordinary_moments(d: &EnvDensity, m: usize) -> Vec<f64> {
    (0..=m).map(|j| d.beta_moment(j as u32, 0).value).collect()
}

/// Bias bound `31 L M^{-β/2}` over the Hölder class `Σ(β, L)`.
pub fn bias_bound(lipschitz: f64, beta_smooth: f64, m: usize) -> Result<f64> {
    if !(lipschitz >= 1.0) {
        return Err(Error::ParameterDomain(format!(
            "L must be at least 1, got {lipschitz}"
        )));
    }
    if !(beta_smooth > 0.0 && beta_smooth <= 2.0) {
        return Err(Error::ParameterDomain(format!(
            "smoothness must lie in (0, 2], got {beta_smooth}"
        )));
    }
    if m == 0 {
        return Err(Error::ParameterDomain("order M must be at least 1".into()));
    }
    Ok(31.0 * lipschitz * (m as f64).powf(-beta_smooth / 2.0))
}
