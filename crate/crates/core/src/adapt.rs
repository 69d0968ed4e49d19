//! Goldenshluger-Lepski choice of the order `M`.
//!
//! For each candidate `M` on a grid,
//!
//! ```text
//! V_n(M) = (M+1) / N_n^M · sqrt(3 n ln n)
//! C_n(M) = max_{M'} ( ‖f̂^M - f̂^{M∨M'}‖_∞ - 2 V_n(M') )
//! ```
//!
//! and `M̂` minimises `C_n(M) + 2 V_n(M)`, ties going to the smaller `M`.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{density_estimate, visit_count, PiecewiseDensity};
use crate::simulate::BranchSequence;

/// Default cap on the geometric grid.
pub const DEFAULT_M_MAX: usize = 128;

/// Exact `sup_{x∈[0,1]} |p(x) - q(x)|`.
///
/// Both functions are constant on each cell of the merged grid
/// `{k/M_p} ∪ {l/M_q}`, so the sweep visits every such cell once, plus the
/// point `x = 1`. Breakpoints are compared as integers (`k·M_q` vs `l·M_p`).
pub fn sup_norm_diff(p: &PiecewiseDensity, q: &PiecewiseDensity) -> f64 {
    let (mp, mq) = (p.order(), q.order());
    let (pc, qc) = (p.coeffs(), q.coeffs());
    let mut sup = (pc[mp] - qc[mq]).abs();
    let (mut i, mut j) = (0usize, 0usize);
    while i < mp && j < mq {
        sup = sup.max((pc[i] - qc[j]).abs());
        let end_p = (i as u128 + 1) * mq as u128;
        let end_q = (j as u128 + 1) * mp as u128;
        if end_p <= end_q {
            i += 1;
        }
        if end_q <= end_p {
            j += 1;
        }
    }
    sup
}

/// `(M+1) / visits · sqrt(3 n ln n)`; `+inf` when `visits = 0`.
pub fn variance_term(m: usize, visits: usize, n: usize) -> f64 {
    if visits == 0 {
        return f64::INFINITY;
    }
    let n = n as f64;
    (m + 1) as f64 / visits as f64 * (3.0 * n * n.ln()).sqrt()
}

/// `V_n(M)` for the sequence `z`, with `n = z.n()`.
pub fn vn(z: &BranchSequence, m: usize) -> Result<f64> {
    let n = z.n();
    if n < 2 {
        return Err(Error::ParameterDomain(format!("V_n needs n >= 2, got {n}")));
    }
    Ok(variance_term(m, visit_count(z, m), n))
}

/// Which `M'` enter the supremum defining `C_n(M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CnRange {
    /// Every grid value, as written in the definition. `M' ≤ M` contributes
    /// `-2 V_n(M')`.
    #[default]
    All,
    /// Only `M' > M`, floored at zero: `max(0, sup_{M'>M} ...)`.
    Above,
}

impl FromStr for CnRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "above" => Ok(Self::Above),
            other => Err(Error::Format(format!(
                "cn range must be \"all\" or \"above\", got {other:?}"
            ))),
        }
    }
}

/// `C_n` at grid index `index`, given the estimates and `V` over the grid.
pub fn cn(estimates: &[PiecewiseDensity], v: &[f64], index: usize, range: CnRange) -> f64 {
    let first = match range {
        CnRange::All => 0,
        CnRange::Above => index + 1,
    };
    let sup = (first..estimates.len())
        .map(|i| {
            let dist = if i <= index {
                0.0
            } else {
                sup_norm_diff(&estimates[index], &estimates[i])
            };
            dist - 2.0 * v[i]
        })
        .fold(f64::NEG_INFINITY, f64::max);
    match range {
        CnRange::All => sup,
        CnRange::Above => sup.max(0.0),
    }
}

/// Full record of one selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDiagnostics {
    pub grid: Vec<usize>,
    #[serde(rename = "V", with = "crate::serde_util::float_vec")]
    pub v: Vec<f64>,
    #[serde(rename = "C", with = "crate::serde_util::float_vec")]
    pub c: Vec<f64>,
    #[serde(with = "crate::serde_util::float_vec")]
    pub objective: Vec<f64>,
    pub chosen: usize,
}

/// Selected order together with its estimate and the diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub diagnostics: SelectionDiagnostics,
    pub estimate: PiecewiseDensity,
    pub estimates: Vec<PiecewiseDensity>,
}

fn check_grid(grid: &[usize]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::ParameterDomain("the M grid is empty".into()));
    }
    if grid[0] == 0 {
        return Err(Error::ParameterDomain(
            "grid values must be at least 1".into(),
        ));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::ParameterDomain(
            "the M grid must be strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Runs the selection over `grid`. Estimates are computed in parallel; the
/// `C_n` fold and the argmin are sequential, so the output does not depend
/// on the thread count.
pub fn gl_select(z: &BranchSequence, grid: &[usize], range: CnRange) -> Result<Selection> {
    check_grid(grid)?;
    let v = grid.iter().map(|&m| vn(z, m)).collect::<Result<Vec<_>>>()?;
    if v.iter().all(|x| x.is_infinite()) {
        return Err(Error::DegenerateData(
            "no transition reaches any grid order; every V_n is infinite".into(),
        ));
    }
    let estimates = grid
        .par_iter()
        .map(|&m| density_estimate(z, m))
        .collect::<Result<Vec<_>>>()?;
    let c: Vec<f64> = (0..grid.len())
        .map(|i| cn(&estimates, &v, i, range))
        .collect();
    let objective: Vec<f64> = c.iter().zip(&v).map(|(c, v)| c + 2.0 * v).collect();
    let mut best = 0;
    for (i, o) in objective.iter().enumerate() {
        if *o < objective[best] {
            best = i;
        }
    }
    Ok(Selection {
        diagnostics: SelectionDiagnostics {
            grid: grid.to_vec(),
            v,
            c,
            objective,
            chosen: grid[best],
        },
        estimate: estimates[best].clone(),
        estimates,
    })
}

/// Geometric grid `1, 2, 4, ...` up to `min(n - 1, m_max)`.
pub fn default_grid(n: usize, m_max: usize) -> Vec<usize> {
    let cap = n.saturating_sub(1).min(m_max).max(1);
    std::iter::successors(Some(1usize), |m| m.checked_mul(2))
        .take_while(|m| *m <= cap)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pd(c: &[f64]) -> PiecewiseDensity {
        PiecewiseDensity::new(c.to_vec()).unwrap()
    }

    fn brute_force(p: &PiecewiseDensity, q: &PiecewiseDensity) -> f64 {
        (0..=100_000)
            .map(|i| i as f64 / 100_000.0)
            .map(|x| (p.value(x) - q.value(x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(sup_norm_diff(&pd(&[2.0, 0.0, 0.0]), &pd(&[1.0, 1.0])), 1.0);
        let p = pd(&[0.3, 1.2, 4.0]);
        assert_eq!(sup_norm_diff(&p, &p), 0.0);
        assert_eq!(
            sup_norm_diff(&pd(&[1.0, 3.0, 0.0]), &pd(&[2.0, 2.0, 2.0, 2.0])),
            2.0
        );
    }

    #[test]
    fn sup_norm_sees_narrow_cells() {
        // the functions differ only on [2/5, 3/7), of width 1/35
        let pc = vec![5.0, 5.0, 5.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let qc = vec![5.0, 5.0, 0.0, 0.0, 0.0, 0.0];
        let (p, q) = (pd(&pc), pd(&qc));
        assert_eq!(sup_norm_diff(&p, &q), 5.0);
        assert_eq!(brute_force(&p, &q), 5.0);
    }

    #[test]
    fn vn_examples() {
        assert!((variance_term(25, 60, 100) - 16.11).abs() < 0.01);
        assert_eq!(variance_term(3, 0, 100), f64::INFINITY);
        let z = BranchSequence::from_counts(&[0, 3, 2, 5, 1, 0, 4]).unwrap();
        let mut prev = 0.0;
        for m in 1..=6 {
            let v = vn(&z, m).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn cn_examples() {
        let e = vec![pd(&[1.0, 1.0])];
        assert_eq!(cn(&e, &[0.7], 0, CnRange::All), -1.4);
        let same = vec![pd(&[1.0, 1.0]), pd(&[1.0, 1.0, 1.0]), pd(&[1.0; 5])];
        let v = [0.5, 0.8, 2.0];
        for i in 0..3 {
            assert_eq!(cn(&same, &v, i, CnRange::All), -1.0);
        }
    }

    #[test]
    fn cn_matches_defining_max() {
        let e = vec![
            pd(&[0.5, 1.5]),
            pd(&[0.2, 1.0, 1.8]),
            pd(&[0.0, 0.6, 1.4, 2.0, 2.2]),
        ];
        let v = [0.1, 0.25, 0.4];
        for idx in 0..3 {
            let mut expect = f64::NEG_INFINITY;
            for i in 0..3 {
                let other = &e[idx.max(i)];
                expect = expect.max(brute_force(&e[idx], other) - 2.0 * v[i]);
            }
            assert!((cn(&e, &v, idx, CnRange::All) - expect).abs() < 1e-12);
        }
        // only M' above index 0: distances 0.5 (cell x=1 excluded) ...
        let above = cn(&e, &v, 0, CnRange::Above);
        let expect = (brute_force(&e[0], &e[1]) - 0.5)
            .max(brute_force(&e[0], &e[2]) - 0.8)
            .max(0.0);
        assert!((above - expect).abs() < 1e-12);
        assert_eq!(cn(&e, &v, 2, CnRange::Above), 0.0);
    }

    #[test]
    fn select_examples() {
        let z = BranchSequence::from_counts(&[0, 2, 3, 1, 4, 2, 0, 1]).unwrap();
        let s = gl_select(&z, &[1], CnRange::All).unwrap();
        assert_eq!(s.diagnostics.chosen, 1);

        // all-zero data: every estimate is 0 and only M' = 0 visits exist
        let zeros = BranchSequence::from_counts(&[0; 20]).unwrap();
        assert!(matches!(
            gl_select(&zeros, &[1, 2, 4], CnRange::All),
            Err(Error::DegenerateData(_))
        ));
        assert!(gl_select(&z, &[], CnRange::All).is_err());
        assert!(gl_select(&z, &[2, 1], CnRange::All).is_err());
    }

    #[test]
    fn identical_estimates_choose_smallest() {
        let e = vec![pd(&[1.0, 1.0]), pd(&[1.0, 1.0, 1.0]), pd(&[1.0; 5])];
        let v = [0.5, 0.8, 2.0];
        let obj: Vec<f64> = (0..3)
            .map(|i| cn(&e, &v, i, CnRange::All) + 2.0 * v[i])
            .collect();
        let best = (0..3).fold(0, |b, i| if obj[i] < obj[b] { i } else { b });
        assert_eq!(best, 0);
    }

    #[test]
    fn selection_is_deterministic() {
        use crate::density::EnvDensity;
        use crate::seed::stream_rng;
        let d = EnvDensity::beta(3.0, 3.0).unwrap();
        let z = crate::simulate::simulate_bpire(&d, 400, &mut stream_rng(11)).unwrap();
        let a = gl_select(&z, &[2, 4, 8, 16, 32], CnRange::All).unwrap();
        let b = gl_select(&z, &[2, 4, 8, 16, 32], CnRange::All).unwrap();
        assert_eq!(a, b);
        let obj = &a.diagnostics.objective;
        let min = obj.iter().cloned().fold(f64::INFINITY, f64::min);
        let first = obj.iter().position(|o| *o == min).unwrap();
        assert_eq!(a.diagnostics.chosen, a.diagnostics.grid[first]);
        let json = serde_json::to_string(&a.diagnostics).unwrap();
        assert!(json.contains("\"V\"") && json.contains("\"chosen\""));
    }

    #[test]
    fn default_grid_examples() {
        assert_eq!(default_grid(100, 128), vec![1, 2, 4, 8, 16, 32, 64]);
        assert_eq!(default_grid(10_000, 128), vec![1, 2, 4, 8, 16, 32, 64, 128]);
        assert_eq!(default_grid(2, 128), vec![1]);
    }

    fn coeffs() -> impl Strategy<Value = Vec<f64>> {
        (1usize..40).prop_flat_map(|m| proptest::collection::vec(0.0f64..10.0, m + 1))
    }

    proptest! {
        #[test]
        fn sup_norm_is_a_metric(p in coeffs(), q in coeffs(), r in coeffs()) {
            let (p, q, r) = (pd(&p), pd(&q), pd(&r));
            let pq = sup_norm_diff(&p, &q);
            prop_assert_eq!(pq, sup_norm_diff(&q, &p));
            prop_assert_eq!(sup_norm_diff(&p, &p), 0.0);
            prop_assert!(pq <= sup_norm_diff(&p, &r) + sup_norm_diff(&r, &q) + 1e-12);
        }

        #[test]
        fn sup_norm_matches_brute_force(p in coeffs(), q in coeffs()) {
            let (p, q) = (pd(&p), pd(&q));
            prop_assert!((sup_norm_diff(&p, &q) - brute_force(&p, &q)).abs() < 1e-12);
        }
    }
}
