//! Replicated Monte Carlo runs: data generation, estimation for each `M`
//! (and optionally the selected `M̂`), pointwise quantile bands and losses.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adapt::{gl_select, CnRange};
use crate::density::{DensitySpec, EnvDensity};
use crate::error::{Error, Result};
use crate::estimate::{density_estimate, PiecewiseDensity};
use crate::seed::{replication_seed, stream_rng};
use crate::simulate::{counts_to_branch, run_walk_to_hit, simulate_bpire, BranchSequence};

/// `M` written in place of the order on rows describing `f̂^{M̂}`.
pub const SELECTED_M: i64 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataMode {
    /// Simulate the walk and read off `Z_y = L(T_n, n - y)`.
    Walk,
    /// Simulate the branching process directly.
    #[default]
    Bpire,
}

fn default_eval_points() -> usize {
    512
}

fn default_max_steps() -> u64 {
    crate::simulate::DEFAULT_MAX_STEPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub density: DensitySpec,
    pub n: usize,
    pub replications: usize,
    #[serde(rename = "M_grid")]
    pub m_grid: Vec<usize>,
    #[serde(default)]
    pub data_mode: DataMode,
    #[serde(default)]
    pub gl: bool,
    pub master_seed: u64,
    #[serde(default = "default_eval_points")]
    pub eval_points: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(default)]
    pub cn_range: CnRange,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ParameterDomain(msg));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.m_grid.is_empty() || self.m_grid[0] == 0 {
            return bad("M_grid must be nonempty with entries >= 1".into());
        }
        if self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("M_grid must be strictly ascending".into());
        }
        if self.eval_points < 2 {
            return bad(format!(
                "eval_points must be at least 2, got {}",
                self.eval_points
            ));
        }
        Ok(())
    }

    /// Equispaced cell midpoints `(i + 1/2) / E`.
    pub fn eval_grid(&self) -> Vec<f64> {
        let e = self.eval_points as f64;
        (0..self.eval_points)
            .map(|i| (i as f64 + 0.5) / e)
            .collect()
    }
}

/// Pointwise summary across replications at one evaluation point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    #[serde(rename = "M")]
    pub m: i64,
    pub x: f64,
    pub true_f: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub hinge_lo: f64,
    pub hinge_hi: f64,
    /// Most frequent `M̂` (rows with `m == SELECTED_M` only).
    #[serde(rename = "chosen_M")]
    pub chosen_m: Option<usize>,
}

impl SummaryRow {
    pub fn is_ordered(&self) -> bool {
        self.hinge_lo <= self.q25
            && self.q25 <= self.median
            && self.median <= self.q75
            && self.q75 <= self.hinge_hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossRow {
    pub replication: usize,
    #[serde(rename = "M")]
    pub m: i64,
    pub sup_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossStat {
    #[serde(rename = "M")]
    pub m: i64,
    pub count: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub iqr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub density_id: String,
    pub n: usize,
    pub gl: bool,
    pub summary: Vec<SummaryRow>,
    pub losses: Vec<LossRow>,
    /// Replications dropped because the walk hit the step cap.
    pub truncated: usize,
    /// `M̂` per kept replication, in replication order.
    pub chosen: Vec<usize>,
}

/// Type-7 quantile of ascending `sorted` data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median, quartiles and Tukey hinges of `data` (any order). Hinges are the
/// most extreme observations within `1.5 IQR` of the quartiles; they are
/// clamped so that `hinge_lo ≤ q25` and `hinge_hi ≥ q75` even when no
/// observation falls between a quartile and its fence.
pub fn five_numbers(data: &[f64]) -> [f64; 5] {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q25 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q75 = quantile_sorted(&sorted, 0.75);
    let iqr = q75 - q25;
    let (lo_fence, hi_fence) = (q25 - 1.5 * iqr, q75 + 1.5 * iqr);
    let hinge_lo = sorted
        .iter()
        .copied()
        .find(|v| *v >= lo_fence)
        .unwrap_or(q25);
    let hinge_hi = sorted
        .iter()
        .rev()
        .copied()
        .find(|v| *v <= hi_fence)
        .unwrap_or(q75);
    [hinge_lo.min(q25), q25, median, q75, hinge_hi.max(q75)]
}

/// Per-`M` median and interquartile range of the losses, ascending in `M`
/// (so the `M̂` rows, `M = -1`, come first).
pub fn loss_summary(losses: &[LossRow]) -> Vec<LossStat> {
    let mut by_m: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for l in losses {
        by_m.entry(l.m).or_default().push(l.sup_error);
    }
    by_m.into_iter()
        .map(|(m, mut v)| {
            v.sort_by(f64::total_cmp);
            let (q25, q75) = (quantile_sorted(&v, 0.25), quantile_sorted(&v, 0.75));
            LossStat {
                m,
                count: v.len(),
                median: quantile_sorted(&v, 0.5),
                q25,
                q75,
                iqr: q75 - q25,
            }
        })
        .collect()
}

struct Replication {
    index: usize,
    curves: Vec<Vec<f64>>,
    selected: Option<(usize, Vec<f64>)>,
}

fn evaluate(est: &PiecewiseDensity, xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|x| est.value(*x)).collect()
}

fn sup_error(curve: &[f64], truth: &[f64]) -> f64 {
    curve
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Generates the data for one replication; `None` if the walk was truncated.
pub fn replication_data(
    cfg: &ExperimentConfig,
    d: &EnvDensity,
    r: usize,
) -> Result<Option<BranchSequence>> {
    let mut rng = stream_rng(replication_seed(cfg.master_seed, r as u64));
    match cfg.data_mode {
        DataMode::Bpire => simulate_bpire(d, cfg.n, &mut rng).map(Some),
        DataMode::Walk => {
            let sc = run_walk_to_hit(d, cfg.n as u64, cfg.max_steps, &mut rng)?;
            if sc.truncated() {
                Ok(None)
            } else {
                counts_to_branch(&sc).map(Some)
            }
        }
    }
}

fn run_replication(
    cfg: &ExperimentConfig,
    d: &EnvDensity,
    xs: &[f64],
    r: usize,
) -> Result<Option<Replication>> {
    let Some(z) = replication_data(cfg, d, r)? else {
        return Ok(None);
    };
    let curves = cfg
        .m_grid
        .iter()
        .map(|&m| density_estimate(&z, m).map(|e| evaluate(&e, xs)))
        .collect::<Result<Vec<_>>>()?;
    let selected = if cfg.gl {
        let s = gl_select(&z, &cfg.m_grid, cfg.cn_range)?;
        Some((s.diagnostics.chosen, evaluate(&s.estimate, xs)))
    } else {
        None
    };
    Ok(Some(Replication {
        index: r,
        curves,
        selected,
    }))
}

fn band_rows(
    m: i64,
    chosen_m: Option<usize>,
    xs: &[f64],
    truth: &[f64],
    curves: &[&[f64]],
) -> Vec<SummaryRow> {
    let mut column = Vec::with_capacity(curves.len());
    xs.iter()
        .enumerate()
        .map(|(p, &x)| {
            column.clear();
            column.extend(curves.iter().map(|c| c[p]));
            let [hinge_lo, q25, median, q75, hinge_hi] = five_numbers(&column);
            SummaryRow {
                m,
                x,
                true_f: truth[p],
                median,
                q25,
                q75,
                hinge_lo,
                hinge_hi,
                chosen_m,
            }
        })
        .collect()
}

/// Most frequent value, ties to the smallest.
fn mode(values: &[usize]) -> Option<usize> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(*v).or_default() += 1;
    }
    counts
        .into_iter()
        .fold(None, |best: Option<(usize, usize)>, (v, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((v, c)),
        })
        .map(|(v, _)| v)
}

/// Runs every replication (in parallel on the current rayon pool) and
/// aggregates in replication order, so the output depends only on `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let d = cfg.density.build()?;
    let xs = cfg.eval_grid();
    let truth: Vec<f64> = xs.iter().map(|x| d.pdf(*x)).collect();

    let results = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(cfg, &d, &xs, r))
        .collect::<Result<Vec<_>>>()?;
    let truncated = results.iter().filter(|r| r.is_none()).count();
    let reps: Vec<Replication> = results.into_iter().flatten().collect();
    if reps.is_empty() {
        return Err(Error::DataGeneration {
            truncated,
            replications: cfg.replications,
        });
    }

    let mut summary = Vec::new();
    let mut losses = Vec::new();
    let chosen: Vec<usize> = reps
        .iter()
        .filter_map(|r| r.selected.as_ref().map(|s| s.0))
        .collect();
    if cfg.gl {
        let curves: Vec<&[f64]> = reps
            .iter()
            .map(|r| r.selected.as_ref().expect("selection present").1.as_slice())
            .collect();
        summary.extend(band_rows(SELECTED_M, mode(&chosen), &xs, &truth, &curves));
    }
    for (g, &m) in cfg.m_grid.iter().enumerate() {
        let curves: Vec<&[f64]> = reps.iter().map(|r| r.curves[g].as_slice()).collect();
        summary.extend(band_rows(m as i64, None, &xs, &truth, &curves));
    }
    for r in &reps {
        for (g, &m) in cfg.m_grid.iter().enumerate() {
            losses.push(LossRow {
                replication: r.index,
                m: m as i64,
                sup_error: sup_error(&r.curves[g], &truth),
            });
        }
        if let Some((_, curve)) = &r.selected {
            losses.push(LossRow {
                replication: r.index,
                m: SELECTED_M,
                sup_error: sup_error(curve, &truth),
            });
        }
    }

    Ok(ExperimentOutput {
        density_id: d.id().to_string(),
        n: cfg.n,
        gl: cfg.gl,
        summary,
        losses,
        truncated,
        chosen,
    })
}

pub const SUMMARY_HEADER: &str = "density_id,n,M,x,true_f,median,q25,q75,hinge_lo,hinge_hi";

/// Summary CSV. With selection enabled every row carries a trailing
/// `chosen_M` column, empty except on the `M = -1` rows.
pub fn write_summary<W: Write + ?Sized>(out: &ExperimentOutput, w: &mut W) -> Result<()> {
    if out.density_id.contains([',', '"', '\n', '\r']) {
        return Err(Error::Format(format!(
            "density id {:?} cannot be written unquoted to CSV",
            out.density_id
        )));
    }
    write!(w, "{SUMMARY_HEADER}")?;
    if out.gl {
        write!(w, ",chosen_M")?;
    }
    writeln!(w)?;
    for r in &out.summary {
        write!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            out.density_id,
            out.n,
            r.m,
            r.x,
            r.true_f,
            r.median,
            r.q25,
            r.q75,
            r.hinge_lo,
            r.hinge_hi
        )?;
        if out.gl {
            match r.chosen_m {
                Some(c) => write!(w, ",{c}")?,
                None => write!(w, ",")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_losses<W: Write + ?Sized>(out: &ExperimentOutput, w: &mut W) -> Result<()> {
    writeln!(w, "replication,M,sup_error")?;
    for l in &out.losses {
        writeln!(w, "{},{},{}", l.replication, l.m, l.sup_error)?;
    }
    Ok(())
}
