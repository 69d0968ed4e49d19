//! Acceptance checks. Each criterion prints one `PASS` or `FAIL` line with
//! the measured quantity, its tolerance and the wall time. The process exits
//! nonzero if any criterion fails, except those listed as known failures,
//! which still print `FAIL` with the reason.

use std::time::{Duration, Instant};

use rand::Rng;
use rwre::adapt::CnRange;
use rwre::density::{reference_densities, DensitySpec, EnvDensity};
use rwre::estimate::{density_estimate, fm_from_cdf, oracle_fm, ordinary_moments, phi};
use rwre::experiment::{loss_summary, run_experiment, DataMode, ExperimentConfig};
use rwre::regime::{classify, solve_kappa, RegimeClass, DEFAULT_TOLERANCE};
use rwre::seed::{replication_seed, stream_rng};
use rwre::simulate::{
    annealed_kernel, counts_to_branch, run_walk_to_hit, sample_offspring, simulate_bpire,
    BranchSequence, DEFAULT_MAX_STEPS,
};

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    check: fn() -> Outcome,
    /// Set when the criterion is known to fail; the reason is printed and
    /// the failure does not change the exit status.
    known_failure: Option<&'static str>,
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn spec(json: &str) -> DensitySpec {
    DensitySpec::from_json(json).unwrap()
}

fn beta_spec(alpha: f64, beta: f64) -> DensitySpec {
    spec(&format!(
        r#"{{"kind":"beta","params":{{"alpha":{alpha},"beta":{beta}}}}}"#
    ))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    rwre::experiment::quantile_sorted(v, 0.5)
}

fn kappa_closed_form() -> Outcome {
    let mut worst = 0.0f64;
    for (a, b) in [(3.0, 2.0), (4.0, 2.0), (5.0, 2.0), (3.0, 2.5)] {
        let d = EnvDensity::beta(a, b).unwrap();
        let k = solve_kappa(&d, DEFAULT_TOLERANCE).map_err(|e| e.to_string())?;
        worst = worst.max((k - (a - b)).abs());
    }
    ensure(
        worst <= 1e-3,
        format!("max |kappa - (alpha-beta)| = {worst:.2e} (tol 1e-3)"),
    )
}

fn kappa_reference_values() -> Outcome {
    let targets = [
        ("triangle_mix", 0.17),
        ("split_beta", 0.57),
        ("two_bump_0.27_0.67", 0.04),
        ("two_bump_0.3_0.7", 0.35),
        ("two_bump_0.38_0.7", 1.0),
    ];
    let densities = reference_densities();
    let mut parts = Vec::new();
    let mut ok = true;
    for (id, target) in targets {
        let d = densities
            .iter()
            .find(|d| d.id() == id)
            .ok_or_else(|| format!("density {id} missing"))?;
        let k = solve_kappa(d, DEFAULT_TOLERANCE).map_err(|e| e.to_string())?;
        ok &= (k - target).abs() <= 0.05;
        parts.push(format!("{id}={k:.4} (target {target})"));
    }
    ensure(ok, format!("{} (tol 0.05)", parts.join(", ")))
}

fn regime_classification() -> Outcome {
    let r33 = classify(&EnvDensity::beta(3.0, 3.0).unwrap(), DEFAULT_TOLERANCE)
        .map_err(|e| e.to_string())?;
    let r52 = classify(&EnvDensity::beta(5.0, 2.0).unwrap(), DEFAULT_TOLERANCE)
        .map_err(|e| e.to_string())?;
    let speed = r52.ballistic_speed.unwrap_or(f64::NAN);
    ensure(
        r33.class == RegimeClass::Recurrent
            && r52.class == RegimeClass::TransientRightBallistic
            && (speed - 3.0).abs() <= 1e-6,
        format!(
            "beta(3,3) -> {:?}, beta(5,2) -> {:?} with T_n/n limit {speed} (expect 3, tol 1e-6)",
            r33.class, r52.class
        ),
    )
}

fn ballistic_speed_mc() -> Outcome {
    let d = EnvDensity::beta(5.0, 2.0).unwrap();
    let n = 2000u64;
    let mut total = 0.0;
    for r in 0..50 {
        let mut rng = stream_rng(replication_seed(2024, r));
        let sc = run_walk_to_hit(&d, n, DEFAULT_MAX_STEPS, &mut rng).map_err(|e| e.to_string())?;
        if sc.truncated() {
            return Err(format!("replication {r} truncated"));
        }
        total += sc.hitting_time() as f64 / n as f64;
    }
    let mean = total / 50.0;
    ensure(
        (2.7..=3.3).contains(&mean),
        format!("mean T_n/n = {mean:.4} (range [2.7, 3.3])"),
    )
}

fn path_identity() -> Outcome {
    let laws = [
        EnvDensity::beta(3.0, 3.0).unwrap(),
        EnvDensity::beta(5.0, 2.0).unwrap(),
        EnvDensity::uniform(),
        EnvDensity::split_beta(),
    ];
    let mut checked = 0;
    let mut r = 0u64;
    while checked < 1000 {
        let d = &laws[(r % 4) as usize];
        let mut rng = stream_rng(replication_seed(77, r));
        let n = 1 + (r % 40);
        r += 1;
        let sc = run_walk_to_hit(d, n, 20_000, &mut rng).map_err(|e| e.to_string())?;
        if sc.truncated() {
            continue;
        }
        if !sc.satisfies_path_identity() {
            return Err(format!("identity fails on trajectory {r}"));
        }
        checked += 1;
    }
    Ok(format!(
        "{checked} non-truncated trajectories, identity exact ({r} simulated)"
    ))
}

/// Mean, variance, and their standard errors.
fn moments_with_se(x: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    (mean, (var / n).sqrt(), var, ((m4 - m2 * m2) / n).sqrt())
}

fn walk_bpire_equivalence() -> Outcome {
    let d = EnvDensity::beta(5.0, 2.0).unwrap();
    let reps = 10_000u64;
    let n = 10usize;
    let mut walk = vec![Vec::new(); 5];
    let mut bpire = vec![Vec::new(); 5];
    for r in 0..reps {
        let mut rng = stream_rng(replication_seed(5, r));
        let sc = run_walk_to_hit(&d, n as u64, DEFAULT_MAX_STEPS, &mut rng)
            .map_err(|e| e.to_string())?;
        let zw = counts_to_branch(&sc).map_err(|e| e.to_string())?;
        let mut rng = stream_rng(replication_seed(6, r));
        let zb = simulate_bpire(&d, n, &mut rng).map_err(|e| e.to_string())?;
        for y in 1..=5 {
            walk[y - 1].push(zw.values()[y]);
            bpire[y - 1].push(zb.values()[y]);
        }
    }
    let mut worst = 0.0f64;
    for y in 0..5 {
        let (mw, smw, vw, svw) = moments_with_se(&walk[y]);
        let (mb, smb, vb, svb) = moments_with_se(&bpire[y]);
        worst = worst.max((mw - mb).abs() / smw.hypot(smb));
        worst = worst.max((vw - vb).abs() / svw.hypot(svb));
    }
    ensure(
        worst <= 4.0,
        format!("max standardized gap over Z_1..Z_5 means/variances = {worst:.2} SE (tol 4)"),
    )
}

fn kernel_check() -> Outcome {
    let d = EnvDensity::uniform();
    let k00 = annealed_kernel(&d, 0, 0);
    let k01 = annealed_kernel(&d, 0, 1);
    if (k00 - 0.5).abs() > 1e-12 || (k01 - 1.0 / 6.0).abs() > 1e-12 {
        return Err(format!("K(0,0) = {k00}, K(0,1) = {k01}"));
    }
    let per_state = 25_000usize;
    let mut rng = stream_rng(31);
    let mut worst = 0.0f64;
    for i in 0..4u32 {
        let mut counts = [0usize; 8];
        for _ in 0..per_state {
            let omega = d.sample(&mut rng);
            let j = sample_offspring(i as f64 + 1.0, omega, &mut rng) as usize;
            if j < counts.len() {
                counts[j] += 1;
            }
        }
        for (j, c) in counts.iter().enumerate() {
            let p = annealed_kernel(&d, i, j as u32);
            let se = (p * (1.0 - p) / per_state as f64).sqrt();
            worst = worst.max((*c as f64 / per_state as f64 - p).abs() / se);
        }
    }
    ensure(
        worst <= 3.0,
        format!("K(0,0)=1/2, K(0,1)=1/6; max gap over i<4, j<8 = {worst:.2} SE over 1e5 transitions (tol 3)"),
    )
}

fn oracle_identity() -> Outcome {
    let u = EnvDensity::uniform();
    let mut worst_u = 0.0f64;
    for m in 1..=50 {
        let o = oracle_fm(&u, m).map_err(|e| e.to_string())?;
        worst_u = o
            .coeffs()
            .iter()
            .fold(worst_u, |w, c| w.max((c - 1.0).abs()));
    }
    let mut worst_cdf = 0.0f64;
    for d in reference_densities().iter().take(4) {
        for m in 1..=20 {
            let mu = ordinary_moments(d, m);
            let o = oracle_fm(d, m).map_err(|e| e.to_string())?;
            for k in 0..=m {
                let x = if k == m {
                    1.0
                } else {
                    (k as f64 + 0.5) / m as f64
                };
                let v = fm_from_cdf(&mu, m, x).map_err(|e| e.to_string())?;
                worst_cdf = worst_cdf.max((v - o.coeffs()[k]).abs());
            }
        }
    }
    ensure(
        worst_u <= 1e-9 && worst_cdf <= 1e-6,
        format!("uniform M<=50: {worst_u:.2e} (tol 1e-9); cdf vs moments M<=20: {worst_cdf:.2e} (tol 1e-6)"),
    )
}

fn estimator_bounds() -> Outcome {
    let mut rng = stream_rng(99);
    let mut phi_min = f64::INFINITY;
    let mut phi_max = f64::NEG_INFINITY;
    let mut violations = 0usize;
    for case in 0..10_000 {
        let len = rng.random_range(2..60usize);
        let scale: f64 = match case % 4 {
            0 => 3.0,
            1 => 50.0,
            2 => 1e6,
            _ => 1e40,
        };
        let mut z = vec![0.0];
        for _ in 1..len {
            let v: f64 = if rng.random::<f64>() < 0.2 {
                0.0
            } else {
                (rng.random::<f64>() * scale).floor()
            };
            z.push(v);
        }
        let m = rng.random_range(1..=64usize);
        let seq = BranchSequence::new(z).map_err(|e| e.to_string())?;
        let est = density_estimate(&seq, m).map_err(|e| e.to_string())?;
        violations += est
            .coeffs()
            .iter()
            .filter(|c| !(**c >= 0.0 && **c <= (m + 1) as f64))
            .count();
        for (i, j) in seq.transitions() {
            let a = rng.random_range(0..=m);
            let p = phi(a, m - a, i, j);
            phi_min = phi_min.min(p);
            phi_max = phi_max.max(p);
        }
    }
    ensure(
        violations == 0 && phi_min >= 0.0 && phi_max <= 1.0,
        format!("10^4 cases: {violations} coefficients outside [0, M+1]; phi range [{phi_min}, {phi_max}]"),
    )
}

fn fixed_config(
    d: DensitySpec,
    n: usize,
    reps: usize,
    grid: Vec<usize>,
    seed: u64,
) -> ExperimentConfig {
    ExperimentConfig {
        density: d,
        n,
        replications: reps,
        m_grid: grid,
        data_mode: DataMode::Bpire,
        gl: false,
        master_seed: seed,
        eval_points: 512,
        max_steps: DEFAULT_MAX_STEPS,
        cn_range: CnRange::All,
    }
}

fn median_loss(cfg: &ExperimentConfig, m: i64) -> Result<f64, String> {
    let out = run_experiment(cfg).map_err(|e| e.to_string())?;
    loss_summary(&out.losses)
        .into_iter()
        .find(|s| s.m == m)
        .map(|s| s.median)
        .ok_or_else(|| format!("no losses for M={m}"))
}

fn consistency() -> Outcome {
    let u = spec(r#"{"kind":"uniform"}"#);
    let big = median_loss(&fixed_config(u.clone(), 10_000, 100, vec![5], 1), 5)?;
    let small = median_loss(&fixed_config(u, 400, 100, vec![5], 1), 5)?;
    ensure(
        big < 0.2 && small > big,
        format!("median sup error M=5: n=10^4 -> {big:.4} (tol < 0.2), n=400 -> {small:.4} (must exceed)"),
    )
}

fn gl_sanity() -> Outcome {
    let mut cfg = fixed_config(beta_spec(3.0, 3.0), 400, 50, vec![2, 4, 8, 16, 32], 3);
    cfg.gl = true;
    let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let stats = loss_summary(&out.losses);
    let selected = stats
        .iter()
        .find(|s| s.m == -1)
        .ok_or("no selected losses")?
        .median;
    let (best_m, best) = stats
        .iter()
        .filter(|s| s.m > 0)
        .map(|s| (s.m, s.median))
        .fold((0, f64::INFINITY), |b, s| if s.1 < b.1 { s } else { b });
    let ratio = selected / best;
    let mut chosen = out.chosen.clone();
    chosen.sort_unstable();
    ensure(
        ratio <= 3.0,
        format!(
            "median loss selected {selected:.4} vs best fixed M={best_m} {best:.4}: ratio {ratio:.3} (tol 3); median M-hat {}",
            chosen[chosen.len() / 2]
        ),
    )
}

fn study_protocol() -> Outcome {
    let cfg = fixed_config(beta_spec(3.0, 3.0), 100, 100, vec![25, 50, 75], 2012);
    let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let mut csv = Vec::new();
    rwre::experiment::write_summary(&out, &mut csv).map_err(|e| e.to_string())?;
    let rows = out.summary.len();
    let bad = out.summary.iter().filter(|r| !r.is_ordered()).count();
    let mut by_m = Vec::new();
    for m in [25, 50, 75] {
        let mut l: Vec<f64> = out
            .losses
            .iter()
            .filter(|l| l.m == m)
            .map(|l| l.sup_error)
            .collect();
        by_m.push(format!("M={m}: {:.3}", median(&mut l)));
    }
    ensure(
        bad == 0 && rows == 3 * 512 && !csv.is_empty(),
        format!(
            "{rows} summary rows, {bad} ordering violations; median sup loss {}",
            by_m.join(", ")
        ),
    )
}

fn main() {
    let criteria = [
        Criterion { name: "kappa solver vs closed form", budget: secs(1), check: kappa_closed_form, known_failure: None },
        Criterion { name: "kappa solver vs published values", budget: secs(5), check: kappa_reference_values, known_failure: None },
        Criterion { name: "regime classification", budget: None, check: regime_classification, known_failure: None },
        Criterion { name: "ballistic speed Monte Carlo", budget: secs(30), check: ballistic_speed_mc, known_failure: None },
        Criterion { name: "L/R path identity", budget: None, check: path_identity, known_failure: None },
        Criterion { name: "walk/BPIRE equivalence", budget: secs(60), check: walk_bpire_equivalence, known_failure: None },
        Criterion { name: "annealed kernel check", budget: None, check: kernel_check, known_failure: None },
        Criterion { name: "oracle identity", budget: None, check: oracle_identity, known_failure: None },
        Criterion { name: "estimator bounds", budget: None, check: estimator_bounds, known_failure: None },
        Criterion { name: "consistency", budget: secs(120), check: consistency, known_failure: None },
        Criterion { name: "GL selection sanity", budget: secs(180), check: gl_sanity, known_failure: Some(
            "with the literal V_n penalty every C_n(M) equals -2 V_n(min grid) at n=400, so the rule always picks the smallest M",
        ) },
        Criterion { name: "simulation protocol replication", budget: None, check: study_protocol, known_failure: None },
    ];
    let mut failures = 0;
    let mut expected = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.check)();
        let elapsed = start.elapsed();
        let over = c.budget.is_some_and(|b| elapsed > b);
        let (passed, detail) = match (&outcome, over) {
            (Ok(d), false) => (true, d.clone()),
            (Ok(d), true) => (
                false,
                format!("{d}; over time budget {:?}", c.budget.unwrap()),
            ),
            (Err(d), _) => (false, d.clone()),
        };
        let status = match (passed, c.known_failure) {
            (true, _) => "PASS".to_string(),
            (false, None) => {
                failures += 1;
                "FAIL".to_string()
            }
            (false, Some(reason)) => {
                expected += 1;
                format!("FAIL (known: {reason})")
            }
        };
        println!(
            "{status} {}: {detail} [{:.2}s]",
            c.name,
            elapsed.as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {} failed ({expected} known)",
        criteria.len() - failures - expected,
        failures + expected
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
