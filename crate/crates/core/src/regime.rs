//! Recurrence/transience classification of the walk.
//!
//! With `ρ₀ = (1-ω₀)/ω₀`, the walk is recurrent when `E[log ρ₀] = 0` and
//! transient to the right when it is negative. In the latter case `κ` is the
//! positive root of `E[ρ₀^κ] = 1`; the walk is ballistic when `E[ρ₀] < 1`,
//! with `T_n / n → (1+E[ρ₀])/(1-E[ρ₀])`.

use serde::{Deserialize, Serialize};

use crate::density::EnvDensity;
use crate::error::{Error, Result};
use crate::numeric::quadrature::integrate_graded;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Largest exponent examined when bracketing `κ`.
pub const KAPPA_CAP: f64 = 50.0;
/// `|κ - 1|` below which the walk is reported as the `κ = 1` boundary case.
pub const KAPPA_ONE_TOLERANCE: f64 = 1e-3;
const QUADRATURE_TOLERANCE: f64 = 1e-6;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeClass {
    Recurrent,
    TransientRightBallistic,
    TransientRightSubballistic,
    TransientRightKappaOne,
    TransientLeft,
}

impl RegimeClass {
    pub fn is_transient_right(self) -> bool {
        matches!(
            self,
            RegimeClass::TransientRightBallistic
                | RegimeClass::TransientRightSubballistic
                | RegimeClass::TransientRightKappaOne
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub mean_log_rho: f64,
    #[serde(with = "crate::serde_util::float")]
    pub mean_rho: f64,
    pub kappa: Option<f64>,
    pub class: RegimeClass,
    /// Almost-sure limit of `T_n / n`, `(1 + E ρ) / (1 - E ρ)`, when `E ρ < 1`.
    /// This is the inverse of the walk's velocity.
    pub ballistic_speed: Option<f64>,
}

fn ln_rho(u: f64) -> f64 {
    (-u).ln_1p() - u.ln()
}

/// `E[log ρ₀]` by endpoint-graded quadrature.
pub fn log_rho_mean(d: &EnvDensity) -> Result<f64> {
    let r = integrate_graded(
        |u| {
            let f = d.pdf(u);
            if f == 0.0 {
                0.0
            } else {
                f * ln_rho(u)
            }
        },
        &d.breakpoints(),
    );
    if r.divergent || r.error_estimate > QUADRATURE_TOLERANCE {
        return Err(Error::NumericAccuracy {
            estimate: r.error_estimate,
            tolerance: QUADRATURE_TOLERANCE,
        });
    }
    Ok(r.value)
}

/// `E[ρ₀^s]`, or `+inf` when the integrand is not integrable.
pub fn rho_moment(d: &EnvDensity, s: f64) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    let r = integrate_graded(
        |u| {
            let f = d.pdf(u);
            if f == 0.0 {
                0.0
            } else {
                f * (s * ln_rho(u)).exp()
            }
        },
        &d.breakpoints(),
    );
    if r.divergent {
        f64::INFINITY
    } else {
        r.value
    }
}

/// The root `κ > 0` of `E[ρ₀^κ] = 1` for a walk transient to the right.
///
/// `g(s) = E[ρ₀^s] - 1` is convex with `g(0) = 0` and `g'(0) = E[log ρ₀] < 0`,
/// so it is negative on `(0, κ)` and positive beyond. The bracket grows
/// geometrically from `s = tol` up to [`KAPPA_CAP`]; bisection then runs until
/// the bracket is narrower than `tol` and `|g|` at its midpoint is within `tol`.
pub fn solve_kappa(d: &EnvDensity, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let drift = log_rho_mean(d)?;
    if drift >= -tol {
        return Err(Error::Regime(format!(
            "kappa is defined for walks transient to the right; E[log rho] = {drift:.3e}"
        )));
    }
    let g = |s: f64| rho_moment(d, s) - 1.0;

    let mut lo = 0.0;
    let mut hi = tol;
    while g(hi) <= 0.0 {
        lo = hi;
        if hi >= KAPPA_CAP {
            return Err(Error::NoFiniteKappa { cap: KAPPA_CAP });
        }
        hi = (2.0 * hi).min(KAPPA_CAP);
    }

    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let v = g(mid);
        if hi - lo < tol && v.abs() <= tol {
            return Ok(mid);
        }
        if v > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Err(Error::NumericAccuracy {
        estimate: g(mid).abs(),
        tolerance: tol,
    })
}

pub fn classify(d: &EnvDensity, tol: f64) -> Result<RegimeReport> {
    let mean_log_rho = log_rho_mean(d)?;
    let mean_rho = rho_moment(d, 1.0);
    let (class, kappa) = if mean_log_rho.abs() <= tol {
        (RegimeClass::Recurrent, None)
    } else if mean_log_rho < 0.0 {
        let kappa = match solve_kappa(d, tol) {
            Ok(k) => Some(k),
            Err(Error::NoFiniteKappa { .. }) => None,
            Err(e) => return Err(e),
        };
        let class = match kappa {
            Some(k) if (k - 1.0).abs() <= KAPPA_ONE_TOLERANCE => {
                RegimeClass::TransientRightKappaOne
            }
            Some(k) if k < 1.0 => RegimeClass::TransientRightSubballistic,
            Some(_) => RegimeClass::TransientRightBallistic,
            None if mean_rho < 1.0 => RegimeClass::TransientRightBallistic,
            None => RegimeClass::TransientRightSubballistic,
        };
        (class, kappa)
    } else {
        (RegimeClass::TransientLeft, None)
    };
    let ballistic_speed = (mean_rho < 1.0).then(|| (1.0 + mean_rho) / (1.0 - mean_rho));
    Ok(RegimeReport {
        mean_log_rho,
        mean_rho,
        kappa,
        class,
        ballistic_speed,
    })
}

/// Rate-optimal fixed order for a known regime and Hölder exponent:
/// `⌊(√n / log n)^(2/(β+2))⌋` when recurrent and
/// `⌊(n / log n)^(1/(β+2(1+κ)))⌋` when transient to the right, at least 1.
pub fn recommended_m(report: &RegimeReport, beta_smooth: f64, n: u64) -> Result<usize> {
    if !(beta_smooth > 0.0 && beta_smooth <= 2.0) {
        return Err(Error::ParameterDomain(format!(
            "smoothness must lie in (0, 2], got {beta_smooth}"
        )));
    }
    if n < 2 {
        return Err(Error::ParameterDomain(format!(
            "n must be at least 2, got {n}"
        )));
    }
    let nf = n as f64;
    let value = match report.class {
        RegimeClass::Recurrent => (nf.sqrt() / nf.ln()).powf(2.0 / (beta_smooth + 2.0)),
        class if class.is_transient_right() => {
            let kappa = report
                .kappa
                .ok_or_else(|| Error::Regime("transient report carries no kappa".to_string()))?;
            (nf / nf.ln()).powf(1.0 / (beta_smooth + 2.0 * (1.0 + kappa)))
        }
        _ => {
            return Err(Error::Regime(
                "no rate-optimal order for a walk transient to the left".to_string(),
            ))
        }
    };
    Ok((value.floor() as usize).max(1))
}
