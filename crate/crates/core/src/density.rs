//! Environment distributions on `(0, 1)`.
//!
//! An [`EnvDensity`] is the law `ν` of a single site's right-step
//! probability. Besides the beta and uniform families it carries the three
//! piecewise test densities of the simulation study:
//!
//! * `triangle_mix`: `0.3·Tri(0.225, 0.3, 0.375) + 0.7·Tri(0.45, 0.6, 0.75)`,
//!   i.e. `4(1 - |2x-0.6|/0.15)` and `14/3 (1 - |2x-1.2|/0.3)` on their supports;
//! * `split_beta`: `0.6·β₃,₃(2x)` on `[0, 1/2]` and `1.4·β₃,₃(2x-1)` on `(1/2, 1]`;
//! * `two_bump(c1, c2)`: `0.8·β₃,₃(0.5+2(x-c1)) + 1.2·β₃,₃(0.5+2(x-c2))`.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::quadrature;
use crate::numeric::special::ln_beta;

/// Family and parameters of an environment density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityKind {
    Beta { alpha: f64, beta: f64 },
    Uniform,
    TriangleMix,
    SplitBeta,
    TwoBump { c1: f64, c2: f64 },
}

/// A validated environment density with a short identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvDensity {
    kind: DensityKind,
    id: String,
    // ln of the beta normalizing constant, for the beta family only
    ln_norm: f64,
}

/// `m^{a,b} = E[ω^a (1-ω)^b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaMoment {
    pub a: u32,
    pub b: u32,
    pub value: f64,
}

const TRIANGLES: [(f64, f64, f64, f64); 2] = [(0.3, 0.225, 0.3, 0.375), (0.7, 0.45, 0.6, 0.75)];
const GRID_POINTS: usize = 10_000;
const ENVELOPE_FACTOR: f64 = 1.05;

impl EnvDensity {
    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::ParameterDomain(format!(
                "beta shapes must be positive and finite, got ({alpha}, {beta})"
            )));
        }
        Ok(Self {
            kind: DensityKind::Beta { alpha, beta },
            id: format!("beta_{alpha}_{beta}"),
            ln_norm: -ln_beta(alpha, beta),
        })
    }

    pub fn uniform() -> Self {
        Self::plain(DensityKind::Uniform, "uniform")
    }

    pub fn triangle_mix() -> Self {
        Self::plain(DensityKind::TriangleMix, "triangle_mix")
    }

    pub fn split_beta() -> Self {
        Self::plain(DensityKind::SplitBeta, "split_beta")
    }

    /// Both bump centres must lie in `[0.25, 0.75]` so that each bump's
    /// support `[c - 1/4, c + 1/4]` stays inside the unit interval.
    pub fn two_bump(c1: f64, c2: f64) -> Result<Self> {
        for c in [c1, c2] {
            if !(0.25..=0.75).contains(&c) {
                return Err(Error::ParameterDomain(format!(
                    "two_bump centres must lie in [0.25, 0.75], got {c}"
                )));
            }
        }
        Ok(Self::plain(
            DensityKind::TwoBump { c1, c2 },
            &format!("two_bump_{c1}_{c2}"),
        ))
    }

    fn plain(kind: DensityKind, id: &str) -> Self {
        Self {
            kind,
            id: id.to_string(),
            ln_norm: 0.0,
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    /// Density at `x`; zero outside `[0, 1]`.
    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match self.kind {
            DensityKind::Beta { alpha, beta } => beta_pdf(alpha, beta, self.ln_norm, x),
            DensityKind::Uniform => 1.0,
            DensityKind::TriangleMix => TRIANGLES
                .iter()
                .map(|&(w, lo, mid, hi)| w * triangle_pdf(lo, mid, hi, x))
                .sum(),
            DensityKind::SplitBeta => {
                if x <= 0.5 {
                    0.6 * beta33(2.0 * x)
                } else {
                    1.4 * beta33(2.0 * x - 1.0)
                }
            }
            DensityKind::TwoBump { c1, c2 } => {
                0.8 * beta33(0.5 + 2.0 * (x - c1)) + 1.2 * beta33(0.5 + 2.0 * (x - c2))
            }
        }
    }

    /// Points of `(0, 1)` where the density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = match self.kind {
            DensityKind::Beta { .. } | DensityKind::Uniform => Vec::new(),
            DensityKind::TriangleMix => TRIANGLES
                .iter()
                .flat_map(|&(_, lo, mid, hi)| [lo, mid, hi])
                .collect(),
            DensityKind::SplitBeta => vec![0.5],
            DensityKind::TwoBump { c1, c2 } => vec![c1 - 0.25, c1 + 0.25, c2 - 0.25, c2 + 0.25],
        };
        pts.retain(|p| *p > 0.0 && *p < 1.0);
        pts
    }

    /// Draws one value in the open interval `(0, 1)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x = self.sample_raw(rng);
            if x > 0.0 && x < 1.0 {
                return x;
            }
        }
    }

    fn sample_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            DensityKind::Beta { alpha, beta } => Beta::new(alpha, beta)
                .expect("shapes validated at construction")
                .sample(rng),
            DensityKind::Uniform => rng.random::<f64>(),
            DensityKind::TriangleMix => {
                let pick: f64 = rng.random();
                let (_, lo, mid, hi) = if pick < TRIANGLES[0].0 {
                    TRIANGLES[0]
                } else {
                    TRIANGLES[1]
                };
                triangle_inverse_cdf(lo, mid, hi, rng.random())
            }
            DensityKind::SplitBeta => {
                let b = beta33_sampler().sample(rng);
                if rng.random::<f64>() < 0.3 {
                    0.5 * b
                } else {
                    0.5 * (b + 1.0)
                }
            }
            DensityKind::TwoBump { c1, c2 } => {
                let c = if rng.random::<f64>() < 0.4 { c1 } else { c2 };
                c - 0.25 + 0.5 * beta33_sampler().sample(rng)
            }
        }
    }

    /// Envelope constant for rejection sampling: `1.05 ×` the largest pdf
    /// value seen on a `10^4`-point grid.
    pub fn pdf_bound(&self) -> f64 {
        let grid_max = (0..=GRID_POINTS)
            .map(|i| self.pdf(i as f64 / GRID_POINTS as f64))
            .fold(0.0, f64::max);
        ENVELOPE_FACTOR * grid_max
    }

    /// Generic sampler: rejection against a uniform proposal.
    pub fn sample_by_rejection<R: Rng + ?Sized>(&self, bound: f64, rng: &mut R) -> f64 {
        loop {
            let x: f64 = rng.random();
            if x <= 0.0 {
                continue;
            }
            if rng.random::<f64>() * bound <= self.pdf(x) {
                return x;
            }
        }
    }

    /// `m^{a,b}`: closed form for the beta and uniform families, composite
    /// Gauss-Legendre quadrature otherwise.
    pub fn beta_moment(&self, a: u32, b: u32) -> BetaMoment {
        let value = match self.kind {
            DensityKind::Beta { alpha, beta } => beta_moment_product(alpha, beta, a, b),
            DensityKind::Uniform => beta_moment_product(1.0, 1.0, a, b),
            _ => self.beta_moment_by_quadrature(a, b),
        };
        BetaMoment {
            a,
            b,
            value: value.clamp(0.0, 1.0),
        }
    }

    /// `∫ u^a (1-u)^b f(u) du` by composite Gauss-Legendre (64 nodes on each
    /// of 32 uniform panels, the density's breakpoints added as panel edges).
    pub fn beta_moment_by_quadrature(&self, a: u32, b: u32) -> f64 {
        let (a, b) = (a as i32, b as i32);
        quadrature::composite(
            |u| u.powi(a) * (1.0 - u).powi(b) * self.pdf(u),
            &self.breakpoints(),
        )
        .max(0.0)
    }

    /// `∫ f` over `[0, 1]` by the same composite rule.
    pub fn total_mass(&self) -> f64 {
        quadrature::composite(|u| self.pdf(u), &self.breakpoints())
    }

    pub fn spec(&self) -> DensitySpec {
        let mut params = serde_json::Map::new();
        match self.kind {
            DensityKind::Beta { alpha, beta } => {
                params.insert("alpha".into(), alpha.into());
                params.insert("beta".into(), beta.into());
            }
            DensityKind::TwoBump { c1, c2 } => {
                params.insert("c1".into(), c1.into());
                params.insert("c2".into(), c2.into());
            }
            _ => {}
        }
        let kind = match self.kind {
            DensityKind::Beta { .. } => "beta",
            DensityKind::Uniform => "uniform",
            DensityKind::TriangleMix => "triangle_mix",
            DensityKind::SplitBeta => "split_beta",
            DensityKind::TwoBump { .. } => "two_bump",
        };
        DensitySpec {
            kind: kind.to_string(),
            params,
            id: Some(self.id.clone()),
        }
    }
}

/// `B(α+a, β+b) / B(α, β)` as a product of `a + b` ratios. Log-gamma
/// differences lose about `1e-14` relative here, which the alternating CDF
/// sums amplify past usefulness.
fn beta_moment_product(alpha: f64, beta: f64, a: u32, b: u32) -> f64 {
    let mut value = 1.0;
    let mut t = 0.0;
    for i in 0..a {
        value *= (alpha + i as f64) / (alpha + beta + t);
        t += 1.0;
    }
    for i in 0..b {
        value *= (beta + i as f64) / (alpha + beta + t);
        t += 1.0;
    }
    value
}

/// JSON form of a density: `{"kind": "...", "params": {...}, "id": "..."}`.
///
/// `params` may be omitted for parameter-free kinds; `id` is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub params: serde_json::Map<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl DensitySpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<EnvDensity> {
        let expect = |names: &[&str]| -> Result<Vec<f64>> {
            for key in self.params.keys() {
                if !names.contains(&key.as_str()) {
                    return Err(Error::Format(format!(
                        "unknown parameter `{key}` for density kind `{}`",
                        self.kind
                    )));
                }
            }
            names
                .iter()
                .map(|name| {
                    self.params
                        .get(*name)
                        .and_then(|v| v.as_f64())
                        .ok_or_else(|| {
                            Error::Format(format!(
                                "density kind `{}` needs numeric parameter `{name}`",
                                self.kind
                            ))
                        })
                })
                .collect()
        };
        let density = match self.kind.as_str() {
            "beta" => {
                let p = expect(&["alpha", "beta"])?;
                EnvDensity::beta(p[0], p[1])?
            }
            "uniform" => {
                expect(&[])?;
                EnvDensity::uniform()
            }
            "triangle_mix" => {
                expect(&[])?;
                EnvDensity::triangle_mix()
            }
            "split_beta" => {
                expect(&[])?;
                EnvDensity::split_beta()
            }
            "two_bump" => {
                let p = expect(&["c1", "c2"])?;
                EnvDensity::two_bump(p[0], p[1])?
            }
            other => return Err(Error::Format(format!("unknown density kind `{other}`"))),
        };
        Ok(match &self.id {
            Some(id) => density.with_id(id.clone()),
            None => density,
        })
    }
}

/// Beta kernel `Γ(a+b)/(Γ(a)Γ(b)) u^(a-1) (1-u)^(b-1)` on `[0, 1]`, zero
/// elsewhere, evaluated in log space.
pub fn beta_kernel(a: f64, b: f64, u: f64) -> f64 {
    beta_pdf(a, b, -ln_beta(a, b), u)
}

fn beta_pdf(a: f64, b: f64, ln_norm: f64, u: f64) -> f64 {
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    if (u == 0.0 && a != 1.0) || (u == 1.0 && b != 1.0) {
        // boundary value of u^(a-1)(1-u)^(b-1): zero for shape > 1, infinite below
        let shape = if u == 0.0 { a } else { b };
        return if shape > 1.0 { 0.0 } else { f64::INFINITY };
    }
    let mut ln = ln_norm;
    if a != 1.0 {
        ln += (a - 1.0) * u.ln();
    }
    if b != 1.0 {
        ln += (b - 1.0) * (-u).ln_1p();
    }
    ln.exp()
}

/// `β₃,₃(u) = 30 u² (1-u)²` on `[0, 1]`.
fn beta33(u: f64) -> f64 {
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    let v = u * (1.0 - u);
    30.0 * v * v
}

fn beta33_sampler() -> Beta<f64> {
    Beta::new(3.0, 3.0).expect("valid shapes")
}

/// Normalized triangle density on `[lo, hi]` with mode `mid`.
fn triangle_pdf(lo: f64, mid: f64, hi: f64, x: f64) -> f64 {
    if x < lo || x > hi {
        return 0.0;
    }
    let height = 2.0 / (hi - lo);
    if x <= mid {
        height * (x - lo) / (mid - lo)
    } else {
        height * (hi - x) / (hi - mid)
    }
}

fn triangle_inverse_cdf(lo: f64, mid: f64, hi: f64, u: f64) -> f64 {
    let split = (mid - lo) / (hi - lo);
    if u < split {
        lo + (u * (hi - lo) * (mid - lo)).sqrt()
    } else {
        hi - ((1.0 - u) * (hi - lo) * (hi - mid)).sqrt()
    }
}

/// The study's densities: the three regularity examples and the three
/// two-bump regime examples.
pub fn reference_densities() -> Vec<EnvDensity> {
    vec![
        EnvDensity::beta(3.0, 3.0).expect("valid"),
        EnvDensity::triangle_mix(),
        EnvDensity::split_beta(),
        EnvDensity::two_bump(0.27, 0.67).expect("valid"),
        EnvDensity::two_bump(0.3, 0.7).expect("valid"),
        EnvDensity::two_bump(0.38, 0.7).expect("valid"),
    ]
}
