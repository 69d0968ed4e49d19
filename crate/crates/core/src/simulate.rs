//! Data generation: the quenched walk observed up to its hitting time of `n`,
//! and the branching process with immigration that has the same law as its
//! left-step counts read backwards from `n`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Geometric, Poisson, StandardNormal};

use crate::density::EnvDensity;
use crate::error::{Error, Result};
use crate::numeric::special::ln_binomial;

pub const DEFAULT_MAX_STEPS: u64 = 100_000_000;
/// Offspring totals drawn as sums of geometrics up to this many terms,
/// by gamma-Poisson composition beyond.
pub const DIRECT_GEOMETRIC_LIMIT: f64 = 32.0;
// Poisson means above this are drawn from the normal approximation.
const POISSON_NORMAL_LIMIT: f64 = 1e7;

/// A law for the right-step probability of a single site.
///
/// [`EnvDensity`] is the production law; [`PointMass`] is a deterministic
/// stand-in for tests.
pub trait SiteLaw: Sync {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
}

impl SiteLaw for EnvDensity {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample(rng)
    }
}

/// Every site gets the same probability, which may be 1.
#[derive(Debug, Clone, Copy)]
pub struct PointMass(pub f64);

impl SiteLaw for PointMass {
    fn draw<R: Rng + ?Sized>(&self, _rng: &mut R) -> f64 {
        self.0
    }
}

/// Right-step probabilities `ω_y` on a contiguous range of sites containing 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Environment {
    // sites 0, 1, 2, ...
    nonneg: Vec<f64>,
    // sites -1, -2, ...
    neg: Vec<f64>,
}

impl Environment {
    pub fn lo(&self) -> i64 {
        -(self.neg.len() as i64)
    }

    /// Highest materialized site; `-1` while empty.
    pub fn hi(&self) -> i64 {
        self.nonneg.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.nonneg.len() + self.neg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, y: i64) -> Option<f64> {
        if y >= 0 {
            self.nonneg.get(y as usize).copied()
        } else {
            self.neg.get((-y - 1) as usize).copied()
        }
    }

    /// `ω_lo, ..., ω_hi` in site order.
    pub fn omega(&self) -> Vec<f64> {
        self.neg
            .iter()
            .rev()
            .chain(self.nonneg.iter())
            .copied()
            .collect()
    }
}

/// `ω_y` i.i.d. from `law` for `y ∈ [lo, hi]`, drawn from site 0 outwards.
pub fn sample_environment<L: SiteLaw, R: Rng + ?Sized>(
    law: &L,
    lo: i64,
    hi: i64,
    rng: &mut R,
) -> Result<Environment> {
    if lo > 0 || hi < 0 {
        return Err(Error::ParameterDomain(format!(
            "site range must contain 0, got [{lo}, {hi}]"
        )));
    }
    let nonneg = (0..=hi).map(|_| law.draw(rng)).collect();
    let neg = (lo..0).map(|_| law.draw(rng)).collect();
    Ok(Environment { nonneg, neg })
}

/// Environment materialized on demand: a site's value is drawn on its first
/// visit and cached. Storage grows by amortized doubling in both directions.
pub struct LazyEnvironment<'a, L> {
    law: &'a L,
    env: Environment,
}

impl<'a, L: SiteLaw> LazyEnvironment<'a, L> {
    pub fn new(law: &'a L) -> Self {
        Self {
            law,
            env: Environment::default(),
        }
    }

    pub fn omega_at<R: Rng + ?Sized>(&mut self, y: i64, rng: &mut R) -> f64 {
        let (store, idx) = if y >= 0 {
            (&mut self.env.nonneg, y as usize)
        } else {
            (&mut self.env.neg, (-y - 1) as usize)
        };
        while store.len() <= idx {
            store.push(self.law.draw(rng));
        }
        store[idx]
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    pub fn into_environment(self) -> Environment {
        self.env
    }
}

/// Per-site step counts of one trajectory stopped at `T_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteCounts {
    n: u64,
    hitting_time: u64,
    lo: i64,
    // indexed by y - lo for y in [lo, n]
    left: Vec<u64>,
    right: Vec<u64>,
    truncated: bool,
}

impl SiteCounts {
    pub fn n(&self) -> u64 {
        self.n
    }

    /// `T_n`, or the number of steps taken when truncated.
    pub fn hitting_time(&self) -> u64 {
        self.hitting_time
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Lowest site with a recorded step.
    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn sites(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.n as i64
    }

    fn index(&self, y: i64) -> Option<usize> {
        if y < self.lo || y > self.n as i64 {
            None
        } else {
            Some((y - self.lo) as usize)
        }
    }

    /// `L(T_n, y)`: steps from `y` to `y - 1`.
    pub fn left(&self, y: i64) -> u64 {
        self.index(y).map_or(0, |i| self.left[i])
    }

    /// `R(T_n, y)`: steps from `y` to `y + 1`.
    pub fn right(&self, y: i64) -> u64 {
        self.index(y).map_or(0, |i| self.right[i])
    }

    /// Counts of an explicit nearest-neighbour path from 0 that ends at its
    /// first visit to `n`.
    pub fn from_path(path: &[i64], n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::ParameterDomain(
                "target site must be at least 1".into(),
            ));
        }
        if path.first() != Some(&0) {
            return Err(Error::Format("path must start at 0".into()));
        }
        let target = n as i64;
        let lo = *path.iter().min().expect("non-empty");
        let mut counts = SiteCounts {
            n,
            hitting_time: path.len() as u64 - 1,
            lo,
            left: vec![0; (target - lo + 1) as usize],
            right: vec![0; (target - lo + 1) as usize],
            truncated: false,
        };
        for (t, w) in path.windows(2).enumerate() {
            let (x, next) = (w[0], w[1]);
            if x == target {
                return Err(Error::Format(format!(
                    "path visits {n} before its end (step {t})"
                )));
            }
            let i = (x - lo) as usize;
            match next - x {
                1 => counts.right[i] += 1,
                -1 => counts.left[i] += 1,
                _ => return Err(Error::Format(format!("non-nearest-neighbour step at {t}"))),
            }
        }
        if path.last() != Some(&target) {
            return Err(Error::Format(format!("path does not end at {n}")));
        }
        Ok(counts)
    }

    /// Path-counting identities of a trajectory stopped at its first visit
    /// to `n`: `L(y) = 0` for `y ≥ n`, `L(y+1) = R(y)` for `y < 0`,
    /// `L(y+1) = R(y) - 1` for `0 ≤ y ≤ n-1`, and `Σ (L + R) = T_n`.
    pub fn satisfies_path_identity(&self) -> bool {
        let n = self.n as i64;
        if self.left(n) != 0 || self.right(n) != 0 {
            return false;
        }
        let total: u64 = self.left.iter().sum::<u64>() + self.right.iter().sum::<u64>();
        if total != self.hitting_time {
            return false;
        }
        (self.lo - 1..n).all(|y| {
            let expected = if y >= 0 {
                self.right(y).checked_sub(1)
            } else {
                Some(self.right(y))
            };
            expected == Some(self.left(y + 1))
        })
    }
}

/// Runs the walk from 0 in a lazily drawn environment until it first hits
/// `n`, or until `max_steps` steps have been taken (then `truncated`).
pub fn run_walk_to_hit<L: SiteLaw, R: Rng + ?Sized>(
    law: &L,
    n: u64,
    max_steps: u64,
    rng: &mut R,
) -> Result<SiteCounts> {
    if n == 0 {
        return Err(Error::ParameterDomain(
            "target site must be at least 1".into(),
        ));
    }
    if max_steps < n {
        return Err(Error::ParameterDomain(format!(
            "max_steps ({max_steps}) must be at least n ({n})"
        )));
    }
    let mut env = LazyEnvironment::new(law);
    let target = n as i64;
    // counts for sites 0..n and -1, -2, ...
    let mut left_nonneg = vec![0u64; n as usize + 1];
    let mut right_nonneg = vec![0u64; n as usize + 1];
    let mut left_neg: Vec<u64> = Vec::new();
    let mut right_neg: Vec<u64> = Vec::new();

    let mut x: i64 = 0;
    let mut steps: u64 = 0;
    while x != target && steps < max_steps {
        let omega = env.omega_at(x, rng);
        let go_right = rng.random::<f64>() < omega;
        if x >= 0 {
            let i = x as usize;
            if go_right {
                right_nonneg[i] += 1;
            } else {
                left_nonneg[i] += 1;
            }
        } else {
            let i = (-x - 1) as usize;
            if i >= left_neg.len() {
                left_neg.push(0);
                right_neg.push(0);
            }
            if go_right {
                right_neg[i] += 1;
            } else {
                left_neg[i] += 1;
            }
        }
        x += if go_right { 1 } else { -1 };
        steps += 1;
    }

    let lo = -(left_neg.len() as i64);
    left_neg.reverse();
    right_neg.reverse();
    left_neg.extend(left_nonneg);
    right_neg.extend(right_nonneg);
    Ok(SiteCounts {
        n,
        hitting_time: steps,
        lo,
        left: left_neg,
        right: right_neg,
        truncated: x != target,
    })
}

/// `Z_0, ..., Z_n` with `Z_0 = 0`.
///
/// Entries are integral counts stored as `f64`: in the recurrent regime the
/// process grows like `e^{O(√n)}`, far past any machine integer.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSequence {
    z: Vec<f64>,
}

impl BranchSequence {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.len() < 2 {
            return Err(Error::Format(
                "branch sequence needs Z_0 and at least one generation".into(),
            ));
        }
        if z[0] != 0.0 {
            return Err(Error::Format(format!("Z_0 must be 0, got {}", z[0])));
        }
        if let Some((k, v)) = z
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0 && v.fract() == 0.0))
        {
            return Err(Error::Format(format!(
                "Z_{k} = {v} is not a nonnegative integer"
            )));
        }
        Ok(Self { z })
    }

    pub fn from_counts(z: &[u64]) -> Result<Self> {
        Self::new(z.iter().map(|&v| v as f64).collect())
    }

    /// Number of generations `n` (the sequence holds `n + 1` values).
    pub fn n(&self) -> usize {
        self.z.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.z
    }

    /// Consecutive pairs `(Z_{k-1}, Z_k)` for `k = 1..=n`.
    pub fn transitions(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.z.windows(2).map(|w| (w[0], w[1]))
    }
}

/// `Z_y = L(T_n, n - y)` for `y = 0..=n`.
pub fn counts_to_branch(sc: &SiteCounts) -> Result<BranchSequence> {
    if sc.truncated {
        return Err(Error::Truncated { n: sc.n });
    }
    let n = sc.n as i64;
    BranchSequence::from_counts(&(0..=n).map(|y| sc.left(n - y)).collect::<Vec<_>>())
}

/// Total of `successes` i.i.d. geometric failure counts with success
/// probability `p`, i.e. a negative binomial draw.
pub fn sample_offspring<R: Rng + ?Sized>(successes: f64, p: f64, rng: &mut R) -> f64 {
    if p >= 1.0 || successes == 0.0 {
        return 0.0;
    }
    if p <= 0.0 {
        return f64::INFINITY;
    }
    if successes <= DIRECT_GEOMETRIC_LIMIT {
        let geo = Geometric::new(p).expect("p in (0, 1)");
        return (0..successes as u64).map(|_| geo.sample(rng) as f64).sum();
    }
    let scale = (1.0 - p) / p;
    let lambda: f64 = Gamma::new(successes, scale)
        .expect("positive shape and scale")
        .sample(rng);
    poisson(lambda, rng)
}

fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    if lambda <= POISSON_NORMAL_LIMIT {
        return Poisson::new(lambda)
            .expect("finite positive mean")
            .sample(rng);
    }
    let z: f64 = StandardNormal.sample(rng);
    (lambda + lambda.sqrt() * z).round().max(0.0)
}

/// Branching process with immigration in a random environment: for each
/// generation `y = 1..=n` draw `ω_y ~ law` and
/// `Z_y = Σ_{i=0}^{Z_{y-1}} ξ_{y,i}` with `P(ξ = k) = ω_y (1-ω_y)^k`.
pub fn simulate_bpire<L: SiteLaw, R: Rng + ?Sized>(
    law: &L,
    n: usize,
    rng: &mut R,
) -> Result<BranchSequence> {
    if n == 0 {
        return Err(Error::ParameterDomain("n must be at least 1".into()));
    }
    let mut z = Vec::with_capacity(n + 1);
    z.push(0.0);
    let mut prev = 0.0f64;
    for generation in 1..=n {
        let omega = law.draw(rng);
        let next = sample_offspring(prev + 1.0, omega, rng);
        if !next.is_finite() {
            return Err(Error::Overflow { generation });
        }
        z.push(next);
        prev = next;
    }
    Ok(BranchSequence { z })
}

/// Annealed transition kernel of the branching process,
/// `K(i, j) = C(i+j, i) m^{i+1, j}`.
pub fn annealed_kernel(d: &EnvDensity, i: u32, j: u32) -> f64 {
    let moment = d.beta_moment(i + 1, j).value;
    if moment == 0.0 {
        return 0.0;
    }
    (ln_binomial((i + j) as u64, i as u64) + moment.ln())
        .exp()
        .min(1.0)
}
