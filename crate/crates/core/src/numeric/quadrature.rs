//! Gauss-Legendre quadrature on `[0, 1]`.
//!
//! Two composite schemes are provided. [`composite`] splits the unit
//! interval into uniform panels (plus any breakpoints of a piecewise
//! integrand) and is used for smooth integrands such as beta moments.
//! [`integrate_graded`] additionally grades the mesh geometrically towards
//! both endpoints so that integrable endpoint singularities (logarithms,
//! negative powers) are resolved, and extrapolates the remaining tail.

use std::sync::OnceLock;

/// Number of uniform panels on `[0, 1]`.
pub const UNIFORM_PANELS: usize = 32;
/// Nodes per panel of the primary rule.
pub const NODES_PER_PANEL: usize = 64;

const GRADED_DEPTH_LEFT: i32 = 60;
const GRADED_DEPTH_RIGHT: i32 = 50;
/// Magnitude beyond which a graded integral is reported as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// An `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes nodes and weights by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// The shared 64-point rule.
    pub fn order64() -> &'static Self {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(64))
    }

    /// The shared 32-point rule, used as the embedded error estimate.
    pub fn order32() -> &'static Self {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(32))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let (p, pm1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = n as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}

fn sorted_edges(mut edges: Vec<f64>) -> Vec<f64> {
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
    edges
}

fn uniform_edges(breakpoints: &[f64]) -> Vec<f64> {
    let mut edges: Vec<f64> = (0..=UNIFORM_PANELS)
        .map(|i| i as f64 / UNIFORM_PANELS as f64)
        .collect();
    edges.extend(breakpoints.iter().copied().filter(|b| *b > 0.0 && *b < 1.0));
    sorted_edges(edges)
}

/// Composite 64-point Gauss-Legendre over `[0, 1]`: uniform panels with the
/// integrand's breakpoints inserted as extra panel edges.
pub fn composite<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64]) -> f64 {
    let rule = GaussLegendre::order64();
    let edges = uniform_edges(breakpoints);
    edges
        .windows(2)
        .map(|w| rule.integrate(&f, w[0], w[1]))
        .sum()
}

/// Result of [`integrate_graded`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradedIntegral {
    pub value: f64,
    pub error_estimate: f64,
    pub divergent: bool,
}

/// Integral over `(0, 1)` of an integrand that may blow up (integrably or
/// not) at either endpoint.
///
/// The mesh is graded dyadically down to `2^-60` at the left end and `2^-50`
/// at the right end; the unresolved tail is extrapolated from the ratio of the
/// two innermost shells, which is exact for power-law behaviour. A tail whose
/// shells do not shrink, or a magnitude above [`DIVERGENCE_THRESHOLD`], is
/// reported as divergent.
pub fn integrate_graded<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64]) -> GradedIntegral {
    let hi_rule = GaussLegendre::order64();
    let lo_rule = GaussLegendre::order32();

    let left_inner = 2f64.powi(-GRADED_DEPTH_LEFT + 2);
    let right_inner = 2f64.powi(-GRADED_DEPTH_RIGHT + 2);
    let mut edges: Vec<f64> = (0..=UNIFORM_PANELS)
        .map(|i| i as f64 / UNIFORM_PANELS as f64)
        .collect();
    edges.extend(
        breakpoints
            .iter()
            .copied()
            .filter(|b| *b > left_inner && *b < 1.0 - right_inner),
    );
    let first_uniform = 1.0 / UNIFORM_PANELS as f64;
    let mut k = 1;
    while 2f64.powi(-k) > first_uniform {
        k += 1;
    }
    for depth in k + 1..=GRADED_DEPTH_LEFT {
        edges.push(2f64.powi(-depth));
    }
    for depth in k + 1..=GRADED_DEPTH_RIGHT {
        edges.push(1.0 - 2f64.powi(-depth));
    }
    let edges = sorted_edges(edges);
    let edges = &edges[1..edges.len() - 1];

    let mut value = 0.0;
    let mut error = 0.0;
    let mut panels = Vec::with_capacity(edges.len());
    for w in edges.windows(2) {
        let fine = hi_rule.integrate(&f, w[0], w[1]);
        let coarse = lo_rule.integrate(&f, w[0], w[1]);
        if !fine.is_finite() {
            return GradedIntegral {
                value: f64::INFINITY,
                error_estimate: f64::INFINITY,
                divergent: true,
            };
        }
        panels.push(fine);
        value += fine;
        error += (fine - coarse).abs();
    }

    let n = panels.len();
    let tails = [
        tail_extrapolation(panels[0], panels[1]),
        tail_extrapolation(panels[n - 1], panels[n - 2]),
    ];
    let mut divergent = false;
    for tail in tails {
        match tail {
            Some(t) => {
                value += t;
                error += 0.1 * t.abs();
            }
            None => divergent = true,
        }
    }
    if divergent || value.abs() > DIVERGENCE_THRESHOLD {
        return GradedIntegral {
            value: f64::INFINITY,
            error_estimate: error,
            divergent: true,
        };
    }
    GradedIntegral {
        value,
        error_estimate: error,
        divergent: false,
    }
}

/// Geometric-series tail from the innermost shell and its outer neighbour.
fn tail_extrapolation(inner: f64, outer: f64) -> Option<f64> {
    if inner == 0.0 {
        return Some(0.0);
    }
    let ratio = inner.abs() / outer.abs();
    if !(ratio < 1.0) {
        return None;
    }
    Some(inner * ratio / (1.0 - ratio))
}
