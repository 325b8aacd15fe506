//! One-dimensional quadrature and small numerically safe helpers.
//!
//! [`integrate`] is a globally adaptive Simpson rule: the panel with the
//! largest Richardson error estimate is split until the summed estimate meets
//! `max(abs_tol, rel_tol * |value|)` or the subdivision budget runs out. A
//! non-finite integrand value at either endpoint switches the rule to the
//! substitution `x = a + (b - a) * (3t^2 - 2t^3)`, whose Jacobian vanishes at
//! both ends and turns `1/sqrt(x - a)` or `1/sqrt(b - x)` behaviour into a
//! bounded integrand.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{invalid, Error, Result};

/// Slack allowed on an arccos argument before it counts as a logic error.
pub const CLAMP_EPS: f64 = 1e-9;

const INITIAL_PANELS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Relative Gaussian tail mass dropped by [`integrate_halfline`].
    pub tail_epsilon: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-8,
            max_subdivisions: 1_000_000,
            tail_epsilon: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol >= 0.0 && self.rel_tol >= 0.0) {
            return Err(invalid("quadrature tolerances must be nonnegative"));
        }
        if !(self.abs_tol + self.rel_tol > 0.0) {
            return Err(invalid("abs_tol + rel_tol must be positive"));
        }
        if self.max_subdivisions < 1 {
            return Err(invalid("max_subdivisions must be at least 1"));
        }
        if !(self.tail_epsilon > 0.0 && self.tail_epsilon < 1.0) {
            return Err(invalid("tail_epsilon must lie in (0, 1)"));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Result of a quadrature call. `converged == false` means the tolerance was
/// not met within the subdivision budget (or the integrand went non-finite);
/// `value` still holds the best estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
    pub converged: bool,
}

impl Integral {
    pub const ZERO: Integral = Integral {
        value: 0.0,
        error: 0.0,
        subdivisions: 0,
        converged: true,
    };

    /// Converts a flagged result into [`Error::Quadrature`] naming `integral`.
    pub fn require(self, integral: &'static str) -> Result<f64> {
        if self.converged && self.value.is_finite() {
            Ok(self.value)
        } else {
            Err(Error::Quadrature {
                integral,
                value: self.value,
                error: self.error,
            })
        }
    }

    /// Sum of two independent pieces.
    pub fn merge(self, other: Integral) -> Integral {
        Integral {
            value: self.value + other.value,
            error: self.error + other.error,
            subdivisions: self.subdivisions + other.subdivisions,
            converged: self.converged && other.converged,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    // integrand at a, a+h/4, a+h/2, a+3h/4, b
    f: [f64; 5],
    estimate: f64,
    error: f64,
    // rounding floor of `error`; splitting cannot get below it
    noise: f64,
    seq: u64,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, seq: u64) -> Self {
        let h = b - a;
        let f1 = g(a + 0.25 * h);
        let f3 = g(a + 0.75 * h);
        let f = [fa, f1, fm, f3, fb];
        let coarse = h / 6.0 * (fa + 4.0 * fm + fb);
        let fine = h / 12.0 * (fa + 4.0 * f1 + 2.0 * fm + 4.0 * f3 + fb);
        let delta = fine - coarse;
        Panel {
            a,
            b,
            f,
            estimate: fine + delta / 15.0,
            error: delta.abs() / 15.0,
            noise: 32.0 * f64::EPSILON * h.abs() * f.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            seq,
        }
    }

    fn splittable(&self) -> bool {
        let m = 0.5 * (self.a + self.b);
        let scale = self.a.abs().max(self.b.abs()).max(f64::MIN_POSITIVE);
        (self.b - self.a) > 64.0 * f64::EPSILON * scale && m > self.a && m < self.b && self.error > self.noise
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn adaptive_simpson<F: Fn(f64) -> f64>(g: &F, edges: &[f64], spec: &QuadratureSpec) -> Integral {
    let mut heap = BinaryHeap::new();
    let mut frozen = Vec::new();
    let mut seq = 0u64;
    for piece in edges.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        let width = (b - a) / INITIAL_PANELS as f64;
        let mut left = a;
        let mut f_left = g(a);
        for i in 0..INITIAL_PANELS {
            let right = if i + 1 == INITIAL_PANELS { b } else { a + width * (i + 1) as f64 };
            let f_right = g(right);
            let f_mid = g(0.5 * (left + right));
            heap.push(Panel::new(g, left, right, f_left, f_mid, f_right, seq));
            seq += 1;
            left = right;
            f_left = f_right;
        }
    }

    let mut value: f64 = heap.iter().map(|p| p.estimate).sum();
    let mut error: f64 = heap.iter().map(|p| p.error).sum();
    let mut noise: f64 = heap.iter().map(|p| p.noise).sum();
    let mut subdivisions = 0usize;

    loop {
        if !value.is_finite() || !error.is_finite() {
            break;
        }
        if subdivisions >= spec.max_subdivisions {
            break;
        }
        // a tolerance below the rounding floor counts as met at the floor
        if error <= spec.target(value).max(noise) {
            // the running totals drift; confirm against an exact re-sum
            let all = || heap.iter().chain(frozen.iter());
            value = all().map(|p| p.estimate).sum();
            error = all().map(|p| p.error).sum();
            noise = all().map(|p| p.noise).sum();
            if error <= spec.target(value).max(noise) {
                break;
            }
        }
        let Some(worst) = heap.pop() else { break };
        if !worst.splittable() {
            frozen.push(worst);
            continue;
        }
        let m = 0.5 * (worst.a + worst.b);
        let lhs = Panel::new(g, worst.a, m, worst.f[0], worst.f[1], worst.f[2], seq);
        let rhs = Panel::new(g, m, worst.b, worst.f[2], worst.f[3], worst.f[4], seq + 1);
        seq += 2;
        value += lhs.estimate + rhs.estimate - worst.estimate;
        error += lhs.error + rhs.error - worst.error;
        noise += lhs.noise + rhs.noise - worst.noise;
        heap.push(lhs);
        heap.push(rhs);
        subdivisions += 1;
    }

    // re-sum to shed drift from the running totals
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(frozen);
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value: f64 = panels.iter().map(|p| p.estimate).sum();
    let error: f64 = panels.iter().map(|p| p.error).sum();
    let noise: f64 = panels.iter().map(|p| p.noise).sum();
    let converged = value.is_finite() && error.is_finite() && error <= spec.target(value).max(noise);
    Integral {
        value,
        error,
        subdivisions,
        converged,
    }
}

/// Integrates `f` over `[a, b]` (`a <= b`).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Integral {
    integrate_pieces(f, a, b, &[], spec)
}

/// Integrates `f` over `[a, b]` split at the given interior breakpoints, with
/// one error budget shared by all pieces. Breakpoints outside `(a, b)` are
/// ignored. Pieces whose endpoint values are not finite go through the
/// smoothstep map `x = lo + h (3t^2 - 2t^3)`, whose Jacobian vanishes at both
/// ends.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Integral {
    debug_assert!(a <= b, "integrate: a = {a} > b = {b}");
    if a == b {
        return Integral::ZERO;
    }
    let mut edges: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x.is_finite() && x > a && x < b)
        .collect();
    edges.push(a);
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let finite: Vec<bool> = edges.iter().map(|&x| f(x).is_finite()).collect();
    if finite.iter().all(|&ok| ok) {
        return adaptive_simpson(&f, &edges, spec);
    }
    let singular: Vec<bool> = finite.windows(2).map(|w| !(w[0] && w[1])).collect();
    // piece i occupies t in [i, i + 1]
    let g = |t: f64| {
        let i = (t.floor() as usize).min(singular.len() - 1);
        let (lo, hi) = (edges[i], edges[i + 1]);
        let h = hi - lo;
        let s = t - i as f64;
        if singular[i] {
            let jac = 6.0 * s * (1.0 - s);
            if jac <= 0.0 {
                return 0.0;
            }
            let x = lo + h * s * s * (3.0 - 2.0 * s);
            f(x.clamp(lo, hi)) * h * jac
        } else {
            f(lo + h * s) * h
        }
    };
    let t_edges: Vec<f64> = (0..edges.len()).map(|i| i as f64).collect();
    adaptive_simpson(&g, &t_edges, spec)
}

/// Upper truncation point used by [`integrate_halfline`].
pub fn halfline_cutoff(decay_scale: f64, spec: &QuadratureSpec) -> f64 {
    decay_scale * (1.0 / spec.tail_epsilon).ln().sqrt()
}

/// Integrates `f` over `[0, inf)` for integrands bounded by a multiple of
/// `exp(-(x / decay_scale)^2)`. The domain is cut at
/// `decay_scale * sqrt(ln(1 / tail_epsilon))`, where the envelope's remaining
/// tail mass relative to `exp(-x^2)`-weighted mass is at most `tail_epsilon`.
pub fn integrate_halfline<F: Fn(f64) -> f64>(f: F, decay_scale: f64, spec: &QuadratureSpec) -> Integral {
    integrate_halfline_pieces(f, decay_scale, &[], spec)
}

/// [`integrate_halfline`] with known interior kinks.
pub fn integrate_halfline_pieces<F: Fn(f64) -> f64>(
    f: F,
    decay_scale: f64,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Integral {
    debug_assert!(decay_scale > 0.0);
    let upper = halfline_cutoff(decay_scale, spec);
    integrate_pieces(f, 0.0, upper, breakpoints, spec)
}

/// `acos` of `x` clamped into `[-1, 1]`; arguments further than [`CLAMP_EPS`]
/// outside that range are rejected.
pub fn clamped_acos(x: f64) -> Result<f64> {
    if x.is_nan() || x.abs() > 1.0 + CLAMP_EPS {
        return Err(Error::AcosDomain(x));
    }
    Ok(x.clamp(-1.0, 1.0).acos())
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// A fixed Gauss-Legendre rule mapped onto arbitrary intervals.
#[derive(Debug, Clone)]
pub struct FixedRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl FixedRule {
    pub fn new(points: usize) -> Self {
        let (nodes, weights) = gauss_legendre(points);
        Self { nodes, weights }
    }

    pub fn points(&self) -> usize {
        self.nodes.len()
    }

    /// Mapped (abscissa, weight) pairs on `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn tol(v: f64) -> f64 {
        spec().target(v)
    }

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x, 0.0, 1.0, &spec());
        assert!(r.converged);
        assert!((r.value - 0.5).abs() <= tol(0.5));
    }

    #[test]
    fn sine_over_half_period() {
        let r = integrate(f64::sin, 0.0, PI, &spec());
        assert!(r.converged);
        assert!((r.value - 2.0).abs() <= tol(2.0));
    }

    #[test]
    fn chord_of_unit_circle() {
        // sqrt(2 - 2 cos t) = 2 sin(t/2), antiderivative -4 cos(t/2)
        let r = integrate(|t| (2.0 - 2.0 * t.cos()).sqrt(), 0.0, PI, &spec());
        assert!((r.value - 4.0).abs() <= tol(4.0), "{}", r.value);
    }

    #[test]
    fn zero_width_interval() {
        assert_eq!(integrate(|x| x, 1.0, 1.0, &spec()).value, 0.0);
    }

    #[test]
    fn halfline_gaussian_moment() {
        let r = integrate_halfline(|x| 2.0 * x * (-x * x).exp(), 1.0, &spec());
        assert!((r.value - 1.0).abs() <= 2.0 * tol(1.0), "{}", r.value);
    }

    #[test]
    fn halfline_half_gaussian() {
        // oracle: midpoint Riemann sum on [0, 8] with 2e6 cells
        let n = 2_000_000;
        let h = 8.0 / n as f64;
        let oracle: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                (-PI * x * x).exp() * h
            })
            .sum();
        assert!((oracle - 0.5).abs() < 1e-9);
        let r = integrate_halfline(|x| (-PI * x * x).exp(), 1.0, &spec());
        assert!((r.value - oracle).abs() <= 2.0 * tol(0.5), "{} vs {}", r.value, oracle);
    }

    #[test]
    fn halfline_zero() {
        assert_eq!(integrate_halfline(|_| 0.0, 1.0, &spec()).value, 0.0);
    }

    #[test]
    fn endpoint_inverse_sqrt_singularities() {
        // int_0^1 1/sqrt(x) dx = 2; int_0^1 1/sqrt(1-x^2) dx = pi/2
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, &spec());
        assert!((r.value - 2.0).abs() < 1e-7, "{}", r.value);
        let r = integrate(|x| 1.0 / (1.0 - x * x).sqrt(), 0.0, 1.0, &spec());
        assert!((r.value - PI / 2.0).abs() < 1e-7, "{}", r.value);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let tight = QuadratureSpec::with_tolerances(1e-15, 0.0).with_max_subdivisions(3);
        let r = integrate(|x| (10.0 * x).sin().exp(), 0.0, 5.0, &tight);
        assert!(!r.converged);
        assert!(r.value.is_finite());
        assert!(matches!(r.require("test"), Err(Error::Quadrature { integral: "test", .. })));
    }

    #[test]
    fn acos_clamping() {
        assert_eq!(clamped_acos(1.0 + 1e-12).unwrap(), 0.0);
        assert_eq!(clamped_acos(-1.0).unwrap(), PI);
        assert!((clamped_acos(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!(matches!(clamped_acos(1.0 + 1e-6), Err(Error::AcosDomain(_))));
        assert!(clamped_acos(f64::NAN).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::default().validate().is_ok());
        assert!(QuadratureSpec::with_tolerances(0.0, 0.0).validate().is_err());
        assert!(QuadratureSpec::default().with_max_subdivisions(0).validate().is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = FixedRule::new(8);
        // exact to degree 15
        let v = rule.integrate(|x| x.powi(14) + x.powi(3), -1.0, 1.0);
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        let w: f64 = gauss_legendre(64).1.iter().sum();
        assert!((w - 2.0).abs() < 1e-13);
    }

    #[test]
    fn pieces_match_whole() {
        let f = |x: f64| (x * 3.0).cos() * x;
        let whole = integrate(f, 0.0, 2.0, &spec()).value;
        let split = integrate_pieces(f, 0.0, 2.0, &[0.7, 1.3, 5.0], &spec()).value;
        assert!((whole - split).abs() < 2e-9);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn poly(c: &[f64], x: f64) -> f64 {
            c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
        }

        proptest! {
            #[test]
            fn linearity(
                p in prop::collection::vec(-3.0f64..3.0, 1..6),
                q in prop::collection::vec(-3.0f64..3.0, 1..6),
                alpha in -2.0f64..2.0,
                beta in -2.0f64..2.0,
            ) {
                let s = spec();
                let ip = integrate(|x| poly(&p, x), -1.0, 2.0, &s).value;
                let iq = integrate(|x| poly(&q, x), -1.0, 2.0, &s).value;
                let both = integrate(|x| alpha * poly(&p, x) + beta * poly(&q, x), -1.0, 2.0, &s).value;
                let expected = alpha * ip + beta * iq;
                prop_assert!((both - expected).abs() <= 2.0 * tol(expected) + 1e-12);
            }

            #[test]
            fn interval_additivity(a in -3.0f64..0.0, m in 0.0f64..1.0, b in 1.0f64..4.0, k in 0.5f64..4.0) {
                let s = spec();
                let f = |x: f64| (k * x).sin() + x * x;
                let whole = integrate(f, a, b, &s).value;
                let parts = integrate(f, a, m, &s).value + integrate(f, m, b, &s).value;
                prop_assert!((whole - parts).abs() <= 2.0 * tol(whole));
            }
        }
    }
}
