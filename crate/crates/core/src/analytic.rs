//! Network-level analytic quantities: association statistics, sojourn-time
//! distributions and means, handoff rates and the TTT / ping-pong metrics.
//!
//! The sojourn distributions integrate over the initial serving distance `r0`
//! and bearing `theta` of the serving station. Outer `theta` integrals use
//! fixed Gauss-Legendre panels split where a competing tier's regime changes;
//! inner `r0` integrals run adaptively over a Gaussian-tailed half line.

use std::cell::{Cell, RefCell};
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{
    shape_integral_f_with, shape_integral_i_with, swept_area_and_derivative, swept_area_with, DerivativeMode,
    DerivativeSource, SweptDiscQuery,
};
use crate::model::{log_grid, validate_grid, CurveKind, DistributionCurve, MobilityParams, NetworkModel, Provenance};
use crate::numerics::{integrate_halfline_pieces, FixedRule, QuadratureSpec};

/// Largest quadrature excursion outside `[0, 1]` tolerated before clamping.
pub const EXCURSION_LIMIT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticOptions {
    /// Tolerances for the inner `r0` integrals, the walk integrals and the
    /// shape integrals.
    pub quadrature: QuadratureSpec,
    /// Gauss-Legendre nodes per `theta` panel.
    pub theta_nodes: usize,
    pub derivative: DerivativeMode,
}

impl Default for AnalyticOptions {
    fn default() -> Self {
        Self {
            quadrature: QuadratureSpec::with_tolerances(1e-12, 1e-8),
            theta_nodes: 64,
            derivative: DerivativeMode::Validated,
        }
    }
}

impl AnalyticOptions {
    pub fn validate(&self) -> Result<()> {
        self.quadrature.validate()?;
        if self.theta_nodes < 2 {
            return Err(invalid("theta_nodes must be at least 2"));
        }
        Ok(())
    }
}

/// Probability that the initial serving station belongs to tier `k`.
pub fn tier_association_prob(net: &NetworkModel, k: usize) -> f64 {
    net.intensity(k) / net.weighted_intensity(k)
}

/// Density of the initial serving distance given a tier-`k` server.
pub fn serving_distance_pdf(net: &NetworkModel, k: usize, r0: f64) -> f64 {
    if r0 <= 0.0 {
        return 0.0;
    }
    let s = net.weighted_intensity(k);
    // 1 / P(k) * 2 lambda_k pi r0 = 2 pi s r0
    2.0 * PI * s * r0 * (-PI * s * r0 * r0).exp()
}

/// Competing tiers grouped by their power ratio to the serving tier.
struct TierKernel {
    groups: Vec<(f64, f64)>,
    weighted_intensity: f64,
    decay: f64,
    theta_cuts: Vec<f64>,
}

impl TierKernel {
    fn new(net: &NetworkModel, k: usize) -> Result<Self> {
        net.check_tier(k)?;
        let mut groups: Vec<(f64, f64)> = Vec::new();
        for j in 0..net.tier_count() {
            let b = net.beta(k, j);
            match groups.iter_mut().find(|g| (g.0 - b).abs() <= 1e-14 * b) {
                Some(g) => g.1 += net.intensity(j),
                None => groups.push((b, net.intensity(j))),
            }
        }
        groups.sort_by(|a, b| a.0.total_cmp(&b.0));
        let s = net.weighted_intensity(k);
        let mut theta_cuts: Vec<f64> = groups
            .iter()
            .filter(|g| g.0 < 1.0)
            .flat_map(|g| [g.0.acos(), PI - g.0.acos()])
            .collect();
        theta_cuts.sort_by(f64::total_cmp);
        Ok(Self {
            groups,
            weighted_intensity: s,
            decay: 1.0 / (PI * s).sqrt(),
            theta_cuts,
        })
    }

    // r0 values where a beta < 1 group switches regime, for fixed theta and z
    fn r0_cuts(&self, cos: f64, z: f64) -> Vec<f64> {
        let mut cuts = Vec::new();
        for &(b, _) in &self.groups {
            if b < 1.0 {
                let span = z * (1.0 - b * b) / 2.0;
                if cos > b {
                    cuts.push(span / (cos - b));
                }
                if cos > -b {
                    cuts.push(span / (cos + b));
                }
            }
        }
        cuts
    }

    fn theta_integral<F: Fn(f64) -> f64>(&self, rule: &FixedRule, f: F) -> f64 {
        let mut edges = vec![0.0];
        edges.extend(self.theta_cuts.iter().copied().filter(|&t| t > 0.0 && t < PI));
        edges.push(PI);
        edges.dedup();
        edges.windows(2).map(|w| rule.integrate(&f, w[0], w[1])).sum()
    }
}

struct Failure {
    error: RefCell<Option<Error>>,
}

impl Failure {
    fn new() -> Self {
        Self { error: RefCell::new(None) }
    }

    fn record(&self, e: Error) -> f64 {
        let mut slot = self.error.borrow_mut();
        if slot.is_none() {
            *slot = Some(e);
        }
        0.0
    }

    fn check(self) -> Result<()> {
        match self.error.into_inner() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// Probability that a segment of length `z` from a typical tier-`k` user stays
/// inside the initial cell. Raw quadrature value, not clamped.
fn contact_survival(net: &NetworkModel, k: usize, z: f64, opts: &AnalyticOptions) -> Result<f64> {
    let kernel = TierKernel::new(net, k)?;
    if z == 0.0 {
        return Ok(1.0);
    }
    let rule = FixedRule::new(opts.theta_nodes);
    let failure = Failure::new();
    let outer = kernel.theta_integral(&rule, |theta| {
        let cos = theta.cos();
        let inner = |r0: f64| {
            if r0 <= 0.0 {
                return 0.0;
            }
            let mut exponent = 0.0;
            for &(beta, lambda) in &kernel.groups {
                let q = SweptDiscQuery { r0, theta, z, beta };
                match swept_area_with(&q, &opts.quadrature) {
                    Ok(a) => exponent += lambda * a,
                    Err(e) => return failure.record(e),
                }
            }
            r0 * (-exponent).exp()
        };
        let cuts = kernel.r0_cuts(cos, z);
        match integrate_halfline_pieces(inner, kernel.decay, &cuts, &opts.quadrature)
            .require("initial sojourn r0 integral")
        {
            Ok(v) => v,
            Err(e) => failure.record(e),
        }
    });
    failure.check()?;
    Ok(2.0 * kernel.weighted_intensity * outer)
}

/// Linear contact density with a count of inner evaluations that fell back to
/// the numeric area derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactDensity {
    pub value: f64,
    pub numeric_fallbacks: usize,
}

fn contact_density(net: &NetworkModel, k: usize, z: f64, opts: &AnalyticOptions) -> Result<ContactDensity> {
    if z == 0.0 {
        return Ok(ContactDensity {
            value: 1.0 / mean_chord_length_with(net, k, opts)?,
            numeric_fallbacks: 0,
        });
    }
    let kernel = TierKernel::new(net, k)?;
    let rule = FixedRule::new(opts.theta_nodes);
    let failure = Failure::new();
    let fallbacks = Cell::new(0usize);
    let outer = kernel.theta_integral(&rule, |theta| {
        let cos = theta.cos();
        let inner = |r0: f64| {
            if r0 <= 0.0 {
                return 0.0;
            }
            let mut exponent = 0.0;
            let mut rate = 0.0;
            for &(beta, lambda) in &kernel.groups {
                let q = SweptDiscQuery { r0, theta, z, beta };
                match swept_area_and_derivative(&q, opts.derivative, &opts.quadrature) {
                    Ok((a, d)) => {
                        exponent += lambda * a;
                        rate += lambda * d.value;
                        if d.source == DerivativeSource::NumericFallback {
                            fallbacks.set(fallbacks.get() + 1);
                        }
                    }
                    Err(e) => return failure.record(e),
                }
            }
            r0 * (-exponent).exp() * rate
        };
        let cuts = kernel.r0_cuts(cos, z);
        match integrate_halfline_pieces(inner, kernel.decay, &cuts, &opts.quadrature)
            .require("linear contact density r0 integral")
        {
            Ok(v) => v,
            Err(e) => failure.record(e),
        }
    });
    failure.check()?;
    Ok(ContactDensity {
        value: 2.0 * kernel.weighted_intensity * outer,
        numeric_fallbacks: fallbacks.get(),
    })
}

fn clamp_probability(raw: f64, curve: &'static str, at: f64) -> Result<f64> {
    let excursion = (raw - 1.0).max(-raw).max(0.0);
    if !raw.is_finite() || excursion > EXCURSION_LIMIT {
        return Err(Error::CurveExcursion { curve, at, excursion });
    }
    Ok(raw.clamp(0.0, 1.0))
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("time must be finite and nonnegative, got {t}")))
    }
}

/// CCDF of the sojourn time in the cell where the connection starts.
pub fn ccdf_initial_sojourn(net: &NetworkModel, mob: &MobilityParams, k: usize, t: f64) -> Result<f64> {
    ccdf_initial_sojourn_with(net, mob, k, t, &AnalyticOptions::default())
}

pub fn ccdf_initial_sojourn_with(
    net: &NetworkModel,
    mob: &MobilityParams,
    k: usize,
    t: f64,
    opts: &AnalyticOptions,
) -> Result<f64> {
    check_time(t)?;
    mob.validate()?;
    let raw = contact_survival(net, k, mob.velocity * t, opts)?;
    clamp_probability(raw, "initial sojourn ccdf", t)
}

/// Probability that a segment of length `z` from a typical tier-`k` user
/// crosses the cell boundary.
pub fn linear_contact_cdf(net: &NetworkModel, k: usize, z: f64) -> Result<f64> {
    linear_contact_cdf_with(net, k, z, &AnalyticOptions::default())
}

pub fn linear_contact_cdf_with(net: &NetworkModel, k: usize, z: f64, opts: &AnalyticOptions) -> Result<f64> {
    check_time(z)?;
    let raw = contact_survival(net, k, z, opts)?;
    Ok(1.0 - clamp_probability(raw, "linear contact cdf", z)?)
}

/// Derivative in `z` of [`linear_contact_cdf`]. At `z = 0` this is the
/// reciprocal mean chord length.
pub fn linear_contact_density(net: &NetworkModel, k: usize, z: f64) -> Result<ContactDensity> {
    linear_contact_density_with(net, k, z, &AnalyticOptions::default())
}

pub fn linear_contact_density_with(
    net: &NetworkModel,
    k: usize,
    z: f64,
    opts: &AnalyticOptions,
) -> Result<ContactDensity> {
    check_time(z)?;
    contact_density(net, k, z, opts)
}

/// Mean length of the chord a straight line cuts from a tier-`k` cell.
pub fn mean_chord_length(net: &NetworkModel, k: usize) -> Result<f64> {
    mean_chord_length_with(net, k, &AnalyticOptions::default())
}

pub fn mean_chord_length_with(net: &NetworkModel, k: usize, opts: &AnalyticOptions) -> Result<f64> {
    net.check_tier(k)?;
    let mut denom = 0.0;
    for j in 0..net.tier_count() {
        denom += net.intensity(j) * shape_integral_i_with(net.beta(k, j), &opts.quadrature)?;
    }
    Ok(PI * net.weighted_intensity(k).sqrt() / denom)
}

pub fn mean_sojourn_conditional(net: &NetworkModel, mob: &MobilityParams, k: usize) -> Result<f64> {
    mob.validate()?;
    Ok(mean_chord_length(net, k)? / mob.velocity)
}

/// CCDF of a complete sojourn in a tier-`k` cell.
pub fn ccdf_sojourn_conditional(net: &NetworkModel, mob: &MobilityParams, k: usize, t: f64) -> Result<f64> {
    ccdf_sojourn_conditional_with(net, mob, k, t, &AnalyticOptions::default())
}

pub fn ccdf_sojourn_conditional_with(
    net: &NetworkModel,
    mob: &MobilityParams,
    k: usize,
    t: f64,
    opts: &AnalyticOptions,
) -> Result<f64> {
    sojourn_point(net, mob, k, t, mean_chord_length_with(net, k, opts)?, opts).map(|(v, _)| v)
}

fn sojourn_point(
    net: &NetworkModel,
    mob: &MobilityParams,
    k: usize,
    t: f64,
    chord: f64,
    opts: &AnalyticOptions,
) -> Result<(f64, usize)> {
    check_time(t)?;
    mob.validate()?;
    if t == 0.0 {
        return Ok((1.0, 0));
    }
    let d = contact_density(net, k, mob.velocity * t, opts)?;
    Ok((clamp_probability(chord * d.value, "sojourn ccdf", t)?, d.numeric_fallbacks))
}

/// Mean handoff rate from tier `k` cells into tier `j` cells.
pub fn handoff_rate_pair(net: &NetworkModel, mob: &MobilityParams, k: usize, j: usize) -> Result<f64> {
    net.check_tier(k)?;
    net.check_tier(j)?;
    let f = shape_integral_f_with(net.beta(k, j), &AnalyticOptions::default().quadrature)?;
    Ok(mob.velocity / PI * net.intensity(k) * net.intensity(j) * f / net.weighted_intensity(k).powf(1.5))
}

/// Mean handoff rate out of (equivalently into) tier `k` cells.
pub fn handoff_rate_tier(net: &NetworkModel, mob: &MobilityParams, k: usize) -> Result<f64> {
    (0..net.tier_count()).map(|j| handoff_rate_pair(net, mob, k, j)).sum()
}

pub fn total_handoff_rate(net: &NetworkModel, mob: &MobilityParams) -> Result<f64> {
    (0..net.tier_count()).map(|k| handoff_rate_tier(net, mob, k)).sum()
}

/// Handoffs out of tier `k` that survive the time-to-trigger timer.
pub fn effective_handoff_rate(net: &NetworkModel, mob: &MobilityParams, k: usize) -> Result<f64> {
    Ok(handoff_rate_tier(net, mob, k)? * ccdf_sojourn_conditional(net, mob, k, mob.ttt)?)
}

/// Handoffs into tier `k` whose dwell ends between `ttt` and `t_p`.
pub fn ping_pong_rate(net: &NetworkModel, mob: &MobilityParams, k: usize) -> Result<f64> {
    mob.validate()?;
    if mob.t_p == mob.ttt {
        return Ok(0.0);
    }
    let a = ccdf_sojourn_conditional(net, mob, k, mob.ttt)?;
    let b = ccdf_sojourn_conditional(net, mob, k, mob.t_p)?;
    Ok(handoff_rate_tier(net, mob, k)? * (a - b).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierMetrics {
    pub association_prob: f64,
    pub mean_sojourn: f64,
    pub handoff_rate: f64,
    pub effective_handoff_rate: f64,
    pub ping_pong_rate: f64,
    pub time_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityMetrics {
    pub tiers: Vec<TierMetrics>,
    pub total_handoff_rate: f64,
    pub mean_sojourn_unconditional: f64,
}

impl MobilityMetrics {
    pub fn compute(net: &NetworkModel, mob: &MobilityParams) -> Result<Self> {
        Self::compute_with(net, mob, &AnalyticOptions::default())
    }

    pub fn compute_with(net: &NetworkModel, mob: &MobilityParams, opts: &AnalyticOptions) -> Result<Self> {
        mob.validate()?;
        let mut tiers = Vec::with_capacity(net.tier_count());
        for k in 0..net.tier_count() {
            let chord = mean_chord_length_with(net, k, opts)?;
            let h = handoff_rate_tier(net, mob, k)?;
            let at_ttt = sojourn_point(net, mob, k, mob.ttt, chord, opts)?.0;
            let at_tp = sojourn_point(net, mob, k, mob.t_p, chord, opts)?.0;
            let p = tier_association_prob(net, k);
            tiers.push(TierMetrics {
                association_prob: p,
                mean_sojourn: chord / mob.velocity,
                handoff_rate: h,
                effective_handoff_rate: h * at_ttt,
                ping_pong_rate: h * (at_ttt - at_tp).max(0.0),
                time_fraction: p,
            });
        }
        let total: f64 = tiers.iter().map(|t| t.handoff_rate).sum();
        Ok(Self {
            tiers,
            total_handoff_rate: total,
            mean_sojourn_unconditional: 1.0 / total,
        })
    }
}

/// Everything the analytic pipeline produces for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticReport {
    pub metrics: MobilityMetrics,
    /// Per-tier CCDF of the sojourn in the cell where the connection starts.
    pub initial: Vec<DistributionCurve>,
    /// Per-tier CCDF of a complete sojourn.
    pub sojourn: Vec<DistributionCurve>,
    /// Sojourn CCDF over all tiers, weighted by handoff rate.
    pub unconditional: DistributionCurve,
    pub numeric_fallbacks: usize,
}

/// 60 log-spaced times from 1% to 10x the unconditional mean sojourn.
pub fn default_grid(net: &NetworkModel, mob: &MobilityParams) -> Result<Vec<f64>> {
    let mean = 1.0 / total_handoff_rate(net, mob)?;
    log_grid(0.01 * mean, 10.0 * mean, 60)
}

pub fn initial_sojourn_curve(
    net: &NetworkModel,
    mob: &MobilityParams,
    k: usize,
    grid: &[f64],
    opts: &AnalyticOptions,
) -> Result<DistributionCurve> {
    validate_grid(grid)?;
    let values = grid
        .par_iter()
        .map(|&t| ccdf_initial_sojourn_with(net, mob, k, t, opts))
        .collect::<Result<Vec<_>>>()?;
    DistributionCurve::new(grid.to_vec(), values, CurveKind::Ccdf, Provenance::Analytic)
}

/// Per-tier complete-sojourn CCDF and the number of numeric derivative fallbacks.
pub fn sojourn_curve(
    net: &NetworkModel,
    mob: &MobilityParams,
    k: usize,
    grid: &[f64],
    opts: &AnalyticOptions,
) -> Result<(DistributionCurve, usize)> {
    validate_grid(grid)?;
    let chord = mean_chord_length_with(net, k, opts)?;
    let points = grid
        .par_iter()
        .map(|&t| sojourn_point(net, mob, k, t, chord, opts))
        .collect::<Result<Vec<_>>>()?;
    let fallbacks = points.iter().map(|p| p.1).sum();
    let values = points.into_iter().map(|p| p.0).collect();
    Ok((
        DistributionCurve::new(grid.to_vec(), values, CurveKind::Ccdf, Provenance::Analytic)?,
        fallbacks,
    ))
}

/// Mixes per-tier sojourn curves with weights `H_k / H`.
pub fn mix_curves(curves: &[DistributionCurve], weights: &[f64]) -> Result<DistributionCurve> {
    let first = curves.first().ok_or_else(|| invalid("no curves to mix"))?;
    let total: f64 = weights.iter().sum();
    let values = (0..first.len())
        .map(|i| {
            let v: f64 = curves.iter().zip(weights).map(|(c, w)| c.values[i] * w).sum::<f64>() / total;
            v.clamp(0.0, 1.0)
        })
        .collect();
    DistributionCurve::new(first.abscissae.clone(), values, first.kind, first.provenance)
}

pub fn aggregate_metrics(
    net: &NetworkModel,
    mob: &MobilityParams,
    grid: &[f64],
    opts: &AnalyticOptions,
) -> Result<AnalyticReport> {
    opts.validate()?;
    validate_grid(grid)?;
    let metrics = MobilityMetrics::compute_with(net, mob, opts)?;
    let mut initial = Vec::new();
    let mut sojourn = Vec::new();
    let mut numeric_fallbacks = 0;
    for k in 0..net.tier_count() {
        initial.push(initial_sojourn_curve(net, mob, k, grid, opts)?);
        let (curve, n) = sojourn_curve(net, mob, k, grid, opts)?;
        sojourn.push(curve);
        numeric_fallbacks += n;
    }
    let weights: Vec<f64> = metrics.tiers.iter().map(|t| t.handoff_rate).collect();
    let unconditional = mix_curves(&sojourn, &weights)?;
    Ok(AnalyticReport {
        metrics,
        initial,
        sojourn,
        unconditional,
        numeric_fallbacks,
    })
}
