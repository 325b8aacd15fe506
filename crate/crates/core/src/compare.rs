//! Cross-check of the analytic pipeline against the simulator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analytic::{aggregate_metrics, AnalyticOptions, AnalyticReport};
use crate::error::{invalid, Result};
use crate::model::{DistributionCurve, MobilityParams, NetworkModel};
use crate::sim::{simulate, Estimate, SimConfig, SimSummary};

/// Largest accepted sup distance between an analytic and an empirical curve.
pub const SUP_THRESHOLD: f64 = 0.02;
/// Largest accepted |z| for a metric, and the bound slack in standard errors.
pub const Z_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveCheck {
    pub curve: String,
    pub tier: Option<usize>,
    pub sup_distance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCheck {
    pub metric: String,
    pub tier: Option<usize>,
    pub analytic: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub z: f64,
    /// Only gating metrics enter the verdict; the rest are reported.
    pub gating: bool,
    pub passed: bool,
}

/// Analytic initial-sojourn CCDF against the empirical probability of still
/// being served by the initial station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub tier: usize,
    /// Largest `analytic - stay - 3 se` over the grid; the bound holds when it is <= 0.
    pub max_excess: f64,
    pub sup_distance: f64,
    pub max_abs_z: f64,
    /// Largest empirical probability of being back at the initial station
    /// after leaving it (stay minus never-left, from the same replications).
    pub max_return: f64,
    /// The paired z-score of `max_return`.
    pub return_z: f64,
    /// Equality within noise: analytic within 3 se of the stay curve, and no
    /// detectable returns.
    pub tight: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub curves: Vec<CurveCheck>,
    pub metrics: Vec<MetricCheck>,
    pub bounds: Vec<BoundCheck>,
    /// Checks skipped for lack of samples.
    pub skipped: Vec<String>,
    pub verdict: Verdict,
}

impl Comparison {
    pub fn worst_sup_distance(&self) -> f64 {
        self.curves.iter().map(|c| c.sup_distance).fold(0.0, f64::max)
    }
}

fn binomial_floor(se: f64, n: usize) -> f64 {
    // a proportion of exactly 0 or 1 has a plug-in stderr of zero
    se.max(1.0 / n.max(1) as f64)
}

fn z_score(analytic: f64, e: Estimate) -> f64 {
    let d = e.value - analytic;
    if e.stderr > 0.0 {
        d / e.stderr
    } else if d == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(d)
    }
}

fn curve_check(name: &str, tier: Option<usize>, a: &DistributionCurve, e: &DistributionCurve) -> Result<CurveCheck> {
    let sup = a.sup_distance(e)?;
    Ok(CurveCheck {
        curve: name.into(),
        tier,
        sup_distance: sup,
        passed: sup <= SUP_THRESHOLD,
    })
}

fn bound_check(
    tier: usize,
    a: &DistributionCurve,
    stay: &DistributionCurve,
    never_left: &DistributionCurve,
    n: usize,
) -> Result<BoundCheck> {
    let se = stay.stderr.as_ref().ok_or_else(|| invalid("stay curve has no standard errors"))?;
    let mut max_excess = f64::NEG_INFINITY;
    let mut max_abs_z: f64 = 0.0;
    let (mut max_return, mut return_z): (f64, f64) = (0.0, 0.0);
    for i in 0..a.len() {
        let s = binomial_floor(se[i], n);
        let d = a.values[i] - stay.values[i];
        max_excess = max_excess.max(d - Z_THRESHOLD * s);
        max_abs_z = max_abs_z.max(d.abs() / s);
        // paired: every replication that never left also stays
        let r = stay.values[i] - never_left.values[i];
        let sr = binomial_floor((r * (1.0 - r) / n as f64).sqrt(), n);
        max_return = max_return.max(r);
        return_z = return_z.max(r / sr);
    }
    Ok(BoundCheck {
        tier,
        max_excess,
        sup_distance: a.sup_distance(stay)?,
        max_abs_z,
        max_return,
        return_z,
        tight: max_abs_z <= Z_THRESHOLD && return_z <= Z_THRESHOLD,
        passed: max_excess <= 0.0,
    })
}

/// Compares results computed on the same grid.
pub fn compare_results(analytic: &AnalyticReport, sim: &SimSummary) -> Result<Comparison> {
    let tiers = analytic.metrics.tiers.len();
    if sim.handoff_rate.len() != tiers {
        return Err(invalid("analytic and simulated results have different tier counts"));
    }
    if analytic.unconditional.abscissae != sim.grid {
        return Err(invalid("analytic and simulated results use different grids"));
    }
    let mut curves = Vec::new();
    let mut bounds = Vec::new();
    let mut skipped = Vec::new();
    for k in 0..tiers {
        let t = Some(k + 1);
        match &sim.initial[k] {
            Some(e) => curves.push(curve_check("initial_sojourn_ccdf", t, &analytic.initial[k], e)?),
            None => skipped.push(format!("initial_sojourn_ccdf tier {}", k + 1)),
        }
        match &sim.sojourn[k] {
            Some(e) => curves.push(curve_check("sojourn_ccdf", t, &analytic.sojourn[k], e)?),
            None => skipped.push(format!("sojourn_ccdf tier {}", k + 1)),
        }
        match (&sim.stay[k], &sim.initial[k]) {
            (Some(s), Some(e)) => bounds.push(bound_check(k + 1, &analytic.initial[k], s, e, sim.initial_counts[k])?),
            _ => skipped.push(format!("upper bound tier {}", k + 1)),
        }
    }
    match &sim.pooled {
        Some(e) => curves.push(curve_check("sojourn_ccdf", None, &analytic.unconditional, e)?),
        None => skipped.push("sojourn_ccdf all tiers".into()),
    }

    let mut metrics = Vec::new();
    let mut metric = |name: &str, tier: Option<usize>, a: f64, e: Estimate, gating: bool| {
        let z = z_score(a, e);
        metrics.push(MetricCheck {
            metric: name.into(),
            tier,
            analytic: a,
            empirical: e.value,
            stderr: e.stderr,
            z,
            gating,
            passed: z.abs() <= Z_THRESHOLD,
        });
    };
    for (k, m) in analytic.metrics.tiers.iter().enumerate() {
        metric("handoff_rate", Some(k + 1), m.handoff_rate, sim.handoff_rate[k], true);
    }
    for (k, m) in analytic.metrics.tiers.iter().enumerate() {
        metric("time_fraction", Some(k + 1), m.time_fraction, sim.time_fraction[k], false);
        if sim.sojourn_counts[k] > 0 {
            metric("mean_sojourn", Some(k + 1), m.mean_sojourn, sim.mean_sojourn[k], false);
        }
    }
    metric("total_handoff_rate", None, analytic.metrics.total_handoff_rate, sim.total_handoff_rate, false);
    metric(
        "mean_sojourn",
        None,
        analytic.metrics.mean_sojourn_unconditional,
        sim.mean_sojourn_unconditional,
        false,
    );

    let ok = curves.iter().all(|c| c.passed)
        && bounds.iter().all(|b| b.passed)
        && metrics.iter().filter(|m| m.gating).all(|m| m.passed);
    Ok(Comparison {
        curves,
        metrics,
        bounds,
        skipped,
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
    })
}

/// Runs both pipelines on `grid` and compares them.
pub fn compare(
    net: &NetworkModel,
    mob: &MobilityParams,
    cfg: &SimConfig,
    grid: &[f64],
    opts: &AnalyticOptions,
) -> Result<(AnalyticReport, SimSummary, Comparison)> {
    let analytic = aggregate_metrics(net, mob, grid, opts)?;
    let sim = simulate(net, mob, cfg, grid)?;
    let cmp = compare_results(&analytic, &sim)?;
    Ok((analytic, sim, cmp))
}

/// A human-readable summary table.
pub fn render(cmp: &Comparison) -> String {
    use std::fmt::Write as _;
    let tier = |t: Option<usize>| t.map_or("all".to_string(), |k| k.to_string());
    let mark = |p: bool| if p { "ok" } else { "FAIL" };
    let mut s = String::new();
    let _ = writeln!(s, "{:<22} {:>4} {:>12} {:>6}", "curve", "tier", "sup dist", "");
    for c in &cmp.curves {
        let _ = writeln!(s, "{:<22} {:>4} {:>12.5} {:>6}", c.curve, tier(c.tier), c.sup_distance, mark(c.passed));
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<20} {:>4} {:>12} {:>12} {:>10} {:>7} {:>6}",
        "metric", "tier", "analytic", "empirical", "stderr", "z", ""
    );
    for m in &cmp.metrics {
        let flag = if m.gating { mark(m.passed) } else { "" };
        let _ = writeln!(
            s,
            "{:<20} {:>4} {:>12.6} {:>12.6} {:>10.2e} {:>7.2} {:>6}",
            m.metric, tier(m.tier), m.analytic, m.empirical, m.stderr, m.z, flag
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<6} {:>12} {:>10} {:>9} {:>10} {:>9} {:>6} {:>6}",
        "bound", "max excess", "sup dist", "max |z|", "returns", "paired z", "tight", ""
    );
    for b in &cmp.bounds {
        let _ = writeln!(
            s,
            "{:<6} {:>12.5} {:>10.5} {:>9.2} {:>10.5} {:>9.2} {:>6} {:>6}",
            b.tier,
            b.max_excess,
            b.sup_distance,
            b.max_abs_z,
            b.max_return,
            b.return_z,
            if b.tight { "yes" } else { "no" },
            mark(b.passed)
        );
    }
    for k in &cmp.skipped {
        let _ = writeln!(s, "skipped: {k} (too few samples)");
    }
    let _ = writeln!(s, "verdict: {}", cmp.verdict);
    s
}
