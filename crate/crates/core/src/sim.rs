//! Monte Carlo ground truth: sample each tier as a Poisson field, walk a user
//! along a straight line, and record every change of serving station.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::total_handoff_rate;
use crate::error::{invalid, Error, Result};
use crate::model::{validate_grid, CurveKind, DistributionCurve, MobilityParams, NetworkModel, Provenance};

/// Step halvings attempted before a replication's multi-change intervals
/// are accepted as resolved by recursive bisection.
const MAX_REFINEMENTS: u32 = 4;

/// Per-tier sample count below which a summary carries a warning.
pub const LOW_COUNT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub replications: usize,
    /// Travel time per replication.
    pub horizon: f64,
    /// Chance that the true server of a trajectory point lies beyond the padding.
    #[serde(default = "default_guard_epsilon")]
    pub guard_epsilon: f64,
    /// Time resolution of handoff instants.
    #[serde(default = "default_crossing_tol")]
    pub crossing_tol: f64,
    /// Padding added on every side beyond the guard distance.
    #[serde(default)]
    pub extra_padding: f64,
    /// Start of the trajectory relative to the unpadded segment's origin.
    #[serde(default)]
    pub start_offset: [f64; 2],
}

fn default_guard_epsilon() -> f64 {
    1e-6
}

fn default_crossing_tol() -> f64 {
    1e-9
}

impl SimConfig {
    pub const DEFAULT_REPLICATIONS: usize = 20_000;

    /// Defaults: `2e4` replications and a horizon of 50 mean sojourns.
    pub fn defaults_for(net: &NetworkModel, mob: &MobilityParams, seed: u64) -> Result<Self> {
        Ok(Self {
            seed,
            replications: Self::DEFAULT_REPLICATIONS,
            horizon: 50.0 / total_handoff_rate(net, mob)?,
            guard_epsilon: default_guard_epsilon(),
            crossing_tol: default_crossing_tol(),
            extra_padding: 0.0,
            start_offset: [0.0, 0.0],
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(invalid("replications must be at least 1"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.guard_epsilon > 0.0 && self.guard_epsilon < 1.0) {
            return Err(invalid(format!("guard_epsilon must lie in (0, 1), got {}", self.guard_epsilon)));
        }
        if !(self.crossing_tol > 0.0 && self.crossing_tol.is_finite()) {
            return Err(invalid(format!("crossing_tol must be positive, got {}", self.crossing_tol)));
        }
        if !(self.extra_padding >= 0.0 && self.extra_padding.is_finite()) {
            return Err(invalid("extra_padding must be nonnegative"));
        }
        if self.start_offset.iter().any(|o| o.abs() > self.extra_padding) {
            return Err(invalid("start_offset must stay within extra_padding"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Padding beyond which a station serves a trajectory point with probability
/// below `epsilon`: `max beta * sqrt(ln(1 / epsilon) / (pi * min lambda))`.
pub fn guard_distance(net: &NetworkModel, epsilon: f64) -> f64 {
    let k = net.tier_count();
    let max_beta = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| net.beta(i, j))
        .fold(0.0, f64::max);
    let min_lambda = net.tiers().iter().map(|t| t.intensity).fold(f64::INFINITY, f64::min);
    max_beta * ((1.0 / epsilon).ln() / (std::f64::consts::PI * min_lambda)).sqrt()
}

/// Coarse sweep step: about a twentieth of the smallest typical crossing time.
pub fn coarse_step(net: &NetworkModel, mob: &MobilityParams) -> f64 {
    let k = net.tier_count();
    let density: f64 = (0..k)
        .map(|t| {
            let widest = (0..k).map(|j| net.beta(j, t).powi(2)).fold(0.0, f64::max);
            net.intensity(t) * widest
        })
        .sum();
    0.05 / (mob.velocity * density.sqrt())
}

pub fn simulation_window(net: &NetworkModel, mob: &MobilityParams, cfg: &SimConfig) -> Window {
    let pad = guard_distance(net, cfg.guard_epsilon) + cfg.extra_padding;
    let length = mob.velocity * cfg.horizon;
    Window {
        x0: -pad,
        x1: length + pad,
        y0: -pad,
        y1: pad,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseStation {
    pub x: f64,
    pub y: f64,
    pub tier: usize,
}

/// Independent Poisson fields, one per tier, on `window`.
pub fn sample_network<R: Rng + ?Sized>(net: &NetworkModel, window: &Window, rng: &mut R) -> Vec<BaseStation> {
    let area = window.area();
    let mut out = Vec::new();
    for (tier, params) in net.tiers().iter().enumerate() {
        let mean = params.intensity * area;
        let count = if mean > 0.0 {
            Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
        } else {
            0
        };
        out.reserve(count);
        for _ in 0..count {
            let x = window.x0 + (window.x1 - window.x0) * rng.random::<f64>();
            let y = window.y0 + (window.y1 - window.y0) * rng.random::<f64>();
            out.push(BaseStation { x, y, tier });
        }
    }
    out
}

/// `(B_k P_k)^(-1/alpha)`: multiplying a distance by this ranks stations by
/// biased received power, smallest first.
pub fn distance_weights(net: &NetworkModel) -> Vec<f64> {
    net.tiers().iter().map(|t| t.weight().powf(-1.0 / net.alpha())).collect()
}

/// Serving station by exhaustive search: the index in `stations` maximising
/// biased received power, ties to the lowest index. Returns `(index, tier)`.
pub fn serving_bs(stations: &[BaseStation], position: [f64; 2], net: &NetworkModel) -> Option<(usize, usize)> {
    let w = distance_weights(net);
    let mut best: Option<(f64, usize)> = None;
    for (i, s) in stations.iter().enumerate() {
        let d2 = ((s.x - position[0]).powi(2) + (s.y - position[1]).powi(2)) * w[s.tier] * w[s.tier];
        if best.is_none_or(|(b, _)| d2 < b) {
            best = Some((d2, i));
        }
    }
    best.map(|(_, i)| (i, stations[i].tier))
}

/// Stations sorted by x for fast serving queries along a horizontal line.
/// Station identifiers are positions in this order.
pub struct StationIndex {
    xs: Vec<f64>,
    ys: Vec<f64>,
    tiers: Vec<usize>,
    weights: Vec<f64>,
    min_weight: f64,
}

impl StationIndex {
    pub fn new(mut stations: Vec<BaseStation>, net: &NetworkModel) -> Self {
        stations.sort_by(|a, b| a.x.total_cmp(&b.x));
        let weights = distance_weights(net);
        let min_weight = weights.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            xs: stations.iter().map(|s| s.x).collect(),
            ys: stations.iter().map(|s| s.y).collect(),
            tiers: stations.iter().map(|s| s.tier).collect(),
            weights,
            min_weight,
        }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn tier(&self, id: usize) -> usize {
        self.tiers[id]
    }

    pub fn station(&self, id: usize) -> BaseStation {
        BaseStation {
            x: self.xs[id],
            y: self.ys[id],
            tier: self.tiers[id],
        }
    }

    fn cost(&self, i: usize, px: f64, py: f64) -> f64 {
        let w = self.weights[self.tiers[i]];
        ((self.xs[i] - px).powi(2) + (self.ys[i] - py).powi(2)) * w * w
    }

    /// Serving station id at `(px, py)`, ties to the lowest id.
    pub fn serve(&self, px: f64, py: f64) -> Option<usize> {
        if self.xs.is_empty() {
            return None;
        }
        let split = self.xs.partition_point(|&x| x < px);
        let mut best = f64::INFINITY;
        let mut best_id = usize::MAX;
        let consider = |i: usize, best: &mut f64, best_id: &mut usize| {
            let c = self.cost(i, px, py);
            if c < *best || (c == *best && i < *best_id) {
                *best = c;
                *best_id = i;
            }
        };
        let mw2 = self.min_weight * self.min_weight;
        let (mut left, mut right) = (split, split);
        let (mut left_open, mut right_open) = (true, true);
        while left_open || right_open {
            if right_open {
                if right < self.xs.len() && (self.xs[right] - px).powi(2) * mw2 <= best {
                    consider(right, &mut best, &mut best_id);
                    right += 1;
                } else {
                    right_open = false;
                }
            }
            if left_open {
                if left > 0 && (px - self.xs[left - 1]).powi(2) * mw2 <= best {
                    consider(left - 1, &mut best, &mut best_id);
                    left -= 1;
                } else {
                    left_open = false;
                }
            }
        }
        Some(best_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandoffEvent {
    pub time: f64,
    pub from_tier: usize,
    pub to_tier: usize,
    pub from_bs: usize,
    pub to_bs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DwellKind {
    /// The cell where the connection starts.
    Initial,
    /// Entered and left within the horizon.
    Complete,
    /// Still running when the horizon ends.
    Censored,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dwell {
    pub start: f64,
    pub end: f64,
    pub tier: usize,
    pub bs: usize,
    pub kind: DwellKind,
}

impl Dwell {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub events: Vec<HandoffEvent>,
    /// Tiles `[0, horizon]`; the first dwell is `Initial`, the last (if
    /// distinct) is `Censored`.
    pub dwells: Vec<Dwell>,
    /// Step halvings used by this replication.
    pub refinements: u32,
}

impl Trajectory {
    pub fn initial_bs(&self) -> usize {
        self.dwells[0].bs
    }

    /// Serving station at time `t`.
    pub fn bs_at(&self, t: f64) -> usize {
        let i = self.events.partition_point(|e| e.time <= t);
        if i == 0 {
            self.initial_bs()
        } else {
            self.events[i - 1].to_bs
        }
    }
}

struct Walk<'a> {
    index: &'a StationIndex,
    start: [f64; 2],
    velocity: f64,
}

impl Walk<'_> {
    fn serve(&self, t: f64) -> usize {
        self.index
            .serve(self.start[0] + self.velocity * t, self.start[1])
            .expect("nonempty station index")
    }
}

// Bisects a change from `sa` at `a` to `sb` at `b`, recursing into any third
// cell met on the way. Returns how many changes were found.
fn resolve(walk: &Walk, tol: f64, mut a: f64, sa: usize, mut b: f64, sb: usize, out: &mut Vec<(f64, usize, usize)>) -> usize {
    while b - a > tol {
        let m = 0.5 * (a + b);
        let sm = walk.serve(m);
        if sm == sa {
            a = m;
        } else if sm == sb {
            b = m;
        } else {
            return resolve(walk, tol, a, sa, m, sm, out) + resolve(walk, tol, m, sm, b, sb, out);
        }
    }
    out.push((0.5 * (a + b), sa, sb));
    1
}

/// One replication's sweep over an already sampled network.
pub fn sweep_stations(index: &StationIndex, mob: &MobilityParams, cfg: &SimConfig, step: f64) -> Result<Trajectory> {
    if index.is_empty() {
        return Err(Error::Simulator("no stations in the simulation window".into()));
    }
    let walk = Walk {
        index,
        start: cfg.start_offset,
        velocity: mob.velocity,
    };
    let horizon = cfg.horizon;
    let mut refinements = 0;
    let mut dt = step;
    let changes = loop {
        let mut changes: Vec<(f64, usize, usize)> = Vec::new();
        let mut skipped = false;
        let steps = (horizon / dt).ceil().max(1.0) as usize;
        let mut prev_t = 0.0;
        let mut prev_s = walk.serve(0.0);
        for i in 1..=steps {
            let t = if i == steps { horizon } else { i as f64 * dt };
            let s = walk.serve(t);
            if s != prev_s && resolve(&walk, cfg.crossing_tol, prev_t, prev_s, t, s, &mut changes) > 1 {
                skipped = true;
            }
            prev_t = t;
            prev_s = s;
        }
        if !skipped || refinements == MAX_REFINEMENTS {
            break changes;
        }
        refinements += 1;
        dt *= 0.5;
    };

    let first = walk.serve(0.0);
    let mut events = Vec::with_capacity(changes.len());
    let mut dwells = Vec::with_capacity(changes.len() + 1);
    let mut start = 0.0;
    let mut current = first;
    for (i, &(time, from, to)) in changes.iter().enumerate() {
        if from != current || !(time > start || i == 0 && time >= 0.0) {
            return Err(Error::Simulator(format!("inconsistent handoff sequence at t = {time}")));
        }
        events.push(HandoffEvent {
            time,
            from_tier: index.tier(from),
            to_tier: index.tier(to),
            from_bs: from,
            to_bs: to,
        });
        dwells.push(Dwell {
            start,
            end: time,
            tier: index.tier(from),
            bs: from,
            kind: if i == 0 { DwellKind::Initial } else { DwellKind::Complete },
        });
        start = time;
        current = to;
    }
    dwells.push(Dwell {
        start,
        end: horizon,
        tier: index.tier(current),
        bs: current,
        kind: if events.is_empty() { DwellKind::Initial } else { DwellKind::Censored },
    });
    // every dwell must be served by its station at its midpoint
    for d in &dwells {
        if walk.serve(0.5 * (d.start + d.end)) != d.bs {
            return Err(Error::Simulator(format!(
                "missed cell inside dwell [{}, {}] even at step {dt}",
                d.start, d.end
            )));
        }
    }
    Ok(Trajectory {
        events,
        dwells,
        refinements,
    })
}

fn replication_rng(seed: u64, replication: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication as u64);
    rng
}

/// Samples replication `replication` and sweeps it.
pub fn sweep_trajectory(net: &NetworkModel, mob: &MobilityParams, cfg: &SimConfig, replication: usize) -> Result<Trajectory> {
    cfg.validate()?;
    mob.validate()?;
    let mut rng = replication_rng(cfg.seed, replication);
    let window = simulation_window(net, mob, cfg);
    let index = StationIndex::new(sample_network(net, &window, &mut rng), net);
    sweep_stations(&index, mob, cfg, coarse_step(net, mob))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Everything one replication contributes to the summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationStats {
    initial_tier: usize,
    /// `None` when no handoff happens before the horizon.
    first_handoff: Option<f64>,
    complete: Vec<(usize, f64)>,
    time_in_tier: Vec<f64>,
    pair_counts: Vec<u32>,
    stays: Vec<bool>,
    refinements: u32,
}

impl ReplicationStats {
    pub fn from_trajectory(traj: &Trajectory, tiers: usize, grid: &[f64]) -> Self {
        let mut time_in_tier = vec![0.0; tiers];
        for d in &traj.dwells {
            time_in_tier[d.tier] += d.length();
        }
        let mut pair_counts = vec![0u32; tiers * tiers];
        for e in &traj.events {
            pair_counts[e.from_tier * tiers + e.to_tier] += 1;
        }
        let b0 = traj.initial_bs();
        Self {
            initial_tier: traj.dwells[0].tier,
            first_handoff: traj.events.first().map(|e| e.time),
            complete: traj
                .dwells
                .iter()
                .filter(|d| d.kind == DwellKind::Complete)
                .map(|d| (d.tier, d.length()))
                .collect(),
            time_in_tier,
            pair_counts,
            stays: grid.iter().map(|&t| traj.bs_at(t) == b0).collect(),
            refinements: traj.refinements,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub seed: u64,
    pub replications: usize,
    pub horizon: f64,
    pub grid: Vec<f64>,
    /// Per initial tier: CCDF of the sojourn in the starting cell.
    pub initial: Vec<Option<DistributionCurve>>,
    /// Per tier: CCDF of complete sojourns.
    pub sojourn: Vec<Option<DistributionCurve>>,
    /// All complete sojourns pooled.
    pub pooled: Option<DistributionCurve>,
    /// Per initial tier: probability that the serving station at `T` is the
    /// one at time 0.
    pub stay: Vec<Option<DistributionCurve>>,
    pub handoff_rate: Vec<Estimate>,
    /// `pair_rate[k][j]`: handoffs from tier `k` cells into tier `j` cells per unit time.
    pub pair_rate: Vec<Vec<Estimate>>,
    pub total_handoff_rate: Estimate,
    pub time_fraction: Vec<Estimate>,
    pub mean_sojourn: Vec<Estimate>,
    pub mean_sojourn_unconditional: Estimate,
    pub initial_counts: Vec<usize>,
    pub sojourn_counts: Vec<usize>,
    pub refinements: u64,
    pub warnings: Vec<String>,
}

/// Runs every replication in parallel and aggregates in replication order,
/// so the result does not depend on the thread count.
pub fn simulate(net: &NetworkModel, mob: &MobilityParams, cfg: &SimConfig, grid: &[f64]) -> Result<SimSummary> {
    cfg.validate()?;
    mob.validate()?;
    validate_grid(grid)?;
    if grid.last().is_some_and(|&t| t >= cfg.horizon) {
        return Err(invalid("grid must end before the simulation horizon"));
    }
    let window = simulation_window(net, mob, cfg);
    let step = coarse_step(net, mob);
    let tiers = net.tier_count();
    let stats = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(cfg.seed, r);
            let index = StationIndex::new(sample_network(net, &window, &mut rng), net);
            let traj = sweep_stations(&index, mob, cfg, step)?;
            Ok(ReplicationStats::from_trajectory(&traj, tiers, grid))
        })
        .collect::<Result<Vec<_>>>()?;
    summarize(&stats, tiers, grid, cfg)
}

/// Summary of already swept trajectories.
pub fn estimate_curves(trajectories: &[Trajectory], tiers: usize, grid: &[f64], cfg: &SimConfig) -> Result<SimSummary> {
    validate_grid(grid)?;
    let stats: Vec<_> = trajectories
        .iter()
        .map(|t| ReplicationStats::from_trajectory(t, tiers, grid))
        .collect();
    summarize(&stats, tiers, grid, cfg)
}

fn mean_and_stderr(xs: impl Iterator<Item = f64>) -> Estimate {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        f64::NAN
    };
    Estimate {
        value: mean,
        stderr: (var / n).sqrt(),
    }
}

// Ratio sum(a) / sum(b) over replications with its delta-method stderr.
fn ratio_estimate(a: &[f64], b: &[f64]) -> Estimate {
    let n = a.len() as f64;
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    let r = sa / sb;
    let resid: f64 = a.iter().zip(b).map(|(x, y)| (x - r * y).powi(2)).sum();
    let mean_b = sb / n;
    let stderr = if n > 1.0 { (resid / (n * (n - 1.0))).sqrt() / mean_b } else { f64::NAN };
    Estimate { value: r, stderr }
}

fn binomial_curve(grid: &[f64], hits: &[usize], n: usize) -> Result<Option<DistributionCurve>> {
    if n == 0 {
        return Ok(None);
    }
    let values: Vec<f64> = hits.iter().map(|&h| h as f64 / n as f64).collect();
    let stderr = values.iter().map(|p| (p * (1.0 - p) / n as f64).sqrt()).collect();
    Ok(Some(
        DistributionCurve {
            abscissae: grid.to_vec(),
            values,
            kind: CurveKind::Ccdf,
            provenance: Provenance::Empirical,
            stderr: None,
        }
        .with_stderr(stderr)?,
    ))
}

// Complete dwells of length l are seen inside [0, H] in proportion to
// (H - l), so each is weighted by 1 / (H - l) to undo the window's bias
// towards short dwells.
fn dwell_curve(stats: &[ReplicationStats], tier: Option<usize>, grid: &[f64], horizon: f64) -> Result<(Option<DistributionCurve>, Estimate, usize)> {
    let keep = |t: usize| tier.is_none_or(|k| k == t);
    let count: usize = stats.iter().map(|s| s.complete.iter().filter(|d| keep(d.0)).count()).sum();
    if count == 0 {
        return Ok((None, Estimate { value: f64::NAN, stderr: f64::NAN }, 0));
    }
    let weight_sums: Vec<f64> = stats
        .iter()
        .map(|s| s.complete.iter().filter(|d| keep(d.0)).map(|d| 1.0 / (horizon - d.1)).sum())
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut errors = Vec::with_capacity(grid.len());
    for &t in grid {
        let above: Vec<f64> = stats
            .iter()
            .map(|s| {
                s.complete
                    .iter()
                    .filter(|d| keep(d.0) && d.1 > t)
                    .map(|d| 1.0 / (horizon - d.1))
                    .sum()
            })
            .collect();
        let e = ratio_estimate(&above, &weight_sums);
        values.push(e.value.clamp(0.0, 1.0));
        errors.push(e.stderr);
    }
    let lengths: Vec<f64> = stats
        .iter()
        .map(|s| s.complete.iter().filter(|d| keep(d.0)).map(|d| d.1 / (horizon - d.1)).sum())
        .collect();
    let mean = ratio_estimate(&lengths, &weight_sums);
    let curve = DistributionCurve {
        abscissae: grid.to_vec(),
        values,
        kind: CurveKind::Ccdf,
        provenance: Provenance::Empirical,
        stderr: None,
    }
    .with_stderr(errors)?;
    Ok((Some(curve), mean, count))
}

pub fn summarize(stats: &[ReplicationStats], tiers: usize, grid: &[f64], cfg: &SimConfig) -> Result<SimSummary> {
    if stats.is_empty() {
        return Err(invalid("no replications to summarise"));
    }
    let horizon = cfg.horizon;
    let mut warnings = Vec::new();

    let mut initial = Vec::with_capacity(tiers);
    let mut stay = Vec::with_capacity(tiers);
    let mut initial_counts = Vec::with_capacity(tiers);
    for k in 0..tiers {
        let mine: Vec<&ReplicationStats> = stats.iter().filter(|s| s.initial_tier == k).collect();
        let n = mine.len();
        let survive: Vec<usize> = grid
            .iter()
            .map(|&t| mine.iter().filter(|s| s.first_handoff.is_none_or(|f| f > t)).count())
            .collect();
        let stays: Vec<usize> = (0..grid.len()).map(|i| mine.iter().filter(|s| s.stays[i]).count()).collect();
        initial.push(binomial_curve(grid, &survive, n)?);
        stay.push(binomial_curve(grid, &stays, n)?);
        if n < LOW_COUNT {
            warnings.push(format!("only {n} replications start in tier {}", k + 1));
        }
        initial_counts.push(n);
    }

    let mut sojourn = Vec::with_capacity(tiers);
    let mut mean_sojourn = Vec::with_capacity(tiers);
    let mut sojourn_counts = Vec::with_capacity(tiers);
    for k in 0..tiers {
        let (curve, mean, n) = dwell_curve(stats, Some(k), grid, horizon)?;
        if n < LOW_COUNT {
            warnings.push(format!("only {n} complete sojourns in tier {}", k + 1));
        }
        sojourn.push(curve);
        mean_sojourn.push(mean);
        sojourn_counts.push(n);
    }
    let (pooled, mean_all, _) = dwell_curve(stats, None, grid, horizon)?;

    let pair_rate = (0..tiers)
        .map(|k| {
            (0..tiers)
                .map(|j| mean_and_stderr(stats.iter().map(|s| s.pair_counts[k * tiers + j] as f64 / horizon)))
                .collect()
        })
        .collect();
    let handoff_rate = (0..tiers)
        .map(|k| {
            mean_and_stderr(
                stats
                    .iter()
                    .map(|s| s.pair_counts[k * tiers..(k + 1) * tiers].iter().sum::<u32>() as f64 / horizon),
            )
        })
        .collect();
    let total_handoff_rate = mean_and_stderr(stats.iter().map(|s| s.pair_counts.iter().sum::<u32>() as f64 / horizon));
    let time_fraction = (0..tiers)
        .map(|k| mean_and_stderr(stats.iter().map(|s| s.time_in_tier[k] / horizon)))
        .collect();

    Ok(SimSummary {
        seed: cfg.seed,
        replications: stats.len(),
        horizon,
        grid: grid.to_vec(),
        initial,
        sojourn,
        pooled,
        stay,
        handoff_rate,
        pair_rate,
        total_handoff_rate,
        time_fraction,
        mean_sojourn,
        mean_sojourn_unconditional: mean_all,
        initial_counts,
        sojourn_counts,
        refinements: stats.iter().map(|s| s.refinements as u64).sum(),
        warnings,
    })
}

/// Fraction of the total dwell time spent in each tier.
pub fn empirical_time_fractions(dwells: &[Dwell], tiers: usize) -> Result<Vec<f64>> {
    let total: f64 = dwells.iter().map(Dwell::length).sum();
    if !(total > 0.0) {
        return Err(invalid("total dwell time must be positive"));
    }
    let mut out = vec![0.0; tiers];
    for d in dwells {
        out[d.tier] += d.length();
    }
    Ok(out.into_iter().map(|t| t / total).collect())
}
