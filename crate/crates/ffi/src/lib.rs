//! C ABI over the `sojourn` library.
//!
//! Networks and simulation results are opaque handles owned by the caller and
//! released with their `_free` function. Every fallible call returns a
//! [`SojournStatus`]; on failure `sojourn_last_error` gives the message.
//! Tier indices are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use sojourn::analytic::{
    ccdf_initial_sojourn, ccdf_sojourn_conditional, handoff_rate_tier, mean_sojourn_conditional,
    tier_association_prob, total_handoff_rate, MobilityMetrics,
};
use sojourn::geometry::{swept_area, SweptDiscQuery};
use sojourn::model::{DistributionCurve, MobilityParams, NetworkModel, TierParams};
use sojourn::sim::{simulate, SimConfig, SimSummary};
use sojourn::Error;

/// Status codes; 2 to 4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SojournStatus {
    Ok = 0,
    InvalidParameter = 2,
    Quadrature = 3,
    Simulator = 4,
    NullPointer = 10,
    /// The output buffer is shorter than the result.
    BufferTooSmall = 11,
    /// No data for this request, such as a curve for a tier with too few samples.
    NoData = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SojournTier {
    pub intensity: f64,
    pub power: f64,
    pub bias: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SojournMobility {
    pub velocity: f64,
    /// Time-to-trigger; 0 disables it.
    pub ttt: f64,
    /// Ping-pong window, at least `ttt`.
    pub t_p: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SojournTierMetrics {
    pub association_prob: f64,
    pub mean_sojourn: f64,
    pub handoff_rate: f64,
    pub effective_handoff_rate: f64,
    pub ping_pong_rate: f64,
    pub time_fraction: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SojournEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Simulated curves selectable with `sojourn_simulation_curve`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SojournCurve {
    /// CCDF of the sojourn in the starting cell.
    Initial = 0,
    /// CCDF of complete sojourns.
    Sojourn = 1,
    /// Probability of being served by the initial station at time T.
    Stay = 2,
}

/// Opaque network handle.
pub struct SojournNetwork(NetworkModel);

/// Opaque simulation result handle.
pub struct SojournSimulation(SimSummary);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SojournStatus {
    match e.exit_code() {
        3 => SojournStatus::Quadrature,
        4 => SojournStatus::Simulator,
        _ => SojournStatus::InvalidParameter,
    }
}

fn fail(status: SojournStatus, msg: impl Into<String>) -> SojournStatus {
    set_error(msg.into());
    status
}

// Runs `f`, turning errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), SojournStatus>>(f: F) -> SojournStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SojournStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(SojournStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, SojournStatus>;
}

impl<T> OrStatus<T> for sojourn::Result<T> {
    fn or_status(self) -> Result<T, SojournStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, SojournStatus> {
    if p.is_null() {
        Err(fail(SojournStatus::NullPointer, "null pointer argument"))
    } else {
        Ok(&*p)
    }
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, SojournStatus> {
    if p.is_null() {
        Err(fail(SojournStatus::NullPointer, "null output pointer"))
    } else {
        Ok(&mut *p)
    }
}

unsafe fn input_slice<'a, T>(p: *const T, n: usize) -> Result<&'a [T], SojournStatus> {
    if n == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(fail(SojournStatus::NullPointer, "null array argument"))
    } else {
        Ok(slice::from_raw_parts(p, n))
    }
}

unsafe fn output_slice<'a, T>(p: *mut T, n: usize) -> Result<&'a mut [T], SojournStatus> {
    if n == 0 {
        Ok(&mut [])
    } else if p.is_null() {
        Err(fail(SojournStatus::NullPointer, "null output array"))
    } else {
        Ok(slice::from_raw_parts_mut(p, n))
    }
}

fn mobility(m: &SojournMobility) -> Result<MobilityParams, SojournStatus> {
    MobilityParams::new(m.velocity, m.ttt, m.t_p).or_status()
}

fn tier_index(net: &NetworkModel, tier: usize) -> Result<usize, SojournStatus> {
    net.check_tier(tier).or_status()?;
    Ok(tier)
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL, or 0
/// when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sojourn_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Builds a network from `n` tiers and path-loss exponent `alpha` (> 2).
///
/// # Safety
/// `tiers` must point to `n` tiers and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sojourn_network_new(
    tiers: *const SojournTier,
    n: usize,
    alpha: f64,
    out_network: *mut *mut SojournNetwork,
) -> SojournStatus {
    guard(|| {
        let slot = out(out_network)?;
        *slot = ptr::null_mut();
        let tiers = input_slice(tiers, n)?
            .iter()
            .map(|t| TierParams::new(t.intensity, t.power, t.bias))
            .collect();
        let net = NetworkModel::new(tiers, alpha).or_status()?;
        *slot = Box::into_raw(Box::new(SojournNetwork(net)));
        Ok(())
    })
}

/// Releases a network; null is ignored.
///
/// # Safety
/// `network` must come from `sojourn_network_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sojourn_network_free(network: *mut SojournNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

/// Number of tiers, or 0 for a null handle.
///
/// # Safety
/// `network` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sojourn_network_tier_count(network: *const SojournNetwork) -> usize {
    network.as_ref().map_or(0, |n| n.0.tier_count())
}

/// Probability that a typical user is served by `tier`.
///
/// # Safety
/// `network` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sojourn_association_prob(
    network: *const SojournNetwork,
    tier: usize,
    out_value: *mut f64,
) -> SojournStatus {
    guard(|| {
        let net = &deref(network)?.0;
        let k = tier_index(net, tier)?;
        *out(out_value)? = tier_association_prob(net, k);
        Ok(())
    })
}

/// Handoffs out of `tier` cells per unit time.
///
/// # Safety
/// Pointers must be valid as for `sojourn_association_prob`.
#[no_mangle]
pub unsafe extern "C" fn sojourn_handoff_rate(
    network: *const SojournNetwork,
    mobility_params: *const SojournMobility,
    tier: usize,
    out_value: *mut f64,
) -> SojournStatus {
    guard(|| {
        let net = &deref(network)?.0;
        let mob = mobility(deref(mobility_params)?)?;
        let k = tier_index(net, tier)?;
        *out(out_value)? = handoff_rate_tier(net, &mob, k).or_status()?;
        Ok(())
    })
}

/// Handoffs per unit time over all tiers.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sojourn_total_handoff_rate(
    network: *const SojournNetwork,
    mobility_params: *const SojournMobility,
    out_value: *mut f64,
) -> SojournStatus {
    guard(|| {
        let net = &deref(network)?.0;
        let mob = mobility(deref(mobility_params)?)?;
        *out(out_value)? = total_handoff_rate(net, &mob).or_status()?;
        Ok(())
    })
}

/// Mean sojourn in a `tier` cell.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sojourn_mean_sojourn(
    network: *const SojournNetwork,
    mobility_params: *const SojournMobility,
    tier: usize,
    out_value: *mut f64,
) -> SojournStatus {
    guard(|| {
        let net = &deref(network)?.0;
        let mob = mobility(deref(mobility_params)?)?;
        let k = tier_index(net, tier)?;
        *out(out_value)? = mean_sojourn_conditional(net, &mob, k).or_status()?;
        Ok(())
    })
}

/// Per-tier metrics into `out[0..tier_count]`.
///
/// # Safety
/// `out_metrics` must point to `capacity` writable entries.
#[no_mangle]
pub unsafe extern "C" fn sojourn_metrics(
    network: *const SojournNetwork,
    mobility_params: *const SojournMobility,
    out_metrics: *mut SojournTierMetrics,
    capacity: usize,
) -> SojournStatus {
    guard(|| {
        let net = &deref(network)?.0;
        let mob = mobility(deref(mobility_params)?)?;
        if capacity < net.tier_count() {
            return Err(fail(SojournStatus::BufferTooSmall, "metrics buffer shorter than the tier count"));
        }
        let dst = output_slice(out_metrics, capacity)?;
        let m = MobilityMetrics::compute(net, &mob).or_status()?;
        for (d, t) in dst.iter_mut().zip(&m.tiers) {
            *d = SojournTierMetrics {
                association_prob: t.association_prob,
                mean_sojourn: t.mean_sojourn,
                handoff_rate: t.handoff_rate,
                effective_handoff_rate: t.effective_handoff_rate,
                ping_pong_rate: t.ping_pong_rate,
                time_fraction: t.time_fraction,
            };
        }
        Ok(())
    })
}

unsafe fn fill_ccdf(
    network: *const SojournNetwork,
    mobility_params: *const SojournMobility,
    tier: usize,
    times: *const f64,
    n: usize,
    out_values: *mut f64,
    eval: fn(&NetworkModel, &MobilityParams, usize, f64) -> sojourn::Result<f64>,
) -> SojournStatus {
    guard(|| {
        let net = &deref(network)?.0;
        let mob = mobility(deref(mobility_params)?)?;
        let k = tier_index(net, tier)?;
        let ts = input_slice(times, n)?;
        let dst = output_slice(out_values, n)?;
        for (d, &t) in dst.iter_mut().zip(ts) {
            *d = eval(net, &mob, k, t).or_status()?;
        }
        Ok(())
    })
}

/// CCDF of the sojourn in the starting `tier` cell at each of `n` times.
///
/// # Safety
/// `times` and `out_values` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sojourn_ccdf_initial(
    network: *const SojournNetwork,
    mobility_params: *const SojournMobility,
    tier: usize,
    times: *const f64,
    n: usize,
    out_values: *mut f64,
) -> SojournStatus {
    fill_ccdf(network, mobility_params, tier, times, n, out_values, ccdf_initial_sojourn)
}

/// CCDF of a complete sojourn in a `tier` cell at each of `n` times.
///
/// # Safety
/// `times` and `out_values` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sojourn_ccdf_sojourn(
    network: *const SojournNetwork,
    mobility_params: *const SojournMobility,
    tier: usize,
    times: *const f64,
    n: usize,
    out_values: *mut f64,
) -> SojournStatus {
    fill_ccdf(network, mobility_params, tier, times, n, out_values, ccdf_sojourn_conditional)
}

/// Area swept by the forbidden disc of a walk of length `z` starting at
/// distance `r0` and angle `theta` from the serving station.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sojourn_swept_area(
    r0: f64,
    theta: f64,
    z: f64,
    beta: f64,
    out_value: *mut f64,
) -> SojournStatus {
    guard(|| {
        let q = SweptDiscQuery::new(r0, theta, z, beta).or_status()?;
        *out(out_value)? = swept_area(&q).or_status()?;
        Ok(())
    })
}

/// Runs the simulator on the `n` grid times. A `horizon` of 0 selects the
/// default of 50 mean sojourns.
///
/// # Safety
/// `grid` must hold `n` doubles and `out_simulation` be writable.
#[no_mangle]
pub unsafe extern "C" fn sojourn_simulate(
    network: *const SojournNetwork,
    mobility_params: *const SojournMobility,
    seed: u64,
    replications: usize,
    horizon: f64,
    grid: *const f64,
    n: usize,
    out_simulation: *mut *mut SojournSimulation,
) -> SojournStatus {
    guard(|| {
        let slot = out(out_simulation)?;
        *slot = ptr::null_mut();
        let net = &deref(network)?.0;
        let mob = mobility(deref(mobility_params)?)?;
        let grid = input_slice(grid, n)?;
        let mut cfg = SimConfig::defaults_for(net, &mob, seed).or_status()?;
        cfg.replications = replications;
        if horizon != 0.0 {
            cfg.horizon = horizon;
        }
        let summary = simulate(net, &mob, &cfg, grid).or_status()?;
        *slot = Box::into_raw(Box::new(SojournSimulation(summary)));
        Ok(())
    })
}

/// Releases a simulation result; null is ignored.
///
/// # Safety
/// `simulation` must come from `sojourn_simulate` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sojourn_simulation_free(simulation: *mut SojournSimulation) {
    if !simulation.is_null() {
        drop(Box::from_raw(simulation));
    }
}

/// Empirical handoff rate of `tier`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sojourn_simulation_handoff_rate(
    simulation: *const SojournSimulation,
    tier: usize,
    out_estimate: *mut SojournEstimate,
) -> SojournStatus {
    guard(|| {
        let s = &deref(simulation)?.0;
        let e = s
            .handoff_rate
            .get(tier)
            .ok_or_else(|| fail(SojournStatus::InvalidParameter, format!("no tier {tier}")))?;
        *out(out_estimate)? = SojournEstimate {
            value: e.value,
            stderr: e.stderr,
        };
        Ok(())
    })
}

/// Empirical mean complete sojourn of `tier`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sojourn_simulation_mean_sojourn(
    simulation: *const SojournSimulation,
    tier: usize,
    out_estimate: *mut SojournEstimate,
) -> SojournStatus {
    guard(|| {
        let s = &deref(simulation)?.0;
        let e = s
            .mean_sojourn
            .get(tier)
            .ok_or_else(|| fail(SojournStatus::InvalidParameter, format!("no tier {tier}")))?;
        *out(out_estimate)? = SojournEstimate {
            value: e.value,
            stderr: e.stderr,
        };
        Ok(())
    })
}

/// Copies an empirical curve on the simulation grid into `values` and
/// `stderrs` (either may be null). `capacity` must be at least the grid length.
///
/// # Safety
/// Non-null buffers must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn sojourn_simulation_curve(
    simulation: *const SojournSimulation,
    curve: SojournCurve,
    tier: usize,
    values: *mut f64,
    stderrs: *mut f64,
    capacity: usize,
) -> SojournStatus {
    guard(|| {
        let s = &deref(simulation)?.0;
        let set = match curve {
            SojournCurve::Initial => &s.initial,
            SojournCurve::Sojourn => &s.sojourn,
            SojournCurve::Stay => &s.stay,
        };
        let c: &DistributionCurve = set
            .get(tier)
            .ok_or_else(|| fail(SojournStatus::InvalidParameter, format!("no tier {tier}")))?
            .as_ref()
            .ok_or_else(|| fail(SojournStatus::NoData, format!("tier {tier} has no samples for this curve")))?;
        if capacity < c.len() {
            return Err(fail(SojournStatus::BufferTooSmall, "curve buffer shorter than the grid"));
        }
        if !values.is_null() {
            output_slice(values, c.len())?.copy_from_slice(&c.values);
        }
        if !stderrs.is_null() {
            let se = c.stderr.as_deref().unwrap_or(&[]);
            output_slice(stderrs, c.len())?[..se.len()].copy_from_slice(se);
        }
        Ok(())
    })
}
