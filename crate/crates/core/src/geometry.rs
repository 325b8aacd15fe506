//! Geometry of the region swept by the forbidden disc of a moving user.
//!
//! A user starts at the origin at distance `r0` from its serving station and
//! walks a distance `z` along the positive x axis; the station sits at angle
//! `theta` from the direction of travel. While served by that station, no
//! competing station may lie within `g / beta` of the user, `g` being the
//! current serving distance. The swept region is the union of those discs over
//! the walk, and its area drives every sojourn-time distribution.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::numerics::{clamped_acos, integrate, integrate_pieces, QuadratureSpec, CLAMP_EPS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweptDiscQuery {
    /// Initial serving distance.
    pub r0: f64,
    /// Angle between the serving station and the direction of travel, in `[0, pi]`.
    pub theta: f64,
    /// Distance travelled.
    pub z: f64,
    /// Power ratio `((B_k P_k) / (B_j P_j))^(1/alpha)` between serving and competing tier.
    pub beta: f64,
}

/// Which closed form applies to a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseLabel {
    /// `beta < 1`, the final disc lies inside the initial one.
    Shrinkable,
    /// `beta < 1`, the initial disc lies inside the final one.
    Engulfing,
    /// `beta = 1`, or `beta < 1` with the two end discs partially overlapping.
    Lens,
    /// `beta > 1`: the union needs an integral over the whole walk.
    SweepIntegral,
}

impl SweptDiscQuery {
    pub fn new(r0: f64, theta: f64, z: f64, beta: f64) -> Result<Self> {
        let q = Self { r0, theta, z, beta };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(invalid(format!("r0 must be positive, got {}", self.r0)));
        }
        if !(0.0..=PI).contains(&self.theta) {
            return Err(invalid(format!("theta must lie in [0, pi], got {}", self.theta)));
        }
        if !(self.z >= 0.0 && self.z.is_finite()) {
            return Err(invalid(format!("z must be nonnegative, got {}", self.z)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn with_z(self, z: f64) -> Self {
        Self { z, ..self }
    }

    /// Distances `z` at which the `beta < 1` regime switches; `None` otherwise.
    pub fn case_boundaries(&self) -> Option<(f64, f64)> {
        case_boundaries(self.r0, self.theta.cos(), self.beta)
    }

    pub fn case(&self) -> CaseLabel {
        if self.beta > 1.0 {
            return CaseLabel::SweepIntegral;
        }
        match self.case_boundaries() {
            None => CaseLabel::Lens,
            Some((lo, _)) if self.z < lo => CaseLabel::Shrinkable,
            Some((_, hi)) if self.z > hi => CaseLabel::Engulfing,
            Some(_) => CaseLabel::Lens,
        }
    }

    /// Serving distance after travelling the fraction `u` of the walk.
    pub fn distance_at(&self, u: f64) -> f64 {
        chord_distance(self, u)
    }
}

pub(crate) fn case_boundaries(r0: f64, cos_theta: f64, beta: f64) -> Option<(f64, f64)> {
    if beta < 1.0 {
        let d = 1.0 - beta * beta;
        Some((2.0 * r0 * (cos_theta - beta) / d, 2.0 * r0 * (cos_theta + beta) / d))
    } else {
        None
    }
}

/// `sqrt(r0^2 + z^2 u^2 - 2 r0 z u cos(theta))`, evaluated as the norm of
/// `(z u - r0 cos(theta), r0 sin(theta))` so it never goes negative.
pub fn chord_distance(q: &SweptDiscQuery, u: f64) -> f64 {
    let (s, c) = q.theta.sin_cos();
    (q.z * u - q.r0 * c).hypot(q.r0 * s)
}

fn acos_in_range(x: f64) -> f64 {
    debug_assert!(x.abs() <= 1.0 + CLAMP_EPS, "acos argument {x} out of range");
    x.clamp(-1.0, 1.0).acos()
}

/// Area of the intersection of two discs with radii `r1`, `r2` whose centres
/// are `d` apart.
pub fn lens_area(r1: f64, r2: f64, d: f64) -> f64 {
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        let r = r1.min(r2);
        return PI * r * r;
    }
    // atan2 keeps the half-angles accurate near tangency, where acos is not
    let k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
    let root = k.max(0.0).sqrt();
    let a1 = root.atan2(d * d + (r1 - r2) * (r1 + r2));
    let a2 = root.atan2(d * d + (r2 - r1) * (r1 + r2));
    r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * root
}

/// Area of the union of two discs.
pub fn disc_union_area(r1: f64, r2: f64, d: f64) -> f64 {
    PI * (r1 * r1 + r2 * r2) - lens_area(r1, r2, d)
}

/// Area swept by the forbidden disc, at the default quadrature tolerance.
pub fn swept_area(q: &SweptDiscQuery) -> Result<f64> {
    swept_area_with(q, &QuadratureSpec::default())
}

pub fn swept_area_with(q: &SweptDiscQuery, spec: &QuadratureSpec) -> Result<f64> {
    swept_area_and_error(q, spec).map(|(a, _)| a)
}

// Area and the quadrature error estimate (zero for the closed-form cases).
fn swept_area_and_error(q: &SweptDiscQuery, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let b2 = q.beta * q.beta;
    if q.z == 0.0 {
        return Ok((PI * q.r0 * q.r0 / b2, 0.0));
    }
    let g1 = chord_distance(q, 1.0);
    match q.case() {
        CaseLabel::Shrinkable => Ok((PI * q.r0 * q.r0 / b2, 0.0)),
        CaseLabel::Engulfing => Ok((PI * g1 * g1 / b2, 0.0)),
        CaseLabel::Lens => Ok((disc_union_area(q.r0 / q.beta, g1 / q.beta, q.z), 0.0)),
        CaseLabel::SweepIntegral => {
            let sweep = SweepIntegrand::new(q);
            let integral = integrate_pieces(|u| sweep.area_rate(u), 0.0, 1.0, &sweep.kinks(), spec);
            let scale = 2.0 * q.z / b2;
            let value = integral.require("swept area walk integral")?;
            Ok((PI * g1 * g1 / b2 + scale * value, scale * integral.error))
        }
    }
}

/// Integrands of the `beta > 1` walk integral and of its `z` derivative.
struct SweepIntegrand {
    r0: f64,
    z: f64,
    beta: f64,
    cos: f64,
    sin: f64,
}

impl SweepIntegrand {
    fn new(q: &SweptDiscQuery) -> Self {
        let (sin, cos) = q.theta.sin_cos();
        Self {
            r0: q.r0,
            z: q.z,
            beta: q.beta,
            cos,
            sin,
        }
    }

    // (w, g, sqrt(beta^2 g^2 - w^2)) at walk fraction u
    fn parts(&self, u: f64) -> (f64, f64, f64) {
        let w = self.z * u - self.r0 * self.cos;
        let h = self.r0 * self.sin;
        let g = w.hypot(h);
        // beta^2 g^2 - w^2 = (beta^2 - 1) w^2 + beta^2 h^2
        let root = ((self.beta * self.beta - 1.0) * w * w + self.beta * self.beta * h * h)
            .max(0.0)
            .sqrt();
        (w, g, root)
    }

    fn area_rate(&self, u: f64) -> f64 {
        let (w, g, root) = self.parts(u);
        if g == 0.0 {
            return 0.0;
        }
        root - acos_in_range(w / (self.beta * g)) * w
    }

    fn derivative_rate(&self, u: f64) -> f64 {
        let (w, g, root) = self.parts(u);
        if g == 0.0 {
            return 0.0;
        }
        root * u * w / (g * g) - acos_in_range(w / (self.beta * g)) * u
    }

    // the integrands bend where the walk passes the station's foot point
    fn kinks(&self) -> Vec<f64> {
        if self.z > 0.0 {
            vec![self.r0 * self.cos / self.z]
        } else {
            Vec::new()
        }
    }
}

/// How a derivative value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeSource {
    ClosedForm,
    NumericFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeMode {
    /// Cross-check the closed form against a central difference of
    /// [`swept_area`] and keep the difference when they disagree.
    #[default]
    Validated,
    /// Use the closed form unless it is non-finite.
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaDerivative {
    pub value: f64,
    pub source: DerivativeSource,
}

/// Relative disagreement above which validated mode falls back to the
/// numeric difference.
pub const DERIVATIVE_AGREEMENT: f64 = 1e-4;

/// `d|A|/dz` in validated mode at the default tolerance. Requires `z > 0`.
pub fn swept_area_derivative(q: &SweptDiscQuery) -> Result<AreaDerivative> {
    swept_area_derivative_with(q, DerivativeMode::Validated, &QuadratureSpec::default())
}

pub fn swept_area_derivative_with(
    q: &SweptDiscQuery,
    mode: DerivativeMode,
    spec: &QuadratureSpec,
) -> Result<AreaDerivative> {
    swept_area_and_derivative(q, mode, spec).map(|(_, d)| d)
}

/// Area and its `z` derivative together; the `beta > 1` walk integral is
/// shared between the two.
pub fn swept_area_and_derivative(
    q: &SweptDiscQuery,
    mode: DerivativeMode,
    spec: &QuadratureSpec,
) -> Result<(f64, AreaDerivative)> {
    if !(q.z > 0.0) {
        return Err(invalid(
            "swept_area_derivative needs z > 0; use swept_area_derivative_at_zero",
        ));
    }
    let (area, closed) = area_and_closed_form(q, spec)?;
    let closed_form = AreaDerivative {
        value: closed,
        source: DerivativeSource::ClosedForm,
    };
    let needs_check = mode == DerivativeMode::Validated || !closed.is_finite();
    // the shrinkable and engulfing branches are exact algebra
    if !needs_check || (closed.is_finite() && matches!(q.case(), CaseLabel::Shrinkable | CaseLabel::Engulfing)) {
        return Ok((area, closed_form));
    }
    let (numeric, noise) = central_difference(q, area, spec)?;
    let agree = closed.is_finite() && (closed - numeric).abs() <= DERIVATIVE_AGREEMENT * numeric.abs() + noise;
    if agree {
        Ok((area, closed_form))
    } else {
        Ok((
            area,
            AreaDerivative {
                value: numeric,
                source: DerivativeSource::NumericFallback,
            },
        ))
    }
}

/// Step used by the finite-difference check.
pub fn difference_step(z: f64) -> f64 {
    1e-6f64.max(1e-6 * z)
}

// Central difference of the area and a bound on its own rounding and
// quadrature noise.
fn central_difference(q: &SweptDiscQuery, area: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let h = difference_step(q.z).min(0.5 * q.z);
    let fine = QuadratureSpec {
        abs_tol: spec.abs_tol * 1e-3,
        rel_tol: spec.rel_tol * 1e-4,
        ..*spec
    };
    let (plus, e_plus) = swept_area_and_error(&q.with_z(q.z + h), &fine)?;
    let (minus, e_minus) = swept_area_and_error(&q.with_z(q.z - h), &fine)?;
    // the error estimates are per evaluation; doubling them keeps a margin
    let noise = (8.0 * f64::EPSILON * area.abs() + fine.abs_tol + e_plus + e_minus) / h;
    Ok(((plus - minus) / (2.0 * h), noise))
}

/// The four-branch closed form of `d|A|/dz`. May be non-finite where the lens
/// branch's individual terms blow up at its case boundaries.
pub fn swept_area_derivative_closed_form(q: &SweptDiscQuery, spec: &QuadratureSpec) -> Result<f64> {
    area_and_closed_form(q, spec).map(|(_, d)| d)
}

fn area_and_closed_form(q: &SweptDiscQuery, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let (r0, z, beta) = (q.r0, q.z, q.beta);
    let b2 = beta * beta;
    let c = q.theta.cos();
    let growth = 2.0 * PI * (z - r0 * c) / b2;
    match q.case() {
        CaseLabel::Shrinkable => Ok((PI * r0 * r0 / b2, 0.0)),
        CaseLabel::Engulfing => Ok((PI * chord_distance(q, 1.0).powi(2) / b2, growth)),
        CaseLabel::SweepIntegral => {
            let sweep = SweepIntegrand::new(q);
            let kinks = sweep.kinks();
            let walk = integrate_pieces(|u| sweep.area_rate(u), 0.0, 1.0, &kinks, spec)
                .require("swept area walk integral")?;
            let rate = integrate_pieces(|u| sweep.derivative_rate(u), 0.0, 1.0, &kinks, spec)
                .require("swept area derivative walk integral")?;
            let area = PI * chord_distance(q, 1.0).powi(2) / b2 + 2.0 * z / b2 * walk;
            Ok((area, growth + 2.0 / b2 * walk + 2.0 * z / b2 * rate))
        }
        CaseLabel::Lens => {
            let g = chord_distance(q, 1.0);
            let bm = b2 - 1.0;
            let t2 = bm / b2 * r0 * r0 / (4.0 * b2 * r0 * r0 - (bm * z + 2.0 * r0 * c).powi(2)).sqrt();
            let t3 = ((b2 + 1.0 - 2.0 * c * c) / b2 * r0 * r0 - bm / b2 * r0 * z * c)
                / (4.0 * b2 * g * g - ((b2 + 1.0) * z - 2.0 * r0 * c).powi(2)).sqrt();
            let arg = ((b2 + 1.0) * z - 2.0 * r0 * c) / (2.0 * beta * g);
            let t4 = if arg.is_finite() && arg.abs() <= 1.0 + CLAMP_EPS {
                -clamped_acos(arg)? * 2.0 * (z - r0 * c) / b2
            } else {
                f64::NAN
            };
            let plus = bm * z + 2.0 * r0 * (beta + c);
            let minus = -bm * z + 2.0 * r0 * (beta - c);
            let t5 = (minus / plus).sqrt() * (bm * z + r0 * (beta + c)) / (2.0 * b2);
            let t6 = (plus / minus).sqrt() * (-bm * z + r0 * (beta - c)) / (2.0 * b2);
            let area = disc_union_area(r0 / beta, g / beta, z);
            Ok((area, growth + t2 + t3 + t4 + t5 + t6))
        }
    }
}

/// Limit of `d|A|/dz` as `z -> 0`.
pub fn swept_area_derivative_at_zero(r0: f64, theta: f64, beta: f64) -> f64 {
    let c = theta.cos();
    let b2 = beta * beta;
    if beta < 1.0 {
        let edge = beta.acos();
        if theta <= edge {
            return 0.0;
        }
        if theta >= PI - edge {
            return -2.0 * PI * r0 * c / b2;
        }
    }
    let root = (b2 - c * c).max(0.0).sqrt();
    2.0 * r0 / b2 * (root - c * acos_in_range(c / beta))
}

/// Shape integral entering the mean chord length.
///
/// For `beta < 1` the integration range `[acos(beta), pi - acos(beta)]` is
/// mapped through `cos(theta) = beta * sin(phi)`, which removes the inverse
/// square-root singularities at both ends.
pub fn shape_integral_i(beta: f64) -> Result<f64> {
    shape_integral_i_with(beta, &QuadratureSpec::default())
}

pub fn shape_integral_i_with(beta: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    let b2 = beta * beta;
    let value = if beta >= 1.0 {
        // (beta^2 + 1 - 2cos^2) / sqrt(beta^2 - cos^2) = root + sin^2 / root
        let f = |t: f64| {
            let (s, _) = t.sin_cos();
            let root = ((b2 - 1.0) + s * s).max(0.0).sqrt();
            if root == 0.0 {
                0.0
            } else {
                root + s * s / root
            }
        };
        integrate(f, 0.0, PI, spec).require("shape integral I")?
    } else {
        let f = |p: f64| {
            let s2 = p.sin().powi(2);
            (b2 + 1.0 - 2.0 * b2 * s2) / (1.0 - b2 * s2).sqrt()
        };
        2.0 * integrate(f, 0.0, 0.5 * PI, spec).require("shape integral I")?
    };
    Ok(value / b2)
}

/// Shape integral entering the handoff rates:
/// `(1 / beta^2) * int_0^pi sqrt(beta^2 + 1 - 2 beta cos(theta)) dtheta`.
pub fn shape_integral_f(beta: f64) -> Result<f64> {
    shape_integral_f_with(beta, &QuadratureSpec::default())
}

pub fn shape_integral_f_with(beta: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    let f = |t: f64| {
        let half = (0.5 * t).sin();
        ((beta - 1.0).powi(2) + 4.0 * beta * half * half).sqrt()
    };
    Ok(integrate(f, 0.0, PI, spec).require("shape integral F")? / (beta * beta))
}

/// Rasterised area with a diagnostic error band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterArea {
    pub area: f64,
    /// Roughly boundary length times cell size.
    pub error_band: f64,
}

/// Rasterises the union of discs centred on the x axis, given as
/// `(centre_x, radius)`, on a `grid_resolution x grid_resolution` grid over
/// their bounding box. A cell counts when its centre lies in some disc.
pub fn raster_union_on_axis(discs: &[(f64, f64)], grid_resolution: usize) -> RasterArea {
    let discs: Vec<(f64, f64)> = discs.iter().copied().filter(|d| d.1 > 0.0).collect();
    if discs.is_empty() || grid_resolution == 0 {
        return RasterArea {
            area: 0.0,
            error_band: 0.0,
        };
    }
    let x0 = discs.iter().map(|d| d.0 - d.1).fold(f64::INFINITY, f64::min);
    let x1 = discs.iter().map(|d| d.0 + d.1).fold(f64::NEG_INFINITY, f64::max);
    let ymax = discs.iter().map(|d| d.1).fold(0.0, f64::max);
    let n = grid_resolution;
    let dx = (x1 - x0) / n as f64;
    let dy = 2.0 * ymax / n as f64;
    let mut cells = 0u64;
    let mut endpoints = 0u64;
    let mut spans: Vec<(f64, f64)> = Vec::with_capacity(discs.len());
    for j in 0..n {
        let y = -ymax + (j as f64 + 0.5) * dy;
        spans.clear();
        spans.extend(discs.iter().filter(|d| d.1 > y.abs()).map(|&(cx, r)| {
            let half = (r * r - y * y).sqrt();
            (cx - half, cx + half)
        }));
        if spans.is_empty() {
            continue;
        }
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut cur = spans[0];
        let mut count_span = |lo: f64, hi: f64| {
            let first = ((lo - x0) / dx - 0.5).ceil().max(0.0) as i64;
            let last = (((hi - x0) / dx - 0.5).floor() as i64).min(n as i64 - 1);
            if last >= first {
                cells += (last - first + 1) as u64;
            }
            endpoints += 2;
        };
        for &(lo, hi) in &spans[1..] {
            if lo <= cur.1 {
                cur.1 = cur.1.max(hi);
            } else {
                count_span(cur.0, cur.1);
                cur = (lo, hi);
            }
        }
        count_span(cur.0, cur.1);
    }
    let cell = dx * dy;
    RasterArea {
        area: cells as f64 * cell,
        error_band: endpoints as f64 * cell + 2.0 * (x1 - x0) * dy,
    }
}

/// Rasterisation oracle for [`swept_area`]: the union of `n_discs + 1`
/// forbidden discs at walk fractions `i / n_discs`.
pub fn swept_area_oracle(q: &SweptDiscQuery, n_discs: usize, grid_resolution: usize) -> RasterArea {
    let n = n_discs.max(1);
    let discs: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let u = i as f64 / n as f64;
            (q.z * u, chord_distance(q, u) / q.beta)
        })
        .collect();
    raster_union_on_axis(&discs, grid_resolution)
}

pub const ORACLE_DISCS: usize = 2048;
pub const ORACLE_GRID: usize = 4096;

#[cfg(test)]
mod tests {
    use super::*;

    fn q(r0: f64, theta: f64, z: f64, beta: f64) -> SweptDiscQuery {
        SweptDiscQuery::new(r0, theta, z, beta).unwrap()
    }

    #[test]
    fn chord_distance_examples() {
        assert_eq!(chord_distance(&q(1.0, 0.0, 1.0, 1.0), 1.0), 0.0);
        assert!((chord_distance(&q(1.0, PI, 2.0, 1.0), 1.0) - 3.0).abs() < 1e-15);
        // station at (20 cos pi/3, 20 sin pi/3), user at (100, 0)
        let (sx, sy) = (20.0 * (PI / 3.0).cos(), 20.0 * (PI / 3.0).sin());
        let planar = (100.0 - sx).hypot(sy);
        let d = chord_distance(&q(20.0, PI / 3.0, 100.0, 1.0), 1.0);
        assert!((d - planar).abs() < 1e-12);
        assert!((d - 8400f64.sqrt()).abs() < 1e-12);
        assert!((d - 91.652).abs() < 1e-3);
    }

    #[test]
    fn collinear_distance_is_absolute_difference() {
        for (r0, z, u) in [(3.0, 5.0, 0.3), (3.0, 5.0, 0.9), (1.0, 0.5, 1.0)] {
            let d = chord_distance(&q(r0, 0.0, z, 1.0), u);
            assert!((d - (r0 - z * u).abs()).abs() < 1e-14);
        }
    }

    #[test]
    fn lens_examples() {
        assert!((lens_area(1.0, 1.0, 0.0) - PI).abs() < 1e-15);
        assert_eq!(lens_area(1.0, 1.0, 2.0), 0.0);
        let expected = 2.0 * 0.5f64.acos() - 0.5 * 3f64.sqrt();
        assert!((lens_area(1.0, 1.0, 1.0) - expected).abs() < 1e-14);
        assert!((expected - 1.2284).abs() < 1e-4);
    }

    #[test]
    fn lens_matches_raster() {
        // intersection = |A| + |B| - |A u B|
        let union = raster_union_on_axis(&[(0.0, 1.0), (1.0, 1.0)], 4000).area;
        let lens = 2.0 * PI - union;
        assert!((lens - lens_area(1.0, 1.0, 1.0)).abs() < 1e-3);
    }

    #[test]
    fn zero_walk_is_initial_disc() {
        for beta in [0.5, 1.0, 1.7] {
            let a = swept_area(&q(2.0, 1.0, 0.0, beta)).unwrap();
            assert!((a - PI * 4.0 / (beta * beta)).abs() < 1e-12);
        }
    }

    #[test]
    fn tangent_discs_at_station() {
        let a = swept_area(&q(1.0, 0.0, 2.0, 1.0)).unwrap();
        assert!((a - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn case_labels() {
        // beta < 1: boundaries 2 r0 (cos -+ beta) / (1 - beta^2)
        let base = q(1.0, 0.0, 0.0, 0.5);
        let (lo, hi) = base.case_boundaries().unwrap();
        assert!((lo - 4.0 / 3.0).abs() < 1e-15 && (hi - 4.0).abs() < 1e-15);
        assert_eq!(base.with_z(1.0).case(), CaseLabel::Shrinkable);
        assert_eq!(base.with_z(lo).case(), CaseLabel::Lens);
        assert_eq!(base.with_z(2.0).case(), CaseLabel::Lens);
        assert_eq!(base.with_z(hi).case(), CaseLabel::Lens);
        assert_eq!(base.with_z(5.0).case(), CaseLabel::Engulfing);
        assert_eq!(q(1.0, 0.3, 2.0, 1.0).case(), CaseLabel::Lens);
        assert_eq!(q(1.0, 0.3, 2.0, 1.01).case(), CaseLabel::SweepIntegral);
    }

    #[test]
    fn case_boundary_continuity() {
        for (r0, theta, beta) in [(1.0, 0.2, 0.6), (5.0, 1.0, 0.3), (2.0, 2.5, 0.9)] {
            let base = q(r0, theta, 0.0, beta);
            let (lo, hi) = base.case_boundaries().unwrap();
            let c = theta.cos();
            let g = |z: f64| chord_distance(&base.with_z(z), 1.0);
            let lens = |z: f64| disc_union_area(r0 / beta, g(z) / beta, z);
            if lo > 0.0 {
                let left = PI * r0 * r0 / (beta * beta);
                assert!((lens(lo) - left).abs() <= 1e-8 * left, "{} {}", lens(lo), left);
            }
            if hi > 0.0 {
                let right = PI * g(hi).powi(2) / (beta * beta);
                assert!((lens(hi) - right).abs() <= 1e-8 * right);
            }
            let _ = c;
        }
    }

    #[test]
    fn derivative_at_zero_examples() {
        assert!((swept_area_derivative_at_zero(1.0, PI / 2.0, 1.0) - 2.0).abs() < 1e-15);
        assert_eq!(swept_area_derivative_at_zero(1.0, 0.0, 0.5), 0.0);
        let expected = (3f64.sqrt() - PI / 3.0) / 2.0;
        let v = swept_area_derivative_at_zero(1.0, 0.0, 2.0);
        assert!((v - expected).abs() < 1e-14);
        assert!((v - 0.3424).abs() < 1e-4);
    }

    #[test]
    fn derivative_at_zero_matches_small_step_difference() {
        for (r0, theta, beta) in [(1.0, 0.0, 2.0), (1.5, 1.0, 1.3), (1.0, 1.2, 0.7), (2.0, 2.9, 0.7)] {
            let h = 1e-5;
            let a0 = swept_area(&q(r0, theta, 0.0, beta)).unwrap();
            let a1 = swept_area(&q(r0, theta, h, beta)).unwrap();
            let fd = (a1 - a0) / h;
            let exact = swept_area_derivative_at_zero(r0, theta, beta);
            assert!((fd - exact).abs() < 1e-3 * exact.abs().max(1.0), "{fd} vs {exact}");
        }
    }

    #[test]
    fn derivative_third_branch_is_zero() {
        let d = swept_area_derivative(&q(2.0, 0.1, 0.5, 0.5)).unwrap();
        assert_eq!(d.value, 0.0);
        assert_eq!(d.source, DerivativeSource::ClosedForm);
    }

    #[test]
    fn derivative_requires_positive_z() {
        assert!(swept_area_derivative(&q(1.0, 1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn shape_integrals_at_one() {
        assert!((shape_integral_i(1.0).unwrap() - 4.0).abs() < 1e-8);
        assert!((shape_integral_f(1.0).unwrap() - 4.0).abs() < 1e-8);
    }

    #[test]
    fn shape_integral_f_riemann_oracle() {
        let n = 1_000_000;
        let h = PI / n as f64;
        let oracle: f64 = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) * h;
                (5.0 - 4.0 * t.cos()).sqrt() * h
            })
            .sum::<f64>()
            / 4.0;
        assert!((shape_integral_f(2.0).unwrap() - oracle).abs() < 1e-8);
        let f_half = shape_integral_f(0.5).unwrap();
        assert!((f_half - 8.0 * oracle).abs() < 1e-7);
    }

    #[test]
    fn shape_integral_scaling_identities() {
        for beta in [1.1, 1.5, 2.0, 4.0] {
            let b3 = beta * beta * beta;
            let f = shape_integral_f(beta).unwrap();
            let i = shape_integral_i(beta).unwrap();
            assert!((shape_integral_f(1.0 / beta).unwrap() - b3 * f).abs() < 1e-6);
            assert!((shape_integral_i(1.0 / beta).unwrap() - b3 * i).abs() < 1e-6);
        }
    }

    #[test]
    fn shape_integrals_agree() {
        for k in 0..=35 {
            let beta = 0.5 + 0.1 * k as f64;
            let i = shape_integral_i(beta).unwrap();
            let f = shape_integral_f(beta).unwrap();
            assert!((i - f).abs() < 1e-6, "beta {beta}: {i} vs {f}");
        }
        let b = 0.5f64.powf(0.25);
        assert!((shape_integral_i(b).unwrap() - shape_integral_f(b).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn shape_integrals_reject_bad_beta() {
        assert!(shape_integral_i(0.0).is_err());
        assert!(shape_integral_f(-1.0).is_err());
    }

    #[test]
    fn oracle_zero_walk() {
        let query = q(3.0, 1.0, 0.0, 0.8);
        let r = swept_area_oracle(&query, 16, 2000);
        let exact = PI * 9.0 / 0.64;
        assert!((r.area - exact).abs() <= r.error_band, "{} vs {exact}", r.area);
    }

    #[test]
    fn query_validation() {
        assert!(SweptDiscQuery::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(SweptDiscQuery::new(1.0, 4.0, 1.0, 1.0).is_err());
        assert!(SweptDiscQuery::new(1.0, 1.0, -1.0, 1.0).is_err());
        assert!(SweptDiscQuery::new(1.0, 1.0, 1.0, 0.0).is_err());
    }
}
