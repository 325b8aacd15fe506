//! Network and mobility parameters, and the curve type shared by the analytic
//! and simulated pipelines.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierParams {
    /// Stations per unit area.
    pub intensity: f64,
    pub power: f64,
    #[serde(default = "unit_bias")]
    pub bias: f64,
}

fn unit_bias() -> f64 {
    1.0
}

impl TierParams {
    pub fn new(intensity: f64, power: f64, bias: f64) -> Self {
        Self {
            intensity,
            power,
            bias,
        }
    }

    /// Biased transmit power `B * P`.
    pub fn weight(&self) -> f64 {
        self.bias * self.power
    }
}

/// A K-tier network with biased max-power association.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    tiers: Vec<TierParams>,
    alpha: f64,
    // beta[k][j] = (w_k / w_j)^(1/alpha)
    beta: Vec<Vec<f64>>,
}

impl NetworkModel {
    pub fn new(tiers: Vec<TierParams>, alpha: f64) -> Result<Self> {
        if tiers.is_empty() {
            return Err(invalid("network needs at least one tier"));
        }
        if !(alpha > 2.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha must exceed 2, got {alpha}")));
        }
        for (k, t) in tiers.iter().enumerate() {
            for (name, value) in [("intensity", t.intensity), ("power", t.power), ("bias", t.bias)] {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(invalid(format!("tier {} {name} must be positive, got {value}", k + 1)));
                }
            }
        }
        let beta = tiers
            .iter()
            .map(|tk| {
                tiers
                    .iter()
                    .map(|tj| {
                        // log form keeps beta[k][j] * beta[j][k] == 1 to rounding
                        ((tk.weight().ln() - tj.weight().ln()) / alpha).exp()
                    })
                    .collect()
            })
            .collect();
        Ok(Self { tiers, alpha, beta })
    }

    pub fn single_tier(intensity: f64, alpha: f64) -> Result<Self> {
        Self::new(vec![TierParams::new(intensity, 1.0, 1.0)], alpha)
    }

    pub fn tiers(&self) -> &[TierParams] {
        &self.tiers
    }

    pub fn tier_count(&self) -> usize {
        self.tiers.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn intensity(&self, k: usize) -> f64 {
        self.tiers[k].intensity
    }

    /// `((B_k P_k) / (B_j P_j))^(1/alpha)`.
    pub fn beta(&self, k: usize, j: usize) -> f64 {
        self.beta[k][j]
    }

    pub fn check_tier(&self, k: usize) -> Result<()> {
        if k < self.tiers.len() {
            Ok(())
        } else {
            Err(invalid(format!("tier index {k} out of range for {} tiers", self.tiers.len())))
        }
    }

    /// `sum_j lambda_j beta_jk^2`: the effective intensity seen by a tier-k user.
    pub fn weighted_intensity(&self, k: usize) -> f64 {
        (0..self.tiers.len())
            .map(|j| self.tiers[j].intensity * self.beta[j][k].powi(2))
            .sum()
    }

    pub fn with_tier(&self, k: usize, tier: TierParams) -> Result<Self> {
        let mut tiers = self.tiers.clone();
        tiers[k] = tier;
        Self::new(tiers, self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilityParams {
    pub velocity: f64,
    #[serde(default)]
    pub ttt: f64,
    #[serde(default)]
    pub t_p: f64,
}

impl MobilityParams {
    pub fn new(velocity: f64, ttt: f64, t_p: f64) -> Result<Self> {
        let m = Self { velocity, ttt, t_p };
        m.validate()?;
        Ok(m)
    }

    pub fn with_velocity(velocity: f64) -> Result<Self> {
        Self::new(velocity, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.velocity > 0.0 && self.velocity.is_finite()) {
            return Err(invalid(format!("velocity must be positive, got {}", self.velocity)));
        }
        if !(self.ttt >= 0.0 && self.ttt.is_finite()) {
            return Err(invalid(format!("ttt must be nonnegative, got {}", self.ttt)));
        }
        if !(self.t_p >= self.ttt && self.t_p.is_finite()) {
            return Err(invalid(format!("t_p must be at least ttt, got {} < {}", self.t_p, self.ttt)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Ccdf,
    Cdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Empirical,
}

/// Slack allowed when checking monotonicity of quadrature-produced curves.
pub const MONOTONE_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionCurve {
    pub abscissae: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: CurveKind,
    pub provenance: Provenance,
    /// Per-point standard errors for empirical curves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<f64>>,
}

impl DistributionCurve {
    pub fn new(abscissae: Vec<f64>, values: Vec<f64>, kind: CurveKind, provenance: Provenance) -> Result<Self> {
        let c = Self {
            abscissae,
            values,
            kind,
            provenance,
            stderr: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_stderr(mut self, stderr: Vec<f64>) -> Result<Self> {
        if stderr.len() != self.values.len() {
            return Err(invalid("stderr length differs from curve length"));
        }
        self.stderr = Some(stderr);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.abscissae.len() != self.values.len() {
            return Err(invalid("curve abscissae and values differ in length"));
        }
        validate_grid(&self.abscissae)?;
        for &v in &self.values {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("curve value {v} outside [0, 1]")));
            }
        }
        let sign = match self.kind {
            CurveKind::Ccdf => -1.0,
            CurveKind::Cdf => 1.0,
        };
        for w in self.values.windows(2) {
            if sign * (w[1] - w[0]) < -MONOTONE_SLACK {
                return Err(invalid(format!("{:?} curve is not monotone: {} then {}", self.kind, w[0], w[1])));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest pointwise gap to another curve on the same grid.
    pub fn sup_distance(&self, other: &DistributionCurve) -> Result<f64> {
        if self.abscissae != other.abscissae {
            return Err(invalid("curves live on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Checks that a grid is nonempty, nonnegative and strictly increasing.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("grid is empty"));
    }
    if !grid.iter().all(|t| t.is_finite() && *t >= 0.0) {
        return Err(invalid("grid points must be finite and nonnegative"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("grid must be strictly increasing"));
    }
    Ok(())
}

/// `n` points spaced evenly in log between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(invalid(format!("log grid needs 0 < lo < hi and n >= 2, got {lo}, {hi}, {n}")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect())
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo >= 0.0 && hi > lo && n >= 2) {
        return Err(invalid(format!("linear grid needs 0 <= lo < hi and n >= 2, got {lo}, {hi}, {n}")));
    }
    Ok((0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_matrix_is_multiplicative() {
        let net = NetworkModel::new(
            vec![
                TierParams::new(0.01, 10.0, 1.0),
                TierParams::new(0.005, 50.0, 1.0),
                TierParams::new(0.001, 20.0, 5.0),
            ],
            4.0,
        )
        .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((net.beta(i, j) * net.beta(j, i) - 1.0).abs() < 1e-12);
                for k in 0..3 {
                    assert!((net.beta(i, j) - net.beta(i, k) * net.beta(k, j)).abs() < 1e-12);
                }
            }
        }
        assert!((net.beta(0, 1) - 0.2f64.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_networks() {
        assert!(NetworkModel::new(vec![], 4.0).is_err());
        assert!(NetworkModel::single_tier(0.01, 2.0).is_err());
        assert!(NetworkModel::single_tier(0.0, 4.0).is_err());
        assert!(NetworkModel::new(vec![TierParams::new(1.0, 1.0, -1.0)], 3.0).is_err());
    }

    #[test]
    fn mobility_validation() {
        assert!(MobilityParams::new(5.0, 0.2, 0.5).is_ok());
        assert!(MobilityParams::new(0.0, 0.0, 0.0).is_err());
        assert!(MobilityParams::new(5.0, 0.5, 0.2).is_err());
        assert!(MobilityParams::new(5.0, -0.1, 0.2).is_err());
    }

    #[test]
    fn curve_invariants() {
        let t = vec![0.0, 1.0, 2.0];
        assert!(DistributionCurve::new(t.clone(), vec![1.0, 0.5, 0.1], CurveKind::Ccdf, Provenance::Analytic).is_ok());
        assert!(DistributionCurve::new(t.clone(), vec![1.0, 0.5, 0.6], CurveKind::Ccdf, Provenance::Analytic).is_err());
        assert!(DistributionCurve::new(t.clone(), vec![0.0, 0.5, 0.6], CurveKind::Cdf, Provenance::Analytic).is_ok());
        assert!(DistributionCurve::new(t.clone(), vec![0.0, 0.5], CurveKind::Cdf, Provenance::Analytic).is_err());
        assert!(DistributionCurve::new(vec![0.0, 0.0, 1.0], vec![1.0; 3], CurveKind::Ccdf, Provenance::Analytic).is_err());
        assert!(DistributionCurve::new(t, vec![1.1, 0.5, 0.1], CurveKind::Ccdf, Provenance::Analytic).is_err());
    }

    #[test]
    fn grids() {
        let g = log_grid(0.01, 10.0, 4).unwrap();
        assert_eq!(g.len(), 4);
        assert!((g[1] - 0.1).abs() < 1e-15 && (g[2] - 1.0).abs() < 1e-14);
        assert_eq!(g[3], 10.0);
        assert_eq!(linear_grid(0.0, 1.0, 5).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(log_grid(0.0, 1.0, 3).is_err());
    }
}
