//! Self-checks run by `sojourn validate`: shape-integral identities, the
//! rate/mean/association identity on random networks, and swept-area spot
//! checks against the rasterisation oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{handoff_rate_tier, mean_sojourn_conditional, tier_association_prob};
use crate::error::Result;
use crate::geometry::{
    shape_integral_f, shape_integral_i, swept_area, swept_area_oracle, SweptDiscQuery, ORACLE_DISCS, ORACLE_GRID,
};
use crate::model::{MobilityParams, NetworkModel, TierParams};

pub const IDENTITY_TOL: f64 = 1e-6;
/// Relative tolerance of the oracle spot checks.
pub const ORACLE_TOL: f64 = 2e-3;
pub const IDENTITY_BETAS: [f64; 6] = [0.5, 0.8409, 1.0, 1.1892, 2.0, 4.0];
pub const RANDOM_NETWORKS: usize = 20;
const NETWORK_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityCheck {
    fn new(name: String, error: f64, tolerance: f64) -> Self {
        Self {
            name,
            error,
            tolerance,
            passed: error < tolerance,
        }
    }
}

/// A random network with `tiers` tiers, for identity checks.
pub fn random_network<R: Rng>(rng: &mut R, tiers: usize) -> Result<NetworkModel> {
    let params = (0..tiers)
        .map(|_| {
            TierParams::new(
                10f64.powf(rng.random_range(-4.0..-1.0)),
                10f64.powf(rng.random_range(-1.0..2.0)),
                rng.random_range(0.5..5.0),
            )
        })
        .collect();
    NetworkModel::new(params, rng.random_range(2.5..6.0))
}

/// `max_k |E[S|k] H_k - P(k)|`.
pub fn rate_identity_residual(net: &NetworkModel, mob: &MobilityParams) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..net.tier_count() {
        let r = mean_sojourn_conditional(net, mob, k)? * handoff_rate_tier(net, mob, k)? - tier_association_prob(net, k);
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

pub fn run_suite() -> Result<Vec<IdentityCheck>> {
    let mut out = Vec::new();
    for b in IDENTITY_BETAS {
        let err = (shape_integral_i(b)? - shape_integral_f(b)?).abs();
        out.push(IdentityCheck::new(format!("I(beta) = F(beta), beta = {b}"), err, IDENTITY_TOL));
    }
    for b in IDENTITY_BETAS {
        let err = (shape_integral_f(1.0 / b)? - b.powi(3) * shape_integral_f(b)?).abs();
        out.push(IdentityCheck::new(format!("F(1/beta) = beta^3 F(beta), beta = {b}"), err, IDENTITY_TOL));
    }
    out.push(IdentityCheck::new(
        "F(1) = 4".into(),
        (shape_integral_f(1.0)? - 4.0).abs(),
        IDENTITY_TOL,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(NETWORK_SEED);
    for i in 0..RANDOM_NETWORKS {
        let tiers = 1 + i % 3;
        let net = random_network(&mut rng, tiers)?;
        let mob = MobilityParams::with_velocity(rng.random_range(0.5..30.0))?;
        out.push(IdentityCheck::new(
            format!("E[S|k] H_k = P(k), network {}, K = {tiers}", i + 1),
            rate_identity_residual(&net, &mob)?,
            IDENTITY_TOL,
        ));
    }

    let spots = [
        ("shrinkable", 10.0, 0.5, 2.0, 0.8),
        ("lens", 10.0, 0.5, 30.0, 0.8),
        ("engulfing", 10.0, 0.5, 150.0, 0.8),
        ("lens at beta = 1", 10.0, 1.2, 10.0, 1.0),
        ("sweep integral", 10.0, 1.0, 12.0, 1.3),
    ];
    for (label, r0, theta, z, beta) in spots {
        let q = SweptDiscQuery::new(r0, theta, z, beta)?;
        let exact = swept_area(&q)?;
        let raster = swept_area_oracle(&q, ORACLE_DISCS, ORACLE_GRID);
        out.push(IdentityCheck::new(
            format!("swept area vs raster oracle, {label}"),
            (exact - raster.area).abs() / exact,
            ORACLE_TOL,
        ));
    }
    Ok(out)
}

pub fn render(checks: &[IdentityCheck]) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    for c in checks {
        let _ = writeln!(
            s,
            "{:<4} {:<55} error {:.3e} (tol {:.0e})",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.error,
            c.tolerance
        );
    }
    s
}
