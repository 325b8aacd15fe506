use std::f64::consts::PI;

use proptest::prelude::*;
use sojourn::analytic::*;
use sojourn::model::*;
use sojourn::numerics::FixedRule;

fn two_tier(l1: f64, l2: f64, w2: f64) -> NetworkModel {
    NetworkModel::new(vec![TierParams::new(l1, 1.0, 1.0), TierParams::new(l2, w2, 1.0)], 4.0).unwrap()
}

fn reference_net() -> NetworkModel {
    two_tier(0.002, 0.005, 2.0)
}

fn speed(v: f64) -> MobilityParams {
    MobilityParams::with_velocity(v).unwrap()
}

fn network_strategy() -> impl Strategy<Value = NetworkModel> {
    (
        prop::collection::vec((1e-4f64..1e-1, 0.1f64..100.0, 0.2f64..5.0), 1..=3),
        2.5f64..6.0,
    )
        .prop_map(|(tiers, alpha)| {
            NetworkModel::new(tiers.into_iter().map(|(l, p, b)| TierParams::new(l, p, b)).collect(), alpha).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mean_sojourn_times_rate_is_association_prob(net in network_strategy(), v in 0.5f64..30.0) {
        let mob = speed(v);
        for k in 0..net.tier_count() {
            let lhs = mean_sojourn_conditional(&net, &mob, k).unwrap() * handoff_rate_tier(&net, &mob, k).unwrap();
            prop_assert!((lhs - tier_association_prob(&net, k)).abs() < 1e-6);
        }
    }

    #[test]
    fn pair_rates_are_symmetric(net in network_strategy()) {
        let mob = speed(5.0);
        for k in 0..net.tier_count() {
            for j in 0..net.tier_count() {
                let a = handoff_rate_pair(&net, &mob, k, j).unwrap();
                let b = handoff_rate_pair(&net, &mob, j, k).unwrap();
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn association_probs_sum_to_one(net in network_strategy()) {
        let total: f64 = (0..net.tier_count()).map(|k| tier_association_prob(&net, k)).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mean_scales_inversely_with_speed(net in network_strategy(), v in 0.5f64..30.0) {
        for k in 0..net.tier_count() {
            let a = mean_sojourn_conditional(&net, &speed(v), k).unwrap();
            let b = mean_sojourn_conditional(&net, &speed(2.0 * v), k).unwrap();
            prop_assert!((a - 2.0 * b).abs() <= 1e-12 * a);
        }
    }
}

#[test]
fn single_tier_density_at_zero() {
    let net = NetworkModel::single_tier(0.01, 4.0).unwrap();
    let d0 = linear_contact_density(&net, 0, 0.0).unwrap().value;
    assert!((d0 - 0.4 / PI).abs() < 1e-9);
    let near = linear_contact_density(&net, 0, 1e-4).unwrap().value;
    assert!((near - d0).abs() < 1e-4 * d0, "{near} vs {d0}");
}

#[test]
fn multi_tier_density_limit_matches_shape_integral_form() {
    let net = reference_net();
    for k in 0..2 {
        let d0 = linear_contact_density(&net, k, 0.0).unwrap().value;
        let near = linear_contact_density(&net, k, 1e-4).unwrap().value;
        assert!((near - d0).abs() < 1e-4 * d0, "tier {k}: {near} vs {d0}");
    }
}

#[test]
fn density_is_derivative_of_contact_cdf() {
    let net = reference_net();
    let h = 1e-3;
    for k in 0..2 {
        let fd = (linear_contact_cdf(&net, k, 5.0 + h).unwrap() - linear_contact_cdf(&net, k, 5.0 - h).unwrap()) / (2.0 * h);
        let d = linear_contact_density(&net, k, 5.0).unwrap().value;
        assert!((fd - d).abs() < 1e-4 * d, "tier {k}: {fd} vs {d}");
    }
}

#[test]
fn contact_cdf_does_not_depend_on_speed() {
    let net = reference_net();
    for k in 0..2 {
        let a = ccdf_initial_sojourn(&net, &speed(5.0), k, 2.0).unwrap();
        let b = ccdf_initial_sojourn(&net, &speed(10.0), k, 1.0).unwrap();
        assert!((a - b).abs() < 1e-9);
        assert!((1.0 - a - linear_contact_cdf(&net, k, 10.0).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn contact_cdf_reaches_one() {
    let net = reference_net();
    for k in 0..2 {
        let far = 8.0 * mean_chord_length(&net, k).unwrap();
        assert!(linear_contact_cdf(&net, k, far).unwrap() > 1.0 - 1e-6);
    }
}

#[test]
fn initial_ccdf_is_monotone() {
    let net = reference_net();
    let mob = speed(5.0);
    for k in 0..2 {
        let a = ccdf_initial_sojourn(&net, &mob, k, 10.0).unwrap();
        let b = ccdf_initial_sojourn(&net, &mob, k, 20.0).unwrap();
        assert!(a >= b && b > 0.0);
    }
}

// the chord CCDF integrates to the mean chord length
#[test]
fn sojourn_ccdf_integrates_to_mean() {
    let rule = FixedRule::new(48);
    for (net, k) in [(NetworkModel::single_tier(0.01, 4.0).unwrap(), 0), (reference_net(), 0)] {
        let mob = speed(5.0);
        let mean = mean_sojourn_conditional(&net, &mob, k).unwrap();
        let upper = 8.0 * mean;
        let area = rule.integrate(|t| ccdf_sojourn_conditional(&net, &mob, k, t).unwrap(), 0.0, upper);
        assert!((area - mean).abs() < 1e-3 * mean, "{area} vs {mean}");
    }
}

#[test]
fn two_tier_headline_numbers() {
    let net = reference_net();
    let mob = MobilityParams::new(5.0, 0.2, 0.5).unwrap();
    let m = MobilityMetrics::compute(&net, &mob).unwrap();
    assert!((m.tiers[0].handoff_rate - 0.13).abs() < 0.005);
    assert!((m.tiers[1].handoff_rate - 0.41).abs() < 0.005);
    assert!((m.tiers[0].effective_handoff_rate - 0.12).abs() < 0.005);
    assert!((m.tiers[1].effective_handoff_rate - 0.39).abs() < 0.005);
    assert!(m.tiers[0].ping_pong_rate < 0.01);
    assert!((m.tiers[1].ping_pong_rate - 0.03).abs() < 0.005);
    assert!((m.tiers[0].time_fraction - 0.2205).abs() < 1e-4);
    assert!((m.tiers[1].time_fraction - 0.7795).abs() < 1e-4);
    assert!((m.mean_sojourn_unconditional * m.total_handoff_rate - 1.0).abs() < 1e-12);
}

#[test]
fn ttt_limits() {
    let net = reference_net();
    let zero = MobilityParams::new(5.0, 0.0, 0.0).unwrap();
    let long = MobilityParams::new(5.0, 200.0, 200.0).unwrap();
    for k in 0..2 {
        let h = handoff_rate_tier(&net, &zero, k).unwrap();
        assert_eq!(effective_handoff_rate(&net, &zero, k).unwrap(), h);
        assert!(effective_handoff_rate(&net, &long, k).unwrap() < 1e-6);
    }
}

#[test]
fn ccdf_decreases_with_speed() {
    let net = reference_net();
    for k in 0..2 {
        let mut last = 1.0;
        for v in [1.0, 2.5, 5.0, 10.0] {
            let c = ccdf_sojourn_conditional(&net, &speed(v), k, 1.0).unwrap();
            assert!(c <= last + 1e-9);
            last = c;
        }
    }
}

#[test]
fn stronger_tier_holds_users_longer() {
    let mob = speed(5.0);
    let mut prev: Option<(f64, f64)> = None;
    for w in [0.5, 1.0, 2.0, 8.0, 32.0] {
        let net = two_tier(0.002, 0.005, w);
        let m1 = mean_sojourn_conditional(&net, &mob, 0).unwrap();
        let m2 = mean_sojourn_conditional(&net, &mob, 1).unwrap();
        if let Some((p1, p2)) = prev {
            assert!(m1 < p1 && m2 > p2);
        }
        prev = Some((m1, m2));
    }
}

#[test]
fn single_tier_mean_ignores_power() {
    let mob = speed(5.0);
    let a = NetworkModel::new(vec![TierParams::new(0.01, 1.0, 1.0)], 4.0).unwrap();
    let b = NetworkModel::new(vec![TierParams::new(0.01, 40.0, 3.0)], 4.0).unwrap();
    assert_eq!(
        mean_sojourn_conditional(&a, &mob, 0).unwrap(),
        mean_sojourn_conditional(&b, &mob, 0).unwrap()
    );
}

#[test]
fn denser_tier_shortens_other_sojourns() {
    let mob = speed(5.0);
    let mut prev: Option<(f64, f64)> = None;
    for l2 in [0.001, 0.002, 0.005, 0.01] {
        let net = two_tier(0.002, l2, 2.0);
        let m1 = mean_sojourn_conditional(&net, &mob, 0).unwrap();
        let m2 = mean_sojourn_conditional(&net, &mob, 1).unwrap();
        if let Some((p1, p2)) = prev {
            assert!(m1 < p1 && m2 < p2);
        }
        prev = Some((m1, m2));
    }
}

// curves depend on intensity and distance only through lambda * (v T)^2
#[test]
fn rescaling_intensity_and_speed() {
    let c: f64 = 4.0;
    let base = reference_net();
    let dense = two_tier(0.002 * c, 0.005 * c, 2.0);
    let v = speed(5.0);
    let slowed = speed(5.0 / c.sqrt());
    for k in 0..2 {
        for t in [0.3, 2.0] {
            let a = ccdf_initial_sojourn(&base, &v, k, t).unwrap();
            assert!((a - ccdf_initial_sojourn(&dense, &slowed, k, t).unwrap()).abs() < 1e-7);
            assert!((a - ccdf_initial_sojourn(&dense, &v, k, t / c.sqrt()).unwrap()).abs() < 1e-7);
            let a = ccdf_sojourn_conditional(&base, &v, k, t).unwrap();
            assert!((a - ccdf_sojourn_conditional(&dense, &slowed, k, t).unwrap()).abs() < 1e-7);
            assert!((a - ccdf_sojourn_conditional(&dense, &v, k, t / c.sqrt()).unwrap()).abs() < 1e-7);
        }
        let h = handoff_rate_tier(&base, &v, k).unwrap();
        assert!((handoff_rate_tier(&dense, &slowed, k).unwrap() - h).abs() < 1e-12);
        assert!((handoff_rate_tier(&dense, &v, k).unwrap() - c.sqrt() * h).abs() < 1e-12);
    }
}

#[test]
fn report_mixture_stays_between_tiers() {
    let net = reference_net();
    let mob = MobilityParams::new(5.0, 0.2, 0.5).unwrap();
    let grid = log_grid(0.05, 20.0, 8).unwrap();
    let report = aggregate_metrics(&net, &mob, &grid, &AnalyticOptions::default()).unwrap();
    for i in 0..grid.len() {
        let lo = report.sojourn.iter().map(|c| c.values[i]).fold(1.0, f64::min);
        let hi = report.sojourn.iter().map(|c| c.values[i]).fold(0.0, f64::max);
        let u = report.unconditional.values[i];
        assert!(u >= lo - 1e-12 && u <= hi + 1e-12);
    }
    let sum: f64 = report.metrics.tiers.iter().map(|t| t.time_fraction).sum();
    assert!((sum - 1.0).abs() < 1e-12);
    for c in report.initial.iter().chain(&report.sojourn) {
        c.validate().unwrap();
    }
}

#[test]
fn default_grid_spans_mean() {
    let net = reference_net();
    let mob = speed(5.0);
    let g = default_grid(&net, &mob).unwrap();
    let mean = 1.0 / total_handoff_rate(&net, &mob).unwrap();
    assert_eq!(g.len(), 60);
    assert!((g[0] - 0.01 * mean).abs() < 1e-12 && (g[59] - 10.0 * mean).abs() < 1e-12);
}
