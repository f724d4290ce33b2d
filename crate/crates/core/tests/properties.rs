use std::sync::OnceLock;

use proptest::prelude::*;
use secrecy_effcap::{
    build_grid, common_rate, effective_capacity, secrecy_rate, ChannelConfig, FadingDistribution,
    FadingState, RateField, RateKind, StateGrid,
};

fn grid() -> &'static StateGrid {
    static GRID: OnceLock<StateGrid> = OnceLock::new();
    GRID.get_or_init(|| {
        let dist = FadingDistribution::rayleigh(1.0, 1.0).unwrap();
        build_grid(&dist, 24, 1.0).unwrap()
    })
}

fn config(gamma: f64, theta: f64) -> ChannelConfig {
    ChannelConfig::new(gamma, 1.0, theta).unwrap()
}

fn secure_state() -> impl Strategy<Value = (f64, FadingState)> {
    (0.2f64..4.0, 0.01f64..5.0, 1.01f64..20.0)
        .prop_map(|(gamma, z_e, ratio)| (gamma, FadingState::new(ratio * gamma * z_e, z_e)))
}

/// Rate field with an arbitrary, bounded rate per grid point.
fn rate_field() -> impl Strategy<Value = RateField> {
    prop::collection::vec(0.0f64..6.0, grid().len())
        .prop_map(|r| RateField::new(grid(), RateKind::Common, r).unwrap())
}

fn weighted_mean(rates: &RateField) -> f64 {
    let g = grid();
    let s: f64 = g
        .points()
        .iter()
        .zip(rates.rates())
        .map(|(p, r)| p.weight * r)
        .sum();
    s / g.total_weight()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn secrecy_rate_is_increasing_and_concave((gamma, z) in secure_state(), mu in 0.01f64..50.0, h in 0.01f64..5.0) {
        let cfg = config(gamma, 0.01);
        let r = |m: f64| secrecy_rate(&cfg, z, m).unwrap();
        prop_assert!(r(mu + h) > r(mu));
        prop_assert!(r(mu + h) - r(mu) <= r(mu) - r((mu - h).max(0.0)) + 1e-12);
    }

    #[test]
    fn secrecy_rate_vanishes_outside_secure_region(z_m in 0.01f64..5.0, extra in 1.0f64..4.0, mu in 0.0f64..50.0) {
        let cfg = config(1.0, 0.01);
        let z = FadingState::new(z_m, z_m * extra);
        prop_assert_eq!(secrecy_rate(&cfg, z, mu).unwrap(), 0.0);
    }

    #[test]
    fn common_rate_drops_as_confidential_power_grows((gamma, z) in secure_state(), mu0 in 0.0f64..20.0, mu1 in 0.0f64..20.0, dm in 0.01f64..5.0) {
        let cfg = config(gamma, 0.01);
        let lo = common_rate(&cfg, z, mu0, mu1 + dm).unwrap();
        let hi = common_rate(&cfg, z, mu0, mu1).unwrap();
        prop_assert!(lo <= hi);
    }

    #[test]
    fn effective_capacity_sits_between_min_and_mean(rates in rate_field(), theta in 1e-4f64..1.0) {
        let c = effective_capacity(&config(1.0, theta), grid(), &rates).unwrap();
        let r_min = rates.rates().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(c >= r_min - 1e-12);
        prop_assert!(c <= weighted_mean(&rates) + 1e-12);
    }

    #[test]
    fn effective_capacity_decreases_in_theta(rates in rate_field(), theta in 1e-4f64..0.5, factor in 1.1f64..10.0) {
        let loose = effective_capacity(&config(1.0, theta), grid(), &rates).unwrap();
        let tight = effective_capacity(&config(1.0, theta * factor), grid(), &rates).unwrap();
        prop_assert!(tight <= loose + 1e-12);
    }

    #[test]
    fn expectation_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 0.1f64..2.0) {
        let g = grid();
        let f = |z: FadingState| (k * z.z_m).sin() + z.z_e;
        let h = |z: FadingState| (1.0 + z.z_m * z.z_e).ln();
        let lhs = g.expect(|z| a * f(z) + b * h(z)).unwrap();
        let rhs = a * g.expect(f).unwrap() + b * g.expect(h).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }
}
