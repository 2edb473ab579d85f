use efem_core::scenario::{
    default_break_sizes, generate_campaign, generate_scenario, read_scenario, write_scenario, ScenarioConfig,
    TRIP_DELAY_S,
};
use proptest::prelude::*;

fn quiet(break_size: f64) -> ScenarioConfig {
    ScenarioConfig {
        break_size,
        noise_std: 0.0,
        steps_per_scenario: 120,
        ..Default::default()
    }
}

#[test]
fn identical_configs_are_bit_identical() {
    let cfg = ScenarioConfig {
        steps_per_scenario: 150,
        ..Default::default()
    };
    assert_eq!(generate_scenario(&cfg).unwrap(), generate_scenario(&cfg).unwrap());
    let other = ScenarioConfig { seed: 43, ..cfg.clone() };
    assert_ne!(generate_scenario(&cfg).unwrap().values, generate_scenario(&other).unwrap().values);
}

#[test]
fn layout_matches_the_configuration() {
    let s = generate_scenario(&ScenarioConfig::default()).unwrap();
    assert_eq!(s.steps(), 1000);
    assert_eq!(s.n_channels(), 78);
    assert_eq!(s.target_indices, (0..24).collect::<Vec<_>>());
    assert_eq!(s.time_s[1] - s.time_s[0], 10.0);
    assert!(s.values.iter().all(|v| v.is_finite()));
}

#[test]
fn campaign_seeds_follow_the_index() {
    let base = ScenarioConfig {
        steps_per_scenario: 60,
        ..Default::default()
    };
    let sizes = default_break_sizes();
    let campaign = generate_campaign(&base, &sizes).unwrap();
    assert_eq!(campaign.len(), 20);
    for (i, s) in campaign.iter().enumerate() {
        assert_eq!(s.seed, 42 + i as u64);
        assert_eq!(s.break_size, sizes[i]);
    }
}

#[test]
fn csv_round_trip_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let s = generate_scenario(&ScenarioConfig {
        steps_per_scenario: 50,
        n_channels: 30,
        n_targets: 6,
        ..Default::default()
    })
    .unwrap();
    let path = write_scenario(&s, dir.path(), "scenario_00").unwrap();
    assert_eq!(read_scenario(&path).unwrap(), s);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Before the trip every target ramps linearly with the break size, so a
    // larger break deviates further from steady state on every target.
    #[test]
    fn larger_breaks_deviate_further_before_the_trip(a in 0.005f64..0.13, b in 0.005f64..0.13) {
        prop_assume!((a - b).abs() > 1e-4);
        let (small, large) = if a < b { (a, b) } else { (b, a) };
        let cfg = quiet(small);
        let lo = generate_scenario(&cfg).unwrap();
        let hi = generate_scenario(&quiet(large)).unwrap();
        let fault = cfg.fault_index();
        let row = fault + (TRIP_DELAY_S / cfg.sample_interval) as usize;
        for &k in &lo.target_indices {
            let base = lo.values[[0, k]];
            let d_lo = (lo.values[[row, k]] - base).abs();
            let d_hi = (hi.values[[row, k]] - base).abs();
            prop_assert!(d_hi > d_lo, "channel {k}: {d_hi} <= {d_lo}");
        }
    }

    #[test]
    fn quiet_scenarios_are_flat_before_the_fault(size in 0.005f64..0.13) {
        let cfg = quiet(size);
        let s = generate_scenario(&cfg).unwrap();
        for row in 1..=cfg.fault_index() {
            prop_assert_eq!(s.values.row(row), s.values.row(0));
        }
    }
}

#[test]
fn pressurizer_pressure_drop_grows_with_the_break() {
    let base = ScenarioConfig {
        noise_std: 0.0,
        steps_per_scenario: 100,
        ..Default::default()
    };
    let campaign = generate_campaign(&base, &default_break_sizes()).unwrap();
    let k = campaign[0]
        .channel_names
        .iter()
        .position(|n| n == "Pressurizer Pressure")
        .unwrap();
    let row = base.fault_index() + 10;
    let drops: Vec<f64> = campaign
        .iter()
        .map(|s| s.values[[0, k]] - s.values[[row, k]])
        .collect();
    assert!(drops[0] > 0.0);
    for w in drops.windows(2) {
        assert!(w[1] >= w[0], "{drops:?}");
    }
}
