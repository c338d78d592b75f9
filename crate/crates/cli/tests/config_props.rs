use proptest::prelude::*;
use rank1_thermo_cli::{ExperimentConfig, ExperimentName};

fn experiment() -> impl Strategy<Value = ExperimentName> {
    prop::sample::select(ExperimentName::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn config_json_round_trip(
        e in experiment(),
        seed in any::<u64>(),
        dt in 1e-4f64..1e-1,
        tol in 1e-12f64..1e-2,
        q in (-50.0f64..0.0, 1.0f64..50.0),
        ells in prop::collection::vec(1u32..1000, 1..8),
        bridge in any::<bool>(),
    ) {
        let mut c = ExperimentConfig::new(e);
        c.seed = seed;
        c.params.dt = dt;
        c.params.tolerance = tol;
        c.params.q_min = q.0;
        c.params.q_max = q.1;
        c.params.ells = ells;
        c.params.bridge = bridge;
        prop_assert!(c.validate().is_ok());
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn nonpositive_steps_rejected(e in experiment(), dt in -1.0f64..=0.0) {
        let mut c = ExperimentConfig::new(e);
        c.params.dt = dt;
        prop_assert_eq!(c.validate().unwrap_err().exit_code(), 2);
    }
}
