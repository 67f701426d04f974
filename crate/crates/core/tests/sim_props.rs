use leadsto_core::sim::{simulate, two_periods, RelationKind, Scenario, SimSpec};
use proptest::prelude::*;

fn small(scenario: Scenario, seed: u64) -> SimSpec {
    SimSpec {
        n_portfolios: 8,
        n_days: 300,
        ..SimSpec::new(scenario, seed)
    }
}

fn scenario() -> impl Strategy<Value = Scenario> {
    prop::sample::select(Scenario::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn returns_reconstruct_from_factors_and_errors(sc in scenario(), seed in any::<u64>()) {
        let out = simulate(&small(sc, seed)).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..out.returns.len() {
            for t in 0..out.returns[i].len() {
                let mut v = out.errors[i][t];
                for (j, beta) in out.betas[i].iter().enumerate() {
                    // Factor history starts `burn_in` days before day 0.
                    v += beta * out.factors[j][t + out.burn_in - out.lags[i][j]];
                }
                worst = worst.max((out.returns[i][t] - v).abs());
            }
        }
        prop_assert!(worst <= 1e-12, "{}", worst);
    }

    #[test]
    fn fixed_seed_is_reproducible(sc in scenario(), seed in any::<u64>()) {
        let spec = small(sc, seed);
        prop_assert_eq!(simulate(&spec).unwrap(), simulate(&spec).unwrap());
    }

    #[test]
    fn scenario_structure(sc in scenario(), seed in any::<u64>()) {
        let spec = small(sc, seed);
        let out = simulate(&spec).unwrap();
        let half = spec.n_portfolios / 2;
        match sc {
            Scenario::A | Scenario::D => {
                prop_assert!(out.lags.iter().flatten().all(|&l| l == spec.base_lag));
            }
            Scenario::B | Scenario::E => {
                let alt = out.lags.iter().filter(|l| l.iter().all(|&v| v == spec.alt_lag)).count();
                prop_assert_eq!(alt, half);
            }
            Scenario::C | Scenario::F => {
                prop_assert!(out.lags.iter().flatten().all(|&l| l <= spec.random_lag_max));
            }
        }
        if sc.has_dependencies() {
            prop_assert_eq!(out.dependencies.len(), spec.n_dependencies);
        } else {
            prop_assert!(out.dependencies.is_empty());
        }
        if sc == Scenario::A {
            prop_assert!(out.ground_truth.is_empty());
        }
    }

    #[test]
    fn periods_share_structure_but_not_draws(sc in scenario(), seed in any::<u64>()) {
        let (p1, p2) = two_periods(&small(sc, seed)).unwrap();
        prop_assert_eq!(&p1.ground_truth, &p2.ground_truth);
        prop_assert_eq!(&p1.betas, &p2.betas);
        prop_assert_eq!(&p1.lags, &p2.lags);
        prop_assert!(p1.returns != p2.returns);
    }
}

#[test]
fn zeroed_betas_leave_only_dependencies() {
    let spec = SimSpec {
        zero_betas: true,
        ..small(Scenario::D, 3)
    };
    let out = simulate(&spec).unwrap();
    assert_eq!(out.ground_truth.len(), 3);
    assert!(out
        .ground_truth
        .relations
        .iter()
        .all(|r| r.kind == RelationKind::Dependency && r.delta == 1));
}

#[test]
fn scenario_b_four_portfolios() {
    let spec = SimSpec {
        n_portfolios: 4,
        n_days: 200,
        ..SimSpec::new(Scenario::B, 9)
    };
    let out = simulate(&spec).unwrap();
    let rel: Vec<_> = out.ground_truth.relations.iter().collect();
    assert_eq!(rel.len(), 4);
    assert!(rel.iter().all(|r| r.delta == 2 && r.kind == RelationKind::FactorProxy));
}
