use brbs_core::simlab::{run_bias_mse, run_coverage, run_study_sharded, SimConfig, Study};
use brbs_core::{Method, MlOptions, Param, RbsParams, Technique};

fn mm_only(n: usize, reps: usize) -> SimConfig {
    SimConfig {
        n_values: vec![n],
        rho_values: vec![0.0, 0.5],
        replications: reps,
        methods: vec![Method::Mm],
        techniques: vec![Technique::Mm, Technique::Fi, Technique::Kx],
        kx_reps: 10_000,
        ..SimConfig::coverage_grid()
    }
}

#[test]
fn config_validation() {
    assert!(SimConfig::low_precision().validate().is_ok());
    assert!(SimConfig::high_precision().validate().is_ok());
    assert!(SimConfig::coverage_grid().validate().is_ok());
    let bad = [
        SimConfig {
            replications: 99,
            ..mm_only(10, 100)
        },
        SimConfig {
            n_values: vec![],
            ..mm_only(10, 100)
        },
        SimConfig {
            n_values: vec![3],
            ..mm_only(10, 100)
        },
        SimConfig {
            rho_values: vec![-1.0],
            ..mm_only(10, 100)
        },
        SimConfig {
            methods: vec![],
            ..mm_only(10, 100)
        },
        SimConfig {
            levels: vec![1.0],
            ..mm_only(10, 100)
        },
        SimConfig {
            kx_reps: 9_999,
            ..mm_only(10, 100)
        },
        SimConfig {
            delta: 0.0,
            ..mm_only(10, 100)
        },
    ];
    for c in &bad {
        assert!(c.validate().is_err(), "{c:?}");
        assert!(run_bias_mse(c).is_err());
    }
}

#[test]
fn rerun_is_bit_identical() {
    let c = mm_only(20, 100);
    let a = run_coverage(&c).unwrap();
    let b = run_coverage(&c).unwrap();
    assert_eq!(a, b);
    let other = run_coverage(&SimConfig {
        seed: c.seed + 1,
        ..c.clone()
    })
    .unwrap();
    assert_ne!(a, other);
}

#[test]
fn sharding_does_not_change_results() {
    let c = SimConfig {
        methods: vec![Method::Ml, Method::Mm],
        techniques: vec![Technique::Wald, Technique::Mm],
        ..mm_only(15, 120)
    };
    for study in [Study::BiasMse, Study::Coverage] {
        let one = run_study_sharded(&c, study, 1).unwrap();
        for shards in [2, 7, 120, 500] {
            assert_eq!(
                one,
                run_study_sharded(&c, study, shards).unwrap(),
                "{shards}"
            );
        }
    }
}

#[test]
fn mm_mean_bias_is_sampling_noise() {
    // μ̃ₖ is the sample mean, so its bias is zero with SE sd(T)/√(n·reps)
    let c = mm_only(30, 2000);
    let r = run_bias_mse(&c).unwrap();
    let sd = RbsParams::new(c.mu, c.delta).unwrap().variance().sqrt();
    let se = sd / ((30 * 2000) as f64).sqrt();
    for cell in &r.cells {
        assert_eq!(cell.replications, 2000);
        assert!(!cell.degraded);
        for e in cell
            .bias_mse
            .iter()
            .filter(|e| matches!(e.param, Param::Mu1 | Param::Mu2))
        {
            assert_eq!(e.successes, 2000);
            assert!(e.bias.abs() < 3.0 * se, "{e:?} se {se}");
            // MSE of a sample mean is Var(T)/n
            let want = sd * sd / 30.0;
            assert!((e.mse - want).abs() < 0.1 * want, "{} vs {want}", e.mse);
        }
    }
}

#[test]
fn mse_dominates_squared_bias() {
    let c = SimConfig {
        methods: vec![Method::Ml, Method::Mm],
        ..mm_only(10, 150)
    };
    let r = run_bias_mse(&c).unwrap();
    assert_eq!(r.study, Study::BiasMse);
    for cell in &r.cells {
        assert_eq!(cell.bias_mse.len(), 2 * 5);
        assert!(cell.coverage.is_empty());
        for e in &cell.bias_mse {
            assert!(e.mse >= e.bias * e.bias - 1e-12, "{e:?}");
        }
    }
}

#[test]
fn coverage_is_nested_across_levels() {
    let c = mm_only(50, 400);
    let r = run_coverage(&c).unwrap();
    for cell in &r.cells {
        for lo in cell.coverage.iter().filter(|e| e.level == 0.90) {
            let hi = cell
                .coverage
                .iter()
                .find(|e| e.level == 0.95 && e.technique == lo.technique && e.param == lo.param)
                .unwrap();
            assert!((0.0..=100.0).contains(&lo.coverage));
            assert!(hi.coverage >= lo.coverage - 1.5, "{lo:?} {hi:?}");
        }
        // intervals near their nominal level
        for e in &cell.coverage {
            assert!((e.coverage - 100.0 * e.level).abs() < 8.0, "{e:?}");
        }
    }
}

#[test]
fn failed_fits_flag_the_cell() {
    let c = SimConfig {
        n_values: vec![10],
        rho_values: vec![0.5],
        methods: vec![Method::Ml],
        ml_options: MlOptions {
            max_iter: 1,
            ..MlOptions::default()
        },
        ..mm_only(10, 100)
    };
    let r = run_bias_mse(&c).unwrap();
    let cell = &r.cells[0];
    let failed = cell.failed_fits[0].count;
    assert_eq!(failed > 5, cell.degraded);
    if cell.degraded {
        assert_eq!(r.warnings.len(), 1);
    }
    assert!(cell.bias_mse.iter().all(|e| e.successes == 100 - failed));
}

#[test]
fn report_round_trips_through_json() {
    let r = run_coverage(&mm_only(12, 100)).unwrap();
    let s = serde_json::to_string(&r).unwrap();
    let back: brbs_core::simlab::SimReport = serde_json::from_str(&s).unwrap();
    assert_eq!(r, back);
}
