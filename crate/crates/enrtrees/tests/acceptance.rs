//! Runs the twelve acceptance criteria; one line per criterion, nonzero exit
//! on any failure. `ENRTREES_SEED` overrides the seed.

use std::process::ExitCode;

use enrtrees::verify::*;

fn pinned() {
    assert_eq!(ORACLE_BUDGET_MS, 60_000);
    assert_eq!(CRITICALITY_TOL, 1e-6);
    assert_eq!(SET_IDENTITY_TOL, 1e-4);
    assert_eq!(CHI_SQUARE_SAMPLES, 100_000);
    assert_eq!(CHI_SQUARE_MIN_P, 0.001);
    assert_eq!(EXACTNESS_BUDGET_MS, 300_000);
    assert_eq!(COUPLING_DRAWS, 1_000_000);
    assert_eq!(EXI_BAND, (0.99, 1.01));
    assert_eq!(SIGMAS, 3.0);
    assert_eq!((CLT_N, CLT_SAMPLES, CLT_REL_TOL, CLT_SKEW_TOL), (2048, 10_000, 0.02, 0.15));
    assert_eq!(LOCAL_SIZES, [128, 512, 2048]);
    assert_eq!((LOCAL_RADIUS, LOCAL_SAMPLES, LOCAL_TV_TOL), (2, 100_000, 0.05));
    assert!(LOCAL_TREND_SAMPLES >= LOCAL_SAMPLES && LOCAL_REFERENCE >= LOCAL_SAMPLES);
    assert_eq!((MOMENT_LEVELS, MOMENT_DRAWS), ([1, 2, 4], 100_000));
    assert_eq!((DIAMETER_SIZES, DIAMETER_SAMPLES), ([1024, 4096], 10_000));
    assert_eq!((DIAMETER_STABLE_TOL, DIAMETER_RATIO, DIAMETER_RATIO_TOL), (0.05, 4.0 / 3.0, 0.05));
    assert_eq!(DIAMETER_BUDGET_MS, 1_200_000);
    assert_eq!((CHAIN_KS, CHAIN_STEPS, CHAIN_RATE_TOL, CHAIN_TV_TOL), ([2, 3, 4], 100_000, 1e-2, 1e-2));
    assert_eq!((CHAIN_STATIONARY_TOL, CHAIN_STATIONARY_KMAX), (1e-12, 16));
    assert_eq!((GIBBS_SIZES, GIBBS_DRAWS, GIBBS_TV_TOL), ([64, 128, 256], 100_000, 0.05));
    assert_eq!(CYCLE_SEQUENCES, 10_000);
    assert_eq!((BIJECTION_SAMPLES, BIJECTION_N), (10_000, 64));
}

fn main() -> ExitCode {
    pinned();
    let mut cfg = VerifyConfig::default();
    if let Some(seed) = std::env::var("ENRTREES_SEED").ok().and_then(|s| s.parse().ok()) {
        cfg.seed = seed;
    }
    println!("acceptance: seed {}", cfg.seed);
    let mut failed = 0;
    for suite in Suite::CRITERIA {
        match run_criterion(suite, &cfg) {
            Ok(r) => {
                println!("{}", r.line());
                if !r.passed {
                    failed += 1;
                    println!("  {}", r.details);
                }
            }
            Err(e) => {
                failed += 1;
                println!("criterion {:>2} {:<12} FAIL ({e})", suite.id(), suite.name());
            }
        }
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
