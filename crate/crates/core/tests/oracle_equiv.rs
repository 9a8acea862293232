//! The optimized engine must reproduce the naive reference pass
//! cell-for-cell on small randomized warehouses, fill log included.

use dimpute::fill::DonorPolicy;
use dimpute::inter::run_inter;
use dimpute::intra::run_intra;
use dimpute::matcher::MatchConfig;
use dimpute::oracle::{random_model, run_inter_naive, run_intra_naive};

#[test]
fn intra_engine_matches_naive_reference() {
    for seed in 0..25u64 {
        let model = random_model(seed);
        let mut engine_model = model.clone();
        let mut naive_model = model;

        let engine = run_intra(&mut engine_model, DonorPolicy::first()).unwrap();
        let naive = run_intra_naive(&mut naive_model, DonorPolicy::first()).unwrap();

        assert_eq!(engine, naive, "intra fill logs diverge for seed {seed}");
        for (a, b) in engine_model.dimensions.iter().zip(&naive_model.dimensions) {
            assert_eq!(a.table, b.table, "intra tables diverge for seed {seed}");
        }
    }
}

#[test]
fn inter_engine_matches_naive_reference() {
    let cfg = MatchConfig::default();
    for seed in 100..125u64 {
        let model = random_model(seed);
        let mut engine_model = model.clone();
        let mut naive_model = model;

        let engine = run_inter(&mut engine_model, &cfg, DonorPolicy::first()).unwrap();
        let naive = run_inter_naive(&mut naive_model, &cfg, DonorPolicy::first()).unwrap();

        assert_eq!(engine, naive, "inter fill logs diverge for seed {seed}");
        for (a, b) in engine_model.dimensions.iter().zip(&naive_model.dimensions) {
            assert_eq!(a.table, b.table, "inter tables diverge for seed {seed}");
        }
    }
}

#[test]
fn composed_passes_match_naive_sequence() {
    let cfg = MatchConfig::default();
    for seed in 200..210u64 {
        let model = random_model(seed);
        let mut engine_model = model.clone();
        let mut naive_model = model;

        let mut engine = run_intra(&mut engine_model, DonorPolicy::first()).unwrap();
        engine.extend(run_inter(&mut engine_model, &cfg, DonorPolicy::first()).unwrap());
        engine.extend(run_intra(&mut engine_model, DonorPolicy::first()).unwrap());

        let mut naive = run_intra_naive(&mut naive_model, DonorPolicy::first()).unwrap();
        naive.extend(run_inter_naive(&mut naive_model, &cfg, DonorPolicy::first()).unwrap());
        naive.extend(run_intra_naive(&mut naive_model, DonorPolicy::first()).unwrap());

        assert_eq!(engine, naive, "composed logs diverge for seed {seed}");
    }
}
