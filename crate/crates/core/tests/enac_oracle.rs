mod common;

use common::*;
use dpn_core::rl::{enac_step, solve_ridge, ReturnNormalizer};
use dpn_core::seed;

#[test]
fn enac_matches_pseudo_inverse_on_toy_batches() {
    let err = enac_oracle_error(10, 5, 21);
    assert!(err <= 1e-8, "max deviation {err:e}");
}

#[test]
fn primal_and_dual_forms_agree_with_ridge() {
    let mut rng = seed::rng(4);
    let (policy, batch) = toy_batch(&mut rng, 11);
    let normalizer = ReturnNormalizer::default();
    let refs: Vec<_> = batch.iter().collect();
    let sol = enac_step(&refs, &policy, 1.0, 1e-3, &normalizer).unwrap();
    // The same system with a zero-padded duplicate column forces the dual path.
    let rows: Vec<Vec<f64>> = batch
        .iter()
        .map(|ep| {
            let mut row = vec![0.0; 10];
            for t in &ep.transitions {
                dpn_core::rl::Policy::accumulate_score(&policy, &t.features, &t.action, 1.0, &mut row).unwrap();
            }
            row.push(1.0);
            row.extend([0.0; 5]);
            row
        })
        .collect();
    let y: Vec<f64> = batch
        .iter()
        .map(|ep| normalizer.normalize(ep.transitions.iter().map(|t| t.reward).sum()))
        .collect();
    let dual = solve_ridge(&rows, &y, 1e-3).unwrap();
    for (a, b) in sol.w.iter().chain([&sol.offset]).zip(&dual) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!(dual[11..].iter().all(|v| *v == 0.0));
}

#[test]
fn degenerate_batches_are_numeric_errors() {
    let mut rng = seed::rng(5);
    let (policy, batch) = toy_batch(&mut rng, 1);
    let refs: Vec<_> = batch.iter().collect();
    assert!(matches!(
        enac_step(&refs, &policy, 1.0, 0.0, &ReturnNormalizer::default()),
        Err(dpn_core::Error::Numeric(_))
    ));
    // Two identical episodes make the unregularized system singular.
    let (policy, batch) = toy_batch(&mut rng, 1);
    let twice = [&batch[0], &batch[0]];
    assert!(enac_step(&twice, &policy, 1.0, 0.0, &ReturnNormalizer::default()).is_err());
    assert!(enac_step(&twice, &policy, 1.0, 1e-6, &ReturnNormalizer::default()).is_ok());
}
