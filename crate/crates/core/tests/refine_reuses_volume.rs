//! Refinement must never go back to the features: the only inner products of
//! a full estimate are the `N^2` of the one-time top-k search.
//!
//! Kept as the only test in this binary because the counter is process-wide.

use sparse_corr::bench::random_features;
use sparse_corr::estimator::{estimate_flow, refine, EstimatorConfig, SoftArgmax};
use sparse_corr::grid::inner_products_evaluated;
use sparse_corr::volume::build_sparse;

#[test]
fn inner_products_happen_once() {
    let f1 = random_features(12, 10, 16, 3).unwrap();
    let f2 = random_features(12, 10, 16, 4).unwrap();
    let cfg = EstimatorConfig::default();
    let op = SoftArgmax::from_config(&cfg);

    let before = inner_products_evaluated();
    let volume = build_sparse(&f1, &f2, cfg.k).unwrap();
    let after_build = inner_products_evaluated();
    assert_eq!(after_build - before, 120 * 120);

    let out = refine(volume, &cfg, &op).unwrap();
    assert_eq!(out.flows.len(), cfg.iterations);
    assert_eq!(inner_products_evaluated(), after_build);

    let before = inner_products_evaluated();
    let flows = estimate_flow(&f1, &f2, &cfg, &op).unwrap();
    assert_eq!(flows.len(), 8);
    assert_eq!(inner_products_evaluated() - before, 120 * 120);
}
