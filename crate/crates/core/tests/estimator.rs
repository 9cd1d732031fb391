use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use sparse_corr::estimator::{estimate_flow, EstimatorConfig, SoftArgmax};
use sparse_corr::grid::{Coord2, FeatureMap, FlowField};
use sparse_corr::metrics::{endpoint_error, sequence_loss};

fn distinctive(h: usize, w: usize, c: usize, seed: u64) -> FeatureMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0f32, 1.0).unwrap();
    let data = (0..h * w * c).map(|_| normal.sample(&mut rng)).collect();
    FeatureMap::new(h, w, c, data).unwrap()
}

/// `out(r + ty, c + tx) = f(r, c)` with wrap-around.
fn circular_shift(f: &FeatureMap, tx: i64, ty: i64) -> FeatureMap {
    let (h, w, c) = (f.height(), f.width(), f.channels());
    let mut data = vec![0f32; h * w * c];
    for r in 0..h {
        for col in 0..w {
            let dr = (r as i64 + ty).rem_euclid(h as i64) as usize;
            let dc = (col as i64 + tx).rem_euclid(w as i64) as usize;
            let dst = (dr * w + dc) * c;
            data[dst..dst + c].copy_from_slice(f.descriptor(r, col));
        }
    }
    FeatureMap::new(h, w, c, data).unwrap()
}

fn interior_gt(h: usize, w: usize, d: Coord2, margin: usize) -> FlowField {
    let mask = (0..h * w)
        .map(|i| {
            let (r, c) = (i / w, i % w);
            r >= margin && c >= margin && r + margin < h && c + margin < w
        })
        .collect();
    FlowField::constant(h, w, d)
        .unwrap()
        .with_mask(mask)
        .unwrap()
}

#[test]
fn identical_features_give_zero_flow() {
    let f = distinctive(20, 24, 32, 1);
    let cfg = EstimatorConfig::default();
    let flows = estimate_flow(&f, &f, &cfg, &SoftArgmax::from_config(&cfg)).unwrap();
    assert_eq!(flows.len(), 8);
    let gt = FlowField::zeros(20, 24).unwrap();
    let epe = endpoint_error(flows.last().unwrap(), &gt).unwrap();
    assert!(epe < 0.1, "EPE {epe}");
}

#[test]
fn circular_shift_is_recovered_in_the_interior() {
    let f1 = distinctive(24, 32, 32, 2);
    let f2 = circular_shift(&f1, 2, 0);
    let cfg = EstimatorConfig::default();
    let flows = estimate_flow(&f1, &f2, &cfg, &SoftArgmax::from_config(&cfg)).unwrap();
    let gt = interior_gt(24, 32, Coord2::new(2.0, 0.0), 3);
    let epe = endpoint_error(flows.last().unwrap(), &gt).unwrap();
    assert!(epe < 0.25, "EPE {epe}");
    // The loss over the iterates is finite and dominated by the early ones.
    assert!(sequence_loss(&flows, &gt, 0.8).unwrap().is_finite());
}

#[test]
fn unique_match_lands_after_one_iteration() {
    let f1 = distinctive(16, 16, 48, 3);
    let f2 = circular_shift(&f1, -1, 2);
    let cfg = EstimatorConfig {
        k: 1,
        temperature: 4.0,
        ..EstimatorConfig::default()
    };
    let flows = estimate_flow(&f1, &f2, &cfg, &SoftArgmax::from_config(&cfg)).unwrap();
    let gt = interior_gt(16, 16, Coord2::new(-1.0, 2.0), 3);
    let first = endpoint_error(&flows[0], &gt).unwrap();
    assert!(first < 1e-3, "first-iteration EPE {first}");
}

#[test]
fn coarse_level_reaches_beyond_the_finest_window() {
    // 5 px lies outside the level-1 window (r = 3) but inside level 2.
    let f1 = distinctive(24, 32, 32, 4);
    let f2 = circular_shift(&f1, 5, 0);
    let cfg = EstimatorConfig::default();
    let gt = interior_gt(24, 32, Coord2::new(5.0, 0.0), 6);
    let run = |level| {
        let op = SoftArgmax {
            temperature: 1.0,
            level,
        };
        let flows = estimate_flow(&f1, &f2, &cfg, &op).unwrap();
        endpoint_error(flows.last().unwrap(), &gt).unwrap()
    };
    let (fine, coarse) = (run(1), run(2));
    assert!(coarse < 1.0, "level 2 EPE {coarse}");
    assert!(fine > 4.0, "level 1 EPE {fine}");
}
