//! Scaling harness for the search and encoding stages.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoder::{encode, EncoderConfig};
use crate::error::Result;
use crate::grid::{inner_products_evaluated, FeatureMap};
use crate::knn::topk_search;
use crate::volume::volume_from_matches;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub side: usize,
    pub pixels: usize,
    pub channels: usize,
    pub k: usize,
    pub topk_seconds: f64,
    pub encode_seconds: f64,
    /// Inner products counted during the search (process-wide counter, so
    /// only exact when nothing else runs concurrently).
    pub inner_products: u64,
    pub stored_elements: usize,
    /// `pixels * k`.
    pub expected_elements: usize,
    pub volume_bytes: usize,
}

impl BenchRow {
    pub fn element_law_holds(&self) -> bool {
        self.stored_elements == self.expected_elements
    }

    /// Multiply-adds of the brute-force search, `N^2 * c`.
    pub fn search_flops(&self) -> u64 {
        (self.pixels as u64).pow(2) * self.channels as u64
    }
}

pub fn random_features(
    height: usize,
    width: usize,
    channels: usize,
    seed: u64,
) -> Result<FeatureMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..height * width * channels)
        .map(|_| rng.gen_range(-1.0f32..1.0))
        .collect();
    FeatureMap::new(height, width, channels, data)
}

/// Runs search + encode on square `side x side` random maps for each size.
pub fn scaling_sweep(
    sides: &[usize],
    k: usize,
    channels: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    let cfg = EncoderConfig::default();
    sides
        .iter()
        .map(|&side| {
            let f1 = random_features(side, side, channels, seed)?;
            let f2 = random_features(side, side, channels, seed.wrapping_add(1))?;
            let before = inner_products_evaluated();
            let t0 = Instant::now();
            let matches = topk_search(&f1, &f2, k)?;
            let topk_seconds = t0.elapsed().as_secs_f64();
            let inner_products = inner_products_evaluated() - before;
            let volume = volume_from_matches(&matches)?;
            let t1 = Instant::now();
            encode(&volume, &cfg)?;
            let encode_seconds = t1.elapsed().as_secs_f64();
            let pixels = side * side;
            Ok(BenchRow {
                side,
                pixels,
                channels,
                k,
                topk_seconds,
                encode_seconds,
                inner_products,
                stored_elements: volume.element_count(),
                expected_elements: pixels * k,
                volume_bytes: volume.element_count() * 4,
            })
        })
        .collect()
}

/// Least-squares slope of `log(seconds)` against `log(flops)`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn format_rows(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "side  pixels  c   k   topk_ms   encode_ms  inner_products  elements  expected  bytes\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{:<5} {:<7} {:<3} {:<3} {:<9.3} {:<10.3} {:<15} {:<9} {:<9} {}\n",
            r.side,
            r.pixels,
            r.channels,
            r.k,
            r.topk_seconds * 1e3,
            r.encode_seconds * 1e3,
            r.inner_products,
            r.stored_elements,
            r.expected_elements,
            r.volume_bytes
        ));
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.search_flops() as f64, r.topk_seconds))
        .collect();
    if let Some(slope) = log_log_slope(&pts) {
        out.push_str(&format!("topk time vs N^2*c log-log slope: {slope:.2}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&x| (x, 3.0 * x * x))
            .collect();
        assert!((log_log_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert!(log_log_slope(&pts[..1]).is_none());
    }

    #[test]
    fn sweep_reports_element_law() {
        let rows = scaling_sweep(&[4, 6], 3, 5, 1).unwrap();
        assert!(rows.iter().all(BenchRow::element_law_holds));
        assert_eq!(rows[1].expected_elements, 108);
    }
}
