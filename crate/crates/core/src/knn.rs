//! Exact top-k inner-product search from every source descriptor into the
//! whole target map.
//!
//! Selection order is descending score with ties broken by ascending
//! row-major target index. Scores are the `f64` channel accumulation rounded
//! once to `f32`, and the ordering is decided on that rounded value, so the
//! dense and sparse paths agree exactly.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Result, ScvError};
use crate::grid::{count_inner_products, dot_f64, FeatureMap};

/// Number of matches kept per pixel unless configured otherwise.
pub const DEFAULT_K: usize = 8;

/// Search parameters. `scale` multiplies every raw inner product before
/// rounding; `1.0` keeps plain dot products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnConfig {
    pub k: usize,
    pub scale: f64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            scale: 1.0,
        }
    }
}

impl KnnConfig {
    pub fn with_k(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }
}

/// The `k` best target positions for every source pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKMatches {
    height: usize,
    width: usize,
    target_height: usize,
    target_width: usize,
    k: usize,
    indices: Vec<u32>,
    scores: Vec<f32>,
}

impl TopKMatches {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn target_dims(&self) -> (usize, usize) {
        (self.target_height, self.target_width)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Row-major target indices of source pixel `pixel`, best first.
    pub fn indices(&self, pixel: usize) -> &[u32] {
        &self.indices[pixel * self.k..(pixel + 1) * self.k]
    }

    pub fn scores(&self, pixel: usize) -> &[f32] {
        &self.scores[pixel * self.k..(pixel + 1) * self.k]
    }

    /// Target `(row, col)` positions of source pixel `pixel`, best first.
    pub fn positions(&self, pixel: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.indices(pixel).iter().map(move |&i| {
            (
                i as usize / self.target_width,
                i as usize % self.target_width,
            )
        })
    }

    pub fn all_indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn all_scores(&self) -> &[f32] {
        &self.scores
    }

    pub(crate) fn from_parts(
        (height, width): (usize, usize),
        (target_height, target_width): (usize, usize),
        k: usize,
        indices: Vec<u32>,
        scores: Vec<f32>,
    ) -> Result<Self> {
        let n = height
            .checked_mul(width)
            .and_then(|p| p.checked_mul(k))
            .ok_or_else(|| ScvError::InvalidDimensions("match table overflows".into()))?;
        let targets = target_height * target_width;
        if indices.len() != n || scores.len() != n {
            return Err(ScvError::InvalidDimensions(format!(
                "expected {n} matches, got {} indices and {} scores",
                indices.len(),
                scores.len()
            )));
        }
        if indices.iter().any(|&i| i as usize >= targets) {
            return Err(ScvError::InvalidParameter(
                "target index out of range".into(),
            ));
        }
        Ok(Self {
            height,
            width,
            target_height,
            target_width,
            k,
            indices,
            scores,
        })
    }
}

#[inline]
fn rank(scores: &[f32], a: u32, b: u32) -> Ordering {
    scores[b as usize]
        .total_cmp(&scores[a as usize])
        .then(a.cmp(&b))
}

/// Indices of the `k` largest values, largest first, ties by ascending index.
pub fn topk_select(scores: &[f32], k: usize) -> Result<Vec<usize>> {
    if k > scores.len() {
        return Err(ScvError::KOutOfRange {
            k,
            max: scores.len(),
        });
    }
    let mut order: Vec<u32> = (0..scores.len() as u32).collect();
    select_into(scores, k, &mut order);
    Ok(order[..k].iter().map(|&i| i as usize).collect())
}

// Leaves the k best indices, sorted, at the front of `order`.
fn select_into(scores: &[f32], k: usize, order: &mut [u32]) {
    if k == 0 {
        return;
    }
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, |&a, &b| rank(scores, a, b));
    }
    order[..k].sort_unstable_by(|&a, &b| rank(scores, a, b));
}

pub(crate) fn score(a: &[f32], b: &[f32], scale: f64) -> f32 {
    let raw = dot_f64(a, b);
    if scale == 1.0 {
        raw as f32
    } else {
        (raw * scale) as f32
    }
}

/// Brute-force exact top-k search with plain inner products.
pub fn topk_search(f1: &FeatureMap, f2: &FeatureMap, k: usize) -> Result<TopKMatches> {
    topk_search_with(f1, f2, &KnnConfig::with_k(k))
}

pub fn topk_search_with(f1: &FeatureMap, f2: &FeatureMap, cfg: &KnnConfig) -> Result<TopKMatches> {
    if f1.channels() != f2.channels() {
        return Err(ScvError::ChannelMismatch {
            left: f1.channels(),
            right: f2.channels(),
        });
    }
    let targets = f2.pixels();
    if cfg.k == 0 || cfg.k > targets {
        return Err(ScvError::KOutOfRange {
            k: cfg.k,
            max: targets,
        });
    }
    if targets > u32::MAX as usize {
        return Err(ScvError::InvalidDimensions("target grid too large".into()));
    }
    if !cfg.scale.is_finite() || cfg.scale <= 0.0 {
        return Err(ScvError::InvalidParameter(format!(
            "score scale must be positive, got {}",
            cfg.scale
        )));
    }
    let k = cfg.k;
    let sources = f1.pixels();
    let mut indices = vec![0u32; sources * k];
    let mut scores = vec![0f32; sources * k];

    indices
        .par_chunks_mut(k)
        .zip(scores.par_chunks_mut(k))
        .enumerate()
        .for_each_init(
            || (vec![0f32; targets], Vec::<u32>::with_capacity(targets)),
            |(row, order), (pixel, (idx_out, score_out))| {
                let src = f1.descriptor_at(pixel);
                for (t, s) in row.iter_mut().enumerate() {
                    *s = score(src, f2.descriptor_at(t), cfg.scale);
                }
                order.clear();
                order.extend(0..targets as u32);
                select_into(row, k, order);
                for (j, &t) in order[..k].iter().enumerate() {
                    idx_out[j] = t;
                    score_out[j] = row[t as usize];
                }
            },
        );
    count_inner_products((sources as u64) * (targets as u64));

    TopKMatches::from_parts(
        (f1.height(), f1.width()),
        (f2.height(), f2.width()),
        k,
        indices,
        scores,
    )
}
