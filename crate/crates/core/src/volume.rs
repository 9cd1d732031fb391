//! Sparse and dense correlation volumes.
//!
//! A sparse volume keeps, for every source pixel `x`, exactly `k` entries
//! `(d, C(x, d))` where `d = y - x` is the displacement to the matched
//! target pixel `y` and `C` the inner product of the two descriptors. The
//! dense volume holds every `C(x, y)` and is only meant for small, test-scale
//! instances.

use rayon::prelude::*;

use crate::error::{Result, ScvError};
use crate::grid::{count_inner_products, Coord2, FeatureMap};
use crate::knn::{self, topk_search_with, KnnConfig, TopKMatches};

/// Default element budget for [`build_dense`] (256 MiB of `f32`).
pub const DEFAULT_DENSE_BUDGET: usize = 1 << 26;

/// One retained correlation: a displacement and its value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CorrEntry {
    pub displacement: Coord2,
    pub value: f32,
}

impl CorrEntry {
    pub const fn new(dx: f32, dy: f32, value: f32) -> Self {
        Self {
            displacement: Coord2::new(dx, dy),
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseCorrelationVolume {
    height: usize,
    width: usize,
    k: usize,
    divisor: u32,
    entries: Vec<CorrEntry>,
}

impl SparseCorrelationVolume {
    /// Builds a volume from raw per-pixel entries (`height * width * k` of
    /// them, pixels row-major).
    pub fn new(
        height: usize,
        width: usize,
        k: usize,
        divisor: u32,
        entries: Vec<CorrEntry>,
    ) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(ScvError::InvalidDimensions(format!(
                "volume grid must be non-empty, got {height}x{width}"
            )));
        }
        if divisor == 0 {
            return Err(ScvError::InvalidParameter(
                "resolution divisor must be >= 1".into(),
            ));
        }
        let expected = height
            .checked_mul(width)
            .and_then(|p| p.checked_mul(k))
            .ok_or_else(|| ScvError::InvalidDimensions("volume size overflows".into()))?;
        if entries.len() != expected {
            return Err(ScvError::InvalidDimensions(format!(
                "expected {expected} entries for {height}x{width}x{k}, got {}",
                entries.len()
            )));
        }
        if entries
            .iter()
            .any(|e| !e.value.is_finite() || !e.displacement.is_finite())
        {
            return Err(ScvError::NonFinite("correlation volume"));
        }
        Ok(Self {
            height,
            width,
            k,
            divisor,
            entries,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    /// Resolution of the underlying feature maps relative to the image.
    pub fn divisor(&self) -> u32 {
        self.divisor
    }

    pub fn with_divisor(mut self, divisor: u32) -> Result<Self> {
        if divisor == 0 {
            return Err(ScvError::InvalidParameter(
                "resolution divisor must be >= 1".into(),
            ));
        }
        self.divisor = divisor;
        Ok(self)
    }

    /// Number of stored correlation values, `h * w * k`.
    pub fn element_count(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[CorrEntry] {
        &self.entries
    }

    pub fn pixel(&self, index: usize) -> &[CorrEntry] {
        &self.entries[index * self.k..(index + 1) * self.k]
    }

    pub fn pixel_at(&self, row: usize, col: usize) -> &[CorrEntry] {
        self.pixel(row * self.width + col)
    }

    /// Iterates over the per-pixel entry slices in row-major order.
    pub fn pixel_chunks(&self) -> impl Iterator<Item = &[CorrEntry]> {
        (0..self.pixels()).map(move |p| self.pixel(p))
    }

    pub(crate) fn map_entries(&self, f: impl Fn(usize, &CorrEntry) -> CorrEntry + Sync) -> Self {
        let k = self.k;
        let entries = self
            .entries
            .par_iter()
            .enumerate()
            .map(|(i, e)| f(i / k, e))
            .collect();
        Self { entries, ..*self }
    }
}

/// All-pairs correlation volume, indexed `(source pixel, target pixel)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCorrelationVolume {
    height: usize,
    width: usize,
    target_height: usize,
    target_width: usize,
    values: Vec<f32>,
}

impl DenseCorrelationVolume {
    pub fn new(
        (height, width): (usize, usize),
        (target_height, target_width): (usize, usize),
        values: Vec<f32>,
    ) -> Result<Self> {
        if height * width == 0 || target_height * target_width == 0 {
            return Err(ScvError::InvalidDimensions(
                "dense volume must be non-empty".into(),
            ));
        }
        let expected = (height * width)
            .checked_mul(target_height * target_width)
            .ok_or_else(|| ScvError::InvalidDimensions("dense volume overflows".into()))?;
        if values.len() != expected {
            return Err(ScvError::InvalidDimensions(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ScvError::NonFinite("dense volume"));
        }
        Ok(Self {
            height,
            width,
            target_height,
            target_width,
            values,
        })
    }

    pub fn source_dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn target_dims(&self) -> (usize, usize) {
        (self.target_height, self.target_width)
    }

    pub fn element_count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Correlations of one source pixel against every target pixel.
    pub fn row(&self, source: usize) -> &[f32] {
        let n = self.target_height * self.target_width;
        &self.values[source * n..(source + 1) * n]
    }

    /// `C(x, x + d)` for source `(row, col)`, or `None` when `x + d` leaves
    /// the target grid.
    pub fn lookup(&self, row: usize, col: usize, dx: i64, dy: i64) -> Option<f32> {
        let tr = row as i64 + dy;
        let tc = col as i64 + dx;
        if tr < 0 || tc < 0 || tr >= self.target_height as i64 || tc >= self.target_width as i64 {
            return None;
        }
        let t = tr as usize * self.target_width + tc as usize;
        Some(self.row(row * self.width + col)[t])
    }
}

fn displacement(source: usize, width: usize, target: usize, target_width: usize) -> Coord2 {
    let (sr, sc) = ((source / width) as f32, (source % width) as f32);
    let (tr, tc) = (
        (target / target_width) as f32,
        (target % target_width) as f32,
    );
    Coord2::new(tc - sc, tr - sr)
}

/// Converts top-k matches into a sparse volume with relative displacements.
pub fn volume_from_matches(matches: &TopKMatches) -> Result<SparseCorrelationVolume> {
    let (h, w) = (matches.height(), matches.width());
    let (_, tw) = matches.target_dims();
    let k = matches.k();
    let entries = (0..h * w)
        .flat_map(|p| {
            matches
                .indices(p)
                .iter()
                .zip(matches.scores(p))
                .map(move |(&t, &s)| CorrEntry {
                    displacement: displacement(p, w, t as usize, tw),
                    value: s,
                })
        })
        .collect();
    SparseCorrelationVolume::new(h, w, k, 1, entries)
}

/// Sparse volume of the `k` strongest correlations per source pixel.
pub fn build_sparse(f1: &FeatureMap, f2: &FeatureMap, k: usize) -> Result<SparseCorrelationVolume> {
    build_sparse_with(f1, f2, &KnnConfig::with_k(k))
}

pub fn build_sparse_with(
    f1: &FeatureMap,
    f2: &FeatureMap,
    cfg: &KnnConfig,
) -> Result<SparseCorrelationVolume> {
    volume_from_matches(&topk_search_with(f1, f2, cfg)?)
}

/// All-pairs volume, refusing anything above [`DEFAULT_DENSE_BUDGET`] elements.
pub fn build_dense(f1: &FeatureMap, f2: &FeatureMap) -> Result<DenseCorrelationVolume> {
    build_dense_with_budget(f1, f2, DEFAULT_DENSE_BUDGET)
}

pub fn build_dense_with_budget(
    f1: &FeatureMap,
    f2: &FeatureMap,
    budget: usize,
) -> Result<DenseCorrelationVolume> {
    if f1.channels() != f2.channels() {
        return Err(ScvError::ChannelMismatch {
            left: f1.channels(),
            right: f2.channels(),
        });
    }
    let elements = f1.pixels() as u128 * f2.pixels() as u128;
    if elements > budget as u128 {
        return Err(ScvError::BudgetExceeded { elements, budget });
    }
    let targets = f2.pixels();
    let mut values = vec![0f32; elements as usize];
    values
        .par_chunks_mut(targets)
        .enumerate()
        .for_each(|(s, row)| {
            let src = f1.descriptor_at(s);
            for (t, v) in row.iter_mut().enumerate() {
                *v = knn::score(src, f2.descriptor_at(t), 1.0);
            }
        });
    count_inner_products(elements as u64);
    DenseCorrelationVolume::new((f1.height(), f1.width()), (f2.height(), f2.width()), values)
}

/// Keeps the `k` largest correlations of each source pixel.
pub fn sparsify_topk(vol: &DenseCorrelationVolume, k: usize) -> Result<SparseCorrelationVolume> {
    let (h, w) = vol.source_dims();
    let (th, tw) = vol.target_dims();
    if k > th * tw {
        return Err(ScvError::KOutOfRange { k, max: th * tw });
    }
    let mut entries = Vec::with_capacity(h * w * k);
    for p in 0..h * w {
        let row = vol.row(p);
        for t in knn::topk_select(row, k)? {
            entries.push(CorrEntry {
                displacement: displacement(p, w, t, tw),
                value: row[t],
            });
        }
    }
    SparseCorrelationVolume::new(h, w, k, 1, entries)
}

/// Scatters a sparse volume back into a dense one; every unstored element
/// is zero. Displacements must be integers landing inside the target grid,
/// and no two entries of a pixel may share a target.
///
/// `sparsify_topk(densify(s))` only gives back `s` when the stored values
/// are positive: a filled-in zero outranks a stored negative value.
pub fn densify(
    scv: &SparseCorrelationVolume,
    target_height: usize,
    target_width: usize,
) -> Result<DenseCorrelationVolume> {
    let (h, w) = scv.dims();
    let targets = target_height * target_width;
    if targets == 0 {
        return Err(ScvError::InvalidDimensions(
            "target grid must be non-empty".into(),
        ));
    }
    let mut values = vec![0f32; h * w * targets];
    let mut written = vec![false; targets];
    for (p, entries) in scv.pixel_chunks().enumerate() {
        written.iter_mut().for_each(|v| *v = false);
        let (row, col) = (p / w, p % w);
        for e in entries {
            let d = e.displacement;
            if d.x.fract() != 0.0 || d.y.fract() != 0.0 {
                return Err(ScvError::NonIntegerDisplacement {
                    pixel: p,
                    dx: d.x,
                    dy: d.y,
                });
            }
            let tr = row as f64 + f64::from(d.y);
            let tc = col as f64 + f64::from(d.x);
            if tr < 0.0 || tc < 0.0 || tr >= target_height as f64 || tc >= target_width as f64 {
                return Err(ScvError::DisplacementOutOfRange {
                    pixel: p,
                    dx: d.x,
                    dy: d.y,
                });
            }
            let t = tr as usize * target_width + tc as usize;
            if std::mem::replace(&mut written[t], true) {
                return Err(ScvError::InvalidParameter(format!(
                    "pixel {p} stores target {t} twice"
                )));
            }
            values[p * targets + t] = e.value;
        }
    }
    DenseCorrelationVolume::new((h, w), (target_height, target_width), values)
}
