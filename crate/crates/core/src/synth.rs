//! Synthetic image pairs with a known integer translation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Result, ScvError};
use crate::grid::{Coord2, FlowField, ScalarGrid};

/// Parameters of a translated pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSpec {
    pub height: usize,
    pub width: usize,
    /// Integer translation `(tx, ty)` from the first to the second image.
    pub translation: (i32, i32),
    pub seed: u64,
    /// Standard deviation of additive Gaussian noise on the second image, in
    /// intensity levels.
    pub noise: f32,
    /// Border excluded from the ground-truth mask, in pixels.
    pub margin: usize,
}

impl PairSpec {
    pub fn new(height: usize, width: usize, translation: (i32, i32), seed: u64) -> Self {
        Self {
            height,
            width,
            translation,
            seed,
            noise: 0.0,
            margin: 4,
        }
    }

    pub fn with_noise(mut self, noise: f32) -> Self {
        self.noise = noise;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub first: ScalarGrid,
    pub second: ScalarGrid,
    /// Constant translation, masked to pixels that stay `margin` away from
    /// the border in both images.
    pub ground_truth: FlowField,
}

/// Uniform noise smoothed by a 2x2 box, quantised to integer levels.
pub fn texture(height: usize, width: usize, seed: u64) -> Result<ScalarGrid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f32> = (0..(height + 1) * (width + 1))
        .map(|_| rng.gen_range(0.0..255.0))
        .collect();
    let at = |r: usize, c: usize| raw[r * (width + 1) + c];
    ScalarGrid::from_fn(height, width, |r, c| {
        ((at(r, c) + at(r + 1, c) + at(r, c + 1) + at(r + 1, c + 1)) / 4.0).round()
    })
}

pub fn translated_pair(spec: &PairSpec) -> Result<SyntheticPair> {
    let (h, w) = (spec.height, spec.width);
    let (tx, ty) = spec.translation;
    if h == 0 || w == 0 {
        return Err(ScvError::InvalidDimensions("pair must be non-empty".into()));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(ScvError::InvalidParameter(
            "noise must be finite and >= 0".into(),
        ));
    }
    let pad_x = tx.unsigned_abs() as usize;
    let pad_y = ty.unsigned_abs() as usize;
    let big = texture(h + 2 * pad_y, w + 2 * pad_x, spec.seed)?;
    let first = ScalarGrid::from_fn(h, w, |r, c| big.get(r + pad_y, c + pad_x))?;
    let normal = Normal::new(0.0f32, spec.noise.max(f32::MIN_POSITIVE))
        .map_err(|e| ScvError::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
    let noise: Vec<f32> = (0..h * w)
        .map(|_| {
            if spec.noise > 0.0 {
                normal.sample(&mut rng)
            } else {
                0.0
            }
        })
        .collect();
    // second(r + ty, c + tx) = first(r, c)
    let second = ScalarGrid::from_fn(h, w, |r, c| {
        let sr = (r + pad_y) as i64 - i64::from(ty);
        let sc = (c + pad_x) as i64 - i64::from(tx);
        (big.get(sr as usize, sc as usize) + noise[r * w + c])
            .round()
            .clamp(0.0, 255.0)
    })?;
    let m = spec.margin as i64;
    let inside = |r: i64, c: i64| r >= m && c >= m && r < h as i64 - m && c < w as i64 - m;
    let mask = (0..h as i64)
        .flat_map(|r| (0..w as i64).map(move |c| (r, c)))
        .map(|(r, c)| inside(r, c) && inside(r + i64::from(ty), c + i64::from(tx)))
        .collect();
    let ground_truth =
        FlowField::constant(h, w, Coord2::new(tx as f32, ty as f32))?.with_mask(mask)?;
    Ok(SyntheticPair {
        first,
        second,
        ground_truth,
    })
}
