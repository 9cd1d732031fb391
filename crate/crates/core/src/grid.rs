//! Dense grid types shared by every stage: feature maps, scalar images,
//! flow fields and 2D coordinates.
//!
//! Coordinates follow one convention everywhere: `x` is the column
//! (positive to the right) and `y` is the row (positive downwards). Grids are
//! stored row-major.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Result, ScvError};

static INNER_PRODUCTS: AtomicU64 = AtomicU64::new(0);

/// Total number of feature inner products evaluated by this process.
///
/// Only meaningful as a difference between two reads taken around a call on
/// a quiet process (tests use it to check that refinement never touches the
/// features again).
pub fn inner_products_evaluated() -> u64 {
    INNER_PRODUCTS.load(Ordering::Relaxed)
}

pub(crate) fn count_inner_products(n: u64) {
    INNER_PRODUCTS.fetch_add(n, Ordering::Relaxed);
}

/// A 2D position or displacement in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Coord2 {
    pub x: f32,
    pub y: f32,
}

impl Coord2 {
    pub const ZERO: Coord2 = Coord2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f32, y: f32) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// L-infinity norm.
    pub fn max_norm(self) -> f32 {
        self.x.abs().max(self.y.abs())
    }

    pub fn norm(self) -> f32 {
        self.x.hypot(self.y)
    }
}

impl std::ops::Add for Coord2 {
    type Output = Coord2;
    fn add(self, rhs: Coord2) -> Coord2 {
        Coord2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Coord2 {
    type Output = Coord2;
    fn sub(self, rhs: Coord2) -> Coord2 {
        Coord2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Neg for Coord2 {
    type Output = Coord2;
    fn neg(self) -> Coord2 {
        Coord2::new(-self.x, -self.y)
    }
}

fn check_dims(height: usize, width: usize) -> Result<usize> {
    if height == 0 || width == 0 {
        return Err(ScvError::InvalidDimensions(format!(
            "grid must be non-empty, got {height}x{width}"
        )));
    }
    height
        .checked_mul(width)
        .ok_or_else(|| ScvError::InvalidDimensions(format!("{height}x{width} overflows")))
}

/// Dense `height x width` grid of `channels`-dimensional descriptors,
/// channel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        let pixels = check_dims(height, width)?;
        if channels == 0 {
            return Err(ScvError::InvalidDimensions(
                "feature maps need at least one channel".into(),
            ));
        }
        let expected = pixels.checked_mul(channels).ok_or_else(|| {
            ScvError::InvalidDimensions(format!("{height}x{width}x{channels} overflows"))
        })?;
        if data.len() != expected {
            return Err(ScvError::InvalidDimensions(format!(
                "expected {expected} values for {height}x{width}x{channels}, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(ScvError::NonFinite("feature map"));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        let len = check_dims(height, width)?.saturating_mul(channels);
        Self::new(height, width, channels, vec![0.0; len])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Descriptor at a row-major linear pixel index.
    pub fn descriptor_at(&self, index: usize) -> &[f32] {
        &self.data[index * self.channels..(index + 1) * self.channels]
    }

    pub fn descriptor(&self, row: usize, col: usize) -> &[f32] {
        self.descriptor_at(row * self.width + col)
    }

    /// Returns a copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f32) -> Result<Self> {
        Self::new(
            self.height,
            self.width,
            self.channels,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }
}

/// Inner product of two descriptors, accumulated in `f64`.
pub fn dot_features(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(ScvError::ChannelMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    count_inner_products(1);
    Ok(dot_f64(a, b))
}

// Sequential accumulation: every code path that needs a correlation value
// goes through here so sparse and dense volumes agree bit for bit.
#[inline]
pub(crate) fn dot_f64(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |acc, (&x, &y)| acc + f64::from(x) * f64::from(y))
}

/// Single-channel real-valued grid (grayscale images, masks, test ramps).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl ScalarGrid {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        let pixels = check_dims(height, width)?;
        if data.len() != pixels {
            return Err(ScvError::InvalidDimensions(format!(
                "expected {pixels} values for {height}x{width}, got {}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> f32) -> Result<Self> {
        check_dims(height, width)?;
        let data = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width + col]
    }

    /// Bilinear sample with clamp-to-edge; `p.x` is the column, `p.y` the row.
    pub fn sample(&self, p: Coord2) -> f32 {
        sample_unchecked(&self.data, self.height, self.width, p)
    }

    /// Box-filter downsampling by an integer factor; trailing rows/columns
    /// that do not fill a whole block are dropped.
    pub fn downsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(ScvError::InvalidParameter(
                "downsample factor must be >= 1".into(),
            ));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let (h, w) = (self.height / factor, self.width / factor);
        let norm = 1.0 / (factor * factor) as f32;
        Self::from_fn(h, w, |r, c| {
            let mut acc = 0.0f32;
            for dr in 0..factor {
                for dc in 0..factor {
                    acc += self.get(r * factor + dr, c * factor + dc);
                }
            }
            acc * norm
        })
    }
}

/// Bilinear interpolation over a row-major scalar grid. Coordinates outside
/// the grid are clamped to the edge.
pub fn bilinear_sample(values: &[f32], height: usize, width: usize, p: Coord2) -> Result<f32> {
    let pixels = check_dims(height, width)?;
    if values.len() != pixels {
        return Err(ScvError::InvalidDimensions(format!(
            "expected {pixels} values, got {}",
            values.len()
        )));
    }
    if !p.is_finite() {
        return Err(ScvError::NonFinite("sample position"));
    }
    Ok(sample_unchecked(values, height, width, p))
}

fn sample_unchecked(values: &[f32], height: usize, width: usize, p: Coord2) -> f32 {
    let x = p.x.clamp(0.0, (width - 1) as f32);
    let y = p.y.clamp(0.0, (height - 1) as f32);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let tx = x - x0 as f32;
    let ty = y - y0 as f32;
    let at = |r: usize, c: usize| values[r * width + c];
    let top = at(y0, x0) * (1.0 - tx) + at(y0, x1) * tx;
    let bottom = at(y1, x0) * (1.0 - tx) + at(y1, x1) * tx;
    top * (1.0 - ty) + bottom * ty
}

/// Dense 2D displacement field with an optional validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    height: usize,
    width: usize,
    u: Vec<f32>,
    v: Vec<f32>,
    valid: Option<Vec<bool>>,
}

impl FlowField {
    pub fn new(height: usize, width: usize, u: Vec<f32>, v: Vec<f32>) -> Result<Self> {
        let pixels = check_dims(height, width)?;
        if u.len() != pixels || v.len() != pixels {
            return Err(ScvError::InvalidDimensions(format!(
                "flow components must have {pixels} values, got {} and {}",
                u.len(),
                v.len()
            )));
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(ScvError::NonFinite("flow field"));
        }
        Ok(Self {
            height,
            width,
            u,
            v,
            valid: None,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        let pixels = check_dims(height, width)?;
        Self::new(height, width, vec![0.0; pixels], vec![0.0; pixels])
    }

    pub fn constant(height: usize, width: usize, d: Coord2) -> Result<Self> {
        let pixels = check_dims(height, width)?;
        Self::new(height, width, vec![d.x; pixels], vec![d.y; pixels])
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        f: impl Fn(usize, usize) -> Coord2,
    ) -> Result<Self> {
        let pixels = check_dims(height, width)?;
        let mut u = Vec::with_capacity(pixels);
        let mut v = Vec::with_capacity(pixels);
        for r in 0..height {
            for c in 0..width {
                let d = f(r, c);
                u.push(d.x);
                v.push(d.y);
            }
        }
        Self::new(height, width, u, v)
    }

    /// Attaches a validity mask (`true` = pixel has a usable value).
    pub fn with_mask(mut self, valid: Vec<bool>) -> Result<Self> {
        if valid.len() != self.pixels() {
            return Err(ScvError::InvalidDimensions(format!(
                "mask must have {} entries, got {}",
                self.pixels(),
                valid.len()
            )));
        }
        self.valid = Some(valid);
        Ok(self)
    }

    pub fn without_mask(mut self) -> Self {
        self.valid = None;
        self
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

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.valid.as_deref()
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.valid.as_ref().is_none_or(|m| m[index])
    }

    pub fn at(&self, index: usize) -> Coord2 {
        Coord2::new(self.u[index], self.v[index])
    }

    pub fn get(&self, row: usize, col: usize) -> Coord2 {
        self.at(row * self.width + col)
    }

    /// Bilinear sample of both components with clamp-to-edge.
    pub fn sample(&self, p: Coord2) -> Coord2 {
        Coord2::new(
            sample_unchecked(&self.u, self.height, self.width, p),
            sample_unchecked(&self.v, self.height, self.width, p),
        )
    }

    pub(crate) fn ensure_same_dims(&self, other: &FlowField) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(ScvError::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }
}

/// Bilinear upsampling of a flow field by an integer factor.
///
/// Fine pixel centres map to coarse coordinates `(X + 0.5) / factor - 0.5`;
/// displacements are multiplied by `factor`. A validity mask is carried over
/// by nearest neighbour.
pub fn upsample_flow(flow: &FlowField, factor: usize) -> Result<FlowField> {
    if factor < 1 {
        return Err(ScvError::InvalidParameter(format!(
            "upsampling factor must be >= 1, got {factor}"
        )));
    }
    if factor == 1 {
        return Ok(flow.clone());
    }
    let (h, w) = (flow.height * factor, flow.width * factor);
    let scale = factor as f32;
    let to_coarse = |i: usize| (i as f32 + 0.5) / scale - 0.5;
    let up = FlowField::from_fn(h, w, |r, c| {
        let d = flow.sample(Coord2::new(to_coarse(c), to_coarse(r)));
        Coord2::new(d.x * scale, d.y * scale)
    })?;
    match flow.mask() {
        Some(mask) => {
            let fine = (0..h)
                .flat_map(|r| (0..w).map(move |c| (r, c)))
                .map(|(r, c)| mask[(r / factor) * flow.width + c / factor])
                .collect();
            up.with_mask(fine)
        }
        None => Ok(up),
    }
}
