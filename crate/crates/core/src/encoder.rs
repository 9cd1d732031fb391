//! Multi-scale displacement encoder: turns the `k` entries of each pixel into
//! a fixed-size dense vector.
//!
//! For every level `l = 1..L` the displacements are divided by `2^(l-1)`,
//! entries with `max(|dx|, |dy|) <= r` are kept, and each kept value is
//! bilinearly splatted onto its (at most four) integer neighbours of a
//! `(2r+1) x (2r+1)` grid. Channel layout of the output: level-major, then the
//! window grid row-major starting at displacement `(-r, -r)`, i.e.
//! channel `(l - 1) * (2r+1)^2 + (dy + r) * (2r+1) + (dx + r)`.

use rayon::prelude::*;

use crate::error::{Result, ScvError};
use crate::grid::Coord2;
use crate::volume::{CorrEntry, SparseCorrelationVolume};

pub const DEFAULT_LEVELS: usize = 5;
pub const DEFAULT_RADIUS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderConfig {
    pub levels: usize,
    pub radius: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            levels: DEFAULT_LEVELS,
            radius: DEFAULT_RADIUS,
        }
    }
}

impl EncoderConfig {
    pub fn new(levels: usize, radius: usize) -> Result<Self> {
        let cfg = Self { levels, radius };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 || self.levels > 31 {
            return Err(ScvError::InvalidParameter(format!(
                "levels must lie in 1..=31, got {}",
                self.levels
            )));
        }
        if self.radius == 0 || self.radius > 1024 {
            return Err(ScvError::InvalidParameter(format!(
                "radius must lie in 1..=1024, got {}",
                self.radius
            )));
        }
        Ok(())
    }

    /// Side of the window grid, `2r + 1`.
    pub fn window_side(&self) -> usize {
        2 * self.radius + 1
    }

    /// Cells per level, `(2r + 1)^2`.
    pub fn window_cells(&self) -> usize {
        self.window_side() * self.window_side()
    }

    /// Output channels, `L * (2r + 1)^2`.
    pub fn channels(&self) -> usize {
        self.levels * self.window_cells()
    }

    /// Coordinate divisors `1, 2, 4, ...` for levels `1..=L`.
    pub fn level_divisors(&self) -> Vec<u32> {
        (0..self.levels).map(|l| 1u32 << l).collect()
    }

    pub fn scale_to_level(&self, d: Coord2, level: usize) -> Result<Coord2> {
        scale_to_level(d, level, self.levels)
    }
}

/// `d / 2^(level - 1)` for `level` in `1..=levels`.
pub fn scale_to_level(d: Coord2, level: usize, levels: usize) -> Result<Coord2> {
    if level == 0 || level > levels {
        return Err(ScvError::LevelOutOfRange { level, levels });
    }
    let inv = 1.0 / (1u32 << (level - 1)) as f32;
    Ok(Coord2::new(d.x * inv, d.y * inv))
}

/// Whether a level-scaled displacement lies in the inclusive window.
pub fn in_window(d: Coord2, radius: usize) -> bool {
    d.max_norm() <= radius as f32
}

/// Keeps the entries whose (already level-scaled) displacement satisfies
/// `max(|dx|, |dy|) <= radius`.
pub fn window_filter(entries: &[CorrEntry], radius: usize) -> Vec<CorrEntry> {
    entries
        .iter()
        .filter(|e| in_window(e.displacement, radius))
        .copied()
        .collect()
}

/// Result of splatting one pixel's entries onto a window grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SplatGrid {
    pub radius: usize,
    /// `(2r+1)^2` cells, row-major from `(-r, -r)`.
    pub cells: Vec<f32>,
    /// Contributions whose target cell fell outside the grid (and were
    /// dropped). Zero whenever the input was windowed first.
    pub out_of_grid: usize,
}

impl SplatGrid {
    /// Value at integer displacement `(dx, dy)`, both in `-r..=r`.
    pub fn at(&self, dx: i32, dy: i32) -> f32 {
        let r = self.radius as i32;
        let side = 2 * r + 1;
        self.cells[((dy + r) * side + (dx + r)) as usize]
    }
}

/// Floor/ceil neighbours of one coordinate with their linear weights. An
/// integer coordinate has a single neighbour of weight one.
#[inline]
fn axis_neighbours(t: f32) -> [(f32, f32); 2] {
    let lo = t.floor();
    let hi = t.ceil();
    if lo == hi {
        [(lo, 1.0), (hi, 0.0)]
    } else {
        [(lo, 1.0 - (t - lo).abs()), (hi, 1.0 - (t - hi).abs())]
    }
}

fn splat_into(acc: &mut [f64], entries: impl Iterator<Item = CorrEntry>, radius: usize) -> usize {
    let r = radius as i64;
    let side = 2 * r + 1;
    let mut out_of_grid = 0;
    for e in entries {
        let xs = axis_neighbours(e.displacement.x);
        let ys = axis_neighbours(e.displacement.y);
        for &(cy, wy) in &ys {
            if wy == 0.0 {
                continue;
            }
            for &(cx, wx) in &xs {
                if wx == 0.0 {
                    continue;
                }
                let (ix, iy) = (cx as i64, cy as i64);
                if ix < -r || ix > r || iy < -r || iy > r {
                    out_of_grid += 1;
                    continue;
                }
                let w = f64::from(wx) * f64::from(wy);
                acc[((iy + r) * side + (ix + r)) as usize] += w * f64::from(e.value);
            }
        }
    }
    out_of_grid
}

/// Bilinearly splats windowed entries onto the `(2r+1)^2` grid; values that
/// land on the same cell are summed.
pub fn bilinear_splat(entries: &[CorrEntry], radius: usize) -> SplatGrid {
    let side = 2 * radius + 1;
    let mut acc = vec![0f64; side * side];
    let out_of_grid = splat_into(&mut acc, entries.iter().copied(), radius);
    SplatGrid {
        radius,
        cells: acc.into_iter().map(|v| v as f32).collect(),
        out_of_grid,
    }
}

/// Dense per-pixel encoding of a sparse volume.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionTensor {
    height: usize,
    width: usize,
    levels: usize,
    radius: usize,
    data: Vec<f32>,
}

impl MotionTensor {
    pub fn new(
        height: usize,
        width: usize,
        levels: usize,
        radius: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        EncoderConfig { levels, radius }.validate()?;
        if height == 0 || width == 0 {
            return Err(ScvError::InvalidDimensions(
                "motion tensor must be non-empty".into(),
            ));
        }
        let channels = levels * (2 * radius + 1) * (2 * radius + 1);
        let expected = height
            .checked_mul(width)
            .and_then(|p| p.checked_mul(channels))
            .ok_or_else(|| ScvError::InvalidDimensions("motion tensor overflows".into()))?;
        if data.len() != expected {
            return Err(ScvError::InvalidDimensions(format!(
                "expected {expected} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(ScvError::NonFinite("motion tensor"));
        }
        Ok(Self {
            height,
            width,
            levels,
            radius,
            data,
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

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn config(&self) -> EncoderConfig {
        EncoderConfig {
            levels: self.levels,
            radius: self.radius,
        }
    }

    pub fn channels(&self) -> usize {
        self.config().channels()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// All channels of one pixel.
    pub fn pixel(&self, index: usize) -> &[f32] {
        let c = self.channels();
        &self.data[index * c..(index + 1) * c]
    }

    /// The `(2r+1)^2` window of one pixel at `level` (1-based).
    pub fn level_window(&self, index: usize, level: usize) -> Result<&[f32]> {
        if level == 0 || level > self.levels {
            return Err(ScvError::LevelOutOfRange {
                level,
                levels: self.levels,
            });
        }
        let cells = self.config().window_cells();
        Ok(&self.pixel(index)[(level - 1) * cells..level * cells])
    }
}

/// Per-level bookkeeping gathered while encoding.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EncodeStats {
    /// Entries that passed the window filter, per level.
    pub kept_per_level: Vec<usize>,
    pub out_of_grid_writes: usize,
}

pub fn encode(scv: &SparseCorrelationVolume, cfg: &EncoderConfig) -> Result<MotionTensor> {
    encode_with_stats(scv, cfg).map(|(m, _)| m)
}

pub fn encode_with_stats(
    scv: &SparseCorrelationVolume,
    cfg: &EncoderConfig,
) -> Result<(MotionTensor, EncodeStats)> {
    cfg.validate()?;
    let channels = cfg.channels();
    let cells = cfg.window_cells();
    let mut data = vec![0f32; scv.pixels() * channels];

    let per_pixel: Vec<(Vec<usize>, usize)> = data
        .par_chunks_mut(channels)
        .enumerate()
        .map_init(
            || vec![0f64; cells],
            |acc, (p, out)| {
                let mut kept = vec![0usize; cfg.levels];
                let mut out_of_grid = 0;
                for level in 1..=cfg.levels {
                    acc.iter_mut().for_each(|v| *v = 0.0);
                    let scaled = scv.pixel(p).iter().filter_map(|e| {
                        let d = scale_to_level(e.displacement, level, cfg.levels).ok()?;
                        in_window(d, cfg.radius).then_some(CorrEntry {
                            displacement: d,
                            value: e.value,
                        })
                    });
                    let scaled: Vec<CorrEntry> = scaled.collect();
                    kept[level - 1] = scaled.len();
                    out_of_grid += splat_into(acc, scaled.into_iter(), cfg.radius);
                    let dst = &mut out[(level - 1) * cells..level * cells];
                    for (d, a) in dst.iter_mut().zip(acc.iter()) {
                        *d = *a as f32;
                    }
                }
                (kept, out_of_grid)
            },
        )
        .collect();

    let mut stats = EncodeStats {
        kept_per_level: vec![0; cfg.levels],
        out_of_grid_writes: 0,
    };
    for (kept, oog) in per_pixel {
        for (total, k) in stats.kept_per_level.iter_mut().zip(kept) {
            *total += k;
        }
        stats.out_of_grid_writes += oog;
    }
    let tensor = MotionTensor::new(scv.height(), scv.width(), cfg.levels, cfg.radius, data)?;
    Ok((tensor, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(d: Coord2, value: f32) -> SparseCorrelationVolume {
        SparseCorrelationVolume::new(
            1,
            1,
            1,
            1,
            vec![CorrEntry {
                displacement: d,
                value,
            }],
        )
        .unwrap()
    }

    #[test]
    fn scale_examples() {
        assert_eq!(
            scale_to_level(Coord2::new(8.0, -16.0), 4, 5).unwrap(),
            Coord2::new(1.0, -2.0)
        );
        let d = Coord2::new(3.7, -1.1);
        assert_eq!(scale_to_level(d, 1, 5).unwrap(), d);
        assert!(matches!(
            scale_to_level(d, 0, 5),
            Err(ScvError::LevelOutOfRange {
                level: 0,
                levels: 5
            })
        ));
        assert!(scale_to_level(d, 6, 5).is_err());
    }

    #[test]
    fn scale_is_repeated_halving() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let d = Coord2::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
            let mut halved = d;
            for level in 1..=5 {
                assert_eq!(scale_to_level(d, level, 5).unwrap(), halved);
                halved = Coord2::new(halved.x / 2.0, halved.y / 2.0);
            }
        }
    }

    #[test]
    fn window_is_inclusive() {
        let r = 3;
        let keep = CorrEntry::new(3.0, -3.0, 1.0);
        let drop = CorrEntry::new(3.01, 0.0, 1.0);
        assert_eq!(window_filter(&[keep, drop], r), vec![keep]);
        let far = Coord2::new(6.0, 0.0);
        assert!(!in_window(scale_to_level(far, 1, 5).unwrap(), r));
        assert!(in_window(scale_to_level(far, 2, 5).unwrap(), r));
    }

    #[test]
    fn splat_integer_and_midpoint() {
        let g = bilinear_splat(&[CorrEntry::new(1.0, -2.0, 5.0)], 3);
        assert_eq!(g.at(1, -2), 5.0);
        assert_eq!(g.cells.iter().filter(|v| **v != 0.0).count(), 1);
        assert_eq!(g.out_of_grid, 0);

        let g = bilinear_splat(&[CorrEntry::new(0.5, 0.5, 1.0)], 2);
        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            assert_eq!(g.at(dx, dy), 0.25);
        }
        assert_eq!(g.cells.iter().filter(|v| **v != 0.0).count(), 4);
    }

    #[test]
    fn splat_sums_coincident_contributions() {
        let g = bilinear_splat(
            &[CorrEntry::new(1.0, 1.0, 2.0), CorrEntry::new(1.0, 1.0, 3.0)],
            1,
        );
        assert_eq!(g.at(1, 1), 5.0);
    }

    #[test]
    fn splat_reports_out_of_grid() {
        let g = bilinear_splat(&[CorrEntry::new(3.5, 0.0, 1.0)], 3);
        assert_eq!(g.out_of_grid, 1);
        assert_eq!(g.at(3, 0), 0.5);
    }

    #[test]
    fn splat_conserves_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let r = rng.gen_range(1..5);
            let entries: Vec<CorrEntry> = (0..rng.gen_range(0..12))
                .map(|_| {
                    let rf = r as f32;
                    CorrEntry::new(
                        rng.gen_range(-rf..=rf),
                        rng.gen_range(-rf..=rf),
                        rng.gen_range(-5.0..5.0),
                    )
                })
                .collect();
            let g = bilinear_splat(&entries, r);
            assert_eq!(g.out_of_grid, 0);
            let mass: f64 = g.cells.iter().map(|v| *v as f64).sum();
            let expected: f64 = entries.iter().map(|e| e.value as f64).sum();
            let scale: f64 = entries
                .iter()
                .map(|e| e.value.abs() as f64)
                .sum::<f64>()
                .max(1e-30);
            assert!(
                (mass - expected).abs() <= 1e-5 * scale,
                "{mass} vs {expected}"
            );
        }
    }

    #[test]
    fn zero_displacement_fills_centres() {
        let cfg = EncoderConfig::default();
        let entries = vec![CorrEntry::new(0.0, 0.0, 1.0); 6];
        let scv = SparseCorrelationVolume::new(2, 3, 1, 1, entries).unwrap();
        let m = encode(&scv, &cfg).unwrap();
        assert_eq!(m.channels(), 245);
        let centre = cfg.radius * cfg.window_side() + cfg.radius;
        for p in 0..6 {
            for level in 1..=5 {
                let w = m.level_window(p, level).unwrap();
                for (i, v) in w.iter().enumerate() {
                    assert_eq!(*v, if i == centre { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn far_entry_hand_chain() {
        let cfg = EncoderConfig::new(5, 3).unwrap();
        let m = encode(&single(Coord2::new(6.0, 0.0), 2.0), &cfg).unwrap();
        let cell = |level: usize, dx: i32, dy: i32| {
            let w = m.level_window(0, level).unwrap();
            w[((dy + 3) * 7 + dx + 3) as usize]
        };
        assert!(m.level_window(0, 1).unwrap().iter().all(|v| *v == 0.0));
        assert_eq!(cell(2, 3, 0), 2.0);
        assert_eq!(m.level_window(0, 2).unwrap().iter().sum::<f32>(), 2.0);
        assert_eq!(cell(3, 1, 0), 1.0);
        assert_eq!(cell(3, 2, 0), 1.0);
        assert_eq!(m.level_window(0, 3).unwrap().iter().sum::<f32>(), 2.0);
        // 6 / 8 = 0.75 at level 4.
        assert_eq!(cell(4, 0, 0), 0.5);
        assert_eq!(cell(4, 1, 0), 1.5);
    }

    #[test]
    fn channel_layout_is_row_major_from_negative_corner() {
        let cfg = EncoderConfig::new(1, 2).unwrap();
        let m = encode(&single(Coord2::new(-2.0, -2.0), 1.0), &cfg).unwrap();
        assert_eq!(m.pixel(0)[0], 1.0);
        let m = encode(&single(Coord2::new(1.0, -2.0), 1.0), &cfg).unwrap();
        assert_eq!(m.pixel(0)[3], 1.0);
        let m = encode(&single(Coord2::new(-2.0, -1.0), 1.0), &cfg).unwrap();
        assert_eq!(m.pixel(0)[5], 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(EncoderConfig::new(0, 3).is_err());
        assert!(EncoderConfig::new(5, 0).is_err());
        assert_eq!(
            EncoderConfig::default().level_divisors(),
            vec![1, 2, 4, 8, 16]
        );
        assert_eq!(EncoderConfig::new(2, 1).unwrap().channels(), 18);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn coarser_levels_keep_supersets(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = rng.gen_range(1..5usize);
            let entries: Vec<CorrEntry> = (0..16)
                .map(|_| CorrEntry::new(rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0), 1.0))
                .collect();
            for level in 1..5 {
                for e in &entries {
                    let fine = scale_to_level(e.displacement, level, 5).unwrap();
                    let coarse = scale_to_level(e.displacement, level + 1, 5).unwrap();
                    proptest::prop_assert!(!in_window(fine, r) || in_window(coarse, r));
                }
            }
        }

        #[test]
        fn encode_is_linear_in_values(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (h, w, k) = (2, 3, 4);
            let disp: Vec<Coord2> = (0..h * w * k)
                .map(|_| Coord2::new(
                    rng.gen_range(-64..=64) as f32 * 0.125,
                    rng.gen_range(-64..=64) as f32 * 0.125,
                ))
                .collect();
            // Dyadic values keep every sum exact.
            let a: Vec<f32> = (0..h * w * k).map(|_| rng.gen_range(-64..64) as f32 * 0.25).collect();
            let b: Vec<f32> = (0..h * w * k).map(|_| rng.gen_range(-64..64) as f32 * 0.25).collect();
            let vol = |vals: &dyn Fn(usize) -> f32| {
                let entries = (0..h * w * k).map(|i| CorrEntry { displacement: disp[i], value: vals(i) }).collect();
                SparseCorrelationVolume::new(h, w, k, 1, entries).unwrap()
            };
            let cfg = EncoderConfig::new(3, 2).unwrap();
            let ea = encode(&vol(&|i| a[i]), &cfg).unwrap();
            let eb = encode(&vol(&|i| b[i]), &cfg).unwrap();
            let eab = encode(&vol(&|i| a[i] + b[i]), &cfg).unwrap();
            for ((x, y), z) in ea.data().iter().zip(eb.data()).zip(eab.data()) {
                proptest::prop_assert!((x + y - z).abs() <= 1e-4 * (1.0 + z.abs()));
            }
        }
    }
}
