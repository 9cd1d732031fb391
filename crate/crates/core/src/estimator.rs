//! Iterative refinement: build the sparse volume once, then repeatedly shift
//! it by the latest residual, encode it and ask an [`UpdateOperator`] for the
//! next residual.
//!
//! A learned recurrent update plugs in behind [`UpdateOperator`]; it would
//! additionally consume context features and keep its own hidden state.
//! [`SoftArgmax`] is the non-learned operator shipped here.

use rayon::prelude::*;

use crate::encoder::{encode, EncoderConfig, MotionTensor};
use crate::error::{Result, ScvError};
use crate::grid::{FeatureMap, FlowField};
use crate::knn::{KnnConfig, DEFAULT_K};
use crate::shift::{accumulate_flow, shift_volume};
use crate::volume::{build_sparse_with, SparseCorrelationVolume};

pub const DEFAULT_ITERATIONS: usize = 8;

/// Predicts a residual flow from the current motion encoding.
pub trait UpdateOperator {
    /// `flow` is the current estimate `f_i`; `iteration` counts from zero.
    fn residual(
        &self,
        motion: &MotionTensor,
        flow: &FlowField,
        iteration: usize,
    ) -> Result<FlowField>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub iterations: usize,
    pub k: usize,
    pub encoder: EncoderConfig,
    pub temperature: f32,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            iterations: DEFAULT_ITERATIONS,
            k: DEFAULT_K,
            encoder: EncoderConfig::default(),
            temperature: 1.0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(ScvError::InvalidParameter("iterations must be >= 1".into()));
        }
        if self.k == 0 {
            return Err(ScvError::KOutOfRange {
                k: 0,
                max: usize::MAX,
            });
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(ScvError::InvalidParameter(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        self.encoder.validate()
    }
}

/// Soft-argmax over one level's window: softmax of `temperature * value`
/// across the `(2r+1)^2` cells, expectation of the cell displacement, scaled
/// back to level-1 pixels by `2^(level-1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftArgmax {
    pub temperature: f32,
    pub level: usize,
}

impl Default for SoftArgmax {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            level: 1,
        }
    }
}

impl SoftArgmax {
    pub fn from_config(cfg: &EstimatorConfig) -> Self {
        Self {
            temperature: cfg.temperature,
            level: 1,
        }
    }
}

impl UpdateOperator for SoftArgmax {
    fn residual(
        &self,
        motion: &MotionTensor,
        _flow: &FlowField,
        _iteration: usize,
    ) -> Result<FlowField> {
        soft_argmax_update_with(motion, self.level, self.temperature)
    }
}

/// [`SoftArgmax`] with temperature one.
pub fn soft_argmax_update(motion: &MotionTensor, level: usize) -> Result<FlowField> {
    soft_argmax_update_with(motion, level, 1.0)
}

pub fn soft_argmax_update_with(
    motion: &MotionTensor,
    level: usize,
    temperature: f32,
) -> Result<FlowField> {
    if level == 0 || level > motion.levels() {
        return Err(ScvError::LevelOutOfRange {
            level,
            levels: motion.levels(),
        });
    }
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(ScvError::InvalidParameter(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let r = motion.radius() as i64;
    let side = 2 * r + 1;
    let scale = f64::from(1u32 << (level - 1));
    let t = f64::from(temperature);
    let residuals: Vec<(f32, f32)> = (0..motion.height() * motion.width())
        .into_par_iter()
        .map(|p| {
            let window = motion.level_window(p, level).expect("level checked above");
            let peak = window
                .iter()
                .map(|&v| t * f64::from(v))
                .fold(f64::NEG_INFINITY, f64::max);
            let (mut z, mut ex, mut ey) = (0.0f64, 0.0f64, 0.0f64);
            for (i, &v) in window.iter().enumerate() {
                let w = (t * f64::from(v) - peak).exp();
                let (dx, dy) = ((i as i64 % side - r) as f64, (i as i64 / side - r) as f64);
                z += w;
                ex += w * dx;
                ey += w * dy;
            }
            ((ex / z * scale) as f32, (ey / z * scale) as f32)
        })
        .collect();
    let (u, v) = residuals.into_iter().unzip();
    FlowField::new(motion.height(), motion.width(), u, v)
}

/// Everything produced by a refinement run.
#[derive(Debug, Clone)]
pub struct Refinement {
    /// `f_1 ..= f_N`.
    pub flows: Vec<FlowField>,
    /// `Δf_1 ..= Δf_N`.
    pub residuals: Vec<FlowField>,
    /// The volume as it was encoded in the last iteration (shifted by
    /// `f_{N-1}`).
    pub last_volume: SparseCorrelationVolume,
}

/// Runs exactly `cfg.iterations` steps on an already built volume. No
/// feature inner products are evaluated here.
pub fn refine(
    volume: SparseCorrelationVolume,
    cfg: &EstimatorConfig,
    op: &dyn UpdateOperator,
) -> Result<Refinement> {
    cfg.validate()?;
    let (h, w) = volume.dims();
    let mut volume = volume;
    let mut flow = FlowField::zeros(h, w)?;
    let mut residual = FlowField::zeros(h, w)?;
    let mut flows = Vec::with_capacity(cfg.iterations);
    let mut residuals = Vec::with_capacity(cfg.iterations);
    for i in 0..cfg.iterations {
        volume = shift_volume(&volume, &residual)?;
        let motion = encode(&volume, &cfg.encoder)?;
        residual = op.residual(&motion, &flow, i)?;
        if residual.dims() != (h, w) {
            return Err(ScvError::DimensionMismatch {
                expected: (h, w),
                found: residual.dims(),
            });
        }
        flow = accumulate_flow(&flow, &residual)?;
        flows.push(flow.clone());
        residuals.push(residual.clone());
    }
    Ok(Refinement {
        flows,
        residuals,
        last_volume: volume,
    })
}

/// Builds the sparse volume of `(f1, f2)` once and refines it. Returns the
/// `N` flow estimates at feature resolution.
pub fn estimate_flow(
    f1: &FeatureMap,
    f2: &FeatureMap,
    cfg: &EstimatorConfig,
    op: &dyn UpdateOperator,
) -> Result<Vec<FlowField>> {
    cfg.validate()?;
    let volume = build_sparse_with(f1, f2, &KnnConfig::with_k(cfg.k))?;
    Ok(refine(volume, cfg, op)?.flows)
}
