//! Image-to-flow pipeline: census descriptors, sparse volume, refinement and
//! upsampling back to image resolution.

use crate::error::{Result, ScvError};
use crate::estimator::{estimate_flow, EstimatorConfig, SoftArgmax};
use crate::grid::{upsample_flow, FlowField, ScalarGrid};
use crate::io::census_features;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub patch_radius: usize,
    /// Images are box-downsampled by this factor before feature extraction.
    pub divisor: usize,
    pub estimator: EstimatorConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            patch_radius: 2,
            divisor: 1,
            estimator: EstimatorConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Final estimate at image resolution.
    pub flow: FlowField,
    /// Every iterate at feature resolution.
    pub iterates: Vec<FlowField>,
}

pub fn estimate_from_images(
    first: &ScalarGrid,
    second: &ScalarGrid,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    if (first.height(), first.width()) != (second.height(), second.width()) {
        return Err(ScvError::DimensionMismatch {
            expected: (first.height(), first.width()),
            found: (second.height(), second.width()),
        });
    }
    if cfg.divisor == 0 {
        return Err(ScvError::InvalidParameter("divisor must be >= 1".into()));
    }
    let a = first.downsample(cfg.divisor)?;
    let b = second.downsample(cfg.divisor)?;
    let f1 = census_features(&a, cfg.patch_radius)?;
    let f2 = census_features(&b, cfg.patch_radius)?;
    let op = SoftArgmax::from_config(&cfg.estimator);
    let iterates = estimate_flow(&f1, &f2, &cfg.estimator, &op)?;
    let last = iterates.last().expect("at least one iteration");
    let up = upsample_flow(last, cfg.divisor)?;
    let flow = pad_to(&up, first.height(), first.width())?;
    Ok(PipelineOutput { flow, iterates })
}

// Rows/columns dropped by downsampling are filled from the nearest edge.
fn pad_to(flow: &FlowField, height: usize, width: usize) -> Result<FlowField> {
    if flow.dims() == (height, width) {
        return Ok(flow.clone());
    }
    FlowField::from_fn(height, width, |r, c| {
        flow.get(r.min(flow.height() - 1), c.min(flow.width() - 1))
    })
}
