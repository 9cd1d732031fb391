//! Flow evaluation: average endpoint error, KITTI-style outlier rate and
//! the discounted sequence loss over a run of refinement steps.
//!
//! All averages are taken over the pixels marked valid in the ground truth.

use crate::error::{Result, ScvError};
use crate::grid::FlowField;

/// Outlier threshold in pixels for [`f1_all`].
pub const F1_ABS_THRESHOLD: f32 = 3.0;
/// Outlier threshold relative to the ground-truth magnitude for [`f1_all`].
pub const F1_REL_THRESHOLD: f32 = 0.05;

fn valid_errors<'a>(
    flow: &'a FlowField,
    gt: &'a FlowField,
) -> Result<impl Iterator<Item = (usize, f64, f64)> + 'a> {
    gt.ensure_same_dims(flow)?;
    if (0..gt.pixels()).all(|i| !gt.is_valid(i)) {
        return Err(ScvError::NoValidPixels);
    }
    Ok((0..gt.pixels()).filter(|&i| gt.is_valid(i)).map(move |i| {
        let du = f64::from(flow.u()[i]) - f64::from(gt.u()[i]);
        let dv = f64::from(flow.v()[i]) - f64::from(gt.v()[i]);
        (i, du, dv)
    }))
}

/// Mean Euclidean distance between `flow` and `gt` over valid pixels.
pub fn endpoint_error(flow: &FlowField, gt: &FlowField) -> Result<f64> {
    let (sum, n) = valid_errors(flow, gt)?.fold((0.0f64, 0usize), |(s, n), (_, du, dv)| {
        (s + du.hypot(dv), n + 1)
    });
    Ok(sum / n as f64)
}

/// Percentage of valid pixels whose endpoint error exceeds both 3 px and 5%
/// of the ground-truth magnitude.
pub fn f1_all(flow: &FlowField, gt: &FlowField) -> Result<f64> {
    let (outliers, n) = valid_errors(flow, gt)?.fold((0usize, 0usize), |(o, n), (i, du, dv)| {
        let epe = du.hypot(dv);
        let mag = f64::from(gt.at(i).norm());
        let bad = epe > f64::from(F1_ABS_THRESHOLD) && epe > f64::from(F1_REL_THRESHOLD) * mag;
        (o + usize::from(bad), n + 1)
    });
    Ok(100.0 * outliers as f64 / n as f64)
}

/// Mean per-pixel L1 distance `|du| + |dv|` over valid pixels.
pub fn mean_l1(flow: &FlowField, gt: &FlowField) -> Result<f64> {
    let (sum, n) = valid_errors(flow, gt)?.fold((0.0f64, 0usize), |(s, n), (_, du, dv)| {
        (s + du.abs() + dv.abs(), n + 1)
    });
    Ok(sum / n as f64)
}

/// `sum_i gamma^(N-i) * mean_l1(flow_i, gt)` over the sequence, `i = 1..N`.
pub fn sequence_loss(flows: &[FlowField], gt: &FlowField, gamma: f64) -> Result<f64> {
    if flows.is_empty() {
        return Err(ScvError::EmptySequence);
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(ScvError::InvalidParameter(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    let n = flows.len();
    flows.iter().enumerate().try_fold(0.0, |acc, (i, f)| {
        let weight = gamma.powi((n - 1 - i) as i32);
        Ok(acc + weight * mean_l1(f, gt)?)
    })
}
