//! Per-iteration displacement update. Correlation values are fixed at
//! construction; each step only moves the stored coordinates by the latest
//! residual flow.

use crate::error::{Result, ScvError};
use crate::grid::{Coord2, FlowField};
use crate::volume::{CorrEntry, SparseCorrelationVolume};

/// Moves every entry of pixel `x` from `d` to `d - delta(x)`.
pub fn shift_volume(
    scv: &SparseCorrelationVolume,
    delta: &FlowField,
) -> Result<SparseCorrelationVolume> {
    if delta.dims() != scv.dims() {
        return Err(ScvError::DimensionMismatch {
            expected: scv.dims(),
            found: delta.dims(),
        });
    }
    Ok(scv.map_entries(|pixel, e| CorrEntry {
        displacement: e.displacement - delta.at(pixel),
        value: e.value,
    }))
}

/// Pixelwise `f + delta`.
pub fn accumulate_flow(flow: &FlowField, delta: &FlowField) -> Result<FlowField> {
    flow.ensure_same_dims(delta)?;
    let u = flow.u().iter().zip(delta.u()).map(|(a, b)| a + b).collect();
    let v = flow.v().iter().zip(delta.v()).map(|(a, b)| a + b).collect();
    let out = FlowField::new(flow.height(), flow.width(), u, v)?;
    match flow.mask() {
        Some(m) => out.with_mask(m.to_vec()),
        None => Ok(out),
    }
}

/// Negated copy of a flow field.
pub fn negate_flow(flow: &FlowField) -> FlowField {
    FlowField::from_fn(flow.height(), flow.width(), |r, c| -flow.get(r, c))
        .expect("dimensions come from an existing field")
}

/// Absolute match offset of an entry, `stored displacement + accumulated flow`.
pub fn absolute_displacement(entry: &CorrEntry, accumulated: Coord2) -> Coord2 {
    entry.displacement + accumulated
}
