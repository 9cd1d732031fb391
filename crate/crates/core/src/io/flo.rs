//! Middlebury `.flo`: `f32` tag 202021.25 (`PIEH`), `i32` width, `i32`
//! height, then interleaved `(u, v)` `f32` pairs in row-major order.
//!
//! Components with magnitude above 1e9 mark unknown flow. Reading turns them
//! into an invalid mask entry; writing a masked field stores [`UNKNOWN_FLOW`]
//! at invalid pixels.

use std::path::Path;

use super::{payload_len, put_f32, ByteReader};
use crate::error::{format_err, Result, ScvError};
use crate::grid::FlowField;

pub const FLO_TAG: f32 = 202021.25;
pub const UNKNOWN_FLOW: f32 = 1e10;
const UNKNOWN_THRESHOLD: f32 = 1e9;
const FORMAT: &str = ".flo";

pub fn write_flo_bytes(flow: &FlowField) -> Result<Vec<u8>> {
    let w = i32::try_from(flow.width()).map_err(|_| format_err(FORMAT, "width exceeds i32"))?;
    let h = i32::try_from(flow.height()).map_err(|_| format_err(FORMAT, "height exceeds i32"))?;
    let mut out = Vec::with_capacity(12 + 8 * flow.pixels());
    put_f32(&mut out, FLO_TAG);
    out.extend_from_slice(&w.to_le_bytes());
    out.extend_from_slice(&h.to_le_bytes());
    for i in 0..flow.pixels() {
        if flow.is_valid(i) {
            put_f32(&mut out, flow.u()[i]);
            put_f32(&mut out, flow.v()[i]);
        } else {
            put_f32(&mut out, UNKNOWN_FLOW);
            put_f32(&mut out, UNKNOWN_FLOW);
        }
    }
    Ok(out)
}

pub fn read_flo_bytes(bytes: &[u8]) -> Result<FlowField> {
    let mut r = ByteReader::new(bytes, FORMAT);
    let tag = r.f32()?;
    if tag.to_bits() != FLO_TAG.to_bits() {
        return Err(format_err(
            FORMAT,
            format!("bad tag {tag}, expected {FLO_TAG}"),
        ));
    }
    let w = r.i32()?;
    let h = r.i32()?;
    if w <= 0 || h <= 0 {
        return Err(format_err(FORMAT, format!("invalid size {w}x{h}")));
    }
    r.expect_remaining(payload_len(FORMAT, &[w as u64, h as u64], 8)?)?;
    let (w, h) = (w as usize, h as usize);
    let raw = r.f32_vec(2 * w * h)?;
    let mut u = Vec::with_capacity(w * h);
    let mut v = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for pair in raw.chunks_exact(2) {
        let known = pair[0].abs() <= UNKNOWN_THRESHOLD && pair[1].abs() <= UNKNOWN_THRESHOLD;
        u.push(pair[0]);
        v.push(pair[1]);
        valid.push(known);
    }
    let any_unknown = valid.iter().any(|k| !k);
    let flow = FlowField::new(h, w, u, v).map_err(|e| match e {
        ScvError::NonFinite(_) => format_err(FORMAT, "non-finite flow value"),
        other => other,
    })?;
    if any_unknown {
        flow.with_mask(valid)
    } else {
        Ok(flow)
    }
}

pub fn write_flo(flow: &FlowField, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_flo_bytes(flow)?)?;
    Ok(())
}

pub fn read_flo(path: impl AsRef<Path>) -> Result<FlowField> {
    read_flo_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Coord2;

    #[test]
    fn round_trip_is_bitwise() {
        let f = FlowField::from_fn(3, 5, |r, c| {
            Coord2::new(r as f32 * 0.1 - 1.0, c as f32 / 3.0)
        })
        .unwrap();
        let bytes = write_flo_bytes(&f).unwrap();
        assert_eq!(&bytes[..4], b"PIEH");
        let back = read_flo_bytes(&bytes).unwrap();
        assert_eq!(back, f);
        assert_eq!(write_flo_bytes(&back).unwrap(), bytes);
    }

    #[test]
    fn one_pixel_file_size() {
        let f = FlowField::zeros(1, 1).unwrap();
        assert_eq!(write_flo_bytes(&f).unwrap().len(), 20);
    }

    #[test]
    fn rejects_bad_inputs() {
        let good = write_flo_bytes(&FlowField::zeros(2, 2).unwrap()).unwrap();
        let mut bad_tag = good.clone();
        bad_tag[0] ^= 1;
        assert!(matches!(
            read_flo_bytes(&bad_tag),
            Err(ScvError::Format { .. })
        ));
        assert!(read_flo_bytes(&good[..good.len() - 1]).is_err());
        let mut extra = good.clone();
        extra.push(0);
        assert!(read_flo_bytes(&extra).is_err());
        let mut huge = good.clone();
        huge[4..8].copy_from_slice(&i32::MAX.to_le_bytes());
        huge[8..12].copy_from_slice(&i32::MAX.to_le_bytes());
        assert!(read_flo_bytes(&huge).is_err());
        let mut neg = good.clone();
        neg[4..8].copy_from_slice(&(-2i32).to_le_bytes());
        assert!(read_flo_bytes(&neg).is_err());
        let mut nan = good;
        nan[12..16].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(read_flo_bytes(&nan).is_err());
        assert!(read_flo_bytes(&[]).is_err());
    }

    #[test]
    fn unknown_values_become_mask() {
        let f = FlowField::constant(1, 3, Coord2::new(1.0, 2.0))
            .unwrap()
            .with_mask(vec![true, false, true])
            .unwrap();
        let back = read_flo_bytes(&write_flo_bytes(&f).unwrap()).unwrap();
        assert_eq!(back.mask(), Some(&[true, false, true][..]));
        assert_eq!(back.get(0, 2), Coord2::new(1.0, 2.0));
    }
}
