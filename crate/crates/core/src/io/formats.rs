//! Binary dumps of feature maps, match tables, sparse volumes and motion
//! tensors. Each starts with a four-byte magic followed by `u32` header
//! fields and an `f32` (or record) payload.
//!
//! | magic  | header                         | payload                                     |
//! |--------|--------------------------------|---------------------------------------------|
//! | `SFM1` | h, w, c                        | `h*w*c` f32, channel-interleaved            |
//! | `SKM1` | h, w, target h, target w, k    | `h*w*k` records of (u32 target index, f32)  |
//! | `SCV1` | h, w, k, divisor               | `h*w*k` records of (f32 dx, f32 dy, f32 value) |
//! | `SMT1` | h, w, levels, radius           | `h*w*levels*(2r+1)^2` f32                   |

use std::path::Path;

use super::{payload_len, put_f32, put_u32, to_u32, ByteReader};
use crate::encoder::MotionTensor;
use crate::error::{format_err, Result, ScvError};
use crate::grid::FeatureMap;
use crate::knn::TopKMatches;
use crate::volume::{CorrEntry, SparseCorrelationVolume};

pub const FEATURE_MAGIC: &[u8; 4] = b"SFM1";
pub const MATCHES_MAGIC: &[u8; 4] = b"SKM1";
pub const VOLUME_MAGIC: &[u8; 4] = b"SCV1";
pub const MOTION_MAGIC: &[u8; 4] = b"SMT1";

// Keeps validation failures of decoded payloads inside the format error.
fn reject(format: &'static str) -> impl Fn(ScvError) -> ScvError {
    move |e| match e {
        ScvError::Format { .. } => e,
        other => format_err(format, other.to_string()),
    }
}

pub fn features_to_bytes(f: &FeatureMap) -> Result<Vec<u8>> {
    const F: &str = "SFM1";
    let mut out = Vec::with_capacity(16 + 4 * f.data().len());
    out.extend_from_slice(FEATURE_MAGIC);
    put_u32(&mut out, to_u32(F, f.height())?);
    put_u32(&mut out, to_u32(F, f.width())?);
    put_u32(&mut out, to_u32(F, f.channels())?);
    f.data().iter().for_each(|&v| put_f32(&mut out, v));
    Ok(out)
}

pub fn features_from_bytes(bytes: &[u8]) -> Result<FeatureMap> {
    const F: &str = "SFM1";
    let mut r = ByteReader::new(bytes, F);
    r.magic(FEATURE_MAGIC)?;
    let (h, w, c) = (r.u32()?, r.u32()?, r.u32()?);
    r.expect_remaining(payload_len(F, &[h as u64, w as u64, c as u64], 4)?)?;
    let data = r.f32_vec(r.remaining() / 4)?;
    FeatureMap::new(h as usize, w as usize, c as usize, data).map_err(reject(F))
}

pub fn matches_to_bytes(m: &TopKMatches) -> Result<Vec<u8>> {
    const F: &str = "SKM1";
    let (th, tw) = m.target_dims();
    let mut out = Vec::with_capacity(24 + 8 * m.all_indices().len());
    out.extend_from_slice(MATCHES_MAGIC);
    for v in [m.height(), m.width(), th, tw, m.k()] {
        put_u32(&mut out, to_u32(F, v)?);
    }
    for (&i, &s) in m.all_indices().iter().zip(m.all_scores()) {
        put_u32(&mut out, i);
        put_f32(&mut out, s);
    }
    Ok(out)
}

pub fn matches_from_bytes(bytes: &[u8]) -> Result<TopKMatches> {
    const F: &str = "SKM1";
    let mut r = ByteReader::new(bytes, F);
    r.magic(MATCHES_MAGIC)?;
    let (h, w, th, tw, k) = (r.u32()?, r.u32()?, r.u32()?, r.u32()?, r.u32()?);
    if h == 0 || w == 0 || th == 0 || tw == 0 || k == 0 {
        return Err(format_err(F, "zero dimension in header"));
    }
    let targets = payload_len(F, &[th as u64, tw as u64], 1)?;
    if k as u64 > targets {
        return Err(format_err(F, format!("k = {k} exceeds {targets} targets")));
    }
    r.expect_remaining(payload_len(F, &[h as u64, w as u64, k as u64], 8)?)?;
    let n = r.remaining() / 8;
    let mut indices = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    for _ in 0..n {
        indices.push(r.u32()?);
        let s = r.f32()?;
        if !s.is_finite() {
            return Err(format_err(F, "non-finite score"));
        }
        scores.push(s);
    }
    TopKMatches::from_parts(
        (h as usize, w as usize),
        (th as usize, tw as usize),
        k as usize,
        indices,
        scores,
    )
    .map_err(reject(F))
}

pub fn volume_to_bytes(v: &SparseCorrelationVolume) -> Result<Vec<u8>> {
    const F: &str = "SCV1";
    let mut out = Vec::with_capacity(20 + 12 * v.element_count());
    out.extend_from_slice(VOLUME_MAGIC);
    put_u32(&mut out, to_u32(F, v.height())?);
    put_u32(&mut out, to_u32(F, v.width())?);
    put_u32(&mut out, to_u32(F, v.k())?);
    put_u32(&mut out, v.divisor());
    for e in v.entries() {
        put_f32(&mut out, e.displacement.x);
        put_f32(&mut out, e.displacement.y);
        put_f32(&mut out, e.value);
    }
    Ok(out)
}

pub fn volume_from_bytes(bytes: &[u8]) -> Result<SparseCorrelationVolume> {
    const F: &str = "SCV1";
    let mut r = ByteReader::new(bytes, F);
    r.magic(VOLUME_MAGIC)?;
    let (h, w, k, divisor) = (r.u32()?, r.u32()?, r.u32()?, r.u32()?);
    r.expect_remaining(payload_len(F, &[h as u64, w as u64, k as u64], 12)?)?;
    let raw = r.f32_vec(r.remaining() / 4)?;
    let entries = raw
        .chunks_exact(3)
        .map(|c| CorrEntry::new(c[0], c[1], c[2]))
        .collect();
    SparseCorrelationVolume::new(h as usize, w as usize, k as usize, divisor, entries)
        .map_err(reject(F))
}

pub fn motion_to_bytes(m: &MotionTensor) -> Result<Vec<u8>> {
    const F: &str = "SMT1";
    let mut out = Vec::with_capacity(20 + 4 * m.data().len());
    out.extend_from_slice(MOTION_MAGIC);
    for v in [m.height(), m.width(), m.levels(), m.radius()] {
        put_u32(&mut out, to_u32(F, v)?);
    }
    m.data().iter().for_each(|&v| put_f32(&mut out, v));
    Ok(out)
}

pub fn motion_from_bytes(bytes: &[u8]) -> Result<MotionTensor> {
    const F: &str = "SMT1";
    let mut r = ByteReader::new(bytes, F);
    r.magic(MOTION_MAGIC)?;
    let (h, w, levels, radius) = (r.u32()?, r.u32()?, r.u32()?, r.u32()?);
    if levels == 0 || levels > 31 || radius == 0 || radius > 1024 {
        return Err(format_err(
            F,
            format!("unsupported levels {levels} / radius {radius}"),
        ));
    }
    let side = 2 * radius as u64 + 1;
    r.expect_remaining(payload_len(
        F,
        &[h as u64, w as u64, levels as u64, side, side],
        4,
    )?)?;
    let data = r.f32_vec(r.remaining() / 4)?;
    MotionTensor::new(
        h as usize,
        w as usize,
        levels as usize,
        radius as usize,
        data,
    )
    .map_err(reject(F))
}

macro_rules! file_pair {
    ($read:ident, $write:ident, $ty:ty, $from:ident, $to:ident) => {
        pub fn $write(value: &$ty, path: impl AsRef<Path>) -> Result<()> {
            std::fs::write(path, $to(value)?)?;
            Ok(())
        }

        pub fn $read(path: impl AsRef<Path>) -> Result<$ty> {
            $from(&std::fs::read(path)?)
        }
    };
}

file_pair!(
    read_features,
    write_features,
    FeatureMap,
    features_from_bytes,
    features_to_bytes
);
file_pair!(
    read_matches,
    write_matches,
    TopKMatches,
    matches_from_bytes,
    matches_to_bytes
);
file_pair!(
    read_volume,
    write_volume,
    SparseCorrelationVolume,
    volume_from_bytes,
    volume_to_bytes
);
file_pair!(
    read_motion,
    write_motion,
    MotionTensor,
    motion_from_bytes,
    motion_to_bytes
);
