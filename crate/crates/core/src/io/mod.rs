//! File formats, images and visualisation.
//!
//! Every multi-byte field is little-endian. Readers validate sizes before
//! allocating and return [`ScvError::Format`](crate::ScvError::Format) on any
//! malformed input.

pub mod census;
pub mod color;
pub mod flo;
pub mod formats;
pub mod image_io;

pub use census::census_features;
pub use color::flow_to_color;
pub use flo::{read_flo, read_flo_bytes, write_flo, write_flo_bytes};
pub use formats::{
    read_features, read_matches, read_motion, read_volume, write_features, write_matches,
    write_motion, write_volume,
};

use crate::error::{format_err, Result};

/// Bounds-checked little-endian cursor.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    format: &'static str,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8], format: &'static str) -> Self {
        Self {
            bytes,
            pos: 0,
            format,
        }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| format_err(self.format, format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != expected {
            return Err(format_err(
                self.format,
                format!("bad magic {:?}, expected {:?}", got, expected),
            ));
        }
        Ok(())
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    /// Errors unless exactly `n` bytes are left.
    pub(crate) fn expect_remaining(&self, n: u64) -> Result<()> {
        if self.remaining() as u64 != n {
            return Err(format_err(
                self.format,
                format!("expected {n} payload bytes, found {}", self.remaining()),
            ));
        }
        Ok(())
    }

    pub(crate) fn f32_vec(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(
            n.checked_mul(4)
                .ok_or_else(|| format_err(self.format, "overflow"))?,
        )?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Product of header dimensions as a byte count, rejecting overflow.
pub(crate) fn payload_len(format: &'static str, dims: &[u64], bytes_per: u64) -> Result<u64> {
    dims.iter()
        .try_fold(bytes_per, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| format_err(format, "header dimensions overflow"))
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_f32(out: &mut Vec<u8>, v: f32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn to_u32(format: &'static str, v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| format_err(format, format!("{v} does not fit a u32 field")))
}
