//! Size and memory accounting for dense and top-k correlation volumes.
//!
//! Feature maps are `floor(image / divisor)` on each axis. Only the 32-bit
//! correlation values are counted in `bytes`; `bytes_with_coordinates` adds
//! the two 32-bit displacement components a sparse volume also carries.

use std::fmt;

use crate::error::{Result, ScvError};

/// Bytes per stored correlation value.
pub const VALUE_BYTES: u64 = 4;
/// Bytes per stored sparse displacement (two `f32`).
pub const COORDINATE_BYTES: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeVariant {
    Dense,
    TopK(usize),
}

impl fmt::Display for VolumeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VolumeVariant::Dense => f.write_str("dense"),
            VolumeVariant::TopK(k) => write!(f, "k={k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryReport {
    pub image_height: usize,
    pub image_width: usize,
    pub divisor: usize,
    pub feature_height: usize,
    pub feature_width: usize,
    pub variant: VolumeVariant,
    pub element_count: u64,
    pub bytes: u64,
    pub bytes_with_coordinates: u64,
}

pub fn memory_report(
    image_height: usize,
    image_width: usize,
    divisor: usize,
    variant: VolumeVariant,
) -> Result<MemoryReport> {
    if divisor == 0 {
        return Err(ScvError::InvalidParameter("divisor must be >= 1".into()));
    }
    let (fh, fw) = (image_height / divisor, image_width / divisor);
    if fh == 0 || fw == 0 {
        return Err(ScvError::InvalidDimensions(format!(
            "{image_height}x{image_width} at 1/{divisor} has no pixels"
        )));
    }
    let overflow = || ScvError::InvalidDimensions("element count overflows u64".into());
    let pixels = (fh as u64).checked_mul(fw as u64).ok_or_else(overflow)?;
    let (element_count, bytes_with_coordinates) = match variant {
        VolumeVariant::Dense => {
            let n = pixels.checked_mul(pixels).ok_or_else(overflow)?;
            (n, n.checked_mul(VALUE_BYTES).ok_or_else(overflow)?)
        }
        VolumeVariant::TopK(k) => {
            if k == 0 {
                return Err(ScvError::KOutOfRange {
                    k,
                    max: pixels as usize,
                });
            }
            let n = pixels.checked_mul(k as u64).ok_or_else(overflow)?;
            let with = n
                .checked_mul(VALUE_BYTES + COORDINATE_BYTES)
                .ok_or_else(overflow)?;
            (n, with)
        }
    };
    Ok(MemoryReport {
        image_height,
        image_width,
        divisor,
        feature_height: fh,
        feature_width: fw,
        variant,
        element_count,
        bytes: element_count
            .checked_mul(VALUE_BYTES)
            .ok_or_else(overflow)?,
        bytes_with_coordinates,
    })
}

/// Integer with thousands separators: `778633216` -> `778,633,216`.
pub fn group_thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// Decimal GB at or above 10^9 bytes, decimal MB below. `decimals` applies
/// below 100 units; at or above 100 the value is printed as an integer.
pub fn format_bytes(bytes: u64, decimals: usize) -> String {
    let (value, unit) = if bytes >= 1_000_000_000 {
        (bytes as f64 / 1e9, "GB")
    } else {
        (bytes as f64 / 1e6, "MB")
    };
    if value >= 100.0 {
        format!("{value:.0} {unit}")
    } else {
        format!("{value:.decimals$} {unit}")
    }
}

/// Two-significant-figure scientific notation, e.g. `7.8e8`.
pub fn format_count_sci(n: u64) -> String {
    format!("{:.1e}", n as f64)
}

impl MemoryReport {
    /// One line: exact count and bytes, then the two-significant-figure
    /// summary, then the figure including sparse coordinates.
    pub fn summary_line(&self) -> String {
        format!(
            "1/{} ({}x{}) {}: {} elements, {} bytes ({}) | {} elements, {} | with coordinates: {} bytes ({})",
            self.divisor,
            self.feature_height,
            self.feature_width,
            self.variant,
            group_thousands(self.element_count),
            group_thousands(self.bytes),
            format_bytes(self.bytes, 2),
            format_count_sci(self.element_count),
            format_bytes(self.bytes, 1),
            group_thousands(self.bytes_with_coordinates),
            format_bytes(self.bytes_with_coordinates, 2),
        )
    }
}

/// The eight dense/top-k rows at divisors 4 and 8 for a 436x1024 image pair.
pub fn table4a_reports() -> Vec<MemoryReport> {
    let variants = [
        VolumeVariant::Dense,
        VolumeVariant::TopK(8),
        VolumeVariant::TopK(32),
        VolumeVariant::TopK(128),
    ];
    [4usize, 8]
        .iter()
        .flat_map(|&d| variants.iter().map(move |&v| (d, v)))
        .map(|(d, v)| memory_report(436, 1024, d, v).expect("fixed table inputs are valid"))
        .collect()
}

pub fn table4a_text() -> String {
    let mut out =
        String::from("correlation volume size for a 436x1024 image pair, 32-bit values\n");
    for r in table4a_reports() {
        out.push_str(&r.summary_line());
        out.push('\n');
    }
    out
}
