//! Census-style sign descriptors: for every pixel, the sign of each
//! neighbour-minus-centre difference in a `(2p+1) x (2p+1)` patch, centre
//! excluded, as `-1`, `0` or `+1`. Neighbours outside the image contribute 0.

use crate::error::{Result, ScvError};
use crate::grid::{FeatureMap, ScalarGrid};

/// Descriptor length for a patch radius, `(2p+1)^2 - 1`.
pub fn census_channels(patch_radius: usize) -> usize {
    let side = 2 * patch_radius + 1;
    side * side - 1
}

pub fn census_features(image: &ScalarGrid, patch_radius: usize) -> Result<FeatureMap> {
    if patch_radius == 0 {
        return Err(ScvError::InvalidParameter(
            "patch radius must be >= 1".into(),
        ));
    }
    let (h, w) = (image.height(), image.width());
    if h <= 2 * patch_radius || w <= 2 * patch_radius {
        return Err(ScvError::InvalidDimensions(format!(
            "{h}x{w} image is too small for patch radius {patch_radius}"
        )));
    }
    let p = patch_radius as i64;
    let c = census_channels(patch_radius);
    let mut data = Vec::with_capacity(h * w * c);
    for r in 0..h as i64 {
        for col in 0..w as i64 {
            let centre = image.get(r as usize, col as usize);
            for dr in -p..=p {
                for dc in -p..=p {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (nr, nc) = (r + dr, col + dc);
                    let s = if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                        0.0
                    } else {
                        let diff = image.get(nr as usize, nc as usize) - centre;
                        if diff > 0.0 {
                            1.0
                        } else if diff < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    };
                    data.push(s);
                }
            }
        }
    }
    FeatureMap::new(h, w, c, data)
}
