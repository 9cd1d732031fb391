//! PNG images and masks.

use std::path::Path;

use image::{GrayImage, Luma};

use crate::error::Result;
use crate::grid::ScalarGrid;

/// Loads any supported image as grayscale intensities in `[0, 255]`.
pub fn read_gray(path: impl AsRef<Path>) -> Result<ScalarGrid> {
    let img = image::open(path)?.to_luma8();
    gray_to_grid(&img)
}

pub fn gray_to_grid(img: &GrayImage) -> Result<ScalarGrid> {
    ScalarGrid::new(
        img.height() as usize,
        img.width() as usize,
        img.pixels().map(|p| f32::from(p.0[0])).collect(),
    )
}

/// Rounds and clamps intensities into an 8-bit grayscale image.
pub fn grid_to_gray(grid: &ScalarGrid) -> GrayImage {
    GrayImage::from_fn(grid.width() as u32, grid.height() as u32, |x, y| {
        Luma([grid.get(y as usize, x as usize).round().clamp(0.0, 255.0) as u8])
    })
}

pub fn write_gray(grid: &ScalarGrid, path: impl AsRef<Path>) -> Result<()> {
    grid_to_gray(grid).save(path)?;
    Ok(())
}

/// Reads a validity mask; any non-zero pixel is valid.
pub fn read_mask(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<bool>)> {
    let img = image::open(path)?.to_luma8();
    Ok((
        img.height() as usize,
        img.width() as usize,
        img.pixels().map(|p| p.0[0] != 0).collect(),
    ))
}

pub fn write_mask(
    height: usize,
    width: usize,
    valid: &[bool],
    path: impl AsRef<Path>,
) -> Result<()> {
    let img = GrayImage::from_fn(width as u32, height as u32, |x, y| {
        Luma([if valid[y as usize * width + x as usize] {
            255
        } else {
            0
        }])
    });
    img.save(path)?;
    Ok(())
}
