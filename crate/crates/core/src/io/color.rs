//! HSV flow colouring: hue follows the flow direction, saturation the
//! magnitude relative to `max_magnitude`, value is always one. Zero flow is
//! white; flow at or beyond the maximum is fully saturated.

use image::{Rgb, RgbImage};

use crate::grid::FlowField;

/// Hue in degrees for a flow vector, `atan2(v, u)` mapped to `[0, 360)`.
/// With `y` pointing down, hue grows clockwise on screen.
pub fn flow_hue(u: f32, v: f32) -> f64 {
    let deg = f64::from(v).atan2(f64::from(u)).to_degrees();
    if deg < 0.0 {
        deg + 360.0
    } else {
        deg
    }
}

fn hsv_to_rgb(hue: f64, sat: f64) -> [u8; 3] {
    let h = (hue / 60.0).rem_euclid(6.0);
    let sector = h.floor();
    let f = h - sector;
    let p = 1.0 - sat;
    let q = 1.0 - sat * f;
    let t = 1.0 - sat * (1.0 - f);
    let (r, g, b) = match sector as u8 {
        0 => (1.0, t, p),
        1 => (q, 1.0, p),
        2 => (p, 1.0, t),
        3 => (p, q, 1.0),
        4 => (t, p, 1.0),
        _ => (1.0, p, q),
    };
    let to_u8 = |c: f64| (c * 255.0).round().clamp(0.0, 255.0) as u8;
    [to_u8(r), to_u8(g), to_u8(b)]
}

/// Renders a flow field. Without `max_magnitude` the largest magnitude in
/// the field is used; invalid pixels are drawn black.
pub fn flow_to_color(flow: &FlowField, max_magnitude: Option<f32>) -> RgbImage {
    let mag = |i: usize| f64::from(flow.u()[i]).hypot(f64::from(flow.v()[i]));
    let max = match max_magnitude {
        Some(m) => f64::from(m),
        None => (0..flow.pixels())
            .filter(|&i| flow.is_valid(i))
            .map(mag)
            .fold(0.0, f64::max),
    };
    RgbImage::from_fn(flow.width() as u32, flow.height() as u32, |x, y| {
        let i = y as usize * flow.width() + x as usize;
        if !flow.is_valid(i) {
            return Rgb([0, 0, 0]);
        }
        let m = mag(i);
        if m == 0.0 || max <= 0.0 {
            return Rgb([255, 255, 255]);
        }
        let sat = (m / max).min(1.0);
        Rgb(hsv_to_rgb(flow_hue(flow.u()[i], flow.v()[i]), sat))
    })
}
