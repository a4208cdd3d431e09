//! Minimal PNG rendering: scatter panels and label rasters.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::CliError;

pub const BLACK: Rgb<u8> = Rgb([0, 0, 0]);
pub const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
pub const GREEN: Rgb<u8> = Rgb([0, 150, 60]);
pub const RED: Rgb<u8> = Rgb([200, 30, 30]);
pub const BLUE: Rgb<u8> = Rgb([30, 70, 200]);
pub const GREY: Rgb<u8> = Rgb([150, 150, 150]);

const WIDTH: u32 = 800;
const PANEL_HEIGHT: u32 = 400;
const MARGIN: u32 = 20;

pub struct Series {
    pub points: Vec<(f64, f64)>,
    pub color: Rgb<u8>,
}

fn bounds(panel: &[Series]) -> Option<((f64, f64), (f64, f64))> {
    let mut it = panel.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let &(x0, y0) = it.next()?;
    let (mut xs, mut ys) = ((x0, x0), (y0, y0));
    for &(x, y) in it {
        xs = (xs.0.min(x), xs.1.max(x));
        ys = (ys.0.min(y), ys.1.max(y));
    }
    let pad = |(lo, hi): (f64, f64)| {
        let d = if hi > lo { 0.02 * (hi - lo) } else { 0.5 * lo.abs().max(1e-3) };
        (lo - d, hi + d)
    };
    Some((pad(xs), pad(ys)))
}

/// Stacks scatter panels vertically, each auto-scaled.
pub fn scatter_panels(path: &Path, panels: &[Vec<Series>]) -> Result<(), CliError> {
    let rows = panels.len().max(1) as u32;
    let mut img = RgbImage::from_pixel(WIDTH, rows * PANEL_HEIGHT, WHITE);
    let (pw, ph) = (WIDTH - 2 * MARGIN, PANEL_HEIGHT - 2 * MARGIN);
    for (k, panel) in panels.iter().enumerate() {
        let top = k as u32 * PANEL_HEIGHT + MARGIN;
        for x in MARGIN..=MARGIN + pw {
            img.put_pixel(x, top, BLACK);
            img.put_pixel(x, top + ph, BLACK);
        }
        for y in top..=top + ph {
            img.put_pixel(MARGIN, y, BLACK);
            img.put_pixel(MARGIN + pw, y, BLACK);
        }
        let Some(((x0, x1), (y0, y1))) = bounds(panel) else { continue };
        for s in panel {
            for &(x, y) in &s.points {
                if !(x.is_finite() && y.is_finite()) {
                    continue;
                }
                let px = MARGIN + ((x - x0) / (x1 - x0) * pw as f64).round() as u32;
                let py = top + ph - ((y - y0) / (y1 - y0) * ph as f64).round() as u32;
                img.put_pixel(px.min(WIDTH - 1), py, s.color);
            }
        }
    }
    save(img, path)
}

/// One pixel block per cell; `rows[0]` is drawn at the bottom.
pub fn raster(path: &Path, resolution: usize, color_of: impl Fn(usize, usize) -> Rgb<u8>) -> Result<(), CliError> {
    let scale = (800 / resolution.max(1)).max(1) as u32;
    let side = resolution as u32 * scale;
    let mut img = RgbImage::new(side, side);
    for (x, y, px) in img.enumerate_pixels_mut() {
        let col = (x / scale) as usize;
        let row = resolution - 1 - (y / scale) as usize;
        *px = color_of(row, col);
    }
    save(img, path)
}

fn save(img: RgbImage, path: &Path) -> Result<(), CliError> {
    img.save(path).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}
