//! Minimal raster line charts for PCK curves.

use image::{Rgb, RgbImage};

pub struct Series<'a> {
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    pub color: [u8; 3],
}

const MARGIN: u32 = 24;

/// Plots series over `x ∈ [min, max]` of all xs and `y ∈ [0, 1]` on a white
/// canvas with light horizontal gridlines every 0.1.
pub fn line_chart(series: &[Series], width: u32, height: u32) -> RgbImage {
    let mut img = RgbImage::from_pixel(width, height, Rgb([255, 255, 255]));
    let (x0, x1) = series
        .iter()
        .flat_map(|s| s.xs.iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let span = if x1 > x0 { x1 - x0 } else { 1.0 };
    let pw = width.saturating_sub(2 * MARGIN).max(1) as f64;
    let ph = height.saturating_sub(2 * MARGIN).max(1) as f64;
    let to_px = |x: f64, y: f64| {
        let u = MARGIN as f64 + (x - x0) / span * pw;
        let v = MARGIN as f64 + (1.0 - y.clamp(0.0, 1.0)) * ph;
        (u.round() as i64, v.round() as i64)
    };

    for k in 0..=10 {
        let (_, v) = to_px(x0, k as f64 / 10.0);
        let shade = if k == 0 { 0 } else { 220 };
        draw_line(&mut img, (MARGIN as i64, v), ((width - MARGIN) as i64, v), [shade; 3]);
    }
    draw_line(
        &mut img,
        (MARGIN as i64, MARGIN as i64),
        (MARGIN as i64, (height - MARGIN) as i64),
        [0; 3],
    );

    for s in series {
        let pts: Vec<_> = s.xs.iter().zip(s.ys).map(|(&x, &y)| to_px(x, y)).collect();
        for w in pts.windows(2) {
            draw_line(&mut img, w[0], w[1], s.color);
        }
        for &(u, v) in &pts {
            for du in -2..=2 {
                for dv in -2..=2 {
                    put(&mut img, u + du, v + dv, s.color);
                }
            }
        }
    }
    img
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, Rgb(c));
    }
}

// Bresenham
fn draw_line(img: &mut RgbImage, (mut x, mut y): (i64, i64), (x1, y1): (i64, i64), c: [u8; 3]) {
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        put(img, x, y, c);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}
