use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::array::Image;
use crate::error::{Error, Result};

/// One ellipse of a phantom: additive intensity, semi-axes, centre and rotation
/// (degrees, counter-clockwise) on `[-1, 1]^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub intensity: f64,
    pub a: f64,
    pub b: f64,
    pub x0: f64,
    pub y0: f64,
    pub phi_deg: f64,
}

impl Ellipse {
    const fn new(intensity: f64, a: f64, b: f64, x0: f64, y0: f64, phi_deg: f64) -> Self {
        Ellipse {
            intensity,
            a,
            b,
            x0,
            y0,
            phi_deg,
        }
    }

    /// Reflection about the vertical axis.
    pub fn mirrored(&self) -> Self {
        Ellipse {
            x0: -self.x0,
            phi_deg: -self.phi_deg,
            ..*self
        }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let t = self.phi_deg.to_radians();
        let (s, c) = t.sin_cos();
        let (dx, dy) = (x - self.x0, y - self.y0);
        let xr = dx * c + dy * s;
        let yr = -dx * s + dy * c;
        (xr / self.a).powi(2) + (yr / self.b).powi(2) <= 1.0
    }
}

/// The contrast-enhanced ("modified") Shepp-Logan table.
pub const MODIFIED_SHEPP_LOGAN: [Ellipse; 10] = [
    Ellipse::new(1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    Ellipse::new(-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    Ellipse::new(-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    Ellipse::new(-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    Ellipse::new(0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    Ellipse::new(0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    Ellipse::new(0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    Ellipse::new(0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    Ellipse::new(0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    Ellipse::new(0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

/// Name recorded in reports for the phantom variant.
pub const PHANTOM_VARIANT: &str = "modified Shepp-Logan (10 ellipses, contrast-enhanced)";

// Sums such as 1 - 0.8 + 0.1 differ in the last bit depending on the order of
// the ellipses; snapping to this grid makes equal regions exactly equal.
const INTENSITY_GRID: f64 = 1e12;

/// Renders an ellipse table at pixel centres of an `n_y x n_x` grid on
/// `[-1, 1]^2` (row 0 at the top), clipped to `[0, 1]`.
pub fn render_ellipses(table: &[Ellipse], n_y: usize, n_x: usize) -> Image {
    // (2j + 1 - n) / n is exactly antisymmetric under j -> n - 1 - j
    let xs: Vec<f64> = (0..n_x).map(|j| (2.0 * j as f64 + 1.0 - n_x as f64) / n_x as f64).collect();
    let ys: Vec<f64> = (0..n_y).map(|i| (n_y as f64 - 2.0 * i as f64 - 1.0) / n_y as f64).collect();
    Array2::from_shape_fn((n_y, n_x), |(i, j)| {
        let (x, y) = (xs[j], ys[i]);
        let sum: f64 = table
            .iter()
            .filter(|e| e.contains(x, y))
            .map(|e| e.intensity)
            .sum();
        ((sum * INTENSITY_GRID).round() / INTENSITY_GRID).clamp(0.0, 1.0)
    })
}

pub fn shepp_logan(n_y: usize, n_x: usize) -> Result<Image> {
    if n_y < 16 || n_x < 16 {
        return Err(Error::Config(format!(
            "phantom needs at least 16x16 pixels, got {n_y}x{n_x}"
        )));
    }
    Ok(render_ellipses(&MODIFIED_SHEPP_LOGAN, n_y, n_x))
}

/// Smooth ramp, a sinusoidal texture and a few sharp edges, in `[0, 1]`.
/// Stands in for natural photographs, which do not satisfy the source
/// condition as easily as the phantom.
pub fn textured(n_y: usize, n_x: usize) -> Result<Image> {
    if n_y < 16 || n_x < 16 {
        return Err(Error::Config(format!(
            "textured image needs at least 16x16 pixels, got {n_y}x{n_x}"
        )));
    }
    use std::f64::consts::PI;
    Ok(Array2::from_shape_fn((n_y, n_x), |(i, j)| {
        let y = i as f64 / (n_y - 1) as f64;
        let x = j as f64 / (n_x - 1) as f64;
        let mut v = 0.15 + 0.35 * x + 0.1 * y;
        v += 0.08 * (2.0 * PI * 7.0 * x).sin() * (2.0 * PI * 5.0 * y).sin();
        if (0.2..0.55).contains(&x) && (0.25..0.7).contains(&y) {
            v += 0.25;
        }
        if (x - 0.72).powi(2) + (y - 0.35).powi(2) < 0.02 {
            v -= 0.1 + 0.05 * (2.0 * PI * 12.0 * (x + y)).cos();
        }
        if y > 0.8 && x > 0.6 {
            v += 0.3;
        }
        v.clamp(0.0, 1.0)
    }))
}

/// Rec. 601 luma.
pub fn luma(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

/// Loads a grayscale or colour image as intensities in `[0, 1]`.
///
/// `.pfm` and `.pgm` go through [`crate::io`]; everything else through the
/// `image` crate, with colour converted by [`luma`] and values divided by the
/// channel maximum.
pub fn load_image(path: &Path) -> Result<Image> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("pfm") => crate::io::read_pfm_image(path),
        Some("pgm") => crate::io::read_pgm(path),
        _ => {
            let img = image::open(path).map_err(|e| Error::format(path, e.to_string()))?;
            let rgb = img.to_rgb32f();
            let (w, h) = rgb.dimensions();
            Ok(Array2::from_shape_fn((h as usize, w as usize), |(i, j)| {
                let p = rgb.get_pixel(j as u32, i as u32);
                luma(p[0] as f64, p[1] as f64, p[2] as f64).clamp(0.0, 1.0)
            }))
        }
    }
}
