//! Sobel gradients, orientation estimates and a Canny edge map.
//!
//! `gy` is positive upward, matching the centered frame. Convolving in row
//! space therefore means "rows above minus rows below".

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::raster::GrayImage;

/// Default upper Canny threshold, in Sobel magnitude units.
pub const DEFAULT_CANNY_HIGH: f64 = 210.0;

/// Default ratio of the low to the high hysteresis threshold.
pub const DEFAULT_LOW_RATIO: f64 = 0.4;

/// Per-pixel gradient components in luminance units per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    width: usize,
    height: usize,
    gx: Vec<f64>,
    gy: Vec<f64>,
}

impl GradientField {
    /// Builds a field from raw component planes (row-major).
    pub fn from_components(width: usize, height: usize, gx: Vec<f64>, gy: Vec<f64>) -> Result<Self> {
        if gx.len() != width * height || gy.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                got: (gx.len(), gy.len()),
            });
        }
        Ok(Self {
            width,
            height,
            gx,
            gy,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, col: usize, row: usize) -> (f64, f64) {
        let i = row * self.width + col;
        (self.gx[i], self.gy[i])
    }

    pub fn gx(&self) -> &[f64] {
        &self.gx
    }

    pub fn gy(&self) -> &[f64] {
        &self.gy
    }

    pub fn magnitude_at(&self, col: usize, row: usize, norm: MagnitudeNorm) -> f64 {
        let (gx, gy) = self.at(col, row);
        magnitude(gx, gy, norm)
    }

    /// Full-range orientation at a pixel, `None` where the gradient vanishes.
    pub fn orientation_at(&self, col: usize, row: usize) -> Option<f64> {
        let (gx, gy) = self.at(col, row);
        orientation_full(gx, gy).ok()
    }

    /// Renders `gx` and `gy` as PGMs with 128 at zero, sharing one linear scale.
    pub fn to_images(&self) -> (GrayImage, GrayImage) {
        let peak = self
            .gx
            .iter()
            .chain(&self.gy)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = if peak > 0.0 { 127.0 / peak } else { 0.0 };
        let render = |plane: &[f64]| {
            let samples = plane
                .iter()
                .map(|v| (128.0 + v * scale).round().clamp(0.0, 255.0) as u8)
                .collect();
            GrayImage::new(self.width, self.height, samples).expect("field dimensions are valid")
        };
        (render(&self.gx), render(&self.gy))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MagnitudeNorm {
    /// sqrt(gx^2 + gy^2)
    #[default]
    L2,
    /// |gx| + |gy|
    L1,
}

pub fn magnitude(gx: f64, gy: f64, norm: MagnitudeNorm) -> f64 {
    match norm {
        MagnitudeNorm::L2 => gx.hypot(gy),
        MagnitudeNorm::L1 => gx.abs() + gy.abs(),
    }
}

/// Wraps an angle in degrees into `[-180, 180)`.
pub fn wrap_degrees(theta: f64) -> f64 {
    let t = (theta + 180.0).rem_euclid(360.0) - 180.0;
    if t >= 180.0 {
        t - 360.0
    } else {
        t
    }
}

/// Gradient direction `atan2(gy, gx)` in degrees, in `[-180, 180)`.
pub fn orientation_full(gx: f64, gy: f64) -> Result<f64> {
    if gx == 0.0 && gy == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let t = gy.atan2(gx).to_degrees();
    Ok(if t >= 180.0 { t - 360.0 } else { t })
}

/// Half-range estimate `atan(gy / gx)` in degrees, in `(-90, 90]`; `gx = 0` maps to 90.
pub fn orientation_half(gx: f64, gy: f64) -> Result<f64> {
    if gx == 0.0 && gy == 0.0 {
        return Err(Error::ZeroGradient);
    }
    if gx == 0.0 {
        return Ok(90.0);
    }
    let t = (gy / gx).atan().to_degrees();
    // atan(-0) and tiny negative ratios can land on -90 exactly
    Ok(if t <= -90.0 { 90.0 } else { t })
}

/// Sobel gradient with edge-replicated borders.
pub fn sobel(img: &GrayImage) -> Result<GradientField> {
    let plane: Vec<f64> = img.samples().iter().map(|&v| f64::from(v)).collect();
    sobel_plane(&plane, img.width(), img.height())
}

/// Gaussian pre-smoothing followed by [`sobel`]. `sigma <= 0` skips smoothing.
pub fn sobel_smoothed(img: &GrayImage, sigma: f64) -> Result<GradientField> {
    let plane: Vec<f64> = img.samples().iter().map(|&v| f64::from(v)).collect();
    if sigma <= 0.0 {
        return sobel_plane(&plane, img.width(), img.height());
    }
    let smoothed = gaussian_blur(&plane, img.width(), img.height(), sigma);
    sobel_plane(&smoothed, img.width(), img.height())
}

fn sobel_plane(plane: &[f64], w: usize, h: usize) -> Result<GradientField> {
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
        });
    }
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    let px = |c: usize, r: usize| plane[r * w + c];
    for r in 0..h {
        let up = r.saturating_sub(1);
        let down = (r + 1).min(h - 1);
        for c in 0..w {
            let left = c.saturating_sub(1);
            let right = (c + 1).min(w - 1);
            let i = r * w + c;
            gx[i] = (px(right, up) + 2.0 * px(right, r) + px(right, down))
                - (px(left, up) + 2.0 * px(left, r) + px(left, down));
            gy[i] = (px(left, up) + 2.0 * px(c, up) + px(right, up))
                - (px(left, down) + 2.0 * px(c, down) + px(right, down));
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        gx,
        gy,
    })
}

fn gaussian_blur(plane: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= sum);

    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            tmp[r * w + c] = kernel
                .iter()
                .enumerate()
                .map(|(k, kv)| kv * plane[r * w + clamp(c as isize + k as isize - radius, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            out[r * w + c] = kernel
                .iter()
                .enumerate()
                .map(|(k, kv)| kv * tmp[clamp(r as isize + k as isize - radius, h) * w + c])
                .sum();
        }
    }
    out
}

/// Binary edge mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl EdgeMap {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                got: (mask.len(), 1),
            });
        }
        Ok(Self {
            width,
            height,
            mask,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            mask: vec![false; width * height],
        }
    }

    /// Edge map holding exactly the listed pixels.
    pub fn from_pixels(width: usize, height: usize, pixels: &[(usize, usize)]) -> Self {
        let mut map = Self::empty(width, height);
        for &(c, r) in pixels {
            map.set(c, r, true);
        }
        map
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> bool {
        self.mask[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, on: bool) {
        self.mask[row * self.width + col] = on;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Edge pixels as `(col, row)`, row-major.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// Edges white (255) on black.
    pub fn to_image(&self) -> GrayImage {
        let samples = self.mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
        GrayImage::new(self.width, self.height, samples).expect("mask dimensions are valid")
    }
}

/// Canny edge map with L2 magnitudes.
pub fn canny_edges(grad: &GradientField, high: f64, low: f64) -> Result<EdgeMap> {
    canny_edges_with_norm(grad, high, low, MagnitudeNorm::L2)
}

/// Canny edge map: 4-direction non-maximum suppression, then hysteresis with
/// 8-connectivity. The outermost 1-px frame never holds edges.
///
/// Along the gradient a pixel must be `>=` both neighbours and strictly `>`
/// the one earlier in row-major order, so flat two-pixel ridges thin to one
/// pixel. The strict test is skipped against a neighbour of opposite polarity,
/// which keeps both borders of a thin stripe whose responses touch.
pub fn canny_edges_with_norm(
    grad: &GradientField,
    high: f64,
    low: f64,
    norm: MagnitudeNorm,
) -> Result<EdgeMap> {
    if !(low > 0.0 && low <= high) {
        return Err(Error::Thresholds { low, high });
    }
    let (w, h) = (grad.width, grad.height);
    let mag: Vec<f64> = grad
        .gx
        .iter()
        .zip(&grad.gy)
        .map(|(&x, &y)| magnitude(x, y, norm))
        .collect();

    let mut candidate = vec![false; w * h];
    for r in 1..h.saturating_sub(1) {
        for c in 1..w.saturating_sub(1) {
            let i = r * w + c;
            let m = mag[i];
            if m < low {
                continue;
            }
            let (gx, gy) = (grad.gx[i], grad.gy[i]);
            let (prev, next) = match quantize_direction(gx, gy) {
                0 => (i - 1, i + 1),
                1 => (i - w + 1, i + w - 1),
                2 => (i - w, i + w),
                _ => (i - w - 1, i + w + 1),
            };
            if m < mag[next] || m < mag[prev] {
                continue;
            }
            let same_polarity = gx * grad.gx[prev] + gy * grad.gy[prev] > 0.0;
            if same_polarity && m <= mag[prev] {
                continue;
            }
            candidate[i] = true;
        }
    }

    let mut mask = vec![false; w * h];
    let mut queue = VecDeque::new();
    for i in 0..w * h {
        if candidate[i] && mag[i] >= high {
            mask[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (c, r) = ((i % w) as isize, (i / w) as isize);
        for dr in -1..=1isize {
            for dc in -1..=1isize {
                let (nc, nr) = (c + dc, r + dr);
                if nc < 0 || nr < 0 || nc >= w as isize || nr >= h as isize {
                    continue;
                }
                let j = nr as usize * w + nc as usize;
                if candidate[j] && !mask[j] {
                    mask[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(EdgeMap {
        width: w,
        height: h,
        mask,
    })
}

/// 0 = horizontal, 1 = 45 deg, 2 = vertical, 3 = 135 deg (gradient direction, y up).
fn quantize_direction(gx: f64, gy: f64) -> u8 {
    let mut t = gy.atan2(gx).to_degrees();
    if t < 0.0 {
        t += 180.0;
    }
    if !(22.5..157.5).contains(&t) {
        0
    } else if t < 67.5 {
        1
    } else if t < 112.5 {
        2
    } else {
        3
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{generate, CenteredPoint, RectSpec, SceneKind, SceneSpec};

    fn vertical_step(w: usize, h: usize, step_col: usize) -> GrayImage {
        let mut img = GrayImage::filled(w, h, 0).unwrap();
        for r in 0..h {
            for c in step_col..w {
                img.set(c, r, 255);
            }
        }
        img
    }

    /// Direct 3x3 correlation, written independently of `sobel_plane`.
    fn hand_sobel(img: &GrayImage, c: usize, r: usize) -> (f64, f64) {
        let kx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
        let ky = [[1.0, 2.0, 1.0], [0.0, 0.0, 0.0], [-1.0, -2.0, -1.0]];
        let (mut gx, mut gy) = (0.0, 0.0);
        for (dr, (rx, ry)) in kx.iter().zip(&ky).enumerate() {
            for dc in 0..3 {
                let v = f64::from(img.get(c + dc - 1, r + dr - 1));
                gx += rx[dc] * v;
                gy += ry[dc] * v;
            }
        }
        (gx, gy)
    }

    #[test]
    fn vertical_step_response() {
        let img = vertical_step(8, 8, 4);
        let g = sobel(&img).unwrap();
        assert_eq!(g.at(3, 4), (1020.0, 0.0));
        assert_eq!(g.at(4, 4), (1020.0, 0.0));
        assert_eq!(g.at(3, 4), hand_sobel(&img, 3, 4));
        assert_eq!(g.at(1, 4), (0.0, 0.0));
    }

    #[test]
    fn transposed_flipped_step_points_up() {
        // bright rows on top, dark below
        let mut img = GrayImage::filled(8, 8, 0).unwrap();
        for r in 0..4 {
            for c in 0..8 {
                img.set(c, r, 255);
            }
        }
        let g = sobel(&img).unwrap();
        assert_eq!(g.at(4, 4), (0.0, 1020.0));
        assert_eq!(g.at(4, 4), hand_sobel(&img, 4, 4));
    }

    #[test]
    fn matches_hand_correlation_on_a_scene() {
        let spec = SceneSpec::new(
            24,
            20,
            SceneKind::StepEdge {
                angle_deg: 37.0,
                offset: 1.5,
                bright: 230,
            },
        )
        .with_noise(3, 10.0);
        let img = generate(&spec).unwrap();
        let g = sobel(&img).unwrap();
        for r in 1..19 {
            for c in 1..23 {
                assert_eq!(g.at(c, r), hand_sobel(&img, c, r));
            }
        }
    }

    #[test]
    fn constant_image_has_zero_gradient() {
        let g = sobel(&GrayImage::filled(5, 4, 77).unwrap()).unwrap();
        assert!(g.gx().iter().chain(g.gy()).all(|&v| v == 0.0));
    }

    #[test]
    fn too_small_for_stencil() {
        let img = GrayImage::filled(2, 5, 0).unwrap();
        assert!(matches!(sobel(&img), Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn orientation_examples() {
        assert_eq!(orientation_full(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(orientation_full(0.0, 1.0).unwrap(), 90.0);
        assert_eq!(orientation_full(-1.0, 0.0).unwrap(), -180.0);
        assert_eq!(orientation_full(-1.0, -0.0).unwrap(), -180.0);
        assert!(orientation_full(0.0, 0.0).is_err());

        assert!((orientation_half(1.0, 1.0).unwrap() - 45.0).abs() < 1e-12);
        assert!((orientation_half(-1.0, -1.0).unwrap() - 45.0).abs() < 1e-12);
        assert_eq!(orientation_half(0.0, -3.0).unwrap(), 90.0);
        assert!(orientation_half(0.0, 0.0).is_err());
    }

    #[test]
    fn magnitude_examples() {
        assert_eq!(magnitude(3.0, 4.0, MagnitudeNorm::L2), 5.0);
        assert_eq!(magnitude(0.0, 0.0, MagnitudeNorm::L2), 0.0);
        assert_eq!(magnitude(-3.0, 4.0, MagnitudeNorm::L1), 7.0);
    }

    #[test]
    fn wrap_degrees_range() {
        assert_eq!(wrap_degrees(180.0), -180.0);
        assert_eq!(wrap_degrees(-180.0), -180.0);
        assert_eq!(wrap_degrees(233.13), 233.13 - 360.0);
        assert_eq!(wrap_degrees(-190.0), 170.0);
    }

    #[test]
    fn canny_on_vertical_step_is_one_column() {
        let img = vertical_step(32, 32, 16);
        let g = sobel(&img).unwrap();
        let edges = canny_edges(&g, 210.0, 84.0).unwrap();
        let pixels: Vec<_> = edges.pixels().collect();
        assert_eq!(pixels.len(), 30);
        assert!(pixels.iter().all(|&(c, _)| c == 15));
    }

    #[test]
    fn canny_constant_and_bad_thresholds() {
        let g = sobel(&GrayImage::filled(10, 10, 50).unwrap()).unwrap();
        assert_eq!(canny_edges(&g, 210.0, 84.0).unwrap().count(), 0);
        assert!(matches!(
            canny_edges(&g, 10.0, 20.0),
            Err(Error::Thresholds { .. })
        ));
        assert!(canny_edges(&g, 10.0, 0.0).is_err());
    }

    #[test]
    fn canny_rectangle_perimeter() {
        let spec = SceneSpec::new(
            101,
            101,
            SceneKind::Rectangles(vec![RectSpec::axis_aligned(
                CenteredPoint::new(0.0, 0.0),
                40.0,
                20.0,
                255,
            )]),
        );
        let g = sobel(&generate(&spec).unwrap()).unwrap();
        let n = canny_edges(&g, 210.0, 84.0).unwrap().count() as f64;
        assert!((n - 120.0).abs() <= 12.0, "edge count {n}");
    }

    #[test]
    fn thin_stripe_keeps_both_borders() {
        let spec = SceneSpec::new(
            40,
            40,
            SceneKind::Stripe {
                angle_deg: 0.0,
                thickness: 2.0,
                offset: 6.0,
                bright: 255,
            },
        );
        let g = sobel(&generate(&spec).unwrap()).unwrap();
        let edges = canny_edges(&g, 210.0, 84.0).unwrap();
        let mut rows: Vec<usize> = edges.pixels().map(|(_, r)| r).collect();
        rows.sort_unstable();
        rows.dedup();
        // stripe occupies rows 13 and 14; the upper border thins onto its dark side
        assert_eq!(rows, vec![12, 14]);
    }

    #[test]
    fn gradient_images_centre_on_128() {
        let g = sobel(&vertical_step(6, 6, 3)).unwrap();
        let (gx, gy) = g.to_images();
        assert_eq!(gx.get(0, 0), 128);
        assert_eq!(gx.get(2, 2), 255);
        assert!(gy.samples().iter().all(|&v| v == 128));
    }
}
