//! Grayscale rasters, the centered coordinate frame, PGM I/O and synthetic scenes.
//!
//! Pixel `(col, row)` maps to the centered point
//! `x = col - (width - 1) / 2`, `y = (height - 1) / 2 - row`, so the y axis
//! points up and the centre of an odd-sized image is the exact origin.

mod pgm;
mod scene;

pub use pgm::{read_pgm, write_pgm, PgmError};
pub use scene::{generate, RectSpec, SceneKind, SceneSpec};

use crate::error::{Error, Result};

/// 8-bit luminance raster stored row-major, row 0 at the top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} image needs {} samples, got {}",
                width * height,
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    /// Image with every sample set to `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.samples[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, value: u8) {
        self.samples[row * self.width + col] = value;
    }

    /// Centered coordinates of pixel `(col, row)` in this image.
    pub fn centered(&self, col: usize, row: usize) -> CenteredPoint {
        to_centered(col, row, self.width, self.height)
    }

    /// Bright-for-dark inversion, `255 - v` per sample.
    pub fn inverted(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            samples: self.samples.iter().map(|&v| 255 - v).collect(),
        }
    }
}

/// A point in the centered frame: x to the right, y upward, origin at the image centre.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CenteredPoint {
    pub x: f64,
    pub y: f64,
}

impl CenteredPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Maps pixel indices to the centered frame.
///
/// Panics if `col >= width` or `row >= height`.
pub fn to_centered(col: usize, row: usize, width: usize, height: usize) -> CenteredPoint {
    assert!(
        col < width && row < height,
        "pixel ({col}, {row}) outside {width}x{height} image"
    );
    CenteredPoint {
        x: col as f64 - (width as f64 - 1.0) / 2.0,
        y: (height as f64 - 1.0) / 2.0 - row as f64,
    }
}

/// Inverse of [`to_centered`] in real pixel coordinates `(col, row)`.
pub fn from_centered(p: CenteredPoint, width: usize, height: usize) -> (f64, f64) {
    (
        p.x + (width as f64 - 1.0) / 2.0,
        (height as f64 - 1.0) / 2.0 - p.y,
    )
}

/// Nearest pixel to a centered point, or `None` when it falls outside the image.
pub fn nearest_pixel(p: CenteredPoint, width: usize, height: usize) -> Option<(usize, usize)> {
    let (c, r) = from_centered(p, width, height);
    let (c, r) = (c.round(), r.round());
    if c < 0.0 || r < 0.0 || c >= width as f64 || r >= height as f64 {
        return None;
    }
    Some((c as usize, r as usize))
}
