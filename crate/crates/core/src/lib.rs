//! Line and rectangle detection with the Hough transform.
//!
//! Three voting schemes share one accumulator type:
//!
//! * the classical transform over `theta in [-90, 90)`,
//! * the orientation-limited transform, which only votes within a window
//!   around the half-range gradient angle,
//! * the extended oriented transform over `theta in [-180, 180)`, voting
//!   around the full-range gradient angle so that edges of opposite
//!   polarity land in different halves of the accumulator.
//!
//! The [`rect`] module runs these inside a sliding window and looks for the
//! four-peak constellations that describe rectangles.

pub mod cli;
pub mod error;
pub mod gradient;
pub mod hough;
pub mod peaks;
pub mod raster;
pub mod rect;

pub use error::{Error, Result};
