//! Accumulator geometry and voting.
//!
//! Bins are cell-centred: theta bin `i` sits at `theta_min + (i + 0.5) dtheta`
//! and rho bin `j` at `-rho_max + (j + 0.5) drho`. The rho axis always has an
//! odd bin count so one bin is centred on zero and `j -> n_rho - 1 - j` is an
//! exact reflection. Rho values are binned by rounding half away from zero,
//! which is antisymmetric, so a vote at `-rho` lands in the reflected bin of a
//! vote at `rho` with no floating-point ties to break.
//!
//! The regular axis `[-90, 90)` is cyclic with a twist: stepping past either
//! end re-enters at the other with rho reflected, because `(theta + 180, -rho)`
//! names the same line. The extended axis `[-180, 180)` is plainly cyclic.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gradient::{
    orientation_full, orientation_half, wrap_degrees, EdgeMap, GradientField,
    MagnitudeNorm,
};
use crate::raster::{to_centered, CenteredPoint, GrayImage};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WeightMode {
    #[default]
    Unit,
    /// Each vote weighs the L2 gradient magnitude of its pixel.
    Magnitude,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoughParams {
    /// Rho bin width, pixels.
    pub delta_rho: f64,
    /// Theta bin width, degrees.
    pub delta_theta: f64,
    /// Half-width of the orientation window around the gradient angle, degrees.
    pub theta_window: f64,
    pub weight_mode: WeightMode,
}

impl Default for HoughParams {
    fn default() -> Self {
        Self {
            delta_rho: 1.0,
            delta_theta: 0.5,
            theta_window: 22.5,
            weight_mode: WeightMode::Unit,
        }
    }
}

impl HoughParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta_rho", self.delta_rho),
            ("delta_theta", self.delta_theta),
            ("theta_window", self.theta_window),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::HoughParams(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AccumulatorMode {
    /// theta in [-90, 90)
    Regular,
    /// theta in [-180, 180)
    Extended,
}

impl AccumulatorMode {
    pub fn theta_min(self) -> f64 {
        match self {
            Self::Regular => -90.0,
            Self::Extended => -180.0,
        }
    }

    pub fn theta_span(self) -> f64 {
        -2.0 * self.theta_min()
    }
}

/// Which voting scheme to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transform {
    /// Full sinusoid per edge pixel over [-90, 90).
    Classical,
    /// Votes limited to a window around the half-range gradient angle, [-90, 90).
    OrientedRegular,
    /// Votes limited to a window around the full-range gradient angle, [-180, 180).
    Extended,
}

impl Transform {
    pub fn mode(self) -> AccumulatorMode {
        match self {
            Self::Classical | Self::OrientedRegular => AccumulatorMode::Regular,
            Self::Extended => AccumulatorMode::Extended,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccumulatorGeometry {
    mode: AccumulatorMode,
    delta_theta: f64,
    delta_rho: f64,
    rho_max: f64,
    n_theta: usize,
    n_rho: usize,
    source: (usize, usize),
}

impl AccumulatorGeometry {
    /// Geometry for a `width` x `height` source in centered coordinates.
    ///
    /// `rho_max` is `hypot(width / 2, height / 2)` rounded up to fill a whole,
    /// odd number of rho bins.
    pub fn new(mode: AccumulatorMode, width: usize, height: usize, params: &HoughParams) -> Result<Self> {
        params.validate()?;
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!("empty source {width}x{height}")));
        }
        let bins = mode.theta_span() / params.delta_theta;
        let n_theta = bins.round();
        if n_theta < 1.0 || (bins - n_theta).abs() > 1e-9 * bins.max(1.0) {
            return Err(Error::HoughParams(format!(
                "delta_theta {} does not tile the {}-degree theta axis",
                params.delta_theta,
                mode.theta_span()
            )));
        }
        let raw = (width as f64 / 2.0).hypot(height as f64 / 2.0);
        let mut n_rho = (2.0 * raw / params.delta_rho).ceil() as usize;
        if n_rho.is_multiple_of(2) {
            n_rho += 1;
        }
        Ok(Self {
            mode,
            delta_theta: params.delta_theta,
            delta_rho: params.delta_rho,
            rho_max: n_rho as f64 * params.delta_rho / 2.0,
            n_theta: n_theta as usize,
            n_rho,
            source: (width, height),
        })
    }

    pub fn mode(&self) -> AccumulatorMode {
        self.mode
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_rho(&self) -> usize {
        self.n_rho
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn delta_theta(&self) -> f64 {
        self.delta_theta
    }

    pub fn delta_rho(&self) -> f64 {
        self.delta_rho
    }

    pub fn theta_min(&self) -> f64 {
        self.mode.theta_min()
    }

    pub fn theta_max(&self) -> f64 {
        -self.mode.theta_min()
    }

    /// Source raster size `(width, height)`.
    pub fn source(&self) -> (usize, usize) {
        self.source
    }

    pub fn theta_center(&self, i: usize) -> f64 {
        self.theta_min() + (i as f64 + 0.5) * self.delta_theta
    }

    pub fn rho_center(&self, j: usize) -> f64 {
        -self.rho_max + (j as f64 + 0.5) * self.delta_rho
    }

    /// Nearest rho bin, clamped to the axis.
    #[inline]
    pub fn rho_bin(&self, rho: f64) -> usize {
        let half = (self.n_rho / 2) as i64;
        let k = (rho / self.delta_rho).round() as i64;
        (k.clamp(-half, half) + half) as usize
    }

    /// Theta bin whose cell contains `theta` (wrapped onto this axis).
    pub fn theta_bin(&self, theta: f64) -> usize {
        let span = self.mode.theta_span();
        let t = (theta - self.theta_min()).rem_euclid(span);
        ((t / self.delta_theta).floor() as usize).min(self.n_theta - 1)
    }

    /// The bin holding `(theta, rho)` after mapping theta onto this axis
    /// (regular mode folds angles outside [-90, 90) by antipode first).
    pub fn bin_of(&self, theta: f64, rho: f64) -> (usize, usize) {
        let mut theta = wrap_degrees(theta);
        let mut rho = rho;
        if self.mode == AccumulatorMode::Regular && !(-90.0..90.0).contains(&theta) {
            (theta, rho) = antipode(theta, rho);
        }
        (self.theta_bin(theta), self.rho_bin(rho))
    }

    #[inline]
    pub fn reflect_rho_bin(&self, j: usize) -> usize {
        self.n_rho - 1 - j
    }

    /// `(cos, sin)` of every theta bin centre.
    ///
    /// Angles are always evaluated as `-90 + (m + 0.5) dtheta`; the other half of
    /// an extended axis reuses them negated so antipodal bins are exact negatives.
    fn trig_table(&self) -> Vec<(f64, f64)> {
        let at = |deg: f64| {
            let (s, c) = deg.to_radians().sin_cos();
            (c, s)
        };
        let half_angle = |m: usize| -90.0 + (m as f64 + 0.5) * self.delta_theta;
        match self.mode {
            AccumulatorMode::Regular => (0..self.n_theta).map(|m| at(half_angle(m))).collect(),
            AccumulatorMode::Extended if self.n_theta.is_multiple_of(4) => {
                let quarter = (self.n_theta / 4) as isize;
                let half = (self.n_theta / 2) as isize;
                let table: Vec<(f64, f64)> = (0..half as usize).map(|m| at(half_angle(m))).collect();
                (0..self.n_theta as isize)
                    .map(|i| {
                        let m = i - quarter;
                        if (0..half).contains(&m) {
                            table[m as usize]
                        } else {
                            let (c, s) = table[m.rem_euclid(half) as usize];
                            (-c, -s)
                        }
                    })
                    .collect()
            }
            AccumulatorMode::Extended => (0..self.n_theta).map(|i| at(self.theta_center(i))).collect(),
        }
    }
}

/// Evaluates `rho = x cos(theta) + y sin(theta)`, theta in degrees.
pub fn rho_of(p: CenteredPoint, theta: f64) -> f64 {
    let (s, c) = theta.to_radians().sin_cos();
    p.x * c + p.y * s
}

/// The other representation `(theta + 180, -rho)` of the same undirected line.
pub fn antipode(theta: f64, rho: f64) -> (f64, f64) {
    (wrap_degrees(theta + 180.0), -rho)
}

/// Vote grid over `(theta, rho)`, stored theta-major.
#[derive(Clone, Debug)]
pub struct Accumulator {
    geometry: AccumulatorGeometry,
    votes: Vec<f64>,
    trig: Vec<(f64, f64)>,
}

impl PartialEq for Accumulator {
    fn eq(&self, other: &Self) -> bool {
        self.geometry == other.geometry && self.votes == other.votes
    }
}

impl Accumulator {
    pub fn new(geometry: AccumulatorGeometry) -> Self {
        let trig = geometry.trig_table();
        Self {
            votes: vec![0.0; geometry.n_theta * geometry.n_rho],
            geometry,
            trig,
        }
    }

    pub fn geometry(&self) -> &AccumulatorGeometry {
        &self.geometry
    }

    #[inline]
    pub fn get(&self, theta_bin: usize, rho_bin: usize) -> f64 {
        self.votes[theta_bin * self.geometry.n_rho + rho_bin]
    }

    #[inline]
    pub fn add(&mut self, theta_bin: usize, rho_bin: usize, weight: f64) {
        self.votes[theta_bin * self.geometry.n_rho + rho_bin] += weight;
    }

    /// Raw votes, `n_theta * n_rho`, theta-major.
    pub fn votes(&self) -> &[f64] {
        &self.votes
    }

    pub fn total(&self) -> f64 {
        self.votes.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.votes.iter().copied().fold(0.0, f64::max)
    }

    /// Nonzero bins as `(theta_bin, rho_bin, votes)`, theta-major.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n_rho = self.geometry.n_rho;
        self.votes
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(move |(k, &v)| (k / n_rho, k % n_rho, v))
    }

    /// Adds `weight` along the whole sinusoid of `p`, one vote per theta bin.
    pub fn vote_point(&mut self, p: CenteredPoint, weight: f64) {
        let n_rho = self.geometry.n_rho;
        for i in 0..self.geometry.n_theta {
            let (c, s) = self.trig[i];
            let j = self.geometry.rho_bin(p.x * c + p.y * s);
            self.votes[i * n_rho + j] += weight;
        }
    }

    /// Adds `weight` on the theta bins whose centres lie strictly inside
    /// `(theta0 - window, theta0 + window)`. Returns the number of bins voted.
    pub fn vote_oriented(&mut self, p: CenteredPoint, theta0: f64, window: f64, weight: f64) -> usize {
        let g = &self.geometry;
        let n = g.n_theta as i64;
        let lo_pos = (theta0 - window - g.theta_min()) / g.delta_theta - 0.5;
        let hi_pos = (theta0 + window - g.theta_min()) / g.delta_theta - 0.5;
        let lo = lo_pos.floor() as i64 + 1;
        let hi = hi_pos.ceil() as i64 - 1;
        let n_rho = g.n_rho;
        let mut voted = 0;
        // Evaluating rho at the wrapped bin already yields the antipodal
        // representation on the regular axis, so both modes just wrap the index.
        for u in lo..=hi {
            let i = u.rem_euclid(n) as usize;
            let (c, s) = self.trig[i];
            let j = g.rho_bin(p.x * c + p.y * s);
            self.votes[i * n_rho + j] += weight;
            voted += 1;
        }
        voted
    }

    /// CSV dump of the nonzero bins: `theta_deg,rho_px,votes`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta_deg,rho_px,votes\n");
        for (i, j, v) in self.nonzero() {
            let _ = writeln!(
                out,
                "{},{},{}",
                self.geometry.theta_center(i),
                self.geometry.rho_center(j),
                v
            );
        }
        out
    }
}

fn check_source(geom: &AccumulatorGeometry, width: usize, height: usize) -> Result<()> {
    if geom.source != (width, height) {
        return Err(Error::DimensionMismatch {
            expected: geom.source,
            got: (width, height),
        });
    }
    Ok(())
}

fn pixel_weight(
    params: &HoughParams,
    grad: Option<&GradientField>,
    col: usize,
    row: usize,
) -> Result<f64> {
    match params.weight_mode {
        WeightMode::Unit => Ok(1.0),
        WeightMode::Magnitude => grad
            .map(|g| g.magnitude_at(col, row, MagnitudeNorm::L2))
            .ok_or_else(|| Error::HoughParams("magnitude weighting needs a gradient field".into())),
    }
}

/// Classical transform: the full sinusoid for every edge pixel.
///
/// `grad` is only consulted for [`WeightMode::Magnitude`].
pub fn accumulate_full(
    edges: &EdgeMap,
    grad: Option<&GradientField>,
    geom: &AccumulatorGeometry,
    params: &HoughParams,
) -> Result<Accumulator> {
    check_source(geom, edges.width(), edges.height())?;
    if let Some(g) = grad {
        check_source(geom, g.width(), g.height())?;
    }
    let mut acc = Accumulator::new(geom.clone());
    for (col, row) in edges.pixels() {
        let w = pixel_weight(params, grad, col, row)?;
        acc.vote_point(to_centered(col, row, edges.width(), edges.height()), w);
    }
    Ok(acc)
}

/// Orientation-limited transform. Regular geometry windows around
/// `atan(gy / gx)`; extended geometry windows around `atan2(gy, gx)`.
pub fn accumulate_oriented(
    edges: &EdgeMap,
    grad: &GradientField,
    geom: &AccumulatorGeometry,
    params: &HoughParams,
) -> Result<Accumulator> {
    check_source(geom, edges.width(), edges.height())?;
    check_source(geom, grad.width(), grad.height())?;
    let mut acc = Accumulator::new(geom.clone());
    for (col, row) in edges.pixels() {
        let (gx, gy) = grad.at(col, row);
        let theta0 = match geom.mode {
            AccumulatorMode::Regular => orientation_half(gx, gy),
            AccumulatorMode::Extended => orientation_full(gx, gy),
        }
        .map_err(|_| Error::ZeroGradientAt { col, row })?;
        let w = pixel_weight(params, Some(grad), col, row)?;
        acc.vote_oriented(
            to_centered(col, row, edges.width(), edges.height()),
            theta0,
            params.theta_window,
            w,
        );
    }
    Ok(acc)
}

/// Runs `transform` over a whole edge map, sizing the geometry from it.
pub fn hough_transform(
    edges: &EdgeMap,
    grad: &GradientField,
    transform: Transform,
    params: &HoughParams,
) -> Result<Accumulator> {
    let geom = AccumulatorGeometry::new(transform.mode(), edges.width(), edges.height(), params)?;
    match transform {
        Transform::Classical => accumulate_full(edges, Some(grad), &geom, params),
        Transform::OrientedRegular | Transform::Extended => {
            accumulate_oriented(edges, grad, &geom, params)
        }
    }
}

/// Collapses an extended accumulator onto the regular axis:
/// `out[theta, rho] = in[theta, rho] + in[theta + 180, -rho]`.
pub fn fold_extended(acc: &Accumulator) -> Result<Accumulator> {
    let g = &acc.geometry;
    if g.mode != AccumulatorMode::Extended {
        return Err(Error::Geometry("fold expects an extended accumulator".into()));
    }
    if !g.n_theta.is_multiple_of(4) {
        return Err(Error::FoldBins(g.n_theta));
    }
    let geometry = AccumulatorGeometry {
        mode: AccumulatorMode::Regular,
        n_theta: g.n_theta / 2,
        ..g.clone()
    };
    let (quarter, half) = (g.n_theta / 4, g.n_theta / 2);
    let mut out = Accumulator::new(geometry);
    for m in 0..half {
        let front = m + quarter;
        let back = (front + half) % g.n_theta;
        for j in 0..g.n_rho {
            let v = acc.get(front, j) + acc.get(back, g.reflect_rho_bin(j));
            out.votes[m * g.n_rho + j] = v;
        }
    }
    Ok(out)
}

/// Square-root, inverted rendering: black at the maximum, white at zero.
/// Theta runs left to right, rho bottom to top.
pub fn render_accumulator(acc: &Accumulator) -> GrayImage {
    let g = &acc.geometry;
    let (w, h) = (g.n_theta, g.n_rho);
    let root_max = acc.max().sqrt();
    let mut samples = vec![255u8; w * h];
    if root_max > 0.0 {
        for i in 0..w {
            for j in 0..h {
                let v = acc.get(i, j).max(0.0).sqrt() / root_max;
                samples[(h - 1 - j) * w + i] = (255.0 * (1.0 - v)).round() as u8;
            }
        }
    }
    GrayImage::new(w, h, samples).expect("accumulator is never empty")
}
