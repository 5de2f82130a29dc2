//! Windowed Hough rectangle detection.
//!
//! A window centred on a rectangle sees its four sides as four accumulator
//! peaks in two pairs. On the regular axis a pair shares theta and has rho
//! values that cancel. On the extended axis, with gradients in play, a pair
//! has opposite theta, equal rho, and all four rho values share a sign
//! because every side's gradient points either toward or away from the
//! window centre. Parallel strips from two different objects fail that last
//! test, which is what removes the classic false rectangle between them.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gradient::{orientation_full, orientation_half, EdgeMap, GradientField, MagnitudeNorm};
use crate::gradient::wrap_degrees;
use crate::hough::{Accumulator, AccumulatorGeometry, HoughParams, Transform, WeightMode};
use crate::peaks::{find_peaks, Peak};
use crate::raster::CenteredPoint;

/// Square window with an odd side, centred on pixel `(col, row)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RectWindow {
    pub col: usize,
    pub row: usize,
    pub size: usize,
}

impl RectWindow {
    pub fn new(col: usize, row: usize, size: usize) -> Self {
        Self { col, row, size }
    }

    fn check(&self, width: usize, height: usize) -> Result<()> {
        if self.size.is_multiple_of(2) || self.size < 3 {
            return Err(Error::Window(format!("size must be odd and >= 3, got {}", self.size)));
        }
        let half = self.size / 2;
        if self.col < half || self.row < half || self.col + half >= width || self.row + half >= height {
            return Err(Error::WindowBounds {
                col: self.col,
                row: self.row,
                size: self.size,
                width,
                height,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RectTolerances {
    /// Orientation agreement within a pair, degrees.
    pub tol_theta: f64,
    /// Deviation from 90 degrees between the pairs.
    pub tol_orth: f64,
    /// Rho sum (regular) or rho difference (extended) within a pair, pixels.
    pub tol_rho: f64,
    /// Relative height difference within a pair.
    pub tol_height: f64,
    /// Also require each pair's mean height to match the other pair's side length.
    pub strict_heights: bool,
}

impl Default for RectTolerances {
    fn default() -> Self {
        Self {
            tol_theta: 3.0,
            tol_orth: 3.0,
            tol_rho: 3.0,
            tol_height: 0.25,
            strict_heights: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleSet {
    Regular,
    Extended,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RectangleHit {
    /// Window centre `[col, row]`.
    pub center: [usize; 2],
    /// Normal orientation of the first pair in [-90, 90), averaged with the
    /// second pair turned by 90 degrees, weighted by peak heights.
    pub alpha: f64,
    /// Separation of the first pair; never shorter than `b`.
    pub a: f64,
    pub b: f64,
    pub peaks: [Peak; 4],
    pub rule_set: RuleSet,
    /// Summed within-pair rho mismatch; zero when the window is centred on the rectangle.
    pub imbalance: f64,
}

impl RectangleHit {
    pub fn height_sum(&self) -> f64 {
        self.peaks.iter().map(|p| p.votes).sum()
    }
}

#[derive(Serialize)]
struct PeakJson {
    theta_deg: f64,
    rho_px: f64,
    votes: f64,
}

#[derive(Serialize)]
struct HitJson {
    center: [usize; 2],
    alpha_deg: f64,
    a_px: f64,
    b_px: f64,
    rule_set: RuleSet,
    peaks: Vec<PeakJson>,
}

/// Hits as a JSON array.
pub fn hits_to_json(hits: &[RectangleHit]) -> String {
    let rows: Vec<HitJson> = hits
        .iter()
        .map(|h| HitJson {
            center: h.center,
            alpha_deg: h.alpha,
            a_px: h.a,
            b_px: h.b,
            rule_set: h.rule_set,
            peaks: h
                .peaks
                .iter()
                .map(|p| PeakJson {
                    theta_deg: p.theta,
                    rho_px: p.rho,
                    votes: p.votes,
                })
                .collect(),
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("hit rows always serialize")
}

/// Hough transform of the edge pixels inside `window`, in coordinates centred
/// on the window. `rho_max` comes from the window size.
pub fn windowed_hough(
    edges: &EdgeMap,
    grad: &GradientField,
    window: &RectWindow,
    params: &HoughParams,
    transform: Transform,
) -> Result<Accumulator> {
    let (w, h) = (edges.width(), edges.height());
    if (grad.width(), grad.height()) != (w, h) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            got: (grad.width(), grad.height()),
        });
    }
    window.check(w, h)?;
    let geom = AccumulatorGeometry::new(transform.mode(), window.size, window.size, params)?;
    let mut acc = Accumulator::new(geom);
    let half = window.size / 2;
    for row in window.row - half..=window.row + half {
        for col in window.col - half..=window.col + half {
            if !edges.get(col, row) {
                continue;
            }
            let p = CenteredPoint::new(
                col as f64 - window.col as f64,
                window.row as f64 - row as f64,
            );
            let weight = match params.weight_mode {
                WeightMode::Unit => 1.0,
                WeightMode::Magnitude => grad.magnitude_at(col, row, MagnitudeNorm::L2),
            };
            let (gx, gy) = grad.at(col, row);
            match transform {
                Transform::Classical => acc.vote_point(p, weight),
                Transform::OrientedRegular => {
                    let t = orientation_half(gx, gy).map_err(|_| Error::ZeroGradientAt { col, row })?;
                    acc.vote_oriented(p, t, params.theta_window, weight);
                }
                Transform::Extended => {
                    let t = orientation_full(gx, gy).map_err(|_| Error::ZeroGradientAt { col, row })?;
                    acc.vote_oriented(p, t, params.theta_window, weight);
                }
            }
        }
    }
    Ok(acc)
}

/// Folds an angle onto [-90, 90).
fn half_turn(theta: f64) -> f64 {
    let t = (theta + 90.0).rem_euclid(180.0) - 90.0;
    if t >= 90.0 {
        t - 180.0
    } else {
        t
    }
}

fn heights_close(p: &Peak, q: &Peak, tol: f64) -> bool {
    let top = p.votes.max(q.votes);
    top > 0.0 && (p.votes - q.votes).abs() / top <= tol
}

/// A matched pair: orientation in [-90, 90), separation, mean height.
#[derive(Clone, Copy)]
struct Pair {
    alpha: f64,
    side: f64,
    height: f64,
    mismatch: f64,
    first: usize,
    second: usize,
}

fn regular_pair(peaks: &[Peak], i: usize, k: usize, tol: &RectTolerances) -> Option<Pair> {
    let (p, q) = (&peaks[i], &peaks[k]);
    // bring q onto p's side of the +-90 seam
    let (mut qt, mut qr) = (q.theta, q.rho);
    if qt - p.theta > 90.0 {
        (qt, qr) = (qt - 180.0, -qr);
    } else if qt - p.theta < -90.0 {
        (qt, qr) = (qt + 180.0, -qr);
    }
    if (p.theta - qt).abs() > tol.tol_theta
        || (p.rho + qr).abs() > tol.tol_rho
        || !heights_close(p, q, tol.tol_height)
    {
        return None;
    }
    let side = (p.rho - qr).abs();
    (side > 0.0).then(|| Pair {
        alpha: half_turn((p.theta + qt) / 2.0),
        side,
        height: (p.votes + q.votes) / 2.0,
        mismatch: (p.rho + qr).abs(),
        first: i,
        second: k,
    })
}

fn extended_pair(peaks: &[Peak], i: usize, k: usize, tol: &RectTolerances) -> Option<Pair> {
    let (p, q) = (&peaks[i], &peaks[k]);
    let gap = wrap_degrees(p.theta - q.theta - 180.0);
    if gap.abs() > tol.tol_theta
        || (p.rho - q.rho).abs() > tol.tol_rho
        || !heights_close(p, q, tol.tol_height)
    {
        return None;
    }
    // q.theta + 180 unwrapped next to p.theta
    let q_turned = p.theta - gap;
    Some(Pair {
        alpha: half_turn((p.theta + q_turned) / 2.0),
        side: (p.rho + q.rho).abs(),
        height: (p.votes + q.votes) / 2.0,
        mismatch: (p.rho - q.rho).abs(),
        first: i,
        second: k,
    })
}

/// All positive or all negative; a zero rho has no side to be on.
fn same_strict_sign(rhos: [f64; 4]) -> bool {
    rhos.iter().all(|&r| r > 0.0) || rhos.iter().all(|&r| r < 0.0)
}

fn orthogonal(a: &Pair, b: &Pair, tol: &RectTolerances) -> bool {
    let d = (a.alpha - b.alpha).rem_euclid(180.0);
    (d - 90.0).abs() <= tol.tol_orth
}

fn strict_heights_ok(a: &Pair, b: &Pair, tol: &RectTolerances) -> bool {
    // a pair's peaks are as tall as the sides they trace, i.e. the other pair's separation
    let close = |height: f64, side: f64| (height - side).abs() / side <= tol.tol_height;
    close(a.height, b.side) && close(b.height, a.side)
}

fn build_hit(peaks: &[Peak], mut p1: Pair, mut p2: Pair, rule_set: RuleSet, center: [usize; 2]) -> RectangleHit {
    if p2.side > p1.side || (p2.side == p1.side && p2.alpha < p1.alpha) {
        std::mem::swap(&mut p1, &mut p2);
    }
    let ordered = |p: &Pair| {
        let (x, y) = (peaks[p.first], peaks[p.second]);
        if x.theta_bin <= y.theta_bin {
            [x, y]
        } else {
            [y, x]
        }
    };
    // the second pair's normal, turned by 90 degrees, is a second estimate of alpha
    let turn = half_turn(p2.alpha + 90.0 - p1.alpha);
    let alpha = half_turn(p1.alpha + turn * p2.height / (p1.height + p2.height));
    let [a0, a1] = ordered(&p1);
    let [b0, b1] = ordered(&p2);
    RectangleHit {
        center,
        alpha,
        a: p1.side,
        b: p2.side,
        peaks: [a0, a1, b0, b1],
        rule_set,
        imbalance: p1.mismatch + p2.mismatch,
    }
}

fn match_with<F>(peaks: &[Peak], tol: &RectTolerances, rule_set: RuleSet, center: [usize; 2], pair: F) -> Vec<RectangleHit>
where
    F: Fn(&[Peak], usize, usize, &RectTolerances) -> Option<Pair>,
{
    let n = peaks.len();
    let mut hits = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    if rule_set == RuleSet::Extended && !same_strict_sign([i, j, k, l].map(|m| peaks[m].rho)) {
                        continue;
                    }
                    for ((a, b), (c, d)) in [((i, j), (k, l)), ((i, k), (j, l)), ((i, l), (j, k))] {
                        let (Some(p1), Some(p2)) = (pair(peaks, a, b, tol), pair(peaks, c, d, tol)) else {
                            continue;
                        };
                        if !orthogonal(&p1, &p2, tol) {
                            continue;
                        }
                        if tol.strict_heights && !strict_heights_ok(&p1, &p2, tol) {
                            continue;
                        }
                        hits.push(build_hit(peaks, p1, p2, rule_set, center));
                        break;
                    }
                }
            }
        }
    }
    hits
}

/// Constellations on a regular-axis accumulator: equal theta and cancelling
/// rho within each pair, pairs 90 degrees apart, equal heights within a pair.
/// Sides are `|rho1 - rho2|`.
pub fn match_regular(peaks: &[Peak], tol: &RectTolerances, center: [usize; 2]) -> Vec<RectangleHit> {
    match_with(peaks, tol, RuleSet::Regular, center, regular_pair)
}

/// Constellations on an extended-axis accumulator: opposite theta and equal
/// rho within each pair, pairs 90 degrees apart modulo 180, all four rho of
/// one strict sign, equal heights within a pair. Sides are `|rho1 + rho2|`.
pub fn match_extended(peaks: &[Peak], tol: &RectTolerances, center: [usize; 2]) -> Vec<RectangleHit> {
    match_with(peaks, tol, RuleSet::Extended, center, extended_pair)
}

/// Peak extraction and scan settings for rectangle search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanParams {
    /// Odd window side, pixels.
    pub window_size: usize,
    pub stride: usize,
    pub threshold_frac: f64,
    pub nms_theta: f64,
    pub nms_rho: f64,
    /// Only the strongest `peak_cap` peaks of a window enter the 4-subset search.
    pub peak_cap: usize,
    /// Peaks below this many votes are ignored.
    pub min_votes: f64,
    /// Transform behind the regular rule set.
    pub regular_transform: Transform,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            window_size: 61,
            stride: 2,
            threshold_frac: 0.15,
            nms_theta: 5.0,
            nms_rho: 3.0,
            peak_cap: 16,
            min_votes: 6.0,
            regular_transform: Transform::Classical,
        }
    }
}

impl ScanParams {
    pub fn transform_for(&self, rule_set: RuleSet) -> Transform {
        match rule_set {
            RuleSet::Regular => self.regular_transform,
            RuleSet::Extended => Transform::Extended,
        }
    }
}

/// Peaks of one window, filtered and capped as the scan would use them.
pub fn window_peaks(acc: &Accumulator, scan: &ScanParams) -> Result<Vec<Peak>> {
    let mut peaks = find_peaks(acc, scan.threshold_frac, scan.nms_theta, scan.nms_rho)?;
    peaks.retain(|p| p.votes >= scan.min_votes);
    peaks.truncate(scan.peak_cap);
    Ok(peaks)
}

/// Windowed transform, peaks and constellation matching for one window.
pub fn detect_in_window(
    edges: &EdgeMap,
    grad: &GradientField,
    window: &RectWindow,
    params: &HoughParams,
    scan: &ScanParams,
    tol: &RectTolerances,
    rule_set: RuleSet,
) -> Result<Vec<RectangleHit>> {
    let acc = windowed_hough(edges, grad, window, params, scan.transform_for(rule_set))?;
    let peaks = window_peaks(&acc, scan)?;
    let center = [window.col, window.row];
    Ok(match rule_set {
        RuleSet::Regular => match_regular(&peaks, tol, center),
        RuleSet::Extended => match_extended(&peaks, tol, center),
    })
}

/// Slides a window over the image and returns deduplicated hits, ordered by
/// window position (row-major) and then by descending peak-height sum.
///
/// Hits whose window centres lie closer than half the shorter side of either
/// hit are duplicates; the one with the larger height sum survives, and among
/// equal sums the better centred one.
pub fn scan(
    edges: &EdgeMap,
    grad: &GradientField,
    params: &HoughParams,
    scan: &ScanParams,
    tol: &RectTolerances,
    rule_set: RuleSet,
) -> Result<Vec<RectangleHit>> {
    if scan.window_size.is_multiple_of(2) || scan.window_size < 3 {
        return Err(Error::Window(format!(
            "size must be odd and >= 3, got {}",
            scan.window_size
        )));
    }
    if scan.stride == 0 {
        return Err(Error::Window("stride must be at least 1".into()));
    }
    let (w, h) = (edges.width(), edges.height());
    if (grad.width(), grad.height()) != (w, h) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            got: (grad.width(), grad.height()),
        });
    }
    let half = scan.window_size / 2;
    if scan.window_size > w || scan.window_size > h {
        return Ok(Vec::new());
    }

    // summed-area table of edge pixels, to skip windows that cannot hold four sides
    let mut sat = vec![0usize; (w + 1) * (h + 1)];
    for r in 0..h {
        for c in 0..w {
            sat[(r + 1) * (w + 1) + c + 1] = usize::from(edges.get(c, r)) + sat[r * (w + 1) + c + 1]
                + sat[(r + 1) * (w + 1) + c]
                - sat[r * (w + 1) + c];
        }
    }
    let count = |c0: usize, r0: usize, c1: usize, r1: usize| {
        sat[r1 * (w + 1) + c1] + sat[r0 * (w + 1) + c0] - sat[r0 * (w + 1) + c1] - sat[r1 * (w + 1) + c0]
    };
    let min_edges = (4.0 * scan.min_votes).ceil() as usize;

    let windows: Vec<RectWindow> = (half..h - half)
        .step_by(scan.stride)
        .flat_map(|row| {
            (half..w - half)
                .step_by(scan.stride)
                .map(move |col| RectWindow::new(col, row, scan.window_size))
        })
        .filter(|win| {
            count(win.col - half, win.row - half, win.col + half + 1, win.row + half + 1) >= min_edges.max(4)
        })
        .collect();

    let per_window: Vec<Vec<RectangleHit>> = windows
        .par_iter()
        .map(|win| detect_in_window(edges, grad, win, params, scan, tol, rule_set))
        .collect::<Result<_>>()?;

    let mut candidates: Vec<(usize, RectangleHit)> = per_window
        .into_iter()
        .enumerate()
        .flat_map(|(k, hits)| hits.into_iter().map(move |hit| (k, hit)))
        .collect();
    candidates.sort_by(|(ka, a), (kb, b)| {
        b.height_sum()
            .total_cmp(&a.height_sum())
            .then(a.imbalance.total_cmp(&b.imbalance))
            .then(ka.cmp(kb))
    });

    let mut kept: Vec<(usize, RectangleHit)> = Vec::new();
    for (k, hit) in candidates {
        let overlaps = kept.iter().any(|(_, other)| {
            let dc = hit.center[0] as f64 - other.center[0] as f64;
            let dr = hit.center[1] as f64 - other.center[1] as f64;
            let reach = hit.b.min(other.b) / 2.0;
            dc.hypot(dr) < reach
        });
        if !overlaps {
            kept.push((k, hit));
        }
    }
    kept.sort_by(|(ka, a), (kb, b)| ka.cmp(kb).then(b.height_sum().total_cmp(&a.height_sum())));
    Ok(kept.into_iter().map(|(_, hit)| hit).collect())
}

/// Maps an extended-axis peak onto the regular axis by antipode when needed.
pub fn fold_peak(p: &Peak) -> Peak {
    if (-90.0..90.0).contains(&p.theta) {
        *p
    } else {
        p.antipode()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradient::{canny_edges, sobel};
    use crate::raster::{generate, RectSpec, SceneKind, SceneSpec};

    fn pk(theta: f64, rho: f64, votes: f64) -> Peak {
        Peak {
            theta,
            rho,
            votes,
            theta_bin: ((theta + 180.0) * 2.0) as usize,
            rho_bin: 0,
        }
    }

    fn tol() -> RectTolerances {
        RectTolerances::default()
    }

    #[test]
    fn regular_constellation() {
        let peaks = [pk(0.0, 20.0, 30.0), pk(0.0, -20.0, 30.0), pk(-90.0, 10.0, 50.0), pk(-90.0, -10.0, 50.0)];
        let hits = match_regular(&peaks, &tol(), [0, 0]);
        assert_eq!(hits.len(), 1);
        assert_eq!((hits[0].a, hits[0].b), (40.0, 20.0));
        assert_eq!(hits[0].alpha, 0.0);
        assert_eq!(hits[0].rule_set, RuleSet::Regular);
    }

    #[test]
    fn regular_pair_across_seam() {
        // 89.5 and -90 describe almost the same orientation
        let peaks = [pk(0.0, 20.0, 30.0), pk(0.0, -20.0, 30.0), pk(89.5, -10.0, 50.0), pk(-90.0, -10.0, 50.0)];
        let hits = match_regular(&peaks, &tol(), [0, 0]);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].b, 20.0);
    }

    #[test]
    fn regular_rejects_uncancelled_rho() {
        let peaks = [pk(0.0, 20.0, 30.0), pk(0.0, -12.0, 30.0), pk(-90.0, 10.0, 50.0), pk(-90.0, -10.0, 50.0)];
        assert!(match_regular(&peaks, &tol(), [0, 0]).is_empty());
    }

    #[test]
    fn regular_rejects_unequal_heights() {
        let peaks = [pk(0.0, 20.0, 30.0), pk(0.0, -20.0, 10.0), pk(-90.0, 10.0, 50.0), pk(-90.0, -10.0, 50.0)];
        assert!(match_regular(&peaks, &tol(), [0, 0]).is_empty());
    }

    #[test]
    fn extended_constellation() {
        let peaks = [pk(0.0, -20.0, 30.0), pk(-180.0, -20.0, 30.0), pk(90.0, -10.0, 50.0), pk(-90.0, -10.0, 50.0)];
        let hits = match_extended(&peaks, &tol(), [5, 7]);
        assert_eq!(hits.len(), 1);
        let hit = &hits[0];
        assert_eq!((hit.a, hit.b), (40.0, 20.0));
        assert_eq!(hit.center, [5, 7]);
        assert_eq!(hit.alpha, 0.0);
        assert!(hit.peaks.iter().all(|p| p.rho < 0.0));
    }

    #[test]
    fn extended_rejects_mixed_signs() {
        let peaks = [pk(0.0, -20.0, 30.0), pk(-180.0, -20.0, 30.0), pk(90.0, 10.0, 50.0), pk(-90.0, 10.0, 50.0)];
        assert!(match_extended(&peaks, &tol(), [0, 0]).is_empty());
    }

    #[test]
    fn extended_rejects_parallel_same_direction() {
        let peaks = [pk(0.0, -20.0, 30.0), pk(0.0, -20.0, 30.0), pk(90.0, -10.0, 50.0), pk(-90.0, -10.0, 50.0)];
        assert!(match_extended(&peaks, &tol(), [0, 0]).is_empty());
    }

    #[test]
    fn extended_rejects_zero_rho() {
        let peaks = [pk(0.0, 0.0, 30.0), pk(-180.0, 0.0, 30.0), pk(90.0, -10.0, 50.0), pk(-90.0, -10.0, 50.0)];
        assert!(match_extended(&peaks, &tol(), [0, 0]).is_empty());
    }

    #[test]
    fn strips_between_two_objects() {
        // inner sides of two rectangles left and right of the window centre,
        // plus their top and bottom edges
        let extended = [pk(0.0, 10.0, 40.0), pk(-180.0, 10.0, 40.0), pk(90.0, -20.0, 40.0), pk(-90.0, -20.0, 40.0)];
        assert!(match_extended(&extended, &tol(), [0, 0]).is_empty());
        let folded: Vec<Peak> = extended.iter().map(fold_peak).collect();
        let hits = match_regular(&folded, &tol(), [0, 0]);
        assert_eq!(hits.len(), 1);
        assert_eq!((hits[0].a, hits[0].b), (40.0, 20.0));
    }

    #[test]
    fn extended_hits_survive_folding() {
        let peaks = [pk(0.0, -20.0, 30.0), pk(-180.0, -20.0, 30.0), pk(90.0, -10.0, 50.0), pk(-90.0, -10.0, 50.0)];
        let ext = match_extended(&peaks, &tol(), [0, 0]);
        let folded: Vec<Peak> = peaks.iter().map(fold_peak).collect();
        let reg = match_regular(&folded, &tol(), [0, 0]);
        assert_eq!(ext.len(), reg.len());
        assert_eq!((ext[0].a, ext[0].b), (reg[0].a, reg[0].b));
    }

    #[test]
    fn strict_heights() {
        let strict = RectTolerances { strict_heights: true, ..tol() };
        // sides 40 and 20 traced by peaks of height 20 and 40 respectively
        let good = [pk(0.0, 20.0, 20.0), pk(0.0, -20.0, 20.0), pk(-90.0, 10.0, 40.0), pk(-90.0, -10.0, 40.0)];
        assert_eq!(match_regular(&good, &strict, [0, 0]).len(), 1);
        let bad = [pk(0.0, 20.0, 40.0), pk(0.0, -20.0, 40.0), pk(-90.0, 10.0, 20.0), pk(-90.0, -10.0, 20.0)];
        assert!(match_regular(&bad, &strict, [0, 0]).is_empty());
        assert_eq!(match_regular(&bad, &tol(), [0, 0]).len(), 1);
    }

    #[test]
    fn blank_window_is_empty() {
        let edges = EdgeMap::empty(31, 31);
        let grad = GradientField::from_components(31, 31, vec![0.0; 961], vec![0.0; 961]).unwrap();
        let win = RectWindow::new(15, 15, 21);
        for t in [Transform::Classical, Transform::OrientedRegular, Transform::Extended] {
            let acc = windowed_hough(&edges, &grad, &win, &HoughParams::default(), t).unwrap();
            assert_eq!(acc.max(), 0.0);
        }
    }

    #[test]
    fn window_bounds() {
        let edges = EdgeMap::empty(31, 31);
        let grad = GradientField::from_components(31, 31, vec![0.0; 961], vec![0.0; 961]).unwrap();
        let p = HoughParams::default();
        for win in [RectWindow::new(9, 15, 21), RectWindow::new(15, 21, 21), RectWindow::new(15, 15, 20)] {
            assert!(windowed_hough(&edges, &grad, &win, &p, Transform::Extended).is_err());
        }
        assert!(windowed_hough(&edges, &grad, &RectWindow::new(10, 10, 21), &p, Transform::Extended).is_ok());
    }

    fn centred_rectangle() -> (EdgeMap, GradientField) {
        let spec = SceneSpec::new(101, 101, SceneKind::Rectangles(vec![RectSpec::axis_aligned(CenteredPoint::new(0.0, 0.0), 40.0, 20.0, 255)]));
        let img = generate(&spec).unwrap();
        let grad = sobel(&img).unwrap();
        (canny_edges(&grad, 210.0, 84.0).unwrap(), grad)
    }

    fn near(peaks: &[Peak], theta: f64, rho: f64) -> bool {
        peaks.iter().any(|p| (p.theta - theta).abs() <= 1.0 && (p.rho - rho).abs() <= 2.0)
    }

    #[test]
    fn centred_rectangle_peaks() {
        let (edges, grad) = centred_rectangle();
        let params = HoughParams { delta_rho: 0.5, ..HoughParams::default() };
        let win = RectWindow::new(50, 50, 61);
        let scan = ScanParams::default();

        let acc = windowed_hough(&edges, &grad, &win, &params, Transform::Extended).unwrap();
        let peaks = window_peaks(&acc, &scan).unwrap();
        assert_eq!(peaks.len(), 4, "{peaks:?}");
        for (t, r) in [(0.0, -20.0), (90.0, -10.0), (-90.0, -10.0)] {
            assert!(near(&peaks, t, r), "{t} {r} {peaks:?}");
        }
        assert!(near(&peaks, -180.0, -20.0) || near(&peaks, 179.5, -20.0), "{peaks:?}");

        let acc = windowed_hough(&edges, &grad, &win, &params, Transform::Classical).unwrap();
        let peaks = window_peaks(&acc, &scan).unwrap();
        for (t, r) in [(0.0, 20.0), (0.0, -20.0)] {
            assert!(near(&peaks, t, r), "{t} {r} {peaks:?}");
        }
        for r in [10.0, -10.0] {
            assert!(near(&peaks, -90.0, r) || near(&peaks, 89.5, -r), "{r} {peaks:?}");
        }
    }

    #[test]
    fn centred_rectangle_detected() {
        let (edges, grad) = centred_rectangle();
        let params = HoughParams { delta_rho: 0.5, ..HoughParams::default() };
        let win = RectWindow::new(50, 50, 61);
        for rules in [RuleSet::Regular, RuleSet::Extended] {
            let hits = detect_in_window(&edges, &grad, &win, &params, &ScanParams::default(), &tol(), rules).unwrap();
            assert_eq!(hits.len(), 1, "{rules:?}");
            assert!((hits[0].a - 40.0).abs() <= 1.0 && (hits[0].b - 20.0).abs() <= 1.0);
        }
    }

    #[test]
    fn scan_blank_image() {
        let edges = EdgeMap::empty(80, 80);
        let grad = GradientField::from_components(80, 80, vec![0.0; 6400], vec![0.0; 6400]).unwrap();
        for rules in [RuleSet::Regular, RuleSet::Extended] {
            let hits = scan(&edges, &grad, &HoughParams::default(), &ScanParams::default(), &tol(), rules).unwrap();
            assert!(hits.is_empty());
        }
    }

    #[test]
    fn scan_rejects_bad_window() {
        let edges = EdgeMap::empty(80, 80);
        let grad = GradientField::from_components(80, 80, vec![0.0; 6400], vec![0.0; 6400]).unwrap();
        let even = ScanParams { window_size: 60, ..ScanParams::default() };
        assert!(scan(&edges, &grad, &HoughParams::default(), &even, &tol(), RuleSet::Extended).is_err());
        let still = ScanParams { stride: 0, ..ScanParams::default() };
        assert!(scan(&edges, &grad, &HoughParams::default(), &still, &tol(), RuleSet::Extended).is_err());
    }

    #[test]
    fn json_shape() {
        let peaks = [pk(0.0, -20.0, 30.0), pk(-180.0, -20.0, 30.0), pk(90.0, -10.0, 50.0), pk(-90.0, -10.0, 50.0)];
        let hits = match_extended(&peaks, &tol(), [50, 50]);
        let v: serde_json::Value = serde_json::from_str(&hits_to_json(&hits)).unwrap();
        assert_eq!(v[0]["center"], serde_json::json!([50, 50]));
        assert_eq!(v[0]["rule_set"], "extended");
        assert_eq!(v[0]["a_px"], 40.0);
        assert_eq!(v[0]["peaks"].as_array().unwrap().len(), 4);
    }
}
