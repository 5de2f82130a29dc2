//! Peak extraction and line recovery.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hough::{antipode, Accumulator, AccumulatorMode};
use crate::raster::{from_centered, nearest_pixel, CenteredPoint, GrayImage};

pub const DEFAULT_THRESHOLD_FRAC: f64 = 0.5;
pub const DEFAULT_NMS_THETA: f64 = 5.0;
pub const DEFAULT_NMS_RHO: f64 = 5.0;

/// A local maximum of an accumulator, reported at its bin centre.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub theta: f64,
    pub rho: f64,
    pub votes: f64,
    pub theta_bin: usize,
    pub rho_bin: usize,
}

impl Peak {
    /// Same line with the opposite normal. Bin indices are left unchanged.
    pub fn antipode(&self) -> Self {
        let (theta, rho) = antipode(self.theta, self.rho);
        Self {
            theta,
            rho,
            ..*self
        }
    }
}

/// Local maxima above `threshold_frac * max`, strongest first.
///
/// A bin is a peak when it beats every other bin within `nms_theta` degrees and
/// `nms_rho` pixels. Equal values go to the bin with more support (votes in the
/// same rho row summed over the suppression window in theta), which
/// puts flat butterfly tops on their middle bin; remaining ties go to the
/// smaller theta bin, then the smaller rho bin. The theta axis wraps in both
/// modes, with rho reflected on the regular axis.
pub fn find_peaks(acc: &Accumulator, threshold_frac: f64, nms_theta: f64, nms_rho: f64) -> Result<Vec<Peak>> {
    if !(threshold_frac > 0.0 && threshold_frac <= 1.0) {
        return Err(Error::ThresholdFraction(threshold_frac));
    }
    let g = acc.geometry();
    let (n_theta, n_rho) = (g.n_theta(), g.n_rho());
    let max = acc.max();
    if max <= 0.0 {
        return Ok(Vec::new());
    }
    let threshold = threshold_frac * max;
    let k_theta = ((nms_theta.max(0.0) / g.delta_theta() + 1e-9).floor() as i64).min((n_theta as i64 - 1) / 2);
    let k_rho = (nms_rho.max(0.0) / g.delta_rho() + 1e-9).floor() as i64;
    let twisted = g.mode() == AccumulatorMode::Regular;
    let n = n_theta as i64;
    let neighbour = |i: usize, di: i64, r: i64| -> Option<(usize, usize)> {
        if !(0..n_rho as i64).contains(&r) {
            return None;
        }
        let u = i as i64 + di;
        let ni = u.rem_euclid(n) as usize;
        let nj = if twisted && !(0..n).contains(&u) {
            n_rho - 1 - r as usize
        } else {
            r as usize
        };
        Some((ni, nj))
    };
    let support = |i: usize, j: usize| -> f64 {
        let mut sum = 0.0;
        for di in -k_theta..=k_theta {
            if let Some((ni, nj)) = neighbour(i, di, j as i64) {
                sum += acc.get(ni, nj);
            }
        }
        sum
    };

    let mut peaks = Vec::new();
    for i in 0..n_theta {
        for j in 0..n_rho {
            let v = acc.get(i, j);
            if v < threshold || v <= 0.0 {
                continue;
            }
            let mut is_peak = true;
            let mut own_support = None;
            'scan: for di in -k_theta..=k_theta {
                for dj in -k_rho..=k_rho {
                    let Some((ni, nj)) = neighbour(i, di, j as i64 + dj) else {
                        continue;
                    };
                    if (ni, nj) == (i, j) {
                        continue;
                    }
                    let w = acc.get(ni, nj);
                    let beaten = if w != v {
                        w > v
                    } else {
                        let mine = *own_support.get_or_insert_with(|| support(i, j));
                        let theirs = support(ni, nj);
                        theirs > mine || (theirs == mine && (ni, nj) < (i, j))
                    };
                    if beaten {
                        is_peak = false;
                        break 'scan;
                    }
                }
            }
            if is_peak {
                peaks.push(Peak {
                    theta: g.theta_center(i),
                    rho: g.rho_center(j),
                    votes: v,
                    theta_bin: i,
                    rho_bin: j,
                });
            }
        }
    }
    peaks.sort_by(|a, b| {
        b.votes
            .total_cmp(&a.votes)
            .then(a.theta_bin.cmp(&b.theta_bin))
            .then(a.rho_bin.cmp(&b.rho_bin))
    });
    Ok(peaks)
}

/// Peak list as CSV `theta_deg,rho_px,votes`.
pub fn peaks_to_csv(peaks: &[Peak]) -> String {
    let mut out = String::from("theta_deg,rho_px,votes\n");
    for p in peaks {
        let _ = writeln!(out, "{},{},{}", p.theta, p.rho, p.votes);
    }
    out
}

/// A directed line `p . normal = rho` whose direction is the normal turned +90 degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedLine {
    pub theta: f64,
    pub rho: f64,
    pub normal: [f64; 2],
    pub direction: [f64; 2],
}

impl OrientedLine {
    pub fn new(theta: f64, rho: f64) -> Self {
        let (s, c) = theta.to_radians().sin_cos();
        Self {
            theta,
            rho,
            normal: [c, s],
            direction: [-s, c],
        }
    }

    /// Signed distance of `p` from the line, positive on the normal side.
    pub fn signed_distance(&self, p: CenteredPoint) -> f64 {
        p.x * self.normal[0] + p.y * self.normal[1] - self.rho
    }

    /// Point at parameter `t` along the direction from the foot of the normal.
    pub fn point_at(&self, t: f64) -> CenteredPoint {
        CenteredPoint::new(
            self.rho * self.normal[0] + t * self.direction[0],
            self.rho * self.normal[1] + t * self.direction[1],
        )
    }
}

pub fn line_of_peak(p: &Peak) -> OrientedLine {
    OrientedLine::new(p.theta, p.rho)
}

/// Part of a line inside the image rectangle, in centered coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub start: CenteredPoint,
    pub end: CenteredPoint,
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    X(f64),
    Y(f64),
    Open,
}

/// Clips a line to `[-width/2, width/2] x [-height/2, height/2]`, endpoints
/// ordered along the line direction. `None` when the line misses.
pub fn clip_to_image(line: &OrientedLine, width: usize, height: usize) -> Option<Segment> {
    let (hx, hy) = (width as f64 / 2.0, height as f64 / 2.0);
    let base = line.point_at(0.0);
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut s0, mut s1) = (Side::Open, Side::Open);

    for (origin, d, half, axis) in [
        (base.x, line.direction[0], hx, 0),
        (base.y, line.direction[1], hy, 1),
    ] {
        if d == 0.0 {
            if origin.abs() > half {
                return None;
            }
            continue;
        }
        let (mut lo, mut hi) = ((-half - origin) / d, (half - origin) / d);
        let (mut lo_side, mut hi_side) = (-half, half);
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
            std::mem::swap(&mut lo_side, &mut hi_side);
        }
        let tag = |v| if axis == 0 { Side::X(v) } else { Side::Y(v) };
        if lo > t0 {
            t0 = lo;
            s0 = tag(lo_side);
        }
        if hi < t1 {
            t1 = hi;
            s1 = tag(hi_side);
        }
    }
    if t0 > t1 {
        return None;
    }
    let snap = |t: f64, side: Side| {
        let mut p = line.point_at(t);
        match side {
            Side::X(v) => p.x = v,
            Side::Y(v) => p.y = v,
            Side::Open => {}
        }
        p
    };
    Some(Segment {
        start: snap(t0, s0),
        end: snap(t1, s1),
    })
}

/// Segment CSV with centered and pixel endpoints.
pub fn segments_to_csv(rows: &[(Peak, Segment)], width: usize, height: usize) -> String {
    let mut out = String::from("theta_deg,rho_px,x0,y0,x1,y1,col0,row0,col1,row1\n");
    for (p, s) in rows {
        let (c0, r0) = from_centered(s.start, width, height);
        let (c1, r1) = from_centered(s.end, width, height);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            p.theta, p.rho, s.start.x, s.start.y, s.end.x, s.end.y, c0, r0, c1, r1
        );
    }
    out
}

/// Burns a segment into an image at `value`, sampling every quarter pixel.
pub fn draw_segment(img: &mut GrayImage, seg: &Segment, value: u8) {
    let (w, h) = (img.width(), img.height());
    let (dx, dy) = (seg.end.x - seg.start.x, seg.end.y - seg.start.y);
    let steps = (dx.hypot(dy) * 4.0).ceil().max(1.0) as usize;
    for k in 0..=steps {
        let f = k as f64 / steps as f64;
        let p = CenteredPoint::new(seg.start.x + f * dx, seg.start.y + f * dy);
        if let Some((c, r)) = nearest_pixel(p, w, h) {
            img.set(c, r, value);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hough::{AccumulatorGeometry, HoughParams};

    fn geom(mode: AccumulatorMode) -> AccumulatorGeometry {
        AccumulatorGeometry::new(mode, 40, 40, &HoughParams::default()).unwrap()
    }

    #[test]
    fn empty_and_single_bin() {
        let acc = Accumulator::new(geom(AccumulatorMode::Extended));
        assert!(find_peaks(&acc, 0.5, 5.0, 5.0).unwrap().is_empty());

        let mut acc = acc;
        acc.add(100, 20, 3.0);
        let peaks = find_peaks(&acc, 0.5, 5.0, 5.0).unwrap();
        assert_eq!(peaks.len(), 1);
        assert_eq!((peaks[0].theta_bin, peaks[0].rho_bin, peaks[0].votes), (100, 20, 3.0));
        assert_eq!(peaks[0].theta, acc.geometry().theta_center(100));
    }

    #[test]
    fn bad_threshold() {
        let acc = Accumulator::new(geom(AccumulatorMode::Regular));
        assert!(find_peaks(&acc, 0.0, 5.0, 5.0).is_err());
        assert!(find_peaks(&acc, 1.5, 5.0, 5.0).is_err());
        assert!(find_peaks(&acc, 1.0, 5.0, 5.0).is_ok());
    }

    #[test]
    fn ties_go_to_smaller_bins() {
        let mut acc = Accumulator::new(geom(AccumulatorMode::Regular));
        acc.add(50, 10, 2.0);
        acc.add(51, 10, 2.0);
        acc.add(50, 11, 2.0);
        let peaks = find_peaks(&acc, 0.5, 5.0, 5.0).unwrap();
        assert_eq!(peaks.len(), 1);
        assert_eq!((peaks[0].theta_bin, peaks[0].rho_bin), (50, 10));
    }

    #[test]
    fn extended_axis_wraps() {
        let g = geom(AccumulatorMode::Extended);
        let mut acc = Accumulator::new(g.clone());
        acc.add(0, 20, 2.0);
        acc.add(g.n_theta() - 1, 20, 3.0);
        let peaks = find_peaks(&acc, 0.1, 5.0, 5.0).unwrap();
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0].theta_bin, g.n_theta() - 1);
    }

    #[test]
    fn regular_axis_wraps_with_reflection() {
        let g = geom(AccumulatorMode::Regular);
        let mut acc = Accumulator::new(g.clone());
        // (-89.75, rho) and (89.75, -rho) describe nearly the same line
        let j = g.rho_bin(10.0);
        acc.add(0, j, 2.0);
        acc.add(g.n_theta() - 1, g.reflect_rho_bin(j), 3.0);
        let peaks = find_peaks(&acc, 0.1, 5.0, 5.0).unwrap();
        assert_eq!(peaks.len(), 1);
        // same rho on both ends is a different line
        acc.add(g.n_theta() - 1, j, 2.5);
        assert_eq!(find_peaks(&acc, 0.1, 5.0, 5.0).unwrap().len(), 2);
    }

    #[test]
    fn line_examples() {
        let l = line_of_peak(&Peak {
            theta: 0.0,
            rho: 5.0,
            votes: 1.0,
            theta_bin: 0,
            rho_bin: 0,
        });
        assert_eq!(l.normal, [1.0, 0.0]);
        assert_eq!(l.direction, [-0.0, 1.0]);
        assert_eq!(l.signed_distance(CenteredPoint::new(5.0, -3.0)), 0.0);

        // 12/5 = 3/5 x + 4/5 y
        let theta = 0.8f64.atan2(0.6).to_degrees();
        let l = OrientedLine::new(theta, 2.4);
        assert!((l.normal[0] - 0.6).abs() < 1e-12 && (l.normal[1] - 0.8).abs() < 1e-12);
        for x in [-4.0, 0.0, 1.44, 3.0] {
            let p = CenteredPoint::new(x, -0.75 * x + 3.0);
            assert!(l.signed_distance(p).abs() < 1e-12);
        }
        let a = OrientedLine::new(antipode(theta, 2.4).0, -2.4);
        for x in [-4.0, 0.0, 1.44, 3.0] {
            let p = CenteredPoint::new(x, -0.75 * x + 3.0);
            assert!(a.signed_distance(p).abs() < 1e-12);
        }
        assert!((a.direction[0] + l.direction[0]).abs() < 1e-12);
        assert!((a.direction[1] + l.direction[1]).abs() < 1e-12);
    }

    #[test]
    fn clip_examples() {
        let seg = clip_to_image(&OrientedLine::new(0.0, 5.0), 20, 20).unwrap();
        assert_eq!(seg.start, CenteredPoint::new(5.0, -10.0));
        assert_eq!(seg.end, CenteredPoint::new(5.0, 10.0));
        assert!(clip_to_image(&OrientedLine::new(0.0, 50.0), 20, 20).is_none());
    }

    #[test]
    fn clip_line_in_10_by_8() {
        // y = -3/4 x + 3 meets the frame [-5, 5] x [-4, 4]:
        // at y = 4, x = -4/3; at x = 5, y = -3/4
        let theta = 0.8f64.atan2(0.6).to_degrees();
        let seg = clip_to_image(&OrientedLine::new(theta, 2.4), 10, 8).unwrap();
        // direction (-0.8, 0.6) runs from lower right to upper left
        assert!((seg.start.x - 5.0).abs() < 1e-12 && (seg.start.y + 0.75).abs() < 1e-12);
        assert!((seg.end.x + 4.0 / 3.0).abs() < 1e-12 && (seg.end.y - 4.0).abs() < 1e-12);
    }

    #[test]
    fn csv_and_drawing() {
        let p = Peak {
            theta: 0.0,
            rho: 2.0,
            votes: 7.0,
            theta_bin: 0,
            rho_bin: 0,
        };
        assert_eq!(peaks_to_csv(&[p]), "theta_deg,rho_px,votes\n0,2,7\n");
        let seg = clip_to_image(&OrientedLine::new(0.0, 2.0), 9, 9).unwrap();
        let csv = segments_to_csv(&[(p, seg)], 9, 9);
        assert_eq!(csv.lines().nth(1).unwrap(), "0,2,2,-4.5,2,4.5,6,8.5,6,-0.5");
        let mut img = GrayImage::filled(9, 9, 255).unwrap();
        draw_segment(&mut img, &seg, 0);
        for r in 0..9 {
            for c in 0..9 {
                assert_eq!(img.get(c, r) == 0, c == 6, "({c}, {r})");
            }
        }
    }
}
