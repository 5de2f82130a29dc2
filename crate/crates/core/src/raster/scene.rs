//! Deterministic synthetic scenes used as test inputs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{nearest_pixel, to_centered, CenteredPoint, GrayImage};
use crate::error::{Error, Result};

/// Supersampling factor per axis for area-sampled step edges.
const STEP_SUBSAMPLES: usize = 8;

/// One filled rectangle in a [`SceneKind::Rectangles`] scene.
#[derive(Clone, Debug, PartialEq)]
pub struct RectSpec {
    pub center: CenteredPoint,
    /// Side length along the rectangle's own x axis.
    pub a: f64,
    /// Side length along the rectangle's own y axis.
    pub b: f64,
    /// Counter-clockwise rotation of the rectangle, degrees.
    pub angle_deg: f64,
    pub intensity: u8,
}

impl RectSpec {
    pub fn axis_aligned(center: CenteredPoint, a: f64, b: f64, intensity: u8) -> Self {
        Self {
            center,
            a,
            b,
            angle_deg: 0.0,
            intensity,
        }
    }

    fn contains(&self, p: CenteredPoint) -> bool {
        let (s, c) = self.angle_deg.to_radians().sin_cos();
        let (dx, dy) = (p.x - self.center.x, p.y - self.center.y);
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (-self.a / 2.0..self.a / 2.0).contains(&u) && (-self.b / 2.0..self.b / 2.0).contains(&v)
    }

    fn corners(&self) -> [CenteredPoint; 4] {
        let (s, c) = self.angle_deg.to_radians().sin_cos();
        let (ha, hb) = (self.a / 2.0, self.b / 2.0);
        [(-ha, -hb), (ha, -hb), (ha, hb), (-ha, hb)].map(|(u, v)| {
            CenteredPoint::new(self.center.x + u * c - v * s, self.center.y + u * s + v * c)
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SceneKind {
    /// Infinite bright band running at `angle_deg`; its centre line sits `offset`
    /// pixels from the origin along the band's left-hand normal.
    Stripe {
        angle_deg: f64,
        thickness: f64,
        offset: f64,
        bright: u8,
    },
    Rectangles(Vec<RectSpec>),
    /// Straight edge running at `angle_deg`, bright on its left-hand side, so the
    /// true gradient direction is `angle_deg + 90`. Area sampled.
    StepEdge {
        angle_deg: f64,
        offset: f64,
        bright: u8,
    },
    SingleDot {
        at: CenteredPoint,
        intensity: u8,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub background: u8,
    pub kind: SceneKind,
    pub noise_seed: u64,
    pub noise_sigma: f64,
}

impl SceneSpec {
    pub fn new(width: usize, height: usize, kind: SceneKind) -> Self {
        Self {
            width,
            height,
            background: 0,
            kind,
            noise_seed: 0,
            noise_sigma: 0.0,
        }
    }

    pub fn with_noise(mut self, seed: u64, sigma: f64) -> Self {
        self.noise_seed = seed;
        self.noise_sigma = sigma;
        self
    }

    pub fn with_background(mut self, background: u8) -> Self {
        self.background = background;
        self
    }
}

fn in_frame(p: CenteredPoint, width: usize, height: usize) -> bool {
    let (hw, hh) = (width as f64 / 2.0, height as f64 / 2.0);
    p.x.abs() <= hw + 1e-9 && p.y.abs() <= hh + 1e-9
}

/// Renders a scene. Equal specs always produce equal images.
pub fn generate(spec: &SceneSpec) -> Result<GrayImage> {
    let (w, h) = (spec.width, spec.height);
    if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
        return Err(Error::InvalidImage(format!(
            "noise sigma must be finite and non-negative, got {}",
            spec.noise_sigma
        )));
    }
    let mut img = GrayImage::filled(w, h, spec.background)?;
    let half_diag = (w as f64).hypot(h as f64) / 2.0;

    match &spec.kind {
        SceneKind::Stripe {
            angle_deg,
            thickness,
            offset,
            bright,
        } => {
            if *thickness <= 0.0 {
                return Err(Error::SceneBounds(format!(
                    "stripe thickness must be positive, got {thickness}"
                )));
            }
            if offset.abs() - thickness / 2.0 >= half_diag {
                return Err(Error::SceneBounds(format!(
                    "stripe at offset {offset} misses the {w}x{h} image"
                )));
            }
            let (s, c) = angle_deg.to_radians().sin_cos();
            let half = thickness / 2.0;
            paint(&mut img, |p| {
                let d = -p.x * s + p.y * c - offset;
                (-half..half).contains(&d).then_some(*bright)
            });
        }
        SceneKind::Rectangles(rects) => {
            for r in rects {
                if r.a <= 0.0 || r.b <= 0.0 {
                    return Err(Error::SceneBounds(format!(
                        "rectangle sides must be positive, got {}x{}",
                        r.a, r.b
                    )));
                }
                if !r.corners().iter().all(|&p| in_frame(p, w, h)) {
                    return Err(Error::SceneBounds(format!(
                        "{}x{} rectangle at ({}, {}) leaves the {w}x{h} image",
                        r.a, r.b, r.center.x, r.center.y
                    )));
                }
            }
            paint(&mut img, |p| {
                rects.iter().rev().find(|r| r.contains(p)).map(|r| r.intensity)
            });
        }
        SceneKind::StepEdge {
            angle_deg,
            offset,
            bright,
        } => {
            if offset.abs() >= half_diag {
                return Err(Error::SceneBounds(format!(
                    "edge at offset {offset} misses the {w}x{h} image"
                )));
            }
            let (s, c) = angle_deg.to_radians().sin_cos();
            let n = STEP_SUBSAMPLES as f64;
            let (dark, bright) = (f64::from(spec.background), f64::from(*bright));
            paint(&mut img, |p| {
                let mut covered = 0usize;
                for i in 0..STEP_SUBSAMPLES {
                    for j in 0..STEP_SUBSAMPLES {
                        let x = p.x - 0.5 + (i as f64 + 0.5) / n;
                        let y = p.y - 0.5 + (j as f64 + 0.5) / n;
                        if -x * s + y * c > *offset {
                            covered += 1;
                        }
                    }
                }
                let f = covered as f64 / (n * n);
                Some((dark + f * (bright - dark)).round() as u8)
            });
        }
        SceneKind::SingleDot { at, intensity } => {
            let (col, row) = nearest_pixel(*at, w, h).ok_or_else(|| {
                Error::SceneBounds(format!("dot ({}, {}) outside {w}x{h} image", at.x, at.y))
            })?;
            img.set(col, row, *intensity);
        }
    }

    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed);
        let normal = Normal::new(0.0, spec.noise_sigma).expect("sigma validated");
        let samples: Vec<u8> = img
            .samples()
            .iter()
            .map(|&v| (f64::from(v) + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
            .collect();
        img = GrayImage::new(w, h, samples)?;
    }
    Ok(img)
}

fn paint(img: &mut GrayImage, shade: impl Fn(CenteredPoint) -> Option<u8>) {
    let (w, h) = (img.width(), img.height());
    for row in 0..h {
        for col in 0..w {
            if let Some(v) = shade(to_centered(col, row, w, h)) {
                img.set(col, row, v);
            }
        }
    }
}
