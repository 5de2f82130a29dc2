//! Command-line driver: one subcommand per pipeline stage.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::gradient::{
    canny_edges_with_norm, sobel_smoothed, EdgeMap, GradientField, MagnitudeNorm,
    DEFAULT_CANNY_HIGH, DEFAULT_LOW_RATIO,
};
use crate::hough::{hough_transform, render_accumulator, HoughParams, Transform, WeightMode};
use crate::peaks::{
    clip_to_image, draw_segment, find_peaks, line_of_peak, peaks_to_csv, segments_to_csv, Peak,
    DEFAULT_NMS_RHO, DEFAULT_NMS_THETA, DEFAULT_THRESHOLD_FRAC,
};
use crate::raster::{generate, read_pgm, write_pgm, CenteredPoint, GrayImage, RectSpec, SceneKind, SceneSpec};
use crate::rect::{hits_to_json, scan, RectTolerances, RuleSet, ScanParams};

#[derive(Parser, Debug)]
#[command(name = "orient-hough", version, about = "Gradient-oriented Hough line and rectangle detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic scene to PGM
    Synth(SynthArgs),
    /// Write Sobel gx and gy as mid-gray PGMs (128 = zero)
    Gradient {
        input: PathBuf,
        gx_out: PathBuf,
        gy_out: PathBuf,
        /// Gaussian pre-smoothing sigma, 0 disables
        #[arg(long, default_value_t = 0.0)]
        smooth_sigma: f64,
    },
    /// Write the Canny edge map as PGM (edges white)
    Edges {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        edges: EdgeArgs,
    },
    /// Write the rendered accumulator PGM and a CSV dump of nonzero bins
    Hough {
        input: PathBuf,
        image_out: PathBuf,
        csv_out: PathBuf,
        #[command(flatten)]
        edges: EdgeArgs,
        #[command(flatten)]
        hough: HoughArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Extended)]
        mode: ModeArg,
    },
    /// Write accumulator peaks as CSV
    Peaks {
        input: PathBuf,
        csv_out: PathBuf,
        #[command(flatten)]
        edges: EdgeArgs,
        #[command(flatten)]
        hough: HoughArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Extended)]
        mode: ModeArg,
        #[command(flatten)]
        peaks: PeakArgs,
    },
    /// Write detected lines as segment CSV plus an overlay PGM
    Lines {
        input: PathBuf,
        csv_out: PathBuf,
        overlay_out: PathBuf,
        #[command(flatten)]
        edges: EdgeArgs,
        #[command(flatten)]
        hough: HoughArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Extended)]
        mode: ModeArg,
        #[command(flatten)]
        peaks: PeakArgs,
    },
    /// Sliding-window rectangle detection, hits as JSON
    Rect {
        input: PathBuf,
        json_out: PathBuf,
        #[command(flatten)]
        edges: EdgeArgs,
        #[command(flatten)]
        hough: HoughArgs,
        #[command(flatten)]
        rect: RectArgs,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    /// Classical full sinusoid, theta in [-90, 90)
    Regular,
    /// Orientation-limited window, theta in [-90, 90)
    OrientedRegular,
    /// Orientation-limited window, theta in [-180, 180)
    Extended,
}

impl From<ModeArg> for Transform {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Regular => Transform::Classical,
            ModeArg::OrientedRegular => Transform::OrientedRegular,
            ModeArg::Extended => Transform::Extended,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum WeightArg {
    Unit,
    Magnitude,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum RulesArg {
    Regular,
    Extended,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum RegularTransformArg {
    Classical,
    Oriented,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SceneArg {
    Stripe,
    Rect,
    Step,
    Dot,
}

#[derive(Args, Debug)]
struct SynthArgs {
    output: PathBuf,
    #[arg(long, value_enum)]
    kind: SceneArg,
    #[arg(long, default_value_t = 200)]
    width: usize,
    #[arg(long, default_value_t = 200)]
    height: usize,
    /// Stripe or edge direction, degrees
    #[arg(long, default_value_t = 0.0)]
    angle: f64,
    /// Stripe thickness, pixels
    #[arg(long, default_value_t = 2.0)]
    thickness: f64,
    /// Stripe or edge offset from the origin along its normal, pixels
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    offset: f64,
    #[arg(long, default_value_t = 255)]
    bright: u8,
    #[arg(long, default_value_t = 0)]
    background: u8,
    /// Rectangle as cx,cy,a,b[,angle[,intensity]] in centered pixels; repeatable
    #[arg(long = "rect", allow_hyphen_values = true)]
    rects: Vec<String>,
    /// Dot position as x,y in centered pixels
    #[arg(long, allow_hyphen_values = true)]
    dot: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct EdgeArgs {
    /// Upper hysteresis threshold
    #[arg(long, default_value_t = DEFAULT_CANNY_HIGH)]
    canny_high: f64,
    /// Lower hysteresis threshold [default: low-ratio x canny-high]
    #[arg(long)]
    canny_low: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_LOW_RATIO)]
    low_ratio: f64,
    /// Gaussian pre-smoothing sigma, 0 disables
    #[arg(long, default_value_t = 0.0)]
    smooth_sigma: f64,
    /// Use |gx| + |gy| instead of the Euclidean magnitude
    #[arg(long)]
    l1: bool,
}

#[derive(Args, Debug)]
struct HoughArgs {
    #[arg(long, default_value_t = HoughParams::default().delta_theta)]
    delta_theta: f64,
    #[arg(long, default_value_t = HoughParams::default().delta_rho)]
    delta_rho: f64,
    /// Half-width of the orientation window, degrees
    #[arg(long, default_value_t = HoughParams::default().theta_window)]
    theta_window: f64,
    #[arg(long, value_enum, default_value_t = WeightArg::Unit)]
    weight: WeightArg,
}

#[derive(Args, Debug)]
struct PeakArgs {
    /// Keep peaks at or above this fraction of the maximum
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_FRAC)]
    threshold_frac: f64,
    #[arg(long, default_value_t = DEFAULT_NMS_THETA)]
    nms_theta: f64,
    #[arg(long, default_value_t = DEFAULT_NMS_RHO)]
    nms_rho: f64,
}

#[derive(Args, Debug)]
struct RectArgs {
    #[arg(long, value_enum, default_value_t = RulesArg::Extended)]
    rules: RulesArg,
    /// Odd window side, pixels
    #[arg(long, default_value_t = ScanParams::default().window_size)]
    window: usize,
    #[arg(long, default_value_t = ScanParams::default().stride)]
    stride: usize,
    #[arg(long, default_value_t = RectTolerances::default().tol_theta)]
    tol_theta: f64,
    #[arg(long, default_value_t = RectTolerances::default().tol_orth)]
    tol_orth: f64,
    #[arg(long, default_value_t = RectTolerances::default().tol_rho)]
    tol_rho: f64,
    #[arg(long, default_value_t = RectTolerances::default().tol_height)]
    tol_height: f64,
    /// Also match each pair's peak height against the other pair's side
    #[arg(long)]
    strict_heights: bool,
    #[arg(long, default_value_t = ScanParams::default().threshold_frac)]
    peak_threshold: f64,
    #[arg(long, default_value_t = ScanParams::default().nms_theta)]
    peak_nms_theta: f64,
    #[arg(long, default_value_t = ScanParams::default().nms_rho)]
    peak_nms_rho: f64,
    #[arg(long, default_value_t = ScanParams::default().peak_cap)]
    peak_cap: usize,
    #[arg(long, default_value_t = ScanParams::default().min_votes)]
    min_votes: f64,
    /// Transform behind the regular rule set
    #[arg(long, value_enum, default_value_t = RegularTransformArg::Classical)]
    regular_transform: RegularTransformArg,
}

enum Failure {
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Pgm(_) => Failure::Io(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn read_image(path: &Path) -> Result<GrayImage, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    read_pgm(&bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

impl EdgeArgs {
    fn norm(&self) -> MagnitudeNorm {
        if self.l1 {
            MagnitudeNorm::L1
        } else {
            MagnitudeNorm::L2
        }
    }

    fn run(&self, img: &GrayImage) -> Result<(GradientField, EdgeMap), Failure> {
        let grad = sobel_smoothed(img, self.smooth_sigma)?;
        let low = self.canny_low.unwrap_or(self.low_ratio * self.canny_high);
        let edges = canny_edges_with_norm(&grad, self.canny_high, low, self.norm())?;
        Ok((grad, edges))
    }
}

impl HoughArgs {
    fn params(&self) -> HoughParams {
        HoughParams {
            delta_rho: self.delta_rho,
            delta_theta: self.delta_theta,
            theta_window: self.theta_window,
            weight_mode: match self.weight {
                WeightArg::Unit => WeightMode::Unit,
                WeightArg::Magnitude => WeightMode::Magnitude,
            },
        }
    }
}

fn parse_reals(s: &str, what: &str, min: usize, max: usize) -> Result<Vec<f64>, Failure> {
    let vals: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match vals {
        Ok(v) if (min..=max).contains(&v.len()) => Ok(v),
        _ => Err(Failure::Usage(format!("bad {what} '{s}'"))),
    }
}

fn synth(args: &SynthArgs) -> Result<(), Failure> {
    let kind = match args.kind {
        SceneArg::Stripe => SceneKind::Stripe {
            angle_deg: args.angle,
            thickness: args.thickness,
            offset: args.offset,
            bright: args.bright,
        },
        SceneArg::Step => SceneKind::StepEdge {
            angle_deg: args.angle,
            offset: args.offset,
            bright: args.bright,
        },
        SceneArg::Dot => {
            let v = parse_reals(args.dot.as_deref().unwrap_or("0,0"), "--dot", 2, 2)?;
            SceneKind::SingleDot {
                at: CenteredPoint::new(v[0], v[1]),
                intensity: args.bright,
            }
        }
        SceneArg::Rect => {
            if args.rects.is_empty() {
                return Err(Failure::Usage("--kind rect needs at least one --rect".into()));
            }
            let rects = args
                .rects
                .iter()
                .map(|s| {
                    let v = parse_reals(s, "--rect", 4, 6)?;
                    let intensity = match v.get(5) {
                        Some(&i) if (0.0..=255.0).contains(&i) => i as u8,
                        Some(_) => return Err(Failure::Usage(format!("bad intensity in '{s}'"))),
                        None => args.bright,
                    };
                    Ok(RectSpec {
                        center: CenteredPoint::new(v[0], v[1]),
                        a: v[2],
                        b: v[3],
                        angle_deg: v.get(4).copied().unwrap_or(0.0),
                        intensity,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            SceneKind::Rectangles(rects)
        }
    };
    let spec = SceneSpec {
        width: args.width,
        height: args.height,
        background: args.background,
        kind,
        noise_seed: args.seed,
        noise_sigma: args.noise_sigma,
    };
    let img = generate(&spec)?;
    write_file(&args.output, &write_pgm(&img))
}

fn detect_peaks(
    input: &Path,
    edges: &EdgeArgs,
    hough: &HoughArgs,
    mode: ModeArg,
    peaks: &PeakArgs,
) -> Result<(GrayImage, Vec<Peak>), Failure> {
    let img = read_image(input)?;
    let (grad, edge_map) = edges.run(&img)?;
    let acc = hough_transform(&edge_map, &grad, mode.into(), &hough.params())?;
    let found = find_peaks(&acc, peaks.threshold_frac, peaks.nms_theta, peaks.nms_rho)?;
    Ok((img, found))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Synth(args) => synth(&args),
        Command::Gradient {
            input,
            gx_out,
            gy_out,
            smooth_sigma,
        } => {
            let img = read_image(&input)?;
            let (gx, gy) = sobel_smoothed(&img, smooth_sigma)?.to_images();
            write_file(&gx_out, &write_pgm(&gx))?;
            write_file(&gy_out, &write_pgm(&gy))
        }
        Command::Edges {
            input,
            output,
            edges,
        } => {
            let img = read_image(&input)?;
            let (_, map) = edges.run(&img)?;
            write_file(&output, &write_pgm(&map.to_image()))
        }
        Command::Hough {
            input,
            image_out,
            csv_out,
            edges,
            hough,
            mode,
        } => {
            let img = read_image(&input)?;
            let (grad, map) = edges.run(&img)?;
            let acc = hough_transform(&map, &grad, mode.into(), &hough.params())?;
            write_file(&image_out, &write_pgm(&render_accumulator(&acc)))?;
            write_file(&csv_out, acc.to_csv().as_bytes())
        }
        Command::Peaks {
            input,
            csv_out,
            edges,
            hough,
            mode,
            peaks,
        } => {
            let (_, found) = detect_peaks(&input, &edges, &hough, mode, &peaks)?;
            write_file(&csv_out, peaks_to_csv(&found).as_bytes())
        }
        Command::Lines {
            input,
            csv_out,
            overlay_out,
            edges,
            hough,
            mode,
            peaks,
        } => {
            let (mut img, found) = detect_peaks(&input, &edges, &hough, mode, &peaks)?;
            let (w, h) = (img.width(), img.height());
            let rows: Vec<_> = found
                .iter()
                .filter_map(|p| clip_to_image(&line_of_peak(p), w, h).map(|s| (*p, s)))
                .collect();
            for (_, seg) in &rows {
                draw_segment(&mut img, seg, 0);
            }
            write_file(&csv_out, segments_to_csv(&rows, w, h).as_bytes())?;
            write_file(&overlay_out, &write_pgm(&img))
        }
        Command::Rect {
            input,
            json_out,
            edges,
            hough,
            rect,
        } => {
            let img = read_image(&input)?;
            let (grad, map) = edges.run(&img)?;
            let tol = RectTolerances {
                tol_theta: rect.tol_theta,
                tol_orth: rect.tol_orth,
                tol_rho: rect.tol_rho,
                tol_height: rect.tol_height,
                strict_heights: rect.strict_heights,
            };
            let scan_params = ScanParams {
                window_size: rect.window,
                stride: rect.stride,
                threshold_frac: rect.peak_threshold,
                nms_theta: rect.peak_nms_theta,
                nms_rho: rect.peak_nms_rho,
                peak_cap: rect.peak_cap,
                min_votes: rect.min_votes,
                regular_transform: match rect.regular_transform {
                    RegularTransformArg::Classical => Transform::Classical,
                    RegularTransformArg::Oriented => Transform::OrientedRegular,
                },
            };
            let rules = match rect.rules {
                RulesArg::Regular => RuleSet::Regular,
                RulesArg::Extended => RuleSet::Extended,
            };
            let hits = scan(&map, &grad, &hough.params(), &scan_params, &tol, rules)?;
            let mut json = hits_to_json(&hits);
            json.push('\n');
            write_file(&json_out, json.as_bytes())
        }
    }
}

/// Runs the CLI on `argv` (program name first). Returns the process exit code:
/// 0 on success, 1 on usage errors, 2 on I/O or parse errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                eprintln!("orient-hough: missing subcommand or argument, see --help");
                return 1;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("orient-hough: {}", first.trim_start_matches("error: "));
            return 1;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("orient-hough: {msg}");
            1
        }
        Err(Failure::Io(msg)) => {
            eprintln!("orient-hough: {msg}");
            2
        }
    }
}
