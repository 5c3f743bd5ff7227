//! Command-line front end and the programmatic run surface.
//!
//! Flag parsing resolves into a [`RunConfig`], a plain serializable
//! value describing one command; [`run`] turns a config into a
//! [`Report`] plus an exit code. The C ABI drives the same `RunConfig`
//! surface with JSON, so the two front ends cannot drift apart.
//!
//! Exit codes: 0 for certified success or completed numerical evidence,
//! 1 for usage and environment errors, 2 for a certified refutation of
//! an asserted property, 3 for an indeterminate verdict.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::covering::{
    build_matrix, check_cover, covering_boxes, entropy_lower_bound, CoverVerdict,
    MarkedQuadrilateral,
};
use crate::error::{Error, Result};
use crate::fixed_points::{enumerate_fixed_points, f2_point};
use crate::map::LoziParams;
use crate::perturbation::{coefficient_drift, covering_family_check, PairCheck};
use crate::rational::Rational;
use crate::report::{approx_rows, to_csv, Payload, Report, Rigor};
use crate::simulation::{
    critical_line, estimate_entropy, first_x_axis_crossing, lozi_apply_f64, trace_unstable,
    unstable_seed, TraceSide, Viewport,
};
use crate::svg::render_svg;
use crate::trapping::{contraction_diagnostic, trapping_region_for, verify_trapping};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_REFUTED: u8 = 2;
pub const EXIT_INDETERMINATE: u8 = 3;

/// A fully resolved command, independent of flag spelling.
///
/// Box-pair assertions are 0-based here; the flag syntax is 1-based to
/// match the box names N1, N2 in reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    FixedPoints {
        params: LoziParams,
        period: usize,
    },
    Covering {
        params: LoziParams,
        n: usize,
        boxes: Vec<MarkedQuadrilateral>,
        #[serde(default)]
        asserted: Vec<(usize, usize)>,
    },
    EntropyBound {
        eps1: Rational,
        eps2: Rational,
    },
    Trapping {
        params: LoziParams,
        period: usize,
        steps: usize,
    },
    Perturb {
        eps2: Rational,
    },
    JumpDemo {
        eps1: Rational,
        eps2: Rational,
    },
    Trace {
        params: LoziParams,
        side: TraceSide,
        arclength: f64,
        refine_tol: f64,
    },
    CriticalLines {
        params: LoziParams,
        depth: usize,
    },
    EstimateEntropy {
        params: LoziParams,
        n: usize,
        eps: f64,
        grid: usize,
        #[serde(rename = "box")]
        window: Viewport,
    },
}

/// A finished run: the report and the exit code its verdict maps to.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: Report,
    pub exit: u8,
}

/// Exit code for an error that prevented a report from being produced.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::IndeterminateSign { .. } => EXIT_INDETERMINATE,
        _ => EXIT_USAGE,
    }
}

fn generator() -> String {
    format!("lozi {}", env!("CARGO_PKG_VERSION"))
}

fn report(
    command: &str,
    params: LoziParams,
    rigor: Rigor,
    summary: String,
    payload: Payload,
) -> Report {
    Report {
        command: command.into(),
        params,
        rigor,
        summary,
        generator: Some(generator()),
        payload,
    }
}

/// Execute one resolved command.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    match config {
        RunConfig::FixedPoints { params, period } => {
            let set = enumerate_fixed_points(params, *period)?;
            let summary = format!(
                "{} isolated fixed points and {} fixed segments of the {}-fold map",
                set.points.len(),
                set.segments.len(),
                period
            );
            Ok(RunOutput {
                report: report(
                    "fixed-points",
                    params.clone(),
                    Rigor::Certified,
                    summary,
                    Payload::FixedPoints { set },
                ),
                exit: EXIT_OK,
            })
        }
        RunConfig::Covering {
            params,
            n,
            boxes,
            asserted,
        } => {
            if boxes.is_empty() {
                return Err(Error::Usage("at least one box is required".into()));
            }
            for &(i, j) in asserted {
                if i >= boxes.len() || j >= boxes.len() {
                    return Err(Error::Usage(format!(
                        "asserted pair ({}, {}) is out of range for {} boxes",
                        i + 1,
                        j + 1,
                        boxes.len()
                    )));
                }
            }
            let mut checks = Vec::with_capacity(boxes.len() * boxes.len());
            let mut grid = Vec::with_capacity(boxes.len());
            for (i, from) in boxes.iter().enumerate() {
                let mut row = Vec::with_capacity(boxes.len());
                for (j, to) in boxes.iter().enumerate() {
                    let verdict = check_cover(params, *n, from, to)?;
                    checks.push(PairCheck {
                        from: i,
                        to: j,
                        verdict: verdict.clone(),
                    });
                    row.push(verdict);
                }
                grid.push(row);
            }
            let matrix = build_matrix(&grid)?;
            let bound = entropy_lower_bound(&matrix, *n)?;

            let mut refuted = None;
            let mut open = None;
            for &(i, j) in asserted {
                match &grid[i][j] {
                    CoverVerdict::NotCovered { .. } => {
                        refuted.get_or_insert((i, j));
                    }
                    CoverVerdict::Indeterminate { .. } => {
                        open.get_or_insert((i, j));
                    }
                    CoverVerdict::Covered { .. } => {}
                }
            }
            let covered = checks.iter().filter(|c| c.verdict.is_covered()).count();
            let mut summary = format!(
                "{covered} of {} directed covers certified for the {n}-fold map; entropy bound {:.6}",
                checks.len(),
                bound.bound
            );
            let exit = if let Some((i, j)) = refuted {
                summary = format!("asserted cover N{} => N{} refuted; {summary}", i + 1, j + 1);
                EXIT_REFUTED
            } else if let Some((i, j)) = open {
                summary = format!(
                    "asserted cover N{} => N{} indeterminate; {summary}",
                    i + 1,
                    j + 1
                );
                EXIT_INDETERMINATE
            } else {
                EXIT_OK
            };
            Ok(RunOutput {
                report: report(
                    "covering",
                    params.clone(),
                    Rigor::Certified,
                    summary,
                    Payload::Covering {
                        n: *n,
                        boxes: boxes.clone(),
                        checks,
                        asserted: asserted.clone(),
                        matrix,
                        bound,
                    },
                ),
                exit,
            })
        }
        RunConfig::EntropyBound { eps1, eps2 } => {
            let family = covering_family_check(eps1, eps2)?;
            let params = family.params.clone();
            let open = family
                .checks
                .iter()
                .filter(|c| matches!(c.verdict, CoverVerdict::Indeterminate { .. }))
                .count();
            let mut summary = format!(
                "certified entropy lower bound {:.6} for the {}-fold map at a = {}, b = {}",
                family.bound.bound, family.bound.n, params.a, params.b
            );
            if open > 0 {
                summary.push_str(&format!("; {open} indeterminate pairs counted as zero"));
            }
            Ok(RunOutput {
                report: report(
                    "entropy-bound",
                    params,
                    Rigor::Certified,
                    summary,
                    Payload::EntropyBound { family },
                ),
                exit: EXIT_OK,
            })
        }
        RunConfig::Trapping {
            params,
            period,
            steps,
        } => {
            let region = trapping_region_for(params)?;
            let certificate = verify_trapping(params, *period, &region, *steps)?;
            let contraction_evidence = contraction_diagnostic(params, &certificate)?;
            let (exit, summary) = if certificate.passed {
                (
                    EXIT_OK,
                    format!(
                        "the region traps its first {} {}-fold images, piece by piece, with exact area bookkeeping",
                        steps, period
                    ),
                )
            } else {
                let (s, i) = certificate
                    .first_offender
                    .expect("failed certificate has an offender");
                (
                    EXIT_REFUTED,
                    format!("trapping refuted: piece {i} of macro step {s} escapes the region"),
                )
            };
            Ok(RunOutput {
                report: report(
                    "trapping",
                    params.clone(),
                    Rigor::Certified,
                    summary,
                    Payload::Trapping {
                        region,
                        certificate,
                        contraction_evidence,
                    },
                ),
                exit,
            })
        }
        RunConfig::Perturb { eps2 } => {
            let table = coefficient_drift(eps2)?;
            let approx = approx_rows(&table);
            let max_drift_evidence = table.max_drift.to_f64();
            let params = LoziParams::segment(eps2);
            let mut summary = format!(
                "max linear-coefficient drift {} (about {:.6}) across the 8 box vertices at eps2 = {}",
                table.max_drift, max_drift_evidence, eps2
            );
            if table.outside_guard {
                summary.push_str("; outside the |eps2| <= 1/100 validity guard");
            }
            Ok(RunOutput {
                report: report(
                    "perturb",
                    params,
                    Rigor::Certified,
                    summary,
                    Payload::Perturb {
                        table,
                        approx,
                        max_drift_evidence,
                    },
                ),
                exit: EXIT_OK,
            })
        }
        RunConfig::JumpDemo { eps1, eps2 } => {
            let params = LoziParams::segment(eps2);
            let fixed_points = enumerate_fixed_points(&params, 4)?;
            let region = trapping_region_for(&params)?;
            let trapping = verify_trapping(&params, 4, &region, 2)?;
            let family = covering_family_check(eps1, eps2)?;

            let mut refuted = Vec::new();
            let mut open = Vec::new();
            if fixed_points.segments.len() != 2 {
                refuted.push(format!(
                    "expected 2 fixed segments, found {}",
                    fixed_points.segments.len()
                ));
            }
            if !trapping.passed {
                refuted.push("the trapping region fails".to_owned());
            }
            for check in &family.checks {
                // The demo asserts the three covers that give the matrix
                // its spectral radius; the fourth pair is expected open.
                if (check.from, check.to) == (1, 1) {
                    continue;
                }
                match &check.verdict {
                    CoverVerdict::NotCovered { .. } => refuted.push(format!(
                        "cover N{} => N{} refuted",
                        check.from + 1,
                        check.to + 1
                    )),
                    CoverVerdict::Indeterminate { .. } => open.push(format!(
                        "cover N{} => N{} indeterminate",
                        check.from + 1,
                        check.to + 1
                    )),
                    CoverVerdict::Covered { .. } => {}
                }
            }
            let (exit, summary) = if !refuted.is_empty() {
                (
                    EXIT_REFUTED,
                    format!("entropy jump refuted: {}", refuted.join("; ")),
                )
            } else if !open.is_empty() {
                (
                    EXIT_INDETERMINATE,
                    format!("entropy jump indeterminate: {}", open.join("; ")),
                )
            } else {
                (
                    EXIT_OK,
                    format!(
                        "at (a, b) = ({}, {}) the map keeps 2 fixed segments inside a trapping region; shifting a by {} forces entropy at least {:.6}",
                        params.a, params.b, eps1, family.bound.bound
                    ),
                )
            };
            Ok(RunOutput {
                report: report(
                    "jump-demo",
                    params,
                    Rigor::Certified,
                    summary,
                    Payload::JumpDemo {
                        fixed_points,
                        region,
                        trapping,
                        family,
                    },
                ),
                exit,
            })
        }
        RunConfig::Trace {
            params,
            side,
            arclength,
            refine_tol,
        } => {
            let line = trace_unstable(params, *side, *arclength, *refine_tol)?;
            let first_axis_crossing_evidence = first_x_axis_crossing(&line);
            let steps_until_region_evidence = steps_until_region(params, *side);
            let summary = format!(
                "{} unstable component: {} points, arclength {:.3}{}",
                match side {
                    TraceSide::Left => "left",
                    TraceSide::Right => "right",
                },
                line.points.len(),
                line.length(),
                if line.escaped {
                    "; an orbit left the escape radius"
                } else {
                    ""
                }
            );
            Ok(RunOutput {
                report: report(
                    "trace",
                    params.clone(),
                    Rigor::NumericalEvidence,
                    summary,
                    Payload::Trace {
                        line,
                        first_axis_crossing_evidence,
                        steps_until_region_evidence,
                    },
                ),
                exit: EXIT_OK,
            })
        }
        RunConfig::CriticalLines { params, depth } => {
            let lines = critical_line(params, *depth)?;
            let summary = format!(
                "{} pullback levels of the singularity line and one 4-fold image fragment, {} polylines in all",
                depth,
                lines.len()
            );
            Ok(RunOutput {
                report: report(
                    "critical-lines",
                    params.clone(),
                    Rigor::NumericalEvidence,
                    summary,
                    Payload::CriticalLines {
                        depth: *depth,
                        lines,
                    },
                ),
                exit: EXIT_OK,
            })
        }
        RunConfig::EstimateEntropy {
            params,
            n,
            eps,
            grid,
            window,
        } => {
            let estimate = estimate_entropy(params, *n, *eps, window, *grid)?;
            let summary = format!(
                "entropy estimate {:.4} from {} ({}, {})-separated orbits over a {}-point grid",
                estimate.estimate, estimate.count, n, eps, grid
            );
            Ok(RunOutput {
                report: report(
                    "estimate-entropy",
                    params.clone(),
                    Rigor::NumericalEvidence,
                    summary,
                    Payload::EntropyEstimate { estimate },
                ),
                exit: EXIT_OK,
            })
        }
    }
}

/// Empirical number of `4`-fold steps the trace seed takes to enter the
/// trapping region, when the parameters admit one.
fn steps_until_region(p: &LoziParams, side: TraceSide) -> Option<usize> {
    let region = trapping_region_for(p).ok()?;
    let verts: Vec<[f64; 2]> = region.vertices().iter().map(|v| v.to_f64()).collect();
    let inside = |q: [f64; 2]| {
        (0..verts.len()).all(|i| {
            let u = verts[i];
            let w = verts[(i + 1) % verts.len()];
            (w[0] - u[0]) * (q[1] - u[1]) - (w[1] - u[1]) * (q[0] - u[0]) >= -1e-9
        })
    };
    let (a, b) = (p.a.to_f64(), p.b.to_f64());
    let mut q = unstable_seed(p, side).ok()?;
    for m in 0..=512 {
        if inside(q) {
            return Some(m);
        }
        for _ in 0..4 {
            q = lozi_apply_f64(a, b, q);
        }
        if !q[0].is_finite() || !q[1].is_finite() {
            return None;
        }
    }
    None
}

fn parse_rational(flag: &str, token: &str) -> Result<Rational> {
    token
        .parse()
        .map_err(|_| Error::Usage(format!("--{flag}: cannot parse rational from {token:?}")))
}

/// 1-based "I,J" pair to 0-based indices.
fn parse_assert_pair(s: &str) -> Result<(usize, usize)> {
    let bad = || {
        Error::Usage(format!(
            "cannot parse box pair from {s:?}; expected 1-based indices like 1,2"
        ))
    };
    let (i, j) = s.split_once(',').ok_or_else(bad)?;
    let i: usize = i.trim().parse().map_err(|_| bad())?;
    let j: usize = j.trim().parse().map_err(|_| bad())?;
    if i == 0 || j == 0 {
        return Err(bad());
    }
    Ok((i - 1, j - 1))
}

fn parse_window(s: &str) -> Result<Viewport> {
    let bad = || {
        Error::Usage(format!(
            "cannot parse window from {s:?}; expected four numbers x0,y0,x1,y1"
        ))
    };
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    if parts.len() != 4 {
        return Err(bad());
    }
    Ok(Viewport {
        min: [parts[0], parts[1]],
        max: [parts[2], parts[3]],
    })
}

#[derive(Parser, Debug)]
#[command(
    name = "lozi",
    version,
    about = "Exact certificates and numerical evidence for the Lozi family"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report to a file instead of stdout; a .csv extension
    /// selects CSV point output for polyline reports.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Also render the report geometry to an SVG file.
    #[arg(long, global = true, value_name = "PATH")]
    svg: Option<PathBuf>,
    /// Comma-separated layer names to keep in the SVG (default: all).
    #[arg(long, global = true, value_name = "NAMES", value_delimiter = ',')]
    layers: Option<Vec<String>>,
    /// Strip environment metadata so report bytes are reproducible.
    #[arg(long, global = true)]
    canonical: bool,
}

#[derive(Args, Debug)]
struct MapArgs {
    /// Map parameter a, an exact rational such as 7/5 (default 7/5).
    #[arg(long, value_name = "RATIONAL", allow_hyphen_values = true)]
    a: Option<String>,
    /// Map parameter b, an exact rational such as 2/5 (default 2/5).
    #[arg(long, value_name = "RATIONAL", allow_hyphen_values = true)]
    b: Option<String>,
}

impl MapArgs {
    fn resolve(&self) -> Result<LoziParams> {
        Ok(self.resolve_explicit()?.unwrap_or_else(|| {
            LoziParams::new(Rational::new(7, 5).unwrap(), Rational::new(2, 5).unwrap())
        }))
    }

    /// `None` when neither flag was given, so callers can fall back to a
    /// derived default.
    fn resolve_explicit(&self) -> Result<Option<LoziParams>> {
        if self.a.is_none() && self.b.is_none() {
            return Ok(None);
        }
        let a = parse_rational("a", self.a.as_deref().unwrap_or("7/5"))?;
        let b = parse_rational("b", self.b.as_deref().unwrap_or("2/5"))?;
        Ok(Some(LoziParams::new(a, b)))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate all fixed points and fixed segments of the n-fold map.
    FixedPoints {
        #[command(flatten)]
        map: MapArgs,
        /// Iterate count n of the composed map.
        #[arg(long, default_value_t = 4)]
        period: usize,
    },
    /// Run directed covering checks between boxes and bound the entropy.
    Covering {
        #[command(flatten)]
        map: MapArgs,
        /// Box scale, an exact positive rational.
        #[arg(
            long,
            value_name = "RATIONAL",
            allow_hyphen_values = true,
            default_value = "1/1000"
        )]
        eps1: String,
        /// Offset along the zero-entropy parameter line.
        #[arg(
            long,
            value_name = "RATIONAL",
            allow_hyphen_values = true,
            default_value = "0"
        )]
        eps2: String,
        /// Iterate count of the composed map (default 4).
        #[arg(long)]
        period: Option<usize>,
        /// JSON file with custom boxes: {"boxes": [...], "n": 4,
        /// "assert": [[1, 2]], "a": "7/5", "b": "2/5"}.
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        /// Assert that box I covers box J (1-based pair "I,J");
        /// repeatable, overrides assertions from --config.
        #[arg(long = "assert", value_name = "I,J")]
        assert_pairs: Vec<String>,
    },
    /// Certify the entropy lower bound for the shifted parameters.
    EntropyBound {
        /// Box scale, an exact positive rational.
        #[arg(
            long,
            value_name = "RATIONAL",
            allow_hyphen_values = true,
            default_value = "1/1000"
        )]
        eps1: String,
        /// Offset along the zero-entropy parameter line.
        #[arg(
            long,
            value_name = "RATIONAL",
            allow_hyphen_values = true,
            default_value = "0"
        )]
        eps2: String,
    },
    /// Verify the trapping region around the 4-fold fixed segment.
    Trapping {
        #[command(flatten)]
        map: MapArgs,
        /// Iterate count of the composed map.
        #[arg(long, default_value_t = 4)]
        period: usize,
        /// Number of macro steps to verify.
        #[arg(long, default_value_t = 2)]
        iterate: usize,
    },
    /// First-order expansion of box-vertex images along the parameter
    /// line, with the drift of the linear coefficients.
    Perturb {
        /// Offset along the zero-entropy parameter line.
        #[arg(
            long,
            value_name = "RATIONAL",
            allow_hyphen_values = true,
            default_value = "1/1000"
        )]
        eps2: String,
    },
    /// The full discontinuity demonstration at one (eps1, eps2): fixed
    /// segments and a trapping region on the line, a covering matrix and
    /// entropy bound off it.
    JumpDemo {
        /// Box scale, an exact positive rational.
        #[arg(
            long,
            value_name = "RATIONAL",
            allow_hyphen_values = true,
            default_value = "1/1000"
        )]
        eps1: String,
        /// Offset along the zero-entropy parameter line.
        #[arg(
            long,
            value_name = "RATIONAL",
            allow_hyphen_values = true,
            default_value = "0"
        )]
        eps2: String,
    },
    /// Trace a component of the unstable manifold of the positive-branch
    /// saddle.
    Trace {
        #[command(flatten)]
        map: MapArgs,
        /// Which component to trace.
        #[arg(long, value_enum, default_value_t = SideArg::Left)]
        side: SideArg,
        /// Stop once the polyline reaches this arclength.
        #[arg(long, default_value_t = 20.0)]
        arclength: f64,
        /// Image-gap refinement tolerance.
        #[arg(long, default_value_t = 1e-3)]
        refine_tol: f64,
    },
    /// Exact pullbacks of the singularity line, as plot-ready polylines.
    CriticalLines {
        #[command(flatten)]
        map: MapArgs,
        /// Number of pullback levels.
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Non-rigorous separated-set entropy estimate on a deterministic
    /// grid of starting points.
    EstimateEntropy {
        #[command(flatten)]
        map: MapArgs,
        /// Observation window length.
        #[arg(long, default_value_t = 14)]
        n: usize,
        /// Separation threshold.
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        /// Number of grid starting points.
        #[arg(long, default_value_t = 200_000)]
        grid: usize,
        /// Seed window "x0,y0,x1,y1" (default the [-2, 2] square).
        #[arg(long = "box", value_name = "X0,Y0,X1,Y1", allow_hyphen_values = true)]
        window: Option<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum SideArg {
    Left,
    Right,
}

impl From<SideArg> for TraceSide {
    fn from(side: SideArg) -> Self {
        match side {
            SideArg::Left => TraceSide::Left,
            SideArg::Right => TraceSide::Right,
        }
    }
}

/// On-disk shape of a `--config` box file. Assertions are 1-based.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxFile {
    a: Option<Rational>,
    b: Option<Rational>,
    n: Option<usize>,
    boxes: Vec<MarkedQuadrilateral>,
    #[serde(default)]
    assert: Vec<(usize, usize)>,
}

fn resolve_covering(
    map: &MapArgs,
    eps1: &str,
    eps2: &str,
    period: Option<usize>,
    config: &Option<PathBuf>,
    assert_pairs: &[String],
) -> Result<RunConfig> {
    let eps1 = parse_rational("eps1", eps1)?;
    let eps2 = parse_rational("eps2", eps2)?;
    let mut params = map.resolve_explicit()?;
    let mut n = period;
    let mut asserted: Vec<(usize, usize)> = Vec::new();

    let boxes = if let Some(path) = config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
        let file: BoxFile = serde_json::from_str(&text)
            .map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
        if file.boxes.is_empty() {
            return Err(Error::Usage(format!("{}: no boxes given", path.display())));
        }
        params = params.or(match (file.a, file.b) {
            (Some(a), Some(b)) => Some(LoziParams::new(a, b)),
            (None, None) => None,
            _ => {
                return Err(Error::Usage(format!(
                    "{}: set both a and b or neither",
                    path.display()
                )))
            }
        });
        n = n.or(file.n);
        for &(i, j) in &file.assert {
            if i == 0 || j == 0 {
                return Err(Error::Usage(format!(
                    "{}: assertions are 1-based box pairs",
                    path.display()
                )));
            }
            asserted.push((i - 1, j - 1));
        }
        file.boxes
    } else {
        let seg = LoziParams::segment(&eps2);
        let f = f2_point(&seg)?;
        let (n1, n2) = covering_boxes(&eps1, &f.y)?;
        vec![n1, n2]
    };

    if !assert_pairs.is_empty() {
        asserted = assert_pairs
            .iter()
            .map(|s| parse_assert_pair(s))
            .collect::<Result<_>>()?;
    }
    let params = match params {
        Some(p) => p,
        None => {
            let seg = LoziParams::segment(&eps2);
            LoziParams::new(&seg.a + &eps1, seg.b)
        }
    };
    Ok(RunConfig::Covering {
        params,
        n: n.unwrap_or(4),
        boxes,
        asserted,
    })
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    match &cli.command {
        Command::FixedPoints { map, period } => Ok(RunConfig::FixedPoints {
            params: map.resolve()?,
            period: *period,
        }),
        Command::Covering {
            map,
            eps1,
            eps2,
            period,
            config,
            assert_pairs,
        } => resolve_covering(map, eps1, eps2, *period, config, assert_pairs),
        Command::EntropyBound { eps1, eps2 } => Ok(RunConfig::EntropyBound {
            eps1: parse_rational("eps1", eps1)?,
            eps2: parse_rational("eps2", eps2)?,
        }),
        Command::Trapping {
            map,
            period,
            iterate,
        } => Ok(RunConfig::Trapping {
            params: map.resolve()?,
            period: *period,
            steps: *iterate,
        }),
        Command::Perturb { eps2 } => Ok(RunConfig::Perturb {
            eps2: parse_rational("eps2", eps2)?,
        }),
        Command::JumpDemo { eps1, eps2 } => Ok(RunConfig::JumpDemo {
            eps1: parse_rational("eps1", eps1)?,
            eps2: parse_rational("eps2", eps2)?,
        }),
        Command::Trace {
            map,
            side,
            arclength,
            refine_tol,
        } => Ok(RunConfig::Trace {
            params: map.resolve()?,
            side: (*side).into(),
            arclength: *arclength,
            refine_tol: *refine_tol,
        }),
        Command::CriticalLines { map, depth } => Ok(RunConfig::CriticalLines {
            params: map.resolve()?,
            depth: *depth,
        }),
        Command::EstimateEntropy {
            map,
            n,
            eps,
            grid,
            window,
        } => Ok(RunConfig::EstimateEntropy {
            params: map.resolve()?,
            n: *n,
            eps: *eps,
            grid: *grid,
            window: match window {
                Some(s) => parse_window(s)?,
                None => Viewport::default(),
            },
        }),
    }
}

fn execute(cli: &Cli) -> Result<u8> {
    if cli.layers.is_some() && cli.svg.is_none() {
        return Err(Error::Usage("--layers requires --svg".into()));
    }
    let config = resolve(cli)?;
    let RunOutput { mut report, exit } = run(&config)?;
    if cli.canonical {
        report.generator = None;
    }
    let wants_csv = cli
        .out
        .as_deref()
        .is_some_and(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")));
    let body = if wants_csv {
        to_csv(&report)?
    } else {
        report.to_json_pretty()
    };
    match &cli.out {
        Some(path) => fs::write(path, &body)
            .map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{body}"),
    }
    if let Some(path) = &cli.svg {
        let drawing = render_svg(&report, cli.layers.as_deref())?;
        fs::write(path, &drawing)
            .map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(exit)
}

/// Parse `std::env::args`, run, and return the process exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if informational {
                0
            } else {
                i32::from(EXIT_USAGE)
            };
        }
    };
    match execute(&cli) {
        Ok(code) => i32::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            i32::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn segment_params() -> LoziParams {
        LoziParams::new(rat(7, 5), rat(2, 5))
    }

    fn default_covering_config(asserted: Vec<(usize, usize)>) -> RunConfig {
        let f = f2_point(&segment_params()).unwrap();
        let (n1, n2) = covering_boxes(&rat(1, 1000), &f.y).unwrap();
        RunConfig::Covering {
            params: LoziParams::new(rat(7, 5) + rat(1, 1000), rat(2, 5)),
            n: 4,
            boxes: vec![n1, n2],
            asserted,
        }
    }

    #[test]
    fn covering_run_reproduces_the_two_box_matrix() {
        let out = run(&default_covering_config(Vec::new())).unwrap();
        assert_eq!(out.exit, EXIT_OK);
        match &out.report.payload {
            Payload::Covering { matrix, bound, .. } => {
                assert_eq!(matrix.entries, vec![vec![1, 1], vec![1, 0]]);
                assert!(bound.bound > 0.1203 && bound.bound < 0.12031);
            }
            other => panic!("unexpected payload {other:?}"),
        }
        assert!(out.report.summary.contains("3 of 4"));
    }

    #[test]
    fn refuted_assertion_exits_two() {
        let out = run(&default_covering_config(vec![(1, 1)])).unwrap();
        assert_eq!(out.exit, EXIT_REFUTED);
        assert!(out
            .report
            .summary
            .starts_with("asserted cover N2 => N2 refuted"));
    }

    #[test]
    fn passing_assertions_exit_zero() {
        let out = run(&default_covering_config(vec![(0, 0), (0, 1), (1, 0)])).unwrap();
        assert_eq!(out.exit, EXIT_OK);
    }

    #[test]
    fn out_of_range_assertions_are_usage_errors() {
        let err = run(&default_covering_config(vec![(0, 2)])).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    #[test]
    fn jump_demo_certifies_both_sides() {
        let config = RunConfig::JumpDemo {
            eps1: rat(1, 1000),
            eps2: rat(0, 1),
        };
        let out = run(&config).unwrap();
        assert_eq!(out.exit, EXIT_OK);
        match &out.report.payload {
            Payload::JumpDemo {
                fixed_points,
                trapping,
                family,
                ..
            } => {
                assert_eq!(fixed_points.segments.len(), 2);
                assert!(trapping.passed);
                assert_eq!(family.matrix.entries, vec![vec![1, 1], vec![1, 0]]);
                assert!(family.bound.bound > 0.1203 && family.bound.bound < 0.12031);
            }
            other => panic!("unexpected payload {other:?}"),
        }
        assert!(out.report.summary.contains("0.120303"));
    }

    #[test]
    fn trace_reports_steps_until_the_region() {
        let steps = steps_until_region(&segment_params(), TraceSide::Left);
        let steps = steps.expect("segment parameters have a trapping region");
        assert!((1..=100).contains(&steps), "implausible step count {steps}");
        // Map parameters off the b = a - 1 line have no region to enter.
        assert_eq!(
            steps_until_region(&LoziParams::new(rat(8, 5), rat(2, 5)), TraceSide::Left),
            None
        );
    }

    #[test]
    fn run_config_json_round_trips() {
        let config = default_covering_config(vec![(1, 1)]);
        let json = serde_json::to_string_pretty(&config).unwrap();
        assert!(json.contains("\"command\": \"covering\""));
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), json);

        let config = RunConfig::EstimateEntropy {
            params: segment_params(),
            n: 14,
            eps: 0.5,
            grid: 1000,
            window: Viewport::default(),
        };
        let json = serde_json::to_string(&config).unwrap();
        assert!(json.contains("\"box\""));
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn rational_flags_reject_garbage_with_the_token() {
        let err = parse_rational("a", "7/x").unwrap_err();
        assert!(matches!(&err, Error::Usage(msg) if msg.contains("7/x") && msg.contains("--a")));
    }

    #[test]
    fn assert_pairs_are_one_based() {
        assert_eq!(parse_assert_pair("1,2").unwrap(), (0, 1));
        assert_eq!(parse_assert_pair(" 2 , 2 ").unwrap(), (1, 1));
        assert!(parse_assert_pair("0,1").is_err());
        assert!(parse_assert_pair("1").is_err());
        assert!(parse_assert_pair("x,y").is_err());
    }

    #[test]
    fn window_strings_parse_or_reject() {
        let w = parse_window("-1,-1,1,1").unwrap();
        assert_eq!(w.min, [-1.0, -1.0]);
        assert_eq!(w.max, [1.0, 1.0]);
        assert!(parse_window("1,2,3").is_err());
        assert!(parse_window("a,b,c,d").is_err());
    }

    #[test]
    fn flag_defaults_resolve_to_the_segment_endpoint_parameters() {
        let cli = Cli::try_parse_from(["lozi", "fixed-points"]).unwrap();
        match resolve(&cli).unwrap() {
            RunConfig::FixedPoints { params, period } => {
                assert_eq!(params, segment_params());
                assert_eq!(period, 4);
            }
            other => panic!("unexpected config {other:?}"),
        }
    }

    #[test]
    fn covering_flags_build_shifted_parameters_and_two_boxes() {
        let cli = Cli::try_parse_from(["lozi", "covering", "--assert", "2,2"]).unwrap();
        match resolve(&cli).unwrap() {
            RunConfig::Covering {
                params,
                n,
                boxes,
                asserted,
            } => {
                assert_eq!(params, LoziParams::new(rat(7, 5) + rat(1, 1000), rat(2, 5)));
                assert_eq!(n, 4);
                assert_eq!(boxes.len(), 2);
                assert_eq!(asserted, vec![(1, 1)]);
            }
            other => panic!("unexpected config {other:?}"),
        }
    }

    #[test]
    fn explicit_map_flags_override_derived_parameters() {
        let cli = Cli::try_parse_from(["lozi", "covering", "--a", "3/2", "--b", "-2/5"]).unwrap();
        match resolve(&cli).unwrap() {
            RunConfig::Covering { params, .. } => {
                assert_eq!(params, LoziParams::new(rat(3, 2), rat(-2, 5)));
            }
            other => panic!("unexpected config {other:?}"),
        }
    }

    #[test]
    fn bad_rational_flags_surface_the_offending_token() {
        let cli = Cli::try_parse_from(["lozi", "trace", "--a", "1.2.3"]).unwrap();
        let err = resolve(&cli).unwrap_err();
        assert!(matches!(&err, Error::Usage(msg) if msg.contains("1.2.3")));
        assert_eq!(exit_code(&err), EXIT_USAGE);
    }

    #[test]
    fn indeterminate_errors_map_to_exit_three() {
        assert_eq!(
            exit_code(&Error::IndeterminateSign { step: Some(2) }),
            EXIT_INDETERMINATE
        );
        assert_eq!(exit_code(&Error::NotInvertible), EXIT_USAGE);
    }
}
