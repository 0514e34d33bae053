//! Command-line front end. [`run`] parses arguments, dispatches, and returns the exit code
//! with the complete output; nothing is written when a run fails part-way.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::body::{parse_body_file, ConvexBody};
use crate::covering::{covering_certificate, CoveringBound, BETA_CALIB, DEFAULT_CELL_BUDGET};
use crate::ellipsoid::Ellipsoid;
use crate::error::Error;
use crate::lattice::{self, parse_lattice_file, EnumConfig, LatticeBasis, LatticeSolution};
use crate::lewis::certify_lewis;
use crate::linalg::Vector;
use crate::milman::{m_ellipsoid_general, MilmanConfig, MilmanStep};
use crate::report::Report;
use crate::volume::{volume_of, TileConfig, VolumeConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;
pub const EXIT_CERTIFICATE: i32 = 5;
pub const EXIT_INVALID: i32 = 6;
pub const EXIT_NO_INPUT: i32 = 66;
pub const EXIT_CANT_WRITE: i32 = 73;
pub const EXIT_INTERNAL: i32 = 70;

/// Test matrices per Lewis certificate in `certify`.
const LEWIS_TRIALS: usize = 128;

#[derive(Parser, Debug)]
#[command(name = "mellipsoid", version, about = "M-ellipsoids, volume estimates and lattice search for convex bodies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, value_parser = positive_usize)]
    pub workers: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Grid step for volume brackets, in the normalized position.
    #[arg(long = "grid-h", global = true, value_parser = positive_f64)]
    pub grid_h: Option<f64>,
    /// Cap on grid cells or tiles.
    #[arg(long = "budget-cells", global = true, value_parser = positive_u64)]
    pub budget_cells: Option<u64>,
    /// Cap on enumerated lattice points.
    #[arg(long = "budget-points", global = true, value_parser = positive_u64)]
    pub budget_points: Option<u64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute an M-ellipsoid with its trace and covering certificate.
    MEllipsoid {
        #[arg(long)]
        body: PathBuf,
        /// Lewis accuracy per round.
        #[arg(long, value_parser = positive_f64)]
        eps: Option<f64>,
    },
    /// Estimate the volume within a factor (1 + eps)^n.
    Volume {
        #[arg(long)]
        body: PathBuf,
        #[arg(long, value_parser = positive_f64)]
        eps: f64,
        /// Constant in the damped radii.
        #[arg(long = "const-C", value_parser = positive_f64, default_value_t = 1.0)]
        const_c: f64,
    },
    /// Shortest nonzero lattice vector under the body's norm.
    Svp {
        #[arg(long)]
        body: PathBuf,
        #[arg(long)]
        lattice: PathBuf,
    },
    /// Closest lattice vector to a target under the body's norm.
    Cvp {
        #[arg(long)]
        body: PathBuf,
        #[arg(long)]
        lattice: PathBuf,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        /// Largest admissible distance in units of the shortest vector length.
        #[arg(long = "gamma-cap", value_parser = positive_f64, default_value_t = 8.0)]
        gamma_cap: f64,
    },
    /// All lattice points in a translate of the body.
    Enum {
        #[arg(long)]
        body: PathBuf,
        #[arg(long)]
        lattice: PathBuf,
        /// Comma-separated translation; the origin by default.
        #[arg(long, allow_hyphen_values = true)]
        center: Option<String>,
    },
    /// Run the M-ellipsoid and check every certificate against its threshold.
    Certify {
        #[arg(long)]
        body: PathBuf,
        #[arg(long, value_parser = positive_f64)]
        eps: Option<f64>,
    },
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn positive_u64(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("expected a positive integer, got {s:?}")),
    }
}

fn positive_usize(s: &str) -> Result<usize, String> {
    positive_u64(s).map(|v| v as usize)
}

/// Result of a run: the exit code and the text destined for standard output and error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

enum Failure {
    Lib(Error),
    NoInput(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) => EXIT_PARSE,
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::SolverFailure { .. } => EXIT_SOLVER,
        Error::InvalidInput(_)
        | Error::NormalizationFailure { .. }
        | Error::ResolutionFailure(_)
        | Error::GammaCapExceeded { .. } => EXIT_INVALID,
        Error::Internal(_) => EXIT_INTERNAL,
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let result = match cli.common.workers {
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(Failure::Lib(Error::Internal(format!("could not start workers: {e}")))),
        },
        None => execute(&cli),
    };
    let (report, pass) = match result {
        Ok(r) => r,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Lib(e) => (exit_code(&e), e.to_string()),
                Failure::NoInput(m) => (EXIT_NO_INPUT, m),
            };
            return Outcome { code, stdout: String::new(), stderr: format!("error: {msg}\n") };
        }
    };
    let rendered = match cli.common.format {
        Format::Text => Ok(report.to_text()),
        Format::Structured => report.to_structured(),
    };
    let rendered = match rendered {
        Ok(r) => r,
        Err(e) => return Outcome { code: exit_code(&e), stdout: String::new(), stderr: format!("error: {e}\n") },
    };
    let code = if pass { EXIT_OK } else { EXIT_CERTIFICATE };
    match &cli.common.out {
        Some(path) => match std::fs::write(path, &rendered) {
            Ok(()) => Outcome { code, stdout: String::new(), stderr: String::new() },
            Err(e) => Outcome {
                code: EXIT_CANT_WRITE,
                stdout: String::new(),
                stderr: format!("error: cannot write {}: {e}\n", path.display()),
            },
        },
        None => Outcome { code, stdout: rendered, stderr: String::new() },
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::NoInput(format!("cannot read {}: {e}", path.display())))
}

fn load_body(path: &Path) -> Result<ConvexBody, Failure> {
    Ok(parse_body_file(&read(path)?)?)
}

fn load_lattice(path: &Path) -> Result<LatticeBasis, Failure> {
    Ok(parse_lattice_file(&read(path)?)?)
}

fn parse_point(text: &str, n: usize) -> Result<Vector, Failure> {
    let vals: Result<Vec<f64>, _> = text.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match vals {
        Ok(v) if v.len() == n && v.iter().all(|x| x.is_finite()) => Ok(Vector::from_vec(v)),
        Ok(v) if v.iter().all(|x| x.is_finite()) => {
            Err(Error::InvalidInput(format!("point has {} coordinates, expected {n}", v.len())).into())
        }
        _ => Err(Error::Parse(format!("cannot read point {text:?}")).into()),
    }
}

fn require_symmetric(body: &ConvexBody, what: &str) -> Result<(), Failure> {
    if body.is_symmetric() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} needs a symmetric body; wrap it in a difference-body")).into())
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn enum_config(common: &Common) -> EnumConfig {
    let mut cfg = EnumConfig::default();
    if let Some(p) = common.budget_points {
        cfg.max_points = p;
    }
    cfg
}

/// Runs the command; the flag is false when a certificate failed.
fn execute(cli: &Cli) -> Result<(Report, bool), Failure> {
    let common = &cli.common;
    let mut report = Report::new();
    let pass = match &cli.command {
        Command::MEllipsoid { body, eps } => {
            let k = load_body(body)?;
            run_header(&mut report, "m-ellipsoid", &k);
            milman_report(&mut report, &k, *eps, common, false)?
        }
        Command::Certify { body, eps } => {
            let k = load_body(body)?;
            run_header(&mut report, "certify", &k);
            milman_report(&mut report, &k, *eps, common, true)?
        }
        Command::Volume { body, eps, const_c } => {
            let k = load_body(body)?;
            require_symmetric(&k, "volume")?;
            if *eps > 1.0 {
                return Err(Error::InvalidInput("eps must lie in (0, 1]".into()).into());
            }
            run_header(&mut report, "volume", &k);
            let mut tiles = TileConfig::default();
            if let Some(b) = common.budget_cells {
                tiles.max_tiles = b;
            }
            let cfg = VolumeConfig { const_c: *const_c, lewis_eps: None, tiles };
            let (estimate, vr, transform) = volume_of(&k, *eps, &cfg)?;
            report.section("normalization").put("transform", &transform);
            steps_report(&mut report, &vr.steps);
            report
                .section("tiling")
                .put("eps", vr.eps)
                .put("axes", &vr.tiling.axes)
                .put("root_index", &vr.tiling.root_index[..])
                .put("tie_break_order", vr.tiling.tie_break_order.iter().map(|&i| i as i64).collect::<Vec<_>>().as_slice())
                .put("position", &vr.position);
            report
                .section("volume")
                .put("tiles", vr.tiles.count)
                .put("flagged_tiles", vr.tiles.flagged)
                .put("tile_volume", vr.tile_volume / transform.determinant().abs())
                .put("parallelepiped_volume", vr.vol_p / transform.determinant().abs())
                .put("estimate", estimate)
                .put("upper_factor", (1.0 + eps).powi(k.dim() as i32));
            true
        }
        Command::Svp { body, lattice } => {
            let k = load_body(body)?;
            let l = load_lattice(lattice)?;
            check_dims(&k, &l)?;
            require_symmetric(&k, "svp")?;
            run_header(&mut report, "svp", &k);
            let e = lattice::covering_ellipsoid(&k)?;
            lattice_header(&mut report, &l, &e);
            let sol = lattice::svp_with(&l, &k, &e, &enum_config(common))?;
            solution_report(&mut report, "shortest", &sol);
            true
        }
        Command::Cvp { body, lattice, target, gamma_cap } => {
            let k = load_body(body)?;
            let l = load_lattice(lattice)?;
            check_dims(&k, &l)?;
            require_symmetric(&k, "cvp")?;
            let x = parse_point(target, k.dim())?;
            run_header(&mut report, "cvp", &k);
            let e = lattice::covering_ellipsoid(&k)?;
            lattice_header(&mut report, &l, &e);
            let sol = lattice::cvp_with(&l, &k, &x, *gamma_cap, &e, &enum_config(common))?;
            report.get_or_last("lattice").put("target", &x).put("gamma_cap", *gamma_cap);
            solution_report(&mut report, "closest", &sol);
            true
        }
        Command::Enum { body, lattice, center } => {
            let k = load_body(body)?;
            let l = load_lattice(lattice)?;
            check_dims(&k, &l)?;
            require_symmetric(&k, "enum")?;
            let c = match center {
                Some(t) => parse_point(t, k.dim())?,
                None => Vector::zeros(k.dim()),
            };
            run_header(&mut report, "enum", &k);
            let e = lattice::covering_ellipsoid(&k)?;
            lattice_header(&mut report, &l, &e);
            let pts = lattice::enum_body(&l, &k, &c, &e, &enum_config(common))?;
            report.get_or_last("lattice").put("center", &c);
            let s = report.section("points");
            s.put("count", pts.len());
            for (i, p) in pts.iter().enumerate() {
                s.put(&format!("coefficients.{i}"), &p.coefficients[..]);
                s.put(&format!("gauge.{i}"), k.gauge(&(&p.point - &c))?);
            }
            true
        }
    };
    Ok((report, pass))
}

trait SectionLookup {
    fn get_or_last(&mut self, name: &str) -> &mut crate::report::Section;
}

impl SectionLookup for Report {
    fn get_or_last(&mut self, name: &str) -> &mut crate::report::Section {
        match self.sections.iter().position(|s| s.name == name) {
            Some(i) => &mut self.sections[i],
            None => self.section(name),
        }
    }
}

fn check_dims(k: &ConvexBody, l: &LatticeBasis) -> Result<(), Failure> {
    if k.dim() != l.dim() {
        return Err(Error::InvalidInput(format!("body has dimension {}, lattice {}", k.dim(), l.dim())).into());
    }
    Ok(())
}

fn run_header(report: &mut Report, command: &str, k: &ConvexBody) {
    report
        .section("run")
        .put("command", command)
        .put("n", k.dim())
        .put("body_kind", k.kind_name())
        .put("body_symmetric", k.is_symmetric())
        .put("body_fingerprint", format!("{:016x}", k.fingerprint()));
}

fn lattice_header(report: &mut Report, l: &LatticeBasis, e: &Ellipsoid) {
    report.section("lattice").put("basis", l.basis()).put("covering_ellipsoid", e.matrix());
}

fn solution_report(report: &mut Report, name: &str, sol: &LatticeSolution) {
    report
        .section(name)
        .put("coefficients", &sol.coefficients[..])
        .put("vector", &sol.vector)
        .put("value", sol.value)
        .put("scales", &Vector::from_vec(sol.scales.clone()));
}

fn steps_report(report: &mut Report, steps: &[MilmanStep]) {
    for (i, s) in steps.iter().enumerate() {
        report
            .section(format!("step.{}", i + 1))
            .put("a", &s.a)
            .put("ell_in", s.ell_in)
            .put("ell_out", s.ell_out)
            .put("r_in", s.r_in)
            .put("r_out", s.r_out)
            .put("bm_ratio", s.bm_ratio)
            .put("position", &s.position)
            .put("lewis_objective", s.lewis.objective)
            .put("lewis_ell", s.lewis.ell_value)
            .put("lewis_gap", s.lewis.gap_bound)
            .put("lewis_iterations", s.lewis.iterations);
    }
}

fn covering_report(report: &mut Report, c: &CoveringBound, n: usize) {
    report
        .section("covering")
        .put("value", c.value)
        .put("per_dimension", c.per_dimension(n))
        .put("grid_step", c.body.grid_step)
        .put("body_lower", c.body.lower)
        .put("body_upper", c.body.upper)
        .put("intersection_lower", c.intersection.lower)
        .put("intersection_upper", c.intersection.upper)
        .put("ellipsoid_volume", c.ellipsoid_volume);
}

/// The M-ellipsoid report. With `strict`, the Lewis certificate of every round and the
/// calibrated covering threshold are checked as well.
fn milman_report(report: &mut Report, k: &ConvexBody, eps: Option<f64>, common: &Common, strict: bool) -> Result<bool, Failure> {
    let n = k.dim();
    let cfg = MilmanConfig { eps, ..MilmanConfig::default() };
    let (e, trace, transform) = m_ellipsoid_general(k, &cfg)?;
    report
        .section("normalization")
        .put("difference_body", !k.is_symmetric())
        .put("transform", &transform);
    steps_report(report, &trace.steps);
    report.section("ellipsoid").put("matrix", e.matrix()).put("volume", e.volume());
    let sym = if k.is_symmetric() { k.clone() } else { k.difference_body()? };
    let budget = common.budget_cells.unwrap_or(DEFAULT_CELL_BUDGET);
    let covering = if n <= crate::covering::GRID_MAX_DIM {
        Some(covering_certificate(&sym, &e, common.grid_h, budget)?)
    } else {
        None
    };
    if let Some(c) = &covering {
        covering_report(report, c, n);
    }
    let mut checks: Vec<(String, bool)> = vec![("sandwich".into(), trace.sandwich_ok)];
    if let Some(c) = &covering {
        checks.push(("covering_finite".into(), c.value.is_finite()));
    }
    if strict {
        let threshold = (1.05 * BETA_CALIB).powi(n as i32);
        if let Some(c) = &covering {
            checks.push(("covering_calibrated".into(), c.value <= threshold));
        }
        for (i, s) in trace.steps.iter().enumerate() {
            let cert = certify_lewis(&s.body, &s.lewis, LEWIS_TRIALS)?;
            let ell_ok = s.lewis.ell_value <= 1.0 && s.lewis.ell_value >= 1.0 - 1e-6;
            report
                .section(format!("lewis.{}", i + 1))
                .put("trials", cert.tests.len())
                .put("max_trace", cert.max_trace)
                .put("bound", cert.bound)
                .put("ell_value", s.lewis.ell_value);
            checks.push((format!("lewis.{}", i + 1), cert.pass && ell_ok));
        }
    }
    let pass = checks.iter().all(|(_, ok)| *ok);
    let sec = report.section("certificate");
    sec.put("c_f", trace.c_f);
    sec.put("bm_last", trace.steps.last().map_or(f64::NAN, |s| s.bm_ratio));
    for (name, ok) in &checks {
        sec.put(name, verdict(*ok));
    }
    sec.put("verdict", verdict(pass));
    Ok(pass)
}
