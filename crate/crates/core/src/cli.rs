//! Command-line front end: config loading, `check`, `eval` and `report`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use thiserror::Error;

use crate::conformal::{transform_frame, ConformalFactor, Transcription};
use crate::expr::Expr;
use crate::frame::ApSpace;
use crate::geometry::{Conventions, PointGeometry};
use crate::invariants::Stroke;
use crate::tensor::{TensorSample, Variance};
use crate::verify::{run_suite, SuiteConfig, SuiteError, Tolerances, VerificationReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// A configuration problem, located by file and field.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{file}: {field}: {message}")]
pub struct ConfigError {
    pub file: String,
    pub field: String,
    pub message: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    label: Option<String>,
    dimension: i64,
    frame: Vec<Vec<String>>,
    #[serde(default = "zero_rho")]
    rho: String,
    domain: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    points: Vec<Vec<f64>>,
    samples: Option<usize>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default)]
    stroke: Option<String>,
    #[serde(default)]
    transcription: Option<String>,
}

fn zero_rho() -> String {
    "0".to_string()
}

fn default_seed() -> u64 {
    42
}

/// A validated space configuration.
#[derive(Debug, Clone)]
pub struct SpaceConfig {
    pub space: ApSpace,
    pub rho: ConformalFactor,
    pub suite: SuiteConfig,
    pub domain: Vec<[f64; 2]>,
}

impl SpaceConfig {
    /// Default domain [−1, 1]^n and default suite settings.
    pub fn new(space: ApSpace, rho: ConformalFactor) -> Self {
        let domain = vec![[-1.0, 1.0]; space.dim()];
        SpaceConfig {
            suite: SuiteConfig {
                domain: Some(domain.clone()),
                ..SuiteConfig::default()
            },
            space,
            rho,
            domain,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            file: file.clone(),
            field: "(file)".into(),
            message: e.to_string(),
        })?;
        Self::from_json(&text, &file)
    }

    /// `file` is only used to locate errors.
    pub fn from_json(text: &str, file: &str) -> Result<Self, ConfigError> {
        let err = |field: &str, message: String| ConfigError {
            file: file.to_string(),
            field: field.to_string(),
            message,
        };
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| {
            err(
                &format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;

        if raw.dimension < 2 {
            return Err(err("dimension", "dimension must be ≥ 2".into()));
        }
        let n = raw.dimension as usize;
        if raw.frame.len() != n {
            return Err(err(
                "frame",
                format!("frame must be {n}×{n}: found {} rows", raw.frame.len()),
            ));
        }
        let mut rows = Vec::with_capacity(n);
        for (i, row) in raw.frame.iter().enumerate() {
            if row.len() != n {
                return Err(err(
                    &format!("frame[{i}]"),
                    format!("frame must be {n}×{n}: row has {} entries", row.len()),
                ));
            }
            let parsed = row
                .iter()
                .enumerate()
                .map(|(mu, s)| {
                    Expr::parse(s, n).map_err(|e| err(&format!("frame[{i}][{mu}]"), e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(parsed);
        }
        let mut space = ApSpace::new(n, rows).map_err(|e| err("frame", e.to_string()))?;
        if let Some(label) = raw.label {
            space = space.with_label(label);
        }
        let rho = ConformalFactor::parse(&raw.rho, n).map_err(|e| err("rho", e.to_string()))?;

        let domain = match raw.domain {
            None => vec![[-1.0, 1.0]; n],
            Some(d) => {
                if d.len() != n {
                    return Err(err(
                        "domain",
                        format!("expected {n} intervals, found {}", d.len()),
                    ));
                }
                d.iter()
                    .enumerate()
                    .map(|(k, iv)| match *iv.as_slice() {
                        [lo, hi] if lo < hi => Ok([lo, hi]),
                        [lo, hi] => Err(err(
                            &format!("domain[{k}]"),
                            format!("lo < hi required, got [{lo}, {hi}]"),
                        )),
                        _ => Err(err(
                            &format!("domain[{k}]"),
                            format!("expected [lo, hi], found {} numbers", iv.len()),
                        )),
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        for (k, p) in raw.points.iter().enumerate() {
            if p.len() != n {
                return Err(err(
                    &format!("points[{k}]"),
                    format!("expected {n} coordinates, found {}", p.len()),
                ));
            }
        }
        let stroke = match raw.stroke.as_deref() {
            None | Some("weitzenbock") => Stroke::Weitzenbock,
            Some("symmetric") => Stroke::SymmetricPart,
            Some(other) => {
                return Err(err(
                    "stroke",
                    format!("expected \"weitzenbock\" or \"symmetric\", found {other:?}"),
                ))
            }
        };
        let transcription = match raw.transcription.as_deref() {
            None | Some("corrected") => Transcription::Corrected,
            Some("verbatim") => Transcription::Verbatim,
            Some(other) => {
                return Err(err(
                    "transcription",
                    format!("expected \"corrected\" or \"verbatim\", found {other:?}"),
                ))
            }
        };
        let tolerances = Tolerances {
            global: None,
            overrides: raw.tolerances,
        };
        tolerances
            .validate()
            .map_err(|e| err("tolerances", e.to_string()))?;

        let suite = SuiteConfig {
            points: raw.samples.unwrap_or(20),
            seed: raw.seed,
            tolerances,
            domain: Some(domain.clone()),
            explicit_points: raw.points,
            conventions: Conventions {
                stroke,
                transcription,
            },
            ..SuiteConfig::default()
        };
        Ok(SpaceConfig {
            space,
            rho,
            suite,
            domain,
        })
    }

    pub fn run(&self) -> Result<VerificationReport, SuiteError> {
        run_suite(&self.space, &self.rho, &self.suite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// Names accepted by `eval --tensor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TensorName {
    /// Weitzenböck connection Γ^α_{μν}
    Gamma,
    /// Levi-Civita connection Γ̊^α_{μν}
    Christoffel,
    /// Symmetric part Γ̂^α_{μν}
    Symmetric,
    /// Torsion Λ^α_{μν}
    #[value(alias = "torsion")]
    Lambda,
    /// Contortion γ^α_{μν}
    Contortion,
    /// Contracted torsion C_μ
    #[value(name = "C")]
    C,
    /// Metric g_{μν}
    Metric,
    #[value(name = "T")]
    T,
    #[value(name = "K")]
    K,
    #[value(name = "B")]
    B,
    #[value(name = "Q")]
    Q,
    ConnGamma,
    ConnHat,
    ConnCirc,
    /// Levi-Civita curvature
    #[value(name = "R-lc")]
    RLc,
    /// Curvature of the symmetric part
    #[value(name = "R-sym")]
    RSym,
    /// Weitzenböck curvature (identically zero)
    #[value(name = "R-w")]
    RW,
}

impl std::str::FromStr for TensorName {
    type Err = String;

    /// Accepts the same names as `eval --tensor`.
    fn from_str(s: &str) -> Result<Self, String> {
        <TensorName as ValueEnum>::from_str(s, false).map_err(|_| format!("unknown tensor {s:?}"))
    }
}

impl TensorName {
    fn symbol(self) -> &'static str {
        match self {
            TensorName::Gamma => "Gamma",
            TensorName::Christoffel => "Gamma_lc",
            TensorName::Symmetric => "Gamma_sym",
            TensorName::Lambda => "Lambda",
            TensorName::Contortion => "gamma",
            TensorName::C => "C",
            TensorName::Metric => "g",
            TensorName::T => "T",
            TensorName::K => "K",
            TensorName::B => "B",
            TensorName::Q => "Q",
            TensorName::ConnGamma => "ConnGamma",
            TensorName::ConnHat => "ConnHat",
            TensorName::ConnCirc => "ConnCirc",
            TensorName::RLc => "R_lc",
            TensorName::RSym => "R_sym",
            TensorName::RW => "R_w",
        }
    }

    pub fn select(self, g: &PointGeometry) -> TensorSample {
        match self {
            TensorName::Gamma => g.weitzenbock.to_tensor(),
            TensorName::Christoffel => g.levi_civita.to_tensor(),
            TensorName::Symmetric => g.symmetric.to_tensor(),
            TensorName::Lambda => g.torsion.clone(),
            TensorName::Contortion => g.contortion.clone(),
            TensorName::C => g.c.lower.clone(),
            TensorName::Metric => g.metric.lower(),
            TensorName::T => g.t.clone(),
            TensorName::K => g.k.clone(),
            TensorName::B => g.b.clone(),
            TensorName::Q => g.q.clone(),
            TensorName::ConnGamma => g.conn_gamma.to_tensor(),
            TensorName::ConnHat => g.conn_hat.to_tensor(),
            TensorName::ConnCirc => g.conn_circ.to_tensor(),
            TensorName::RLc => g.r_levi_civita.clone(),
            TensorName::RSym => g.r_symmetric.clone(),
            TensorName::RW => g.r_weitzenbock.clone(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "apconform",
    version,
    about = "Conformal invariants of absolute-parallelism spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the verification suite; exit 0 iff every check passes.
    Check {
        config: PathBuf,
        /// Tolerance for every absolute check (oracle checks keep theirs).
        #[arg(long)]
        tol: Option<f64>,
        /// Number of random sample points.
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Write the report here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the components of one object at one point.
    Eval {
        config: PathBuf,
        /// Comma-separated coordinates, e.g. "0,0.5".
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, value_enum)]
        tensor: TensorName,
        /// Evaluate on the conformally transformed space.
        #[arg(long)]
        transformed: bool,
    },
    /// Emit the full verification report.
    Report {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Formats with up to 12 decimals, trailing zeros trimmed, and no `-0`.
pub fn format_number(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    match s {
        "-0" | "" => "0".to_string(),
        s => s.to_string(),
    }
}

struct Label<'a> {
    symbol: &'a str,
    variance: &'a [Variance],
    idx: &'a [usize],
    wide: bool,
}

impl fmt::Display for Label<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol)?;
        let mut prev = None;
        for (v, i) in self.variance.iter().zip(self.idx) {
            if prev != Some(*v) {
                write!(f, "{}", if *v == Variance::Up { '^' } else { '_' })?;
            } else if self.wide {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
            prev = Some(*v);
        }
        Ok(())
    }
}

/// Rank ≤ 1 prints every component on one line; higher ranks print the
/// nonzero components one per line, or "all components 0".
pub fn render_components(symbol: &str, t: &TensorSample) -> String {
    let wide = t.dim() > 9;
    let entries: Vec<(String, String)> = t
        .iter()
        .map(|(idx, v)| {
            let label = Label {
                symbol,
                variance: t.variance(),
                idx: &idx,
                wide,
            };
            (label.to_string(), format_number(v))
        })
        .collect();
    if t.rank() <= 1 {
        let parts: Vec<String> = entries.iter().map(|(l, v)| format!("{l} = {v}")).collect();
        return parts.join(", ");
    }
    let nonzero: Vec<String> = entries
        .iter()
        .filter(|(_, v)| v != "0")
        .map(|(l, v)| format!("{l} = {v}"))
        .collect();
    if nonzero.is_empty() {
        "all components 0".to_string()
    } else {
        nonzero.join("\n")
    }
}

fn parse_point(text: &str, domain: &[[f64; 2]]) -> Result<Vec<f64>, CliError> {
    let coords = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("--point: cannot parse {:?}", s.trim())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if coords.len() != domain.len() {
        return Err(CliError::Usage(format!(
            "--point: expected {} coordinates, found {}",
            domain.len(),
            coords.len()
        )));
    }
    for (k, (&x, &[lo, hi])) in coords.iter().zip(domain).enumerate() {
        if x < lo || x > hi {
            return Err(CliError::Usage(format!(
                "--point: coordinate {} = {x} is outside the domain [{lo}, {hi}]",
                k + 1
            )));
        }
    }
    Ok(coords)
}

fn emit(text: &str, output: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn suite_report(cfg: &SpaceConfig, file: &Path) -> Result<VerificationReport, CliError> {
    cfg.run().map_err(|e| {
        CliError::Config(ConfigError {
            file: file.display().to_string(),
            field: "(suite)".into(),
            message: e.to_string(),
        })
    })
}

fn render(report: &VerificationReport, format: Format) -> String {
    match format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json() + "\n",
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Check {
            config,
            tol,
            points,
            seed,
            format,
            output,
        } => {
            let mut cfg = SpaceConfig::load(&config)?;
            if let Some(t) = tol {
                cfg.suite.tolerances.global = Some(t);
                cfg.suite
                    .tolerances
                    .validate()
                    .map_err(|e| CliError::Usage(e.to_string()))?;
            }
            if let Some(p) = points {
                cfg.suite.points = p;
            }
            if let Some(s) = seed {
                cfg.suite.seed = s;
            }
            let report = suite_report(&cfg, &config)?;
            emit(&render(&report, format), output.as_deref(), out)?;
            Ok(if report.all_pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            })
        }
        Command::Eval {
            config,
            point,
            tensor,
            transformed,
        } => {
            let cfg = SpaceConfig::load(&config)?;
            let p = parse_point(&point, &cfg.domain)?;
            let space = if transformed {
                transform_frame(&cfg.space, &cfg.rho)
            } else {
                cfg.space.clone()
            };
            let g = PointGeometry::compute(&space, &p, cfg.suite.conventions)
                .map_err(|e| CliError::Usage(format!("--point: {e}")))?;
            let t = tensor.select(&g);
            writeln!(out, "{}", render_components(tensor.symbol(), &t))?;
            Ok(EXIT_PASS)
        }
        Command::Report {
            config,
            format,
            output,
        } => {
            let cfg = SpaceConfig::load(&config)?;
            let report = suite_report(&cfg, &config)?;
            emit(&render(&report, format), output.as_deref(), out)?;
            Ok(EXIT_PASS)
        }
    }
}

/// Runs the CLI with explicit output streams and returns the exit status.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return if code == 0 { EXIT_PASS } else { EXIT_USAGE };
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
