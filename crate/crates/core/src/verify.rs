//! Property suite: samples points, runs every named check against the jet
//! engine and the finite-difference oracle, and aggregates a report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::conformal::{
    predicted_c, predicted_c_quantities, predicted_c_symcov, predicted_contortion,
    predicted_curvature_lc, predicted_curvature_sym, predicted_levicivita, predicted_symmetric,
    predicted_torsion, predicted_weitzenbock, s_tensor, transform_frame, ConformalFactor,
    RhoSample, Transcription,
};
use crate::connection::{covariant_derivative, ConnectionSample};
use crate::fd::{self, FdError};
use crate::frame::{contortion_via_frame, ApSpace, FrameError};
use crate::geometry::{Conventions, PointGeometry};
use crate::invariants::{tensor_q, Stroke};
use crate::jet::{Jet2, JetMatrix};
use crate::tensor::{TensorSample, Variance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    ExactLaw,
    Invariance,
    Identification,
    Flatness,
    Duality,
    Oracle,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::ExactLaw => "exact-law",
            CheckKind::Invariance => "invariance",
            CheckKind::Identification => "identification",
            CheckKind::Flatness => "flatness",
            CheckKind::Duality => "duality",
            CheckKind::Oracle => "oracle",
        }
    }

    /// Oracle checks pass on relative deviation, everything else on absolute.
    pub fn uses_relative(self) -> bool {
        self == CheckKind::Oracle
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckDef {
    pub name: &'static str,
    pub kind: CheckKind,
    pub tolerance: f64,
}

const fn entry(name: &'static str, kind: CheckKind, tolerance: f64) -> CheckDef {
    CheckDef {
        name,
        kind,
        tolerance,
    }
}

use CheckKind::*;

/// Every check the suite runs, in report order, with its default tolerance.
pub const CHECKS: &[CheckDef] = &[
    entry("duality.world", Duality, 1e-10),
    entry("duality.mesh", Duality, 1e-10),
    entry("ap_condition", Duality, 1e-10),
    entry("metric.inverse", Duality, 1e-10),
    entry("flatness.weitzenbock", Flatness, 1e-9),
    entry("metricity.levi_civita", Flatness, 1e-9),
    entry("contortion.two_route", Flatness, 1e-9),
    entry("law.metric", ExactLaw, 1e-8),
    entry("law.weitzenbock", ExactLaw, 1e-8),
    entry("law.torsion", ExactLaw, 1e-8),
    entry("law.levi_civita", ExactLaw, 1e-8),
    entry("law.curvature_levi_civita", ExactLaw, 1e-8),
    entry("law.contortion", ExactLaw, 1e-8),
    entry("law.contracted_torsion", ExactLaw, 1e-8),
    entry("law.c_upper", ExactLaw, 1e-8),
    entry("law.c_squared", ExactLaw, 1e-8),
    entry("law.c_lower_semicolon", ExactLaw, 1e-8),
    entry("law.c_upper_semicolon", ExactLaw, 1e-8),
    entry("law.symmetric_part", ExactLaw, 1e-8),
    entry("law.curvature_symmetric", ExactLaw, 1e-8),
    entry("law.c_symmetric_covariant", ExactLaw, 1e-8),
    entry("antisymmetry.invariants", ExactLaw, 1e-8),
    entry("invariance.t", Invariance, 1e-8),
    entry("invariance.k", Invariance, 1e-8),
    entry("invariance.b", Invariance, 1e-8),
    entry("invariance.q", Invariance, 1e-8),
    entry("invariance.conn_gamma", Invariance, 1e-8),
    entry("invariance.conn_hat", Invariance, 1e-8),
    entry("invariance.conn_circ", Invariance, 1e-8),
    entry("ident.conn_gamma_torsion", Identification, 1e-8),
    entry("ident.conn_gamma_curvature", Identification, 1e-8),
    entry("ident.conn_hat_curvature", Identification, 1e-8),
    entry("ident.conn_circ_curvature", Identification, 1e-8),
    entry("oracle.frame_jets", Oracle, 1e-4),
    entry("oracle.weitzenbock", Oracle, 1e-4),
    entry("oracle.levi_civita", Oracle, 1e-4),
    entry("oracle.k", Oracle, 1e-4),
    entry("oracle.transformed_c", Oracle, 1e-4),
];

/// Informational comparisons that never gate the run: the printed sign
/// choices for S and Q, measured against direct recomputation.
pub const DIAGNOSTICS: &[&str] = &[
    "verbatim.curvature_levi_civita",
    "verbatim.q_invariance",
    "verbatim.q_identification",
];

/// The ρ fixtures used by the acceptance runs.
pub const RHO_POOL: [&str; 5] = ["0", "0.7", "x1", "x1*x2", "sin(x1)"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("rho uses x{needed} but the space has dimension {n}")]
    RhoDimension { needed: usize, n: usize },
    #[error("domain has {got} intervals, expected {n}")]
    DomainLength { got: usize, n: usize },
    #[error("domain interval {coord} must satisfy lo < hi, got [{lo}, {hi}]")]
    EmptyInterval { coord: usize, lo: f64, hi: f64 },
    #[error("point {index} has {got} coordinates, expected {n}")]
    PointLength { index: usize, got: usize, n: usize },
    #[error("tolerance for {name} must be positive and finite, got {value}")]
    BadTolerance { name: String, value: f64 },
    #[error("unknown tolerance key {0:?} (expected a check name or kind)")]
    UnknownTolerance(String),
    #[error("no points to sample")]
    NoPoints,
    #[error("all {0} sampled points are singular")]
    AllSingular(usize),
    #[error("{skipped} of {total} sampled points are singular (more than 20%)")]
    TooManySingular { skipped: usize, total: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tolerances {
    /// Replaces every absolute tolerance when set; oracle (relative)
    /// tolerances are only changed through `overrides`.
    pub global: Option<f64>,
    /// Keyed by check name or by kind name (`exact-law`, `oracle`, ...).
    pub overrides: BTreeMap<String, f64>,
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), SuiteError> {
        let bad = |name: &str, v: f64| {
            (!(v > 0.0 && v.is_finite())).then(|| SuiteError::BadTolerance {
                name: name.to_string(),
                value: v,
            })
        };
        if let Some(e) = self.global.and_then(|v| bad("--tol", v)) {
            return Err(e);
        }
        for (k, &v) in &self.overrides {
            let known = CHECKS.iter().any(|c| c.name == k || c.kind.name() == k);
            if !known {
                return Err(SuiteError::UnknownTolerance(k.clone()));
            }
            if let Some(e) = bad(k, v) {
                return Err(e);
            }
        }
        Ok(())
    }

    pub fn resolve(&self, check: &CheckDef) -> f64 {
        self.global
            .filter(|_| !check.kind.uses_relative())
            .or_else(|| self.overrides.get(check.name).copied())
            .or_else(|| self.overrides.get(check.kind.name()).copied())
            .unwrap_or(check.tolerance)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    /// Number of random points drawn from the domain.
    pub points: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Per-coordinate `[lo, hi]`; `[-1, 1]` for every coordinate when unset.
    pub domain: Option<Vec<[f64; 2]>>,
    /// Evaluated before the random points.
    pub explicit_points: Vec<Vec<f64>>,
    pub conventions: Conventions,
    pub fd_step: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            points: 20,
            seed: 42,
            tolerances: Tolerances::default(),
            domain: None,
            explicit_points: Vec::new(),
            conventions: Conventions::default(),
            fd_step: 1e-4,
        }
    }
}

fn de_float<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    // serde_json writes non-finite floats as null
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: CheckKind,
    pub tolerance: f64,
    #[serde(deserialize_with = "de_float")]
    pub max_abs: f64,
    #[serde(deserialize_with = "de_float")]
    pub max_rel: f64,
    pub points_sampled: usize,
    pub points_skipped: usize,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    /// The deviation the pass flag is judged on.
    pub fn deviation(&self) -> f64 {
        if self.kind.uses_relative() {
            self.max_rel
        } else {
            self.max_abs
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub name: String,
    #[serde(deserialize_with = "de_float")]
    pub max_abs: f64,
    #[serde(deserialize_with = "de_float")]
    pub max_rel: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub seed: u64,
    pub dimension: usize,
    pub rho: String,
    pub stroke: String,
    pub transcription: String,
    pub points_sampled: usize,
    pub points_skipped: usize,
    pub checks: Vec<CheckResult>,
    pub diagnostics: Vec<Diagnostic>,
    pub all_pass: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "space: {}",
            self.label.as_deref().unwrap_or("(unlabelled)")
        );
        let _ = writeln!(
            out,
            "dimension {}, rho = {}, seed {}, stroke {}, transcription {}",
            self.dimension, self.rho, self.seed, self.stroke, self.transcription
        );
        let _ = writeln!(
            out,
            "points: {} sampled, {} skipped",
            self.points_sampled, self.points_skipped
        );
        let width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(4)
            .max(5);
        let _ = writeln!(
            out,
            "{:<width$}  {:<14}  {:>9}  {:>10}  {:>10}  result",
            "check", "kind", "tol", "max_abs", "max_rel"
        );
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<width$}  {:<14}  {:>9.1e}  {:>10.3e}  {:>10.3e}  {}",
                c.name,
                c.kind.name(),
                c.tolerance,
                c.max_abs,
                c.max_rel,
                if c.pass { "PASS" } else { "FAIL" }
            );
            if let Some(note) = &c.note {
                let _ = writeln!(out, "{:<width$}    note: {note}", "");
            }
        }
        if !self.diagnostics.is_empty() {
            let _ = writeln!(out, "diagnostics (informational):");
            for d in &self.diagnostics {
                let _ = writeln!(
                    out,
                    "  {:<width$}  max_abs {:.3e}  max_rel {:.3e}  {}",
                    d.name, d.max_abs, d.max_rel, d.note
                );
            }
        }
        let failed = self.failures().count();
        let _ = writeln!(
            out,
            "{}: {} of {} checks passed",
            if self.all_pass { "ALL PASS" } else { "FAILED" },
            self.checks.len() - failed,
            self.checks.len()
        );
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Dev {
    abs: f64,
    rel: f64,
}

impl Dev {
    fn max(self, o: Dev) -> Dev {
        Dev {
            abs: self.abs.max(o.abs),
            rel: self.rel.max(o.rel),
        }
    }
}

fn nan_to_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

fn dev_slices(a: &[f64], b: &[f64]) -> Dev {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(Dev::default(), |acc, (&x, &y)| {
        let abs = nan_to_inf((x - y).abs());
        let rel = nan_to_inf(abs / 1f64.max(x.abs()).max(y.abs()));
        acc.max(Dev { abs, rel })
    })
}

fn dev_zero(a: &[f64]) -> Dev {
    dev_slices(a, &vec![0.0; a.len()])
}

fn dev_tensor(a: &TensorSample, b: &TensorSample) -> Dev {
    let d = dev_slices(a.components(), b.components());
    match (a.partials(), b.partials()) {
        (Some(pa), Some(pb)) => d.max(dev_slices(pa, pb)),
        _ => d,
    }
}

fn dev_conn(a: &ConnectionSample, b: &ConnectionSample) -> Dev {
    dev_tensor(&a.to_tensor(), &b.to_tensor())
}

fn jet_flat(m: &JetMatrix) -> Vec<f64> {
    m.entries()
        .iter()
        .flat_map(|j: &Jet2| {
            std::iter::once(j.value())
                .chain(j.grad().iter().copied())
                .chain(j.hess().iter().copied())
        })
        .collect()
}

/// max |T_{..ab} + T_{..ba}| over the given pair of slots.
fn antisymmetry(t: &TensorSample, a: usize, b: usize) -> Dev {
    let sums: Vec<f64> = t
        .iter()
        .map(|(idx, v)| {
            let mut sw = idx.clone();
            sw.swap(a, b);
            v + t.get(&sw)
        })
        .collect();
    dev_zero(&sums)
}

enum PointFailure {
    Skip,
    Fatal(FrameError),
}

impl From<FrameError> for PointFailure {
    fn from(e: FrameError) -> Self {
        if e.is_pointwise() {
            PointFailure::Skip
        } else {
            PointFailure::Fatal(e)
        }
    }
}

impl From<FdError> for PointFailure {
    fn from(_: FdError) -> Self {
        PointFailure::Skip
    }
}

struct PointOutcome {
    checks: BTreeMap<&'static str, Dev>,
    diagnostics: BTreeMap<&'static str, Dev>,
}

fn q_form(g: &PointGeometry, stroke: Stroke, form: Transcription) -> TensorSample {
    let conn = match stroke {
        Stroke::Weitzenbock => &g.weitzenbock,
        Stroke::SymmetricPart => &g.symmetric,
    };
    tensor_q(&g.contortion, &g.torsion, &g.c, &g.metric, conn, form).expect("n ≥ 2")
}

fn evaluate_point(
    space: &ApSpace,
    bar_space: &ApSpace,
    rho: &ConformalFactor,
    point: &[f64],
    cfg: &SuiteConfig,
) -> Result<PointOutcome, PointFailure> {
    let conv = cfg.conventions;
    let h = cfg.fd_step;
    let g = PointGeometry::compute(space, point, conv)?;
    let gb = PointGeometry::compute(bar_space, point, conv)?;
    let r: RhoSample = rho.sample(point, &g.metric, &g.levi_civita)?;
    if !r.value.is_finite() || !jet_flat(&g.frame.lam_down).iter().all(|x| x.is_finite()) {
        return Err(PointFailure::Skip);
    }
    let n = g.dim();
    let mut c: BTreeMap<&'static str, Dev> = BTreeMap::new();

    // frame structure
    let ident = jet_flat(&JetMatrix::identity(n, n));
    let fs = &g.frame;
    c.insert(
        "duality.world",
        dev_slices(
            &jet_flat(&fs.lam_up.transpose().matmul(&fs.lam_down)),
            &ident,
        ),
    );
    c.insert(
        "duality.mesh",
        dev_slices(
            &jet_flat(&fs.lam_up.matmul(&fs.lam_down.transpose())),
            &ident,
        ),
    );
    let ap = (0..n).fold(Dev::default(), |acc, i| {
        let down = covariant_derivative(&fs.coframe_covector(i), &g.weitzenbock)
            .expect("partials attached");
        let up =
            covariant_derivative(&fs.frame_vector(i), &g.weitzenbock).expect("partials attached");
        acc.max(dev_zero(down.components()))
            .max(dev_zero(up.components()))
    });
    c.insert("ap_condition", ap);
    let inv = g.metric.g.inverse().map_err(FrameError::from)?;
    c.insert(
        "metric.inverse",
        dev_slices(&jet_flat(&inv), &jet_flat(&g.metric.g_inv)),
    );
    c.insert(
        "flatness.weitzenbock",
        dev_zero(g.r_weitzenbock.components()),
    );
    let metricity =
        covariant_derivative(&g.metric.lower(), &g.levi_civita).expect("partials attached");
    c.insert("metricity.levi_civita", dev_zero(metricity.components()));
    c.insert(
        "contortion.two_route",
        dev_tensor(&contortion_via_frame(fs, &g.levi_civita), &g.contortion),
    );

    // transformation laws
    let e2 = (2.0 * r.value).exp();
    let g_pred = TensorSample::from_fn(n, &[Variance::Down, Variance::Down], |i| {
        e2 * g.metric.g(i[0], i[1])
    })
    .with_partials(|i, s| {
        e2 * (2.0 * r.d(s) * g.metric.g(i[0], i[1]) + g.metric.g.get(i[0], i[1]).d(s))
    });
    c.insert("law.metric", dev_tensor(&g_pred, &gb.metric.lower()));
    c.insert(
        "law.weitzenbock",
        dev_conn(&predicted_weitzenbock(&g.weitzenbock, &r), &gb.weitzenbock),
    );
    c.insert(
        "law.torsion",
        dev_tensor(&predicted_torsion(&g.torsion, &r), &gb.torsion),
    );
    c.insert(
        "law.levi_civita",
        dev_conn(
            &predicted_levicivita(&g.levi_civita, &r, &g.metric),
            &gb.levi_civita,
        ),
    );
    let s = s_tensor(&r, &g.metric, conv.transcription);
    c.insert(
        "law.curvature_levi_civita",
        dev_tensor(
            &predicted_curvature_lc(&g.r_levi_civita, &s, &g.metric),
            &gb.r_levi_civita,
        ),
    );
    c.insert(
        "law.contortion",
        dev_tensor(
            &predicted_contortion(&g.contortion, &r, &g.metric),
            &gb.contortion,
        ),
    );
    c.insert(
        "law.contracted_torsion",
        dev_tensor(&predicted_c(&g.c.lower, &r), &gb.c.lower),
    );
    let cq = predicted_c_quantities(&g.c, &r, &g.metric);
    c.insert("law.c_upper", dev_tensor(&cq.upper, &gb.c.upper));
    c.insert("law.c_squared", dev_slices(&[cq.sq], &[gb.c.sq]));
    c.insert(
        "law.c_lower_semicolon",
        dev_tensor(&cq.lower_semi, &gb.c.lower_semi),
    );
    c.insert(
        "law.c_upper_semicolon",
        dev_tensor(&cq.upper_semi, &gb.c.upper_semi),
    );
    c.insert(
        "law.symmetric_part",
        dev_conn(&predicted_symmetric(&g.symmetric, &r), &gb.symmetric),
    );
    c.insert(
        "law.curvature_symmetric",
        dev_tensor(
            &predicted_curvature_sym(&g.r_symmetric, &r, &g.symmetric),
            &gb.r_symmetric,
        ),
    );
    c.insert(
        "law.c_symmetric_covariant",
        dev_tensor(
            &predicted_c_symcov(&g.c_hatcov, &g.c.lower, &r, &g.symmetric),
            &gb.c_hatcov,
        ),
    );
    c.insert(
        "antisymmetry.invariants",
        antisymmetry(&g.t, 1, 2)
            .max(antisymmetry(&g.k, 2, 3))
            .max(antisymmetry(&g.b, 2, 3))
            .max(antisymmetry(&g.q, 2, 3)),
    );

    // invariance and identification
    c.insert("invariance.t", dev_tensor(&g.t, &gb.t));
    c.insert("invariance.k", dev_tensor(&g.k, &gb.k));
    c.insert("invariance.b", dev_tensor(&g.b, &gb.b));
    c.insert("invariance.q", dev_tensor(&g.q, &gb.q));
    c.insert(
        "invariance.conn_gamma",
        dev_conn(&g.conn_gamma, &gb.conn_gamma),
    );
    c.insert("invariance.conn_hat", dev_conn(&g.conn_hat, &gb.conn_hat));
    c.insert(
        "invariance.conn_circ",
        dev_conn(&g.conn_circ, &gb.conn_circ),
    );
    c.insert(
        "ident.conn_gamma_torsion",
        dev_tensor(&g.conn_gamma_torsion(), &g.t),
    );
    let circ_curv = g.conn_circ_curvature();
    c.insert(
        "ident.conn_gamma_curvature",
        dev_tensor(&g.conn_gamma_curvature(), &g.k),
    );
    c.insert(
        "ident.conn_hat_curvature",
        dev_tensor(&g.conn_hat_curvature(), &g.b),
    );
    c.insert("ident.conn_circ_curvature", dev_tensor(&circ_curv, &g.q));

    // finite-difference oracle
    let mut jets = Dev::default();
    for i in 0..n {
        for mu in 0..n {
            let est = fd::expr_derivatives(space.component(i, mu), point, h)?;
            let jet = fs.lam_up.get(i, mu);
            jets = jets
                .max(dev_slices(jet.grad(), &est.grad))
                .max(dev_slices(jet.hess(), &est.hess));
        }
    }
    c.insert("oracle.frame_jets", jets);
    c.insert(
        "oracle.weitzenbock",
        dev_slices(
            g.weitzenbock.coefficients(),
            &fd::weitzenbock(space, point, h)?,
        ),
    );
    c.insert(
        "oracle.levi_civita",
        dev_slices(
            g.levi_civita.coefficients(),
            &fd::christoffel(space, point, h)?,
        ),
    );
    c.insert(
        "oracle.k",
        dev_slices(g.k.components(), &fd::tensor_k(space, point, h)?),
    );
    c.insert(
        "oracle.transformed_c",
        dev_slices(
            gb.c.lower.components(),
            &fd::contracted_torsion(bar_space, point, h)?,
        ),
    );

    // printed sign choices
    let mut d: BTreeMap<&'static str, Dev> = BTreeMap::new();
    let s_v = s_tensor(&r, &g.metric, Transcription::Verbatim);
    d.insert(
        "verbatim.curvature_levi_civita",
        dev_tensor(
            &predicted_curvature_lc(&g.r_levi_civita, &s_v, &g.metric),
            &gb.r_levi_civita,
        ),
    );
    let q_v = q_form(&g, conv.stroke, Transcription::Verbatim);
    d.insert(
        "verbatim.q_invariance",
        dev_tensor(&q_v, &q_form(&gb, conv.stroke, Transcription::Verbatim)),
    );
    d.insert("verbatim.q_identification", dev_tensor(&circ_curv, &q_v));

    Ok(PointOutcome {
        checks: c,
        diagnostics: d,
    })
}

fn failure_note(name: &str, conv: Conventions) -> Option<String> {
    let stroke_sensitive = matches!(
        name,
        "invariance.b" | "invariance.q" | "ident.conn_hat_curvature" | "ident.conn_circ_curvature"
    );
    let sign_sensitive = matches!(
        name,
        "law.curvature_levi_civita" | "invariance.q" | "ident.conn_circ_curvature"
    );
    if stroke_sensitive && conv.stroke != Stroke::Weitzenbock {
        return Some(format!(
            "convention mismatch: the explicit formula uses the {} connection for the stroke derivative; \
             it matches the curvature of the conformal connection under the weitzenbock stroke",
            conv.stroke.name()
        ));
    }
    if sign_sensitive && conv.transcription == Transcription::Verbatim {
        return Some(
            "convention mismatch: verbatim sign transcription in use; the corrected signs restore this law"
                .to_string(),
        );
    }
    if matches!(
        name,
        "ident.conn_hat_curvature" | "ident.conn_circ_curvature"
    ) {
        return Some(format!(
            "convention mismatch: curvature of the conformal connection differs from the explicit \
             formula under the {} stroke",
            conv.stroke.name()
        ));
    }
    None
}

fn diagnostic_note(name: &str) -> &'static str {
    match name {
        "verbatim.curvature_levi_civita" => {
            "printed S sign (-1/2 g rho^2) against direct recomputation"
        }
        "verbatim.q_invariance" => "printed Q sign (+g C^a;v) before vs after the change",
        _ => "printed Q sign (+g C^a;v) against curvature of the circ connection",
    }
}

fn sample_points(n: usize, cfg: &SuiteConfig) -> Result<Vec<Vec<f64>>, SuiteError> {
    let domain = match &cfg.domain {
        Some(d) if d.len() != n => return Err(SuiteError::DomainLength { got: d.len(), n }),
        Some(d) => d.clone(),
        None => vec![[-1.0, 1.0]; n],
    };
    for (coord, &[lo, hi]) in domain.iter().enumerate() {
        if lo >= hi || !lo.is_finite() || !hi.is_finite() {
            return Err(SuiteError::EmptyInterval { coord, lo, hi });
        }
    }
    for (index, p) in cfg.explicit_points.iter().enumerate() {
        if p.len() != n {
            return Err(SuiteError::PointLength {
                index,
                got: p.len(),
                n,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = cfg.explicit_points.clone();
    for _ in 0..cfg.points {
        points.push(
            domain
                .iter()
                .map(|&[lo, hi]| rng.random_range(lo..hi))
                .collect(),
        );
    }
    if points.is_empty() {
        return Err(SuiteError::NoPoints);
    }
    Ok(points)
}

/// Runs every check in [`CHECKS`] on `space` and its conformal transform by
/// `rho`. Deterministic for a given configuration.
pub fn run_suite(
    space: &ApSpace,
    rho: &ConformalFactor,
    cfg: &SuiteConfig,
) -> Result<VerificationReport, SuiteError> {
    let n = space.dim();
    let needed = rho.expr().min_dimension();
    if needed > n {
        return Err(SuiteError::RhoDimension { needed, n });
    }
    cfg.tolerances.validate()?;
    let points = sample_points(n, cfg)?;
    let bar_space = transform_frame(space, rho);

    let mut checks: BTreeMap<&str, Dev> = BTreeMap::new();
    let mut diags: BTreeMap<&str, Dev> = BTreeMap::new();
    let mut skipped = 0;
    for p in &points {
        match evaluate_point(space, &bar_space, rho, p, cfg) {
            Ok(out) => {
                for (k, v) in out.checks {
                    let e = checks.entry(k).or_default();
                    *e = e.max(v);
                }
                for (k, v) in out.diagnostics {
                    let e = diags.entry(k).or_default();
                    *e = e.max(v);
                }
            }
            Err(PointFailure::Skip) => skipped += 1,
            Err(PointFailure::Fatal(e)) => return Err(e.into()),
        }
    }
    let total = points.len();
    if skipped == total {
        return Err(SuiteError::AllSingular(total));
    }
    if skipped * 5 > total {
        return Err(SuiteError::TooManySingular { skipped, total });
    }

    let conv = cfg.conventions;
    let results: Vec<CheckResult> = CHECKS
        .iter()
        .map(|def| {
            let dev = checks[def.name];
            let tolerance = cfg.tolerances.resolve(def);
            let judged = if def.kind.uses_relative() {
                dev.rel
            } else {
                dev.abs
            };
            let pass = judged <= tolerance;
            CheckResult {
                name: def.name.to_string(),
                kind: def.kind,
                tolerance,
                max_abs: dev.abs,
                max_rel: dev.rel,
                points_sampled: total,
                points_skipped: skipped,
                pass,
                note: if pass {
                    None
                } else {
                    failure_note(def.name, conv)
                },
            }
        })
        .collect();
    let diagnostics = DIAGNOSTICS
        .iter()
        .map(|&name| {
            let dev = diags[name];
            Diagnostic {
                name: name.to_string(),
                max_abs: dev.abs,
                max_rel: dev.rel,
                note: diagnostic_note(name).to_string(),
            }
        })
        .collect();
    Ok(VerificationReport {
        label: space.label().map(str::to_string),
        seed: cfg.seed,
        dimension: n,
        rho: rho.expr().to_string(),
        stroke: conv.stroke.name().to_string(),
        transcription: conv.transcription.name().to_string(),
        points_sampled: total,
        points_skipped: skipped,
        all_pass: results.iter().all(|c| c.pass),
        checks: results,
        diagnostics,
    })
}

fn random_term(n: usize, rng: &mut impl Rng) -> String {
    let c = rng.random_range(-0.3..0.3);
    let k = rng.random_range(1..=n);
    let basis = match rng.random_range(0..5) {
        0 => format!("x{k}"),
        1 => format!("x{k}*x{}", rng.random_range(1..=n)),
        2 => format!("sin(x{k})"),
        3 => format!("cos(x{k})"),
        _ => format!("exp(x{k})"),
    };
    format!("{c:.4}*{basis}")
}

fn well_conditioned(space: &ApSpace) -> bool {
    let n = space.dim();
    (0..(1usize << n))
        .chain(std::iter::once(usize::MAX))
        .all(|mask| {
            let p: Vec<f64> = (0..n)
                .map(|k| match mask {
                    usize::MAX => 0.0,
                    m if m >> k & 1 == 1 => 1.0,
                    _ => -1.0,
                })
                .collect();
            let m = nalgebra::DMatrix::from_row_slice(n, n, &space.frame_values(&p));
            m.determinant().abs() > 0.2
        })
}

/// Identity frame plus a small polynomial/trigonometric perturbation, with
/// one to two terms per entry and coefficients in [−0.3, 0.3]. Candidates
/// that come close to singular on the box [−1, 1]^n are redrawn.
pub fn random_space(n: usize, rng: &mut impl Rng) -> ApSpace {
    loop {
        let rows: Vec<Vec<String>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|mu| {
                        let mut entry = if i == mu {
                            "1".to_string()
                        } else {
                            "0".to_string()
                        };
                        for _ in 0..rng.random_range(1..=2) {
                            entry = format!("{entry} + {}", random_term(n, rng));
                        }
                        entry
                    })
                    .collect()
            })
            .collect();
        let space = ApSpace::parse(n, &rows).expect("generated expressions parse");
        if well_conditioned(&space) {
            return space;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(rows: &[&[&str]]) -> ApSpace {
        let rows: Vec<Vec<&str>> = rows.iter().map(|r| r.to_vec()).collect();
        ApSpace::parse(rows.len(), &rows).unwrap()
    }

    fn e2() -> ApSpace {
        space(&[&["cos(x2)", "sin(x2)"], &["-sin(x2)", "cos(x2)"]]).with_label("E2")
    }

    #[test]
    fn identity_all_zero() {
        let sp = space(&[&["1", "0"], &["0", "1"]]);
        let rho = ConformalFactor::parse("0", 2).unwrap();
        let rep = run_suite(&sp, &rho, &SuiteConfig::default()).unwrap();
        assert!(rep.all_pass);
        for c in &rep.checks {
            assert_eq!(c.max_abs, 0.0, "{}", c.name);
        }
    }

    #[test]
    fn every_check_once() {
        let rho = ConformalFactor::parse("x1", 2).unwrap();
        let rep = run_suite(&e2(), &rho, &SuiteConfig::default()).unwrap();
        assert_eq!(rep.checks.len(), CHECKS.len());
        let mut names: Vec<_> = rep.checks.iter().map(|c| c.name.clone()).collect();
        names.dedup();
        assert_eq!(names.len(), CHECKS.len());
        assert!(rep.all_pass, "{}", rep.to_text());
        assert_eq!(rep.label.as_deref(), Some("E2"));
    }

    #[test]
    fn deterministic() {
        let rho = ConformalFactor::parse("x1*x2", 2).unwrap();
        let cfg = SuiteConfig {
            seed: 7,
            ..SuiteConfig::default()
        };
        let a = run_suite(&e2(), &rho, &cfg).unwrap().to_json();
        let b = run_suite(&e2(), &rho, &cfg).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn verbatim_diagnostics_flag_signs() {
        let sp = random_space(3, &mut ChaCha8Rng::seed_from_u64(11));
        let rho = ConformalFactor::parse("x1*x2", 3).unwrap();
        let rep = run_suite(&sp, &rho, &SuiteConfig::default()).unwrap();
        assert!(rep.all_pass, "{}", rep.to_text());
        let d = |name: &str| {
            rep.diagnostics
                .iter()
                .find(|d| d.name == name)
                .unwrap()
                .max_abs
        };
        assert!(d("verbatim.curvature_levi_civita") > 0.1);
        assert!(d("verbatim.q_identification") > 0.1);
    }

    #[test]
    fn tolerance_validation() {
        let rho = ConformalFactor::parse("0", 2).unwrap();
        let mut cfg = SuiteConfig::default();
        cfg.tolerances.overrides.insert("nonsense".into(), 1.0);
        assert!(matches!(
            run_suite(&e2(), &rho, &cfg),
            Err(SuiteError::UnknownTolerance(_))
        ));
        cfg.tolerances.overrides.clear();
        cfg.tolerances.overrides.insert("oracle".into(), -1.0);
        assert!(matches!(
            run_suite(&e2(), &rho, &cfg),
            Err(SuiteError::BadTolerance { .. })
        ));
    }

    #[test]
    fn singular_points_counted() {
        // frame degenerates where x1 = 0
        let sp = space(&[&["x1", "0"], &["0", "1"]]);
        let rho = ConformalFactor::parse("0", 2).unwrap();
        let cfg = SuiteConfig {
            points: 0,
            explicit_points: vec![vec![0.0, 0.0]],
            ..SuiteConfig::default()
        };
        assert!(matches!(
            run_suite(&sp, &rho, &cfg),
            Err(SuiteError::AllSingular(1))
        ));
        let cfg = SuiteConfig {
            points: 0,
            explicit_points: vec![
                vec![0.0, 0.0],
                vec![0.5, 0.1],
                vec![0.6, 0.2],
                vec![0.7, 0.3],
                vec![0.8, 0.4],
            ],
            ..SuiteConfig::default()
        };
        let rep = run_suite(&sp, &rho, &cfg).unwrap();
        assert_eq!(rep.points_skipped, 1);
        assert_eq!(rep.points_sampled, 5);
    }

    #[test]
    fn bad_domain() {
        let rho = ConformalFactor::parse("0", 2).unwrap();
        let cfg = SuiteConfig {
            domain: Some(vec![[0.0, 1.0], [2.0, 2.0]]),
            ..SuiteConfig::default()
        };
        assert!(matches!(
            run_suite(&e2(), &rho, &cfg),
            Err(SuiteError::EmptyInterval { coord: 1, .. })
        ));
    }

    #[test]
    fn random_spaces_invertible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=4 {
            let sp = random_space(n, &mut rng);
            assert!(fd::coframe_values(&sp, &vec![0.25; n]).is_ok());
        }
    }
}
