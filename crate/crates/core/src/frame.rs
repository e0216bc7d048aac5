//! AP-spaces given by contravariant frame expressions, and the pointwise
//! quantities built from them: covariant frame, metric, Weitzenböck and
//! Levi-Civita connections, torsion, contracted torsion and contortion.
//!
//! Mesh (Latin) indices are summed without any metric weight.

use thiserror::Error;

use crate::connection::{torsion_of, ConnectionKind, ConnectionSample};
use crate::expr::{Expr, ParseError};
use crate::jet::{Jet2, JetError, JetMatrix};
use crate::tensor::{TensorSample, Variance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("dimension must be ≥ 2, got {0}")]
    Dimension(usize),
    #[error("frame must be {n}×{n}: {detail}")]
    Shape { n: usize, detail: String },
    #[error("frame[{row}][{col}]: {source}")]
    Parse {
        row: usize,
        col: usize,
        source: ParseError,
    },
    #[error("point has {got} coordinates, expected {n}")]
    PointLength { got: usize, n: usize },
    #[error(transparent)]
    Eval(#[from] JetError),
    #[error("metric is not positive definite at this point")]
    NotPositiveDefinite,
}

impl FrameError {
    /// True for errors tied to a particular point (skippable during sampling).
    pub fn is_pointwise(&self) -> bool {
        matches!(self, FrameError::Eval(_) | FrameError::NotPositiveDefinite)
    }
}

/// An n-dimensional AP-space on one chart: row `i` of `frame` holds the
/// components λᵢ^μ of the i-th parallelization vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct ApSpace {
    n: usize,
    frame: Vec<Expr>,
    label: Option<String>,
}

impl ApSpace {
    pub fn new(n: usize, frame: Vec<Vec<Expr>>) -> Result<Self, FrameError> {
        if n < 2 {
            return Err(FrameError::Dimension(n));
        }
        check_shape(n, frame.iter().map(Vec::len), frame.len())?;
        let flat: Vec<Expr> = frame.into_iter().flatten().collect();
        if let Some(e) = flat.iter().find(|e| e.min_dimension() > n) {
            return Err(FrameError::Shape {
                n,
                detail: format!("expression `{e}` references a coordinate beyond x{n}"),
            });
        }
        Ok(ApSpace {
            n,
            frame: flat,
            label: None,
        })
    }

    /// Parses every entry of a textual frame, reporting the failing cell.
    pub fn parse<S: AsRef<str>>(n: usize, rows: &[Vec<S>]) -> Result<Self, FrameError> {
        if n < 2 {
            return Err(FrameError::Dimension(n));
        }
        check_shape(n, rows.iter().map(Vec::len), rows.len())?;
        let frame = rows
            .iter()
            .enumerate()
            .map(|(row, cells)| {
                cells
                    .iter()
                    .enumerate()
                    .map(|(col, text)| {
                        Expr::parse(text.as_ref(), n).map_err(|source| FrameError::Parse {
                            row,
                            col,
                            source,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        ApSpace::new(n, frame)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// λᵢ^μ as an expression.
    pub fn component(&self, i: usize, mu: usize) -> &Expr {
        &self.frame[i * self.n + mu]
    }

    /// Replaces every component through `f(i, μ, λᵢ^μ)`.
    pub fn map_components(&self, mut f: impl FnMut(usize, usize, &Expr) -> Expr) -> ApSpace {
        let n = self.n;
        let frame = self
            .frame
            .iter()
            .enumerate()
            .map(|(k, e)| f(k / n, k % n, e))
            .collect();
        ApSpace {
            n,
            frame,
            label: self.label.clone(),
        }
    }

    /// λᵢ^μ values at `point` by plain floating-point evaluation.
    pub fn frame_values(&self, point: &[f64]) -> Vec<f64> {
        self.frame.iter().map(|e| e.eval_f64(point)).collect()
    }

    pub fn sample(&self, point: &[f64]) -> Result<FrameSample, FrameError> {
        sample_frame(self, point)
    }
}

fn check_shape(
    n: usize,
    row_lengths: impl Iterator<Item = usize>,
    rows: usize,
) -> Result<(), FrameError> {
    if rows != n {
        return Err(FrameError::Shape {
            n,
            detail: format!("found {rows} rows"),
        });
    }
    for (row, len) in row_lengths.enumerate() {
        if len != n {
            return Err(FrameError::Shape {
                n,
                detail: format!("row {row} has {len} entries"),
            });
        }
    }
    Ok(())
}

/// Contravariant and covariant frame components, as jets, at one point.
/// Both matrices are indexed `[i][μ]`.
#[derive(Debug, Clone)]
pub struct FrameSample {
    pub point: Vec<f64>,
    pub lam_up: JetMatrix,
    pub lam_down: JetMatrix,
}

impl FrameSample {
    pub fn dim(&self) -> usize {
        self.point.len()
    }

    /// λᵢ^μ as a vector field with first partials.
    pub fn frame_vector(&self, i: usize) -> TensorSample {
        row_tensor(&self.lam_up, i, Variance::Up)
    }

    /// λᵢμ as a covector field with first partials.
    pub fn coframe_covector(&self, i: usize) -> TensorSample {
        row_tensor(&self.lam_down, i, Variance::Down)
    }
}

fn row_tensor(m: &JetMatrix, i: usize, v: Variance) -> TensorSample {
    let n = m.size();
    TensorSample::from_fn(n, &[v], |idx| m.get(i, idx[0]).value())
        .with_partials(|idx, s| m.get(i, idx[0]).d(s))
}

pub fn sample_frame(space: &ApSpace, point: &[f64]) -> Result<FrameSample, FrameError> {
    let n = space.n;
    if point.len() != n {
        return Err(FrameError::PointLength {
            got: point.len(),
            n,
        });
    }
    let entries = space
        .frame
        .iter()
        .map(|e| e.eval_jet(point))
        .collect::<Result<Vec<_>, _>>()?;
    let lam_up = JetMatrix::new(n, entries);
    // Σᵢ λᵢ^μ λᵢν = δ^μ_ν means (lam_up)ᵀ · lam_down = I.
    let lam_down = lam_up.inverse()?.transpose();
    Ok(FrameSample {
        point: point.to_vec(),
        lam_up,
        lam_down,
    })
}

/// g_{μν} and g^{μν} with full jets.
#[derive(Debug, Clone)]
pub struct MetricSample {
    pub g: JetMatrix,
    pub g_inv: JetMatrix,
}

impl MetricSample {
    pub fn dim(&self) -> usize {
        self.g.size()
    }

    /// g_{μν} with first partials.
    pub fn lower(&self) -> TensorSample {
        matrix_tensor(&self.g, [Variance::Down, Variance::Down])
    }

    /// g^{μν} with first partials.
    pub fn upper(&self) -> TensorSample {
        matrix_tensor(&self.g_inv, [Variance::Up, Variance::Up])
    }

    #[inline]
    pub fn g(&self, m: usize, v: usize) -> f64 {
        self.g.get(m, v).value()
    }

    #[inline]
    pub fn g_inv(&self, m: usize, v: usize) -> f64 {
        self.g_inv.get(m, v).value()
    }

    /// Raises a covector with first partials: V^α = g^{αε}V_ε.
    pub fn raise(&self, covector: &TensorSample) -> TensorSample {
        let n = self.dim();
        let raised = TensorSample::from_fn(n, &[Variance::Up], |i| {
            (0..n)
                .map(|e| self.g_inv(i[0], e) * covector.get(&[e]))
                .sum()
        });
        if covector.has_partials() {
            raised.with_partials(|i, s| {
                (0..n)
                    .map(|e| {
                        let ge = self.g_inv.get(i[0], e);
                        ge.d(s) * covector.get(&[e]) + ge.value() * covector.partial(&[e], s)
                    })
                    .sum()
            })
        } else {
            raised
        }
    }
}

fn matrix_tensor(m: &JetMatrix, v: [Variance; 2]) -> TensorSample {
    TensorSample::from_fn(m.size(), &v, |i| m.get(i[0], i[1]).value())
        .with_partials(|i, s| m.get(i[0], i[1]).d(s))
}

pub fn metric(fs: &FrameSample) -> Result<MetricSample, FrameError> {
    let n = fs.dim();
    let np = fs.point.len();
    let gram = |m: &JetMatrix| {
        let entries = (0..n * n)
            .map(|k| {
                let (mu, nu) = (k / n, k % n);
                (0..n).fold(Jet2::constant(0.0, np), |acc, i| {
                    &acc + &(m.get(i, mu) * m.get(i, nu))
                })
            })
            .collect();
        JetMatrix::new(n, entries)
    };
    let g = gram(&fs.lam_down);
    let g_inv = gram(&fs.lam_up);
    if g.values().cholesky().is_none() {
        return Err(FrameError::NotPositiveDefinite);
    }
    Ok(MetricSample { g, g_inv })
}

/// Γ^α_{μν} = λᵢ^α λᵢμ,ν, with
/// Γ^α_{μν,σ} = λᵢ^α,σ λᵢμ,ν + λᵢ^α λᵢμ,νσ.
pub fn weitzenbock(fs: &FrameSample) -> ConnectionSample {
    let n = fs.dim();
    let (up, down) = (&fs.lam_up, &fs.lam_down);
    ConnectionSample::from_fn(n, ConnectionKind::Weitzenbock, |a, m, v| {
        (0..n)
            .map(|i| up.get(i, a).value() * down.get(i, m).d(v))
            .sum()
    })
    .with_partials(|a, m, v, s| {
        (0..n)
            .map(|i| {
                let (u, d) = (up.get(i, a), down.get(i, m));
                u.d(s) * d.d(v) + u.value() * d.dd(v, s)
            })
            .sum()
    })
}

/// Torsion Λ^α_{μν} of the Weitzenböck connection, with partials.
pub fn torsion(w: &ConnectionSample) -> TensorSample {
    torsion_of(w)
}

/// C_μ = Λ^ε_{εμ}, with C_{μ,ν}.
pub fn contracted_torsion(torsion: &TensorSample) -> TensorSample {
    let n = torsion.dim();
    let c = TensorSample::from_fn(n, &[Variance::Down], |i| {
        (0..n).map(|e| torsion.get(&[e, e, i[0]])).sum()
    });
    if torsion.has_partials() {
        c.with_partials(|i, s| (0..n).map(|e| torsion.partial(&[e, e, i[0]], s)).sum())
    } else {
        c
    }
}

/// Γ̊^α_{μν} = ½ g^{αε}(g_{εν,μ} + g_{εμ,ν} − g_{μν,ε}), with partials from
/// the metric Hessians.
pub fn christoffel(m: &MetricSample) -> ConnectionSample {
    let n = m.dim();
    let (g, gi) = (&m.g, &m.g_inv);
    // first-kind symbols [ε; μν] and their partials
    let first = |e: usize, mu: usize, nu: usize| {
        0.5 * (g.get(e, nu).d(mu) + g.get(e, mu).d(nu) - g.get(mu, nu).d(e))
    };
    let dfirst = |e: usize, mu: usize, nu: usize, s: usize| {
        0.5 * (g.get(e, nu).dd(mu, s) + g.get(e, mu).dd(nu, s) - g.get(mu, nu).dd(e, s))
    };
    ConnectionSample::from_fn(n, ConnectionKind::LeviCivita, |a, mu, nu| {
        (0..n)
            .map(|e| gi.get(a, e).value() * first(e, mu, nu))
            .sum()
    })
    .with_partials(|a, mu, nu, s| {
        (0..n)
            .map(|e| {
                let ge = gi.get(a, e);
                ge.d(s) * first(e, mu, nu) + ge.value() * dfirst(e, mu, nu, s)
            })
            .sum()
    })
}

/// γ^α_{μν} = Γ^α_{μν} − Γ̊^α_{μν}, with partials.
pub fn contortion(w: &ConnectionSample, lc: &ConnectionSample) -> TensorSample {
    w.to_tensor().add_scaled(&lc.to_tensor(), -1.0)
}

/// Second route to the contortion: γ^α_{μν} = λᵢ^α λᵢμ;ν.
pub fn contortion_via_frame(fs: &FrameSample, lc: &ConnectionSample) -> TensorSample {
    let n = fs.dim();
    let (up, down) = (&fs.lam_up, &fs.lam_down);
    let v = [Variance::Up, Variance::Down, Variance::Down];
    TensorSample::from_fn(n, &v, |idx| {
        let (a, mu, nu) = (idx[0], idx[1], idx[2]);
        (0..n)
            .map(|i| {
                let cov = down.get(i, mu).d(nu)
                    - (0..n)
                        .map(|e| lc.coeff(e, mu, nu) * down.get(i, e).value())
                        .sum::<f64>();
                up.get(i, a).value() * cov
            })
            .sum()
    })
}

/// Γ̂^α_{μν} = ½(Γ^α_{μν} + Γ^α_{νμ}), partials averaged likewise.
pub fn symmetric_part(w: &ConnectionSample) -> ConnectionSample {
    ConnectionSample::from_fn(w.dim(), ConnectionKind::SymmetricPart, |a, m, v| {
        0.5 * (w.coeff(a, m, v) + w.coeff(a, v, m))
    })
    .with_partials(|a, m, v, s| 0.5 * (w.dcoeff(a, m, v, s) + w.dcoeff(a, v, m, s)))
}
