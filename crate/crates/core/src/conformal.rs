//! Conformal change of an AP-space, λ̄ᵢ^μ = e^{−ρ} λᵢ^μ (so ḡ = e^{2ρ} g),
//! and the predicted transformation law of every derived object.
//!
//! Each `predicted_*` function takes quantities of the original space plus
//! the factor ρ and returns what the transformed space should produce. The
//! verification layer compares them against direct recomputation on
//! [`transform_frame`]'s output.

use crate::connection::{
    antisymmetrize_last2, covariant_derivative, ConnectionKind, ConnectionSample,
};
use crate::expr::{Expr, Func, ParseError};
use crate::frame::{ApSpace, FrameError, MetricSample};
use crate::jet::Jet2;
use crate::tensor::{delta, TensorSample, Variance};

use Variance::{Down, Up};

/// Which transcription of a formula to use where the printed sign disagrees
/// with the identity it is meant to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transcription {
    /// Sign chosen so the identity holds.
    #[default]
    Corrected,
    /// Term-by-term as printed.
    Verbatim,
}

impl Transcription {
    pub fn name(self) -> &'static str {
        match self {
            Transcription::Corrected => "corrected",
            Transcription::Verbatim => "verbatim",
        }
    }
}

/// The conformal factor ρ(x).
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalFactor {
    rho: Expr,
}

impl ConformalFactor {
    pub fn new(rho: Expr) -> Self {
        ConformalFactor { rho }
    }

    pub fn parse(text: &str, n: usize) -> Result<Self, ParseError> {
        Expr::parse(text, n).map(ConformalFactor::new)
    }

    pub fn expr(&self) -> &Expr {
        &self.rho
    }

    pub fn sample(
        &self,
        point: &[f64],
        metric: &MetricSample,
        lc: &ConnectionSample,
    ) -> Result<RhoSample, FrameError> {
        let jet = self.rho.eval_jet(point)?;
        Ok(RhoSample::new(&jet, metric, lc))
    }
}

/// ρ and its derived quantities at one point.
#[derive(Debug, Clone)]
pub struct RhoSample {
    pub value: f64,
    /// ρ_μ, with partials ρ_{μ,ν}.
    pub lower: TensorSample,
    /// ρ^μ = g^{μν}ρ_ν, with partials.
    pub upper: TensorSample,
    /// ρ² = ρ^ε ρ_ε.
    pub sq: f64,
    /// ρ_{μ;ν}
    pub lower_semi: TensorSample,
    /// ρ^α_{;ν}
    pub upper_semi: TensorSample,
}

impl RhoSample {
    pub fn new(jet: &Jet2, metric: &MetricSample, lc: &ConnectionSample) -> Self {
        let n = jet.dim();
        let lower = TensorSample::from_fn(n, &[Down], |i| jet.d(i[0]))
            .with_partials(|i, s| jet.dd(i[0], s));
        let upper = metric.raise(&lower);
        let sq = (0..n).map(|e| upper.get(&[e]) * lower.get(&[e])).sum();
        let lower_semi = covariant_derivative(&lower, lc).expect("partials attached");
        let upper_semi = covariant_derivative(&upper, lc).expect("partials attached");
        RhoSample {
            value: jet.value(),
            lower,
            upper,
            sq,
            lower_semi,
            upper_semi,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    #[inline]
    pub fn d(&self, mu: usize) -> f64 {
        self.lower.get(&[mu])
    }

    #[inline]
    pub fn up(&self, mu: usize) -> f64 {
        self.upper.get(&[mu])
    }
}

/// λ̄ᵢ^μ = exp(−ρ)·λᵢ^μ, built at expression level.
pub fn transform_frame(space: &ApSpace, rho: &ConformalFactor) -> ApSpace {
    let factor = Expr::call(Func::Exp, Expr::negated(rho.expr().clone()));
    let out = space.map_components(|_, _, e| Expr::product(factor.clone(), e.clone()));
    match space.label() {
        Some(l) => out.with_label(format!("{l} (conformal)")),
        None => out,
    }
}

/// Γ̄^α_{μν} = Γ^α_{μν} + δ^α_μ ρ_ν.
pub fn predicted_weitzenbock(w: &ConnectionSample, rho: &RhoSample) -> ConnectionSample {
    ConnectionSample::from_fn(w.dim(), ConnectionKind::Other, |a, m, v| {
        w.coeff(a, m, v) + delta(a, m) * rho.d(v)
    })
    .with_partials(|a, m, v, s| w.dcoeff(a, m, v, s) + delta(a, m) * rho.lower.partial(&[v], s))
}

/// Λ̄^α_{μν} = Λ^α_{μν} + δ^α_μ ρ_ν − δ^α_ν ρ_μ.
pub fn predicted_torsion(torsion: &TensorSample, rho: &RhoSample) -> TensorSample {
    let n = torsion.dim();
    let shift = TensorSample::from_fn(n, &[Up, Down, Down], |i| {
        delta(i[0], i[1]) * rho.d(i[2]) - delta(i[0], i[2]) * rho.d(i[1])
    })
    .with_partials(|i, s| {
        delta(i[0], i[1]) * rho.lower.partial(&[i[2]], s)
            - delta(i[0], i[2]) * rho.lower.partial(&[i[1]], s)
    });
    torsion.add_scaled(&shift, 1.0)
}

/// Γ̊̄^α_{μν} = Γ̊^α_{μν} + δ^α_μ ρ_ν + δ^α_ν ρ_μ − g_{μν} ρ^α.
pub fn predicted_levicivita(
    lc: &ConnectionSample,
    rho: &RhoSample,
    metric: &MetricSample,
) -> ConnectionSample {
    ConnectionSample::from_fn(lc.dim(), ConnectionKind::Other, |a, m, v| {
        lc.coeff(a, m, v) + delta(a, m) * rho.d(v) + delta(a, v) * rho.d(m)
            - metric.g(m, v) * rho.up(a)
    })
    .with_partials(|a, m, v, s| {
        lc.dcoeff(a, m, v, s)
            + delta(a, m) * rho.lower.partial(&[v], s)
            + delta(a, v) * rho.lower.partial(&[m], s)
            - metric.g.get(m, v).d(s) * rho.up(a)
            - metric.g(m, v) * rho.upper.partial(&[a], s)
    })
}

/// S_{μν} and S^α_ν = g^{αε} S_{εν}.
#[derive(Debug, Clone)]
pub struct STensor {
    pub lower: TensorSample,
    pub mixed: TensorSample,
}

/// S_{μν} = ρ_{μ;ν} − ρ_μρ_ν ∓ ½ g_{μν} ρ².
///
/// `Verbatim` uses −½ g_{μν}ρ² as printed; `Corrected` uses +½, which is the
/// sign under which the Levi-Civita curvature law holds.
pub fn s_tensor(rho: &RhoSample, metric: &MetricSample, form: Transcription) -> STensor {
    let n = rho.dim();
    let half = match form {
        Transcription::Corrected => 0.5,
        Transcription::Verbatim => -0.5,
    };
    let lower = TensorSample::from_fn(n, &[Down, Down], |i| {
        let (m, v) = (i[0], i[1]);
        rho.lower_semi.get(&[m, v]) - rho.d(m) * rho.d(v) + half * metric.g(m, v) * rho.sq
    });
    let mixed = TensorSample::from_fn(n, &[Up, Down], |i| {
        (0..n)
            .map(|e| metric.g_inv(i[0], e) * lower.get(&[e, i[1]]))
            .sum()
    });
    STensor { lower, mixed }
}

/// R̊̄ = R̊ + 𝔘_{νσ}{δ^α_σ S_{μν} − g_{μσ} S^α_ν}.
pub fn predicted_curvature_lc(
    r: &TensorSample,
    s: &STensor,
    metric: &MetricSample,
) -> TensorSample {
    let n = r.dim();
    let inner = TensorSample::from_fn(n, &[Up, Down, Down, Down], |i| {
        let (a, m, v, sg) = (i[0], i[1], i[2], i[3]);
        delta(a, sg) * s.lower.get(&[m, v]) - metric.g(m, sg) * s.mixed.get(&[a, v])
    });
    r.add_scaled(&antisymmetrize_last2(&inner).expect("rank 4"), 1.0)
}

/// γ̄^α_{μν} = γ^α_{μν} − δ^α_ν ρ_μ + g_{μν} ρ^α.
pub fn predicted_contortion(
    gamma: &TensorSample,
    rho: &RhoSample,
    metric: &MetricSample,
) -> TensorSample {
    let shift = TensorSample::from_fn(gamma.dim(), &[Up, Down, Down], |i| {
        let (a, m, v) = (i[0], i[1], i[2]);
        -delta(a, v) * rho.d(m) + metric.g(m, v) * rho.up(a)
    });
    TensorSample::from_fn(gamma.dim(), gamma.variance(), |i| {
        gamma.get(i) + shift.get(i)
    })
}

/// C̄_ν = C_ν + (n−1) ρ_ν, with partials.
pub fn predicted_c(c: &TensorSample, rho: &RhoSample) -> TensorSample {
    let k = (c.dim() - 1) as f64;
    c.add_scaled(&rho.lower, k)
}

/// Γ̂̄^α_{μν} = Γ̂^α_{μν} + ½(δ^α_μ ρ_ν + δ^α_ν ρ_μ).
pub fn predicted_symmetric(hat: &ConnectionSample, rho: &RhoSample) -> ConnectionSample {
    ConnectionSample::from_fn(hat.dim(), ConnectionKind::Other, |a, m, v| {
        hat.coeff(a, m, v) + 0.5 * (delta(a, m) * rho.d(v) + delta(a, v) * rho.d(m))
    })
    .with_partials(|a, m, v, s| {
        hat.dcoeff(a, m, v, s)
            + 0.5
                * (delta(a, m) * rho.lower.partial(&[v], s)
                    + delta(a, v) * rho.lower.partial(&[m], s))
    })
}

/// R̂̄ = R̂ + ½ 𝔘_{νσ}{δ^α_σ ρ_{μ|̂ν} + ½ δ^α_ν ρ_σ ρ_μ}.
pub fn predicted_curvature_sym(
    r_hat: &TensorSample,
    rho: &RhoSample,
    hat: &ConnectionSample,
) -> TensorSample {
    let n = r_hat.dim();
    let rho_hat = covariant_derivative(&rho.lower, hat).expect("partials attached");
    let inner = TensorSample::from_fn(n, &[Up, Down, Down, Down], |i| {
        let (a, m, v, s) = (i[0], i[1], i[2], i[3]);
        delta(a, s) * rho_hat.get(&[m, v]) + 0.5 * delta(a, v) * rho.d(s) * rho.d(m)
    });
    r_hat.add_scaled(&antisymmetrize_last2(&inner).expect("rank 4"), 0.5)
}

/// C̄_{μ‖̂ν} = C_{μ|̂ν} + (n−1)ρ_{μ|̂ν} − ½(C_μρ_ν + C_νρ_μ) − (n−1)ρ_μρ_ν,
/// where ‖̂ is the covariant derivative of the transformed symmetric part.
pub fn predicted_c_symcov(
    c_hatcov: &TensorSample,
    c: &TensorSample,
    rho: &RhoSample,
    hat: &ConnectionSample,
) -> TensorSample {
    let n = c.dim();
    let k = (n - 1) as f64;
    let rho_hat = covariant_derivative(&rho.lower, hat).expect("partials attached");
    TensorSample::from_fn(n, &[Down, Down], |i| {
        let (m, v) = (i[0], i[1]);
        c_hatcov.get(&[m, v]) + k * rho_hat.get(&[m, v])
            - 0.5 * (c.get(&[m]) * rho.d(v) + c.get(&[v]) * rho.d(m))
            - k * rho.d(m) * rho.d(v)
    })
}

/// The contracted-torsion quantities of one space.
#[derive(Debug, Clone)]
pub struct CQuantities {
    /// C_σ
    pub lower: TensorSample,
    /// C^σ = g^{σε} C_ε
    pub upper: TensorSample,
    /// C² = C_ε C^ε
    pub sq: f64,
    /// C_{μ;ν}
    pub lower_semi: TensorSample,
    /// C^α_{;ν}
    pub upper_semi: TensorSample,
}

/// Predicted C_μ, C^μ, C², C_{μ;ν} and C^α_{;ν} of the transformed space.
pub fn predicted_c_quantities(
    cq: &CQuantities,
    rho: &RhoSample,
    metric: &MetricSample,
) -> CQuantities {
    let n = rho.dim();
    let k = (n - 1) as f64;
    let scale = (-2.0 * rho.value).exp();
    let c = |m: usize| cq.lower.get(&[m]);
    let cu = |m: usize| cq.upper.get(&[m]);
    let c_dot_rho: f64 = (0..n).map(|e| c(e) * rho.up(e)).sum();

    let lower = TensorSample::from_fn(n, &[Down], |i| c(i[0]) + k * rho.d(i[0]));
    let upper = TensorSample::from_fn(n, &[Up], |i| scale * (cu(i[0]) + k * rho.up(i[0])));
    let sq = scale * (cq.sq + 2.0 * k * c_dot_rho + k * k * rho.sq);
    let lower_semi = TensorSample::from_fn(n, &[Down, Down], |i| {
        let (m, v) = (i[0], i[1]);
        let g = metric.g(m, v);
        cq.lower_semi.get(&[m, v]) + k * rho.lower_semi.get(&[m, v])
            - (c(m) * rho.d(v) + c(v) * rho.d(m) - g * c_dot_rho)
            - k * (2.0 * rho.d(m) * rho.d(v) - g * rho.sq)
    });
    let upper_semi = TensorSample::from_fn(n, &[Up, Down], |i| {
        let (a, v) = (i[0], i[1]);
        let d = delta(a, v);
        scale
            * (cq.upper_semi.get(&[a, v])
                + k * rho.upper_semi.get(&[a, v])
                + (d * c_dot_rho - cu(a) * rho.d(v) - c(v) * rho.up(a))
                + k * (d * rho.sq - 2.0 * rho.up(a) * rho.d(v)))
    });
    CQuantities {
        lower,
        upper,
        sq,
        lower_semi,
        upper_semi,
    }
}
