//! The three conformal connections and the conformally invariant tensors
//! T, K, B and Q, each assembled from its explicit formula.
//!
//! Division factors 1/(n−1) and 1/(2(n−1)) are applied exactly as written,
//! term by term, without algebraic simplification.

use thiserror::Error;

use crate::conformal::{CQuantities, Transcription};
use crate::connection::{
    antisymmetrize_last2, covariant_derivative, ConnectionKind, ConnectionSample,
};
use crate::frame::MetricSample;
use crate::tensor::{delta, TensorSample, Variance};

use Variance::{Down, Up};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantError {
    #[error("invariants need dimension ≥ 2, got {0}")]
    Dimension(usize),
    #[error("{0} must carry first partials")]
    MissingPartials(&'static str),
}

/// Connection used for the stroke derivative inside the first brackets of
/// B and Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stroke {
    #[default]
    Weitzenbock,
    SymmetricPart,
}

impl Stroke {
    pub fn name(self) -> &'static str {
        match self {
            Stroke::Weitzenbock => "weitzenbock",
            Stroke::SymmetricPart => "symmetric",
        }
    }
}

fn inv_n_minus_1(n: usize) -> Result<f64, InvariantError> {
    if n < 2 {
        return Err(InvariantError::Dimension(n));
    }
    Ok(1.0 / (n - 1) as f64)
}

/// T^α_{μν} = Λ^α_{μν} − (1/(n−1)){δ^α_μ C_ν − δ^α_ν C_μ}.
pub fn tensor_t(torsion: &TensorSample, c: &TensorSample) -> Result<TensorSample, InvariantError> {
    let n = torsion.dim();
    let a = inv_n_minus_1(n)?;
    Ok(TensorSample::from_fn(n, &[Up, Down, Down], |i| {
        let (al, m, v) = (i[0], i[1], i[2]);
        torsion.get(i) - a * (delta(al, m) * c.get(&[v]) - delta(al, v) * c.get(&[m]))
    }))
}

/// K^α_{μνσ} = (1/(n−1)){δ^α_μ C_{ν,σ} − δ^α_μ C_{σ,ν}}.
pub fn tensor_k(c: &TensorSample) -> Result<TensorSample, InvariantError> {
    let n = c.dim();
    let a = inv_n_minus_1(n)?;
    if !c.has_partials() {
        return Err(InvariantError::MissingPartials("C_μ"));
    }
    Ok(TensorSample::from_fn(n, &[Up, Down, Down, Down], |i| {
        let (al, m, v, s) = (i[0], i[1], i[2], i[3]);
        a * (delta(al, m) * c.partial(&[v], s) - delta(al, m) * c.partial(&[s], v))
    }))
}

/// 𝚪^α_{μν} = Γ^α_{μν} − (1/(n−1)) δ^α_μ C_ν.
pub fn conformal_connection_gamma(
    w: &ConnectionSample,
    c: &TensorSample,
) -> Result<ConnectionSample, InvariantError> {
    let n = w.dim();
    let a = inv_n_minus_1(n)?;
    if !c.has_partials() || w.partials().is_none() {
        return Err(InvariantError::MissingPartials("Γ and C_μ"));
    }
    Ok(
        ConnectionSample::from_fn(n, ConnectionKind::ConformalGamma, |al, m, v| {
            w.coeff(al, m, v) - a * delta(al, m) * c.get(&[v])
        })
        .with_partials(|al, m, v, s| w.dcoeff(al, m, v, s) - a * delta(al, m) * c.partial(&[v], s)),
    )
}

/// B^α_{μνσ} = ¼ 𝔘_{νσ}{2Λ^α_{μν|σ} + Λ^ε_{μν}Λ^α_{σε} + Λ^ε_{σν}Λ^α_{εμ}}
///           − (1/(2(n−1))) 𝔘_{νσ}{δ^α_μ C_{σ,ν} + δ^α_σ C_{μ|̂ν}
///                                   − (1/(2(n−1))) δ^α_ν C_μ C_σ}.
///
/// `stroke` is the connection behind `|`; `hat` is the symmetric part Γ̂.
pub fn tensor_b(
    torsion: &TensorSample,
    c: &TensorSample,
    stroke: &ConnectionSample,
    hat: &ConnectionSample,
) -> Result<TensorSample, InvariantError> {
    let n = torsion.dim();
    let b = 0.5 * inv_n_minus_1(n)?;
    let lam_stroke =
        covariant_derivative(torsion, stroke).map_err(|_| InvariantError::MissingPartials("Λ"))?;
    let c_hat = covariant_derivative(c, hat).map_err(|_| InvariantError::MissingPartials("C_μ"))?;
    let lam = |a: usize, m: usize, v: usize| torsion.get(&[a, m, v]);

    let first = TensorSample::from_fn(n, &[Up, Down, Down, Down], |i| {
        let (a, m, v, s) = (i[0], i[1], i[2], i[3]);
        let quad: f64 = (0..n)
            .map(|e| lam(e, m, v) * lam(a, s, e) + lam(e, s, v) * lam(a, e, m))
            .sum();
        2.0 * lam_stroke.get(&[a, m, v, s]) + quad
    });
    let second = TensorSample::from_fn(n, &[Up, Down, Down, Down], |i| {
        let (a, m, v, s) = (i[0], i[1], i[2], i[3]);
        delta(a, m) * c.partial(&[s], v) + delta(a, s) * c_hat.get(&[m, v])
            - b * delta(a, v) * c.get(&[m]) * c.get(&[s])
    });
    let first = antisymmetrize_last2(&first).expect("rank 4");
    let second = antisymmetrize_last2(&second).expect("rank 4");
    Ok(first.scaled(0.25).add_scaled(&second, -b))
}

/// 𝚪̂^α_{μν} = Γ̂^α_{μν} − (1/(2(n−1)))(δ^α_μ C_ν + δ^α_ν C_μ).
pub fn conformal_connection_hat(
    hat: &ConnectionSample,
    c: &TensorSample,
) -> Result<ConnectionSample, InvariantError> {
    let n = hat.dim();
    let b = 0.5 * inv_n_minus_1(n)?;
    if !c.has_partials() || hat.partials().is_none() {
        return Err(InvariantError::MissingPartials("Γ̂ and C_μ"));
    }
    Ok(
        ConnectionSample::from_fn(n, ConnectionKind::ConformalHat, |a, m, v| {
            hat.coeff(a, m, v) - b * (delta(a, m) * c.get(&[v]) + delta(a, v) * c.get(&[m]))
        })
        .with_partials(|a, m, v, s| {
            hat.dcoeff(a, m, v, s)
                - b * (delta(a, m) * c.partial(&[v], s) + delta(a, v) * c.partial(&[m], s))
        }),
    )
}

/// Q^α_{μνσ} = 𝔘_{νσ}{γ^α_{μν|σ} + γ^ε_{μσ}γ^α_{εν} + ½ γ^α_{με}Λ^ε_{νσ}}
///           − (1/(n−1)) 𝔘_{νσ}{δ^α_μ C_{σ,ν} + δ^α_σ C_{μ;ν} ± g_{μσ} C^α_{;ν}
///               − (1/(n−1))(δ^α_ν C_μ C_σ − δ^α_ν g_{μσ} C² + g_{μσ} C_ν C^α)}.
///
/// The sign of the g_{μσ}C^α_{;ν} term is `+` for [`Transcription::Verbatim`]
/// and `−` for [`Transcription::Corrected`]; only the latter equals the
/// curvature of the circ connection and is conformally invariant.
pub fn tensor_q(
    contortion: &TensorSample,
    torsion: &TensorSample,
    cq: &CQuantities,
    metric: &MetricSample,
    stroke: &ConnectionSample,
    form: Transcription,
) -> Result<TensorSample, InvariantError> {
    let n = torsion.dim();
    let a = inv_n_minus_1(n)?;
    let gamma_stroke = covariant_derivative(contortion, stroke)
        .map_err(|_| InvariantError::MissingPartials("γ"))?;
    if !cq.lower.has_partials() {
        return Err(InvariantError::MissingPartials("C_μ"));
    }
    let g = |m: usize, v: usize| metric.g(m, v);
    let gam = |al: usize, m: usize, v: usize| contortion.get(&[al, m, v]);
    let c = |m: usize| cq.lower.get(&[m]);
    let cu = |m: usize| cq.upper.get(&[m]);
    let sign = match form {
        Transcription::Corrected => -1.0,
        Transcription::Verbatim => 1.0,
    };

    let first = TensorSample::from_fn(n, &[Up, Down, Down, Down], |i| {
        let (al, m, v, s) = (i[0], i[1], i[2], i[3]);
        let quad: f64 = (0..n)
            .map(|e| gam(e, m, s) * gam(al, e, v) + 0.5 * gam(al, m, e) * torsion.get(&[e, v, s]))
            .sum();
        gamma_stroke.get(&[al, m, v, s]) + quad
    });
    let second = TensorSample::from_fn(n, &[Up, Down, Down, Down], |i| {
        let (al, m, v, s) = (i[0], i[1], i[2], i[3]);
        delta(al, m) * cq.lower.partial(&[s], v)
            + delta(al, s) * cq.lower_semi.get(&[m, v])
            + sign * g(m, s) * cq.upper_semi.get(&[al, v])
            - a * (delta(al, v) * c(m) * c(s) - delta(al, v) * g(m, s) * cq.sq
                + g(m, s) * c(v) * cu(al))
    });
    let first = antisymmetrize_last2(&first).expect("rank 4");
    let second = antisymmetrize_last2(&second).expect("rank 4");
    Ok(first.add_scaled(&second, -a))
}

/// 𝚪̊^α_{μν} = Γ̊^α_{μν} − (1/(n−1))(δ^α_μ C_ν + δ^α_ν C_μ − g_{μν} C^α).
pub fn conformal_connection_circ(
    lc: &ConnectionSample,
    cq: &CQuantities,
    metric: &MetricSample,
) -> Result<ConnectionSample, InvariantError> {
    let n = lc.dim();
    let a = inv_n_minus_1(n)?;
    if !cq.lower.has_partials() || !cq.upper.has_partials() || lc.partials().is_none() {
        return Err(InvariantError::MissingPartials("Γ̊, C_μ and C^μ"));
    }
    let (c, cu) = (&cq.lower, &cq.upper);
    Ok(
        ConnectionSample::from_fn(n, ConnectionKind::ConformalCirc, |al, m, v| {
            lc.coeff(al, m, v)
                - a * (delta(al, m) * c.get(&[v]) + delta(al, v) * c.get(&[m])
                    - metric.g(m, v) * cu.get(&[al]))
        })
        .with_partials(|al, m, v, s| {
            lc.dcoeff(al, m, v, s)
                - a * (delta(al, m) * c.partial(&[v], s) + delta(al, v) * c.partial(&[m], s)
                    - metric.g.get(m, v).d(s) * cu.get(&[al])
                    - metric.g(m, v) * cu.partial(&[al], s))
        }),
    )
}
