//! Central finite-difference oracle.
//!
//! Everything here works from plain floating-point evaluation of the frame
//! expressions and value-level matrix inverses, so it never touches the jet
//! path it is used to check.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::expr::Expr;
use crate::frame::ApSpace;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FdError {
    #[error("finite-difference step must be positive, got {0}")]
    BadStep(f64),
    #[error("singular evaluation at stencil point {0:?}")]
    Singular(Vec<f64>),
}

/// Value, gradient and Hessian estimates of a scalar function.
#[derive(Debug, Clone, PartialEq)]
pub struct FdDerivatives {
    pub value: f64,
    pub grad: Vec<f64>,
    /// row-major n×n
    pub hess: Vec<f64>,
}

fn check_step(h: f64) -> Result<(), FdError> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(FdError::BadStep(h))
    }
}

fn finite(v: f64, at: &[f64]) -> Result<f64, FdError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(FdError::Singular(at.to_vec()))
    }
}

fn shifted(point: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut p = point.to_vec();
    for &(k, d) in moves {
        p[k] += d;
    }
    p
}

/// (f(x+h) − f(x−h)) / 2h along every coordinate.
pub fn gradient(f: impl Fn(&[f64]) -> f64, point: &[f64], h: f64) -> Result<Vec<f64>, FdError> {
    check_step(h)?;
    (0..point.len())
        .map(|k| {
            let (p, m) = (shifted(point, &[(k, h)]), shifted(point, &[(k, -h)]));
            Ok((finite(f(&p), &p)? - finite(f(&m), &m)?) / (2.0 * h))
        })
        .collect()
}

/// Three-point second differences on the diagonal, four-point mixed
/// stencils off it.
pub fn derivatives(
    f: impl Fn(&[f64]) -> f64,
    point: &[f64],
    h: f64,
) -> Result<FdDerivatives, FdError> {
    check_step(h)?;
    let n = point.len();
    let eval = |moves: &[(usize, f64)]| {
        let p = shifted(point, moves);
        finite(f(&p), &p)
    };
    let value = eval(&[])?;
    let grad = gradient(&f, point, h)?;
    let mut hess = vec![0.0; n * n];
    for i in 0..n {
        hess[i * n + i] = (eval(&[(i, h)])? - 2.0 * value + eval(&[(i, -h)])?) / (h * h);
        for j in (i + 1)..n {
            let v =
                (eval(&[(i, h), (j, h)])? - eval(&[(i, h), (j, -h)])? - eval(&[(i, -h), (j, h)])?
                    + eval(&[(i, -h), (j, -h)])?)
                    / (4.0 * h * h);
            hess[i * n + j] = v;
            hess[j * n + i] = v;
        }
    }
    Ok(FdDerivatives { value, grad, hess })
}

pub fn expr_derivatives(e: &Expr, point: &[f64], h: f64) -> Result<FdDerivatives, FdError> {
    derivatives(|p| e.eval_f64(p), point, h)
}

/// Covariant frame λᵢμ at `point` (row-major `[i][μ]`) from a value-level
/// inverse of the contravariant frame.
pub fn coframe_values(space: &ApSpace, point: &[f64]) -> Result<DMatrix<f64>, FdError> {
    let n = space.dim();
    let up = DMatrix::from_row_slice(n, n, &space.frame_values(point));
    up.try_inverse()
        .map(|inv| inv.transpose())
        .filter(|m| m.iter().all(|x| x.is_finite()))
        .ok_or_else(|| FdError::Singular(point.to_vec()))
}

/// g_{μν} at `point` from the value-level coframe.
pub fn metric_values(space: &ApSpace, point: &[f64]) -> Result<DMatrix<f64>, FdError> {
    let d = coframe_values(space, point)?;
    Ok(d.transpose() * d)
}

/// Weitzenböck coefficients Γ^α_{μν} = λᵢ^α ∂_ν λᵢμ, flat `[α][μ][ν]`.
pub fn weitzenbock(space: &ApSpace, point: &[f64], h: f64) -> Result<Vec<f64>, FdError> {
    check_step(h)?;
    let n = space.dim();
    let up = space.frame_values(point);
    // ∂_ν λᵢμ by central differences of the coframe
    let mut dd = Vec::with_capacity(n);
    for nu in 0..n {
        let p = coframe_values(space, &shifted(point, &[(nu, h)]))?;
        let m = coframe_values(space, &shifted(point, &[(nu, -h)]))?;
        dd.push((p - m) / (2.0 * h));
    }
    let mut out = vec![0.0; n * n * n];
    for a in 0..n {
        for mu in 0..n {
            for nu in 0..n {
                out[(a * n + mu) * n + nu] = (0..n).map(|i| up[i * n + a] * dd[nu][(i, mu)]).sum();
            }
        }
    }
    Ok(out)
}

/// Christoffel symbols from central differences of the value-level metric.
pub fn christoffel(space: &ApSpace, point: &[f64], h: f64) -> Result<Vec<f64>, FdError> {
    check_step(h)?;
    let n = space.dim();
    let g_inv = metric_values(space, point)?
        .try_inverse()
        .ok_or_else(|| FdError::Singular(point.to_vec()))?;
    let mut dg = Vec::with_capacity(n);
    for k in 0..n {
        let p = metric_values(space, &shifted(point, &[(k, h)]))?;
        let m = metric_values(space, &shifted(point, &[(k, -h)]))?;
        dg.push((p - m) / (2.0 * h));
    }
    let mut out = vec![0.0; n * n * n];
    for a in 0..n {
        for mu in 0..n {
            for nu in 0..n {
                out[(a * n + mu) * n + nu] = (0..n)
                    .map(|e| {
                        0.5 * g_inv[(a, e)] * (dg[mu][(e, nu)] + dg[nu][(e, mu)] - dg[e][(mu, nu)])
                    })
                    .sum();
            }
        }
    }
    Ok(out)
}

/// C_μ = Γ^ε_{εμ} − Γ^ε_{με} from finite-difference Weitzenböck coefficients.
pub fn contracted_torsion(space: &ApSpace, point: &[f64], h: f64) -> Result<Vec<f64>, FdError> {
    let n = space.dim();
    let w = weitzenbock(space, point, h)?;
    Ok((0..n)
        .map(|mu| {
            (0..n)
                .map(|e| w[(e * n + e) * n + mu] - w[(e * n + mu) * n + e])
                .sum()
        })
        .collect())
}

/// C_{μ,σ} by nested central differences, flat `[μ][σ]`.
pub fn contracted_torsion_partials(
    space: &ApSpace,
    point: &[f64],
    h: f64,
) -> Result<Vec<f64>, FdError> {
    let n = space.dim();
    let mut out = vec![0.0; n * n];
    for s in 0..n {
        let p = contracted_torsion(space, &shifted(point, &[(s, h)]), h)?;
        let m = contracted_torsion(space, &shifted(point, &[(s, -h)]), h)?;
        for mu in 0..n {
            out[mu * n + s] = (p[mu] - m[mu]) / (2.0 * h);
        }
    }
    Ok(out)
}

/// K^α_{μνσ} = (δ^α_μ C_{ν,σ} − δ^α_μ C_{σ,ν})/(n−1) from the nested
/// finite-difference C partials, flat `[α][μ][ν][σ]`.
pub fn tensor_k(space: &ApSpace, point: &[f64], h: f64) -> Result<Vec<f64>, FdError> {
    let n = space.dim();
    let dc = contracted_torsion_partials(space, point, h)?;
    let scale = 1.0 / (n - 1) as f64;
    let mut out = vec![0.0; n * n * n * n];
    for a in 0..n {
        for v in 0..n {
            for s in 0..n {
                out[((a * n + a) * n + v) * n + s] = scale * (dc[v * n + s] - dc[s * n + v]);
            }
        }
    }
    Ok(out)
}
