//! Everything the engine knows about an AP-space at one point, computed in
//! one pass.

use crate::conformal::{CQuantities, Transcription};
use crate::connection::{covariant_derivative, curvature, torsion_of, ConnectionSample};
use crate::frame::{
    christoffel, contortion, contracted_torsion, metric, sample_frame, symmetric_part, torsion,
    weitzenbock, ApSpace, FrameError, FrameSample, MetricSample,
};
use crate::invariants::{
    conformal_connection_circ, conformal_connection_gamma, conformal_connection_hat, tensor_b,
    tensor_k, tensor_q, tensor_t, Stroke,
};
use crate::tensor::TensorSample;

/// Convention switches for the explicit B and Q formulas (and the S tensor
/// used by the verifier).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Conventions {
    pub stroke: Stroke,
    pub transcription: Transcription,
}

#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub point: Vec<f64>,
    pub frame: FrameSample,
    pub metric: MetricSample,
    /// Γ
    pub weitzenbock: ConnectionSample,
    /// Γ̊
    pub levi_civita: ConnectionSample,
    /// Γ̂
    pub symmetric: ConnectionSample,
    /// Λ
    pub torsion: TensorSample,
    /// γ
    pub contortion: TensorSample,
    /// C_μ, C^μ, C², C_{μ;ν}, C^α_{;ν}
    pub c: CQuantities,
    /// C_{μ|̂ν}
    pub c_hatcov: TensorSample,
    pub r_weitzenbock: TensorSample,
    pub r_levi_civita: TensorSample,
    pub r_symmetric: TensorSample,
    /// 𝚪, 𝚪̂, 𝚪̊
    pub conn_gamma: ConnectionSample,
    pub conn_hat: ConnectionSample,
    pub conn_circ: ConnectionSample,
    pub t: TensorSample,
    pub k: TensorSample,
    pub b: TensorSample,
    pub q: TensorSample,
}

impl PointGeometry {
    pub fn compute(
        space: &ApSpace,
        point: &[f64],
        conventions: Conventions,
    ) -> Result<Self, FrameError> {
        let frame = sample_frame(space, point)?;
        let metric = metric(&frame)?;
        let w = weitzenbock(&frame);
        let lc = christoffel(&metric);
        let hat = symmetric_part(&w);
        let lam = torsion(&w);
        let gamma = contortion(&w, &lc);
        let c_lower = contracted_torsion(&lam);
        let c_upper = metric.raise(&c_lower);
        let n = space.dim();
        let c_sq = (0..n).map(|e| c_lower.get(&[e]) * c_upper.get(&[e])).sum();
        let cov = |t: &TensorSample, c: &ConnectionSample| {
            covariant_derivative(t, c).expect("partials attached at sample time")
        };
        let c = CQuantities {
            lower_semi: cov(&c_lower, &lc),
            upper_semi: cov(&c_upper, &lc),
            lower: c_lower,
            upper: c_upper,
            sq: c_sq,
        };
        let c_hatcov = cov(&c.lower, &hat);
        let curv = |conn: &ConnectionSample| curvature(conn).expect("partials attached");

        // n ≥ 2 is guaranteed by ApSpace, so the invariant builders cannot fail.
        let stroke = match conventions.stroke {
            Stroke::Weitzenbock => &w,
            Stroke::SymmetricPart => &hat,
        };
        let conn_gamma = conformal_connection_gamma(&w, &c.lower).expect("n ≥ 2");
        let conn_hat = conformal_connection_hat(&hat, &c.lower).expect("n ≥ 2");
        let conn_circ = conformal_connection_circ(&lc, &c, &metric).expect("n ≥ 2");
        let t = tensor_t(&lam, &c.lower).expect("n ≥ 2");
        let k = tensor_k(&c.lower).expect("n ≥ 2");
        let b = tensor_b(&lam, &c.lower, stroke, &hat).expect("n ≥ 2");
        let q =
            tensor_q(&gamma, &lam, &c, &metric, stroke, conventions.transcription).expect("n ≥ 2");

        Ok(PointGeometry {
            point: point.to_vec(),
            r_weitzenbock: curv(&w),
            r_levi_civita: curv(&lc),
            r_symmetric: curv(&hat),
            frame,
            metric,
            weitzenbock: w,
            levi_civita: lc,
            symmetric: hat,
            torsion: lam,
            contortion: gamma,
            c,
            c_hatcov,
            conn_gamma,
            conn_hat,
            conn_circ,
            t,
            k,
            b,
            q,
        })
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }

    /// Torsion of 𝚪 (should equal T).
    pub fn conn_gamma_torsion(&self) -> TensorSample {
        torsion_of(&self.conn_gamma)
    }

    pub fn conn_gamma_curvature(&self) -> TensorSample {
        curvature(&self.conn_gamma).expect("partials attached")
    }

    pub fn conn_hat_curvature(&self) -> TensorSample {
        curvature(&self.conn_hat).expect("partials attached")
    }

    pub fn conn_circ_curvature(&self) -> TensorSample {
        curvature(&self.conn_circ).expect("partials attached")
    }
}
