//! Second-order Taylor jets over an `n`-dimensional chart.
//!
//! A [`Jet2`] carries the value, gradient and Hessian of a scalar field at a
//! single point. Arithmetic and the elementary functions propagate all three
//! exactly (up to rounding), which is what the connection and curvature code
//! needs: frame components are differentiated at most twice.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("singular evaluation: {0}")]
    Singular(String),
    #[error("coordinate index {coord} out of range for dimension {n}")]
    CoordOutOfRange { coord: usize, n: usize },
    #[error("jet dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("frame degeneracy: value matrix is singular")]
    SingularMatrix,
}

/// Value, gradient and (dense, symmetric) Hessian of a scalar at a point.
#[derive(Clone, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: Vec<f64>,
    // row-major n×n, kept symmetric by every constructor
    hess: Vec<f64>,
}

impl fmt::Debug for Jet2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet2")
            .field("value", &self.value)
            .field("grad", &self.grad)
            .field("hess", &self.hess)
            .finish()
    }
}

impl Jet2 {
    pub fn constant(c: f64, n: usize) -> Self {
        Jet2 {
            value: c,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
        }
    }

    /// Seeds coordinate `coord` as an independent variable at `point`.
    pub fn variable(point: &[f64], coord: usize) -> Result<Self, JetError> {
        let n = point.len();
        if coord >= n {
            return Err(JetError::CoordOutOfRange { coord, n });
        }
        let mut jet = Jet2::constant(point[coord], n);
        jet.grad[coord] = 1.0;
        Ok(jet)
    }

    /// Builds a jet from raw parts. The Hessian is symmetrized on the way in.
    pub fn from_parts(value: f64, grad: Vec<f64>, hess: Vec<f64>) -> Self {
        let n = grad.len();
        assert_eq!(hess.len(), n * n, "hessian must be n×n");
        let mut jet = Jet2 { value, grad, hess };
        jet.symmetrize();
        jet
    }

    fn symmetrize(&mut self) {
        let n = self.dim();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.hess[i * n + j] + self.hess[j * n + i]);
                self.hess[i * n + j] = avg;
                self.hess[j * n + i] = avg;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    /// First partial ∂/∂x^ν.
    pub fn d(&self, nu: usize) -> f64 {
        self.grad[nu]
    }

    /// Second partial ∂²/∂x^ν∂x^σ.
    pub fn dd(&self, nu: usize, sigma: usize) -> f64 {
        self.hess[nu * self.dim() + sigma]
    }

    pub fn hess(&self) -> &[f64] {
        &self.hess
    }

    /// Largest absolute difference over value, gradient and Hessian.
    pub fn max_abs_diff(&self, other: &Jet2) -> f64 {
        std::iter::once((self.value, other.value))
            .chain(self.grad.iter().copied().zip(other.grad.iter().copied()))
            .chain(self.hess.iter().copied().zip(other.hess.iter().copied()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check_dim(&self, other: &Jet2) -> Result<(), JetError> {
        if self.dim() != other.dim() {
            return Err(JetError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Jet2) -> Result<Jet2, JetError> {
        self.check_dim(other)?;
        Ok(self.zip_linear(other, 1.0, 1.0))
    }

    pub fn try_sub(&self, other: &Jet2) -> Result<Jet2, JetError> {
        self.check_dim(other)?;
        Ok(self.zip_linear(other, 1.0, -1.0))
    }

    pub fn try_mul(&self, other: &Jet2) -> Result<Jet2, JetError> {
        self.check_dim(other)?;
        let n = self.dim();
        let (a, b) = (self, other);
        let grad = (0..n)
            .map(|i| a.grad[i] * b.value + a.value * b.grad[i])
            .collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = a.hess[i * n + j] * b.value
                    + a.grad[i] * b.grad[j]
                    + a.grad[j] * b.grad[i]
                    + a.value * b.hess[i * n + j];
            }
        }
        Ok(Jet2 {
            value: a.value * b.value,
            grad,
            hess,
        })
    }

    pub fn try_div(&self, other: &Jet2) -> Result<Jet2, JetError> {
        self.check_dim(other)?;
        self.try_mul(&other.recip()?)
    }

    pub fn recip(&self) -> Result<Jet2, JetError> {
        let v = self.value;
        if v == 0.0 || !v.is_finite() {
            return Err(JetError::Singular(format!(
                "division by a jet with value {v}"
            )));
        }
        let inv = 1.0 / v;
        Ok(self.chain(inv, -inv * inv, 2.0 * inv * inv * inv))
    }

    fn zip_linear(&self, other: &Jet2, ca: f64, cb: f64) -> Jet2 {
        Jet2 {
            value: ca * self.value + cb * other.value,
            grad: self
                .grad
                .iter()
                .zip(&other.grad)
                .map(|(a, b)| ca * a + cb * b)
                .collect(),
            hess: self
                .hess
                .iter()
                .zip(&other.hess)
                .map(|(a, b)| ca * a + cb * b)
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Jet2 {
        Jet2 {
            value: c * self.value,
            grad: self.grad.iter().map(|g| c * g).collect(),
            hess: self.hess.iter().map(|h| c * h).collect(),
        }
    }

    /// Applies a scalar function given f(a), f'(a), f''(a):
    /// ∇f = f'∇a, ∇²f = f''∇a∇aᵀ + f'∇²a.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let n = self.dim();
        let grad = self.grad.iter().map(|g| f1 * g).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = f2 * self.grad[i] * self.grad[j] + f1 * self.hess[i * n + j];
            }
        }
        Jet2 {
            value: f0,
            grad,
            hess,
        }
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Result<Jet2, JetError> {
        let v = self.value;
        if v <= 0.0 {
            return Err(JetError::Singular(format!("log of non-positive value {v}")));
        }
        Ok(self.chain(v.ln(), 1.0 / v, -1.0 / (v * v)))
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn sqrt(&self) -> Result<Jet2, JetError> {
        let v = self.value;
        if v <= 0.0 {
            return Err(JetError::Singular(format!(
                "sqrt of non-positive value {v}"
            )));
        }
        let r = v.sqrt();
        Ok(self.chain(r, 0.5 / r, -0.25 / (r * v)))
    }

    /// Constant real power. Integer exponents accept any base (non-zero when
    /// the exponent is negative); other exponents need a positive base.
    pub fn powf(&self, p: f64) -> Result<Jet2, JetError> {
        let v = self.value;
        if p == 0.0 {
            return Ok(Jet2::constant(1.0, self.dim()));
        }
        let integral = p.fract() == 0.0;
        if integral {
            if p < 0.0 && v == 0.0 {
                return Err(JetError::Singular(format!(
                    "zero raised to negative power {p}"
                )));
            }
            if p == 1.0 {
                return Ok(self.clone());
            }
            let f0 = v.powf(p);
            let f1 = p * v.powf(p - 1.0);
            let f2 = if p == 2.0 {
                2.0
            } else {
                p * (p - 1.0) * v.powf(p - 2.0)
            };
            return Ok(self.chain(f0, f1, f2));
        }
        if v <= 0.0 {
            return Err(JetError::Singular(format!(
                "non-positive base {v} raised to non-integer power {p}"
            )));
        }
        Ok(self.chain(
            v.powf(p),
            p * v.powf(p - 1.0),
            p * (p - 1.0) * v.powf(p - 2.0),
        ))
    }
}

impl Add for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        self.try_add(rhs).expect("jet dimension mismatch")
    }
}

impl Sub for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        self.try_sub(rhs).expect("jet dimension mismatch")
    }
}

impl Mul for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        self.try_mul(rhs).expect("jet dimension mismatch")
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

/// Row-major `n×n` matrix of jets sharing one chart dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct JetMatrix {
    size: usize,
    entries: Vec<Jet2>,
}

impl JetMatrix {
    pub fn new(size: usize, entries: Vec<Jet2>) -> Self {
        assert_eq!(entries.len(), size * size, "jet matrix must be square");
        JetMatrix { size, entries }
    }

    pub fn identity(size: usize, n: usize) -> Self {
        let entries = (0..size * size)
            .map(|k| Jet2::constant(if k / size == k % size { 1.0 } else { 0.0 }, n))
            .collect();
        JetMatrix { size, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> &Jet2 {
        &self.entries[row * self.size + col]
    }

    pub fn entries(&self) -> &[Jet2] {
        &self.entries
    }

    pub fn transpose(&self) -> JetMatrix {
        let m = self.size;
        let entries = (0..m * m)
            .map(|k| self.entries[(k % m) * m + k / m].clone())
            .collect();
        JetMatrix { size: m, entries }
    }

    pub fn matmul(&self, other: &JetMatrix) -> JetMatrix {
        let m = self.size;
        assert_eq!(m, other.size);
        let n = self.entries[0].dim();
        let mut entries = Vec::with_capacity(m * m);
        for r in 0..m {
            for c in 0..m {
                let mut acc = Jet2::constant(0.0, n);
                for k in 0..m {
                    acc = &acc + &(self.get(r, k) * other.get(k, c));
                }
                entries.push(acc);
            }
        }
        JetMatrix { size: m, entries }
    }

    pub fn values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |r, c| self.get(r, c).value())
    }

    fn first_partial(&self, nu: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |r, c| self.get(r, c).d(nu))
    }

    fn second_partial(&self, nu: usize, sigma: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |r, c| self.get(r, c).dd(nu, sigma))
    }

    /// Jet-exact inverse.
    ///
    /// With `A = M⁻¹` at the point:
    /// `∂A = −A ∂M A` and
    /// `∂ν∂σA = A(∂νM A ∂σM + ∂σM A ∂νM − ∂ν∂σM)A`.
    pub fn inverse(&self) -> Result<JetMatrix, JetError> {
        let m = self.size;
        let n = self.entries[0].dim();
        let inv = self
            .values()
            .try_inverse()
            .filter(|a| a.iter().all(|x| x.is_finite()))
            .ok_or(JetError::SingularMatrix)?;
        let dm: Vec<DMatrix<f64>> = (0..n).map(|nu| self.first_partial(nu)).collect();
        let da: Vec<DMatrix<f64>> = dm.iter().map(|d| -(&inv * d * &inv)).collect();
        let mut dda = vec![DMatrix::zeros(m, m); n * n];
        for nu in 0..n {
            for sigma in nu..n {
                let inner = &dm[nu] * &inv * &dm[sigma] + &dm[sigma] * &inv * &dm[nu]
                    - self.second_partial(nu, sigma);
                let block = &inv * inner * &inv;
                dda[sigma * n + nu] = block.clone();
                dda[nu * n + sigma] = block;
            }
        }
        let entries = (0..m * m)
            .map(|k| {
                let (r, c) = (k / m, k % m);
                let grad = da.iter().map(|d| d[(r, c)]).collect();
                let hess = dda.iter().map(|d| d[(r, c)]).collect();
                Jet2::from_parts(inv[(r, c)], grad, hess)
            })
            .collect();
        Ok(JetMatrix { size: m, entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn x_at(v: f64) -> Jet2 {
        Jet2::variable(&[v], 0).unwrap()
    }

    #[test]
    fn constants() {
        let c = Jet2::constant(5.0, 2);
        assert_eq!(c.value(), 5.0);
        assert_eq!(c.grad(), &[0.0, 0.0]);
        assert!(c.hess().iter().all(|&h| h == 0.0));
        let z = Jet2::constant(0.0, 3);
        assert!(z.grad().iter().chain(z.hess()).all(|&x| x == 0.0));
        assert_eq!(Jet2::constant(-1.5, 2).value(), -1.5);
    }

    #[test]
    fn variables() {
        let v = Jet2::variable(&[0.5, 2.0], 0).unwrap();
        assert_eq!((v.value(), v.grad()), (0.5, &[1.0, 0.0][..]));
        let v = Jet2::variable(&[0.0, 0.0], 1).unwrap();
        assert_eq!(v.grad(), &[0.0, 1.0]);
        let v = Jet2::variable(&[PI], 0).unwrap();
        assert_eq!((v.value(), v.grad()), (PI, &[1.0][..]));
        assert_eq!(
            Jet2::variable(&[0.0, 0.0], 2),
            Err(JetError::CoordOutOfRange { coord: 2, n: 2 })
        );
    }

    #[test]
    fn arithmetic() {
        let x = x_at(3.0);
        let sq = &x * &x;
        assert_eq!((sq.value(), sq.d(0), sq.dd(0, 0)), (9.0, 6.0, 2.0));

        let x = x_at(2.0);
        let s = &Jet2::constant(1.0, 1) + &x;
        assert_eq!((s.value(), s.d(0), s.dd(0, 0)), (3.0, 1.0, 0.0));

        let q = Jet2::constant(1.0, 1).try_div(&x).unwrap();
        assert_eq!((q.value(), q.d(0), q.dd(0, 0)), (0.5, -0.25, 0.25));
    }

    #[test]
    fn division_by_zero_is_singular() {
        let z = x_at(0.0);
        assert!(matches!(
            Jet2::constant(1.0, 1).try_div(&z),
            Err(JetError::Singular(_))
        ));
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let a = Jet2::constant(1.0, 2);
        let b = Jet2::constant(1.0, 3);
        assert_eq!(
            a.try_mul(&b),
            Err(JetError::DimensionMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn elementary_functions() {
        let e = x_at(0.0).exp();
        assert_eq!((e.value(), e.d(0), e.dd(0, 0)), (1.0, 1.0, 1.0));
        let s = x_at(PI / 2.0).sin();
        assert_abs_diff_eq!(s.value(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.d(0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.dd(0, 0), -1.0, epsilon = 1e-15);
        let l = x_at(1.0).ln().unwrap();
        assert_eq!((l.value(), l.d(0), l.dd(0, 0)), (0.0, 1.0, -1.0));
        assert!(x_at(0.0).ln().is_err());
        assert!(x_at(-1.0).sqrt().is_err());
        let r = x_at(4.0).sqrt().unwrap();
        assert_eq!((r.value(), r.d(0), r.dd(0, 0)), (2.0, 0.25, -1.0 / 32.0));
    }

    #[test]
    fn integer_powers_of_negative_base() {
        let c = x_at(-2.0).powf(3.0).unwrap();
        assert_eq!((c.value(), c.d(0), c.dd(0, 0)), (-8.0, 12.0, -12.0));
        assert!(x_at(-2.0).powf(0.5).is_err());
        assert!(x_at(0.0).powf(-1.0).is_err());
    }

    #[test]
    fn inverse_of_identity() {
        let id = JetMatrix::identity(3, 2);
        assert_eq!(id.inverse().unwrap(), id);
    }

    #[test]
    fn inverse_of_exponential_diagonal() {
        // diag(e^x, 1) at x = 0; the analytic inverse is diag(e^{-x}, 1).
        let x = Jet2::variable(&[0.0, 0.0], 0).unwrap();
        let m = JetMatrix::new(
            2,
            vec![
                x.exp(),
                Jet2::constant(0.0, 2),
                Jet2::constant(0.0, 2),
                Jet2::constant(1.0, 2),
            ],
        );
        let inv = m.inverse().unwrap();
        let a = inv.get(0, 0);
        // central differences of e^{-x} at 0, h = 1e-4
        let h: f64 = 1e-4;
        let fd1 = ((-h).exp() - h.exp()) / (2.0 * h);
        let fd2 = ((-h).exp() - 2.0 + h.exp()) / (h * h);
        assert_abs_diff_eq!(a.value(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.d(0), fd1, epsilon = 1e-7);
        assert_abs_diff_eq!(a.dd(0, 0), fd2, epsilon = 1e-6);
        assert_abs_diff_eq!(a.d(0), -1.0, epsilon = 1e-15);
        assert_eq!(inv.get(1, 1).value(), 1.0);
    }

    #[test]
    fn inverse_of_rotation_is_transpose() {
        let point = [0.3, -0.4];
        let x = Jet2::variable(&point, 0).unwrap();
        let angle = &x * &x;
        let (c, s) = (angle.cos(), angle.sin());
        let m = JetMatrix::new(2, vec![c.clone(), s.clone(), -&s, c]);
        let inv = m.inverse().unwrap();
        let t = m.transpose();
        for (a, b) in inv.entries().iter().zip(t.entries()) {
            assert!(a.max_abs_diff(b) < 1e-12);
        }
        // value-level orthogonality
        let prod = m.values() * inv.values();
        assert!((prod - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = JetMatrix::new(2, vec![Jet2::constant(1.0, 2); 4]);
        assert_eq!(m.inverse(), Err(JetError::SingularMatrix));
    }
}
