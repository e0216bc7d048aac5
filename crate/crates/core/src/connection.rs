//! Connection coefficients at a point and the calculus built on them:
//! curvature, torsion, covariant differentiation and the index-pair
//! antisymmetrizer 𝔘.
//!
//! Conventions (used everywhere in the crate):
//!
//! * coefficients are stored `[α][μ][ν]` for Γ^α_{μν}, and the partial
//!   Γ^α_{μν,σ} appends σ last;
//! * covariant derivatives append the derivative index last:
//!   `V_{μ|σ} = V_{μ,σ} − Γ^ε_{μσ} V_ε`, `V^α_{|σ} = V^α_{,σ} + V^ε Γ^α_{εσ}`;
//! * curvature is
//!   `R^α_{μνσ} = Γ^α_{μσ,ν} − Γ^α_{μν,σ} + Γ^ε_{μσ}Γ^α_{εν} − Γ^ε_{μν}Γ^α_{εσ}`.

use std::fmt;

use thiserror::Error;

use crate::tensor::{TensorSample, Variance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConnectionError {
    #[error("{0} carries no first partials")]
    MissingPartials(String),
    #[error("tensor of rank {0} has no index pair to antisymmetrize")]
    RankTooSmall(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConnectionKind {
    Weitzenbock,
    LeviCivita,
    SymmetricPart,
    /// Γ − δ^α_μ C_ν/(n−1)
    ConformalGamma,
    /// Γ̂ − (δ^α_μ C_ν + δ^α_ν C_μ)/(2(n−1))
    ConformalHat,
    /// Γ̊ − (δ^α_μ C_ν + δ^α_ν C_μ − g_{μν} C^α)/(n−1)
    ConformalCirc,
    /// A prediction or any other user-assembled connection.
    Other,
}

impl fmt::Display for ConnectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConnectionKind::Weitzenbock => "weitzenbock",
            ConnectionKind::LeviCivita => "levi-civita",
            ConnectionKind::SymmetricPart => "symmetric-part",
            ConnectionKind::ConformalGamma => "conformal-gamma",
            ConnectionKind::ConformalHat => "conformal-hat",
            ConnectionKind::ConformalCirc => "conformal-circ",
            ConnectionKind::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionSample {
    n: usize,
    coeff: Vec<f64>,
    dcoeff: Option<Vec<f64>>,
    kind: ConnectionKind,
}

impl ConnectionSample {
    pub fn from_fn(
        n: usize,
        kind: ConnectionKind,
        mut coeff: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut c = vec![0.0; n * n * n];
        for a in 0..n {
            for m in 0..n {
                for v in 0..n {
                    c[(a * n + m) * n + v] = coeff(a, m, v);
                }
            }
        }
        ConnectionSample {
            n,
            coeff: c,
            dcoeff: None,
            kind,
        }
    }

    /// Attaches Γ^α_{μν,σ} = `f(α, μ, ν, σ)`.
    pub fn with_partials(mut self, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let n = self.n;
        let mut d = vec![0.0; n * n * n * n];
        for (k, slot) in d.iter_mut().enumerate() {
            *slot = f(k / (n * n * n), (k / (n * n)) % n, (k / n) % n, k % n);
        }
        self.dcoeff = Some(d);
        self
    }

    pub fn zero(n: usize) -> Self {
        ConnectionSample::from_fn(n, ConnectionKind::Other, |_, _, _| 0.0)
            .with_partials(|_, _, _, _| 0.0)
    }

    /// Reads a connection out of a `[Up, Down, Down]` tensor, keeping partials.
    pub fn from_tensor(t: &TensorSample, kind: ConnectionKind) -> Self {
        assert_eq!(t.variance(), [Variance::Up, Variance::Down, Variance::Down]);
        ConnectionSample {
            n: t.dim(),
            coeff: t.components().to_vec(),
            dcoeff: t.partials().map(<[f64]>::to_vec),
            kind,
        }
    }

    /// The coefficients as a `[Up, Down, Down]` array (not a tensor under
    /// coordinate changes, but convenient for differences of connections).
    pub fn to_tensor(&self) -> TensorSample {
        let n = self.n;
        let t = TensorSample::from_fn(n, &[Variance::Up, Variance::Down, Variance::Down], |i| {
            self.coeff(i[0], i[1], i[2])
        });
        match &self.dcoeff {
            Some(d) => t.with_partials(|i, s| d[((i[0] * n + i[1]) * n + i[2]) * n + s]),
            None => t,
        }
    }

    pub fn with_kind(mut self, kind: ConnectionKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> ConnectionKind {
        self.kind
    }

    #[inline]
    pub fn coeff(&self, a: usize, m: usize, v: usize) -> f64 {
        let n = self.n;
        self.coeff[(a * n + m) * n + v]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeff
    }

    pub fn partials(&self) -> Option<&[f64]> {
        self.dcoeff.as_deref()
    }

    /// Γ^α_{μν,σ}; panics when partials are absent.
    #[inline]
    pub fn dcoeff(&self, a: usize, m: usize, v: usize, s: usize) -> f64 {
        let n = self.n;
        self.dcoeff
            .as_ref()
            .expect("connection carries no partials")[((a * n + m) * n + v) * n + s]
    }

    fn require_partials(&self) -> Result<(), ConnectionError> {
        if self.dcoeff.is_none() {
            return Err(ConnectionError::MissingPartials(format!(
                "{} connection",
                self.kind
            )));
        }
        Ok(())
    }

    /// Largest deviation from symmetry in the lower index pair.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for m in 0..n {
                for v in 0..n {
                    worst = worst.max((self.coeff(a, m, v) - self.coeff(a, v, m)).abs());
                }
            }
        }
        worst
    }
}

/// R^α_{μνσ} with the convention in the module docs.
pub fn curvature(c: &ConnectionSample) -> Result<TensorSample, ConnectionError> {
    c.require_partials()?;
    let n = c.dim();
    let v = [Variance::Up, Variance::Down, Variance::Down, Variance::Down];
    Ok(TensorSample::from_fn(n, &v, |i| {
        let (a, m, nu, s) = (i[0], i[1], i[2], i[3]);
        let mut r = c.dcoeff(a, m, s, nu) - c.dcoeff(a, m, nu, s);
        for e in 0..n {
            r += c.coeff(e, m, s) * c.coeff(a, e, nu) - c.coeff(e, m, nu) * c.coeff(a, e, s);
        }
        r
    }))
}

/// Torsion Γ^α_{μν} − Γ^α_{νμ}, with partials when the connection has them.
pub fn torsion_of(c: &ConnectionSample) -> TensorSample {
    let n = c.dim();
    let v = [Variance::Up, Variance::Down, Variance::Down];
    let t = TensorSample::from_fn(n, &v, |i| {
        c.coeff(i[0], i[1], i[2]) - c.coeff(i[0], i[2], i[1])
    });
    if c.partials().is_some() {
        t.with_partials(|i, s| c.dcoeff(i[0], i[1], i[2], s) - c.dcoeff(i[0], i[2], i[1], s))
    } else {
        t
    }
}

/// Covariant derivative of `t`, with the derivative index appended last.
pub fn covariant_derivative(
    t: &TensorSample,
    c: &ConnectionSample,
) -> Result<TensorSample, ConnectionError> {
    if !t.has_partials() {
        return Err(ConnectionError::MissingPartials(format!(
            "rank-{} tensor",
            t.rank()
        )));
    }
    let n = t.dim();
    let rank = t.rank();
    let mut variance = t.variance().to_vec();
    variance.push(Variance::Down);
    let mut work = vec![0; rank];
    Ok(TensorSample::from_fn(n, &variance, |i| {
        let (idx, s) = (&i[..rank], i[rank]);
        let mut out = t.partial(idx, s);
        work.copy_from_slice(idx);
        for (slot, var) in t.variance().iter().enumerate() {
            let orig = idx[slot];
            for e in 0..n {
                work[slot] = e;
                match var {
                    Variance::Up => out += t.get(&work) * c.coeff(orig, e, s),
                    Variance::Down => out -= t.get(&work) * c.coeff(e, orig, s),
                }
            }
            work[slot] = orig;
        }
        out
    }))
}

/// 𝔘 on the last two slots: A_{..νσ} − A_{..σν}. Partials follow along.
pub fn antisymmetrize_last2(t: &TensorSample) -> Result<TensorSample, ConnectionError> {
    let rank = t.rank();
    if rank < 2 {
        return Err(ConnectionError::RankTooSmall(rank));
    }
    let mut swapped = vec![0; rank];
    let mut swap = |i: &[usize]| {
        swapped.copy_from_slice(i);
        swapped.swap(rank - 2, rank - 1);
        swapped.clone()
    };
    let out = TensorSample::from_fn(t.dim(), t.variance(), |i| t.get(i) - t.get(&swap(i)));
    if t.has_partials() {
        Ok(out.with_partials(|i, s| t.partial(i, s) - t.partial(&swap(i), s)))
    } else {
        Ok(out)
    }
}
