//! Dense componentwise tensors at a single chart point.
//!
//! Components are stored row-major over the index slots; the optional
//! partials array appends one more index (the coordinate derivative) last.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorSample {
    n: usize,
    variance: Vec<Variance>,
    comps: Vec<f64>,
    partials: Option<Vec<f64>>,
}

impl TensorSample {
    pub fn zeros(n: usize, variance: &[Variance]) -> Self {
        TensorSample {
            n,
            variance: variance.to_vec(),
            comps: vec![0.0; n.pow(variance.len() as u32)],
            partials: None,
        }
    }

    pub fn scalar(n: usize, value: f64) -> Self {
        TensorSample {
            n,
            variance: Vec::new(),
            comps: vec![value],
            partials: None,
        }
    }

    /// Builds a tensor by evaluating `f` on every multi-index.
    pub fn from_fn(n: usize, variance: &[Variance], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = TensorSample::zeros(n, variance);
        let mut idx = vec![0; variance.len()];
        for k in 0..t.comps.len() {
            unflatten(k, n, &mut idx);
            t.comps[k] = f(&idx);
        }
        t
    }

    /// Attaches first partials; `f(idx, sigma)` is ∂_σ of the component at `idx`.
    pub fn with_partials(mut self, mut f: impl FnMut(&[usize], usize) -> f64) -> Self {
        let n = self.n;
        let mut idx = vec![0; self.rank()];
        let mut partials = vec![0.0; self.comps.len() * n];
        for k in 0..self.comps.len() {
            unflatten(k, n, &mut idx);
            for sigma in 0..n {
                partials[k * n + sigma] = f(&idx, sigma);
            }
        }
        self.partials = Some(partials);
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn components(&self) -> &[f64] {
        &self.comps
    }

    pub fn partials(&self) -> Option<&[f64]> {
        self.partials.as_deref()
    }

    pub fn has_partials(&self) -> bool {
        self.partials.is_some()
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.comps[self.offset(idx)]
    }

    /// ∂_σ of the component at `idx`. Panics when partials were not attached.
    pub fn partial(&self, idx: &[usize], sigma: usize) -> f64 {
        let p = self.partials.as_ref().expect("tensor carries no partials");
        p[self.offset(idx) * self.n + sigma]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let k = self.offset(idx);
        self.comps[k] = v;
    }

    /// Componentwise `self + c·other` (partials combined when both carry them).
    pub fn add_scaled(&self, other: &TensorSample, c: f64) -> TensorSample {
        assert_eq!(self.variance, other.variance, "variance mismatch");
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a + c * b)
            .collect();
        let partials = match (&self.partials, &other.partials) {
            (Some(p), Some(q)) => Some(p.iter().zip(q).map(|(a, b)| a + c * b).collect()),
            _ => None,
        };
        TensorSample {
            n: self.n,
            variance: self.variance.clone(),
            comps,
            partials,
        }
    }

    pub fn scaled(&self, c: f64) -> TensorSample {
        TensorSample {
            n: self.n,
            variance: self.variance.clone(),
            comps: self.comps.iter().map(|a| c * a).collect(),
            partials: self
                .partials
                .as_ref()
                .map(|p| p.iter().map(|a| c * a).collect()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest componentwise absolute difference of the components.
    pub fn max_abs_diff(&self, other: &TensorSample) -> f64 {
        assert_eq!(self.comps.len(), other.comps.len(), "shape mismatch");
        max_abs_diff(&self.comps, &other.comps)
    }

    /// Iterates `(multi-index, value)` over every component.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let n = self.n;
        let rank = self.rank();
        self.comps.iter().enumerate().map(move |(k, &v)| {
            let mut idx = vec![0; rank];
            unflatten(k, n, &mut idx);
            (idx, v)
        })
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub(crate) fn unflatten(mut k: usize, n: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = k % n;
        k /= n;
    }
}

/// Kronecker delta.
#[inline]
pub fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

impl fmt::Display for Variance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variance::Up => "^",
            Variance::Down => "_",
        })
    }
}
