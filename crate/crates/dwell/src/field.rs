//! Function representations shared across the crate.
//!
//! [`ScalarField1D`] is a real function of one real variable, optionally
//! carrying an analytic derivative and/or an exponential split
//! `f = r * exp(-s)` so callers can work with log-magnitudes instead of raw
//! values. [`GridFunction`] is a sampled function on a strictly increasing
//! grid with interpolation, centered-difference derivatives and
//! cumulative-integral support.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type DynFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

enum Repr {
    Plain {
        value: DynFn,
        derivative: Option<DynFn>,
    },
    /// value = prefactor(x) * exp(-exponent(x))
    ExpSplit { prefactor: DynFn, exponent: DynFn },
}

/// A real-valued function of one real variable.
///
/// Cheap to clone; all closures are shared. Evaluation is pure, so values
/// can be used concurrently.
#[derive(Clone)]
pub struct ScalarField1D {
    repr: Arc<Repr>,
}

impl fmt::Debug for ScalarField1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self.repr {
            Repr::Plain { .. } => f.write_str("ScalarField1D(plain)"),
            Repr::ExpSplit { .. } => f.write_str("ScalarField1D(exp-split)"),
        }
    }
}

impl ScalarField1D {
    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            repr: Arc::new(Repr::Plain {
                value: Arc::new(f),
                derivative: None,
            }),
        }
    }

    pub fn with_derivative(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            repr: Arc::new(Repr::Plain {
                value: Arc::new(f),
                derivative: Some(Arc::new(df)),
            }),
        }
    }

    /// Build `r(x) * exp(-s(x))` keeping the two factors separate, so the
    /// log-magnitude never materializes the (possibly huge) exponential.
    pub fn from_exp_split(
        prefactor: impl Fn(f64) -> f64 + Send + Sync + 'static,
        exponent: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            repr: Arc::new(Repr::ExpSplit {
                prefactor: Arc::new(prefactor),
                exponent: Arc::new(exponent),
            }),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::with_derivative(move |_| c, |_| 0.0)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn value(&self, x: f64) -> f64 {
        match &*self.repr {
            Repr::Plain { value, .. } => value(x),
            Repr::ExpSplit {
                prefactor,
                exponent,
                ..
            } => prefactor(x) * (-exponent(x)).exp(),
        }
    }

    /// `(ln |f(x)|, sign)`; sign is 0 for an exact zero.
    pub fn log_magnitude(&self, x: f64) -> (f64, i8) {
        match &*self.repr {
            Repr::Plain { value, .. } => {
                let v = value(x);
                (v.abs().ln(), sign_of(v))
            }
            Repr::ExpSplit {
                prefactor,
                exponent,
                ..
            } => {
                let r = prefactor(x);
                (r.abs().ln() - exponent(x), sign_of(r))
            }
        }
    }

    /// The exponential split `(r, s)` with `f = r * exp(-s)`, if present.
    pub fn exp_split(&self, x: f64) -> Option<(f64, f64)> {
        match &*self.repr {
            Repr::Plain { .. } => None,
            Repr::ExpSplit {
                prefactor,
                exponent,
            } => Some((prefactor(x), exponent(x))),
        }
    }

    /// Analytic derivative when one was supplied.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        match &*self.repr {
            Repr::Plain { derivative, .. } => derivative.as_ref().map(|d| d(x)),
            Repr::ExpSplit { .. } => None,
        }
    }
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// A function sampled on a strictly increasing grid.
#[derive(Clone, Debug)]
pub struct GridFunction {
    xs: Arc<[f64]>,
    ys: Vec<f64>,
}

impl GridFunction {
    pub fn new(xs: Arc<[f64]>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidInput(format!(
                "grid/value length mismatch: {} vs {}",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 4 {
            return Err(Error::InvalidInput(
                "grid needs at least 4 points".into(),
            ));
        }
        check_monotone(&xs)?;
        Ok(Self { xs, ys })
    }

    pub fn sample(xs: Arc<[f64]>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, ys)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn ys_mut(&mut self) -> &mut [f64] {
        &mut self.ys
    }

    pub fn grid(&self) -> Arc<[f64]> {
        Arc::clone(&self.xs)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Cubic Lagrange interpolation on the 4-point stencil around `x`.
    /// Clamped to the grid span.
    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self
            .xs
            .binary_search_by(|v| v.partial_cmp(&x).expect("non-finite grid query"))
        {
            Ok(i) => return self.ys[i],
            Err(i) => i,
        };
        // stencil start: two points left of the insertion index, clamped
        let s = i.saturating_sub(2).min(n - 4);
        lagrange4(&self.xs[s..s + 4], &self.ys[s..s + 4], x)
    }

    /// Centered-difference derivative on the stored grid (5-point stencils,
    /// clamped at the ends).
    pub fn derivative_values(&self) -> Vec<f64> {
        self.stencil_derivative(1)
    }

    /// Second derivative on the stored grid (5-point stencils).
    pub fn second_derivative_values(&self) -> Vec<f64> {
        self.stencil_derivative(2)
    }

    fn stencil_derivative(&self, order: usize) -> Vec<f64> {
        let xs = &self.xs;
        let ys = &self.ys;
        let n = xs.len();
        let width = 5.min(n);
        let mut out = vec![0.0; n];
        for i in 0..n {
            let s = i.saturating_sub(width / 2).min(n - width);
            let w = fornberg_weights(&xs[s..s + width], xs[i], order);
            out[i] = w.iter().zip(&ys[s..s + width]).map(|(wj, yj)| wj * yj).sum();
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let ys = self
            .xs
            .iter()
            .zip(&self.ys)
            .map(|(&x, &y)| f(x, y))
            .collect();
        Self {
            xs: Arc::clone(&self.xs),
            ys,
        }
    }
}

/// Fornberg finite-difference weights: for nodes `xs` and evaluation point
/// `z`, returns the weight of each node value in the `order`-th derivative.
pub(crate) fn fornberg_weights(xs: &[f64], z: f64, order: usize) -> Vec<f64> {
    let n = xs.len();
    debug_assert!(order < n);
    // c[j][k]: weight of y_j in the k-th derivative
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Cubic Lagrange interpolation through 4 nodes.
pub(crate) fn lagrange4(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), 4);
    let mut acc = 0.0;
    for j in 0..4 {
        let mut term = ys[j];
        for k in 0..4 {
            if k != j {
                term *= (x - xs[k]) / (xs[j] - xs[k]);
            }
        }
        acc += term;
    }
    acc
}

pub(crate) fn check_monotone(xs: &[f64]) -> Result<()> {
    for w in xs.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidInput(format!(
                "grid not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}
