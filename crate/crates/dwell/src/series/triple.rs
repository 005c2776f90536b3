//! Reduction of the nested exponential triple integrals
//!
//! ```text
//! S(m,n,p; g) = int_0^inf x^(m/2) e^(-2gx) dx
//!               int_0^x   y^(n/2) e^(+2gy) dy
//!               int_y^inf z^(p/2) e^(-2gz) dz
//! ```
//!
//! to Gamma factors times `g`-independent integrals over the unit square,
//! and the assembly of whole families of such terms into a large-`g` series
//! for the second-order energy machinery.
//!
//! Splitting the inner integral at `z = x` and substituting
//! `(x, y) = (z s, z s t)` resp. `(z, y) = (x s, x s t)` gives
//!
//! ```text
//! S = Gamma(sigma) (2g)^(-sigma) [ I((m+n+2)/2) + I((n+p+2)/2) ],
//! I(a) = int_0^1 int_0^1 s^a t^(n/2) (1 + s - s t)^(-sigma) ds dt,
//! sigma = (m + n + p + 6) / 2.
//! ```
//!
//! The unit-square integrals are evaluated after `s -> s^2`, `t -> t^2`,
//! which removes the endpoint square-root singularities that appear when a
//! power equals -1/2.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::Zero;

use crate::error::{Error, Result};
use crate::quadrature::{gamma_half_integer, gauss_legendre_unit};
use crate::series::lagrange::BranchPair;
use crate::series::puiseux::{rat, rational_to_f64};

/// Exponents `(m, n, p)` of the standard triple integral; each is an integer
/// `>= -1` (doubled in the integrand as `x^(m/2)` and so on).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StandardTriple {
    pub m: i64,
    pub n: i64,
    pub p: i64,
}

impl StandardTriple {
    pub fn new(m: i64, n: i64, p: i64) -> Result<Self> {
        if m < -1 || n < -1 || p < -1 {
            return Err(Error::InvalidInput(format!(
                "standard triple exponents must be >= -1, got ({m}, {n}, {p})"
            )));
        }
        if m + n + p + 6 <= 0 {
            return Err(Error::InvalidInput(
                "standard triple needs m + n + p + 6 > 0".into(),
            ));
        }
        Ok(Self { m, n, p })
    }

    /// Doubled Gamma argument `m + n + p + 6`.
    pub fn two_sigma(&self) -> i64 {
        self.m + self.n + self.p + 6
    }
}

/// `int_0^1 int_0^1 s^(two_a/2) t^(two_b/2) (1 + s - s t)^(-two_sigma/2)`,
/// computed on a tensor Gauss-Legendre rule after squaring both variables.
pub(crate) fn unit_square_integral(two_a: i64, two_b: i64, two_sigma: i64) -> f64 {
    let exponent = -(two_sigma as f64) / 2.0;
    let pow_s = (two_a + 1) as i32; // after s -> s^2: s^(2a+1), ds -> 2 s ds
    let pow_t = (two_b + 1) as i32;
    let (nodes, weights) = gauss_legendre_unit(64);
    let mut acc = 0.0;
    for (si, sw) in nodes.iter().zip(&weights) {
        let s2 = si * si;
        let mut inner = 0.0;
        for (ti, tw) in nodes.iter().zip(&weights) {
            let kernel = (1.0 + s2 - s2 * ti * ti).powf(exponent);
            inner += tw * ti.powi(pow_t) * kernel;
        }
        acc += sw * si.powi(pow_s) * inner;
    }
    4.0 * acc
}

/// Value of the standard triple integral at coupling `g > 0`.
pub fn standard_triple_value(t: StandardTriple, g: f64) -> Result<f64> {
    if !(g > 0.0) {
        return Err(Error::InvalidInput("standard triple needs g > 0".into()));
    }
    let two_sigma = t.two_sigma();
    let i1 = unit_square_integral(t.m + t.n + 2, t.n, two_sigma);
    let i2 = unit_square_integral(t.n + t.p + 2, t.n, two_sigma);
    let gamma = gamma_half_integer(two_sigma);
    Ok(gamma * (2.0 * g).powf(-(two_sigma as f64) / 2.0) * (i1 + i2))
}

/// A series in `g^(-1/2)`: key `q` holds the coefficient of `g^(-q)` (integer
/// keys only here; the common `sqrt(pi/2) g^(-1/2)` prefactor of the triple
/// reduction is factored out, see [`triple_series`]).
#[derive(Clone, Debug, Default)]
pub struct ReducedTripleSeries {
    pub coeffs: BTreeMap<i64, f64>,
    /// First unreliable power.
    pub trunc: i64,
}

impl ReducedTripleSeries {
    pub fn eval(&self, g: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&q, c)| c * g.powi(-q as i32))
            .sum()
    }

    /// Multiply back the factored-out prefactor and evaluate: the actual
    /// value of the assembled triple integral at finite `g`.
    pub fn eval_with_prefactor(&self, g: f64) -> f64 {
        (std::f64::consts::PI / 2.0).sqrt() / g.sqrt() * self.eval(g)
    }
}

/// Assemble the large-`g` series of
///
/// ```text
/// T(g) = int_0^inf O e^(-2gx) int_0^x M e^(2gy) int_y^inf I_g e^(-2gz),
/// I_g(z) = I_fixed(z) + (sum_j shift_j g^(-j-1)) I_unit(z)
/// ```
///
/// where `O`, `M`, `I_fixed`, `I_unit` are branch pairs from the well
/// substitution (both orientations included: the `u > 0` part uses the three
/// plus series, the `-1 < u < 0` part the three minus series; pieces that are
/// exponentially small in `g` are dropped).
///
/// The reduction of the negative-`u` part assumes the inner integrand is
/// resonant: its integral over the whole `u` range vanishes (order by order
/// in `1/g`). The energy pipeline guarantees this by construction; a
/// non-resonant inner picks up an additional boundary double integral that
/// this routine does not include.
///
/// Terms with even `m + n + p` cancel exactly between the branches (verified
/// in rational arithmetic); the surviving half-integer Gamma factors carry a
/// common `sqrt(pi) / sqrt(2)` which combines with `(2g)^(-sigma)` into the
/// factored-out prefactor `sqrt(pi/2) g^(-1/2)`. The returned series holds
/// the remaining integer powers of `g^(-1)`.
///
/// `cutoff2` bounds the doubled total exponent: terms with
/// `m + n + p + 6 + 2j > cutoff2` are not computed. An error is returned when
/// the input truncations cannot support the requested cutoff.
pub fn triple_series(
    outer: &BranchPair,
    middle: &BranchPair,
    inner_fixed: &BranchPair,
    inner_unit: &BranchPair,
    shift: &[BigRational],
    cutoff2: i64,
) -> Result<ReducedTripleSeries> {
    // reliability: the largest doubled sigma each factor combination can see
    let support = |o: &BranchPair, m: &BranchPair, i: &BranchPair, extra: i64| -> i64 {
        let lead =
            |s: &crate::series::puiseux::PuiseuxSeries| s.leading_power().unwrap_or(i64::MAX / 4);
        let t = |s: &crate::series::puiseux::PuiseuxSeries| s.trunc();
        let (lo, lm, li) = (lead(&o.plus), lead(&m.plus), lead(&i.plus));
        let (to, tm, ti) = (t(&o.plus), t(&m.plus), t(&i.plus));
        // first unreliable m+n+p: one factor at its truncation, others at
        // their leading powers
        (to + lm + li).min(tm + lo + li).min(ti + lo + lm) + 6 + extra
    };
    let mut reliable2 = support(outer, middle, inner_fixed, 0);
    for (j, c) in shift.iter().enumerate() {
        if !c.is_zero() {
            reliable2 = reliable2.min(support(outer, middle, inner_unit, 2 * (j as i64 + 1)));
        }
    }
    if cutoff2 > reliable2 {
        return Err(Error::SeriesAccuracy(format!(
            "cutoff {cutoff2}/2 exceeds the reliable order {reliable2}/2 of the input series"
        )));
    }

    // rational aggregation of branch products per (m, n, p, j)
    let mut weights: BTreeMap<(i64, i64, i64, i64), BigRational> = BTreeMap::new();
    let mut accumulate = |inner: &BranchPair, j: i64, scale: &BigRational| {
        if scale.is_zero() {
            return;
        }
        for (o, m, i) in [
            (&outer.plus, &middle.plus, &inner.plus),
            (&outer.minus, &middle.minus, &inner.minus),
        ] {
            for (km, cm) in o.terms() {
                for (kn, cn) in m.terms() {
                    if km + kn + 6 + 2 * j > cutoff2 {
                        continue;
                    }
                    for (kp, cp) in i.terms() {
                        if km + kn + kp + 6 + 2 * j > cutoff2 {
                            continue;
                        }
                        let w = weights
                            .entry((km, kn, kp, j))
                            .or_insert_with(BigRational::zero);
                        *w += cm * cn * cp * scale;
                    }
                }
            }
        }
    };
    accumulate(inner_fixed, 0, &rat(1, 1));
    for (idx, c) in shift.iter().enumerate() {
        accumulate(inner_unit, idx as i64 + 1, c);
    }

    let mut out = ReducedTripleSeries {
        coeffs: BTreeMap::new(),
        trunc: (cutoff2 - 1).div_euclid(2) + 1, // q <= (cutoff2 - 1)/2
    };
    for ((m, n, p, j), w) in &weights {
        if w.is_zero() {
            continue;
        }
        let parity = (m + n + p).rem_euclid(2);
        if parity == 0 {
            return Err(Error::SeriesAccuracy(format!(
                "branch cancellation failed at (m,n,p)=({m},{n},{p}): residue {w}"
            )));
        }
        let two_sigma = m + n + p + 6; // odd
        let s = (two_sigma - 1) / 2; // sigma = s + 1/2
        let i1 = unit_square_integral(m + n + 2, *n, two_sigma);
        let i2 = unit_square_integral(n + p + 2, *n, two_sigma);
        // Gamma(s + 1/2) / sqrt(pi) * 2^(-s), exactly
        let mut factor = BigRational::from_integer(1.into());
        for i in 1..=s {
            factor *= rat(2 * i - 1, 4);
        }
        let q = s + j;
        let val = rational_to_f64(&(w * &factor)) * (i1 + i2);
        *out.coeffs.entry(q).or_insert(0.0) += val;
    }
    out.coeffs.retain(|_, v| *v != 0.0);
    Ok(out)
}
