//! Truncated formal series in half-integer powers of `x` with exact rational
//! coefficients.
//!
//! Powers are stored doubled: key `k` holds the coefficient of `x^(k/2)`.
//! Every series carries a truncation order `trunc` (doubled as well): stored
//! powers satisfy `k < trunc`, and arithmetic never reports coefficients the
//! operands cannot support.

use std::collections::BTreeMap;
use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[derive(Clone, PartialEq, Eq)]
pub struct PuiseuxSeries {
    coeffs: BTreeMap<i64, BigRational>,
    trunc: i64,
}

impl PuiseuxSeries {
    /// The zero series, valid below the (doubled) truncation power.
    pub fn zero(trunc: i64) -> Self {
        Self {
            coeffs: BTreeMap::new(),
            trunc,
        }
    }

    /// `coeff * x^(two_power/2)`.
    pub fn monomial(two_power: i64, coeff: BigRational, trunc: i64) -> Self {
        let mut s = Self::zero(trunc);
        s.set(two_power, coeff);
        s
    }

    pub fn constant(c: BigRational, trunc: i64) -> Self {
        Self::monomial(0, c, trunc)
    }

    /// Build from `(two_power, coefficient)` pairs.
    pub fn from_terms<I>(terms: I, trunc: i64) -> Self
    where
        I: IntoIterator<Item = (i64, BigRational)>,
    {
        let mut s = Self::zero(trunc);
        for (k, c) in terms {
            s.set(k, c);
        }
        s
    }

    pub fn trunc(&self) -> i64 {
        self.trunc
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `x^(two_power/2)` (zero when absent).
    pub fn coeff(&self, two_power: i64) -> BigRational {
        self.coeffs
            .get(&two_power)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Lowest stored (doubled) power, if any term is present.
    pub fn leading_power(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigRational)> {
        self.coeffs.iter().map(|(&k, c)| (k, c))
    }

    fn set(&mut self, two_power: i64, coeff: BigRational) {
        if two_power < self.trunc && !coeff.is_zero() {
            self.coeffs.insert(two_power, coeff);
        }
    }

    fn add_to(&mut self, two_power: i64, coeff: &BigRational) {
        if two_power >= self.trunc || coeff.is_zero() {
            return;
        }
        let entry = self
            .coeffs
            .entry(two_power)
            .or_insert_with(BigRational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.coeffs.remove(&two_power);
        }
    }

    /// Drop terms at or above `trunc` and lower the truncation order.
    pub fn truncate(&self, trunc: i64) -> Self {
        let trunc = trunc.min(self.trunc);
        Self {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(&k, _)| k < trunc)
                .map(|(&k, c)| (k, c.clone()))
                .collect(),
            trunc,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(&k, c)| (k, -c.clone())).collect(),
            trunc: self.trunc,
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.trunc);
        }
        Self {
            coeffs: self.coeffs.iter().map(|(&k, v)| (k, v * c)).collect(),
            trunc: self.trunc,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.trunc.min(other.trunc));
        for (k, c) in self.coeffs.iter().chain(other.coeffs.iter()) {
            out.add_to(*k, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        // The safe truncation: min of the operands', tightened further when a
        // negative leading power would pull unknown terms downward.
        let mut trunc = self.trunc.min(other.trunc);
        if let (Some(la), Some(lb)) = (self.leading_power(), other.leading_power()) {
            trunc = trunc.min(self.trunc + lb).min(other.trunc + la);
        }
        let mut out = Self::zero(trunc);
        for (&ka, ca) in &self.coeffs {
            for (&kb, cb) in &other.coeffs {
                if ka + kb < trunc {
                    out.add_to(ka + kb, &(ca * cb));
                }
            }
        }
        out
    }

    /// Integer power (non-negative).
    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::constant(BigRational::one(), self.trunc);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Multiplicative inverse. The leading coefficient must be nonzero; the
    /// result is valid to `trunc - 2 * leading` (the usual precision loss
    /// when inverting a series with nonzero leading power).
    pub fn reciprocal(&self) -> Result<Self> {
        let lead = self.leading_power().ok_or_else(|| {
            Error::DegenerateSeries("reciprocal of the zero series".into())
        })?;
        let c_lead = self.coeff(lead);
        let out_trunc = self.trunc - 2 * lead;
        let mut out = Self::zero(out_trunc);
        out.set(-lead, c_lead.recip());
        // triangular solve: (self * out) must be 1
        let mut m = -lead + 1;
        while m < out_trunc {
            // coefficient of x^((m + lead)/2) in self * out must vanish
            let mut acc = BigRational::zero();
            for (&j, cj) in &out.coeffs {
                if j >= m {
                    continue;
                }
                let need = m + lead - j;
                if let Some(f) = self.coeffs.get(&need) {
                    acc += f * cj;
                }
            }
            if !acc.is_zero() {
                out.set(m, -acc / c_lead.clone());
            }
            m += 1;
        }
        Ok(out)
    }

    /// Substitute: `self` interpreted as a series in `u` (integer doubled
    /// powers `>= 0`), evaluated at `u = inner` where `inner` has positive
    /// leading power. Horner over decreasing powers.
    ///
    /// The result is reliable up to `min(inner.trunc, lead(inner) * J)` where
    /// `J` is the first unknown power of the outer series; generate the outer
    /// series deep enough that the inner truncation dominates.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        for (&k, _) in &self.coeffs {
            if k < 0 || k % 2 != 0 {
                return Err(Error::InvalidInput(
                    "compose outer series must have non-negative integer powers".into(),
                ));
            }
        }
        if let Some(l) = inner.leading_power() {
            if l < 1 {
                return Err(Error::InvalidInput(
                    "compose inner series must vanish at the origin".into(),
                ));
            }
        }
        let first_unknown_u = (self.trunc + 1).div_euclid(2);
        let reliable = match inner.leading_power() {
            Some(l) => inner.trunc.min(l.saturating_mul(first_unknown_u)),
            None => inner.trunc,
        };
        let max_u = self.coeffs.keys().last().map_or(0, |&k| k / 2);
        let mut out = Self::zero(reliable);
        for j in (0..=max_u).rev() {
            out = out.mul(inner).truncate(reliable);
            let c = self.coeff(2 * j);
            if !c.is_zero() {
                out = out.add(&Self::constant(c, reliable));
            }
        }
        Ok(out)
    }

    /// Termwise derivative in `x`: `x^(k/2) -> (k/2) x^(k/2 - 1)`.
    pub fn derivative(&self) -> Self {
        let mut out = Self::zero(self.trunc - 2);
        for (&k, c) in &self.coeffs {
            if k != 0 {
                out.add_to(k - 2, &(c * rat(k, 2)));
            }
        }
        out
    }

    /// Flip the branch of the square root: `x^(k/2) -> (-1)^k x^(k/2)`.
    pub fn flip_branch(&self) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|(&k, c)| (k, if k % 2 == 0 { c.clone() } else { -c.clone() }))
                .collect(),
            trunc: self.trunc,
        }
    }

    /// Evaluate at `x > 0` (plus branch of the square root).
    pub fn eval(&self, x: f64) -> f64 {
        let sqrt_x = x.sqrt();
        self.coeffs
            .iter()
            .map(|(&k, c)| rational_to_f64(c) * sqrt_x.powi(k as i32))
            .sum()
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        // fall back to a scaled division for extreme numerators/denominators
        let n = r.numer();
        let d = r.denom();
        let shift = (n.bits() as i64 - d.bits() as i64).clamp(-900, 900);
        let scaled = if shift > 0 {
            BigRational::new(n.clone(), d.clone() << shift as usize)
        } else {
            BigRational::new(n.clone() << (-shift) as usize, d.clone())
        };
        scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
    })
}

impl fmt::Debug for PuiseuxSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PuiseuxSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            write!(f, "0")?;
        }
        for (i, (&k, c)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, " {} ", if c.is_negative() { "-" } else { "+" })?;
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                2 => write!(f, "{a}*x")?,
                _ if k % 2 == 0 => write!(f, "{a}*x^{}", k / 2)?,
                _ => write!(f, "{a}*x^({k}/2)")?,
            }
        }
        write!(f, " + O(x^({}/2))", self.trunc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugate_product_telescopes() {
        // (1 + x^(1/2)) (1 - x^(1/2)) = 1 - x
        let t = 12;
        let a = PuiseuxSeries::from_terms([(0, rat_int(1)), (1, rat_int(1))], t);
        let b = PuiseuxSeries::from_terms([(0, rat_int(1)), (1, rat_int(-1))], t);
        let p = a.mul(&b);
        assert_eq!(p.coeff(0), rat_int(1));
        assert_eq!(p.coeff(1), rat_int(0));
        assert_eq!(p.coeff(2), rat_int(-1));
        assert!(p.terms().count() == 2);
    }

    #[test]
    fn reciprocal_is_geometric_series() {
        // 1 / (1 - x^(1/2)) = 1 + x^(1/2) + x + ...
        let t = 9;
        let a = PuiseuxSeries::from_terms([(0, rat_int(1)), (1, rat_int(-1))], t);
        let r = a.reciprocal().unwrap();
        for k in 0..t {
            assert_eq!(r.coeff(k), rat_int(1), "power {k}/2");
        }
        // and it inverts: a * r = 1 within truncation
        let prod = a.mul(&r);
        assert_eq!(prod.coeff(0), rat_int(1));
        for k in 1..prod.trunc() {
            assert_eq!(prod.coeff(k), rat_int(0), "power {k}/2");
        }
    }

    #[test]
    fn half_power_monomials_cancel() {
        let t = 8;
        let a = PuiseuxSeries::monomial(-1, rat_int(1), t);
        let b = PuiseuxSeries::monomial(1, rat_int(1), t);
        let p = a.mul(&b);
        assert_eq!(p.coeff(0), rat_int(1));
        assert_eq!(p.terms().count(), 1);
    }

    #[test]
    fn reciprocal_tracks_leading_power_shift() {
        // 1 / (x^(1/2) (1 + x^(1/2))): leading -1, trunc drops by 2*lead
        let t = 10;
        let a = PuiseuxSeries::from_terms([(1, rat_int(1)), (2, rat_int(1))], t);
        let r = a.reciprocal().unwrap();
        assert_eq!(r.trunc(), t - 2);
        assert_eq!(r.coeff(-1), rat_int(1));
        assert_eq!(r.coeff(0), rat_int(-1));
        assert_eq!(r.coeff(1), rat_int(1));
    }

    #[test]
    fn derivative_of_half_powers() {
        let t = 10;
        // x^(3/2): derivative (3/2) x^(1/2)
        let a = PuiseuxSeries::monomial(3, rat_int(2), t);
        let d = a.derivative();
        assert_eq!(d.coeff(1), rat_int(3));
    }

    #[test]
    fn mul_respects_operand_truncation() {
        let a = PuiseuxSeries::from_terms([(0, rat_int(1))], 4);
        let b = PuiseuxSeries::from_terms([(0, rat_int(1))], 9);
        assert_eq!(a.mul(&b).trunc(), 4);
        // negative leading power lowers reliability further
        let c = PuiseuxSeries::from_terms([(-1, rat_int(1))], 9);
        assert_eq!(a.mul(&c).trunc(), 3);
    }

    #[test]
    fn reciprocal_of_zero_series_fails() {
        let z = PuiseuxSeries::zero(6);
        assert!(matches!(
            z.reciprocal(),
            Err(Error::DegenerateSeries(_))
        ));
    }
}
