//! Truncated series in inverse powers of a large parameter, with exact
//! rational coefficients.
//!
//! Key `j` holds the coefficient of `g^(-j)`; negative keys are positive
//! powers of `g` (needed transiently by the variational stationarity
//! algebra). `trunc` is the first unreliable key.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::{One, Zero};

use crate::error::{Error, Result};
use crate::series::puiseux::rational_to_f64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InversePowerSeries {
    coeffs: BTreeMap<i64, BigRational>,
    trunc: i64,
}

impl InversePowerSeries {
    pub fn zero(trunc: i64) -> Self {
        Self {
            coeffs: BTreeMap::new(),
            trunc,
        }
    }

    /// `c * g^(-power)`.
    pub fn monomial(power: i64, c: BigRational, trunc: i64) -> Self {
        let mut s = Self::zero(trunc);
        s.set(power, c);
        s
    }

    pub fn constant(c: BigRational, trunc: i64) -> Self {
        Self::monomial(0, c, trunc)
    }

    pub fn from_terms<I>(terms: I, trunc: i64) -> Self
    where
        I: IntoIterator<Item = (i64, BigRational)>,
    {
        let mut s = Self::zero(trunc);
        for (j, c) in terms {
            s.set(j, c);
        }
        s
    }

    pub fn trunc(&self) -> i64 {
        self.trunc
    }

    pub fn coeff(&self, power: i64) -> BigRational {
        self.coeffs
            .get(&power)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn leading_power(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigRational)> {
        self.coeffs.iter().map(|(&j, c)| (j, c))
    }

    fn set(&mut self, power: i64, c: BigRational) {
        if power < self.trunc && !c.is_zero() {
            self.coeffs.insert(power, c);
        }
    }

    fn add_to(&mut self, power: i64, c: &BigRational) {
        if power >= self.trunc || c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(power).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&power);
        }
    }

    pub fn truncate(&self, trunc: i64) -> Self {
        let trunc = trunc.min(self.trunc);
        Self {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(&j, _)| j < trunc)
                .map(|(&j, c)| (j, c.clone()))
                .collect(),
            trunc,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(&j, c)| (j, -c.clone())).collect(),
            trunc: self.trunc,
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.trunc);
        }
        Self {
            coeffs: self.coeffs.iter().map(|(&j, v)| (j, v * c)).collect(),
            trunc: self.trunc,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.trunc.min(other.trunc));
        for (j, c) in self.coeffs.iter().chain(other.coeffs.iter()) {
            out.add_to(*j, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut trunc = self.trunc.min(other.trunc);
        if let (Some(la), Some(lb)) = (self.leading_power(), other.leading_power()) {
            trunc = trunc.min(self.trunc + lb).min(other.trunc + la);
        }
        let mut out = Self::zero(trunc);
        for (&ja, ca) in &self.coeffs {
            for (&jb, cb) in &other.coeffs {
                if ja + jb < trunc {
                    out.add_to(ja + jb, &(ca * cb));
                }
            }
        }
        out
    }

    pub fn recip(&self) -> Result<Self> {
        let lead = self
            .leading_power()
            .ok_or_else(|| Error::DegenerateSeries("reciprocal of zero series".into()))?;
        let c_lead = self.coeff(lead);
        let out_trunc = self.trunc - 2 * lead;
        let mut out = Self::zero(out_trunc);
        out.set(-lead, c_lead.recip());
        let mut m = -lead + 1;
        while m < out_trunc {
            let mut acc = BigRational::zero();
            for (&j, cj) in &out.coeffs {
                if j >= m {
                    continue;
                }
                if let Some(f) = self.coeffs.get(&(m + lead - j)) {
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

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.recip()?))
    }

    /// Derivative with respect to the large parameter `f` itself:
    /// `d/df f^(-j) = -j f^(-j-1)`.
    pub fn derivative(&self) -> Self {
        let mut out = Self::zero(self.trunc + 1);
        for (&j, c) in &self.coeffs {
            if j != 0 {
                out.add_to(j + 1, &(c * BigRational::from_integer((-j).into())));
            }
        }
        out
    }

    /// Substitute `f = g + w` where `w` is a series in `g^(-1)` with positive
    /// leading power, returning a series in `g`.
    pub fn compose_shifted(&self, w: &Self, trunc: i64) -> Result<Self> {
        if let Some(l) = w.leading_power() {
            if l < 1 {
                return Err(Error::InvalidInput(
                    "shift series must be O(1/g) or smaller".into(),
                ));
            }
        }
        // f as a series in g: g^1 + w
        let f = Self::monomial(-1, BigRational::one(), trunc).add(&w.truncate(trunc));
        let inv_f = f.recip()?.truncate(trunc);
        // Horner over ascending inverse powers for the j >= 1 part
        let max_j = self.coeffs.keys().last().copied().unwrap_or(0);
        let mut out = Self::zero(trunc);
        if max_j >= 1 {
            for j in (1..=max_j).rev() {
                out = out.mul(&inv_f).truncate(trunc);
                let c = self.coeff(j);
                if !c.is_zero() {
                    out = out.add(&Self::constant(c, trunc));
                }
            }
            out = out.mul(&inv_f).truncate(trunc);
        }
        // non-negative powers of f (only small ones appear here)
        let mut pos = Self::zero(trunc);
        for (&j, c) in self.coeffs.range(..=0) {
            let mut term = Self::constant(c.clone(), trunc);
            for _ in 0..(-j) {
                term = term.mul(&f).truncate(trunc);
            }
            pos = pos.add(&term);
        }
        Ok(out.add(&pos))
    }

    pub fn eval(&self, g: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&j, c)| rational_to_f64(c) * g.powi(-j as i32))
            .sum()
    }

    /// Dense rational coefficients for `g^0 .. g^-(n-1)`; fails when the
    /// series has positive powers of `g` or insufficient truncation.
    pub fn dense_tail(&self, n: usize) -> Result<Vec<BigRational>> {
        if let Some(l) = self.leading_power() {
            if l < 0 {
                return Err(Error::InvalidInput(
                    "series has positive powers of g".into(),
                ));
            }
        }
        if (n as i64) > self.trunc {
            return Err(Error::SeriesAccuracy(format!(
                "requested {n} coefficients, series reliable below g^-{}",
                self.trunc
            )));
        }
        Ok((0..n as i64).map(|j| self.coeff(j)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::puiseux::{rat, rat_int};

    #[test]
    fn division_reproduces_geometric() {
        let t = 8;
        let one = InversePowerSeries::constant(rat_int(1), t);
        let denom = InversePowerSeries::from_terms([(0, rat_int(1)), (1, rat_int(-1))], t);
        let q = one.div(&denom).unwrap();
        for j in 0..t {
            assert_eq!(q.coeff(j), rat_int(1));
        }
    }

    #[test]
    fn recip_with_leading_monomial() {
        // 1 / (2 g) = (1/2) g^-1
        let t = 6;
        let two_g = InversePowerSeries::monomial(-1, rat_int(2), t);
        let r = two_g.recip().unwrap();
        assert_eq!(r.coeff(1), rat(1, 2));
        assert_eq!(r.terms().count(), 1);
    }

    #[test]
    fn derivative_in_f() {
        let t = 8;
        // 3 f^-2 -> -6 f^-3
        let s = InversePowerSeries::monomial(2, rat_int(3), t);
        let d = s.derivative();
        assert_eq!(d.coeff(3), rat_int(-6));
    }

    #[test]
    fn compose_shifted_matches_binomial() {
        // f^-1 at f = g + c/g: g^-1 - c g^-3 + c^2 g^-5 - ...
        let t = 7;
        let s = InversePowerSeries::monomial(1, rat_int(1), t);
        let w = InversePowerSeries::monomial(1, rat_int(3), t);
        let c = s.compose_shifted(&w, t).unwrap();
        assert_eq!(c.coeff(1), rat_int(1));
        assert_eq!(c.coeff(3), rat_int(-3));
        assert_eq!(c.coeff(5), rat_int(9));
        assert_eq!(c.coeff(2), rat_int(0));
    }

    #[test]
    fn compose_shifted_linear_part() {
        // f at f = g + w reproduces g + w
        let t = 6;
        let s = InversePowerSeries::monomial(-1, rat_int(1), t);
        let w = InversePowerSeries::from_terms([(1, rat(-9, 64)), (2, rat(1, 3))], t);
        let c = s.compose_shifted(&w, t).unwrap();
        assert_eq!(c.coeff(-1), rat_int(1));
        assert_eq!(c.coeff(1), rat(-9, 64));
        assert_eq!(c.coeff(2), rat(1, 3));
    }

    #[test]
    fn eval_sums_inverse_powers() {
        let s = InversePowerSeries::from_terms([(0, rat(-1, 4)), (1, rat(-9, 64))], 4);
        let v = s.eval(10.0);
        assert!((v - (-0.25 - 9.0 / 640.0)).abs() < 1e-15);
    }
}
