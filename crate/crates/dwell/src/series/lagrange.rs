//! Series reversion for maps with a double zero, and the expansions induced
//! by the double-well substitution `x = u^2 + u^3/3`.
//!
//! A forward map `x = a2 u^2 + a3 u^3 + ...` has two local inverses
//! `u = ±x^(1/2)/sqrt(a2) + ...`; [`revert_square`] produces either branch as
//! a Puiseux series in `x^(1/2)` by Newton iteration in exact rational
//! arithmetic. [`well_expansion`] specializes to the functions needed by the
//! double-well energy integrals.

use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::series::puiseux::{rat, PuiseuxSeries};

/// Which sign of `x^(1/2)` the inverse starts with. `Plus` covers `u > 0`,
/// `Minus` covers the `u < 0` side of the double zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Exact rational square root, if one exists.
fn sqrt_rational(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

/// Invert `x = f(u)` where `f` has a double zero at the origin: the forward
/// series must have no terms below `u^2` and a leading coefficient whose
/// square root is rational. Returns `u(x)` as a series in `x^(1/2)` valid to
/// (doubled) order `order`, with the requested branch sign on the leading
/// `x^(1/2)` term. Composing the result back into `f` reproduces `x` to the
/// truncation order.
pub fn revert_square(forward: &PuiseuxSeries, branch: Branch, order: i64) -> Result<PuiseuxSeries> {
    for (k, _) in forward.terms() {
        if k < 4 || k % 2 != 0 {
            return Err(Error::DegenerateSeries(format!(
                "forward map must start at u^2 with integer powers, found term at doubled power {k}"
            )));
        }
    }
    let a2 = forward.coeff(4);
    if a2.is_zero() {
        return Err(Error::DegenerateSeries(
            "forward map has zero leading coefficient".into(),
        ));
    }
    let b1 = sqrt_rational(&a2.recip()).ok_or_else(|| {
        Error::DegenerateSeries(
            "leading coefficient must be the square of a rational for a rational branch".into(),
        )
    })?;
    let b1 = match branch {
        Branch::Plus => b1,
        Branch::Minus => -b1,
    };

    let work = order + 2;
    let x = PuiseuxSeries::monomial(2, BigRational::one(), work);
    let d_forward = forward_derivative(forward);

    // Newton: u <- u - (f(u) - x) / f'(u); each step roughly doubles the
    // number of correct terms.
    let mut u = PuiseuxSeries::monomial(1, b1, work);
    let steps = 64 - (order.max(2) as u64).leading_zeros() + 2;
    for _ in 0..steps {
        let fu = forward.compose(&u)?;
        let residual = fu.sub(&x);
        if residual.is_zero() {
            break;
        }
        let slope = d_forward.compose(&u)?;
        let delta = residual.mul(&slope.reciprocal()?);
        u = u.sub(&delta).truncate(work);
    }
    Ok(u.truncate(order))
}

fn forward_derivative(forward: &PuiseuxSeries) -> PuiseuxSeries {
    // d/du of a series in u (doubled keys 2j)
    let mut out = PuiseuxSeries::zero(forward.trunc());
    for (k, c) in forward.terms() {
        let j = k / 2;
        if j != 0 {
            out = out.add(&PuiseuxSeries::monomial(
                k - 2,
                c * BigRational::from_integer(j.into()),
                forward.trunc(),
            ));
        }
    }
    out
}

/// The double-well substitution `x = u^2 + u^3 / 3` as a forward series.
pub fn well_forward(trunc: i64) -> PuiseuxSeries {
    PuiseuxSeries::from_terms([(4, rat(1, 1)), (6, rat(1, 3))], trunc)
}

/// `u(x)` for the double-well substitution on the requested branch.
pub fn well_u(branch: Branch, order: i64) -> Result<PuiseuxSeries> {
    revert_square(&well_forward(2 * order + 8), branch, order)
}

/// Named expansions produced by the substitution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WellSeries {
    /// `1 / (u + 2)^2`
    InvSquare,
    /// `1 / (u + 2)^4`
    InvQuartic,
    /// `du / dx`
    DuDx,
}

/// Series in `x^(1/2)` of the requested function along one branch of
/// `x = u^2 + u^3/3`.
pub fn well_expansion(target: WellSeries, branch: Branch, order: i64) -> Result<PuiseuxSeries> {
    let u = well_u(branch, order + 4)?;
    match target {
        WellSeries::InvSquare => inv_square_of_two_plus(&u, order),
        WellSeries::InvQuartic => {
            let s = inv_square_of_two_plus(&u, order + 2)?;
            Ok(s.mul(&s).truncate(order))
        }
        WellSeries::DuDx => Ok(u.derivative().truncate(order)),
    }
}

fn inv_square_of_two_plus(u: &PuiseuxSeries, order: i64) -> Result<PuiseuxSeries> {
    let two_plus = u.add(&PuiseuxSeries::constant(rat(2, 1), u.trunc()));
    Ok(two_plus.mul(&two_plus).reciprocal()?.truncate(order))
}

/// A function of `u` pushed through both branches of the substitution,
/// including the integration measure and orientation:
///
/// * `plus(x)  =  h(u_+(x)) * du_+/dx`  covers `u > 0`;
/// * `minus(x) = -h(u_-(x)) * du_-/dx`  covers `-1 < u < 0`, oriented so that
///   integrating `minus * exp(-2 g x) dx` over `x > 0` reproduces the
///   original `du` integral over the negative side.
#[derive(Clone, Debug)]
pub struct BranchPair {
    pub plus: PuiseuxSeries,
    pub minus: PuiseuxSeries,
}

impl BranchPair {
    /// Push a series in `u` (non-negative integer doubled powers) through the
    /// substitution. `order` is the doubled truncation of the results.
    pub fn from_u_series(h: &PuiseuxSeries, order: i64) -> Result<Self> {
        let u_plus = well_u(Branch::Plus, order + 4)?;
        let du_plus = u_plus.derivative();
        let plus = h.compose(&u_plus)?.mul(&du_plus).truncate(order);
        // the minus branch is the plus branch under x^(1/2) -> -x^(1/2),
        // with one extra sign for the orientation of du
        let minus = plus.flip_branch().neg();
        Ok(Self { plus, minus })
    }

    pub fn neg(&self) -> Self {
        Self {
            plus: self.plus.neg(),
            minus: self.minus.neg(),
        }
    }

    /// Branch sum: what a two-sided integral over `du` sees as a single
    /// series in `x^(1/2)` under `x > 0`.
    pub fn combined(&self) -> PuiseuxSeries {
        self.plus.add(&self.minus)
    }
}

/// Termwise large-`g` integration of a branch-pair against `exp(-2 g x)` over
/// `x in [0, inf)`:
///
/// `int x^(m - 1/2) exp(-2 g x) dx = Gamma(m + 1/2) (2g)^(-m - 1/2)`.
///
/// Even half-powers of the combined series cancel between branches (checked
/// exactly); the odd ones produce a common factor `sqrt(pi/2) * g^(-1/2)`
/// which is factored OUT of the returned series: the result holds rational
/// coefficients `r_m` of `g^(-m)` such that the integral equals
/// `sqrt(pi/2) * g^(-1/2) * sum r_m g^(-m)`.
pub fn gaussian_moments(pair: &BranchPair) -> Result<super::ratseries::InversePowerSeries> {
    let w = pair.combined();
    if let Some(l) = w.leading_power() {
        if l < -1 {
            return Err(Error::InvalidInput(format!(
                "moment integrand must be integrable at the origin, leading doubled power {l}"
            )));
        }
    }
    let trunc_m = (w.trunc() + 1).div_euclid(2);
    let mut terms = Vec::new();
    for (k, c) in w.terms() {
        if k % 2 == 0 {
            return Err(Error::SeriesAccuracy(format!(
                "even half-power x^{} survived branch combination: {c}",
                k / 2
            )));
        }
        let m = (k + 1) / 2; // x^(m - 1/2)
        // Gamma(m + 1/2) / Gamma(1/2) = (2m)! / (4^m m!), times the 2^-m
        // from (2g)^(-m)
        let mut factor = BigRational::one();
        for i in 1..=m {
            // multiply by (2i)(2i - 1) / (4 i) / 2 = (2i - 1) / 4
            factor *= rat(2 * i - 1, 4);
        }
        terms.push((m, c * &factor));
    }
    Ok(super::ratseries::InversePowerSeries::from_terms(
        terms, trunc_m,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::puiseux::rat_int;

    #[test]
    fn pure_square_inverts_exactly() {
        let forward = PuiseuxSeries::monomial(4, rat_int(1), 20);
        let u = revert_square(&forward, Branch::Plus, 12).unwrap();
        assert_eq!(u.coeff(1), rat_int(1));
        assert_eq!(u.terms().count(), 1);
        let um = revert_square(&forward, Branch::Minus, 12).unwrap();
        assert_eq!(um.coeff(1), rat_int(-1));
    }

    #[test]
    fn well_inverse_leading_terms() {
        // u = x^(1/2) - x/6 + (5/72) x^(3/2) - (1/27) x^2 + ...
        let u = well_u(Branch::Plus, 9).unwrap();
        assert_eq!(u.coeff(1), rat_int(1));
        assert_eq!(u.coeff(2), rat(-1, 6));
        assert_eq!(u.coeff(3), rat(5, 72));
        assert_eq!(u.coeff(4), rat(-1, 27));
    }

    #[test]
    fn round_trip_well_map() {
        let order = 14;
        let forward = well_forward(2 * order);
        for branch in [Branch::Plus, Branch::Minus] {
            let u = revert_square(&forward, branch, order).unwrap();
            let back = forward.compose(&u).unwrap();
            assert_eq!(back.coeff(2), rat_int(1), "{branch:?}");
            for (k, c) in back.terms() {
                assert!(k == 2, "{branch:?}: stray term {c} at doubled power {k}");
            }
        }
    }

    #[test]
    fn round_trip_random_rational_forwards() {
        // deterministic pseudo-random rational coefficients with a
        // perfect-square leading term
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) % 13) as i64 - 6
        };
        for case in 0..10 {
            let lead_root = 1 + (next().abs() % 3);
            let mut terms = vec![(4, rat_int(lead_root * lead_root))];
            for j in 3..7 {
                let n = next();
                let d = 1 + next().abs();
                if n != 0 {
                    terms.push((2 * j, rat(n, d)));
                }
            }
            let order = 11;
            let forward = PuiseuxSeries::from_terms(terms, 2 * order);
            let u = revert_square(&forward, Branch::Plus, order).unwrap();
            let back = forward.compose(&u).unwrap();
            assert_eq!(back.coeff(2), rat_int(1), "case {case}");
            for (k, c) in back.terms() {
                assert!(k == 2, "case {case}: stray {c} at {k}");
            }
        }
    }

    #[test]
    fn irrational_leading_coefficient_is_rejected() {
        let forward = PuiseuxSeries::monomial(4, rat_int(2), 20);
        assert!(matches!(
            revert_square(&forward, Branch::Plus, 8),
            Err(Error::DegenerateSeries(_))
        ));
    }

    #[test]
    fn inv_square_expansion_heads() {
        // 1/(u+2)^2 = 1/4 - x^(1/2)/4 + 11 x/48 - ...
        let s = well_expansion(WellSeries::InvSquare, Branch::Plus, 6).unwrap();
        assert_eq!(s.coeff(0), rat(1, 4));
        assert_eq!(s.coeff(1), rat(-1, 4));
        assert_eq!(s.coeff(2), rat(11, 48));
    }

    #[test]
    fn inv_quartic_expansion_heads() {
        // 1/(u+2)^4 = 1/16 - x^(1/2)/8 + 17 x/96 - ...
        let s = well_expansion(WellSeries::InvQuartic, Branch::Plus, 6).unwrap();
        assert_eq!(s.coeff(0), rat(1, 16));
        assert_eq!(s.coeff(1), rat(-1, 8));
        assert_eq!(s.coeff(2), rat(17, 96));
    }

    #[test]
    fn du_dx_expansion_heads() {
        // du/dx = (1/2) x^(-1/2) - 1/6 + (5/48) x^(1/2) - ...
        let s = well_expansion(WellSeries::DuDx, Branch::Plus, 5).unwrap();
        assert_eq!(s.coeff(-1), rat(1, 2));
        assert_eq!(s.coeff(0), rat(-1, 6));
        assert_eq!(s.coeff(1), rat(5, 48));
    }

    #[test]
    fn minus_branch_expansions_flip_odd_powers() {
        // u_- (x) is u_+ (x) under x^(1/2) -> -x^(1/2), so every derived
        // expansion flips the sign of its odd half-powers only.
        for target in [WellSeries::InvSquare, WellSeries::InvQuartic, WellSeries::DuDx] {
            let plus = well_expansion(target, Branch::Plus, 5).unwrap();
            let minus = well_expansion(target, Branch::Minus, 5).unwrap();
            for (k, c) in plus.terms() {
                let expect = if k % 2 == 0 { c.clone() } else { -c.clone() };
                assert_eq!(minus.coeff(k), expect, "{target:?} doubled power {k}");
            }
        }
    }

    #[test]
    fn branch_pair_combination_keeps_only_odd_powers() {
        // h = 1 (the plain measure du): combined series must be odd in
        // x^(1/2) and reproduce twice the odd part of du/dx
        let one = PuiseuxSeries::constant(rat_int(1), 16);
        let pair = BranchPair::from_u_series(&one, 9).unwrap();
        let w = pair.combined();
        for (k, _) in w.terms() {
            assert!(k % 2 != 0, "even power {k} survived");
        }
        assert_eq!(w.coeff(-1), rat_int(1)); // 2 * (1/2) x^(-1/2)
        assert_eq!(w.coeff(1), rat(5, 24)); // 2 * (5/48)
    }

    #[test]
    fn moments_of_plain_measure() {
        // int_{-1}^{inf} exp(-2 g (u^2 + u^3/3)) du ~ sqrt(pi/2) g^{-1/2}
        // (1 + r_1/g + ...): the leading reduced coefficient is 1.
        let one = PuiseuxSeries::constant(rat_int(1), 16);
        let pair = BranchPair::from_u_series(&one, 9).unwrap();
        let m = gaussian_moments(&pair).unwrap();
        assert_eq!(m.coeff(0), rat_int(1));
    }
}
