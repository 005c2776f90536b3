//! Exact-coefficient formal series machinery: Puiseux arithmetic, series
//! reversion for the well substitution, inverse-power series over a large
//! parameter, and the standard-form reduction of nested exponential triple
//! integrals.

pub mod lagrange;
pub mod puiseux;
pub mod ratseries;
pub mod triple;

pub use lagrange::{
    gaussian_moments, revert_square, well_expansion, well_forward, well_u, Branch, BranchPair,
    WellSeries,
};
pub use puiseux::{rat, rat_int, rational_to_f64, PuiseuxSeries};
pub use ratseries::InversePowerSeries;
pub use triple::{standard_triple_value, triple_series, ReducedTripleSeries, StandardTriple};

use num::rational::BigRational;
use serde::Serialize;

/// Provenance of a reported series coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Carried through the pipeline in exact rational arithmetic.
    Exact,
    /// Involves numerically evaluated unit-square integrals.
    Floating,
}

/// One coefficient of an energy-like expansion.
#[derive(Clone, Debug)]
pub struct EnergyCoefficient {
    /// Power `k` of `g^(-k)`, starting at 0.
    pub power: u32,
    pub value: f64,
    /// Exact value when the pipeline kept it rational.
    pub rational: Option<BigRational>,
}

impl EnergyCoefficient {
    pub fn provenance(&self) -> Provenance {
        if self.rational.is_some() {
            Provenance::Exact
        } else {
            Provenance::Floating
        }
    }
}

/// `X(g) = g + sum_k c_k g^(-k)` — the common shape of the energy, the
/// energy-shift and the variational-parameter expansions (for pure shifts the
/// leading `g` is simply not added when evaluating, see [`Self::shift_at`]).
#[derive(Clone, Debug)]
pub struct EnergyExpansion {
    coefficients: Vec<EnergyCoefficient>,
}

impl EnergyExpansion {
    /// Dense coefficients for consecutive powers starting at `g^0`.
    pub fn new(coefficients: Vec<EnergyCoefficient>) -> crate::Result<Self> {
        for (i, c) in coefficients.iter().enumerate() {
            if c.power as usize != i {
                return Err(crate::Error::InvalidInput(
                    "expansion powers must be consecutive from 0".into(),
                ));
            }
            if let Some(r) = &c.rational {
                let back = rational_to_f64(r);
                if (back - c.value).abs() > 1e-12 * back.abs().max(1.0) {
                    return Err(crate::Error::InvalidInput(format!(
                        "rational/value mismatch at power {}: {r} vs {}",
                        c.power, c.value
                    )));
                }
            }
        }
        Ok(Self { coefficients })
    }

    /// Build from exact rationals for `g^0 .. g^-(n-1)`.
    pub fn from_rationals(rationals: &[BigRational]) -> Self {
        let coefficients = rationals
            .iter()
            .enumerate()
            .map(|(i, r)| EnergyCoefficient {
                power: i as u32,
                value: rational_to_f64(r),
                rational: Some(r.clone()),
            })
            .collect();
        Self { coefficients }
    }

    pub fn coefficients(&self) -> &[EnergyCoefficient] {
        &self.coefficients
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn value(&self, power: u32) -> Option<f64> {
        self.coefficients.get(power as usize).map(|c| c.value)
    }

    pub fn rational(&self, power: u32) -> Option<&BigRational> {
        self.coefficients
            .get(power as usize)
            .and_then(|c| c.rational.as_ref())
    }

    /// `sum_k c_k g^(-k)` (no leading `g`).
    pub fn shift_at(&self, g: f64) -> f64 {
        self.coefficients
            .iter()
            .map(|c| c.value * g.powi(-(c.power as i32)))
            .sum()
    }

    /// `g + sum_k c_k g^(-k)`.
    pub fn energy_at(&self, g: f64) -> f64 {
        g + self.shift_at(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_accessors_and_eval() {
        let e = EnergyExpansion::from_rationals(&[rat(-1, 4), rat(-9, 64)]);
        assert_eq!(e.order(), 2);
        assert_eq!(e.rational(0), Some(&rat(-1, 4)));
        assert_eq!(e.coefficients()[1].provenance(), Provenance::Exact);
        let g = 10.0;
        assert!((e.shift_at(g) - (-0.25 - 9.0 / 640.0)).abs() < 1e-15);
        assert!((e.energy_at(g) - (g - 0.25 - 9.0 / 640.0)).abs() < 1e-15);
    }

    #[test]
    fn expansion_rejects_gaps() {
        let bad = vec![
            EnergyCoefficient {
                power: 0,
                value: 1.0,
                rational: None,
            },
            EnergyCoefficient {
                power: 2,
                value: 1.0,
                rational: None,
            },
        ];
        assert!(EnergyExpansion::new(bad).is_err());
    }
}
