//! Second-order linear ODE machinery: Abel's identity for the Wronskian,
//! construction of a second independent solution, variation of parameters
//! for the inhomogeneous problem, and the solvability (resonance) functional
//! that boundary-value problems must satisfy.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{GridFunction, ScalarField1D};
use crate::quadrature::{self, QuadratureSpec};

/// `y'' + p y' + q y = f` on `[a, b]` (`b` may be `f64::INFINITY`).
#[derive(Clone, Debug)]
pub struct LinearOde2 {
    pub p: ScalarField1D,
    pub q: ScalarField1D,
    pub f: ScalarField1D,
    pub interval: (f64, f64),
}

impl LinearOde2 {
    pub fn new(p: ScalarField1D, q: ScalarField1D, f: ScalarField1D, interval: (f64, f64)) -> Result<Self> {
        if !(interval.0 < interval.1) {
            return Err(Error::InvalidInput(format!(
                "interval must satisfy a < b, got [{}, {}]",
                interval.0, interval.1
            )));
        }
        Ok(Self { p, q, f, interval })
    }
}

/// Where the problem lives; selects the inner-product range downstream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    WholeLine,
    /// `[0, inf)` with a zero-derivative condition at the origin.
    HalfLineNeumann,
}

/// Robin data `alpha y(a) + beta y'(a) = 0`, `gamma y(b) + delta y'(b) = 0`.
#[derive(Clone, Copy, Debug)]
pub struct BoundarySpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub domain: DomainKind,
}

impl BoundarySpec {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64, domain: DomainKind) -> Result<Self> {
        if (alpha == 0.0 && beta == 0.0) || (gamma == 0.0 && delta == 0.0) {
            return Err(Error::InvalidInput(
                "boundary rows must not both vanish".into(),
            ));
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            delta,
            domain,
        })
    }

    /// Zero derivative at the left end, decay at the right end; the pair used
    /// by the symmetric half-line reduction.
    pub fn neumann_origin_decay() -> Self {
        Self {
            alpha: 0.0,
            beta: 1.0,
            gamma: 1.0,
            delta: 0.0,
            domain: DomainKind::HalfLineNeumann,
        }
    }
}

/// Two independent homogeneous solutions together with their Wronskian.
#[derive(Clone, Debug)]
pub struct WronskianPair {
    pub y1: GridFunction,
    pub y2: GridFunction,
    pub delta: ScalarField1D,
}

impl WronskianPair {
    /// Validates that the Wronskian never vanishes on the grid and that
    /// `y1 y2' - y2 y1'` reproduces `delta` within `tol` (relative).
    pub fn new(y1: GridFunction, y2: GridFunction, delta: ScalarField1D, tol: f64) -> Result<Self> {
        let d1 = y1.derivative_values();
        let d2 = y2.derivative_values();
        let xs = y1.xs();
        let mut scale = 0.0f64;
        for &x in xs {
            scale = scale.max(delta.value(x).abs());
        }
        if scale == 0.0 {
            return Err(Error::SingularIntegrand(
                "Wronskian vanishes identically".into(),
            ));
        }
        // skip the end points: one-sided derivative stencils are less accurate
        for i in 1..xs.len() - 1 {
            let x = xs[i];
            let d = delta.value(x);
            if d == 0.0 {
                return Err(Error::SingularIntegrand(format!(
                    "Wronskian vanishes at x = {x}"
                )));
            }
            let w = y1.ys()[i] * d2[i] - y2.ys()[i] * d1[i];
            if (w - d).abs() > tol * scale {
                return Err(Error::InvalidInput(format!(
                    "pair is not Wronskian-consistent at x = {x}: {w} vs {d}"
                )));
            }
        }
        Ok(Self { y1, y2, delta })
    }
}

/// Wronskian from Abel's identity: `delta(a) * exp(-int_a^x p dt)`.
pub fn abel_wronskian(
    p: &ScalarField1D,
    a: f64,
    delta_a: f64,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let ip = quadrature::integrate_field(p, a, x, spec)?;
    Ok(delta_a * (-ip).exp())
}

/// Second independent solution `y2 = y1 * int_anchor^x y1^(-2) delta dt`,
/// sampled on `grid`. Fails if `y1` changes sign on the grid (the reduction
/// assumes a nodeless solution).
pub fn second_solution(
    y1: &ScalarField1D,
    p: &ScalarField1D,
    anchor: f64,
    delta_a: f64,
    grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<GridFunction> {
    let a = grid[0];
    let mut integrand = Vec::with_capacity(grid.len());
    let mut sign0 = 0i8;
    for &x in grid {
        let v = y1.value(x);
        let s = if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        };
        if s == 0 {
            return Err(Error::SingularIntegrand(format!(
                "y1 vanishes at grid point x = {x}"
            )));
        }
        if sign0 == 0 {
            sign0 = s;
        } else if s != sign0 {
            return Err(Error::SingularIntegrand(format!(
                "y1 changes sign near x = {x}; nodeless assumption violated"
            )));
        }
        let delta = abel_wronskian(p, a, delta_a, x, spec)?;
        integrand.push(delta / (v * v));
    }
    let acc = quadrature::cumulative_values(grid, &integrand, anchor)?;
    let ys: Vec<f64> = grid
        .iter()
        .zip(&acc)
        .map(|(&x, &c)| y1.value(x) * c)
        .collect();
    let xs: Arc<[f64]> = grid.to_vec().into();
    GridFunction::new(xs, ys)
}

/// Variation-of-parameters value at `x`:
/// `y(x) = -y1(x) int_B^x delta^(-1) y2 f dt + y2(x) int_A^x delta^(-1) y1 f dt`.
///
/// `lower_a` / `lower_b` may be `-inf`/`+inf`; the Wronskian pair carries the
/// homogeneous solutions on its grid.
pub fn variation_of_parameters(
    pair: &WronskianPair,
    f: &ScalarField1D,
    lower_b: f64,
    lower_a: f64,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let y1 = &pair.y1;
    let y2 = &pair.y2;
    let delta = &pair.delta;
    let i1 = quadrature::integrate(
        |t| y2.value_at(t) * f.value(t) / delta.value(t),
        lower_b,
        x,
        spec,
    )?;
    let i2 = quadrature::integrate(
        |t| y1.value_at(t) * f.value(t) / delta.value(t),
        lower_a,
        x,
        spec,
    )?;
    Ok(-y1.value_at(x) * i1 + y2.value_at(x) * i2)
}

/// Solvability functional `int_a^b delta^(-1) y1 f dx`; the boundary-value
/// problem admits a solution only where this vanishes.
pub fn resonant_residual(
    y1: &ScalarField1D,
    f: &ScalarField1D,
    delta: &ScalarField1D,
    interval: (f64, f64),
    spec: &QuadratureSpec,
) -> Result<f64> {
    quadrature::integrate(
        |x| y1.value(x) * f.value(x) / delta.value(x),
        interval.0,
        interval.1,
        spec,
    )
}
