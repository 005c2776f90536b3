//! Numerical integration backbone.
//!
//! Finite intervals use tanh-sinh (double-exponential) quadrature with level
//! doubling; `[a, +inf)` uses the exp-sinh variant. Both cluster abscissas at
//! the endpoints, so integrable endpoint singularities such as `x^(-1/2)` are
//! handled without special casing. Grid cumulatives integrate the local cubic
//! interpolant per interval (composite O(h^4)).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{check_monotone, lagrange4, GridFunction, ScalarField1D};

/// Tolerances and refinement budget for adaptive quadrature.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_refinement_depth: usize,
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_refinement_depth: usize) -> Result<Self> {
        if !(rel_tol > 0.0) || !(abs_tol > 0.0) || max_refinement_depth < 1 {
            return Err(Error::InvalidInput(
                "quadrature spec requires rel_tol > 0, abs_tol > 0, depth >= 1".into(),
            ));
        }
        Ok(Self {
            rel_tol,
            abs_tol,
            max_refinement_depth,
        })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_refinement_depth: 12,
        }
    }
}

/// Integrate `f` over `[a, b]`; `b = f64::INFINITY` selects the semi-infinite
/// path (and likewise `a = -inf`, or both). The integrand must decay on
/// infinite tails (caller contract).
pub fn integrate<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate(f, b, a, spec).map(|v| -v);
    }
    match (a.is_infinite(), b.is_infinite()) {
        (false, false) => tanh_sinh(&f, a, b, spec),
        (false, true) => exp_sinh(&f, a, spec),
        (true, false) => exp_sinh(&|x| f(-x), -b, spec),
        (true, true) => {
            let left = exp_sinh(&|x| f(-x), 0.0, spec)?;
            let right = exp_sinh(&f, 0.0, spec)?;
            Ok(left + right)
        }
    }
}

/// Integrate a [`ScalarField1D`] over `[a, b]`.
pub fn integrate_field(f: &ScalarField1D, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate(|x| f.value(x), a, b, spec)
}

/// Integrate `r(x) * exp(-(s(x) - s(x0)))` over `[a, b]`.
///
/// Callers with integrands of the form `r * exp(-s)` where `s` is large pass
/// the two factors separately together with a reference `x0` (usually the
/// minimum of `s` on the interval); the exponent is shifted before
/// exponentiating, so neither factor over- or underflows on its own. The
/// returned value is the integral scaled by `exp(+s(x0))`.
pub fn integrate_weighted<R, S>(
    r: R,
    s: S,
    x0: f64,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64>
where
    R: Fn(f64) -> f64,
    S: Fn(f64) -> f64,
{
    let s0 = s(x0);
    integrate(|x| r(x) * (-(s(x) - s0)).exp(), a, b, spec)
}

const T_CAP: f64 = 6.0;

fn de_pass<G>(g: &G, level: usize, h: f64) -> Result<f64>
where
    G: Fn(f64) -> Option<f64>,
{
    // At level 0 sum all multiples of h including t = 0; afterwards only odd
    // multiples (the even ones were accumulated at coarser levels). Each side
    // is scanned until its transform dies (weight under/overflow): integrand
    // mass can sit far from t = 0, so small terms alone must not stop the
    // scan.
    let mut sum = 0.0;
    let (mut k, step) = if level == 0 { (0i64, 1i64) } else { (1, 2) };
    let mut side_alive = [true, true];
    loop {
        let t = k as f64 * h;
        if t > T_CAP {
            break;
        }
        let nodes: [(usize, f64); 2] = [(0, t), (1, -t)];
        for (side, tt) in nodes {
            if k == 0 && side == 1 {
                continue;
            }
            if !side_alive[side] {
                continue;
            }
            match g(tt) {
                Some(v) => {
                    if !v.is_finite() {
                        return Err(Error::IntegrationFailure(format!(
                            "integrand not finite at transformed node t={tt}"
                        )));
                    }
                    sum += v;
                }
                None => side_alive[side] = false,
            }
        }
        if k > 0 && !side_alive[0] && !side_alive[1] {
            break;
        }
        k += step;
    }
    Ok(sum)
}

fn de_refine<G>(g: &G, spec: &QuadratureSpec) -> Result<f64>
where
    G: Fn(f64) -> Option<f64>,
{
    let mut h = 1.0;
    let mut total = de_pass(g, 0, h)?;
    let mut estimate = total * h;
    let mut bound = f64::INFINITY;
    for level in 1..=spec.max_refinement_depth {
        h *= 0.5;
        total += de_pass(g, level, h)?;
        let current = total * h;
        bound = (current - estimate).abs();
        estimate = current;
        if level >= 3 && bound <= spec.abs_tol.max(spec.rel_tol * estimate.abs()) {
            return Ok(estimate);
        }
    }
    if bound <= spec.abs_tol.max(spec.rel_tol * estimate.abs()) {
        Ok(estimate)
    } else {
        Err(Error::QuadratureAccuracy {
            estimate,
            error_bound: bound,
        })
    }
}

/// Tanh-sinh rule on a finite interval.
fn tanh_sinh<F>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let c = 0.5 * (a + b);
    let d = 0.5 * (b - a);
    let g = |t: f64| -> Option<f64> {
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let ch = u.cosh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (ch * ch);
        if w == 0.0 || !w.is_finite() {
            return None;
        }
        let x = c + d * u.tanh();
        if x <= a || x >= b {
            // rounded onto an endpoint; weight is already ~1e-17 or below
            return None;
        }
        Some(d * w * f(x))
    };
    de_refine(&g, spec)
}

/// Exp-sinh rule on `[a, +inf)`.
fn exp_sinh<F>(f: &F, a: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let g = |t: f64| -> Option<f64> {
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let r = u.exp(); // x - a
        if r == 0.0 || !r.is_finite() {
            return None;
        }
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() * r;
        let x = a + r;
        if x <= a {
            return None;
        }
        Some(w * f(x))
    };
    de_refine(&g, spec)
}

/// Cumulative integral of grid samples: returns `F` with `F(anchor) = 0` and
/// `F' = f`, integrating the cubic interpolant on each interval.
pub fn cumulative_values(xs: &[f64], ys: &[f64], anchor: f64) -> Result<Vec<f64>> {
    check_monotone(xs)?;
    let n = xs.len();
    if n < 4 {
        return Err(Error::InvalidInput("cumulative needs >= 4 grid points".into()));
    }
    if ys.len() != n {
        return Err(Error::InvalidInput("value/grid length mismatch".into()));
    }
    if !(anchor >= xs[0] && anchor <= xs[n - 1]) {
        return Err(Error::InvalidInput(format!(
            "anchor {anchor} outside grid span [{}, {}]",
            xs[0],
            xs[n - 1]
        )));
    }
    let mut acc = vec![0.0; n];
    for i in 0..n - 1 {
        let s = i.saturating_sub(1).min(n - 4);
        let seg = segment_integral(&xs[s..s + 4], &ys[s..s + 4], xs[i], xs[i + 1]);
        acc[i + 1] = acc[i] + seg;
    }
    // shift so that F(anchor) = 0, interpolating inside an interval
    let f_anchor = match xs.binary_search_by(|v| v.partial_cmp(&anchor).unwrap()) {
        Ok(i) => acc[i],
        Err(i) => {
            let i = i - 1; // anchor > xs[0] here
            let s = i.saturating_sub(1).min(n - 4);
            acc[i] + segment_integral(&xs[s..s + 4], &ys[s..s + 4], xs[i], anchor)
        }
    };
    for v in &mut acc {
        *v -= f_anchor;
    }
    Ok(acc)
}

/// Cumulative integral of a field sampled on `grid`, anchored at `anchor`.
pub fn cumulative(f: &ScalarField1D, anchor: f64, grid: &[f64]) -> Result<GridFunction> {
    let ys: Vec<f64> = grid.iter().map(|&x| f.value(x)).collect();
    let acc = cumulative_values(grid, &ys, anchor)?;
    let xs: Arc<[f64]> = grid.to_vec().into();
    GridFunction::new(xs, acc)
}

/// Exact integral over `[alpha, beta]` of the cubic through 4 nodes,
/// evaluated with the 2-point Gauss rule (exact for cubics).
pub(crate) fn segment_integral(xs: &[f64], ys: &[f64], alpha: f64, beta: f64) -> f64 {
    let mid = 0.5 * (alpha + beta);
    let half = 0.5 * (beta - alpha);
    let off = half / 3.0_f64.sqrt();
    half * (lagrange4(xs, ys, mid - off) + lagrange4(xs, ys, mid + off))
}

/// Total integral of grid samples over the whole grid span.
pub fn integrate_grid(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let acc = cumulative_values(xs, ys, xs[0])?;
    Ok(*acc.last().unwrap())
}

/// Gamma(n + 1/2) for n >= 0.
pub(crate) fn gamma_half(n: usize) -> f64 {
    let mut g = std::f64::consts::PI.sqrt();
    for k in 0..n {
        g *= k as f64 + 0.5;
    }
    g
}

/// Gamma at integer or half-integer argument `two_a / 2 > 0`.
pub(crate) fn gamma_half_integer(two_a: i64) -> f64 {
    assert!(two_a > 0, "gamma argument must be positive");
    if two_a % 2 == 0 {
        let mut g = 1.0;
        for k in 2..(two_a / 2) {
            g *= k as f64;
        }
        g
    } else {
        gamma_half((two_a / 2) as usize)
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub(crate) fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n starting from the Chebyshev-like guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // recurrence for P_n(x) and P_n'(x)
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// One term of a large-`g` Laplace expansion: `coefficient * g^(two_power/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplaceTerm {
    /// Doubled power of `g` (so `-1` means `g^(-1/2)`). Strictly decreasing
    /// across an expansion.
    pub two_power: i64,
    pub coefficient: f64,
}

/// Truncated asymptotic expansion of `int f(x) exp(-g x^2) dx` for large `g`.
#[derive(Clone, Debug)]
pub struct LaplaceExpansion {
    terms: Vec<LaplaceTerm>,
}

impl LaplaceExpansion {
    pub fn terms(&self) -> &[LaplaceTerm] {
        &self.terms
    }

    pub fn order(&self) -> usize {
        self.terms.len()
    }

    pub fn evaluate(&self, g: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coefficient * g.powf(t.two_power as f64 / 2.0))
            .sum()
    }
}

/// Termwise expansion of `int f(x) exp(-g x^2) dx` over a symmetric range:
/// term `n` is `f^(2n)(0) * Gamma(n + 1/2) / (2n)! * g^(-n - 1/2)`.
///
/// `taylor_even[n]` holds `f^(2n)(0)`. Endpoint contributions are
/// exponentially small in `g` and ignored.
pub fn watson_expand(taylor_even: &[f64], order: usize) -> Result<LaplaceExpansion> {
    if order < 1 {
        return Err(Error::InvalidInput("watson_expand needs order >= 1".into()));
    }
    if taylor_even.len() < order {
        return Err(Error::InvalidInput(format!(
            "watson_expand order {order} needs {order} even-derivative values, got {}",
            taylor_even.len()
        )));
    }
    let mut factorial_2n = 1.0;
    let mut terms = Vec::with_capacity(order);
    for (n, &f2n) in taylor_even.iter().take(order).enumerate() {
        if n > 0 {
            factorial_2n *= (2 * n - 1) as f64 * (2 * n) as f64;
        }
        terms.push(LaplaceTerm {
            two_power: -(2 * n as i64 + 1),
            coefficient: f2n * gamma_half(n) / factorial_2n,
        });
    }
    Ok(LaplaceExpansion { terms })
}

/// Convenience: evaluate the Watson expansion at a given `g`.
pub fn watson_value(taylor_even: &[f64], g: f64, order: usize) -> Result<f64> {
    if !(g > 0.0) {
        return Err(Error::InvalidInput("watson expansion needs g > 0".into()));
    }
    Ok(watson_expand(taylor_even, order)?.evaluate(g))
}
