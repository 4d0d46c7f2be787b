//! The extremal function `f(x) = 1 - (-1)^{sum_{j<=q} k_j} L cos phi(x)`, its
//! alternation set, its rational form and the imaginary-axis deviation point.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::chebyshev::to_monomial;
use crate::exec::{map_indexed, Execution};
use crate::geometry::{GeometryError, Preimage, ProblemSpec};
use crate::herglotz::{boundary_u, circle_v, f_on_diameter, HerglotzError};
use crate::scalar::{bisect, golden_min};
use crate::solver::SolveResult;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtremalError {
    #[error("solve did not converge (B0 = {b0})")]
    NotConverged { b0: f64 },
    #[error("{x} is outside [a, 1] and the positive imaginary axis")]
    OutsideSupportedRegion { x: Complex64 },
    #[error("expected {expected} alternation points, found {found}")]
    AlternationCountMismatch { expected: usize, found: usize },
    #[error("grid of {given} points is below the minimum {required}")]
    GridTooSmall { given: usize, required: usize },
    #[error("extraction system is ill-conditioned (condition {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("extracted rational misses f by {residual:e}")]
    ResidualTooLarge { residual: f64 },
    #[error("no sign change of R(alpha) - 1/2 on the arc")]
    RootNotBracketed,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Evaluation(#[from] HerglotzError),
}

/// `L = 1 / cosh B0`.
pub fn error_from_b0(b0: f64) -> f64 {
    1.0 / b0.cosh()
}

/// Best uniform error of a converged solve.
pub fn best_error(result: &SolveResult) -> Result<f64, ExtremalError> {
    if !result.converged() {
        return Err(ExtremalError::NotConverged { b0: result.b0_star() });
    }
    Ok(error_from_b0(result.b0_star()))
}

/// Where `phi` and `f` can be evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalPoint {
    /// `x` in `[a, 1]`.
    Real(f64),
    /// `i y`, `y > 0`.
    Imaginary(f64),
}

impl EvalPoint {
    pub fn as_complex(self) -> Complex64 {
        match self {
            EvalPoint::Real(x) => Complex64::new(x, 0.0),
            EvalPoint::Imaginary(y) => Complex64::new(0.0, y),
        }
    }
}

/// `phi` on `[a, 1]` through the diameter of the disk.
pub fn phi_on_interval(x: f64, result: &SolveResult) -> Result<f64, ExtremalError> {
    match result.map().inverse_positive(x) {
        Ok(Preimage::Diameter(zeta)) => Ok(f_on_diameter(zeta, result.measure(), result.scale())),
        _ => Err(ExtremalError::OutsideSupportedRegion { x: Complex64::new(x, 0.0) }),
    }
}

pub fn eval_phi(point: EvalPoint, result: &SolveResult) -> Result<Complex64, ExtremalError> {
    match point {
        EvalPoint::Real(x) => Ok(Complex64::new(phi_on_interval(x, result)?, 0.0)),
        EvalPoint::Imaginary(y) => {
            if !(y > 0.0 && y.is_finite()) {
                return Err(ExtremalError::OutsideSupportedRegion { x: point.as_complex() });
            }
            let alpha = result.map().angle_of_imaginary(y);
            let u = boundary_u(alpha, result.measure(), result.scale())?;
            let v = circle_v(alpha, result.measure(), result.scale())?;
            Ok(Complex64::new(u, v))
        }
    }
}

/// `f(x)` on `[a, 1]`.
pub fn eval_extremal(x: f64, result: &SolveResult) -> Result<f64, ExtremalError> {
    let l = error_from_b0(result.b0_star());
    Ok(1.0 - result.spec().sign() * l * phi_on_interval(x, result)?.cos())
}

/// `f` at either kind of point.
pub fn eval_extremal_at(point: EvalPoint, result: &SolveResult) -> Result<Complex64, ExtremalError> {
    let l = error_from_b0(result.b0_star());
    Ok(1.0 - result.spec().sign() * l * eval_phi(point, result)?.cos())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternationReport {
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub count: usize,
    /// `max |f - 1|` over the grid and the refined extrema.
    pub l_observed: f64,
}

impl AlternationReport {
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `sum_{j=0}^p k_j + m + 1`.
pub fn expected_alternation_count(spec: &ProblemSpec) -> usize {
    (spec.multiplicity_sum() + spec.m) as usize + 1
}

/// `n` Chebyshev points of `[lo, hi]`, ascending, endpoints included.
pub fn chebyshev_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let mut g: Vec<f64> = (0..n).map(|i| mid - half * (PI * i as f64 / (n - 1) as f64).cos()).collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

pub fn alternation_scan(result: &SolveResult, grid_size: usize) -> Result<AlternationReport, ExtremalError> {
    alternation_scan_with(result, grid_size, Execution::default())
}

/// Extrema of `f` on a Chebyshev grid of `[a, 1]`, refined by golden-section
/// search, keeping those with `|f - 1| > L/2` and merging equal signs.
pub fn alternation_scan_with(
    result: &SolveResult,
    grid_size: usize,
    exec: Execution,
) -> Result<AlternationReport, ExtremalError> {
    let expected = expected_alternation_count(result.spec());
    let required = 16 * expected;
    if grid_size < required {
        return Err(ExtremalError::GridTooSmall { given: grid_size, required });
    }
    let x = chebyshev_grid(result.spec().a, 1.0, grid_size);
    let f: Vec<f64> = map_indexed(exec, grid_size, |i| eval_extremal(x[i], result)).into_iter().collect::<Result<_, _>>()?;
    let l = error_from_b0(result.b0_star());
    let mut l_observed = f.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);

    let mut candidates = vec![(x[0], f[0])];
    for i in 1..grid_size - 1 {
        let is_max = f[i] >= f[i - 1] && f[i] > f[i + 1];
        let is_min = f[i] <= f[i - 1] && f[i] < f[i + 1];
        if !(is_max || is_min) {
            continue;
        }
        let s = if is_max { -1.0 } else { 1.0 };
        let mut failed = false;
        let (xm, fm) = golden_min(
            |t| match eval_extremal(t, result) {
                Ok(v) => s * v,
                Err(_) => {
                    failed = true;
                    f64::INFINITY
                }
            },
            x[i - 1],
            x[i + 1],
            1e-12,
        );
        let (xm, fm) = if failed || fm > s * f[i] { (x[i], f[i]) } else { (xm, s * fm) };
        candidates.push((xm, fm));
    }
    candidates.push((x[grid_size - 1], f[grid_size - 1]));

    let mut points: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (xc, fc) in candidates {
        let g = fc - 1.0;
        l_observed = l_observed.max(g.abs());
        if g.abs() <= 0.5 * l {
            continue;
        }
        match values.last() {
            Some(&last) if (last - 1.0).signum() == g.signum() => {
                if g.abs() > (last - 1.0).abs() {
                    *points.last_mut().expect("non-empty") = xc;
                    *values.last_mut().expect("non-empty") = fc;
                }
            }
            _ => {
                points.push(xc);
                values.push(fc);
            }
        }
    }
    let count = points.len();
    if count != expected {
        return Err(ExtremalError::AlternationCountMismatch { expected, found: count });
    }
    Ok(AlternationReport { points, values, count, l_observed })
}

/// `R(x) = (c_0 + c_2 x^2 + ... + c_n x^n) / D(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalForm {
    pub even_coeffs: Vec<f64>,
    pub spec: ProblemSpec,
}

impl RationalForm {
    pub fn numerator(&self, x: f64) -> f64 {
        let s = x * x;
        self.even_coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.numerator(x) / self.spec.denominator(x)
    }
}

/// Fits `f D` by an even polynomial at `sample_count` points whose squares
/// are Chebyshev points of `[a^2, 1]`, then checks `R` against `f` on a
/// disjoint grid.
pub fn extract_rational(result: &SolveResult, sample_count: usize) -> Result<RationalForm, ExtremalError> {
    let spec = result.spec().clone();
    let nb = spec.basis_size();
    if sample_count < nb {
        return Err(ExtremalError::GridTooSmall { given: sample_count, required: nb });
    }
    let a2 = spec.a * spec.a;
    let scale = 2.0 / (1.0 - a2);
    let shift = -(1.0 + a2) / (1.0 - a2);
    let s: Vec<f64> = (0..sample_count)
        .map(|i| {
            let xi = -(PI * (i as f64 + 0.5) / sample_count as f64).cos();
            (xi - shift) / scale
        })
        .collect();
    let mut design = DMatrix::zeros(sample_count, nb);
    let mut rhs = DVector::zeros(sample_count);
    for (i, &si) in s.iter().enumerate() {
        let t = si.sqrt();
        rhs[i] = eval_extremal(t, result)? * spec.denominator(t);
        let xi = scale * si + shift;
        let (mut tp, mut tc) = (1.0, xi);
        for j in 0..nb {
            design[(i, j)] = match j {
                0 => 1.0,
                1 => xi,
                _ => {
                    let tn = 2.0 * xi * tc - tp;
                    tp = tc;
                    tc = tn;
                    tn
                }
            };
        }
    }
    let svd = design.svd(true, true);
    let sv = &svd.singular_values;
    let condition = sv.max() / sv.min();
    if !condition.is_finite() || condition > 1e12 {
        return Err(ExtremalError::IllConditioned { condition });
    }
    let d = svd.solve(&rhs, 0.0).expect("SVD with both factors");
    let form = RationalForm { even_coeffs: to_monomial(d.as_slice(), scale, shift), spec };

    let verify = 4 * sample_count.max(250);
    let mut residual: f64 = 0.0;
    for i in 0..verify {
        let x = spec_point(result.spec().a, (i as f64 + 0.5) / verify as f64);
        residual = residual.max((form.eval(x) - eval_extremal(x, result)?).abs());
    }
    if residual >= 1e-6 {
        return Err(ExtremalError::ResidualTooLarge { residual });
    }
    Ok(form)
}

fn spec_point(a: f64, t: f64) -> f64 {
    a + (1.0 - a) * t
}

/// The point `i y*` where `phi = u_c + i B0*` and `f` vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationPoint {
    pub y: f64,
    pub alpha: f64,
    pub phi: Complex64,
    pub f: Complex64,
}

/// Solves `R(alpha) = 1/2` on the arc (where `Re phi = u_c`) and maps back
/// to the imaginary axis.
pub fn imaginary_axis_zero(result: &SolveResult) -> Result<DeviationPoint, ExtremalError> {
    let (lo, hi) = result.angles().arc();
    let density = result.density();
    let alpha = bisect(|t| density.cumulative(t) - 0.5, lo, hi, 1e-15).ok_or(ExtremalError::RootNotBracketed)?;
    let y = result.map().imaginary_of_angle(alpha);
    let u = boundary_u(alpha, result.measure(), result.scale())?;
    let v = circle_v(alpha, result.measure(), result.scale())?;
    let phi = Complex64::new(u, v);
    let l = error_from_b0(result.b0_star());
    let f = 1.0 - result.spec().sign() * l * phi.cos();
    Ok(DeviationPoint { y, alpha, phi, f })
}

/// Growth rates of `v` toward the ends of the arc, measured against
/// `log(1/|z|)` near `alpha_0` (`z -> 0`) and `log |z|` near `alpha_{p+1}`
/// (`z -> infinity`) between angular distances `d1 > d2`. They tend to
/// `2 k0 - 1` and `2 m - 1`.
pub fn pole_order_slopes(result: &SolveResult, d1: f64, d2: f64) -> Result<(f64, f64), ExtremalError> {
    let (lo, hi) = result.angles().arc();
    let map = result.map();
    let v = |a: f64| circle_v(a, result.measure(), result.scale());
    let y = |a: f64| map.imaginary_of_angle(a).ln();
    let (a1, a2) = (hi - d1, hi - d2);
    let origin = (v(a2)? - v(a1)?) / (y(a1) - y(a2));
    let (b1, b2) = (lo + d1, lo + d2);
    let infinity = (v(b2)? - v(b1)?) / (y(b2) - y(b1));
    Ok((origin, infinity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve;
    use approx::assert_abs_diff_eq;
    use std::sync::OnceLock;

    fn golden() -> &'static SolveResult {
        static R: OnceLock<SolveResult> = OnceLock::new();
        R.get_or_init(|| solve(&ProblemSpec::origin_only(0.25, 1, 1), &[8, 16, 32, 64], 1e-6).unwrap())
    }

    #[test]
    fn error_formula() {
        assert_eq!(error_from_b0(0.0), 1.0);
        assert_abs_diff_eq!(error_from_b0(9f64.acosh()), 1.0 / 9.0, epsilon = 1e-15);
        assert!(error_from_b0(2.0) < error_from_b0(1.0));
        assert_abs_diff_eq!(best_error(golden()).unwrap(), 1.0 / 9.0, epsilon = 1e-9);
    }

    #[test]
    fn phi_endpoints() {
        let r = golden();
        assert_abs_diff_eq!(eval_phi(EvalPoint::Real(0.25), r).unwrap().re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_phi(EvalPoint::Real(1.0), r).unwrap().re, 2.0 * PI, epsilon = 1e-13);
        assert_abs_diff_eq!(eval_phi(EvalPoint::Real(0.5), r).unwrap().re, PI, epsilon = 1e-8);
        assert!(matches!(eval_phi(EvalPoint::Real(0.1), r), Err(ExtremalError::OutsideSupportedRegion { .. })));
        assert!(matches!(eval_phi(EvalPoint::Real(1.5), r), Err(ExtremalError::OutsideSupportedRegion { .. })));
    }

    #[test]
    fn golden_extremal_matches_closed_form() {
        let r = golden();
        for x in [0.25, 0.3, 0.5, 0.77, 1.0] {
            assert_abs_diff_eq!(eval_extremal(x, r).unwrap(), 2.0 / 9.0 / x + 8.0 / 9.0 * x, epsilon = 1e-8);
        }
        let fi = eval_extremal_at(EvalPoint::Imaginary(0.7), r).unwrap();
        let exact = Complex64::new(2.0 / 9.0, 0.0) / Complex64::new(0.0, 0.7) + Complex64::new(0.0, 8.0 / 9.0 * 0.7);
        assert!((fi - exact).norm() < 1e-8);
    }

    #[test]
    fn golden_alternation() {
        let r = golden();
        let rep = alternation_scan(r, 1000).unwrap();
        assert_eq!(rep.count, 3);
        for (p, e) in rep.points.iter().zip([0.25, 0.5, 1.0]) {
            assert_abs_diff_eq!(*p, e, epsilon = 1e-5);
        }
        for (v, e) in rep.values.iter().zip([10.0 / 9.0, 8.0 / 9.0, 10.0 / 9.0]) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-8);
        }
        assert!(matches!(alternation_scan(r, 10), Err(ExtremalError::GridTooSmall { .. })));
    }

    #[test]
    fn count_formula() {
        assert_eq!(expected_alternation_count(&ProblemSpec::origin_only(0.3, 2, 1)), 4);
    }

    #[test]
    fn golden_extraction() {
        let r = golden();
        let form = extract_rational(r, 8).unwrap();
        assert_abs_diff_eq!(form.even_coeffs[0], 2.0 / 9.0, epsilon = 1e-8);
        assert_abs_diff_eq!(form.even_coeffs[1], 8.0 / 9.0, epsilon = 1e-8);
        for x in [0.1, 0.4, 0.9, 3.0] {
            assert_eq!(form.eval(-x), -form.eval(x));
        }
    }

    #[test]
    fn golden_deviation_point() {
        let r = golden();
        let d = imaginary_axis_zero(r).unwrap();
        assert_abs_diff_eq!(d.y, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(d.phi.re, PI, epsilon = 1e-12);
        assert_abs_diff_eq!(d.phi.im, r.b0_star(), epsilon = 1e-8);
        assert!(d.f.norm() < 1e-8);
    }

    #[test]
    fn golden_pole_orders() {
        let (o, i) = pole_order_slopes(golden(), 1e-3, 1e-5).unwrap();
        assert!((o - 1.0).abs() < 0.05, "{o}");
        assert!((i - 1.0).abs() < 0.05, "{i}");
    }
}
