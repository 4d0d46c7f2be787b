//! Linear Remez exchange for the best uniform approximation of 1 on `[a, 1]`
//! by `psi_i(x) = x^{2i} / D(x)`, `i = 0..N-1`.
//!
//! Oddness of `sgn` and of the family make the best approximant on
//! `[-1,-a] ∪ [a,1]` odd, so the two-interval problem reduces to this one.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::chebyshev::to_monomial;
use crate::exec::{map_indexed, Execution};
use crate::extremal::extract_rational;
use crate::geometry::{GeometryError, ProblemSpec};
use crate::scalar::golden_min;
use crate::solver::SolveResult;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    InvalidProblem(#[from] GeometryError),
    #[error("reference system is singular (condition {condition:e})")]
    SingularReferenceSystem { condition: f64 },
    #[error("no convergence after {iterations} exchanges (relative gap {gap:e})")]
    MaxIterExceeded { iterations: usize, gap: f64 },
    #[error("error curve has {found} alternations, fewer than {required}")]
    ExchangeFailed { found: usize, required: usize },
}

/// `{T_i(xi(x^2)) / D(x)}` on `[a, 1]`; spans the same space as
/// `{x^{2i} / D(x)}` with better conditioning. `xi` maps `[a^2, 1]` to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevSystem {
    pub spec: ProblemSpec,
    scale: f64,
    shift: f64,
}

impl ChebyshevSystem {
    pub fn new(spec: &ProblemSpec) -> Result<Self, OracleError> {
        spec.validate()?;
        let a2 = spec.a * spec.a;
        Ok(ChebyshevSystem { spec: spec.clone(), scale: 2.0 / (1.0 - a2), shift: -(1.0 + a2) / (1.0 - a2) })
    }

    /// `N = m + sum k_j`.
    pub fn size(&self) -> usize {
        self.spec.basis_size()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.spec.a, 1.0)
    }

    /// All basis values at `x`.
    pub fn basis(&self, x: f64) -> Vec<f64> {
        let n = self.size();
        let xi = self.scale * x * x + self.shift;
        let d = self.spec.denominator(x);
        let mut out = Vec::with_capacity(n);
        let (mut tp, mut tc) = (1.0, xi);
        for j in 0..n {
            let t = match j {
                0 => 1.0,
                1 => xi,
                _ => {
                    let tn = 2.0 * xi * tc - tp;
                    tp = tc;
                    tc = tn;
                    tn
                }
            };
            out.push(t / d);
        }
        out
    }

    /// `sum c_i T_i(xi(x^2)) / D(x)`.
    pub fn eval(&self, coeffs: &[f64], x: f64) -> f64 {
        self.basis(x).iter().zip(coeffs).map(|(b, c)| b * c).sum()
    }

    /// Chebyshev coefficients to the monomial coefficients `c_0, c_2, ...`.
    pub fn monomial(&self, coeffs: &[f64]) -> Vec<f64> {
        to_monomial(coeffs, self.scale, self.shift)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemezOptions {
    /// Stop when `(max|e| - |E|) / |E|` falls below this, or when
    /// `max|e| - |E|` is below the rounding level of the error evaluation.
    pub tol: f64,
    pub max_iter: usize,
    /// Chebyshev points of `[a, 1]` searched for extrema.
    pub grid: usize,
    pub execution: Execution,
}

impl Default for RemezOptions {
    fn default() -> Self {
        RemezOptions { tol: 1e-12, max_iter: 100, grid: 10_000, execution: Execution::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemezSolution {
    /// `c_0, c_2, ..., c_n` of the numerator `sum c_{2i} x^{2i}`.
    pub coefficients: Vec<f64>,
    /// Coefficients in the Chebyshev basis of [`ChebyshevSystem`].
    pub chebyshev_coefficients: Vec<f64>,
    /// Levelled error on the final reference, `|E|`.
    pub e: f64,
    pub reference: Vec<f64>,
    /// Signed errors at the reference.
    pub reference_errors: Vec<f64>,
    /// `max |target - approximant|` on the refined grid.
    pub max_error: f64,
    pub iterations: usize,
    /// 2-norm condition number of the last alternation system.
    pub condition: f64,
}

/// Best approximation of the constant 1 on `[a, 1]`.
pub fn remez_solve(spec: &ProblemSpec, tol: f64, max_iter: usize) -> Result<RemezSolution, OracleError> {
    let opts = RemezOptions { tol, max_iter, ..RemezOptions::default() };
    remez_with(&ChebyshevSystem::new(spec)?, |_| 1.0, &opts)
}

fn chebyshev_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let mut g: Vec<f64> = (0..n).map(|i| mid - half * (PI * i as f64 / (n - 1) as f64).cos()).collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

/// Solves `sum c_i psi_i(x_k) + (-1)^k E = target(x_k)` on the reference.
fn levelled_solve<F: Fn(f64) -> f64>(
    sys: &ChebyshevSystem,
    target: &F,
    reference: &[f64],
) -> Result<(Vec<f64>, f64, f64), OracleError> {
    let n = sys.size();
    let mut a = DMatrix::zeros(n + 1, n + 1);
    let mut b = DVector::zeros(n + 1);
    for (k, &x) in reference.iter().enumerate() {
        for (j, v) in sys.basis(x).into_iter().enumerate() {
            a[(k, j)] = v;
        }
        a[(k, n)] = if k % 2 == 0 { 1.0 } else { -1.0 };
        b[k] = target(x);
    }
    let sv = a.singular_values();
    let condition = sv.max() / sv.min();
    if !condition.is_finite() || condition > 1e14 {
        return Err(OracleError::SingularReferenceSystem { condition });
    }
    let sol = a.full_piv_lu().solve(&b).ok_or(OracleError::SingularReferenceSystem { condition })?;
    Ok((sol.as_slice()[..n].to_vec(), sol[n], condition))
}

/// Local extrema of `e` (endpoints included), refined, with runs of equal
/// sign collapsed to their largest member.
fn alternating_extrema<E: Fn(f64) -> f64>(grid: &[f64], values: &[f64], err: &E) -> Vec<(f64, f64)> {
    let n = grid.len();
    let mut cand = vec![(grid[0], values[0])];
    for i in 1..n - 1 {
        let (l, c, r) = (values[i - 1].abs(), values[i].abs(), values[i + 1].abs());
        if !(c >= l && c > r) && !(values[i].signum() != values[i + 1].signum() && c > l) {
            continue;
        }
        let s = values[i].signum();
        let (x, fx) = golden_min(|t| -s * err(t), grid[i - 1], grid[i + 1], 1e-13);
        cand.push(if -fx > s * values[i] { (x, -s * fx) } else { (grid[i], values[i]) });
    }
    cand.push((grid[n - 1], values[n - 1]));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (x, e) in cand {
        match out.last_mut() {
            Some(last) if last.1.signum() == e.signum() || e == 0.0 => {
                if e.abs() > last.1.abs() {
                    *last = (x, e);
                }
            }
            _ => out.push((x, e)),
        }
    }
    out
}

/// Remez exchange for an arbitrary continuous target.
pub fn remez_with<F: Fn(f64) -> f64 + Sync>(
    sys: &ChebyshevSystem,
    target: F,
    opts: &RemezOptions,
) -> Result<RemezSolution, OracleError> {
    let n = sys.size();
    let (lo, hi) = sys.interval();
    let grid = chebyshev_points(lo, hi, opts.grid.max(4 * (n + 1)));
    let mut reference = chebyshev_points(lo, hi, n + 1);
    let mut gap = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let (coeffs, e, condition) = levelled_solve(sys, &target, &reference)?;
        let err = |x: f64| target(x) - sys.eval(&coeffs, x);
        let values = map_indexed(opts.execution, grid.len(), |i| err(grid[i]));
        let extrema = alternating_extrema(&grid, &values, &err);
        let max_error = extrema.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        let done = if e.abs() <= 1e-14 {
            max_error <= 1e-13
        } else {
            gap = (max_error - e.abs()) / e.abs();
            let noise = reference
                .iter()
                .map(|&x| target(x).abs() + sys.basis(x).iter().zip(&coeffs).map(|(p, c)| (p * c).abs()).sum::<f64>())
                .fold(0.0, f64::max)
                * 16.0
                * f64::EPSILON;
            gap < opts.tol || max_error - e.abs() < noise
        };
        if done {
            let reference_errors = reference.iter().map(|&x| err(x)).collect();
            return Ok(RemezSolution {
                coefficients: sys.monomial(&coeffs),
                chebyshev_coefficients: coeffs,
                e: e.abs(),
                reference,
                reference_errors,
                max_error,
                iterations: it,
                condition,
            });
        }
        if extrema.len() < n + 1 {
            return Err(OracleError::ExchangeFailed { found: extrema.len(), required: n + 1 });
        }
        let mut ext = extrema;
        while ext.len() > n + 1 {
            if ext[0].1.abs() < ext[ext.len() - 1].1.abs() {
                ext.remove(0);
            } else {
                ext.pop();
            }
        }
        reference = ext.into_iter().map(|p| p.0).collect();
    }
    Err(OracleError::MaxIterExceeded { iterations: opts.max_iter, gap })
}

/// Conformal map against oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// `|1/cosh B0* - E| / E`.
    pub relative_difference: f64,
    /// Max deviation between extracted and oracle numerator coefficients,
    /// when extraction succeeds.
    pub coefficient_deviation: Option<f64>,
    /// Whether the solve passed its convergence test.
    pub converged: bool,
}

impl Comparison {
    pub fn passes(&self, threshold: f64) -> bool {
        self.converged && self.relative_difference < threshold
    }
}

pub fn compare(result: &SolveResult, sol: &RemezSolution) -> Comparison {
    let l = 1.0 / result.b0_star().cosh();
    let coefficient_deviation = extract_rational(result, 4 * sol.coefficients.len().max(4))
        .ok()
        .map(|form| form.even_coeffs.iter().zip(&sol.coefficients).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    Comparison { relative_difference: (l - sol.e).abs() / sol.e, coefficient_deviation, converged: result.converged() }
}

/// `|E_a - E_b| / E_b`.
pub fn compare_solutions(a: &RemezSolution, b: &RemezSolution) -> f64 {
    (a.e - b.e).abs() / b.e
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn golden_closed_form() {
        let s = remez_solve(&ProblemSpec::origin_only(0.25, 1, 1), 1e-12, 50).unwrap();
        assert_abs_diff_eq!(s.e, 1.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.coefficients[0], 2.0 / 9.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.coefficients[1], 8.0 / 9.0, epsilon = 1e-10);
        for (x, e) in s.reference.iter().zip([0.25, 0.5, 1.0]) {
            assert_abs_diff_eq!(*x, e, epsilon = 1e-6);
        }
    }

    #[test]
    fn origin_only_formula() {
        for a in [0.1, 0.49, 0.7] {
            let s = remez_solve(&ProblemSpec::origin_only(a, 1, 1), 1e-12, 50).unwrap();
            let r = a.sqrt();
            assert_abs_diff_eq!(s.e, ((1.0 - r) / (1.0 + r)).powi(2), epsilon = 1e-12);
        }
    }

    #[test]
    fn representable_target() {
        let sys = ChebyshevSystem::new(&ProblemSpec::origin_only(0.3, 1, 2)).unwrap();
        let s = remez_with(&sys, |x| 1.0 / x, &RemezOptions::default()).unwrap();
        assert!(s.e < 1e-13);
        assert_abs_diff_eq!(s.coefficients[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn equioscillation() {
        let spec = ProblemSpec { a: 0.6, inner_poles: vec![0.3], outer_poles: vec![], k0: 1, k: vec![1], m: 1 };
        let s = remez_solve(&spec, 1e-12, 50).unwrap();
        assert_eq!(s.reference.len(), spec.basis_size() + 1);
        for w in s.reference_errors.windows(2) {
            assert!(w[0] * w[1] < 0.0);
        }
        for r in &s.reference_errors {
            assert!((r.abs() - s.e).abs() < 1e-10 * (1.0 + s.e));
        }
    }

    #[test]
    fn self_compare_is_zero() {
        let spec = ProblemSpec::origin_only(0.5, 2, 1);
        let a = remez_solve(&spec, 1e-12, 50).unwrap();
        let b = remez_solve(&spec, 1e-12, 50).unwrap();
        assert_eq!(compare_solutions(&a, &b), 0.0);
    }

    #[test]
    fn invalid_spec() {
        let spec = ProblemSpec { a: 0.5, inner_poles: vec![0.7], outer_poles: vec![], k0: 1, k: vec![1], m: 1 };
        assert!(matches!(remez_solve(&spec, 1e-12, 50), Err(OracleError::InvalidProblem(_))));
    }
}
