use std::f64::consts::FRAC_PI_2;

use combmap::exec::Execution;
use combmap::extremal::{alternation_scan, best_error, extract_rational, ExtremalError};
use combmap::geometry::{compute_angles, ProblemSpec};
use combmap::herglotz::{density_from_h, eval_f, HerglotzMeasure, Interior, MapScale, PointMass};
use combmap::oracle::{compare, remez_solve, remez_with, ChebyshevSystem, RemezOptions};
use combmap::solver::slit::{residuals, Discretization};
use combmap::solver::{solve, solve_level, solve_with, SolveOptions, SolveResult};
use num_complex::Complex64;

fn inner_pole() -> ProblemSpec {
    ProblemSpec { a: 0.6, inner_poles: vec![0.3], outer_poles: vec![], k0: 1, k: vec![1], m: 1 }
}

fn outer_pole() -> ProblemSpec {
    ProblemSpec { a: 0.4, inner_poles: vec![], outer_poles: vec![1.5], k0: 1, k: vec![2], m: 1 }
}

#[test]
fn outer_pole_matches_oracle() {
    let spec = outer_pole();
    let oracle = remez_solve(&spec, 1e-12, 100).unwrap();
    let r = solve(&spec, &[8, 16, 32, 64, 128], 1e-6).unwrap();
    let c = compare(&r, &oracle);
    assert!(c.relative_difference < 1e-6, "{c:?}");
    assert!(c.coefficient_deviation.unwrap() < 1e-6);
    let rep = alternation_scan(&r, 4000).unwrap();
    assert_eq!(rep.count, 5);
    let heights = r.ray_heights().unwrap();
    assert_eq!(heights.len(), 1);
    assert!(heights[0] > r.b0_star());
}

#[test]
fn expansion_near_an_inner_pole_is_logarithmic() {
    let spec = inner_pole();
    let r = solve(&spec, &[8, 16, 32], 1e-5).unwrap();
    let (m, s) = (r.measure(), r.scale());
    let aq = r.angles().pole(1);
    let lq = m.atoms()[1].weight;
    let e = Complex64::from_polar(1.0, aq);
    let rest = |d: f64| {
        let z = e * (1.0 - d);
        let f = eval_f(z, m, s).unwrap();
        f - s.c1 * lq / (Complex64::i() * aq.sin()) * (1.0 - z * e.conj()).ln()
    };
    let samples: Vec<Complex64> = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6].iter().map(|&d| rest(d)).collect();
    let steps: Vec<f64> = samples.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    assert!(steps.windows(2).all(|s| s[1] < s[0] / 5.0), "{samples:?}");
    assert!(steps[3] < 1e-4);
}

#[test]
fn jump_density_approaches_step_density() {
    let spec = ProblemSpec::origin_only(0.3, 1, 1);
    let angles = compute_angles(&spec).unwrap();
    let err = |n: usize| {
        let d = Discretization::uniform(&spec, &angles, n, 1.0);
        let m = d.measure(&spec, &angles).unwrap();
        let s = d.scale(&spec, &angles);
        let width = (FRAC_PI_2 - angles.alpha_inf()) / (n + 1) as f64;
        let k = n / 2;
        let step = d.mu[k] / width;
        (density_from_h(d.beta[k] + 1e-9, &m, &s).unwrap() - step).abs() / step
    };
    let (e1, e2) = (err(20), err(80));
    assert!(e2 < e1 && e2 < 0.1, "{e1} {e2}");
}

#[test]
fn smooth_density_is_nonnegative() {
    let r = solve(&inner_pole(), &[8, 16, 32], 1e-5).unwrap();
    let (lo, hi) = r.angles().arc();
    for i in 1..200 {
        let phi = lo + (hi - lo) * i as f64 / 200.0;
        assert!(density_from_h(phi, r.measure(), r.scale()).unwrap() >= 0.0);
    }
}

#[test]
fn slit_discretization_of_the_solution_approaches_the_curve() {
    let spec = ProblemSpec::origin_only(0.25, 1, 1);
    let angles = compute_angles(&spec).unwrap();
    let r = solve(&spec, &[8, 16, 32], 1e-6).unwrap();
    let worst = |n: usize| {
        let d = Discretization::from_density(&spec, &angles, r.density(), n, r.b0_star());
        let res = residuals(&d, &angles, &spec).unwrap();
        assert!(res.width.abs() < 1e-14 && res.mass.abs() < 1e-14);
        // tips next to the walls carry O(1) discretization error
        res.curve[n / 4..3 * n / 4].iter().fold(0.0f64, |m, x| m.max(x.abs()))
    };
    // jump measures converge at first order once cells resolve the density
    let (coarse, fine) = (worst(160), worst(640));
    assert!(fine < coarse / 3.0, "{coarse} {fine}");
}

#[test]
fn oracle_error_decreases_with_m() {
    let es: Vec<f64> = (1..=3).map(|m| remez_solve(&ProblemSpec::origin_only(0.4, 1, m), 1e-12, 100).unwrap().e).collect();
    assert!(es[1] <= es[0] && es[2] <= es[1], "{es:?}");
}

#[test]
fn oracle_grid_refinement_is_stable() {
    let sys = ChebyshevSystem::new(&inner_pole()).unwrap();
    let run = |grid| remez_with(&sys, |_| 1.0, &RemezOptions { grid, ..RemezOptions::default() }).unwrap().e;
    let (base, fine) = (run(10_000), run(40_000));
    assert!((base - fine).abs() < 1e-8 * base);
}

#[test]
fn cauchy_differences_decrease() {
    let r = solve(&inner_pole(), &[4, 8, 16, 32, 64, 128], 1e-5).unwrap();
    let d: Vec<f64> = r.history().iter().filter_map(|h| h.b0_change).collect();
    assert!(d.len() >= 2);
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
}

#[test]
fn sequential_and_parallel_solves_agree() {
    let spec = inner_pole();
    let run = |execution| {
        let opts = SolveOptions { schedule: vec![8, 16, 32], execution, ..SolveOptions::default() };
        solve_with(&spec, &opts).unwrap()
    };
    let (a, b) = (run(Execution::Sequential), run(Execution::Parallel));
    assert_eq!(a.b0_star(), b.b0_star());
    assert_eq!(a.level().q, b.level().q);
}

#[test]
fn unconverged_result_is_flagged() {
    let spec = inner_pole();
    let opts = SolveOptions { schedule: vec![4], ..SolveOptions::default() };
    let r: SolveResult = solve_with(&spec, &opts).unwrap();
    assert!(!r.converged());
    assert!(matches!(best_error(&r), Err(ExtremalError::NotConverged { .. })));
    let c = compare(&r, &remez_solve(&spec, 1e-12, 100).unwrap());
    assert!(!c.passes(1e-3));
    assert!(c.relative_difference > 1e-6);
}

#[test]
fn level_solution_tips_lie_on_the_curve() {
    let sol = solve_level(&inner_pole(), 32, None, &SolveOptions::default()).unwrap();
    let uc = inner_pole().center();
    for t in &sol.tips {
        assert!((t.w.re - uc).abs() < FRAC_PI_2);
        assert!(t.w.im >= sol.b0 - 1e-9);
        assert!(t.residual.abs() < 1e-8);
    }
}

#[test]
fn extraction_needs_enough_samples() {
    let r = solve(&ProblemSpec::origin_only(0.5, 1, 2), &[8, 16, 32], 1e-5).unwrap();
    assert!(matches!(extract_rational(&r, 2), Err(ExtremalError::GridTooSmall { .. })));
    let form = extract_rational(&r, 3).unwrap();
    assert_eq!(form.even_coeffs.len(), 3);
}

#[test]
fn empty_interior_has_no_density() {
    let spec = ProblemSpec::origin_only(0.3, 2, 1);
    let angles = compute_angles(&spec).unwrap();
    let m = HerglotzMeasure::with_chain(&spec, &angles, 0.3, Interior::Jumps(vec![])).unwrap();
    let s = MapScale::new(&spec, &angles, 0.3);
    let phi = 0.5 * (angles.alpha_inf() + FRAC_PI_2);
    assert_eq!(density_from_h(phi, &m, &s).unwrap(), 0.0);
    let bad = HerglotzMeasure::new(vec![PointMass { angle: 1.0, weight: -1.0 }], angles.arc(), Interior::Empty);
    assert!(bad.is_err());
}

#[test]
fn small_error_config_matches_oracle() {
    let spec = ProblemSpec { m: 3, ..inner_pole() };
    let oracle = remez_solve(&spec, 1e-12, 100).unwrap();
    assert!(oracle.e < 1e-4);
    let r = solve(&spec, &[8, 16, 32, 64], 1e-6).unwrap();
    let c = compare(&r, &oracle);
    assert!(c.relative_difference < 1e-6, "{c:?}");
}
