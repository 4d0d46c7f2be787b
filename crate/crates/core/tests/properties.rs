use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use combmap::exec::{map_indexed, Execution};
use combmap::extremal::{error_from_b0, eval_extremal};
use combmap::geometry::{compute_angles, curve_height, MapValue, Preimage, PreliminaryMap, ProblemSpec};
use combmap::herglotz::{
    boundary_u, boundary_v, eval_f, eval_f_closed, eval_h, ktilde, lambda1_interval, lambda_chain, HerglotzMeasure, Interior,
    MapScale,
};
use combmap::solver::slit::{tip_positions, Discretization};
use combmap::solver::{solve, SolveResult};
use num_complex::Complex64;
use proptest::prelude::*;

fn valid_spec() -> impl Strategy<Value = ProblemSpec> {
    (0.05f64..0.9, 0usize..3, 0usize..3, 1u32..4, 1u32..4)
        .prop_flat_map(|(a, q, r, k0, m)| {
            (
                Just(a),
                proptest::collection::vec(0.02f64..0.98, q),
                proptest::collection::vec(1.05f64..8.0, r),
                Just(k0),
                proptest::collection::vec(1u32..4, q + r),
                Just(m),
            )
        })
        .prop_filter_map("distinct poles", |(a, mut inner, mut outer, k0, k, m)| {
            inner.iter_mut().for_each(|x| *x *= a);
            inner.sort_by(f64::total_cmp);
            outer.sort_by(f64::total_cmp);
            let sep = |v: &[f64]| v.windows(2).all(|w| w[1] - w[0] > 1e-3);
            (sep(&inner) && sep(&outer)).then_some(ProblemSpec { a, inner_poles: inner, outer_poles: outer, k0, k, m })
        })
}

/// A valid spec with random positive interior jumps normalized by mass and width.
fn jump_measure(spec: &ProblemSpec, weights: &[f64]) -> (HerglotzMeasure, MapScale) {
    let angles = compute_angles(spec).unwrap();
    let total: f64 = weights.iter().sum();
    let t: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let d = Discretization::from_contributions(spec, &angles, &t, 1.0);
    (d.measure(spec, &angles).unwrap(), d.scale(spec, &angles))
}

fn golden_result() -> &'static SolveResult {
    static R: OnceLock<SolveResult> = OnceLock::new();
    R.get_or_init(|| solve(&ProblemSpec::origin_only(0.25, 1, 1), &[8, 16, 32], 1e-5).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn preliminary_map_round_trip(a in 0.05f64..0.95, u in 0.0f64..1.0, region in 0usize..3) {
        let x = match region {
            0 => a + (1.0 - a) * u,
            1 => a * (0.001 + 0.998 * u),
            _ => 1.0 + 9.0 * u.max(1e-3),
        };
        let map = PreliminaryMap::new(a);
        let back = match map.inverse_positive(x).unwrap() {
            Preimage::Diameter(z) => map.forward_diameter(z),
            Preimage::Circle(t) => match map.forward_circle(t) {
                MapValue::Finite(w) => { prop_assert!(w.im == 0.0); w.re }
                MapValue::Infinity => f64::INFINITY,
            },
        };
        prop_assert!((back - x).abs() < 1e-12 * x.max(1.0), "{x} -> {back}");
    }

    #[test]
    fn angle_ordering(spec in valid_spec()) {
        let al = compute_angles(&spec).unwrap().alpha;
        let (q, p) = (spec.inner_poles.len(), spec.inner_poles.len() + spec.outer_poles.len());
        prop_assert_eq!(al[0], FRAC_PI_2);
        // 0 < alpha_{q+1} < ... < alpha_p < alpha_{p+1} < alpha_0 < alpha_1 < ... < alpha_q < pi
        let mut ordered: Vec<f64> = al[q + 1..=p + 1].to_vec();
        ordered.push(al[0]);
        ordered.extend_from_slice(&al[1..=q]);
        prop_assert!(ordered[0] > 0.0 && *ordered.last().unwrap() < PI);
        prop_assert!(ordered.windows(2).all(|w| w[0] < w[1]), "{:?}", ordered);
    }

    #[test]
    fn curve_height_shape(b0 in 0.01f64..10.0, d1 in 0.0f64..1.5, d2 in 0.0f64..1.5, uc in -5.0f64..5.0) {
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let v_lo = curve_height(uc + lo, b0, uc).unwrap();
        prop_assert!((v_lo - curve_height(uc - lo, b0, uc).unwrap()).abs() < 1e-12 * v_lo);
        prop_assert!(v_lo >= b0);
        if lo > 1e-6 {
            prop_assert!(v_lo > b0);
        }
        if hi - lo > 1e-6 {
            prop_assert!(curve_height(uc + hi, b0, uc).unwrap() > v_lo);
        }
    }

    #[test]
    fn chain_is_linear_in_c(spec in valid_spec(), c in 0.01f64..5.0) {
        let angles = compute_angles(&spec).unwrap();
        let one = lambda_chain(&angles, &spec, c);
        let two = lambda_chain(&angles, &spec, 2.0 * c);
        for ((a, b), (k, al)) in one.iter().zip(&two).zip(ktilde(&spec).iter().zip(&angles.alpha)) {
            prop_assert!((2.0 * a - b).abs() <= 4.0 * f64::EPSILON * b.abs());
            prop_assert!((a / c - k * al.sin()).abs() < 1e-14 * (1.0 + a / c));
        }
    }

    #[test]
    fn lambda_one_interval_holds(spec in valid_spec(), w in proptest::collection::vec(0.01f64..1.0, 1..40)) {
        prop_assume!(!spec.inner_poles.is_empty());
        let angles = compute_angles(&spec).unwrap();
        let (lo, hi) = lambda1_interval(&angles, &spec).unwrap();
        let (m, _) = jump_measure(&spec, &w);
        let l1 = m.atoms()[1].weight;
        prop_assert!(lo < l1 && l1 < hi, "{lo} < {l1} < {hi}");
        let a = combmap::herglotz::coupling_a(&angles, &spec).unwrap();
        prop_assert!(a > 1.0);
    }

    #[test]
    fn herglotz_positivity(spec in valid_spec(), w in proptest::collection::vec(0.01f64..1.0, 1..30), r in 0.0f64..0.999, t in 0.0f64..PI) {
        let (m, _) = jump_measure(&spec, &w);
        prop_assert!((m.total_mass() - 1.0).abs() < 1e-12);
        let h0 = eval_h(Complex64::new(0.0, 0.0), &m).unwrap();
        prop_assert!((h0.re - 1.0).abs() < 1e-12 && h0.im.abs() < 1e-15);
        let z = Complex64::from_polar(r, t);
        if let Ok(h) = eval_h(z, &m) {
            prop_assert!(h.re >= -1e-12);
        }
        let hx = eval_h(Complex64::new(r * t.cos(), 0.0), &m).unwrap();
        prop_assert!(hx.im.abs() < 1e-12 * (1.0 + hx.re.abs()));
    }

    #[test]
    fn f_routes_agree(w in proptest::collection::vec(0.05f64..1.0, 1..12), r in 0.0f64..0.95, t in 0.0f64..PI) {
        let spec = ProblemSpec { a: 0.6, inner_poles: vec![0.3], outer_poles: vec![2.0], k0: 1, k: vec![1, 1], m: 1 };
        let (m, s) = jump_measure(&spec, &w);
        let z = Complex64::from_polar(r, t);
        let quad = eval_f(z, &m, &s).unwrap();
        let closed = eval_f_closed(z, &m, &s).unwrap();
        prop_assert!((quad - closed).norm() < 1e-9 * (1.0 + closed.norm()), "{quad} vs {closed}");
        let conj = eval_f(z.conj(), &m, &s).unwrap();
        prop_assert!((conj - quad.conj()).norm() < 1e-9 * (1.0 + quad.norm()));
        prop_assert!(eval_f(Complex64::new(-1.0, 0.0), &m, &s).unwrap().norm() < 1e-14);
        let at_one = eval_f_closed(Complex64::new(1.0, 0.0), &m, &s).unwrap();
        prop_assert!((at_one.re - spec.width()).abs() < 1e-12 && at_one.im.abs() < 1e-12);
    }

    #[test]
    fn boundary_u_drops_by_pi(spec in valid_spec(), w in proptest::collection::vec(0.01f64..1.0, 1..20), samples in proptest::collection::vec(0.0f64..1.0, 2..10)) {
        let (m, s) = jump_measure(&spec, &w);
        let (lo, hi) = m.arc();
        let eps = 1e-9;
        let top = boundary_u(lo + eps, &m, &s).unwrap();
        let bottom = boundary_u(hi - eps, &m, &s).unwrap();
        prop_assert!((top - bottom - PI).abs() < 1e-10);
        prop_assert!((bottom - (spec.center() - FRAC_PI_2)).abs() < 1e-10);
        let mut xs: Vec<f64> = samples.iter().map(|u| lo + eps + (hi - lo - 2.0 * eps) * u).collect();
        xs.sort_by(f64::total_cmp);
        let us: Vec<f64> = xs.iter().filter_map(|&x| boundary_u(x, &m, &s).ok()).collect();
        prop_assert!(us.windows(2).all(|p| p[0] >= p[1]));
        for &x in &xs {
            if let Ok(v) = boundary_v(x, &m, &s) {
                prop_assert!(v > 0.0);
            }
        }
    }

    #[test]
    fn slit_tips_follow_contributions(w in proptest::collection::vec(0.05f64..1.0, 2..25)) {
        let spec = ProblemSpec::origin_only(0.3, 1, 2);
        let angles = compute_angles(&spec).unwrap();
        let total: f64 = w.iter().sum();
        let t: Vec<f64> = w.iter().map(|x| x / total).collect();
        let d = Discretization::from_contributions(&spec, &angles, &t, 1.0);
        let tips = tip_positions(&d, &angles, &spec).unwrap();
        let top = spec.center() + FRAC_PI_2;
        let mut acc = 0.0;
        for ((tip, phi), ((lo, hi), tk)) in tips.tips.iter().zip(&tips.argmins).zip(d.cells(&angles).into_iter().zip(&t)) {
            acc += tk;
            prop_assert!((tip.re - (top - PI * acc)).abs() < 1e-12);
            prop_assert!(lo < *phi && *phi < hi);
        }
        prop_assert!((tips.tips.last().unwrap().re - (spec.center() - FRAC_PI_2)).abs() < 1e-12);
    }

    #[test]
    fn execution_modes_agree(n in 0usize..500) {
        let f = |i: usize| (i as f64).sqrt().sin();
        prop_assert_eq!(map_indexed(Execution::Sequential, n, f), map_indexed(Execution::Parallel, n, f));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extremal_stays_in_band(u in 0.0f64..=1.0) {
        let r = golden_result();
        let x = 0.25 + 0.75 * u;
        let l = error_from_b0(r.b0_star());
        let f = eval_extremal(x, r).unwrap();
        prop_assert!(f >= 1.0 - l - 1e-12 && f <= 1.0 + l + 1e-12);
    }
}

#[test]
fn herglotz_vanishes_at_plus_minus_one() {
    let spec = ProblemSpec { a: 0.6, inner_poles: vec![0.3], outer_poles: vec![], k0: 1, k: vec![1], m: 1 };
    let (m, _) = jump_measure(&spec, &[1.0, 2.0, 1.5]);
    for z in [1.0, -1.0] {
        assert!(eval_h(Complex64::new(z, 0.0), &m).unwrap().norm() < 1e-10);
    }
    let near = eval_h(Complex64::new(1.0 - 1e-9, 0.0), &m).unwrap();
    assert!(near.norm() < 1e-7);
}

#[test]
fn zero_interior_has_zero_density() {
    let spec = ProblemSpec::origin_only(0.4, 1, 1);
    let angles = compute_angles(&spec).unwrap();
    let m = HerglotzMeasure::with_chain(&spec, &angles, 0.5, Interior::Empty).unwrap();
    let s = MapScale::new(&spec, &angles, 0.5);
    let mid = 0.5 * (angles.alpha_inf() + FRAC_PI_2);
    assert_eq!(combmap::herglotz::density_from_h(mid, &m, &s).unwrap(), 0.0);
}
