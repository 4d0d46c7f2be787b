//! Uniform slit discretization of the interior measure.
//!
//! Level `n` places jumps `mu_k` at `beta_k = alpha_{p+1} + (alpha_0 -
//! alpha_{p+1}) k/(n+1)`. Between consecutive jumps `u` is constant and `v`
//! is convex, so the image of the cell `(beta_k, beta_{k+1})` is a vertical
//! slit whose tip `w_k` sits at the minimum of `v`. The last cell borders
//! `alpha_0` and lands on the left wall `u_c - pi/2` once the width
//! normalization holds, leaving `n - 1` tips to place on the curve.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::geometry::{AnglePreimages, ProblemSpec};
use crate::herglotz::{chain_sum, ArcDensity, HerglotzMeasure, Interior, MapScale, PointMass};
use crate::scalar::bisect;

use super::SolverError;

/// `beta_1..beta_n`.
pub fn uniform_partition(angles: &AnglePreimages, n: usize) -> Vec<f64> {
    let (lo, hi) = angles.arc();
    (1..=n).map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub n: usize,
    pub beta: Vec<f64>,
    pub mu: Vec<f64>,
    pub b0: f64,
    /// Chain scalar, `1/C1`.
    pub c: f64,
}

impl Discretization {
    /// Jumps with prescribed contributions `C1 mu_k / sin beta_k = t_k`,
    /// `sum t_k = 1`, and `c` fixed by the mass normalization.
    pub fn from_contributions(spec: &ProblemSpec, angles: &AnglePreimages, t: &[f64], b0: f64) -> Self {
        let n = t.len();
        let beta = uniform_partition(angles, n);
        let inner: f64 = beta.iter().zip(t).map(|(b, t)| t * b.sin()).sum();
        let c = 0.5 / (chain_sum(angles, spec) + inner);
        let mu = beta.iter().zip(t).map(|(b, t)| c * t * b.sin()).collect();
        Discretization { n, beta, mu, b0, c }
    }

    /// Equal contributions `1/n`.
    pub fn uniform(spec: &ProblemSpec, angles: &AnglePreimages, n: usize, b0: f64) -> Self {
        Self::from_contributions(spec, angles, &vec![1.0 / n as f64; n], b0)
    }

    /// Lumps a smooth density onto the partition: `beta_k` receives the
    /// probability between the midpoints of its neighbouring gaps.
    pub fn from_density(spec: &ProblemSpec, angles: &AnglePreimages, density: &ArcDensity, n: usize, b0: f64) -> Self {
        let beta = uniform_partition(angles, n);
        let (lo, hi) = angles.arc();
        let mut edges = vec![lo];
        edges.extend(beta.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        edges.push(hi);
        let r: Vec<f64> = edges
            .iter()
            .map(|&e| {
                if e <= lo {
                    0.0
                } else if e >= hi {
                    1.0
                } else {
                    density.cumulative(e)
                }
            })
            .collect();
        let t: Vec<f64> = r.windows(2).map(|w| w[1] - w[0]).collect();
        Self::from_contributions(spec, angles, &t, b0)
    }

    /// `C1 mu_k / sin beta_k`.
    pub fn contributions(&self) -> Vec<f64> {
        self.mu.iter().zip(&self.beta).map(|(m, b)| m / (self.c * b.sin())).collect()
    }

    /// Cells `(beta_k, beta_{k+1})`, `k = 1..n`, with `beta_{n+1} = alpha_0`.
    pub fn cells(&self, angles: &AnglePreimages) -> Vec<(f64, f64)> {
        let mut right: Vec<f64> = self.beta[1..].to_vec();
        right.push(angles.alpha0());
        self.beta.iter().copied().zip(right).collect()
    }

    /// Positive jumps with `C1 sum_{k<n} mu_k / sin beta_k < 1`.
    pub fn is_admissible(&self) -> bool {
        let t = self.contributions();
        self.mu.iter().all(|&m| m > 0.0 && m.is_finite())
            && self.c > 0.0
            && self.b0 > 0.0
            && t[..self.n.saturating_sub(1)].iter().sum::<f64>() < 1.0
    }

    pub fn measure(&self, spec: &ProblemSpec, angles: &AnglePreimages) -> Result<HerglotzMeasure, SolverError> {
        let jumps = self.beta.iter().zip(&self.mu).map(|(&angle, &weight)| PointMass { angle, weight }).collect();
        Ok(HerglotzMeasure::with_chain(spec, angles, self.c, Interior::Jumps(jumps))?)
    }

    pub fn scale(&self, spec: &ProblemSpec, angles: &AnglePreimages) -> MapScale {
        MapScale::new(spec, angles, self.c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TipSet {
    pub tips: Vec<Complex64>,
    /// Angle of the minimum of `v` in each cell.
    pub argmins: Vec<f64>,
}

fn v_prime(alpha: f64, masses: &[PointMass], c1: f64) -> f64 {
    let s: f64 = masses
        .iter()
        .map(|p| p.weight / p.angle.sin() * 0.5 * (1.0 / (0.5 * (alpha + p.angle)).tan() - 1.0 / (0.5 * (alpha - p.angle)).tan()))
        .sum();
    c1 * s
}

fn v_direct(alpha: f64, masses: &[PointMass], c1: f64) -> f64 {
    let s: f64 = masses
        .iter()
        .map(|p| p.weight / p.angle.sin() * ((0.5 * (alpha + p.angle)).sin() / (0.5 * (alpha - p.angle)).sin().abs()).ln())
        .sum();
    c1 * s
}

/// Slit tips of a level: `Re w_k = u_c + pi/2 - pi sum_{j<=k} C1 mu_j / sin beta_j`,
/// `Im w_k` the minimum of `v` over cell `k`.
pub fn tip_positions(disc: &Discretization, angles: &AnglePreimages, spec: &ProblemSpec) -> Result<TipSet, SolverError> {
    if !disc.is_admissible() {
        return Err(SolverError::NotAdmissible(format!("level {} jumps", disc.n)));
    }
    let measure = disc.measure(spec, angles)?;
    let masses: Vec<PointMass> = measure.point_masses().copied().collect();
    let c1 = 1.0 / disc.c;
    let top = spec.center() + FRAC_PI_2;
    let mut partial = 0.0;
    let mut tips = Vec::with_capacity(disc.n);
    let mut argmins = Vec::with_capacity(disc.n);
    for (k, ((lo, hi), t)) in disc.cells(angles).into_iter().zip(disc.contributions()).enumerate() {
        partial += t;
        let pad = 1e-9 * (hi - lo);
        let phi = bisect(|a| v_prime(a, &masses, c1), lo + pad, hi - pad, 1e-12)
            .ok_or(SolverError::MinimizationFailure { k: k + 1 })?;
        argmins.push(phi);
        tips.push(Complex64::new(top - PI * partial, v_direct(phi, &masses, c1)));
    }
    Ok(TipSet { tips, argmins })
}

/// Residuals of a level: curve conditions at the `n - 1` interior tips and
/// the two normalizations.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// `Im w_k - arccosh(cosh B0 / cos(Re w_k - u_c))`, `k = 1..n-1`.
    pub curve: Vec<f64>,
    /// `C1 sum mu_k / sin beta_k - 1`.
    pub width: f64,
    /// `2 sum lambda_j + 2 sum mu_k - 1`.
    pub mass: f64,
}

impl Residuals {
    pub fn max_abs(&self) -> f64 {
        self.to_vec().iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// `(curve..., width, mass)`: `n + 1` components.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.curve.clone();
        v.push(self.width);
        v.push(self.mass);
        v
    }
}

pub fn residuals(disc: &Discretization, angles: &AnglePreimages, spec: &ProblemSpec) -> Result<Residuals, SolverError> {
    let tips = tip_positions(disc, angles, spec)?;
    curve_residuals(disc, &tips, angles, spec)
}

/// [`residuals`] for tips already located (or set by hand).
pub fn curve_residuals(
    disc: &Discretization,
    tips: &TipSet,
    angles: &AnglePreimages,
    spec: &ProblemSpec,
) -> Result<Residuals, SolverError> {
    let uc = spec.center();
    let cb = disc.b0.cosh();
    let mut curve = Vec::with_capacity(disc.n.saturating_sub(1));
    for (k, w) in tips.tips.iter().take(disc.n.saturating_sub(1)).enumerate() {
        let offset = (w.re - uc).abs();
        if offset >= FRAC_PI_2 {
            return Err(SolverError::TipOutsideCurveSupport { k: k + 1, offset });
        }
        curve.push(w.im - (cb / offset.cos()).acosh());
    }
    let width = disc.contributions().iter().sum::<f64>() - 1.0;
    let mass = disc.measure(spec, angles)?.total_mass() - 1.0;
    Ok(Residuals { curve, width, mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::compute_angles;
    use approx::assert_abs_diff_eq;

    fn golden() -> (ProblemSpec, AnglePreimages) {
        let spec = ProblemSpec::origin_only(0.25, 1, 1);
        let angles = compute_angles(&spec).unwrap();
        (spec, angles)
    }

    #[test]
    fn single_jump_tip_on_left_wall() {
        let (spec, angles) = golden();
        let d = Discretization::uniform(&spec, &angles, 1, 2.0);
        let tips = tip_positions(&d, &angles, &spec).unwrap();
        assert_abs_diff_eq!(tips.tips[0].re, PI * (1.0 - 0.5), epsilon = 1e-14);
    }

    #[test]
    fn equal_contributions_space_tips_evenly() {
        let (spec, angles) = golden();
        let n = 12;
        let d = Discretization::uniform(&spec, &angles, n, 2.0);
        let tips = tip_positions(&d, &angles, &spec).unwrap();
        for w in tips.tips.windows(2) {
            assert_abs_diff_eq!(w[0].re - w[1].re, PI / n as f64, epsilon = 1e-13);
        }
    }

    #[test]
    fn normalizations_hold_by_construction() {
        let (spec, angles) = golden();
        let d = Discretization::uniform(&spec, &angles, 20, 2.0);
        let r = residuals(&d, &angles, &spec).unwrap();
        assert_eq!(r.to_vec().len(), 21);
        assert!(r.width.abs() < 1e-14);
        assert!(r.mass.abs() < 1e-14);
    }

    #[test]
    fn scaled_jumps_break_width() {
        let (spec, angles) = golden();
        let mut d = Discretization::uniform(&spec, &angles, 10, 2.0);
        let eps = 1e-3;
        for m in &mut d.mu {
            *m *= 1.0 + eps;
        }
        let tips = tip_positions(&d, &angles, &spec).unwrap();
        let r = curve_residuals(&d, &tips, &angles, &spec).unwrap();
        assert_abs_diff_eq!(r.width, eps, epsilon = 1e-14);
    }

    #[test]
    fn tip_on_curve_has_zero_residual() {
        let (spec, angles) = golden();
        let d = Discretization::uniform(&spec, &angles, 6, 2.0);
        let mut tips = tip_positions(&d, &angles, &spec).unwrap();
        let uc = spec.center();
        tips.tips[2].im = (d.b0.cosh() / (tips.tips[2].re - uc).cos()).acosh();
        let r = curve_residuals(&d, &tips, &angles, &spec).unwrap();
        assert_eq!(r.curve[2], 0.0);
    }

    #[test]
    fn argmin_is_the_cell_minimum() {
        let (spec, angles) = golden();
        let d = Discretization::uniform(&spec, &angles, 8, 2.0);
        let tips = tip_positions(&d, &angles, &spec).unwrap();
        let m = d.measure(&spec, &angles).unwrap();
        let s = d.scale(&spec, &angles);
        for ((lo, hi), (phi, w)) in d.cells(&angles).into_iter().zip(tips.argmins.iter().zip(&tips.tips)) {
            assert!(lo < *phi && *phi < hi);
            let v = crate::herglotz::boundary_v(*phi, &m, &s).unwrap();
            assert_abs_diff_eq!(v, w.im, epsilon = 1e-12);
            for x in [0.2, 0.4, 0.6, 0.8] {
                let a = lo + x * (hi - lo);
                assert!(crate::herglotz::boundary_v(a, &m, &s).unwrap() >= v - 1e-12);
            }
        }
    }

    #[test]
    fn argmins_approach_cell_midpoints() {
        // The distance to the midpoint shrinks with the cell; its ratio to the
        // cell width settles near a constant set by the smooth background.
        let (spec, angles) = golden();
        let offsets = |n: usize| {
            let d = Discretization::uniform(&spec, &angles, n, 2.0);
            let tips = tip_positions(&d, &angles, &spec).unwrap();
            let cells = d.cells(&angles);
            let (mut abs, mut rel) = (0.0f64, 0.0f64);
            for (&(lo, hi), &x) in cells.iter().zip(&tips.argmins).take(3 * n / 4).skip(n / 4) {
                let off = (x - 0.5 * (lo + hi)).abs();
                abs = abs.max(off);
                rel = rel.max(off / (hi - lo));
            }
            (abs, rel)
        };
        let (a25, r25) = offsets(25);
        let (a400, r400) = offsets(400);
        assert!(a400 < a25 / 10.0);
        assert!(r400 < 0.5 && (r400 - r25).abs() < 0.01);
    }

    #[test]
    fn overfull_jumps_are_rejected() {
        let (spec, angles) = golden();
        let mut t = vec![0.3; 5];
        t[4] = -0.2;
        let d = Discretization::from_contributions(&spec, &angles, &t, 2.0);
        assert!(matches!(tip_positions(&d, &angles, &spec), Err(SolverError::NotAdmissible(_))));
    }
}
