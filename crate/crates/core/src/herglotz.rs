//! Herglotz representation of the comb-domain map.
//!
//! The map is `f(zeta) = C1 * int_{-1}^{zeta} h(t) / (1 - t^2) dt` with
//! `h(zeta) = int (e^{it} + zeta)/(e^{it} - zeta) dmu(t)` for an even positive
//! measure `mu`: atoms at the pole preimages `±alpha_j` plus an interior part
//! on `±I`, `I = (alpha_{p+1}, alpha_0)`. Every point mass `w` at `±beta`
//! contributes `2w (1 - zeta^2) / (1 - 2 zeta cos beta + zeta^2)` to `h`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::chebyshev::{antiderivative, clenshaw, interpolate_lobatto, lobatto_points};
use crate::geometry::{AnglePreimages, ProblemSpec};
use crate::quadrature::{self, gauss_legendre};

const QUAD_TOL: f64 = 1e-11;
const QUAD_MAX_INTERVALS: usize = 4000;
const ATOM_EPS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HerglotzError {
    #[error("evaluation at the singular boundary point with angle {angle}")]
    EvaluationAtAtom { angle: f64 },
    #[error("quadrature missed tolerance: estimate {estimate}, error {error}")]
    QuadratureFailure { estimate: f64, error: f64 },
    #[error("angle {alpha} lies outside the arc ({lo}, {hi})")]
    OutsideArc { alpha: f64, lo: f64, hi: f64 },
    #[error("coupling constant A needs an inner pole; sum of k~_j sin(alpha_j) = {scalar}")]
    UndefinedForQZero { scalar: f64 },
    #[error("|zeta| = {modulus} exceeds 1")]
    OutsideDisk { modulus: f64 },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
}

impl From<quadrature::NotConverged> for HerglotzError {
    fn from(e: quadrature::NotConverged) -> Self {
        HerglotzError::QuadratureFailure { estimate: e.estimate, error: e.error }
    }
}

/// A point mass `weight` at `±angle`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass {
    pub angle: f64,
    pub weight: f64,
}

/// Absolutely continuous interior measure, stored through its normalized
/// cumulative function `R` on the arc.
///
/// The arc is parametrized as `alpha = mid - hw cos(theta)`, `theta` in
/// `[0, pi]`, so `theta = 0` is `alpha_{p+1}` and `theta = pi` is `alpha_0`.
/// In that variable `R'(theta) = sin(theta/2)^s cos(theta/2)^c exp(q(theta)) / Z`
/// with `q` a Chebyshev series in `x = 2 theta/pi - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcDensity {
    lo: f64,
    hi: f64,
    sin_exp: i32,
    cos_exp: i32,
    q: Vec<f64>,
    order: usize,
    r: Vec<f64>,
    norm: f64,
}

impl ArcDensity {
    /// Builds the density; `order` is the Chebyshev–Lobatto degree used to
    /// integrate `R'`.
    pub fn new(arc: (f64, f64), sin_exp: i32, cos_exp: i32, q: Vec<f64>, order: usize) -> Self {
        let mut d = ArcDensity { lo: arc.0, hi: arc.1, sin_exp, cos_exp, q, order, r: vec![], norm: 1.0 };
        let values: Vec<f64> = lobatto_points(order).iter().map(|&x| d.unnormalized(x)).collect();
        let ic = antiderivative(&interpolate_lobatto(&values));
        let total = clenshaw(&ic, 1.0);
        d.norm = 0.5 * PI * total;
        d.r = ic.iter().map(|c| c / total).collect();
        d
    }

    /// Density for a problem: exponents `2m - 2` at `alpha_{p+1}` and
    /// `2k0 - 2` at `alpha_0`.
    pub fn for_problem(spec: &ProblemSpec, angles: &AnglePreimages, q: Vec<f64>, order: usize) -> Self {
        ArcDensity::new(angles.arc(), 2 * spec.m as i32 - 2, 2 * spec.k0 as i32 - 2, q, order)
    }

    fn unnormalized(&self, x: f64) -> f64 {
        let t = 0.5 * PI * (x + 1.0);
        let w = (0.5 * t).sin().powi(self.sin_exp) * (0.5 * t).cos().powi(self.cos_exp);
        w * clenshaw(&self.q, x).exp()
    }

    pub fn arc(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn q_coefficients(&self) -> &[f64] {
        &self.q
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn exponents(&self) -> (i32, i32) {
        (self.sin_exp, self.cos_exp)
    }

    fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn alpha_of(&self, theta: f64) -> f64 {
        self.mid() - self.half_width() * theta.cos()
    }

    pub fn theta_of(&self, alpha: f64) -> f64 {
        ((self.mid() - alpha) / self.half_width()).clamp(-1.0, 1.0).acos()
    }

    /// `d alpha / d theta`.
    pub fn jacobian(&self, theta: f64) -> f64 {
        self.half_width() * theta.sin()
    }

    /// `R` as a function of `theta`; 0 at `alpha_{p+1}`, 1 at `alpha_0`.
    pub fn cumulative_theta(&self, theta: f64) -> f64 {
        clenshaw(&self.r, 2.0 * theta / PI - 1.0)
    }

    pub fn cumulative(&self, alpha: f64) -> f64 {
        self.cumulative_theta(self.theta_of(alpha))
    }

    /// `dR/dtheta`, exactly positive.
    pub fn pdf_theta(&self, theta: f64) -> f64 {
        self.unnormalized(2.0 * theta / PI - 1.0) / self.norm
    }

    /// `rho = dR/dalpha`, a probability density on the arc.
    pub fn density(&self, alpha: f64) -> f64 {
        let t = self.theta_of(alpha);
        self.pdf_theta(t) / self.jacobian(t)
    }

    /// Gauss–Legendre discretization in `theta`: nodes `beta_k` with
    /// probabilities `t_k` summing to one.
    pub fn discretize(&self, nodes: usize) -> Vec<(f64, f64)> {
        let rule = gauss_legendre(nodes);
        let mut out: Vec<(f64, f64)> = rule
            .iter()
            .map(|&(x, w)| {
                let theta = 0.5 * PI * (x + 1.0);
                (self.alpha_of(theta), self.pdf_theta(theta) * 0.5 * PI * w)
            })
            .collect();
        let total: f64 = out.iter().map(|p| p.1).sum();
        for p in &mut out {
            p.1 /= total;
        }
        out
    }
}

/// Smooth interior measure `dmu = c rho(phi) sin(phi) dphi` on the arc.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothInterior {
    pub density: ArcDensity,
    /// The factor `c` in `mu' = c rho sin(phi)`.
    pub scale: f64,
    nodes: Vec<PointMass>,
}

impl SmoothInterior {
    /// Wraps a density; `nodes` Gauss points carry it in `h` and `f`.
    pub fn new(density: ArcDensity, scale: f64, nodes: usize) -> Self {
        let pts =
            density.discretize(nodes).into_iter().map(|(b, t)| PointMass { angle: b, weight: scale * t * b.sin() }).collect();
        SmoothInterior { density, scale, nodes: pts }
    }

    /// The point masses used for evaluation in the disk.
    pub fn nodes(&self) -> &[PointMass] {
        &self.nodes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Interior {
    Empty,
    /// Jumps `mu_k` at `beta_1 < ... < beta_n` (a level-n slit measure).
    Jumps(Vec<PointMass>),
    Smooth(SmoothInterior),
}

/// Even positive measure: atoms plus an interior part on the arc `I`.
#[derive(Debug, Clone, PartialEq)]
pub struct HerglotzMeasure {
    atoms: Vec<PointMass>,
    arc: (f64, f64),
    interior: Interior,
}

impl HerglotzMeasure {
    pub fn new(atoms: Vec<PointMass>, arc: (f64, f64), interior: Interior) -> Result<Self, HerglotzError> {
        let bad = |p: &PointMass| !(p.weight > 0.0 && p.weight.is_finite() && p.angle > 0.0 && p.angle < PI);
        if atoms.iter().any(bad) {
            return Err(HerglotzError::InvalidMeasure("atoms need positive weights and angles in (0, pi)".into()));
        }
        if let Interior::Jumps(j) = &interior {
            if j.iter().any(bad) {
                return Err(HerglotzError::InvalidMeasure("jumps need positive weights".into()));
            }
            if j.windows(2).any(|w| w[0].angle >= w[1].angle) || j.iter().any(|p| p.angle <= arc.0 || p.angle >= arc.1) {
                return Err(HerglotzError::InvalidMeasure("jump angles must increase strictly inside the arc".into()));
            }
        }
        Ok(HerglotzMeasure { atoms, arc, interior })
    }

    /// Atoms `lambda_j` at `alpha_j` from the chain relation with scalar `c`.
    pub fn with_chain(spec: &ProblemSpec, angles: &AnglePreimages, c: f64, interior: Interior) -> Result<Self, HerglotzError> {
        let lambda = lambda_chain(angles, spec, c);
        let atoms = angles.alpha.iter().zip(lambda).map(|(&angle, weight)| PointMass { angle, weight }).collect();
        HerglotzMeasure::new(atoms, angles.arc(), interior)
    }

    pub fn atoms(&self) -> &[PointMass] {
        &self.atoms
    }

    pub fn interior(&self) -> &Interior {
        &self.interior
    }

    pub fn arc(&self) -> (f64, f64) {
        self.arc
    }

    fn interior_masses(&self) -> &[PointMass] {
        match &self.interior {
            Interior::Empty => &[],
            Interior::Jumps(j) => j,
            Interior::Smooth(s) => s.nodes(),
        }
    }

    /// Atoms followed by the interior point masses.
    pub fn point_masses(&self) -> impl Iterator<Item = &PointMass> {
        self.atoms.iter().chain(self.interior_masses())
    }

    /// `2 sum lambda_j + 2 sum mu_k`; equals `h(0)`.
    pub fn total_mass(&self) -> f64 {
        2.0 * self.point_masses().map(|p| p.weight).sum::<f64>()
    }

    fn check_not_singular(&self, angle: f64) -> Result<(), HerglotzError> {
        for p in self.point_masses() {
            if (p.angle - angle).abs() < ATOM_EPS {
                return Err(HerglotzError::EvaluationAtAtom { angle: p.angle });
            }
        }
        Ok(())
    }

    fn check_on_arc(&self, alpha: f64) -> Result<(), HerglotzError> {
        let (lo, hi) = self.arc;
        if !(alpha > lo && alpha < hi) {
            return Err(HerglotzError::OutsideArc { alpha, lo, hi });
        }
        Ok(())
    }
}

/// Scalar parameters of the map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapScale {
    pub c1: f64,
    /// `c = 1/C1`, the scalar of the chain `lambda_j = c k~_j sin(alpha_j)`.
    pub c: f64,
    /// Coupling constant `A`; absent without inner poles.
    pub a: Option<f64>,
    /// `sum k~_j sin(alpha_j)`, reported in place of `A` when `q = 0`.
    pub chain_sum: f64,
    pub lambda1_interval: Option<(f64, f64)>,
}

impl MapScale {
    pub fn new(spec: &ProblemSpec, angles: &AnglePreimages, c: f64) -> Self {
        MapScale {
            c1: 1.0 / c,
            c,
            a: coupling_a(angles, spec).ok(),
            chain_sum: chain_sum(angles, spec),
            lambda1_interval: lambda1_interval(angles, spec),
        }
    }
}

/// `k~_0 = k0 - 1/2`, `k~_j = k_j`, `k~_{p+1} = m - 1/2`.
pub fn ktilde(spec: &ProblemSpec) -> Vec<f64> {
    let mut k = Vec::with_capacity(spec.p() + 2);
    k.push(f64::from(spec.k0) - 0.5);
    k.extend(spec.k.iter().map(|&kj| f64::from(kj)));
    k.push(f64::from(spec.m) - 0.5);
    k
}

/// Atom weights `lambda_j = c k~_j sin(alpha_j)`, `j = 0..=p+1`.
pub fn lambda_chain(angles: &AnglePreimages, spec: &ProblemSpec, c: f64) -> Vec<f64> {
    ktilde(spec).iter().zip(&angles.alpha).map(|(k, a)| c * k * a.sin()).collect()
}

/// `sum_j k~_j sin(alpha_j)`.
pub fn chain_sum(angles: &AnglePreimages, spec: &ProblemSpec) -> f64 {
    lambda_chain(angles, spec, 1.0).iter().sum()
}

/// `A = sum_j k~_j sin(alpha_j) / (k_1 sin alpha_1)`.
pub fn coupling_a(angles: &AnglePreimages, spec: &ProblemSpec) -> Result<f64, HerglotzError> {
    let s = chain_sum(angles, spec);
    if spec.q() == 0 {
        return Err(HerglotzError::UndefinedForQZero { scalar: s });
    }
    Ok(s / (f64::from(spec.k[0]) * angles.pole(1).sin()))
}

/// Open interval containing `lambda_1` for every positive normalized interior measure.
pub fn lambda1_interval(angles: &AnglePreimages, spec: &ProblemSpec) -> Option<(f64, f64)> {
    let a = coupling_a(angles, spec).ok()?;
    let ks = f64::from(spec.k[0]) * angles.pole(1).sin();
    let lo = ks / (2.0 * (1.0 + a * ks));
    let hi = ks / (2.0 * (angles.alpha_inf().sin() + a * ks));
    Some((lo, hi))
}

fn pair_kernel(t: Complex64, beta: f64) -> Complex64 {
    2.0 / (1.0 - 2.0 * beta.cos() * t + t * t)
}

/// `h(zeta)` for `|zeta| <= 1`.
pub fn eval_h(zeta: Complex64, measure: &HerglotzMeasure) -> Result<Complex64, HerglotzError> {
    let r = zeta.norm();
    if r > 1.0 + 1e-12 {
        return Err(HerglotzError::OutsideDisk { modulus: r });
    }
    let mut s = Complex64::new(0.0, 0.0);
    for p in measure.point_masses() {
        let e = Complex64::from_polar(1.0, p.angle);
        if (zeta - e).norm() < ATOM_EPS || (zeta - e.conj()).norm() < ATOM_EPS {
            return Err(HerglotzError::EvaluationAtAtom { angle: p.angle });
        }
        s += pair_kernel(zeta, p.angle) * p.weight;
    }
    Ok((1.0 - zeta * zeta) * s)
}

/// Closed-form contribution of one pair to `f / C1`.
fn pair_primitive(zeta: Complex64, p: &PointMass) -> Complex64 {
    let e = Complex64::from_polar(1.0, p.angle);
    let f = (1.0 - zeta * e.conj()).ln() - (1.0 - zeta * e).ln();
    (f + Complex64::new(0.0, p.angle)) * (p.weight / p.angle.sin()) / Complex64::new(0.0, 1.0)
}

fn check_disk(zeta: Complex64, measure: &HerglotzMeasure) -> Result<(), HerglotzError> {
    let r = zeta.norm();
    if r > 1.0 + 1e-12 {
        return Err(HerglotzError::OutsideDisk { modulus: r });
    }
    for p in measure.point_masses() {
        let e = Complex64::from_polar(1.0, p.angle);
        if (zeta - e).norm() < ATOM_EPS || (zeta - e.conj()).norm() < ATOM_EPS {
            return Err(HerglotzError::EvaluationAtAtom { angle: p.angle });
        }
    }
    Ok(())
}

/// `f(zeta)` by adaptive quadrature of `C1 h(t)/(1 - t^2)` along the segment
/// from -1; pairs whose poles lie near `zeta` are split off and integrated
/// in closed form.
pub fn eval_f(zeta: Complex64, measure: &HerglotzMeasure, scale: &MapScale) -> Result<Complex64, HerglotzError> {
    check_disk(zeta, measure)?;
    let near = |p: &PointMass| {
        let e = Complex64::from_polar(1.0, p.angle);
        (zeta - e).norm().min((zeta - e.conj()).norm()) < 0.2
    };
    let far: Vec<PointMass> = measure.point_masses().filter(|p| !near(p)).copied().collect();
    let mut singular = Complex64::new(0.0, 0.0);
    for p in measure.point_masses().filter(|p| near(p)) {
        singular += pair_primitive(zeta, p);
    }
    let dz = zeta + 1.0;
    let regular = quadrature::integrate(
        |s: f64| {
            let t = Complex64::new(-1.0, 0.0) + dz * s;
            let mut acc = Complex64::new(0.0, 0.0);
            for p in &far {
                acc += pair_kernel(t, p.angle) * p.weight;
            }
            acc * dz
        },
        0.0,
        1.0,
        QUAD_TOL * scale.c,
        QUAD_MAX_INTERVALS,
    )?;
    Ok(scale.c1 * (regular + singular))
}

/// `f(zeta)` from the closed-form primitive of each pair; the independent
/// route to [`eval_f`].
pub fn eval_f_closed(zeta: Complex64, measure: &HerglotzMeasure, scale: &MapScale) -> Result<Complex64, HerglotzError> {
    check_disk(zeta, measure)?;
    let mut s = Complex64::new(0.0, 0.0);
    for p in measure.point_masses() {
        s += pair_primitive(zeta, p);
    }
    Ok(scale.c1 * s)
}

/// `f` on the diameter, where it is real:
/// `C1 sum 2w/sin(beta) [atan2(zeta sin beta, 1 - zeta cos beta) + beta/2]`.
pub fn f_on_diameter(zeta: f64, measure: &HerglotzMeasure, scale: &MapScale) -> f64 {
    let mut s = 0.0;
    for p in measure.point_masses() {
        let (sb, cb) = p.angle.sin_cos();
        s += 2.0 * p.weight / sb * ((zeta * sb).atan2(1.0 - zeta * cb) + 0.5 * p.angle);
    }
    scale.c1 * s
}

/// `u(alpha) = Re f(e^{i alpha}) = C1 pi sum_{beta > alpha} w / sin(beta)`.
pub fn boundary_u(alpha: f64, measure: &HerglotzMeasure, scale: &MapScale) -> Result<f64, HerglotzError> {
    measure.check_on_arc(alpha)?;
    let above = |ps: &[PointMass]| ps.iter().filter(|p| p.angle > alpha).map(|p| p.weight / p.angle.sin()).sum::<f64>();
    let mut s = above(&measure.atoms);
    match &measure.interior {
        Interior::Empty => {}
        Interior::Jumps(j) => {
            measure.check_not_singular(alpha)?;
            s += above(j);
        }
        Interior::Smooth(sm) => s += sm.scale * (1.0 - sm.density.cumulative(alpha)),
    }
    Ok(scale.c1 * PI * s)
}

/// `log(sin((alpha + phi)/2) / |sin((alpha - phi)/2)|)`.
pub fn log_kernel(alpha: f64, phi: f64) -> f64 {
    ((0.5 * (alpha + phi)).sin() / (0.5 * (alpha - phi)).sin().abs()).ln()
}

/// `d/dphi` of [`log_kernel`].
pub fn log_kernel_dphi(alpha: f64, phi: f64) -> f64 {
    0.5 / (0.5 * (alpha + phi)).tan() + 0.5 / (0.5 * (alpha - phi)).tan()
}

/// `int_I rho(phi) log_kernel(alpha, phi) dphi` for `alpha` on the arc,
/// after integrating by parts against `R(phi) - R(alpha)`.
fn smooth_log_potential_on_arc(d: &ArcDensity, alpha: f64) -> Result<f64, HerglotzError> {
    let (lo, hi) = d.arc();
    let ra = d.cumulative(alpha);
    let ta = d.theta_of(alpha);
    let integrand = |t: f64| {
        let phi = d.alpha_of(t);
        if phi == alpha {
            return -d.density(alpha) * d.jacobian(t);
        }
        (d.cumulative_theta(t) - ra) * log_kernel_dphi(alpha, phi) * d.jacobian(t)
    };
    let left = quadrature::integrate(integrand, 0.0, ta, QUAD_TOL, QUAD_MAX_INTERVALS)?;
    let right = quadrature::integrate(integrand, ta, PI, QUAD_TOL, QUAD_MAX_INTERVALS)?;
    Ok((1.0 - ra) * log_kernel(alpha, hi) + ra * log_kernel(alpha, lo) - left - right)
}

fn smooth_log_potential_off_arc(d: &ArcDensity, alpha: f64) -> Result<f64, HerglotzError> {
    Ok(quadrature::integrate(|t: f64| d.pdf_theta(t) * log_kernel(alpha, d.alpha_of(t)), 0.0, PI, QUAD_TOL, QUAD_MAX_INTERVALS)?)
}

/// `v(alpha) = Im f(e^{i alpha})` at any angle in `(0, pi)` that is not a
/// singular point of the measure.
pub fn circle_v(alpha: f64, measure: &HerglotzMeasure, scale: &MapScale) -> Result<f64, HerglotzError> {
    let mut s = 0.0;
    for p in measure.atoms.iter() {
        if (p.angle - alpha).abs() < ATOM_EPS {
            return Err(HerglotzError::EvaluationAtAtom { angle: p.angle });
        }
        s += p.weight / p.angle.sin() * log_kernel(alpha, p.angle);
    }
    match &measure.interior {
        Interior::Empty => {}
        Interior::Jumps(j) => {
            for p in j {
                if (p.angle - alpha).abs() < ATOM_EPS {
                    return Err(HerglotzError::EvaluationAtAtom { angle: p.angle });
                }
                s += p.weight / p.angle.sin() * log_kernel(alpha, p.angle);
            }
        }
        Interior::Smooth(sm) => {
            let (lo, hi) = measure.arc;
            let pot = if alpha > lo && alpha < hi {
                smooth_log_potential_on_arc(&sm.density, alpha)?
            } else {
                smooth_log_potential_off_arc(&sm.density, alpha)?
            };
            s += sm.scale * pot;
        }
    }
    Ok(scale.c1 * s)
}

/// `v(alpha)` on the arc `I`.
pub fn boundary_v(alpha: f64, measure: &HerglotzMeasure, scale: &MapScale) -> Result<f64, HerglotzError> {
    measure.check_on_arc(alpha)?;
    circle_v(alpha, measure, scale)
}

/// Density of the interior measure at `phi`, the boundary value
/// `Re h(e^{i phi}) / (2 pi)` of its Poisson integral.
///
/// For a smooth interior this is `c rho(phi) sin(phi)` exactly. A jump
/// measure has no density; it is smoothed by evaluating the Poisson integral
/// at radius `1 - 2 delta`, `delta` the mean jump spacing.
pub fn density_from_h(phi: f64, measure: &HerglotzMeasure, _scale: &MapScale) -> Result<f64, HerglotzError> {
    measure.check_on_arc(phi)?;
    match &measure.interior {
        Interior::Empty => Ok(0.0),
        Interior::Smooth(sm) => Ok(sm.scale * sm.density.density(phi) * phi.sin()),
        Interior::Jumps(j) => {
            measure.check_not_singular(phi)?;
            let (lo, hi) = measure.arc;
            let delta = (hi - lo) / (j.len() + 1) as f64;
            let r = 1.0 - 2.0 * delta;
            let poisson = |d: f64| (1.0 - r * r) / (1.0 - 2.0 * r * d.cos() + r * r);
            let re_h: f64 = j.iter().map(|p| p.weight * (poisson(phi - p.angle) + poisson(phi + p.angle))).sum();
            Ok(re_h / (2.0 * PI))
        }
    }
}
