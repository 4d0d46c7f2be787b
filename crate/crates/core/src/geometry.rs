//! Problem description, the fixed preliminary map from the upper half-disk to
//! the first quadrant, pole preimage angles and comb-domain geometry.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("interval endpoint a = {a} must lie in (0, 1)")]
    IntervalOutOfRange { a: f64 },
    #[error("{kind} pole #{index} = {value} lies outside {range}")]
    PoleOutsideRange { kind: &'static str, index: usize, value: f64, range: String },
    #[error("{kind} poles are not strictly increasing at #{index}: {prev} >= {value}")]
    PoleOrdering { kind: &'static str, index: usize, prev: f64, value: f64 },
    #[error("multiplicity {name} must be at least 1")]
    EmptyMultiplicity { name: String },
    #[error("expected {expected} pole multiplicities, found {found}")]
    MultiplicityCount { expected: usize, found: usize },
    #[error("|u - u_c| = {offset} is not below pi/2")]
    OutsideCurveSupport { offset: f64 },
    #[error("x = {x} must be positive and finite")]
    NotPositive { x: f64 },
}

/// Interval endpoint, fixed poles and degree data of one approximation problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub a: f64,
    /// Poles `x_1 < ... < x_q` in `(0, a)`.
    pub inner_poles: Vec<f64>,
    /// Poles `x_{q+1} < ... < x_p` in `(1, inf)`.
    pub outer_poles: Vec<f64>,
    /// The pole at the origin has order `2 k0 - 1`.
    pub k0: u32,
    /// Multiplicities `k_1..k_p`, inner poles first.
    pub k: Vec<u32>,
    pub m: u32,
}

impl ProblemSpec {
    /// The configuration with the origin as the only pole.
    pub fn origin_only(a: f64, k0: u32, m: u32) -> Self {
        ProblemSpec { a, inner_poles: vec![], outer_poles: vec![], k0, k: vec![], m }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        validate(self)
    }

    pub fn q(&self) -> usize {
        self.inner_poles.len()
    }

    pub fn p(&self) -> usize {
        self.inner_poles.len() + self.outer_poles.len()
    }

    /// Poles `x_1..x_p` in index order.
    pub fn poles(&self) -> Vec<f64> {
        self.inner_poles.iter().chain(&self.outer_poles).copied().collect()
    }

    /// `sum_{j=0}^{p} k_j`.
    pub fn multiplicity_sum(&self) -> u32 {
        self.k0 + self.k.iter().sum::<u32>()
    }

    /// `sum_{j=0}^{q} k_j`.
    pub fn inner_multiplicity_sum(&self) -> u32 {
        self.k0 + self.k[..self.q()].iter().sum::<u32>()
    }

    /// Numerator degree bound `n = 2(m - 1 + sum k_j)`.
    pub fn degree(&self) -> usize {
        2 * (self.m as usize - 1 + self.multiplicity_sum() as usize)
    }

    /// Dimension of the even-numerator family, `m + sum k_j`.
    pub fn basis_size(&self) -> usize {
        (self.m + self.multiplicity_sum()) as usize
    }

    /// Width of the half-strip, `pi (sum k_j + m)`.
    pub fn width(&self) -> f64 {
        PI * f64::from(self.multiplicity_sum() + self.m)
    }

    /// Abscissa of the curve centre, `u_c = pi sum_{j<=q} k_j`.
    pub fn center(&self) -> f64 {
        PI * f64::from(self.inner_multiplicity_sum())
    }

    /// `(-1)^{sum_{j<=q} k_j}`.
    pub fn sign(&self) -> f64 {
        if self.inner_multiplicity_sum().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Denominator `x^{2k0-1} prod (x^2 - x_j^2)^{k_j}`.
    pub fn denominator(&self, x: f64) -> f64 {
        let mut d = x.powi(2 * self.k0 as i32 - 1);
        for (xj, &kj) in self.poles().iter().zip(&self.k) {
            d *= (x * x - xj * xj).powi(kj as i32);
        }
        d
    }

    /// True when there are no inner poles; with `p = 0` this is the
    /// classical origin-only family.
    pub fn is_q_zero(&self) -> bool {
        self.inner_poles.is_empty()
    }
}

/// Checks the standing assumptions `0 < x_1 < ... < x_q < a < 1 < x_{q+1} < ... < x_p`.
pub fn validate(spec: &ProblemSpec) -> Result<(), GeometryError> {
    if !(spec.a > 0.0 && spec.a < 1.0) {
        return Err(GeometryError::IntervalOutOfRange { a: spec.a });
    }
    if spec.k.len() != spec.p() {
        return Err(GeometryError::MultiplicityCount { expected: spec.p(), found: spec.k.len() });
    }
    if spec.k0 == 0 {
        return Err(GeometryError::EmptyMultiplicity { name: "k0".into() });
    }
    if spec.m == 0 {
        return Err(GeometryError::EmptyMultiplicity { name: "m".into() });
    }
    if let Some(j) = spec.k.iter().position(|&k| k == 0) {
        return Err(GeometryError::EmptyMultiplicity { name: format!("k{}", j + 1) });
    }
    check_poles("inner", &spec.inner_poles, 1, |x| x > 0.0 && x < spec.a, format!("(0, {})", spec.a))?;
    check_poles("outer", &spec.outer_poles, spec.q() + 1, |x| x > 1.0 && x.is_finite(), "(1, inf)".into())?;
    Ok(())
}

fn check_poles(
    kind: &'static str,
    poles: &[f64],
    first_index: usize,
    inside: impl Fn(f64) -> bool,
    range: String,
) -> Result<(), GeometryError> {
    for (i, &x) in poles.iter().enumerate() {
        if !inside(x) {
            return Err(GeometryError::PoleOutsideRange { kind, index: first_index + i, value: x, range });
        }
    }
    for (i, w) in poles.windows(2).enumerate() {
        if w[0] >= w[1] {
            return Err(GeometryError::PoleOrdering { kind, index: first_index + i + 1, prev: w[0], value: w[1] });
        }
    }
    Ok(())
}

/// A value of the preliminary map; the preimage of infinity is the one
/// point of the closed half-disk that has no finite image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapValue {
    Finite(Complex64),
    Infinity,
}

impl MapValue {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            MapValue::Finite(z) => Some(z),
            MapValue::Infinity => None,
        }
    }
}

/// Where a positive abscissa sits in the closed upper half-disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preimage {
    /// A point `zeta` of the diameter `[-1, 1]`.
    Diameter(f64),
    /// The point `e^{i alpha}` of the upper semicircle.
    Circle(f64),
}

/// `z(zeta) = sqrt(T(w))`, `w = -(zeta + 1/zeta)/2`, `T(w) = tau w / (w - sigma)`.
///
/// Sends the upper half-disk onto the first quadrant with `z(-1) = a`,
/// `z(1) = 1` and `z(i) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreliminaryMap {
    pub a: f64,
    pub tau: f64,
    pub sigma: f64,
}

impl PreliminaryMap {
    pub fn new(a: f64) -> Self {
        let a2 = a * a;
        PreliminaryMap { a, tau: 2.0 * a2 / (1.0 + a2), sigma: -(1.0 - a2) / (1.0 + a2) }
    }

    pub fn forward(&self, zeta: Complex64) -> MapValue {
        let z2 = zeta * zeta;
        let den = z2 + 2.0 * self.sigma * zeta + 1.0;
        if den.norm() <= 4.0 * f64::EPSILON {
            return MapValue::Infinity;
        }
        let t = self.tau * (z2 + 1.0) / den;
        let z = t.sqrt();
        MapValue::Finite(Complex64::new(z.re.abs(), z.im.abs()))
    }

    /// Image of `e^{i alpha}`, computed in real arithmetic.
    pub fn forward_circle(&self, alpha: f64) -> MapValue {
        let w = -alpha.cos();
        let den = w - self.sigma;
        if den == 0.0 {
            return MapValue::Infinity;
        }
        let t = self.tau * w / den;
        if t >= 0.0 {
            MapValue::Finite(Complex64::new(t.sqrt(), 0.0))
        } else {
            MapValue::Finite(Complex64::new(0.0, (-t).sqrt()))
        }
    }

    /// Image of a real point of the diameter.
    pub fn forward_diameter(&self, zeta: f64) -> f64 {
        let t = self.tau * (zeta * zeta + 1.0) / (zeta * zeta + 2.0 * self.sigma * zeta + 1.0);
        t.sqrt()
    }

    /// Angle `alpha` with `z(e^{i alpha})^2 = s`, for `s` outside `[a^2, 1]`.
    fn circle_angle_of_square(&self, s: f64) -> f64 {
        let a2 = self.a * self.a;
        let sin_scaled = (2.0 * self.tau * (s - 1.0) * (s - a2) / (1.0 + a2)).max(0.0).sqrt();
        let cos_scaled = -self.sigma * s * (s - self.tau).signum();
        sin_scaled.atan2(cos_scaled)
    }

    /// Preimage of a positive real `x`: the diameter for `x` in `[a, 1]`,
    /// the semicircle otherwise.
    pub fn inverse_positive(&self, x: f64) -> Result<Preimage, GeometryError> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(GeometryError::NotPositive { x });
        }
        let s = x * x;
        let a2 = self.a * self.a;
        if (a2..=1.0).contains(&s) {
            let inv_w = (s - self.tau) / (self.sigma * s);
            let root = (2.0 * self.tau * (1.0 - s) * (s - a2) / ((1.0 + a2) * self.sigma * self.sigma * s * s)).max(0.0).sqrt();
            Ok(Preimage::Diameter(-inv_w / (1.0 + root)))
        } else {
            Ok(Preimage::Circle(self.circle_angle_of_square(s)))
        }
    }

    /// Angle in `(alpha_{p+1}, pi/2)` whose image is `i y`.
    pub fn angle_of_imaginary(&self, y: f64) -> f64 {
        self.circle_angle_of_square(-y * y)
    }

    /// Inverse of [`angle_of_imaginary`](Self::angle_of_imaginary).
    pub fn imaginary_of_angle(&self, alpha: f64) -> f64 {
        let w = -alpha.cos();
        (w * self.tau / (self.sigma - w)).max(0.0).sqrt()
    }

    /// Angle of the preimage of infinity, `arccos(-sigma)`.
    pub fn pole_angle(&self) -> f64 {
        (-self.sigma).acos()
    }
}

/// Convenience wrapper for [`PreliminaryMap::forward`].
pub fn preliminary_map(zeta: Complex64, a: f64) -> MapValue {
    PreliminaryMap::new(a).forward(zeta)
}

/// Preimage angles `alpha_0 = pi/2, alpha_1..alpha_p, alpha_{p+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnglePreimages {
    pub alpha: Vec<f64>,
}

impl AnglePreimages {
    pub fn alpha0(&self) -> f64 {
        self.alpha[0]
    }

    /// Preimage angle of infinity.
    pub fn alpha_inf(&self) -> f64 {
        *self.alpha.last().expect("at least two angles")
    }

    /// Angle of pole `j` in `1..=p`.
    pub fn pole(&self, j: usize) -> f64 {
        self.alpha[j]
    }

    /// The arc `I = (alpha_{p+1}, alpha_0)` carrying the interior measure.
    pub fn arc(&self) -> (f64, f64) {
        (self.alpha_inf(), self.alpha0())
    }
}

pub fn compute_angles(spec: &ProblemSpec) -> Result<AnglePreimages, GeometryError> {
    spec.validate()?;
    let map = PreliminaryMap::new(spec.a);
    let mut alpha = Vec::with_capacity(spec.p() + 2);
    alpha.push(FRAC_PI_2);
    for x in spec.poles() {
        match map.inverse_positive(x)? {
            Preimage::Circle(t) => alpha.push(t),
            Preimage::Diameter(_) => unreachable!("validated poles lie off [a, 1]"),
        }
    }
    alpha.push(map.pole_angle());
    Ok(AnglePreimages { alpha })
}

/// Half-strip of width `pi (sum k_j + m)` minus the set `E` and the rays `l_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombDomain {
    pub width: f64,
    /// `u_c = pi sum_{j<=q} k_j`.
    pub center: f64,
    /// Abscissas of `l_1..l_p`.
    pub ray_abscissas: Vec<f64>,
    /// `B_0` (curve parameter) followed by the ray base heights `B_1..B_p`.
    pub b: Vec<f64>,
}

impl CombDomain {
    pub fn new(spec: &ProblemSpec, b: Vec<f64>) -> Self {
        let q = spec.q();
        let p = spec.p();
        let k = &spec.k;
        let mut rays = Vec::with_capacity(p);
        for j in 1..=q {
            rays.push(PI * f64::from(k[j - 1..q].iter().sum::<u32>()));
        }
        let base = spec.inner_multiplicity_sum() + spec.m;
        for j in q + 1..=p {
            rays.push(PI * f64::from(base + k[j..p].iter().sum::<u32>()));
        }
        CombDomain { width: spec.width(), center: spec.center(), ray_abscissas: rays, b }
    }

    pub fn b0(&self) -> f64 {
        self.b[0]
    }
}

/// Height of the curve bounding `E`: `v = arccosh(cosh B0 / cos(u - u_c))`.
pub fn curve_height(u: f64, b0: f64, u_c: f64) -> Result<f64, GeometryError> {
    let offset = (u - u_c).abs();
    if offset >= FRAC_PI_2 || offset.cos() <= 0.0 {
        return Err(GeometryError::OutsideCurveSupport { offset });
    }
    Ok((b0.cosh() / offset.cos()).acosh())
}
