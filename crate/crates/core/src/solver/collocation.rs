//! One resolution level of the curve-condition collocation.
//!
//! Unknowns: Chebyshev coefficients `q_1..q_{n-1}` of the log-density (see
//! [`ArcDensity`]) and `log B0`. Residuals at `2n` collocation angles:
//! `log cosh v(alpha) + log sin(pi R(alpha)) - log cosh B0`, which vanishes
//! exactly when the boundary image of the arc lies on the curve.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::chebyshev::{clenshaw_curtis_weights, lobatto_points};
use crate::exec::{map_indexed, Execution};
use crate::herglotz::{log_kernel, log_kernel_dphi, ArcDensity};

use super::{Setup, SolveOptions, SolverError};

pub(crate) struct Level<'a> {
    setup: &'a Setup,
    n: usize,
    order: usize,
    theta_q: Vec<f64>,
    theta_c: Vec<f64>,
    /// Row-major `(2n) x (order + 1)` kernel `g'(alpha_i, phi_j) dphi/dtheta w_j`.
    kernel: Vec<f64>,
    kernel_rows: Vec<f64>,
    base_v: Vec<f64>,
    log_s0: Vec<f64>,
    log_sinf: Vec<f64>,
}

pub(crate) struct Evaluation {
    pub residual: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub v: Vec<f64>,
}

pub(crate) fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl<'a> Level<'a> {
    pub fn new(setup: &'a Setup, n: usize, opts: &SolveOptions) -> Self {
        let order = opts.quad_factor * n;
        let nc = opts.oversample * n;
        let x = lobatto_points(order);
        let w = clenshaw_curtis_weights(order);
        let theta_q: Vec<f64> = x.iter().map(|x| 0.5 * PI * (x + 1.0)).collect();
        let weights_q: Vec<f64> = w.iter().map(|w| 0.5 * PI * w).collect();
        let probe = ArcDensity::for_problem(&setup.spec, &setup.angles, vec![0.0], 2);
        let alpha_q: Vec<f64> = theta_q.iter().map(|&t| probe.alpha_of(t)).collect();
        let theta_c: Vec<f64> = (1..=nc)
            .map(|i| {
                let t = PI * (2 * i - 1) as f64 / (2 * nc) as f64;
                // keep clear of the removable singularity at a quadrature node
                let gap = theta_q.iter().map(|q| (q - t).abs()).fold(f64::INFINITY, f64::min);
                if gap < 1e-9 {
                    t + 1e-6
                } else {
                    t
                }
            })
            .collect();
        let alpha_c: Vec<f64> = theta_c.iter().map(|&t| probe.alpha_of(t)).collect();
        let mut kernel = Vec::with_capacity(nc * (order + 1));
        let mut kernel_rows = Vec::with_capacity(nc);
        for &ac in &alpha_c {
            let mut row_sum = 0.0;
            for j in 0..=order {
                let k = log_kernel_dphi(ac, alpha_q[j]) * probe.jacobian(theta_q[j]) * weights_q[j];
                kernel.push(k);
                row_sum += k;
            }
            kernel_rows.push(row_sum);
        }
        let (lo, hi) = setup.angles.arc();
        let base_v = alpha_c.iter().map(|&ac| setup.atoms.iter().map(|&(aj, kt)| kt * log_kernel(ac, aj)).sum()).collect();
        let log_s0 = alpha_c.iter().map(|&ac| log_kernel(ac, hi)).collect();
        let log_sinf = alpha_c.iter().map(|&ac| log_kernel(ac, lo)).collect();
        Level { setup, n, order, theta_q, theta_c, kernel, kernel_rows, base_v, log_s0, log_sinf }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn collocation_thetas(&self) -> &[f64] {
        &self.theta_c
    }

    pub fn density(&self, q: &[f64]) -> ArcDensity {
        let mut coeffs = Vec::with_capacity(q.len() + 1);
        coeffs.push(0.0);
        coeffs.extend_from_slice(q);
        ArcDensity::for_problem(&self.setup.spec, &self.setup.angles, coeffs, self.order)
    }

    /// Residuals at `z = (q_1..q_{n-1}, log B0)`; `None` when the iterate
    /// leaves the domain of the residual.
    pub fn evaluate(&self, z: &[f64]) -> Option<Evaluation> {
        let b0 = z[self.n - 1].exp();
        if !b0.is_finite() || z.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let d = self.density(&z[..self.n - 1]);
        let rq: Vec<f64> = self.theta_q.iter().map(|&t| d.cumulative_theta(t)).collect();
        let nq = self.order + 1;
        let lcb = log_cosh(b0);
        let mut residual = Vec::with_capacity(self.theta_c.len());
        let mut cumulative = Vec::with_capacity(self.theta_c.len());
        let mut vs = Vec::with_capacity(self.theta_c.len());
        for (i, &t) in self.theta_c.iter().enumerate() {
            let rc = d.cumulative_theta(t);
            if !(rc > 0.0 && rc < 1.0) {
                return None;
            }
            let row = &self.kernel[i * nq..(i + 1) * nq];
            let dot: f64 = row.iter().zip(&rq).map(|(k, r)| k * r).sum();
            let v = self.base_v[i] + (1.0 - rc) * self.log_s0[i] + rc * self.log_sinf[i] - dot + rc * self.kernel_rows[i];
            let s = (PI * rc.min(1.0 - rc)).sin();
            residual.push(log_cosh(v) + s.ln() - lcb);
            cumulative.push(rc);
            vs.push(v);
        }
        Some(Evaluation { residual, cumulative, v: vs })
    }

    pub fn residual(&self, z: &[f64]) -> Option<Vec<f64>> {
        self.evaluate(z).map(|e| e.residual)
    }

    /// Starting point with `q = 0` and `B0` the median of the values implied
    /// by the flat density.
    pub fn initial_guess(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        let e = self.evaluate(&z).expect("flat density is admissible");
        let mut implied: Vec<f64> =
            e.v.iter()
                .zip(&e.cumulative)
                .map(|(&v, &r)| {
                    let lc = log_cosh(v) + (PI * r.min(1.0 - r)).sin().ln();
                    lc.exp().max(1.0 + 1e-4).acosh()
                })
                .collect();
        implied.sort_by(f64::total_cmp);
        z[self.n - 1] = implied[implied.len() / 2].ln();
        z
    }

    fn jacobian(&self, z: &[f64], r0: &[f64], exec: Execution) -> Option<DMatrix<f64>> {
        let cols = map_indexed(exec, z.len(), |j| {
            let h = 1e-7 * z[j].abs().max(1.0);
            let mut zp = z.to_vec();
            zp[j] += h;
            if let Some(rp) = self.residual(&zp) {
                return Some(rp.iter().zip(r0).map(|(a, b)| (a - b) / h).collect::<Vec<f64>>());
            }
            zp[j] = z[j] - h;
            let rm = self.residual(&zp)?;
            Some(r0.iter().zip(&rm).map(|(a, b)| (a - b) / h).collect())
        });
        let mut jac = DMatrix::zeros(r0.len(), z.len());
        for (j, c) in cols.into_iter().enumerate() {
            jac.set_column(j, &DVector::from_vec(c?));
        }
        Some(jac)
    }
}

fn lstsq(j: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let svd = j.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = smax * j.nrows().max(j.ncols()) as f64 * f64::EPSILON;
    svd.solve(rhs, cutoff).expect("SVD with both factors")
}

fn sq_norm(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

pub(crate) struct GaussNewtonOutcome {
    pub z: Vec<f64>,
    pub accepted_steps: usize,
}

/// Damped Gauss–Newton with Armijo backtracking and a Levenberg–Marquardt
/// fallback when the Gauss–Newton direction cannot be shortened into a
/// decrease. Ends at a stationary point of `|r|^2`.
pub(crate) fn gauss_newton(level: &Level, z0: Vec<f64>, opts: &SolveOptions) -> Result<GaussNewtonOutcome, SolverError> {
    let mut z = z0;
    let mut r = level.residual(&z).ok_or(SolverError::InvalidInitialGuess("residual undefined at the starting point".into()))?;
    let mut accepted = 0;
    for _ in 0..opts.max_iterations {
        let b0 = z[level.n() - 1].exp();
        if !(opts.b0_bounds.0..=opts.b0_bounds.1).contains(&b0) {
            return Err(SolverError::DegenerateConfiguration { b0 });
        }
        let jac = level.jacobian(&z, &r, opts.execution).ok_or(SolverError::NoConvergence {
            reason: "Jacobian undefined".into(),
            history: vec![],
            partial: None,
        })?;
        let rv = DVector::from_column_slice(&r);
        let dz = lstsq(&jac, &(-&rv));
        if dz.amax() < opts.step_tol {
            return Ok(GaussNewtonOutcome { z, accepted_steps: accepted });
        }
        let slope = rv.dot(&(&jac * &dz));
        let f0 = sq_norm(&r);
        let mut step = None;
        if slope < 0.0 {
            let mut lam = 1.0;
            while lam >= 1e-6 {
                let zn: Vec<f64> = z.iter().zip(dz.iter()).map(|(a, b)| a + lam * b).collect();
                if let Some(rn) = level.residual(&zn) {
                    if sq_norm(&rn) <= f0 + 2e-4 * lam * slope {
                        step = Some((zn, rn));
                        break;
                    }
                }
                lam *= 0.5;
            }
        }
        if step.is_none() {
            step = levenberg_marquardt_step(level, &z, &jac, &rv, f0);
        }
        match step {
            Some((zn, rn)) => {
                let stalled = f0 - sq_norm(&rn) <= 1e-12 * f0;
                z = zn;
                r = rn;
                accepted += 1;
                if stalled {
                    return Ok(GaussNewtonOutcome { z, accepted_steps: accepted });
                }
            }
            None => return Ok(GaussNewtonOutcome { z, accepted_steps: accepted }),
        }
    }
    Err(SolverError::NoConvergence {
        reason: format!("level {} hit the iteration cap of {}", level.n(), opts.max_iterations),
        history: vec![],
        partial: None,
    })
}

fn levenberg_marquardt_step(
    level: &Level,
    z: &[f64],
    jac: &DMatrix<f64>,
    r: &DVector<f64>,
    f0: f64,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let jtj = jac.transpose() * jac;
    let g = jac.transpose() * r;
    let scale = jtj.diagonal().amax().max(f64::MIN_POSITIVE);
    for mu in [1e-8, 1e-6, 1e-4, 1e-2, 1.0] {
        let mut a = jtj.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += mu * scale;
        }
        let dz = a.cholesky()?.solve(&(-&g));
        let zn: Vec<f64> = z.iter().zip(dz.iter()).map(|(a, b)| a + b).collect();
        if let Some(rn) = level.residual(&zn) {
            if sq_norm(&rn) < f0 * (1.0 - 1e-10) {
                return Some((zn, rn));
            }
        }
    }
    None
}
