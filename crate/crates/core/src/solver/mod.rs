//! Accessory-parameter solve for the comb-domain map.
//!
//! The interior density on the arc `I` is found by least-squares collocation
//! of the curve condition `cosh v(alpha) sin(pi R(alpha)) = cosh B0` with a
//! spectral density (see [`collocation`]), continued through a schedule of
//! levels until `B0` settles. The uniform slit discretization with point
//! masses at cell ends is available in [`slit`] as an analysis tool.

mod collocation;
pub mod slit;

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::geometry::{compute_angles, AnglePreimages, CombDomain, GeometryError, PreliminaryMap, ProblemSpec};
use crate::herglotz::{self, chain_sum, ktilde, ArcDensity, HerglotzError, HerglotzMeasure, Interior, MapScale, SmoothInterior};
use crate::scalar::golden_min;

use collocation::{gauss_newton, log_cosh, Level};

#[derive(Debug, Clone, Error)]
pub enum SolverError {
    #[error(transparent)]
    InvalidProblem(#[from] GeometryError),
    #[error(transparent)]
    Evaluation(#[from] HerglotzError),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid initial guess: {0}")]
    InvalidInitialGuess(String),
    #[error("no convergence: {reason}")]
    NoConvergence { reason: String, history: Vec<LevelRecord>, partial: Option<Box<SolveResult>> },
    #[error("degenerate configuration: B0 = {b0}")]
    DegenerateConfiguration { b0: f64 },
    #[error("discretization is not admissible: {0}")]
    NotAdmissible(String),
    #[error("tip {k} left the curve support: |Re w - u_c| = {offset}")]
    TipOutsideCurveSupport { k: usize, offset: f64 },
    #[error("no interior minimum of v on cell {k}")]
    MinimizationFailure { k: usize },
}

/// Numerical settings of [`solve_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Strictly increasing level sizes; level `n` has `n` unknowns.
    pub schedule: Vec<usize>,
    /// Cauchy tolerance: stop once `|B0(n') - B0(n)| < tol_b0 (1 + B0(n))`.
    pub tol_b0: f64,
    /// Largest admissible curve residual at the final level.
    pub curve_tol: f64,
    /// Gauss–Newton stops when the step is below this in max norm.
    pub step_tol: f64,
    pub max_iterations: usize,
    /// Clenshaw–Curtis degree per unknown.
    pub quad_factor: usize,
    /// Collocation angles per unknown.
    pub oversample: usize,
    /// Gauss nodes per unknown carrying the density in `h` and `f`
    /// (at least 96).
    pub node_factor: usize,
    /// `B0` outside this range is reported as degenerate.
    pub b0_bounds: (f64, f64),
    pub execution: Execution,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            schedule: vec![8, 16, 32, 64, 128],
            tol_b0: 1e-5,
            curve_tol: 1e-8,
            step_tol: 1e-11,
            max_iterations: 60,
            quad_factor: 5,
            oversample: 2,
            node_factor: 4,
            b0_bounds: (1e-8, 700.0),
            execution: Execution::default(),
        }
    }
}

impl SolveOptions {
    fn eval_nodes(&self, n: usize) -> usize {
        (self.node_factor * n).max(96)
    }
}

/// One row of the level history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub n: usize,
    pub b0: f64,
    pub max_residual: f64,
    /// `|B0(n) - B0(previous level)|`.
    pub b0_change: Option<f64>,
    pub steps: usize,
}

/// Starting point for a level: log-density coefficients `q_1..` and `B0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelGuess {
    pub q: Vec<f64>,
    pub b0: f64,
}

/// Image of a collocation angle: `w = u + iv` and its curve residual
/// `v - arccosh(cosh B0 / cos(u - u_c))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tip {
    pub alpha: f64,
    pub w: Complex64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSolution {
    pub n: usize,
    pub q: Vec<f64>,
    pub b0: f64,
    /// Accepted Gauss–Newton steps.
    pub steps: usize,
    pub tips: Vec<Tip>,
    pub max_residual: f64,
}

impl LevelSolution {
    pub fn guess(&self) -> LevelGuess {
        LevelGuess { q: self.q.clone(), b0: self.b0 }
    }
}

/// Problem data shared by all levels.
#[derive(Debug, Clone)]
pub(crate) struct Setup {
    pub spec: ProblemSpec,
    pub angles: AnglePreimages,
    /// `(alpha_j, k~_j)`, `j = 0..=p+1`.
    pub atoms: Vec<(f64, f64)>,
}

impl Setup {
    pub fn new(spec: &ProblemSpec) -> Result<Self, SolverError> {
        let angles = compute_angles(spec)?;
        let atoms = angles.alpha.iter().copied().zip(ktilde(spec)).collect();
        Ok(Setup { spec: spec.clone(), angles, atoms })
    }
}

fn level_tips(setup: &Setup, level: &Level, z: &[f64]) -> Result<(Vec<Tip>, f64), SolverError> {
    let n = level.n();
    let b0 = z[n - 1].exp();
    let e = level.evaluate(z).ok_or_else(|| SolverError::InvalidInitialGuess("residual undefined at the solution".into()))?;
    let density = level.density(&z[..n - 1]);
    let uc = setup.spec.center();
    let lcb = log_cosh(b0);
    let mut max_res: f64 = 0.0;
    let tips = level
        .collocation_thetas()
        .iter()
        .zip(e.cumulative.iter().zip(&e.v))
        .map(|(&t, (&r, &v))| {
            let s = (PI * r.min(1.0 - r)).sin();
            // arccosh(cosh B0 / s) from its logarithm, safe for large arguments
            let y = lcb - s.ln();
            let target = y + (1.0 - (-2.0 * y).exp()).max(0.0).sqrt().ln_1p();
            let residual = v - target;
            max_res = max_res.max(residual.abs());
            Tip { alpha: density.alpha_of(t), w: Complex64::new(uc + FRAC_PI_2 - PI * r, v), residual }
        })
        .collect();
    Ok((tips, max_res))
}

fn solve_level_in(setup: &Setup, n: usize, init: Option<&LevelGuess>, opts: &SolveOptions) -> Result<LevelSolution, SolverError> {
    if n < 2 {
        return Err(SolverError::InvalidSchedule(format!("level {n} is below the minimum of 2")));
    }
    let level = Level::new(setup, n, opts);
    let z0 = match init {
        None => level.initial_guess(),
        Some(g) => {
            if g.q.len() > n - 1 {
                return Err(SolverError::InvalidInitialGuess(format!("{} coefficients do not fit level {n}", g.q.len())));
            }
            if !(g.b0 > 0.0 && g.b0.is_finite()) || g.q.iter().any(|c| !c.is_finite()) {
                return Err(SolverError::InvalidInitialGuess(format!("B0 = {} must be positive and finite", g.b0)));
            }
            let mut z = g.q.clone();
            z.resize(n - 1, 0.0);
            z.push(g.b0.ln());
            z
        }
    };
    let out = gauss_newton(&level, z0, opts)?;
    let (tips, max_residual) = level_tips(setup, &level, &out.z)?;
    Ok(LevelSolution { n, q: out.z[..n - 1].to_vec(), b0: out.z[n - 1].exp(), steps: out.accepted_steps, tips, max_residual })
}

/// Solves one level from `init`, or from the flat density when `None`.
pub fn solve_level(
    spec: &ProblemSpec,
    n: usize,
    init: Option<&LevelGuess>,
    opts: &SolveOptions,
) -> Result<LevelSolution, SolverError> {
    let setup = Setup::new(spec)?;
    solve_level_in(&setup, n, init, opts)
}

/// Runs the schedule with warm starts. Returns `NoConvergence` (carrying the
/// history and the finest level reached) when the Cauchy test never passes.
pub fn solve(spec: &ProblemSpec, schedule: &[usize], tol_b0: f64) -> Result<SolveResult, SolverError> {
    let opts = SolveOptions { schedule: schedule.to_vec(), tol_b0, ..SolveOptions::default() };
    let result = solve_with(spec, &opts)?;
    if result.converged {
        Ok(result)
    } else {
        Err(SolverError::NoConvergence {
            reason: format!("Cauchy test not met within schedule {schedule:?}"),
            history: result.history.clone(),
            partial: Some(Box::new(result)),
        })
    }
}

/// Like [`solve`] but returns an unconverged result with `converged = false`
/// instead of an error.
pub fn solve_with(spec: &ProblemSpec, opts: &SolveOptions) -> Result<SolveResult, SolverError> {
    let setup = Setup::new(spec)?;
    if opts.schedule.is_empty() || opts.schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SolverError::InvalidSchedule(format!("{:?} is not strictly increasing", opts.schedule)));
    }
    if opts.tol_b0.is_nan() || opts.tol_b0 <= 0.0 {
        return Err(SolverError::InvalidSchedule("tol_b0 must be positive".into()));
    }
    let mut history: Vec<LevelRecord> = Vec::new();
    let mut prev: Option<LevelSolution> = None;
    let mut converged = false;
    for &n in &opts.schedule {
        let guess = prev.as_ref().map(LevelSolution::guess);
        let sol = match solve_level_in(&setup, n, guess.as_ref(), opts) {
            Ok(s) => s,
            Err(SolverError::NoConvergence { reason, .. }) => {
                return Err(SolverError::NoConvergence { reason, history, partial: None });
            }
            Err(e) => return Err(e),
        };
        let change = prev.as_ref().map(|p| (sol.b0 - p.b0).abs());
        history.push(LevelRecord { n, b0: sol.b0, max_residual: sol.max_residual, b0_change: change, steps: sol.steps });
        let cauchy = match (&prev, change) {
            (Some(p), Some(d)) => d < opts.tol_b0 * (1.0 + p.b0),
            _ => false,
        };
        converged = cauchy && sol.max_residual < opts.curve_tol;
        prev = Some(sol);
        if converged {
            break;
        }
    }
    let last = prev.expect("non-empty schedule");
    SolveResult::assemble(setup, last, history, converged, opts)
}

/// Converged (or best available) map data.
#[derive(Debug, Clone)]
pub struct SolveResult {
    setup: Setup,
    b0: f64,
    level: LevelSolution,
    density: ArcDensity,
    scale: MapScale,
    measure: HerglotzMeasure,
    history: Vec<LevelRecord>,
    converged: bool,
    quad_factor: usize,
    oversample: usize,
    eval_nodes: usize,
}

/// Serializable form of a [`SolveResult`]; the map is rebuilt from `q`
/// and `b0` on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub problem: ProblemSpec,
    pub converged: bool,
    pub b0: f64,
    pub l: f64,
    pub level: usize,
    pub q: Vec<f64>,
    pub quad_factor: usize,
    pub oversample: usize,
    pub eval_nodes: usize,
    pub max_curve_residual: f64,
    pub width_residual: f64,
    pub mass_residual: f64,
    pub history: Vec<LevelRecord>,
}

impl SolveResult {
    fn assemble(
        setup: Setup,
        level: LevelSolution,
        history: Vec<LevelRecord>,
        converged: bool,
        opts: &SolveOptions,
    ) -> Result<Self, SolverError> {
        let order = opts.quad_factor * level.n;
        let mut coeffs = vec![0.0];
        coeffs.extend_from_slice(&level.q);
        let density = ArcDensity::for_problem(&setup.spec, &setup.angles, coeffs, order);
        let eval_nodes = opts.eval_nodes(level.n);
        let interior_sin: f64 = density.discretize(eval_nodes).iter().map(|(b, t)| t * b.sin()).sum();
        let c = 0.5 / (chain_sum(&setup.angles, &setup.spec) + interior_sin);
        let smooth = SmoothInterior::new(density.clone(), c, eval_nodes);
        let measure = HerglotzMeasure::with_chain(&setup.spec, &setup.angles, c, Interior::Smooth(smooth))?;
        let scale = MapScale::new(&setup.spec, &setup.angles, c);
        Ok(SolveResult {
            b0: level.b0,
            setup,
            level,
            density,
            scale,
            measure,
            history,
            converged,
            quad_factor: opts.quad_factor,
            oversample: opts.oversample,
            eval_nodes,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.setup.spec
    }

    pub fn angles(&self) -> &AnglePreimages {
        &self.setup.angles
    }

    pub fn map(&self) -> PreliminaryMap {
        PreliminaryMap::new(self.setup.spec.a)
    }

    /// Converged curve parameter `B0*`.
    pub fn b0_star(&self) -> f64 {
        self.b0
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn history(&self) -> &[LevelRecord] {
        &self.history
    }

    pub fn level(&self) -> &LevelSolution {
        &self.level
    }

    pub fn density(&self) -> &ArcDensity {
        &self.density
    }

    pub fn scale(&self) -> &MapScale {
        &self.scale
    }

    pub fn measure(&self) -> &HerglotzMeasure {
        &self.measure
    }

    /// Collocation images on the curve at the final level.
    pub fn tips(&self) -> &[Tip] {
        &self.level.tips
    }

    pub fn max_curve_residual(&self) -> f64 {
        self.level.max_residual
    }

    /// `C1 sum mu_k / sin(beta_k) - 1` over the interior point masses.
    pub fn width_residual(&self) -> f64 {
        let s: f64 = match self.measure.interior() {
            Interior::Smooth(sm) => sm.nodes().iter().map(|p| p.weight / p.angle.sin()).sum(),
            _ => 0.0,
        };
        self.scale.c1 * s - 1.0
    }

    /// `2 sum lambda_j + 2 sum mu_k - 1`.
    pub fn mass_residual(&self) -> f64 {
        self.measure.total_mass() - 1.0
    }

    /// Ray base heights `B_1..B_p`: the minimum of `v` on the boundary arc
    /// that each ray `l_j` is the image of.
    pub fn ray_heights(&self) -> Result<Vec<f64>, SolverError> {
        let spec = &self.setup.spec;
        let al = &self.setup.angles.alpha;
        let (q, p) = (spec.q(), spec.p());
        let mut arcs = Vec::with_capacity(p);
        for j in 1..=q {
            arcs.push((al[j - 1], al[j]));
        }
        for j in q + 1..=p {
            arcs.push((al[j], al[j + 1]));
        }
        let mut out = Vec::with_capacity(p);
        for (lo, hi) in arcs {
            let eps = 1e-9 * (hi - lo);
            let mut failure = None;
            let (_, v) = golden_min(
                |t| match herglotz::circle_v(t, &self.measure, &self.scale) {
                    Ok(v) => v,
                    Err(e) => {
                        failure = Some(e);
                        f64::INFINITY
                    }
                },
                lo + eps,
                hi - eps,
                1e-10,
            );
            if let Some(e) = failure {
                return Err(e.into());
            }
            out.push(v);
        }
        Ok(out)
    }

    /// The comb domain with `B = (B0*, B_1, ..., B_p)`.
    pub fn comb_domain(&self) -> Result<CombDomain, SolverError> {
        let mut b = vec![self.b0];
        b.extend(self.ray_heights()?);
        Ok(CombDomain::new(&self.setup.spec, b))
    }

    pub fn record(&self) -> SolveRecord {
        SolveRecord {
            problem: self.setup.spec.clone(),
            converged: self.converged,
            b0: self.b0,
            l: 1.0 / self.b0.cosh(),
            level: self.level.n,
            q: self.level.q.clone(),
            quad_factor: self.quad_factor,
            oversample: self.oversample,
            eval_nodes: self.eval_nodes,
            max_curve_residual: self.max_curve_residual(),
            width_residual: self.width_residual(),
            mass_residual: self.mass_residual(),
            history: self.history.clone(),
        }
    }

    /// Rebuilds the map from a record without re-solving.
    pub fn from_record(rec: &SolveRecord) -> Result<Self, SolverError> {
        let setup = Setup::new(&rec.problem)?;
        if rec.q.len() + 1 != rec.level || rec.level < 2 {
            return Err(SolverError::InvalidInitialGuess(format!(
                "record has {} coefficients for level {}",
                rec.q.len(),
                rec.level
            )));
        }
        let opts = SolveOptions {
            quad_factor: rec.quad_factor,
            oversample: rec.oversample,
            node_factor: rec.eval_nodes.div_ceil(rec.level),
            ..SolveOptions::default()
        };
        let level = Level::new(&setup, rec.level, &opts);
        let mut z = rec.q.clone();
        z.push(rec.b0.ln());
        let (tips, max_residual) = level_tips(&setup, &level, &z)?;
        let sol = LevelSolution { n: rec.level, q: rec.q.clone(), b0: rec.b0, steps: 0, tips, max_residual };
        let mut out = SolveResult::assemble(setup, sol, rec.history.clone(), rec.converged, &opts)?;
        out.b0 = rec.b0;
        out.eval_nodes = rec.eval_nodes;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn golden() -> ProblemSpec {
        ProblemSpec::origin_only(0.25, 1, 1)
    }

    #[test]
    fn golden_level_64() {
        let sol = solve_level(&golden(), 64, None, &SolveOptions::default()).unwrap();
        assert!((sol.b0 - 9f64.acosh()).abs() < 1e-3);
        assert!(sol.max_residual < 1e-8, "{}", sol.max_residual);
    }

    #[test]
    fn restart_is_a_fixed_point() {
        let opts = SolveOptions::default();
        let first = solve_level(&golden(), 16, None, &opts).unwrap();
        let again = solve_level(&golden(), 16, Some(&first.guess()), &opts).unwrap();
        assert_eq!(again.steps, 0);
        assert_eq!(again.max_residual, first.max_residual);
        assert_eq!(again.b0, first.b0);
    }

    #[test]
    fn infeasible_guess_is_rejected() {
        let opts = SolveOptions::default();
        let too_long = LevelGuess { q: vec![0.0; 20], b0: 2.0 };
        assert!(matches!(solve_level(&golden(), 8, Some(&too_long), &opts), Err(SolverError::InvalidInitialGuess(_))));
        let negative = LevelGuess { q: vec![], b0: -1.0 };
        assert!(matches!(solve_level(&golden(), 8, Some(&negative), &opts), Err(SolverError::InvalidInitialGuess(_))));
    }

    #[test]
    fn golden_schedule_converges() {
        let r = solve(&golden(), &[8, 16, 32, 64, 128], 1e-4).unwrap();
        assert!(r.converged());
        assert_abs_diff_eq!(r.b0_star(), 9f64.acosh(), epsilon = 1e-3);
        assert!(r.width_residual().abs() < 1e-10);
        assert!(r.mass_residual().abs() < 1e-10);
    }

    #[test]
    fn schedules_agree() {
        let a = solve(&golden(), &[8, 16, 32, 64, 128], 1e-5).unwrap();
        let b = solve(&golden(), &[4, 12, 40, 128], 1e-5).unwrap();
        assert!((a.b0_star() - b.b0_star()).abs() < 2e-5);
    }

    #[test]
    fn unconverged_schedule_reports_history() {
        match solve(&golden(), &[4], 1e-5) {
            Err(SolverError::NoConvergence { history, partial, .. }) => {
                assert_eq!(history.len(), 1);
                assert!(partial.is_some());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_schedule() {
        assert!(matches!(solve(&golden(), &[16, 8], 1e-5), Err(SolverError::InvalidSchedule(_))));
        assert!(matches!(solve(&golden(), &[], 1e-5), Err(SolverError::InvalidSchedule(_))));
    }

    #[test]
    fn record_round_trip() {
        let r = solve(&golden(), &[8, 16, 32], 1e-5).unwrap();
        let back = SolveResult::from_record(&r.record()).unwrap();
        assert_eq!(back.b0_star(), r.b0_star());
        assert_eq!(back.record(), r.record());
    }

    #[test]
    fn lambda_one_in_interval() {
        let spec = ProblemSpec { a: 0.6, inner_poles: vec![0.3], outer_poles: vec![], k0: 1, k: vec![1], m: 1 };
        let r = solve(&spec, &[8, 16, 32, 64], 1e-5).unwrap();
        let (lo, hi) = r.scale().lambda1_interval.unwrap();
        let lambda1 = r.measure().atoms()[1].weight;
        assert!(lo < lambda1 && lambda1 < hi);
        assert!(r.scale().a.unwrap() > 1.0);
    }
}
