//! The optimal-control side dual to the filter: backward ODE solutions for
//! deterministic control inputs, the associated estimator, the quadratic cost
//! functional, and Monte Carlo verification of the duality identity and of
//! the minimum-value identities.
//!
//! For a deterministic control the martingale term of the backward equation
//! vanishes and the dynamics reduce to the ODE `−dY/dt = AY + hU`, solved
//! exactly one step at a time with a precomputed exponential/integral pair.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::carre_du_champ;
use crate::error::{Error, Result};
use crate::filter::{quadratic_form, FilterEngine};
use crate::linalg;
use crate::model::{HmmModel, ProbabilityVector};
use crate::paths::{grid_steps, simulate_trial, ObservationGrid, RngStream, SamplePath};

/// A deterministic control law, materialized on a grid when needed.
#[derive(Debug, Clone, Copy)]
pub enum ControlLaw {
    Zero,
    Constant(f64),
    /// Pointwise function of time, evaluated at the left grid points.
    TimeFn(fn(f64) -> f64),
}

impl ControlLaw {
    pub fn sinusoid() -> Self {
        ControlLaw::TimeFn(f64::sin)
    }

    pub fn materialize(&self, n_steps: usize, dt: f64) -> ControlSignal {
        let values = (0..n_steps)
            .map(|k| match self {
                ControlLaw::Zero => 0.0,
                ControlLaw::Constant(c) => *c,
                ControlLaw::TimeFn(f) => f(k as f64 * dt),
            })
            .collect();
        ControlSignal { dt, values }
    }
}

/// A deterministic control input, one value per grid step.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl ControlSignal {
    pub fn zero(n_steps: usize, dt: f64) -> Self {
        ControlLaw::Zero.materialize(n_steps, dt)
    }

    pub fn n_steps(&self) -> usize {
        self.values.len()
    }

    /// `R · Σ_k U_k² · dt`, the control energy term of the running cost.
    pub fn energy(&self, r: f64) -> f64 {
        r * self.values.iter().map(|u| u * u).sum::<f64>() * self.dt
    }
}

/// Solution of the backward equation on the grid, indexed forward:
/// `y[k] ≈ Y(t_k)`, produced backward from `y[n] = f`.
#[derive(Debug, Clone)]
pub struct DualTrajectory {
    pub dt: f64,
    pub y: Vec<DVector<f64>>,
}

impl DualTrajectory {
    pub fn y0(&self) -> &DVector<f64> {
        &self.y[0]
    }

    pub fn terminal(&self) -> &DVector<f64> {
        self.y.last().expect("trajectory is nonempty")
    }

    pub fn n_steps(&self) -> usize {
        self.y.len() - 1
    }
}

/// Solves `−dY/dt = AY + hU` backward from `Y(T) = f` with the exact one-step
/// affine map `Y_k = e^{A·dt} Y_{k+1} + (∫₀^dt e^{As} ds) h U_k`.
pub fn solve_backward_ode(
    model: &HmmModel,
    f: &DVector<f64>,
    u: &ControlSignal,
    horizon: f64,
) -> Result<DualTrajectory> {
    if f.len() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "terminal function has length {}, model dimension is {}",
            f.len(),
            model.dim()
        )));
    }
    let n = grid_steps(horizon, u.dt)?;
    if u.n_steps() != n {
        return Err(Error::GridMismatch(format!(
            "control has {} steps, grid needs {n}",
            u.n_steps()
        )));
    }
    let (exp_a, integral) = linalg::exp_with_integral(model.rate(), u.dt);
    let forced = &integral * model.h();
    let mut y = vec![DVector::zeros(model.dim()); n + 1];
    y[n] = f.clone();
    for k in (0..n).rev() {
        y[k] = &exp_a * &y[k + 1] + &forced * u.values[k];
    }
    Ok(DualTrajectory { dt: u.dt, y })
}

/// The estimator `S_T = π₀(Y₀) − Σ_k U_k ΔZ_k` (left-point Itô sum).
pub fn estimator_value(
    pi0: &ProbabilityVector,
    dual: &DualTrajectory,
    u: &ControlSignal,
    obs: &ObservationGrid,
) -> Result<f64> {
    if u.n_steps() != obs.n_steps() || dual.n_steps() != obs.n_steps() {
        return Err(Error::GridMismatch(format!(
            "control ({}), dual ({}) and observation ({}) grids disagree",
            u.n_steps(),
            dual.n_steps(),
            obs.n_steps()
        )));
    }
    if (u.dt - obs.dt).abs() > 1e-12 * obs.dt.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "control step {} does not match observation step {}",
            u.dt, obs.dt
        )));
    }
    let stochastic: f64 = u
        .values
        .iter()
        .zip(&obs.increments)
        .map(|(uk, dz)| uk * dz)
        .sum();
    Ok(pi0.expect(dual.y0()) - stochastic)
}

/// Carré du champ of the dual trajectory at the left grid points, shared by
/// every trial of a Monte Carlo check.
fn gamma_table(model: &HmmModel, dual: &DualTrajectory) -> Vec<DVector<f64>> {
    (0..dual.n_steps())
        .map(|k| carre_du_champ(model, &dual.y[k]).expect("dimensions agree"))
        .collect()
}

fn pathwise_cost_parts(
    path: &SamplePath,
    dual: &DualTrajectory,
    gamma: &[DVector<f64>],
    mu_y0: f64,
) -> (f64, f64) {
    let n = dual.n_steps();
    let states = path.grid_states(dual.dt, n);
    let terminal = (dual.y0()[path.initial_state] - mu_y0).powi(2);
    let running_gamma: f64 = states
        .iter()
        .enumerate()
        .map(|(k, &x)| gamma[k][x])
        .sum::<f64>()
        * dual.dt;
    (terminal, running_gamma)
}

/// Cost of one signal path under a deterministic control:
/// `|Y₀(X₀) − μ(Y₀)|² + Σ_k [Γ(Y_k)(X_{t_k}) + R·U_k²]·dt`.
pub fn pathwise_cost(
    path: &SamplePath,
    dual: &DualTrajectory,
    u: &ControlSignal,
    model: &HmmModel,
    mu: &ProbabilityVector,
) -> Result<f64> {
    if u.n_steps() != dual.n_steps() {
        return Err(Error::GridMismatch(format!(
            "control has {} steps, dual trajectory has {}",
            u.n_steps(),
            dual.n_steps()
        )));
    }
    if (path.horizon - dual.n_steps() as f64 * dual.dt).abs() > 1e-9 * path.horizon.max(1.0) {
        return Err(Error::GridMismatch(
            "path horizon does not match the dual grid".into(),
        ));
    }
    let gamma = gamma_table(model, dual);
    let (terminal, running_gamma) = pathwise_cost_parts(path, dual, &gamma, mu.expect(dual.y0()));
    Ok(terminal + running_gamma + u.energy(model.r()))
}

/// The oscillation `max_{i,j} |f(i) − f(j)|`.
pub fn osc(f: &DVector<f64>) -> f64 {
    f.max() - f.min()
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo components of the control cost.
#[derive(Debug, Clone, Serialize)]
pub struct CostBreakdown {
    pub terminal: f64,
    pub running_gamma: f64,
    pub running_control: f64,
    pub total: f64,
    pub std_error: f64,
}

/// Outcome of one duality-identity verification.
#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    /// Estimator mean-square error `E|f(X_T) − S_T|²`.
    pub lhs: f64,
    pub lhs_se: f64,
    /// Cost plus squared prior mismatch.
    pub rhs: f64,
    pub rhs_se: f64,
    pub prior_mismatch_sq: f64,
    pub cost: CostBreakdown,
    /// Empirical first-order step-size coefficient from a dt-halving pilot.
    pub c_dt: f64,
    pub dt: f64,
    pub n_trials: usize,
    pub gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

struct DualityEstimate {
    lhs: f64,
    lhs_se: f64,
    rhs: f64,
    rhs_se: f64,
    prior_mismatch_sq: f64,
    cost: CostBreakdown,
}

#[allow(clippy::too_many_arguments)]
fn duality_estimate(
    model: &HmmModel,
    mu: &ProbabilityVector,
    pi0: &ProbabilityVector,
    law: &ControlLaw,
    f: &DVector<f64>,
    horizon: f64,
    dt: f64,
    n_trials: usize,
    seed: u64,
) -> Result<DualityEstimate> {
    let n = grid_steps(horizon, dt)?;
    let u = law.materialize(n, dt);
    let dual = solve_backward_ode(model, f, &u, horizon)?;
    let gamma = gamma_table(model, &dual);
    let mu_y0 = mu.expect(dual.y0());
    let control_energy = u.energy(model.r());

    let samples: Vec<Result<(f64, f64, f64)>> = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let stream = RngStream::new(seed, trial);
            let (path, obs) = simulate_trial(model, mu, horizon, dt, &stream)?;
            let s_t = estimator_value(pi0, &dual, &u, &obs)?;
            let lhs = (f[path.final_state()] - s_t).powi(2);
            let (terminal, running_gamma) = pathwise_cost_parts(&path, &dual, &gamma, mu_y0);
            Ok((lhs, terminal, running_gamma))
        })
        .collect();

    let mut lhs_samples = Vec::with_capacity(n_trials);
    let mut terminal_samples = Vec::with_capacity(n_trials);
    let mut gamma_samples = Vec::with_capacity(n_trials);
    for s in samples {
        let (l, t, g) = s?;
        lhs_samples.push(l);
        terminal_samples.push(t);
        gamma_samples.push(g);
    }
    let cost_samples: Vec<f64> = terminal_samples
        .iter()
        .zip(&gamma_samples)
        .map(|(t, g)| t + g + control_energy)
        .collect();

    let (lhs, lhs_se) = mean_and_se(&lhs_samples);
    let (cost_mean, cost_se) = mean_and_se(&cost_samples);
    let (terminal_mean, _) = mean_and_se(&terminal_samples);
    let (gamma_mean, _) = mean_and_se(&gamma_samples);
    let prior_mismatch_sq = (pi0.expect(dual.y0()) - mu_y0).powi(2);

    Ok(DualityEstimate {
        lhs,
        lhs_se,
        rhs: cost_mean + prior_mismatch_sq,
        rhs_se: cost_se,
        prior_mismatch_sq,
        cost: CostBreakdown {
            terminal: terminal_mean,
            running_gamma: gamma_mean,
            running_control: control_energy,
            total: terminal_mean + gamma_mean + control_energy,
            std_error: cost_se,
        },
    })
}

/// Verifies `E|f(X_T) − S_T|² = J(U) + |π₀(Y₀) − μ(Y₀)|²` by Monte Carlo.
///
/// Signal and noise are sampled under the `mu` prior while the estimator is
/// built from `pi0`. The pass tolerance combines three standard errors of
/// both sides with a first-order step-size allowance estimated from a
/// dt-halving pilot on the same seed.
#[allow(clippy::too_many_arguments)]
pub fn duality_check(
    model: &HmmModel,
    mu: &ProbabilityVector,
    pi0: &ProbabilityVector,
    law: &ControlLaw,
    f: &DVector<f64>,
    horizon: f64,
    dt: f64,
    n_trials: usize,
    seed: u64,
) -> Result<DualityReport> {
    let full = duality_estimate(model, mu, pi0, law, f, horizon, dt, n_trials, seed)?;
    let half = duality_estimate(model, mu, pi0, law, f, horizon, dt / 2.0, n_trials, seed)?;

    let gap = (full.lhs - full.rhs).abs();
    let gap_half = (half.lhs - half.rhs).abs();
    let c_dt = (2.0 * (gap - gap_half) / dt).max(0.0);
    let tolerance = 3.0 * (full.lhs_se + full.rhs_se) + c_dt * dt;
    Ok(DualityReport {
        lhs: full.lhs,
        lhs_se: full.lhs_se,
        rhs: full.rhs,
        rhs_se: full.rhs_se,
        prior_mismatch_sq: full.prior_mismatch_sq,
        cost: full.cost,
        c_dt,
        dt,
        n_trials,
        gap,
        tolerance,
        pass: gap <= tolerance,
    })
}

/// Outcome of the minimum-value identity verification: two independent
/// estimators of the terminal error variance must agree, and both must
/// respect the `¼·osc(f)²` bound.
#[derive(Debug, Clone, Serialize)]
pub struct ValueIdentityReport {
    /// Mean of `fᵀ Σ_T f` along the filter.
    pub via_covariance: f64,
    pub via_covariance_se: f64,
    /// Mean of `|f(X_T) − π_T(f)|²`.
    pub via_error: f64,
    pub via_error_se: f64,
    pub osc_bound: f64,
    pub c_dt: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub bound_ok: bool,
    pub n_trials: usize,
}

fn value_identity_estimate(
    model: &HmmModel,
    nu: &ProbabilityVector,
    f: &DVector<f64>,
    horizon: f64,
    dt: f64,
    n_trials: usize,
    seed: u64,
) -> Result<(f64, f64, f64, f64)> {
    let engine = FilterEngine::new(model, dt);
    let samples: Vec<Result<(f64, f64)>> = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let stream = RngStream::new(seed, trial);
            let (path, obs) = simulate_trial(model, nu, horizon, dt, &stream)?;
            let mut filter = engine.stepper(nu);
            for &dz in &obs.increments {
                filter.step(dz)?;
            }
            let pi_t = filter.posterior();
            let a = quadratic_form(&pi_t, f);
            let b = (f[path.final_state()] - pi_t.expect(f)).powi(2);
            Ok((a, b))
        })
        .collect();
    let mut a_samples = Vec::with_capacity(n_trials);
    let mut b_samples = Vec::with_capacity(n_trials);
    for s in samples {
        let (a, b) = s?;
        a_samples.push(a);
        b_samples.push(b);
    }
    let (a, a_se) = mean_and_se(&a_samples);
    let (b, b_se) = mean_and_se(&b_samples);
    Ok((a, a_se, b, b_se))
}

/// Verifies that `E(fᵀ Σ_T f)` and `E|f(X_T) − π_T(f)|²` agree, sampling and
/// filtering under the same prior `nu`.
pub fn value_identity_check(
    model: &HmmModel,
    nu: &ProbabilityVector,
    f: &DVector<f64>,
    horizon: f64,
    dt: f64,
    n_trials: usize,
    seed: u64,
) -> Result<ValueIdentityReport> {
    let (a, a_se, b, b_se) = value_identity_estimate(model, nu, f, horizon, dt, n_trials, seed)?;
    let (a2, _, b2, _) = value_identity_estimate(model, nu, f, horizon, dt / 2.0, n_trials, seed)?;
    let gap = (a - b).abs();
    let gap_half = (a2 - b2).abs();
    let c_dt = (2.0 * (gap - gap_half) / dt).max(0.0);
    let tolerance = 3.0 * (a_se + b_se) + c_dt * dt;
    let bound = 0.25 * osc(f).powi(2);
    Ok(ValueIdentityReport {
        via_covariance: a,
        via_covariance_se: a_se,
        via_error: b,
        via_error_se: b_se,
        osc_bound: bound,
        c_dt,
        gap,
        tolerance,
        pass: gap <= tolerance,
        bound_ok: a <= bound + 3.0 * a_se && b <= bound + 3.0 * b_se,
        n_trials,
    })
}

/// Diagnostic for the feedback form of the optimal control: the candidate
/// `Û_k = −hᵀ Σ_k Y_k` evaluated along the zero-control dual trajectory must
/// cost at least the estimated optimum (it lacks the martingale correction,
/// so only the lower-bound direction is asserted).
#[derive(Debug, Clone, Serialize)]
pub struct FeedbackReport {
    pub candidate_cost: f64,
    pub candidate_cost_se: f64,
    pub optimum_estimate: f64,
    pub optimum_estimate_se: f64,
    pub lower_bound_ok: bool,
    pub n_trials: usize,
}

pub fn feedback_residual_check(
    model: &HmmModel,
    nu: &ProbabilityVector,
    f: &DVector<f64>,
    horizon: f64,
    dt: f64,
    n_trials: usize,
    seed: u64,
) -> Result<FeedbackReport> {
    let n = grid_steps(horizon, dt)?;
    let u0 = ControlSignal::zero(n, dt);
    let dual = solve_backward_ode(model, f, &u0, horizon)?;
    let gamma = gamma_table(model, &dual);
    let h = model.h();
    let r = model.r();
    let nu_y0 = nu.expect(dual.y0());
    let h_y: Vec<DVector<f64>> = dual.y.iter().map(|y| h.component_mul(y)).collect();
    let engine = FilterEngine::new(model, dt);

    let samples: Vec<Result<(f64, f64)>> = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let stream = RngStream::new(seed, trial);
            let (path, obs) = simulate_trial(model, nu, horizon, dt, &stream)?;
            let mut filter = engine.stepper(nu);
            let states = path.grid_states(dt, n);
            let mut cost = (dual.y0()[path.initial_state] - nu_y0).powi(2);
            for k in 0..n {
                // hᵀ Σ_k Y_k = π(h∘Y) − π(h)·π(Y)
                let u_hat =
                    -(filter.expect(&h_y[k]) - filter.expect(h) * filter.expect(&dual.y[k]));
                cost += (gamma[k][states[k]] + r * u_hat * u_hat) * dt;
                filter.step(obs.increments[k])?;
            }
            let j_opt = quadratic_form(&filter.posterior(), f);
            Ok((cost, j_opt))
        })
        .collect();

    let mut cost_samples = Vec::with_capacity(n_trials);
    let mut opt_samples = Vec::with_capacity(n_trials);
    for s in samples {
        let (c, o) = s?;
        cost_samples.push(c);
        opt_samples.push(o);
    }
    let (cost, cost_se) = mean_and_se(&cost_samples);
    let (opt, opt_se) = mean_and_se(&opt_samples);
    Ok(FeedbackReport {
        candidate_cost: cost,
        candidate_cost_se: cost_se,
        optimum_estimate: opt,
        optimum_estimate_se: opt_se,
        lower_bound_ok: cost >= opt - 3.0 * (cost_se + opt_se),
        n_trials,
    })
}
