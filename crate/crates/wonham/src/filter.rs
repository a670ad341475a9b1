//! Discrete-time integration of the Wonham filter via a split-step scheme:
//! exact prior propagation by the matrix exponential followed by an exact
//! one-step Bayes correction with the Gaussian increment likelihood.
//!
//! The scheme preserves positivity and normalization unconditionally, is
//! exact for zero rates and for uninformative observation functions, and its
//! unnormalized update is linear in the prior, so mixture/splitting
//! identities hold to machine precision. A plain Euler–Maruyama
//! discretization of the posterior equation is provided for step-size
//! comparison studies only.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{HmmModel, ProbabilityVector};
use crate::paths::ObservationGrid;

/// Gridded filter output: posteriors `π_k` for `k = 0..n_steps` and the
/// innovation increments `ΔI_k = ΔZ_k − π_k(h)·dt` (pre-update posterior,
/// matching the left-point convention of the time integral).
#[derive(Debug, Clone)]
pub struct FilterTrajectory {
    pub dt: f64,
    pub posteriors: Vec<ProbabilityVector>,
    pub innovations: Vec<f64>,
    pub prior_label: String,
}

impl FilterTrajectory {
    pub fn n_steps(&self) -> usize {
        self.innovations.len()
    }

    pub fn final_posterior(&self) -> &ProbabilityVector {
        self.posteriors
            .last()
            .expect("trajectory holds the prior at least")
    }

    /// Posterior at grid time `t = k·dt`.
    pub fn at_time(&self, t: f64) -> Result<&ProbabilityVector> {
        let k = (t / self.dt).round() as usize;
        if (k as f64 * self.dt - t).abs() > 1e-9 * t.max(1.0) || k >= self.posteriors.len() {
            return Err(Error::GridMismatch(format!(
                "time {t} is not on the trajectory grid"
            )));
        }
        Ok(&self.posteriors[k])
    }
}

/// Posterior covariances `Σ_k = diag(π_k) − π_k π_kᵀ`.
#[derive(Debug, Clone)]
pub struct CovarianceSequence {
    pub matrices: Vec<DMatrix<f64>>,
}

/// `P = exp(A·dt)` by scaling-and-squaring, computed once per `(model, dt)`.
/// Tiny negative entries from rounding are clamped to zero.
pub fn transition_matrix(model: &HmmModel, dt: f64) -> DMatrix<f64> {
    let mut p = crate::linalg::matrix_exp(model.rate(), dt);
    for x in p.iter_mut() {
        debug_assert!(*x >= -1e-12, "matrix exponential entry {x} below -1e-12");
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    p
}

/// Everything the split step needs, precomputed once per `(model, dt)` and
/// shared read-only across the trials of an experiment.
#[derive(Debug, Clone)]
pub struct FilterEngine {
    dt: f64,
    dim: usize,
    p_transpose: DMatrix<f64>,
    h: DVector<f64>,
    r: f64,
    /// `−½ h(x)²·dt/R`, the deterministic part of the log weights.
    log_correction: DVector<f64>,
}

impl FilterEngine {
    pub fn new(model: &HmmModel, dt: f64) -> Self {
        let p_transpose = transition_matrix(model, dt).transpose();
        let h = model.h().clone();
        let r = model.r();
        let log_correction = h.map(|hx| -0.5 * hx * hx * dt / r);
        Self {
            dt,
            dim: model.dim(),
            p_transpose,
            h,
            r,
            log_correction,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn stepper(&self, prior: &ProbabilityVector) -> FilterStepper<'_> {
        FilterStepper {
            engine: self,
            pi: prior.entries().clone(),
            scratch: DVector::zeros(self.dim),
        }
    }
}

/// In-place filter iteration; one instance per trial, no per-step allocation.
#[derive(Debug, Clone)]
pub struct FilterStepper<'e> {
    engine: &'e FilterEngine,
    pi: DVector<f64>,
    scratch: DVector<f64>,
}

impl FilterStepper<'_> {
    pub fn distribution(&self) -> &DVector<f64> {
        &self.pi
    }

    pub fn expect(&self, f: &DVector<f64>) -> f64 {
        self.pi.dot(f)
    }

    pub fn posterior(&self) -> ProbabilityVector {
        ProbabilityVector::from_normalized(self.pi.clone())
    }

    /// Innovation increment of the upcoming step (pre-update posterior).
    pub fn innovation(&self, dz: f64) -> f64 {
        dz - self.pi.dot(&self.engine.h) * self.engine.dt
    }

    pub fn step(&mut self, dz: f64) -> Result<()> {
        let e = self.engine;
        self.scratch.gemv(1.0, &e.p_transpose, &self.pi, 0.0);
        let mut max_logw = f64::NEG_INFINITY;
        for x in 0..e.dim {
            let lw = e.h[x] * dz / e.r + e.log_correction[x];
            self.pi[x] = lw;
            if lw > max_logw {
                max_logw = lw;
            }
        }
        let mut total = 0.0;
        for x in 0..e.dim {
            let v = (self.pi[x] - max_logw).exp() * self.scratch[x];
            self.pi[x] = v;
            total += v;
        }
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::DegenerateLikelihood);
        }
        self.pi /= total;
        Ok(())
    }
}

/// One split step: prior propagation `P^T π` followed by the Bayes reweight
/// with `w(x) = exp(h(x)·ΔZ/R − ½ h(x)²·dt/R)`, computed in the log domain
/// with max subtraction.
pub fn bayes_step(
    pi: &ProbabilityVector,
    dz: f64,
    model: &HmmModel,
    dt: f64,
    p: &DMatrix<f64>,
) -> Result<ProbabilityVector> {
    let h = model.h();
    let r = model.r();
    let predicted = p.tr_mul(pi.entries());
    let mut logw = DVector::from_fn(model.dim(), |x, _| (h[x] * dz - 0.5 * h[x] * h[x] * dt) / r);
    let m = logw.max();
    logw.add_scalar_mut(-m);
    let unnormalized = logw.map(f64::exp).component_mul(&predicted);
    let total = unnormalized.sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::DegenerateLikelihood);
    }
    Ok(ProbabilityVector::from_normalized(unnormalized / total))
}

/// Runs the split-step filter over an observation grid, recording the full
/// posterior and innovation sequences.
pub fn run_wonham(
    model: &HmmModel,
    prior: &ProbabilityVector,
    obs: &ObservationGrid,
    label: &str,
) -> Result<FilterTrajectory> {
    if prior.dim() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "prior has dimension {}, model has {}",
            prior.dim(),
            model.dim()
        )));
    }
    let engine = FilterEngine::new(model, obs.dt);
    let mut stepper = engine.stepper(prior);
    let mut posteriors = Vec::with_capacity(obs.n_steps() + 1);
    let mut innovations = Vec::with_capacity(obs.n_steps());
    posteriors.push(prior.clone());
    for &dz in &obs.increments {
        innovations.push(stepper.innovation(dz));
        stepper.step(dz)?;
        posteriors.push(stepper.posterior());
    }
    Ok(FilterTrajectory {
        dt: obs.dt,
        posteriors,
        innovations,
        prior_label: label.to_string(),
    })
}

/// Euler–Maruyama discretization of the posterior equation, with clamping and
/// renormalization to keep iterates on the simplex. For step-size comparison
/// against the split-step scheme; not used by any verification check.
pub fn run_euler_maruyama(
    model: &HmmModel,
    prior: &ProbabilityVector,
    obs: &ObservationGrid,
    label: &str,
) -> Result<FilterTrajectory> {
    let dt = obs.dt;
    let a_t = model.rate().transpose();
    let h = model.h();
    let r = model.r();
    let mut posteriors = Vec::with_capacity(obs.n_steps() + 1);
    let mut innovations = Vec::with_capacity(obs.n_steps());
    posteriors.push(prior.clone());
    let mut pi = prior.entries().clone();
    for &dz in &obs.increments {
        let pih = pi.dot(h);
        innovations.push(dz - pih * dt);
        let gain = pi.component_mul(h) - &pi * pih;
        let mut next = &pi + (&a_t * &pi) * dt + gain * ((dz - pih * dt) / r);
        for x in next.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let total = next.sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::DegenerateLikelihood);
        }
        pi = next / total;
        posteriors.push(ProbabilityVector::from_normalized(pi.clone()));
    }
    Ok(FilterTrajectory {
        dt,
        posteriors,
        innovations,
        prior_label: label.to_string(),
    })
}

/// Covariance matrix `diag(π) − π πᵀ` of one posterior.
pub fn covariance_matrix(pi: &ProbabilityVector) -> DMatrix<f64> {
    let e = pi.entries();
    let d = pi.dim();
    let mut m = -(e * e.transpose());
    for x in 0..d {
        m[(x, x)] += e[x];
    }
    m
}

/// Per-step covariances of a trajectory.
pub fn covariance_sequence(traj: &FilterTrajectory) -> CovarianceSequence {
    CovarianceSequence {
        matrices: traj.posteriors.iter().map(covariance_matrix).collect(),
    }
}

/// `fᵀ(diag(π) − π πᵀ)f`, evaluated in the stable form `π(f²) − π(f)²`.
pub fn quadratic_form(pi: &ProbabilityVector, f: &DVector<f64>) -> f64 {
    let mean = pi.expect(f);
    let second = pi.expect(&f.component_mul(f));
    second - mean * mean
}
