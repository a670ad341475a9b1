//! Exact simulation of the signal chain and of the observation increments on
//! a time grid.
//!
//! Randomness is organized as counter-based streams: a trial is addressed by
//! `(master_seed, stream_id)`, and within a trial the signal and the
//! observation noise draw from disjoint sub-streams. Refining the observation
//! grid therefore never changes the signal path.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{HmmModel, ProbabilityVector};

/// Addresses all random draws of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    /// Sub-stream for the signal (initial state and jump chain).
    pub fn signal_rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream(2 * self.stream_id);
        rng
    }

    /// Sub-stream for the observation noise.
    pub fn noise_rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream(2 * self.stream_id + 1);
        rng
    }
}

/// One exact trajectory of the signal chain: initial state plus jump records.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub initial_state: usize,
    /// Strictly increasing jump times in `(0, horizon]`.
    pub jump_times: Vec<f64>,
    pub jump_targets: Vec<usize>,
    pub horizon: f64,
}

impl SamplePath {
    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> usize {
        let k = self.jump_times.partition_point(|&s| s <= t);
        if k == 0 {
            self.initial_state
        } else {
            self.jump_targets[k - 1]
        }
    }

    /// States at the left grid points `0, dt, 2·dt, …, (n_steps−1)·dt`.
    pub fn grid_states(&self, dt: f64, n_steps: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(n_steps);
        let mut k = 0usize;
        let mut state = self.initial_state;
        for step in 0..n_steps {
            let t = step as f64 * dt;
            while k < self.jump_times.len() && self.jump_times[k] <= t {
                state = self.jump_targets[k];
                k += 1;
            }
            out.push(state);
        }
        out
    }

    /// State at the horizon.
    pub fn final_state(&self) -> usize {
        self.jump_targets
            .last()
            .copied()
            .unwrap_or(self.initial_state)
    }
}

/// Observation increments `ΔZ_k` over a uniform grid of step `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationGrid {
    pub dt: f64,
    pub increments: Vec<f64>,
}

impl ObservationGrid {
    pub fn n_steps(&self) -> usize {
        self.increments.len()
    }

    pub fn horizon(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }

    /// Merges `factor` consecutive increments, producing the grid of step
    /// `factor · dt` driven by the same observation path.
    pub fn coarsen(&self, factor: usize) -> Result<ObservationGrid> {
        if factor == 0 || !self.n_steps().is_multiple_of(factor) {
            return Err(Error::GridMismatch(format!(
                "cannot coarsen {} steps by factor {factor}",
                self.n_steps()
            )));
        }
        let increments = self
            .increments
            .chunks_exact(factor)
            .map(|c| c.iter().sum())
            .collect();
        Ok(ObservationGrid {
            dt: self.dt * factor as f64,
            increments,
        })
    }
}

/// Number of grid steps, requiring `dt` to divide `horizon`.
pub fn grid_steps(horizon: f64, dt: f64) -> Result<usize> {
    if !dt.is_finite() || dt <= 0.0 || !horizon.is_finite() || horizon < 0.0 {
        return Err(Error::GridMismatch(format!(
            "invalid grid: T = {horizon}, dt = {dt}"
        )));
    }
    let n = (horizon / dt).round() as usize;
    if (n as f64 * dt - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "dt = {dt} does not divide T = {horizon}"
        )));
    }
    Ok(n)
}

/// Categorical draw from a prior.
pub fn sample_initial<R: Rng>(prior: &ProbabilityVector, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for x in 0..prior.dim() {
        acc += prior.get(x);
        if u < acc {
            return x;
        }
    }
    prior.dim() - 1
}

/// Exact jump-chain simulation: in state `x` the holding time is
/// `Exp(−A(x,x))` and the jump lands on `j` with probability
/// `A(x,j)/(−A(x,x))`. A state with zero exit rate is absorbing.
pub fn sample_ctmc<R: Rng>(model: &HmmModel, x0: usize, horizon: f64, rng: &mut R) -> SamplePath {
    let a = model.rate();
    let d = model.dim();
    let mut x = x0;
    let mut t = 0.0;
    let mut jump_times = Vec::new();
    let mut jump_targets = Vec::new();
    loop {
        let rate = -a[(x, x)];
        if rate <= 0.0 {
            break;
        }
        let tau = Exp::new(rate).expect("positive rate").sample(rng);
        t += tau;
        if t > horizon {
            break;
        }
        let u: f64 = rng.random::<f64>() * rate;
        let mut acc = 0.0;
        let mut target = x;
        for j in 0..d {
            if j == x {
                continue;
            }
            acc += a[(x, j)];
            if u < acc {
                target = j;
                break;
            }
        }
        if target == x {
            // u landed on the last positive-rate entry due to rounding
            target = (0..d)
                .rev()
                .find(|&j| j != x && a[(x, j)] > 0.0)
                .expect("positive exit rate");
        }
        // a positive rate keeps the jump inside the (closed) class
        debug_assert!(a[(x, target)] > 0.0);
        jump_times.push(t);
        jump_targets.push(target);
        x = target;
    }
    SamplePath {
        initial_state: x0,
        jump_times,
        jump_targets,
        horizon,
    }
}

/// Per-step exact values of `∫ h(X_s) ds`, splitting each step at interior
/// jump times of the piecewise-constant integrand.
pub fn integrate_h(path: &SamplePath, h: &DVector<f64>, dt: f64) -> Result<Vec<f64>> {
    let n = grid_steps(path.horizon, dt)?;
    let mut out = Vec::with_capacity(n);
    let mut jump_idx = 0usize;
    let mut state = path.initial_state;
    for k in 0..n {
        let start = k as f64 * dt;
        let end = (k + 1) as f64 * dt;
        let mut acc = 0.0;
        let mut t = start;
        while jump_idx < path.jump_times.len() && path.jump_times[jump_idx] <= end {
            let s = path.jump_times[jump_idx];
            if s > t {
                acc += h[state] * (s - t);
                t = s;
            }
            state = path.jump_targets[jump_idx];
            jump_idx += 1;
        }
        acc += h[state] * (end - t);
        out.push(acc);
    }
    Ok(out)
}

/// Observation increments: exact signal integral per step plus independent
/// `N(0, R·dt)` noise.
pub fn sample_observations<R: Rng>(
    path: &SamplePath,
    model: &HmmModel,
    dt: f64,
    rng: &mut R,
) -> Result<ObservationGrid> {
    let signal = integrate_h(path, model.h(), dt)?;
    let sd = (model.r() * dt).sqrt();
    let increments = signal
        .into_iter()
        .map(|s| {
            let xi: f64 = StandardNormal.sample(rng);
            s + sd * xi
        })
        .collect();
    Ok(ObservationGrid { dt, increments })
}

/// One complete trial: initial state and path from the signal sub-stream,
/// observation noise from the noise sub-stream.
pub fn simulate_trial(
    model: &HmmModel,
    prior: &ProbabilityVector,
    horizon: f64,
    dt: f64,
    stream: &RngStream,
) -> Result<(SamplePath, ObservationGrid)> {
    let mut signal_rng = stream.signal_rng();
    let x0 = sample_initial(prior, &mut signal_rng);
    let path = sample_ctmc(model, x0, horizon, &mut signal_rng);
    let mut noise_rng = stream.noise_rng();
    let obs = sample_observations(&path, model, dt, &mut noise_rng)?;
    Ok((path, obs))
}
