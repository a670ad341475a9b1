//! Shared test fixtures and independent oracles.
//!
//! The oracles here deliberately avoid the library's computation paths: the
//! controllable-subspace dimension is recomputed by explicit word
//! enumeration and a rank decision, and the static binary observation model
//! is integrated in closed form against the Gaussian observation law.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use wonham::model::HmmModel;

#[allow(dead_code)]
pub fn two_state_irreducible() -> HmmModel {
    let mut m = HmmModel::new(
        DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 2.0, -2.0]),
        vec![0.0, 1.0],
        1.0,
    )
    .unwrap();
    m.set_name("irreducible-2");
    m
}

#[allow(dead_code)]
pub fn static_binary(r: f64) -> HmmModel {
    let mut m = HmmModel::new(DMatrix::zeros(2, 2), vec![0.0, 1.0], r).unwrap();
    m.set_name("static-binary");
    m
}

#[allow(dead_code)]
pub fn constant_h(r: f64) -> HmmModel {
    let mut m = HmmModel::new(DMatrix::zeros(2, 2), vec![1.0, 1.0], r).unwrap();
    m.set_name("constant-h");
    m
}

#[allow(dead_code)]
pub fn twin_chain() -> HmmModel {
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            -1.0, 1.0, 0.0, 0.0, //
            1.0, -1.0, 0.0, 0.0, //
            0.0, 0.0, -1.0, 1.0, //
            0.0, 0.0, 1.0, -1.0,
        ],
    );
    let mut m = HmmModel::new(a, vec![0.0, 1.0, 0.0, 1.0], 1.0).unwrap();
    m.set_name("twin-chain");
    m
}

#[allow(dead_code)]
pub fn two_class_three_state() -> HmmModel {
    let a = DMatrix::from_row_slice(
        3,
        3,
        &[
            -1.0, 1.0, 0.0, //
            1.0, -1.0, 0.0, //
            0.0, 0.0, 0.0,
        ],
    );
    let mut m = HmmModel::new(a, vec![0.0, 1.0, 2.0], 1.0).unwrap();
    m.set_name("two-class-3");
    m
}

/// Random valid model: 1–3 ergodic classes built from intra-class cycles with
/// extra sprinkled edges, states shuffled, and one of several observation
/// patterns (generic, globally constant, constant per class, quantized).
#[allow(dead_code)]
pub fn random_model(rng: &mut ChaCha12Rng, d_max: usize) -> HmmModel {
    let d = rng.random_range(2..=d_max);
    let m = rng.random_range(1..=d.min(3));
    let mut sizes = vec![1usize; m];
    for _ in 0..(d - m) {
        let k = rng.random_range(0..m);
        sizes[k] += 1;
    }

    // random relabeling of states
    let mut perm: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }

    let mut a = DMatrix::<f64>::zeros(d, d);
    let mut class_of = vec![0usize; d];
    let mut offset = 0;
    for (k, &size) in sizes.iter().enumerate() {
        let members: Vec<usize> = (offset..offset + size).map(|i| perm[i]).collect();
        for &s in &members {
            class_of[s] = k;
        }
        if size > 1 {
            for i in 0..size {
                let from = members[i];
                let to = members[(i + 1) % size];
                a[(from, to)] = 0.2 + 1.8 * rng.random::<f64>();
            }
            for i in 0..size {
                for j in 0..size {
                    if i != j && rng.random::<f64>() < 0.3 {
                        a[(members[i], members[j])] += 1.5 * rng.random::<f64>();
                    }
                }
            }
        }
        offset += size;
    }

    for i in 0..d {
        let off: f64 = (0..d).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        a[(i, i)] = -off;
    }

    let style = rng.random_range(0..4u32);
    let h: Vec<f64> = match style {
        0 => (0..d).map(|_| -1.0 + 2.0 * rng.random::<f64>()).collect(),
        1 => {
            let c = -1.0 + 2.0 * rng.random::<f64>();
            vec![c; d]
        }
        2 => {
            let levels: Vec<f64> = (0..m)
                .map(|k| k as f64 + rng.random::<f64>() * 0.5)
                .collect();
            (0..d).map(|s| levels[class_of[s]]).collect()
        }
        _ => (0..d)
            .map(|_| (rng.random::<f64>() * 4.0).round() / 2.0)
            .collect(),
    };
    HmmModel::new(a, h, 1.0).unwrap()
}

/// Numerical rank of a set of unit columns.
#[allow(dead_code)]
fn rank_of_columns(cols: &[DVector<f64>], d: usize, tol: f64) -> usize {
    if cols.is_empty() {
        return 0;
    }
    let mut m = DMatrix::<f64>::zeros(d, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    let svd = m.svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    svd.singular_values
        .iter()
        .filter(|&&s| s > tol * smax)
        .count()
}

/// Brute-force oracle for the controllable-subspace dimension: the rank of
/// all words of length up to `d²` in `{A, diag(h)}` applied to the constant
/// vector. Enumeration stops early once a full word length adds no rank,
/// which cannot change the result because the spanned subspace is then closed
/// under both generators.
///
/// Each level is kept as unit vectors and a word whose image is numerically
/// zero (norm below `1e-12` times the generator amplification) is dropped;
/// normalizing rounding dust would otherwise manufacture fake directions.
#[allow(dead_code)]
pub fn controllable_dim_oracle(model: &HmmModel, tol: f64) -> usize {
    let d = model.dim();
    let a = model.rate();
    let h = model.h();
    let amplification = wonham::linalg::inf_norm(a).max(h.amax()).max(1.0);
    let zero_floor = 1e-12 * amplification;

    let ones = DVector::from_element(d, 1.0 / (d as f64).sqrt());
    let mut all: Vec<DVector<f64>> = vec![ones.clone()];
    let mut level: Vec<DVector<f64>> = vec![ones];
    let mut rank = rank_of_columns(&all, d, tol);
    for _len in 1..=(d * d) {
        if rank == d {
            break;
        }
        let mut next: Vec<DVector<f64>> = Vec::with_capacity(level.len() * 2);
        for v in &level {
            next.push(a * v);
        }
        for v in &level {
            next.push(v.component_mul(h));
        }
        next.retain(|v| v.norm() > zero_floor);
        for v in next.iter_mut() {
            let n = v.norm();
            *v /= n;
        }
        all.extend(next.iter().cloned());
        let new_rank = rank_of_columns(&all, d, tol);
        if new_rank == rank {
            break;
        }
        rank = new_rank;
        level = next;
    }
    rank
}

/// Expectation of `g(Z)` for `Z ~ N(mean, var)` by Simpson's rule over
/// `mean ± 8σ`.
#[allow(dead_code)]
pub fn gaussian_expect(mean: f64, var: f64, g: impl Fn(f64) -> f64) -> f64 {
    let sd = var.sqrt();
    let lo = mean - 8.0 * sd;
    let hi = mean + 8.0 * sd;
    let n = 4000usize; // even
    let step = (hi - lo) / n as f64;
    let density = |z: f64| {
        let u = (z - mean) / sd;
        (-0.5 * u * u).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
    };
    let mut sum = g(lo) * density(lo) + g(hi) * density(hi);
    for i in 1..n {
        let z = lo + i as f64 * step;
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * g(z) * density(z);
    }
    sum * step / 3.0
}

/// Posterior mass of state 2 for the static binary model (`A = 0`,
/// `h = (0,1)`, noise covariance `r`) given `Z_T = z` under prior `rho`.
#[allow(dead_code)]
pub fn binary_posterior(rho: (f64, f64), z: f64, t: f64, r: f64) -> f64 {
    let log_odds = (rho.1 / rho.0).ln() + (z - 0.5 * t) / r;
    if log_odds >= 0.0 {
        1.0 / (1.0 + (-log_odds).exp())
    } else {
        let e = log_odds.exp();
        e / (1.0 + e)
    }
}

/// Closed-form statistics of the static binary detection problem:
/// `(correct_fraction, mse_class1, stability_gap_for_f = (1,0))`.
///
/// Signal sampled under `mu`, posteriors computed under `mu` and `nu`.
#[allow(dead_code)]
pub fn binary_detection_oracle(mu: (f64, f64), nu: (f64, f64), t: f64, r: f64) -> (f64, f64, f64) {
    let var = r * t;
    let means = [0.0, t]; // E[Z_T | X = x] for h = (0,1)
    let mut correct = 0.0;
    let mut mse = 0.0;
    let mut gap = 0.0;
    let weights = [mu.0, mu.1];
    for x in 0..2 {
        let correct_x = gaussian_expect(means[x], var, |z| {
            let p2 = binary_posterior(nu, z, t, r);
            let picked_two = p2 > 0.5;
            if (x == 1) == picked_two {
                1.0
            } else {
                0.0
            }
        });
        let mse_x = gaussian_expect(means[x], var, |z| {
            let p1 = 1.0 - binary_posterior(nu, z, t, r);
            let target = if x == 0 { 1.0 } else { 0.0 };
            (p1 - target).powi(2)
        });
        let gap_x = gaussian_expect(means[x], var, |z| {
            let p1_mu = 1.0 - binary_posterior(mu, z, t, r);
            let p1_nu = 1.0 - binary_posterior(nu, z, t, r);
            (p1_mu - p1_nu).powi(2)
        });
        correct += weights[x] * correct_x;
        mse += weights[x] * mse_x;
        gap += weights[x] * gap_x;
    }
    (correct, mse, gap)
}
