//! Problem-instance definition: rate matrix, observation model, validation,
//! ergodic decomposition, and invariant measures.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::NumericsConfig;
use crate::error::{Error, Result, ValidationError, Violation};

/// A probability vector on the state space `{1..d}`.
///
/// Entries are nonnegative and sum to one; construction renormalizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    entries: DVector<f64>,
}

impl ProbabilityVector {
    /// Validates and renormalizes. Rejects negative entries and sums further
    /// than `row_sum_tol` from one.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        Self::with_config(entries, &NumericsConfig::default())
    }

    pub fn with_config(entries: Vec<f64>, cfg: &NumericsConfig) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DimensionMismatch("empty probability vector".into()));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config(
                "probability vector has non-finite entries".into(),
            ));
        }
        if let Some((i, &v)) = entries.iter().enumerate().find(|(_, &v)| v < 0.0) {
            return Err(Error::Config(format!(
                "probability vector entry {} is negative ({v})",
                i + 1
            )));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > cfg.row_sum_tol {
            return Err(Error::Config(format!(
                "probability vector sums to {sum}, expected 1"
            )));
        }
        let mut v = DVector::from_vec(entries);
        v /= sum;
        Ok(Self { entries: v })
    }

    /// Renormalizes arbitrary nonnegative weights with positive total mass.
    pub fn from_weights(weights: &DVector<f64>) -> Result<Self> {
        if weights.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Config(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum = weights.sum();
        if sum <= 0.0 {
            return Err(Error::Config("weights sum to zero".into()));
        }
        Ok(Self {
            entries: weights / sum,
        })
    }

    /// Internal constructor for values already known to be a probability vector.
    pub(crate) fn from_normalized(entries: DVector<f64>) -> Self {
        debug_assert!(entries.iter().all(|&x| x >= 0.0));
        debug_assert!((entries.sum() - 1.0).abs() < 1e-9);
        Self { entries }
    }

    pub fn uniform(d: usize) -> Self {
        Self {
            entries: DVector::from_element(d, 1.0 / d as f64),
        }
    }

    pub fn point_mass(d: usize, state: usize) -> Self {
        let mut e = DVector::zeros(d);
        e[state] = 1.0;
        Self { entries: e }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &DVector<f64> {
        &self.entries
    }

    pub fn get(&self, state: usize) -> f64 {
        self.entries[state]
    }

    /// The mean `Σ_x π(x) f(x)`.
    pub fn expect(&self, f: &DVector<f64>) -> f64 {
        self.entries.dot(f)
    }

    /// States with strictly positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&x| self.entries[x] > 0.0).collect()
    }

    /// True when every state charged by `self` is also charged by `other`.
    pub fn absolutely_continuous_wrt(&self, other: &Self) -> bool {
        (0..self.dim()).all(|x| self.entries[x] == 0.0 || other.entries[x] > 0.0)
    }
}

/// A rate matrix (generator): nonnegative off-diagonal entries, zero row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    entries: DMatrix<f64>,
}

impl RateMatrix {
    /// Validates off-diagonal signs and row sums, then corrects the diagonal
    /// so that `A·1 = 0` holds to machine level.
    pub fn new(
        entries: DMatrix<f64>,
        cfg: &NumericsConfig,
    ) -> std::result::Result<Self, Vec<Violation>> {
        let mut violations = Vec::new();
        let d = entries.nrows();
        if entries.ncols() != d {
            violations.push(Violation::DimensionMismatch(format!(
                "rate matrix is {}x{}, must be square",
                entries.nrows(),
                entries.ncols()
            )));
            return Err(violations);
        }
        for i in 0..d {
            for j in 0..d {
                let v = entries[(i, j)];
                if !v.is_finite() {
                    violations.push(Violation::NonFinite(format!(
                        "A({},{}) = {v}",
                        i + 1,
                        j + 1
                    )));
                } else if i != j && v < 0.0 {
                    violations.push(Violation::NegativeOffDiagonal {
                        row: i + 1,
                        col: j + 1,
                        value: v,
                    });
                }
            }
            let sum: f64 = entries.row(i).iter().sum();
            if sum.is_finite() && sum.abs() > cfg.row_sum_tol {
                violations.push(Violation::RowSumNonZero { row: i + 1, sum });
            }
        }
        if !violations.is_empty() {
            return Err(violations);
        }
        let mut m = entries;
        for i in 0..d {
            let off: f64 = (0..d).filter(|&j| j != i).map(|j| m[(i, j)]).sum();
            m[(i, i)] = -off;
        }
        Ok(Self { entries: m })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Observation function values and the noise covariance of the observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    h: DVector<f64>,
    r: f64,
}

impl ObservationModel {
    pub fn h(&self) -> &DVector<f64> {
        &self.h
    }

    /// Noise covariance, strictly positive.
    pub fn r(&self) -> f64 {
        self.r
    }
}

/// A complete problem instance: rate matrix `A`, observation function `h`,
/// noise covariance `R`.
#[derive(Debug, Clone)]
pub struct HmmModel {
    a: RateMatrix,
    obs: ObservationModel,
    d: usize,
    name: Option<String>,
}

impl HmmModel {
    pub fn new(a: DMatrix<f64>, h: Vec<f64>, r: f64) -> Result<Self> {
        validate_model(a, h, r)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rate(&self) -> &DMatrix<f64> {
        self.a.entries()
    }

    pub fn rate_matrix(&self) -> &RateMatrix {
        &self.a
    }

    pub fn obs(&self) -> &ObservationModel {
        &self.obs
    }

    pub fn h(&self) -> &DVector<f64> {
        self.obs.h()
    }

    pub fn r(&self) -> f64 {
        self.obs.r()
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Same model with the noise covariance replaced.
    pub fn with_r(&self, r: f64) -> Result<Self> {
        validate_model(
            self.a.entries().clone(),
            self.h().iter().cloned().collect(),
            r,
        )
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = Some(name.into());
    }

    pub fn ergodic_decomposition(&self) -> Result<ErgodicDecomposition> {
        ergodic_decomposition(self)
    }
}

/// Validates a raw `(A, h, R)` triple. On failure the error lists every
/// violated invariant.
pub fn validate_model(a: DMatrix<f64>, h: Vec<f64>, r: f64) -> Result<HmmModel> {
    let cfg = NumericsConfig::default();
    let mut violations = Vec::new();
    let d = a.nrows();
    if h.len() != d {
        violations.push(Violation::DimensionMismatch(format!(
            "h has length {}, rate matrix has dimension {d}",
            h.len()
        )));
    }
    if h.iter().any(|x| !x.is_finite()) {
        violations.push(Violation::NonFinite("observation function h".into()));
    }
    if !r.is_finite() {
        violations.push(Violation::NonFinite(format!("R = {r}")));
    } else if r <= 0.0 {
        violations.push(Violation::NonPositiveR { value: r });
    }
    let rate = match RateMatrix::new(a, &cfg) {
        Ok(m) => Some(m),
        Err(mut v) => {
            violations.append(&mut v);
            None
        }
    };
    if !violations.is_empty() {
        return Err(ValidationError { violations }.into());
    }
    let rate = rate.expect("validated");
    Ok(HmmModel {
        a: rate,
        obs: ObservationModel {
            h: DVector::from_vec(h),
            r,
        },
        d,
        name: None,
    })
}

/// The partition of the state space into closed communicating classes.
#[derive(Debug, Clone)]
pub struct ErgodicDecomposition {
    classes: Vec<Vec<usize>>,
    indicators: Vec<DVector<f64>>,
}

impl ErgodicDecomposition {
    /// Number of ergodic classes.
    pub fn m(&self) -> usize {
        self.classes.len()
    }

    /// Classes as sorted 0-based index sets, ordered by smallest member.
    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    /// 0/1 indicator vectors, one per class.
    pub fn indicators(&self) -> &[DVector<f64>] {
        &self.indicators
    }

    /// Index of the class containing `state`.
    pub fn class_of(&self, state: usize) -> usize {
        self.classes
            .iter()
            .position(|c| c.contains(&state))
            .expect("classes cover the state space")
    }
}

/// Communicating classes of the digraph with an edge `x → j` iff `A(x,j) > 0`.
///
/// Succeeds only if every class is closed; otherwise reports the transient
/// states (1-based in the error message).
pub fn ergodic_decomposition(model: &HmmModel) -> Result<ErgodicDecomposition> {
    let d = model.dim();
    let a = model.rate();

    // Reachability closure; d is small, O(d^3) is fine.
    let mut reach = vec![vec![false; d]; d];
    for (x, row) in reach.iter_mut().enumerate() {
        row[x] = true;
        let mut stack = vec![x];
        while let Some(u) = stack.pop() {
            for j in 0..d {
                if a[(u, j)] > 0.0 && !row[j] {
                    row[j] = true;
                    stack.push(j);
                }
            }
        }
    }

    let mut assigned = vec![false; d];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut transient: Vec<usize> = Vec::new();
    for x in 0..d {
        if assigned[x] {
            continue;
        }
        let class: Vec<usize> = (0..d).filter(|&j| reach[x][j] && reach[j][x]).collect();
        let closed = class
            .iter()
            .all(|&u| (0..d).all(|j| a[(u, j)] <= 0.0 || class.contains(&j)));
        for &u in &class {
            assigned[u] = true;
        }
        if closed {
            classes.push(class);
        } else {
            transient.extend(class.iter().copied());
        }
    }
    if !transient.is_empty() {
        transient.sort_unstable();
        return Err(Error::TransientStatesPresent {
            states: transient.iter().map(|&x| x + 1).collect(),
        });
    }
    classes.sort_by_key(|c| c[0]);
    let indicators = classes
        .iter()
        .map(|c| DVector::from_fn(d, |i, _| if c.contains(&i) { 1.0 } else { 0.0 }))
        .collect();
    Ok(ErgodicDecomposition {
        classes,
        indicators,
    })
}

/// Invariant measure of one ergodic class: the probability vector supported on
/// the class with `A^T μ̄ = 0`, found as the null vector of the transposed
/// class block.
pub fn invariant_measure(
    model: &HmmModel,
    decomp: &ErgodicDecomposition,
    class_index: usize,
) -> Result<ProbabilityVector> {
    let cfg = NumericsConfig::default();
    let class = decomp
        .classes()
        .get(class_index)
        .ok_or_else(|| Error::Config(format!("class index {class_index} out of range")))?;
    let k = class.len();
    let a = model.rate();
    let block_t = DMatrix::from_fn(k, k, |i, j| a[(class[j], class[i])]);

    if k == 1 {
        let mut full = DVector::zeros(model.dim());
        full[class[0]] = 1.0;
        return Ok(ProbabilityVector::from_normalized(full));
    }

    let scale = crate::linalg::inf_norm(&block_t).max(1.0);
    let svd = block_t.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let tol = cfg.nullspace_tol * scale;
    let mut null_indices: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(i, _)| i)
        .collect();
    if null_indices.len() != 1 {
        return Err(Error::NumericalRankFailure(format!(
            "transposed class block has null space of dimension {} (expected 1)",
            null_indices.len()
        )));
    }
    let mut v = v_t.row(null_indices.pop().unwrap()).transpose();
    if v.sum() < 0.0 {
        v = -v;
    }
    if v.iter().any(|&x| x <= 0.0) {
        return Err(Error::NumericalRankFailure(
            "null vector of the class block is not strictly positive".into(),
        ));
    }
    let total = v.sum();
    let mut full = DVector::zeros(model.dim());
    for (local, &state) in class.iter().enumerate() {
        full[state] = v[local] / total;
    }
    Ok(ProbabilityVector::from_normalized(full))
}

/// Convex combination `Σ_k a_k μ̄_k` of the per-class invariant measures.
pub fn mixture_invariant(
    model: &HmmModel,
    decomp: &ErgodicDecomposition,
    weights: &[f64],
) -> Result<ProbabilityVector> {
    if weights.len() != decomp.m() {
        return Err(Error::WeightCountMismatch {
            expected: decomp.m(),
            got: weights.len(),
        });
    }
    if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
        return Err(Error::Config(
            "mixture weights must be finite and nonnegative".into(),
        ));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "mixture weights sum to {sum}, expected 1"
        )));
    }
    let mut out = DVector::zeros(model.dim());
    for (k, &w) in weights.iter().enumerate() {
        let mu_k = invariant_measure(model, decomp, k)?;
        out.axpy(w / sum, mu_k.entries(), 1.0);
    }
    Ok(ProbabilityVector::from_normalized(out))
}

/// On-disk model document: `{d, A (row-major), h, R, name?}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub d: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub h: Vec<f64>,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl ModelFile {
    pub fn from_model(model: &HmmModel) -> Self {
        let d = model.dim();
        Self {
            d,
            a: (0..d)
                .map(|i| (0..d).map(|j| model.rate()[(i, j)]).collect())
                .collect(),
            h: model.h().iter().cloned().collect(),
            r: model.r(),
            name: model.name().map(String::from),
        }
    }
}

/// Parses a model from its JSON document. Non-finite numbers are rejected by
/// the JSON grammar; dimensions are checked against `d`.
pub fn model_from_json(text: &str) -> Result<HmmModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    if file.a.len() != file.d || file.a.iter().any(|row| row.len() != file.d) {
        return Err(Error::DimensionMismatch(format!(
            "A must be {0}x{0} to match d = {0}",
            file.d
        )));
    }
    let flat: Vec<f64> = file.a.iter().flatten().cloned().collect();
    let a = DMatrix::from_row_slice(file.d, file.d, &flat);
    let mut model = validate_model(a, file.h, file.r)?;
    if let Some(name) = file.name {
        model.set_name(name);
    }
    Ok(model)
}

pub fn model_to_json(model: &HmmModel) -> String {
    serde_json::to_string_pretty(&ModelFile::from_model(model)).expect("model serializes")
}
