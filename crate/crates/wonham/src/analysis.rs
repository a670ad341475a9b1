//! Controllable subspace of the dual system, the three equivalent
//! stabilizability tests, block decomposition, and the non-stabilizability
//! witness vector.

use nalgebra::{Complex, DMatrix, DVector};

use crate::config::NumericsConfig;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::HmmModel;

/// An orthonormal basis of a subspace of ℝ^d, with the rank tolerance that
/// produced it.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    cols: Vec<DVector<f64>>,
    ambient: usize,
    tol: f64,
}

impl SubspaceBasis {
    pub fn new(cols: Vec<DVector<f64>>, ambient: usize, tol: f64) -> Self {
        debug_assert!(cols.iter().all(|c| c.len() == ambient));
        Self { cols, ambient, tol }
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn basis(&self) -> &[DVector<f64>] {
        &self.cols
    }

    /// Orthogonal projection of `f` onto the subspace.
    pub fn project(&self, f: &DVector<f64>) -> DVector<f64> {
        let mut p = DVector::zeros(self.ambient);
        for b in &self.cols {
            p.axpy(b.dot(f), b, 1.0);
        }
        p
    }

    /// `(in_subspace, residual)` with `residual = ‖f − proj f‖ / max(1, ‖f‖)`,
    /// decided at the basis's own rank tolerance.
    pub fn membership(&self, f: &DVector<f64>) -> Result<(bool, f64)> {
        if f.len() != self.ambient {
            return Err(Error::DimensionMismatch(format!(
                "vector has length {}, subspace lives in dimension {}",
                f.len(),
                self.ambient
            )));
        }
        let r = linalg::orthogonalize(&self.cols, f);
        let residual = r.norm() / f.norm().max(1.0);
        Ok((residual < self.tol, residual))
    }
}

/// The carré du champ `Γ(f)(x) = Σ_j A(x,j) (f(x) − f(j))²`.
///
/// The diagonal term vanishes, so the sum may run over all `j`.
pub fn carre_du_champ(model: &HmmModel, f: &DVector<f64>) -> Result<DVector<f64>> {
    let d = model.dim();
    if f.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "f has length {}, model dimension is {d}",
            f.len()
        )));
    }
    let a = model.rate();
    Ok(DVector::from_fn(d, |x, _| {
        (0..d)
            .filter(|&j| j != x)
            .map(|j| a[(x, j)] * (f[x] - f[j]).powi(2))
            .sum()
    }))
}

/// The smallest subspace containing `1` and closed under `y ↦ Ay` and
/// `y ↦ h∘y` (elementwise product).
///
/// Closure iteration: apply both generators to every current basis vector,
/// keep new orthogonal components above the tolerance, stop when the
/// dimension stops growing. Each round either grows the dimension or
/// terminates, so at most `d` rounds run.
pub fn controllable_subspace(model: &HmmModel, tol: f64) -> SubspaceBasis {
    let d = model.dim();
    let a = model.rate();
    let h = model.h();
    let mut basis = vec![DVector::from_element(d, 1.0 / (d as f64).sqrt())];
    loop {
        let start = basis.len();
        // Generator order fixed (A first, then diag(h)) for a deterministic basis.
        for i in 0..start {
            let v = a * &basis[i];
            linalg::try_extend_basis(&mut basis, &v, tol);
        }
        for i in 0..start {
            let v = basis[i].component_mul(h);
            linalg::try_extend_basis(&mut basis, &v, tol);
        }
        if basis.len() == start || basis.len() == d {
            break;
        }
    }
    SubspaceBasis::new(basis, d, tol)
}

/// Orthonormal basis of `ker A` via singular value decomposition.
pub fn null_space(model: &HmmModel, tol: f64) -> SubspaceBasis {
    let cols = linalg::null_space_basis(model.rate(), tol);
    SubspaceBasis::new(cols, model.dim(), tol)
}

/// Orthogonal change of coordinates splitting ℝ^d into the controllable
/// subspace and its complement, with `Ā = T^T A T` block upper-triangular.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    t: DMatrix<f64>,
    a_bar: DMatrix<f64>,
    n: usize,
    residual_lower_left: f64,
}

impl BlockDecomposition {
    pub fn new(model: &HmmModel, subspace: &SubspaceBasis) -> Self {
        let d = model.dim();
        let n = subspace.dim();
        let complement = linalg::complete_basis(subspace.basis(), d, subspace.tol());
        let mut cols: Vec<DVector<f64>> = subspace.basis().to_vec();
        cols.extend(complement);
        let t = linalg::columns_to_matrix(&cols, d);
        let a_bar = t.transpose() * model.rate() * &t;
        let residual_lower_left = if n < d {
            linalg::inf_norm(&a_bar.view((n, 0), (d - n, n)).into_owned())
        } else {
            0.0
        };
        Self {
            t,
            a_bar,
            n,
            residual_lower_left,
        }
    }

    /// Orthogonal transformation; first `n` columns span the controllable subspace.
    pub fn transform(&self) -> &DMatrix<f64> {
        &self.t
    }

    pub fn a_bar(&self) -> &DMatrix<f64> {
        &self.a_bar
    }

    /// Dimension of the controllable block.
    pub fn controllable_dim(&self) -> usize {
        self.n
    }

    pub fn a_c(&self) -> DMatrix<f64> {
        self.a_bar.view((0, 0), (self.n, self.n)).into_owned()
    }

    pub fn a_uc(&self) -> DMatrix<f64> {
        let d = self.a_bar.nrows();
        self.a_bar
            .view((self.n, self.n), (d - self.n, d - self.n))
            .into_owned()
    }

    pub fn coupling(&self) -> DMatrix<f64> {
        let d = self.a_bar.nrows();
        self.a_bar
            .view((0, self.n), (self.n, d - self.n))
            .into_owned()
    }

    /// ∞-norm of the lower-left block; near zero because the controllable
    /// subspace is A-invariant.
    pub fn residual_lower_left(&self) -> f64 {
        self.residual_lower_left
    }
}

/// Verdicts of the three equivalent stabilizability tests plus the witness
/// vector produced when the model is not stabilizable.
#[derive(Debug, Clone)]
pub struct StabilizabilityReport {
    pub controllable_dim: usize,
    pub is_controllable: bool,
    /// Every null-space basis vector of `A` lies in the controllable subspace.
    pub nullspace_test: bool,
    /// Every ergodic-class indicator lies in the controllable subspace.
    pub indicator_test: bool,
    /// The uncontrollable block is Hurwitz (vacuously true when controllable).
    pub hurwitz_test: bool,
    pub verdict: bool,
    /// Unit vector in the orthogonal complement of the controllable subspace
    /// along which the dual system cannot be driven to constants.
    pub witness: Option<DVector<f64>>,
    pub uc_eigenvalues: Vec<Complex<f64>>,
}

/// Runs all three stabilizability tests independently and checks they agree.
///
/// Tests: (a) `ker A` inside the controllable subspace, (b) all class
/// indicators inside it, (c) the uncontrollable block Hurwitz with margin
/// `hurwitz_margin · ‖A‖∞`. Disagreement raises
/// [`Error::InternalEquivalenceViolation`].
pub fn stabilizability(model: &HmmModel) -> Result<StabilizabilityReport> {
    stabilizability_with(model, &NumericsConfig::default())
}

/// [`stabilizability`] with explicit tolerances.
pub fn stabilizability_with(
    model: &HmmModel,
    cfg: &NumericsConfig,
) -> Result<StabilizabilityReport> {
    let decomp = model.ergodic_decomposition()?;
    let subspace = controllable_subspace(model, cfg.rank_tol);
    let d = model.dim();
    let n = subspace.dim();
    let is_controllable = n == d;

    let s0 = null_space(model, cfg.nullspace_tol);
    let nullspace_test = s0
        .basis()
        .iter()
        .all(|v| subspace.membership(v).expect("dims agree").0);

    let indicator_test = decomp
        .indicators()
        .iter()
        .all(|v| subspace.membership(v).expect("dims agree").0);

    let blocks = BlockDecomposition::new(model, &subspace);
    let (hurwitz_test, uc_eigenvalues) = if is_controllable {
        (true, Vec::new())
    } else {
        let margin = cfg.hurwitz_margin * linalg::inf_norm(model.rate());
        let eig = blocks.a_uc().complex_eigenvalues();
        let hurwitz = eig.iter().all(|l| l.re < -margin);
        (hurwitz, eig.iter().cloned().collect())
    };

    if nullspace_test != indicator_test || indicator_test != hurwitz_test {
        return Err(Error::InternalEquivalenceViolation(format!(
            "nullspace={nullspace_test} indicator={indicator_test} hurwitz={hurwitz_test}"
        )));
    }
    let verdict = hurwitz_test;

    let witness = if verdict {
        None
    } else {
        let w = witness_vector(&blocks, cfg).ok_or_else(|| {
            Error::InternalEquivalenceViolation(
                "non-stabilizable model has no kernel vector in the uncontrollable block".into(),
            )
        })?;
        Some(w)
    };

    Ok(StabilizabilityReport {
        controllable_dim: n,
        is_controllable,
        nullspace_test,
        indicator_test,
        hurwitz_test,
        verdict,
        witness,
        uc_eigenvalues,
    })
}

/// A unit null vector of the uncontrollable block, lifted back to ℝ^d.
///
/// Null directions are singular vectors with singular value below
/// `rank_tol · ‖A‖∞` — the same scale as the Hurwitz margin, so a block that
/// is numerically zero still yields its kernel. When the null space has
/// dimension above one, the vector whose first significant entry appears
/// earliest is chosen, with the sign fixed positive there, so repeated runs
/// produce the same witness.
fn witness_vector(blocks: &BlockDecomposition, cfg: &NumericsConfig) -> Option<DVector<f64>> {
    let a_uc = blocks.a_uc();
    let scale = linalg::inf_norm(blocks.a_bar()).max(1.0);
    let thresh = cfg.rank_tol * scale;
    let svd = a_uc.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut kernel: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= thresh)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if kernel.is_empty() {
        return None;
    }
    let sig = 1e-9;
    kernel.sort_by_key(|v| v.iter().position(|x| x.abs() > sig).unwrap_or(v.len()));
    let mut eta = kernel.swap_remove(0);
    if let Some(lead) = eta.iter().find(|x| x.abs() > sig) {
        if *lead < 0.0 {
            eta = -eta;
        }
    }
    eta /= eta.norm();

    let d = blocks.a_bar().nrows();
    let n = blocks.controllable_dim();
    let mut bar = DVector::zeros(d);
    for i in 0..(d - n) {
        bar[n + i] = eta[i];
    }
    Some(blocks.transform() * bar)
}
