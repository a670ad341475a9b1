//! Small dense linear-algebra helpers shared by the analysis and dual modules.

use nalgebra::{DMatrix, DVector};

/// `exp(A t)` by scaling-and-squaring.
pub fn matrix_exp(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    (a * t).exp()
}

/// Returns `(exp(A dt), ∫₀^dt exp(A s) ds)`.
///
/// Both blocks are read off the exponential of the augmented matrix
/// `[[A, I], [0, 0]]·dt`, which keeps the pair consistent to the accuracy
/// of one scaling-and-squaring call.
pub fn exp_with_integral(a: &DMatrix<f64>, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = a.nrows();
    let mut aug = DMatrix::<f64>::zeros(2 * d, 2 * d);
    aug.view_mut((0, 0), (d, d)).copy_from(&(a * dt));
    for i in 0..d {
        aug[(i, d + i)] = dt;
    }
    let e = aug.exp();
    let exp_a = e.view((0, 0), (d, d)).into_owned();
    let integral = e.view((0, d), (d, d)).into_owned();
    (exp_a, integral)
}

/// Orthogonalizes `v` against the columns of `basis` with one re-orthogonalization
/// pass. Returns the residual (not normalized).
pub fn orthogonalize(basis: &[DVector<f64>], v: &DVector<f64>) -> DVector<f64> {
    let mut r = v.clone();
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&r);
            r.axpy(-c, b, 1.0);
        }
    }
    r
}

/// Appends `v` to `basis` if its component orthogonal to the current span
/// exceeds `tol * max(1, ‖v‖)`. Returns true when the basis grew.
pub fn try_extend_basis(basis: &mut Vec<DVector<f64>>, v: &DVector<f64>, tol: f64) -> bool {
    let scale = v.norm().max(1.0);
    let r = orthogonalize(basis, v);
    let n = r.norm();
    if n > tol * scale {
        basis.push(r / n);
        true
    } else {
        false
    }
}

/// Orthonormal basis of the null space of `a`: right singular vectors whose
/// singular value is at most `rel_tol * σ_max`. For `a = 0` this is the full
/// standard basis.
pub fn null_space_basis(a: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let d = a.ncols();
    if a.iter().all(|&x| x == 0.0) {
        return (0..d)
            .map(|i| DVector::from_fn(d, |j, _| if i == j { 1.0 } else { 0.0 }))
            .collect();
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let mut out = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= rel_tol * smax {
            out.push(v_t.row(i).transpose());
        }
    }
    out
}

/// Extends the orthonormal columns in `basis` to a full orthonormal basis of
/// ℝ^d, scanning standard basis vectors in index order for determinism.
pub fn complete_basis(basis: &[DVector<f64>], d: usize, tol: f64) -> Vec<DVector<f64>> {
    let mut full: Vec<DVector<f64>> = basis.to_vec();
    for i in 0..d {
        if full.len() == d {
            break;
        }
        let e = DVector::from_fn(d, |j, _| if i == j { 1.0 } else { 0.0 });
        try_extend_basis(&mut full, &e, tol);
    }
    assert_eq!(full.len(), d, "failed to complete orthonormal basis");
    full.split_off(basis.len())
}

/// Stacks column vectors into a d×n matrix.
pub fn columns_to_matrix(cols: &[DVector<f64>], d: usize) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(d, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// Infinity norm of a matrix (max absolute row sum).
pub fn inf_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
