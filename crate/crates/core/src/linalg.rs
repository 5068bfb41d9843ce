//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Largest `|a_ij - a_ji|`.
pub(crate) fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let p = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..p {
        for j in (i + 1)..p {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    if a.is_empty() {
        return DVector::zeros(0);
    }
    a.clone().svd(false, false).singular_values
}

/// Number of singular values `>= rel_tol * sigma_max`, judged against
/// `reference_max` when one is given.
pub(crate) fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64, reference_max: Option<f64>) -> usize {
    let sv = singular_values(a);
    let smax = reference_max.unwrap_or_else(|| sv.max());
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s >= rel_tol * smax).count()
}

/// `sigma_max / sigma_min`; infinite for singular or empty input.
pub(crate) fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = singular_values(a);
    if sv.is_empty() {
        return f64::INFINITY;
    }
    let smin = sv.min();
    if smin <= 0.0 {
        f64::INFINITY
    } else {
        sv.max() / smin
    }
}

/// Minimum-norm least-squares solution of `A x = b` and the numerical rank
/// of `A`.
pub(crate) fn min_norm_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, usize) {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-12 * (a.nrows().max(a.ncols()) as f64);
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let x = svd
        .solve(b, eps)
        .expect("both singular vector sets were requested");
    (x, rank)
}

/// Solve the symmetric positive definite system `A x = b` by Cholesky with
/// one step of iterative refinement.
pub(crate) fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let chol = a.clone().cholesky()?;
    let mut x = chol.solve(b);
    let resid = b - &a * &x;
    x += chol.solve(&resid);
    Some(x)
}
