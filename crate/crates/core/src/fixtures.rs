//! Small covariance examples with known IC/PIC behavior, and designs that
//! realize a covariance exactly.
//!
//! The five-variable example has four uncorrelated active predictors and
//! one noise predictor with correlation `ρ` to each of them. `C₁₁ = I₄`
//! and the IC quantity is `4ρ`, so IC holds iff `|ρ| < 1/4`; the matrix is
//! PSD iff `|ρ| <= 1/2`.
//!
//! The seven-variable example duplicates the first two active columns of
//! the five-variable design. Its `C₁₁` is 6×6 of rank 4, so IC is
//! undefined, but every rank-4 principal submatrix reduces to the
//! five-variable computation and PIC holds iff `4|ρ| < 1`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Base column (0..=3 active, 4 noise) behind each of the seven columns.
const DUPLICATED_BASE: [usize; 7] = [0, 0, 1, 1, 2, 3, 4];

pub fn equicorrelated_noise_covariance(rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(5, 5, |i, j| {
        if i == j {
            1.0
        } else if i == 4 || j == 4 {
            rho
        } else {
            0.0
        }
    })
}

pub fn duplicated_active_covariance(rho: f64) -> DMatrix<f64> {
    let base = equicorrelated_noise_covariance(rho);
    DMatrix::from_fn(7, 7, |i, j| base[(DUPLICATED_BASE[i], DUPLICATED_BASE[j])])
}

/// An `n × p` design with zero column means and `XᵀX / n = C` up to
/// roundoff, drawn reproducibly from `seed`.
///
/// Takes `F` with `FFᵀ = C` from the eigendecomposition and an `n × p`
/// matrix `Q` with orthonormal columns orthogonal to the all-ones vector;
/// then `X = √n · Q Fᵀ`. Needs `n > p`.
pub fn realize_design(c: &DMatrix<f64>, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    let p = c.nrows();
    if c.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {}x{}",
            p,
            c.ncols()
        )));
    }
    if n <= p {
        return Err(Error::DimensionMismatch(format!(
            "need n > p to realize a covariance exactly (n = {n}, p = {p})"
        )));
    }
    let eig = c.clone().symmetric_eigen();
    if eig.eigenvalues.min() < -1e-8 {
        return Err(Error::NotPsd);
    }
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let f = &eig.eigenvectors * DMatrix::from_diagonal(&root);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: DMatrix<f64> = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
    for mut col in z.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    let q = z.qr().q();
    Ok(q * f.transpose() * (n as f64).sqrt())
}

/// The seven-column design: a realization of the five-variable covariance
/// with base columns 0 and 1 copied exactly.
pub fn duplicated_active_design(rho: f64, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    let base = realize_design(&equicorrelated_noise_covariance(rho), n, seed)?;
    Ok(base.select_columns(&DUPLICATED_BASE))
}

/// Coefficients for the seven-column design giving `Y = Xβ` with every
/// active base direction carrying `+1`. The duplicated pairs split their
/// weight evenly.
pub fn duplicated_active_beta() -> DVector<f64> {
    DVector::from_vec(vec![0.5, 0.5, 0.5, 0.5, 1.0, 1.0, 0.0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_variable_blocks() {
        let c = equicorrelated_noise_covariance(0.2);
        assert_eq!(c[(4, 0)], 0.2);
        assert_eq!(c[(0, 1)], 0.0);
        assert_eq!(c.view((0, 0), (4, 4)), DMatrix::<f64>::identity(4, 4));
    }

    #[test]
    fn seven_variable_duplicates() {
        let c = duplicated_active_covariance(0.3);
        assert_eq!(c[(0, 1)], 1.0);
        assert_eq!(c[(2, 3)], 1.0);
        assert_eq!(c[(0, 2)], 0.0);
        assert_eq!(c[(6, 5)], 0.3);
        assert_eq!(c, c.transpose());
    }

    #[test]
    fn realized_design_has_the_target_gram() {
        let c = equicorrelated_noise_covariance(0.2);
        let x = realize_design(&c, 40, 3).unwrap();
        let gram = x.tr_mul(&x) / 40.0;
        assert!((gram - &c).amax() < 1e-12);
        for col in x.column_iter() {
            assert!(col.mean().abs() < 1e-12);
        }
        assert_eq!(x, realize_design(&c, 40, 3).unwrap());
        assert!(realize_design(&c, 5, 3).is_err());
    }

    #[test]
    fn duplicated_design_copies_columns_exactly() {
        let x = duplicated_active_design(0.2, 30, 1).unwrap();
        assert_eq!(x.column(0), x.column(1));
        assert_eq!(x.column(2), x.column(3));
        let gram = x.tr_mul(&x) / 30.0;
        assert!((gram - duplicated_active_covariance(0.2)).amax() < 1e-12);
    }
}
