//! Ridge and Elastic-Net.
//!
//! Both use the squared ℓ₂ term `(λ₂/2)‖β‖²` and no `(1 + λ₂)` rescaling
//! of the Elastic-Net solution.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lasso::{self, LassoFit, SolverOptions};
use crate::linalg;
use crate::model::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub beta: DVector<f64>,
    pub lambda2: f64,
    /// `‖(XᵀX + λ₂I)β − XᵀY‖∞`.
    pub normal_residual: f64,
}

/// Which linear system to solve for the Ridge coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RidgeForm {
    /// Primal when `p <= n`, dual otherwise.
    #[default]
    Auto,
    /// `(XᵀX + λ₂I) β = XᵀY`, a `p × p` system.
    Primal,
    /// `β = Xᵀ(XXᵀ + λ₂I)⁻¹Y`, an `n × n` system.
    Dual,
}

/// `argmin ½‖Y − Xβ‖² + (λ₂/2)‖β‖²`.
pub fn fit_ridge(ds: &Dataset, lambda2: f64) -> Result<RidgeFit> {
    fit_ridge_with(ds, lambda2, RidgeForm::Auto)
}

pub fn fit_ridge_with(ds: &Dataset, lambda2: f64, form: RidgeForm) -> Result<RidgeFit> {
    if !(lambda2 > 0.0 && lambda2.is_finite()) {
        return Err(Error::NonPositiveLambda(lambda2));
    }
    let x = ds.x();
    let form = match form {
        RidgeForm::Auto if ds.p() > ds.n() => RidgeForm::Dual,
        RidgeForm::Auto => RidgeForm::Primal,
        f => f,
    };
    let xty = x.tr_mul(ds.y());
    let beta = match form {
        RidgeForm::Primal => {
            let a = x.tr_mul(x) + DMatrix::identity(ds.p(), ds.p()) * lambda2;
            linalg::solve_spd(a, &xty)
        }
        _ => {
            let a = x * x.transpose() + DMatrix::identity(ds.n(), ds.n()) * lambda2;
            linalg::solve_spd(a, ds.y()).map(|alpha| x.tr_mul(&alpha))
        }
    }
    .ok_or(Error::NotPsd)?;
    let normal_residual = (x.tr_mul(&(x * &beta)) + &beta * lambda2 - &xty).amax();
    Ok(RidgeFit {
        beta,
        lambda2,
        normal_residual,
    })
}

/// `argmin ½‖Y − Xβ‖² + λ₁‖β‖₁ + (λ₂/2)‖β‖²` by coordinate descent.
pub fn fit_enet(
    ds: &Dataset,
    lambda1: f64,
    lambda2: f64,
    opts: &SolverOptions,
) -> Result<LassoFit> {
    fit_enet_warm(ds, lambda1, lambda2, opts, None)
}

pub fn fit_enet_warm(
    ds: &Dataset,
    lambda1: f64,
    lambda2: f64,
    opts: &SolverOptions,
    warm: Option<&DVector<f64>>,
) -> Result<LassoFit> {
    lasso::check_lambda(lambda1, "lambda1")?;
    lasso::check_lambda(lambda2, "lambda2")?;
    if lambda1 == 0.0 && lambda2 == 0.0 {
        return Err(Error::InvalidLambda(
            "elastic net needs lambda1 > 0 or lambda2 > 0".into(),
        ));
    }
    opts.validate()?;
    lasso::coordinate_descent(ds, lambda1, lambda2, opts, warm)
}

/// Warm-started Elastic-Net fits along a strictly decreasing `λ₁` grid at
/// fixed `λ₂`.
pub fn enet_path(
    ds: &Dataset,
    grid: &[f64],
    lambda2: f64,
    opts: &SolverOptions,
) -> Result<Vec<LassoFit>> {
    lasso::check_decreasing(grid)?;
    let mut fits: Vec<LassoFit> = Vec::with_capacity(grid.len());
    for &l1 in grid {
        let warm = fits.last().map(|f| &f.beta);
        fits.push(fit_enet_warm(ds, l1, lambda2, opts, warm)?);
    }
    Ok(fits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lasso::{fit_lasso, lambda_max};
    use crate::model::standardize;
    use crate::testutil::{gaussian_matrix, random_dataset};

    fn tight() -> SolverOptions {
        SolverOptions {
            tol_obj: 1e-14,
            kkt_rel: 1e-12,
            ..Default::default()
        }
    }

    #[test]
    fn orthogonal_design_is_diagonal() {
        let h = [
            [1.0, 1.0, 1.0],
            [-1.0, 1.0, -1.0],
            [1.0, -1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ];
        let x = DMatrix::from_fn(4, 3, |i, j| h[i][j]);
        let ds = standardize(x, DVector::from_vec(vec![1.0, 4.0, -2.0, 0.5])).unwrap();
        let xty = ds.x().tr_mul(ds.y());
        let fit = fit_ridge(&ds, 2.0).unwrap();
        for j in 0..3 {
            assert_close!(fit.beta[j], xty[j] / (4.0 + 2.0), 1e-12);
        }
    }

    #[test]
    fn huge_penalty_shrinks_to_zero() {
        let ds = random_dataset(20, 5, 1);
        let fit = fit_ridge(&ds, 1e12).unwrap();
        let xty = ds.x().tr_mul(ds.y()).amax();
        assert!(fit.beta.amax() <= 1e-6 * xty);
    }

    #[test]
    fn primal_and_dual_forms_agree_when_p_exceeds_n() {
        let ds = random_dataset(10, 25, 2);
        let primal = fit_ridge_with(&ds, 0.7, RidgeForm::Primal).unwrap();
        let dual = fit_ridge_with(&ds, 0.7, RidgeForm::Dual).unwrap();
        assert!((&primal.beta - &dual.beta).amax() < 1e-8);
        let scale = 1.0 + ds.x().tr_mul(ds.y()).amax();
        assert!(primal.normal_residual <= 1e-8 * scale);
        assert!(dual.normal_residual <= 1e-8 * scale);
    }

    #[test]
    fn nonpositive_ridge_penalty() {
        let ds = random_dataset(10, 2, 3);
        assert!(matches!(
            fit_ridge(&ds, 0.0),
            Err(Error::NonPositiveLambda(_))
        ));
        assert!(matches!(
            fit_ridge(&ds, -1.0),
            Err(Error::NonPositiveLambda(_))
        ));
    }

    #[test]
    fn enet_reduces_to_lasso_and_ridge() {
        let ds = random_dataset(30, 6, 4);
        let l1 = 0.2 * lambda_max(&ds);
        let enet = fit_enet(&ds, l1, 0.0, &tight()).unwrap();
        let lasso = fit_lasso(&ds, l1, &tight()).unwrap();
        assert!((&enet.beta - &lasso.beta).amax() < 1e-8);

        let enet = fit_enet(&ds, 0.0, 3.0, &tight()).unwrap();
        let ridge = fit_ridge(&ds, 3.0).unwrap();
        assert!((&enet.beta - &ridge.beta).amax() < 1e-8);
        assert!(enet.subgradient.is_none());

        assert!(matches!(
            fit_enet(&ds, 0.0, 0.0, &tight()),
            Err(Error::InvalidLambda(_))
        ));
    }

    #[test]
    fn grouping_effect_on_duplicated_columns() {
        let z = gaussian_matrix(20, 3, 5);
        let x = DMatrix::from_fn(20, 4, |i, j| z[(i, if j == 3 { 0 } else { j })]);
        let y = &x * DVector::from_vec(vec![1.0, 0.5, 0.0, 1.0])
            + gaussian_matrix(20, 1, 6).column(0) * 0.3;
        let ds = standardize(x, y).unwrap();
        let fit = fit_enet(&ds, 0.1 * lambda_max(&ds), 1.0, &tight()).unwrap();
        assert!(fit.beta[0] != 0.0);
        assert!((fit.beta[0] - fit.beta[3]).abs() <= 1e-8);
    }

    #[test]
    fn objective_nonincreasing_per_sweep() {
        let ds = random_dataset(40, 10, 7);
        let opts = SolverOptions {
            record_trace: true,
            ..Default::default()
        };
        let fit = fit_enet(&ds, 0.05 * lambda_max(&ds), 0.5, &opts).unwrap();
        assert!(!fit.trace.is_empty());
        for w in fit.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
        }
    }
}
