//! Cyclic coordinate descent for the Lasso
//!
//! ```text
//! minimize ½‖Y − Xβ‖² + λ₁‖β‖₁ + (λ₂/2)‖β‖²
//! ```
//!
//! The objective is un-normalized (no `1/n`), so `λ_max = max_j |X_jᵀY|`
//! and the stationarity condition reads `Xᵀ(Y − Xβ̂) − λ₂β̂ = λ₁v̂` with `v̂`
//! a subgradient of `‖β̂‖₁`. The same engine serves the Elastic-Net
//! (`λ₂ > 0`) in [`crate::baseline`].
//!
//! A fit is declared converged when the relative objective change over a
//! sweep is at most `tol_obj` *and* the KKT residual is at most the KKT
//! tolerance. The KKT residual is what the dual selector relies on, so it
//! is always checked against a freshly recomputed residual vector.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoordinateOrder {
    /// `0, 1, ..., p-1` every sweep.
    #[default]
    Cyclic,
    /// `p-1, ..., 0` every sweep.
    ReverseCyclic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Relative objective change per sweep.
    pub tol_obj: f64,
    /// Absolute KKT tolerance. `None` uses `kkt_rel * min(λ₁, λ_max)`
    /// (`kkt_rel * λ_max` when `λ₁ = 0`).
    pub tol_kkt: Option<f64>,
    pub kkt_rel: f64,
    pub max_sweeps: usize,
    pub order: CoordinateOrder,
    /// Keep the objective value after every sweep in [`LassoFit::trace`].
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_obj: 1e-9,
            tol_kkt: None,
            kkt_rel: 1e-9,
            max_sweeps: 100_000,
            order: CoordinateOrder::Cyclic,
            record_trace: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.tol_obj) {
            return Err(Error::InvalidOptions(format!("tol_obj = {}", self.tol_obj)));
        }
        if !positive(self.kkt_rel) {
            return Err(Error::InvalidOptions(format!("kkt_rel = {}", self.kkt_rel)));
        }
        if let Some(t) = self.tol_kkt {
            if !positive(t) {
                return Err(Error::InvalidOptions(format!("tol_kkt = {t}")));
            }
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidOptions("max_sweeps = 0".into()));
        }
        Ok(())
    }

    /// The absolute KKT tolerance used for a fit at `lambda1`.
    pub fn kkt_tolerance(&self, lambda1: f64, lambda_max: f64) -> f64 {
        if let Some(t) = self.tol_kkt {
            return t;
        }
        let scale = if lambda1 > 0.0 {
            lambda1.min(lambda_max)
        } else {
            lambda_max
        };
        if scale > 0.0 {
            self.kkt_rel * scale
        } else {
            self.kkt_rel
        }
    }
}

/// Result of a Lasso (or Elastic-Net) fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub beta: DVector<f64>,
    /// ℓ₁ penalty λ₁.
    pub lambda: f64,
    /// ℓ₂ penalty; zero for a plain Lasso fit.
    pub lambda2: f64,
    /// `(Xᵀ(Y − Xβ̂) − λ₂β̂)/λ₁` clamped to `[-1, 1]`; absent when `λ₁ = 0`.
    pub subgradient: Option<DVector<f64>>,
    pub iterations: usize,
    pub kkt_residual: f64,
    /// The tolerance `kkt_residual` was held to.
    pub kkt_tol: f64,
    pub objective: f64,
    /// Set when the minimizer is known not to be unique (`λ = 0` on a
    /// rank-deficient design, where the minimum-norm solution is returned).
    pub non_unique: bool,
    /// Objective after each sweep, when requested.
    pub trace: Vec<f64>,
}

impl LassoFit {
    pub fn support(&self) -> crate::model::ActiveSet {
        crate::model::ActiveSet::support(&self.beta)
    }
}

/// Relative margin above the threshold that is still treated as a tie.
const ROUNDOFF_SLACK: f64 = 64.0 * f64::EPSILON;

/// `sign(z) · max(|z| − γ, 0)`.
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    debug_assert!(gamma >= 0.0);
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Smallest λ for which `β̂ = 0` is optimal: `max_j |X_jᵀY|`.
pub fn lambda_max(ds: &Dataset) -> f64 {
    (ds.x().tr_mul(ds.y())).amax()
}

pub fn lasso_objective(ds: &Dataset, beta: &DVector<f64>, lambda: f64) -> Result<f64> {
    if beta.len() != ds.p() {
        return Err(Error::DimensionMismatch(format!(
            "beta has length {}, design has {} columns",
            beta.len(),
            ds.p()
        )));
    }
    let r = ds.y() - ds.x() * beta;
    Ok(0.5 * r.norm_squared() + lambda * beta.lp_norm(1))
}

pub fn fit_lasso(ds: &Dataset, lambda: f64, opts: &SolverOptions) -> Result<LassoFit> {
    fit_lasso_warm(ds, lambda, opts, None)
}

/// [`fit_lasso`] started from `warm` instead of zero.
pub fn fit_lasso_warm(
    ds: &Dataset,
    lambda: f64,
    opts: &SolverOptions,
    warm: Option<&DVector<f64>>,
) -> Result<LassoFit> {
    check_lambda(lambda, "lambda")?;
    opts.validate()?;
    if lambda == 0.0 {
        return least_squares(ds, opts);
    }
    coordinate_descent(ds, lambda, 0.0, opts, warm)
}

/// One warm-started fit per grid value. The grid must be strictly
/// decreasing and nonnegative.
pub fn lasso_path(ds: &Dataset, grid: &[f64], opts: &SolverOptions) -> Result<Vec<LassoFit>> {
    check_decreasing(grid)?;
    let mut fits: Vec<LassoFit> = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let warm = fits.last().map(|f| &f.beta);
        fits.push(fit_lasso_warm(ds, lambda, opts, warm)?);
    }
    Ok(fits)
}

pub(crate) fn check_lambda(lambda: f64, name: &str) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidLambda(format!("{name} = {lambda}")));
    }
    Ok(())
}

pub(crate) fn check_decreasing(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("grid is empty".into()));
    }
    for &l in grid {
        check_lambda(l, "grid value")?;
    }
    if let Some(w) = grid.windows(2).find(|w| w[1] >= w[0]) {
        return Err(Error::InvalidGrid(format!(
            "grid must be strictly decreasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// λ = 0: minimum-norm least squares.
fn least_squares(ds: &Dataset, opts: &SolverOptions) -> Result<LassoFit> {
    let (beta, rank) = linalg::min_norm_lstsq(ds.x(), ds.y());
    let r = ds.y() - ds.x() * &beta;
    let grad = ds.x().tr_mul(&r);
    let kkt_residual = grad.amax();
    let objective = 0.5 * r.norm_squared();
    Ok(LassoFit {
        beta,
        lambda: 0.0,
        lambda2: 0.0,
        subgradient: None,
        iterations: 0,
        kkt_residual,
        kkt_tol: opts.kkt_tolerance(0.0, lambda_max(ds)),
        objective,
        non_unique: rank < ds.p(),
        trace: Vec::new(),
    })
}

fn penalized_objective(r: &DVector<f64>, beta: &DVector<f64>, l1: f64, l2: f64) -> f64 {
    let mut obj = 0.5 * r.norm_squared();
    if l1 > 0.0 {
        obj += l1 * beta.lp_norm(1);
    }
    if l2 > 0.0 {
        obj += 0.5 * l2 * beta.norm_squared();
    }
    obj
}

/// Max over coordinates of the violation of
/// `X_jᵀr − λ₂β_j ∈ λ₁ ∂|β_j|`.
pub(crate) fn kkt_residual(
    x: &DMatrix<f64>,
    r: &DVector<f64>,
    beta: &DVector<f64>,
    l1: f64,
    l2: f64,
) -> f64 {
    let grad = x.tr_mul(r);
    grad.iter()
        .zip(beta.iter())
        .map(|(&g, &b)| {
            let g = g - l2 * b;
            if b > 0.0 {
                (g - l1).abs()
            } else if b < 0.0 {
                (g + l1).abs()
            } else {
                (g.abs() - l1).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

pub(crate) fn coordinate_descent(
    ds: &Dataset,
    l1: f64,
    l2: f64,
    opts: &SolverOptions,
    warm: Option<&DVector<f64>>,
) -> Result<LassoFit> {
    let x = ds.x();
    let y = ds.y();
    let p = ds.p();
    let mut beta = match warm {
        Some(b) if b.len() == p => b.clone(),
        Some(b) => {
            return Err(Error::DimensionMismatch(format!(
                "warm start has length {}, design has {p} columns",
                b.len()
            )))
        }
        None => DVector::zeros(p),
    };
    let kkt_tol = opts.kkt_tolerance(l1, lambda_max(ds));
    let norms: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
    let order: Vec<usize> = match opts.order {
        CoordinateOrder::Cyclic => (0..p).collect(),
        CoordinateOrder::ReverseCyclic => (0..p).rev().collect(),
    };
    // columns with zero norm cannot move the fit
    for (j, &nj) in norms.iter().enumerate() {
        if nj == 0.0 {
            beta[j] = 0.0;
        }
    }

    let mut r = y - x * &beta;
    let mut obj = penalized_objective(&r, &beta, l1, l2);
    let mut trace = Vec::new();

    for sweep in 1..=opts.max_sweeps {
        for &j in &order {
            let nj = norms[j];
            if nj == 0.0 {
                continue;
            }
            let xj = x.column(j);
            let old = beta[j];
            let z = xj.dot(&r) + nj * old;
            // an exact copy of an active column sits on the threshold; keep
            // it at zero instead of leaving a roundoff sliver
            let new = if z.abs() <= l1 * (1.0 + ROUNDOFF_SLACK) {
                0.0
            } else {
                soft_threshold(z, l1) / (nj + l2)
            };
            if new != old {
                r.axpy(old - new, &xj, 1.0);
                beta[j] = new;
            }
        }
        let new_obj = penalized_objective(&r, &beta, l1, l2);
        debug_assert!(
            new_obj <= obj + 1e-12 * obj.abs().max(1.0),
            "objective increased over a sweep: {obj} -> {new_obj}"
        );
        if opts.record_trace {
            trace.push(new_obj);
        }
        let change = (obj - new_obj).abs() / new_obj.abs().max(f64::MIN_POSITIVE);
        obj = new_obj;
        if change <= opts.tol_obj || new_obj == 0.0 {
            // drop accumulated axpy error before judging stationarity
            r = y - x * &beta;
            obj = penalized_objective(&r, &beta, l1, l2);
            let kkt = kkt_residual(x, &r, &beta, l1, l2);
            if kkt <= kkt_tol {
                return Ok(finish(x, r, beta, l1, l2, sweep, kkt, kkt_tol, obj, trace));
            }
        }
    }

    let r = y - x * &beta;
    let kkt = kkt_residual(x, &r, &beta, l1, l2);
    let obj = penalized_objective(&r, &beta, l1, l2);
    let best = finish(
        x,
        r,
        beta,
        l1,
        l2,
        opts.max_sweeps,
        kkt,
        kkt_tol,
        obj,
        trace,
    );
    Err(Error::NotConverged {
        lambda: l1,
        sweeps: opts.max_sweeps,
        kkt_residual: kkt,
        best: Box::new(best),
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    x: &DMatrix<f64>,
    r: DVector<f64>,
    beta: DVector<f64>,
    l1: f64,
    l2: f64,
    iterations: usize,
    kkt_residual: f64,
    kkt_tol: f64,
    objective: f64,
    trace: Vec<f64>,
) -> LassoFit {
    let subgradient = (l1 > 0.0).then(|| {
        let grad = x.tr_mul(&r) - &beta * l2;
        grad.map(|g| (g / l1).clamp(-1.0, 1.0))
    });
    LassoFit {
        beta,
        lambda: l1,
        lambda2: l2,
        subgradient,
        iterations,
        kkt_residual,
        kkt_tol,
        objective,
        non_unique: false,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::standardize;
    use crate::testutil::random_dataset;

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(5.0, 2.0), 3.0);
        assert_eq!(soft_threshold(-1.0, 2.0), 0.0);
        assert_eq!(soft_threshold(0.0, 0.0), 0.0);
        assert_eq!(soft_threshold(-5.0, 2.0), -3.0);
    }

    #[test]
    fn lambda_max_of_zero_response() {
        let ds = random_dataset(10, 3, 1);
        let zero = ds.with_response(DVector::zeros(10)).unwrap();
        assert_eq!(lambda_max(&zero), 0.0);
    }

    #[test]
    fn lambda_max_single_column() {
        let x = DMatrix::from_column_slice(2, 1, &[1.0, -1.0]);
        let ds = Dataset::new(x, DVector::from_vec(vec![3.5, -3.5])).unwrap();
        assert_eq!(lambda_max(&ds), 7.0);
    }

    #[test]
    fn zero_fit_at_lambda_max() {
        let ds = random_dataset(10, 4, 3);
        let lmax = lambda_max(&ds);
        let fit = fit_lasso(&ds, lmax, &SolverOptions::default()).unwrap();
        assert!(fit.beta.iter().all(|&b| b == 0.0));
        assert!(fit.kkt_residual <= fit.kkt_tol);
        let above = fit_lasso(&ds, 2.0 * lmax, &SolverOptions::default()).unwrap();
        assert!(above.beta.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn orthogonal_design_closed_form() {
        // Hadamard columns: XᵀX = n I after standardization
        let h = [
            [1.0, 1.0, 1.0],
            [-1.0, 1.0, -1.0],
            [1.0, -1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ];
        let x = DMatrix::from_fn(4, 3, |i, j| h[i][j]);
        let y = DVector::from_vec(vec![3.0, -1.0, 0.5, 2.0]);
        let ds = standardize(x, y).unwrap();
        let n = ds.n() as f64;
        let xty = ds.x().tr_mul(ds.y());
        for lambda in [0.1, 1.0, 2.5] {
            let fit = fit_lasso(&ds, lambda, &SolverOptions::default()).unwrap();
            for j in 0..3 {
                assert_close!(fit.beta[j], soft_threshold(xty[j], lambda) / n, 1e-12);
            }
        }
    }

    #[test]
    fn objective_plug_in_values() {
        let ds = random_dataset(12, 3, 5);
        let zero = DVector::zeros(3);
        assert_close!(
            lasso_objective(&ds, &zero, 4.0).unwrap(),
            0.5 * ds.y().norm_squared(),
            1e-12
        );
        let ols = fit_lasso(&ds, 0.0, &SolverOptions::default()).unwrap();
        assert!(!ols.non_unique);
        let rss = (ds.y() - ds.x() * &ols.beta).norm_squared();
        assert_close!(
            lasso_objective(&ds, &ols.beta, 0.0).unwrap(),
            0.5 * rss,
            1e-12
        );
        assert!(matches!(
            lasso_objective(&ds, &DVector::zeros(2), 1.0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn zero_lambda_on_rank_deficient_design_is_min_norm() {
        let base = random_dataset(8, 2, 9);
        let x = DMatrix::from_fn(8, 3, |i, j| base.x()[(i, j.min(1))]);
        let ds = Dataset::new(x, base.y().clone()).unwrap();
        let fit = fit_lasso(&ds, 0.0, &SolverOptions::default()).unwrap();
        assert!(fit.non_unique);
        assert!(fit.subgradient.is_none());
        // the duplicated pair shares the coefficient equally
        assert_close!(fit.beta[1], fit.beta[2], 1e-10);
    }

    #[test]
    fn path_rejects_bad_grids() {
        let ds = random_dataset(10, 3, 2);
        let opts = SolverOptions::default();
        assert!(matches!(
            lasso_path(&ds, &[], &opts),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            lasso_path(&ds, &[1.0, 1.0], &opts),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            lasso_path(&ds, &[1.0, -1.0], &opts),
            Err(Error::InvalidLambda(_))
        ));
    }

    #[test]
    fn path_single_point_and_warm_start() {
        let ds = random_dataset(30, 5, 4);
        let opts = SolverOptions::default();
        let lmax = lambda_max(&ds);
        let single = lasso_path(&ds, &[lmax], &opts).unwrap();
        assert_eq!(single.len(), 1);
        assert!(single[0].beta.iter().all(|&b| b == 0.0));

        let path = lasso_path(&ds, &[0.5 * lmax, 0.1 * lmax], &opts).unwrap();
        let cold = fit_lasso(&ds, 0.1 * lmax, &opts).unwrap();
        assert!((&path[1].beta - &cold.beta).amax() < 1e-8);
        assert!(path[1].objective <= path[0].objective);
    }

    #[test]
    fn truncated_fit_reports_best_iterate() {
        let ds = random_dataset(30, 5, 6);
        let opts = SolverOptions {
            max_sweeps: 1,
            ..Default::default()
        };
        match fit_lasso(&ds, 0.01 * lambda_max(&ds), &opts) {
            Err(Error::NotConverged { best, sweeps, .. }) => {
                assert_eq!(sweeps, 1);
                assert_eq!(best.beta.len(), 5);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn invalid_options_rejected() {
        let ds = random_dataset(10, 2, 1);
        let bad = SolverOptions {
            tol_obj: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            fit_lasso(&ds, 1.0, &bad),
            Err(Error::InvalidOptions(_))
        ));
        assert!(matches!(
            fit_lasso(&ds, -1.0, &SolverOptions::default()),
            Err(Error::InvalidLambda(_))
        ));
    }

    #[test]
    fn kkt_conditions_at_convergence() {
        let ds = random_dataset(40, 8, 11);
        let lambda = 0.2 * lambda_max(&ds);
        let fit = fit_lasso(&ds, lambda, &SolverOptions::default()).unwrap();
        let corr = ds.x().tr_mul(&(ds.y() - ds.x() * &fit.beta));
        for j in 0..8 {
            assert!(corr[j].abs() <= lambda + fit.kkt_tol);
            if fit.beta[j] != 0.0 {
                assert_close!(corr[j], lambda * fit.beta[j].signum(), fit.kkt_tol);
            }
        }
        let v = fit.subgradient.as_ref().unwrap();
        assert!(v.iter().all(|vj| vj.abs() <= 1.0 + 1e-10));
    }
}
