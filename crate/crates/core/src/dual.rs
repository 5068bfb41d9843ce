//! The Lasso dual and the dual active set.
//!
//! The dual of `min ½‖Y − Xβ‖² + λ‖β‖₁` is
//!
//! ```text
//! maximize  g(θ) = θᵀY − ½‖θ‖²    subject to |X_jᵀθ| ≤ λ for all j
//! ```
//!
//! and its optimum is the Lasso residual `θ̂ = Y − Xβ̂`. `θ̂` is unique even
//! when `β̂` is not. The dual active set collects the predictors whose
//! constraint is tight, `|X_jᵀθ̂| = λ`; in floating point "tight" means
//! within `tol_active · λ` of the boundary.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::lasso::{lasso_objective, LassoFit};
use crate::model::{ActiveSet, Dataset};

/// Default relative boundary tolerance for the dual active set.
pub const DEFAULT_TOL_ACTIVE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub theta: DVector<f64>,
    pub lambda: f64,
    /// `X_jᵀθ̂` for every column.
    pub correlations: DVector<f64>,
    pub active: ActiveSet,
    /// `min_j (λ − |X_jᵀθ̂|)` over all columns; negative means infeasible.
    pub feasibility_margin: f64,
    /// `min_j (λ − |X_jᵀθ̂|)` over columns outside the active set
    /// (infinite when every column is active).
    pub separation_margin: f64,
    pub tol_active: f64,
}

pub fn dual_vector(ds: &Dataset, fit: &LassoFit) -> Result<DualState> {
    dual_vector_with(ds, fit, DEFAULT_TOL_ACTIVE)
}

/// [`dual_vector`] with an explicit boundary tolerance.
pub fn dual_vector_with(ds: &Dataset, fit: &LassoFit, tol_active: f64) -> Result<DualState> {
    if fit.beta.len() != ds.p() {
        return Err(Error::DimensionMismatch(format!(
            "fit has {} coefficients, design has {} columns",
            fit.beta.len(),
            ds.p()
        )));
    }
    if !(0.0..1.0).contains(&tol_active) {
        return Err(Error::InvalidOptions(format!("tol_active = {tol_active}")));
    }
    let lambda = fit.lambda;
    let theta = ds.y() - ds.x() * &fit.beta;
    let correlations = ds.x().tr_mul(&theta);
    let max_correlation = correlations.amax();
    if max_correlation > lambda + 10.0 * fit.kkt_tol {
        return Err(Error::InfeasibleDual {
            max_correlation,
            lambda,
        });
    }
    let active = active_from(&correlations, lambda, tol_active);
    let feasibility_margin = correlations
        .iter()
        .map(|c| lambda - c.abs())
        .fold(f64::INFINITY, f64::min);
    let separation_margin = correlations
        .iter()
        .enumerate()
        .filter(|(j, _)| !active.contains(*j))
        .map(|(_, c)| lambda - c.abs())
        .fold(f64::INFINITY, f64::min);
    Ok(DualState {
        theta,
        lambda,
        correlations,
        active,
        feasibility_margin,
        separation_margin,
        tol_active,
    })
}

fn active_from(correlations: &DVector<f64>, lambda: f64, tol_active: f64) -> ActiveSet {
    if lambda == 0.0 {
        return ActiveSet::empty(correlations.len());
    }
    let threshold = lambda * (1.0 - tol_active);
    let indices = correlations
        .iter()
        .enumerate()
        .filter(|(_, c)| c.abs() >= threshold)
        .map(|(j, _)| j)
        .collect();
    ActiveSet::new(indices, correlations.len()).expect("indices come from the correlation vector")
}

/// `g(θ) = θᵀY − ½‖θ‖²`.
pub fn dual_objective(y: &DVector<f64>, theta: &DVector<f64>) -> Result<f64> {
    if y.len() != theta.len() {
        return Err(Error::DimensionMismatch(format!(
            "Y has length {}, theta has length {}",
            y.len(),
            theta.len()
        )));
    }
    Ok(theta.dot(y) - 0.5 * theta.norm_squared())
}

/// Primal objective minus dual objective at `θ = Y − Xβ̂`, with `θ`
/// shrunk radially onto the feasible region first if solver slack left it
/// marginally outside.
///
/// # Panics
///
/// If `fit` was not produced on a design with the same number of columns.
pub fn duality_gap(ds: &Dataset, fit: &LassoFit) -> f64 {
    let primal =
        lasso_objective(ds, &fit.beta, fit.lambda).expect("fit dimensions must match the dataset");
    let mut theta = ds.y() - ds.x() * &fit.beta;
    let max_correlation = ds.x().tr_mul(&theta).amax();
    if fit.lambda > 0.0 && max_correlation > fit.lambda {
        theta *= fit.lambda / max_correlation;
    }
    let dual = dual_objective(ds.y(), &theta).expect("theta has length n");
    primal - dual
}

/// Indices whose dual constraint is tight within the state's tolerance.
pub fn dual_active_set(state: &DualState) -> Result<ActiveSet> {
    if state.lambda == 0.0 {
        return Err(Error::DegenerateLambda);
    }
    Ok(active_from(
        &state.correlations,
        state.lambda,
        state.tol_active,
    ))
}
