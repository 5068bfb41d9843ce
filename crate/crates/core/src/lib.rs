//! # dlselect
//!
//! Sparse high-dimensional linear regression with correlated predictors.
//!
//! The central procedure is the dual Lasso selector: fit the Lasso
//! `½‖Y − Xβ‖² + λ‖β‖₁` by coordinate descent, form the unique dual optimum
//! `θ̂ = Y − Xβ̂`, and select every predictor whose dual constraint
//! `|X_jᵀθ̂| ≤ λ` is tight. Because `θ̂` is unique even when `β̂` is not, the
//! selection picks up whole groups of correlated active predictors where
//! the Lasso keeps only one. Refitting the selected columns by Ridge
//! regression gives the combined DLSelect+Ridge estimator.
//!
//! Alongside the estimators the crate provides numerical checks of the
//! irrepresentable condition and its generalized-inverse relaxation, the
//! simulation designs used to compare Lasso, Ridge, Elastic-Net and
//! DLSelect+Ridge, and the replication harness that produces the
//! comparison tables.
//!
//! Modules:
//!  * [`model`]: datasets, standardization, supports, covariance partition
//!  * [`lasso`]: coordinate-descent Lasso, paths, `λ_max`
//!  * [`dual`]: dual vector, dual objective, duality gap, dual active set
//!  * [`baseline`]: Ridge and Elastic-Net
//!  * [`conditions`]: PSD / IC / PIC / beta-min checks
//!  * [`pipeline`]: DLSelect+Ridge and its two one-dimensional tuning loops
//!  * [`sim`]: simulation designs and replication data
//!  * [`eval`]: metrics, experiment runner and report tables
//!  * [`io`]: CSV ingestion and matrix output
//!  * [`fixtures`]: the small covariance examples with known IC/PIC behavior

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b): (f64, f64) = ($a, $b);
        assert!((a - b).abs() <= $tol, "{a} vs {b} (tol {:e})", $tol);
    }};
}

pub mod baseline;
pub mod conditions;
pub mod dual;
mod error;
pub mod eval;
pub mod fixtures;
pub mod io;
pub mod lasso;
mod linalg;
pub mod model;
pub mod pipeline;
pub mod sim;

#[cfg(test)]
mod testutil;

pub use baseline::{fit_enet, fit_ridge, RidgeFit};
pub use conditions::{
    beta_min_margin, check_ic, check_pic, check_psd, enumerate_candidate_submatrices, sign_vector,
    ConditionKind, ConditionReport, PicOptions, SignVector,
};
pub use dual::{dual_active_set, dual_objective, dual_vector, duality_gap, DualState};
pub use error::{Error, Result};
pub use eval::{
    aggregate, fdr, mse, run_experiment, tpr, ExperimentConfig, ExperimentResult, Method,
    MethodResult, ReportFormat,
};
pub use lasso::{
    fit_lasso, lambda_max, lasso_objective, lasso_path, soft_threshold, CoordinateOrder, LassoFit,
    SolverOptions,
};
pub use model::{
    empirical_covariance, partition_covariance, standardize, ActiveSet, CovariancePartition,
    Dataset, StdRecord,
};
pub use pipeline::{
    dlselect, dlselect_ridge, reduced_design, tune_lambda1, tune_lambda2, PipelineOptions,
    PipelineResult,
};
pub use sim::{generate_replication, DesignKind, DesignSpec, ReplicationData};

/// Re-exported so downstream crates use the same matrix types.
pub use nalgebra::{DMatrix, DVector};
