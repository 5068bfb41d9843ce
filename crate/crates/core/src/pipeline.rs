//! DLSelect+Ridge: Lasso fit, dual vector, dual active set, Ridge refit on
//! the selected columns.
//!
//! Tuning is two independent one-dimensional searches on a held-out
//! validation set. `λ₁` is chosen by the validation MSE of the Lasso fit
//! itself and `λ₂` by the validation MSE of the Ridge refit on the selected
//! columns, so the cost is `|grid₁| + |grid₂|` solver calls rather than
//! `|grid₁| · |grid₂|`. Ties within `1e-12` go to the larger penalty.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::baseline::{fit_ridge, RidgeFit};
use crate::dual::{dual_active_set, dual_vector_with, DualState, DEFAULT_TOL_ACTIVE};
use crate::error::{Error, Result};
use crate::eval::mse;
use crate::lasso::{fit_lasso, lambda_max, lasso_path, LassoFit, SolverOptions};
use crate::model::{ActiveSet, Dataset};

const TIE_TOL: f64 = 1e-12;
pub const DEFAULT_GRID_SIZE: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub solver: SolverOptions,
    pub tol_active: f64,
    /// Fit the `λ₁` grid with independent cold starts in parallel instead
    /// of one warm-started path.
    pub parallel_grid: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            tol_active: DEFAULT_TOL_ACTIVE,
            parallel_grid: false,
        }
    }
}

/// A column subset of a dataset together with the original column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDesign {
    pub data: Dataset,
    pub columns: ActiveSet,
}

impl ReducedDesign {
    /// Place reduced-design coefficients back at their original indices,
    /// with exact zeros elsewhere.
    pub fn embed(&self, coef: &DVector<f64>) -> DVector<f64> {
        assert_eq!(
            coef.len(),
            self.columns.len(),
            "one coefficient per selected column"
        );
        let mut full = DVector::zeros(self.columns.p());
        for (k, j) in self.columns.iter().enumerate() {
            full[j] = coef[k];
        }
        full
    }
}

pub fn reduced_design(ds: &Dataset, selected: &ActiveSet) -> Result<ReducedDesign> {
    if selected.is_empty() {
        return Err(Error::EmptySelection);
    }
    if selected.p() != ds.p() {
        return Err(Error::DimensionMismatch(format!(
            "selection built for p = {}, design has {} columns",
            selected.p(),
            ds.p()
        )));
    }
    Ok(ReducedDesign {
        data: ds.select_columns(selected.indices()),
        columns: selected.clone(),
    })
}

/// Output of the selection stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub active: ActiveSet,
    pub dual: DualState,
    pub fit: LassoFit,
}

/// Dual active set of the Lasso fit at `lambda1 ∈ (0, λ_max]`.
pub fn dlselect(ds: &Dataset, lambda1: f64, opts: &PipelineOptions) -> Result<Selection> {
    let lmax = lambda_max(ds);
    if !(lambda1 > 0.0 && lambda1 <= lmax) {
        return Err(Error::InvalidLambda(format!(
            "lambda1 = {lambda1} outside (0, lambda_max = {lmax}]"
        )));
    }
    let fit = fit_lasso(ds, lambda1, &opts.solver)?;
    select_from_fit(ds, fit, opts.tol_active)
}

fn select_from_fit(ds: &Dataset, fit: LassoFit, tol_active: f64) -> Result<Selection> {
    let dual = dual_vector_with(ds, &fit, tol_active)?;
    let active = dual_active_set(&dual)?;
    if active.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(Selection { active, dual, fit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningPoint {
    pub lambda: f64,
    pub val_mse: f64,
    /// Dual active set size for `λ₁`, number of columns for `λ₂`.
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TuningTrace {
    /// In the order evaluated (decreasing penalty).
    pub points: Vec<TuningPoint>,
    pub solver_calls: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub lasso_kkt_residual: f64,
    pub lasso_iterations: usize,
    pub feasibility_margin: f64,
    pub separation_margin: f64,
    pub tol_active: f64,
    pub ridge_normal_residual: f64,
    /// The dual selection was empty and the single most correlated column
    /// was used instead.
    pub fallback: bool,
    pub lambda1_trace: Option<TuningTrace>,
    pub lambda2_trace: Option<TuningTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub lambda1: f64,
    pub lambda2: f64,
    pub selected: ActiveSet,
    /// Ridge coefficients on `selected`, exact zeros elsewhere.
    pub beta: DVector<f64>,
    /// The Lasso fit the selection came from.
    pub lasso: LassoFit,
    pub diagnostics: Diagnostics,
}

pub fn dlselect_ridge(
    ds: &Dataset,
    lambda1: f64,
    lambda2: f64,
    opts: &PipelineOptions,
) -> Result<PipelineResult> {
    if !(lambda2 > 0.0 && lambda2.is_finite()) {
        return Err(Error::NonPositiveLambda(lambda2));
    }
    let sel = dlselect(ds, lambda1, opts)?;
    let reduced = reduced_design(ds, &sel.active)?;
    let ridge = fit_ridge(&reduced.data, lambda2)?;
    Ok(assemble(sel, &reduced, ridge, false, None, None))
}

fn assemble(
    sel: Selection,
    reduced: &ReducedDesign,
    ridge: RidgeFit,
    fallback: bool,
    lambda1_trace: Option<TuningTrace>,
    lambda2_trace: Option<TuningTrace>,
) -> PipelineResult {
    PipelineResult {
        lambda1: sel.fit.lambda,
        lambda2: ridge.lambda2,
        selected: sel.active,
        beta: reduced.embed(&ridge.beta),
        diagnostics: Diagnostics {
            lasso_kkt_residual: sel.fit.kkt_residual,
            lasso_iterations: sel.fit.iterations,
            feasibility_margin: sel.dual.feasibility_margin,
            separation_margin: sel.dual.separation_margin,
            tol_active: sel.dual.tol_active,
            ridge_normal_residual: ridge.normal_residual,
            fallback,
            lambda1_trace,
            lambda2_trace,
        },
        lasso: sel.fit,
    }
}

/// Sorted strictly decreasing with duplicates removed; every value must be
/// positive and finite.
pub fn normalize_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("grid is empty".into()));
    }
    if let Some(v) = grid.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidGrid(format!(
            "grid value {v} is not positive"
        )));
    }
    let mut g = grid.to_vec();
    g.sort_by(|a, b| b.total_cmp(a));
    g.dedup();
    Ok(g)
}

/// `size` log-spaced values from `λ_max` down to `1e-3 · λ_max`.
pub fn default_lambda1_grid(lambda_max: f64, size: usize) -> Vec<f64> {
    log_grid(lambda_max, 1e-3 * lambda_max, size)
}

/// `size` log-spaced values from `1e4` down to `1e-4`.
pub fn default_lambda2_grid(size: usize) -> Vec<f64> {
    log_grid(1e4, 1e-4, size)
}

/// `size` log-spaced values from `hi` down to `lo`.
pub fn log_grid(hi: f64, lo: f64, size: usize) -> Vec<f64> {
    match size {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let (a, b) = (hi.ln(), lo.ln());
            (0..size)
                .map(|k| (a + (b - a) * k as f64 / (size - 1) as f64).exp())
                .collect()
        }
    }
}

/// Index of the smallest value; ties within `TIE_TOL` keep the earlier
/// (larger-penalty) entry.
fn argmin_prefer_first(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (k, v) in values.into_iter().enumerate() {
        if v < best.1 - TIE_TOL {
            best = (k, v);
        }
    }
    best.0
}

fn predict_mse(ds: &Dataset, beta: &DVector<f64>) -> Result<f64> {
    mse(ds.y(), &(ds.x() * beta))
}

fn lambda1_fits(train: &Dataset, grid: &[f64], opts: &PipelineOptions) -> Result<Vec<LassoFit>> {
    if opts.parallel_grid {
        grid.par_iter()
            .map(|&l| fit_lasso(train, l, &opts.solver))
            .collect()
    } else {
        lasso_path(train, grid, &opts.solver)
    }
}

struct Lambda1Search {
    best: usize,
    fits: Vec<LassoFit>,
    trace: TuningTrace,
}

fn search_lambda1(
    train: &Dataset,
    val: &Dataset,
    grid: &[f64],
    opts: &PipelineOptions,
) -> Result<Lambda1Search> {
    if train.p() != val.p() {
        return Err(Error::DimensionMismatch(format!(
            "training has {} columns, validation has {}",
            train.p(),
            val.p()
        )));
    }
    let grid = normalize_grid(grid)?;
    let fits = lambda1_fits(train, &grid, opts)?;
    let mut points = Vec::with_capacity(fits.len());
    for fit in &fits {
        let dual = dual_vector_with(train, fit, opts.tol_active)?;
        points.push(TuningPoint {
            lambda: fit.lambda,
            val_mse: predict_mse(val, &fit.beta)?,
            selected: dual.active.len(),
        });
    }
    let best = argmin_prefer_first(points.iter().map(|p| p.val_mse));
    Ok(Lambda1Search {
        best,
        trace: TuningTrace {
            points,
            solver_calls: fits.len(),
        },
        fits,
    })
}

/// `λ₁` minimizing the validation MSE of the Lasso fit.
pub fn tune_lambda1(
    train: &Dataset,
    val: &Dataset,
    grid: &[f64],
    opts: &PipelineOptions,
) -> Result<(f64, TuningTrace)> {
    let s = search_lambda1(train, val, grid, opts)?;
    Ok((s.fits[s.best].lambda, s.trace))
}

/// Like [`tune_lambda1`] but also returns the Lasso fit at the chosen `λ₁`.
pub fn tune_lasso(
    train: &Dataset,
    val: &Dataset,
    grid: &[f64],
    opts: &PipelineOptions,
) -> Result<(LassoFit, TuningTrace)> {
    let mut s = search_lambda1(train, val, grid, opts)?;
    Ok((s.fits.swap_remove(s.best), s.trace))
}

/// `λ₂` minimizing the validation MSE of the Ridge fit, together with
/// that fit.
pub fn tune_ridge(train: &Dataset, val: &Dataset, grid: &[f64]) -> Result<(RidgeFit, TuningTrace)> {
    if train.p() != val.p() {
        return Err(Error::DimensionMismatch(format!(
            "training has {} columns, validation has {}",
            train.p(),
            val.p()
        )));
    }
    let grid = normalize_grid(grid)?;
    let mut fits = grid
        .iter()
        .map(|&l| fit_ridge(train, l))
        .collect::<Result<Vec<_>>>()?;
    let points = fits
        .iter()
        .map(|f| {
            Ok(TuningPoint {
                lambda: f.lambda2,
                val_mse: predict_mse(val, &f.beta)?,
                selected: train.p(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = argmin_prefer_first(points.iter().map(|p| p.val_mse));
    let trace = TuningTrace {
        points,
        solver_calls: fits.len(),
    };
    Ok((fits.swap_remove(best), trace))
}

pub fn tune_lambda2(
    train_reduced: &Dataset,
    val_reduced: &Dataset,
    grid: &[f64],
) -> Result<(f64, TuningTrace)> {
    tune_ridge(train_reduced, val_reduced, grid).map(|(f, t)| (f.lambda2, t))
}

/// Full sequential tuning: `λ₁` on the Lasso path, dual selection at the
/// chosen `λ₁`, then `λ₂` on the reduced design. The final model reuses
/// the fits from the two searches.
pub fn tune_dlselect_ridge(
    train: &Dataset,
    val: &Dataset,
    grid1: &[f64],
    grid2: &[f64],
    opts: &PipelineOptions,
) -> Result<PipelineResult> {
    let mut search = search_lambda1(train, val, grid1, opts)?;
    let fit = search.fits.swap_remove(search.best);
    let (sel, fallback) = match select_from_fit(train, fit.clone(), opts.tol_active) {
        Ok(sel) => (sel, false),
        Err(Error::EmptySelection) => {
            let corr = train.x().tr_mul(train.y());
            let j = corr.iamax();
            log::warn!(
                "empty dual selection at lambda1 = {}; falling back to column {j}",
                fit.lambda
            );
            let dual = dual_vector_with(train, &fit, opts.tol_active)?;
            let active = ActiveSet::new(vec![j], train.p())?;
            (Selection { active, dual, fit }, true)
        }
        Err(e) => return Err(e),
    };
    let reduced = reduced_design(train, &sel.active)?;
    let val_reduced = reduced_design(val, &sel.active)?;
    let (ridge, trace2) = tune_ridge(&reduced.data, &val_reduced.data, grid2)?;
    Ok(assemble(
        sel,
        &reduced,
        ridge,
        fallback,
        Some(search.trace),
        Some(trace2),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::fit_ridge;
    use crate::model::standardize;
    use crate::testutil::{gaussian_matrix, random_dataset};
    use nalgebra::DMatrix;

    #[test]
    fn reduced_design_bookkeeping() {
        let ds = random_dataset(12, 3, 1);
        let all = reduced_design(&ds, &ActiveSet::full(3)).unwrap();
        assert_eq!(all.data, ds);
        let one = reduced_design(&ds, &ActiveSet::new(vec![2], 3).unwrap()).unwrap();
        assert_eq!(one.data.p(), 1);
        assert_eq!(one.data.x().column(0), ds.x().column(2));
        assert!(one.data.is_standardized());
        let e = one.embed(&DVector::from_vec(vec![1.5]));
        assert_eq!(e.as_slice(), &[0.0, 0.0, 1.5]);
        assert!(matches!(
            reduced_design(&ds, &ActiveSet::empty(3)),
            Err(Error::EmptySelection)
        ));
    }

    #[test]
    fn at_lambda_max_only_the_argmax_column_is_selected() {
        let ds = random_dataset(30, 5, 2);
        let lmax = lambda_max(&ds);
        let j = ds.x().tr_mul(ds.y()).iamax();
        let sel = dlselect(&ds, lmax, &PipelineOptions::default()).unwrap();
        assert_eq!(sel.active.indices(), &[j]);
        assert!(dlselect(&ds, 1.01 * lmax, &PipelineOptions::default()).is_err());
        assert!(dlselect(&ds, 0.0, &PipelineOptions::default()).is_err());
    }

    #[test]
    fn duplicated_columns_are_both_selected() {
        let z = gaussian_matrix(40, 3, 3);
        let x = DMatrix::from_fn(40, 4, |i, j| z[(i, [0, 0, 1, 2][j])]);
        let y = &x * DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
        let ds = standardize(x, y).unwrap();
        let sel = dlselect(&ds, 0.05 * lambda_max(&ds), &PipelineOptions::default()).unwrap();
        assert!(sel.active.contains(0) && sel.active.contains(1));
        assert!(!sel.active.contains(3));
        // cyclic coordinate descent puts all weight on the first copy
        assert_eq!(sel.fit.beta[1], 0.0);
        assert!(sel.fit.support().len() < sel.active.len());
    }

    #[test]
    fn full_selection_equals_full_ridge() {
        let ds = random_dataset(40, 3, 4);
        // at a tiny λ₁ every column of a generic design is active
        let res = dlselect_ridge(
            &ds,
            1e-6 * lambda_max(&ds),
            2.0,
            &PipelineOptions::default(),
        )
        .unwrap();
        assert_eq!(res.selected.len(), 3);
        let ridge = fit_ridge(&ds, 2.0).unwrap();
        assert!((&res.beta - &ridge.beta).amax() < 1e-12);
    }

    #[test]
    fn coefficients_vanish_off_the_selection() {
        let ds = random_dataset(40, 8, 5);
        let res =
            dlselect_ridge(&ds, 0.3 * lambda_max(&ds), 1.0, &PipelineOptions::default()).unwrap();
        for j in 0..8 {
            if !res.selected.contains(j) {
                assert_eq!(res.beta[j], 0.0);
            }
        }
        assert!(matches!(
            dlselect_ridge(&ds, 0.3 * lambda_max(&ds), 0.0, &PipelineOptions::default()),
            Err(Error::NonPositiveLambda(_))
        ));
    }

    #[test]
    fn grids() {
        let g = default_lambda1_grid(10.0, 50);
        assert_eq!(g.len(), 50);
        assert_close!(g[0], 10.0, 1e-12);
        assert_close!(g[49], 0.01, 1e-14);
        let g2 = default_lambda2_grid(50);
        assert_close!(g2[0], 1e4, 1e-8);
        assert_close!(g2[49], 1e-4, 1e-16);
        assert!(g2.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(normalize_grid(&[1.0, 3.0, 1.0]).unwrap(), vec![3.0, 1.0]);
        assert!(normalize_grid(&[]).is_err());
        assert!(normalize_grid(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn single_point_grids() {
        let ds = random_dataset(30, 4, 6);
        let l = 0.2 * lambda_max(&ds);
        let (l1, trace) = tune_lambda1(&ds, &ds, &[l], &PipelineOptions::default()).unwrap();
        assert_eq!(l1, l);
        assert_eq!(trace.solver_calls, 1);
        let (l2, _) = tune_lambda2(&ds, &ds, &[3.0]).unwrap();
        assert_eq!(l2, 3.0);
    }

    #[test]
    fn noiseless_self_validation_picks_smallest_lambda1() {
        let z = gaussian_matrix(40, 5, 7);
        let y = &z * DVector::from_vec(vec![1.0, -2.0, 0.5, 0.0, 0.0]);
        let ds = standardize(z, y).unwrap();
        let grid = default_lambda1_grid(lambda_max(&ds), 20);
        let (l1, _) = tune_lambda1(&ds, &ds, &grid, &PipelineOptions::default()).unwrap();
        assert_eq!(l1, *grid.last().unwrap());
    }

    #[test]
    fn pure_noise_prefers_heavy_ridge() {
        let noise = |seed| gaussian_matrix(40, 1, seed).column(0).into_owned();
        let train = standardize(gaussian_matrix(40, 10, 8), noise(9)).unwrap();
        let val = standardize(gaussian_matrix(40, 10, 10), noise(11)).unwrap();
        let (l2, trace) = tune_lambda2(&train, &val, &[1e-4, 1e4]).unwrap();
        assert_eq!(l2, 1e4);
        assert!(trace.points[0].val_mse < trace.points[1].val_mse);
    }

    #[test]
    fn duplicate_grid_entries_are_ignored() {
        let train = random_dataset(30, 5, 12);
        let val = random_dataset(30, 5, 13);
        let a = tune_lambda2(&train, &val, &[0.1, 1.0, 10.0]).unwrap();
        let b = tune_lambda2(&train, &val, &[10.0, 0.1, 1.0, 1.0, 0.1]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ties_go_to_the_larger_penalty() {
        assert_eq!(argmin_prefer_first([1.0, 1.0 - 1e-13, 2.0]), 0);
        assert_eq!(argmin_prefer_first([1.0, 0.5, 0.5]), 1);
        // Y = 0: every λ₁ gives β̂ = 0 and the same validation MSE
        let ds = random_dataset(20, 3, 14);
        let zero = ds.with_response(DVector::zeros(20)).unwrap();
        let (l1, _) =
            tune_lambda1(&zero, &zero, &[0.5, 2.0, 1.0], &PipelineOptions::default()).unwrap();
        assert_eq!(l1, 2.0);
    }

    #[test]
    fn sequential_tuning_call_count() {
        let train = random_dataset(40, 8, 15);
        let val = random_dataset(40, 8, 16);
        let g1 = default_lambda1_grid(lambda_max(&train), 7);
        let g2 = default_lambda2_grid(5);
        let res = tune_dlselect_ridge(&train, &val, &g1, &g2, &PipelineOptions::default()).unwrap();
        let d = &res.diagnostics;
        let calls = d.lambda1_trace.as_ref().unwrap().solver_calls
            + d.lambda2_trace.as_ref().unwrap().solver_calls;
        assert_eq!(calls, g1.len() + g2.len());
        assert!(res.lasso.support().is_subset(&res.selected));
    }

    #[test]
    fn parallel_and_warm_grids_agree() {
        let train = random_dataset(40, 8, 17);
        let val = random_dataset(40, 8, 18);
        let g1 = default_lambda1_grid(lambda_max(&train), 10);
        let warm = tune_lambda1(&train, &val, &g1, &PipelineOptions::default()).unwrap();
        let par = PipelineOptions {
            parallel_grid: true,
            ..Default::default()
        };
        let cold = tune_lambda1(&train, &val, &g1, &par).unwrap();
        assert_eq!(warm.0, cold.0);
        for (a, b) in warm.1.points.iter().zip(&cold.1.points) {
            assert_close!(a.val_mse, b.val_mse, 1e-8);
        }
    }
}
