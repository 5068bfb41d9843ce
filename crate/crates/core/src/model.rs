//! Regression data model: standardized designs, supports and the
//! active/redundant partition of the empirical covariance.
//!
//! All estimators in this crate work on the standardized scale: every
//! column of `X` has mean zero and `(1/n) X_jᵀX_j = 1`, and `Y` is centered
//! (but not scaled). [`StdRecord`] keeps what is needed to map coefficients
//! back to the original units.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Per-column centering and scaling applied by [`standardize`].
#[derive(Debug, Clone, PartialEq)]
pub struct StdRecord {
    pub x_means: DVector<f64>,
    pub x_scales: DVector<f64>,
    pub y_mean: f64,
}

impl StdRecord {
    /// Map standardized-scale coefficients to the original scale.
    /// Returns `(intercept, coefficients)`.
    pub fn to_original(&self, beta: &DVector<f64>) -> (f64, DVector<f64>) {
        let coef = beta.component_div(&self.x_scales);
        let intercept = self.y_mean - self.x_means.dot(&coef);
        (intercept, coef)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    standardized: bool,
    record: Option<StdRecord>,
}

impl Dataset {
    /// Wrap raw data without transforming it.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        validate(&x, &y)?;
        Ok(Self {
            x,
            y,
            standardized: false,
            record: None,
        })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn std_record(&self) -> Option<&StdRecord> {
        self.record.as_ref()
    }

    /// Dataset restricted to `columns` (in the given order). Flags and the
    /// matching slice of the standardization record are kept.
    pub(crate) fn select_columns(&self, columns: &[usize]) -> Self {
        let x = self.x.select_columns(columns);
        let record = self.record.as_ref().map(|r| StdRecord {
            x_means: DVector::from_iterator(columns.len(), columns.iter().map(|&j| r.x_means[j])),
            x_scales: DVector::from_iterator(columns.len(), columns.iter().map(|&j| r.x_scales[j])),
            y_mean: r.y_mean,
        });
        Self {
            x,
            y: self.y.clone(),
            standardized: self.standardized,
            record,
        }
    }

    /// Same design, different response. Used to build noiseless and
    /// synthetic responses on a fixed design.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "response has length {}, design has {} rows",
                y.len(),
                self.n()
            )));
        }
        let mean = y.mean();
        let y = if self.standardized {
            y.add_scalar(-mean)
        } else {
            y
        };
        Ok(Self {
            x: self.x.clone(),
            y,
            standardized: self.standardized,
            record: self.record.clone(),
        })
    }
}

fn validate(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    let (n, p) = x.shape();
    if n < 2 {
        return Err(Error::TooFewObservations(n));
    }
    if p == 0 {
        return Err(Error::NoColumns);
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "response has length {}, design has {n} rows",
            y.len()
        )));
    }
    for col in 0..p {
        for row in 0..n {
            if !x[(row, col)].is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
    }
    if let Some(row) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row, col: p });
    }
    Ok(())
}

/// Center every column, scale it to `(1/n) X_jᵀX_j = 1`, and center `Y`.
pub fn standardize(mut x: DMatrix<f64>, mut y: DVector<f64>) -> Result<Dataset> {
    validate(&x, &y)?;
    let n = x.nrows() as f64;
    let p = x.ncols();
    let mut means = DVector::zeros(p);
    let mut scales = DVector::zeros(p);
    for (j, mut col) in x.column_iter_mut().enumerate() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
        let scale = (col.norm_squared() / n).sqrt();
        // relative test so that columns holding large constants still count as constant
        if scale == 0.0 || scale <= 1e-12 * mean.abs() {
            return Err(Error::ZeroVarianceColumn(j));
        }
        col /= scale;
        means[j] = mean;
        scales[j] = scale;
    }
    let y_mean = y.mean();
    y.add_scalar_mut(-y_mean);
    Ok(Dataset {
        x,
        y,
        standardized: true,
        record: Some(StdRecord {
            x_means: means,
            x_scales: scales,
            y_mean,
        }),
    })
}

/// `C = (1/n) XᵀX`, symmetrized.
pub fn empirical_covariance(ds: &Dataset) -> DMatrix<f64> {
    let n = ds.n() as f64;
    let mut c = ds.x().tr_mul(ds.x()) / n;
    let p = c.nrows();
    for i in 0..p {
        for j in (i + 1)..p {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

/// Sorted, duplicate-free set of column indices in `[0, p)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActiveSet {
    indices: Vec<usize>,
    p: usize,
}

impl ActiveSet {
    /// Sorts and deduplicates `indices`; fails if any index is `>= p`.
    pub fn new(mut indices: Vec<usize>, p: usize) -> Result<Self> {
        if let Some(&index) = indices.iter().find(|&&i| i >= p) {
            return Err(Error::IndexOutOfRange { index, p });
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Self { indices, p })
    }

    pub fn empty(p: usize) -> Self {
        Self {
            indices: Vec::new(),
            p,
        }
    }

    pub fn full(p: usize) -> Self {
        Self {
            indices: (0..p).collect(),
            p,
        }
    }

    /// Indices `j` with `beta[j] != 0`.
    pub fn support(beta: &DVector<f64>) -> Self {
        Self {
            indices: beta
                .iter()
                .enumerate()
                .filter(|(_, &b)| b != 0.0)
                .map(|(j, _)| j)
                .collect(),
            p: beta.len(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn complement(&self) -> Self {
        Self {
            indices: (0..self.p).filter(|&j| !self.contains(j)).collect(),
            p: self.p,
        }
    }

    pub fn is_subset(&self, other: &ActiveSet) -> bool {
        self.iter().all(|j| other.contains(j))
    }

    pub fn intersection_len(&self, other: &ActiveSet) -> usize {
        self.iter().filter(|&j| other.contains(j)).count()
    }
}

/// Blocks of `C` under the permutation that puts the active set first.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePartition {
    pub c11: DMatrix<f64>,
    pub c12: DMatrix<f64>,
    pub c21: DMatrix<f64>,
    pub c22: DMatrix<f64>,
    /// Active indices followed by inactive ones, both ascending.
    pub order: Vec<usize>,
}

impl CovariancePartition {
    /// `C` permuted to the active-first ordering, rebuilt from the blocks.
    pub fn reassemble(&self) -> DMatrix<f64> {
        let s = self.c11.nrows();
        let p = self.order.len();
        let mut out = DMatrix::zeros(p, p);
        out.view_mut((0, 0), (s, s)).copy_from(&self.c11);
        out.view_mut((0, s), (s, p - s)).copy_from(&self.c12);
        out.view_mut((s, 0), (p - s, s)).copy_from(&self.c21);
        out.view_mut((s, s), (p - s, p - s)).copy_from(&self.c22);
        out
    }
}

pub fn partition_covariance(c: &DMatrix<f64>, support: &ActiveSet) -> Result<CovariancePartition> {
    let p = c.nrows();
    if c.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    if support.p() != p {
        return Err(Error::DimensionMismatch(format!(
            "support built for p = {}, covariance has p = {p}",
            support.p()
        )));
    }
    let active = support.indices().to_vec();
    let inactive = support.complement().indices().to_vec();
    let block = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| c[(rows[i], cols[j])])
    };
    let c11 = block(&active, &active);
    let c12 = block(&active, &inactive);
    let c21 = c12.transpose();
    let c22 = block(&inactive, &inactive);
    let mut order = active;
    order.extend(inactive);
    Ok(CovariancePartition {
        c11,
        c12,
        c21,
        c22,
        order,
    })
}
