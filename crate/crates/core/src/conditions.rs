//! Design-matrix conditions for support recovery.
//!
//! * PSD: smallest eigenvalue of `C`.
//! * Irrepresentable condition (IC): `‖C₂₁C₁₁⁻¹ sign(β₁)‖∞ < 1`, which
//!   needs `C₁₁` invertible.
//! * Pseudo irrepresentable condition (PIC): the same bound with `C₁₁⁻¹`
//!   replaced by every generalized inverse `G` that embeds `C_RR⁻¹` for a
//!   principal submatrix `C_RR` of `C₁₁` with `rank(C_RR) = rank(C₁₁)`, zeros
//!   elsewhere. When `C₁₁` is invertible the only candidate is the full
//!   index set and PIC reduces to IC.
//!
//! Margins are `1 − ‖·‖∞`; a condition holds when its margin exceeds
//! `tol_cond` (an open set, matching a strictly positive `η`).

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{partition_covariance, ActiveSet};

pub const DEFAULT_TOL_COND: f64 = 1e-8;
pub const DEFAULT_TOL_RANK: f64 = 1e-8;
pub const DEFAULT_CANDIDATE_CAP: usize = 10_000;
const SYMMETRY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-8;
const MAX_IC_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionKind {
    Psd,
    Ic,
    Pic,
    BetaMin,
}

impl std::fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConditionKind::Psd => "PSD",
            ConditionKind::Ic => "IC",
            ConditionKind::Pic => "PIC",
            ConditionKind::BetaMin => "BetaMin",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// Inactive column with the largest `|C₂₁C₁₁⁻¹ sign(β₁)|` entry.
    Row(usize),
    /// Candidate index set (original column indices) with the worst margin.
    Subset(Vec<usize>),
}

/// Margin of one inactive row (IC) or one candidate index set (PIC).
/// Indices are original column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMargin {
    pub indices: Vec<usize>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub kind: ConditionKind,
    pub holds: bool,
    pub margin: f64,
    pub witness: Option<Witness>,
    pub details: Vec<CandidateMargin>,
    /// Numerical rank of `C₁₁` (PIC only).
    pub rank: Option<usize>,
}

/// Componentwise sign in `{-1, 0, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(j) = values.iter().position(|v| !(-1..=1).contains(v)) {
            return Err(Error::InvalidSigns(j));
        }
        Ok(Self(values))
    }

    /// All `+1` on `support`, zero elsewhere.
    pub fn positive_on(support: &ActiveSet) -> Self {
        Self(
            (0..support.p())
                .map(|j| i8::from(support.contains(j)))
                .collect(),
        )
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn sign_vector(beta: &DVector<f64>) -> SignVector {
    SignVector(
        beta.iter()
            .map(|&b| {
                if b > 0.0 {
                    1
                } else if b < 0.0 {
                    -1
                } else {
                    0
                }
            })
            .collect(),
    )
}

fn require_symmetric(c: &DMatrix<f64>) -> Result<()> {
    if c.nrows() != c.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    let asym = linalg::max_asymmetry(c);
    if asym > SYMMETRY_TOL {
        return Err(Error::AsymmetricInput(asym));
    }
    Ok(())
}

/// Holds when the smallest eigenvalue is `>= -1e-8`; the margin is that
/// eigenvalue.
pub fn check_psd(c: &DMatrix<f64>) -> Result<ConditionReport> {
    require_symmetric(c)?;
    let min_eig = c.clone().symmetric_eigenvalues().min();
    Ok(ConditionReport {
        kind: ConditionKind::Psd,
        holds: min_eig >= -PSD_TOL,
        margin: min_eig,
        witness: None,
        details: Vec::new(),
        rank: None,
    })
}

/// Active-block signs as a float vector; zero signs on the support are rejected.
fn active_signs(signs: &SignVector, support: &ActiveSet) -> Result<DVector<f64>> {
    if signs.len() != support.p() {
        return Err(Error::DimensionMismatch(format!(
            "sign vector has length {}, p = {}",
            signs.len(),
            support.p()
        )));
    }
    support
        .iter()
        .map(|j| match signs.values()[j] {
            0 => Err(Error::InvalidSigns(j)),
            s => Ok(f64::from(s)),
        })
        .collect::<Result<Vec<_>>>()
        .map(DVector::from_vec)
}

pub fn check_ic(
    c: &DMatrix<f64>,
    support: &ActiveSet,
    signs: &SignVector,
) -> Result<ConditionReport> {
    require_symmetric(c)?;
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let s1 = active_signs(signs, support)?;
    let part = partition_covariance(c, support)?;
    let cond = linalg::condition_number(&part.c11);
    if cond > MAX_IC_CONDITION {
        return Err(Error::SingularC11(cond));
    }
    let g = part
        .c11
        .clone()
        .lu()
        .solve(&s1)
        .ok_or(Error::SingularC11(cond))?;
    let q = &part.c21 * g;
    let inactive = support.complement();
    let details: Vec<CandidateMargin> = inactive
        .iter()
        .zip(q.iter())
        .map(|(j, v)| CandidateMargin {
            indices: vec![j],
            margin: 1.0 - v.abs(),
        })
        .collect();
    let worst = details.iter().min_by(|a, b| a.margin.total_cmp(&b.margin));
    let margin = worst.map_or(1.0, |w| w.margin);
    Ok(ConditionReport {
        kind: ConditionKind::Ic,
        holds: margin > DEFAULT_TOL_COND,
        margin,
        witness: worst.map(|w| Witness::Row(w.indices[0])),
        details,
        rank: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicOptions {
    /// Singular values below `tol_rank · σ_max(C₁₁)` count as zero.
    pub tol_rank: f64,
    /// Maximum number of candidate submatrices.
    pub cap: usize,
    pub tol_cond: f64,
}

impl Default for PicOptions {
    fn default() -> Self {
        Self {
            tol_rank: DEFAULT_TOL_RANK,
            cap: DEFAULT_CANDIDATE_CAP,
            tol_cond: DEFAULT_TOL_COND,
        }
    }
}

/// All index sets `R` (positions within `C₁₁`, ascending) of size
/// `r = rank(C₁₁)` whose principal submatrix `C_RR` also has rank `r`.
pub fn enumerate_candidate_submatrices(
    c11: &DMatrix<f64>,
    tol_rank: f64,
    cap: usize,
) -> Result<Vec<Vec<usize>>> {
    let s = c11.nrows();
    let sv = linalg::singular_values(c11);
    let smax = if sv.is_empty() { 0.0 } else { sv.max() };
    let rank = linalg::numerical_rank(c11, tol_rank, Some(smax));
    if rank == 0 {
        return Ok(vec![Vec::new()]);
    }
    if rank == s {
        return Ok(vec![(0..s).collect()]);
    }
    let mut out = Vec::new();
    for subset in (0..s).combinations(rank) {
        let sub = c11.select_rows(&subset).select_columns(&subset);
        if linalg::numerical_rank(&sub, tol_rank, Some(smax)) == rank {
            if out.len() == cap {
                return Err(Error::CombinatorialBlowup(cap));
            }
            out.push(subset);
        }
    }
    Ok(out)
}

pub fn check_pic(
    c: &DMatrix<f64>,
    support: &ActiveSet,
    signs: &SignVector,
    opts: &PicOptions,
) -> Result<ConditionReport> {
    require_symmetric(c)?;
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let s1 = active_signs(signs, support)?;
    let part = partition_covariance(c, support)?;
    let candidates = enumerate_candidate_submatrices(&part.c11, opts.tol_rank, opts.cap)?;
    let rank = candidates.first().map_or(0, Vec::len);
    let active = support.indices();

    let details: Vec<CandidateMargin> = candidates
        .par_iter()
        .map(|subset| {
            let value = if subset.is_empty() || part.c21.nrows() == 0 {
                0.0
            } else {
                let c_rr = part.c11.select_rows(subset).select_columns(subset);
                let s_r = DVector::from_iterator(subset.len(), subset.iter().map(|&i| s1[i]));
                let g = c_rr
                    .lu()
                    .solve(&s_r)
                    .unwrap_or_else(|| DVector::from_element(subset.len(), f64::INFINITY));
                (part.c21.select_columns(subset) * g).amax()
            };
            CandidateMargin {
                indices: subset.iter().map(|&i| active[i]).collect(),
                margin: 1.0 - value,
            }
        })
        .collect();

    let worst = details
        .iter()
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
        .expect("at least one candidate");
    let margin = worst.margin;
    Ok(ConditionReport {
        kind: ConditionKind::Pic,
        holds: margin > opts.tol_cond,
        margin,
        witness: Some(Witness::Subset(worst.indices.clone())),
        details,
        rank: Some(rank),
    })
}

/// `min_{j ∈ S} |β_j|`. Reported only; no threshold is enforced.
pub fn beta_min_margin(beta: &DVector<f64>, support: &ActiveSet) -> Result<f64> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    if support.p() != beta.len() {
        return Err(Error::DimensionMismatch(format!(
            "beta has length {}, support built for p = {}",
            beta.len(),
            support.p()
        )));
    }
    Ok(support
        .iter()
        .map(|j| beta[j].abs())
        .fold(f64::INFINITY, f64::min))
}
