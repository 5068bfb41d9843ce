//! Workloads shared by the criterion benchmarks under `benches/`.
//!
//! Each builder is deterministic in its arguments so timings are comparable
//! across runs.

use dlselect::{
    generate_replication, sign_vector, ActiveSet, DMatrix, DVector, DesignKind, DesignSpec,
    ReplicationData, Result,
};

/// One replication of a Toeplitz design with `s` leading actives.
pub fn toeplitz_replication(p: usize, n: usize, s: usize, rho: f64) -> Result<ReplicationData> {
    let mut spec = DesignSpec::new(DesignKind::Toeplitz, p, rho, n, s, 2024);
    spec.n_test = n;
    generate_replication(&spec, 0)
}

/// The spec behind `toeplitz_replication`, for whole-experiment benches.
pub fn toeplitz_spec(p: usize, n: usize, s: usize, rho: f64, reps: usize) -> DesignSpec {
    let mut spec = DesignSpec::new(DesignKind::Toeplitz, p, rho, n, s, 2024);
    spec.n_test = n;
    spec.reps = reps;
    spec
}

/// A covariance on `p` variables whose first `s` columns come in `s/2`
/// identical pairs, so `C₁₁` has rank `s/2` and the PIC check must walk
/// `2^(s/2)` candidate submatrices. The remaining variables correlate `rho`
/// with every active.
pub fn paired_covariance(p: usize, s: usize, rho: f64) -> DMatrix<f64> {
    assert!(s.is_multiple_of(2) && s < p);
    DMatrix::from_fn(p, p, |i, j| {
        let (ai, aj) = (i < s, j < s);
        match (ai, aj) {
            _ if i == j => 1.0,
            (true, true) if i / 2 == j / 2 => 1.0,
            (true, true) => 0.0,
            (false, false) => 0.0,
            _ => rho,
        }
    })
}

/// Support and all-positive signs for `paired_covariance`.
pub fn paired_truth(p: usize, s: usize) -> (ActiveSet, dlselect::SignVector) {
    let support = ActiveSet::new((0..s).collect(), p).expect("valid support");
    let beta = DVector::from_fn(p, |j, _| if j < s { 1.0 } else { 0.0 });
    (support, sign_vector(&beta))
}
