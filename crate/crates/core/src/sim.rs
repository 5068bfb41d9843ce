//! Simulation designs and replication data.
//!
//! The design matrices for the training, validation and test splits are
//! drawn once from `N_p(0, Σ)` and kept fixed; each replication draws
//! fresh noise and forms `Y = Xβ + σε`. Every split is standardized on its
//! own.
//!
//! Randomness comes from ChaCha8 streams. Each stream is seeded with
//! `mix(design_seed, stream, tag)`, a SplitMix64 finalizer applied to the
//! three inputs in turn, so a replication is determined by
//! `(design_seed, rep_index)` alone and does not depend on execution order.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::conditions::check_psd;
use crate::error::{Error, Result};
use crate::model::{standardize, ActiveSet, Dataset};

const JITTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DesignKind {
    /// Independent equicorrelated blocks.
    BlockDiagonal,
    /// One equicorrelated leading block, identity elsewhere.
    SingleBlockNoise,
    /// All off-diagonal entries equal to `ρ`.
    SingleBlock,
    /// `ρ^|i−j|`.
    Toeplitz,
    Identity,
}

impl DesignKind {
    pub const ALL: [DesignKind; 5] = [
        DesignKind::BlockDiagonal,
        DesignKind::SingleBlockNoise,
        DesignKind::SingleBlock,
        DesignKind::Toeplitz,
        DesignKind::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DesignKind::BlockDiagonal => "block_diagonal",
            DesignKind::SingleBlockNoise => "single_block_noise",
            DesignKind::SingleBlock => "single_block",
            DesignKind::Toeplitz => "toeplitz",
            DesignKind::Identity => "identity",
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown design {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    pub kind: DesignKind,
    pub p: usize,
    pub rho: f64,
    /// Block size for the block designs.
    pub block_size: usize,
    /// Number of blocks for `BlockDiagonal`.
    pub num_blocks: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    /// Number of leading active coefficients.
    pub s: usize,
    pub sigma: f64,
    pub design_seed: u64,
    pub reps: usize,
}

impl DesignSpec {
    /// A spec with `σ = 1`, one replication and block parameters filled in
    /// from `p` (blocks of 10 for `BlockDiagonal`, a leading block of `s`
    /// for `SingleBlockNoise`).
    pub fn new(kind: DesignKind, p: usize, rho: f64, n: usize, s: usize, design_seed: u64) -> Self {
        let (block_size, num_blocks) = match kind {
            DesignKind::BlockDiagonal if p.is_multiple_of(10) => (10, p / 10),
            DesignKind::BlockDiagonal => (p, 1),
            DesignKind::SingleBlockNoise => (s, 1),
            _ => (p, 1),
        };
        Self {
            kind,
            p,
            rho,
            block_size,
            num_blocks,
            n_train: n,
            n_val: n,
            n_test: 1000,
            s,
            sigma: 1.0,
            design_seed,
            reps: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.p == 0 {
            return bad("p must be positive".into());
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return bad(format!("rho = {} outside (-1, 1)", self.rho));
        }
        if self.s > self.p {
            return bad(format!("s = {} exceeds p = {}", self.s, self.p));
        }
        for (name, n) in [
            ("n_train", self.n_train),
            ("n_val", self.n_val),
            ("n_test", self.n_test),
        ] {
            if n < 2 {
                return bad(format!("{name} = {n}, need at least 2"));
            }
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma = {}", self.sigma));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        match self.kind {
            DesignKind::BlockDiagonal if self.num_blocks * self.block_size != self.p => {
                bad(format!(
                    "{} blocks of size {} do not make p = {}",
                    self.num_blocks, self.block_size, self.p
                ))
            }
            DesignKind::BlockDiagonal | DesignKind::SingleBlockNoise if self.block_size == 0 => {
                bad("block_size must be positive".into())
            }
            DesignKind::SingleBlockNoise if self.block_size > self.p => bad(format!(
                "block_size = {} exceeds p = {}",
                self.block_size, self.p
            )),
            _ => Ok(()),
        }
    }
}

pub fn make_covariance(spec: &DesignSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let (p, rho, b) = (spec.p, spec.rho, spec.block_size);
    let c = match spec.kind {
        DesignKind::Identity => DMatrix::identity(p, p),
        DesignKind::SingleBlock => DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho }),
        DesignKind::BlockDiagonal => {
            DMatrix::from_fn(p, p, |i, j| match (i == j, i / b == j / b) {
                (true, _) => 1.0,
                (false, true) => rho,
                (false, false) => 0.0,
            })
        }
        DesignKind::SingleBlockNoise => DMatrix::from_fn(p, p, |i, j| {
            if i == j {
                1.0
            } else if i < b && j < b {
                rho
            } else {
                0.0
            }
        }),
        DesignKind::Toeplitz => DMatrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32)),
    };
    if !check_psd(&c)?.holds {
        return Err(Error::InvalidSpec(format!(
            "{} covariance with rho = {rho} is not positive semi-definite",
            spec.kind
        )));
    }
    Ok(c)
}

/// First `s` coefficients equal to one, the rest zero.
pub fn true_beta(spec: &DesignSpec) -> Result<(DVector<f64>, ActiveSet)> {
    if spec.s > spec.p {
        return Err(Error::InvalidSpec(format!(
            "s = {} exceeds p = {}",
            spec.s, spec.p
        )));
    }
    let beta = DVector::from_fn(spec.p, |j, _| if j < spec.s { 1.0 } else { 0.0 });
    let support = ActiveSet::new((0..spec.s).collect(), spec.p)?;
    Ok((beta, support))
}

/// `n` rows drawn i.i.d. from `N(0, Σ)` through the Cholesky factor of `Σ`
/// (of `Σ + 1e-10·I` if the plain factorization fails).
pub fn sample_mvn(sigma: &DMatrix<f64>, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    let p = sigma.nrows();
    if sigma.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {}x{}",
            p,
            sigma.ncols()
        )));
    }
    let chol = sigma
        .clone()
        .cholesky()
        .or_else(|| (sigma + DMatrix::identity(p, p) * JITTER).cholesky())
        .ok_or(Error::NotPsd)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = DMatrix::from_fn(p, n, |_, _| StandardNormal.sample(&mut rng));
    Ok((chol.l() * z).transpose())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum SplitTag {
    DesignTrain = 1,
    DesignVal = 2,
    DesignTest = 3,
    NoiseTrain = 11,
    NoiseVal = 12,
    NoiseTest = 13,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the random stream for `(design_seed, stream, tag)`.
pub fn derive_seed(design_seed: u64, stream: u64, tag: SplitTag) -> u64 {
    splitmix(splitmix(splitmix(design_seed) ^ stream) ^ tag as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationData {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub beta: DVector<f64>,
    pub support: ActiveSet,
    pub rep_index: usize,
    /// Stream index the noise seeds were derived from.
    pub replication_seed: u64,
}

/// The fixed part of an experiment: covariance, the three standardized
/// design splits and the noiseless signals. Build once, replicate many
/// times.
#[derive(Debug, Clone)]
pub struct FixedDesign {
    spec: DesignSpec,
    covariance: DMatrix<f64>,
    beta: DVector<f64>,
    support: ActiveSet,
    /// `(standardized design with zero response, raw signal Xβ)` per split.
    splits: [(Dataset, DVector<f64>); 3],
}

impl FixedDesign {
    pub fn new(spec: &DesignSpec) -> Result<Self> {
        let covariance = make_covariance(spec)?;
        let (beta, support) = true_beta(spec)?;
        let draw = |n: usize, tag: SplitTag| -> Result<(Dataset, DVector<f64>)> {
            let x = sample_mvn(&covariance, n, derive_seed(spec.design_seed, 0, tag))?;
            let signal = &x * &beta;
            Ok((standardize(x, DVector::zeros(n))?, signal))
        };
        let splits = [
            draw(spec.n_train, SplitTag::DesignTrain)?,
            draw(spec.n_val, SplitTag::DesignVal)?,
            draw(spec.n_test, SplitTag::DesignTest)?,
        ];
        Ok(Self {
            spec: spec.clone(),
            covariance,
            beta,
            support,
            splits,
        })
    }

    pub fn spec(&self) -> &DesignSpec {
        &self.spec
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn replicate(&self, rep_index: usize) -> Result<ReplicationData> {
        let stream = rep_index as u64 + 1;
        let tags = [
            SplitTag::NoiseTrain,
            SplitTag::NoiseVal,
            SplitTag::NoiseTest,
        ];
        let mut out = Vec::with_capacity(3);
        for ((design, signal), tag) in self.splits.iter().zip(tags) {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(self.spec.design_seed, stream, tag));
            let noise = DVector::from_fn(signal.len(), |_, _| {
                let e: f64 = StandardNormal.sample(&mut rng);
                e
            });
            out.push(design.with_response(signal + noise * self.spec.sigma)?);
        }
        let test = out.pop().expect("three splits");
        let val = out.pop().expect("three splits");
        let train = out.pop().expect("three splits");
        Ok(ReplicationData {
            train,
            val,
            test,
            beta: self.beta.clone(),
            support: self.support.clone(),
            rep_index,
            replication_seed: stream,
        })
    }
}

/// One replication of `spec`. Builds the fixed design each call; use
/// [`FixedDesign`] directly when generating many replications.
pub fn generate_replication(spec: &DesignSpec, rep_index: usize) -> Result<ReplicationData> {
    FixedDesign::new(spec)?.replicate(rep_index)
}
