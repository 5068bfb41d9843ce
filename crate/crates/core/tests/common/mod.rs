//! Independent oracles and instance builders shared by the integration tests.

#![allow(dead_code)]

use dlselect::{standardize, ActiveSet, DMatrix, DVector, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Standardized Gaussian design with a sparse signal plus noise.
pub fn noisy_instance(rng: &mut ChaCha8Rng, n: usize, p: usize, noise: f64) -> Dataset {
    let x = gaussian(rng, n, p);
    let beta = DVector::from_fn(p, |j, _| {
        if j < p.div_ceil(2) {
            rng.random_range(-2.0..2.0)
        } else {
            0.0
        }
    });
    let y = &x * beta + gaussian_vec(rng, n) * noise;
    standardize(x, y).unwrap()
}

/// `X` with columns copied according to `layout` (entry `k` names the base
/// column that becomes column `k`).
pub fn with_layout(base: &DMatrix<f64>, layout: &[usize]) -> DMatrix<f64> {
    base.select_columns(layout)
}

/// Noiseless dataset `Y = Xβ` on the standardized version of `x`.
pub fn noiseless(x: DMatrix<f64>, beta: &DVector<f64>) -> Dataset {
    let n = x.nrows();
    let ds = standardize(x, DVector::zeros(n)).unwrap();
    let y = ds.x() * beta;
    ds.with_response(y).unwrap()
}

// ---- double-double arithmetic -------------------------------------------

/// Unevaluated sum `hi + lo` with about 106 bits of precision.
#[derive(Clone, Copy, Debug)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn add_f(self, x: f64) -> Dd {
        self.add(Dd { hi: x, lo: 0.0 })
    }

    pub fn mul_f(self, x: f64) -> Dd {
        let (p, e) = two_prod(self.hi, x);
        let e = e + self.lo * x;
        let (hi, lo) = two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn prod(a: f64, b: f64) -> Dd {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    pub fn sq(self) -> Dd {
        let (p, e) = two_prod(self.hi, self.hi);
        let e = e + 2.0 * self.hi * self.lo;
        let (hi, lo) = two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// `½‖Y − Xβ‖² + λ‖β‖₁` accumulated in double-double.
pub fn lasso_objective_dd(ds: &Dataset, beta: &DVector<f64>, lambda: f64) -> f64 {
    let (n, p) = (ds.n(), ds.p());
    let mut rss = Dd::ZERO;
    for i in 0..n {
        let mut r = Dd {
            hi: ds.y()[i],
            lo: 0.0,
        };
        for j in 0..p {
            r = r.add(Dd::prod(-ds.x()[(i, j)], beta[j]));
        }
        rss = rss.add(r.sq());
    }
    let mut l1 = Dd::ZERO;
    for b in beta.iter() {
        l1 = l1.add_f(b.abs());
    }
    rss.mul_f(0.5).add(l1.mul_f(lambda)).to_f64()
}

/// Mean squared difference accumulated in double-double.
pub fn mse_dd(y: &DVector<f64>, yhat: &DVector<f64>) -> f64 {
    let mut acc = Dd::ZERO;
    for (a, b) in y.iter().zip(yhat.iter()) {
        let (d, e) = two_sum(*a, -*b);
        acc = acc.add(Dd { hi: d, lo: e }.sq());
    }
    acc.to_f64() / y.len() as f64
}

// ---- exhaustive sign-pattern Lasso oracle -------------------------------

/// Lasso minimizer found by trying every sign pattern `s ∈ {-1,0,1}^p`:
/// solve `X_AᵀX_A β_A = X_AᵀY − λ s_A` on `A = {j : s_j ≠ 0}`, keep the
/// patterns whose solution has the assumed signs and satisfies
/// `|X_jᵀ(Y − Xβ)| ≤ λ` off `A`, and return the one with the smallest
/// objective. Needs `X_A` of full column rank for the winning pattern.
pub fn sign_pattern_lasso(ds: &Dataset, lambda: f64) -> DVector<f64> {
    let p = ds.p();
    let x = ds.x();
    let y = ds.y();
    let mut best: Option<(f64, DVector<f64>)> = None;
    let total = 3usize.pow(p as u32);
    for code in 0..total {
        let mut c = code;
        let signs: Vec<i32> = (0..p)
            .map(|_| {
                let s = (c % 3) as i32 - 1;
                c /= 3;
                s
            })
            .collect();
        let active: Vec<usize> = (0..p).filter(|&j| signs[j] != 0).collect();
        let mut beta = DVector::zeros(p);
        if !active.is_empty() {
            let xa = x.select_columns(&active);
            let s_a = DVector::from_iterator(active.len(), active.iter().map(|&j| signs[j] as f64));
            let rhs = xa.tr_mul(y) - s_a * lambda;
            let Some(chol) = xa.tr_mul(&xa).cholesky() else {
                continue;
            };
            let b = chol.solve(&rhs);
            if active
                .iter()
                .zip(b.iter())
                .any(|(&j, &v)| v * signs[j] as f64 <= 0.0)
            {
                continue;
            }
            for (k, &j) in active.iter().enumerate() {
                beta[j] = b[k];
            }
        }
        let corr = x.tr_mul(&(y - x * &beta));
        let slack = 1e-9 * (1.0 + lambda);
        if (0..p).any(|j| signs[j] == 0 && corr[j].abs() > lambda + slack) {
            continue;
        }
        let obj = lasso_objective_dd(ds, &beta, lambda);
        if best.as_ref().is_none_or(|(o, _)| obj < *o) {
            best = Some((obj, beta));
        }
    }
    best.expect("some sign pattern is KKT-feasible").1
}

pub fn support_of(beta: &DVector<f64>) -> ActiveSet {
    ActiveSet::support(beta)
}
