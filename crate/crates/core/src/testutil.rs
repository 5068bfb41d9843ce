use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::{standardize, Dataset};

pub fn gaussian_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
}

/// Standardized Gaussian design with `Y = Xβ + ε`, β = (1, -1, 0.5, 0, 0, ...).
pub fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let x = gaussian_matrix(n, p, seed);
    let beta = DVector::from_fn(p, |j, _| match j {
        0 => 1.0,
        1 => -1.0,
        2 => 0.5,
        _ => 0.0,
    });
    let noise = gaussian_matrix(n, 1, seed ^ 0x9e37_79b9)
        .column(0)
        .into_owned();
    let y = &x * beta + noise;
    standardize(x, y).unwrap()
}
