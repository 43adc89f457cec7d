//! Helpers shared by the integration tests.
#![allow(dead_code)]

pub mod shooting;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfspec_core::linalg::{BandedMatrix, TridiagonalMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ascending eigenvalues of a dense symmetric matrix.
pub fn dense_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn tridiag_dense(t: &TridiagonalMatrix) -> DMatrix<f64> {
    let n = t.dim();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = t.diag()[i];
        if i + 1 < n {
            m[(i, i + 1)] = t.offdiag()[i];
            m[(i + 1, i)] = t.offdiag()[i];
        }
    }
    m
}

/// Dense standard-form matrix `M^{-1/2} K M^{-1/2}`.
pub fn band_dense(b: &BandedMatrix) -> DMatrix<f64> {
    let n = b.dim();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = b.get(i, j);
        }
    }
    if let Some(mass) = b.mass() {
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] /= (mass[i] * mass[j]).sqrt();
            }
        }
    }
    m
}

pub fn random_tridiag(rng: &mut ChaCha8Rng, n: usize) -> TridiagonalMatrix {
    let d = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let e = (0..n - 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
    TridiagonalMatrix::new(d, e).unwrap()
}

pub fn random_band(rng: &mut ChaCha8Rng, n: usize, bw: usize, with_mass: bool) -> BandedMatrix {
    let mut b = BandedMatrix::zeros(n, bw).unwrap();
    for i in 0..n {
        b.set(i, i, rng.gen_range(-5.0..5.0));
        for j in i.saturating_sub(bw)..i {
            b.set(i, j, rng.gen_range(-2.0..2.0));
        }
    }
    if with_mass {
        let mass = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        b = b.with_mass(mass).unwrap();
    }
    b
}

/// Largest relative deviation, with scale floor 1.
pub fn max_rel_err(got: &[f64], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len());
    got.iter()
        .zip(want)
        .map(|(g, w)| (g - w).abs() / w.abs().max(1.0))
        .fold(0.0, f64::max)
}
