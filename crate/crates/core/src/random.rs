//! Seeded complex Gaussian samplers. Every random object in the crate is a
//! deterministic function of a `u64` seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bipartite::{CMatrix, CVector, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| gaussian(rng))
}

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    let v = gaussian_vector(rng, n);
    let norm = v.norm();
    v.unscale(norm)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn hermitian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = gaussian_matrix(rng, n, n);
    (&g + g.adjoint()).scale(0.5)
}

/// Sum of `rank` random dyads, normalized to unit Frobenius norm.
pub fn low_rank_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for _ in 0..rank {
        m += gaussian_vector(rng, d) * gaussian_vector(rng, d).adjoint();
    }
    let norm = m.norm();
    if norm > 0.0 {
        m.unscale_mut(norm);
    }
    m
}
