#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sic_core::linalg::{c, CMatrix, HermitianView};
use sic_core::povm::Ket;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}

pub fn random_hermitian(d: usize, rng: &mut ChaCha8Rng) -> HermitianView {
    let g = gaussian(d, d, rng);
    HermitianView::symmetrized(&(&g + &g.adjoint()).scale_re(0.5))
}

pub fn random_psd(d: usize, rank: usize, rng: &mut ChaCha8Rng) -> HermitianView {
    let g = gaussian(d, rank, rng);
    HermitianView::symmetrized(&(&g * &g.adjoint()))
}

/// Haar unitary from the QR decomposition of a Ginibre matrix with the
/// phases of `R`'s diagonal absorbed into `Q`.
pub fn haar_unitary(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let qr = gaussian(d, d, rng).to_nalgebra().qr();
    let (q, r) = (qr.q(), qr.r());
    let q = CMatrix::from_nalgebra(&q);
    CMatrix::from_fn(d, d, |i, j| {
        let phase = r[(j, j)] / r[(j, j)].norm();
        q[(i, j)] * phase
    })
}

pub fn haar_ket(d: usize, rng: &mut ChaCha8Rng) -> Ket {
    Ket::new(gaussian(d, 1, rng).col(0)).unwrap()
}
