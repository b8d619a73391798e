//! Seeded random instance generators for verification sweeps and tests.
//! Everything is driven by an explicit `ChaCha8` stream so that sweeps are
//! reproducible across platforms and thread counts.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::Result;
use crate::linalg::{PsdMat, SymMat};
use crate::mat::Mat;
use crate::rates::ChannelPair;
use crate::scalar::{real, Real};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in `[0, 1)`.
pub fn unit<F: Real>(rng: &mut ChaCha8Rng) -> F {
    real((rng.next_u64() >> 11) as f64 / 9007199254740992.0)
}

/// Uniform draw in `[-scale, scale]`.
pub fn signed<F: Real>(rng: &mut ChaCha8Rng, scale: F) -> F {
    (unit::<F>(rng) * real(2.0) - F::one()) * scale
}

pub fn matrix<F: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: F) -> Mat<F> {
    let mut m = Mat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = signed(rng, scale);
        }
    }
    m
}

pub fn sym<F: Real>(rng: &mut ChaCha8Rng, n: usize, scale: F) -> SymMat<F> {
    SymMat::new(matrix(rng, n, n, scale)).expect("square by construction")
}

/// Random PSD matrix `B Bᵀ / n`, entries of `B` in `[-scale, scale]`.
pub fn psd<F: Real>(rng: &mut ChaCha8Rng, n: usize, scale: F) -> PsdMat<F> {
    let b = matrix(rng, n, n, scale);
    let g = b.mul_t(&b).scale(real::<F>(1.0) / real(n as f64));
    PsdMat::new(SymMat::new(g).expect("square")).expect("Gram matrices are PSD")
}

/// Random strictly positive-definite matrix: PSD plus a small ridge.
pub fn pd<F: Real>(rng: &mut ChaCha8Rng, n: usize, scale: F) -> PsdMat<F> {
    let base = psd(rng, n, scale);
    let ridged = base.sym().add(&SymMat::identity(n).scale(real(1e-3)));
    PsdMat::new(ridged).expect("ridged Gram matrix is PD")
}

/// Random invertible matrix, resampled deterministically until the
/// determinant clears the channel tolerance.
pub fn invertible<F: Real>(rng: &mut ChaCha8Rng, n: usize, scale: F) -> Mat<F> {
    loop {
        let m = matrix(rng, n, n, scale);
        if let Ok(det) = m.lu_det() {
            if det.abs() > real(1e-6) {
                return m;
            }
        }
    }
}

pub fn channel_pair<F: Real>(rng: &mut ChaCha8Rng, n: usize) -> Result<ChannelPair<F>> {
    ChannelPair::new(invertible(rng, n, F::one()), invertible(rng, n, F::one()))
}

/// Joint `2t×2t` PSD covariance with a cross block of roughly the requested
/// Frobenius norm; the cross block is shrunk until the joint is PSD.
pub fn joint_with_cross<F: Real>(
    rng: &mut ChaCha8Rng,
    t: usize,
    cross_norm: F,
) -> Result<PsdMat<F>> {
    let k11 = pd(rng, t, F::one());
    let k22 = pd(rng, t, F::one());
    let mut cross = matrix(rng, t, t, F::one());
    let norm = cross.frob_norm();
    if norm > F::zero() {
        cross = cross.scale(cross_norm / norm);
    }
    let mut shrink = F::one();
    for _ in 0..60 {
        let mut joint = Mat::zeros(2 * t, 2 * t);
        joint.set_block(0, 0, k11.mat());
        joint.set_block(t, t, k22.mat());
        let c = cross.scale(shrink);
        joint.set_block(0, t, &c);
        joint.set_block(t, 0, &c.transpose());
        if let Ok(p) = PsdMat::new(SymMat::new(joint)?) {
            return Ok(p);
        }
        shrink *= real(0.7);
    }
    // cross block vanished: block-diagonal is always PSD
    Ok(PsdMat::block_diag(&k11, &k22))
}

/// Block-diagonal joint covariance (zero cross block).
pub fn joint_block_diag<F: Real>(rng: &mut ChaCha8Rng, t: usize) -> PsdMat<F> {
    let k11 = pd(rng, t, F::one());
    let k22 = pd(rng, t, F::one());
    PsdMat::block_diag(&k11, &k22)
}
