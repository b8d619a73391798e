//! Closed-form rate functionals for Gaussian inputs on the two-receiver
//! vector Gaussian broadcast channel, plus the exact identity checks used to
//! validate the structural claims behind them (dirty paper coding, two-letter
//! rotation, product-channel mutual-information factorization, and the
//! uniform upper bound on the weighted rate difference).
//!
//! All mutual informations are in nats. Every log-determinant carries a 1/2:
//! `gauss_mi` returns `½ log|I + G K Gᵀ|`, and the derived functionals keep
//! that normalization throughout.

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, logdet_sym_pd, spd_solve, sym_eigen, PsdMat, SymMat,
};
use crate::mat::Mat;
use crate::scalar::{as_f64, real, Real};

/// Minimum |det| for a channel gain matrix to count as invertible.
pub fn gain_det_tolerance<F: Real>() -> F {
    real(1e-12)
}

/// The two gain matrices of a broadcast channel with identity noise
/// covariance at both receivers.
#[derive(Debug, Clone)]
pub struct ChannelPair<F> {
    t: usize,
    g1: Mat<F>,
    g2: Mat<F>,
}

impl<F: Real> ChannelPair<F> {
    pub fn new(g1: Mat<F>, g2: Mat<F>) -> Result<Self> {
        if !g1.is_square() || !g2.is_square() || g1.rows() != g2.rows() {
            return Err(Error::DimensionMismatch(
                "channel gains must be square matrices of equal dimension".into(),
            ));
        }
        if !g1.is_finite() || !g2.is_finite() {
            return Err(Error::InvalidInput("channel gain has non-finite entries".into()));
        }
        let tol = gain_det_tolerance::<F>();
        for (name, g) in [("g1", &g1), ("g2", &g2)] {
            let det = g.lu_det()?;
            if det.abs() <= tol {
                return Err(Error::InvalidInput(format!(
                    "gain not invertible: |det {}| = {:e}",
                    name,
                    as_f64(det.abs())
                )));
            }
        }
        Ok(Self { t: g1.rows(), g1, g2 })
    }

    pub fn scalar(g1: F, g2: F) -> Result<Self> {
        Self::new(Mat::diag(&[g1]), Mat::diag(&[g2]))
    }

    pub fn dim(&self) -> usize {
        self.t
    }

    pub fn g1(&self) -> &Mat<F> {
        &self.g1
    }

    pub fn g2(&self) -> &Mat<F> {
        &self.g2
    }

    /// Channel with the receiver roles interchanged.
    pub fn swapped(&self) -> Self {
        Self {
            t: self.t,
            g1: self.g2.clone(),
            g2: self.g1.clone(),
        }
    }

    /// Two-letter product of this channel with itself: block-diagonal gains
    /// acting on a doubled input.
    pub fn two_letter(&self) -> Self {
        Self {
            t: 2 * self.t,
            g1: Mat::block_diag(&self.g1, &self.g1),
            g2: Mat::block_diag(&self.g2, &self.g2),
        }
    }
}

/// Weight vector for the common-message objective. `lambda0`, `lambda1`,
/// `lambda2` are strictly positive; `alpha` mixes the two receivers' common
/// rate terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaWeights<F> {
    pub lambda0: F,
    pub lambda1: F,
    pub lambda2: F,
    pub alpha: F,
}

impl<F: Real> LambdaWeights<F> {
    pub fn new(lambda0: F, lambda1: F, lambda2: F, alpha: F) -> Result<Self> {
        if !(lambda0 > F::zero() && lambda1 > F::zero() && lambda2 > F::zero()) {
            return Err(Error::InvalidParameter(
                "lambda weights must be strictly positive".into(),
            ));
        }
        if !(alpha >= F::zero() && alpha <= F::one()) {
            return Err(Error::InvalidParameter("alpha must lie in [0, 1]".into()));
        }
        Ok(Self { lambda0, lambda1, lambda2, alpha })
    }

    pub fn alpha_bar(&self) -> F {
        F::one() - self.alpha
    }

    /// `(λ1 + λ2) / λ1`, the inner weighted-difference ratio. Always > 1.
    pub fn inner_ratio(&self) -> F {
        (self.lambda1 + self.lambda2) / self.lambda1
    }

    /// The common-message objective needs `λ0 > λ1 + λ2`.
    pub fn require_common(&self) -> Result<()> {
        if self.lambda0 > self.lambda1 + self.lambda2 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "common-message weights need lambda0 > lambda1 + lambda2 (got {} vs {})",
                self.lambda0,
                self.lambda1 + self.lambda2
            )))
        }
    }

    pub fn with_alpha(&self, alpha: F) -> Self {
        Self { alpha, ..*self }
    }
}

/// Covariances of the three-layer Gaussian signaling `X = W + X1 + V`.
#[derive(Debug, Clone)]
pub struct GaussianSplit<F> {
    pub kw: PsdMat<F>,
    pub k1: PsdMat<F>,
    pub k2: PsdMat<F>,
}

/// Precoding matrix for the dirty-paper identity, together with the signal
/// and interference covariances it was built from.
#[derive(Debug, Clone)]
pub struct DpcConstruction<F> {
    pub a_matrix: Mat<F>,
    pub k_prime: PsdMat<F>,
    pub k_v: PsdMat<F>,
}

/// Uniform upper bound on the weighted mutual-information difference, with
/// the eigenvalue data that produced it.
#[derive(Debug, Clone, Copy)]
pub struct BoundReport<F> {
    pub c_lambda: F,
    pub mu_star: F,
    pub mu1_sigma2: F,
    pub mut_sigma1: F,
}

/// `½ log|I + G K Gᵀ|` for a (possibly rectangular) gain `G` and input
/// covariance `K`.
pub fn gauss_mi<F: Real>(g: &Mat<F>, k: &PsdMat<F>) -> Result<F> {
    gauss_mi_sym(g, k.sym())
}

pub(crate) fn gauss_mi_sym<F: Real>(g: &Mat<F>, k: &SymMat<F>) -> Result<F> {
    if g.cols() != k.dim() {
        return Err(Error::DimensionMismatch(format!(
            "gain is {}x{} but covariance is {}x{}",
            g.rows(),
            g.cols(),
            k.dim(),
            k.dim()
        )));
    }
    let gkg = g.mul(k.mat()).mul_t(g);
    let c = SymMat::new(gkg.add(&Mat::identity(g.rows())))?;
    Ok(logdet_sym_pd(&c)? * real(0.5))
}

/// `I(X;Y1) − λ I(X;Y2)` for Gaussian `X ~ N(0, K')`.
pub fn s_lambda_gauss<F: Real>(ch: &ChannelPair<F>, k_prime: &PsdMat<F>, lambda: F) -> Result<F> {
    if !(lambda > F::one()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must exceed 1 (got {}); swap receiver roles for the other side",
            lambda
        )));
    }
    Ok(gauss_mi(&ch.g1, k_prime)? - lambda * gauss_mi(&ch.g2, k_prime)?)
}

/// Uniform bound `C_λ` with `s_λ(X) ≤ C_λ` for every input distribution:
/// built from the extreme eigenvalues of `Σ_i = (G_iᵀG_i)⁻¹`.
pub fn c_lambda_bound<F: Real>(ch: &ChannelPair<F>, lambda: F) -> Result<BoundReport<F>> {
    if !(lambda > F::one()) {
        return Err(Error::InvalidParameter("lambda must exceed 1".into()));
    }
    let gram1 = SymMat::new(ch.g1.t_mul(&ch.g1))?;
    let gram2 = SymMat::new(ch.g2.t_mul(&ch.g2))?;
    let dec1 = sym_eigen(&gram1)?;
    let dec2 = sym_eigen(&gram2)?;
    if !(dec1.min() > F::zero() && dec2.min() > F::zero()) {
        return Err(Error::Singular("gain matrix is singular".into()));
    }
    // Eigenvalues of Σ_i are reciprocals of the Gram eigenvalues.
    let mut_sigma1 = dec1.min().recip();
    let mu1_sigma2 = dec2.max().recip();
    let mu_star = F::zero().max((mu1_sigma2 - lambda * mut_sigma1) / (lambda - F::one()));

    // −log|Σ1| + λ log|Σ2| = log|G1ᵀG1| − λ log|G2ᵀG2|
    let ld_gram1: F = dec1.eigenvalues.iter().map(|e| e.ln()).sum();
    let ld_gram2: F = dec2.eigenvalues.iter().map(|e| e.ln()).sum();
    let t = real::<F>(ch.t as f64);
    let doubled = ld_gram1 - lambda * ld_gram2
        + t * ((mu_star + mut_sigma1).ln() - lambda * (mu_star + mu1_sigma2).ln());
    Ok(BoundReport {
        c_lambda: doubled * real(0.5),
        mu_star,
        mu1_sigma2,
        mut_sigma1,
    })
}

/// The common-message objective evaluated at an independent Gaussian pair
/// `(X1, X2)` with covariances `(k1, k2)`; the inner envelope term is taken
/// at `k1`, which is exact for Gaussian splits.
pub fn t_lambda_gauss<F: Real>(
    ch: &ChannelPair<F>,
    k1: &PsdMat<F>,
    k2: &PsdMat<F>,
    w: &LambdaWeights<F>,
) -> Result<F> {
    w.require_common()?;
    let k_sum = k1.add(k2);
    let mi1_sum = gauss_mi(&ch.g1, &k_sum)?;
    let mi2_sum = gauss_mi(&ch.g2, &k_sum)?;
    let inner = s_lambda_gauss(ch, k1, w.inner_ratio())?;
    Ok(
        -w.lambda0 * w.alpha * mi1_sum - w.lambda0 * w.alpha_bar() * mi2_sum
            + (w.lambda1 + w.lambda2) * mi2_sum
            + w.lambda1 * inner,
    )
}

/// Precoding matrix `A = K'Gᵀ(GK'Gᵀ + I)⁻¹G` for the channel
/// `Y = G(X + V) + Z`. The inverse always exists, and by the push-through
/// identity `A` satisfies `(I + K'GᵀG)A = K'GᵀG` (checked to 1e-10 here).
pub fn dpc_matrix<F: Real>(g: &Mat<F>, k_prime: &PsdMat<F>, k_v: &PsdMat<F>) -> Result<DpcConstruction<F>> {
    let t = g.rows();
    if !g.is_square() || k_prime.dim() != t || k_v.dim() != t {
        return Err(Error::DimensionMismatch("dpc dimensions disagree".into()));
    }
    let gk = g.mul(k_prime.mat());
    let m = SymMat::new(gk.mul_t(g).add(&Mat::identity(t)))?;
    let m_inv_g = spd_solve(&m, g)?;
    let a_matrix = k_prime.mat().mul_t(g).mul(&m_inv_g);

    let kw = k_prime.mat().mul(&g.t_mul(g));
    let residual = kw.mul(&a_matrix).add(&a_matrix).sub(&kw);
    let scale = F::one() + kw.frob_norm();
    if residual.frob_norm() > real::<F>(1e-10) * scale {
        return Err(Error::Numerical(format!(
            "dpc defining equation residual {:e} too large",
            as_f64(residual.frob_norm())
        )));
    }
    Ok(DpcConstruction {
        a_matrix,
        k_prime: k_prime.clone(),
        k_v: k_v.clone(),
    })
}

/// Both sides of the dirty-paper rate identity for `U = X' + AV`:
/// the interference-free conditional rate `½ log|I + GK'Gᵀ|` on the left and
/// `I(U;Y) − I(U;V)` computed from the joint Gaussian covariance on the right.
pub fn dpc_identity_check<F: Real>(g: &Mat<F>, d: &DpcConstruction<F>) -> Result<(F, F)> {
    let t = g.rows();
    let lhs = gauss_mi(g, &d.k_prime)?;

    let a = &d.a_matrix;
    let kp = d.k_prime.mat();
    let kv = d.k_v.mat();

    let akv = a.mul(kv);
    let sigma_u = SymMat::new(kp.add(&akv.mul_t(a)))?;
    let cross_uy = kp.mul_t(g).add(&akv.mul_t(g));
    let k_total = d.k_prime.add(&d.k_v);
    let sigma_y = SymMat::new(g.mul(k_total.mat()).mul_t(g).add(&Mat::identity(t)))?;

    let tiny = F::epsilon() * real::<F>(1e2) * (F::one() + kp.frob_norm() + kv.frob_norm());

    let mi_uy = if cross_uy.frob_norm() <= tiny {
        F::zero()
    } else {
        // I(U;Y) = ½[log|Σ_Y| − log|Σ_Y − Σ_YU Σ_U⁻¹ Σ_UY|]
        let x = spd_solve(&sigma_u, &cross_uy).map_err(|_| {
            Error::Numerical("singular signal covariance in dpc identity".into())
        })?;
        let cond = SymMat::new(sigma_y.mat().sub(&cross_uy.t_mul(&x)))?;
        (logdet_sym_pd(&sigma_y)? - logdet_sym_pd(&cond)?) * real(0.5)
    };

    let mi_uv = if akv.frob_norm() <= tiny {
        F::zero()
    } else {
        // Conditioning U on V leaves exactly K', so
        // I(U;V) = ½[log|Σ_U| − log|K'|].
        let ld_u = logdet_sym_pd(&sigma_u).map_err(|_| {
            Error::Numerical("singular signal covariance in dpc identity".into())
        })?;
        let ld_kp = cholesky(d.k_prime.sym())
            .map_err(|_| Error::Numerical("dpc identity needs K' nonsingular when AK_v ≠ 0".into()))
            .map(|l| {
                let mut s = F::zero();
                for i in 0..t {
                    s += l[(i, i)].ln();
                }
                s + s
            })?;
        (ld_u - ld_kp) * real(0.5)
    };

    Ok((lhs, mi_uy - mi_uv))
}

/// The three terms of the product-channel mutual-information identity for a
/// two-letter use of the point-to-point channel `Y = GX + Z`:
/// `joint = I(X1,X2;Y1,Y2)`, `sum_marginals = I(X1;Y1) + I(X2;Y2)` and
/// `cross = I(Y1;Y2)`. The identity `joint = sum_marginals − cross` is a
/// genuine numerical check because `cross` goes through a Schur-complement
/// route while `joint` uses the full doubled determinant.
#[derive(Debug, Clone, Copy)]
pub struct ProductMiReport<F> {
    pub joint: F,
    pub sum_marginals: F,
    pub cross: F,
}

pub fn product_mi_identity<F: Real>(g: &Mat<F>, joint_k: &PsdMat<F>) -> Result<ProductMiReport<F>> {
    let t = g.rows();
    if !g.is_square() {
        return Err(Error::DimensionMismatch("gain must be square".into()));
    }
    if joint_k.dim() != 2 * t {
        return Err(Error::DimensionMismatch(format!(
            "joint covariance must be {}x{}",
            2 * t,
            2 * t
        )));
    }
    let k11 = SymMat::new(joint_k.mat().block(0, 0, t, t))?;
    let k22 = SymMat::new(joint_k.mat().block(t, t, t, t))?;
    let k12 = joint_k.mat().block(0, t, t, t);

    let gg = Mat::block_diag(g, g);
    let joint = gauss_mi_sym(&gg, joint_k.sym())?;
    let sum_marginals = gauss_mi_sym(g, &k11)? + gauss_mi_sym(g, &k22)?;

    let sigma_y1 = SymMat::new(g.mul(k11.mat()).mul_t(g).add(&Mat::identity(t)))?;
    let sigma_y2 = SymMat::new(g.mul(k22.mat()).mul_t(g).add(&Mat::identity(t)))?;
    let c = g.mul(&k12).mul_t(g);
    let x = spd_solve(&sigma_y2, &c.transpose())?;
    let cond = SymMat::new(sigma_y1.mat().sub(&c.mul(&x)))?;
    let cross = (logdet_sym_pd(&sigma_y1)? - logdet_sym_pd(&cond)?) * real(0.5);

    Ok(ProductMiReport {
        joint,
        sum_marginals,
        cross,
    })
}

/// Orthogonal sum/difference rotation on a two-letter input block vector.
pub fn block_rotation<F: Real>(t: usize) -> Mat<F> {
    let h = real::<F>(0.5).sqrt();
    let mut r = Mat::zeros(2 * t, 2 * t);
    for i in 0..t {
        r[(i, i)] = h;
        r[(i, t + i)] = h;
        r[(t + i, i)] = h;
        r[(t + i, t + i)] = -h;
    }
    r
}

/// Two-letter mutual information before and after the sum/difference
/// rotation of the inputs. The two values agree for Gaussian noise.
pub fn rotation_check<F: Real>(g: &Mat<F>, joint_k: &PsdMat<F>) -> Result<(F, F)> {
    let t = g.rows();
    if joint_k.dim() != 2 * t {
        return Err(Error::DimensionMismatch(format!(
            "joint covariance must be {}x{}",
            2 * t,
            2 * t
        )));
    }
    let gg = Mat::block_diag(g, g);
    let original = gauss_mi_sym(&gg, joint_k.sym())?;
    let r = block_rotation::<F>(t);
    let rotated_k = SymMat::new(r.mul(joint_k.mat()).mul_t(&r))?;
    let rotated = gauss_mi_sym(&gg, &rotated_k)?;
    Ok((original, rotated))
}
