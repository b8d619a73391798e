//! Symmetric and positive-semidefinite matrix kernels.
//!
//! Everything downstream (rate functionals, covariance optimization) runs on
//! matrices of dimension at most a few dozen, so the eigensolver is a cyclic
//! Jacobi iteration: slower asymptotically than tridiagonalization but
//! accurate to machine precision and simple to keep deterministic.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::{as_f64, real, Real};

/// Absolute eigenvalue slack used when validating positive semidefiniteness.
pub fn eps_psd<F: Real>() -> F {
    real(1e-10)
}

/// Square matrix with exact entry symmetry, enforced at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat<F> {
    m: Mat<F>,
}

impl<F: Real> SymMat<F> {
    /// Symmetrizes `m` by averaging mirrored entries.
    pub fn new(m: Mat<F>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(
                "symmetric matrix must be square".into(),
            ));
        }
        if m.rows() == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        let n = m.rows();
        let mut s = m;
        let half = real::<F>(0.5);
        for i in 0..n {
            for j in i + 1..n {
                let avg = (s[(i, j)] + s[(j, i)]) * half;
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        Ok(Self { m: s })
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        Self::new(Mat::from_rows(rows)?)
    }

    pub fn zeros(n: usize) -> Self {
        Self { m: Mat::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { m: Mat::identity(n) }
    }

    pub fn diag(entries: &[F]) -> Self {
        Self { m: Mat::diag(entries) }
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn mat(&self) -> &Mat<F> {
        &self.m
    }

    pub fn into_mat(self) -> Mat<F> {
        self.m
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { m: self.m.add(&other.m) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { m: self.m.sub(&other.m) }
    }

    pub fn scale(&self, s: F) -> Self {
        Self { m: self.m.scale(s) }
    }

    pub fn frob_norm(&self) -> F {
        self.m.frob_norm()
    }

    pub fn trace(&self) -> F {
        (0..self.dim()).map(|i| self.m[(i, i)]).sum()
    }
}

impl<F: Real> std::ops::Index<(usize, usize)> for SymMat<F> {
    type Output = F;

    #[inline]
    fn index(&self, idx: (usize, usize)) -> &F {
        &self.m[idx]
    }
}

/// Positive-semidefinite matrix. Construction clips eigenvalues in
/// `(-eps, 0)` to zero and rejects anything more negative.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMat<F> {
    s: SymMat<F>,
}

impl<F: Real> PsdMat<F> {
    pub fn new(s: SymMat<F>) -> Result<Self> {
        Self::with_tolerance(s, eps_psd())
    }

    pub fn with_tolerance(s: SymMat<F>, eps: F) -> Result<Self> {
        let dec = sym_eigen(&s)?;
        let min_eig = dec.eigenvalues[0];
        if min_eig < -eps {
            return Err(Error::NotPsd {
                min_eig: as_f64(min_eig),
            });
        }
        if min_eig < F::zero() {
            let clipped: Vec<F> = dec
                .eigenvalues
                .iter()
                .map(|&e| e.max(F::zero()))
                .collect();
            return Ok(Self {
                s: recompose(&dec.eigenvectors, &clipped),
            });
        }
        Ok(Self { s })
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        Self::new(SymMat::from_rows(rows)?)
    }

    /// Wraps a matrix that is PSD by construction (sums, congruences of PSD
    /// matrices). Skips the eigenvalue check.
    pub(crate) fn from_sym_unchecked(s: SymMat<F>) -> Self {
        Self { s }
    }

    pub fn zeros(n: usize) -> Self {
        Self { s: SymMat::zeros(n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { s: SymMat::identity(n) }
    }

    pub fn diag(entries: &[F]) -> Result<Self> {
        let eps = eps_psd::<F>();
        if let Some(&bad) = entries.iter().find(|&&e| e < -eps) {
            return Err(Error::NotPsd { min_eig: as_f64(bad) });
        }
        let clipped: Vec<F> = entries.iter().map(|&e| e.max(F::zero())).collect();
        Ok(Self { s: SymMat::diag(&clipped) })
    }

    pub fn scalar(value: F) -> Result<Self> {
        Self::diag(&[value])
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    pub fn sym(&self) -> &SymMat<F> {
        &self.s
    }

    pub fn mat(&self) -> &Mat<F> {
        self.s.mat()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { s: self.s.add(&other.s) }
    }

    /// `diag(a, b)` of two PSD matrices, PSD by construction.
    pub fn block_diag(a: &Self, b: &Self) -> Self {
        Self {
            s: SymMat {
                m: Mat::block_diag(a.mat(), b.mat()),
            },
        }
    }
}

/// Eigendecomposition of a symmetric matrix: ascending eigenvalues and the
/// matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition<F> {
    pub eigenvalues: Vec<F>,
    pub eigenvectors: Mat<F>,
}

impl<F: Real> EigenDecomposition<F> {
    pub fn min(&self) -> F {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> F {
        *self.eigenvalues.last().unwrap()
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn sym_eigen<F: Real>(a: &SymMat<F>) -> Result<EigenDecomposition<F>> {
    if !a.mat().is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = a.dim();
    let mut d = a.mat().clone();
    let mut q = Mat::identity(n);

    if n > 1 {
        let scale = d.frob_norm().max(F::one());
        let stop = F::epsilon() * scale * real(1e-2);
        let max_sweeps = 64;
        for _ in 0..max_sweeps {
            let mut off = F::zero();
            for i in 0..n {
                for j in i + 1..n {
                    off += d[(i, j)] * d[(i, j)];
                }
            }
            if off.sqrt() <= stop {
                break;
            }
            for p in 0..n {
                for qi in p + 1..n {
                    let apq = d[(p, qi)];
                    if apq.abs() <= F::epsilon() * scale * real(1e-6) {
                        continue;
                    }
                    let app = d[(p, p)];
                    let aqq = d[(qi, qi)];
                    let tau = (aqq - app) / (apq + apq);
                    let t = if tau >= F::zero() {
                        F::one() / (tau + (F::one() + tau * tau).sqrt())
                    } else {
                        -F::one() / (-tau + (F::one() + tau * tau).sqrt())
                    };
                    let c = F::one() / (F::one() + t * t).sqrt();
                    let s = t * c;

                    d[(p, p)] = app - t * apq;
                    d[(qi, qi)] = aqq + t * apq;
                    d[(p, qi)] = F::zero();
                    d[(qi, p)] = F::zero();
                    for i in 0..n {
                        if i != p && i != qi {
                            let aip = d[(i, p)];
                            let aiq = d[(i, qi)];
                            d[(i, p)] = c * aip - s * aiq;
                            d[(p, i)] = d[(i, p)];
                            d[(i, qi)] = s * aip + c * aiq;
                            d[(qi, i)] = d[(i, qi)];
                        }
                    }
                    for i in 0..n {
                        let vip = q[(i, p)];
                        let viq = q[(i, qi)];
                        q[(i, p)] = c * vip - s * viq;
                        q[(i, qi)] = s * vip + c * viq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        d[(i, i)]
            .partial_cmp(&d[(j, j)])
            .expect("eigenvalues are finite")
    });
    let eigenvalues: Vec<F> = order.iter().map(|&i| d[(i, i)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = q[(row, src)];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// `Q diag(evals) Qᵀ`, symmetrized.
pub(crate) fn recompose<F: Real>(q: &Mat<F>, evals: &[F]) -> SymMat<F> {
    let n = q.rows();
    let mut scaled = q.clone();
    for j in 0..n {
        for i in 0..n {
            scaled[(i, j)] *= evals[j];
        }
    }
    SymMat::new(scaled.mul_t(q)).expect("square by construction")
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky<F: Real>(a: &SymMat<F>) -> Result<Mat<F>> {
    let n = a.dim();
    let mut l = Mat::zeros(n, n);
    let scale = a.trace().abs().max(F::one());
    let floor = F::epsilon() * scale;
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > floor) {
            return Err(Error::Singular(format!(
                "Cholesky pivot {:e} at index {} (matrix not positive definite)",
                as_f64(diag),
                j
            )));
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(l)
}

/// Natural-log determinant of a strictly positive-definite matrix, via
/// Cholesky: `2 Σ log L_ii`.
pub fn logdet_psd<F: Real>(a: &PsdMat<F>) -> Result<F> {
    let l = cholesky(a.sym())?;
    let mut s = F::zero();
    for i in 0..a.dim() {
        s += l[(i, i)].ln();
    }
    Ok(s + s)
}

/// Same log-determinant for a matrix known symmetric but not wrapped as PSD.
pub(crate) fn logdet_sym_pd<F: Real>(a: &SymMat<F>) -> Result<F> {
    let l = cholesky(a)?;
    let mut s = F::zero();
    for i in 0..a.dim() {
        s += l[(i, i)].ln();
    }
    Ok(s + s)
}

/// Solves `A X = B` for symmetric positive-definite `A`.
pub fn spd_solve<F: Real>(a: &SymMat<F>, b: &Mat<F>) -> Result<Mat<F>> {
    if a.dim() != b.rows() {
        return Err(Error::DimensionMismatch("solve dimension mismatch".into()));
    }
    let l = cholesky(a)?;
    let n = a.dim();
    let mut x = b.clone();
    // forward: L y = b
    for col in 0..x.cols() {
        for i in 0..n {
            let mut v = x[(i, col)];
            for k in 0..i {
                v -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = v / l[(i, i)];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut v = x[(i, col)];
            for k in i + 1..n {
                v -= l[(k, i)] * x[(k, col)];
            }
            x[(i, col)] = v / l[(i, i)];
        }
    }
    Ok(x)
}

/// Inverse of a symmetric positive-definite matrix.
pub fn spd_inverse<F: Real>(a: &SymMat<F>) -> Result<SymMat<F>> {
    let inv = spd_solve(a, &Mat::identity(a.dim()))?;
    SymMat::new(inv)
}

/// Loewner comparison `a ⪯ b`: true iff the smallest eigenvalue of `b - a`
/// is at least `-tol`.
pub fn loewner_leq<F: Real>(a: &SymMat<F>, b: &SymMat<F>, tol: F) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Loewner comparison of {}x{} against {}x{}",
            a.dim(),
            a.dim(),
            b.dim(),
            b.dim()
        )));
    }
    let diff = b.sub(a);
    let dec = sym_eigen(&diff)?;
    Ok(dec.min() >= -tol)
}

/// Symmetric PSD square root.
pub fn sqrt_psd<F: Real>(a: &PsdMat<F>) -> Result<PsdMat<F>> {
    let dec = sym_eigen(a.sym())?;
    let roots: Vec<F> = dec
        .eigenvalues
        .iter()
        .map(|&e| e.max(F::zero()).sqrt())
        .collect();
    Ok(PsdMat::from_sym_unchecked(recompose(
        &dec.eigenvectors,
        &roots,
    )))
}

/// Projects the spectrum of `a` onto `[lo, hi]`, keeping the eigenvectors.
/// Returns `a` unchanged when it is already a fixed point.
pub fn clip_spectrum<F: Real>(a: &SymMat<F>, lo: F, hi: F) -> Result<SymMat<F>> {
    if lo > hi {
        return Err(Error::InvalidParameter(format!(
            "clip interval is empty: [{}, {}]",
            lo, hi
        )));
    }
    let dec = sym_eigen(a)?;
    if dec.min() >= lo && dec.max() <= hi {
        return Ok(a.clone());
    }
    let clipped: Vec<F> = dec
        .eigenvalues
        .iter()
        .map(|&e| e.max(lo).min(hi))
        .collect();
    Ok(recompose(&dec.eigenvectors, &clipped))
}
