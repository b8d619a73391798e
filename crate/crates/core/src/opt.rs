//! Covariance-constrained maximization of the Gaussian rate functionals.
//!
//! The Loewner-interval constraint `0 ⪯ K' ⪯ K` is handled by working in the
//! range space of `K`: with `K = QΛQᵀ` and `B = Q_r Λ_r^{1/2}`, candidate
//! covariances are `K' = B M Bᵀ` with `0 ⪯ M ⪯ I`, and projecting `M` is an
//! exact spectral clip. Ascent is projected gradient with backtracking line
//! search and multi-start; the objectives are not concave in general, so the
//! brute-force oracles in the test suites are the correctness backstop.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::linalg::{clip_spectrum, spd_solve, sym_eigen, PsdMat, SymMat};
use crate::mat::Mat;
use crate::rates::{gauss_mi, ChannelPair, GaussianSplit, LambdaWeights};
use crate::scalar::{real, Real};

/// Tuning knobs for the projected-gradient optimizers.
#[derive(Debug, Clone, Copy)]
pub struct OptConfig<F> {
    /// Relative objective stall threshold.
    pub tol_obj: F,
    /// Projected-gradient norm threshold.
    pub tol_grad: F,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    pub step_init: F,
}

impl<F: Real> Default for OptConfig<F> {
    fn default() -> Self {
        Self {
            tol_obj: real(1e-13),
            tol_grad: real(1e-10),
            max_iter: 800,
            restarts: 8,
            seed: 0,
            step_init: real(0.5),
        }
    }
}

impl<F: Real> OptConfig<F> {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol_obj > F::zero()) || self.restarts == 0 {
            return Err(Error::InvalidParameter(
                "OptConfig needs tol_obj > 0 and restarts >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a single-covariance maximization.
#[derive(Debug, Clone)]
pub struct OptResult<F> {
    pub k_opt: PsdMat<F>,
    pub value: F,
    pub iterations: usize,
    pub converged: bool,
    pub restart_values: Vec<F>,
    pub restart_converged: Vec<bool>,
}

/// Outcome of the two-covariance maximization.
#[derive(Debug, Clone)]
pub struct PairOptResult<F> {
    pub k1_opt: PsdMat<F>,
    pub k2_opt: PsdMat<F>,
    pub value: F,
    pub iterations: usize,
    pub converged: bool,
    pub restart_values: Vec<F>,
}

#[derive(Debug, Clone)]
pub struct TwoLetterReport<F> {
    pub two_letter_value: F,
    pub single_value: F,
    pub cross_norm: F,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct MinimaxResult<F> {
    pub alpha_star: F,
    pub outer_value: F,
    pub split: GaussianSplit<F>,
    pub inner: PairOptResult<F>,
    pub converged: bool,
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream per restart so results never depend on scheduling.
fn restart_rng(seed: u64, restart: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed) ^ splitmix64(restart.wrapping_add(1)))
}

fn uniform<F: Real>(rng: &mut ChaCha8Rng) -> F {
    // 53 mantissa bits, uniform in [0, 1)
    real((rng.next_u64() >> 11) as f64 / 9007199254740992.0)
}

fn random_sym<F: Real>(rng: &mut ChaCha8Rng, n: usize) -> SymMat<F> {
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = uniform::<F>(rng) * real(2.0) - F::one();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    SymMat::new(m).expect("square by construction")
}

/// Range-space factor of the constraint covariance: `K = B Bᵀ` with `B`
/// of full column rank.
struct Reduction<F> {
    basis: Mat<F>,
    rank: usize,
}

fn reduce<F: Real>(k: &PsdMat<F>) -> Result<Option<Reduction<F>>> {
    let dec = sym_eigen(k.sym())?;
    let cutoff = real::<F>(1e-12) * dec.max().max(F::one());
    let kept: Vec<usize> = (0..k.dim())
        .filter(|&i| dec.eigenvalues[i] > cutoff)
        .collect();
    if kept.is_empty() {
        return Ok(None);
    }
    let mut basis = Mat::zeros(k.dim(), kept.len());
    for (col, &src) in kept.iter().enumerate() {
        let root = dec.eigenvalues[src].sqrt();
        for row in 0..k.dim() {
            basis[(row, col)] = dec.eigenvectors[(row, src)] * root;
        }
    }
    Ok(Some(Reduction { rank: kept.len(), basis }))
}

impl<F: Real> Reduction<F> {
    /// `K' = B M Bᵀ`, PSD whenever `M` is.
    fn lift(&self, m: &SymMat<F>) -> PsdMat<F> {
        let k = self.basis.mul(m.mat()).mul_t(&self.basis);
        PsdMat::from_sym_unchecked(SymMat::new(k).expect("square"))
    }

    /// Pullback of a covariance into coordinates, clipped into `[0, I]`.
    fn pull_back(&self, k: &PsdMat<F>) -> Result<SymMat<F>> {
        // M = Λ^{-1/2} Qᵀ K' Q Λ^{-1/2}; B already carries Q Λ^{1/2}, so
        // build the pseudo-inverse factor column by column.
        let mut pinv = Mat::zeros(self.basis.rows(), self.rank);
        for col in 0..self.rank {
            let mut norm_sq = F::zero();
            for row in 0..self.basis.rows() {
                norm_sq += self.basis[(row, col)] * self.basis[(row, col)];
            }
            for row in 0..self.basis.rows() {
                pinv[(row, col)] = self.basis[(row, col)] / norm_sq;
            }
        }
        let m = pinv.t_mul(k.mat()).mul(&pinv);
        clip_spectrum(&SymMat::new(m)?, F::zero(), F::one())
    }
}

/// `½ Gᵀ(I + G M Gᵀ)⁻¹ G`, the gradient of `M ↦ ½ log|I + G M Gᵀ|`.
fn mi_gradient_sym<F: Real>(g: &Mat<F>, m: &SymMat<F>) -> Result<SymMat<F>> {
    let c = SymMat::new(g.mul(m.mat()).mul_t(g).add(&Mat::identity(g.rows())))?;
    let solved = spd_solve(&c, g)?;
    SymMat::new(g.t_mul(&solved).scale(real(0.5)))
}

/// Gradient of the Gaussian mutual information in its input covariance.
pub fn gauss_mi_gradient<F: Real>(g: &Mat<F>, k: &PsdMat<F>) -> Result<SymMat<F>> {
    mi_gradient_sym(g, k.sym())
}

/// Point in the feasible set: a single coordinate block or a pair.
trait OptPoint<F: Real>: Clone {
    fn axpy(&self, step: F, dir: &Self) -> Self;
    fn dist(&self, other: &Self) -> F;
}

impl<F: Real> OptPoint<F> for SymMat<F> {
    fn axpy(&self, step: F, dir: &Self) -> Self {
        self.add(&dir.scale(step))
    }

    fn dist(&self, other: &Self) -> F {
        self.sub(other).frob_norm()
    }
}

impl<F: Real> OptPoint<F> for (SymMat<F>, SymMat<F>) {
    fn axpy(&self, step: F, dir: &Self) -> Self {
        (self.0.axpy(step, &dir.0), self.1.axpy(step, &dir.1))
    }

    fn dist(&self, other: &Self) -> F {
        let a = self.0.sub(&other.0).frob_norm();
        let b = self.1.sub(&other.1).frob_norm();
        (a * a + b * b).sqrt()
    }
}

struct AscentOutcome<F, P> {
    point: P,
    value: F,
    iterations: usize,
    converged: bool,
}

fn ascend<F, P>(
    start: P,
    obj: &dyn Fn(&P) -> Result<F>,
    grad: &dyn Fn(&P) -> Result<P>,
    proj: &dyn Fn(&P) -> Result<P>,
    cfg: &OptConfig<F>,
) -> Result<AscentOutcome<F, P>>
where
    F: Real,
    P: OptPoint<F>,
{
    let mut x = proj(&start)?;
    let mut value = obj(&x)?;
    let mut step = cfg.step_init;
    let step_floor = real::<F>(1e-18);
    let mut stalled = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;

    for iter in 0..cfg.max_iter {
        iterations = iter + 1;
        let g = grad(&x)?;
        // Projected-gradient stationarity probe at unit step.
        let probe = proj(&x.axpy(F::one(), &g))?;
        let pg_norm = probe.dist(&x);
        if pg_norm <= cfg.tol_grad {
            converged = true;
            break;
        }

        let mut s = step;
        let mut accepted = false;
        for _ in 0..70 {
            let cand = proj(&x.axpy(s, &g))?;
            let cand_value = obj(&cand)?;
            if cand_value > value {
                let gain = cand_value - value;
                x = cand;
                value = cand_value;
                step = (s * real(1.3)).min(real(1e6));
                accepted = true;
                if gain <= cfg.tol_obj * (F::one() + value.abs()) {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
                break;
            }
            s *= real(0.5);
            if s < step_floor {
                break;
            }
        }
        if !accepted {
            // No uphill step along the projected gradient: treat as
            // stationary only if the probe already says so.
            converged = pg_norm <= cfg.tol_grad * real(1e3);
            break;
        }
        if stalled >= 4 {
            converged = true;
            break;
        }
    }
    Ok(AscentOutcome {
        point: x,
        value,
        iterations,
        converged,
    })
}

fn zero_opt_result<F: Real>(t: usize) -> OptResult<F> {
    OptResult {
        k_opt: PsdMat::zeros(t),
        value: F::zero(),
        iterations: 0,
        converged: true,
        restart_values: Vec::new(),
        restart_converged: Vec::new(),
    }
}

/// Point-to-point capacity under the covariance cap: mutual information is
/// monotone in the Loewner order, so the cap itself is the maximizer.
pub fn v_point<F: Real>(g: &Mat<F>, k: &PsdMat<F>) -> Result<F> {
    gauss_mi(g, k)
}

/// Maximizes `s_λ` over Gaussian inputs with covariance between `0` and `k`.
pub fn v_lambda<F: Real>(
    ch: &ChannelPair<F>,
    k: &PsdMat<F>,
    lambda: F,
    cfg: &OptConfig<F>,
) -> Result<OptResult<F>> {
    v_lambda_with_init(ch, k, lambda, cfg, &[])
}

/// Same maximization with extra caller-supplied starting covariances
/// (used for warm starts and for optimizer-trajectory experiments).
pub fn v_lambda_with_init<F: Real>(
    ch: &ChannelPair<F>,
    k: &PsdMat<F>,
    lambda: F,
    cfg: &OptConfig<F>,
    extra_inits: &[PsdMat<F>],
) -> Result<OptResult<F>> {
    cfg.validate()?;
    if !(lambda > F::one()) {
        return Err(Error::InvalidParameter(
            "lambda must exceed 1; the region tracer handles the swapped side".into(),
        ));
    }
    if k.dim() != ch.dim() {
        return Err(Error::DimensionMismatch("constraint dimension mismatch".into()));
    }
    let red = match reduce(k)? {
        Some(r) => r,
        None => return Ok(zero_opt_result(ch.dim())),
    };
    let r = red.rank;
    let g1r = ch.g1().mul(&red.basis);
    let g2r = ch.g2().mul(&red.basis);

    let half = real::<F>(0.5);
    let obj = |m: &SymMat<F>| -> Result<F> {
        Ok(crate::rates::gauss_mi_sym(&g1r, m)? - lambda * crate::rates::gauss_mi_sym(&g2r, m)?)
    };
    let grad = |m: &SymMat<F>| -> Result<SymMat<F>> {
        let d1 = mi_gradient_sym(&g1r, m)?;
        let d2 = mi_gradient_sym(&g2r, m)?;
        Ok(d1.sub(&d2.scale(lambda)))
    };
    let proj = |m: &SymMat<F>| clip_spectrum(m, F::zero(), F::one());

    let mut starts: Vec<SymMat<F>> = Vec::new();
    starts.push(SymMat::identity(r).scale(half));
    for i in 1..cfg.restarts {
        let mut rng = restart_rng(cfg.seed, i as u64);
        starts.push(random_sym(&mut rng, r));
    }
    for init in extra_inits {
        starts.push(red.pull_back(init)?);
    }

    let mut restart_values = Vec::with_capacity(starts.len());
    let mut restart_converged = Vec::with_capacity(starts.len());
    let mut best: Option<AscentOutcome<F, SymMat<F>>> = None;
    for start in starts {
        let out = ascend(start, &obj, &grad, &proj, cfg)?;
        restart_values.push(out.value);
        restart_converged.push(out.converged);
        if best.as_ref().is_none_or(|b| out.value > b.value) {
            best = Some(out);
        }
    }
    let best = best.expect("at least one restart");

    // Interval endpoints as exact candidates: M = 0 has value exactly 0.
    let value_at_cap = obj(&SymMat::identity(r))?;
    if F::zero() >= best.value && F::zero() >= value_at_cap {
        return Ok(OptResult {
            k_opt: PsdMat::zeros(ch.dim()),
            value: F::zero(),
            iterations: 0,
            converged: true,
            restart_values,
            restart_converged,
        });
    }
    if value_at_cap > best.value {
        return Ok(OptResult {
            k_opt: red.lift(&SymMat::identity(r)),
            value: value_at_cap,
            iterations: 0,
            converged: true,
            restart_values,
            restart_converged,
        });
    }
    Ok(OptResult {
        k_opt: red.lift(&best.point),
        value: best.value,
        iterations: best.iterations,
        converged: best.converged,
        restart_values,
        restart_converged,
    })
}

/// Joint feasibility projection for the two-block problem:
/// `M1, M2 ⪰ 0` and `M1 + M2 ⪯ I`, by alternating spectral clips with a
/// capped correction loop.
fn project_pair<F: Real>(m1: &SymMat<F>, m2: &SymMat<F>) -> Result<(SymMat<F>, SymMat<F>)> {
    let half = real::<F>(0.5);
    let mut a = clip_spectrum(m1, F::zero(), F::infinity())?;
    let mut b = clip_spectrum(m2, F::zero(), F::infinity())?;
    for _ in 0..60 {
        let sum = a.add(&b);
        let dec = sym_eigen(&sum)?;
        if dec.max() <= F::one() + real(1e-13) {
            return Ok((a, b));
        }
        // excess spectral mass of the sum above 1, removed evenly
        let capped = clip_spectrum(&sum, F::neg_infinity(), F::one())?;
        let excess = sum.sub(&capped);
        a = clip_spectrum(&a.sub(&excess.scale(half)), F::zero(), F::infinity())?;
        b = clip_spectrum(&b.sub(&excess.scale(half)), F::zero(), F::infinity())?;
    }
    // Fallback: uniform shrink keeps both blocks PSD and caps the sum.
    let dec = sym_eigen(&a.add(&b))?;
    if dec.max() > F::one() {
        let s = dec.max().recip();
        a = a.scale(s);
        b = b.scale(s);
    }
    Ok((a, b))
}

/// Maximizes the common-message objective over pairs `(K1, K2)` of PSD
/// covariances with `K1 + K2 ⪯ k`.
pub fn v_hat_lambda<F: Real>(
    ch: &ChannelPair<F>,
    k: &PsdMat<F>,
    w: &LambdaWeights<F>,
    cfg: &OptConfig<F>,
) -> Result<PairOptResult<F>> {
    v_hat_lambda_with_init(ch, k, w, cfg, &[])
}

pub fn v_hat_lambda_with_init<F: Real>(
    ch: &ChannelPair<F>,
    k: &PsdMat<F>,
    w: &LambdaWeights<F>,
    cfg: &OptConfig<F>,
    extra_inits: &[(PsdMat<F>, PsdMat<F>)],
) -> Result<PairOptResult<F>> {
    cfg.validate()?;
    w.require_common()?;
    if k.dim() != ch.dim() {
        return Err(Error::DimensionMismatch("constraint dimension mismatch".into()));
    }
    let red = match reduce(k)? {
        Some(r) => r,
        None => {
            return Ok(PairOptResult {
                k1_opt: PsdMat::zeros(ch.dim()),
                k2_opt: PsdMat::zeros(ch.dim()),
                value: F::zero(),
                iterations: 0,
                converged: true,
                restart_values: Vec::new(),
            })
        }
    };
    let r = red.rank;
    let g1r = ch.g1().mul(&red.basis);
    let g2r = ch.g2().mul(&red.basis);
    let mu = w.inner_ratio();
    let l12 = w.lambda1 + w.lambda2;
    let l0a = w.lambda0 * w.alpha;
    let l0b = w.lambda0 * w.alpha_bar();

    let obj = |p: &(SymMat<F>, SymMat<F>)| -> Result<F> {
        let sum = p.0.add(&p.1);
        let mi1_sum = crate::rates::gauss_mi_sym(&g1r, &sum)?;
        let mi2_sum = crate::rates::gauss_mi_sym(&g2r, &sum)?;
        let mi1_k1 = crate::rates::gauss_mi_sym(&g1r, &p.0)?;
        let mi2_k1 = crate::rates::gauss_mi_sym(&g2r, &p.0)?;
        Ok(-l0a * mi1_sum - l0b * mi2_sum + l12 * mi2_sum + w.lambda1 * (mi1_k1 - mu * mi2_k1))
    };
    let grad = |p: &(SymMat<F>, SymMat<F>)| -> Result<(SymMat<F>, SymMat<F>)> {
        let sum = p.0.add(&p.1);
        let d1_sum = mi_gradient_sym(&g1r, &sum)?;
        let d2_sum = mi_gradient_sym(&g2r, &sum)?;
        let shared = d2_sum.scale(l12 - l0b).sub(&d1_sum.scale(l0a));
        let d1_k1 = mi_gradient_sym(&g1r, &p.0)?;
        let d2_k1 = mi_gradient_sym(&g2r, &p.0)?;
        let own = d1_k1.sub(&d2_k1.scale(mu)).scale(w.lambda1);
        Ok((shared.add(&own), shared))
    };
    let proj = |p: &(SymMat<F>, SymMat<F>)| project_pair(&p.0, &p.1);

    let quarter = real::<F>(0.25);
    let half = real::<F>(0.5);
    let mut starts: Vec<(SymMat<F>, SymMat<F>)> = Vec::new();
    starts.push((SymMat::identity(r).scale(quarter), SymMat::identity(r).scale(quarter)));
    if cfg.restarts > 1 {
        starts.push((SymMat::identity(r).scale(half), SymMat::zeros(r)));
    }
    if cfg.restarts > 2 {
        starts.push((SymMat::zeros(r), SymMat::identity(r).scale(half)));
    }
    for i in starts.len()..cfg.restarts {
        let mut rng = restart_rng(cfg.seed, i as u64);
        starts.push((random_sym(&mut rng, r), random_sym(&mut rng, r)));
    }
    for (k1, k2) in extra_inits {
        starts.push((red.pull_back(k1)?, red.pull_back(k2)?));
    }

    let mut restart_values = Vec::with_capacity(starts.len());
    let mut best: Option<AscentOutcome<F, (SymMat<F>, SymMat<F>)>> = None;
    for start in starts {
        let out = ascend(start, &obj, &grad, &proj, cfg)?;
        restart_values.push(out.value);
        if best.as_ref().is_none_or(|b| out.value > b.value) {
            best = Some(out);
        }
    }
    let best = best.expect("at least one restart");

    // the zero pair is feasible with value exactly 0
    if F::zero() >= best.value {
        return Ok(PairOptResult {
            k1_opt: PsdMat::zeros(ch.dim()),
            k2_opt: PsdMat::zeros(ch.dim()),
            value: F::zero(),
            iterations: 0,
            converged: true,
            restart_values,
        });
    }
    Ok(PairOptResult {
        k1_opt: red.lift(&best.point.0),
        k2_opt: red.lift(&best.point.1),
        value: best.value,
        iterations: best.iterations,
        converged: best.converged,
        restart_values,
    })
}

/// Compares the two-letter product-channel optimum against twice the
/// single-letter optimum and reports the optimizer's cross-block size.
pub fn two_letter_check<F: Real>(
    ch: &ChannelPair<F>,
    k: &PsdMat<F>,
    lambda: F,
    cfg: &OptConfig<F>,
) -> Result<TwoLetterReport<F>> {
    two_letter_check_with_init(ch, k, lambda, cfg, &[])
}

pub fn two_letter_check_with_init<F: Real>(
    ch: &ChannelPair<F>,
    k: &PsdMat<F>,
    lambda: F,
    cfg: &OptConfig<F>,
    joint_inits: &[PsdMat<F>],
) -> Result<TwoLetterReport<F>> {
    let single = v_lambda(ch, k, lambda, cfg)?;
    let doubled = ch.two_letter();
    let kd = PsdMat::block_diag(k, k);
    let two = v_lambda_with_init(&doubled, &kd, lambda, cfg, joint_inits)?;
    let t = ch.dim();
    let cross_norm = two.k_opt.mat().block(0, t, t, t).frob_norm();
    Ok(TwoLetterReport {
        two_letter_value: two.value,
        single_value: single.value,
        cross_norm,
        converged: single.converged && two.converged,
    })
}

/// One evaluation of the outer objective
/// `F(α) = λ0[α·I(X;Y1) + ᾱ·I(X;Y2)]  +  V̂(α)` at the constraint cap.
fn outer_value<F: Real>(
    ch: &ChannelPair<F>,
    k: &PsdMat<F>,
    weights: &LambdaWeights<F>,
    cfg: &OptConfig<F>,
    mi_pair: (F, F),
    warm: Option<&(PsdMat<F>, PsdMat<F>)>,
) -> Result<(F, PairOptResult<F>)> {
    let inits: Vec<(PsdMat<F>, PsdMat<F>)> = warm.cloned().into_iter().collect();
    let inner = v_hat_lambda_with_init(ch, k, weights, cfg, &inits)?;
    let value = weights.lambda0 * (weights.alpha * mi_pair.0 + weights.alpha_bar() * mi_pair.1)
        + inner.value;
    Ok((value, inner))
}

/// Minimizes the convex outer objective over the mixing weight `α ∈ [0, 1]`
/// by golden-section search, warm-starting each inner maximization from the
/// previously found split.
pub fn minimax_alpha<F: Real>(
    ch: &ChannelPair<F>,
    k: &PsdMat<F>,
    lambda0: F,
    lambda1: F,
    lambda2: F,
    cfg: &OptConfig<F>,
) -> Result<MinimaxResult<F>> {
    let base = LambdaWeights::new(lambda0, lambda1, lambda2, real(0.5))?;
    base.require_common()?;
    let mi_pair = (gauss_mi(ch.g1(), k)?, gauss_mi(ch.g2(), k)?);

    let mut warm: Option<(PsdMat<F>, PsdMat<F>)> = None;
    let mut best: Option<(F, F, PairOptResult<F>)> = None;
    let eval = |alpha: F, warm: &mut Option<(PsdMat<F>, PsdMat<F>)>, best: &mut Option<(F, F, PairOptResult<F>)>| -> Result<F> {
        let w = base.with_alpha(alpha);
        let (value, inner) = outer_value(ch, k, &w, cfg, mi_pair, warm.as_ref())?;
        *warm = Some((inner.k1_opt.clone(), inner.k2_opt.clone()));
        if best.as_ref().is_none_or(|(_, bv, _)| value < *bv) {
            *best = Some((alpha, value, inner));
        }
        Ok(value)
    };

    // corners first, then golden section on the interior
    eval(F::zero(), &mut warm, &mut best)?;
    eval(F::one(), &mut warm, &mut best)?;

    let phi = (real::<F>(5.0).sqrt() - F::one()) * real(0.5);
    let mut a = F::zero();
    let mut b = F::one();
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = eval(x1, &mut warm, &mut best)?;
    let mut f2 = eval(x2, &mut warm, &mut best)?;
    for _ in 0..60 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = eval(x1, &mut warm, &mut best)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = eval(x2, &mut warm, &mut best)?;
        }
    }

    let (alpha_star, value, inner) = best.expect("evaluated at least the corners");
    let k_sum = inner.k1_opt.add(&inner.k2_opt);
    let kw_raw = SymMat::new(k.mat().sub(k_sum.mat()))?;
    let kw = PsdMat::with_tolerance(kw_raw, real(1e-8)).map_err(|_| {
        Error::Numerical("residual common-layer covariance escaped the constraint".into())
    })?;
    let split = GaussianSplit {
        kw,
        k1: inner.k1_opt.clone(),
        k2: inner.k2_opt.clone(),
    };
    Ok(MinimaxResult {
        alpha_star,
        outer_value: value,
        converged: inner.converged,
        split,
        inner,
    })
}

/// Dense-grid minimization of the same outer objective; the independent
/// check for the golden-section path. Marches `α` from 0 to 1 warm-starting
/// each inner solve from its neighbor.
pub fn minimax_alpha_grid<F: Real>(
    ch: &ChannelPair<F>,
    k: &PsdMat<F>,
    lambda0: F,
    lambda1: F,
    lambda2: F,
    cfg: &OptConfig<F>,
    step: F,
) -> Result<(F, F)> {
    let base = LambdaWeights::new(lambda0, lambda1, lambda2, real(0.5))?;
    base.require_common()?;
    if !(step > F::zero() && step <= F::one()) {
        return Err(Error::InvalidParameter("grid step must lie in (0, 1]".into()));
    }
    let mi_pair = (gauss_mi(ch.g1(), k)?, gauss_mi(ch.g2(), k)?);
    let n = num_traits::ToPrimitive::to_usize(&(F::one() / step).round())
        .ok_or_else(|| Error::InvalidParameter("grid step too small".into()))?;

    // full multi-start only on the first point; neighbors carry the warm start
    let march_cfg = OptConfig {
        restarts: cfg.restarts.min(2),
        ..*cfg
    };
    let mut warm: Option<(PsdMat<F>, PsdMat<F>)> = None;
    let mut best_alpha = F::zero();
    let mut best_value = F::infinity();
    for i in 0..=n {
        let alpha = (step * real(i as f64)).min(F::one());
        let w = base.with_alpha(alpha);
        let use_cfg = if i == 0 { *cfg } else { march_cfg };
        let (value, inner) = outer_value(ch, k, &w, &use_cfg, mi_pair, warm.as_ref())?;
        warm = Some((inner.k1_opt, inner.k2_opt));
        if value < best_value {
            best_value = value;
            best_alpha = alpha;
        }
    }
    Ok((best_alpha, best_value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::loewner_leq;

    const LN2: f64 = std::f64::consts::LN_2;

    fn cfg() -> OptConfig<f64> {
        OptConfig::with_seed(7)
    }

    #[test]
    fn v_point_examples() {
        let g = Mat::diag(&[1.0f64]);
        assert!((v_point(&g, &PsdMat::scalar(1.0).unwrap()).unwrap() - 0.5 * LN2).abs() < 1e-14);
        assert!(v_point(&g, &PsdMat::scalar(0.0).unwrap()).unwrap().abs() < 1e-14);
    }

    #[test]
    fn v_point_dominates_loewner_grid() {
        // every K' ⪯ K on a coarse PSD grid stays below the value at K itself
        let g = Mat::from_rows(&[vec![1.0f64, 0.2], vec![0.0, 0.7]]).unwrap();
        let k = PsdMat::from_rows(&[vec![1.0, 0.3], vec![0.3, 0.8]]).unwrap();
        let cap = v_point(&g, &k).unwrap();
        let mut best = 0.0f64;
        let steps = 20;
        for ia in 0..=steps {
            for ib in 0..=steps {
                for ic in -(steps as i64)..=(steps as i64) {
                    let a = ia as f64 / steps as f64;
                    let b = ib as f64 / steps as f64;
                    let c = ic as f64 / steps as f64 * 0.6;
                    if c * c > a * b {
                        continue;
                    }
                    let cand = SymMat::from_rows(&[vec![a, c], vec![c, b]]).unwrap();
                    if !loewner_leq(&cand, k.sym(), 1e-12).unwrap() {
                        continue;
                    }
                    let v = crate::rates::gauss_mi_sym(&g, &cand).unwrap();
                    best = best.max(v);
                }
            }
        }
        assert!(best <= cap + 1e-10);
        // the grid contains points close to K, so the gap stays small
        assert!(cap - best < 1e-2);
    }

    #[test]
    fn v_lambda_identical_channels_is_zero() {
        let ch = ChannelPair::scalar(1.3f64, 1.3).unwrap();
        let k = PsdMat::scalar(2.0).unwrap();
        let r = v_lambda(&ch, &k, 2.0, &cfg()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.k_opt.mat().frob_norm(), 0.0);
        assert!(r.converged);
    }

    #[test]
    fn v_lambda_scalar_matches_grid_and_stationary_point() {
        let ch = ChannelPair::scalar(1.0f64, 0.5).unwrap();
        let k = PsdMat::scalar(1.0).unwrap();
        for lambda in [1.5f64, 2.0, 3.0, 4.0] {
            let r = v_lambda(&ch, &k, lambda, &cfg()).unwrap();
            // dense scalar grid oracle
            let mut best = f64::NEG_INFINITY;
            let mut best_kp = 0.0;
            let steps = 100_000usize;
            for i in 0..=steps {
                let kp = i as f64 * 1e-5;
                let v = 0.5 * ((1.0 + kp).ln() - lambda * (1.0 + 0.25 * kp).ln());
                if v > best {
                    best = v;
                    best_kp = kp;
                }
            }
            assert!(
                (r.value - best).abs() < 1e-5,
                "lambda={lambda}: {} vs grid {}",
                r.value,
                best
            );
            // closed-form stationary candidate clipped into [0, K]
            let stationary = ((1.0 - lambda * 0.25) / (0.25 * (lambda - 1.0))).clamp(0.0, 1.0);
            assert!((r.k_opt.mat()[(0, 0)] - stationary).abs() < 1e-4);
            assert!((best_kp - stationary).abs() < 1e-4);
            assert!(r.value >= 0.0);
        }
    }

    #[test]
    fn v_lambda_zero_constraint() {
        let ch = ChannelPair::scalar(1.0f64, 0.5).unwrap();
        let r = v_lambda(&ch, &PsdMat::scalar(0.0).unwrap(), 2.0, &cfg()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn v_lambda_feasible_and_bounded() {
        let ch = ChannelPair::new(
            Mat::from_rows(&[vec![1.0f64, 0.2], vec![-0.1, 0.8]]).unwrap(),
            Mat::from_rows(&[vec![0.6, 0.0], vec![0.1, 0.5]]).unwrap(),
        )
        .unwrap();
        let k = PsdMat::from_rows(&[vec![1.5, 0.4], vec![0.4, 0.9]]).unwrap();
        let r = v_lambda(&ch, &k, 2.5, &cfg()).unwrap();
        assert!(loewner_leq(r.k_opt.sym(), k.sym(), 1e-8).unwrap());
        let bound = crate::rates::c_lambda_bound(&ch, 2.5).unwrap().c_lambda;
        assert!(r.value <= bound + 1e-9);
        assert!(r.value >= 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = Mat::from_rows(&[vec![1.0f64, 0.3], vec![-0.2, 0.9]]).unwrap();
        let k = PsdMat::from_rows(&[vec![0.8, 0.1], vec![0.1, 0.6]]).unwrap();
        let grad = gauss_mi_gradient(&g, &k).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            for j in 0..2 {
                let mut up = k.mat().clone();
                let mut dn = k.mat().clone();
                up[(i, j)] += h;
                up[(j, i)] = up[(i, j)];
                dn[(i, j)] -= h;
                dn[(j, i)] = dn[(i, j)];
                let fu = crate::rates::gauss_mi_sym(&g, &SymMat::new(up).unwrap()).unwrap();
                let fd = crate::rates::gauss_mi_sym(&g, &SymMat::new(dn).unwrap()).unwrap();
                // symmetric perturbation hits (i,j) and (j,i) together
                let scale = if i == j { 1.0 } else { 2.0 };
                let fd_grad = (fu - fd) / (2.0 * h) / scale;
                let rel = (grad[(i, j)] - fd_grad).abs() / (1.0 + fd_grad.abs());
                assert!(rel < 1e-5, "entry ({i},{j}): {} vs {}", grad[(i, j)], fd_grad);
            }
        }
    }

    #[test]
    fn pair_objective_gradient_matches_finite_differences() {
        // the two-block objective with full-rank constraint reduces to the
        // raw covariance coordinates, so probe the gradient there
        let ch = ChannelPair::new(
            Mat::from_rows(&[vec![1.0f64, 0.2], vec![-0.1, 0.8]]).unwrap(),
            Mat::from_rows(&[vec![0.5, 0.1], vec![0.0, 0.7]]).unwrap(),
        )
        .unwrap();
        let w = LambdaWeights::new(3.0, 1.0, 0.6, 0.35).unwrap();
        let mu = w.inner_ratio();
        let l12 = w.lambda1 + w.lambda2;
        let value = |k1: &SymMat<f64>, k2: &SymMat<f64>| -> f64 {
            let sum = k1.add(k2);
            let mi1s = crate::rates::gauss_mi_sym(ch.g1(), &sum).unwrap();
            let mi2s = crate::rates::gauss_mi_sym(ch.g2(), &sum).unwrap();
            let mi1a = crate::rates::gauss_mi_sym(ch.g1(), k1).unwrap();
            let mi2a = crate::rates::gauss_mi_sym(ch.g2(), k1).unwrap();
            -w.lambda0 * w.alpha * mi1s - w.lambda0 * w.alpha_bar() * mi2s + l12 * mi2s
                + w.lambda1 * (mi1a - mu * mi2a)
        };
        let k1 = SymMat::from_rows(&[vec![0.5, 0.1], vec![0.1, 0.4]]).unwrap();
        let k2 = SymMat::from_rows(&[vec![0.3, -0.05], vec![-0.05, 0.25]]).unwrap();

        // analytic gradients assembled the same way the optimizer does
        let d1_sum = mi_gradient_sym(ch.g1(), &k1.add(&k2)).unwrap();
        let d2_sum = mi_gradient_sym(ch.g2(), &k1.add(&k2)).unwrap();
        let shared = d2_sum
            .scale(l12 - w.lambda0 * w.alpha_bar())
            .sub(&d1_sum.scale(w.lambda0 * w.alpha));
        let own = mi_gradient_sym(ch.g1(), &k1)
            .unwrap()
            .sub(&mi_gradient_sym(ch.g2(), &k1).unwrap().scale(mu))
            .scale(w.lambda1);
        let grad1 = shared.add(&own);
        let grad2 = shared;

        let h = 1e-6;
        for i in 0..2 {
            for j in i..2 {
                let scale = if i == j { 1.0 } else { 2.0 };
                let mut perturb = |base: &SymMat<f64>, delta: f64| -> SymMat<f64> {
                    let mut m = base.mat().clone();
                    m[(i, j)] += delta;
                    m[(j, i)] = m[(i, j)];
                    SymMat::new(m).unwrap()
                };
                let fd1 =
                    (value(&perturb(&k1, h), &k2) - value(&perturb(&k1, -h), &k2)) / (2.0 * h) / scale;
                let fd2 =
                    (value(&k1, &perturb(&k2, h)) - value(&k1, &perturb(&k2, -h))) / (2.0 * h) / scale;
                assert!(
                    (grad1[(i, j)] - fd1).abs() <= 1e-5 * (1.0 + fd1.abs()),
                    "block 1 entry ({i},{j}): {} vs {}",
                    grad1[(i, j)],
                    fd1
                );
                assert!(
                    (grad2[(i, j)] - fd2).abs() <= 1e-5 * (1.0 + fd2.abs()),
                    "block 2 entry ({i},{j}): {} vs {}",
                    grad2[(i, j)],
                    fd2
                );
            }
        }
    }

    #[test]
    fn v_hat_dominated_weights_collapse_to_zero() {
        let ch = ChannelPair::scalar(1.0f64, 0.5).unwrap();
        let k = PsdMat::scalar(1.0).unwrap();
        let w = LambdaWeights::new(1e4, 1.0, 1.0, 0.5).unwrap();
        let r = v_hat_lambda(&ch, &k, &w, &cfg()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.k1_opt.mat().frob_norm(), 0.0);
        assert_eq!(r.k2_opt.mat().frob_norm(), 0.0);
    }

    #[test]
    fn v_hat_scalar_matches_2d_grid() {
        let ch = ChannelPair::scalar(1.0f64, 0.5).unwrap();
        let k = PsdMat::scalar(1.0).unwrap();
        let w = LambdaWeights::new(3.0, 1.0, 0.8, 0.3).unwrap();
        let r = v_hat_lambda(&ch, &k, &w, &cfg()).unwrap();

        let mu = w.inner_ratio();
        let mut best = f64::NEG_INFINITY;
        let steps = 1000usize;
        for i in 0..=steps {
            let k1 = i as f64 * 1e-3;
            for j in 0..=(steps - i) {
                let k2 = j as f64 * 1e-3;
                let ks = k1 + k2;
                let mi1s = 0.5 * (1.0 + ks).ln();
                let mi2s = 0.5 * (1.0 + 0.25 * ks).ln();
                let v = -w.lambda0 * w.alpha * mi1s - w.lambda0 * w.alpha_bar() * mi2s
                    + (w.lambda1 + w.lambda2) * mi2s
                    + w.lambda1
                        * (0.5 * (1.0 + k1).ln() - mu * 0.5 * (1.0 + 0.25 * k1).ln());
                best = best.max(v);
            }
        }
        assert!((r.value - best).abs() < 1e-3, "{} vs grid {}", r.value, best);

        // feasibility of the pair
        let sum = r.k1_opt.add(&r.k2_opt);
        assert!(loewner_leq(sum.sym(), k.sym(), 1e-8).unwrap());
    }

    #[test]
    fn v_hat_zero_constraint() {
        let ch = ChannelPair::scalar(1.0f64, 0.5).unwrap();
        let w = LambdaWeights::new(3.0, 1.0, 1.0, 0.5).unwrap();
        let r = v_hat_lambda(&ch, &PsdMat::scalar(0.0).unwrap(), &w, &cfg()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn v_hat_rejects_bad_weights() {
        let ch = ChannelPair::scalar(1.0f64, 0.5).unwrap();
        let k = PsdMat::scalar(1.0).unwrap();
        let w = LambdaWeights::new(1.5, 1.0, 1.0, 0.5).unwrap();
        assert!(v_hat_lambda(&ch, &k, &w, &cfg()).is_err());
    }

    #[test]
    fn two_letter_identical_channels() {
        let ch = ChannelPair::scalar(0.9f64, 0.9).unwrap();
        let k = PsdMat::scalar(1.0).unwrap();
        let r = two_letter_check(&ch, &k, 2.0, &cfg()).unwrap();
        assert_eq!(r.two_letter_value, 0.0);
        assert_eq!(r.single_value, 0.0);
        assert_eq!(r.cross_norm, 0.0);
    }

    #[test]
    fn two_letter_scalar_consequence() {
        let ch = ChannelPair::scalar(1.0f64, 0.5).unwrap();
        let k = PsdMat::scalar(1.0).unwrap();
        let r = two_letter_check(&ch, &k, 2.0, &cfg()).unwrap();
        let tol = 1e-3 * (1.0 + r.single_value.abs());
        assert!((r.two_letter_value - 2.0 * r.single_value).abs() <= tol);
        assert!(r.cross_norm <= 1e-3);
    }

    #[test]
    fn two_letter_correlated_init_decays() {
        let ch = ChannelPair::scalar(1.0f64, 0.5).unwrap();
        let k = PsdMat::scalar(1.0).unwrap();
        // strongly correlated feasible joint start
        let init = PsdMat::from_rows(&[vec![0.9, 0.85], vec![0.85, 0.9]]).unwrap();
        let r = two_letter_check_with_init(&ch, &k, 2.0, &cfg(), &[init]).unwrap();
        assert!(r.cross_norm <= 1e-3, "cross norm {}", r.cross_norm);
    }

    #[test]
    fn minimax_symmetric_channels_constant_objective() {
        let ch = ChannelPair::scalar(0.8f64, 0.8).unwrap();
        let k = PsdMat::scalar(1.0).unwrap();
        let r = minimax_alpha(&ch, &k, 3.0, 1.0, 1.0, &cfg()).unwrap();
        assert!(r.outer_value.is_finite());
        assert!((0.0..=1.0).contains(&r.alpha_star));
        // F is constant in alpha here; check at a few alphas
        let base = LambdaWeights::new(3.0, 1.0, 1.0, 0.0).unwrap();
        let mi = gauss_mi(ch.g1(), &k).unwrap();
        for a in [0.0, 0.5, 1.0] {
            let w = base.with_alpha(a);
            let inner = v_hat_lambda(&ch, &k, &w, &cfg()).unwrap();
            let f = 3.0 * mi + inner.value;
            assert!((f - r.outer_value).abs() < 1e-6);
        }
    }

    #[test]
    fn minimax_scalar_matches_grid() {
        let ch = ChannelPair::scalar(1.0f64, 0.5).unwrap();
        let k = PsdMat::scalar(1.0).unwrap();
        let r = minimax_alpha(&ch, &k, 3.0, 1.0, 0.5, &cfg()).unwrap();
        let (alpha_grid, value_grid) =
            minimax_alpha_grid(&ch, &k, 3.0, 1.0, 0.5, &cfg(), 1e-3).unwrap();
        assert!(
            (r.alpha_star - alpha_grid).abs() <= 1e-3,
            "golden {} vs grid {}",
            r.alpha_star,
            alpha_grid
        );
        assert!((r.outer_value - value_grid).abs() <= 1e-6);

        // spot minimality of the golden-section value
        let base = LambdaWeights::new(3.0, 1.0, 0.5, 0.0).unwrap();
        let mi_pair = (gauss_mi(ch.g1(), &k).unwrap(), gauss_mi(ch.g2(), &k).unwrap());
        for a in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let w = base.with_alpha(a);
            let inner = v_hat_lambda(&ch, &k, &w, &cfg()).unwrap();
            let f = 3.0 * (a * mi_pair.0 + (1.0 - a) * mi_pair.1) + inner.value;
            assert!(r.outer_value <= f + 1e-6);
        }
    }

    #[test]
    fn restart_spread_is_small_on_scalar_and_diagonal_families() {
        let spread_of = |r: &OptResult<f64>| -> f64 {
            let conv: Vec<f64> = r
                .restart_values
                .iter()
                .zip(&r.restart_converged)
                .filter(|(_, &c)| c)
                .map(|(&v, _)| v)
                .collect();
            assert!(!conv.is_empty());
            let max = conv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = conv.iter().cloned().fold(f64::INFINITY, f64::min);
            max - min
        };

        let ch = ChannelPair::scalar(1.0f64, 0.5).unwrap();
        let k = PsdMat::scalar(1.0).unwrap();
        let r = v_lambda(&ch, &k, 3.0, &cfg()).unwrap();
        assert!(spread_of(&r) <= 1e-4, "scalar spread {}", spread_of(&r));

        let chd = ChannelPair::new(
            Mat::diag(&[1.0f64, 0.8]),
            Mat::diag(&[0.5, 0.3]),
        )
        .unwrap();
        let kd = PsdMat::diag(&[1.0, 2.0]).unwrap();
        let rd = v_lambda(&chd, &kd, 2.0, &cfg()).unwrap();
        assert!(spread_of(&rd) <= 1e-4, "diagonal spread {}", spread_of(&rd));
    }

    #[test]
    fn v_lambda_monotone_in_constraint() {
        let ch = ChannelPair::scalar(1.0f64, 0.5).unwrap();
        let small = v_lambda(&ch, &PsdMat::scalar(0.5).unwrap(), 3.0, &cfg()).unwrap();
        let large = v_lambda(&ch, &PsdMat::scalar(1.5).unwrap(), 3.0, &cfg()).unwrap();
        assert!(small.value <= large.value + 1e-6);
    }
}
