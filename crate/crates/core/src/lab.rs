//! Scalar laboratory for discretized input laws on the additive Gaussian
//! channel: output differential entropy by quadrature, the discrete weighted
//! rate difference, the sum/difference doubling map with its convergence
//! experiment, the exact sum/difference independence criterion, and a
//! heuristic mixture search used to confirm that mixtures do not beat the
//! single Gaussian optimum.
//!
//! Everything here is one-dimensional; the vector-valued claims are
//! exercised through the closed forms in `rates` and `opt`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::opt::OptConfig;
use crate::scalar::{as_f64, real, Real};

/// Lattice on which the laboratory distributions live.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<F> {
    pub x0: F,
    pub dx: F,
    pub len: usize,
}

impl<F: Real> Default for GridSpec<F> {
    fn default() -> Self {
        // [-12, 12] at spacing 0.05
        Self {
            x0: real(-12.0),
            dx: real(0.05),
            len: 481,
        }
    }
}

impl<F: Real> GridSpec<F> {
    pub fn point(&self, i: usize) -> F {
        self.x0 + real::<F>(i as f64) * self.dx
    }
}

/// Discretized scalar probability law on a uniform lattice.
#[derive(Debug, Clone)]
pub struct GridDistribution<F> {
    x0: F,
    dx: F,
    probs: Vec<F>,
    zero_mean: bool,
}

impl<F: Real> GridDistribution<F> {
    pub fn new(x0: F, dx: F, probs: Vec<F>, zero_mean: bool) -> Result<Self> {
        if !(dx > F::zero()) {
            return Err(Error::InvalidInput("grid spacing must be positive".into()));
        }
        if probs.is_empty() {
            return Err(Error::InvalidInput("distribution needs support".into()));
        }
        if probs.iter().any(|&p| p < -real::<F>(1e-15) || !p.is_finite()) {
            return Err(Error::InvalidInput("probabilities must be nonnegative".into()));
        }
        let total: F = probs.iter().copied().sum();
        if (total - F::one()).abs() > real(1e-12) {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {} (must be 1 within 1e-12)",
                total
            )));
        }
        let probs = probs.into_iter().map(|p| p.max(F::zero())).collect();
        Ok(Self { x0, dx, probs, zero_mean })
    }

    pub fn grid(&self) -> GridSpec<F> {
        GridSpec {
            x0: self.x0,
            dx: self.dx,
            len: self.probs.len(),
        }
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn point(&self, i: usize) -> F {
        self.x0 + real::<F>(i as f64) * self.dx
    }

    pub fn mean(&self) -> F {
        let mut m = F::zero();
        for (i, &p) in self.probs.iter().enumerate() {
            if p > F::zero() {
                m += p * self.point(i);
            }
        }
        m
    }

    pub fn variance(&self) -> F {
        let mu = self.mean();
        let mut v = F::zero();
        for (i, &p) in self.probs.iter().enumerate() {
            if p > F::zero() {
                let d = self.point(i) - mu;
                v += p * d * d;
            }
        }
        v
    }

    /// Total-variation distance to another law on the same lattice.
    pub fn tv_distance(&self, other: &Self) -> Result<F> {
        if self.probs.len() != other.probs.len()
            || (self.x0 - other.x0).abs() > real(1e-9)
            || (self.dx - other.dx).abs() > real(1e-12)
        {
            return Err(Error::DimensionMismatch(
                "total variation needs matching grids".into(),
            ));
        }
        let mut s = F::zero();
        for (&a, &b) in self.probs.iter().zip(&other.probs) {
            s += (a - b).abs();
        }
        Ok(s * real(0.5))
    }

    /// Index range carrying all but a negligible sliver of the mass.
    fn significant_support(&self) -> (usize, usize) {
        let max = self.probs.iter().copied().fold(F::zero(), F::max);
        let floor = max * real(1e-16);
        let lo = self.probs.iter().position(|&p| p > floor).unwrap_or(0);
        let hi = self
            .probs
            .iter()
            .rposition(|&p| p > floor)
            .unwrap_or(self.probs.len() - 1);
        (lo, hi)
    }

    // --- builders ---

    pub fn point_mass(grid: &GridSpec<F>) -> Self {
        // all mass at the cell nearest zero
        let idx = nearest_cell(grid, F::zero());
        let mut probs = vec![F::zero(); grid.len];
        probs[idx] = F::one();
        Self {
            x0: grid.x0,
            dx: grid.dx,
            probs,
            zero_mean: false,
        }
    }

    /// Lattice sampling of a zero-mean normal density, normalized.
    pub fn gaussian(grid: &GridSpec<F>, variance: F) -> Result<Self> {
        if variance < F::zero() {
            return Err(Error::InvalidInput("variance must be nonnegative".into()));
        }
        if variance == F::zero() {
            return Ok(Self::point_mass(grid));
        }
        let two = real::<F>(2.0);
        let mut probs = vec![F::zero(); grid.len];
        let mut total = F::zero();
        for (i, slot) in probs.iter_mut().enumerate() {
            let x = grid.point(i);
            let e = -(x * x) / (two * variance);
            if e > real(-700.0) {
                *slot = e.exp();
                total += *slot;
            }
        }
        for p in &mut probs {
            *p /= total;
        }
        Self::new(grid.x0, grid.dx, probs, true)
    }

    /// Lattice sampling of the uniform density with the given variance.
    pub fn uniform(grid: &GridSpec<F>, variance: F) -> Result<Self> {
        if !(variance > F::zero()) {
            return Ok(Self::point_mass(grid));
        }
        let a = (real::<F>(3.0) * variance).sqrt();
        let mut probs = vec![F::zero(); grid.len];
        let mut total = F::zero();
        for (i, slot) in probs.iter_mut().enumerate() {
            let x = grid.point(i);
            if x.abs() <= a {
                *slot = F::one();
                total += F::one();
            }
        }
        if total == F::zero() {
            return Ok(Self::point_mass(grid));
        }
        for p in &mut probs {
            *p /= total;
        }
        Self::new(grid.x0, grid.dx, probs, true)
    }

    /// Equal masses at `±position`, each placed by two-neighbor splitting.
    pub fn symmetric_two_point(grid: &GridSpec<F>, position: F) -> Result<Self> {
        let mut probs = vec![F::zero(); grid.len];
        let half = real::<F>(0.5);
        deposit(grid, &mut probs, position, half)?;
        deposit(grid, &mut probs, -position, half)?;
        Self::new(grid.x0, grid.dx, probs, true)
    }

    /// Zero-mean three-point law at `{-a, 0, 2a}` with masses
    /// `(0.3, 0.55, 0.15)`; variance `0.9 a²`.
    pub fn skewed_three_point(grid: &GridSpec<F>, variance: F) -> Result<Self> {
        if !(variance > F::zero()) {
            return Ok(Self::point_mass(grid));
        }
        let a = (variance / real::<F>(0.9)).sqrt();
        let mut probs = vec![F::zero(); grid.len];
        deposit(grid, &mut probs, -a, real(0.3))?;
        deposit(grid, &mut probs, F::zero(), real(0.55))?;
        deposit(grid, &mut probs, a + a, real(0.15))?;
        Self::new(grid.x0, grid.dx, probs, true)
    }

    /// Uniform mass on `count` lattice points centered at zero, `stride`
    /// cells apart.
    pub fn uniform_points(grid: &GridSpec<F>, count: usize, stride: usize) -> Result<Self> {
        if count == 0 || stride == 0 || (count - 1) * stride >= grid.len {
            return Err(Error::InvalidInput("bad support layout".into()));
        }
        let center = nearest_cell(grid, F::zero());
        let span = (count - 1) * stride;
        let start = center
            .checked_sub(span / 2)
            .ok_or_else(|| Error::InvalidInput("support does not fit the grid".into()))?;
        let mut probs = vec![F::zero(); grid.len];
        let w = F::one() / real(count as f64);
        for idx in 0..count {
            probs[start + idx * stride] = w;
        }
        Self::new(grid.x0, grid.dx, probs, true)
    }

    /// Equal masses at ±1.
    pub fn rademacher(grid: &GridSpec<F>) -> Result<Self> {
        Self::symmetric_two_point(grid, F::one())
    }
}

fn nearest_cell<F: Real>(grid: &GridSpec<F>, x: F) -> usize {
    let u = (x - grid.x0) / grid.dx;
    let i = num_traits::ToPrimitive::to_isize(&u.round()).unwrap_or(0);
    i.clamp(0, grid.len as isize - 1) as usize
}

/// Adds `mass` at position `x` by splitting it across the two neighboring
/// cells, preserving the first moment exactly.
fn deposit<F: Real>(grid: &GridSpec<F>, probs: &mut [F], x: F, mass: F) -> Result<()> {
    let u = (x - grid.x0) / grid.dx;
    let j = u.floor();
    let frac = u - j;
    let j = num_traits::ToPrimitive::to_isize(&j)
        .ok_or_else(|| Error::InvalidInput("position outside grid".into()))?;
    let targets = [(j, F::one() - frac), (j + 1, frac)];
    for (idx, w) in targets {
        if w == F::zero() {
            continue;
        }
        if idx < 0 || idx as usize >= grid.len {
            return Err(Error::GridOverflow {
                lost: as_f64(mass * w),
            });
        }
        probs[idx as usize] += mass * w;
    }
    Ok(())
}

fn half_ln_2pie<F: Real>() -> F {
    (real::<F>(2.0) * F::PI()).ln() * real(0.5) + real(0.5)
}

/// Differential entropy of `Y = gain·X + Z`, `Z ~ N(0,1)`, by composite
/// Simpson quadrature of `−f log f` with panel width at most 0.01 over the
/// support widened by ±8 noise deviations.
pub fn output_entropy<F: Real>(p: &GridDistribution<F>, gain: F) -> Result<F> {
    if gain == F::zero() {
        return Err(Error::InvalidParameter("gain must be nonzero".into()));
    }
    if p.dx > real(0.25) {
        return Err(Error::Config(format!(
            "grid spacing {} too coarse for the fixed quadrature accuracy (max 0.25)",
            p.dx
        )));
    }
    let (lo_idx, hi_idx) = p.significant_support();
    let a = gain * p.point(lo_idx);
    let b = gain * p.point(hi_idx);
    let eight = real::<F>(8.0);
    let y_lo = a.min(b) - eight;
    let y_hi = a.max(b) + eight;

    let panel = real::<F>(0.01);
    let mut n_panels = num_traits::ToPrimitive::to_usize(&((y_hi - y_lo) / panel).ceil())
        .ok_or_else(|| Error::Numerical("quadrature range overflow".into()))?;
    if n_panels % 2 == 1 {
        n_panels += 1;
    }
    let h = (y_hi - y_lo) / real(n_panels as f64);

    let inv_sqrt_2pi = (real::<F>(2.0) * F::PI()).sqrt().recip();
    let cells: Vec<(F, F)> = (lo_idx..=hi_idx)
        .filter(|&i| p.probs[i] > F::zero())
        .map(|i| (gain * p.point(i), p.probs[i]))
        .collect();
    let cut = real::<F>(10.0);
    let half = real::<F>(0.5);

    let integrand = |y: F| -> F {
        let mut f = F::zero();
        for &(center, mass) in &cells {
            let u = y - center;
            if u.abs() <= cut {
                f += mass * (-(u * u) * half).exp();
            }
        }
        f *= inv_sqrt_2pi;
        if f > F::zero() {
            -f * f.ln()
        } else {
            F::zero()
        }
    };

    let mut sum = integrand(y_lo) + integrand(y_hi);
    let four = real::<F>(4.0);
    let two = real::<F>(2.0);
    for i in 1..n_panels {
        let y = y_lo + h * real(i as f64);
        let w = if i % 2 == 1 { four } else { two };
        sum += w * integrand(y);
    }
    let entropy = sum * h / real(3.0);

    let floor = half_ln_2pie::<F>() - real(1e-6);
    if entropy < floor {
        return Err(Error::Numerical(format!(
            "entropy {} fell below the Gaussian noise floor; quadrature setup is inconsistent",
            entropy
        )));
    }
    Ok(entropy)
}

/// Discrete counterpart of the weighted rate difference:
/// `[h(Y1) − ½log 2πe] − λ[h(Y2) − ½log 2πe]`.
pub fn s_lambda_discrete<F: Real>(
    p: &GridDistribution<F>,
    gains: (F, F),
    lambda: F,
) -> Result<F> {
    if !(lambda > F::one()) {
        return Err(Error::InvalidParameter("lambda must exceed 1".into()));
    }
    let noise = half_ln_2pie::<F>();
    let h1 = output_entropy(p, gains.0)?;
    let h2 = output_entropy(p, gains.1)?;
    Ok((h1 - noise) - lambda * (h2 - noise))
}

/// Mass outside the grid tolerated per doubling step before erroring.
fn overflow_tolerance<F: Real>() -> F {
    real(1e-6)
}

/// One sum/difference doubling step: the exact self-convolution of `p`,
/// support scaled by `1/√2`, rebinned onto the original lattice by
/// mass-conserving two-neighbor splits.
pub fn doubling_step<F: Real>(p: &GridDistribution<F>) -> Result<GridDistribution<F>> {
    let mut base = p.clone();
    let mu = base.mean();
    if p.zero_mean {
        base.x0 -= mu;
    } else if mu.abs() > real::<F>(1e-9) * (F::one() + base.variance().sqrt()) {
        return Err(Error::InvalidInput(
            "doubling needs a zero-mean law; set the zero-mean flag to recenter".into(),
        ));
    }
    let n = base.probs.len();
    let (lo, hi) = base.significant_support();

    // exact lattice self-convolution
    let conv_len = 2 * (hi - lo) + 1;
    let mut conv = vec![F::zero(); conv_len];
    for i in lo..=hi {
        let pi = base.probs[i];
        if pi == F::zero() {
            continue;
        }
        for j in lo..=hi {
            let pj = base.probs[j];
            if pj > F::zero() {
                conv[i + j - 2 * lo] += pi * pj;
            }
        }
    }

    // Scale positions by 1/√2 and rebin. Plain two-neighbor splitting of the
    // scaled comb aliases on the incommensurate √2 lattice, so each scaled
    // atom is first widened into a triangular bump one scaled spacing wide;
    // the bump is cut into lattice-aligned pieces and every piece is
    // two-neighbor split at its exact centroid. Mass and mean are conserved
    // exactly (up to edge truncation), variance to O(dx²).
    let inv_sqrt2 = real::<F>(0.5).sqrt();
    let h_src = base.dx * inv_sqrt2;
    let two_x0 = base.x0 + base.x0;
    let mut out = vec![F::zero(); n];
    let mut lost = F::zero();
    for (k, &mass) in conv.iter().enumerate() {
        if mass == F::zero() {
            continue;
        }
        let center = (two_x0 + real::<F>((k + 2 * lo) as f64) * base.dx) * inv_sqrt2;
        deposit_bump(center, h_src, mass, base.x0, base.dx, &mut out, &mut lost);
    }
    if lost > overflow_tolerance() {
        return Err(Error::GridOverflow { lost: as_f64(lost) });
    }
    let kept: F = out.iter().copied().sum();
    for v in &mut out {
        *v /= kept;
    }
    GridDistribution::new(base.x0, base.dx, out, p.zero_mean)
}

/// Splits `mass` at position `y` between the two nearest lattice points.
fn split_point<F: Real>(y: F, mass: F, x0: F, dx: F, out: &mut [F], lost: &mut F) {
    let u = (y - x0) / dx;
    let jf = u.floor();
    let frac = u - jf;
    let j = num_traits::ToPrimitive::to_isize(&jf).unwrap_or(-1);
    for (idx, w) in [(j, F::one() - frac), (j + 1, frac)] {
        if w == F::zero() {
            continue;
        }
        if idx >= 0 && (idx as usize) < out.len() {
            out[idx as usize] += mass * w;
        } else {
            *lost += mass * w;
        }
    }
}

/// Deposits a triangular bump of total `mass`, center `c`, half-width `h`
/// onto the lattice: the bump is partitioned at lattice points and at its
/// own apex, and each piece lands as a point mass at its centroid via
/// [`split_point`]. First moments are exact piece by piece.
fn deposit_bump<F: Real>(c: F, h: F, mass: F, x0: F, dx: F, out: &mut [F], lost: &mut F) {
    let lo = c - h;
    let hi = c + h;
    let mut cuts: Vec<F> = Vec::with_capacity(6);
    cuts.push(lo);
    let first = ((lo - x0) / dx).ceil();
    let mut j = first;
    loop {
        let x = x0 + j * dx;
        if x >= hi {
            break;
        }
        if x > lo {
            cuts.push(x);
        }
        j += F::one();
    }
    if c > lo && c < hi {
        cuts.push(c);
    }
    cuts.push(hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cut positions"));

    let third = F::one() / real::<F>(3.0);
    let two = real::<F>(2.0);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        // linear density on one flank: f(y) = mass/h² · (h − |y − c|)
        let (ua, ub) = if b <= c {
            (a - lo, b - lo) // rising flank, f ∝ (y − lo)
        } else {
            (hi - b, hi - a) // falling flank mirrored
        };
        let m_piece = mass * (ub * ub - ua * ua) / (two * h * h);
        if m_piece <= F::zero() {
            continue;
        }
        let centroid_u = two * third * (ub * ub * ub - ua * ua * ua) / (ub * ub - ua * ua);
        let centroid = if b <= c { lo + centroid_u } else { hi - centroid_u };
        split_point(centroid, m_piece, x0, dx, out, lost);
    }
}

/// Fraction of a unit triangular bump centered at `c` with half-width `h`
/// that falls inside `[a, b]`.
fn triangle_cell_fraction<F: Real>(c: F, h: F, a: F, b: F) -> F {
    let u1 = ((a - c) / h).max(-F::one());
    let u2 = ((b - c) / h).min(F::one());
    if u2 <= u1 {
        return F::zero();
    }
    let half = real::<F>(0.5);
    let cdf = |u: F| -> F {
        if u <= F::zero() {
            let t = F::one() + u;
            t * t * half
        } else {
            let t = F::one() - u;
            F::one() - t * t * half
        }
    };
    cdf(u2) - cdf(u1)
}

/// One row of the doubling experiment log.
#[derive(Debug, Clone, Copy)]
pub struct DoublingIterate<F> {
    pub iteration: usize,
    pub s_lambda: F,
    pub tv_to_gaussian: F,
    pub variance: F,
}

/// Trajectory of the doubling experiment.
#[derive(Debug, Clone)]
pub struct LabReport<F> {
    pub iterates: Vec<DoublingIterate<F>>,
    /// Total-variation distance of the final iterate to the matched Gaussian.
    pub final_gap: F,
}

/// Iterates [`doubling_step`] and records, per iterate, the discrete
/// weighted rate difference, the total-variation distance to the
/// same-variance discretized Gaussian, and the variance.
pub fn doubling_experiment<F: Real>(
    p0: &GridDistribution<F>,
    gains: (F, F),
    lambda: F,
    n_steps: usize,
) -> Result<LabReport<F>> {
    let mut current = p0.clone();
    let mut iterates = Vec::with_capacity(n_steps + 1);
    for step in 0..=n_steps {
        if step > 0 {
            current = doubling_step(&current)?;
        }
        let variance = current.variance();
        let reference = GridDistribution::gaussian(&current.grid(), variance)?;
        let tv = current.tv_distance(&reference)?;
        let s = s_lambda_discrete(&current, gains, lambda)?;
        iterates.push(DoublingIterate {
            iteration: step,
            s_lambda: s,
            tv_to_gaussian: tv,
            variance,
        });
    }
    let final_gap = iterates.last().expect("at least the start").tv_to_gaussian;
    Ok(LabReport { iterates, final_gap })
}

/// Mutual information (nats) between the normalized sum `(X1+X2)/√2` and
/// difference `(X1−X2)/√2` for iid `X1, X2 ~ p`, from the exact atom pmf
/// deposited onto a lattice of the original spacing. Zero exactly for a
/// point mass; near zero only for Gaussian-shaped laws.
pub fn sum_diff_mi<F: Real>(p: &GridDistribution<F>) -> F {
    let support: Vec<(usize, F)> = p
        .probs
        .iter()
        .enumerate()
        .filter(|(_, &pr)| pr > F::zero())
        .map(|(i, &pr)| (i, pr))
        .collect();
    if support.len() <= 1 {
        return F::zero();
    }
    let inv_sqrt2 = real::<F>(0.5).sqrt();
    let h = p.dx * inv_sqrt2;
    let half = real::<F>(0.5);

    // lattice covering both normalized coordinates, original spacing
    let lo_x = p.point(support.first().unwrap().0);
    let hi_x = p.point(support.last().unwrap().0);
    let reach = (hi_x - lo_x) * inv_sqrt2 + hi_x.abs().max(lo_x.abs());
    let origin = -(reach + p.dx + p.dx);
    let side = match num_traits::ToPrimitive::to_usize(&((reach + p.dx) / p.dx * real(2.0) + real(4.0)).ceil()) {
        Some(s) => s,
        None => return F::zero(),
    };

    // per-coordinate triangle weights of one atom position
    let weights_of = |pos: F| -> (isize, Vec<F>) {
        let j_lo = ((pos - h - origin) / p.dx + half).floor();
        let j_hi = ((pos + h - origin) / p.dx + half).floor();
        let j_lo = num_traits::ToPrimitive::to_isize(&j_lo).unwrap_or(0);
        let j_hi = num_traits::ToPrimitive::to_isize(&j_hi).unwrap_or(0);
        let mut w = Vec::with_capacity((j_hi - j_lo + 1).max(1) as usize);
        for j in j_lo..=j_hi {
            let x_j = origin + real::<F>(j as f64) * p.dx;
            w.push(triangle_cell_fraction(pos, h, x_j - p.dx * half, x_j + p.dx * half));
        }
        (j_lo, w)
    };

    let mut joint = vec![F::zero(); side * side];
    for &(i, pi) in &support {
        let xi = p.point(i);
        for &(j, pj) in &support {
            let xj = p.point(j);
            let mass = pi * pj;
            let (s_lo, ws) = weights_of((xi + xj) * inv_sqrt2);
            let (d_lo, wd) = weights_of((xi - xj) * inv_sqrt2);
            for (a, &wa) in ws.iter().enumerate() {
                if wa == F::zero() {
                    continue;
                }
                let si = s_lo + a as isize;
                if si < 0 || si as usize >= side {
                    continue;
                }
                for (b, &wb) in wd.iter().enumerate() {
                    if wb == F::zero() {
                        continue;
                    }
                    let di = d_lo + b as isize;
                    if di < 0 || di as usize >= side {
                        continue;
                    }
                    joint[si as usize * side + di as usize] += mass * wa * wb;
                }
            }
        }
    }

    let mut p_sum = vec![F::zero(); side];
    let mut p_diff = vec![F::zero(); side];
    for s in 0..side {
        for d in 0..side {
            let v = joint[s * side + d];
            if v > F::zero() {
                p_sum[s] += v;
                p_diff[d] += v;
            }
        }
    }
    let mut mi = F::zero();
    for s in 0..side {
        if p_sum[s] == F::zero() {
            continue;
        }
        for d in 0..side {
            let v = joint[s * side + d];
            if v > F::zero() {
                mi += v * (v / (p_sum[s] * p_diff[d])).ln();
            }
        }
    }
    mi.max(F::zero())
}

/// Shape family for mixture components in the envelope search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ComponentShape {
    Gaussian,
    Uniform,
    TwoPoint,
    ThreePoint,
}

impl ComponentShape {
    fn from_index(i: u64) -> Self {
        match i % 4 {
            0 => Self::Gaussian,
            1 => Self::Uniform,
            2 => Self::TwoPoint,
            _ => Self::ThreePoint,
        }
    }

    fn build<F: Real>(self, grid: &GridSpec<F>, variance: F) -> Result<GridDistribution<F>> {
        match self {
            Self::Gaussian => GridDistribution::gaussian(grid, variance),
            Self::Uniform => GridDistribution::uniform(grid, variance),
            Self::TwoPoint => GridDistribution::symmetric_two_point(grid, variance.sqrt()),
            Self::ThreePoint => GridDistribution::skewed_three_point(grid, variance),
        }
    }
}

/// Weighted mixture component returned by the envelope search.
#[derive(Debug, Clone)]
pub struct MixtureComponent<F> {
    pub weight: F,
    pub dist: GridDistribution<F>,
}

#[derive(Debug, Clone)]
pub struct EnvelopeSearch<F> {
    pub value: F,
    pub mixture: Vec<MixtureComponent<F>>,
}

fn golden_max<F: Real>(
    lo: F,
    hi: F,
    iters: usize,
    f: &mut dyn FnMut(F) -> Result<F>,
) -> Result<(F, F)> {
    let mut best_x = lo;
    let mut best_v = f(lo)?;
    let v_hi = f(hi)?;
    if v_hi > best_v {
        best_x = hi;
        best_v = v_hi;
    }
    if hi - lo <= F::epsilon() {
        return Ok((best_x, best_v));
    }
    let phi = (real::<F>(5.0).sqrt() - F::one()) * real(0.5);
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..iters {
        let (x, v) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
        if v > best_v {
            best_x = x;
            best_v = v;
        }
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok((best_x, best_v))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random-restart coordinate ascent over mixtures of at most `m` grid laws
/// with mixture-average variance at most `k_var`, maximizing the weighted
/// sum of per-component `s_λ` values. The search is a heuristic: its job is
/// to confirm that mixtures never beat the single Gaussian optimum, not to
/// certify an envelope.
pub fn envelope_discrete<F: Real>(
    gains: (F, F),
    k_var: F,
    lambda: F,
    m: usize,
    cfg: &OptConfig<F>,
    grid: &GridSpec<F>,
) -> Result<EnvelopeSearch<F>> {
    if m == 0 {
        return Err(Error::InvalidParameter("mixture size must be at least 1".into()));
    }
    if k_var < F::zero() {
        return Err(Error::InvalidParameter("variance bound must be nonnegative".into()));
    }
    if k_var == F::zero() {
        return Ok(EnvelopeSearch {
            value: F::zero(),
            mixture: vec![MixtureComponent {
                weight: F::one(),
                dist: GridDistribution::point_mass(grid),
            }],
        });
    }

    let golden_iters = 24;
    let passes = 8;
    let tiny_var = real::<F>(1e-8);

    let component_value = |shape: ComponentShape, v: F| -> Result<F> {
        if v <= tiny_var {
            return Ok(F::zero()); // point mass: both entropies hit the noise floor
        }
        let dist = shape.build(grid, v)?;
        s_lambda_discrete(&dist, gains, lambda)
    };

    let mut best: Option<(F, Vec<ComponentShape>, Vec<F>, Vec<F>)> = None;

    for restart in 0..cfg.restarts {
        let mut rng =
            ChaCha8Rng::seed_from_u64(splitmix64(cfg.seed) ^ splitmix64(restart as u64 + 1));
        fn unit<F: Real>(rng: &mut ChaCha8Rng) -> F {
            real((rng.next_u64() >> 11) as f64 / 9007199254740992.0)
        }

        // restart 0 is the deterministic all-Gaussian seed at the full budget
        let mut shapes: Vec<ComponentShape> = Vec::with_capacity(m);
        let mut vars: Vec<F> = Vec::with_capacity(m);
        let mut weights: Vec<F> = Vec::with_capacity(m);
        if restart == 0 {
            for _ in 0..m {
                shapes.push(ComponentShape::Gaussian);
                vars.push(k_var);
                weights.push(F::one() / real(m as f64));
            }
        } else {
            for i in 0..m {
                shapes.push(ComponentShape::from_index(
                    (rng.next_u64() >> 7).wrapping_add(i as u64),
                ));
                vars.push(k_var * (real::<F>(0.1) + real::<F>(0.9) * unit::<F>(&mut rng)));
                weights.push(real::<F>(0.2) + unit::<F>(&mut rng));
            }
            let wsum: F = weights.iter().copied().sum();
            for w in &mut weights {
                *w /= wsum;
            }
        }
        // shrink into the budget
        let spent: F = weights.iter().zip(&vars).map(|(&w, &v)| w * v).sum();
        if spent > k_var {
            let shrink = k_var / spent * (F::one() - real(1e-12));
            for v in &mut vars {
                *v *= shrink;
            }
        }

        let mut values: Vec<F> = Vec::with_capacity(m);
        for i in 0..m {
            values.push(component_value(shapes[i], vars[i])?);
        }
        let total = |weights: &[F], values: &[F]| -> F {
            weights.iter().zip(values).map(|(&w, &v)| w * v).sum()
        };
        let mut current = total(&weights, &values);

        for _ in 0..passes {
            let before = current;

            // variance coordinates
            for i in 0..m {
                if weights[i] <= real(1e-12) {
                    continue;
                }
                let others: F = (0..m)
                    .filter(|&j| j != i)
                    .map(|j| weights[j] * vars[j])
                    .sum();
                let hi = ((k_var - others) / weights[i]).max(F::zero());
                let shape = shapes[i];
                let mut eval = |v: F| component_value(shape, v);
                let (v_best, s_best) = golden_max(F::zero(), hi, golden_iters, &mut eval)?;
                if s_best > values[i] {
                    vars[i] = v_best;
                    values[i] = s_best;
                    current = total(&weights, &values);
                }
            }

            // weight transfers between component pairs; objective is linear
            // in the transfer, but the budget caps its range
            for i in 0..m {
                for j in (i + 1)..m {
                    let (vi, vj) = (vars[i], vars[j]);
                    let slack = k_var
                        - (0..m).map(|t| weights[t] * vars[t]).sum::<F>();
                    // delta moves weight from j to i
                    let mut lo = -weights[i];
                    let mut hi = weights[j];
                    let dv = vi - vj;
                    if dv > F::zero() {
                        hi = hi.min(slack / dv);
                    } else if dv < F::zero() {
                        lo = lo.max(slack / dv);
                    }
                    if hi <= lo {
                        continue;
                    }
                    let gain = values[i] - values[j];
                    let delta = if gain > F::zero() { hi } else { lo };
                    let cand = current + delta * gain;
                    if cand > current {
                        weights[i] += delta;
                        weights[j] -= delta;
                        current = cand;
                    }
                }
            }

            if current - before <= real(1e-9) {
                break;
            }
        }

        if best.as_ref().is_none_or(|(bv, ..)| current > *bv) {
            best = Some((current, shapes, vars, weights));
        }
    }

    let (value, shapes, vars, weights) = best.expect("at least one restart");
    let mut mixture = Vec::with_capacity(m);
    for i in 0..m {
        let dist = if vars[i] <= tiny_var {
            GridDistribution::point_mass(grid)
        } else {
            shapes[i].build(grid, vars[i])?
        };
        mixture.push(MixtureComponent {
            weight: weights[i],
            dist,
        });
    }
    Ok(EnvelopeSearch { value, mixture })
}
