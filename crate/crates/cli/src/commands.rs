//! Implementations of the CLI subcommands: evaluation, region tracing,
//! verification sweeps, and the scalar laboratory.

use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use gbc_core::lab::{
    doubling_experiment, envelope_discrete, sum_diff_mi, GridDistribution, GridSpec,
};
use gbc_core::linalg::PsdMat;
use gbc_core::opt::{
    minimax_alpha, minimax_alpha_grid, two_letter_check, v_lambda, OptConfig,
};
use gbc_core::rates::{
    c_lambda_bound, dpc_identity_check, dpc_matrix, gauss_mi, product_mi_identity,
    rotation_check, s_lambda_gauss, t_lambda_gauss, LambdaWeights,
};
use gbc_core::region::{
    common_point, hyperplane_self_check, sum_rate_point, trace, PointKind, TraceConfig,
};
use gbc_core::sampling;
use gbc_core::{PsdMatrix, RatePoint};

use crate::output::{num, Manifest, OutputFiles, Unit};
use crate::spec::{self, hex, SpecError};

pub enum CliError {
    Usage(String),
    Spec(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Spec(_) => 2,
            CliError::Internal(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Spec(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        CliError::Spec(e.to_string())
    }
}

impl From<gbc_core::Error> for CliError {
    fn from(e: gbc_core::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("i/o failure: {e}"))
    }
}

/// `Ok(true)` means results were produced but carry non-convergence flags
/// (exit code 3).
pub type CmdResult = Result<bool, CliError>;

pub fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad {what} entry: {s:?}")))
        })
        .collect()
}

fn parse_triple(text: &str) -> Result<(f64, f64, f64), CliError> {
    let v = parse_list(text, "weight")?;
    if v.len() != 3 {
        return Err(CliError::Usage(format!(
            "weights must be three comma-separated numbers, got {text:?}"
        )));
    }
    Ok((v[0], v[1], v[2]))
}

fn params_hash(value: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(value).expect("params serialize");
    hex(&Sha256::digest(canonical.as_bytes()))
}

fn unit_of(bits: bool) -> Unit {
    if bits {
        Unit::Bits
    } else {
        Unit::Nats
    }
}

// ---------------------------------------------------------------- rates ---

#[allow(clippy::too_many_arguments)]
pub fn rates(
    spec_path: &Path,
    lambda: Option<f64>,
    weights: Option<&str>,
    kprime: Option<&PathBuf>,
    k1: Option<&PathBuf>,
    k2: Option<&PathBuf>,
    bits: bool,
    out: &str,
    plot: bool,
) -> CmdResult {
    let spec = spec::load(spec_path)?;
    let unit = unit_of(bits);
    let ch = &spec.channel;

    let mut rows = Vec::new();
    let mi1 = gauss_mi(ch.g1(), &spec.k)?;
    let mi2 = gauss_mi(ch.g2(), &spec.k)?;
    rows.push(format!("mi_y1,{}", num(unit.rate(mi1))));
    rows.push(format!("mi_y2,{}", num(unit.rate(mi2))));

    let mut summary = serde_json::Map::new();
    summary.insert("mi_y1".into(), json!(unit.rate(mi1)));
    summary.insert("mi_y2".into(), json!(unit.rate(mi2)));

    if let Some(l) = lambda {
        let kp = match kprime {
            Some(path) => spec::load_psd(path, spec.t, "kprime")?,
            None => spec.k.clone(),
        };
        let s = s_lambda_gauss(ch, &kp, l)?;
        rows.push(format!("s_lambda,{}", num(unit.rate(s))));
        summary.insert("s_lambda".into(), json!(unit.rate(s)));
        summary.insert("lambda".into(), json!(l));
    }

    if let Some(w_text) = weights {
        let v = parse_list(w_text, "weights")?;
        if v.len() != 4 {
            return Err(CliError::Usage(
                "rates --weights takes l0,l1,l2,alpha".into(),
            ));
        }
        let w = LambdaWeights::new(v[0], v[1], v[2], v[3])?;
        let half_k = PsdMat::new(spec.k.sym().scale(0.5))?;
        let k1m = match k1 {
            Some(path) => spec::load_psd(path, spec.t, "k1")?,
            None => half_k.clone(),
        };
        let k2m = match k2 {
            Some(path) => spec::load_psd(path, spec.t, "k2")?,
            None => half_k,
        };
        let t_val = t_lambda_gauss(ch, &k1m, &k2m, &w)?;
        rows.push(format!("t_lambda,{}", num(unit.rate(t_val))));
        summary.insert("t_lambda".into(), json!(unit.rate(t_val)));
    }

    let files = OutputFiles::new(out);
    files.write_csv("quantity,value", &rows)?;
    let manifest = Manifest::new("rates", &spec.hash, 0, unit);
    files.write_json(&manifest, serde_json::Value::Object(summary))?;
    if plot {
        files.write_plot("quantity", "value", "0:2:xtic(1)", "rates")?;
    }
    Ok(false)
}

// --------------------------------------------------------------- regions ---

fn point_csv_private(lambda: f64, point: &Result<RatePoint, gbc_core::Error>, unit: Unit) -> String {
    match point {
        Ok(p) => format!(
            "{},{},{},{},{}",
            num(lambda),
            num(unit.rate(p.r1)),
            num(unit.rate(p.r2)),
            num(unit.rate(p.value)),
            p.converged
        ),
        Err(_) => format!("{},NaN,NaN,NaN,false", num(lambda)),
    }
}

pub fn region_private(
    spec_path: &Path,
    lambdas: &str,
    seed: u64,
    bits: bool,
    out: &str,
    plot: bool,
    threads: usize,
) -> CmdResult {
    let spec = spec::load(spec_path)?;
    let unit = unit_of(bits);
    let all = parse_list(lambdas, "lambda")?;
    if all.is_empty() || all.iter().any(|&l| !l.is_finite() || l <= 0.0) {
        return Err(CliError::Usage("lambdas must be positive reals".into()));
    }
    let cfg = OptConfig::with_seed(seed);

    let direct: Vec<f64> = all.iter().copied().filter(|&l| l > 1.0).collect();
    let swapped: Vec<f64> = all
        .iter()
        .copied()
        .filter(|&l| l < 1.0)
        .map(|l| 1.0 / l)
        .collect();
    let unit_weight = all.contains(&1.0);

    let output_unit = if bits {
        gbc_core::region::RateUnit::Bits
    } else {
        gbc_core::region::RateUnit::Nats
    };
    let mut entries: Vec<(f64, Result<RatePoint, gbc_core::Error>)> = Vec::new();
    if !direct.is_empty() {
        let tc = TraceConfig {
            threads,
            output_unit,
            ..TraceConfig::new(direct, cfg)
        };
        for e in trace(&spec.channel, &spec.k, &tc)? {
            entries.push((e.lambda, e.outcome));
        }
    }
    if !swapped.is_empty() {
        let tc = TraceConfig {
            swap_roles: true,
            threads,
            output_unit,
            ..TraceConfig::new(swapped, cfg)
        };
        for e in trace(&spec.channel, &spec.k, &tc)? {
            entries.push((e.lambda, e.outcome));
        }
    }
    if unit_weight {
        entries.push((1.0, sum_rate_point(&spec.channel, &spec.k, &cfg)));
    }
    entries.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite lambdas"));

    let rows: Vec<String> = entries
        .iter()
        .map(|(l, p)| point_csv_private(*l, p, unit))
        .collect();

    let good: Vec<RatePoint> = entries
        .iter()
        .filter_map(|(_, p)| p.as_ref().ok().cloned())
        .collect();
    let violations = hyperplane_self_check(&good);
    let failures: Vec<String> = entries
        .iter()
        .filter_map(|(l, p)| p.as_ref().err().map(|e| format!("lambda {l}: {e}")))
        .collect();
    let flagged = !failures.is_empty() || good.iter().any(|p| !p.converged);

    let files = OutputFiles::new(out);
    files.write_csv("lambda,R1,R2,value,converged", &rows)?;
    let manifest = Manifest::new("region-private", &spec.hash, seed, unit);
    files.write_json(
        &manifest,
        json!({
            "points": entries.len(),
            "failures": failures,
            "hyperplane_violations": violations.len(),
            "flagged": flagged,
        }),
    )?;
    if plot {
        files.write_plot("R1", "R2", "2:3", "private region boundary")?;
    }
    Ok(flagged)
}

pub fn region_common(
    spec_path: &Path,
    weights: &[String],
    seed: u64,
    bits: bool,
    out: &str,
    plot: bool,
) -> CmdResult {
    let spec = spec::load(spec_path)?;
    let unit = unit_of(bits);
    let cfg = OptConfig::with_seed(seed);
    if weights.is_empty() {
        return Err(CliError::Usage("at least one --weights l0,l1,l2 required".into()));
    }

    let mut rows = Vec::new();
    let mut max_sum_residual = 0.0f64;
    let mut flagged = false;
    for w_text in weights {
        let (l0, l1, l2) = parse_triple(w_text)?;
        let p = common_point(&spec.channel, &spec.k, l0, l1, l2, &cfg)?;
        let (alpha_star, outer) = match &p.kind {
            PointKind::Common { weights, outer_value, .. } => (weights.alpha, *outer_value),
            PointKind::Private { .. } => unreachable!("common tracer emitted a private point"),
        };
        max_sum_residual = max_sum_residual.max((p.value - outer).abs());
        flagged |= !p.converged;
        rows.push(format!(
            "{},{},{},{},{},{},{},{},{}",
            num(l0),
            num(l1),
            num(l2),
            num(alpha_star),
            num(unit.rate(p.r0)),
            num(unit.rate(p.r1)),
            num(unit.rate(p.r2)),
            num(unit.rate(p.value)),
            p.converged
        ));
    }

    let files = OutputFiles::new(out);
    files.write_csv("l0,l1,l2,alpha_star,R0,R1,R2,value,converged", &rows)?;
    let manifest = Manifest::new("region-common", &spec.hash, seed, unit);
    files.write_json(
        &manifest,
        json!({
            "points": rows.len(),
            "max_weighted_sum_residual": max_sum_residual,
            "flagged": flagged,
        }),
    )?;
    if plot {
        files.write_plot("R1", "R2", "6:7", "common region boundary")?;
    }
    Ok(flagged)
}

// ---------------------------------------------------------------- verify ---

pub fn verify_dpc(spec_path: &Path, trials: usize, seed: u64, out: &str) -> CmdResult {
    let spec = spec::load(spec_path)?;
    let mut rng = sampling::rng(seed);
    let mut rows = Vec::new();
    let mut max_residual = 0.0f64;
    for trial in 0..trials {
        let t = 1 + (trial % 4);
        let g = sampling::invertible::<f64>(&mut rng, t, 1.0);
        let kp = sampling::pd::<f64>(&mut rng, t, 1.0);
        let kv = sampling::pd::<f64>(&mut rng, t, 1.0);
        let d = dpc_matrix(&g, &kp, &kv)?;
        let (lhs, rhs) = dpc_identity_check(&g, &d)?;
        let residual = (lhs - rhs).abs();
        max_residual = max_residual.max(residual);
        rows.push(format!(
            "{trial},{t},{},{},{}",
            num(lhs),
            num(rhs),
            num(residual)
        ));
    }
    let files = OutputFiles::new(out);
    files.write_csv("trial,t,lhs,rhs,residual", &rows)?;
    let manifest = Manifest::new("verify-dpc", &spec.hash, seed, Unit::Nats);
    files.write_json(
        &manifest,
        json!({ "trials": trials, "max_residual": max_residual }),
    )?;
    println!("verify dpc: {trials} trials, max residual {max_residual:e}");
    Ok(false)
}

pub fn verify_rotation(spec_path: &Path, trials: usize, seed: u64, out: &str) -> CmdResult {
    let spec = spec::load(spec_path)?;
    let mut rng = sampling::rng(seed);
    let mut rows = Vec::new();
    let mut max_residual = 0.0f64;
    for trial in 0..trials {
        let t = 1 + (trial % 4);
        let g = sampling::invertible::<f64>(&mut rng, t, 1.0);
        let joint = sampling::joint_with_cross::<f64>(&mut rng, t, 0.8)?;
        let (orig, rot) = rotation_check(&g, &joint)?;
        let residual = (orig - rot).abs();
        max_residual = max_residual.max(residual);
        rows.push(format!(
            "{trial},{t},{},{},{}",
            num(orig),
            num(rot),
            num(residual)
        ));
    }
    let files = OutputFiles::new(out);
    files.write_csv("trial,t,original,rotated,residual", &rows)?;
    let manifest = Manifest::new("verify-rotation", &spec.hash, seed, Unit::Nats);
    files.write_json(
        &manifest,
        json!({ "trials": trials, "max_residual": max_residual }),
    )?;
    println!("verify rotation: {trials} trials, max residual {max_residual:e}");
    Ok(false)
}

pub fn verify_product_mi(spec_path: &Path, trials: usize, seed: u64, out: &str) -> CmdResult {
    let spec = spec::load(spec_path)?;
    let mut rng = sampling::rng(seed);
    let mut rows = Vec::new();
    let mut max_residual = 0.0f64;
    let mut equality_ok = true;
    for trial in 0..trials {
        let t = 1 + (trial % 4);
        let g = sampling::invertible::<f64>(&mut rng, t, 1.0);
        let correlated = trial % 2 == 1;
        let joint = if correlated {
            sampling::joint_with_cross::<f64>(&mut rng, t, 0.4)?
        } else {
            sampling::joint_block_diag::<f64>(&mut rng, t)
        };
        let cross_norm = joint.mat().block(0, t, t, t).frob_norm();
        let r = product_mi_identity(&g, &joint)?;
        let residual = (r.joint - (r.sum_marginals - r.cross)).abs();
        max_residual = max_residual.max(residual);
        if cross_norm <= 1e-12 {
            equality_ok &= (r.joint - r.sum_marginals).abs() <= 1e-10;
        } else if cross_norm > 1e-6 {
            equality_ok &= r.joint < r.sum_marginals;
        }
        rows.push(format!(
            "{trial},{t},{},{},{},{},{}",
            num(cross_norm),
            num(r.joint),
            num(r.sum_marginals),
            num(r.cross),
            num(residual)
        ));
    }
    let files = OutputFiles::new(out);
    files.write_csv(
        "trial,t,cross_norm,joint,sum_marginals,cross,residual",
        &rows,
    )?;
    let manifest = Manifest::new("verify-product-mi", &spec.hash, seed, Unit::Nats);
    files.write_json(
        &manifest,
        json!({
            "trials": trials,
            "max_residual": max_residual,
            "equality_iff_zero_cross": equality_ok,
        }),
    )?;
    println!(
        "verify product-mi: {trials} trials, max residual {max_residual:e}, equality check {equality_ok}"
    );
    Ok(false)
}

pub fn verify_bound(
    spec_path: &Path,
    trials: usize,
    opt_trials: usize,
    seed: u64,
    out: &str,
) -> CmdResult {
    let spec = spec::load(spec_path)?;
    let mut rng = sampling::rng(seed);
    let mut rows = Vec::new();
    let mut min_slack = f64::INFINITY;
    for trial in 0..trials {
        let t = 1 + (trial % 4);
        let ch = sampling::channel_pair::<f64>(&mut rng, t)?;
        let lambda = 1.0 + 9.0 * sampling::unit::<f64>(&mut rng).max(1e-3);
        let kp = sampling::psd::<f64>(&mut rng, t, 1.5);
        let s = s_lambda_gauss(&ch, &kp, lambda)?;
        let c = c_lambda_bound(&ch, lambda)?.c_lambda;
        let slack = c - s;
        min_slack = min_slack.min(slack);
        rows.push(format!(
            "{trial},point,{t},{},{},{},{}",
            num(lambda),
            num(s),
            num(c),
            num(slack)
        ));
    }
    let cfg = OptConfig {
        restarts: 4,
        ..OptConfig::with_seed(seed)
    };
    let mut flagged = false;
    for trial in 0..opt_trials {
        let t = 1 + (trial % 4);
        let ch = sampling::channel_pair::<f64>(&mut rng, t)?;
        let lambda = 1.2 + 4.0 * sampling::unit::<f64>(&mut rng);
        let k = sampling::psd::<f64>(&mut rng, t, 1.0);
        let r = v_lambda(&ch, &k, lambda, &cfg)?;
        flagged |= !r.converged;
        let c = c_lambda_bound(&ch, lambda)?.c_lambda;
        let slack = c - r.value;
        min_slack = min_slack.min(slack);
        rows.push(format!(
            "{},optimum,{t},{},{},{},{}",
            trials + trial,
            num(lambda),
            num(r.value),
            num(c),
            num(slack)
        ));
    }
    let files = OutputFiles::new(out);
    files.write_csv("trial,kind,t,lambda,value,c_lambda,slack", &rows)?;
    let manifest = Manifest::new("verify-bound", &spec.hash, seed, Unit::Nats);
    files.write_json(
        &manifest,
        json!({
            "trials": trials,
            "optimizer_trials": opt_trials,
            "min_slack": min_slack,
            "flagged": flagged,
        }),
    )?;
    println!("verify bound: min slack {min_slack:e} (negative means violation)");
    Ok(flagged)
}

pub fn verify_two_letter(
    spec_path: &Path,
    lambdas: &str,
    seed: u64,
    out: &str,
) -> CmdResult {
    let spec = spec::load(spec_path)?;
    let cfg = OptConfig::with_seed(seed);
    let mut rows = Vec::new();
    let mut max_gap_ratio = 0.0f64;
    let mut max_cross = 0.0f64;
    let mut flagged = false;
    for lambda in parse_list(lambdas, "lambda")? {
        let r = two_letter_check(&spec.channel, &spec.k, lambda, &cfg)?;
        let gap = (r.two_letter_value - 2.0 * r.single_value).abs();
        let ratio = gap / (1.0 + r.single_value.abs());
        max_gap_ratio = max_gap_ratio.max(ratio);
        max_cross = max_cross.max(r.cross_norm);
        flagged |= !r.converged;
        rows.push(format!(
            "{},{},{},{},{},{}",
            num(lambda),
            num(r.two_letter_value),
            num(r.single_value),
            num(gap),
            num(r.cross_norm),
            r.converged
        ));
    }
    let files = OutputFiles::new(out);
    files.write_csv(
        "lambda,two_letter,single,gap,cross_norm,converged",
        &rows,
    )?;
    let manifest = Manifest::new("verify-two-letter", &spec.hash, seed, Unit::Nats);
    files.write_json(
        &manifest,
        json!({
            "max_gap_ratio": max_gap_ratio,
            "max_cross_norm": max_cross,
            "flagged": flagged,
        }),
    )?;
    println!(
        "verify two-letter: max gap ratio {max_gap_ratio:e}, max cross norm {max_cross:e}"
    );
    Ok(flagged)
}

pub fn verify_minimax(
    spec_path: &Path,
    weights: &[String],
    grid_step: f64,
    seed: u64,
    out: &str,
) -> CmdResult {
    let spec = spec::load(spec_path)?;
    let cfg = OptConfig::with_seed(seed);
    let mut rows = Vec::new();
    let mut max_alpha_diff = 0.0f64;
    let mut max_sum_residual = 0.0f64;
    let mut flagged = false;
    let triples = if weights.is_empty() {
        vec!["3,1,0.5".to_string()]
    } else {
        weights.to_vec()
    };
    for w_text in &triples {
        let (l0, l1, l2) = parse_triple(w_text)?;
        let mm = minimax_alpha(&spec.channel, &spec.k, l0, l1, l2, &cfg)?;
        let (alpha_grid, value_grid) =
            minimax_alpha_grid(&spec.channel, &spec.k, l0, l1, l2, &cfg, grid_step)?;
        let p = common_point(&spec.channel, &spec.k, l0, l1, l2, &cfg)?;
        let alpha_diff = (mm.alpha_star - alpha_grid).abs();
        let sum_residual = (p.value - mm.outer_value).abs();
        max_alpha_diff = max_alpha_diff.max(alpha_diff);
        max_sum_residual = max_sum_residual.max(sum_residual);
        flagged |= !mm.converged || !p.converged;
        rows.push(format!(
            "{},{},{},{},{},{},{},{},{},{}",
            num(l0),
            num(l1),
            num(l2),
            num(mm.alpha_star),
            num(alpha_grid),
            num(alpha_diff),
            num(mm.outer_value),
            num(value_grid),
            num(sum_residual),
            mm.converged
        ));
    }
    let files = OutputFiles::new(out);
    files.write_csv(
        "l0,l1,l2,alpha_golden,alpha_grid,alpha_diff,value_golden,value_grid,sum_residual,converged",
        &rows,
    )?;
    let manifest = Manifest::new("verify-minimax", &spec.hash, seed, Unit::Nats);
    files.write_json(
        &manifest,
        json!({
            "grid_step": grid_step,
            "max_alpha_diff": max_alpha_diff,
            "max_weighted_sum_residual": max_sum_residual,
            "flagged": flagged,
        }),
    )?;
    println!(
        "verify minimax: max alpha diff {max_alpha_diff:e}, max sum residual {max_sum_residual:e}"
    );
    Ok(flagged)
}

// ------------------------------------------------------------------- lab ---

fn lab_start(kind: &str, variance: f64, grid: &GridSpec<f64>) -> Result<GridDistribution<f64>, CliError> {
    match kind {
        "uniform" => Ok(GridDistribution::uniform(grid, variance)?),
        "gaussian" => Ok(GridDistribution::gaussian(grid, variance)?),
        "rademacher" => Ok(GridDistribution::rademacher(grid)?),
        other => Err(CliError::Usage(format!(
            "unknown start {other:?} (expected uniform|gaussian|rademacher)"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn lab_doubling(
    start: &str,
    steps: usize,
    lambda: f64,
    variance: f64,
    g1: f64,
    g2: f64,
    bits: bool,
    out: &str,
    plot: bool,
) -> CmdResult {
    let unit = unit_of(bits);
    let grid = GridSpec::default();
    let p0 = lab_start(start, variance, &grid)?;
    let report = doubling_experiment(&p0, (g1, g2), lambda, steps)?;

    // Gaussian-optimum ceiling for the trajectory summary
    let ch = gbc_core::rates::ChannelPair::scalar(g1, g2)?;
    let k = PsdMatrix::scalar(p0.variance())?;
    let bound = v_lambda(&ch, &k, lambda, &OptConfig::with_seed(0))?.value;
    let max_excess = report
        .iterates
        .iter()
        .map(|it| it.s_lambda - bound)
        .fold(f64::NEG_INFINITY, f64::max);

    let rows: Vec<String> = report
        .iterates
        .iter()
        .map(|it| {
            format!(
                "{},{},{},{}",
                it.iteration,
                num(unit.rate(it.s_lambda)),
                num(it.tv_to_gaussian),
                num(it.variance)
            )
        })
        .collect();
    let files = OutputFiles::new(out);
    files.write_csv("iter,s_lambda,tv,variance", &rows)?;
    let hash = params_hash(&json!({
        "start": start, "steps": steps, "lambda": lambda,
        "variance": variance, "g1": g1, "g2": g2,
    }));
    let manifest = Manifest::new("lab-doubling", &hash, 0, unit);
    files.write_json(
        &manifest,
        json!({
            "final_tv": report.final_gap,
            "gaussian_optimum": unit.rate(bound),
            "max_s_lambda_excess": max_excess,
        }),
    )?;
    if plot {
        files.write_plot("iteration", "tv to Gaussian", "1:3", "doubling convergence")?;
    }
    println!(
        "lab doubling: final tv {:e}, max excess over Gaussian optimum {:e}",
        report.final_gap, max_excess
    );
    Ok(false)
}

pub fn lab_independence(dists: &str, out: &str) -> CmdResult {
    let grid = GridSpec::default();
    let mut rows = Vec::new();
    let mut summary = serde_json::Map::new();
    for name in dists.split(',').map(str::trim) {
        let p = match name {
            "rademacher" => GridDistribution::rademacher(&grid)?,
            "gaussian" => GridDistribution::gaussian(&grid, 1.0)?,
            "uniform3" => GridDistribution::uniform_points(&grid, 3, 2)?,
            "point" => GridDistribution::point_mass(&grid),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown distribution {other:?} (expected rademacher|gaussian|uniform3|point)"
                )))
            }
        };
        let mi = sum_diff_mi(&p);
        rows.push(format!("{name},{}", num(mi)));
        summary.insert(name.to_string(), json!(mi));
    }
    let files = OutputFiles::new(out);
    files.write_csv("dist,mi", &rows)?;
    let hash = params_hash(&json!({ "dists": dists }));
    let manifest = Manifest::new("lab-independence", &hash, 0, Unit::Nats);
    files.write_json(&manifest, serde_json::Value::Object(summary))?;
    Ok(false)
}

#[allow(clippy::too_many_arguments)]
pub fn lab_envelope(
    m: usize,
    searches: usize,
    seed: u64,
    k_var: f64,
    lambda: f64,
    g1: f64,
    g2: f64,
    out: &str,
) -> CmdResult {
    let grid = GridSpec::default();
    let ch = gbc_core::rates::ChannelPair::scalar(g1, g2)?;
    let k = PsdMatrix::scalar(k_var)?;
    let optimum = v_lambda(&ch, &k, lambda, &OptConfig::with_seed(seed))?.value;

    let mut rows = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for search in 0..searches {
        // one deterministic all-Gaussian start plus one seeded random start
        let cfg = OptConfig {
            restarts: 2,
            ..OptConfig::with_seed(seed.wrapping_add(search as u64))
        };
        let r = envelope_discrete((g1, g2), k_var, lambda, m, &cfg, &grid)?;
        best = best.max(r.value);
        rows.push(format!("{search},{}", num(r.value)));
    }
    let files = OutputFiles::new(out);
    files.write_csv("search,value", &rows)?;
    let hash = params_hash(&json!({
        "m": m, "searches": searches, "k_var": k_var,
        "lambda": lambda, "g1": g1, "g2": g2,
    }));
    let manifest = Manifest::new("lab-envelope", &hash, seed, Unit::Nats);
    files.write_json(
        &manifest,
        json!({
            "best_value": best,
            "gaussian_optimum": optimum,
            "margin": best - optimum,
        }),
    )?;
    println!(
        "lab envelope: best mixture value {best:.6}, Gaussian optimum {optimum:.6}, margin {:e}",
        best - optimum
    );
    Ok(false)
}
