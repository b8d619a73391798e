//! `gbc`: capacity-region computations for two-receiver vector Gaussian
//! broadcast channels, with verification sweeps for the structural
//! identities behind them.
//!
//! Exit codes: 0 success, 1 usage, 2 spec validation, 3 numerical
//! non-convergence (outputs written, flagged rows present), 4 internal.

mod commands;
mod output;
mod spec;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::CmdResult;

#[derive(Parser)]
#[command(name = "gbc", version, about = "Gaussian broadcast channel capacity toolbox")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct SpecArg {
    /// Channel specification file (JSON: version, t, g1, g2, k)
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the Gaussian rate functionals at given covariances
    Rates {
        #[command(flatten)]
        spec: SpecArg,
        /// Weight for the rate difference I(X;Y1) − λ I(X;Y2)
        #[arg(long)]
        lambda: Option<f64>,
        /// Common-message weights l0,l1,l2,alpha (evaluates the combined objective)
        #[arg(long)]
        weights: Option<String>,
        /// Covariance for the rate difference (matrix JSON; defaults to k)
        #[arg(long)]
        kprime: Option<PathBuf>,
        /// First split covariance (matrix JSON; defaults to k/2)
        #[arg(long)]
        k1: Option<PathBuf>,
        /// Second split covariance (matrix JSON; defaults to k/2)
        #[arg(long)]
        k2: Option<PathBuf>,
        /// Report rates in bits instead of nats
        #[arg(long)]
        bits: bool,
        #[arg(long, default_value = "rates")]
        out: String,
        /// Emit a gnuplot script next to the CSV
        #[arg(long)]
        plot: bool,
    },
    /// Trace the private-message region boundary over a weight grid
    RegionPrivate {
        #[command(flatten)]
        spec: SpecArg,
        /// Comma-separated weights λ > 0 (λ < 1 swaps receiver roles, λ = 1 interpolates)
        #[arg(long)]
        lambdas: String,
        /// RNG seed for the multi-start optimizer
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        bits: bool,
        #[arg(long, default_value = "region_private")]
        out: String,
        #[arg(long)]
        plot: bool,
    },
    /// Trace the common-message region boundary for weight triples
    RegionCommon {
        #[command(flatten)]
        spec: SpecArg,
        /// Weight triple l0,l1,l2 with l0 > l1 + l2 (repeatable)
        #[arg(long, required = true)]
        weights: Vec<String>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        bits: bool,
        #[arg(long, default_value = "region_common")]
        out: String,
        #[arg(long)]
        plot: bool,
    },
    /// Run a verification sweep and report residuals
    Verify {
        #[command(subcommand)]
        check: VerifyCmd,
    },
    /// Scalar grid-distribution laboratory
    Lab {
        #[command(subcommand)]
        run: LabCmd,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Dirty-paper rate identity on random instances
    Dpc {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "verify_dpc")]
        out: String,
    },
    /// Sum/difference rotation invariance of two-letter mutual information
    Rotation {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "verify_rotation")]
        out: String,
    },
    /// Product-channel mutual-information factorization identity
    ProductMi {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "verify_product_mi")]
        out: String,
    },
    /// Uniform upper bound on the weighted rate difference
    Bound {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Additional trials comparing the optimizer value against the bound
        #[arg(long, default_value_t = 50)]
        opt_trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "verify_bound")]
        out: String,
    },
    /// Two-letter optimum against twice the single-letter optimum
    TwoLetter {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value = "2")]
        lambdas: String,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "verify_two_letter")]
        out: String,
    },
    /// Golden-section mixing weight against a dense grid
    Minimax {
        #[command(flatten)]
        spec: SpecArg,
        /// Weight triple l0,l1,l2 (repeatable; default 3,1,0.5)
        #[arg(long)]
        weights: Vec<String>,
        #[arg(long, default_value_t = 1e-4)]
        grid_step: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "verify_minimax")]
        out: String,
    },
}

#[derive(Subcommand)]
enum LabCmd {
    /// Iterate the sum/difference doubling map and track convergence
    Doubling {
        /// Starting law: uniform | gaussian | rademacher
        #[arg(long, default_value = "uniform")]
        start: String,
        #[arg(long, default_value_t = 8)]
        steps: usize,
        #[arg(long, default_value_t = 2.0)]
        lambda: f64,
        /// Variance of the starting law (ignored for rademacher)
        #[arg(long, default_value_t = 1.0)]
        variance: f64,
        #[arg(long, default_value_t = 1.0)]
        g1: f64,
        #[arg(long, default_value_t = 0.5)]
        g2: f64,
        #[arg(long)]
        bits: bool,
        #[arg(long, default_value = "lab_doubling")]
        out: String,
        #[arg(long)]
        plot: bool,
    },
    /// Mutual information between the normalized sum and difference
    Independence {
        /// Comma-separated: rademacher | gaussian | uniform3 | point
        #[arg(long, default_value = "rademacher,gaussian,uniform3,point")]
        dists: String,
        #[arg(long, default_value = "lab_independence")]
        out: String,
    },
    /// Mixture search against the single-Gaussian optimum
    Envelope {
        /// Mixture size
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Number of independently seeded searches
        #[arg(long, default_value_t = 50)]
        searches: usize,
        #[arg(long)]
        seed: u64,
        /// Mixture-average variance budget
        #[arg(long, default_value_t = 1.0)]
        kvar: f64,
        #[arg(long, default_value_t = 2.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        g1: f64,
        #[arg(long, default_value_t = 0.5)]
        g2: f64,
        #[arg(long, default_value = "lab_envelope")]
        out: String,
    },
}

fn worker_threads() -> usize {
    match std::env::var("GBC_THREADS") {
        Ok(v) => v.parse::<usize>().ok().filter(|&n| n >= 1).unwrap_or(1),
        Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    }
}

fn dispatch(cmd: Cmd) -> CmdResult {
    match cmd {
        Cmd::Rates {
            spec,
            lambda,
            weights,
            kprime,
            k1,
            k2,
            bits,
            out,
            plot,
        } => commands::rates(
            &spec.spec,
            lambda,
            weights.as_deref(),
            kprime.as_ref(),
            k1.as_ref(),
            k2.as_ref(),
            bits,
            &out,
            plot,
        ),
        Cmd::RegionPrivate {
            spec,
            lambdas,
            seed,
            bits,
            out,
            plot,
        } => commands::region_private(
            &spec.spec,
            &lambdas,
            seed,
            bits,
            &out,
            plot,
            worker_threads(),
        ),
        Cmd::RegionCommon {
            spec,
            weights,
            seed,
            bits,
            out,
            plot,
        } => commands::region_common(&spec.spec, &weights, seed, bits, &out, plot),
        Cmd::Verify { check } => match check {
            VerifyCmd::Dpc { spec, trials, seed, out } => {
                commands::verify_dpc(&spec.spec, trials, seed, &out)
            }
            VerifyCmd::Rotation { spec, trials, seed, out } => {
                commands::verify_rotation(&spec.spec, trials, seed, &out)
            }
            VerifyCmd::ProductMi { spec, trials, seed, out } => {
                commands::verify_product_mi(&spec.spec, trials, seed, &out)
            }
            VerifyCmd::Bound {
                spec,
                trials,
                opt_trials,
                seed,
                out,
            } => commands::verify_bound(&spec.spec, trials, opt_trials, seed, &out),
            VerifyCmd::TwoLetter { spec, lambdas, seed, out } => {
                commands::verify_two_letter(&spec.spec, &lambdas, seed, &out)
            }
            VerifyCmd::Minimax {
                spec,
                weights,
                grid_step,
                seed,
                out,
            } => commands::verify_minimax(&spec.spec, &weights, grid_step, seed, &out),
        },
        Cmd::Lab { run } => match run {
            LabCmd::Doubling {
                start,
                steps,
                lambda,
                variance,
                g1,
                g2,
                bits,
                out,
                plot,
            } => commands::lab_doubling(&start, steps, lambda, variance, g1, g2, bits, &out, plot),
            LabCmd::Independence { dists, out } => commands::lab_independence(&dists, &out),
            LabCmd::Envelope {
                m,
                searches,
                seed,
                kvar,
                lambda,
                g1,
                g2,
                out,
            } => commands::lab_envelope(m, searches, seed, kvar, lambda, g1, g2, &out),
        },
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    match dispatch(cli.command) {
        Ok(false) => std::process::exit(0),
        Ok(true) => {
            eprintln!("warning: some results are flagged as non-converged");
            std::process::exit(3);
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}
