//! srckey: BB84 simulation with a randomly tested source, finite-key
//! security bound evaluation, sampling-bound validation, and rate
//! optimisation.
//!
//! Exit codes: 0 success, 1 usage/parse errors, 2 precondition or
//! infeasibility failures. Every command is deterministic given the
//! configuration and seed. The seed resolves in the order: `--seed` flag,
//! `SRCKEY_SEED` environment variable, config file, built-in default.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use commands::{EXIT_USAGE, SCHEMA_VERSION};
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "srckey",
    version,
    about = "BB84 with a tested source: simulation and finite-key security bounds",
    after_help = "Configuration file: flat `key = value` lines under [run], [protocol], \
                  [bounds], [sampling] and [optimizer] sections; unknown keys are rejected. \
                  Command-line flags override the file; SRCKEY_SEED overrides the file's seed."
)]
struct Cli {
    /// Configuration file with run/protocol/bounds/sampling/optimizer sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for all randomised work (overrides file and SRCKEY_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker-thread cap; 0 means one thread per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the resolved configuration in canonical form and exit.
    #[arg(long = "print-config", global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct ParamOverrides {
    /// BB84 rounds n.
    #[arg(long)]
    n: Option<u64>,
    /// Source-test rounds m.
    #[arg(long)]
    m: Option<u64>,
    /// X-basis probability μ.
    #[arg(long)]
    mu: Option<f64>,
    /// Maximum tolerated QBER e.
    #[arg(long = "qber-tol")]
    qber_tol: Option<f64>,
    /// Source-test error threshold ε.
    #[arg(long = "source-tol")]
    source_tol: Option<f64>,
    /// Sampling slack δ.
    #[arg(long)]
    delta: Option<f64>,
    /// Smoothing budget ε′.
    #[arg(long = "eps-prime")]
    eps_prime: Option<f64>,
    /// Security target ε_sec for key extraction.
    #[arg(long = "eps-sec")]
    eps_sec: Option<f64>,
}

impl ParamOverrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(n) = self.n {
            cfg.protocol.n = n;
        }
        if let Some(m) = self.m {
            cfg.protocol.m = m;
        }
        if let Some(mu) = self.mu {
            cfg.protocol.mu = mu;
        }
        if let Some(e) = self.qber_tol {
            cfg.protocol.qber_tol = e;
        }
        if let Some(eps) = self.source_tol {
            cfg.protocol.source_tol = eps;
        }
        if let Some(d) = self.delta {
            cfg.bounds.delta = d;
        }
        if let Some(ep) = self.eps_prime {
            cfg.bounds.eps_prime = ep;
        }
        if let Some(es) = self.eps_sec {
            cfg.bounds.eps_sec = es;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the finite-key security bound and key length.
    Rate {
        #[command(flatten)]
        params: ParamOverrides,
        /// Assumed Pr(Ω).
        #[arg(long = "pr-omega")]
        pr_omega: Option<f64>,
        /// Assumed Pr(Ω ∧ Υ″).
        #[arg(long = "pr-omega-upsilon2")]
        pr_omega_upsilon2: Option<f64>,
        /// Assumed Pr(Ω_im).
        #[arg(long = "pr-omega-im")]
        pr_omega_im: Option<f64>,
        /// Error-correction transcript bits log|T| (default: leakage model).
        #[arg(long = "transcript-bits")]
        transcript_bits: Option<f64>,
        /// Include the imperfect-measurement D_max bound (uses --xi, --eps-m).
        #[arg(long = "imperfect-measurements")]
        imperfect_measurements: bool,
        /// Measurement failure weight ξ.
        #[arg(long)]
        xi: Option<f64>,
        /// Measurement error parameter ε_m.
        #[arg(long = "eps-m")]
        eps_m: Option<f64>,
        /// Exponential base inside the sampling error probabilities: 2 or e.
        #[arg(long = "hoeffding-base")]
        hoeffding_base: Option<String>,
        /// Event probabilities exported by `simulate --export-probs`
        /// (supersedes the --pr-omega* values).
        #[arg(long = "probs-file")]
        probs_file: Option<PathBuf>,
        /// Also write a one-row CSV of the headline quantities.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run seeded protocol trials and estimate event probabilities.
    Simulate {
        #[command(flatten)]
        params: ParamOverrides,
        /// Number of trials.
        #[arg(long)]
        trials: Option<u64>,
        /// Source model: perfect | depolarized:p | tilt:kappa | coinflip:eps.
        #[arg(long)]
        source: Option<String>,
        /// Channel model: identity | bitflip:p | depolarizing:p | intercept:f.
        #[arg(long)]
        channel: Option<String>,
        /// Test measurement model: perfect | indep-error:e.
        #[arg(long)]
        measurement: Option<String>,
        /// Requested key fraction r (key has ⌊r·n⌋ bits).
        #[arg(long = "key-rate")]
        key_rate: Option<f64>,
        /// Write the summary JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the estimated event probabilities for `rate --probs-file`.
        #[arg(long = "export-probs")]
        export_probs: Option<PathBuf>,
        /// Additionally dump the full record of one trial as JSON.
        #[arg(long = "dump-trial")]
        dump_trial: Option<u64>,
        /// Write one CSV row per trial here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Exhaustively validate the sampling error against the tail bound.
    ValidateSampling {
        /// Largest n+m to enumerate.
        #[arg(long = "max-total")]
        max_total: Option<usize>,
        /// Smallest tested-subset size.
        #[arg(long = "min-sample")]
        min_sample: Option<usize>,
        /// Largest tested-subset size.
        #[arg(long = "max-sample")]
        max_sample: Option<usize>,
        /// Comma-separated δ values (overrides the configured list).
        #[arg(long)]
        delta: Option<String>,
        /// Monte Carlo spot-check trials per configuration (0 = off).
        #[arg(long = "mc-trials")]
        mc_trials: Option<u64>,
        /// Emit one JSON row per configuration.
        #[arg(long)]
        json: bool,
    },
    /// Search protocol parameters for the best finite-key rate.
    Optimize {
        /// Comma-separated n values (accepts 1e6 style), e.g. 1e4,1e5,1e6.
        #[arg(long = "n-sweep")]
        n_sweep: Option<String>,
        /// Assumed channel QBER for the leakage model.
        #[arg(long = "assumed-qber")]
        assumed_qber: Option<f64>,
        /// Write the rate-vs-n curve CSV here instead of stdout.
        #[arg(long = "out-curve")]
        out_curve: Option<PathBuf>,
        /// Write the full evaluation trace CSV here.
        #[arg(long = "out-trace")]
        out_trace: Option<PathBuf>,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };

    let mut cfg = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match RunConfig::parse(&text) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("config error in {}: {e}", path.display());
                    return EXIT_USAGE;
                }
            },
            Err(e) => {
                eprintln!("cannot read {}: {e}", path.display());
                return EXIT_USAGE;
            }
        },
        None => RunConfig::default(),
    };

    if let Ok(seed) = std::env::var("SRCKEY_SEED") {
        match seed.parse::<u64>() {
            Ok(s) => cfg.run.seed = s,
            Err(_) => {
                eprintln!("SRCKEY_SEED must be an unsigned 64-bit integer, got {seed:?}");
                return EXIT_USAGE;
            }
        }
    }
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.run.threads = threads;
    }
    if cli.print_config {
        print!("{}", cfg.canonical());
        return 0;
    }
    if cfg.run.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.threads)
            .build_global()
        {
            eprintln!("cannot configure {} worker threads: {e}", cfg.run.threads);
            return EXIT_USAGE;
        }
    }

    let result = match cli.command {
        Command::Rate {
            params,
            pr_omega,
            pr_omega_upsilon2,
            pr_omega_im,
            transcript_bits,
            imperfect_measurements,
            xi,
            eps_m,
            hoeffding_base,
            probs_file,
            csv,
        } => {
            params.apply(&mut cfg);
            if let Some(p) = pr_omega {
                cfg.bounds.pr_omega = p;
            }
            if let Some(p) = pr_omega_upsilon2 {
                cfg.bounds.pr_omega_upsilon2 = p;
            }
            if let Some(p) = pr_omega_im {
                cfg.bounds.pr_omega_im = p;
            }
            if transcript_bits.is_some() {
                cfg.bounds.transcript_bits = transcript_bits;
            }
            if imperfect_measurements {
                cfg.bounds.imperfect_measurements = true;
            }
            if let Some(x) = xi {
                cfg.bounds.xi = x;
            }
            if let Some(e) = eps_m {
                cfg.bounds.eps_m = e;
            }
            if let Some(base) = hoeffding_base {
                cfg.bounds.hoeffding_base = match base.as_str() {
                    "2" => srckey_core::bounds::HoeffdingBase::Two,
                    "e" => srckey_core::bounds::HoeffdingBase::E,
                    other => {
                        eprintln!("--hoeffding-base must be 2 or e, got {other:?}");
                        return EXIT_USAGE;
                    }
                };
            }
            commands::cmd_rate(&cfg, probs_file.as_deref(), csv.as_deref())
        }
        Command::Simulate {
            params,
            trials,
            source,
            channel,
            measurement,
            key_rate,
            out,
            export_probs,
            dump_trial,
            csv,
        } => {
            params.apply(&mut cfg);
            if let Some(t) = trials {
                cfg.protocol.trials = t;
            }
            if let Some(s) = source {
                match config::parse_source(&s) {
                    Some(kind) => cfg.protocol.source = kind,
                    None => {
                        eprintln!("invalid source spec {s:?}");
                        return EXIT_USAGE;
                    }
                }
            }
            if let Some(c) = channel {
                match config::parse_channel(&c) {
                    Some(ch) => cfg.protocol.channel = ch,
                    None => {
                        eprintln!("invalid channel spec {c:?}");
                        return EXIT_USAGE;
                    }
                }
            }
            if let Some(mm) = measurement {
                match config::parse_measurement(&mm) {
                    Some(m) => cfg.protocol.measurement = m,
                    None => {
                        eprintln!("invalid measurement spec {mm:?}");
                        return EXIT_USAGE;
                    }
                }
            }
            if let Some(r) = key_rate {
                cfg.protocol.key_rate = r;
            }
            commands::cmd_simulate(
                &cfg,
                out.as_deref(),
                export_probs.as_deref(),
                dump_trial,
                csv.as_deref(),
            )
        }
        Command::ValidateSampling {
            max_total,
            min_sample,
            max_sample,
            delta,
            mc_trials,
            json,
        } => {
            if let Some(t) = max_total {
                cfg.sampling.max_total = t;
            }
            if let Some(s) = min_sample {
                cfg.sampling.min_sample = s;
            }
            if let Some(s) = max_sample {
                cfg.sampling.max_sample = s;
            }
            if let Some(list) = delta {
                match list
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<Vec<f64>, _>>()
                {
                    Ok(deltas) if !deltas.is_empty() => cfg.sampling.deltas = deltas,
                    _ => {
                        eprintln!("--delta expects a comma-separated list of numbers");
                        return EXIT_USAGE;
                    }
                }
            }
            if let Some(t) = mc_trials {
                cfg.sampling.mc_trials = t;
            }
            commands::cmd_validate_sampling(&cfg, json)
        }
        Command::Optimize {
            n_sweep,
            assumed_qber,
            out_curve,
            out_trace,
        } => {
            if let Some(q) = assumed_qber {
                cfg.optimizer.assumed_qber = q;
            }
            let sweep = match n_sweep {
                Some(s) => match commands::parse_n_sweep(&s) {
                    Ok(v) => Some(v),
                    Err(e) => {
                        eprintln!("--n-sweep: {e}");
                        return EXIT_USAGE;
                    }
                },
                None => None,
            };
            commands::cmd_optimize(&cfg, sweep, out_curve.as_deref(), out_trace.as_deref())
        }
    };

    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

// Referenced so the schema constant stays tied to the CLI surface.
const _: u32 = SCHEMA_VERSION;
