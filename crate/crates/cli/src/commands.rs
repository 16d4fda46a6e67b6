//! The four subcommands: bound evaluation, simulation, sampling-bound
//! validation, and rate optimisation. Every command is deterministic given
//! (config, seed): outputs are assembled into strings/files with stable
//! field order and no timestamps.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use srckey_core::bounds::{self, BoundInputs, EpsilonSplit};
use srckey_core::optimizer;
use srckey_core::protocol;
use srckey_core::sampling::{self, SamplingStrategy};

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;

/// Event probabilities as exchanged between `simulate --export-probs` and
/// `rate --probs-file`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ProbsFile {
    pub schema_version: u32,
    pub p_omega: f64,
    pub p_omega_and_upsilon2: f64,
    pub p_omega_im: f64,
    pub trials: u64,
    pub master_seed: u64,
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// rate
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct RateOutput<'a> {
    schema_version: u32,
    params: &'a bounds::ProtocolParams,
    probs: &'a bounds::EventProbs,
    transcript_bits: f64,
    report: &'a bounds::SecurityReport,
    dmax_bound_perfect: &'a bounds::DmaxBound,
    #[serde(skip_serializing_if = "Option::is_none")]
    dmax_bound_imperfect: Option<&'a bounds::DmaxBound>,
}

pub fn cmd_rate(cfg: &RunConfig, probs_file: Option<&Path>, csv: Option<&Path>) -> Result<i32, String> {
    let mut cfg = cfg.clone();
    if let Some(path) = probs_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let probs: ProbsFile =
            serde_json::from_str(&text).map_err(|e| format!("invalid probs file: {e}"))?;
        if probs.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "probs file schema version {} != {SCHEMA_VERSION}",
                probs.schema_version
            ));
        }
        cfg.bounds.pr_omega = probs.p_omega;
        cfg.bounds.pr_omega_upsilon2 = probs.p_omega_and_upsilon2;
        cfg.bounds.pr_omega_im = probs.p_omega_im;
    }
    let params = cfg.protocol_params();
    let probs = cfg.event_probs();
    let transcript = cfg.transcript_bits();
    let split = cfg
        .bounds
        .eps_split
        .map(|(eps1, eps2, eps3)| EpsilonSplit { eps1, eps2, eps3 });
    let report = bounds::hmin_lower_bound(&BoundInputs {
        params: &params,
        probs: &probs,
        transcript_bits: transcript,
        split,
        base: cfg.bounds.hoeffding_base,
        eps_sec: cfg.bounds.eps_sec,
    });
    let perfect =
        bounds::dmax_bound_perfect_with_base(&params, &probs, cfg.bounds.hoeffding_base);
    let imperfect = cfg
        .bounds
        .imperfect_measurements
        .then(|| bounds::dmax_bound_imperfect_with_base(&params, &probs, cfg.bounds.hoeffding_base));

    let output = RateOutput {
        schema_version: SCHEMA_VERSION,
        params: &params,
        probs: &probs,
        transcript_bits: transcript,
        report: &report,
        dmax_bound_perfect: &perfect,
        dmax_bound_imperfect: imperfect.as_ref(),
    };
    let json = serde_json::to_string_pretty(&output).map_err(|e| e.to_string())?;
    println!("{json}");

    if let Some(path) = csv {
        let mut text = String::from("# schema-version: 1\n");
        text.push_str("valid,hmin_bound,key_length,rate,eps_cl,eps_qu,eps_pa,alpha,v,smoothing_radius\n");
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{}",
            report.valid,
            opt(report.hmin_bound),
            report.key_length.map_or(String::new(), |k| k.to_string()),
            opt(report.rate),
            report.eps_cl,
            report.eps_qu,
            opt(report.eps_pa),
            opt(report.alpha),
            opt(report.v),
            opt(report.smoothing_radius),
        );
        write_file(path, &text)?;
    }

    if report.valid {
        Ok(EXIT_OK)
    } else {
        for reason in &report.reasons {
            eprintln!("precondition failed: {reason}");
        }
        Ok(EXIT_PRECONDITION)
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct SimulateOutput<'a> {
    schema_version: u32,
    scenario: &'a protocol::Scenario,
    seed: u64,
    probs: &'a bounds::EventProbs,
    summary: &'a protocol::ProbSummary,
}

pub fn cmd_simulate(
    cfg: &RunConfig,
    out: Option<&Path>,
    export_probs: Option<&Path>,
    dump_trial: Option<u64>,
    csv: Option<&Path>,
) -> Result<i32, String> {
    let scenario = cfg.scenario();
    if let Err(e) = scenario.validate() {
        eprintln!("invalid scenario: {e}");
        return Ok(EXIT_PRECONDITION);
    }
    let seed = cfg.run.seed;
    let (probs, summary) = protocol::estimate_event_probs(&scenario, cfg.protocol.trials, seed)
        .map_err(|e| e.to_string())?;
    if let Some(path) = csv {
        use rayon::prelude::*;
        let rows: Vec<String> = (0..cfg.protocol.trials)
            .into_par_iter()
            .map(|idx| {
                let r = protocol::run_trial(&scenario, seed, idx)
                    .expect("scenario validated above");
                format!(
                    "{idx},{},{},{},{},{},{},{},{},{},{}",
                    r.aborted_source_test,
                    r.source_test_error,
                    r.aborted_pe,
                    r.ec_verified,
                    r.qber_observed,
                    r.sifted.len(),
                    r.sifted_x.len(),
                    r.transcript_bits,
                    r.key_alice.len(),
                    r.key_alice == r.key_bob,
                )
            })
            .collect();
        let mut text = String::from(
            "# schema-version: 1\ntrial,aborted_source_test,source_test_error,aborted_pe,ec_verified,qber,sifted,sifted_x,transcript_bits,key_bits,keys_match\n",
        );
        for row in rows {
            text.push_str(&row);
            text.push('\n');
        }
        write_file(path, &text)?;
    }
    let output = SimulateOutput {
        schema_version: SCHEMA_VERSION,
        scenario: &scenario,
        seed,
        probs: &probs,
        summary: &summary,
    };
    let json = serde_json::to_string_pretty(&output).map_err(|e| e.to_string())?;
    match out {
        Some(path) => write_file(path, &format!("{json}\n"))?,
        None => println!("{json}"),
    }
    if let Some(path) = export_probs {
        let file = ProbsFile {
            schema_version: SCHEMA_VERSION,
            p_omega: probs.p_omega,
            p_omega_and_upsilon2: probs.p_omega_and_upsilon2,
            p_omega_im: probs.p_omega_im,
            trials: summary.trials,
            master_seed: seed,
        };
        let text = serde_json::to_string_pretty(&file).map_err(|e| e.to_string())?;
        write_file(path, &format!("{text}\n"))?;
    }
    if let Some(index) = dump_trial {
        let record = protocol::run_trial(&scenario, seed, index).map_err(|e| e.to_string())?;
        let text = serde_json::to_string(&record).map_err(|e| e.to_string())?;
        println!("{text}");
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// validate-sampling
// ---------------------------------------------------------------------------

pub fn cmd_validate_sampling(cfg: &RunConfig, json: bool) -> Result<i32, String> {
    let s = &cfg.sampling;
    if s.max_total > sampling::MAX_EXACT_TOTAL {
        eprintln!(
            "guard exceeded: max-total {} > {}",
            s.max_total,
            sampling::MAX_EXACT_TOTAL
        );
        return Ok(EXIT_USAGE);
    }
    let mut all_pass = true;
    let mut configs = 0u32;
    let mut out = String::new();
    for total in (s.min_sample + 2).max(3)..=s.max_total {
        for m in s.min_sample..=s.max_sample.min(total - 1) {
            let strat = SamplingStrategy::new(total, m).map_err(|e| e.to_string())?;
            for &delta in &s.deltas {
                let report = sampling::check_hoeffding(&strat, delta).map_err(|e| e.to_string())?;
                configs += 1;
                all_pass &= report.pass;
                if json {
                    let _ = writeln!(out, "{}", report.json_row());
                } else {
                    let _ = writeln!(
                        out,
                        "n={:2} m={} delta={}: exact={:.6e} bound2={:.6e} bounde={:.6e} {}",
                        report.n,
                        report.m,
                        report.delta,
                        report.exact,
                        report.bound_base2,
                        report.bound_basee,
                        if report.pass { "ok" } else { "VIOLATION" }
                    );
                }
                if s.mc_trials > 0 {
                    // Spot-check the Monte Carlo estimator against the
                    // exact per-class value on the worst class.
                    let exact = sampling::exact_classical_error(&strat, delta)
                        .map_err(|e| e.to_string())?;
                    let mc = sampling::mc_classical_error(
                        &strat,
                        delta,
                        exact.worst_weight,
                        s.mc_trials,
                        cfg.run.seed,
                    )
                    .map_err(|e| e.to_string())?;
                    let truth = exact.max_error;
                    if !json {
                        let _ = writeln!(
                            out,
                            "    mc[k={}] = {:.6e} in [{:.6e}, {:.6e}]",
                            exact.worst_weight, mc.estimate, mc.wilson_99.lo, mc.wilson_99.hi
                        );
                    }
                    all_pass &= mc.wilson_99.lo <= truth && truth <= mc.wilson_99.hi;
                }
            }
        }
    }
    print!("{out}");
    if !json {
        println!(
            "{} configurations checked: {}",
            configs,
            if all_pass { "all pass" } else { "VIOLATIONS" }
        );
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_PRECONDITION })
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

pub fn cmd_optimize(
    cfg: &RunConfig,
    n_sweep: Option<Vec<u64>>,
    out_curve: Option<&Path>,
    out_trace: Option<&Path>,
) -> Result<i32, String> {
    let space = cfg.search_space();
    let mut n_values = n_sweep.unwrap_or_else(|| cfg.optimizer.n_values.clone());
    n_values.sort_unstable();
    n_values.dedup();
    if n_values.is_empty() {
        return Err("no n values to optimise".into());
    }

    let mut curve = String::from("# schema-version: 1\nn,best_rate,key_length,dominant_penalty\n");
    let mut trace = String::from(
        "# schema-version: 1\nn,phase,mu,delta,e,m_ratio,split_s,valid,objective,hmin_bound,key_length,dominant_penalty\n",
    );
    let mut any_feasible = false;
    for &n in &n_values {
        let mut sp = space.clone();
        sp.fixed.n = n;
        let outcome = optimizer::optimize_rate(&sp).map_err(|e| e.to_string())?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let optk = |v: Option<u64>| v.map_or(String::new(), |x| x.to_string());
        match &outcome.best {
            Some(best) => {
                any_feasible = true;
                let _ = writeln!(
                    curve,
                    "{n},{},{},{}",
                    best.objective,
                    optk(best.report.key_length),
                    best.report
                        .penalties
                        .map(|p| p.dominant())
                        .unwrap_or_default(),
                );
            }
            None => {
                let _ = writeln!(curve, "{n},,,");
            }
        }
        if out_trace.is_some() {
            for ev in &outcome.trace {
                let c = ev.candidate;
                let _ = writeln!(
                    trace,
                    "{n},{},{},{},{},{},{},{},{},{},{},{}",
                    ev.phase,
                    c.mu,
                    c.delta,
                    c.e,
                    c.m_ratio,
                    c.split_s,
                    ev.valid,
                    opt(ev.objective),
                    opt(ev.hmin_bound),
                    optk(ev.key_length),
                    ev.dominant_penalty.clone().unwrap_or_default(),
                );
            }
        }
    }

    match out_curve {
        Some(path) => write_file(path, &curve)?,
        None => print!("{curve}"),
    }
    if let Some(path) = out_trace {
        write_file(path, &trace)?;
    }
    if !any_feasible {
        eprintln!("no feasible parameters");
        return Ok(EXIT_PRECONDITION);
    }
    Ok(EXIT_OK)
}

pub fn parse_n_sweep(s: &str) -> Result<Vec<u64>, String> {
    s.split(',')
        .map(|v| {
            let v = v.trim();
            if let Ok(x) = v.parse::<u64>() {
                return Ok(x);
            }
            let f: f64 = v.parse().map_err(|_| format!("invalid count {v:?}"))?;
            if f.fract() != 0.0 || !(1.0..=9.0e18).contains(&f) {
                return Err(format!("count {v:?} is not a positive integer"));
            }
            Ok(f as u64)
        })
        .collect()
}
