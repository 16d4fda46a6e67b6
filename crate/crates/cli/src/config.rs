//! Run configuration: a flat key-value text format with one section per
//! module. Parsing is strict (unknown sections or keys are errors) and
//! serialisation is canonical, so `serialize(parse(file))` is a fixed
//! point for every accepted file.

use std::fmt::Write as _;

use srckey_core::protocol::{ChannelModel, MeasurementModel, SourceKind};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

type Result<T> = std::result::Result<T, ConfigError>;

/// Axis specification `lo:hi:points` for the optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl RangeSpec {
    pub fn fixed(v: f64) -> Self {
        Self {
            lo: v,
            hi: v,
            points: 1,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return None;
        }
        Some(Self {
            lo: parts[0].trim().parse().ok()?,
            hi: parts[1].trim().parse().ok()?,
            points: parts[2].trim().parse().ok()?,
        })
    }

    fn canonical(&self) -> String {
        format!("{}:{}:{}", self.lo, self.hi, self.points)
    }

    pub fn axis(&self) -> srckey_core::optimizer::AxisRange {
        srckey_core::optimizer::AxisRange {
            lo: self.lo,
            hi: self.hi,
            points: self.points,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub seed: u64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSection {
    pub n: u64,
    pub m: u64,
    pub mu: f64,
    /// Maximum tolerated QBER e.
    pub qber_tol: f64,
    /// Source-test threshold ε.
    pub source_tol: f64,
    pub source: SourceKind,
    pub channel: ChannelModel,
    pub measurement: MeasurementModel,
    pub trials: u64,
    /// Requested key fraction r; the key has ⌊r·n⌋ bits.
    pub key_rate: f64,
    pub ec_efficiency: f64,
    pub ec_verify_bits: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsSection {
    pub delta: f64,
    pub eps_prime: f64,
    pub eps_sec: f64,
    /// "2" or "e".
    pub hoeffding_base: srckey_core::bounds::HoeffdingBase,
    pub pr_omega: f64,
    pub pr_omega_upsilon2: f64,
    pub pr_omega_im: f64,
    /// `None` means the built-in leakage model ⌈eff·n·sift·h(e)⌉+verify.
    pub transcript_bits: Option<f64>,
    pub imperfect_measurements: bool,
    pub eps_m: f64,
    pub xi: f64,
    /// `None` means the default split ε₁ = ε′/2, ε₂ = ε₃ = ε′/8.
    pub eps_split: Option<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingSection {
    pub max_total: usize,
    pub min_sample: usize,
    pub max_sample: usize,
    pub deltas: Vec<f64>,
    pub mc_trials: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSection {
    pub mu_range: RangeSpec,
    pub delta_range: RangeSpec,
    pub qber_range: RangeSpec,
    pub m_ratio_range: RangeSpec,
    pub split_range: RangeSpec,
    pub assumed_qber: f64,
    pub n_values: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub run: RunSection,
    pub protocol: ProtocolSection,
    pub bounds: BoundsSection,
    pub sampling: SamplingSection,
    pub optimizer: OptimizerSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            run: RunSection {
                seed: 12345,
                threads: 0,
            },
            protocol: ProtocolSection {
                n: 2000,
                m: 200,
                mu: 0.05,
                qber_tol: 0.02,
                source_tol: 0.01,
                source: SourceKind::Perfect,
                channel: ChannelModel::Identity,
                measurement: MeasurementModel::PerfectTest,
                trials: 100,
                key_rate: 0.1,
                ec_efficiency: 1.16,
                ec_verify_bits: 64,
            },
            bounds: BoundsSection {
                delta: 0.01,
                eps_prime: 1e-6,
                eps_sec: 1e-10,
                hoeffding_base: srckey_core::bounds::HoeffdingBase::Two,
                pr_omega: 1.0,
                pr_omega_upsilon2: 1.0,
                pr_omega_im: 1.0,
                transcript_bits: None,
                imperfect_measurements: false,
                eps_m: 0.0,
                xi: 0.0,
                eps_split: None,
            },
            sampling: SamplingSection {
                max_total: 16,
                min_sample: 2,
                max_sample: 6,
                deltas: vec![0.1, 0.2, 0.3],
                mc_trials: 0,
            },
            optimizer: OptimizerSection {
                mu_range: RangeSpec {
                    lo: 0.01,
                    hi: 0.2,
                    points: 6,
                },
                delta_range: RangeSpec {
                    lo: 0.001,
                    hi: 0.01,
                    points: 4,
                },
                qber_range: RangeSpec {
                    lo: 0.021,
                    hi: 0.06,
                    points: 4,
                },
                m_ratio_range: RangeSpec::fixed(0.1),
                split_range: RangeSpec::fixed(0.5),
                assumed_qber: 0.02,
                n_values: vec![1_000_000_000_000],
            },
        }
    }
}

pub fn parse_source(s: &str) -> Option<SourceKind> {
    let (kind, param) = split_spec(s);
    match (kind, param) {
        ("perfect", None) => Some(SourceKind::Perfect),
        ("depolarized", Some(p)) => Some(SourceKind::Depolarized(p)),
        ("tilt", Some(k)) => Some(SourceKind::TiltMemory(k)),
        ("coinflip", Some(e)) => Some(SourceKind::CoinFlip(e)),
        _ => None,
    }
}

pub fn source_spec(kind: SourceKind) -> String {
    match kind {
        SourceKind::Perfect => "perfect".into(),
        SourceKind::Depolarized(p) => format!("depolarized:{p}"),
        SourceKind::TiltMemory(k) => format!("tilt:{k}"),
        SourceKind::CoinFlip(e) => format!("coinflip:{e}"),
    }
}

pub fn parse_channel(s: &str) -> Option<ChannelModel> {
    let (kind, param) = split_spec(s);
    match (kind, param) {
        ("identity", None) => Some(ChannelModel::Identity),
        ("bitflip", Some(p)) => Some(ChannelModel::BitFlip(p)),
        ("depolarizing", Some(p)) => Some(ChannelModel::Depolarizing(p)),
        ("intercept", Some(f)) => Some(ChannelModel::InterceptResend(f)),
        _ => None,
    }
}

pub fn channel_spec(ch: ChannelModel) -> String {
    match ch {
        ChannelModel::Identity => "identity".into(),
        ChannelModel::BitFlip(p) => format!("bitflip:{p}"),
        ChannelModel::Depolarizing(p) => format!("depolarizing:{p}"),
        ChannelModel::InterceptResend(f) => format!("intercept:{f}"),
    }
}

pub fn parse_measurement(s: &str) -> Option<MeasurementModel> {
    let (kind, param) = split_spec(s);
    match (kind, param) {
        ("perfect", None) => Some(MeasurementModel::PerfectTest),
        ("indep-error", Some(e)) => Some(MeasurementModel::IndepError(e)),
        _ => None,
    }
}

pub fn measurement_spec(m: MeasurementModel) -> String {
    match m {
        MeasurementModel::PerfectTest => "perfect".into(),
        MeasurementModel::IndepError(e) => format!("indep-error:{e}"),
    }
}

fn split_spec(s: &str) -> (&str, Option<f64>) {
    match s.split_once(':') {
        Some((kind, param)) => (kind.trim(), param.trim().parse().ok()),
        None => (s.trim(), None),
    }
}

impl RunConfig {
    /// Strict parse: unknown sections and keys are rejected with the line
    /// number; values must parse for their declared type.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(ConfigError::Parse {
                    line: line_no,
                    msg: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                if !matches!(
                    section.as_str(),
                    "run" | "protocol" | "bounds" | "sampling" | "optimizer"
                ) {
                    return Err(ConfigError::Parse {
                        line: line_no,
                        msg: format!("unknown section [{section}]"),
                    });
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Parse {
                line: line_no,
                msg: "expected key = value".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.apply(&section, key, value)
                .map_err(|msg| ConfigError::Parse { line: line_no, msg })?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value
                .parse::<T>()
                .map_err(|_| format!("invalid value {value:?} for {key}"))
        }
        match (section, key) {
            ("run", "seed") => self.run.seed = num(key, value)?,
            ("run", "threads") => self.run.threads = num(key, value)?,
            ("protocol", "n") => self.protocol.n = num(key, value)?,
            ("protocol", "m") => self.protocol.m = num(key, value)?,
            ("protocol", "mu") => self.protocol.mu = num(key, value)?,
            ("protocol", "qber-tol") => self.protocol.qber_tol = num(key, value)?,
            ("protocol", "source-tol") => self.protocol.source_tol = num(key, value)?,
            ("protocol", "source") => {
                self.protocol.source =
                    parse_source(value).ok_or(format!("invalid source spec {value:?}"))?;
            }
            ("protocol", "channel") => {
                self.protocol.channel =
                    parse_channel(value).ok_or(format!("invalid channel spec {value:?}"))?;
            }
            ("protocol", "measurement") => {
                self.protocol.measurement = parse_measurement(value)
                    .ok_or(format!("invalid measurement spec {value:?}"))?;
            }
            ("protocol", "trials") => self.protocol.trials = num(key, value)?,
            ("protocol", "key-rate") => self.protocol.key_rate = num(key, value)?,
            ("protocol", "ec-efficiency") => self.protocol.ec_efficiency = num(key, value)?,
            ("protocol", "ec-verify-bits") => self.protocol.ec_verify_bits = num(key, value)?,
            ("bounds", "delta") => self.bounds.delta = num(key, value)?,
            ("bounds", "eps-prime") => self.bounds.eps_prime = num(key, value)?,
            ("bounds", "eps-sec") => self.bounds.eps_sec = num(key, value)?,
            ("bounds", "hoeffding-base") => {
                self.bounds.hoeffding_base = match value {
                    "2" => srckey_core::bounds::HoeffdingBase::Two,
                    "e" => srckey_core::bounds::HoeffdingBase::E,
                    _ => return Err(format!("hoeffding-base must be 2 or e, got {value:?}")),
                };
            }
            ("bounds", "pr-omega") => self.bounds.pr_omega = num(key, value)?,
            ("bounds", "pr-omega-upsilon2") => self.bounds.pr_omega_upsilon2 = num(key, value)?,
            ("bounds", "pr-omega-im") => self.bounds.pr_omega_im = num(key, value)?,
            ("bounds", "transcript-bits") => {
                self.bounds.transcript_bits = if value == "auto" {
                    None
                } else {
                    Some(num(key, value)?)
                };
            }
            ("bounds", "imperfect-measurements") => {
                self.bounds.imperfect_measurements = num(key, value)?;
            }
            ("bounds", "eps-m") => self.bounds.eps_m = num(key, value)?,
            ("bounds", "xi") => self.bounds.xi = num(key, value)?,
            ("bounds", "eps-split") => {
                self.bounds.eps_split = if value == "auto" {
                    None
                } else {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    if parts.len() != 3 {
                        return Err("eps-split needs auto or three comma-separated values".into());
                    }
                    Some((
                        num(key, parts[0])?,
                        num(key, parts[1])?,
                        num(key, parts[2])?,
                    ))
                };
            }
            ("sampling", "max-total") => self.sampling.max_total = num(key, value)?,
            ("sampling", "min-sample") => self.sampling.min_sample = num(key, value)?,
            ("sampling", "max-sample") => self.sampling.max_sample = num(key, value)?,
            ("sampling", "deltas") => {
                self.sampling.deltas = value
                    .split(',')
                    .map(|v| num("deltas", v.trim()))
                    .collect::<std::result::Result<_, _>>()?;
            }
            ("sampling", "mc-trials") => self.sampling.mc_trials = num(key, value)?,
            ("optimizer", "mu-range") => {
                self.optimizer.mu_range =
                    RangeSpec::parse(value).ok_or(format!("invalid range {value:?}"))?;
            }
            ("optimizer", "delta-range") => {
                self.optimizer.delta_range =
                    RangeSpec::parse(value).ok_or(format!("invalid range {value:?}"))?;
            }
            ("optimizer", "qber-range") => {
                self.optimizer.qber_range =
                    RangeSpec::parse(value).ok_or(format!("invalid range {value:?}"))?;
            }
            ("optimizer", "m-ratio-range") => {
                self.optimizer.m_ratio_range =
                    RangeSpec::parse(value).ok_or(format!("invalid range {value:?}"))?;
            }
            ("optimizer", "split-range") => {
                self.optimizer.split_range =
                    RangeSpec::parse(value).ok_or(format!("invalid range {value:?}"))?;
            }
            ("optimizer", "assumed-qber") => self.optimizer.assumed_qber = num(key, value)?,
            ("optimizer", "n-values") => {
                self.optimizer.n_values = value
                    .split(',')
                    .map(|v| parse_count(v.trim()))
                    .collect::<std::result::Result<_, _>>()?;
            }
            ("", k) => return Err(format!("key {k:?} appears before any section")),
            (s, k) => return Err(format!("unknown key {k:?} in section [{s}]")),
        }
        Ok(())
    }

    /// Canonical serialisation: every key, fixed order, current values.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let p = &self.protocol;
        let b = &self.bounds;
        let s = &self.sampling;
        let o = &self.optimizer;
        let _ = write!(
            out,
            "[run]\n\
             seed = {}\n\
             threads = {}\n\
             \n\
             [protocol]\n\
             n = {}\n\
             m = {}\n\
             mu = {}\n\
             qber-tol = {}\n\
             source-tol = {}\n\
             source = {}\n\
             channel = {}\n\
             measurement = {}\n\
             trials = {}\n\
             key-rate = {}\n\
             ec-efficiency = {}\n\
             ec-verify-bits = {}\n\
             \n\
             [bounds]\n\
             delta = {}\n\
             eps-prime = {}\n\
             eps-sec = {}\n\
             hoeffding-base = {}\n\
             pr-omega = {}\n\
             pr-omega-upsilon2 = {}\n\
             pr-omega-im = {}\n\
             transcript-bits = {}\n\
             imperfect-measurements = {}\n\
             eps-m = {}\n\
             xi = {}\n\
             eps-split = {}\n\
             \n\
             [sampling]\n\
             max-total = {}\n\
             min-sample = {}\n\
             max-sample = {}\n\
             deltas = {}\n\
             mc-trials = {}\n\
             \n\
             [optimizer]\n\
             mu-range = {}\n\
             delta-range = {}\n\
             qber-range = {}\n\
             m-ratio-range = {}\n\
             split-range = {}\n\
             assumed-qber = {}\n\
             n-values = {}\n",
            self.run.seed,
            self.run.threads,
            p.n,
            p.m,
            p.mu,
            p.qber_tol,
            p.source_tol,
            source_spec(p.source),
            channel_spec(p.channel),
            measurement_spec(p.measurement),
            p.trials,
            p.key_rate,
            p.ec_efficiency,
            p.ec_verify_bits,
            b.delta,
            b.eps_prime,
            b.eps_sec,
            match b.hoeffding_base {
                srckey_core::bounds::HoeffdingBase::Two => "2",
                srckey_core::bounds::HoeffdingBase::E => "e",
            },
            b.pr_omega,
            b.pr_omega_upsilon2,
            b.pr_omega_im,
            b.transcript_bits
                .map_or("auto".to_string(), |t| t.to_string()),
            b.imperfect_measurements,
            b.eps_m,
            b.xi,
            b.eps_split.map_or("auto".to_string(), |(a, c, d)| format!(
                "{a},{c},{d}"
            )),
            s.max_total,
            s.min_sample,
            s.max_sample,
            s.deltas
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(","),
            s.mc_trials,
            o.mu_range.canonical(),
            o.delta_range.canonical(),
            o.qber_range.canonical(),
            o.m_ratio_range.canonical(),
            o.split_range.canonical(),
            o.assumed_qber,
            o.n_values
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        out
    }

    /// Protocol parameters for the bounds pipeline.
    pub fn protocol_params(&self) -> srckey_core::bounds::ProtocolParams {
        srckey_core::bounds::ProtocolParams {
            n: self.protocol.n,
            m: self.protocol.m,
            mu: self.protocol.mu,
            e: self.protocol.qber_tol,
            eps_src: self.protocol.source_tol,
            delta: self.bounds.delta,
            eps_prime: self.bounds.eps_prime,
            eps_m: self.bounds.eps_m,
            xi: self.bounds.xi,
            alphabet_size: 2,
        }
    }

    pub fn event_probs(&self) -> srckey_core::bounds::EventProbs {
        srckey_core::bounds::EventProbs {
            p_omega: self.bounds.pr_omega,
            p_omega_and_upsilon2: self.bounds.pr_omega_upsilon2,
            p_omega_im: self.bounds.pr_omega_im,
        }
    }

    /// log|T| in bits: the configured value, or the leakage model
    /// ⌈efficiency·n·((1−μ)²+μ²)·h(e)⌉ + verify bits.
    pub fn transcript_bits(&self) -> f64 {
        if let Some(t) = self.bounds.transcript_bits {
            return t;
        }
        let mu = self.protocol.mu;
        let sift = (1.0 - mu) * (1.0 - mu) + mu * mu;
        let h = srckey_core::bounds::binary_entropy(self.protocol.qber_tol.clamp(0.0, 1.0))
            .unwrap_or(1.0);
        (self.protocol.ec_efficiency * self.protocol.n as f64 * sift * h).ceil()
            + self.protocol.ec_verify_bits as f64
    }

    pub fn scenario(&self) -> srckey_core::protocol::Scenario {
        srckey_core::protocol::Scenario {
            params: self.protocol_params(),
            source: self.protocol.source,
            channel: self.protocol.channel,
            measurement: self.protocol.measurement,
            ec: srckey_core::protocol::EcConfig {
                efficiency: self.protocol.ec_efficiency,
                verify_bits: self.protocol.ec_verify_bits,
            },
            key_len: (self.protocol.key_rate * self.protocol.n as f64).floor() as usize,
        }
    }

    pub fn search_space(&self) -> srckey_core::optimizer::SearchSpace {
        srckey_core::optimizer::SearchSpace {
            mu: self.optimizer.mu_range.axis(),
            delta: self.optimizer.delta_range.axis(),
            e: self.optimizer.qber_range.axis(),
            m_ratio: self.optimizer.m_ratio_range.axis(),
            split_s: self.optimizer.split_range.axis(),
            fixed: srckey_core::optimizer::FixedInputs {
                n: self.protocol.n,
                eps_src: self.protocol.source_tol,
                eps_prime: self.bounds.eps_prime,
                assumed_qber: self.optimizer.assumed_qber,
                probs: self.event_probs(),
                eps_sec: self.bounds.eps_sec,
                ec: srckey_core::protocol::EcConfig {
                    efficiency: self.protocol.ec_efficiency,
                    verify_bits: self.protocol.ec_verify_bits,
                },
                base: self.bounds.hoeffding_base,
            },
        }
    }
}

fn parse_count(s: &str) -> std::result::Result<u64, String> {
    // Accept plain integers and scientific notation like 1e6.
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s
        .parse()
        .map_err(|_| format!("invalid count {s:?} in n-values"))?;
    if f.fract() != 0.0 || !(1.0..=9.0e18).contains(&f) {
        return Err(format!("count {s:?} is not a positive integer"));
    }
    Ok(f as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_round_trip_is_identity() {
        let cfg = RunConfig::default();
        let text = cfg.canonical();
        let parsed = RunConfig::parse(&text).unwrap();
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.canonical(), text);
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        assert!(RunConfig::parse("[protocol]\nbogus = 1\n").is_err());
        assert!(RunConfig::parse("[nonsense]\nn = 1\n").is_err());
        assert!(RunConfig::parse("n = 1\n").is_err());
        assert!(RunConfig::parse("[protocol\nn = 1\n").is_err());
        assert!(RunConfig::parse("[protocol]\nn 1\n").is_err());
        assert!(RunConfig::parse("[protocol]\nn = wat\n").is_err());
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let cfg = RunConfig::parse("# comment\n\n[protocol]\n# more\nn = 99\n").unwrap();
        assert_eq!(cfg.protocol.n, 99);
    }

    #[test]
    fn model_specs_round_trip() {
        for spec in ["perfect", "depolarized:0.25", "tilt:0.1", "coinflip:0.5"] {
            let kind = parse_source(spec).unwrap();
            assert_eq!(source_spec(kind), spec);
        }
        for spec in ["identity", "bitflip:0.05", "depolarizing:0.3", "intercept:1"] {
            let ch = parse_channel(spec).unwrap();
            assert_eq!(channel_spec(ch), spec);
        }
        for spec in ["perfect", "indep-error:0.01"] {
            let m = parse_measurement(spec).unwrap();
            assert_eq!(measurement_spec(m), spec);
        }
        assert!(parse_source("depolarized").is_none());
        assert!(parse_channel("telepathy:1").is_none());
    }

    #[test]
    fn n_values_accept_scientific_notation() {
        let cfg =
            RunConfig::parse("[optimizer]\nn-values = 1e4,1e5,1000000\n").unwrap();
        assert_eq!(cfg.optimizer.n_values, vec![10_000, 100_000, 1_000_000]);
        assert!(RunConfig::parse("[optimizer]\nn-values = 1.5\n").is_err());
    }

    #[test]
    fn auto_and_explicit_transcript() {
        let auto = RunConfig::default();
        let mu = auto.protocol.mu;
        let sift = (1.0 - mu) * (1.0 - mu) + mu * mu;
        let h = srckey_core::bounds::binary_entropy(0.02).unwrap();
        let want = (1.16 * 2000.0 * sift * h).ceil() + 64.0;
        assert_eq!(auto.transcript_bits(), want);
        let explicit = RunConfig::parse("[bounds]\ntranscript-bits = 500\n").unwrap();
        assert_eq!(explicit.transcript_bits(), 500.0);
    }

    proptest! {
        #[test]
        fn numeric_overrides_round_trip(
            n in 1u64..10_000_000,
            mu in 0.01f64..0.5,
            trials in 1u64..100_000,
            seed in proptest::num::u64::ANY,
        ) {
            let mut cfg = RunConfig::default();
            cfg.protocol.n = n;
            cfg.protocol.mu = mu;
            cfg.protocol.trials = trials;
            cfg.run.seed = seed;
            let parsed = RunConfig::parse(&cfg.canonical()).unwrap();
            prop_assert_eq!(parsed, cfg);
        }
    }
}
