//! Every scalar formula of the finite-key security analysis: sampling error
//! probabilities, smoothing radii, the smooth max-relative-entropy bounds
//! for perfect and imperfect source-test measurements, the entropy
//! accumulation and max-entropy terms, and the assembled smooth min-entropy
//! lower bound with its key-length deduction.
//!
//! Probabilities of protocol events are always caller-supplied (from
//! simulation or assumption); nothing in this module estimates them.
//!
//! All logarithms and exponentials are base 2; the Hoeffding-style error
//! probabilities optionally switch to natural exponent via
//! [`HoeffdingBase::E`] for comparison (the base-2 form is the default and
//! is weaker, hence still valid). Precondition violations are flagged on
//! the returned reports with named reasons; values are never silently
//! clamped into validity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1/√2, the admissibility threshold for h(ε+δ).
pub const H_EPS_DELTA_LIMIT: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Named precondition-failure reasons, shared with the CLI exit paths.
pub mod reason {
    pub const H_EPS_DELTA: &str = "h(eps+delta) >= 1/sqrt(2)";
    pub const PR_TOO_SMALL: &str = "Pr(Omega and Upsilon'') <= 2*eps_qu";
    pub const ALPHA_RANGE: &str = "alpha >= 1 + 2/V";
    pub const SMOOTHING_RADIUS: &str = "eps_pa + eps_prime >= 1";
    pub const EPS_PA_INVALID: &str = "eps_pa >= 1";
}

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("{name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("report is not valid: {0}")]
    InvalidReport(String),
}

type Result<T> = std::result::Result<T, BoundsError>;

/// Exponential base used inside the sampling error probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HoeffdingBase {
    /// 2^(−t), matching the convention that exp is base 2.
    #[default]
    Two,
    /// e^(−t), the sharper natural-exponent variant, for comparison.
    E,
}

// ---------------------------------------------------------------------------
// Elementary functions
// ---------------------------------------------------------------------------

pub(crate) fn h_unchecked(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -(x * x.log2() + (1.0 - x) * (1.0 - x).log2())
}

/// Binary entropy h(x) = −x log x − (1−x) log(1−x), with h(0) = h(1) = 0
/// by continuity.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(BoundsError::OutOfRange {
            name: "x",
            value: x,
            range: "[0, 1]",
        });
    }
    Ok(h_unchecked(x))
}

/// g0(x) = −log(1 − √(1−x²)) for x ∈ (0, 1]; diverges as x → 0, which is
/// reported as an error rather than infinity.
pub fn g0(x: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(BoundsError::OutOfRange {
            name: "x",
            value: x,
            range: "(0, 1]",
        });
    }
    // 1 − √(1−x²) = x²/(1 + √(1−x²)), which survives small x.
    Ok(-(x * x / (1.0 + (1.0 - x * x).sqrt())).log2())
}

/// g1(x, y) = g0(x) − log(1 − y²) for x ∈ (0, 1], y ∈ [0, 1).
pub fn g1(x: f64, y: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&y) {
        return Err(BoundsError::OutOfRange {
            name: "y",
            value: y,
            range: "[0, 1)",
        });
    }
    Ok(g0(x)? - (1.0 - y * y).log2())
}

/// Classical sampling error probability 2·exp(−nδ²m/(n+2)), clamped to 1
/// for reporting. `n` is the number of untested rounds, `m` the tested.
pub fn eps_cl(n: u64, m: u64, delta: f64) -> f64 {
    eps_cl_with_base(n, m, delta, HoeffdingBase::Two)
}

pub fn eps_cl_with_base(n: u64, m: u64, delta: f64, base: HoeffdingBase) -> f64 {
    let n = n as f64;
    let m = m as f64;
    let t = n * delta * delta * m / (n + 2.0);
    let raw = match base {
        HoeffdingBase::Two => 2.0 * (-t).exp2(),
        HoeffdingBase::E => 2.0 * (-t).exp(),
    };
    raw.min(1.0)
}

/// Quantum sampling error probability ε_qu = √(ε_cl), equal to
/// √2·exp(−nδ²m/(2(n+2))) below the clamp.
pub fn eps_qu(n: u64, m: u64, delta: f64) -> f64 {
    eps_cl(n, m, delta).sqrt()
}

pub fn eps_qu_with_base(n: u64, m: u64, delta: f64, base: HoeffdingBase) -> f64 {
    eps_cl_with_base(n, m, delta, base).sqrt()
}

/// The entropy-accumulation constant
/// V = (2/μ²) log((1−e)/e) + 2 log(1 + 2|X|²).
pub fn v_const(mu: f64, e: f64, alphabet_size: u32) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(BoundsError::OutOfRange {
            name: "mu",
            value: mu,
            range: "(0, 1)",
        });
    }
    if !(e > 0.0 && e < 0.5) {
        return Err(BoundsError::OutOfRange {
            name: "e",
            value: e,
            range: "(0, 1/2)",
        });
    }
    let x2 = (alphabet_size as f64) * (alphabet_size as f64);
    Ok(2.0 / (mu * mu) * ((1.0 - e) / e).log2() + 2.0 * (1.0 + 2.0 * x2).log2())
}

/// The Rényi order α = 1 + 2√(2h(ε+δ))/V together with its admissible
/// upper limit 1 + 2/V. `in_range` is false when α falls at or above the
/// limit, which happens for h(ε+δ) ≥ 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaChoice {
    pub value: f64,
    pub upper_limit: f64,
    pub in_range: bool,
}

pub fn alpha_choice(eps: f64, delta: f64, v: f64) -> Result<AlphaChoice> {
    if v <= 0.0 {
        return Err(BoundsError::OutOfRange {
            name: "V",
            value: v,
            range: "(0, inf)",
        });
    }
    let h = binary_entropy(eps + delta)?;
    if h == 0.0 {
        return Err(BoundsError::OutOfRange {
            name: "h(eps+delta)",
            value: h,
            range: "(0, 1/sqrt(2))",
        });
    }
    let value = 1.0 + 2.0 * (2.0 * h).sqrt() / v;
    let upper_limit = 1.0 + 2.0 / v;
    Ok(AlphaChoice {
        value,
        upper_limit,
        in_range: value > 1.0 && value < upper_limit,
    })
}

/// Entropy-accumulation lower bound on the α-Rényi entropy rate:
/// n(1 − 2μ + μ² − h(e)) − n(α−1)V²/4 − (α/(α−1)) log(1/P_σ(Υ″)).
///
/// Exposed for audit; in the assembled min-entropy bound the P_σ term
/// cancels, so the pipeline never feeds a measured value here.
pub fn eat_alpha_bound(
    n: u64,
    mu: f64,
    e: f64,
    alpha: f64,
    v: f64,
    p_sigma_upsilon2: f64,
) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 1.0 + 2.0 / v) {
        return Err(BoundsError::OutOfRange {
            name: "alpha",
            value: alpha,
            range: "(1, 1 + 2/V)",
        });
    }
    if !(p_sigma_upsilon2 > 0.0 && p_sigma_upsilon2 <= 1.0) {
        return Err(BoundsError::OutOfRange {
            name: "p_sigma_upsilon2",
            value: p_sigma_upsilon2,
            range: "(0, 1]",
        });
    }
    let h_e = binary_entropy(e)?;
    let n = n as f64;
    Ok(n * (1.0 - 2.0 * mu + mu * mu - h_e)
        - n * (alpha - 1.0) * v * v / 4.0
        - alpha / (alpha - 1.0) * -(p_sigma_upsilon2.log2()))
}

/// Max-entropy upper bound with β = 1 + 1/√n and the coarse 1 < β < 2
/// simplification: nμ² + √n(μ² ln 2 + 2 log(1/P(Ω∧Υ″)) + g0(ε₂)).
///
/// The ln 2 here is the natural logarithm of 2 appearing as a constant in
/// the formula; everything else stays base 2.
pub fn hmax_bound(n: u64, mu: f64, eps2: f64, p_joint: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(BoundsError::OutOfRange {
            name: "mu",
            value: mu,
            range: "[0, 1]",
        });
    }
    if !(p_joint > 0.0 && p_joint <= 1.0) {
        return Err(BoundsError::OutOfRange {
            name: "p_joint",
            value: p_joint,
            range: "(0, 1]",
        });
    }
    let n = n as f64;
    let g = g0(eps2)?;
    Ok(n * mu * mu
        + n.sqrt() * (mu * mu * std::f64::consts::LN_2 - 2.0 * p_joint.log2() + g))
}

// ---------------------------------------------------------------------------
// Parameter bundles
// ---------------------------------------------------------------------------

/// Every protocol and analysis parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Rounds kept for BB84.
    pub n: u64,
    /// Rounds consumed by the source test.
    pub m: u64,
    /// Probability of choosing the X basis (both encoding and measuring).
    pub mu: f64,
    /// Maximum tolerated QBER during parameter estimation.
    pub e: f64,
    /// Source-test error threshold.
    pub eps_src: f64,
    /// Sampling slack of the δ-correct set.
    pub delta: f64,
    /// Total smoothing budget ε′ on top of ε_pa.
    pub eps_prime: f64,
    /// Measurement-error parameter of the source-test devices.
    pub eps_m: f64,
    /// Measurement-failure weight of the source-test devices.
    pub xi: f64,
    /// Alphabet size |X| of the encoded strings.
    pub alphabet_size: u32,
}

impl ProtocolParams {
    /// Named invariant violations; empty means admissible.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n < 1 {
            out.push("n < 1".into());
        }
        if self.m < 1 {
            out.push("m < 1".into());
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            out.push("mu outside (0, 1)".into());
        }
        if !(self.e > 0.0 && self.e < 0.5) {
            out.push("e outside (0, 1/2)".into());
        }
        if !(0.0..1.0).contains(&self.eps_src) {
            out.push("eps_src outside [0, 1)".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            out.push("delta outside (0, 1)".into());
        }
        if self.eps_src + self.delta <= 0.0 {
            out.push("eps_src + delta == 0".into());
        }
        // At exactly 1 the binary entropy vanishes and the analysis
        // degenerates (every string passes the weight test).
        if self.eps_src + self.delta >= 1.0 {
            out.push("eps_src + delta >= 1".into());
        }
        if !(self.eps_prime > 0.0 && self.eps_prime < 1.0) {
            out.push("eps_prime outside (0, 1)".into());
        }
        if self.eps_m < 0.0 {
            out.push("eps_m < 0".into());
        }
        if !(0.0..1.0).contains(&self.xi) {
            out.push("xi outside [0, 1)".into());
        }
        if self.alphabet_size < 2 {
            out.push("alphabet_size < 2".into());
        }
        if out.is_empty() && h_unchecked(self.eps_src + self.delta) >= H_EPS_DELTA_LIMIT {
            out.push(reason::H_EPS_DELTA.into());
        }
        out
    }

    pub fn h_eps_delta(&self) -> f64 {
        h_unchecked(self.eps_src + self.delta)
    }
}

/// Event probabilities the bounds consume; estimated by simulation or
/// assumed, never computed here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventProbs {
    /// Pr(Ω): the source test passes.
    pub p_omega: f64,
    /// Pr(Ω ∧ Υ″): source test passes and the true X-basis error frequency
    /// stays at or below e.
    pub p_omega_and_upsilon2: f64,
    /// Pr(Ω_im): the source test with imperfect measurements passes.
    pub p_omega_im: f64,
}

impl EventProbs {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, p) in [
            ("p_omega", self.p_omega),
            ("p_omega_and_upsilon2", self.p_omega_and_upsilon2),
            ("p_omega_im", self.p_omega_im),
        ] {
            if !(0.0..=1.0).contains(&p) {
                out.push(format!("{name} outside [0, 1]"));
            }
        }
        if self.p_omega_and_upsilon2 > self.p_omega + 1e-12 {
            out.push("p_omega_and_upsilon2 > p_omega".into());
        }
        out
    }
}

/// The error-budget split (ε₁, ε₂, ε₃) of the smoothing budget ε′, which
/// enters the bound as ε_pa + ε₁ + 2(ε₂ + ε₃).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSplit {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
}

impl EpsilonSplit {
    /// The default admissible choice ε₁ = ε′/2, ε₂ = ε₃ = ε′/8.
    pub fn default_split(eps_prime: f64) -> Self {
        Self {
            eps1: eps_prime / 2.0,
            eps2: eps_prime / 8.0,
            eps3: eps_prime / 8.0,
        }
    }

    /// ε₁ + 2(ε₂ + ε₃), the budget this split spends.
    pub fn total(&self) -> f64 {
        self.eps1 + 2.0 * (self.eps2 + self.eps3)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, x) in [
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("eps3", self.eps3),
        ] {
            if !(x > 0.0 && x <= 1.0) {
                out.push(format!("{name} outside (0, 1]"));
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Smooth max-relative entropy bounds
// ---------------------------------------------------------------------------

/// A smooth max-relative-entropy bound together with its smoothing radius
/// and validity flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmaxBound {
    pub bound_bits: Option<f64>,
    pub eps_f: Option<f64>,
    pub valid: bool,
    pub reasons: Vec<String>,
    pub notes: Vec<String>,
}

impl DmaxBound {
    fn flagged(reasons: Vec<String>) -> Self {
        Self {
            bound_bits: None,
            eps_f: None,
            valid: false,
            reasons,
            notes: Vec::new(),
        }
    }
}

/// Smooth D_max bound for a source test with perfect measurements:
/// n·h(ε+δ) + log(1/(Pr(Ω) − ε_qu)), with radius ε_f = 2√(ε_qu/Pr(Ω)).
pub fn dmax_bound_perfect(params: &ProtocolParams, probs: &EventProbs) -> DmaxBound {
    dmax_bound_perfect_with_base(params, probs, HoeffdingBase::Two)
}

pub fn dmax_bound_perfect_with_base(
    params: &ProtocolParams,
    probs: &EventProbs,
    base: HoeffdingBase,
) -> DmaxBound {
    let mut reasons = params.violations();
    reasons.extend(probs.violations());
    if !reasons.is_empty() {
        return DmaxBound::flagged(reasons);
    }
    let e_qu = eps_qu_with_base(params.n, params.m, params.delta, base);
    let p = probs.p_omega;
    if p <= e_qu {
        return DmaxBound::flagged(vec![format!("Pr(Omega) = {p} <= eps_qu = {e_qu}")]);
    }
    let h = h_unchecked(params.eps_src + params.delta);
    let bound = params.n as f64 * h - (p - e_qu).log2();
    DmaxBound {
        bound_bits: Some(bound),
        eps_f: Some(2.0 * (e_qu / p).sqrt()),
        valid: true,
        reasons: Vec::new(),
        notes: Vec::new(),
    }
}

/// Smooth D_max bound for a source test with imperfect measurements
/// characterised by (ε_m, ξ):
/// n·h(ε+ε_m+δ) + 2 + log(1/(P(Ω_im) − ε_qu)) + log(1/(4ξ(P(Ω_im) − ε_qu − 4ξ))),
/// with radius ε_f = 2√ξ/√(P(Ω_im) − ε_qu) + 2√(ε_qu/P(Ω_im)).
pub fn dmax_bound_imperfect(params: &ProtocolParams, probs: &EventProbs) -> DmaxBound {
    dmax_bound_imperfect_with_base(params, probs, HoeffdingBase::Two)
}

pub fn dmax_bound_imperfect_with_base(
    params: &ProtocolParams,
    probs: &EventProbs,
    base: HoeffdingBase,
) -> DmaxBound {
    let mut reasons = params.violations();
    reasons.extend(probs.violations());
    if params.xi <= 0.0 {
        reasons.push("xi <= 0".into());
    }
    let threshold = params.eps_src + params.eps_m + params.delta;
    if threshold > 1.0 {
        reasons.push("eps_src + eps_m + delta > 1".into());
    }
    if !reasons.is_empty() {
        return DmaxBound::flagged(reasons);
    }
    let e_qu = eps_qu_with_base(params.n, params.m, params.delta, base);
    let p = probs.p_omega_im;
    if p <= e_qu + 4.0 * params.xi {
        return DmaxBound::flagged(vec![format!(
            "P(Omega_im) = {p} <= eps_qu + 4*xi = {}",
            e_qu + 4.0 * params.xi
        )]);
    }
    let h = h_unchecked(threshold);
    let headroom = p - e_qu;
    let bound = params.n as f64 * h + 2.0 - headroom.log2()
        - (4.0 * params.xi * (headroom - 4.0 * params.xi)).log2();
    let eps_f = 2.0 * params.xi.sqrt() / headroom.sqrt() + 2.0 * (e_qu / p).sqrt();
    let mut notes = Vec::new();
    if params.m > 0 && -params.xi.log2() >= params.m as f64 / 64.0 {
        notes.push(
            "xi decays exponentially in m, so the log(1/(4xi(...))) term adds O(m) bits"
                .to_string(),
        );
    }
    DmaxBound {
        bound_bits: Some(bound),
        eps_f: Some(eps_f),
        valid: true,
        reasons: Vec::new(),
        notes,
    }
}

// ---------------------------------------------------------------------------
// The assembled min-entropy lower bound
// ---------------------------------------------------------------------------

/// Inputs for [`hmin_lower_bound`] beyond the protocol parameters: the
/// measured event probabilities, the error-correction transcript length in
/// bits, an optional override of the smoothing split, the sampling
/// exponential base, and the security target used for the key-length
/// deduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs<'a> {
    pub params: &'a ProtocolParams,
    pub probs: &'a EventProbs,
    /// log|T|: number of bits of the error-correction transcript.
    pub transcript_bits: f64,
    /// Defaults to the ε₁ = ε′/2, ε₂ = ε₃ = ε′/8 split.
    pub split: Option<EpsilonSplit>,
    pub base: HoeffdingBase,
    /// Security target deducted as 2·log(1/ε_sec) during key extraction.
    pub eps_sec: f64,
}

impl<'a> BoundInputs<'a> {
    pub fn new(params: &'a ProtocolParams, probs: &'a EventProbs, transcript_bits: f64) -> Self {
        Self {
            params,
            probs,
            transcript_bits,
            split: None,
            base: HoeffdingBase::Two,
            eps_sec: 1e-10,
        }
    }
}

/// The five penalty groups subtracted from the leading term, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyBreakdown {
    /// n(1 − 2μ − h(e) − V√(2h(ε+δ))), the extensive part of the bound.
    pub leading: f64,
    /// √n(μ² ln 2 + 2 log(1/P) + g0(ε₂)).
    pub sqrt_n_term: f64,
    /// (V/√(2h(ε+δ)))(log(1/(P − 2ε_qu)) + 1).
    pub sampling_log_term: Option<f64>,
    /// g1(ε₁, ε_pa)·V/(2√(2h(ε+δ))).
    pub smoothing_g1_term: Option<f64>,
    /// log|T|, the error-correction leakage.
    pub ec_leakage: f64,
    /// 3·g0(ε₃) from the chain-rule step.
    pub chain_rule_g0_term: f64,
}

impl PenaltyBreakdown {
    /// Name of the largest penalty group.
    pub fn dominant(&self) -> &'static str {
        let candidates = [
            ("sqrt_n_term", Some(self.sqrt_n_term)),
            ("sampling_log_term", self.sampling_log_term),
            ("smoothing_g1_term", self.smoothing_g1_term),
            ("ec_leakage", Some(self.ec_leakage)),
            ("chain_rule_g0_term", Some(self.chain_rule_g0_term)),
        ];
        let mut best = ("sqrt_n_term", f64::NEG_INFINITY);
        for (name, value) in candidates {
            if let Some(v) = value {
                if v > best.1 {
                    best = (name, v);
                }
            }
        }
        best.0
    }
}

/// All derived security quantities, with validity flags. Quantities that
/// are arithmetically undefined at the supplied inputs are `None`; a report
/// can carry a defined `hmin_bound` and still be invalid when an
/// applicability condition of the analysis fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub valid: bool,
    pub reasons: Vec<String>,
    pub notes: Vec<String>,
    pub eps_cl: f64,
    pub eps_qu: f64,
    /// Smoothing radius 2√(ε_qu/Pr(Ω)) of the source-test closeness step.
    pub eps_f: Option<f64>,
    /// Privacy-amplification smoothing radius 2(2ε_qu/Pr(Ω∧Υ″))^½.
    pub eps_pa: Option<f64>,
    pub alpha: Option<f64>,
    pub alpha_limit: Option<f64>,
    pub beta: f64,
    pub v: Option<f64>,
    /// Audit value of the entropy-accumulation term at P_σ = 1.
    pub eat_term: Option<f64>,
    /// Audit value of the max-entropy bound at ε₂.
    pub hmax_term: Option<f64>,
    pub penalties: Option<PenaltyBreakdown>,
    pub hmin_bound: Option<f64>,
    /// Total smoothing radius ε_pa + ε₁ + 2(ε₂ + ε₃).
    pub smoothing_radius: Option<f64>,
    pub eps_sec: f64,
    pub key_length: Option<u64>,
    pub rate: Option<f64>,
}

impl SecurityReport {
    fn skeleton(reasons: Vec<String>, inputs: &BoundInputs) -> Self {
        SecurityReport {
            valid: false,
            reasons,
            notes: Vec::new(),
            eps_cl: eps_cl_with_base(inputs.params.n, inputs.params.m, inputs.params.delta, inputs.base),
            eps_qu: eps_qu_with_base(inputs.params.n, inputs.params.m, inputs.params.delta, inputs.base),
            eps_f: None,
            eps_pa: None,
            alpha: None,
            alpha_limit: None,
            beta: 1.0 + 1.0 / (inputs.params.n.max(1) as f64).sqrt(),
            v: None,
            eat_term: None,
            hmax_term: None,
            penalties: None,
            hmin_bound: None,
            smoothing_radius: None,
            eps_sec: inputs.eps_sec,
            key_length: None,
            rate: None,
        }
    }
}

/// Lower bound on the smooth min-entropy of the raw key, assembled from the
/// entropy-accumulation term, the source-test D_max penalty, the chain-rule
/// and max-entropy corrections, and the error-correction leakage:
///
/// n(1 − 2μ − h(e) − V√(2h(ε+δ)))
///   − √n(μ² ln 2 + 2 log(1/P) + g0(ε₂))
///   − (V/√(2h(ε+δ)))(log(1/(P − 2ε_qu)) + 1)
///   − g1(ε₁, ε_pa)·V/(2√(2h(ε+δ)))
///   − log|T| − 3 g0(ε₃)
///
/// with P = Pr(Ω ∧ Υ″), ε_pa = 2(2ε_qu/P)^½, α = 1 + 2√(2h(ε+δ))/V and the
/// smoothing radius ε_pa + ε₁ + 2(ε₂+ε₃). Every precondition failure is
/// flagged with a named reason; nothing is clamped.
pub fn hmin_lower_bound(inputs: &BoundInputs) -> SecurityReport {
    let params = inputs.params;
    let split = inputs
        .split
        .unwrap_or_else(|| EpsilonSplit::default_split(params.eps_prime));

    let mut reasons = params.violations();
    reasons.extend(inputs.probs.violations());
    reasons.extend(split.violations());
    if inputs.transcript_bits < 0.0 {
        reasons.push("transcript_bits < 0".into());
    }
    if !(inputs.eps_sec > 0.0 && inputs.eps_sec < 1.0) {
        reasons.push("eps_sec outside (0, 1)".into());
    }
    // Domain failures that poison the arithmetic below; report what we can.
    let hard_invalid = !(params.mu > 0.0 && params.mu < 1.0)
        || !(params.e > 0.0 && params.e < 0.5)
        || !(params.eps_src + params.delta > 0.0 && params.eps_src + params.delta < 1.0)
        || !split.violations().is_empty()
        || params.alphabet_size < 2;
    if hard_invalid {
        return SecurityReport::skeleton(reasons, inputs);
    }

    let mut report = SecurityReport::skeleton(Vec::new(), inputs);
    let n = params.n as f64;
    let h_ed = params.h_eps_delta();
    let sqrt_2h = (2.0 * h_ed).sqrt();
    let v = v_const(params.mu, params.e, params.alphabet_size).expect("validated above");
    let h_e = h_unchecked(params.e);
    report.v = Some(v);

    let alpha = 1.0 + 2.0 * sqrt_2h / v;
    let alpha_limit = 1.0 + 2.0 / v;
    report.alpha = Some(alpha);
    report.alpha_limit = Some(alpha_limit);
    if alpha >= alpha_limit {
        reasons.push(reason::ALPHA_RANGE.into());
    }

    let e_qu = report.eps_qu;
    let p = inputs.probs.p_omega_and_upsilon2;
    if p <= 2.0 * e_qu {
        reasons.push(reason::PR_TOO_SMALL.into());
    }
    if inputs.probs.p_omega > 0.0 {
        report.eps_f = Some(2.0 * (e_qu / inputs.probs.p_omega).sqrt());
    }
    let eps_pa = if p > 0.0 {
        let value = 2.0 * (2.0 * e_qu / p).sqrt();
        report.eps_pa = Some(value);
        if value >= 1.0 {
            reasons.push(reason::EPS_PA_INVALID.into());
        }
        Some(value)
    } else {
        reasons.push("p_omega_and_upsilon2 == 0".into());
        None
    };

    if let Some(e_pa) = eps_pa {
        let radius = e_pa + split.total();
        report.smoothing_radius = Some(radius);
        if radius >= 1.0 {
            let r = reason::SMOOTHING_RADIUS.to_string();
            if !reasons.contains(&r) {
                reasons.push(r);
            }
        }
    }

    if alpha > 1.0 && alpha < alpha_limit {
        report.eat_term = eat_alpha_bound(params.n, params.mu, params.e, alpha, v, 1.0).ok();
    }
    if p > 0.0 {
        report.hmax_term = hmax_bound(params.n, params.mu, split.eps2, p).ok();
    }

    if p > 0.0 {
        let leading = n * (1.0 - 2.0 * params.mu - h_e - v * sqrt_2h);
        let sqrt_n_term = n.sqrt()
            * (params.mu * params.mu * std::f64::consts::LN_2 - 2.0 * p.log2()
                + g0(split.eps2).expect("validated above"));
        let sampling_log_term = (p > 2.0 * e_qu)
            .then(|| v / sqrt_2h * (-(p - 2.0 * e_qu).log2() + 1.0));
        let smoothing_g1_term = eps_pa.filter(|&x| x < 1.0).map(|e_pa| {
            g1(split.eps1, e_pa).expect("validated above") * v / (2.0 * sqrt_2h)
        });
        let penalties = PenaltyBreakdown {
            leading,
            sqrt_n_term,
            sampling_log_term,
            smoothing_g1_term,
            ec_leakage: inputs.transcript_bits,
            chain_rule_g0_term: 3.0 * g0(split.eps3).expect("validated above"),
        };
        report.penalties = Some(penalties);
        if let (Some(slog), Some(sg1)) = (sampling_log_term, smoothing_g1_term) {
            report.hmin_bound = Some(
                penalties.leading
                    - penalties.sqrt_n_term
                    - slog
                    - sg1
                    - penalties.ec_leakage
                    - penalties.chain_rule_g0_term,
            );
        }
    }

    report.valid = reasons.is_empty();
    report.reasons = reasons;
    if report.valid {
        if let Some(hmin) = report.hmin_bound {
            let deduction = 2.0 * -(inputs.eps_sec.log2());
            let len = (hmin - deduction).floor().max(0.0) as u64;
            report.key_length = Some(len);
            report.rate = Some(len as f64 / n);
        }
    }
    report
}

/// Number of extractable key bits max(0, ⌊hmin − 2 log(1/ε_sec)⌋) for a
/// valid report.
pub fn key_length(report: &SecurityReport, eps_sec_target: f64) -> Result<u64> {
    if !(eps_sec_target > 0.0 && eps_sec_target < 1.0) {
        return Err(BoundsError::OutOfRange {
            name: "eps_sec_target",
            value: eps_sec_target,
            range: "(0, 1)",
        });
    }
    if !report.valid {
        return Err(BoundsError::InvalidReport(report.reasons.join("; ")));
    }
    let hmin = report
        .hmin_bound
        .ok_or_else(|| BoundsError::InvalidReport("hmin_bound undefined".into()))?;
    let deduction = 2.0 * -(eps_sec_target.log2());
    Ok((hmin - deduction).floor().max(0.0) as u64)
}

/// Per-round asymptotic key rate 1 − 2μ − h(e) − V√(2h(ε+δ)), the n → ∞
/// limit of the bound per round before error-correction leakage.
pub fn asymptotic_rate(mu: f64, e: f64, eps: f64, delta: f64) -> Result<f64> {
    let v = v_const(mu, e, 2)?;
    let h_ed = binary_entropy(eps + delta)?;
    Ok(1.0 - 2.0 * mu - h_unchecked(e) - v * (2.0 * h_ed).sqrt())
}
