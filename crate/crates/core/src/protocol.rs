//! Executable BB84 and source-test protocols with pluggable source, channel
//! and measurement-device models.
//!
//! A trial consists of a source test over n+m emitted rounds (a uniform
//! size-m subset is measured in its preparation basis and the run aborts if
//! the observed mismatch fraction strictly exceeds the threshold) followed,
//! on success, by the BB84 protocol on the n surviving rounds: per-round
//! basis draws, transmission through the channel, Bob's measurement,
//! sifting, modelled error correction, parameter estimation and Toeplitz
//! privacy amplification.
//!
//! Randomness is organised as independent named substreams of a ChaCha12
//! generator derived from (master seed, trial index), so the streaming and
//! batch formulations of the source test consume identical draws and every
//! trial is reproducible bit-for-bit regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{EventProbs, ProtocolParams};
use crate::qmath::{self, DensityOp, QmathError};
use crate::stats::{wilson_99, WilsonInterval};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("model parameter {name} = {value} outside {range}")]
    BadModelParam {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("expected {want} surviving rounds, got {got}")]
    WrongRoundCount { want: usize, got: usize },
    #[error("mismatched register lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("requested key of {requested} bits but only {available} sifted bits exist")]
    KeyTooLong { requested: usize, available: usize },
    #[error("invalid protocol parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Qmath(#[from] QmathError),
}

type Result<T> = std::result::Result<T, ProtocolError>;

// ---------------------------------------------------------------------------
// Per-trial randomness
// ---------------------------------------------------------------------------

/// Independent named randomness streams for one trial. Substreams keep the
/// source-emission draws identical across the streaming and batch source
/// tests and decouple Alice's, Bob's and the tester's randomness.
pub struct TrialRngs {
    pub emission: ChaCha12Rng,
    pub gamma: ChaCha12Rng,
    pub test: ChaCha12Rng,
    pub bob: ChaCha12Rng,
    pub hash: ChaCha12Rng,
}

const STREAMS_PER_TRIAL: u64 = 8;

impl TrialRngs {
    pub fn derive(master_seed: u64, trial_index: u64) -> Self {
        let stream = |k: u64| {
            let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
            rng.set_stream(trial_index * STREAMS_PER_TRIAL + k);
            rng
        };
        Self {
            emission: stream(0),
            gamma: stream(1),
            test: stream(2),
            bob: stream(3),
            hash: stream(4),
        }
    }
}

// ---------------------------------------------------------------------------
// Source models
// ---------------------------------------------------------------------------

/// The source variants: a perfect BB84 encoder, a depolarised encoder, an
/// encoder with switching inertia that tilts each state toward the previous
/// round's emission when the basis changes, and the latched coin-flip
/// source that silently encodes 0 in every key-generation round on its bad
/// branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "param")]
pub enum SourceKind {
    Perfect,
    Depolarized(f64),
    TiltMemory(f64),
    CoinFlip(f64),
}

/// One emitted round: the classical registers and the qubit actually sent.
#[derive(Debug, Clone)]
pub struct EmittedRound {
    pub x: u8,
    pub theta: u8,
    pub state: DensityOp,
}

/// State-space angles of the four ideal signal states on the real circle
/// cos(φ)|0⟩ + sin(φ)|1⟩.
fn ideal_angle(x: u8, theta: u8) -> f64 {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    match (x, theta) {
        (0, 0) => 0.0,
        (1, 0) => FRAC_PI_2,
        (0, 1) => FRAC_PI_4,
        (1, 1) => 3.0 * FRAC_PI_4,
        _ => unreachable!("bits validated at construction"),
    }
}

fn pure_from_angle(phi: f64) -> DensityOp {
    use num_complex::Complex;
    DensityOp::pure(&[Complex::new(phi.cos(), 0.0), Complex::new(phi.sin(), 0.0)])
        .expect("unit vector by construction")
}

/// A stateful per-round emitter of (x, θ, qubit). Fresh state per protocol
/// run; the only memory across rounds is the model-specific internal state.
#[derive(Debug, Clone)]
pub struct SourceModel {
    kind: SourceKind,
    mu: f64,
    ideal: Vec<DensityOp>,
    emitted_states: Vec<DensityOp>,
    coin_bad: bool,
    prev: Option<(u8, f64)>,
    rounds_emitted: u64,
}

impl SourceModel {
    pub fn new(kind: SourceKind, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(ProtocolError::BadModelParam {
                name: "mu",
                value: mu,
                range: "(0, 1)",
            });
        }
        match kind {
            SourceKind::Depolarized(p) if !(0.0..=1.0).contains(&p) => {
                return Err(ProtocolError::BadModelParam {
                    name: "p",
                    value: p,
                    range: "[0, 1]",
                });
            }
            SourceKind::TiltMemory(k) if !(0.0..=std::f64::consts::FRAC_PI_4).contains(&k) => {
                return Err(ProtocolError::BadModelParam {
                    name: "kappa_tilt",
                    value: k,
                    range: "[0, pi/4]",
                });
            }
            SourceKind::CoinFlip(eps) if !(0.0..=1.0).contains(&eps) => {
                return Err(ProtocolError::BadModelParam {
                    name: "eps_s",
                    value: eps,
                    range: "[0, 1]",
                });
            }
            _ => {}
        }
        let ideal: Vec<DensityOp> = (0..4)
            .map(|i| qmath::bb84_state(i as u8 & 1, (i as u8 >> 1) & 1).expect("valid bits"))
            .collect();
        let emitted_states = match kind {
            SourceKind::Depolarized(p) => ideal
                .iter()
                .map(|s| qmath::depolarize(s, p).expect("valid p"))
                .collect(),
            _ => ideal.clone(),
        };
        Ok(Self {
            kind,
            mu,
            ideal,
            emitted_states,
            coin_bad: false,
            prev: None,
            rounds_emitted: 0,
        })
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn rounds_emitted(&self) -> u64 {
        self.rounds_emitted
    }

    /// Resets per-run state and latches the coin for the coin-flip source.
    pub fn begin_run<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.prev = None;
        self.rounds_emitted = 0;
        self.coin_bad = match self.kind {
            SourceKind::CoinFlip(eps_s) => rng.random::<f64>() < eps_s,
            _ => false,
        };
    }

    /// Draws (x, θ) with p(x, θ) = (1−μ)/2 for θ = 0 and μ/2 for θ = 1,
    /// then emits the model's qubit for that pair.
    pub fn emit<R: Rng + ?Sized>(&mut self, rng: &mut R) -> EmittedRound {
        let x = rng.random_range(0..2u8);
        let theta = u8::from(rng.random::<f64>() < self.mu);
        let idx = (x | (theta << 1)) as usize;
        let state = match self.kind {
            SourceKind::Perfect => self.emitted_states[idx].clone(),
            SourceKind::Depolarized(_) => self.emitted_states[idx].clone(),
            SourceKind::CoinFlip(_) => {
                if self.coin_bad && theta == 0 {
                    self.ideal[0].clone()
                } else {
                    self.emitted_states[idx].clone()
                }
            }
            SourceKind::TiltMemory(kappa) => {
                let target = ideal_angle(x, theta);
                let emitted_angle = match self.prev {
                    Some((prev_theta, prev_angle)) if prev_theta != theta && kappa > 0.0 => {
                        tilt_toward(target, prev_angle, kappa)
                    }
                    _ => target,
                };
                self.prev = Some((theta, emitted_angle));
                if emitted_angle == target {
                    self.emitted_states[idx].clone()
                } else {
                    pure_from_angle(emitted_angle)
                }
            }
        };
        self.rounds_emitted += 1;
        EmittedRound { x, theta, state }
    }
}

/// Moves `from` by at most `kappa` along the shorter arc toward `toward` on
/// the half-turn circle of real state vectors (angles modulo π).
fn tilt_toward(from: f64, toward: f64, kappa: f64) -> f64 {
    use std::f64::consts::PI;
    let mut d = (toward - from) % PI;
    if d > PI / 2.0 {
        d -= PI;
    } else if d < -PI / 2.0 {
        d += PI;
    }
    if d == 0.0 || d.abs() >= PI / 2.0 - 1e-12 {
        // Same state or antipodal on the circle: no preferred direction.
        return from;
    }
    from + d.signum() * kappa.min(d.abs())
}

// ---------------------------------------------------------------------------
// Channel and measurement models
// ---------------------------------------------------------------------------

/// Per-round channels, applied as deterministic qubit CPTP maps so that all
/// simulation randomness enters through Born sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "param")]
pub enum ChannelModel {
    Identity,
    /// Flips the encoded bit in both bases with the given probability
    /// (a Pauli-Y mixture, which anticommutes with both Z and X).
    BitFlip(f64),
    Depolarizing(f64),
    /// Measures the given fraction of rounds in a uniformly random basis
    /// and re-prepares the outcome eigenstate.
    InterceptResend(f64),
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        let (name, value) = match *self {
            ChannelModel::Identity => return Ok(()),
            ChannelModel::BitFlip(p) => ("p", p),
            ChannelModel::Depolarizing(p) => ("p", p),
            ChannelModel::InterceptResend(f) => ("fraction", f),
        };
        if !(0.0..=1.0).contains(&value) {
            return Err(ProtocolError::BadModelParam {
                name,
                value,
                range: "[0, 1]",
            });
        }
        Ok(())
    }

    pub fn apply(&self, state: &DensityOp) -> DensityOp {
        use num_complex::Complex;
        match *self {
            ChannelModel::Identity => state.clone(),
            ChannelModel::BitFlip(p) => {
                // (1−p) ρ + p YρY: Y swaps the diagonal and negates the
                // off-diagonal entries.
                let m = state.matrix();
                let flipped = [
                    m[(1, 1)],
                    -m[(1, 0)],
                    -m[(0, 1)],
                    m[(0, 0)],
                ];
                let mut out = m * Complex::new(1.0 - p, 0.0);
                out[(0, 0)] += flipped[0] * Complex::new(p, 0.0);
                out[(0, 1)] += flipped[1] * Complex::new(p, 0.0);
                out[(1, 0)] += flipped[2] * Complex::new(p, 0.0);
                out[(1, 1)] += flipped[3] * Complex::new(p, 0.0);
                DensityOp::new_unchecked(out)
            }
            ChannelModel::Depolarizing(p) => {
                qmath::depolarize(state, p).expect("validated parameter")
            }
            ChannelModel::InterceptResend(fraction) => {
                // Eve measures in Z or X (coin-flip) and re-prepares:
                // (1−f) ρ + f(½ pinch_Z(ρ) + ½ pinch_X(ρ)), where
                // pinch_Z = diag(ρ00, ρ11) and pinch_X = [[tr/2, s],[s, tr/2]]
                // with s = Re ρ01.
                let m = state.matrix();
                let keep = Complex::new(1.0 - fraction, 0.0);
                let w = Complex::new(0.5 * fraction, 0.0);
                let s = Complex::new(m[(0, 1)].re, 0.0);
                let avg = (m[(0, 0)] + m[(1, 1)]) * Complex::new(0.5, 0.0);
                let mut out = m * keep;
                out[(0, 0)] += (m[(0, 0)] + avg) * w;
                out[(0, 1)] += s * w;
                out[(1, 0)] += s * w;
                out[(1, 1)] += (m[(1, 1)] + avg) * w;
                DensityOp::new_unchecked(out)
            }
        }
    }
}

/// Source-test measurement devices: exact basis measurements, or basis
/// measurements whose classical outcome flips independently per round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "param")]
pub enum MeasurementModel {
    PerfectTest,
    IndepError(f64),
}

impl MeasurementModel {
    pub fn validate(&self) -> Result<()> {
        if let MeasurementModel::IndepError(e) = *self {
            if !(0.0..=1.0).contains(&e) {
                return Err(ProtocolError::BadModelParam {
                    name: "error",
                    value: e,
                    range: "[0, 1]",
                });
            }
        }
        Ok(())
    }

    fn measure_round<R: Rng + ?Sized>(&self, state: &DensityOp, basis: u8, rng: &mut R) -> u8 {
        let outcome = born_sample(state, basis, rng);
        match *self {
            MeasurementModel::PerfectTest => outcome,
            MeasurementModel::IndepError(e) => {
                let flip = rng.random::<f64>() < e;
                outcome ^ u8::from(flip)
            }
        }
    }
}

/// The (ε_m, ξ) pair a per-round-independent test measurement with error
/// ε′_m satisfies, for slack δ′: ε_m = ε′_m + δ′ and ξ = e^(−2mδ′²) by the
/// Chernoff–Hoeffding bound (natural exponent).
pub fn indep_error_params(eps_m_prime: f64, delta_prime: f64, m: u64) -> (f64, f64) {
    let xi = (-2.0 * m as f64 * delta_prime * delta_prime).exp();
    (eps_m_prime + delta_prime, xi)
}

fn born_sample<R: Rng + ?Sized>(state: &DensityOp, basis: u8, rng: &mut R) -> u8 {
    let dist = qmath::measure(state, basis).expect("qubit state");
    let p0 = dist.probs()[0];
    u8::from(rng.random::<f64>() >= p0)
}

// ---------------------------------------------------------------------------
// Source test
// ---------------------------------------------------------------------------

/// Result of the source test: the abort decision, the observed mismatch
/// fraction on the m tested rounds, and the n survivors in original order.
#[derive(Debug)]
pub struct SourceTestOutcome {
    pub passed: bool,
    pub observed_error: f64,
    pub error_count: u64,
    pub surviving: Vec<EmittedRound>,
}

/// Streaming source test: Γ is pre-sampled, then each emitted round is
/// either measured in its preparation basis (members of Γ) or forwarded.
/// Aborts when the mismatch fraction strictly exceeds `eps`; ties pass.
pub fn run_source_test(
    source: &mut SourceModel,
    n: usize,
    m: usize,
    eps: f64,
    meas: &MeasurementModel,
    rngs: &mut TrialRngs,
) -> Result<SourceTestOutcome> {
    if n == 0 || m == 0 {
        return Err(ProtocolError::BadParams("n and m must be >= 1".into()));
    }
    meas.validate()?;
    source.begin_run(&mut rngs.emission);
    let total = n + m;
    let gamma = crate::sampling::subset_sample(total, m, &mut rngs.gamma);
    let mut in_gamma = vec![false; total];
    for &i in &gamma {
        in_gamma[i] = true;
    }
    let mut surviving = Vec::with_capacity(n);
    let mut errors = 0u64;
    for &tested in &in_gamma {
        let round = source.emit(&mut rngs.emission);
        if tested {
            let outcome = meas.measure_round(&round.state, round.theta, &mut rngs.test);
            if outcome != round.x {
                errors += 1;
            }
        } else {
            surviving.push(round);
        }
    }
    let observed = errors as f64 / m as f64;
    Ok(SourceTestOutcome {
        passed: observed <= eps,
        observed_error: observed,
        error_count: errors,
        surviving,
    })
}

/// Batch source test: all n+m rounds are emitted first, then the sampled
/// subset is measured. Byte-equivalent to the streaming form because the
/// emission, subset and measurement randomness live on separate streams.
pub fn run_source_test_batch(
    source: &mut SourceModel,
    n: usize,
    m: usize,
    eps: f64,
    meas: &MeasurementModel,
    rngs: &mut TrialRngs,
) -> Result<SourceTestOutcome> {
    if n == 0 || m == 0 {
        return Err(ProtocolError::BadParams("n and m must be >= 1".into()));
    }
    meas.validate()?;
    source.begin_run(&mut rngs.emission);
    let total = n + m;
    let rounds: Vec<EmittedRound> = (0..total).map(|_| source.emit(&mut rngs.emission)).collect();
    let gamma = crate::sampling::subset_sample(total, m, &mut rngs.gamma);
    let mut in_gamma = vec![false; total];
    for &i in &gamma {
        in_gamma[i] = true;
    }
    let mut errors = 0u64;
    let mut surviving = Vec::with_capacity(n);
    for (i, round) in rounds.into_iter().enumerate() {
        if in_gamma[i] {
            let outcome = meas.measure_round(&round.state, round.theta, &mut rngs.test);
            if outcome != round.x {
                errors += 1;
            }
        } else {
            surviving.push(round);
        }
    }
    let observed = errors as f64 / m as f64;
    Ok(SourceTestOutcome {
        passed: observed <= eps,
        observed_error: observed,
        error_count: errors,
        surviving,
    })
}

// ---------------------------------------------------------------------------
// Error correction and privacy amplification
// ---------------------------------------------------------------------------

/// Error-correction model: leakage accounting plus hash verification. The
/// decoder itself is modelled as succeeding (Bob's guess is Alice's string);
/// the security pipeline only consumes the transcript size and the
/// verification event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcConfig {
    /// Leakage efficiency factor applied to |S|·h(qber).
    pub efficiency: f64,
    /// Verification-hash bits appended to the transcript.
    pub verify_bits: u32,
}

impl Default for EcConfig {
    fn default() -> Self {
        Self {
            efficiency: 1.16,
            verify_bits: 64,
        }
    }
}

/// Modelled error correction: Bob's guess is Alice's raw key, the
/// transcript length is ⌈efficiency·|S|·h(mismatch fraction)⌉ plus the
/// verification bits, and verification compares seeded 64-bit hashes.
pub fn error_correct(
    x_s: &[u8],
    y_s: &[u8],
    ec: &EcConfig,
    hash_seed: u64,
) -> Result<(Vec<u8>, u64, bool)> {
    if x_s.len() != y_s.len() {
        return Err(ProtocolError::LengthMismatch(x_s.len(), y_s.len()));
    }
    let mismatches = x_s.iter().zip(y_s).filter(|(a, b)| a != b).count();
    let raw_fraction = if x_s.is_empty() {
        0.0
    } else {
        mismatches as f64 / x_s.len() as f64
    };
    let h = crate::bounds::binary_entropy(raw_fraction).expect("fraction in [0,1]");
    let transcript_bits = (ec.efficiency * x_s.len() as f64 * h).ceil() as u64 + ec.verify_bits as u64;
    let x_hat = x_s.to_vec();
    let verified = seeded_hash64(x_s, hash_seed) == seeded_hash64(&x_hat, hash_seed);
    Ok((x_hat, transcript_bits, verified))
}

/// FNV-1a over the bits with the seed folded in; a stand-in for the
/// protocol's verification hash.
fn seeded_hash64(bits: &[u8], seed: u64) -> u64 {
    let mut h = 0xcbf29ce484222325u64 ^ seed;
    for &b in bits {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Two-universal Toeplitz hashing over GF(2): the key is T·x for a random
/// ℓ×|x| Toeplitz matrix whose diagonals are seeded ChaCha bits. Same seed
/// and input give the same key.
pub fn privacy_amplify(input: &[u8], ell: usize, seed: u64) -> Result<Vec<u8>> {
    if ell > input.len() {
        return Err(ProtocolError::KeyTooLong {
            requested: ell,
            available: input.len(),
        });
    }
    if ell == 0 {
        return Ok(Vec::new());
    }
    let n = input.len();
    let diag_bits = ell + n - 1;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // rev[q] holds diagonal bit (diag_bits-1-q); row i of T is then the
    // window rev[(ell-1-i)..(ell-1-i)+n].
    let rev_words = diag_bits.div_ceil(64);
    let mut rev: Vec<u64> = (0..rev_words).map(|_| rng.random::<u64>()).collect();
    let excess = rev_words * 64 - diag_bits;
    if excess > 0 {
        let last = rev.last_mut().expect("at least one word");
        *last &= u64::MAX >> excess;
    }
    let x_words = pack_bits(input);
    let mut key = Vec::with_capacity(ell);
    for i in 0..ell {
        let offset = ell - 1 - i;
        let mut acc = 0u64;
        // pack_bits zero-pads x past n, so the AND masks the window tail.
        for (w, &xw) in x_words.iter().enumerate() {
            acc ^= xw & read_window(&rev, offset + w * 64);
        }
        key.push((acc.count_ones() & 1) as u8);
    }
    Ok(key)
}

fn pack_bits(bits: &[u8]) -> Vec<u64> {
    let mut words = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        if b != 0 {
            words[i / 64] |= 1u64 << (i % 64);
        }
    }
    words
}

/// 64 bits of `rev` starting at bit `offset` (zero-padded past the end).
fn read_window(rev: &[u64], offset: usize) -> u64 {
    let word = offset / 64;
    let sh = offset % 64;
    let lo = rev.get(word).copied().unwrap_or(0);
    if sh == 0 {
        lo
    } else {
        let hi = rev.get(word + 1).copied().unwrap_or(0);
        (lo >> sh) | (hi << (64 - sh))
    }
}

// ---------------------------------------------------------------------------
// BB84
// ---------------------------------------------------------------------------

/// All classical registers of one protocol execution plus the abort flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub x: Vec<u8>,
    pub theta: Vec<u8>,
    pub theta_hat: Vec<u8>,
    pub y: Vec<u8>,
    /// S = {i : θ_i = θ̂_i}.
    pub sifted: Vec<usize>,
    /// S_X = {i ∈ S : θ_i = 1}.
    pub sifted_x: Vec<usize>,
    /// ê, the observed error fraction on S_X (0 when S_X is empty).
    pub qber_observed: f64,
    /// Observed mismatch fraction of the source test.
    pub source_test_error: f64,
    pub aborted_source_test: bool,
    pub aborted_pe: bool,
    pub ec_verified: bool,
    pub transcript_bits: u64,
    pub key_alice: Vec<u8>,
    pub key_bob: Vec<u8>,
}

impl TrialRecord {
    fn aborted_at_source_test(observed_error: f64) -> Self {
        TrialRecord {
            x: Vec::new(),
            theta: Vec::new(),
            theta_hat: Vec::new(),
            y: Vec::new(),
            sifted: Vec::new(),
            sifted_x: Vec::new(),
            qber_observed: 0.0,
            source_test_error: observed_error,
            aborted_source_test: true,
            aborted_pe: false,
            ec_verified: false,
            transcript_bits: 0,
            key_alice: Vec::new(),
            key_bob: Vec::new(),
        }
    }

    /// C_i = x_i ⊕ y_i when θ_i = θ̂_i = 1, undefined (⊥) otherwise.
    pub fn c_registers(&self) -> Vec<Option<u8>> {
        (0..self.x.len())
            .map(|i| {
                (self.theta[i] == 1 && self.theta_hat[i] == 1).then(|| self.x[i] ^ self.y[i])
            })
            .collect()
    }

    /// Υ″: the frequency of 1 in C₁ⁿ (denominator n) is at most e.
    pub fn upsilon2(&self, e: f64) -> bool {
        if self.x.is_empty() {
            return false;
        }
        let ones = self
            .c_registers()
            .iter()
            .filter(|c| **c == Some(1))
            .count();
        ones as f64 / self.x.len() as f64 <= e
    }

    pub fn aborted(&self) -> bool {
        self.aborted_source_test || self.aborted_pe || !self.ec_verified
    }
}

/// Runs BB84 on exactly n surviving source rounds: Bob's basis draws and
/// measurements, sifting, modelled error correction, parameter estimation
/// with strict abort on ê > e, and Toeplitz privacy amplification of the
/// full sifted string (test rounds included). Aborts are recorded states,
/// not errors.
pub fn run_bb84(
    surviving: Vec<EmittedRound>,
    channel: &ChannelModel,
    params: &ProtocolParams,
    ec: &EcConfig,
    key_len: usize,
    rngs: &mut TrialRngs,
) -> Result<TrialRecord> {
    channel.validate()?;
    let n = params.n as usize;
    if surviving.len() != n {
        return Err(ProtocolError::WrongRoundCount {
            want: n,
            got: surviving.len(),
        });
    }
    let mut x = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    let mut theta_hat = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for round in &surviving {
        let bob_basis = u8::from(rngs.bob.random::<f64>() < params.mu);
        let received = channel.apply(&round.state);
        let outcome = born_sample(&received, bob_basis, &mut rngs.bob);
        x.push(round.x);
        theta.push(round.theta);
        theta_hat.push(bob_basis);
        y.push(outcome);
    }

    let sifted: Vec<usize> = (0..n).filter(|&i| theta[i] == theta_hat[i]).collect();
    let sifted_x: Vec<usize> = sifted.iter().copied().filter(|&i| theta[i] == 1).collect();

    let x_s: Vec<u8> = sifted.iter().map(|&i| x[i]).collect();
    let y_s: Vec<u8> = sifted.iter().map(|&i| y[i]).collect();
    let hash_seed = rngs.hash.random::<u64>();
    let (x_hat_s, transcript_bits, ec_verified) = error_correct(&x_s, &y_s, ec, hash_seed)?;

    // Parameter estimation over S_X with Bob's corrected guess.
    let pos_in_s: std::collections::HashMap<usize, usize> = sifted
        .iter()
        .enumerate()
        .map(|(slot, &i)| (i, slot))
        .collect();
    let mut pe_errors = 0usize;
    for &i in &sifted_x {
        let slot = pos_in_s[&i];
        if x_hat_s[slot] != y[i] {
            pe_errors += 1;
        }
    }
    let qber_observed = if sifted_x.is_empty() {
        0.0
    } else {
        pe_errors as f64 / sifted_x.len() as f64
    };
    let aborted_pe = qber_observed > params.e;

    let pa_seed = rngs.hash.random::<u64>();
    let (key_alice, key_bob) = if !aborted_pe && ec_verified {
        let ell = key_len.min(x_s.len());
        (
            privacy_amplify(&x_s, ell, pa_seed)?,
            privacy_amplify(&x_hat_s, ell, pa_seed)?,
        )
    } else {
        (Vec::new(), Vec::new())
    };

    Ok(TrialRecord {
        x,
        theta,
        theta_hat,
        y,
        sifted,
        sifted_x,
        qber_observed,
        source_test_error: 0.0,
        aborted_source_test: false,
        aborted_pe,
        ec_verified,
        transcript_bits,
        key_alice,
        key_bob,
    })
}

// ---------------------------------------------------------------------------
// Full trials and event-probability estimation
// ---------------------------------------------------------------------------

/// Everything needed to run trials: analysis parameters plus the physical
/// models and the error-correction/key-extraction configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: ProtocolParams,
    pub source: SourceKind,
    pub channel: ChannelModel,
    pub measurement: MeasurementModel,
    pub ec: EcConfig,
    /// Requested key length ⌊r·n⌋; clamped to |S| at extraction.
    pub key_len: usize,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let violations = self.params.violations();
        if !violations.is_empty() {
            return Err(ProtocolError::BadParams(violations.join("; ")));
        }
        SourceModel::new(self.source, self.params.mu)?;
        self.channel.validate()?;
        self.measurement.validate()?;
        Ok(())
    }
}

/// One full execution: source test, then BB84 on the survivors.
pub fn run_trial(scenario: &Scenario, master_seed: u64, trial_index: u64) -> Result<TrialRecord> {
    let mut rngs = TrialRngs::derive(master_seed, trial_index);
    let mut source = SourceModel::new(scenario.source, scenario.params.mu)?;
    let n = scenario.params.n as usize;
    let m = scenario.params.m as usize;
    let outcome = run_source_test(
        &mut source,
        n,
        m,
        scenario.params.eps_src,
        &scenario.measurement,
        &mut rngs,
    )?;
    debug_assert_eq!(
        outcome.surviving.len() as u64 + m as u64,
        source.rounds_emitted()
    );
    if !outcome.passed {
        return Ok(TrialRecord::aborted_at_source_test(outcome.observed_error));
    }
    let mut record = run_bb84(
        outcome.surviving,
        &scenario.channel,
        &scenario.params,
        &scenario.ec,
        scenario.key_len,
        &mut rngs,
    )?;
    record.source_test_error = outcome.observed_error;
    Ok(record)
}

/// Aggregate statistics over a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbSummary {
    pub trials: u64,
    pub master_seed: u64,
    pub source_test_aborts: u64,
    pub pe_aborts: u64,
    pub ec_failures: u64,
    pub omega_count: u64,
    pub omega_and_upsilon2_count: u64,
    pub wilson_omega: WilsonInterval,
    pub wilson_omega_and_upsilon2: WilsonInterval,
    pub mean_source_test_error: f64,
    /// Mean observed QBER over trials that reached parameter estimation
    /// with a non-empty X-basis sample.
    pub mean_qber: f64,
    pub qber_samples: u64,
    pub key_mismatches: u64,
}

/// Runs seeded trials in parallel and estimates the event probabilities
/// Pr(Ω) and Pr(Ω ∧ Υ″) as frequencies with 99% Wilson intervals. Υ″ is
/// evaluated from the true X-basis mismatch registers C₁ⁿ.
pub fn estimate_event_probs(
    scenario: &Scenario,
    trials: u64,
    master_seed: u64,
) -> Result<(EventProbs, ProbSummary)> {
    if trials == 0 {
        return Err(ProtocolError::BadParams("trials must be >= 1".into()));
    }
    scenario.validate()?;
    let e = scenario.params.e;
    struct TrialStats {
        omega: bool,
        upsilon2: bool,
        pe_abort: bool,
        ec_fail: bool,
        source_test_error: f64,
        qber: Option<f64>,
        key_mismatch: bool,
    }
    let per_trial: Vec<TrialStats> = (0..trials)
        .into_par_iter()
        .map(|idx| {
            let record = run_trial(scenario, master_seed, idx)
                .expect("scenario validated before the batch");
            let omega = !record.aborted_source_test;
            TrialStats {
                omega,
                upsilon2: omega && record.upsilon2(e),
                pe_abort: record.aborted_pe,
                ec_fail: omega && !record.ec_verified,
                source_test_error: record.source_test_error,
                qber: (omega && !record.sifted_x.is_empty()).then_some(record.qber_observed),
                key_mismatch: !record.aborted() && record.key_alice != record.key_bob,
            }
        })
        .collect();

    let mut omega_count = 0u64;
    let mut joint_count = 0u64;
    let mut pe_aborts = 0u64;
    let mut ec_failures = 0u64;
    let mut src_err_sum = 0.0;
    let mut qber_sum = 0.0;
    let mut qber_samples = 0u64;
    let mut key_mismatches = 0u64;
    for stats in &per_trial {
        omega_count += u64::from(stats.omega);
        joint_count += u64::from(stats.upsilon2);
        pe_aborts += u64::from(stats.pe_abort);
        ec_failures += u64::from(stats.ec_fail);
        src_err_sum += stats.source_test_error;
        if let Some(q) = stats.qber {
            qber_sum += q;
            qber_samples += 1;
        }
        key_mismatches += u64::from(stats.key_mismatch);
    }
    let p_omega = omega_count as f64 / trials as f64;
    let p_joint = joint_count as f64 / trials as f64;
    let probs = EventProbs {
        p_omega,
        p_omega_and_upsilon2: p_joint,
        p_omega_im: p_omega,
    };
    let summary = ProbSummary {
        trials,
        master_seed,
        source_test_aborts: trials - omega_count,
        pe_aborts,
        ec_failures,
        omega_count,
        omega_and_upsilon2_count: joint_count,
        wilson_omega: wilson_99(omega_count, trials),
        wilson_omega_and_upsilon2: wilson_99(joint_count, trials),
        mean_source_test_error: src_err_sum / trials as f64,
        mean_qber: if qber_samples > 0 {
            qber_sum / qber_samples as f64
        } else {
            0.0
        },
        qber_samples,
        key_mismatches,
    };
    Ok((probs, summary))
}
