//! BB84 quantum key distribution with a randomly tested source: executable
//! protocols, finite-key security bounds, and the brute-force oracles that
//! validate them at desk scale.
//!
//! The crate is organised around five modules:
//!
//! - [`qmath`]: exact linear algebra for small density operators and the
//!   distance/divergence toolkit (trace distance, fidelity, max-relative
//!   entropy, sandwiched Rényi divergences, hypothesis-testing relative
//!   entropy).
//! - [`sampling`]: classical random-subset sampling strategies: relative
//!   weights, δ-correct sets, exact worst-case error by enumeration, Monte
//!   Carlo estimation, and verification against the Hoeffding tail bound.
//! - [`bounds`]: every scalar formula of the security analysis, from the
//!   sampling error probabilities up to the assembled smooth min-entropy
//!   lower bound and its key-length deduction.
//! - [`protocol`]: executable BB84 and source-test protocols with pluggable
//!   source, channel, and measurement models; produces trial records and
//!   Monte Carlo estimates of the event probabilities the bounds consume.
//! - [`optimizer`]: derivative-free search over protocol parameters to
//!   maximise the finite-key rate, and rate-vs-n curve generation.
//!
//! All logarithms and exponentials are base 2 unless a function documents
//! otherwise. Every randomised routine takes an explicit seed and is
//! reproducible bit-for-bit.
//!
//! ```
//! use srckey_core::bounds::{hmin_lower_bound, BoundInputs, EventProbs, ProtocolParams};
//!
//! let params = ProtocolParams {
//!     n: 100_000_000_000,
//!     m: 10_000_000_000,
//!     mu: 0.05,
//!     e: 0.02,
//!     eps_src: 0.005,
//!     delta: 0.005,
//!     eps_prime: 1e-6,
//!     eps_m: 0.0,
//!     xi: 0.0,
//!     alphabet_size: 2,
//! };
//! let probs = EventProbs {
//!     p_omega: 0.9,
//!     p_omega_and_upsilon2: 0.9,
//!     p_omega_im: 0.9,
//! };
//! let report = hmin_lower_bound(&BoundInputs::new(&params, &probs, 0.0));
//! assert!(report.valid);
//! assert!(report.hmin_bound.is_some());
//! ```

pub mod bounds;
pub mod optimizer;
pub mod protocol;
pub mod qmath;
pub mod sampling;
pub mod stats;
