//! Classical random-subset sampling strategies: relative weights, δ-correct
//! sets, exact worst-case error probabilities by enumeration, Monte Carlo
//! estimation, and verification against the Hoeffding tail bound.
//!
//! The strategy implemented here draws a uniform size-m subset Γ of the
//! n+m positions, estimates the relative weight of the unsampled part by
//! the observed relative weight of the sample, and is δ-correct on a string
//! when |ω(rest) − ω(sample)| < δ (strict, as displayed in the defining
//! set). Seeded estimators and non-uniform subset distributions are out of
//! scope.
//!
//! Membership comparisons are carried out in exact integer arithmetic on
//! the rational |ω(rest) − ω(sample)| against the exact binary value of the
//! `f64` threshold δ, so enumeration, Monte Carlo and the direct membership
//! test can never disagree on ties.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{wilson_99, WilsonInterval};

/// Tractability guard for exhaustive enumeration: total string length.
pub const MAX_EXACT_TOTAL: usize = 20;
/// Tractability guard for exhaustive enumeration: number of subsets.
pub const MAX_EXACT_SUBSETS: u128 = 2_000_000;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("sample size {m} must satisfy 1 <= m < total {total}")]
    BadStrategy { total: usize, m: usize },
    #[error("empty string")]
    EmptyString,
    #[error("string length {got} does not match strategy total {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("malformed subset: {0}")]
    MalformedSubset(String),
    #[error("delta = {0} must be positive and finite")]
    BadDelta(f64),
    #[error("enumeration guard exceeded: total {total} (max {max_total}) with {subsets} subsets (max {max_subsets})")]
    GuardExceeded {
        total: usize,
        max_total: usize,
        subsets: u128,
        max_subsets: u128,
    },
    #[error("trials must be >= 1")]
    NoTrials,
    #[error("weight class {0} exceeds string length {1}")]
    BadWeightClass(usize, usize),
}

type Result<T> = std::result::Result<T, SamplingError>;

/// A sampling strategy over strings of length `total`: test a uniform
/// random subset of `sample_size` positions and estimate the relative
/// weight of the remaining positions by the sample's relative weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingStrategy {
    total: usize,
    sample_size: usize,
}

impl SamplingStrategy {
    pub fn new(total: usize, sample_size: usize) -> Result<Self> {
        if sample_size == 0 || sample_size >= total {
            return Err(SamplingError::BadStrategy {
                total,
                m: sample_size,
            });
        }
        Ok(Self { total, sample_size })
    }

    /// n + m, the full string length.
    pub fn total(&self) -> usize {
        self.total
    }

    /// m, the number of sampled positions.
    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    /// n, the number of unsampled positions the estimate refers to.
    pub fn remaining(&self) -> usize {
        self.total - self.sample_size
    }

    /// The estimator f(γ, a_γ): the observed relative weight of the sample.
    pub fn estimate(&self, sample_symbols: &[u8]) -> f64 {
        let nz = sample_symbols.iter().filter(|&&s| s != 0).count();
        nz as f64 / sample_symbols.len() as f64
    }
}

/// A finite-alphabet string; only whether each symbol is zero matters for
/// relative weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightString {
    symbols: Vec<u8>,
}

impl WeightString {
    pub fn new(symbols: Vec<u8>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(SamplingError::EmptyString);
        }
        Ok(Self { symbols })
    }

    /// Binary string from the low `len` bits of `bits` (bit i = position i).
    pub fn from_bits(bits: usize, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(SamplingError::EmptyString);
        }
        Ok(Self {
            symbols: (0..len).map(|i| ((bits >> i) & 1) as u8).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn count_nonzero(&self) -> usize {
        self.symbols.iter().filter(|&&s| s != 0).count()
    }
}

/// Relative weight ω(x) = |{i : x_i ≠ 0}| / len.
pub fn relative_weight(s: &WeightString) -> f64 {
    s.count_nonzero() as f64 / s.len() as f64
}

/// Exact test of |num/den| >= delta for integer num, den > 0, with delta
/// taken at its exact binary value. Falls back to f64 only for exponents
/// far outside the representable comparison range.
fn ratio_at_least(num_abs: u64, den: u64, delta: f64) -> bool {
    debug_assert!(den > 0);
    if delta <= 0.0 || delta.is_nan() {
        return true;
    }
    if !delta.is_finite() {
        return false;
    }
    let bits = delta.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if exp_field == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_field - 1075)
    };
    // num/den >= mant * 2^exp  <=>  num * 2^-exp >= mant * den   (exp <= 0)
    //                          <=>  num >= mant * den * 2^exp    (exp > 0)
    if (-100..=60).contains(&exp) {
        if exp <= 0 {
            let lhs = (num_abs as u128) << (-exp) as u32;
            let rhs = mant as u128 * den as u128;
            lhs >= rhs
        } else {
            let lhs = num_abs as u128;
            let rhs = (mant as u128 * den as u128) << exp as u32;
            lhs >= rhs
        }
    } else {
        num_abs as f64 / den as f64 >= delta
    }
}

/// Membership in the δ-correct set B^δ_γ: strict |ω(a_rest) − ω(a_γ)| < δ.
///
/// The subset must be a sorted list of distinct indices of size m.
pub fn in_correct_set(
    s: &WeightString,
    gamma: &[usize],
    delta: f64,
    strategy: &SamplingStrategy,
) -> Result<bool> {
    if s.len() != strategy.total() {
        return Err(SamplingError::LengthMismatch {
            got: s.len(),
            want: strategy.total(),
        });
    }
    if gamma.len() != strategy.sample_size() {
        return Err(SamplingError::MalformedSubset(format!(
            "size {} != m {}",
            gamma.len(),
            strategy.sample_size()
        )));
    }
    if delta <= 0.0 || delta.is_nan() {
        return Err(SamplingError::BadDelta(delta));
    }
    let mut prev: Option<usize> = None;
    let mut sample_nz = 0usize;
    for &i in gamma {
        if i >= s.len() {
            return Err(SamplingError::MalformedSubset(format!(
                "index {i} out of range"
            )));
        }
        if let Some(p) = prev {
            if i <= p {
                return Err(SamplingError::MalformedSubset(
                    "indices must be strictly increasing".into(),
                ));
            }
        }
        prev = Some(i);
        if s.symbols()[i] != 0 {
            sample_nz += 1;
        }
    }
    let total_nz = s.count_nonzero();
    Ok(!weight_gap_outside(
        total_nz,
        sample_nz,
        strategy.remaining(),
        strategy.sample_size(),
        delta,
    ))
}

/// True when |(k−j)/n − j/m| >= δ for a string of weight k whose sample
/// holds j non-zero symbols; evaluated exactly.
fn weight_gap_outside(k: usize, j: usize, n: usize, m: usize, delta: f64) -> bool {
    // (k−j)/n − j/m = ((k−j)m − jn) / (nm)
    let diff = (k - j) as i64 * m as i64 - j as i64 * n as i64;
    ratio_at_least(diff.unsigned_abs(), (n * m) as u64, delta)
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Exact error data for one weight class: the number of size-m subsets
/// giving a δ-incorrect estimate, out of C(total, m).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightClassError {
    pub weight: usize,
    pub bad_subsets: u128,
    pub total_subsets: u128,
}

impl WeightClassError {
    pub fn probability(&self) -> f64 {
        self.bad_subsets as f64 / self.total_subsets as f64
    }
}

/// Exact worst-case classical error, with the per-weight-class breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactError {
    pub max_error: f64,
    pub worst_weight: usize,
    pub bad_subsets: u128,
    pub total_subsets: u128,
    pub per_class: Vec<WeightClassError>,
}

/// Exact maximum error probability max_a Pr_Γ[a ∉ B^δ_Γ] by exhausting the
/// weight classes: under the uniform-subset distribution with the
/// relative-weight estimator, the error probability of a string depends
/// only on its weight. Guarded to total ≤ 20 and C(total, m) ≤ 2·10⁶.
pub fn exact_classical_error(strategy: &SamplingStrategy, delta: f64) -> Result<ExactError> {
    if delta <= 0.0 || delta.is_nan() {
        return Err(SamplingError::BadDelta(delta));
    }
    let total = strategy.total();
    let m = strategy.sample_size();
    let n = strategy.remaining();
    let subsets = binomial(total, m);
    if total > MAX_EXACT_TOTAL || subsets > MAX_EXACT_SUBSETS {
        return Err(SamplingError::GuardExceeded {
            total,
            max_total: MAX_EXACT_TOTAL,
            subsets,
            max_subsets: MAX_EXACT_SUBSETS,
        });
    }
    let mut per_class = Vec::with_capacity(total + 1);
    for k in 0..=total {
        let mut bad: u128 = 0;
        let j_lo = m.saturating_sub(total - k);
        let j_hi = m.min(k);
        for j in j_lo..=j_hi {
            if weight_gap_outside(k, j, n, m, delta) {
                bad += binomial(k, j) * binomial(total - k, m - j);
            }
        }
        per_class.push(WeightClassError {
            weight: k,
            bad_subsets: bad,
            total_subsets: subsets,
        });
    }
    let worst = per_class
        .iter()
        .max_by(|a, b| a.bad_subsets.cmp(&b.bad_subsets))
        .expect("at least one weight class");
    Ok(ExactError {
        max_error: worst.probability(),
        worst_weight: worst.weight,
        bad_subsets: worst.bad_subsets,
        total_subsets: worst.total_subsets,
        per_class: per_class.clone(),
    })
}

/// Uniform random size-m subset of 0..total by partial Fisher–Yates,
/// returned as a sorted index list.
pub fn subset_sample<R: Rng + ?Sized>(total: usize, m: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..total).collect();
    for i in 0..m {
        let j = rng.random_range(i..total);
        idx.swap(i, j);
    }
    idx.truncate(m);
    idx.sort_unstable();
    idx
}

/// Monte Carlo estimate of the error probability Pr[a ∉ B^δ] for a string
/// in a fixed weight class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub wilson_99: WilsonInterval,
    pub trials: u64,
    pub bad: u64,
}

/// Estimates the per-weight-class error probability by sampling subsets;
/// reproducible from the seed, with a 99% Wilson score interval.
pub fn mc_classical_error(
    strategy: &SamplingStrategy,
    delta: f64,
    weight_class: usize,
    trials: u64,
    rng_seed: u64,
) -> Result<McEstimate> {
    use rand::SeedableRng;
    if trials == 0 {
        return Err(SamplingError::NoTrials);
    }
    if weight_class > strategy.total() {
        return Err(SamplingError::BadWeightClass(
            weight_class,
            strategy.total(),
        ));
    }
    if delta <= 0.0 || delta.is_nan() {
        return Err(SamplingError::BadDelta(delta));
    }
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(rng_seed);
    let n = strategy.remaining();
    let m = strategy.sample_size();
    let mut bad = 0u64;
    for _ in 0..trials {
        // Canonical representative: non-zero symbols at positions 0..k.
        let gamma = subset_sample(strategy.total(), m, &mut rng);
        let j = gamma.iter().filter(|&&i| i < weight_class).count();
        if weight_gap_outside(weight_class, j, n, m, delta) {
            bad += 1;
        }
    }
    Ok(McEstimate {
        estimate: bad as f64 / trials as f64,
        wilson_99: wilson_99(bad, trials),
        trials,
        bad,
    })
}

/// Comparison of the exact classical error against the Hoeffding-style tail
/// bound 2·exp(−nδ²m/(n+2)), evaluated with both base-2 and base-e
/// exponentials (both clamped to 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingReport {
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub exact: f64,
    pub bound_base2: f64,
    pub bound_basee: f64,
    pub pass: bool,
    pub margin_base2: f64,
    pub margin_basee: f64,
}

impl HoeffdingReport {
    /// The validation row emitted on the JSON interface.
    pub fn json_row(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "m": self.m,
            "delta": self.delta,
            "exact": self.exact,
            "bound_base2": self.bound_base2,
            "bound_basee": self.bound_basee,
            "pass": self.pass,
        })
    }
}

/// Verifies exact ≤ bound for both exponential bases. A failure here would
/// falsify the implementation, not the bound.
pub fn check_hoeffding(strategy: &SamplingStrategy, delta: f64) -> Result<HoeffdingReport> {
    let exact = exact_classical_error(strategy, delta)?;
    let n = strategy.remaining() as f64;
    let m = strategy.sample_size() as f64;
    let t = n * delta * delta * m / (n + 2.0);
    let bound_base2 = (2.0 * (-t).exp2()).min(1.0);
    let bound_basee = (2.0 * (-t).exp()).min(1.0);
    let pass = exact.max_error <= bound_base2 && exact.max_error <= bound_basee;
    Ok(HoeffdingReport {
        n: strategy.remaining(),
        m: strategy.sample_size(),
        delta,
        exact: exact.max_error,
        bound_base2,
        bound_basee,
        pass,
        margin_base2: bound_base2 - exact.max_error,
        margin_basee: bound_basee - exact.max_error,
    })
}

/// Exhaustive per-string error counts over all binary strings of the given
/// length, serving as the independent oracle for the weight-class
/// reduction. Only
/// feasible for small totals.
pub fn exact_error_by_full_enumeration(
    strategy: &SamplingStrategy,
    delta: f64,
) -> Result<Vec<WeightClassError>> {
    let total = strategy.total();
    if total > 16 {
        return Err(SamplingError::GuardExceeded {
            total,
            max_total: 16,
            subsets: binomial(total, strategy.sample_size()),
            max_subsets: MAX_EXACT_SUBSETS,
        });
    }
    if delta <= 0.0 || delta.is_nan() {
        return Err(SamplingError::BadDelta(delta));
    }
    let m = strategy.sample_size();
    let n = strategy.remaining();
    let subsets = enumerate_subsets(total, m);
    // Track min and max per class: the permutation symmetry claim is that
    // every string of one weight has the same bad-subset count.
    let mut lo: Vec<Option<u128>> = vec![None; total + 1];
    let mut hi: Vec<u128> = vec![0; total + 1];
    for bits in 0usize..(1 << total) {
        let k = bits.count_ones() as usize;
        let mut bad: u128 = 0;
        for gamma in &subsets {
            let j = gamma.iter().filter(|&&i| (bits >> i) & 1 == 1).count();
            if weight_gap_outside(k, j, n, m, delta) {
                bad += 1;
            }
        }
        lo[k] = Some(lo[k].map_or(bad, |v| v.min(bad)));
        hi[k] = hi[k].max(bad);
    }
    let denom = binomial(total, m);
    let mut out = Vec::with_capacity(total + 1);
    for (weight, (lo_k, hi_k)) in lo.into_iter().zip(hi).enumerate() {
        let lo_k = lo_k.expect("every weight class is populated");
        if lo_k != hi_k {
            return Err(SamplingError::MalformedSubset(format!(
                "strings of weight {weight} disagree on their error count ({lo_k} vs {hi_k})"
            )));
        }
        out.push(WeightClassError {
            weight,
            bad_subsets: hi_k,
            total_subsets: denom,
        });
    }
    Ok(out)
}

fn enumerate_subsets(total: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..m).collect();
    loop {
        out.push(current.clone());
        // next lexicographic combination
        let mut i = m;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] != i + total - m {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        current[i] += 1;
        for j in i + 1..m {
            current[j] = current[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn strat(total: usize, m: usize) -> SamplingStrategy {
        SamplingStrategy::new(total, m).unwrap()
    }

    #[test]
    fn relative_weight_examples() {
        let all_zero = WeightString::new(vec![0; 7]).unwrap();
        assert_eq!(relative_weight(&all_zero), 0.0);
        let all_one = WeightString::new(vec![1; 4]).unwrap();
        assert_eq!(relative_weight(&all_one), 1.0);
        let s = WeightString::new(vec![0, 1, 0, 1, 0]).unwrap();
        assert_eq!(relative_weight(&s), 0.4);
        assert!(WeightString::new(vec![]).is_err());
    }

    #[test]
    fn correct_set_homogeneous_string() {
        let s = WeightString::new(vec![0; 6]).unwrap();
        let st = strat(6, 2);
        for gamma in enumerate_subsets(6, 2) {
            assert!(in_correct_set(&s, &gamma, 1e-9, &st).unwrap());
        }
    }

    #[test]
    fn correct_set_threshold_is_strict() {
        // s = 110000, sample {0,1}: estimate 1, rest weight 0.
        let s = WeightString::new(vec![1, 1, 0, 0, 0, 0]).unwrap();
        let st = strat(6, 2);
        let gamma = [0usize, 1];
        assert!(!in_correct_set(&s, &gamma, 1.0, &st).unwrap());
        assert!(!in_correct_set(&s, &gamma, 0.5, &st).unwrap());
        assert!(in_correct_set(&s, &gamma, 1.0000001, &st).unwrap());
    }

    #[test]
    fn correct_set_rejects_malformed_subsets() {
        let s = WeightString::new(vec![0; 6]).unwrap();
        let st = strat(6, 2);
        assert!(in_correct_set(&s, &[0], 0.5, &st).is_err());
        assert!(in_correct_set(&s, &[1, 0], 0.5, &st).is_err());
        assert!(in_correct_set(&s, &[0, 6], 0.5, &st).is_err());
        assert!(in_correct_set(&s, &[2, 2], 0.5, &st).is_err());
    }

    #[test]
    fn exact_error_zero_for_delta_above_one() {
        let e = exact_classical_error(&strat(8, 3), 1.5).unwrap();
        assert_eq!(e.max_error, 0.0);
        assert_eq!(e.bad_subsets, 0);
    }

    #[test]
    fn exact_error_small_case_by_hand() {
        // total 4, m 2, δ 0.3: class error counts over C(4,2)=6 subsets are
        // k=0: 0, k=1: 6, k=2: 2, k=3: 6, k=4: 0.
        let e = exact_classical_error(&strat(4, 2), 0.3).unwrap();
        let bad: Vec<u128> = e.per_class.iter().map(|c| c.bad_subsets).collect();
        assert_eq!(bad, vec![0, 6, 2, 6, 0]);
        assert_eq!(e.max_error, 1.0);
        assert_eq!(e.total_subsets, 6);
    }

    #[test]
    fn exact_error_guard_trips() {
        assert!(exact_classical_error(&strat(21, 2), 0.1).is_err());
    }

    #[test]
    fn weight_class_reduction_matches_full_enumeration_small() {
        for (total, m) in [(6usize, 2usize), (8, 3), (10, 4)] {
            for delta in [0.1, 0.25, 0.4] {
                let st = strat(total, m);
                let reduced = exact_classical_error(&st, delta).unwrap().per_class;
                let full = exact_error_by_full_enumeration(&st, delta).unwrap();
                assert_eq!(reduced, full, "total={total} m={m} delta={delta}");
            }
        }
    }

    #[test]
    fn mc_estimate_brackets_exact_value() {
        let st = strat(12, 4);
        let delta = 0.25;
        let exact = exact_classical_error(&st, delta).unwrap();
        let mut misses = 0;
        for seed in 0..30u64 {
            let k = 1 + (seed as usize % (st.total() - 1));
            let mc = mc_classical_error(&st, delta, k, 4000, 1000 + seed).unwrap();
            let truth = exact.per_class[k].probability();
            if !mc.wilson_99.contains(truth) {
                misses += 1;
            }
        }
        assert!(misses <= 1, "{misses} of 30 intervals missed the truth");
    }

    #[test]
    fn mc_interval_shrinks_with_trials() {
        let st = strat(12, 4);
        let a = mc_classical_error(&st, 0.2, 6, 2000, 7).unwrap();
        let b = mc_classical_error(&st, 0.2, 6, 8000, 7).unwrap();
        let ratio = a.wilson_99.width() / b.wilson_99.width();
        assert!((ratio - 2.0).abs() < 0.35, "ratio {ratio}");
    }

    #[test]
    fn mc_trivial_delta_gives_zero() {
        let st = strat(10, 3);
        let mc = mc_classical_error(&st, 1.5, 5, 500, 3).unwrap();
        assert_eq!(mc.estimate, 0.0);
        assert!(mc.wilson_99.hi < 0.03);
    }

    #[test]
    fn mc_is_reproducible_from_seed() {
        let st = strat(14, 5);
        let a = mc_classical_error(&st, 0.15, 7, 1000, 99).unwrap();
        let b = mc_classical_error(&st, 0.15, 7, 1000, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hoeffding_bound_holds_on_small_grid() {
        for total in 4..=16usize {
            for m in 2..=6usize {
                if m >= total {
                    continue;
                }
                for delta in [0.1, 0.2, 0.3] {
                    let r = check_hoeffding(&strat(total, m), delta).unwrap();
                    assert!(r.pass, "total={total} m={m} delta={delta}: {r:?}");
                }
            }
        }
    }

    #[test]
    fn hoeffding_bound_matches_bounds_module_eps_cl() {
        // Same formula lives on the bounds side; compare where the clamp
        // is inactive as well as where it bites.
        for (total, m, delta) in [(16usize, 6usize, 0.9), (12, 4, 0.75), (10, 2, 0.4)] {
            let st = strat(total, m);
            let r = check_hoeffding(&st, delta).unwrap();
            let eps = crate::bounds::eps_cl(st.remaining() as u64, m as u64, delta);
            assert!((r.bound_base2 - eps).abs() < 1e-12);
        }
    }

    #[test]
    fn subset_sample_is_sorted_unique_and_in_range() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for _ in 0..200 {
            let s = subset_sample(17, 6, &mut rng);
            assert_eq!(s.len(), 6);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(*s.last().unwrap() < 17);
        }
    }

    proptest! {
        // Independent re-implementation of the membership test: build the
        // two substrings and compare weights through plain f64 arithmetic.
        #[test]
        fn membership_agrees_with_direct_checker(
            bits in 0usize..(1 << 12),
            m in 1usize..6,
            seed in 0u64..1000,
            delta in 0.01f64..1.2,
        ) {
            use rand::SeedableRng;
            let total = 12;
            let st = strat(total, m);
            let s = WeightString::from_bits(bits, total).unwrap();
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let gamma = subset_sample(total, m, &mut rng);
            let got = in_correct_set(&s, &gamma, delta, &st).unwrap();

            let sample: Vec<u8> = gamma.iter().map(|&i| s.symbols()[i]).collect();
            let rest: Vec<u8> = (0..total)
                .filter(|i| !gamma.contains(i))
                .map(|i| s.symbols()[i])
                .collect();
            let f = st.estimate(&sample);
            let omega = rest.iter().filter(|&&x| x != 0).count() as f64 / rest.len() as f64;
            let direct = (omega - f).abs() < delta;
            // The two can only disagree on exact rational ties, where the
            // integer path is authoritative; everywhere else they agree.
            let diff_exact_tie = ((omega - f).abs() - delta).abs() < 1e-12;
            prop_assert!(got == direct || diff_exact_tie);
        }

        #[test]
        fn exact_error_is_a_probability(total in 5usize..14, m in 2usize..5, delta in 0.05f64..0.9) {
            prop_assume!(m < total);
            let e = exact_classical_error(&strat(total, m), delta).unwrap();
            prop_assert!((0.0..=1.0).contains(&e.max_error));
            for c in &e.per_class {
                prop_assert!(c.bad_subsets <= c.total_subsets);
            }
        }
    }
}
