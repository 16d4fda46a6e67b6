//! Derivative-free search over protocol/analysis parameters maximising the
//! finite-key rate, plus rate-vs-n curve generation.
//!
//! The objective is the net extractable entropy per BB84 round,
//! (hmin_bound − 2 log(1/ε_sec))/n, without the clamp-to-zero applied to
//! key lengths: negative values mean no key at that size but still order
//! candidate parameters, so the search is not blind on the zero-key
//! plateau. The search is a coarse grid over the free axes followed by
//! three rounds of coordinate descent with steps shrinking ×0.25 per
//! round. Event probabilities are held fixed during optimisation (assumed
//! or pre-simulated); the search never re-simulates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{BoundInputs, EventProbs, HoeffdingBase, ProtocolParams, SecurityReport};
use crate::protocol::EcConfig;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("axis {name}: {reason}")]
    BadAxis { name: &'static str, reason: String },
    #[error("fixed input {name} = {value} outside {range}")]
    BadFixed {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("grid too large: {0} points (max {1})")]
    GridTooLarge(usize, usize),
    #[error("n_values must be ascending and non-empty")]
    BadNValues,
}

type Result<T> = std::result::Result<T, OptimizerError>;

/// Largest grid the searcher will sweep in one call.
pub const MAX_GRID_POINTS: usize = 500_000;

const REFINE_ROUNDS: usize = 3;
const STEP_SHRINK: f64 = 0.25;

/// One search axis: an inclusive range scanned at `points` equally spaced
/// values. A degenerate axis (lo == hi) is pinned and skipped by the
/// refinement; a free axis needs at least two points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl AxisRange {
    pub fn fixed(value: f64) -> Self {
        Self {
            lo: value,
            hi: value,
            points: 1,
        }
    }

    pub fn is_free(&self) -> bool {
        self.lo < self.hi
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() || self.lo > self.hi {
            return Err(OptimizerError::BadAxis {
                name,
                reason: format!("invalid range [{}, {}]", self.lo, self.hi),
            });
        }
        if self.is_free() && self.points < 2 {
            return Err(OptimizerError::BadAxis {
                name,
                reason: "free axis needs at least 2 grid points".into(),
            });
        }
        if !self.is_free() && self.points != 1 {
            return Err(OptimizerError::BadAxis {
                name,
                reason: "pinned axis must have exactly 1 grid point".into(),
            });
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if !self.is_free() {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| self.lo + step * i as f64)
            .collect()
    }

    pub fn step(&self) -> f64 {
        if self.is_free() {
            (self.hi - self.lo) / (self.points - 1) as f64
        } else {
            0.0
        }
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// Inputs held fixed during the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedInputs {
    /// BB84 rounds.
    pub n: u64,
    /// Source-test error threshold.
    pub eps_src: f64,
    /// Smoothing budget ε′.
    pub eps_prime: f64,
    /// Channel QBER assumed by the error-correction leakage model.
    pub assumed_qber: f64,
    /// Event probabilities (assumed or pre-simulated).
    pub probs: EventProbs,
    /// Security target for the key-length deduction.
    pub eps_sec: f64,
    pub ec: EcConfig,
    pub base: HoeffdingBase,
}

/// The search space: free or pinned axes for μ, δ, e, the m/n ratio and
/// the smoothing-split weight s (ε₁ = s·ε′, ε₂ = ε₃ = (1−s)·ε′/4; s = 1/2
/// reproduces the default split).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub mu: AxisRange,
    pub delta: AxisRange,
    pub e: AxisRange,
    pub m_ratio: AxisRange,
    pub split_s: AxisRange,
    pub fixed: FixedInputs,
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        self.mu.validate("mu")?;
        self.delta.validate("delta")?;
        self.e.validate("e")?;
        self.m_ratio.validate("m_ratio")?;
        self.split_s.validate("split_s")?;
        for (name, axis, lo_ok, hi_ok) in [
            ("mu", &self.mu, self.mu.lo > 0.0, self.mu.hi < 1.0),
            (
                "delta",
                &self.delta,
                self.delta.lo > 0.0,
                self.delta.hi < 1.0,
            ),
            ("e", &self.e, self.e.lo > 0.0, self.e.hi < 0.5),
            (
                "m_ratio",
                &self.m_ratio,
                self.m_ratio.lo > 0.0,
                self.m_ratio.hi.is_finite(),
            ),
            (
                "split_s",
                &self.split_s,
                self.split_s.lo > 0.0,
                self.split_s.hi < 1.0,
            ),
        ] {
            if !(lo_ok && hi_ok) {
                return Err(OptimizerError::BadAxis {
                    name,
                    reason: format!(
                        "range [{}, {}] leaves the admissible region",
                        axis.lo, axis.hi
                    ),
                });
            }
        }
        if self.fixed.n < 1 {
            return Err(OptimizerError::BadFixed {
                name: "n",
                value: self.fixed.n as f64,
                range: "[1, inf)",
            });
        }
        if !(0.0..1.0).contains(&self.fixed.eps_src) {
            return Err(OptimizerError::BadFixed {
                name: "eps_src",
                value: self.fixed.eps_src,
                range: "[0, 1)",
            });
        }
        if !(self.fixed.assumed_qber >= 0.0 && self.fixed.assumed_qber < 0.5) {
            return Err(OptimizerError::BadFixed {
                name: "assumed_qber",
                value: self.fixed.assumed_qber,
                range: "[0, 1/2)",
            });
        }
        if self.e.lo < self.fixed.assumed_qber {
            return Err(OptimizerError::BadAxis {
                name: "e",
                reason: format!(
                    "tolerance range starts below the assumed channel QBER {}",
                    self.fixed.assumed_qber
                ),
            });
        }
        let grid: usize = [
            self.mu.points,
            self.delta.points,
            self.e.points,
            self.m_ratio.points,
            self.split_s.points,
        ]
        .iter()
        .product();
        if grid > MAX_GRID_POINTS {
            return Err(OptimizerError::GridTooLarge(grid, MAX_GRID_POINTS));
        }
        Ok(())
    }
}

/// A point in the search space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub mu: f64,
    pub delta: f64,
    pub e: f64,
    pub m_ratio: f64,
    pub split_s: f64,
}

impl Candidate {
    fn axis(&self, k: usize) -> f64 {
        match k {
            0 => self.mu,
            1 => self.delta,
            2 => self.e,
            3 => self.m_ratio,
            _ => self.split_s,
        }
    }

    fn with_axis(mut self, k: usize, v: f64) -> Self {
        match k {
            0 => self.mu = v,
            1 => self.delta = v,
            2 => self.e = v,
            3 => self.m_ratio = v,
            _ => self.split_s = v,
        }
        self
    }
}

/// Search phase an evaluation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Grid,
    Refine,
    Final,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Phase::Grid => "grid",
            Phase::Refine => "refine",
            Phase::Final => "final",
        };
        f.write_str(s)
    }
}

/// One evaluated point of the search, kept for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub candidate: Candidate,
    pub phase: Phase,
    pub valid: bool,
    /// Net entropy per round, (hmin − 2 log(1/ε_sec))/n; `None` when the
    /// point is invalid or the bound is undefined there.
    pub objective: Option<f64>,
    pub key_length: Option<u64>,
    pub hmin_bound: Option<f64>,
    pub dominant_penalty: Option<String>,
}

/// The winning point with its full report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestPoint {
    pub candidate: Candidate,
    pub params: ProtocolParams,
    pub report: SecurityReport,
    /// Net entropy per round at the optimum.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOutcome {
    /// `None` means no feasible parameters exist in the space.
    pub best: Option<BestPoint>,
    /// Every evaluated point, grid then refinement, in evaluation order.
    pub trace: Vec<Evaluation>,
    /// Best objective after the grid phase and after each refinement round.
    pub best_by_round: Vec<f64>,
}

/// Assembles protocol parameters and the EC-leakage model for a candidate:
/// the transcript is ⌈efficiency·n·((1−μ)²+μ²)·h(assumed QBER)⌉ plus the
/// verification bits.
pub fn assemble(space: &SearchSpace, c: &Candidate) -> (ProtocolParams, f64) {
    let f = &space.fixed;
    let params = ProtocolParams {
        n: f.n,
        m: ((c.m_ratio * f.n as f64).ceil() as u64).max(1),
        mu: c.mu,
        e: c.e,
        eps_src: f.eps_src,
        delta: c.delta,
        eps_prime: f.eps_prime,
        eps_m: 0.0,
        xi: 0.0,
        alphabet_size: 2,
    };
    let sift = (1.0 - c.mu) * (1.0 - c.mu) + c.mu * c.mu;
    let h_q = crate::bounds::binary_entropy(f.assumed_qber).expect("validated");
    let transcript = (f.ec.efficiency * f.n as f64 * sift * h_q).ceil() + f.ec.verify_bits as f64;
    (params, transcript)
}

fn evaluate(
    space: &SearchSpace,
    c: &Candidate,
    phase: Phase,
) -> (Evaluation, SecurityReport, ProtocolParams) {
    let (params, transcript) = assemble(space, c);
    let split = crate::bounds::EpsilonSplit {
        eps1: c.split_s * space.fixed.eps_prime,
        eps2: (1.0 - c.split_s) * space.fixed.eps_prime / 4.0,
        eps3: (1.0 - c.split_s) * space.fixed.eps_prime / 4.0,
    };
    let report = crate::bounds::hmin_lower_bound(&BoundInputs {
        params: &params,
        probs: &space.fixed.probs,
        transcript_bits: transcript,
        split: Some(split),
        base: space.fixed.base,
        eps_sec: space.fixed.eps_sec,
    });
    let objective = if report.valid {
        report.hmin_bound.map(|h| {
            (h - 2.0 * -(space.fixed.eps_sec.log2())) / space.fixed.n as f64
        })
    } else {
        None
    };
    let ev = Evaluation {
        candidate: *c,
        phase,
        valid: report.valid,
        objective,
        key_length: report.key_length,
        hmin_bound: report.hmin_bound,
        dominant_penalty: report.penalties.map(|p| p.dominant().to_string()),
    };
    (ev, report, params)
}

fn objective_of(ev: &Evaluation) -> f64 {
    ev.objective.unwrap_or(f64::NEG_INFINITY)
}

/// Coarse grid search followed by coordinate-descent refinement.
/// Deterministic given the space; returns every evaluated point.
pub fn optimize_rate(space: &SearchSpace) -> Result<OptimizeOutcome> {
    space.validate()?;
    let axes = [
        space.mu.values(),
        space.delta.values(),
        space.e.values(),
        space.m_ratio.values(),
        space.split_s.values(),
    ];
    let mut grid: Vec<Candidate> = Vec::new();
    for &mu in &axes[0] {
        for &delta in &axes[1] {
            for &e in &axes[2] {
                for &m_ratio in &axes[3] {
                    for &split_s in &axes[4] {
                        grid.push(Candidate {
                            mu,
                            delta,
                            e,
                            m_ratio,
                            split_s,
                        });
                    }
                }
            }
        }
    }
    let mut trace: Vec<Evaluation> = grid
        .par_iter()
        .map(|c| evaluate(space, c, Phase::Grid).0)
        .collect();

    let mut best_idx: Option<usize> = None;
    for (i, ev) in trace.iter().enumerate() {
        let better = match best_idx {
            None => objective_of(ev) > f64::NEG_INFINITY,
            Some(b) => objective_of(ev) > objective_of(&trace[b]),
        };
        if better {
            best_idx = Some(i);
        }
    }
    let Some(best_idx) = best_idx else {
        return Ok(OptimizeOutcome {
            best: None,
            trace,
            best_by_round: Vec::new(),
        });
    };

    let mut current = trace[best_idx].candidate;
    let mut current_obj = objective_of(&trace[best_idx]);
    let mut best_by_round = vec![current_obj];

    let ranges = [
        space.mu,
        space.delta,
        space.e,
        space.m_ratio,
        space.split_s,
    ];
    let mut steps: Vec<f64> = ranges.iter().map(|r| r.step()).collect();
    for _round in 0..REFINE_ROUNDS {
        for (k, range) in ranges.iter().enumerate() {
            if !range.is_free() || steps[k] == 0.0 {
                continue;
            }
            for dir in [-1.0, 1.0] {
                let v = range.clamp(current.axis(k) + dir * steps[k]);
                if v == current.axis(k) {
                    continue;
                }
                let cand = current.with_axis(k, v);
                let (ev, _, _) = evaluate(space, &cand, Phase::Refine);
                let obj = objective_of(&ev);
                trace.push(ev);
                if obj > current_obj {
                    current = cand;
                    current_obj = obj;
                }
            }
        }
        best_by_round.push(current_obj);
        for s in steps.iter_mut() {
            *s *= STEP_SHRINK;
        }
    }

    let (ev, report, params) = evaluate(space, &current, Phase::Final);
    debug_assert!(ev.valid);
    let best = BestPoint {
        candidate: current,
        objective: current_obj,
        params,
        report,
    };
    Ok(OptimizeOutcome {
        best: Some(best),
        trace,
        best_by_round,
    })
}

/// One row of a rate-vs-n table. `best_rate` is the optimiser objective
/// (net entropy per round; negative means no extractable key at that n),
/// `key_length` the clamped extractable bits at the optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub n: u64,
    pub best_rate: Option<f64>,
    pub key_length: Option<u64>,
    pub dominant_penalty: Option<String>,
}

/// Optimises per n and names the largest penalty group at each optimum.
pub fn rate_curve(space: &SearchSpace, n_values: &[u64]) -> Result<Vec<CurveRow>> {
    if n_values.is_empty() || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(OptimizerError::BadNValues);
    }
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let mut sp = space.clone();
        sp.fixed.n = n;
        let outcome = optimize_rate(&sp)?;
        let row = match outcome.best {
            Some(best) => CurveRow {
                n,
                best_rate: Some(best.objective),
                key_length: best.report.key_length,
                dominant_penalty: best.report.penalties.map(|p| p.dominant().to_string()),
            },
            None => CurveRow {
                n,
                best_rate: None,
                key_length: None,
                dominant_penalty: None,
            },
        };
        rows.push(row);
    }
    Ok(rows)
}
