//! Exact linear algebra for small-dimension quantum states, channels and
//! measurements, plus the distance/divergence toolkit used by the security
//! analysis: trace distance, (generalised) fidelity and purified distance,
//! max-relative entropy, sandwiched Rényi divergences, the classical
//! min-entropy, and the classical hypothesis-testing relative entropy.
//!
//! Conventions:
//! - All logarithms are base 2.
//! - Subnormalised states (trace ≤ 1) are admitted everywhere a state is.
//! - Eigenvalues with absolute value below [`SUPPORT_TOL`] are treated as
//!   zero when deciding supports; support mismatch in a divergence yields
//!   `f64::INFINITY` as a value, never an error.
//! - Smoothing balls and smoothed quantities are *not* computed here; the
//!   bounds pipeline only ever needs the closed-form upper bounds, so the
//!   general semidefinite optimisation is deliberately out of scope.

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

/// Entrywise tolerance for Hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue of a positive semidefinite operator.
pub const PSD_TOL: f64 = 1e-10;
/// Trace slack: trace must lie in (0, 1 + TRACE_TOL] for a state.
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues with |λ| below this are treated as zero for supports.
pub const SUPPORT_TOL: f64 = 1e-10;
/// Largest total dimension `tensor` will build.
pub const TENSOR_DIM_GUARD: usize = 1 << 14;

#[derive(Debug, Error)]
pub enum QmathError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),
    #[error("matrix is not Hermitian (max entrywise deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),
    #[error("trace {0} outside (0, 1]")]
    BadTrace(f64),
    #[error("{name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("expected a qubit (dimension 2), got dimension {0}")]
    NotQubit(usize),
    #[error("distribution has a negative entry ({0:.3e})")]
    NegativeProbability(f64),
    #[error("distribution mass {0} outside (0, 1]")]
    BadMass(f64),
    #[error("distribution is not normalised (sum {0})")]
    NotNormalised(f64),
    #[error("tensor dimension guard exceeded: {0} > {1}")]
    TensorGuard(usize, usize),
    #[error("hypothesis test infeasible: Σ p·Q < 1 for every admissible test")]
    InfeasibleTest,
    #[error("empty input")]
    Empty,
}

type Result<T> = std::result::Result<T, QmathError>;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A subnormalised quantum state: Hermitian, positive semidefinite, with
/// trace in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOp {
    dim: usize,
    matrix: CMat,
}

impl DensityOp {
    /// Validates Hermiticity, positivity and trace before wrapping.
    pub fn new(matrix: CMat) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(QmathError::NotSquare(matrix.nrows(), matrix.ncols()));
        }
        check_hermitian(&matrix)?;
        let eigs = eigh(&matrix);
        let min = eigs.values.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(QmathError::NotPositive(min));
        }
        let tr = matrix.trace().re;
        if !(tr > 0.0 && tr <= 1.0 + TRACE_TOL) {
            return Err(QmathError::BadTrace(tr));
        }
        Ok(Self {
            dim: matrix.nrows(),
            matrix,
        })
    }

    /// Wraps a matrix known to satisfy the invariants (exact constructions,
    /// channel outputs). Debug builds still verify Hermiticity.
    pub(crate) fn new_unchecked(matrix: CMat) -> Self {
        debug_assert!(check_hermitian(&matrix).is_ok());
        Self {
            dim: matrix.nrows(),
            matrix,
        }
    }

    /// Pure state |ψ⟩⟨ψ| from amplitudes; the vector must have unit norm.
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(QmathError::Empty);
        }
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-9 {
            return Err(QmathError::BadTrace(norm2));
        }
        let d = amplitudes.len();
        let mut m = CMat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = amplitudes[i] * amplitudes[j].conj();
            }
        }
        Ok(Self::new_unchecked(m))
    }

    /// Diagonal state from non-negative entries summing to at most 1.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(QmathError::Empty);
        }
        for &p in diag {
            if p < 0.0 {
                return Err(QmathError::NegativeProbability(p));
            }
        }
        let tr: f64 = diag.iter().sum();
        if !(tr > 0.0 && tr <= 1.0 + TRACE_TOL) {
            return Err(QmathError::BadTrace(tr));
        }
        let d = diag.len();
        let mut m = CMat::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = C64::new(diag[i], 0.0);
        }
        Ok(Self::new_unchecked(m))
    }

    /// The completely mixed state I/d.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(QmathError::Empty);
        }
        Self::from_diagonal(&vec![1.0 / dim as f64; dim])
    }

    /// The qubit diag(1-w, w): a classical bit that reads 1 with probability w.
    pub fn bernoulli_qubit(w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(QmathError::OutOfRange {
                name: "w",
                value: w,
                range: "[0, 1]",
            });
        }
        Self::from_diagonal(&[1.0 - w, w])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.matrix[(i, j)]
    }
}

/// A Hermitian operator with no positivity requirement (projectors,
/// measurement operators, test observables).
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    dim: usize,
    matrix: CMat,
}

impl Observable {
    pub fn new(matrix: CMat) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(QmathError::NotSquare(matrix.nrows(), matrix.ncols()));
        }
        check_hermitian(&matrix)?;
        Ok(Self {
            dim: matrix.nrows(),
            matrix,
        })
    }

    /// Projector onto span{|z⟩ : relative weight of the bitstring z < w},
    /// for `n_qubits` qubits. Diagonal in the computational basis.
    pub fn weight_projector(n_qubits: u32, w: f64) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if dim > TENSOR_DIM_GUARD {
            return Err(QmathError::TensorGuard(dim, TENSOR_DIM_GUARD));
        }
        let n = n_qubits as f64;
        let mut m = CMat::zeros(dim, dim);
        for z in 0..dim {
            let weight = z.count_ones() as f64 / n;
            if weight < w {
                m[(z, z)] = C64::new(1.0, 0.0);
            }
        }
        Ok(Self { dim, matrix: m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// tr(O ρ), real since both are Hermitian.
    pub fn expectation(&self, rho: &DensityOp) -> Result<f64> {
        if self.dim != rho.dim() {
            return Err(QmathError::DimMismatch(self.dim, rho.dim()));
        }
        Ok((&self.matrix * rho.matrix()).trace().re)
    }
}

/// A subnormalised classical distribution: non-negative entries with total
/// mass in (0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalDist {
    probs: Vec<f64>,
}

impl ClassicalDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(QmathError::Empty);
        }
        for &p in &probs {
            if p < -1e-12 {
                return Err(QmathError::NegativeProbability(p));
            }
        }
        let probs: Vec<f64> = probs.into_iter().map(|p| p.max(0.0)).collect();
        let mass: f64 = probs.iter().sum();
        if !(mass > 0.0 && mass <= 1.0 + TRACE_TOL) {
            return Err(QmathError::BadMass(mass));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn is_normalised(&self) -> bool {
        (self.mass() - 1.0).abs() <= 1e-9
    }
}

/// A joint distribution p(a, b) on finite alphabets A × B, stored row-major
/// with b as the inner index.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    a_count: usize,
    b_count: usize,
    probs: Vec<f64>,
}

impl JointDist {
    pub fn new(a_count: usize, b_count: usize, probs: Vec<f64>) -> Result<Self> {
        if a_count == 0 || b_count == 0 || probs.len() != a_count * b_count {
            return Err(QmathError::DimMismatch(a_count * b_count, probs.len()));
        }
        for &p in &probs {
            if p < -1e-12 {
                return Err(QmathError::NegativeProbability(p));
            }
        }
        Ok(Self {
            a_count,
            b_count,
            probs: probs.into_iter().map(|p| p.max(0.0)).collect(),
        })
    }

    pub fn prob(&self, a: usize, b: usize) -> f64 {
        self.probs[a * self.b_count + b]
    }

    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition plumbing
// ---------------------------------------------------------------------------

pub(crate) struct Eigh {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Matching eigenvector columns.
    pub vectors: CMat,
}

pub(crate) fn eigh(m: &CMat) -> Eigh {
    let se = m.clone().symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(i));
    }
    Eigh { values, vectors }
}

fn check_hermitian(m: &CMat) -> Result<()> {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let dev = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(dev);
        }
    }
    if worst > HERMITICITY_TOL {
        return Err(QmathError::NotHermitian(worst));
    }
    Ok(())
}

/// U f(Λ) U† for a Hermitian matrix, applying `f` to each eigenvalue.
fn herm_apply(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let e = eigh(m);
    let d = e.values.len();
    let mut out = CMat::zeros(d, d);
    for k in 0..d {
        let fk = f(e.values[k]);
        if fk == 0.0 {
            continue;
        }
        let v = e.vectors.column(k);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] += v[i] * v[j].conj() * C64::new(fk, 0.0);
            }
        }
    }
    out
}

/// Weight of P on the kernel of Q (eigenvalues of Q at or below the support
/// tolerance). Zero iff supp(P) ⊆ supp(Q) up to numerics.
fn kernel_leak(p: &CMat, q_eig: &Eigh) -> f64 {
    let mut leak = 0.0;
    for k in 0..q_eig.values.len() {
        if q_eig.values[k] <= SUPPORT_TOL {
            let v = q_eig.vectors.column(k);
            leak += (v.adjoint() * p * v)[(0, 0)].re;
        }
    }
    leak
}

// ---------------------------------------------------------------------------
// States, channels, measurements
// ---------------------------------------------------------------------------

fn ensure_bit(name: &'static str, b: u8) -> Result<()> {
    if b > 1 {
        return Err(QmathError::OutOfRange {
            name,
            value: b as f64,
            range: "{0, 1}",
        });
    }
    Ok(())
}

/// The BB84 signal state H^θ |x⟩⟨x| H^θ as a 2×2 projector.
pub fn bb84_state(x: u8, theta: u8) -> Result<DensityOp> {
    ensure_bit("x", x)?;
    ensure_bit("theta", theta)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let amps: [C64; 2] = match (x, theta) {
        (0, 0) => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        (1, 0) => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        (0, 1) => [C64::new(s, 0.0), C64::new(s, 0.0)],
        (1, 1) => [C64::new(s, 0.0), C64::new(-s, 0.0)],
        _ => unreachable!(),
    };
    DensityOp::pure(&amps)
}

/// The encoding unitary V^{x,θ} = H^θ X^x, so that V^{x,θ}|0⟩ is the BB84
/// state for the pair (x, θ).
pub fn bb84_unitary(x: u8, theta: u8) -> Result<CMat> {
    ensure_bit("x", x)?;
    ensure_bit("theta", theta)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let x_mat = if x == 1 {
        CMat::from_row_slice(2, 2, &[zero, one, one, zero])
    } else {
        CMat::identity(2, 2)
    };
    let h_mat = if theta == 1 {
        CMat::from_row_slice(
            2,
            2,
            &[
                C64::new(s, 0.0),
                C64::new(s, 0.0),
                C64::new(s, 0.0),
                C64::new(-s, 0.0),
            ],
        )
    } else {
        CMat::identity(2, 2)
    };
    Ok(h_mat * x_mat)
}

/// Depolarising channel (1-p) ρ + p τ with τ = I/dim; trace preserving.
pub fn depolarize(rho: &DensityOp, p: f64) -> Result<DensityOp> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QmathError::OutOfRange {
            name: "p",
            value: p,
            range: "[0, 1]",
        });
    }
    if (rho.trace() - 1.0).abs() > 1e-9 {
        return Err(QmathError::NotNormalised(rho.trace()));
    }
    let d = rho.dim();
    let mut m = rho.matrix() * C64::new(1.0 - p, 0.0);
    let mix = p / d as f64;
    for i in 0..d {
        m[(i, i)] += C64::new(mix, 0.0);
    }
    Ok(DensityOp::new_unchecked(m))
}

/// Born-rule outcome distribution for a qubit measured in the Z (`basis=0`)
/// or X (`basis=1`) basis. The outputs sum to tr(ρ).
pub fn measure(rho: &DensityOp, basis: u8) -> Result<ClassicalDist> {
    ensure_bit("basis", basis)?;
    if rho.dim() != 2 {
        return Err(QmathError::NotQubit(rho.dim()));
    }
    let m = rho.matrix();
    let (p0, p1) = if basis == 0 {
        (m[(0, 0)].re, m[(1, 1)].re)
    } else {
        let cross = m[(0, 1)].re;
        let half = (m[(0, 0)].re + m[(1, 1)].re) / 2.0;
        (half + cross, half - cross)
    };
    ClassicalDist::new(vec![p0, p1])
}

// ---------------------------------------------------------------------------
// Distances and divergences
// ---------------------------------------------------------------------------

/// Trace distance ½‖ρ − σ‖₁ via the eigenvalues of the difference.
pub fn trace_distance(rho: &DensityOp, sigma: &DensityOp) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(QmathError::DimMismatch(rho.dim(), sigma.dim()));
    }
    let diff = rho.matrix() - sigma.matrix();
    let e = eigh(&diff);
    Ok(0.5 * e.values.iter().map(|l| l.abs()).sum::<f64>())
}

/// Fidelity F(P, Q) = ‖√P √Q‖₁² = (tr √(√P Q √P))².
pub fn fidelity(p: &DensityOp, q: &DensityOp) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(QmathError::DimMismatch(p.dim(), q.dim()));
    }
    let sp = herm_apply(p.matrix(), |l| l.max(0.0).sqrt());
    let inner = &sp * q.matrix() * &sp;
    // Symmetrise away the O(1e-16) numerical skew before eigensolving.
    let inner = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
    let e = eigh(&inner);
    let root_sum: f64 = e.values.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok(root_sum * root_sum)
}

/// Generalised fidelity: F∗(ρ, σ) = (‖√ρ√σ‖₁ + √((1−trρ)(1−trσ)))², which
/// extends F to subnormalised states.
pub fn generalized_fidelity(rho: &DensityOp, sigma: &DensityOp) -> Result<f64> {
    let f = fidelity(rho, sigma)?;
    let a = (1.0 - rho.trace()).max(0.0);
    let b = (1.0 - sigma.trace()).max(0.0);
    let root = f.sqrt() + (a * b).sqrt();
    Ok(root * root)
}

/// Purified distance P(ρ, σ) = √(1 − F∗(ρ, σ)) ∈ [0, 1].
pub fn purified_distance(rho: &DensityOp, sigma: &DensityOp) -> Result<f64> {
    let fstar = generalized_fidelity(rho, sigma)?;
    Ok((1.0 - fstar).max(0.0).sqrt().min(1.0))
}

/// Max-relative entropy D_max(P‖Q) = inf { λ : P ≤ 2^λ Q }.
///
/// Returns `f64::INFINITY` when supp(P) ⊄ supp(Q); otherwise the base-2 log
/// of the largest eigenvalue of Q^{-1/2} P Q^{-1/2} computed on the support
/// of Q.
pub fn dmax(p: &DensityOp, q: &DensityOp) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(QmathError::DimMismatch(p.dim(), q.dim()));
    }
    let qe = eigh(q.matrix());
    if kernel_leak(p.matrix(), &qe) > SUPPORT_TOL {
        return Ok(f64::INFINITY);
    }
    // Work in Q's eigenbasis restricted to its support.
    let support: Vec<usize> = (0..qe.values.len())
        .filter(|&k| qe.values[k] > SUPPORT_TOL)
        .collect();
    let b = qe.vectors.adjoint() * p.matrix() * &qe.vectors;
    let s = support.len();
    let mut m = CMat::zeros(s, s);
    for (i, &ki) in support.iter().enumerate() {
        for (j, &kj) in support.iter().enumerate() {
            let scale = 1.0 / (qe.values[ki] * qe.values[kj]).sqrt();
            m[(i, j)] = b[(ki, kj)] * C64::new(scale, 0.0);
        }
    }
    let top = eigh(&m).values.last().copied().unwrap_or(0.0);
    Ok(top.max(0.0).log2())
}

/// Sandwiched α-Rényi relative entropy for α ∈ [½, 1) ∪ (1, ∞].
///
/// Evaluates (1/(α−1)) log tr[(Q^{−α′/2} P Q^{−α′/2})^α]/tr P with
/// α′ = (α−1)/α, powers taken on the support of Q. Infinite exactly when
/// the defining case split demands it: finite iff (α < 1 and P ⊥̸ Q) or
/// (α > 1 and supp P ⊆ supp Q). `α = ∞` evaluates D_max.
pub fn sandwiched_div(p: &DensityOp, q: &DensityOp, alpha: f64) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(QmathError::DimMismatch(p.dim(), q.dim()));
    }
    if alpha == f64::INFINITY {
        return dmax(p, q);
    }
    if !((0.5..1.0).contains(&alpha) || alpha > 1.0) {
        return Err(QmathError::OutOfRange {
            name: "alpha",
            value: alpha,
            range: "[1/2, 1) ∪ (1, ∞]",
        });
    }
    let qe = eigh(q.matrix());
    if alpha < 1.0 {
        let overlap = (p.matrix() * q.matrix()).trace().re;
        if overlap.abs() <= 1e-12 {
            return Ok(f64::INFINITY);
        }
    } else if kernel_leak(p.matrix(), &qe) > SUPPORT_TOL {
        return Ok(f64::INFINITY);
    }
    // Q^{-α'/2} on the support of Q; for α < 1 the exponent is positive so
    // kernel directions simply contribute nothing.
    let expo = -(alpha - 1.0) / (2.0 * alpha);
    let d = q.dim();
    let b = qe.vectors.adjoint() * p.matrix() * &qe.vectors;
    let mut m = CMat::zeros(d, d);
    let pow = |l: f64| {
        if l > SUPPORT_TOL {
            l.powf(expo)
        } else {
            0.0
        }
    };
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] = b[(i, j)] * C64::new(pow(qe.values[i]) * pow(qe.values[j]), 0.0);
        }
    }
    let trace_power: f64 = eigh(&m)
        .values
        .iter()
        .map(|&l| if l > 0.0 { l.powf(alpha) } else { 0.0 })
        .sum();
    Ok((trace_power.log2() - p.trace().log2()) / (alpha - 1.0))
}

/// Quantum relative entropy D(P‖Q) = tr(P log P − P log Q)/tr P, the α → 1
/// limit of the sandwiched family. Infinite when supp(P) ⊄ supp(Q).
pub fn relative_entropy(p: &DensityOp, q: &DensityOp) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(QmathError::DimMismatch(p.dim(), q.dim()));
    }
    let qe = eigh(q.matrix());
    if kernel_leak(p.matrix(), &qe) > SUPPORT_TOL {
        return Ok(f64::INFINITY);
    }
    let pe = eigh(p.matrix());
    let term_p: f64 = pe
        .values
        .iter()
        .map(|&l| if l > SUPPORT_TOL { l * l.log2() } else { 0.0 })
        .sum();
    let mut term_q = 0.0;
    for k in 0..qe.values.len() {
        let l = qe.values[k];
        if l > SUPPORT_TOL {
            let v = qe.vectors.column(k);
            let w = (v.adjoint() * p.matrix() * v)[(0, 0)].re;
            term_q += w * l.log2();
        }
    }
    Ok((term_p - term_q) / p.trace())
}

/// Classical conditional min-entropy H_min(A|B) = −log Σ_b max_a p(a, b)
/// for a normalised joint distribution.
pub fn hmin_cq(joint: &JointDist) -> Result<f64> {
    if (joint.mass() - 1.0).abs() > 1e-9 {
        return Err(QmathError::NotNormalised(joint.mass()));
    }
    let mut guess = 0.0;
    for b in 0..joint.b_count {
        let best = (0..joint.a_count)
            .map(|a| joint.prob(a, b))
            .fold(0.0f64, f64::max);
        guess += best;
    }
    Ok(-guess.log2())
}

/// Classical hypothesis-testing relative entropy
/// D_h^μ(p‖q) = −log inf { Σ q·Q : 0 ≤ μQ ≤ 1, Σ p·Q ≥ 1 }.
///
/// For commuting (classical) inputs the optimum is a Neyman–Pearson test:
/// fill the constraint greedily in decreasing order of the likelihood ratio
/// p/q, capping each component at 1/μ.
pub fn dh_classical(p: &ClassicalDist, q: &ClassicalDist, mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(QmathError::OutOfRange {
            name: "mu",
            value: mu,
            range: "(0, 1)",
        });
    }
    if p.len() != q.len() {
        return Err(QmathError::DimMismatch(p.len(), q.len()));
    }
    if !p.is_normalised() {
        return Err(QmathError::NotNormalised(p.mass()));
    }
    let pv = p.probs();
    let qv = q.probs();
    let mut order: Vec<usize> = (0..pv.len()).collect();
    // Descending likelihood ratio p/q; cross-multiplied to dodge q = 0.
    order.sort_by(|&i, &j| {
        let lhs = pv[i] * qv[j];
        let rhs = pv[j] * qv[i];
        rhs.partial_cmp(&lhs).unwrap().then(i.cmp(&j))
    });
    let cap = 1.0 / mu;
    let mut need = 1.0f64;
    let mut cost = 0.0f64;
    for &i in &order {
        if need <= 0.0 {
            break;
        }
        if pv[i] <= 0.0 {
            continue;
        }
        let fill = need / pv[i];
        if fill <= cap {
            // Fractional component closes the constraint exactly.
            cost += qv[i] * fill;
            need = 0.0;
        } else {
            cost += qv[i] * cap;
            need -= pv[i] * cap;
        }
    }
    if need > 1e-9 {
        return Err(QmathError::InfeasibleTest);
    }
    if cost <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-cost.log2())
}

/// Kronecker product of a list of states; trace is multiplicative. Guarded
/// at total dimension 2^14.
pub fn tensor(ops: &[DensityOp]) -> Result<DensityOp> {
    if ops.is_empty() {
        return Err(QmathError::Empty);
    }
    let mut total = 1usize;
    for op in ops {
        total = total
            .checked_mul(op.dim())
            .filter(|&d| d <= TENSOR_DIM_GUARD)
            .ok_or(QmathError::TensorGuard(
                total.saturating_mul(op.dim()),
                TENSOR_DIM_GUARD,
            ))?;
    }
    let mut m = ops[0].matrix().clone();
    for op in &ops[1..] {
        m = m.kronecker(op.matrix());
    }
    Ok(DensityOp::new_unchecked(m))
}
