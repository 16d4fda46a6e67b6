//! Shared test support: an arbitrary-precision fixed-point evaluator for
//! the security-bound closed forms (independent of the f64 implementation
//! path), random state generators, and brute-force LP/feasibility oracles.

#![allow(dead_code)]

pub mod bigfloat {
    //! Fixed-point arithmetic on `BigInt` with 320 fractional bits, plus
    //! ln/exp/log2/exp2/sqrt and the entropy helpers, enough to evaluate
    //! every closed form of the analysis to ~90 decimal digits.

    use num_bigint::BigInt;
    use std::ops::{Add, Div, Mul, Neg, Sub};

    pub const PREC: u32 = 320;

    #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
    pub struct BF(BigInt);

    fn isqrt(n: &BigInt) -> BigInt {
        use num_bigint::Sign;
        if n.sign() != Sign::Plus {
            return BigInt::from(0);
        }
        let bits = n.bits();
        let mut x: BigInt = BigInt::from(1) << (bits / 2 + 1);
        loop {
            let y: BigInt = (&x + n / &x) >> 1;
            if y >= x {
                return x;
            }
            x = y;
        }
    }

    impl BF {
        pub fn zero() -> Self {
            BF(BigInt::from(0))
        }

        pub fn one() -> Self {
            BF(BigInt::from(1) << PREC)
        }

        pub fn from_u64(v: u64) -> Self {
            BF(BigInt::from(v) << PREC)
        }

        pub fn from_i64(v: i64) -> Self {
            BF(BigInt::from(v) << PREC)
        }

        /// Exact value of the f64 (the point: thresholds like 0.05 enter
        /// the oracle at their true binary value, same as the code under
        /// test sees them).
        pub fn from_f64(v: f64) -> Self {
            assert!(v.is_finite());
            if v == 0.0 {
                return Self::zero();
            }
            let bits = v.abs().to_bits();
            let exp_field = ((bits >> 52) & 0x7ff) as i64;
            let frac = bits & ((1u64 << 52) - 1);
            let (mant, exp) = if exp_field == 0 {
                (frac, -1074i64)
            } else {
                (frac | (1u64 << 52), exp_field - 1075)
            };
            let shift = PREC as i64 + exp;
            assert!(shift >= 0, "value {v} too small for exact representation");
            let mut m = BigInt::from(mant) << (shift as u32);
            if v < 0.0 {
                m = -m;
            }
            BF(m)
        }

        pub fn to_f64(&self) -> f64 {
            // Split into a 64-bit mantissa and exponent to avoid building
            // huge f64 conversions.
            use num_bigint::Sign;
            let (sign, mag) = (self.0.sign(), self.0.magnitude().clone());
            if mag.bits() == 0 {
                return 0.0;
            }
            let bits = mag.bits();
            let (top, shift) = if bits > 64 {
                let s = bits - 64;
                (mag >> s, s as i64)
            } else {
                (mag, 0)
            };
            let top_u64: u64 = top.iter_u64_digits().next().unwrap_or(0);
            let v = top_u64 as f64 * 2f64.powi((shift - PREC as i64) as i32);
            if sign == Sign::Minus {
                -v
            } else {
                v
            }
        }

        pub fn abs(&self) -> Self {
            BF(self.0.magnitude().clone().into())
        }

        pub fn is_negative(&self) -> bool {
            self.0 < BigInt::from(0)
        }

        pub fn sqrt(&self) -> Self {
            assert!(!self.is_negative(), "sqrt of negative");
            BF(isqrt(&(self.0.clone() << PREC)))
        }

        pub fn ln2() -> Self {
            // ln 2 = 2 atanh(1/3).
            Self::atanh_of_inv(3)
        }

        fn atanh_of_inv(k: u64) -> Self {
            // 2 * Σ (1/k)^(2i+1)/(2i+1)
            let mut sum = BigInt::from(0);
            let k = BigInt::from(k);
            let k2 = &k * &k;
            let mut power: BigInt = (BigInt::from(1) << PREC) / &k;
            let mut i: u64 = 1;
            while power.bits() > 0 {
                sum += &power / BigInt::from(i);
                power /= &k2;
                i += 2;
            }
            BF(sum << 1)
        }

        /// Natural logarithm for positive values.
        pub fn ln(&self) -> Self {
            assert!(self.0 > BigInt::from(0), "ln of non-positive");
            // Normalise to m in [1, 2).
            let bits = self.0.bits() as i64;
            let k = bits - 1 - PREC as i64;
            let m = if k >= 0 {
                BF(self.0.clone() >> (k as u32))
            } else {
                BF(self.0.clone() << ((-k) as u32))
            };
            // ln m = 2 atanh((m-1)/(m+1)), argument in [0, 1/3).
            let num = m.clone() - BF::one();
            let den = m + BF::one();
            let t = num / den;
            let t2 = t.clone() * t.clone();
            let mut sum = BF::zero();
            let mut power = t;
            let mut i: u64 = 1;
            while power.0.magnitude().bits() > 0 {
                sum = sum + BF(&power.0 / BigInt::from(i));
                power = power * t2.clone();
                i += 2;
            }
            let ln_m = BF(sum.0 << 1);
            ln_m + BF::from_i64(k) * Self::ln2()
        }

        pub fn log2(&self) -> Self {
            self.ln() / Self::ln2()
        }

        /// e^x by range reduction to |r| ≤ ln2/2 and Taylor series.
        pub fn exp(&self) -> Self {
            let ln2 = Self::ln2();
            let approx = self.to_f64() / std::f64::consts::LN_2;
            if approx < -((PREC + 64) as f64) {
                return Self::zero();
            }
            let k = approx.round() as i64;
            let r = self.clone() - BF::from_i64(k) * ln2;
            let mut term = BF::one();
            let mut sum = BF::one();
            let mut i: u64 = 1;
            while term.0.magnitude().bits() > 0 {
                term = term * r.clone();
                term = BF(term.0 / BigInt::from(i));
                sum = sum + term.clone();
                i += 1;
            }
            if k >= 0 {
                BF(sum.0 << (k as u32))
            } else {
                BF(sum.0 >> ((-k) as u32))
            }
        }

        /// 2^x = e^(x ln 2).
        pub fn exp2(&self) -> Self {
            (self.clone() * Self::ln2()).exp()
        }
    }

    impl Add for BF {
        type Output = BF;
        fn add(self, rhs: BF) -> BF {
            BF(self.0 + rhs.0)
        }
    }

    impl Sub for BF {
        type Output = BF;
        fn sub(self, rhs: BF) -> BF {
            BF(self.0 - rhs.0)
        }
    }

    impl Mul for BF {
        type Output = BF;
        fn mul(self, rhs: BF) -> BF {
            BF((self.0 * rhs.0) >> PREC)
        }
    }

    impl Div for BF {
        type Output = BF;
        fn div(self, rhs: BF) -> BF {
            assert!(rhs.0.magnitude().bits() > 0, "division by zero");
            BF((self.0 << PREC) / rhs.0)
        }
    }

    impl Neg for BF {
        type Output = BF;
        fn neg(self) -> BF {
            BF(-self.0)
        }
    }

    /// Binary entropy at full precision.
    pub fn h(x: &BF) -> BF {
        let zero = BF::zero();
        let one = BF::one();
        if *x <= zero || *x >= one {
            return BF::zero();
        }
        let xc = one.clone() - x.clone();
        -(x.clone() * x.log2() + xc.clone() * xc.log2())
    }

    /// g0(x) = −log2(x²/(1 + √(1−x²))).
    pub fn g0(x: &BF) -> BF {
        let one = BF::one();
        let inner = x.clone() * x.clone() / (one.clone() + (one - x.clone() * x.clone()).sqrt());
        -inner.log2()
    }

    /// g1(x, y) = g0(x) − log2(1 − y²).
    pub fn g1(x: &BF, y: &BF) -> BF {
        g0(x) - (BF::one() - y.clone() * y.clone()).log2()
    }

    /// Agreement to at least `digits` significant decimal digits.
    pub fn agrees_to_digits(value: f64, oracle: &BF, digits: i32) -> bool {
        let o = oracle.to_f64();
        if o == 0.0 {
            return value.abs() < 10f64.powi(-digits);
        }
        ((value - o) / o).abs() <= 10f64.powi(-digits)
    }
}

pub mod oracle {
    //! Independent evaluation of the assembled min-entropy bound and its
    //! constituents at full precision.

    use super::bigfloat::{g1, h, BF};

    pub struct BoundConfig {
        pub n: u64,
        pub m: u64,
        pub mu: f64,
        pub e: f64,
        pub eps: f64,
        pub delta: f64,
        pub eps_prime: f64,
        pub p_joint: f64,
        pub transcript_bits: f64,
        pub natural_base: bool,
    }

    pub struct BoundEval {
        pub eps_cl: BF,
        pub eps_qu: BF,
        pub eps_pa: BF,
        pub v: BF,
        pub alpha: BF,
        pub h_eps_delta: BF,
        pub leading: BF,
        pub sqrt_n: BF,
        pub sampling: Option<BF>,
        pub smoothing: Option<BF>,
        pub chain: BF,
        pub hmin: Option<BF>,
        pub feasible: bool,
    }

    pub fn evaluate(cfg: &BoundConfig) -> BoundEval {
        let n = BF::from_u64(cfg.n);
        let m = BF::from_u64(cfg.m);
        let two = BF::from_u64(2);
        let one = BF::one();
        let mu = BF::from_f64(cfg.mu);
        let e = BF::from_f64(cfg.e);
        let eps = BF::from_f64(cfg.eps);
        let delta = BF::from_f64(cfg.delta);
        let p = BF::from_f64(cfg.p_joint);

        let t = n.clone() * delta.clone() * delta.clone() * m / (n.clone() + two.clone());
        let raw = if cfg.natural_base {
            two.clone() * (-t).exp()
        } else {
            two.clone() * (-t).exp2()
        };
        let eps_cl = if raw > one { one.clone() } else { raw };
        let eps_qu = eps_cl.sqrt();

        let hed = h(&(eps + delta));
        let s2h = (two.clone() * hed.clone()).sqrt();
        let x2 = BF::from_u64(9);
        let v = two.clone() / (mu.clone() * mu.clone()) * ((one.clone() - e.clone()) / e.clone()).log2()
            + two.clone() * x2.log2();
        let alpha = one.clone() + two.clone() * s2h.clone() / v.clone();
        let eps_pa = two.clone() * (two.clone() * eps_qu.clone() / p.clone()).sqrt();

        let eps_prime = BF::from_f64(cfg.eps_prime);
        let e1 = eps_prime.clone() / two.clone();
        let e2 = eps_prime.clone() / BF::from_u64(8);
        let e3 = e2.clone();

        let h_e = h(&e);
        let leading = n.clone()
            * (one.clone() - two.clone() * mu.clone() - h_e - v.clone() * s2h.clone());
        let ln2 = BF::ln2();
        let sqrt_n = n.sqrt()
            * (mu.clone() * mu.clone() * ln2 - two.clone() * p.clone().log2()
                + super::bigfloat::g0(&e2));
        let chain = BF::from_u64(3) * super::bigfloat::g0(&e3);

        let headroom = p - two.clone() * eps_qu.clone();
        let feasible = !headroom.is_negative() && headroom != BF::zero() && eps_pa < one;
        let (sampling, smoothing, hmin) = if feasible {
            let sampling = v.clone() / s2h.clone() * (-headroom.log2() + one.clone());
            let smoothing = g1(&e1, &eps_pa) * v.clone() / (two.clone() * s2h.clone());
            let hmin = leading.clone()
                - sqrt_n.clone()
                - sampling.clone()
                - smoothing.clone()
                - BF::from_f64(cfg.transcript_bits)
                - chain.clone();
            (Some(sampling), Some(smoothing), Some(hmin))
        } else {
            (None, None, None)
        };

        BoundEval {
            eps_cl,
            eps_qu,
            eps_pa,
            v,
            alpha,
            h_eps_delta: hed,
            leading,
            sqrt_n,
            sampling,
            smoothing,
            chain,
            hmin,
            feasible,
        }
    }
}

pub mod states {
    //! Random subnormalised/normalised states for property tests.

    use rand::Rng;
    use srckey_core::qmath::{C64, CMat, DensityOp};

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        // Box–Muller; good enough for test-state generation.
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Full-rank random density matrix from a Ginibre draw GG†/tr(GG†).
    pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityOp {
        let g = CMat::from_fn(dim, dim, |_, _| C64::new(gaussian(rng), gaussian(rng)));
        let m = &g * g.adjoint();
        let tr = m.trace().re;
        let normalised = m * C64::new(1.0 / tr, 0.0);
        // Symmetrise away representation noise before validation.
        let sym = (&normalised + normalised.adjoint()) * C64::new(0.5, 0.0);
        DensityOp::new(sym).expect("Ginibre state is a valid density matrix")
    }

    /// Random pure state projector.
    pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityOp {
        let mut amps: Vec<C64> = (0..dim)
            .map(|_| C64::new(gaussian(rng), gaussian(rng)))
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        DensityOp::pure(&amps).expect("normalised amplitudes")
    }
}

pub mod lp {
    //! Exhaustive vertex enumeration for the hypothesis-testing LP
    //! min Σ q·Q subject to 0 ≤ Q ≤ 1/μ and Σ p·Q ≥ 1 (alphabets ≤ ~16).

    pub fn dh_vertex_oracle(p: &[f64], q: &[f64], mu: f64) -> f64 {
        assert_eq!(p.len(), q.len());
        let k = p.len();
        assert!(k <= 16);
        let cap = 1.0 / mu;
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << k) {
            let at_cap: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
            let p_mass: f64 = at_cap.iter().map(|&i| p[i]).sum();
            let q_cost: f64 = at_cap.iter().map(|&i| q[i]).sum();
            // Vertex with every coordinate at a bound.
            if p_mass * cap >= 1.0 - 1e-12 {
                best = best.min(q_cost * cap);
            }
            // Vertices with one fractional coordinate closing the
            // constraint exactly.
            for j in 0..k {
                if mask >> j & 1 == 1 || p[j] <= 0.0 {
                    continue;
                }
                let t = (1.0 - p_mass * cap) / p[j];
                if (-1e-12..=cap + 1e-12).contains(&t) {
                    best = best.min(q_cost * cap + q[j] * t.clamp(0.0, cap));
                }
            }
        }
        if best <= 0.0 {
            f64::INFINITY
        } else {
            -best.log2()
        }
    }
}

pub mod feasibility {
    //! Bisection oracle for the max-relative entropy: the smallest λ with
    //! 2^λ Q − P positive semidefinite, found by scanning feasibility.

    use srckey_core::qmath::{C64, DensityOp};

    fn min_eigenvalue(m: &srckey_core::qmath::CMat) -> f64 {
        m.clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn dmax_bisection(p: &DensityOp, q: &DensityOp) -> f64 {
        let feasible = |lambda: f64| {
            let scaled = q.matrix() * C64::new(lambda.exp2(), 0.0) - p.matrix();
            min_eigenvalue(&scaled) >= -1e-12
        };
        let (mut lo, mut hi) = (-80.0f64, 80.0f64);
        if feasible(lo) {
            return lo;
        }
        if !feasible(hi) {
            return f64::INFINITY;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}
