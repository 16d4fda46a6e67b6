//! Cross-checks of the divergence implementations against independent
//! brute-force formulations: bisection over the operator-inequality
//! definition of D_max, and the classical closed forms on commuting
//! inputs.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use srckey_core::qmath::{self, DensityOp};

#[test]
fn dmax_matches_bisection_over_feasibility() {
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    for i in 0..60 {
        let dim = if i % 2 == 0 { 2 } else { 4 };
        let p = common::states::random_density(dim, &mut rng);
        let q = common::states::random_density(dim, &mut rng);
        let direct = qmath::dmax(&p, &q).unwrap();
        let bisected = common::feasibility::dmax_bisection(&p, &q);
        assert!(
            (direct - bisected).abs() < 1e-9,
            "dim={dim}: {direct} vs {bisected}"
        );
    }
}

#[test]
fn dmax_bisection_confirms_support_infinity() {
    let p = qmath::bb84_state(0, 1).unwrap();
    let q = qmath::bb84_state(0, 0).unwrap();
    assert_eq!(qmath::dmax(&p, &q).unwrap(), f64::INFINITY);
    assert_eq!(common::feasibility::dmax_bisection(&p, &q), f64::INFINITY);
}

#[test]
fn sandwiched_divergence_matches_classical_renyi_on_random_diagonals() {
    let mut rng = ChaCha12Rng::seed_from_u64(12);
    for _ in 0..100 {
        let dim = rng.random_range(2..=5usize);
        let draw = |rng: &mut ChaCha12Rng| -> Vec<f64> {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(0.02..1.0)).collect();
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= s);
            v
        };
        let pv = draw(&mut rng);
        let qv = draw(&mut rng);
        let p = DensityOp::from_diagonal(&pv).unwrap();
        let q = DensityOp::from_diagonal(&qv).unwrap();
        for alpha in [0.5, 0.75, 1.5, 2.0, 3.0] {
            let got = qmath::sandwiched_div(&p, &q, alpha).unwrap();
            // Classical Rényi divergence (1/(α−1)) log Σ p^α q^(1−α).
            let s: f64 = pv
                .iter()
                .zip(&qv)
                .map(|(&a, &b)| a.powf(alpha) * b.powf(1.0 - alpha))
                .sum();
            let want = s.log2() / (alpha - 1.0);
            assert!(
                (got - want).abs() < 1e-10,
                "alpha={alpha}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn relative_entropy_matches_classical_kl_on_random_diagonals() {
    let mut rng = ChaCha12Rng::seed_from_u64(13);
    for _ in 0..100 {
        let dim = rng.random_range(2..=5usize);
        let draw = |rng: &mut ChaCha12Rng| -> Vec<f64> {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(0.02..1.0)).collect();
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= s);
            v
        };
        let pv = draw(&mut rng);
        let qv = draw(&mut rng);
        let p = DensityOp::from_diagonal(&pv).unwrap();
        let q = DensityOp::from_diagonal(&qv).unwrap();
        let got = qmath::relative_entropy(&p, &q).unwrap();
        let want: f64 = pv
            .iter()
            .zip(&qv)
            .map(|(&a, &b)| a * (a / b).log2())
            .sum();
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
}

#[test]
fn sandwiched_divergence_at_infinity_equals_dmax_on_random_states() {
    let mut rng = ChaCha12Rng::seed_from_u64(14);
    for _ in 0..50 {
        let p = common::states::random_density(3, &mut rng);
        let q = common::states::random_density(3, &mut rng);
        let inf = qmath::sandwiched_div(&p, &q, f64::INFINITY).unwrap();
        let direct = qmath::dmax(&p, &q).unwrap();
        assert!((inf - direct).abs() < 1e-9);
    }
}

#[test]
fn bigfloat_oracle_self_checks() {
    use common::bigfloat::BF;
    // ln 2 and the exp/log round trip at f64 precision.
    let ln2 = BF::ln2().to_f64();
    assert!((ln2 - std::f64::consts::LN_2).abs() < 1e-15);
    for x in [0.1, 0.5, 1.0, 2.5, 10.0] {
        let bf = BF::from_f64(x);
        let roundtrip = bf.ln().exp().to_f64();
        assert!((roundtrip - x).abs() < 1e-13, "{x} -> {roundtrip}");
        let lg = bf.log2().to_f64();
        assert!((lg - x.log2()).abs() < 1e-14);
    }
    // sqrt and exact f64 round trip.
    for x in [0.25, 2.0, 9.0, 1e-8] {
        let s = BF::from_f64(x).sqrt().to_f64();
        assert!((s - x.sqrt()).abs() < 1e-14 * x.sqrt().max(1.0));
        assert_eq!(BF::from_f64(x).to_f64(), x);
    }
    // Binary entropy against the implementation.
    for x in [0.01, 0.11, 0.3, 0.5] {
        let got = common::bigfloat::h(&BF::from_f64(x)).to_f64();
        let want = srckey_core::bounds::binary_entropy(x).unwrap();
        assert!((got - want).abs() < 1e-13);
    }
}
