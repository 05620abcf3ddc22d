use std::f64::consts::TAU;

use crqpuf::blochsim::{qgen, readout_mean, sample, Challenge, GateChain, ImperfectionConfig};
use crqpuf::pufproto::random_challenge;
use crqpuf::rng::derive_seed;
use crqpuf::sqlayer::{debias, shots_for_tolerance, sq_response, ResponseVector, SqConfig};
use proptest::prelude::*;

#[test]
fn hoeffding_sizing_is_sound() {
    let cfg = ImperfectionConfig { eps: 0.1, ..ImperfectionConfig::default() };
    let fp = qgen(3, 4, &cfg).unwrap();
    let sq = SqConfig { tau: 0.05, delta: 0.01, eps: fp.white_noise_eps };
    let shots = shots_for_tolerance(sq).unwrap();
    assert_eq!(shots, 1656);

    let reps = 1000;
    let mut violations = 0usize;
    let mut total = 0usize;
    for r in 0..reps {
        let ch = random_challenge(derive_seed(77, "challenge", r), fp.n(), &GateChain::hadamard_y()).unwrap();
        let truth = readout_mean(&fp, &ch).unwrap();
        let got = debias(&sq_response(&fp, &ch, shots, derive_seed(77, "shots", r)).unwrap(), sq.eps).unwrap();
        for (g, t) in got.values.iter().zip(&truth) {
            total += 1;
            if (g - t).abs() > sq.tau {
                violations += 1;
            }
        }
    }
    let frac = violations as f64 / total as f64;
    let slack = 3.0 * (sq.delta * (1.0 - sq.delta) / total as f64).sqrt();
    assert!(frac <= sq.delta + slack, "violation rate {frac} over {total}");
}

#[test]
fn two_thousand_shots_stay_within_five_percent() {
    let fp = qgen(4, 27, &ImperfectionConfig::default()).unwrap();
    let mut worst: f64 = 0.0;
    for r in 0..20 {
        let ch = random_challenge(r, 27, &GateChain::hadamard_yx()).unwrap();
        let expected = crqpuf::blochsim::observed_mean(&fp, &ch).unwrap();
        let got = sq_response(&fp, &ch, 2000, r + 1000).unwrap();
        assert_eq!(got.shots, 2000);
        for (g, e) in got.values.iter().zip(&expected) {
            worst = worst.max((g - e).abs());
        }
    }
    assert!(worst <= 0.05, "worst deviation {worst}");
}

#[test]
fn response_equals_independent_batch_mean() {
    let fp = qgen(5, 6, &ImperfectionConfig::default()).unwrap();
    let ch = Challenge::uniform(GateChain::hadamard_y(), 6, &[1.0]).unwrap();
    let batch = sample(&fp, &ch, 777, 42).unwrap();
    let r = sq_response(&fp, &ch, 777, 42).unwrap();
    for j in 0..6 {
        let ones = (0..777).filter(|&i| batch.shot(i)[j] == 1).count();
        assert_eq!(r.values[j], ones as f64 / 777.0);
    }
}

proptest! {
    #[test]
    fn responses_are_probabilities(seed in any::<u64>(), t in 0.0f64..TAU, shots in 1usize..300) {
        let fp = qgen(seed, 3, &ImperfectionConfig::wide()).unwrap();
        let ch = Challenge::uniform(GateChain::hadamard_y(), 3, &[t]).unwrap();
        for v in sq_response(&fp, &ch, shots, seed ^ 1).unwrap().values {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn debias_inverts_white_noise(q in 0.0f64..=1.0, eps in 0.0f64..0.45) {
        let m = eps + (1.0 - 2.0 * eps) * q;
        let back = debias(&ResponseVector::synthetic(vec![m]), eps).unwrap();
        prop_assert!((back.values[0] - q).abs() <= 1e-12);
    }
}
