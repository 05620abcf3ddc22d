mod common;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use common::{chain_gates, p1_density, p1_statevector, Gate};
use crqpuf::blochsim::{
    born_p1, ideal_p1, observed_mean, qgen, sample, Axis, Challenge, DeviceFingerprint, GateChain, ImperfectionConfig,
    QubitImperfection,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn single(fp: &DeviceFingerprint, axes: &str, angles: &[f64]) -> f64 {
    let chain: GateChain = axes.parse().unwrap();
    let rows = angles.iter().map(|&a| vec![a]).collect();
    born_p1(fp, &Challenge::new(chain, rows).unwrap()).unwrap()[0]
}

fn with_qubit(q: QubitImperfection) -> DeviceFingerprint {
    DeviceFingerprint::new("test".into(), vec![q], 0.0).unwrap()
}

#[test]
fn one_gate_law_matches_matrix_oracle() {
    let fp = DeviceFingerprint::ideal(1, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let t = rng.random_range(0.0..TAU);
        let got = single(&fp, "Y", &[t]);
        let oracle = p1_statevector(&chain_gates("Y", &[t]));
        assert!((got - oracle).abs() <= 1e-12, "θ={t}: {got} vs {oracle}");
        assert!((got - (1.0 - t.sin()) / 2.0).abs() <= 1e-12);
    }
}

#[test]
fn two_gate_law_matches_matrix_oracle() {
    let fp = DeviceFingerprint::ideal(1, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let (b, a) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
        let got = single(&fp, "XY", &[b, a]);
        let oracle = p1_statevector(&chain_gates("XY", &[b, a]));
        assert!((got - oracle).abs() <= 1e-12);
        assert!((got - (1.0 - a.sin() * b.cos()) / 2.0).abs() <= 1e-12);
    }
}

#[test]
fn worked_examples() {
    let fp = DeviceFingerprint::ideal(1, 0.0).unwrap();
    assert!(single(&fp, "Y", &[FRAC_PI_2]).abs() <= 1e-12);
    assert!((single(&fp, "XY", &[0.0, 3.0 * FRAC_PI_2]) - 1.0).abs() <= 1e-12);
}

#[test]
fn ideal_fingerprint_equals_ideal_p1_on_random_chains() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let fp = DeviceFingerprint::ideal(4, 0.0).unwrap();
    for _ in 0..200 {
        let t = rng.random_range(1..=8);
        let axes: Vec<Axis> = (0..t).map(|_| if rng.random::<bool>() { Axis::X } else { Axis::Y }).collect();
        let chain = GateChain::new(axes, true).unwrap();
        let angles = (0..t).map(|_| (0..4).map(|_| rng.random_range(0.0..TAU)).collect()).collect();
        let ch = Challenge::new(chain.clone(), angles).unwrap();
        let born = born_p1(&fp, &ch).unwrap();
        let ideal = ideal_p1(&ch);
        for j in 0..4 {
            assert!((born[j] - ideal[j]).abs() <= 1e-12);
            let per: Vec<f64> = ch.qubit_angles(j).collect();
            let oracle = p1_statevector(&chain_gates(&chain.to_string(), &per));
            assert!((born[j] - oracle).abs() <= 1e-12);
        }
    }
}

#[test]
fn depolarizing_matches_density_matrix_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..200 {
        let d = rng.random_range(0.0..0.3);
        let fp = with_qubit(QubitImperfection { depol_per_gate: d, ..QubitImperfection::IDEAL });
        let axes = ["Y", "XY", "XXYY", "XYXYXYXY"][rng.random_range(0..4)];
        let angles: Vec<f64> = axes.chars().map(|_| rng.random_range(0.0..TAU)).collect();
        let got = single(&fp, axes, &angles);
        let oracle = p1_density(&chain_gates(axes, &angles), d);
        assert!((got - oracle).abs() <= 1e-12, "{axes} d={d}: {got} vs {oracle}");
    }
}

#[test]
fn offset_shifts_the_angle() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..200 {
        let phi = rng.random_range(-0.5..0.5);
        let t = rng.random_range(0.0..TAU);
        let fp = with_qubit(QubitImperfection { offset_y: phi, ..QubitImperfection::IDEAL });
        let oracle = p1_statevector(&[Gate::Ry(t + phi), Gate::H]);
        assert!((single(&fp, "Y", &[t]) - oracle).abs() <= 1e-12);
        assert!((oracle - (1.0 - (t + phi).sin()) / 2.0).abs() <= 1e-12);
    }
}

#[test]
fn tilt_and_gain_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..200 {
        let q = QubitImperfection {
            gain_y: rng.random_range(0.9..1.1),
            gain_x: rng.random_range(0.9..1.1),
            offset_y: rng.random_range(-0.1..0.1),
            offset_x: rng.random_range(-0.1..0.1),
            h_tilt: rng.random_range(-0.1..0.1),
            ..QubitImperfection::IDEAL
        };
        let (b, a) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
        let oracle = p1_statevector(&[
            Gate::Rx(q.gain_x * b + q.offset_x),
            Gate::Ry(q.gain_y * a + q.offset_y),
            Gate::Ry(q.h_tilt),
            Gate::H,
        ]);
        assert!((single(&with_qubit(q), "XY", &[b, a]) - oracle).abs() <= 1e-12);
    }
}

#[test]
fn same_axis_rotations_compose() {
    let fp = DeviceFingerprint::ideal(1, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let (a1, a2, b1, b2) = (
            rng.random_range(0.0..TAU),
            rng.random_range(0.0..TAU),
            rng.random_range(0.0..TAU),
            rng.random_range(0.0..TAU),
        );
        let grouped = single(&fp, "XXYY", &[b1, b2, a1, a2]);
        let reduced = single(&fp, "XY", &[(b1 + b2).rem_euclid(TAU), (a1 + a2).rem_euclid(TAU)]);
        assert!((grouped - reduced).abs() <= 1e-12);
    }
}

#[test]
fn alternating_chain_does_not_reduce() {
    let fp = DeviceFingerprint::ideal(1, 0.0).unwrap();
    let h = FRAC_PI_2;
    assert!((single(&fp, "XYXY", &[h, h, h, h]) - 1.0).abs() <= 1e-12);
    assert!((single(&fp, "XY", &[PI, PI]) - 0.5).abs() <= 1e-12);
    assert!((p1_statevector(&chain_gates("XYXY", &[h, h, h, h])) - 1.0).abs() <= 1e-12);
}

#[test]
fn sampled_means_follow_normal_bound() {
    let fp = qgen(21, 27, &ImperfectionConfig::default()).unwrap();
    let ch = crqpuf::pufproto::random_challenge(5, 27, &GateChain::hadamard_y()).unwrap();
    let shots = 1_000_000;
    let batch = sample(&fp, &ch, shots, 99).unwrap();
    let means = batch.means();
    let expected = observed_mean(&fp, &ch).unwrap();
    let within = means
        .iter()
        .zip(&expected)
        .filter(|(m, e)| (*m - *e).abs() <= 3.0 * (*e * (1.0 - *e) / shots as f64).sqrt())
        .count();
    assert!(within as f64 >= 0.99 * 27.0, "{within}/27 within 3σ");
}

#[test]
fn zero_mean_samples_are_all_zero() {
    let fp = DeviceFingerprint::ideal(3, 0.0).unwrap();
    let ch = Challenge::uniform(GateChain::hadamard_y(), 3, &[FRAC_PI_2]).unwrap();
    assert!(observed_mean(&fp, &ch).unwrap().iter().all(|&m| m == 0.0));
    assert!(sample(&fp, &ch, 500, 1).unwrap().bits().iter().all(|&b| b == 0));
}

#[test]
fn qgen_is_reproducible_and_seed_sensitive() {
    let cfg = ImperfectionConfig::default();
    assert_eq!(qgen(7, 27, &cfg).unwrap(), qgen(7, 27, &cfg).unwrap());
    assert_ne!(qgen(7, 27, &cfg).unwrap(), qgen(8, 27, &cfg).unwrap());
    let ideal = qgen(7, 5, &ImperfectionConfig::ideal()).unwrap();
    assert!(ideal.qubits().iter().all(|q| *q == QubitImperfection::IDEAL));
}

fn axis_string() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::bool::ANY, 1..10).prop_map(|v| v.into_iter().map(|x| if x { 'X' } else { 'Y' }).collect())
}

proptest! {
    #[test]
    fn bloch_norm_shrinks_by_depol_per_gate(
        axes in axis_string(),
        d in 0.0f64..0.3,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = QubitImperfection {
            depol_per_gate: d,
            gain_y: rng.random_range(0.9..1.1),
            offset_x: rng.random_range(-0.1..0.1),
            h_tilt: rng.random_range(-0.1..0.1),
            ..QubitImperfection::IDEAL
        };
        let chain: GateChain = axes.parse().unwrap();
        let angles: Vec<f64> = (0..chain.len()).map(|_| rng.random_range(0.0..TAU)).collect();
        let mut last = 1.0;
        for g in 1..=chain.len() {
            let prefix = GateChain::new(chain.axes()[..g].to_vec(), false).unwrap();
            let v = q.bloch_vector(&prefix, angles.iter().copied());
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            prop_assert!(norm <= last + 1e-12);
            prop_assert!((norm - (1.0 - d).powi(g as i32)).abs() <= 1e-12);
            last = norm;
        }
        let v = q.bloch_vector(&chain, angles.iter().copied());
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        prop_assert!((norm - (1.0 - d).powi(chain.len() as i32 + 1)).abs() <= 1e-12);
    }

    #[test]
    fn observed_mean_is_a_probability(seed in any::<u64>(), t in 0.0f64..TAU) {
        let fp = qgen(seed, 4, &ImperfectionConfig::wide()).unwrap();
        let ch = Challenge::uniform(GateChain::hadamard_yx(), 4, &[t, t]).unwrap();
        for m in observed_mean(&fp, &ch).unwrap() {
            prop_assert!((0.0..=1.0).contains(&m));
        }
    }
}
