use mobss::signal::{
    autocorrelation, detect_delay, load_signals, mix, pearson, save_signals, separate, standardize,
    synthetic_pair, variance, MixingConfig, SeparationMatrix, SignalMatrix,
};
use proptest::prelude::*;

fn inverse2(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    vec![
        vec![a[1][1] / det, -a[0][1] / det],
        vec![-a[1][0] / det, a[0][0] / det],
    ]
}

fn signal_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len).prop_filter("non-constant", |v| variance(v) > 1e-6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mix_then_inverse_restores_sources(
        a00 in 0.5f64..2.0, a01 in -0.6f64..0.6, a10 in -0.6f64..0.6, a11 in 0.5f64..2.0,
        seed in 0u64..1000,
    ) {
        let s = synthetic_pair(193, 512, 2048, seed).unwrap();
        let a = vec![vec![a00, a01], vec![a10, a11]];
        let x = mix(&s, &MixingConfig { mixing_matrix: a.clone(), ..MixingConfig::default() }).unwrap();
        let y = separate(&x, &SeparationMatrix::new(inverse2(&a)).unwrap()).unwrap();
        for (ys, ss) in y.rows().iter().zip(s.rows()) {
            let num: f64 = ys.iter().zip(ss).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            let den: f64 = ss.iter().map(|q| q * q).sum::<f64>().sqrt();
            prop_assert!(num / den < 1e-9);
        }
    }

    #[test]
    fn autocorrelation_starts_at_one(x in signal_strategy(64)) {
        let acf = autocorrelation(&x, 10).unwrap();
        prop_assert_eq!(acf[0], 1.0);
        prop_assert!(acf.iter().all(|r| r.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn standardize_is_idempotent_and_affine_invariant(
        x in signal_strategy(50), scale in 0.01f64..100.0, offset in -50.0f64..50.0,
    ) {
        let z = standardize(&x).unwrap();
        let zz = standardize(&z).unwrap();
        let shifted: Vec<f64> = x.iter().map(|v| scale * v + offset).collect();
        let zs = standardize(&shifted).unwrap();
        for ((a, b), c) in z.iter().zip(&zz).zip(&zs) {
            prop_assert!((a - b).abs() < 1e-9);
            prop_assert!((a - c).abs() < 1e-9);
        }
    }

    #[test]
    fn pearson_is_bounded_and_symmetric(a in signal_strategy(40), b in signal_strategy(40)) {
        let r = pearson(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&r));
        prop_assert_eq!(r, pearson(&b, &a).unwrap());
    }
}

#[test]
fn realised_noise_power_matches_target() {
    let t = 100_000;
    let s = synthetic_pair(193, 512, t, 2).unwrap();
    for snr in [10.0, 30.0] {
        let clean = mix(&s, &MixingConfig::default()).unwrap();
        let cfg = MixingConfig {
            snr_db: Some(snr),
            noise_seed: 9,
            ..MixingConfig::default()
        };
        let noisy = mix(&s, &cfg).unwrap();
        for c in 0..2 {
            let noise: Vec<f64> = noisy.row(c).iter().zip(clean.row(c)).map(|(a, b)| a - b).collect();
            let target = variance(clean.row(c)) * 10f64.powf(-snr / 10.0);
            let ratio = variance(&noise) / target;
            assert!((ratio - 1.0).abs() < 0.05, "channel {c} at {snr} dB: ratio {ratio}");
        }
    }
}

#[test]
fn noisy_mix_is_seed_deterministic() {
    let s = synthetic_pair(193, 512, 2048, 0).unwrap();
    let cfg = |seed| MixingConfig {
        snr_db: Some(20.0),
        noise_seed: seed,
        ..MixingConfig::default()
    };
    assert_eq!(mix(&s, &cfg(4)).unwrap(), mix(&s, &cfg(4)).unwrap());
    assert_ne!(mix(&s, &cfg(4)).unwrap(), mix(&s, &cfg(5)).unwrap());
}

#[test]
fn delay_is_detected_on_the_second_mixture() {
    for seed in 0..5 {
        let s = synthetic_pair(193, 512, 4096, seed).unwrap();
        let x = mix(&s, &MixingConfig::default()).unwrap();
        assert_eq!(detect_delay(x.row(1), 20, 1024).unwrap(), 193, "seed {seed}");
    }
}

#[test]
fn csv_file_roundtrip_2x4() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let m = SignalMatrix::new(
        vec!["left".into(), "right".into()],
        vec![vec![1.5, -0.25, 1e-300, 7.0], vec![0.1 + 0.2, 3.0, -4.0, 2.0 / 3.0]],
    )
    .unwrap();
    save_signals(&m, &path).unwrap();
    assert_eq!(load_signals(&path).unwrap(), m);
}
