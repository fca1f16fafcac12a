use proptest::prelude::*;
use rocket_forge::kernelgen::{kernels_from_str, write_kernels};
use rocket_forge::{generate_kernels, load_kernels, save_kernels};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn ten_thousand_kernels_have_the_expected_distribution() {
    let set = generate_kernels(2024, 10_000, 512, 4).unwrap();
    let mut counts = [0usize; 3];
    let mut same = 0usize;
    for k in set.iter() {
        counts[(k.length - 7) / 2] += 1;
        assert!((-1.0..=1.0).contains(&k.bias));
        let sum: f32 = k.weights.iter().sum();
        assert!(sum.abs() <= 1e-4, "weight sum {sum}");
        assert!((k.length - 1) * k.dilation <= 511);
        if k.padding > 0 {
            assert_eq!(k.padding, (k.length - 1) * k.dilation / 2);
            same += 1;
        }
    }
    let expected = 10_000.0 / 3.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(2.0).unwrap().cdf(chi2);
    assert!(p > 0.01, "lengths {counts:?} give p = {p}");
    let share = same as f64 / 10_000.0;
    assert!((0.47..=0.53).contains(&share), "same-padding share {share}");
}

#[test]
fn file_round_trip_preserves_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kernels.json");
    let set = generate_kernels(1, 300, 1000, 6).unwrap();
    save_kernels(&set, &path).unwrap();
    let back = load_kernels(&path).unwrap();
    assert_eq!(back, set);
    let (a, b) = (set.iter().map(|k| k.dilation), back.iter().map(|k| k.dilation));
    assert!(a.eq(b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn serialized_kernels_round_trip_bit_exactly(
        seed in any::<u64>(),
        k in 0usize..40,
        t in 11usize..600,
        c in 1usize..9,
    ) {
        let set = generate_kernels(seed, k, t, c).unwrap();
        let mut buf = Vec::new();
        write_kernels(&set, &mut buf).unwrap();
        let back = kernels_from_str(std::str::from_utf8(&buf).unwrap()).unwrap();
        for (x, y) in set.iter().zip(back.iter()) {
            prop_assert_eq!(x.bias.to_bits(), y.bias.to_bits());
            let wx: Vec<u32> = x.weights.iter().map(|w| w.to_bits()).collect();
            let wy: Vec<u32> = y.weights.iter().map(|w| w.to_bits()).collect();
            prop_assert_eq!(wx, wy);
        }
        prop_assert_eq!(back, set);
    }

    #[test]
    fn same_seed_gives_identical_banks(seed in any::<u64>(), t in 11usize..400, c in 1usize..6) {
        prop_assert_eq!(generate_kernels(seed, 25, t, c).unwrap(), generate_kernels(seed, 25, t, c).unwrap());
    }
}
