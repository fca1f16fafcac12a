use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rocket_forge::transform::Engine;
use rocket_forge::{
    generate_kernels, transform_batch, transform_reference, Execution, KernelSet, PoolingConfig, TimeSeriesBatch,
};

fn random_batch(seed: u64, n: usize, c: usize, t: usize) -> TimeSeriesBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * c * t).map(|_| rng.random_range(-3.0f32..3.0)).collect();
    TimeSeriesBatch::new(data, n, c, t).unwrap()
}

fn instance() -> impl Strategy<Value = (TimeSeriesBatch, KernelSet, PoolingConfig)> {
    (1usize..=8, 1usize..=4, 11usize..=256, 1usize..=64, any::<u64>(), prop::bool::ANY, 0.5f32..20.0).prop_map(
        |(n, c, t, k, seed, soft, lambda)| {
            let batch = random_batch(seed, n, c, t);
            let kernels = generate_kernels(seed ^ 0xabc, k, t, c).unwrap();
            let pooling = if soft {
                PoolingConfig::soft(lambda)
            } else {
                PoolingConfig::hard()
            };
            (batch, kernels, pooling)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fast_transform_matches_reference((batch, kernels, pooling) in instance()) {
        let fast = transform_batch(&batch, &kernels, &pooling).unwrap();
        let slow = transform_reference(&batch, &kernels, &pooling).unwrap();
        let diff = fast.max_abs_diff(&slow).expect("same shape");
        prop_assert!(diff <= 1e-4, "max abs diff {diff}");
    }

    #[test]
    fn rows_depend_only_on_their_example((batch, kernels, pooling) in instance(), pick in any::<prop::sample::Index>()) {
        let all = transform_batch(&batch, &kernels, &pooling).unwrap();
        let i = pick.index(batch.n_examples());
        let single = transform_batch(&batch.select(&[i]), &kernels, &pooling).unwrap();
        prop_assert_eq!(single.row(0), all.row(i));
    }
}

#[test]
fn bit_identical_across_worker_counts() {
    let batch = random_batch(5, 12, 3, 300);
    let kernels = generate_kernels(11, 200, 300, 3).unwrap();
    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    for pooling in [PoolingConfig::hard(), PoolingConfig::soft(4.0)] {
        let base = Engine::sequential().transform(&batch, &kernels, &pooling).unwrap();
        for workers in [1, 2, max] {
            let engine = Engine::new(Execution::Parallel { workers: Some(workers) }).unwrap();
            let out = engine.transform(&batch, &kernels, &pooling).unwrap();
            let same = out.values().iter().zip(base.values()).all(|(a, b)| a.to_bits() == b.to_bits());
            assert!(same, "{workers} workers diverged under {pooling:?}");
        }
    }
}

#[test]
fn permuting_examples_permutes_rows() {
    let batch = random_batch(8, 6, 2, 128);
    let kernels = generate_kernels(3, 40, 128, 2).unwrap();
    let pooling = PoolingConfig::hard();
    let order = [4, 0, 5, 2, 1, 3];
    let base = transform_batch(&batch, &kernels, &pooling).unwrap();
    let permuted = transform_batch(&batch.select(&order), &kernels, &pooling).unwrap();
    for (row, &src) in order.iter().enumerate() {
        assert_eq!(permuted.row(row), base.row(src));
    }
}

#[test]
fn steep_soft_pooling_approaches_hard_pooling() {
    let batch = random_batch(21, 4, 3, 200);
    let kernels = generate_kernels(9, 100, 200, 3).unwrap();
    let hard = transform_batch(&batch, &kernels, &PoolingConfig::hard()).unwrap();
    let soft = transform_batch(&batch, &kernels, &PoolingConfig::soft(1000.0)).unwrap();
    // max features are identical; PPV columns differ only through values near 0
    let diff = soft.max_abs_diff(&hard).unwrap();
    assert!(diff < 0.05, "max diff {diff}");
    for (i, (a, b)) in soft.values().iter().zip(hard.values()).enumerate() {
        if i % 2 == 1 {
            assert_eq!(a, b);
        }
    }
}
