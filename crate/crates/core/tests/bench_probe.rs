use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use rocket_forge::bench::{run_benchmark_with_probe, BenchConfig, TimingProbe};
use rocket_forge::PoolingConfig;

struct Counting;

static TRACKING: AtomicBool = AtomicBool::new(false);
static LARGEST: AtomicUsize = AtomicUsize::new(0);
static TOTAL: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        if TRACKING.load(Ordering::Relaxed) {
            LARGEST.fetch_max(layout.size(), Ordering::Relaxed);
            TOTAL.fetch_add(layout.size(), Ordering::Relaxed);
        }
        unsafe { System.alloc(layout) }
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) }
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

#[derive(Default)]
struct Probe {
    /// (batch size, largest allocation, total bytes) per timed call.
    calls: Vec<(usize, usize, usize)>,
}

impl TimingProbe for Probe {
    fn enter(&mut self, _batch_size: usize) {
        LARGEST.store(0, Ordering::Relaxed);
        TOTAL.store(0, Ordering::Relaxed);
        TRACKING.store(true, Ordering::SeqCst);
    }

    fn exit(&mut self, batch_size: usize) {
        TRACKING.store(false, Ordering::SeqCst);
        let largest = LARGEST.load(Ordering::Relaxed);
        let total = TOTAL.load(Ordering::Relaxed);
        self.calls.push((batch_size, largest, total));
    }
}

#[test]
fn timed_region_never_allocates_input_data() {
    let config = BenchConfig {
        batch_sizes: vec![4, 16, 1],
        repeats: 2,
        warmup_iters: 1,
        num_kernels: 16,
        n_channels: 4,
        n_timesteps: 512,
        pooling: PoolingConfig::hard(),
        seed: 3,
        workers: Some(1),
        memory_budget_bytes: 1 << 30,
    };
    let mut probe = Probe::default();
    let report = run_benchmark_with_probe(&config, &mut probe).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert_eq!(probe.calls.len(), 6);
    for (batch_size, largest, total) in probe.calls {
        let input_bytes = batch_size * config.n_channels * config.n_timesteps * 4;
        assert!(largest < input_bytes, "batch {batch_size}: {largest}-byte allocation in timed region");
        assert!(total < input_bytes, "batch {batch_size}: {total} bytes allocated in timed region");
    }
}

#[test]
fn reports_share_row_structure_across_runs() {
    let config = BenchConfig {
        batch_sizes: vec![3, 1, 2],
        repeats: 2,
        warmup_iters: 0,
        num_kernels: 8,
        n_channels: 2,
        n_timesteps: 64,
        ..BenchConfig::default()
    };
    let a = rocket_forge::bench::run_benchmark(&config).unwrap();
    let b = rocket_forge::bench::run_benchmark(&config).unwrap();
    let shape = |r: &rocket_forge::bench::BenchReport| {
        r.rows.iter().map(|row| (row.batch_size, row.wall_seconds.len())).collect::<Vec<_>>()
    };
    assert_eq!(shape(&a), vec![(1, 2), (2, 2), (3, 2)]);
    assert_eq!(shape(&a), shape(&b));
    assert_eq!(a.metadata.execution_order, b.metadata.execution_order);
}
