//! Scheduling independence: the same config must produce byte-identical CSV
//! output no matter how many workers the pool runs, for both the exact
//! engine and the Monte Carlo fallback.

use keybins_cli::config::{DistortionSpec, EngineConfig, ExperimentConfig, KeySchedule};
use keybins_cli::sweep::{run_sweep, write_csv};

fn csv_under_pool(cfg: &ExperimentConfig, workers: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("local pool");
    pool.install(|| {
        let out = run_sweep(cfg).expect("sweep");
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        let mut buf = Vec::new();
        write_csv(&mut buf, &out.rows).expect("csv");
        buf
    })
}

fn base_config() -> ExperimentConfig {
    ExperimentConfig {
        source: vec![0.75, 0.25],
        distortion: DistortionSpec::Named("hamming".into()),
        n_list: vec![4, 6],
        schedule: KeySchedule::Constant { value: 4 },
        epsilon: 0.3,
        seeds: vec![1, 2, 3],
        engine: EngineConfig::default(),
        k_grid: vec![1, 2, 4],
    }
}

#[test]
fn exact_sweep_is_worker_count_independent() {
    let cfg = base_config();
    let one = csv_under_pool(&cfg, 1);
    let four = csv_under_pool(&cfg, 4);
    assert_eq!(one, four);
}

#[test]
fn monte_carlo_fallback_is_worker_count_independent() {
    let mut cfg = base_config();
    // A message cap this small forces every cell onto the sampling engine.
    cfg.engine.max_messages = 2;
    cfg.engine.mc_trials = 20_000;
    let one = csv_under_pool(&cfg, 1);
    let four = csv_under_pool(&cfg, 4);
    assert_eq!(one, four);
    let text = String::from_utf8(one).unwrap();
    assert!(text.contains("monte_carlo"), "{text}");
}
