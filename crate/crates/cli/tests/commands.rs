//! End-to-end command behaviors on a miniature dataset: generation
//! hygiene, training record invariants, determinism, evaluation output
//! shape, container round-trips, and report emission.

use std::path::Path;

use rim_cli::config::ExperimentConfig;
use rim_cli::evaluate::{cmd_evaluate, EvalTarget};
use rim_cli::mitigate::cmd_mitigate;
use rim_cli::pipeline::Method;
use rim_cli::report::cmd_report;
use rim_cli::train::cmd_train;
use rim_core::dataset::{build_dataset, DatasetSizes};
use rim_core::io::CubeReader;
use rim_core::spectrum::SpectrumConfig;
use rim_core::Error;

fn tiny_cfg(root: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.dataset_dir = root.join("ds");
    cfg.output_dir = root.join("runs");
    cfg.radar.num_sweeps = 12;
    cfg.radar.samples_per_sweep = 32;
    cfg.radar.num_receivers = 4;
    cfg.distribution.objects_max = 3;
    cfg.distribution.range_m = [2.0, 8.0];
    cfg.sizes = DatasetSizes {
        train: 6,
        val: 3,
        test: 3,
    };
    cfg.spectrum = SpectrumConfig {
        range_bins: 16,
        doppler_bins: 12,
    };
    cfg.cfar.window = [5, 5, 3];
    cfg.cfar.guard = [1, 1, 1];
    cfg.batch_size = 4;
    cfg.max_epochs = 2;
    cfg.patience = 2;
    cfg.validate().unwrap();
    cfg
}

fn generate(cfg: &ExperimentConfig) {
    build_dataset(
        &cfg.dataset_dir,
        &cfg.radar,
        &cfg.distribution,
        &cfg.sizes,
        cfg.seed,
        false,
    )
    .unwrap();
}

#[test]
fn generation_refuses_overwrites_and_reproduces_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_cfg(dir.path());
    let first = build_dataset(
        &cfg.dataset_dir,
        &cfg.radar,
        &cfg.distribution,
        &cfg.sizes,
        cfg.seed,
        false,
    )
    .unwrap();

    let again = build_dataset(
        &cfg.dataset_dir,
        &cfg.radar,
        &cfg.distribution,
        &cfg.sizes,
        cfg.seed,
        false,
    );
    assert!(matches!(again, Err(Error::AlreadyExists { .. })));

    let forced = build_dataset(
        &cfg.dataset_dir,
        &cfg.radar,
        &cfg.distribution,
        &cfg.sizes,
        cfg.seed,
        true,
    )
    .unwrap();
    for (a, b) in first.splits.iter().zip(forced.splits.iter()) {
        assert_eq!(a.sha256, b.sha256, "split {} not reproduced", a.name);
    }
}

#[test]
fn training_keeps_the_best_epoch_and_restores() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_cfg(dir.path());
    generate(&cfg);

    let outcome = cmd_train(&cfg).unwrap();
    let record = &outcome.record;
    assert!(record.epochs[0].train_loss.is_none());
    assert_eq!(record.epochs[0].epoch, 0);
    assert!(record.epochs.len() >= 2);
    let max = record
        .epochs
        .iter()
        .map(|e| e.val_f1)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((record.best_val_f1 - max).abs() < 1e-12);
    record.check().unwrap();

    assert!(outcome.checkpoint_path.exists());
    assert!(cfg.run_record_path().exists());
    let (ckpt, _model) = rim_cli::pipeline::restore(&outcome.checkpoint_path).unwrap();
    assert_eq!(ckpt.meta.objective, "bce");
    assert_eq!(ckpt.meta.seed, cfg.seed);
    assert_eq!(ckpt.meta.epoch, record.best_epoch);
}

#[test]
fn training_twice_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_cfg(dir.path());
    generate(&cfg);

    cfg.output_dir = dir.path().join("runs-a");
    let a = cmd_train(&cfg).unwrap();
    cfg.output_dir = dir.path().join("runs-b");
    let b = cmd_train(&cfg).unwrap();

    let rec_a = serde_json::to_string(&a.record).unwrap();
    let rec_b = serde_json::to_string(&b.record).unwrap();
    assert_eq!(rec_a, rec_b);
    let bytes_a = std::fs::read(&a.checkpoint_path).unwrap();
    let bytes_b = std::fs::read(&b.checkpoint_path).unwrap();
    assert_eq!(bytes_a, bytes_b, "checkpoints differ between identical runs");
}

#[test]
fn clean_input_scores_perfectly_under_no_mitigation() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_cfg(dir.path());
    // No interferers: the interfered cube equals the clean cube exactly.
    cfg.distribution.interferers_min = 0;
    cfg.distribution.interferers_max = 0;
    generate(&cfg);

    let outcome = cmd_evaluate(&cfg, "test", &EvalTarget::Method(Method::None), None).unwrap();
    assert_eq!(outcome.scores.per_sample.len(), 3);
    assert!((outcome.scores.f1() - 1.0).abs() < 1e-15);
    assert_eq!(outcome.scores.mean_mse, Some(0.0));

    let csv = std::fs::read_to_string(&outcome.csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 3 + 1, "header, samples, aggregate");
    assert!(lines.last().unwrap().starts_with("aggregate,1.000000,"));
}

#[test]
fn phase_blind_checkpoints_report_no_mse_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_cfg(dir.path());
    generate(&cfg);
    let trained = cmd_train(&cfg).unwrap();

    let outcome = cmd_evaluate(
        &cfg,
        "val",
        &EvalTarget::Checkpoint(trained.checkpoint_path),
        None,
    )
    .unwrap();
    assert_eq!(outcome.scores.label, "nn (bce)");
    assert_eq!(outcome.scores.mean_mse, None);
    let csv = std::fs::read_to_string(&outcome.csv_path).unwrap();
    for line in csv.lines().skip(1) {
        assert!(line.ends_with(",-"), "expected - in the mse column: {line}");
    }
}

#[test]
fn mitigated_cubes_round_trip_through_the_container() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_cfg(dir.path());
    generate(&cfg);

    let outcome = cmd_mitigate(&cfg, "test", Method::Zeroing, None, false).unwrap();
    assert_eq!(outcome.samples, 3);
    let mut reader = CubeReader::open(&outcome.path).unwrap();
    assert_eq!(reader.dims(), &[3, 32, 12, 4]);
    assert_eq!(reader.num_blocks(), 3);
    assert_eq!(reader.read_block(0).unwrap().dims(), [32, 12, 4]);

    let refused = cmd_mitigate(&cfg, "test", Method::Zeroing, None, false);
    assert!(matches!(refused, Err(Error::AlreadyExists { .. })));
    cmd_mitigate(&cfg, "test", Method::Zeroing, None, true).unwrap();

    let nn = cmd_mitigate(&cfg, "test", Method::Nn, None, true);
    assert!(nn.is_err());
}

#[test]
fn report_emits_summary_rows_and_pgm_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_cfg(dir.path());
    generate(&cfg);
    let trained = cmd_train(&cfg).unwrap();

    let outcome = cmd_report(&cfg, &[trained.checkpoint_path], 1, None).unwrap();
    assert_eq!(outcome.rows.len(), 5);
    assert_eq!(outcome.rows[0].label, "no mitigation");
    assert_eq!(outcome.rows[4].label, "nn (bce)");

    let csv = std::fs::read_to_string(&outcome.summary_path).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5);
    assert!(csv.contains("ramp filter (approx.)"));

    // clean, interfered, truth, 3 mitigated + 3 detections, nn + detections.
    assert_eq!(outcome.dumps.len(), 11);
    for dump in &outcome.dumps {
        let bytes = std::fs::read(dump).unwrap();
        assert!(bytes.starts_with(b"P5\n"), "{} is not a binary PGM", dump.display());
    }

    let bad = cmd_report(&cfg, &[], 99, None);
    assert!(bad.is_err());
}

#[test]
fn binary_maps_usage_errors_to_exit_one() {
    let bin = env!("CARGO_BIN_EXE_rim");
    let run = |args: &[&str]| {
        std::process::Command::new(bin)
            .args(args)
            .output()
            .unwrap()
            .status
            .code()
            .unwrap()
    };
    assert_eq!(run(&["--help"]), 0);
    assert_eq!(run(&[]), 1);
    assert_eq!(run(&["frobnicate"]), 1);
    assert_eq!(run(&["evaluate", "--method", "frobnicate"]), 1);
    assert_eq!(run(&["evaluate"]), 1);
}
