//! Harness integration tests: record round-trips, re-run closure, CLI
//! byte determinism, SVG well-formedness and exit codes.

use losslab_cli::config::{ExperimentConfig, Format};
use losslab_cli::record::{ExperimentRecord, RecordKind};
use losslab_cli::run;

use std::process::Command;

/// Minimal XML well-formedness check: every tag closes, nesting matches,
/// attributes are quoted. Independent of the SVG writer.
fn assert_well_formed_xml(text: &str) {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        let tail = &rest[start + 1..];
        let end = tail.find('>').unwrap_or_else(|| panic!("unclosed tag near: {:.40}", rest));
        let tag = &tail[..end];
        rest = &tail[end + 1..];
        if tag.starts_with('?') || tag.starts_with('!') {
            continue;
        }
        if let Some(name) = tag.strip_prefix('/') {
            let open = stack.pop().unwrap_or_else(|| panic!("stray closing tag </{name}>"));
            assert_eq!(open, name.trim(), "mismatched closing tag");
            continue;
        }
        let self_closing = tag.ends_with('/');
        let body = if self_closing { &tag[..tag.len() - 1] } else { tag };
        let name = body.split_whitespace().next().expect("empty tag");
        // attribute quoting: quotes must balance
        let quotes = body.matches('"').count();
        assert_eq!(quotes % 2, 0, "unbalanced quotes in <{body}>");
        if !self_closing {
            stack.push(name.to_string());
        }
    }
    assert!(stack.is_empty(), "unclosed tags: {stack:?}");
}

fn small_sweep_config() -> ExperimentConfig {
    let mut config = ExperimentConfig::default();
    config.data_source = "synthetic".into();
    config.synthetic_n = 60;
    config.sweep_widths = "1;4".into();
    config.sweep_sizes = "8;16".into();
    config.repeats = 2;
    config.epochs = 8;
    config.cadence = 4;
    config.ensemble_k = 8;
    config.trials = 2_000;
    config.seed = 31;
    config
}

#[test]
fn export_import_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_sweep_config();
    let record = run::run_capacity(&config).unwrap();
    record.export(dir.path(), Format::Both).unwrap();
    let imported =
        ExperimentRecord::import(&dir.path().join(format!("{}.csv", record.stem()))).unwrap();
    assert_eq!(imported, record);
}

#[test]
fn exported_bytes_are_deterministic_given_record() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let config = small_sweep_config();
    let record = run::run_fidelity(&config).unwrap();
    record.export(dir_a.path(), Format::Both).unwrap();
    record.export(dir_b.path(), Format::Both).unwrap();
    for ext in ["csv", "cfg", "svg"] {
        let name = format!("{}.{ext}", record.stem());
        let a = std::fs::read(dir_a.path().join(&name)).unwrap();
        let b = std::fs::read(dir_b.path().join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs between exports");
    }
}

#[test]
fn rerun_from_echo_reproduces_every_kind() {
    let config = small_sweep_config();
    let records = vec![
        run::run_histogram(&config, "").unwrap().0,
        run::run_sphere_curve(&config).unwrap(),
        run::run_capacity(&config).unwrap(),
        run::run_epoch(&config).unwrap(),
        run::run_fidelity(&config).unwrap(),
        {
            let mut tendril_config = config.clone();
            tendril_config.samples = "all".into();
            tendril_config.epochs = 10;
            tendril_config.snapshot_every = 5;
            run::run_tendril(&tendril_config).unwrap()
        },
    ];
    for record in records {
        let again = run::rerun(&record).unwrap();
        assert_eq!(
            again.to_csv(),
            record.to_csv(),
            "{} did not re-run bit-identically",
            record.stem()
        );
    }
}

#[test]
fn svg_outputs_are_well_formed() {
    let config = small_sweep_config();
    let records = vec![
        run::run_histogram(&config, "").unwrap().0,
        run::run_sphere_curve(&config).unwrap(),
        run::run_capacity(&config).unwrap(),
    ];
    for record in &records {
        assert_well_formed_xml(&record.to_svg());
    }
    // sanity-check the checker itself
    assert_well_formed_xml("<a x=\"1\"><b/>text</a>");
    let bad = std::panic::catch_unwind(|| assert_well_formed_xml("<a><b></a>"));
    assert!(bad.is_err());
}

fn losslab_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_losslab"))
}

#[test]
fn cli_outputs_are_byte_identical_across_runs() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [dir_a.path(), dir_b.path()] {
        let status = losslab_bin()
            .args([
                "--out",
                dir.to_str().unwrap(),
                "--seed",
                "77",
                "hist",
                "sample",
                "--trials",
                "3000",
                "--width",
                "4",
                "--depth",
                "2",
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(dir_a.path().join("histogram_77.csv")).unwrap();
    let b = std::fs::read(dir_b.path().join("histogram_77.csv")).unwrap();
    assert_eq!(a, b);
    let a = std::fs::read(dir_a.path().join("histogram_77.svg")).unwrap();
    let b = std::fs::read(dir_b.path().join("histogram_77.svg")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cli_exit_codes() {
    // config typo names the unknown key, exit 1
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.cfg");
    std::fs::write(&config_path, "[network]\nwidht = 3\n").unwrap();
    let out = losslab_bin()
        .args(["--config", config_path.to_str().unwrap(), "sphere", "peak"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("widht"), "{stderr}");
    assert!(stderr.contains("line 2"), "{stderr}");

    // domain error, exit 1
    let out = losslab_bin().args(["sphere", "support", "--dim", "2", "--sigma", "-1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // unwritable output path, exit 2, path in message
    let out = losslab_bin()
        .args(["--out", "/proc/losslab-denied", "sphere", "curve", "--max-dim", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/proc/losslab-denied"));

    // success
    let out = losslab_bin().args(["sphere", "peak"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn cli_compare_reports_zero_mode_shift_for_scaled_init() {
    // uniform init at scale 2.0 shifts mass into the zero mode relative
    // to scale 1.0: the compare report's delta is positive
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::default();
    config.width = 6;
    config.depth = 2;
    config.init = "plain_uniform".into();
    config.trials = 20_000;
    config.seed = 5;
    config.init_scale = 1.0;
    let low = run::run_histogram(&config, "low").unwrap().0;
    low.export(dir.path(), Format::Csv).unwrap();
    config.init_scale = 2.0;
    let high = run::run_histogram(&config, "high").unwrap().0;
    high.export(dir.path(), Format::Csv).unwrap();

    let out = losslab_bin()
        .args([
            "hist",
            "compare",
            "--a",
            dir.path().join(format!("{}.csv", low.stem())).to_str().unwrap(),
            "--b",
            dir.path().join(format!("{}.csv", high.stem())).to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let delta: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("zero_mode_mass_delta = "))
        .expect("delta line present")
        .parse()
        .unwrap();
    assert!(delta > 0.0, "expected positive zero-mode shift, got {delta}\n{stdout}");
}

#[test]
fn env_var_sets_default_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let status = losslab_bin()
        .env("LOSSLAB_OUT", dir.path())
        .args(["--seed", "3", "sphere", "curve", "--max-dim", "4", "--step", "1"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("sphere_curve_3.csv").exists());
}

#[test]
fn export_subcommand_reimports_and_reemits() {
    let dir = tempfile::tempdir().unwrap();
    let out2 = tempfile::tempdir().unwrap();
    let config = small_sweep_config();
    let record = run::run_histogram(&config, "").unwrap().0;
    record.export(dir.path(), Format::Csv).unwrap();
    let status = losslab_bin()
        .args([
            "export",
            "--record",
            dir.path().join(format!("{}.csv", record.stem())).to_str().unwrap(),
            "--out",
            out2.path().to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let original = std::fs::read(dir.path().join(format!("{}.csv", record.stem()))).unwrap();
    let reemitted = std::fs::read(out2.path().join(format!("{}.csv", record.stem()))).unwrap();
    assert_eq!(original, reemitted);
    assert_eq!(record.kind, RecordKind::Histogram);
}
