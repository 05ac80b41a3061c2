//! Experiment runners: each takes a full configuration and produces an
//! [`ExperimentRecord`]. [`rerun`] re-executes any record from its own
//! config echo, which is what makes exported results reproducible
//! artifacts rather than snapshots.

use crate::config::{parse_usize_list, ExperimentConfig};
use crate::record::{cell, sweep_rows, ExperimentRecord, RecordKind};
use crate::sweeps;
use crate::{CliError, Result};
use losslab::hist::{self, HistogramConfig, ModeReport};
use losslab::net;
use losslab::probes;
use losslab::sphere;

fn mode_summary(report: &ModeReport) -> Vec<(String, String)> {
    vec![
        ("op".into(), "sample_histogram".into()),
        ("modes".into(), report.modes.len().to_string()),
        ("central_mode_loss".into(), cell(report.central_mode_loss)),
        ("zero_mode_mass".into(), cell(report.zero_mode_mass)),
        ("left_tail_mass".into(), cell(report.left_tail_mass)),
        ("central_reference".into(), cell(report.central_reference)),
    ]
}

fn histogram_rows(h: &losslab::hist::LossHistogram) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = (0..h.counts.len())
        .map(|b| {
            vec![
                cell(h.bin_edges[b]),
                cell(h.bin_edges[b + 1]),
                h.counts[b].to_string(),
            ]
        })
        .collect();
    rows.push(vec![
        cell(h.bin_edges[h.counts.len()]),
        "inf".into(),
        h.overflow_count.to_string(),
    ]);
    rows
}

pub fn histogram_config(config: &ExperimentConfig) -> Result<(HistogramConfig, losslab::data::Dataset)> {
    let dataset = config.dataset()?;
    let spec = config.network_spec(dataset.input_dim)?;
    Ok((
        HistogramConfig {
            spec,
            sample_indices: config.sample_indices(dataset.len())?,
            n_trials: config.trials,
            bin_policy: config.hist_bin_policy()?,
            master_seed: config.seed,
        },
        dataset,
    ))
}

/// `hist sample` / `hist modes`: Monte-Carlo histogram plus mode report.
pub fn run_histogram(config: &ExperimentConfig, label: &str) -> Result<(ExperimentRecord, ModeReport)> {
    let (hc, dataset) = histogram_config(config)?;
    let histogram = hist::sample_histogram(&hc, &dataset.samples)?;
    let report = hist::detect_modes(&histogram, config.prominence)?;
    let mut record = ExperimentRecord::new(
        RecordKind::Histogram,
        label,
        vec!["bin_left".into(), "bin_right".into(), "count".into()],
        histogram_rows(&histogram),
        config,
    );
    record.summary = mode_summary(&report);
    record.summary.push(("min_loss".into(), cell(histogram.min_loss)));
    record.summary.push(("max_loss".into(), cell(histogram.max_loss)));
    Ok((record, report))
}

/// `hist tail`: continue sampling past the base trial count, keeping
/// only losses under the boundary.
pub fn run_tail(config: &ExperimentConfig, label: &str) -> Result<ExperimentRecord> {
    let (hc, dataset) = histogram_config(config)?;
    let tail = hist::tail_resample(
        &hc,
        &dataset.samples,
        config.tail_boundary,
        config.tail_target,
        config.tail_max_trials,
    )?;
    let mut record = ExperimentRecord::new(
        RecordKind::Histogram,
        label,
        vec!["bin_left".into(), "bin_right".into(), "count".into()],
        histogram_rows(&tail.histogram),
        config,
    );
    record.summary = vec![
        ("op".into(), "tail_resample".into()),
        ("retained".into(), tail.retained.to_string()),
        ("trials_consumed".into(), tail.trials_consumed.to_string()),
        ("acceptance_rate".into(), cell(tail.acceptance_rate)),
        ("target_reached".into(), tail.target_reached.to_string()),
        ("tail_unreachable".into(), tail.tail_unreachable().to_string()),
    ];
    Ok(record)
}

/// `sphere curve`: (n, volume, surface) table.
pub fn run_sphere_curve(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    let rows = sphere::curve_table(config.radius, config.max_dim, config.step)?;
    let table = rows
        .iter()
        .map(|m| vec![cell(m.dimension), cell(m.volume), cell(m.surface)])
        .collect();
    let mut record = ExperimentRecord::new(
        RecordKind::SphereCurve,
        "",
        vec!["n".into(), "volume".into(), "surface".into()],
        table,
        config,
    );
    record.summary = vec![
        ("op".into(), "sphere_curve".into()),
        ("volume_peak".into(), cell(sphere::volume_peak_dimension(config.radius)?)),
        (
            "volume_argmax_int".into(),
            sphere::volume_argmax_integer(config.radius)?.to_string(),
        ),
        (
            "surface_argmax_int".into(),
            sphere::surface_argmax_integer(config.radius)?.to_string(),
        ),
    ];
    Ok(record)
}

/// `sweep capacity` over the `[sweep]` width list.
pub fn run_capacity(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    let dataset = config.dataset()?;
    let widths = parse_usize_list(&config.sweep_widths)?;
    let spec = config.network_spec(dataset.input_dim)?;
    let points = sweeps::run_capacity_sweep(
        &widths,
        config.sweep_depth,
        &spec,
        &dataset.samples,
        config.label_noise,
        config.split,
        config.epochs,
        config.lr,
        config.batch_size,
        config.seed,
    )?;
    let mut record = ExperimentRecord::new(
        RecordKind::CapacitySweep,
        "",
        vec![
            "param_count".into(),
            "train_loss".into(),
            "test_loss".into(),
            "train_error".into(),
            "test_error".into(),
            "failed".into(),
        ],
        sweep_rows(&points),
        config,
    );
    record.summary = vec![("op".into(), "capacity_sweep".into())];
    Ok(record)
}

/// `sweep epoch`: per-epoch curves plus cadence probes.
pub fn run_epoch(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    let dataset = config.dataset()?;
    let spec = config.network_spec(dataset.input_dim)?;
    let rows = sweeps::run_epoch_sweep(
        &spec,
        &dataset.samples,
        config.label_noise,
        config.split,
        config.epochs,
        config.lr,
        config.batch_size,
        config.seed,
        config.cadence,
        config.ensemble_k,
        config.probe_batch,
    )?;
    let opt = |v: Option<f64>| v.map_or(String::new(), cell);
    let table = rows
        .iter()
        .map(|r| {
            vec![
                r.epoch.to_string(),
                cell(r.train_loss),
                cell(r.test_loss),
                opt(r.confusion),
                opt(r.id_two_nn),
                opt(r.id_participation),
            ]
        })
        .collect();
    let mut record = ExperimentRecord::new(
        RecordKind::EpochSweep,
        "",
        vec![
            "epoch".into(),
            "train_loss".into(),
            "test_loss".into(),
            "confusion".into(),
            "id_two_nn".into(),
            "id_pr".into(),
        ],
        table,
        config,
    );
    record.summary = vec![("op".into(), "epoch_sweep".into())];
    Ok(record)
}

/// `sweep fidelity` over the `[sweep]` size list.
pub fn run_fidelity(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    let dataset = config.dataset()?;
    let sizes = parse_usize_list(&config.sweep_sizes)?;
    let spec = config.network_spec(dataset.input_dim)?;
    let points = sweeps::run_fidelity_sweep(
        &spec,
        &dataset.samples,
        &sizes,
        config.label_noise,
        config.split,
        config.epochs,
        config.lr,
        config.batch_size,
        config.seed,
        config.repeats,
    )?;
    let mut record = ExperimentRecord::new(
        RecordKind::FidelitySweep,
        "",
        vec![
            "size".into(),
            "train_loss".into(),
            "test_loss".into(),
            "train_error".into(),
            "test_error".into(),
            "failed".into(),
        ],
        sweep_rows(&points),
        config,
    );
    record.summary = vec![("op".into(), "fidelity_sweep".into())];
    Ok(record)
}

/// `probe tendril`: train, then profile intrinsic dimension and confusion
/// along the snapshots.
pub fn run_tendril(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    let dataset = config.dataset()?;
    let spec = config.network_spec(dataset.input_dim)?;
    let indices = config.sample_indices(dataset.len())?;
    let train_data: Vec<_> = indices.iter().map(|&i| dataset.samples[i].clone()).collect();
    let run = net::train(
        &spec,
        &train_data,
        config.lr,
        config.epochs,
        config.batch_size.min(train_data.len()).max(1),
        config.seed,
        config.snapshot_every,
    )
    .map_err(CliError::from)?;
    let profile = probes::tendril_profile(
        &run,
        &train_data,
        config.probe_batch.min(train_data.len()).max(1),
        config.ensemble_k,
        losslab::rng::mix(config.seed, 0x7E),
    )?;
    let opt = |v: Option<f64>| v.map_or(String::new(), cell);
    let table = profile
        .iter()
        .map(|p| {
            vec![
                p.epoch.to_string(),
                cell(p.loss),
                opt(p.id_two_nn),
                opt(p.id_participation),
                opt(p.confusion),
            ]
        })
        .collect();
    let mut record = ExperimentRecord::new(
        RecordKind::Tendril,
        "",
        vec![
            "epoch".into(),
            "loss".into(),
            "id_two_nn".into(),
            "id_pr".into(),
            "confusion".into(),
        ],
        table,
        config,
    );
    record.summary = vec![("op".into(), "tendril".into())];
    Ok(record)
}

/// Re-execute a record from its embedded config echo. The new record has
/// a fresh timestamp; its CSV must be byte-identical to the original's.
pub fn rerun(record: &ExperimentRecord) -> Result<ExperimentRecord> {
    let config = record.config()?;
    let op = record
        .summary
        .iter()
        .find(|(k, _)| k == "op")
        .map(|(_, v)| v.as_str())
        .unwrap_or("");
    let mut fresh = match record.kind {
        RecordKind::Histogram if op == "tail_resample" => run_tail(&config, &record.label)?,
        RecordKind::Histogram => run_histogram(&config, &record.label)?.0,
        RecordKind::SphereCurve => run_sphere_curve(&config)?,
        RecordKind::CapacitySweep => run_capacity(&config)?,
        RecordKind::EpochSweep => run_epoch(&config)?,
        RecordKind::FidelitySweep => run_fidelity(&config)?,
        RecordKind::Tendril => run_tendril(&config)?,
    };
    fresh.label = record.label.clone();
    Ok(fresh)
}
