//! `losslab` — command-line laboratory for loss-landscape geometry.

use clap::{Args, Parser, Subcommand};
use losslab_cli::config::{parse_u32_list, ExperimentConfig};
use losslab_cli::record::ExperimentRecord;
use losslab_cli::recipes::{self, RecipeName};
use losslab_cli::run;
use losslab_cli::{CliError, Result};

use std::path::PathBuf;
use std::process::ExitCode;

const CONFIG_HELP: &str = "CONFIGURATION\n\
    Every run is controlled by a flat key=value file with [section] \
    headers; command-line flags override file values. An empty or missing \
    file means the defaults below. Unknown keys are rejected with their \
    line number. The default output directory is taken from [run] out, \
    the LOSSLAB_OUT environment variable, or ./out.\n\nDEFAULTS\n";

fn default_config_help() -> String {
    let defaults = ExperimentConfig::default().serialize();
    let indented: String = defaults.lines().map(|l| format!("    {l}\n")).collect();
    format!("{CONFIG_HELP}{indented}\nEXIT CODES\n    0 success, 1 domain/config error, 2 I/O error")
}

#[derive(Parser)]
#[command(
    name = "losslab",
    version,
    about = "Desk-scale laboratory for the geometry of neural-network loss landscapes",
    after_long_help = default_config_help()
)]
struct Cli {
    /// Configuration file (flat key=value with bracketed section headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides [run] seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); overrides [run] workers.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; overrides [run] out and LOSSLAB_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Figure outputs: csv, svg or both.
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// n-ball geometry: curves, peaks, distances, support volumes.
    Sphere {
        #[command(subcommand)]
        op: SphereOp,
    },
    /// Monte-Carlo loss histograms over random initializations.
    Hist {
        #[command(subcommand)]
        op: HistOp,
    },
    /// Fit a left-bounded distribution to positive samples and KS-test it.
    Fit {
        /// lognormal, gamma or weibull.
        #[arg(long)]
        family: String,
        /// File of positive reals, one per line.
        #[arg(long)]
        input: PathBuf,
    },
    /// Train a tiny MLP with constant-rate SGD and export the loss curve.
    Train(NetTrainArgs),
    /// Geometry probes along training paths.
    Probe {
        #[command(subcommand)]
        op: ProbeOp,
    },
    /// Double-descent sweep harnesses.
    Sweep {
        #[command(subcommand)]
        op: SweepOp,
    },
    /// Run a pinned replication recipe.
    Recipe {
        /// relu_vs_tanh, width_transition, depth_transition,
        /// tail_closeup, init_scaling or sample_aggregation.
        name: String,
    },
    /// Re-export a stored record (.csv/.cfg pair) to another directory.
    Export {
        /// Path to the record's .csv, .cfg, or bare stem.
        #[arg(long)]
        record: PathBuf,
    },
}

#[derive(Subcommand)]
enum SphereOp {
    /// Emit the (n, volume, surface) curve table.
    Curve {
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        max_dim: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Real and integer dimensions of peak volume and surface.
    Peak {
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Monte-Carlo expected distance between two uniform ball points.
    Distance {
        /// Semicolon-separated dimensions, e.g. 2;8;32;128.
        #[arg(long)]
        dims: Option<String>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Volume where an isotropic Gaussian density exceeds a threshold.
    Support {
        #[arg(long)]
        dim: u32,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        threshold: Option<f64>,
    },
}

#[derive(Args)]
struct NetArgs {
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    /// relu or tanh.
    #[arg(long)]
    activation: Option<String>,
    /// he_normal, he_uniform, xavier_normal, plain_normal, plain_uniform.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    init_scale: Option<f64>,
    /// bundled, synthetic, or a CSV path.
    #[arg(long)]
    data: Option<String>,
}

impl NetArgs {
    fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(v) = self.width {
            config.width = v;
        }
        if let Some(v) = self.depth {
            config.depth = v;
        }
        if let Some(v) = &self.activation {
            config.activation = v.clone();
        }
        if let Some(v) = &self.init {
            config.init = v.clone();
        }
        if let Some(v) = self.init_scale {
            config.init_scale = v;
        }
        if let Some(v) = &self.data {
            config.data_source = v.clone();
        }
    }
}

#[derive(Args)]
struct HistArgs {
    #[command(flatten)]
    net: NetArgs,
    #[arg(long)]
    trials: Option<u64>,
    /// Semicolon-separated row indices, or "all".
    #[arg(long)]
    samples: Option<String>,
    /// fixed or min_anchored.
    #[arg(long)]
    bin_policy: Option<String>,
    #[arg(long)]
    bin_width: Option<f64>,
    #[arg(long)]
    bin_count: Option<usize>,
}

impl HistArgs {
    fn apply(&self, config: &mut ExperimentConfig) {
        self.net.apply(config);
        if let Some(v) = self.trials {
            config.trials = v;
        }
        if let Some(v) = &self.samples {
            config.samples = v.clone();
        }
        if let Some(v) = &self.bin_policy {
            config.bin_policy = v.clone();
        }
        if let Some(v) = self.bin_width {
            config.bin_width = v;
        }
        if let Some(v) = self.bin_count {
            config.bin_count = v;
        }
    }
}

#[derive(Subcommand)]
enum HistOp {
    /// Sample a histogram and export it.
    Sample(HistArgs),
    /// Sample a histogram and report its modes and mass metrics.
    Modes {
        #[command(flatten)]
        hist: HistArgs,
        #[arg(long)]
        prominence: Option<f64>,
    },
    /// Resample the left tail until enough sub-boundary losses are kept.
    Tail {
        #[command(flatten)]
        hist: HistArgs,
        #[arg(long)]
        boundary: Option<f64>,
        #[arg(long)]
        target: Option<u64>,
        #[arg(long)]
        max_trials: Option<u64>,
    },
    /// Compare two exported histograms (zero-mode, left-tail, Wasserstein).
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

#[derive(Args)]
struct NetTrainArgs {
    #[command(flatten)]
    net: NetArgs,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Train on these dataset rows only (default: all).
    #[arg(long)]
    samples: Option<String>,
}

impl NetTrainArgs {
    fn apply(&self, config: &mut ExperimentConfig) {
        self.net.apply(config);
        if let Some(v) = self.lr {
            config.lr = v;
        }
        if let Some(v) = self.epochs {
            config.epochs = v;
        }
        if let Some(v) = self.batch_size {
            config.batch_size = v;
        }
        if let Some(v) = self.snapshot_every {
            config.snapshot_every = v;
        }
        if let Some(v) = &self.samples {
            config.samples = v.clone();
        }
    }
}

#[derive(Subcommand)]
enum ProbeOp {
    /// Train, then profile intrinsic dimension and confusion along the
    /// snapshots.
    Tendril {
        #[command(flatten)]
        train: NetTrainArgs,
        #[arg(long)]
        ensemble_k: Option<usize>,
        #[arg(long)]
        probe_batch: Option<usize>,
    },
    /// Gradient confusion of a minibatch ensemble at initialization (or
    /// after --epochs of training).
    Confusion {
        #[command(flatten)]
        train: NetTrainArgs,
        #[arg(long)]
        ensemble_k: Option<usize>,
        #[arg(long)]
        probe_batch: Option<usize>,
    },
    /// Closed-form influence ratio (parameter interactions / parameters).
    Influence {
        #[command(flatten)]
        net: NetArgs,
    },
}

#[derive(Subcommand)]
enum SweepOp {
    /// Width ladder: one trained network per width (--depth fixes the
    /// shared hidden depth).
    Capacity {
        #[command(flatten)]
        train: NetTrainArgs,
        /// Semicolon-separated widths.
        #[arg(long)]
        widths: Option<String>,
        #[arg(long)]
        label_noise: Option<f64>,
        #[arg(long)]
        split: Option<f64>,
    },
    /// Single run, per-epoch train/test curves plus geometry probes.
    Epoch {
        #[command(flatten)]
        train: NetTrainArgs,
        #[arg(long)]
        label_noise: Option<f64>,
        #[arg(long)]
        split: Option<f64>,
        #[arg(long)]
        cadence: Option<usize>,
    },
    /// Training-set size ladder with nested subsampling.
    Fidelity {
        #[command(flatten)]
        train: NetTrainArgs,
        /// Semicolon-separated sizes, strictly increasing.
        #[arg(long)]
        sizes: Option<String>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        label_noise: Option<f64>,
        #[arg(long)]
        split: Option<f64>,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(workers) = cli.workers {
        config.workers = workers;
    }
    if let Some(out) = &cli.out {
        config.out = out.display().to_string();
    }
    if let Some(format) = &cli.format {
        config.format = format.parse()?;
    }
    Ok(config)
}

fn export_and_note(record: &ExperimentRecord, config: &ExperimentConfig) -> Result<()> {
    let dir = config.out_dir();
    let paths = record.export(&dir, config.format)?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn print_summary(record: &ExperimentRecord) {
    for (k, v) in &record.summary {
        println!("{k} = {v}");
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let mut config = load_config(cli)?;
    if config.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build_global()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    }

    match &cli.command {
        Command::Sphere { op } => sphere_command(op, &mut config),
        Command::Hist { op } => hist_command(op, &mut config),
        Command::Fit { family, input } => fit_command(family, input, &config),
        Command::Train(args) => {
            args.apply(&mut config);
            train_command(&config)
        }
        Command::Probe { op } => probe_command(op, &mut config),
        Command::Sweep { op } => sweep_command(op, &mut config),
        Command::Recipe { name } => {
            let recipe: RecipeName = name.parse()?;
            let records = recipes::run_recipe(recipe, &config)?;
            for record in &records {
                println!("[{}]", record.stem());
                print_summary(record);
                export_and_note(record, &config)?;
            }
            Ok(())
        }
        Command::Export { record } => {
            let record = ExperimentRecord::import(record)?;
            export_and_note(&record, &config)
        }
    }
}

fn sphere_command(op: &SphereOp, config: &mut ExperimentConfig) -> Result<()> {
    match op {
        SphereOp::Curve { radius, max_dim, step } => {
            if let Some(v) = radius {
                config.radius = *v;
            }
            if let Some(v) = max_dim {
                config.max_dim = *v;
            }
            if let Some(v) = step {
                config.step = *v;
            }
            let record = run::run_sphere_curve(config)?;
            print_summary(&record);
            export_and_note(&record, config)
        }
        SphereOp::Peak { radius } => {
            let r = radius.unwrap_or(config.radius);
            println!("volume_peak_dimension = {}", losslab::sphere::volume_peak_dimension(r)?);
            println!("volume_argmax_int = {}", losslab::sphere::volume_argmax_integer(r)?);
            println!("surface_argmax_int = {}", losslab::sphere::surface_argmax_integer(r)?);
            Ok(())
        }
        SphereOp::Distance { dims, radius, trials } => {
            let dims = parse_u32_list(dims.as_deref().unwrap_or(&config.dims))?;
            let r = radius.unwrap_or(config.radius);
            let trials = trials.unwrap_or(config.trials);
            println!("n,mean,stderr");
            for n in dims {
                let est = losslab::sphere::expected_pairwise_distance(n, r, trials, config.seed)?;
                println!("{n},{},{}", est.mean, est.stderr);
            }
            Ok(())
        }
        SphereOp::Support { dim, sigma, threshold } => {
            let query = losslab::sphere::SupportVolumeQuery {
                dimension: *dim,
                sigma: sigma.unwrap_or(config.sigma),
                density_threshold: threshold.unwrap_or(config.density_threshold),
            };
            println!("support_volume = {}", losslab::sphere::gaussian_support_volume(&query)?);
            Ok(())
        }
    }
}

fn hist_command(op: &HistOp, config: &mut ExperimentConfig) -> Result<()> {
    match op {
        HistOp::Sample(args) => {
            args.apply(config);
            let (record, _) = run::run_histogram(config, "")?;
            print_summary(&record);
            export_and_note(&record, config)
        }
        HistOp::Modes { hist, prominence } => {
            hist.apply(config);
            if let Some(p) = prominence {
                config.prominence = *p;
            }
            let (record, report) = run::run_histogram(config, "")?;
            for mode in &report.modes {
                println!(
                    "mode center={} count={} prominence={:.4}",
                    mode.bin_center, mode.count, mode.prominence
                );
            }
            print_summary(&record);
            export_and_note(&record, config)
        }
        HistOp::Tail { hist, boundary, target, max_trials } => {
            hist.apply(config);
            if let Some(v) = boundary {
                config.tail_boundary = *v;
            }
            if let Some(v) = target {
                config.tail_target = *v;
            }
            if let Some(v) = max_trials {
                config.tail_max_trials = *v;
            }
            let record = run::run_tail(config, "tail")?;
            print_summary(&record);
            export_and_note(&record, config)
        }
        HistOp::Compare { a, b } => {
            let ra = ExperimentRecord::import(a)?;
            let rb = ExperimentRecord::import(b)?;
            let ha = rebuild_histogram(&ra)?;
            let hb = rebuild_histogram(&rb)?;
            let shift = losslab::hist::compare_histograms(&ha, &hb)?;
            println!("zero_mode_mass_delta = {}", shift.zero_mode_mass_delta);
            println!("left_tail_mass_delta = {}", shift.left_tail_mass_delta);
            println!("wasserstein = {}", shift.wasserstein);
            Ok(())
        }
    }
}

/// Reconstruct a LossHistogram from an exported histogram record.
fn rebuild_histogram(record: &ExperimentRecord) -> Result<losslab::hist::LossHistogram> {
    if record.kind != losslab_cli::record::RecordKind::Histogram {
        return Err(CliError::Config(format!(
            "{} is a {} record, not a histogram",
            record.stem(),
            record.kind.as_str()
        )));
    }
    let config = record.config()?;
    let (hc, _) = run::histogram_config(&config)?;
    let parse = |s: &str, what: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| CliError::Config(format!("bad {what} cell '{s}' in {}", record.stem())))
    };
    let mut edges = Vec::new();
    let mut counts = Vec::new();
    let mut overflow = 0;
    for row in &record.rows {
        if row.len() != 3 {
            return Err(CliError::Config(format!("malformed histogram row in {}", record.stem())));
        }
        if row[1] == "inf" {
            overflow = row[2]
                .parse()
                .map_err(|_| CliError::Config(format!("bad overflow count '{}'", row[2])))?;
            edges.push(parse(&row[0], "edge")?);
        } else {
            edges.push(parse(&row[0], "edge")?);
            counts.push(
                row[2]
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad count cell '{}'", row[2])))?,
            );
        }
    }
    if let Some(last) = record.rows.iter().rev().find(|r| r[1] != "inf") {
        if edges.len() == counts.len() {
            edges.push(parse(&last[1], "edge")?);
        }
    }
    let n_trials = counts.iter().sum::<u64>() + overflow;
    let min_loss = record
        .summary
        .iter()
        .find(|(k, _)| k == "min_loss")
        .and_then(|(_, v)| v.parse().ok())
        .unwrap_or(f64::NAN);
    let max_loss = record
        .summary
        .iter()
        .find(|(k, _)| k == "max_loss")
        .and_then(|(_, v)| v.parse().ok())
        .unwrap_or(f64::NAN);
    Ok(losslab::hist::LossHistogram {
        bin_edges: edges,
        counts,
        overflow_count: overflow,
        n_trials,
        min_loss,
        max_loss,
        config: hc,
    })
}

fn fit_command(family: &str, input: &PathBuf, config: &ExperimentConfig) -> Result<()> {
    let family: losslab::distfit::Family =
        family.parse().map_err(|e: losslab::Error| CliError::Config(e.to_string()))?;
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
    let samples: Vec<f64> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad sample value '{l}'")))
        })
        .collect::<Result<_>>()?;
    let fit = losslab::distfit::fit(family, &samples)?;
    let mut kv = fit.to_kv();
    if fit.converged {
        let gof = losslab::distfit::ks_test(&samples, &fit)?;
        kv.push_str(&format!(
            "ks_statistic={}\np_value={}\nn={}\n",
            gof.ks_statistic, gof.p_value, gof.n
        ));
    }
    print!("{kv}");
    let dir = config.out_dir();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(format!("fit_{family}_{}.kv", config.seed));
    std::fs::write(&path, kv).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn train_command(config: &ExperimentConfig) -> Result<()> {
    let dataset = config.dataset()?;
    let spec = config.network_spec(dataset.input_dim)?;
    let indices = config.sample_indices(dataset.len())?;
    let data: Vec<_> = indices.iter().map(|&i| dataset.samples[i].clone()).collect();
    let run = losslab::net::train(
        &spec,
        &data,
        config.lr,
        config.epochs,
        config.batch_size.min(data.len()).max(1),
        config.seed,
        config.snapshot_every,
    )
    .map_err(CliError::from)?;
    println!("best_loss = {}", run.best_loss);
    println!("final_loss = {}", run.epoch_losses.last().unwrap());

    let rows = run
        .epoch_losses
        .iter()
        .enumerate()
        .map(|(i, l)| vec![(i + 1).to_string(), losslab_cli::record::cell(*l)])
        .collect();
    let mut record = ExperimentRecord::new(
        losslab_cli::record::RecordKind::EpochSweep,
        "train",
        vec!["epoch".into(), "train_loss".into()],
        rows,
        config,
    );
    record.summary = vec![
        ("op".into(), "train".into()),
        ("best_loss".into(), losslab_cli::record::cell(run.best_loss)),
        ("param_count".into(), losslab::net::param_count(&spec).to_string()),
    ];
    export_and_note(&record, config)
}

fn probe_command(op: &ProbeOp, config: &mut ExperimentConfig) -> Result<()> {
    match op {
        ProbeOp::Tendril { train, ensemble_k, probe_batch } => {
            train.apply(config);
            if let Some(v) = ensemble_k {
                config.ensemble_k = *v;
            }
            if let Some(v) = probe_batch {
                config.probe_batch = *v;
            }
            let record = run::run_tendril(config)?;
            print_summary(&record);
            export_and_note(&record, config)
        }
        ProbeOp::Confusion { train, ensemble_k, probe_batch } => {
            train.apply(config);
            if let Some(v) = ensemble_k {
                config.ensemble_k = *v;
            }
            if let Some(v) = probe_batch {
                config.probe_batch = *v;
            }
            let dataset = config.dataset()?;
            let spec = config.network_spec(dataset.input_dim)?;
            let weights = if config.epochs == 0 {
                losslab::net::init_weights(&spec, config.seed).map_err(CliError::from)?
            } else {
                let run = losslab::net::train(
                    &spec,
                    &dataset.samples,
                    config.lr,
                    config.epochs,
                    config.batch_size.min(dataset.len()).max(1),
                    config.seed,
                    config.epochs,
                )
                .map_err(CliError::from)?;
                run.snapshots.last().unwrap().1.clone()
            };
            let ens = losslab::probes::gradient_ensemble(
                &weights,
                &dataset.samples,
                spec.activation,
                config.probe_batch.min(dataset.len()).max(1),
                config.ensemble_k,
                losslab::rng::mix(config.seed, 0xC0),
            )?;
            println!("confusion = {}", losslab::probes::gradient_confusion(&ens)?);
            Ok(())
        }
        ProbeOp::Influence { net } => {
            net.apply(config);
            let dataset = config.dataset()?;
            let spec = config.network_spec(dataset.input_dim)?;
            println!("param_count = {}", losslab::net::param_count(&spec));
            println!("interactions = {}", losslab::probes::influence_interactions(&spec)?);
            println!("influence_ratio = {}", losslab::probes::influence_ratio(&spec)?);
            Ok(())
        }
    }
}

fn sweep_command(op: &SweepOp, config: &mut ExperimentConfig) -> Result<()> {
    let record = match op {
        SweepOp::Capacity { train, widths, label_noise, split } => {
            train.apply(config);
            if let Some(v) = widths {
                config.sweep_widths = v.clone();
            }
            if let Some(v) = train.net.depth {
                config.sweep_depth = v;
            }
            if let Some(v) = label_noise {
                config.label_noise = *v;
            }
            if let Some(v) = split {
                config.split = *v;
            }
            run::run_capacity(config)?
        }
        SweepOp::Epoch { train, label_noise, split, cadence } => {
            train.apply(config);
            if let Some(v) = label_noise {
                config.label_noise = *v;
            }
            if let Some(v) = split {
                config.split = *v;
            }
            if let Some(v) = cadence {
                config.cadence = *v;
            }
            run::run_epoch(config)?
        }
        SweepOp::Fidelity { train, sizes, repeats, label_noise, split } => {
            train.apply(config);
            if let Some(v) = sizes {
                config.sweep_sizes = v.clone();
            }
            if let Some(v) = repeats {
                config.repeats = *v;
            }
            if let Some(v) = label_noise {
                config.label_noise = *v;
            }
            if let Some(v) = split {
                config.split = *v;
            }
            run::run_fidelity(config)?
        }
    };
    print_summary(&record);
    export_and_note(&record, config)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
