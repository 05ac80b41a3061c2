//! Flat key=value configuration with bracketed section headers.
//!
//! An empty file (or no file) yields the documented defaults; unknown
//! sections or keys are rejected with their line number. Serialization
//! and parsing round-trip exactly, and every experiment record embeds its
//! full serialized configuration, so any result can be re-run from its
//! own echo.

use crate::{CliError, Result};
use losslab::data::{self, Dataset, Schema};
use losslab::hist::BinPolicy;
use losslab::net::{Activation, InitScheme, NetworkSpec};

/// Figure output selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Format::Csv => write!(f, "csv"),
            Format::Svg => write!(f, "svg"),
            Format::Both => write!(f, "both"),
        }
    }
}

impl std::str::FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            "both" => Ok(Format::Both),
            other => Err(CliError::Config(format!("format must be csv|svg|both, got '{other}'"))),
        }
    }
}

/// Full experiment configuration; each subcommand reads the sections it
/// needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    // [run]
    pub seed: u64,
    pub workers: usize,
    pub out: String,
    pub format: Format,
    // [data]
    pub data_source: String,
    pub synthetic_n: usize,
    pub synthetic_noise: f64,
    pub schema_label: String,
    pub schema_numeric: String,
    pub schema_categoric: String,
    // [network]
    pub width: usize,
    pub depth: usize,
    pub activation: String,
    pub init: String,
    pub init_scale: f64,
    // [train]
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub snapshot_every: usize,
    // [hist]
    pub trials: u64,
    pub samples: String,
    pub bin_policy: String,
    pub bin_width: f64,
    pub max_loss: f64,
    pub bin_count: usize,
    pub prominence: f64,
    pub tau: f64,
    pub delta: f64,
    pub tail_boundary: f64,
    pub tail_target: u64,
    pub tail_max_trials: u64,
    // [probe]
    pub ensemble_k: usize,
    pub probe_batch: usize,
    pub cadence: usize,
    // [sweep]
    pub sweep_widths: String,
    pub sweep_depth: usize,
    pub sweep_sizes: String,
    pub repeats: usize,
    pub split: f64,
    pub label_noise: f64,
    // [sphere]
    pub radius: f64,
    pub max_dim: f64,
    pub step: f64,
    pub dims: String,
    pub sigma: f64,
    pub density_threshold: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            workers: 0,
            out: String::new(),
            format: Format::Both,
            data_source: "bundled".into(),
            synthetic_n: 200,
            synthetic_noise: 0.0,
            schema_label: "label".into(),
            schema_numeric: "size".into(),
            schema_categoric: "hue;shape".into(),
            width: 3,
            depth: 3,
            activation: "relu".into(),
            init: "he_normal".into(),
            init_scale: 1.0,
            lr: 0.1,
            epochs: 200,
            batch_size: 5,
            snapshot_every: 50,
            trials: 100_000,
            samples: "0".into(),
            bin_policy: "fixed".into(),
            bin_width: 0.01,
            max_loss: 20.0,
            bin_count: 64,
            prominence: 0.05,
            tau: 0.05,
            delta: 0.1,
            tail_boundary: 0.55,
            tail_target: 400,
            tail_max_trials: 2_000_000,
            ensemble_k: 24,
            probe_batch: 2,
            cadence: 50,
            sweep_widths: "1;2;4;8;16;32".into(),
            sweep_depth: 1,
            sweep_sizes: "10;20;40;80;160".into(),
            repeats: 3,
            split: 0.5,
            label_noise: 0.1,
            radius: 1.0,
            max_dim: 30.0,
            step: 0.25,
            dims: "2;8;32;128".into(),
            sigma: 1.0,
            density_threshold: 1e-10,
        }
    }
}

macro_rules! set_keys {
    ($self:ident, $section:expr, $key:expr, $value:expr, $line:expr;
     $($sec:literal { $($name:literal => $field:ident),+ $(,)? })+) => {
        match $section {
            $(
                $sec => match $key {
                    $(
                        $name => {
                            $self.$field = $value.parse().map_err(|_| {
                                CliError::Config(format!(
                                    "line {}: bad value '{}' for {}.{}",
                                    $line, $value, $section, $key
                                ))
                            })?;
                            return Ok(());
                        }
                    )+
                    other => {
                        return Err(CliError::Config(format!(
                            "line {}: unknown key '{}' in section [{}]",
                            $line, other, $section
                        )))
                    }
                },
            )+
            other => {
                return Err(CliError::Config(format!(
                    "line {}: unknown section [{}]",
                    $line, other
                )))
            }
        }
    };
}

impl ExperimentConfig {
    fn set(&mut self, section: &str, key: &str, value: &str, line: usize) -> Result<()> {
        if section == "run" && key == "format" {
            self.format = value.parse()?;
            return Ok(());
        }
        set_keys!(self, section, key, value, line;
            "run" {
                "seed" => seed,
                "workers" => workers,
                "out" => out,
            }
            "data" {
                "source" => data_source,
                "synthetic_n" => synthetic_n,
                "noise" => synthetic_noise,
                "schema_label" => schema_label,
                "schema_numeric" => schema_numeric,
                "schema_categoric" => schema_categoric,
            }
            "network" {
                "width" => width,
                "depth" => depth,
                "activation" => activation,
                "init" => init,
                "init_scale" => init_scale,
            }
            "train" {
                "lr" => lr,
                "epochs" => epochs,
                "batch_size" => batch_size,
                "snapshot_every" => snapshot_every,
            }
            "hist" {
                "trials" => trials,
                "samples" => samples,
                "bin_policy" => bin_policy,
                "bin_width" => bin_width,
                "max_loss" => max_loss,
                "bin_count" => bin_count,
                "prominence" => prominence,
                "tau" => tau,
                "delta" => delta,
                "tail_boundary" => tail_boundary,
                "tail_target" => tail_target,
                "tail_max_trials" => tail_max_trials,
            }
            "probe" {
                "ensemble_k" => ensemble_k,
                "probe_batch" => probe_batch,
                "cadence" => cadence,
            }
            "sweep" {
                "widths" => sweep_widths,
                "depth" => sweep_depth,
                "sizes" => sweep_sizes,
                "repeats" => repeats,
                "split" => split,
                "label_noise" => label_noise,
            }
            "sphere" {
                "radius" => radius,
                "max_dim" => max_dim,
                "step" => step,
                "dims" => dims,
                "sigma" => sigma,
                "density_threshold" => density_threshold,
            }
        );
    }

    /// Parse configuration text; an empty file is all defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = ExperimentConfig::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(name) = trimmed.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::Config(format!("line {line}: unterminated section header")))?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {line}: expected 'key = value', got '{trimmed}'"))
            })?;
            if section.is_empty() {
                return Err(CliError::Config(format!(
                    "line {line}: key '{}' appears before any [section]",
                    key.trim()
                )));
            }
            config.set(&section, key.trim(), value.trim(), line)?;
        }
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical serialization; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        format!(
            "[run]\n\
             seed = {seed}\n\
             workers = {workers}\n\
             out = {out}\n\
             format = {format}\n\
             \n[data]\n\
             source = {data_source}\n\
             synthetic_n = {synthetic_n}\n\
             noise = {synthetic_noise}\n\
             schema_label = {schema_label}\n\
             schema_numeric = {schema_numeric}\n\
             schema_categoric = {schema_categoric}\n\
             \n[network]\n\
             width = {width}\n\
             depth = {depth}\n\
             activation = {activation}\n\
             init = {init}\n\
             init_scale = {init_scale}\n\
             \n[train]\n\
             lr = {lr}\n\
             epochs = {epochs}\n\
             batch_size = {batch_size}\n\
             snapshot_every = {snapshot_every}\n\
             \n[hist]\n\
             trials = {trials}\n\
             samples = {samples}\n\
             bin_policy = {bin_policy}\n\
             bin_width = {bin_width}\n\
             max_loss = {max_loss}\n\
             bin_count = {bin_count}\n\
             prominence = {prominence}\n\
             tau = {tau}\n\
             delta = {delta}\n\
             tail_boundary = {tail_boundary}\n\
             tail_target = {tail_target}\n\
             tail_max_trials = {tail_max_trials}\n\
             \n[probe]\n\
             ensemble_k = {ensemble_k}\n\
             probe_batch = {probe_batch}\n\
             cadence = {cadence}\n\
             \n[sweep]\n\
             widths = {sweep_widths}\n\
             depth = {sweep_depth}\n\
             sizes = {sweep_sizes}\n\
             repeats = {repeats}\n\
             split = {split}\n\
             label_noise = {label_noise}\n\
             \n[sphere]\n\
             radius = {radius}\n\
             max_dim = {max_dim}\n\
             step = {step}\n\
             dims = {dims}\n\
             sigma = {sigma}\n\
             density_threshold = {density_threshold}\n",
            seed = self.seed,
            workers = self.workers,
            out = self.out,
            format = self.format,
            data_source = self.data_source,
            synthetic_n = self.synthetic_n,
            synthetic_noise = self.synthetic_noise,
            schema_label = self.schema_label,
            schema_numeric = self.schema_numeric,
            schema_categoric = self.schema_categoric,
            width = self.width,
            depth = self.depth,
            activation = self.activation,
            init = self.init,
            init_scale = self.init_scale,
            lr = self.lr,
            epochs = self.epochs,
            batch_size = self.batch_size,
            snapshot_every = self.snapshot_every,
            trials = self.trials,
            samples = self.samples,
            bin_policy = self.bin_policy,
            bin_width = self.bin_width,
            max_loss = self.max_loss,
            bin_count = self.bin_count,
            prominence = self.prominence,
            tau = self.tau,
            delta = self.delta,
            tail_boundary = self.tail_boundary,
            tail_target = self.tail_target,
            tail_max_trials = self.tail_max_trials,
            ensemble_k = self.ensemble_k,
            probe_batch = self.probe_batch,
            cadence = self.cadence,
            sweep_widths = self.sweep_widths,
            sweep_depth = self.sweep_depth,
            sweep_sizes = self.sweep_sizes,
            repeats = self.repeats,
            split = self.split,
            label_noise = self.label_noise,
            radius = self.radius,
            max_dim = self.max_dim,
            step = self.step,
            dims = self.dims,
            sigma = self.sigma,
            density_threshold = self.density_threshold,
        )
    }

    /// The network section as a [`NetworkSpec`] for `input_dim` features.
    pub fn network_spec(&self, input_dim: usize) -> Result<NetworkSpec> {
        let activation = match self.activation.as_str() {
            "relu" => Activation::Relu,
            "tanh" => Activation::Tanh,
            other => {
                return Err(CliError::Config(format!(
                    "network.activation must be relu|tanh, got '{other}'"
                )))
            }
        };
        let init = match self.init.as_str() {
            "he_normal" => InitScheme::HeNormal,
            "he_uniform" => InitScheme::HeUniform,
            "xavier_normal" => InitScheme::XavierNormal,
            "plain_normal" => InitScheme::PlainNormal { scale: self.init_scale },
            "plain_uniform" => InitScheme::PlainUniform { scale: self.init_scale },
            other => {
                return Err(CliError::Config(format!(
                    "network.init must be he_normal|he_uniform|xavier_normal|plain_normal|plain_uniform, got '{other}'"
                )))
            }
        };
        Ok(NetworkSpec {
            input_dim,
            hidden_width: self.width,
            hidden_depth: self.depth,
            activation,
            init,
        })
    }

    /// The histogram bin policy from the `[hist]` section.
    pub fn hist_bin_policy(&self) -> Result<BinPolicy> {
        match self.bin_policy.as_str() {
            "fixed" => Ok(BinPolicy::Fixed { width: self.bin_width, max_loss: self.max_loss }),
            "min_anchored" => Ok(BinPolicy::MinAnchored { bin_count: self.bin_count }),
            other => Err(CliError::Config(format!(
                "hist.bin_policy must be fixed|min_anchored, got '{other}'"
            ))),
        }
    }

    /// Load the dataset named by `[data]`: `bundled`, `synthetic`, or a
    /// CSV path interpreted with the schema keys.
    pub fn dataset(&self) -> Result<Dataset> {
        match self.data_source.as_str() {
            "bundled" => Ok(data::bundled()),
            "synthetic" => Ok(data::synthetic(self.synthetic_n, self.synthetic_noise, self.seed)?),
            path => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("{path}: {e}")))?;
                let schema = Schema {
                    label: self.schema_label.clone(),
                    numeric: split_list(&self.schema_numeric),
                    categoric: split_list(&self.schema_categoric),
                };
                Ok(data::parse_csv(&text, &schema)?)
            }
        }
    }

    /// `[hist] samples` as row indices; `all` selects every row.
    pub fn sample_indices(&self, dataset_len: usize) -> Result<Vec<usize>> {
        if self.samples.trim() == "all" {
            return Ok((0..dataset_len).collect());
        }
        parse_index_list(&self.samples)
    }

    /// Default output directory: `[run] out`, the LOSSLAB_OUT environment
    /// variable, or `./out`.
    pub fn out_dir(&self) -> std::path::PathBuf {
        if !self.out.is_empty() {
            return self.out.clone().into();
        }
        if let Ok(dir) = std::env::var("LOSSLAB_OUT") {
            if !dir.is_empty() {
                return dir.into();
            }
        }
        "out".into()
    }
}

pub fn split_list(s: &str) -> Vec<String> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(String::from)
        .collect()
}

pub fn parse_index_list(s: &str) -> Result<Vec<usize>> {
    split_list(s)
        .iter()
        .map(|p| {
            p.parse::<usize>()
                .map_err(|_| CliError::Config(format!("bad index '{p}' in list '{s}'")))
        })
        .collect()
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    parse_index_list(s)
}

pub fn parse_u32_list(s: &str) -> Result<Vec<u32>> {
    split_list(s)
        .iter()
        .map(|p| {
            p.parse::<u32>()
                .map_err(|_| CliError::Config(format!("bad value '{p}' in list '{s}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_all_defaults() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
        assert_eq!(
            ExperimentConfig::parse("# just a comment\n\n").unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn defaults_round_trip() {
        let config = ExperimentConfig::default();
        let text = config.serialize();
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), config);
    }

    #[test]
    fn modified_config_round_trips() {
        let mut config = ExperimentConfig::default();
        config.seed = 777;
        config.activation = "tanh".into();
        config.bin_width = 0.05;
        config.sweep_sizes = "5;10".into();
        config.format = Format::Svg;
        let reparsed = ExperimentConfig::parse(&config.serialize()).unwrap();
        assert_eq!(reparsed, config);
    }

    #[test]
    fn unknown_key_is_rejected_with_line_number() {
        let err = ExperimentConfig::parse("[network]\nwidht = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("widht"), "{msg}");

        let err = ExperimentConfig::parse("[nosuch]\nx = 1\n").unwrap_err();
        assert!(err.to_string().contains("unknown section"), "{err}");

        let err = ExperimentConfig::parse("key = 1\n").unwrap_err();
        assert!(err.to_string().contains("before any"), "{err}");

        let err = ExperimentConfig::parse("[run]\nseed = notanumber\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn spec_and_policy_construction() {
        let mut config = ExperimentConfig::default();
        config.init = "plain_uniform".into();
        config.init_scale = 2.0;
        let spec = config.network_spec(6).unwrap();
        assert_eq!(spec.init, InitScheme::PlainUniform { scale: 2.0 });
        config.bin_policy = "min_anchored".into();
        assert_eq!(config.hist_bin_policy().unwrap(), BinPolicy::MinAnchored { bin_count: 64 });
        config.activation = "selu".into();
        assert!(config.network_spec(6).is_err());
    }

    #[test]
    fn sample_index_lists() {
        let mut config = ExperimentConfig::default();
        config.samples = "0;4;2".into();
        assert_eq!(config.sample_indices(60).unwrap(), vec![0, 4, 2]);
        config.samples = "all".into();
        assert_eq!(config.sample_indices(3).unwrap(), vec![0, 1, 2]);
        config.samples = "1;x".into();
        assert!(config.sample_indices(60).is_err());
    }
}
