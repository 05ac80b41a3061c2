//! Experiment records and their on-disk form.
//!
//! A record is one results table plus everything needed to reproduce it:
//! the full serialized configuration, the seed, a timestamp and the tool
//! version. On disk a record is `<kind>_<seed>.csv` (the table) and
//! `<kind>_<seed>.cfg` (metadata + config echo); export and import
//! round-trip losslessly, and the bytes are a pure function of the record.

use crate::config::ExperimentConfig;
use crate::{CliError, Result};
use losslab::plot::{self, Series};

use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Histogram,
    CapacitySweep,
    EpochSweep,
    FidelitySweep,
    SphereCurve,
    Tendril,
}

impl RecordKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecordKind::Histogram => "histogram",
            RecordKind::CapacitySweep => "capacity_sweep",
            RecordKind::EpochSweep => "epoch_sweep",
            RecordKind::FidelitySweep => "fidelity_sweep",
            RecordKind::SphereCurve => "sphere_curve",
            RecordKind::Tendril => "tendril",
        }
    }
}

impl std::str::FromStr for RecordKind {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "histogram" => RecordKind::Histogram,
            "capacity_sweep" => RecordKind::CapacitySweep,
            "epoch_sweep" => RecordKind::EpochSweep,
            "fidelity_sweep" => RecordKind::FidelitySweep,
            "sphere_curve" => RecordKind::SphereCurve,
            "tendril" => RecordKind::Tendril,
            other => return Err(CliError::Config(format!("unknown record kind '{other}'"))),
        })
    }
}

/// One axis/train/test measurement of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// param_count, epoch, or training-set size depending on the sweep.
    pub axis: f64,
    pub train_loss: f64,
    pub test_loss: f64,
    pub train_error: f64,
    pub test_error: f64,
    /// The cell's training run aborted; losses are NaN.
    pub failed: bool,
}

/// A results table with its provenance and configuration echo.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub kind: RecordKind,
    /// Distinguishes multiple records of one kind in a bundle (panel id).
    pub label: String,
    pub columns: Vec<String>,
    /// Cell values pre-rendered as strings (f64 Display round-trips).
    pub rows: Vec<Vec<String>>,
    /// Extra result summary lines persisted next to the config echo.
    pub summary: Vec<(String, String)>,
    pub seed: u64,
    pub timestamp: u64,
    pub tool_version: String,
    /// Full config file text sufficient to re-run this experiment.
    pub config_echo: String,
}

impl ExperimentRecord {
    pub fn new(
        kind: RecordKind,
        label: impl Into<String>,
        columns: Vec<String>,
        rows: Vec<Vec<String>>,
        config: &ExperimentConfig,
    ) -> Self {
        ExperimentRecord {
            kind,
            label: label.into(),
            columns,
            rows,
            summary: Vec::new(),
            seed: config.seed,
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_echo: config.serialize(),
        }
    }

    /// File stem: `<kind>_<label>_<seed>` (label omitted when empty).
    pub fn stem(&self) -> String {
        if self.label.is_empty() {
            format!("{}_{}", self.kind.as_str(), self.seed)
        } else {
            format!("{}_{}_{}", self.kind.as_str(), self.label, self.seed)
        }
    }

    /// Results table as CSV with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    fn to_cfg(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("record.kind = {}\n", self.kind.as_str()));
        out.push_str(&format!("record.label = {}\n", self.label));
        out.push_str(&format!("record.seed = {}\n", self.seed));
        out.push_str(&format!("record.timestamp = {}\n", self.timestamp));
        out.push_str(&format!("record.tool_version = {}\n", self.tool_version));
        for (k, v) in &self.summary {
            out.push_str(&format!("summary.{k} = {v}\n"));
        }
        out.push_str("# --- config echo ---\n");
        out.push_str(&self.config_echo);
        out
    }

    fn numeric_column(&self, idx: usize) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.get(idx).and_then(|c| c.parse().ok()).unwrap_or(f64::NAN))
            .collect()
    }

    /// Figure for this record: bars for histograms, lines otherwise.
    pub fn to_svg(&self) -> String {
        match self.kind {
            RecordKind::Histogram => {
                let lefts = self.numeric_column(0);
                let rights = self.numeric_column(1);
                let counts: Vec<u64> = self
                    .rows
                    .iter()
                    .map(|r| r.get(2).and_then(|c| c.parse().ok()).unwrap_or(0))
                    .collect();
                // drop the trailing overflow row (right edge = inf)
                let n = rights.iter().take_while(|r| r.is_finite()).count();
                let mut edges: Vec<f64> = lefts[..n].to_vec();
                edges.push(if n > 0 { rights[n - 1] } else { 1.0 });
                plot::histogram_chart(
                    &format!("{} {}", self.stem(), "loss histogram"),
                    &edges,
                    &counts[..n],
                    Some(std::f64::consts::LN_2),
                )
            }
            _ => {
                let x = self.numeric_column(0);
                let series: Vec<Series> = self
                    .columns
                    .iter()
                    .enumerate()
                    .skip(1)
                    .filter(|(_, name)| *name != "failed" && *name != "width")
                    .map(|(i, name)| {
                        let ys = self.numeric_column(i);
                        Series {
                            name: name.clone(),
                            points: x
                                .iter()
                                .zip(&ys)
                                .filter(|(a, b)| a.is_finite() && b.is_finite())
                                .map(|(&a, &b)| (a, b))
                                .collect(),
                        }
                    })
                    .collect();
                plot::line_chart(&self.stem(), &self.columns[0], "value", &series)
            }
        }
    }

    /// Write `<stem>.csv`, `<stem>.cfg` and (per `format`) `<stem>.svg`
    /// under `dir`; returns the paths written.
    pub fn export(&self, dir: &Path, format: crate::config::Format) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let mut written = Vec::new();
        let write = |path: PathBuf, bytes: &str| -> Result<PathBuf> {
            std::fs::write(&path, bytes)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Ok(path)
        };
        written.push(write(dir.join(format!("{}.csv", self.stem())), &self.to_csv())?);
        written.push(write(dir.join(format!("{}.cfg", self.stem())), &self.to_cfg())?);
        if matches!(format, crate::config::Format::Svg | crate::config::Format::Both) {
            written.push(write(dir.join(format!("{}.svg", self.stem())), &self.to_svg())?);
        }
        Ok(written)
    }

    /// Rebuild a record from its exported `.csv`/`.cfg` pair. `path` may
    /// point at either file or the bare stem.
    pub fn import(path: &Path) -> Result<ExperimentRecord> {
        let stem_path = path.with_extension("");
        let csv_path = stem_path.with_extension("csv");
        let cfg_path = stem_path.with_extension("cfg");
        let csv = std::fs::read_to_string(&csv_path)
            .map_err(|e| CliError::Io(format!("{}: {e}", csv_path.display())))?;
        let cfg = std::fs::read_to_string(&cfg_path)
            .map_err(|e| CliError::Io(format!("{}: {e}", cfg_path.display())))?;

        let mut lines = csv.lines();
        let columns: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::Config(format!("{}: empty table", csv_path.display())))?
            .split(',')
            .map(String::from)
            .collect();
        let rows: Vec<Vec<String>> = lines
            .filter(|l| !l.is_empty())
            .map(|l| l.split(',').map(String::from).collect())
            .collect();

        let mut kind = None;
        let mut label = String::new();
        let mut seed = 0u64;
        let mut timestamp = 0u64;
        let mut tool_version = String::new();
        let mut summary = Vec::new();
        let mut echo_lines = Vec::new();
        let mut in_echo = false;
        for line in cfg.lines() {
            if line == "# --- config echo ---" {
                in_echo = true;
                continue;
            }
            if in_echo {
                echo_lines.push(line);
                continue;
            }
            let Some((key, value)) = line.split_once('=') else { continue };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "record.kind" => kind = Some(value.parse::<RecordKind>()?),
                "record.label" => label = value.to_string(),
                "record.seed" => {
                    seed = value
                        .parse()
                        .map_err(|_| CliError::Config(format!("bad record.seed '{value}'")))?
                }
                "record.timestamp" => {
                    timestamp = value
                        .parse()
                        .map_err(|_| CliError::Config(format!("bad record.timestamp '{value}'")))?
                }
                "record.tool_version" => tool_version = value.to_string(),
                other => {
                    if let Some(name) = other.strip_prefix("summary.") {
                        summary.push((name.to_string(), value.to_string()));
                    } else {
                        return Err(CliError::Config(format!("unknown record key '{other}'")));
                    }
                }
            }
        }
        let kind =
            kind.ok_or_else(|| CliError::Config(format!("{}: missing record.kind", cfg_path.display())))?;
        let mut config_echo = echo_lines.join("\n");
        if !config_echo.is_empty() {
            config_echo.push('\n');
        }
        Ok(ExperimentRecord {
            kind,
            label,
            columns,
            rows,
            summary,
            seed,
            timestamp,
            tool_version,
            config_echo,
        })
    }

    /// The embedded configuration, reparsed.
    pub fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(&self.config_echo)
    }
}

/// Format a float so that parsing the string recovers the exact value.
pub fn cell(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

pub fn sweep_rows(points: &[SweepPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| {
            vec![
                cell(p.axis),
                cell(p.train_loss),
                cell(p.test_loss),
                cell(p.train_error),
                cell(p.test_error),
                (p.failed as u8).to_string(),
            ]
        })
        .collect()
}
