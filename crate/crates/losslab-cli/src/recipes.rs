//! Pinned histogram recipes replicating the characteristic transitions:
//! activation contrast, width and depth ladders, tail-region closeups,
//! initialization scaling and multi-sample aggregation.
//!
//! Every recipe runs a frozen configuration (architecture ladder, sample
//! selection, trial count, master seed) so its qualitative signature —
//! which way the zero-mode and left-tail masses move — is reproducible
//! bit-for-bit. User configuration only contributes the output settings.

use crate::config::ExperimentConfig;
use crate::record::ExperimentRecord;
use crate::run;
use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecipeName {
    ReluVsTanh,
    WidthTransition,
    DepthTransition,
    TailCloseup,
    InitScaling,
    SampleAggregation,
}

impl std::str::FromStr for RecipeName {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "relu_vs_tanh" => RecipeName::ReluVsTanh,
            "width_transition" => RecipeName::WidthTransition,
            "depth_transition" => RecipeName::DepthTransition,
            "tail_closeup" => RecipeName::TailCloseup,
            "init_scaling" => RecipeName::InitScaling,
            "sample_aggregation" => RecipeName::SampleAggregation,
            other => {
                return Err(CliError::Config(format!(
                    "unknown recipe '{other}' (expected relu_vs_tanh|width_transition|depth_transition|tail_closeup|init_scaling|sample_aggregation)"
                )))
            }
        })
    }
}

pub const ALL_RECIPES: [&str; 6] = [
    "relu_vs_tanh",
    "width_transition",
    "depth_transition",
    "tail_closeup",
    "init_scaling",
    "sample_aggregation",
];

/// Pinned master seed shared by the mass-trend recipes.
pub const RECIPE_SEED: u64 = 0xF00D;

fn pinned_base(out: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        out: out.out.clone(),
        format: out.format,
        workers: out.workers,
        data_source: "bundled".into(),
        seed: RECIPE_SEED,
        trials: 100_000,
        ..ExperimentConfig::default()
    }
}

/// Run one pinned recipe; returns one record per panel.
pub fn run_recipe(name: RecipeName, user: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let mut records = Vec::new();
    match name {
        // Sharp multi-peak structure under ReLU versus one smooth mode
        // under tanh, same architecture and seed. Coarser bins so a smooth
        // curve reads as a single mode.
        RecipeName::ReluVsTanh => {
            for activation in ["relu", "tanh"] {
                let mut config = pinned_base(user);
                config.width = 9;
                config.depth = 3;
                config.activation = activation.into();
                config.seed = 0xAE;
                config.trials = 60_000;
                config.bin_width = 0.05;
                records.push(run::run_histogram(&config, activation)?.0);
            }
        }
        // Widening a fixed-scale uniform net drives mass toward the zero
        // mode: wider layers mean larger pre-activations and more
        // confident initializations.
        RecipeName::WidthTransition => {
            for width in [6usize, 9, 12] {
                let mut config = pinned_base(user);
                config.width = width;
                config.depth = 3;
                config.init = "plain_uniform".into();
                config.init_scale = 1.0;
                records.push(run::run_histogram(&config, &format!("width{width}"))?.0);
            }
        }
        // Deepening a narrow He-initialized ReLU net drives mass toward
        // the central (dead-network) mode instead.
        RecipeName::DepthTransition => {
            for depth in [3usize, 6, 9] {
                let mut config = pinned_base(user);
                config.width = 3;
                config.depth = depth;
                records.push(run::run_histogram(&config, &format!("depth{depth}"))?.0);
            }
        }
        // Tail-only resampling at matched parameter budgets: the sub-ln2
        // region of shallow-wide nets is zero-mode heavy, deep-narrow
        // tails concentrate toward the central boundary.
        RecipeName::TailCloseup => {
            let shallow: &[(usize, usize, u64)] =
                &[(2, 5, 1500), (3, 4, 1500), (4, 3, 1500), (5, 3, 1500), (6, 3, 1500)];
            let deep: &[(usize, usize, u64)] =
                &[(8, 3, 400), (9, 3, 400), (10, 3, 400), (11, 3, 400), (12, 3, 400)];
            for &(depth, width, target) in shallow.iter().chain(deep) {
                let mut config = pinned_base(user);
                config.width = width;
                config.depth = depth;
                config.init = "plain_uniform".into();
                config.init_scale = 1.0;
                config.trials = 1; // tail indices continue from trial 1
                config.bin_width = 0.05;
                config.tail_boundary = 0.55;
                config.tail_target = target;
                config.tail_max_trials = 2_000_000;
                records.push(run::run_tail(&config, &format!("depth{depth}"))?);
            }
        }
        // Scaling a uniform initialization up shifts density into the
        // dominant zero mode.
        RecipeName::InitScaling => {
            for (tag, scale) in [("05", 0.5), ("10", 1.0), ("20", 2.0)] {
                let mut config = pinned_base(user);
                config.width = 6;
                config.depth = 2;
                config.init = "plain_uniform".into();
                config.init_scale = scale;
                records.push(run::run_histogram(&config, &format!("scale{tag}"))?.0);
            }
        }
        // Averaging the loss over more samples compresses the left tail
        // toward invisibility.
        RecipeName::SampleAggregation => {
            let panels: &[(&str, &str)] =
                &[("n1", "4"), ("n2", "4;2"), ("n3", "4;2;5"), ("n50", "all50")];
            for &(tag, samples) in panels {
                let mut config = pinned_base(user);
                config.width = 3;
                config.depth = 3;
                config.samples = if samples == "all50" {
                    (0..50).map(|i| i.to_string()).collect::<Vec<_>>().join(";")
                } else {
                    samples.into()
                };
                records.push(run::run_histogram(&config, tag)?.0);
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary_f64(record: &ExperimentRecord, key: &str) -> f64 {
        record
            .summary
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.parse().unwrap())
            .unwrap_or_else(|| panic!("summary key {key} missing"))
    }

    #[test]
    fn width_transition_masses_increase() {
        let user = ExperimentConfig::default();
        let records = run_recipe(RecipeName::WidthTransition, &user).unwrap();
        assert_eq!(records.len(), 3);
        let masses: Vec<f64> =
            records.iter().map(|r| summary_f64(r, "zero_mode_mass")).collect();
        assert!(
            masses[0] < masses[1] && masses[1] < masses[2],
            "zero-mode masses not increasing: {masses:?}"
        );
    }

    #[test]
    fn sample_aggregation_tail_shrinks() {
        let user = ExperimentConfig::default();
        let records = run_recipe(RecipeName::SampleAggregation, &user).unwrap();
        assert_eq!(records.len(), 4);
        let masses: Vec<f64> =
            records.iter().map(|r| summary_f64(r, "left_tail_mass")).collect();
        assert!(
            masses.windows(2).all(|w| w[1] <= w[0]),
            "left-tail masses not non-increasing: {masses:?}"
        );
    }

    #[test]
    fn init_scaling_masses_increase() {
        let user = ExperimentConfig::default();
        let records = run_recipe(RecipeName::InitScaling, &user).unwrap();
        let masses: Vec<f64> =
            records.iter().map(|r| summary_f64(r, "zero_mode_mass")).collect();
        assert!(
            masses[0] < masses[1] && masses[1] < masses[2],
            "zero-mode masses not increasing with scale: {masses:?}"
        );
    }

    #[test]
    fn tail_closeup_shifts_from_zero_to_central() {
        let user = ExperimentConfig::default();
        let records = run_recipe(RecipeName::TailCloseup, &user).unwrap();
        assert_eq!(records.len(), 10);
        // zero-loss share of the sub-boundary tail: depth 2 vs depth 6
        let zero_share = |r: &ExperimentRecord| -> f64 {
            let total: f64 = r
                .rows
                .iter()
                .filter(|row| row[1] != "inf")
                .map(|row| row[2].parse::<f64>().unwrap())
                .sum();
            let below: f64 = r
                .rows
                .iter()
                .filter(|row| row[1] != "inf" && row[1].parse::<f64>().unwrap() <= 0.05)
                .map(|row| row[2].parse::<f64>().unwrap())
                .sum();
            below / total
        };
        let shallow = zero_share(&records[0]);
        let deep = zero_share(&records[4]);
        assert!(
            shallow > deep,
            "tail zero-share did not fall with depth: depth2 {shallow} vs depth6 {deep}"
        );
    }

    #[test]
    fn relu_tanh_mode_contrast() {
        let user = ExperimentConfig::default();
        let records = run_recipe(RecipeName::ReluVsTanh, &user).unwrap();
        let relu = summary_f64(&records[0], "modes");
        let tanh = summary_f64(&records[1], "modes");
        assert!(tanh < relu, "tanh modes {tanh} not fewer than relu {relu}");
    }
}
