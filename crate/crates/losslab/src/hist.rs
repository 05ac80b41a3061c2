//! Seed-deterministic Monte-Carlo loss histograms over random
//! initializations, plus mode detection, tail-mass metrics and targeted
//! tail resampling.
//!
//! Trial `i` under master seed `s` always initializes its network from
//! the stream `mix(s, i)`, so the counts are identical no matter how the
//! trials were partitioned across workers. Merging per-worker results is
//! pure integer addition and min/max, both order-independent.

use crate::data::EncodedSample;
use crate::error::{degenerate, domain, Result};
use crate::net::{self, NetworkSpec};
use crate::parallel::chunked_map;
use crate::rng;

use std::f64::consts::LN_2;

/// Loss of a 0.5 sigmoid output under any binary label mix.
pub const CENTRAL_REFERENCE: f64 = LN_2;

/// Binning rule for loss histograms.
///
/// `Fixed` is the default (origin 0, width 0.01, max 20): stable bin
/// boundaries make histograms from different runs comparable.
/// `MinAnchored` anchors `bin_count` equal bins on the sampled min/max,
/// which reproduces figure styles whose peaks follow the sampled minimum;
/// it needs a second sampling pass and is kept for replication only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinPolicy {
    Fixed { width: f64, max_loss: f64 },
    MinAnchored { bin_count: usize },
}

impl Default for BinPolicy {
    fn default() -> Self {
        BinPolicy::Fixed { width: 0.01, max_loss: 20.0 }
    }
}

/// Everything needed to (re)produce one histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramConfig {
    pub spec: NetworkSpec,
    /// Dataset rows whose mean loss is evaluated per trial.
    pub sample_indices: Vec<usize>,
    pub n_trials: u64,
    pub bin_policy: BinPolicy,
    pub master_seed: u64,
}

/// Binned counts of Monte-Carlo loss samples plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LossHistogram {
    /// `counts.len() + 1` sorted edges; bin `b` covers
    /// `[bin_edges[b], bin_edges[b+1])`.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Trials whose loss fell at or above the last edge.
    pub overflow_count: u64,
    pub n_trials: u64,
    pub min_loss: f64,
    pub max_loss: f64,
    pub config: HistogramConfig,
}

/// One detected histogram mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub bin_center: f64,
    pub count: u64,
    /// Count relative to the tallest bin, in (0, 1].
    pub prominence: f64,
}

/// Mode structure and mass metrics of a histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeReport {
    /// Modes sorted by bin center; each passed the prominence threshold.
    pub modes: Vec<Mode>,
    /// Center of the detected mode nearest to [`CENTRAL_REFERENCE`].
    pub central_mode_loss: f64,
    pub zero_mode_mass: f64,
    pub left_tail_mass: f64,
    pub central_reference: f64,
}

/// Outcome of [`tail_resample`].
#[derive(Debug, Clone, PartialEq)]
pub struct TailSample {
    /// Histogram of the retained (below-boundary) losses only; its
    /// `n_trials` equals the retained count.
    pub histogram: LossHistogram,
    pub retained: u64,
    pub trials_consumed: u64,
    /// retained / consumed; 0 when nothing was consumed.
    pub acceptance_rate: f64,
    pub target_reached: bool,
}

impl TailSample {
    /// The sampling budget ran out without a single tail observation.
    pub fn tail_unreachable(&self) -> bool {
        !self.target_reached && self.retained == 0
    }
}

/// Differences between two histograms with identical bin policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftReport {
    /// `zero_mode_mass(b) - zero_mode_mass(a)`.
    pub zero_mode_mass_delta: f64,
    /// `left_tail_mass(b) - left_tail_mass(a)`.
    pub left_tail_mass_delta: f64,
    /// 1-Wasserstein distance between the binned distributions
    /// (midpoint masses, overflow excluded).
    pub wasserstein: f64,
}

fn validate(config: &HistogramConfig, data: &[EncodedSample]) -> Result<()> {
    if config.n_trials == 0 {
        return Err(domain("n_trials must be >= 1"));
    }
    validate_tail(config, data)
}

// tail_resample may start at trial 0 (an empty base histogram)
fn validate_tail(config: &HistogramConfig, data: &[EncodedSample]) -> Result<()> {
    config.spec.validate()?;
    if config.sample_indices.is_empty() {
        return Err(domain("sample_indices must be non-empty"));
    }
    if let Some(&bad) = config.sample_indices.iter().find(|&&i| i >= data.len()) {
        return Err(domain(format!(
            "sample index {bad} out of range for dataset of {} rows",
            data.len()
        )));
    }
    match config.bin_policy {
        BinPolicy::Fixed { width, max_loss } => {
            if !(width.is_finite() && width > 0.0) {
                return Err(domain(format!("bin width must be positive, got {width}")));
            }
            if !(max_loss.is_finite() && max_loss > 0.0) {
                return Err(domain(format!("max_loss must be positive, got {max_loss}")));
            }
        }
        BinPolicy::MinAnchored { bin_count } => {
            if bin_count == 0 {
                return Err(domain("bin_count must be >= 1"));
            }
        }
    }
    Ok(())
}

/// Loss of the freshly initialized network for trial `trial` of `config`.
fn trial_loss(config: &HistogramConfig, selected: &[EncodedSample], trial: u64) -> f64 {
    let seed = rng::mix(config.master_seed, trial);
    let weights = net::init_weights(&config.spec, seed).expect("spec validated");
    let loss = net::mean_loss(&weights, selected, config.spec.activation).expect("non-empty");
    // the sigmoid clamp makes every loss finite
    debug_assert!(loss.is_finite());
    loss
}

fn select(config: &HistogramConfig, data: &[EncodedSample]) -> Vec<EncodedSample> {
    config
        .sample_indices
        .iter()
        .map(|&i| data[i].clone())
        .collect()
}

struct Partial {
    counts: Vec<u64>,
    overflow: u64,
    min: f64,
    max: f64,
}

fn accumulate(
    config: &HistogramConfig,
    selected: &[EncodedSample],
    trials: std::ops::Range<u64>,
    edges: &[f64],
) -> Partial {
    let n_bins = edges.len() - 1;
    let lo = edges[0];
    let hi = edges[n_bins];
    let width = (hi - lo) / n_bins as f64;
    let mut p = Partial {
        counts: vec![0; n_bins],
        overflow: 0,
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };
    for trial in trials {
        let loss = trial_loss(config, selected, trial);
        p.min = p.min.min(loss);
        p.max = p.max.max(loss);
        if loss >= hi {
            p.overflow += 1;
        } else if loss < lo {
            // min-anchored edges come from a first pass over the same
            // trials, so this branch is unreachable; counted anyway
            p.counts[0] += 1;
        } else {
            let b = (((loss - lo) / width) as usize).min(n_bins - 1);
            p.counts[b] += 1;
        }
    }
    p
}

fn fixed_edges(width: f64, max_loss: f64) -> Vec<f64> {
    let n_bins = (max_loss / width).ceil() as usize;
    (0..=n_bins).map(|i| i as f64 * width).collect()
}

/// Sample `config.n_trials` random initializations and bin their losses.
///
/// Counts are identical regardless of how trials are partitioned across
/// workers, and repeated runs with the same master seed are bit-identical.
pub fn sample_histogram(config: &HistogramConfig, data: &[EncodedSample]) -> Result<LossHistogram> {
    validate(config, data)?;
    let selected = select(config, data);

    let edges = match config.bin_policy {
        BinPolicy::Fixed { width, max_loss } => fixed_edges(width, max_loss),
        BinPolicy::MinAnchored { bin_count } => {
            // first pass: sampled min and max fix the bin boundaries
            let ranges = chunked_map(config.n_trials, |trials| {
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                for trial in trials {
                    let loss = trial_loss(config, &selected, trial);
                    min = min.min(loss);
                    max = max.max(loss);
                }
                (min, max)
            });
            let (min, max) = ranges
                .into_iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (c, d)| {
                    (a.min(c), b.max(d))
                });
            // widen the top edge so the sampled max lands inside the last bin
            let span = (max - min).max(f64::MIN_POSITIVE);
            let top = max + span * 1e-9;
            (0..=bin_count)
                .map(|i| min + (top - min) * i as f64 / bin_count as f64)
                .collect()
        }
    };

    let partials = chunked_map(config.n_trials, |trials| {
        accumulate(config, &selected, trials, &edges)
    });
    let n_bins = edges.len() - 1;
    let mut counts = vec![0u64; n_bins];
    let mut overflow = 0u64;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for p in partials {
        for (c, pc) in counts.iter_mut().zip(&p.counts) {
            *c += pc;
        }
        overflow += p.overflow;
        min = min.min(p.min);
        max = max.max(p.max);
    }
    Ok(LossHistogram {
        bin_edges: edges,
        counts,
        overflow_count: overflow,
        n_trials: config.n_trials,
        min_loss: min,
        max_loss: max,
        config: config.clone(),
    })
}

impl LossHistogram {
    /// Fraction of trials with loss `< threshold`, attributing the bin
    /// straddling the threshold linearly. Exact whenever the threshold
    /// lands on a bin edge.
    pub fn mass_below(&self, threshold: f64) -> f64 {
        if self.n_trials == 0 {
            return 0.0;
        }
        let mut mass = 0.0;
        for (b, &count) in self.counts.iter().enumerate() {
            let (lo, hi) = (self.bin_edges[b], self.bin_edges[b + 1]);
            if hi <= threshold {
                mass += count as f64;
            } else if lo < threshold {
                mass += count as f64 * (threshold - lo) / (hi - lo);
            } else {
                break;
            }
        }
        mass / self.n_trials as f64
    }

    /// Histogram rows as CSV: `bin_left,bin_right,count` plus an overflow
    /// row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count\n");
        for (b, &count) in self.counts.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.bin_edges[b],
                self.bin_edges[b + 1],
                count
            ));
        }
        out.push_str(&format!(
            "{},inf,{}\n",
            self.bin_edges[self.counts.len()],
            self.overflow_count
        ));
        out
    }

    /// Flat key=value metadata record: config echo, seed, provenance.
    pub fn metadata_kv(&self) -> String {
        let c = &self.config;
        let indices: Vec<String> = c.sample_indices.iter().map(|i| i.to_string()).collect();
        let policy = match c.bin_policy {
            BinPolicy::Fixed { width, max_loss } => {
                format!("fixed;width={width};max_loss={max_loss}")
            }
            BinPolicy::MinAnchored { bin_count } => format!("min_anchored;bin_count={bin_count}"),
        };
        let mut out = String::new();
        out.push_str("kind=histogram\n");
        out.push_str(&format!("input_dim={}\n", c.spec.input_dim));
        out.push_str(&format!("width={}\n", c.spec.hidden_width));
        out.push_str(&format!("depth={}\n", c.spec.hidden_depth));
        out.push_str(&format!("activation={}\n", c.spec.activation));
        out.push_str(&format!("init={}\n", c.spec.init));
        out.push_str(&format!("sample_indices={}\n", indices.join(";")));
        out.push_str(&format!("n_trials={}\n", c.n_trials));
        out.push_str(&format!("bin_policy={policy}\n"));
        out.push_str(&format!("master_seed={}\n", c.master_seed));
        out.push_str(&format!("min_loss={}\n", self.min_loss));
        out.push_str(&format!("max_loss={}\n", self.max_loss));
        out.push_str(&format!("provenance=losslab-{}\n", env!("CARGO_PKG_VERSION")));
        out
    }
}

/// Fraction of trials with loss below `tau` (default 0.05): the mass of
/// the near-zero mode.
pub fn zero_mode_mass(hist: &LossHistogram, tau: f64) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(domain(format!("tau must be positive, got {tau}")));
    }
    Ok(hist.mass_below(tau))
}

/// Fraction of trials with loss below `CENTRAL_REFERENCE - delta`
/// (default delta 0.1): mass strictly left of the central mode.
pub fn left_tail_mass(hist: &LossHistogram, delta: f64) -> Result<f64> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(domain(format!("delta must be positive, got {delta}")));
    }
    Ok(hist.mass_below(CENTRAL_REFERENCE - delta))
}

/// Local maxima whose count exceeds `prominence_fraction * max(count)`
/// and strictly exceeds both neighbors (missing neighbors count as zero).
///
/// The central reference is the loss analytically realized by a 0.5
/// sigmoid output on the selected samples, which is ln 2 for every label
/// mix.
pub fn detect_modes(hist: &LossHistogram, prominence_fraction: f64) -> Result<ModeReport> {
    if !(0.0..=1.0).contains(&prominence_fraction) {
        return Err(domain(format!(
            "prominence fraction must be in [0,1], got {prominence_fraction}"
        )));
    }
    let max_count = hist.counts.iter().copied().max().unwrap_or(0);
    if max_count == 0 {
        return Err(degenerate("all-zero histogram"));
    }
    let threshold = prominence_fraction * max_count as f64;
    let n = hist.counts.len();
    let mut modes = Vec::new();
    for b in 0..n {
        let c = hist.counts[b];
        let left = if b == 0 { 0 } else { hist.counts[b - 1] };
        let right = if b + 1 == n { 0 } else { hist.counts[b + 1] };
        if c as f64 > threshold && c > left && c > right {
            modes.push(Mode {
                bin_center: 0.5 * (hist.bin_edges[b] + hist.bin_edges[b + 1]),
                count: c,
                prominence: c as f64 / max_count as f64,
            });
        }
    }
    let central_mode_loss = modes
        .iter()
        .min_by(|a, b| {
            let da = (a.bin_center - CENTRAL_REFERENCE).abs();
            let db = (b.bin_center - CENTRAL_REFERENCE).abs();
            da.partial_cmp(&db).unwrap()
        })
        .map_or(f64::NAN, |m| m.bin_center);
    Ok(ModeReport {
        modes,
        central_mode_loss,
        zero_mode_mass: hist.mass_below(0.05),
        left_tail_mass: hist.mass_below(CENTRAL_REFERENCE - 0.1),
        central_reference: CENTRAL_REFERENCE,
    })
}

/// Keep drawing trials past `config.n_trials` (same seed derivation,
/// indices continuing where the base histogram stopped), retaining only
/// losses below `left_boundary`, until `target_count` are retained or
/// `max_trials` more are consumed.
///
/// Exhausting the budget with nothing retained is an explicit
/// [`TailSample::tail_unreachable`] result, not an error.
pub fn tail_resample(
    config: &HistogramConfig,
    data: &[EncodedSample],
    left_boundary: f64,
    target_count: u64,
    max_trials: u64,
) -> Result<TailSample> {
    validate_tail(config, data)?;
    if !(left_boundary.is_finite() && left_boundary > 0.0) {
        return Err(domain(format!(
            "left boundary must be positive, got {left_boundary}"
        )));
    }
    let selected = select(config, data);
    let mut retained_losses = Vec::new();
    let mut consumed = 0u64;
    if target_count > 0 {
        for trial in config.n_trials..config.n_trials.saturating_add(max_trials) {
            let loss = trial_loss(config, &selected, trial);
            consumed += 1;
            if loss < left_boundary {
                retained_losses.push(loss);
                if retained_losses.len() as u64 >= target_count {
                    break;
                }
            }
        }
    }

    let edges = match config.bin_policy {
        BinPolicy::Fixed { width, max_loss } => fixed_edges(width, max_loss),
        BinPolicy::MinAnchored { bin_count } => {
            if retained_losses.is_empty() {
                fixed_edges(left_boundary / bin_count as f64, left_boundary)
            } else {
                let min = retained_losses.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = retained_losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let span = (max - min).max(f64::MIN_POSITIVE);
                let top = max + span * 1e-9;
                (0..=bin_count)
                    .map(|i| min + (top - min) * i as f64 / bin_count as f64)
                    .collect()
            }
        }
    };
    let n_bins = edges.len() - 1;
    let lo = edges[0];
    let hi = edges[n_bins];
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0u64; n_bins];
    let mut overflow = 0u64;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &loss in &retained_losses {
        min = min.min(loss);
        max = max.max(loss);
        if loss >= hi {
            overflow += 1;
        } else {
            let b = (((loss - lo) / width).max(0.0) as usize).min(n_bins - 1);
            counts[b] += 1;
        }
    }
    let retained = retained_losses.len() as u64;
    Ok(TailSample {
        histogram: LossHistogram {
            bin_edges: edges,
            counts,
            overflow_count: overflow,
            n_trials: retained,
            min_loss: min,
            max_loss: max,
            config: config.clone(),
        },
        retained,
        trials_consumed: consumed,
        acceptance_rate: if consumed == 0 {
            0.0
        } else {
            retained as f64 / consumed as f64
        },
        target_reached: retained >= target_count,
    })
}

/// Shift metrics between two histograms over identical bins.
pub fn compare_histograms(a: &LossHistogram, b: &LossHistogram) -> Result<ShiftReport> {
    if a.bin_edges != b.bin_edges {
        return Err(domain("histograms have different bin policies"));
    }
    let zero_a = a.mass_below(0.05);
    let zero_b = b.mass_below(0.05);
    let tail_a = a.mass_below(CENTRAL_REFERENCE - 0.1);
    let tail_b = b.mass_below(CENTRAL_REFERENCE - 0.1);

    // W1 on the binned midpoint distributions: integrate |CDF_a - CDF_b|
    let total_a: u64 = a.counts.iter().sum();
    let total_b: u64 = b.counts.iter().sum();
    if total_a == 0 || total_b == 0 {
        return Err(degenerate("empty histogram in comparison"));
    }
    let mut cdf_a = 0.0;
    let mut cdf_b = 0.0;
    let mut w1 = 0.0;
    for i in 0..a.counts.len() {
        cdf_a += a.counts[i] as f64 / total_a as f64;
        cdf_b += b.counts[i] as f64 / total_b as f64;
        let width = a.bin_edges[i + 1] - a.bin_edges[i];
        w1 += (cdf_a - cdf_b).abs() * width;
    }
    Ok(ShiftReport {
        zero_mode_mass_delta: zero_b - zero_a,
        left_tail_mass_delta: tail_b - tail_a,
        wasserstein: w1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;
    use crate::net::{Activation, InitScheme};

    fn base_config(width: usize, depth: usize, trials: u64) -> HistogramConfig {
        HistogramConfig {
            spec: NetworkSpec {
                input_dim: data::bundled().input_dim,
                hidden_width: width,
                hidden_depth: depth,
                activation: Activation::Relu,
                init: InitScheme::HeNormal,
            },
            sample_indices: vec![0],
            n_trials: trials,
            bin_policy: BinPolicy::default(),
            master_seed: 0xBEEF,
        }
    }

    fn synthetic_hist(counts: Vec<u64>, width: f64) -> LossHistogram {
        let n = counts.len();
        let total: u64 = counts.iter().sum();
        LossHistogram {
            bin_edges: (0..=n).map(|i| i as f64 * width).collect(),
            counts,
            overflow_count: 0,
            n_trials: total,
            min_loss: 0.0,
            max_loss: n as f64 * width,
            config: base_config(3, 3, total.max(1)),
        }
    }

    #[test]
    fn conservation_and_determinism() {
        let ds = data::bundled();
        let config = base_config(3, 3, 1000);
        let a = sample_histogram(&config, &ds.samples).unwrap();
        let b = sample_histogram(&config, &ds.samples).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts.iter().sum::<u64>() + a.overflow_count, 1000);
        // min falls inside the first nonempty bin
        let first = a.counts.iter().position(|&c| c > 0).unwrap();
        assert!(a.min_loss >= a.bin_edges[first] && a.min_loss < a.bin_edges[first + 1]);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn partition_invariance_across_worker_counts() {
        let ds = data::bundled();
        let config = base_config(3, 3, 1000);
        let reference = sample_histogram(&config, &ds.samples).unwrap();
        for workers in [1usize, 2, 4, 8] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .unwrap();
            let hist = pool.install(|| sample_histogram(&config, &ds.samples).unwrap());
            assert_eq!(hist, reference, "worker count {workers} changed the histogram");
        }
    }

    #[test]
    fn modal_bin_contains_ln2_for_small_relu_net() {
        let ds = data::bundled();
        let config = base_config(3, 3, 20_000);
        let hist = sample_histogram(&config, &ds.samples).unwrap();
        let modal = hist
            .counts
            .iter()
            .enumerate()
            .max_by_key(|(_, &c)| c)
            .unwrap()
            .0;
        assert!(
            hist.bin_edges[modal] <= LN_2 && LN_2 < hist.bin_edges[modal + 1],
            "modal bin [{}, {}) misses ln 2",
            hist.bin_edges[modal],
            hist.bin_edges[modal + 1]
        );
    }

    #[test]
    fn detect_modes_on_synthetic_shapes() {
        // unimodal
        let h = synthetic_hist(vec![1, 4, 10, 4, 1], 0.1);
        let report = detect_modes(&h, 0.05).unwrap();
        assert_eq!(report.modes.len(), 1);
        assert!((report.modes[0].bin_center - 0.25).abs() < 1e-12);
        // two separated spikes
        let h = synthetic_hist(vec![0, 50, 0, 0, 30, 0], 0.1);
        let report = detect_modes(&h, 0.05).unwrap();
        assert_eq!(report.modes.len(), 2);
        // all-zero is degenerate
        let h = synthetic_hist(vec![0, 0, 0], 0.1);
        assert!(detect_modes(&h, 0.05).is_err());
    }

    #[test]
    fn tanh_twin_has_fewer_modes_than_relu() {
        // 0.05-wide bins: fine enough to separate the zero and central
        // peaks, coarse enough that a smooth curve reads as one mode
        let ds = data::bundled();
        let relu = HistogramConfig {
            bin_policy: BinPolicy::Fixed { width: 0.05, max_loss: 20.0 },
            master_seed: 0xAE,
            ..base_config(9, 3, 40_000)
        };
        let tanh = HistogramConfig {
            spec: NetworkSpec { activation: Activation::Tanh, ..relu.spec },
            ..relu.clone()
        };
        let relu_modes = detect_modes(&sample_histogram(&relu, &ds.samples).unwrap(), 0.05)
            .unwrap()
            .modes
            .len();
        let tanh_modes = detect_modes(&sample_histogram(&tanh, &ds.samples).unwrap(), 0.05)
            .unwrap()
            .modes
            .len();
        assert!(
            tanh_modes < relu_modes,
            "tanh modes {tanh_modes} not fewer than relu modes {relu_modes}"
        );
    }

    #[test]
    fn mass_metrics_on_synthetic_histograms() {
        // entirely above tau -> 0
        let mut h = synthetic_hist(vec![0, 0, 0, 0, 0, 0, 0, 5, 5], 0.1);
        h.min_loss = 0.7;
        assert_eq!(zero_mode_mass(&h, 0.05).unwrap(), 0.0);
        // entirely below tau -> 1
        let h = synthetic_hist(vec![10], 0.04);
        assert_eq!(zero_mode_mass(&h, 0.05).unwrap(), 1.0);
        // empty left tail
        let h = synthetic_hist(vec![0, 0, 0, 0, 0, 0, 10, 10, 0], 0.1);
        assert_eq!(left_tail_mass(&h, 0.1).unwrap(), 0.0);
        assert!(zero_mode_mass(&h, 0.0).is_err());
        assert!(left_tail_mass(&h, -0.5).is_err());
    }

    #[test]
    fn doubling_trials_is_consistent() {
        let ds = data::bundled();
        let base = base_config(6, 3, 20_000);
        let double = HistogramConfig { n_trials: 40_000, ..base.clone() };
        let m1 = zero_mode_mass(&sample_histogram(&base, &ds.samples).unwrap(), 0.05).unwrap();
        let m2 = zero_mode_mass(&sample_histogram(&double, &ds.samples).unwrap(), 0.05).unwrap();
        let se = (m1 * (1.0 - m1) / 20_000.0).sqrt();
        assert!(
            (m2 - m1).abs() < 5.0 * se,
            "zero-mode mass moved {m1} -> {m2}, more than 5 stderr ({se})"
        );
    }

    #[test]
    fn tail_resample_consistency() {
        let ds = data::bundled();
        let config = base_config(6, 3, 20_000);
        let hist = sample_histogram(&config, &ds.samples).unwrap();
        let boundary = 0.5;
        let mass = hist.mass_below(boundary);
        assert!(mass > 0.0, "pick a boundary with tail mass");
        let tail = tail_resample(&config, &ds.samples, boundary, 400, 200_000).unwrap();
        assert!(tail.target_reached);
        assert_eq!(tail.retained, 400);
        // acceptance rate within 5 binomial stderr of the measured mass
        let se = (mass * (1.0 - mass) / tail.trials_consumed as f64).sqrt();
        assert!(
            (tail.acceptance_rate - mass).abs() < 5.0 * se,
            "acceptance {} vs mass {mass} (se {se})",
            tail.acceptance_rate
        );
        // retained histogram holds only below-boundary losses
        assert!(tail.histogram.max_loss < boundary);
        assert_eq!(
            tail.histogram.counts.iter().sum::<u64>() + tail.histogram.overflow_count,
            tail.histogram.n_trials
        );
    }

    #[test]
    fn tail_resample_zero_target_consumes_nothing() {
        let ds = data::bundled();
        let config = base_config(3, 3, 1000);
        let tail = tail_resample(&config, &ds.samples, 0.5, 0, 10_000).unwrap();
        assert_eq!(tail.trials_consumed, 0);
        assert_eq!(tail.retained, 0);
        assert!(tail.target_reached);
        assert!(!tail.tail_unreachable());
    }

    #[test]
    fn tail_resample_unreachable_is_explicit() {
        let ds = data::bundled();
        let config = base_config(3, 3, 100);
        // boundary below any representable loss for this setup
        let tail = tail_resample(&config, &ds.samples, 1e-12, 5, 2_000).unwrap();
        assert!(tail.tail_unreachable());
        assert_eq!(tail.retained, 0);
        assert_eq!(tail.trials_consumed, 2_000);
    }

    #[test]
    fn compare_identical_and_shifted() {
        let a = synthetic_hist(vec![2, 5, 9, 5, 2, 0], 0.1);
        let same = compare_histograms(&a, &a).unwrap();
        assert_eq!(same.zero_mode_mass_delta, 0.0);
        assert_eq!(same.left_tail_mass_delta, 0.0);
        assert_eq!(same.wasserstein, 0.0);

        // shift one bin right: W1 = bin width
        let b = synthetic_hist(vec![0, 2, 5, 9, 5, 2], 0.1);
        let shift = compare_histograms(&a, &b).unwrap();
        assert!((shift.wasserstein - 0.1).abs() < 1e-12, "{}", shift.wasserstein);

        let c = synthetic_hist(vec![1, 1], 0.2);
        assert!(compare_histograms(&a, &c).is_err());
    }

    #[test]
    fn min_anchored_policy_brackets_all_losses() {
        let ds = data::bundled();
        let config = HistogramConfig {
            bin_policy: BinPolicy::MinAnchored { bin_count: 64 },
            ..base_config(4, 2, 5_000)
        };
        let hist = sample_histogram(&config, &ds.samples).unwrap();
        assert_eq!(hist.counts.iter().sum::<u64>(), 5_000);
        assert_eq!(hist.overflow_count, 0);
        assert_eq!(hist.counts.len(), 64);
        assert!((hist.bin_edges[0] - hist.min_loss).abs() < 1e-12);
        // determinism of the two-pass policy
        let again = sample_histogram(&config, &ds.samples).unwrap();
        assert_eq!(hist, again);
    }

    #[test]
    fn csv_and_metadata_shape() {
        let ds = data::bundled();
        let config = base_config(3, 1, 200);
        let hist = sample_histogram(&config, &ds.samples).unwrap();
        let csv = hist.to_csv();
        assert_eq!(csv.lines().count(), hist.counts.len() + 2);
        assert!(csv.starts_with("bin_left,bin_right,count\n"));
        let kv = hist.metadata_kv();
        assert!(kv.contains("master_seed=48879"));
        assert!(kv.contains("activation=relu"));
    }

    #[test]
    fn invalid_configs_are_domain_errors() {
        let ds = data::bundled();
        let mut config = base_config(3, 1, 0);
        assert!(sample_histogram(&config, &ds.samples).is_err());
        config.n_trials = 10;
        config.sample_indices = vec![999];
        assert!(sample_histogram(&config, &ds.samples).is_err());
        config.sample_indices = vec![];
        assert!(sample_histogram(&config, &ds.samples).is_err());
    }
}
