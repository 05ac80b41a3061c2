//! Double-descent sweep harnesses: capacity (width ladder), epoch
//! (training-time curve with geometry probes) and data-fidelity
//! (training-set size ladder with nested subsampling).
//!
//! Label noise is applied once, before splitting. Sweep cells run
//! concurrently with seeds derived from `(seed, cell index)`, so results
//! merge by key and never depend on scheduling.

use crate::record::SweepPoint;
use crate::{CliError, Result};
use losslab::data::EncodedSample;
use losslab::net::{self, Activation, NetworkSpec, TrainRun};
use losslab::parallel::ordered_map;
use losslab::probes;
use losslab::rng::{mix, Rng};

// fixed stream indices so noise and split draws never collide with cells
const NOISE_STREAM: u64 = 0x4E01;
const SPLIT_STREAM: u64 = 0x5B17;

/// Flip each label with probability `rate` (seeded, applied once).
pub fn apply_label_noise(samples: &[EncodedSample], rate: f64, seed: u64) -> Vec<EncodedSample> {
    let mut rng = Rng::from_indexed(seed, NOISE_STREAM);
    samples
        .iter()
        .map(|s| {
            let mut s = s.clone();
            if rng.uniform() < rate {
                s.label = !s.label;
            }
            s
        })
        .collect()
}

/// Seeded shuffle then split: first `round(n * split)` rows train (at
/// least one row on each side).
pub fn split_train_test(
    samples: &[EncodedSample],
    split: f64,
    seed: u64,
) -> Result<(Vec<EncodedSample>, Vec<EncodedSample>)> {
    if samples.len() < 2 {
        return Err(CliError::Domain("need at least 2 samples to split".into()));
    }
    if !(0.0..1.0).contains(&split) || split <= 0.0 {
        return Err(CliError::Domain(format!("split must be in (0,1), got {split}")));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    Rng::from_indexed(seed, SPLIT_STREAM).shuffle(&mut order);
    let n_train = ((samples.len() as f64 * split).round() as usize)
        .clamp(1, samples.len() - 1);
    let train = order[..n_train].iter().map(|&i| samples[i].clone()).collect();
    let test = order[n_train..].iter().map(|&i| samples[i].clone()).collect();
    Ok((train, test))
}

/// 0/1 error at probability threshold 0.5 (p > 0.5 predicts the positive
/// class).
pub fn classification_error(
    weights: &net::WeightSet,
    samples: &[EncodedSample],
    activation: Activation,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(CliError::Domain("cannot score an empty sample set".into()));
    }
    let mut wrong = 0usize;
    for s in samples {
        let p = net::forward(weights, &s.features, activation).map_err(CliError::from)?;
        if (p > 0.5) != s.label {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / samples.len() as f64)
}

fn final_weights(run: &TrainRun) -> &net::WeightSet {
    &run.snapshots.last().expect("runs always snapshot the final epoch").1
}

fn measure_cell(
    run: std::result::Result<TrainRun, losslab::Error>,
    axis: f64,
    train: &[EncodedSample],
    test: &[EncodedSample],
    activation: Activation,
) -> Result<SweepPoint> {
    match run {
        Ok(run) => {
            let weights = final_weights(&run);
            Ok(SweepPoint {
                axis,
                train_loss: *run.epoch_losses.last().unwrap(),
                test_loss: net::mean_loss(weights, test, activation).map_err(CliError::from)?,
                train_error: classification_error(weights, train, activation)?,
                test_error: classification_error(weights, test, activation)?,
                failed: false,
            })
        }
        Err(losslab::Error::Diverged { .. }) => Ok(SweepPoint {
            axis,
            train_loss: f64::NAN,
            test_loss: f64::NAN,
            train_error: f64::NAN,
            test_error: f64::NAN,
            failed: true,
        }),
        Err(e) => Err(e.into()),
    }
}

/// Train one network per width and record final train/test loss and 0/1
/// error, one row per width keyed by parameter count. Diverged cells are
/// flagged, not fatal.
#[allow(clippy::too_many_arguments)]
pub fn run_capacity_sweep(
    widths: &[usize],
    depth: usize,
    base_spec: &NetworkSpec,
    data: &[EncodedSample],
    label_noise: f64,
    split: f64,
    epochs: usize,
    lr: f64,
    batch_size: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if widths.len() < 2 {
        return Err(CliError::Domain(format!(
            "capacity sweep needs at least 2 widths, got {}",
            widths.len()
        )));
    }
    let noisy = apply_label_noise(data, label_noise, seed);
    let (train, test) = split_train_test(&noisy, split, seed)?;
    let cells: Vec<Result<SweepPoint>> = ordered_map(widths, |&width| {
        let cell_index = widths.iter().position(|&w| w == width).unwrap_or(0);
        let spec = NetworkSpec { hidden_width: width, hidden_depth: depth, ..*base_spec };
        let bs = batch_size.min(train.len()).max(1);
        let run = net::train(
            &spec,
            &train,
            lr,
            epochs,
            bs,
            mix(seed, cell_index as u64 + 1),
            epochs.max(1),
        );
        measure_cell(run, net::param_count(&spec) as f64, &train, &test, spec.activation)
    });
    cells.into_iter().collect()
}

/// One row of an epoch sweep; probe columns are filled at the probe
/// cadence and on the final epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    pub confusion: Option<f64>,
    pub id_two_nn: Option<f64>,
    pub id_participation: Option<f64>,
}

/// Single training run with per-epoch train/test curves and geometry
/// probes (gradient confusion and both intrinsic-dimension estimators)
/// at `probe_cadence`.
#[allow(clippy::too_many_arguments)]
pub fn run_epoch_sweep(
    spec: &NetworkSpec,
    data: &[EncodedSample],
    label_noise: f64,
    split: f64,
    epochs: usize,
    lr: f64,
    batch_size: usize,
    seed: u64,
    probe_cadence: usize,
    ensemble_k: usize,
    probe_batch: usize,
) -> Result<Vec<EpochRow>> {
    if probe_cadence == 0 || epochs < probe_cadence {
        return Err(CliError::Domain(format!(
            "need epochs >= probe_cadence >= 1, got epochs={epochs} cadence={probe_cadence}"
        )));
    }
    let noisy = apply_label_noise(data, label_noise, seed);
    let (train, test) = split_train_test(&noisy, split, seed)?;
    let bs = batch_size.min(train.len()).max(1);
    // snapshot every epoch: test losses and probes both need the weights
    let run = net::train(spec, &train, lr, epochs, bs, mix(seed, 1), 1).map_err(CliError::from)?;

    let rows: Vec<Result<EpochRow>> = ordered_map(&run.snapshots[1..], |(epoch, weights)| {
        let epoch = *epoch;
        let test_loss = net::mean_loss(weights, &test, spec.activation).map_err(CliError::from)?;
        let mut row = EpochRow {
            epoch,
            train_loss: run.epoch_losses[epoch - 1],
            test_loss,
            confusion: None,
            id_two_nn: None,
            id_participation: None,
        };
        if epoch % probe_cadence == 0 || epoch == run.epoch_losses.len() {
            let ens = probes::gradient_ensemble(
                weights,
                &train,
                spec.activation,
                probe_batch.min(train.len()).max(1),
                ensemble_k,
                mix(seed, epoch as u64),
            )
            .map_err(CliError::from)?;
            row.confusion = probes::gradient_confusion(&ens).ok();
            row.id_two_nn = probes::two_nn_id(&ens.gradients).ok().map(|e| e.value);
            row.id_participation =
                probes::participation_ratio_id(&ens.gradients).ok().map(|e| e.value);
        }
        Ok(row)
    });
    rows.into_iter().collect()
}

/// Seed for one fidelity cell, exposed so consistency tests can replay a
/// cell directly.
pub fn fidelity_cell_seed(seed: u64, size_index: usize, repeat: usize, repeats: usize) -> u64 {
    mix(seed, (size_index * repeats + repeat) as u64 + 1)
}

/// Shuffled training pool and fixed held-out test set for a fidelity
/// sweep; size-k subsets are prefixes of the returned pool.
pub fn fidelity_pool(
    data: &[EncodedSample],
    label_noise: f64,
    split: f64,
    seed: u64,
) -> Result<(Vec<EncodedSample>, Vec<EncodedSample>)> {
    let noisy = apply_label_noise(data, label_noise, seed);
    split_train_test(&noisy, split, seed)
}

/// Train on nested subsets of the pool (smaller sets are prefixes of
/// larger), evaluate on the fixed held-out test set, average metrics over
/// `repeats` reinitializations.
#[allow(clippy::too_many_arguments)]
pub fn run_fidelity_sweep(
    spec: &NetworkSpec,
    data: &[EncodedSample],
    sizes: &[usize],
    label_noise: f64,
    split: f64,
    epochs: usize,
    lr: f64,
    batch_size: usize,
    seed: u64,
    repeats: usize,
) -> Result<Vec<SweepPoint>> {
    if sizes.is_empty() || repeats == 0 {
        return Err(CliError::Domain("fidelity sweep needs sizes and repeats >= 1".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Domain(format!("sizes must be strictly increasing: {sizes:?}")));
    }
    let (pool, test) = fidelity_pool(data, label_noise, split, seed)?;
    if *sizes.last().unwrap() > pool.len() {
        return Err(CliError::Domain(format!(
            "largest size {} exceeds training pool of {}",
            sizes.last().unwrap(),
            pool.len()
        )));
    }

    let cells: Vec<(usize, usize)> = (0..sizes.len())
        .flat_map(|s| (0..repeats).map(move |r| (s, r)))
        .collect();
    let results: Vec<Result<SweepPoint>> = ordered_map(&cells, |&(size_idx, repeat)| {
        let size = sizes[size_idx];
        let train = &pool[..size];
        let bs = batch_size.min(size).max(1);
        let run = net::train(
            spec,
            train,
            lr,
            epochs,
            bs,
            fidelity_cell_seed(seed, size_idx, repeat, repeats),
            epochs.max(1),
        );
        measure_cell(run, size as f64, train, &test, spec.activation)
    });

    // merge repeats by size key (order independent: keyed average)
    let mut merged = Vec::with_capacity(sizes.len());
    for (size_idx, &size) in sizes.iter().enumerate() {
        let mut acc = SweepPoint {
            axis: size as f64,
            train_loss: 0.0,
            test_loss: 0.0,
            train_error: 0.0,
            test_error: 0.0,
            failed: false,
        };
        let mut live = 0usize;
        for (cell_idx, &(s, _)) in cells.iter().enumerate() {
            if s != size_idx {
                continue;
            }
            let p = results[cell_idx].as_ref().map_err(|e| CliError::Domain(e.to_string()))?;
            if p.failed {
                acc.failed = true;
                continue;
            }
            acc.train_loss += p.train_loss;
            acc.test_loss += p.test_loss;
            acc.train_error += p.train_error;
            acc.test_error += p.test_error;
            live += 1;
        }
        if live == 0 {
            merged.push(SweepPoint {
                axis: size as f64,
                train_loss: f64::NAN,
                test_loss: f64::NAN,
                train_error: f64::NAN,
                test_error: f64::NAN,
                failed: true,
            });
        } else {
            let inv = 1.0 / live as f64;
            acc.train_loss *= inv;
            acc.test_loss *= inv;
            acc.train_error *= inv;
            acc.test_error *= inv;
            merged.push(acc);
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use losslab::data;
    use losslab::net::InitScheme;

    fn base_spec(input_dim: usize) -> NetworkSpec {
        NetworkSpec {
            input_dim,
            hidden_width: 4,
            hidden_depth: 1,
            activation: Activation::Tanh,
            init: InitScheme::HeNormal,
        }
    }

    #[test]
    fn noise_and_split_are_seeded() {
        let ds = data::bundled();
        let a = apply_label_noise(&ds.samples, 0.2, 7);
        let b = apply_label_noise(&ds.samples, 0.2, 7);
        assert_eq!(a, b);
        let flipped = a.iter().zip(&ds.samples).filter(|(x, y)| x.label != y.label).count();
        assert!(flipped > 0 && flipped < 30, "flips {flipped}");

        let (train, test) = split_train_test(&ds.samples, 0.5, 9).unwrap();
        assert_eq!(train.len() + test.len(), ds.len());
        let (train2, test2) = split_train_test(&ds.samples, 0.5, 9).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
        assert!(split_train_test(&ds.samples, 0.0, 9).is_err());
    }

    #[test]
    fn capacity_sweep_shape_and_determinism() {
        let ds = data::synthetic(60, 0.1, 3).unwrap();
        let widths = [1usize, 4, 8];
        let spec = base_spec(ds.input_dim);
        let run = |_: ()| {
            run_capacity_sweep(&widths, 1, &spec, &ds.samples, 0.1, 0.5, 20, 0.2, 8, 11).unwrap()
        };
        let a = run(());
        let b = run(());
        assert_eq!(a, b);
        assert_eq!(a.len(), widths.len());
        for (p, &w) in a.iter().zip(&widths) {
            let cell_spec = NetworkSpec { hidden_width: w, ..spec };
            assert_eq!(p.axis, net::param_count(&cell_spec) as f64);
            assert!((0.0..=1.0).contains(&p.train_error));
            assert!((0.0..=1.0).contains(&p.test_error));
            assert!(!p.failed);
        }
        assert!(run_capacity_sweep(&[3], 1, &spec, &ds.samples, 0.0, 0.5, 5, 0.1, 8, 1).is_err());
    }

    #[test]
    fn epoch_sweep_rows_match_epochs() {
        let ds = data::bundled();
        let spec = base_spec(ds.input_dim);
        let rows =
            run_epoch_sweep(&spec, &ds.samples, 0.0, 0.5, 12, 0.1, 5, 4, 4, 12, 2).unwrap();
        assert_eq!(rows.len(), 12);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.epoch, i + 1);
            let probed = (i + 1) % 4 == 0 || i + 1 == 12;
            assert_eq!(row.confusion.is_some(), probed, "row {i}");
        }
        // lr = 0: flat curves
        let flat = run_epoch_sweep(&spec, &ds.samples, 0.0, 0.5, 6, 0.0, 5, 4, 3, 12, 2).unwrap();
        for row in &flat[1..] {
            assert_eq!(row.train_loss, flat[0].train_loss);
            assert_eq!(row.test_loss, flat[0].test_loss);
        }
    }

    #[test]
    fn overparameterized_epoch_sweep_memorizes_noisy_labels() {
        // 81 params on 20 noisy training rows: the train loss collapses
        // while the held-out loss stays above it
        let ds = data::synthetic(40, 0.15, 0xAB).unwrap();
        let spec = NetworkSpec {
            input_dim: ds.input_dim,
            hidden_width: 16,
            hidden_depth: 1,
            activation: Activation::Tanh,
            init: InitScheme::HeNormal,
        };
        let rows =
            run_epoch_sweep(&spec, &ds.samples, 0.15, 0.5, 300, 0.3, 4, 0xAB, 300, 8, 2).unwrap();
        let last = rows.last().unwrap();
        assert!(last.train_loss < 0.05, "train loss {}", last.train_loss);
        assert!(
            last.test_loss >= last.train_loss,
            "test {} below train {}",
            last.test_loss,
            last.train_loss
        );
    }

    #[test]
    fn fidelity_nested_prefixes_and_full_size_consistency() {
        let ds = data::synthetic(80, 0.05, 5).unwrap();
        let spec = base_spec(ds.input_dim);
        let (pool, test) = fidelity_pool(&ds.samples, 0.05, 0.5, 21).unwrap();
        // nested: size-10 subset is a prefix of the size-20 subset
        assert_eq!(&pool[..10], &pool[..20][..10]);

        let sizes = [10usize, 20, pool.len()];
        let points = run_fidelity_sweep(
            &spec, &ds.samples, &sizes, 0.05, 0.5, 15, 0.2, 8, 21, 1,
        )
        .unwrap();
        assert_eq!(points.len(), 3);

        // repeats = 1 at full size matches a direct train call bit-exactly
        let direct = net::train(
            &spec,
            &pool,
            0.2,
            15,
            8.min(pool.len()),
            fidelity_cell_seed(21, 2, 0, 1),
            15,
        )
        .unwrap();
        let w = &direct.snapshots.last().unwrap().1;
        assert_eq!(points[2].train_loss, *direct.epoch_losses.last().unwrap());
        assert_eq!(
            points[2].test_loss,
            net::mean_loss(w, &test, spec.activation).unwrap()
        );

        assert!(
            run_fidelity_sweep(&spec, &ds.samples, &[20, 10], 0.0, 0.5, 5, 0.1, 8, 1, 1).is_err()
        );
        assert!(run_fidelity_sweep(
            &spec,
            &ds.samples,
            &[10, 10_000],
            0.0,
            0.5,
            5,
            0.1,
            8,
            1,
            1
        )
        .is_err());
    }
}
