//! Probes for geometric quantities along training paths: intrinsic
//! dimension of minibatch-gradient ensembles, gradient confusion, and the
//! architecture influence ratio.
//!
//! The "distribution of possible update steps" at a point in weight space
//! is operationalized as the ensemble of gradients over K seeded random
//! minibatches; both intrinsic-dimension estimators run on those K flat
//! vectors (or on any other point cloud).

use crate::data::EncodedSample;
use crate::error::{degenerate, domain, Result};
use crate::net::{self, Activation, NetworkSpec, TrainRun, WeightSet};
use crate::parallel::ordered_map_indices;
use crate::rng::{mix, Rng};

/// K minibatch gradients taken at one weight-space point.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEnsemble {
    /// Snapshot epoch this ensemble was taken at (0 for a standalone call).
    pub snapshot_epoch: usize,
    /// K flat gradient vectors, one per seeded minibatch.
    pub gradients: Vec<Vec<f64>>,
    pub batch_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdMethod {
    TwoNn,
    ParticipationRatio,
}

/// An intrinsic-dimension estimate over a point cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdEstimate {
    pub method: IdMethod,
    pub value: f64,
    /// Points actually used by the estimator.
    pub n_points: usize,
    /// Exact duplicate points dropped before estimation.
    pub duplicates_dropped: usize,
}

/// One row of a tendril profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TendrilPoint {
    pub epoch: usize,
    pub loss: f64,
    /// None when the snapshot's ensemble was degenerate for the estimator.
    pub id_two_nn: Option<f64>,
    pub id_participation: Option<f64>,
    pub confusion: Option<f64>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Two-nearest-neighbor intrinsic dimension (the TwoNN estimator of
/// Facco et al.), fit on the empirical distribution of the ratio
/// `mu = d2/d1` with the top 10% largest ratios discarded as the standard
/// robustness trim.
///
/// `d2` is the nearest distance strictly greater than `d1`, so lattice-like
/// clouds with tied first shells still produce informative ratios. Exact
/// duplicate points are dropped first and reported in the estimate.
pub fn two_nn_id(points: &[Vec<f64>]) -> Result<IdEstimate> {
    let mut unique: Vec<&Vec<f64>> = points.iter().collect();
    unique.sort_by(|a, b| a.partial_cmp(b).unwrap());
    unique.dedup_by(|a, b| a == b);
    let dropped = points.len() - unique.len();
    if unique.len() < 2 && !points.is_empty() {
        return Err(degenerate("all points identical"));
    }
    if unique.len() < 10 {
        return Err(domain(format!(
            "two_nn_id needs at least 10 distinct points, got {}",
            unique.len()
        )));
    }

    let n = unique.len();
    let ratios: Vec<Option<f64>> = ordered_map_indices(n, |i| {
        let mut d1 = f64::INFINITY;
        for (j, q) in unique.iter().enumerate() {
            if j != i {
                d1 = d1.min(squared_distance(unique[i], q));
            }
        }
        // nearest strictly-larger shell
        let mut d2 = f64::INFINITY;
        for (j, q) in unique.iter().enumerate() {
            if j != i {
                let d = squared_distance(unique[i], q);
                if d > d1 {
                    d2 = d2.min(d);
                }
            }
        }
        if d2.is_finite() {
            // squared distances: mu = sqrt(d2/d1)
            Some(0.5 * ((d2 / d1).ln()))
        } else {
            None
        }
    });
    let mut log_mu: Vec<f64> = ratios.into_iter().flatten().collect();
    if log_mu.is_empty() {
        return Err(degenerate("no usable neighbor ratios (all shells tied)"));
    }
    log_mu.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let total = log_mu.len();
    let trim = (total as f64 * 0.10).floor() as usize;
    let kept = total - trim;

    // straight-line fit through the origin of -ln(1 - i/N) on ln mu
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (idx, &x) in log_mu[..kept].iter().enumerate() {
        let rank = (idx + 1) as f64;
        let y = -(1.0 - rank / total as f64).ln();
        sxy += x * y;
        sxx += x * x;
    }
    if sxx == 0.0 {
        return Err(degenerate("neighbor ratios carry no spread"));
    }
    Ok(IdEstimate {
        method: IdMethod::TwoNn,
        value: sxy / sxx,
        n_points: n,
        duplicates_dropped: dropped,
    })
}

/// Participation ratio of the centered covariance spectrum:
/// `(sum lambda)^2 / sum lambda^2`, computed trace-wise so no
/// eigendecomposition is needed. Always in `[1, ambient dimension]` for a
/// cloud with any spread.
pub fn participation_ratio_id(points: &[Vec<f64>]) -> Result<IdEstimate> {
    if points.len() < 3 {
        return Err(domain(format!(
            "participation_ratio_id needs at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len();
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(domain("points have mixed dimensions"));
    }
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, &x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    // tr(C) and tr(C^2) = ||C||_F^2 through the n x n Gram matrix of the
    // centered cloud when n < dim, the dim x dim covariance otherwise
    let centered: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let (trace, frob) = if n <= dim {
        let mut trace = 0.0;
        let mut frob = 0.0;
        for i in 0..n {
            for j in i..n {
                let g: f64 = centered[i]
                    .iter()
                    .zip(&centered[j])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / n as f64;
                if i == j {
                    trace += g;
                    frob += g * g;
                } else {
                    frob += 2.0 * g * g;
                }
            }
        }
        (trace, frob)
    } else {
        let mut trace = 0.0;
        let mut frob = 0.0;
        for a in 0..dim {
            for b in a..dim {
                let c: f64 = centered.iter().map(|p| p[a] * p[b]).sum::<f64>() / n as f64;
                if a == b {
                    trace += c;
                    frob += c * c;
                } else {
                    frob += 2.0 * c * c;
                }
            }
        }
        (trace, frob)
    };
    if trace <= 0.0 || frob <= 0.0 {
        return Err(degenerate("point cloud has zero variance"));
    }
    Ok(IdEstimate {
        method: IdMethod::ParticipationRatio,
        value: trace * trace / frob,
        n_points: n,
        duplicates_dropped: 0,
    })
}

/// K gradients over seeded random minibatches (drawn without replacement)
/// at a fixed weight point. Minibatch `k` uses the stream `(seed, k)`, so
/// ensembles are deterministic and independent of evaluation order.
pub fn gradient_ensemble(
    weights: &WeightSet,
    data: &[EncodedSample],
    activation: Activation,
    batch_size: usize,
    k: usize,
    seed: u64,
) -> Result<GradientEnsemble> {
    if k < 3 {
        return Err(domain(format!("ensemble needs K >= 3 minibatches, got {k}")));
    }
    if batch_size == 0 || batch_size > data.len() {
        return Err(domain(format!(
            "batch_size must be in 1..={}, got {batch_size}",
            data.len()
        )));
    }
    let results: Vec<Result<Vec<f64>>> = ordered_map_indices(k, |i| {
        let mut rng = Rng::from_indexed(seed, i as u64);
        let mut idx = rng.choose_indices(data.len(), batch_size);
        // only the index set matters; a canonical order keeps full-batch
        // ensembles bit-identical
        idx.sort_unstable();
        let batch: Vec<EncodedSample> = idx.into_iter().map(|j| data[j].clone()).collect();
        net::gradient(weights, &batch, activation)
    });
    let mut gradients = Vec::with_capacity(k);
    for r in results {
        gradients.push(r?);
    }
    Ok(GradientEnsemble { snapshot_epoch: 0, gradients, batch_size, seed })
}

/// Minimum pairwise cosine similarity over the ensemble; more negative
/// means more confusion between minibatch directions.
pub fn gradient_confusion(ens: &GradientEnsemble) -> Result<f64> {
    if ens.gradients.len() < 2 {
        return Err(domain("confusion needs at least 2 gradients"));
    }
    let norms: Vec<f64> = ens
        .gradients
        .iter()
        .map(|g| g.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let live: Vec<usize> = (0..ens.gradients.len()).filter(|&i| norms[i] > 0.0).collect();
    if live.len() < 2 {
        return Err(degenerate("fewer than two nonzero gradients"));
    }
    let mut min_cos = f64::INFINITY;
    for (a, &i) in live.iter().enumerate() {
        for &j in &live[a + 1..] {
            let dot: f64 = ens.gradients[i]
                .iter()
                .zip(&ens.gradients[j])
                .map(|(x, y)| x * y)
                .sum();
            min_cos = min_cos.min(dot / (norms[i] * norms[j]));
        }
    }
    Ok(min_cos.clamp(-1.0, 1.0))
}

/// Intrinsic-dimension and confusion profile along a training run's
/// snapshots. Degenerate ensembles at an epoch produce `None` entries for
/// the affected estimators rather than failing the profile.
pub fn tendril_profile(
    run: &TrainRun,
    data: &[EncodedSample],
    batch_size: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<TendrilPoint>> {
    if run.snapshots.len() < 2 {
        return Err(domain(format!(
            "tendril profile needs >= 2 snapshots, got {}",
            run.snapshots.len()
        )));
    }
    let mut profile = Vec::with_capacity(run.snapshots.len());
    for (epoch, weights) in &run.snapshots {
        let mut ens =
            gradient_ensemble(weights, data, run.activation, batch_size, k, mix(seed, *epoch as u64))?;
        ens.snapshot_epoch = *epoch;
        let loss = net::mean_loss(weights, data, run.activation)?;
        profile.push(TendrilPoint {
            epoch: *epoch,
            loss,
            id_two_nn: two_nn_id(&ens.gradients).ok().map(|e| e.value),
            id_participation: participation_ratio_id(&ens.gradients).ok().map(|e| e.value),
            confusion: gradient_confusion(&ens).ok(),
        });
    }
    Ok(profile)
}

/// Profile rows as CSV (`epoch,loss,id_two_nn,id_pr,confusion`);
/// degenerate entries are left empty.
pub fn tendril_csv(rows: &[TendrilPoint]) -> String {
    let cell = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut out = String::from("epoch,loss,id_two_nn,id_pr,confusion\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epoch,
            r.loss,
            cell(r.id_two_nn),
            cell(r.id_participation),
            cell(r.confusion)
        ));
    }
    out
}

/// Number of ordered weight pairs `(a, b)` where `a` lies on a forward
/// path strictly upstream of `b` (biases excluded), in closed form from
/// the layer widths.
///
/// For adjacent layers the path must pass through `a`'s output neuron;
/// for non-adjacent layers full connectivity links every pair.
pub fn influence_interactions(spec: &NetworkSpec) -> Result<u128> {
    spec.validate()?;
    let dims = spec.layer_dims();
    let widths: Vec<u128> = std::iter::once(dims[0].0 as u128)
        .chain(dims.iter().map(|&(_, fo)| fo as u128))
        .collect();
    let layers = dims.len();
    let weight_count = |l: usize| widths[l - 1] * widths[l]; // layer l in 1..=layers
    let mut interactions: u128 = 0;
    for a in 1..=layers {
        for b in (a + 1)..=layers {
            if b == a + 1 {
                interactions += widths[a - 1] * widths[a] * widths[b];
            } else {
                interactions += weight_count(a) * weight_count(b);
            }
        }
    }
    Ok(interactions)
}

/// `influence_interactions / param_count`: the depth-vs-width complexity
/// density proxy. Zero for depth-0 networks.
pub fn influence_ratio(spec: &NetworkSpec) -> Result<f64> {
    let interactions = influence_interactions(spec)?;
    Ok(interactions as f64 / net::param_count(spec) as f64)
}
