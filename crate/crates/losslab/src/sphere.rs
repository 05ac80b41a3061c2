//! Geometry of n-balls: closed-form volumes and surfaces (real-valued
//! dimension), peak dimensions, Monte-Carlo expected pairwise distances,
//! and superlevel-set volumes of isotropic Gaussians.
//!
//! Volumes are always evaluated in log space through [`special::ln_gamma`],
//! so dimensions far past the f64 overflow point of the gamma function
//! (n ~ 340) stay finite.

use crate::error::{domain, Result};
use crate::parallel::chunked_map;
use crate::rng::Rng;
use crate::special;

use std::f64::consts::PI;

/// Dimension, radius, volume and surface of an n-ball.
///
/// The surface satisfies `surface = n * volume / r` exactly (differential
/// identity of the volume in r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereMetrics {
    pub dimension: f64,
    pub radius: f64,
    pub volume: f64,
    pub surface: f64,
}

/// Query for the volume of the region where an isotropic Gaussian density
/// exceeds `density_threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportVolumeQuery {
    pub dimension: u32,
    pub sigma: f64,
    pub density_threshold: f64,
}

/// Monte-Carlo mean distance between two uniform draws from an n-ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_trials: u64,
}

fn check_dim_radius(n: f64, r: f64) -> Result<()> {
    if !n.is_finite() || n <= 0.0 {
        return Err(domain(format!("dimension must be finite and positive, got {n}")));
    }
    if !r.is_finite() || r <= 0.0 {
        return Err(domain(format!("radius must be finite and positive, got {r}")));
    }
    Ok(())
}

/// Log of the n-ball volume: (n/2) ln pi + n ln r - ln Gamma(n/2 + 1).
fn ln_ball_volume(n: f64, r: f64) -> f64 {
    0.5 * n * PI.ln() + n * r.ln() - special::ln_gamma(0.5 * n + 1.0)
}

/// Volume of the n-ball of radius `r`, `pi^(n/2) r^n / Gamma(n/2 + 1)`.
///
/// `n` may be any positive real, not just an integer.
pub fn ball_volume(n: f64, r: f64) -> Result<f64> {
    check_dim_radius(n, r)?;
    Ok(ln_ball_volume(n, r).exp())
}

/// Surface of the n-sphere bounding the n-ball: `n * volume / r`.
pub fn sphere_surface(n: f64, r: f64) -> Result<f64> {
    Ok(n * ball_volume(n, r)? / r)
}

/// Volume and surface together.
pub fn metrics(n: f64, r: f64) -> Result<SphereMetrics> {
    let volume = ball_volume(n, r)?;
    Ok(SphereMetrics { dimension: n, radius: r, volume, surface: n * volume / r })
}

/// Real-valued dimension maximizing the ball volume at radius `r`, found
/// by golden-section search on n in [0.1, 200] to absolute tolerance 1e-8.
///
/// The volume is unimodal in n for fixed r (its log-derivative
/// `ln(pi r^2)/2 - psi(n/2+1)/2` is strictly decreasing), so the search
/// bracket never traps a secondary extremum.
pub fn volume_peak_dimension(r: f64) -> Result<f64> {
    check_dim_radius(1.0, r)?;
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (0.1_f64, 200.0_f64);
    let f = |n: f64| ln_ball_volume(n, r);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > 1e-8 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    Ok(0.5 * (a + b))
}

/// Integer dimension in 1..=200 with the largest ball volume at radius `r`.
pub fn volume_argmax_integer(r: f64) -> Result<u32> {
    check_dim_radius(1.0, r)?;
    Ok(argmax_integer(|n| ln_ball_volume(n, r)))
}

/// Integer dimension in 1..=200 with the largest sphere surface at radius `r`.
pub fn surface_argmax_integer(r: f64) -> Result<u32> {
    check_dim_radius(1.0, r)?;
    Ok(argmax_integer(|n| (n).ln() + ln_ball_volume(n, r) - r.ln()))
}

fn argmax_integer(ln_f: impl Fn(f64) -> f64) -> u32 {
    let mut best = (1u32, ln_f(1.0));
    for n in 2..=200u32 {
        let v = ln_f(n as f64);
        if v > best.1 {
            best = (n, v);
        }
    }
    best.0
}

/// One uniform draw from the n-ball: Gaussian direction scaled by
/// `r * U^(1/n)`.
fn sample_ball_point(n: u32, r: f64, rng: &mut Rng, out: &mut [f64]) {
    let mut norm_sq = 0.0;
    for x in out.iter_mut() {
        *x = rng.normal();
        norm_sq += *x * *x;
    }
    let norm = norm_sq.sqrt();
    // A zero Gaussian vector has probability zero; fall back to an axis.
    let scale = if norm > 0.0 {
        r * rng.uniform().powf(1.0 / n as f64) / norm
    } else {
        out[0] = 1.0;
        r * rng.uniform().powf(1.0 / n as f64)
    };
    for x in out.iter_mut() {
        *x *= scale;
    }
}

/// Monte-Carlo estimate of the expected Euclidean distance between two
/// points drawn uniformly from the n-ball of radius `r`.
///
/// Trial `i` uses the stream derived from `(seed, i)` only, and partial
/// moments are folded in fixed chunk order, so the result is
/// bit-identical for any worker count.
pub fn expected_pairwise_distance(
    n: u32,
    r: f64,
    n_trials: u64,
    seed: u64,
) -> Result<DistanceEstimate> {
    if n == 0 {
        return Err(domain("dimension must be >= 1"));
    }
    check_dim_radius(n as f64, r)?;
    if n_trials < 2 {
        return Err(domain(format!("need at least 2 trials, got {n_trials}")));
    }
    let dim = n as usize;
    let partials = chunked_map(n_trials, |range| {
        let mut p = vec![0.0; dim];
        let mut q = vec![0.0; dim];
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for trial in range {
            let mut rng = Rng::from_indexed(seed, trial);
            sample_ball_point(n, r, &mut rng, &mut p);
            sample_ball_point(n, r, &mut rng, &mut q);
            let d2: f64 = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
            let d = d2.sqrt();
            sum += d;
            sumsq += d * d;
        }
        (sum, sumsq)
    });
    let (sum, sumsq) = partials
        .into_iter()
        .fold((0.0, 0.0), |(s, ss), (a, b)| (s + a, ss + b));
    let t = n_trials as f64;
    let mean = sum / t;
    let sample_var = ((sumsq - sum * sum / t) / (t - 1.0)).max(0.0);
    Ok(DistanceEstimate { mean, stderr: (sample_var / t).sqrt(), n_trials })
}

/// Volume of the superlevel set `{x : density(x) > t}` of an isotropic
/// d-dimensional Gaussian with standard deviation `sigma`.
///
/// The set is the ball of radius `R = sigma * sqrt(2 ln(peak/t))` where
/// `peak = (2 pi sigma^2)^(-d/2)`; the volume is zero once `t` reaches the
/// peak density.
pub fn gaussian_support_volume(q: &SupportVolumeQuery) -> Result<f64> {
    if q.dimension == 0 {
        return Err(domain("dimension must be >= 1"));
    }
    if !q.sigma.is_finite() || q.sigma <= 0.0 {
        return Err(domain(format!("sigma must be finite and positive, got {}", q.sigma)));
    }
    if !q.density_threshold.is_finite() || q.density_threshold <= 0.0 {
        return Err(domain(format!(
            "density threshold must be finite and positive, got {}",
            q.density_threshold
        )));
    }
    let d = q.dimension as f64;
    let ln_peak = -0.5 * d * (2.0 * PI * q.sigma * q.sigma).ln();
    let ln_t = q.density_threshold.ln();
    if ln_t >= ln_peak {
        return Ok(0.0);
    }
    let radius = q.sigma * (2.0 * (ln_peak - ln_t)).sqrt();
    ball_volume(d, radius)
}

/// Rows of the (n, volume, surface) curve for n = step, 2*step, ... up to
/// `max_dim`.
pub fn curve_table(r: f64, max_dim: f64, step: f64) -> Result<Vec<SphereMetrics>> {
    check_dim_radius(max_dim, r)?;
    if !step.is_finite() || step <= 0.0 {
        return Err(domain(format!("step must be finite and positive, got {step}")));
    }
    let count = (max_dim / step).floor() as usize;
    let mut rows = Vec::with_capacity(count);
    for i in 1..=count {
        rows.push(metrics(i as f64 * step, r)?);
    }
    Ok(rows)
}

/// Curve rows rendered as CSV with a one-line header.
pub fn curve_csv(rows: &[SphereMetrics]) -> String {
    let mut out = String::from("n,volume,surface\n");
    for m in rows {
        out.push_str(&format!("{},{},{}\n", m.dimension, m.volume, m.surface));
    }
    out
}
