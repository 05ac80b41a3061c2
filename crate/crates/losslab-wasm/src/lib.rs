//! wasm-bindgen bindings for the browser demo: three interactive views
//! over the core crate, each returning a self-contained SVG string the
//! page injects directly.
//!
//! Everything runs single-threaded in the browser; the deterministic
//! per-trial seeding means a given control setting always renders the
//! identical figure.

use losslab::data;
use losslab::hist::{self, BinPolicy, HistogramConfig};
use losslab::net::{Activation, InitScheme, NetworkSpec};
use losslab::plot::{self, Series};
use losslab::sphere;

use wasm_bindgen::prelude::*;

/// Browser sampling budget; enough for crisp histograms, small enough to
/// stay interactive.
const MAX_TRIALS: u64 = 200_000;

fn err_js(e: losslab::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

pub fn sphere_curve_svg_inner(radius: f64, max_dim: f64) -> losslab::Result<String> {
    let rows = sphere::curve_table(radius, max_dim, 0.25)?;
    let volume = Series {
        name: "volume".into(),
        points: rows.iter().map(|m| (m.dimension, m.volume)).collect(),
    };
    let surface = Series {
        name: "surface".into(),
        points: rows.iter().map(|m| (m.dimension, m.surface)).collect(),
    };
    let peak = sphere::volume_peak_dimension(radius)?;
    Ok(plot::line_chart(
        &format!("n-ball volume and surface, r = {radius} (volume peak at n = {peak:.3})"),
        "dimension n",
        "value",
        &[volume, surface],
    ))
}

/// Volume/surface-vs-dimension curves at the given radius.
#[wasm_bindgen]
pub fn sphere_curve_svg(radius: f64, max_dim: f64) -> Result<String, JsValue> {
    sphere_curve_svg_inner(radius, max_dim).map_err(err_js)
}

pub fn distance_curve_svg_inner(radius: f64, trials: u32, seed: u32) -> losslab::Result<String> {
    let trials = (trials as u64).clamp(100, MAX_TRIALS);
    let dims = [1u32, 2, 4, 8, 16, 32, 64, 128];
    let mut points = Vec::with_capacity(dims.len());
    for &n in &dims {
        let est = sphere::expected_pairwise_distance(n, radius, trials, seed as u64)?;
        points.push((n as f64, est.mean));
    }
    Ok(plot::line_chart(
        &format!("mean distance between two uniform points, r = {radius} ({trials} trials/dim)"),
        "dimension n",
        "mean pairwise distance",
        &[Series { name: "Monte-Carlo mean".into(), points }],
    ))
}

/// The distance paradox: volumes collapse yet the expected pairwise
/// distance keeps growing with dimension.
#[wasm_bindgen]
pub fn distance_curve_svg(radius: f64, trials: u32, seed: u32) -> Result<String, JsValue> {
    distance_curve_svg_inner(radius, trials, seed).map_err(err_js)
}

#[allow(clippy::too_many_arguments)]
fn demo_config(
    width: u32,
    depth: u32,
    activation: &str,
    init: &str,
    scale: f64,
    samples: u32,
    trials: u32,
    seed: u32,
) -> losslab::Result<(HistogramConfig, data::Dataset)> {
    let dataset = data::bundled();
    let activation = match activation {
        "tanh" => Activation::Tanh,
        _ => Activation::Relu,
    };
    let init = match init {
        "he_uniform" => InitScheme::HeUniform,
        "xavier_normal" => InitScheme::XavierNormal,
        "plain_normal" => InitScheme::PlainNormal { scale },
        "plain_uniform" => InitScheme::PlainUniform { scale },
        _ => InitScheme::HeNormal,
    };
    let spec = NetworkSpec {
        input_dim: dataset.input_dim,
        hidden_width: width.max(1) as usize,
        hidden_depth: depth as usize,
        activation,
        init,
    };
    let config = HistogramConfig {
        spec,
        sample_indices: (0..samples.clamp(1, 50) as usize).collect(),
        n_trials: (trials as u64).clamp(100, MAX_TRIALS),
        bin_policy: BinPolicy::Fixed { width: 0.01, max_loss: 20.0 },
        master_seed: seed as u64,
    };
    Ok((config, dataset))
}

#[allow(clippy::too_many_arguments)]
pub fn loss_histogram_svg_inner(
    width: u32,
    depth: u32,
    activation: &str,
    init: &str,
    scale: f64,
    samples: u32,
    trials: u32,
    seed: u32,
) -> losslab::Result<String> {
    let (config, dataset) = demo_config(width, depth, activation, init, scale, samples, trials, seed)?;
    let histogram = hist::sample_histogram(&config, &dataset.samples)?;
    Ok(plot::histogram_chart(
        &format!(
            "loss over {} random inits ({activation}, width {width}, depth {depth}, {} sample{})",
            config.n_trials,
            config.sample_indices.len(),
            if config.sample_indices.len() == 1 { "" } else { "s" },
        ),
        &histogram.bin_edges,
        &histogram.counts,
        Some(std::f64::consts::LN_2),
    ))
}

/// Monte-Carlo loss histogram over random initializations of a tiny MLP
/// evaluated on the first `samples` bundled rows. The dashed line marks
/// ln 2, the loss of a 0.5 sigmoid output.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn loss_histogram_svg(
    width: u32,
    depth: u32,
    activation: &str,
    init: &str,
    scale: f64,
    samples: u32,
    trials: u32,
    seed: u32,
) -> Result<String, JsValue> {
    loss_histogram_svg_inner(width, depth, activation, init, scale, samples, trials, seed)
        .map_err(err_js)
}

#[allow(clippy::too_many_arguments)]
pub fn loss_histogram_report_inner(
    width: u32,
    depth: u32,
    activation: &str,
    init: &str,
    scale: f64,
    samples: u32,
    trials: u32,
    seed: u32,
) -> losslab::Result<String> {
    let (config, dataset) = demo_config(width, depth, activation, init, scale, samples, trials, seed)?;
    let histogram = hist::sample_histogram(&config, &dataset.samples)?;
    let report = hist::detect_modes(&histogram, 0.05)?;
    let mut out = String::new();
    out.push_str(&format!("modes detected     : {}\n", report.modes.len()));
    out.push_str(&format!("central mode loss  : {:.4}\n", report.central_mode_loss));
    out.push_str(&format!("central reference  : {:.4} (ln 2)\n", report.central_reference));
    out.push_str(&format!("zero-mode mass     : {:.4}\n", report.zero_mode_mass));
    out.push_str(&format!("left-tail mass     : {:.4}\n", report.left_tail_mass));
    out.push_str(&format!("sampled min loss   : {:.6}\n", histogram.min_loss));
    out.push_str(&format!("sampled max loss   : {:.4}\n", histogram.max_loss));
    Ok(out)
}

/// Text report for the same histogram: detected modes and mass metrics.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn loss_histogram_report(
    width: u32,
    depth: u32,
    activation: &str,
    init: &str,
    scale: f64,
    samples: u32,
    trials: u32,
    seed: u32,
) -> Result<String, JsValue> {
    loss_histogram_report_inner(width, depth, activation, init, scale, samples, trials, seed)
        .map_err(err_js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_render_and_are_deterministic() {
        let a = sphere_curve_svg_inner(1.0, 25.0).unwrap();
        let b = sphere_curve_svg_inner(1.0, 25.0).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("volume peak at n = 5.257"));

        let d = distance_curve_svg_inner(1.0, 2_000, 9).unwrap();
        assert!(d.starts_with("<svg"));
    }

    #[test]
    fn histogram_view_renders() {
        let svg = loss_histogram_svg_inner(3, 3, "relu", "he_normal", 1.0, 1, 2_000, 7).unwrap();
        assert!(svg.starts_with("<svg"));
        let report =
            loss_histogram_report_inner(3, 3, "relu", "he_normal", 1.0, 1, 2_000, 7).unwrap();
        assert!(report.contains("zero-mode mass"));
    }

    #[test]
    fn trial_budget_is_clamped() {
        // a huge request is clamped rather than hanging the page
        let svg =
            loss_histogram_svg_inner(2, 1, "relu", "he_normal", 1.0, 1, u32::MAX, 3).unwrap();
        assert!(svg.contains(&format!("loss over {MAX_TRIALS}")));
    }
}
