//! Minimal deterministic SVG rendering: line charts for curves and bar
//! charts for loss histograms. No drawing dependency; output bytes are a
//! pure function of the inputs so exported figures diff cleanly.

const WIDTH: f64 = 840.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// One named line on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Tick label with enough digits to distinguish neighboring ticks.
fn tick_label(v: f64, span: f64) -> String {
    if span == 0.0 {
        return format!("{v}");
    }
    let decimals = (2.0 - span.abs().log10()).ceil().clamp(0.0, 10.0) as usize;
    format!("{v:.decimals$}")
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::MIN_POSITIVE);
        MARGIN_LEFT + (v - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(f64::MIN_POSITIVE);
        HEIGHT - MARGIN_BOTTOM - (v - self.y_min) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn header(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" ",
            "font-family=\"sans-serif\" font-size=\"13\">\n",
            "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{cx}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{title}</text>\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        cx = WIDTH / 2.0,
        title = esc(title)
    )
}

fn axes(frame: &Frame, x_label: &str, y_label: &str) -> String {
    let mut out = String::new();
    let (x0, y0) = (MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM);
    let (x1, y1) = (WIDTH - MARGIN_RIGHT, MARGIN_TOP);
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(x0), fmt(y0), fmt(x1), fmt(y0)
    ));
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(x0), fmt(y0), fmt(x0), fmt(y1)
    ));
    let x_span = frame.x_max - frame.x_min;
    let y_span = frame.y_max - frame.y_min;
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = frame.x_min + t * x_span;
        let yv = frame.y_min + t * y_span;
        let xp = frame.x(xv);
        let yp = frame.y(yv);
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{y2}\" stroke=\"black\"/>\n",
            x = fmt(xp),
            y0 = fmt(y0),
            y2 = fmt(y0 + 5.0)
        ));
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"middle\">{v}</text>\n",
            x = fmt(xp),
            y = fmt(y0 + 20.0),
            v = tick_label(xv, x_span)
        ));
        out.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"black\"/>\n",
            x0 = fmt(x0 - 5.0),
            y = fmt(yp),
            x2 = fmt(x0)
        ));
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"end\">{v}</text>\n",
            x = fmt(x0 - 9.0),
            y = fmt(yp + 4.0),
            v = tick_label(yv, y_span)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{x}\" y=\"{y}\" text-anchor=\"middle\">{label}</text>\n",
        x = fmt((x0 + x1) / 2.0),
        y = fmt(HEIGHT - 14.0),
        label = esc(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{y}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {y})\">{label}</text>\n",
        y = fmt((y0 + y1) / 2.0),
        label = esc(y_label)
    ));
    out
}

/// Render named series as polylines with axes and a legend.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let points: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &points {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if points.is_empty() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if x_min == x_max {
        x_max += 1.0;
    }
    if y_min == y_max {
        y_max += 1.0;
    }
    // headroom above the data
    let pad = (y_max - y_min) * 0.05;
    let frame = Frame { x_min, x_max, y_min: (y_min - pad).min(y_min.min(0.0)), y_max: y_max + pad };

    let mut out = header(title);
    out.push_str(&axes(&frame, x_label, y_label));
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{},{}", fmt(frame.x(x)), fmt(frame.y(y))))
            .collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>\n",
            coords.join(" ")
        ));
        let ly = MARGIN_TOP + 16.0 * i as f64;
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
            x = fmt(WIDTH - MARGIN_RIGHT - 150.0),
            x2 = fmt(WIDTH - MARGIN_RIGHT - 126.0),
            y = fmt(ly)
        ));
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\">{name}</text>\n",
            x = fmt(WIDTH - MARGIN_RIGHT - 120.0),
            y = fmt(ly + 4.0),
            name = esc(&s.name)
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Render a binned histogram as bars; `marker` draws a dashed vertical
/// reference line (e.g. at ln 2). Trailing empty bins are not drawn.
pub fn histogram_chart(title: &str, edges: &[f64], counts: &[u64], marker: Option<f64>) -> String {
    assert_eq!(edges.len(), counts.len() + 1, "edges must bracket counts");
    let last_used = counts.iter().rposition(|&c| c > 0).map_or(counts.len(), |i| i + 1);
    let shown = &counts[..last_used.max(1)];
    let x_max = edges[shown.len()];
    let y_max = shown.iter().copied().max().unwrap_or(1).max(1) as f64;
    let frame = Frame { x_min: edges[0], x_max, y_min: 0.0, y_max: y_max * 1.05 };

    let mut out = header(title);
    out.push_str(&axes(&frame, "loss", "count"));
    for (b, &count) in shown.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let x = frame.x(edges[b]);
        let w = (frame.x(edges[b + 1]) - x).max(0.4);
        let y = frame.y(count as f64);
        let h = frame.y(0.0) - y;
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#1f77b4\"/>\n",
            fmt(x), fmt(y), fmt(w), fmt(h)
        ));
    }
    if let Some(m) = marker {
        if m >= frame.x_min && m <= frame.x_max {
            let x = fmt(frame.x(m));
            out.push_str(&format!(
                "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#d62728\" stroke-dasharray=\"4 3\"/>\n",
                fmt(frame.y(frame.y_max)),
                fmt(frame.y(0.0))
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_chart_is_deterministic_and_complete() {
        let series = [Series {
            name: "volume".into(),
            points: (1..=20).map(|n| (n as f64, 1.0 / n as f64)).collect(),
        }];
        let a = line_chart("curve", "n", "v", &series);
        let b = line_chart("curve", "n", "v", &series);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("<polyline").count(), 1);
    }

    #[test]
    fn histogram_skips_empty_tail_and_marks_reference() {
        let edges: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
        let mut counts = vec![0u64; 100];
        counts[10] = 5;
        counts[69] = 50;
        let svg = histogram_chart("hist", &edges, &counts, Some(std::f64::consts::LN_2));
        assert_eq!(svg.matches("<rect").count(), 3); // background + 2 bars
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn labels_are_escaped() {
        let svg = line_chart("a < b & c", "x", "y", &[]);
        assert!(svg.contains("a &lt; b &amp; c"));
    }
}
