//! Deterministic SVG rendering for histograms and time series.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{AnalyticsError, Histogram, TimeSeries};

/// Replaces zero counts on a logarithmic axis.
pub const LOG_FLOOR: f64 = 0.5;

pub const DEFAULT_PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;

#[derive(Debug, Clone)]
pub struct ChartOptions {
    pub log_y: bool,
    pub title: String,
    pub palette: Vec<String>,
}

impl Default for ChartOptions {
    fn default() -> Self {
        ChartOptions {
            log_y: false,
            title: String::new(),
            palette: DEFAULT_PALETTE.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    Bars,
    Steps,
}

/// Something that can be drawn as per-class values over ordered slots.
pub trait Chartable {
    fn kind(&self) -> ChartKind;
    /// Slot boundaries on the x axis; one more than the number of values.
    fn x_edges(&self) -> Vec<f64>;
    fn classes(&self) -> &BTreeMap<String, Vec<u64>>;
    fn x_label(&self) -> String;
    fn y_label(&self) -> String;
}

impl Chartable for Histogram {
    fn kind(&self) -> ChartKind {
        ChartKind::Bars
    }
    fn x_edges(&self) -> Vec<f64> {
        self.edges.clone()
    }
    fn classes(&self) -> &BTreeMap<String, Vec<u64>> {
        &self.counts
    }
    fn x_label(&self) -> String {
        self.quantity.clone()
    }
    fn y_label(&self) -> String {
        "flows".to_string()
    }
}

impl Chartable for TimeSeries {
    fn kind(&self) -> ChartKind {
        ChartKind::Steps
    }
    fn x_edges(&self) -> Vec<f64> {
        // minutes relative to the first interval
        (0..=self.len()).map(|i| (i as u64 * self.interval_ms) as f64 / 60_000.0).collect()
    }
    fn classes(&self) -> &BTreeMap<String, Vec<u64>> {
        &self.values
    }
    fn x_label(&self) -> String {
        format!("minutes since {} ms", self.t0_ms)
    }
    fn y_label(&self) -> String {
        self.quantity()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct YScale {
    log: bool,
    lo: f64,
    hi: f64,
}

impl YScale {
    fn new(max: u64, log: bool) -> Self {
        if log {
            let hi = (max.max(1) as f64).log10().ceil().max(0.0);
            YScale { log, lo: LOG_FLOOR.log10(), hi: hi.max(LOG_FLOOR.log10() + 1.0) }
        } else {
            YScale { log, lo: 0.0, hi: max.max(1) as f64 }
        }
    }

    /// Transformed value in axis units; zero is floored on a log axis.
    fn value(&self, v: u64) -> f64 {
        if self.log {
            (v as f64).max(LOG_FLOOR).log10()
        } else {
            v as f64
        }
    }

    fn pixel(&self, v: u64) -> f64 {
        let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
        HEIGHT - MARGIN_B - (self.value(v) - self.lo) / (self.hi - self.lo) * plot_h
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
        let to_px = |u: f64| HEIGHT - MARGIN_B - (u - self.lo) / (self.hi - self.lo) * plot_h;
        if self.log {
            let first = self.lo.ceil() as i32;
            (first..=self.hi as i32).map(|e| (to_px(e as f64), format!("1e{e}"))).collect()
        } else {
            (0..=4)
                .map(|i| {
                    let u = self.hi * i as f64 / 4.0;
                    (to_px(u), format!("{u:.1}"))
                })
                .collect()
        }
    }
}

/// Render a chart as a standalone SVG document. Output depends only on the
/// data and options, so repeated calls are byte-identical.
pub fn render_chart(data: &dyn Chartable, opts: &ChartOptions) -> Result<String, AnalyticsError> {
    let classes = data.classes();
    let edges = data.x_edges();
    let slots = edges.len().saturating_sub(1);
    if classes.is_empty() || slots == 0 {
        return Err(AnalyticsError::EmptyInput);
    }
    let max = classes.values().flatten().copied().max().unwrap_or(0);
    let y = YScale::new(max, opts.log_y);
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let slot_w = plot_w / slots as f64;
    let baseline = HEIGHT - MARGIN_B;
    let color = |i: usize| -> &str {
        if opts.palette.is_empty() {
            DEFAULT_PALETTE[i % DEFAULT_PALETTE.len()]
        } else {
            &opts.palette[i % opts.palette.len()]
        }
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{HEIGHT:.0}" viewBox="0 0 {WIDTH:.0} {HEIGHT:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if !opts.title.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
            MARGIN_L + plot_w / 2.0,
            escape(&opts.title)
        );
    }

    // axes
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{MARGIN_L:.2}" y1="{baseline:.2}" x2="{:.2}" y2="{baseline:.2}" stroke="black"/>"#,
        MARGIN_L + plot_w
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{MARGIN_L:.2}" y1="{MARGIN_T:.2}" x2="{MARGIN_L:.2}" y2="{baseline:.2}" stroke="black"/>"#
    );
    for (py, label) in y.ticks() {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, MARGIN_L - 6.0, py + 4.0);
    }
    let x_tick_every = slots.div_ceil(10).max(1);
    for i in (0..=slots).step_by(x_tick_every) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_L + i as f64 * slot_w,
            baseline + 16.0,
            fmt_tick(edges[i])
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 16.0,
        escape(&data.x_label())
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}{}</text>"#,
        MARGIN_T + (baseline - MARGIN_T) / 2.0,
        MARGIN_T + (baseline - MARGIN_T) / 2.0,
        escape(&data.y_label()),
        if opts.log_y { " (log)" } else { "" }
    );

    match data.kind() {
        ChartKind::Bars => {
            let bar_w = slot_w / classes.len() as f64;
            for (ci, (class, counts)) in classes.iter().enumerate() {
                let _ = writeln!(s, r#"<g class="series" data-class="{}" fill="{}">"#, escape(class), color(ci));
                for (b, &c) in counts.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    let top = y.pixel(c);
                    let _ = writeln!(
                        s,
                        r#"<rect x="{:.2}" y="{top:.2}" width="{bar_w:.2}" height="{:.2}"/>"#,
                        MARGIN_L + b as f64 * slot_w + ci as f64 * bar_w,
                        (baseline - top).max(0.0)
                    );
                }
                s.push_str("</g>\n");
            }
        }
        ChartKind::Steps => {
            for (ci, (class, values)) in classes.iter().enumerate() {
                let mut pts = String::new();
                for (i, &v) in values.iter().enumerate() {
                    let py = y.pixel(v);
                    let x0 = MARGIN_L + i as f64 * slot_w;
                    let _ = write!(pts, "{x0:.2},{py:.2} {:.2},{py:.2} ", x0 + slot_w);
                }
                let _ = writeln!(
                    s,
                    r#"<polyline class="series" data-class="{}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                    escape(class),
                    color(ci),
                    pts.trim_end()
                );
            }
        }
    }

    // legend
    let lx = WIDTH - MARGIN_R + 12.0;
    for (ci, class) in classes.keys().enumerate() {
        let ly = MARGIN_T + 18.0 * ci as f64;
        let _ = writeln!(
            s,
            r#"<g class="legend-entry"><rect x="{lx:.2}" y="{ly:.2}" width="12" height="12" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            color(ci),
            lx + 18.0,
            ly + 10.0,
            escape(class)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn fmt_tick(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.2}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{flow_length_histogram, flows_per_interval};
    use crate::record::{FlowRecord, Label};

    fn flow(start: u64, dur: u64, class: &str) -> FlowRecord {
        let mut r = FlowRecord::zeroed();
        r.flow_start_milliseconds = start;
        r.flow_end_milliseconds = start + dur;
        r.flow_duration_milliseconds = dur;
        r.label = Some(Label::class(class));
        r
    }

    fn sample() -> Vec<FlowRecord> {
        vec![flow(0, 10, "Benign"), flow(70_000, 500, "DoS"), flow(130_000, 90, "Benign")]
    }

    #[test]
    fn rendering_is_deterministic() {
        let h = flow_length_histogram(&sample(), 10).unwrap();
        let opts = ChartOptions { title: "lengths".into(), ..Default::default() };
        assert_eq!(render_chart(&h, &opts).unwrap(), render_chart(&h, &opts).unwrap());
    }

    #[test]
    fn one_polyline_and_legend_entry_per_class() {
        let ts = flows_per_interval(&sample(), 60_000).unwrap();
        let svg = render_chart(&ts, &ChartOptions::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("legend-entry").count(), 2);
        assert!(svg.find(">Benign<").unwrap() < svg.find(">DoS<").unwrap());
    }

    #[test]
    fn log_axis_floors_zero() {
        let y = YScale::new(100, true);
        assert_eq!(y.value(0), LOG_FLOOR.log10());
        assert!(y.pixel(0).is_finite());
        let ts = flows_per_interval(&sample(), 60_000).unwrap();
        let svg = render_chart(&ts, &ChartOptions { log_y: true, ..Default::default() }).unwrap();
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn title_is_escaped() {
        let h = flow_length_histogram(&sample(), 4).unwrap();
        let svg = render_chart(&h, &ChartOptions { title: "a<b".into(), ..Default::default() }).unwrap();
        assert!(svg.contains("a&lt;b"));
    }
}
