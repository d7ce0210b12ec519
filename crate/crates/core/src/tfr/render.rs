use std::fmt::Write as _;

use super::SpectrogramMatrix;

/// Eight-stop dark-to-bright gradient, low dB first.
const GRADIENT: [(u8, u8, u8); 8] = [
    (0, 0, 4),
    (40, 11, 84),
    (101, 21, 110),
    (159, 42, 99),
    (212, 72, 66),
    (245, 125, 21),
    (250, 193, 39),
    (252, 255, 164),
];

const CELL_W: f64 = 8.0;
const CELL_H: f64 = 6.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;
const MARGIN_R: f64 = 20.0;

fn color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let pos = t * (GRADIENT.len() - 1) as f64;
    let i = (pos.floor() as usize).min(GRADIENT.len() - 2);
    let f = pos - i as f64;
    let lerp = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * f).round() as u8;
    let (a, b) = (GRADIENT[i], GRADIENT[i + 1]);
    format!("#{:02x}{:02x}{:02x}", lerp(a.0, b.0), lerp(a.1, b.1), lerp(a.2, b.2))
}

/// Heatmap of the dB layer: frames left to right, frequency increasing
/// upwards. Identical matrices give identical bytes.
pub fn render_spectrogram(m: &SpectrogramMatrix, title: &str) -> String {
    let bins = m.bins();
    let plot_w = m.frames as f64 * CELL_W;
    let plot_h = bins as f64 * CELL_H;
    let width = MARGIN_L + plot_w + MARGIN_R;
    let height = MARGIN_T + plot_h + MARGIN_B;
    let lo = m.db.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let hi = m.db.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11" shape-rendering="crispEdges">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if !title.is_empty() {
        let t = title.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(s, r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="14">{t}</text>"#, width / 2.0);
    }
    for (fi, row) in m.db.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<rect data-frame="{fi}" data-bin="{b}" x="{:.2}" y="{:.2}" width="{CELL_W:.0}" height="{CELL_H:.0}" fill="{}"/>"#,
                MARGIN_L + fi as f64 * CELL_W,
                MARGIN_T + (bins - 1 - b) as f64 * CELL_H,
                color((v - lo) / span)
            );
        }
    }
    let x_every = m.frames.div_ceil(8).max(1);
    for fi in (0..m.frames).step_by(x_every) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.1}</text>"#,
            MARGIN_L + (fi as f64 + 0.5) * CELL_W,
            MARGIN_T + plot_h + 14.0,
            m.frame_time_s(fi)
        );
    }
    let y_every = bins.div_ceil(8).max(1);
    for b in (0..bins).step_by(y_every) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.4}</text>"#,
            MARGIN_L - 4.0,
            MARGIN_T + (bins - b) as f64 * CELL_H - 1.0,
            m.bin_hz(b)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time (s)</text>"#,
        MARGIN_L + plot_w / 2.0,
        height - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{0:.2}" text-anchor="middle" transform="rotate(-90 14 {0:.2})">frequency (Hz)</text>"#,
        MARGIN_T + plot_h / 2.0
    );
    s.push_str("</svg>\n");
    s
}
