//! Subcommand implementations. Every command writes a `<command>.manifest`
//! next to its outputs listing the resolved parameters and result counts.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use flowlens_core::analytics::{
    flow_length_histogram, flows_per_interval, iat_histogram, numeric_series, render_chart, unique_count_series,
    AnalyticsError, ChartOptions, Chartable,
};
use flowlens_core::dataset::{read_flows, read_ground_truth, write_flows};
use flowlens_core::label::{label_flows, summarize};
use flowlens_core::pcap::{open_capture, Next};
use flowlens_core::record::{sort_records, FlowRecord};
use flowlens_core::tfr::{
    build_signal, dominant_bin, extract_recurrent_segment, render_spectrogram, stft, SignalMetric, TfrError,
};
use flowlens_core::FlowCache;

use crate::settings::{is_capture, Settings};
use crate::{AnalysisKind, Failure};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConvertSummary {
    pub captures: Vec<PathBuf>,
    pub packets_read: u64,
    pub packets_skipped: u64,
    pub flows: usize,
    pub peak_resident: usize,
    pub written: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelRun {
    pub malicious: u64,
    pub total: u64,
    pub written: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpectrogramRun {
    /// (class, dominant non-DC bin, its frequency in Hz)
    pub dominant: Vec<(String, Option<usize>, f64)>,
    pub written: Vec<PathBuf>,
}

fn empty(e: impl std::error::Error + Send + Sync + 'static) -> Failure {
    Failure::Empty(e.into())
}

fn analytics_failure(e: AnalyticsError) -> Failure {
    match e {
        AnalyticsError::EmptyInput => empty(e),
        other => Failure::Input(other.into()),
    }
}

fn tfr_failure(e: TfrError) -> Failure {
    match e {
        TfrError::BadWindow(_) => Failure::Input(e.into()),
        other => empty(other),
    }
}

fn write_text(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<(), Failure> {
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(())
}

fn write_manifest(
    out: &Path,
    command: &str,
    inputs: &[PathBuf],
    results: &[String],
    s: &Settings,
    written: &mut Vec<PathBuf>,
) -> Result<(), Failure> {
    let mut text = format!("command={command}\n");
    for (i, p) in inputs.iter().enumerate() {
        text.push_str(&format!("input.{i}={}\n", p.display()));
    }
    for line in s.manifest_lines() {
        text.push_str(&line);
        text.push('\n');
    }
    for r in results {
        text.push_str(r);
        text.push('\n');
    }
    write_text(out.join(format!("{command}.manifest")), &text, written)
}

fn ensure_dir(out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
    Ok(())
}

/// Expand directories to the capture files they contain and sort every path.
pub fn collect_captures(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut found = BTreeSet::new();
    for p in inputs {
        if p.is_dir() {
            for entry in fs::read_dir(p).with_context(|| format!("listing {}", p.display()))? {
                let path = entry?.path();
                if path.is_file() && is_capture(&path) {
                    found.insert(path);
                }
            }
        } else if p.is_file() {
            found.insert(p.clone());
        } else {
            return Err(Failure::Input(anyhow!("input {} does not exist", p.display())));
        }
    }
    if found.is_empty() {
        return Err(Failure::Input(anyhow!("no input captures")));
    }
    Ok(found.into_iter().collect())
}

/// Feed one capture through the cache, appending exported flows.
fn meter_capture(path: &Path, cache: &mut FlowCache, flows: &mut Vec<FlowRecord>) -> Result<(u64, u64), Failure> {
    let ctx = || format!("reading {}", path.display());
    let mut reader = open_capture(path).with_context(ctx)?;
    loop {
        match reader.next_packet().with_context(ctx)? {
            Next::Packet(p) => flows.extend(cache.observe(&p)),
            Next::Skipped(_) => {}
            Next::End => break,
        }
    }
    Ok((reader.packets_read(), reader.packets_skipped()))
}

fn write_flow_csv(
    path: PathBuf,
    flows: &[FlowRecord],
    labels: bool,
    written: &mut Vec<PathBuf>,
) -> Result<(), Failure> {
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_flows(flows, BufWriter::new(file), labels).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(())
}

/// pcap(s) → `flows.csv` (or one `<stem>.flows.csv` per capture with `separate`).
pub fn convert(inputs: &[PathBuf], out: &Path, s: &Settings) -> Result<ConvertSummary, Failure> {
    let captures = collect_captures(inputs)?;
    ensure_dir(out)?;
    let mut sum = ConvertSummary { captures: captures.clone(), ..Default::default() };
    let mut results = Vec::new();

    let finish = |mut flows: Vec<FlowRecord>, cache: &FlowCache, name: String, sum: &mut ConvertSummary| {
        sort_records(&mut flows);
        sum.flows += flows.len();
        sum.peak_resident = sum.peak_resident.max(cache.stats().peak_resident);
        write_flow_csv(out.join(name), &flows, false, &mut sum.written)
    };

    if s.separate {
        for (i, path) in captures.iter().enumerate() {
            let mut cache = FlowCache::new(s.meter);
            let mut flows = Vec::new();
            let (read, skipped) = meter_capture(path, &mut cache, &mut flows)?;
            flows.extend(cache.flush());
            sum.packets_read += read;
            sum.packets_skipped += skipped;
            results.push(format!("capture.{i}.packets={read}"));
            results.push(format!("capture.{i}.skipped={skipped}"));
            results.push(format!("capture.{i}.flows={}", flows.len()));
            let stem = path.file_stem().map_or_else(|| format!("capture{i}"), |s| s.to_string_lossy().into_owned());
            finish(flows, &cache, format!("{stem}.flows.csv"), &mut sum)?;
        }
    } else {
        let mut cache = FlowCache::new(s.meter);
        let mut flows = Vec::new();
        for (i, path) in captures.iter().enumerate() {
            let (read, skipped) = meter_capture(path, &mut cache, &mut flows)?;
            sum.packets_read += read;
            sum.packets_skipped += skipped;
            results.push(format!("capture.{i}.packets={read}"));
            results.push(format!("capture.{i}.skipped={skipped}"));
        }
        flows.extend(cache.flush());
        finish(flows, &cache, "flows.csv".to_string(), &mut sum)?;
    }

    results.push(format!("packets_read={}", sum.packets_read));
    results.push(format!("packets_skipped={}", sum.packets_skipped));
    results.push(format!("flows={}", sum.flows));
    results.push(format!("peak_resident_flows={}", sum.peak_resident));
    write_manifest(out, "convert", &captures, &results, s, &mut sum.written)?;
    Ok(sum)
}

/// Read and concatenate flow CSVs.
pub fn load_flows(inputs: &[PathBuf]) -> Result<Vec<FlowRecord>, Failure> {
    let mut all = Vec::new();
    for p in inputs {
        let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        all.extend(read_flows(std::io::BufReader::new(file)).with_context(|| format!("reading {}", p.display()))?);
    }
    Ok(all)
}

/// Flow CSV + ground truth → `labeled.csv` and `label_summary.txt`.
pub fn label(inputs: &[PathBuf], out: &Path, s: &Settings) -> Result<LabelRun, Failure> {
    let gt = s.gt.as_ref().ok_or_else(|| Failure::Input(anyhow!("missing --gt ground-truth file")))?;
    let flows = load_flows(inputs)?;
    let gt_file = File::open(gt).with_context(|| format!("opening {}", gt.display()))?;
    let events =
        read_ground_truth(std::io::BufReader::new(gt_file)).with_context(|| format!("reading {}", gt.display()))?;
    ensure_dir(out)?;
    let labeled = label_flows(&flows, &events);
    let summary = summarize(&labeled);
    let mut run = LabelRun { malicious: summary.malicious, total: summary.total, written: Vec::new() };
    write_flow_csv(out.join("labeled.csv"), &labeled, true, &mut run.written)?;
    let table = summary.to_string();
    print!("{table}");
    write_text(out.join("label_summary.txt"), &table, &mut run.written)?;
    let results = vec![
        format!("events={}", events.len()),
        format!("flows={}", summary.total),
        format!("malicious={}", summary.malicious),
        format!("benign={}", summary.benign),
    ];
    write_manifest(out, "label", inputs, &results, s, &mut run.written)?;
    Ok(run)
}

fn write_chart(
    out: &Path,
    stem: &str,
    csv: &str,
    chart: &dyn Chartable,
    title: String,
    s: &Settings,
    written: &mut Vec<PathBuf>,
) -> Result<(), Failure> {
    write_text(out.join(format!("{stem}.csv")), csv, written)?;
    let opts = ChartOptions { log_y: s.log_y, title, ..ChartOptions::default() };
    let svg = render_chart(chart, &opts).map_err(analytics_failure)?;
    write_text(out.join(format!("{stem}.svg")), &svg, written)
}

fn analyze_flows(
    kind: AnalysisKind,
    flows: &[FlowRecord],
    out: &Path,
    s: &Settings,
    written: &mut Vec<PathBuf>,
) -> Result<(), Failure> {
    match kind {
        AnalysisKind::Fld => {
            let h = flow_length_histogram(flows, s.bins).map_err(analytics_failure)?;
            write_chart(out, "fld", &h.to_csv(), &h, "Flow length distribution".into(), s, written)
        }
        AnalysisKind::Iat => {
            let h = iat_histogram(flows, s.direction, s.stat, s.bins).map_err(analytics_failure)?;
            let stem = format!("iat_{}_{}", s.direction, s.stat);
            let title = format!("{} distribution", h.quantity);
            write_chart(out, &stem, &h.to_csv(), &h, title, s, written)
        }
        AnalysisKind::Flows => {
            let ts = flows_per_interval(flows, s.interval_ms).map_err(analytics_failure)?;
            let title = format!("Flows per {} ms", s.interval_ms);
            write_chart(out, "flows_per_interval", &ts.to_csv(), &ts, title, s, written)
        }
        AnalysisKind::Numeric => {
            for &f in &s.features {
                let ts = numeric_series(flows, f, s.interval_ms, s.by_class).map_err(analytics_failure)?;
                let stem = format!("numeric_{}", f.column().to_ascii_lowercase());
                let title = format!("{} per {} ms", f.column(), s.interval_ms);
                write_chart(out, &stem, &ts.to_csv(), &ts, title, s, written)?;
            }
            Ok(())
        }
        AnalysisKind::Unique => {
            for &f in &s.fields {
                let ts = unique_count_series(flows, f, s.interval_ms).map_err(analytics_failure)?;
                let title = format!("Unique {} per {} ms", f.name(), s.interval_ms);
                write_chart(out, &format!("unique_{}", f.name()), &ts.to_csv(), &ts, title, s, written)?;
            }
            Ok(())
        }
    }
}

/// Flow CSV(s) → paired CSV/SVG files for one analysis.
pub fn analyze(kind: AnalysisKind, inputs: &[PathBuf], out: &Path, s: &Settings) -> Result<Vec<PathBuf>, Failure> {
    let flows = load_flows(inputs)?;
    ensure_dir(out)?;
    let mut written = Vec::new();
    analyze_flows(kind, &flows, out, s, &mut written)?;
    let results = vec![format!("analysis={kind}"), format!("flows={}", flows.len())];
    write_manifest(out, &format!("analyze_{kind}"), inputs, &results, s, &mut written)?;
    Ok(written)
}

fn file_safe(class: &str) -> String {
    class.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn class_spectrogram(
    flows: &[FlowRecord],
    class: &str,
    out: &Path,
    s: &Settings,
    run: &mut SpectrogramRun,
) -> Result<(), Failure> {
    let mut signal = build_signal(flows, class, s.sample_period_ms, SignalMetric::FlowCount).map_err(tfr_failure)?;
    let mut title = format!("{class} spectrogram");
    if let Some(seg) = s.segment {
        let rec = extract_recurrent_segment(&signal, seg).map_err(tfr_failure)?;
        title = format!("{class} spectrogram (segment at sample {}, score {})", rec.offset, rec.score);
        signal = rec.segment;
    }
    let m = stft(&signal, s.window, s.hop, s.window_fn).map_err(tfr_failure)?;
    let stem = format!("spectrogram_{}", file_safe(class));
    write_text(out.join(format!("{stem}.csv")), &m.to_csv(), &mut run.written)?;
    write_text(out.join(format!("{stem}.svg")), &render_spectrogram(&m, &title), &mut run.written)?;
    let bin = dominant_bin(&m);
    run.dominant.push((class.to_string(), bin, bin.map_or(0.0, |b| m.bin_hz(b))));
    Ok(())
}

fn classes_of(flows: &[FlowRecord]) -> Vec<String> {
    flows.iter().map(|f| f.class_name().to_string()).collect::<BTreeSet<_>>().into_iter().collect()
}

fn dominant_lines(run: &SpectrogramRun) -> Vec<String> {
    run.dominant
        .iter()
        .map(|(c, b, hz)| match b {
            Some(b) => format!("dominant.{c}=bin {b} ({hz:.6} Hz)"),
            None => format!("dominant.{c}=none"),
        })
        .collect()
}

/// Flow CSV(s) → `spectrogram_<class>.csv/.svg` for the requested classes
/// (default: every class present).
pub fn spectrogram(inputs: &[PathBuf], out: &Path, s: &Settings) -> Result<SpectrogramRun, Failure> {
    let flows = load_flows(inputs)?;
    ensure_dir(out)?;
    let classes = if s.classes.is_empty() { classes_of(&flows) } else { s.classes.clone() };
    if classes.is_empty() {
        return Err(Failure::Empty(anyhow!("no flows to analyze")));
    }
    let mut run = SpectrogramRun::default();
    for class in &classes {
        class_spectrogram(&flows, class, out, s, &mut run)?;
    }
    let results = dominant_lines(&run);
    write_manifest(out, "spectrogram", inputs, &results, s, &mut run.written)?;
    Ok(run)
}

/// Full pipeline into one directory. Labeling runs when `--gt` is set;
/// spectrograms are produced for every class whose signal is long enough.
pub fn report(inputs: &[PathBuf], out: &Path, s: &Settings) -> Result<Vec<PathBuf>, Failure> {
    let conv = convert(inputs, out, s)?;
    let mut written = conv.written.clone();
    let mut flows_csv = out.join("flows.csv");
    if s.separate {
        return Err(Failure::Input(anyhow!("report merges captures; --separate is not supported here")));
    }
    let mut results = vec![format!("flows={}", conv.flows)];
    if s.gt.is_some() {
        let l = label(&[flows_csv.clone()], out, s)?;
        written.extend(l.written);
        flows_csv = out.join("labeled.csv");
        results.push(format!("malicious={}", l.malicious));
    }
    let flows = load_flows(&[flows_csv])?;
    for kind in AnalysisKind::ALL {
        analyze_flows(kind, &flows, out, s, &mut written)?;
    }
    let classes = if s.classes.is_empty() { classes_of(&flows) } else { s.classes.clone() };
    let mut run = SpectrogramRun::default();
    for class in &classes {
        match class_spectrogram(&flows, class, out, s, &mut run) {
            Ok(()) => {}
            Err(Failure::Empty(e)) => results.push(format!("skipped.{class}={e}")),
            Err(e) => return Err(e),
        }
    }
    written.extend(run.written.iter().cloned());
    results.extend(dominant_lines(&run));
    write_manifest(out, "report", inputs, &results, s, &mut written)?;
    Ok(written)
}
