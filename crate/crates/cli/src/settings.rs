//! Resolved run parameters: command-line flag, then config file, then default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use flowlens_core::analytics::{CategoricalField, NumericFeature, DEFAULT_BINS, DEFAULT_INTERVAL_MS};
use flowlens_core::flow::{MeterConfig, DEFAULT_ACTIVE_TIMEOUT_MS, DEFAULT_IDLE_TIMEOUT_MS};
use flowlens_core::record::{IatDirection, IatStat};
use flowlens_core::tfr::{WindowFn, DEFAULT_SAMPLE_PERIOD_MS, DEFAULT_WINDOW_LEN};

const KEYS: [&str; 18] = [
    "active_timeout",
    "idle_timeout",
    "bins",
    "interval",
    "window",
    "hop",
    "sample_period",
    "window_fn",
    "segment",
    "class",
    "log_y",
    "separate",
    "by_class",
    "direction",
    "stat",
    "feature",
    "field",
    "gt",
];

/// Flags shared by every subcommand. All are optional so that config-file
/// values can fill the gaps.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Flat key=value file supplying defaults for any flag below
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Ground-truth event CSV
    #[arg(long, global = true, value_name = "PATH")]
    pub gt: Option<PathBuf>,
    /// Active timeout in milliseconds (>= 1000)
    #[arg(long, global = true, value_name = "MS")]
    pub active_timeout: Option<u64>,
    /// Idle timeout in milliseconds (>= 1000)
    #[arg(long, global = true, value_name = "MS")]
    pub idle_timeout: Option<u64>,
    /// Histogram bin count
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    /// Time-series interval in milliseconds
    #[arg(long, global = true, value_name = "MS")]
    pub interval: Option<u64>,
    /// STFT window length in samples (power of two)
    #[arg(long, global = true)]
    pub window: Option<usize>,
    /// STFT hop in samples (default: half the window)
    #[arg(long, global = true)]
    pub hop: Option<usize>,
    /// Spectrogram sample period in milliseconds
    #[arg(long, global = true, value_name = "MS")]
    pub sample_period: Option<u64>,
    /// STFT window function: hann or rectangular
    #[arg(long, global = true)]
    pub window_fn: Option<WindowFn>,
    /// Analyze only the most recurrent segment of this many samples
    #[arg(long, global = true)]
    pub segment: Option<usize>,
    /// Class to build spectrograms for (repeatable; default: every class)
    #[arg(long, global = true)]
    pub class: Vec<String>,
    /// Logarithmic y axis on charts
    #[arg(long, global = true)]
    pub log_y: bool,
    /// Convert each capture on its own instead of as one merged capture
    #[arg(long, global = true)]
    pub separate: bool,
    /// Split numeric series per class
    #[arg(long, global = true)]
    pub by_class: bool,
    /// IAT direction: src_to_dst or dst_to_src
    #[arg(long, global = true)]
    pub direction: Option<IatDirection>,
    /// IAT statistic: min, max, avg or stddev
    #[arg(long, global = true)]
    pub stat: Option<IatStat>,
    /// Numeric feature (IN_BYTES, OUT_BYTES, IN_PKTS, OUT_PKTS); default: all
    #[arg(long, global = true)]
    pub feature: Option<NumericFeature>,
    /// Endpoint field (src_ip, dst_ip, src_port, dst_port); default: all
    #[arg(long, global = true)]
    pub field: Option<CategoricalField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub meter: MeterConfig,
    pub gt: Option<PathBuf>,
    pub bins: usize,
    pub interval_ms: u64,
    pub window: usize,
    pub hop: usize,
    pub sample_period_ms: u64,
    pub window_fn: WindowFn,
    pub segment: Option<usize>,
    pub classes: Vec<String>,
    pub log_y: bool,
    pub separate: bool,
    pub by_class: bool,
    pub direction: IatDirection,
    pub stat: IatStat,
    pub features: Vec<NumericFeature>,
    pub fields: Vec<CategoricalField>,
    pub config_file: Option<PathBuf>,
}

/// Parse a flat `key = value` file. Blank lines and `#` comments are
/// ignored; keys may use `-` or `_`.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key=value", i + 1))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            bail!("line {}: unknown key '{}'", i + 1, k.trim());
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

struct Layer {
    file: BTreeMap<String, String>,
}

impl Layer {
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(raw) => raw.parse().map_err(|e| anyhow!("config key '{key}': {e}")),
            None => Ok(default),
        }
    }

    fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file.get(key).map(|raw| raw.parse().map_err(|e| anyhow!("config key '{key}': {e}"))).transpose()
    }

    fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        self.pick(flag.then_some(true), key, false)
    }
}

impl Settings {
    pub fn resolve(o: &Overrides) -> Result<Settings> {
        let file = match &o.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                parse_config(&text).with_context(|| format!("in config {}", p.display()))?
            }
            None => BTreeMap::new(),
        };
        let l = Layer { file };
        let window = l.pick(o.window, "window", DEFAULT_WINDOW_LEN)?;
        let classes = if o.class.is_empty() {
            l.file
                .get("class")
                .map(|v| v.split(',').map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect())
                .unwrap_or_default()
        } else {
            o.class.clone()
        };
        let s = Settings {
            meter: MeterConfig {
                active_timeout_ms: l.pick(o.active_timeout, "active_timeout", DEFAULT_ACTIVE_TIMEOUT_MS)?,
                idle_timeout_ms: l.pick(o.idle_timeout, "idle_timeout", DEFAULT_IDLE_TIMEOUT_MS)?,
                tcp_early_export: true,
            },
            gt: l.pick_opt(o.gt.clone(), "gt")?,
            bins: l.pick(o.bins, "bins", DEFAULT_BINS)?,
            interval_ms: l.pick(o.interval, "interval", DEFAULT_INTERVAL_MS)?,
            window,
            hop: l.pick(o.hop, "hop", window / 2)?,
            sample_period_ms: l.pick(o.sample_period, "sample_period", DEFAULT_SAMPLE_PERIOD_MS)?,
            window_fn: l.pick(o.window_fn, "window_fn", WindowFn::Hann)?,
            segment: l.pick_opt(o.segment, "segment")?,
            classes,
            log_y: l.switch(o.log_y, "log_y")?,
            separate: l.switch(o.separate, "separate")?,
            by_class: l.switch(o.by_class, "by_class")?,
            direction: l.pick(o.direction, "direction", IatDirection::SrcToDst)?,
            stat: l.pick(o.stat, "stat", IatStat::Avg)?,
            features: l.pick_opt(o.feature, "feature")?.map_or_else(|| NumericFeature::ALL.to_vec(), |f| vec![f]),
            fields: l.pick_opt(o.field, "field")?.map_or_else(|| CategoricalField::ALL.to_vec(), |f| vec![f]),
            config_file: o.config.clone(),
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.meter.active_timeout_ms < 1000 || self.meter.idle_timeout_ms < 1000 {
            bail!("timeouts must be at least 1000 ms");
        }
        if self.bins == 0 {
            bail!("--bins must be at least 1");
        }
        if self.interval_ms == 0 {
            bail!("--interval must be at least 1 ms");
        }
        if self.sample_period_ms == 0 {
            bail!("--sample-period must be at least 1 ms");
        }
        if self.window < 2 || !self.window.is_power_of_two() {
            bail!("--window must be a power of two >= 2");
        }
        if self.hop == 0 || self.hop > self.window {
            bail!("--hop must be between 1 and the window length");
        }
        if self.segment == Some(0) {
            bail!("--segment must be at least 1");
        }
        Ok(())
    }

    /// Resolved parameters as sorted `key=value` lines.
    pub fn manifest_lines(&self) -> Vec<String> {
        let opt_path = |p: &Option<PathBuf>| p.as_deref().map_or(String::new(), |p| p.display().to_string());
        let join = |v: Vec<String>| v.join(",");
        let mut m = BTreeMap::new();
        m.insert("active_timeout_ms", self.meter.active_timeout_ms.to_string());
        m.insert("idle_timeout_ms", self.meter.idle_timeout_ms.to_string());
        m.insert("tcp_early_export", self.meter.tcp_early_export.to_string());
        m.insert("gt", opt_path(&self.gt));
        m.insert("config", opt_path(&self.config_file));
        m.insert("bins", self.bins.to_string());
        m.insert("interval_ms", self.interval_ms.to_string());
        m.insert("window", self.window.to_string());
        m.insert("hop", self.hop.to_string());
        m.insert("sample_period_ms", self.sample_period_ms.to_string());
        m.insert("window_fn", self.window_fn.to_string());
        m.insert("segment", self.segment.map_or(String::new(), |s| s.to_string()));
        m.insert("class", self.classes.join(","));
        m.insert("log_y", self.log_y.to_string());
        m.insert("separate", self.separate.to_string());
        m.insert("by_class", self.by_class.to_string());
        m.insert("direction", self.direction.to_string());
        m.insert("stat", self.stat.to_string());
        m.insert("feature", join(self.features.iter().map(|f| f.to_string()).collect()));
        m.insert("field", join(self.fields.iter().map(|f| f.to_string()).collect()));
        m.into_iter().map(|(k, v)| format!("{k}={v}")).collect()
    }
}

/// Does the path look like a capture file?
pub fn is_capture(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(), Some("pcap" | "cap"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let m = parse_config("# c\nbins = 10\nidle-timeout=5000\n\n").unwrap();
        assert_eq!(m["bins"], "10");
        assert_eq!(m["idle_timeout"], "5000");
        assert!(parse_config("nonsense").is_err());
        assert!(parse_config("colour=red").is_err());
    }

    #[test]
    fn defaults() {
        let s = Settings::resolve(&Overrides::default()).unwrap();
        assert_eq!(s.meter, MeterConfig::default());
        assert_eq!((s.bins, s.interval_ms, s.window, s.hop), (50, 60_000, 64, 32));
        assert_eq!(s.window_fn, WindowFn::Hann);
        assert_eq!(s.features.len(), 4);
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let dir = std::env::temp_dir().join(format!("flowlens-settings-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = dir.join("run.conf");
        std::fs::write(&cfg, "bins=7\ninterval=1000\nlog_y=true\nclass=DoS, DDoS\n").unwrap();
        let o = Overrides { config: Some(cfg), bins: Some(9), ..Default::default() };
        let s = Settings::resolve(&o).unwrap();
        assert_eq!((s.bins, s.interval_ms, s.log_y), (9, 1000, true));
        assert_eq!(s.classes, vec!["DoS", "DDoS"]);
        assert_eq!(s.window, 64);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn validation() {
        for o in [
            Overrides { active_timeout: Some(999), ..Default::default() },
            Overrides { bins: Some(0), ..Default::default() },
            Overrides { window: Some(48), ..Default::default() },
            Overrides { hop: Some(65), ..Default::default() },
        ] {
            assert!(Settings::resolve(&o).is_err());
        }
    }

    #[test]
    fn manifest_is_sorted() {
        let lines = Settings::resolve(&Overrides::default()).unwrap().manifest_lines();
        let mut sorted = lines.clone();
        sorted.sort();
        assert_eq!(lines, sorted);
        assert!(lines.contains(&"idle_timeout_ms=30000".to_string()));
    }
}
