//! Flat `key = value` run and sweep configuration.
//!
//! ```text
//! # comment
//! dataset = cora
//! depth = 16
//! depths = 2, 4, 8, 16, 32
//! modes = blockwise, end2end
//! ```
//!
//! Every key is optional; unknown or repeated keys are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use blockgcl_core::{MaskMode, Precision, ProbeConfig, TrainConfig, TrainMode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub key: String,
    pub msg: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line == 0 {
            write!(f, "config key `{}`: {}", self.key, self.msg)
        } else {
            write!(f, "config line {}, key `{}`: {}", self.line, self.key, self.msg)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Resolved configuration for a single run or a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Dataset names or directories.
    pub datasets: Vec<String>,
    pub train: TrainConfig,
    pub probe: ProbeConfig,
    pub save_embeddings: bool,
    pub depths: Vec<usize>,
    pub block_sizes: Vec<usize>,
    pub modes: Vec<TrainMode>,
    pub runs: usize,
    /// Directory the config file was read from; relative dataset paths resolve here first.
    pub base_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            datasets: Vec::new(),
            train: TrainConfig::default(),
            probe: ProbeConfig::default(),
            save_embeddings: false,
            depths: vec![2, 4, 8, 16, 32],
            block_sizes: vec![1, 2, 4],
            modes: vec![TrainMode::Blockwise, TrainMode::End2End],
            runs: 5,
            base_dir: None,
        }
    }
}

fn scalar<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError {
        line,
        key: key.to_string(),
        msg: format!("cannot parse {value:?}: {e}"),
    })
}

fn list<T: FromStr>(key: &str, value: &str, line: usize) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| scalar(key, s, line))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(ConfigError {
            line,
            key: key.to_string(),
            msg: "list must not be empty".into(),
        });
    }
    Ok(items)
}

fn mask_mode(s: &str) -> Result<MaskMode, String> {
    match s {
        "column" => Ok(MaskMode::Column),
        "entry" => Ok(MaskMode::Entry),
        other => Err(format!("unknown mask mode {other:?} (expected column or entry)")),
    }
}

fn mask_mode_str(m: MaskMode) -> &'static str {
    match m {
        MaskMode::Column => "column",
        MaskMode::Entry => "entry",
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<(String, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError {
                    line,
                    key: content.to_string(),
                    msg: "expected `key = value`".into(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|(k, _)| k == key) {
                return Err(ConfigError {
                    line,
                    key: key.to_string(),
                    msg: "key given twice".into(),
                });
            }
            seen.push((key.to_string(), line));
            cfg.set(key, value, line)?;
        }
        cfg.validate().map_err(|mut e| {
            if let Some((_, line)) = seen.iter().find(|(k, _)| *k == e.key) {
                e.line = *line;
            }
            e
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let t = &mut self.train;
        match key {
            "dataset" | "datasets" => self.datasets = list(key, value, line)?,
            "depth" => t.depth = scalar(key, value, line)?,
            "block_size" => t.block_size = scalar(key, value, line)?,
            "lambda" => t.lambda = scalar(key, value, line)?,
            "epsilon_std" => t.epsilon_std = scalar(key, value, line)?,
            "p_edge_drop" => t.aug.p_edge_drop = scalar(key, value, line)?,
            "p_feat_mask" => t.aug.p_feat_mask = scalar(key, value, line)?,
            "mask_mode" => {
                t.aug.mask_mode = mask_mode(value).map_err(|msg| ConfigError {
                    line,
                    key: key.into(),
                    msg,
                })?
            }
            "hidden_dim" => t.hidden_dim = scalar(key, value, line)?,
            "learning_rate" => t.learning_rate = scalar(key, value, line)?,
            "weight_decay" => t.weight_decay = scalar(key, value, line)?,
            "epochs" => t.epochs = scalar(key, value, line)?,
            "seed" => t.seed = scalar(key, value, line)?,
            "mode" => t.mode = scalar(key, value, line)?,
            "precision" => t.precision = scalar(key, value, line)?,
            "block_output" => t.block_output = scalar(key, value, line)?,
            "normalize_features" => t.normalize_features = scalar(key, value, line)?,
            "record_timing" => t.record_timing = scalar(key, value, line)?,
            "probe_epochs" => self.probe.epochs = scalar(key, value, line)?,
            "probe_learning_rate" => self.probe.learning_rate = scalar(key, value, line)?,
            "probe_weight_decay" => self.probe.weight_decay = scalar(key, value, line)?,
            "probe_repeats" => self.probe.repeats = scalar(key, value, line)?,
            "save_embeddings" => self.save_embeddings = scalar(key, value, line)?,
            "depths" => self.depths = list(key, value, line)?,
            "block_sizes" => self.block_sizes = list(key, value, line)?,
            "modes" => self.modes = list(key, value, line)?,
            "runs" => self.runs = scalar(key, value, line)?,
            _ => {
                return Err(ConfigError {
                    line,
                    key: key.to_string(),
                    msg: "unknown key".into(),
                })
            }
        }
        Ok(())
    }

    /// Checks values that parse but make no sense, naming the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, msg: &str| ConfigError {
            line: 0,
            key: key.into(),
            msg: msg.into(),
        };
        let t = &self.train;
        if t.depth == 0 {
            return Err(bad("depth", "must be at least 1"));
        }
        if t.hidden_dim == 0 {
            return Err(bad("hidden_dim", "must be at least 1"));
        }
        if t.block_size == 0 || (t.mode == TrainMode::Blockwise && t.block_size > t.depth) {
            return Err(bad("block_size", "must lie in [1, depth]"));
        }
        if !(t.lambda >= 0.0 && t.lambda.is_finite()) {
            return Err(bad("lambda", "must be non-negative"));
        }
        if !(t.epsilon_std > 0.0 && t.epsilon_std.is_finite()) {
            return Err(bad("epsilon_std", "must be positive"));
        }
        if !(0.0..=1.0).contains(&t.aug.p_edge_drop) {
            return Err(bad("p_edge_drop", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&t.aug.p_feat_mask) {
            return Err(bad("p_feat_mask", "must lie in [0, 1]"));
        }
        if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) {
            return Err(bad("learning_rate", "must be positive"));
        }
        if !(t.weight_decay >= 0.0 && t.weight_decay.is_finite()) {
            return Err(bad("weight_decay", "must be non-negative"));
        }
        if !(self.probe.learning_rate > 0.0 && self.probe.learning_rate.is_finite()) {
            return Err(bad("probe_learning_rate", "must be positive"));
        }
        if !(self.probe.weight_decay >= 0.0 && self.probe.weight_decay.is_finite()) {
            return Err(bad("probe_weight_decay", "must be non-negative"));
        }
        if self.probe.repeats == 0 {
            return Err(bad("probe_repeats", "must be at least 1"));
        }
        if self.runs == 0 {
            return Err(bad("runs", "must be at least 1"));
        }
        if self.depths.contains(&0) {
            return Err(bad("depths", "every depth must be at least 1"));
        }
        if self.block_sizes.contains(&0) {
            return Err(bad("block_sizes", "every block size must be at least 1"));
        }
        Ok(())
    }

    /// Every resolved key as `key = value` lines, in a fixed order.
    pub fn render(&self) -> String {
        let t = &self.train;
        let join = |v: Vec<String>| v.join(",");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        if !self.datasets.is_empty() {
            kv("datasets", self.datasets.join(","));
        }
        kv("depth", t.depth.to_string());
        kv("block_size", t.block_size.to_string());
        kv("mode", t.mode.to_string());
        kv("lambda", t.lambda.to_string());
        kv("epsilon_std", t.epsilon_std.to_string());
        kv("p_edge_drop", t.aug.p_edge_drop.to_string());
        kv("p_feat_mask", t.aug.p_feat_mask.to_string());
        kv("mask_mode", mask_mode_str(t.aug.mask_mode).to_string());
        kv("hidden_dim", t.hidden_dim.to_string());
        kv("learning_rate", t.learning_rate.to_string());
        kv("weight_decay", t.weight_decay.to_string());
        kv("epochs", t.epochs.to_string());
        kv("seed", t.seed.to_string());
        kv("precision", t.precision.to_string());
        kv("block_output", t.block_output.to_string());
        kv("normalize_features", t.normalize_features.to_string());
        kv("record_timing", t.record_timing.to_string());
        kv("probe_epochs", self.probe.epochs.to_string());
        kv("probe_learning_rate", self.probe.learning_rate.to_string());
        kv("probe_weight_decay", self.probe.weight_decay.to_string());
        kv("probe_repeats", self.probe.repeats.to_string());
        kv("save_embeddings", self.save_embeddings.to_string());
        kv("depths", join(self.depths.iter().map(ToString::to_string).collect()));
        kv("block_sizes", join(self.block_sizes.iter().map(ToString::to_string).collect()));
        kv("modes", join(self.modes.iter().map(ToString::to_string).collect()));
        kv("runs", self.runs.to_string());
        s
    }

    /// The resolved config as a `# `-prefixed block for CSV headers.
    pub fn header(&self) -> String {
        let mut s = format!("# blockgcl {}\n", env!("CARGO_PKG_VERSION"));
        for line in self.render().lines() {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
        s
    }

    pub fn single_dataset(&self) -> Result<&str, ConfigError> {
        match self.datasets.as_slice() {
            [one] => Ok(one),
            [] => Err(ConfigError {
                line: 0,
                key: "dataset".into(),
                msg: "no dataset given".into(),
            }),
            _ => Err(ConfigError {
                line: 0,
                key: "dataset".into(),
                msg: "this command takes exactly one dataset".into(),
            }),
        }
    }
}

/// Command-line flags take precedence over the file.
pub fn apply_overrides(cfg: &mut RunConfig, seed: Option<u64>, precision: Option<Precision>) {
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    if let Some(p) = precision {
        cfg.train.precision = p;
    }
}
