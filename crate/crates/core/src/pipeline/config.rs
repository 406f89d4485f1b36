use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fusion::{Aggregator, WeightMode, DEFAULT_MEMORY_BUDGET};

/// Every recognized configuration key, in echo order.
pub const CONFIG_KEYS: &[&str] = &[
    "mesh",
    "trajectory",
    "predictions",
    "gt",
    "output",
    "palette",
    "gamma",
    "aggregator",
    "weight_mode",
    "frame_fraction",
    "classes",
    "ignore",
    "fallback",
    "deterministic",
    "memory_budget",
];

const PATH_KEYS: &[&str] = &["mesh", "trajectory", "predictions", "gt", "output", "palette"];

/// Label used for pixels the fused texture says nothing about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    /// The frame's own network argmax.
    Network,
    Unknown,
}

impl fmt::Display for Fallback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fallback::Network => "network",
            Fallback::Unknown => "unknown",
        })
    }
}

impl FromStr for Fallback {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "network" => Ok(Fallback::Network),
            "unknown" => Ok(Fallback::Unknown),
            other => Err(Error::config(format!("unknown fallback {other:?} (expected network or unknown)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub mesh: PathBuf,
    pub trajectory: PathBuf,
    /// Directory of `<frame_id>.smpb` network outputs.
    pub predictions: PathBuf,
    /// Directory of `<frame_id>.png` ground-truth labels; evaluation is
    /// skipped without it.
    pub gt: Option<PathBuf>,
    pub output: PathBuf,
    pub palette: Option<PathBuf>,
    pub gamma: f64,
    pub aggregator: Aggregator,
    pub weight_mode: WeightMode,
    pub frame_fraction: f64,
    /// Taken from the first prediction header when unset.
    pub classes: Option<usize>,
    pub ignore: Vec<u16>,
    pub fallback: Fallback,
    pub deterministic: bool,
    pub memory_budget: u64,
}

impl PipelineConfig {
    /// Defaults with the given input and output locations.
    pub fn new(mesh: PathBuf, trajectory: PathBuf, predictions: PathBuf, output: PathBuf) -> Self {
        Self {
            mesh,
            trajectory,
            predictions,
            gt: None,
            output,
            palette: None,
            gamma: 0.2,
            aggregator: Aggregator::Mul,
            weight_mode: WeightMode::ImagesIid,
            frame_fraction: 1.0,
            classes: None,
            ignore: Vec::new(),
            fallback: Fallback::Network,
            deterministic: true,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }

    /// Checks value ranges and that every input path exists.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::config(format!("gamma must be a finite value >= 0, got {}", self.gamma)));
        }
        self.weight_mode.validate()?;
        if !(self.frame_fraction > 0.0 && self.frame_fraction <= 1.0) {
            return Err(Error::config(format!("frame_fraction {} outside (0, 1]", self.frame_fraction)));
        }
        if let Some(c) = self.classes {
            if !(2..=u16::MAX as usize).contains(&c) {
                return Err(Error::config(format!("classes must be in 2..=65535, got {c}")));
            }
        }
        let inputs = [
            ("mesh", Some(&self.mesh)),
            ("trajectory", Some(&self.trajectory)),
            ("predictions", Some(&self.predictions)),
            ("gt", self.gt.as_ref()),
            ("palette", self.palette.as_ref()),
        ];
        for (key, path) in inputs {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(Error::config(format!("{key}: {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    /// `key = value` text with every key present, readable by
    /// [`ConfigBuilder::apply_text`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("mesh", self.mesh.display().to_string());
        put("trajectory", self.trajectory.display().to_string());
        put("predictions", self.predictions.display().to_string());
        put("gt", path(&self.gt));
        put("output", self.output.display().to_string());
        put("palette", path(&self.palette));
        put("gamma", self.gamma.to_string());
        put("aggregator", self.aggregator.to_string());
        put("weight_mode", self.weight_mode.to_string());
        put("frame_fraction", self.frame_fraction.to_string());
        put("classes", self.classes.map(|c| c.to_string()).unwrap_or_default());
        put(
            "ignore",
            self.ignore.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
        );
        put("fallback", self.fallback.to_string());
        put("deterministic", self.deterministic.to_string());
        put("memory_budget", self.memory_budget.to_string());
        s
    }
}

/// Collects `key = value` settings from config files and overrides; later
/// settings win.
#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    values: BTreeMap<String, String>,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads a config file. Relative paths in it are taken relative to the
    /// file's directory.
    pub fn apply_file(&mut self, path: &Path) -> Result<&mut Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        self.apply_text(&text, base)
            .map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
                other => other,
            })
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, base: &Path) -> Result<&mut Self> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected `key = value`", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let v = if PATH_KEYS.contains(&k) && !v.is_empty() && Path::new(v).is_relative() {
                base.join(v).display().to_string()
            } else {
                v.to_string()
            };
            self.set(k, &v)?;
        }
        Ok(self)
    }

    /// Sets one key, as given on the command line.
    pub fn set(&mut self, key: &str, value: &str) -> Result<&mut Self> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::config(format!("unknown config key {key:?}")));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(self)
    }

    pub fn build(&self) -> Result<PipelineConfig> {
        let get = |k: &str| self.values.get(k).map(String::as_str).filter(|v| !v.is_empty());
        let required = |k: &str| {
            get(k)
                .map(PathBuf::from)
                .ok_or_else(|| Error::config(format!("missing required key {k:?}")))
        };
        let mut cfg = PipelineConfig::new(
            required("mesh")?,
            required("trajectory")?,
            required("predictions")?,
            required("output")?,
        );
        cfg.gt = get("gt").map(PathBuf::from);
        cfg.palette = get("palette").map(PathBuf::from);
        if let Some(v) = get("gamma") {
            cfg.gamma = parse_num("gamma", v)?;
        }
        if let Some(v) = get("aggregator") {
            cfg.aggregator = v.parse()?;
        }
        if let Some(v) = get("weight_mode") {
            cfg.weight_mode = v.parse()?;
        }
        if let Some(v) = get("frame_fraction") {
            cfg.frame_fraction = parse_num("frame_fraction", v)?;
        }
        if let Some(v) = get("classes") {
            cfg.classes = Some(parse_num("classes", v)?);
        }
        if let Some(v) = get("ignore") {
            cfg.ignore = v
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| parse_num("ignore", t))
                .collect::<Result<_>>()?;
        }
        if let Some(v) = get("fallback") {
            cfg.fallback = v.parse()?;
        }
        if let Some(v) = get("deterministic") {
            cfg.deterministic = match v.to_ascii_lowercase().as_str() {
                "true" | "1" | "yes" | "on" => true,
                "false" | "0" | "no" | "off" => false,
                _ => return Err(Error::config(format!("deterministic: expected true or false, got {v:?}"))),
            };
        }
        if let Some(v) = get("memory_budget") {
            cfg.memory_budget = parse_bytes(v)?;
        }
        Ok(cfg)
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(format!("{key}: cannot parse {v:?}")))
}

/// Byte count with an optional `K`, `M` or `G` (binary) suffix.
fn parse_bytes(v: &str) -> Result<u64> {
    let t = v.trim().trim_end_matches(['B', 'b']).trim_end_matches(['i']);
    let (digits, shift) = match t.chars().last() {
        Some('K' | 'k') => (&t[..t.len() - 1], 10),
        Some('M' | 'm') => (&t[..t.len() - 1], 20),
        Some('G' | 'g') => (&t[..t.len() - 1], 30),
        _ => (t, 0),
    };
    let n: u64 = parse_num("memory_budget", digits.trim())?;
    n.checked_mul(1 << shift)
        .ok_or_else(|| Error::config(format!("memory_budget {v:?} overflows")))
}
