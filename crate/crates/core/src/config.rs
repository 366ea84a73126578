//! Experiment configuration.
//!
//! Files use one `key = value` pair per line; `#` starts a comment.
//! Setting `preset = <dataset>` loads that dataset's tuned row first, so
//! later keys in the same file override it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torque::{Variant, DEFAULT_DELTA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Manifest path, or an `sbm:` generator spec.
    pub dataset: String,
    pub variant: Variant,
    /// Number of propagation layers `L`.
    pub layers: usize,
    /// Weight of propagated neighbours versus the initial representation.
    pub alpha: f64,
    /// Candidate peers per node.
    pub candidates: usize,
    /// Fraction of candidates kept for addition.
    pub sample_ratio: f64,
    /// Gumbel-Softmax temperature.
    pub tau: f64,
    pub delta: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub epochs: usize,
    /// Energy calibration steps per epoch.
    pub calibration_steps: usize,
    /// Edge add/remove fraction for calibration negatives.
    pub calibration_perturb: f64,
    pub hidden: usize,
    pub seeds: Vec<u64>,
    pub stratified: bool,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: String::new(),
            variant: Variant::MThr,
            layers: 8,
            alpha: 0.5,
            candidates: 5,
            sample_ratio: 0.2,
            tau: 1.0,
            delta: DEFAULT_DELTA,
            lr: 0.001,
            weight_decay: 5e-4,
            dropout: 0.5,
            epochs: 100,
            calibration_steps: 1,
            calibration_perturb: 0.1,
            hidden: 512,
            seeds: (0..10).collect(),
            stratified: true,
            output: None,
        }
    }
}

/// Tuned per-dataset values: `(lr, weight_decay, dropout, layers, candidates, ratio, epochs)`.
type Preset = (&'static str, f64, f64, f64, usize, usize, f64, usize);

const PRESETS: &[Preset] = &[
    ("texas", 0.001, 5e-4, 0.7, 8, 5, 0.2, 100),
    ("wisconsin", 0.001, 0.5, 0.5, 8, 5, 0.2, 100),
    ("cornell", 0.001, 0.05, 0.7, 8, 2, 0.2, 100),
    ("actor", 0.001, 0.05, 0.1, 8, 5, 0.2, 100),
    ("citeseer", 0.001, 5e-8, 0.1, 8, 2, 0.2, 100),
    ("cora", 0.001, 0.1, 0.1, 8, 2, 0.2, 100),
    ("pubmed", 0.001, 0.08, 0.1, 12, 5, 0.2, 100),
    ("tolokers", 0.001, 5e-8, 0.1, 2, 2, 0.2, 500),
    ("questions", 0.001, 5e-8, 0.1, 2, 2, 0.2, 500),
    ("penn94", 0.001, 5e-8, 0.1, 2, 2, 0.2, 500),
];

impl ExperimentConfig {
    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|p| p.0)
    }

    /// Defaults overlaid with a dataset's tuned hyperparameters.
    pub fn preset(name: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_preset(name)?;
        Ok(cfg)
    }

    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        let key = name.trim().to_ascii_lowercase();
        let &(_, lr, wd, dropout, layers, t, r, epochs) = PRESETS
            .iter()
            .find(|p| p.0 == key)
            .ok_or_else(|| Error::parameter(format!("no preset named {name:?}")))?;
        self.lr = lr;
        self.weight_decay = wd;
        self.dropout = dropout;
        self.layers = layers;
        self.candidates = t;
        self.sample_ratio = r;
        self.epochs = epochs;
        Ok(())
    }

    /// Set one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let bad = |what: &str| Error::parameter(format!("{key} = {v:?}: expected {what}"));
        let float = || v.parse::<f64>().map_err(|_| bad("a number"));
        let count = || v.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        match key.trim().replace('-', "_").as_str() {
            "preset" => self.apply_preset(v)?,
            "dataset" => self.dataset = v.to_string(),
            "variant" => self.variant = v.parse()?,
            "layers" | "l" => self.layers = count()?,
            "alpha" => self.alpha = float()?,
            "candidates" | "t" => self.candidates = count()?,
            "sample_ratio" | "r" => self.sample_ratio = float()?,
            "tau" => self.tau = float()?,
            "delta" => self.delta = float()?,
            "lr" => self.lr = float()?,
            "weight_decay" | "wd" => self.weight_decay = float()?,
            "dropout" => self.dropout = float()?,
            "epochs" => self.epochs = count()?,
            "calibration_steps" => self.calibration_steps = count()?,
            "calibration_perturb" => self.calibration_perturb = float()?,
            "hidden" => self.hidden = count()?,
            "seeds" | "seed" => {
                self.seeds = parse_seeds(v).map_err(|_| bad("seeds like `0,1,2` or `0..10`"))?
            }
            "stratified" => self.stratified = v.parse::<bool>().map_err(|_| bad("true or false"))?,
            "output" | "out" => self.output = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            other => return Err(Error::parameter(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Apply a `key = value` document on top of `self`.
    pub fn merge_str(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: lineno + 1,
                msg: format!("expected `key = value`, got {line:?}"),
            })?;
            self.set(k, v).map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                line: lineno + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = ExperimentConfig::default();
        cfg.merge_str(&text, path)?;
        Ok(cfg)
    }

    /// Render every field as `key = value`; parsing the result reproduces `self`.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let fields: [(&str, String); 19] = [
            ("dataset", self.dataset.clone()),
            ("variant", self.variant.to_string()),
            ("layers", self.layers.to_string()),
            ("alpha", format!("{:?}", self.alpha)),
            ("candidates", self.candidates.to_string()),
            ("sample_ratio", format!("{:?}", self.sample_ratio)),
            ("tau", format!("{:?}", self.tau)),
            ("delta", format!("{:?}", self.delta)),
            ("lr", format!("{:?}", self.lr)),
            ("weight_decay", format!("{:?}", self.weight_decay)),
            ("dropout", format!("{:?}", self.dropout)),
            ("epochs", self.epochs.to_string()),
            ("calibration_steps", self.calibration_steps.to_string()),
            ("calibration_perturb", format!("{:?}", self.calibration_perturb)),
            ("hidden", self.hidden.to_string()),
            ("seeds", seeds.join(",")),
            ("stratified", self.stratified.to_string()),
            ("output", self.output.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
            ("# resolved", String::new()),
        ];
        for (k, v) in fields.iter().take(18) {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::parameter(m));
        if self.layers == 0 {
            return fail("layers must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return fail(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if self.candidates == 0 {
            return fail("candidates must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.sample_ratio) {
            return fail(format!("sample_ratio {} outside [0, 1]", self.sample_ratio));
        }
        if !(self.tau > 0.0) {
            return fail(format!("tau {} must be positive", self.tau));
        }
        if !(self.delta > 0.0) {
            return fail(format!("delta {} must be positive", self.delta));
        }
        if !(self.lr > 0.0) || !(self.weight_decay >= 0.0) {
            return fail("lr must be positive and weight_decay non-negative".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(0.0..=1.0).contains(&self.calibration_perturb) {
            return fail(format!("calibration_perturb {} outside [0, 1]", self.calibration_perturb));
        }
        if self.hidden == 0 {
            return fail("hidden width must be positive".into());
        }
        if self.seeds.is_empty() {
            return fail("at least one seed is required".into());
        }
        Ok(())
    }
}

/// `0,1,2`, `0..10` (exclusive) or a mix such as `0..3,7`.
pub fn parse_seeds(s: &str) -> std::result::Result<Vec<u64>, std::num::ParseIntError> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b) = (a.trim().parse::<u64>()?, b.trim().parse::<u64>()?);
            out.extend(a..b);
        } else {
            out.push(part.parse()?);
        }
    }
    Ok(out)
}
