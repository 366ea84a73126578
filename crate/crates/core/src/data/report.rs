use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::model::LayerSummary;

/// One training run of one arm under one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Variant name, or the arm label of a multi-arm experiment.
    pub arm: String,
    pub seed: u64,
    pub test_accuracy: Option<f64>,
    pub val_accuracy: Option<f64>,
    pub best_epoch: Option<usize>,
    pub seconds: f64,
    /// Rewiring statistics of the evaluation stack at the best epoch.
    #[serde(default)]
    pub layers: Vec<LayerSummary>,
    /// Torque ranking AUC of injected edges against original ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_auc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    pub fn failed(arm: impl Into<String>, seed: u64, error: String) -> Self {
        RunRecord {
            arm: arm.into(),
            seed,
            test_accuracy: None,
            val_accuracy: None,
            best_epoch: None,
            seconds: 0.0,
            layers: Vec::new(),
            detection_auc: None,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub arm: String,
    pub runs: usize,
    pub failures: usize,
    /// `None` when every run failed.
    pub mean_accuracy: Option<f64>,
    /// Population standard deviation over successful runs.
    pub std_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_detection_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub dataset: String,
    pub runs: Vec<RunRecord>,
    pub summary: Vec<ArmSummary>,
}

impl Report {
    /// Build a report; arms are summarised in order of first appearance.
    pub fn new(config: ExperimentConfig, dataset: impl Into<String>, runs: Vec<RunRecord>) -> Self {
        let mut arms: Vec<&str> = Vec::new();
        for r in &runs {
            if !arms.contains(&r.arm.as_str()) {
                arms.push(&r.arm);
            }
        }
        let summary = arms
            .iter()
            .map(|&arm| {
                let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.arm == arm).collect();
                let acc: Vec<f64> = mine.iter().filter_map(|r| r.test_accuracy).collect();
                let auc: Vec<f64> = mine.iter().filter_map(|r| r.detection_auc).collect();
                let (mean, std) = mean_std(&acc);
                let present = !acc.is_empty();
                ArmSummary {
                    arm: arm.to_string(),
                    runs: mine.len(),
                    failures: mine.len() - acc.len(),
                    mean_accuracy: present.then_some(mean),
                    std_accuracy: present.then_some(std),
                    mean_detection_auc: (!auc.is_empty()).then(|| mean_std(&auc).0),
                }
            })
            .collect();
        Report { config, dataset: dataset.into(), runs, summary }
    }

    pub fn arm(&self, name: &str) -> Option<&ArmSummary> {
        self.summary.iter().find(|s| s.arm == name)
    }

    pub fn has_failures(&self) -> bool {
        self.runs.iter().any(|r| r.error.is_some())
    }
}

/// Mean and population standard deviation; `(NaN, NaN)` for no values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn save_report(report: &Report, path: &Path) -> Result<()> {
    if report.runs.is_empty() {
        return Err(Error::parameter("refusing to write a report with no runs"));
    }
    let json = serde_json::to_string_pretty(report)
        .map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_report(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}
