//! Experiment commands behind the `torquegnn` binary.

use std::collections::HashSet;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use torquegnn::data::{
    inject_adversarial, make_splits, mean_std, resolve_dataset, save_report, Dataset, InjectionRecord,
    InjectionStrategy, Report, RunRecord, DEFAULT_FRACTIONS,
};
use torquegnn::model::{edge_detection_auc, first_layer_table, train, write_curve_csv};
use torquegnn::torque::{find_cutoff, Variant};
use torquegnn::{seed, ExperimentConfig};

/// Failure classes mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file or dataset spec.
    Config(String),
    /// A run failed after a valid configuration was accepted.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

fn config_err(e: impl fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Load the dataset named by `cfg`.
pub fn load(cfg: &ExperimentConfig) -> CliResult<Dataset> {
    cfg.validate().map_err(config_err)?;
    resolve_dataset(&cfg.dataset).map_err(config_err)
}

/// Train one seed on a fresh split of `d` and summarise it.
pub fn run_seed(d: &Dataset, cfg: &ExperimentConfig, seed: u64, arm: &str) -> RunRecord {
    let start = Instant::now();
    let result = make_splits(&d.labels, DEFAULT_FRACTIONS, seed, cfg.stratified)
        .map(|splits| Dataset { splits, ..d.clone() })
        .and_then(|d| train(&d, cfg, seed));
    match result {
        Ok(out) => RunRecord {
            arm: arm.to_string(),
            seed,
            test_accuracy: Some(out.test_accuracy),
            val_accuracy: Some(out.val_accuracy),
            best_epoch: Some(out.best_epoch),
            seconds: start.elapsed().as_secs_f64(),
            layers: out.stack.summaries,
            detection_auc: None,
            error: None,
        },
        Err(e) => {
            log::error!("{arm} seed {seed}: {e}");
            RunRecord::failed(arm, seed, e.to_string())
        }
    }
}

fn finish(report: Report) -> CliResult<Report> {
    if let Some(path) = &report.config.output {
        save_report(&report, path).map_err(runtime_err)?;
    }
    for s in &report.summary {
        match (s.mean_accuracy, s.std_accuracy) {
            (Some(m), Some(sd)) => println!(
                "{:<18} {:6.2} ± {:5.2}  ({} runs, {} failed)",
                s.arm,
                100.0 * m,
                100.0 * sd,
                s.runs,
                s.failures
            ),
            _ => println!("{:<18} all {} runs failed", s.arm, s.runs),
        }
    }
    Ok(report)
}

/// Train the configured variant once per seed.
pub fn cmd_train(cfg: &ExperimentConfig) -> CliResult<Report> {
    let d = load(cfg)?;
    let arm = cfg.variant.as_str();
    let runs: Vec<RunRecord> = cfg.seeds.par_iter().map(|&s| run_seed(&d, cfg, s, arm)).collect();
    finish(Report::new(cfg.clone(), d.name.clone(), runs))
}

/// Arm labels of [`cmd_attack`].
pub const ARM_WITHOUT_ATTACKED: &str = "w/o-thr-attacked";
pub const ARM_WITH_ATTACKED: &str = "w-thr-attacked";
pub const ARM_WITH_CLEAN: &str = "w-thr-clean";

/// Three arms per seed: backbone on the attacked graph, rewiring on the
/// attacked graph (with torque detection AUC of the injected edges), and
/// rewiring on the clean graph. A `none` variant is promoted to `m-thr`.
pub fn cmd_attack(cfg: &ExperimentConfig, rate: f64, strategy: InjectionStrategy) -> CliResult<Report> {
    if rate.is_nan() || rate <= 0.0 {
        return Err(CliError::Config(format!("attack rate must be positive, got {rate}")));
    }
    let d = load(cfg)?;
    let with = ExperimentConfig {
        variant: if cfg.variant == Variant::None { Variant::MThr } else { cfg.variant },
        ..cfg.clone()
    };
    let without = ExperimentConfig { variant: Variant::None, ..cfg.clone() };

    let per_seed: Vec<Vec<RunRecord>> = cfg
        .seeds
        .par_iter()
        .map(|&s| {
            let (attacked, record) = match inject_adversarial(&d, rate, strategy, seed::derive(s, &[0xA7])) {
                Ok(v) => v,
                Err(e) => {
                    return [ARM_WITHOUT_ATTACKED, ARM_WITH_ATTACKED, ARM_WITH_CLEAN]
                        .iter()
                        .map(|a| RunRecord::failed(*a, s, e.to_string()))
                        .collect()
                }
            };
            let mut w = run_attacked_with(&attacked, &with, s, &record);
            w.arm = ARM_WITH_ATTACKED.into();
            vec![
                run_seed(&attacked, &without, s, ARM_WITHOUT_ATTACKED),
                w,
                run_seed(&d, &with, s, ARM_WITH_CLEAN),
            ]
        })
        .collect();
    let mut echo = cfg.clone();
    echo.variant = with.variant;
    finish(Report::new(echo, d.name.clone(), per_seed.into_iter().flatten().collect()))
}

fn run_attacked_with(d: &Dataset, cfg: &ExperimentConfig, s: u64, record: &InjectionRecord) -> RunRecord {
    let start = Instant::now();
    let result = make_splits(&d.labels, DEFAULT_FRACTIONS, s, cfg.stratified)
        .map(|splits| Dataset { splits, ..d.clone() })
        .and_then(|d| {
            let out = train(&d, cfg, s)?;
            let table = first_layer_table(&d.features, &d.graph, &out.model)?;
            Ok((out, edge_detection_auc(&table, |e| record.contains(e))))
        });
    match result {
        Ok((out, auc)) => RunRecord {
            arm: String::new(),
            seed: s,
            test_accuracy: Some(out.test_accuracy),
            val_accuracy: Some(out.val_accuracy),
            best_epoch: Some(out.best_epoch),
            seconds: start.elapsed().as_secs_f64(),
            layers: out.stack.summaries,
            detection_auc: auc,
            error: None,
        },
        Err(e) => RunRecord::failed("", s, e.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    Depth,
}

impl std::str::FromStr for SweepParam {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "alpha" => Ok(SweepParam::Alpha),
            "depth" | "layers" => Ok(SweepParam::Depth),
            other => Err(CliError::Config(format!("cannot sweep {other:?}; use alpha or depth"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
    pub failures: usize,
}

pub const SWEEP_HEADER: &str = "value,mean_accuracy,std_accuracy,runs,failures";

/// Train every seed at each value; repeated values run once.
pub fn cmd_sweep(cfg: &ExperimentConfig, param: SweepParam, values: &[f64]) -> CliResult<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let mut seen = HashSet::new();
    let mut unique = Vec::new();
    for &v in values {
        if seen.insert(v.to_bits()) {
            unique.push(v);
        } else {
            log::warn!("dropping repeated sweep value {v}");
        }
    }
    let d = load(cfg)?;
    let mut rows = Vec::with_capacity(unique.len());
    for v in unique {
        let mut c = cfg.clone();
        match param {
            SweepParam::Alpha => c.alpha = v,
            SweepParam::Depth => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(CliError::Config(format!("depth {v} is not a positive integer")));
                }
                c.layers = v as usize;
            }
        }
        c.validate().map_err(config_err)?;
        let runs: Vec<RunRecord> =
            c.seeds.par_iter().map(|&s| run_seed(&d, &c, s, c.variant.as_str())).collect();
        let acc: Vec<f64> = runs.iter().filter_map(|r| r.test_accuracy).collect();
        let (mean, std) = mean_std(&acc);
        println!("{v}: {:.2} ± {:.2}", 100.0 * mean, 100.0 * std);
        rows.push(SweepRow { value: v, mean, std, runs: runs.len(), failures: runs.len() - acc.len() });
    }
    if let Some(path) = &cfg.output {
        write_sweep_csv(&rows, path).map_err(runtime_err)?;
    }
    Ok(rows)
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> std::io::Result<()> {
    let mut s = format!("{SWEEP_HEADER}\n");
    for r in rows {
        writeln!(s, "{},{},{},{},{}", r.value, r.mean, r.std, r.runs, r.failures).unwrap();
    }
    std::fs::write(path, s)
}

pub const AUDIT_CSV_HEADER: &str = "edge_id,i,j,D,E,T,removed,injected";

#[derive(Debug, Clone, PartialEq)]
pub struct AuditEdge {
    pub edge_id: usize,
    pub i: usize,
    pub j: usize,
    pub distance: f64,
    pub energy: f64,
    pub torque: f64,
    /// Inside the first layer's removal cutoff.
    pub removed: bool,
    pub injected: bool,
}

/// Train one run (the first seed) and score every input edge with the
/// resulting parameters. With `attack` set, edges are injected first and
/// flagged in the output.
pub fn cmd_audit(
    cfg: &ExperimentConfig,
    attack: Option<(f64, InjectionStrategy)>,
) -> CliResult<Vec<AuditEdge>> {
    let clean = load(cfg)?;
    let s = cfg.seeds[0];
    let (d, record) = match attack {
        Some((rate, strategy)) => {
            let (a, r) =
                inject_adversarial(&clean, rate, strategy, seed::derive(s, &[0xA7])).map_err(config_err)?;
            (a, Some(r))
        }
        None => (clean, None),
    };
    let splits = make_splits(&d.labels, DEFAULT_FRACTIONS, s, cfg.stratified).map_err(runtime_err)?;
    let d = Dataset { splits, ..d };
    let out = train(&d, cfg, s).map_err(runtime_err)?;
    let table = first_layer_table(&d.features, &d.graph, &out.model).map_err(runtime_err)?;
    let cutoff =
        if cfg.variant.removes() { find_cutoff(&table, cfg.delta).map_err(runtime_err)? } else { 0 };
    let cut: HashSet<usize> = table.order()[..cutoff].iter().copied().collect();
    let rows: Vec<AuditEdge> = table
        .edges()
        .iter()
        .enumerate()
        .map(|(id, e)| AuditEdge {
            edge_id: id,
            i: e.edge.0,
            j: e.edge.1,
            distance: e.distance,
            energy: e.energy,
            torque: e.torque,
            removed: cut.contains(&id),
            injected: record.as_ref().is_some_and(|r| r.contains(e.edge)),
        })
        .collect();
    if let Some(path) = &cfg.output {
        write_audit_edges(&rows, path).map_err(runtime_err)?;
    }
    if cfg.output.is_none() {
        log::info!("audit produced {} rows; pass --out to write them", rows.len());
    }
    Ok(rows)
}

pub fn write_audit_edges(rows: &[AuditEdge], path: &Path) -> std::io::Result<()> {
    let mut s = format!("{AUDIT_CSV_HEADER}\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.edge_id, r.i, r.j, r.distance, r.energy, r.torque, r.removed, r.injected
        )
        .unwrap();
    }
    std::fs::write(path, s)
}

/// Train and write the training curve of one seed.
pub fn cmd_curve(cfg: &ExperimentConfig, path: &Path) -> CliResult<()> {
    let d = load(cfg)?;
    let s = cfg.seeds[0];
    let splits = make_splits(&d.labels, DEFAULT_FRACTIONS, s, cfg.stratified).map_err(runtime_err)?;
    let out = train(&Dataset { splits, ..d }, cfg, s).map_err(runtime_err)?;
    write_curve_csv(&out.curve, path).map_err(runtime_err)
}
