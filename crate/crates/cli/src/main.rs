use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use torquegnn::config::parse_seeds;
use torquegnn::data::{import_geom_gcn, import_linqs, InjectionStrategy};
use torquegnn::ExperimentConfig;
use torquegnn_cli::{
    cmd_attack, cmd_audit, cmd_curve, cmd_sweep, cmd_train, CliError, CliResult, SweepParam,
};

#[derive(Parser)]
#[command(name = "torquegnn", version, about = "Torque-guided graph rewiring experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the configured variant once per seed and report mean ± std.
    Train {
        #[command(flatten)]
        common: Common,
        /// Also write the first seed's training curve here.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Inject edges and compare backbone and rewiring arms.
    Attack {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.25)]
        rate: f64,
        #[arg(long, default_value = "cross-class")]
        strategy: String,
    },
    /// Mean accuracy over seeds for each alpha or depth value.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["alpha", "depth"])]
        param: String,
        /// Comma separated, e.g. `0.005,0.05,0.5,0.9`.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Per-edge distance, energy and torque after one training run.
    Audit {
        #[command(flatten)]
        common: Common,
        /// Inject this fraction of edges before training.
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, default_value = "cross-class")]
        strategy: String,
    },
    /// Convert a published raw dataset into a manifest directory.
    Import {
        #[arg(long, value_enum)]
        format: ImportFormat,
        /// Directory with the node/edge files, or the `.content` file.
        #[arg(long)]
        raw: PathBuf,
        /// The `.cites` file (citation format only).
        #[arg(long)]
        cites: Option<PathBuf>,
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: PathBuf,
        /// Feature width when rows list non-zero column indices.
        #[arg(long)]
        feature_dim: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ImportFormat {
    GeomGcn,
    Linqs,
}

#[derive(Args)]
struct Common {
    /// `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Load a dataset's tuned hyperparameters before the config file.
    #[arg(long)]
    preset: Option<String>,
    /// Manifest path or `sbm:n=..,classes=..,p_in=..,p_out=..,dim=..,seed=..`.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// `0..10` or `1,2,3`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> CliResult<ExperimentConfig> {
        let cfg_err = |e: torquegnn::Error| CliError::Config(e.to_string());
        let mut cfg = ExperimentConfig::default();
        if let Some(p) = &self.preset {
            cfg.apply_preset(p).map_err(cfg_err)?;
        }
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            cfg.merge_str(&text, path).map_err(cfg_err)?;
        }
        if let Some(d) = &self.dataset {
            cfg.dataset = d.clone();
        }
        if let Some(v) = &self.variant {
            cfg.variant = v.parse().map_err(cfg_err)?;
        }
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        if let Some(s) = &self.seeds {
            cfg.seeds = parse_seeds(s).map_err(|e| CliError::Config(format!("--seeds {s:?}: {e}")))?;
        }
        if let Some(e) = self.epochs {
            cfg.epochs = e;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(l) = self.layers {
            cfg.layers = l;
        }
        if let Some(o) = &self.out {
            cfg.output = Some(o.clone());
        }
        cfg.validate().map_err(cfg_err)?;
        Ok(cfg)
    }
}

fn strategy(s: &str) -> CliResult<InjectionStrategy> {
    s.parse().map_err(|e: torquegnn::Error| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train { common, curve } => {
            let cfg = common.resolve()?;
            let report = cmd_train(&cfg)?;
            if let Some(p) = curve {
                cmd_curve(&cfg, &p)?;
            }
            if report.has_failures() {
                return Err(CliError::Runtime("at least one run failed; see the report".into()));
            }
        }
        Command::Attack { common, rate, strategy: s } => {
            let report = cmd_attack(&common.resolve()?, rate, strategy(&s)?)?;
            if let Some(auc) = report.arm(torquegnn_cli::ARM_WITH_ATTACKED).and_then(|a| a.mean_detection_auc)
            {
                println!("injected-edge detection AUC {auc:.3}");
            }
            if report.has_failures() {
                return Err(CliError::Runtime("at least one run failed; see the report".into()));
            }
        }
        Command::Sweep { common, param, values } => {
            let param: SweepParam = param.parse()?;
            let rows = cmd_sweep(&common.resolve()?, param, &values)?;
            if rows.iter().any(|r| r.failures > 0) {
                return Err(CliError::Runtime("some sweep runs failed".into()));
            }
        }
        Command::Audit { common, rate, strategy: s } => {
            let cfg = common.resolve()?;
            let attack = match rate {
                Some(r) => Some((r, strategy(&s)?)),
                None => None,
            };
            let rows = cmd_audit(&cfg, attack)?;
            if cfg.output.is_none() {
                println!("{}", torquegnn_cli::AUDIT_CSV_HEADER);
                for r in rows {
                    println!(
                        "{},{},{},{},{},{},{},{}",
                        r.edge_id, r.i, r.j, r.distance, r.energy, r.torque, r.removed, r.injected
                    );
                }
            }
        }
        Command::Import { format, raw, cites, name, out, feature_dim } => {
            let manifest = match format {
                ImportFormat::GeomGcn => import_geom_gcn(&raw, &name, &out, feature_dim),
                ImportFormat::Linqs => {
                    let cites =
                        cites.ok_or_else(|| CliError::Config("--cites is required for linqs".into()))?;
                    import_linqs(&raw, &cites, &name, &out)
                }
            }
            .map_err(|e| CliError::Runtime(e.to_string()))?;
            println!("{}", manifest.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(v) = std::env::var("TORQUEGNN_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the worker pool: {e}");
                }
            }
            _ => {
                eprintln!("configuration error: TORQUEGNN_THREADS={v:?} is not a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
