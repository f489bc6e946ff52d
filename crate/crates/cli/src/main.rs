use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vicsek_core::harness::{
    config::normalize_key, exit, init_thread_pool, read_config_file, run_preset, ExperimentConfig, HarnessError, Preset,
};

#[derive(Parser)]
#[command(name = "vicsek", version, about = "Kinetic Vicsek experiments: PDE solvers, agents and presets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args)]
struct Common {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` parameter, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Full kinetic equation on the 3-torus.
    Kinetic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        nu: Option<f64>,
        /// n1,n2,ntheta
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// One trajectory of the spatially homogeneous equation.
    Homogeneous {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        n_theta: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Stationary states and stability over a range of κ/ν.
    PhaseDiagram {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        ratio_min: Option<f64>,
        #[arg(long)]
        ratio_max: Option<f64>,
        /// Number of ratios, endpoints included.
        #[arg(long)]
        ratio_steps: Option<usize>,
    },
    /// Agent-based simulation.
    Agents {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Any preset by name: linear-ed, mixing, kinetic, homogeneous,
    /// phase-diagram, agents, compare.
    Preset {
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

fn flag<T: ToString>(key: &str, v: Option<T>) -> Option<(String, String)> {
    v.map(|v| (key.to_string(), v.to_string()))
}

fn build_config(cli: Cli) -> Result<ExperimentConfig, HarnessError> {
    let (preset, common, flags): (Preset, Common, Vec<Option<(String, String)>>) = match cli.command {
        Command::Kinetic { common, kappa, nu, grid, dt, t_end, snapshot_every } => (
            Preset::Kinetic,
            common,
            vec![
                flag("kappa", kappa),
                flag("nu", nu),
                flag("grid", grid),
                flag("dt", dt),
                flag("t_end", t_end),
                flag("snapshot_every", snapshot_every),
            ],
        ),
        Command::Homogeneous { common, kappa, nu, n_theta, dt, t_end } => (
            Preset::Homogeneous,
            common,
            vec![flag("kappa", kappa), flag("nu", nu), flag("n_theta", n_theta), flag("dt", dt), flag("t_end", t_end)],
        ),
        Command::PhaseDiagram { common, ratio_min, ratio_max, ratio_steps } => (
            Preset::PhaseDiagram,
            common,
            vec![flag("ratio_min", ratio_min), flag("ratio_max", ratio_max), flag("ratio_steps", ratio_steps)],
        ),
        Command::Agents { common, n, kappa, nu, dt, t_end } => (
            Preset::Agents,
            common,
            vec![flag("n", n), flag("kappa", kappa), flag("nu", nu), flag("dt", dt), flag("t_end", t_end)],
        ),
        Command::Preset { name, common } => (name.parse()?, common, Vec::new()),
    };

    let mut map: BTreeMap<String, String> = match &common.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    if let Some(named) = map.get("preset") {
        if named.trim() != preset.name() {
            return Err(HarnessError::Config(format!(
                "config file names preset `{named}` but the command runs `{}`",
                preset.name()
            )));
        }
    }
    map.insert("preset".into(), preset.name().into());
    for item in &common.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("--set expects KEY=VALUE, got `{item}`")))?;
        map.insert(normalize_key(k), v.trim().to_string());
    }
    for (k, v) in flags.into_iter().flatten() {
        map.insert(k, v);
    }
    if let Some(out) = common.out {
        map.insert("out".into(), out.display().to_string());
    }
    if let Some(seed) = common.seed {
        map.insert("seed".into(), seed.to_string());
    }
    ExperimentConfig::from_map(map)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    init_thread_pool()?;
    let config = build_config(cli)?;
    let report = run_preset(&config)?;
    for c in &report.checks {
        let status = if c.passed { "ok" } else if c.assertion { "FAIL" } else { "note" };
        println!("[{status}] {}: {}", c.name, c.detail);
    }
    println!("wrote {} files to {}", report.files.len(), config.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::SUCCESS as u8),
        Err(e) => {
            eprintln!("vicsek: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
