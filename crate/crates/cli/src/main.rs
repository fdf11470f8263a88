//! `fbs-sim`: runs the flying base station latency pipeline on a scenario
//! file and writes JSON and CSV results.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fbs_core::pipeline::{access_csv, baselines_csv, sweep_csv};
use fbs_core::scenario::{desk_scenario, generate_synthetic_layout, table_one_scenario, AccessProcedure, Area};
use fbs_core::{access_compare, compare_baselines, load_scenario, run_pipeline, sweep_power, Error, ScenarioConfig, Strategy};
use manifest::RunManifest;
use serde_json::json;

#[derive(Parser)]
#[command(name = "fbs-sim", version, about = "Flying base station latency simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Route, access, per-waypoint design and latency totals.
    Run(Common),
    /// Proposed design over a list of FBS power budgets.
    SweepPower {
        #[command(flatten)]
        common: Common,
        /// Comma-separated budgets in dBm.
        #[arg(long, value_delimiter = ',', default_value = "36,38,40,42,44")]
        power_dbm: Vec<f64>,
    },
    /// Proposed design against the baselines on the same channels.
    CompareBaselines {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = BaselineChoice::All)]
        baseline: BaselineChoice,
    },
    /// Connection time per waypoint under both access procedures.
    AccessCompare(Common),
    /// Writes a scenario file.
    Generate {
        #[arg(long, value_enum, default_value_t = Preset::TableOne)]
        preset: Preset,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Turbine count for the synthetic preset.
        #[arg(long, default_value_t = 173)]
        turbines: usize,
        /// Waypoint count for the synthetic preset.
        #[arg(long, default_value_t = 7)]
        waypoints: usize,
        /// East-west extent of the synthetic preset, meters.
        #[arg(long, default_value_t = 53_640.0)]
        width: f64,
        /// North-south extent of the synthetic preset, meters.
        #[arg(long, default_value_t = 9_000.0)]
        height: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum)]
    access: Option<Access>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Access {
    Rap,
    Edt,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum BaselineChoice {
    All,
    Equal,
    Random,
    Omni,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// The 173-turbine, 7-waypoint synthetic mission.
    TableOne,
    /// Two waypoints with three turbines each.
    Desk,
    /// Synthetic layout from --turbines, --waypoints, --width and --height.
    Synthetic,
}

struct Failure {
    kind: &'static str,
    message: String,
    code: u8,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.kind() == "infeasible" { 3 } else { 1 };
        Failure {
            kind: e.kind(),
            message: e.to_string(),
            code,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig, Failure> {
        let source = fs::read_to_string(&self.scenario).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Failure {
                kind: "scenario_not_found",
                message: format!("{}: {e}", self.scenario.display()),
                code: 2,
            },
            _ => e.into(),
        })?;
        let mut config = load_scenario(&source).map_err(Error::from)?;
        if let Some(seed) = self.seed {
            config.rng_seed = seed;
        }
        if let Some(access) = self.access {
            config.access_procedure = match access {
                Access::Rap => AccessProcedure::FourStepRap,
                Access::Edt => AccessProcedure::TwoStepEdt,
            };
        }
        if let Some(n) = self.max_iters {
            config.solver.max_outer_iterations = n;
        }
        if let Some(tol) = self.tol {
            config.solver.convergence_tol = tol;
        }
        config.validate().map_err(Error::from)?;
        Ok(config)
    }
}

/// Writes output files and the manifest listing them.
struct Outputs {
    dir: PathBuf,
    manifest: RunManifest,
    started: Instant,
}

impl Outputs {
    fn new(dir: &Path, command: &str, config: &ScenarioConfig) -> Result<Self, Failure> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest::new(command, config),
            started: Instant::now(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.manifest.outputs.push(path);
        Ok(())
    }

    fn finish(mut self) -> Result<(), Failure> {
        self.manifest.runtime_seconds = self.started.elapsed().as_secs_f64();
        let path = self.dir.join("manifest.json");
        self.manifest.outputs.push(path.clone());
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(path, json + "\n")?;
        Ok(())
    }
}

fn cmd_run(common: &Common) -> Result<(), Failure> {
    let config = common.load()?;
    let mut out = Outputs::new(&common.out, "run", &config)?;
    let run = run_pipeline::<f64>(&config, Strategy::Proposed)?;
    out.write("latency.json", &(run.breakdown.to_json() + "\n"))?;
    out.write("latency.csv", &run.breakdown.to_csv())?;
    out.write("convergence.csv", &run.convergence_csv())?;
    out.write("route.csv", &run.route.to_csv())?;
    out.finish()?;
    println!("{}", run.breakdown.to_json());
    Ok(())
}

fn cmd_sweep(common: &Common, powers: &[f64]) -> Result<(), Failure> {
    let config = common.load()?;
    let mut out = Outputs::new(&common.out, "sweep-power", &config)?;
    let rows = sweep_power::<f64>(&config, powers)?;
    let csv = sweep_csv(&rows);
    out.write("sweep_power.csv", &csv)?;
    out.finish()?;
    print!("{csv}");
    Ok(())
}

fn cmd_compare(common: &Common, baseline: BaselineChoice) -> Result<(), Failure> {
    let config = common.load()?;
    let mut out = Outputs::new(&common.out, "compare-baselines", &config)?;
    let strategies: Vec<Strategy> = match baseline {
        BaselineChoice::All => Strategy::ALL.to_vec(),
        BaselineChoice::Equal => vec![Strategy::Proposed, Strategy::EqualPower],
        BaselineChoice::Random => vec![Strategy::Proposed, Strategy::RandomBeam],
        BaselineChoice::Omni => vec![Strategy::Proposed, Strategy::Omni],
    };
    let rows = compare_baselines::<f64>(&config, &strategies)?;
    let csv = baselines_csv(&rows);
    out.write("baselines.csv", &csv)?;
    out.finish()?;
    print!("{csv}");
    Ok(())
}

fn cmd_access(common: &Common) -> Result<(), Failure> {
    let config = common.load()?;
    let mut out = Outputs::new(&common.out, "access-compare", &config)?;
    let csv = access_csv(&access_compare::<f64>(&config));
    out.write("access.csv", &csv)?;
    out.finish()?;
    print!("{csv}");
    Ok(())
}

fn cmd_generate(
    preset: Preset,
    seed: u64,
    counts: (usize, usize),
    extent: (f64, f64),
    out: &Path,
) -> Result<(), Failure> {
    let mut config = match preset {
        Preset::TableOne => table_one_scenario(),
        Preset::Desk => desk_scenario(seed),
        Preset::Synthetic => {
            generate_synthetic_layout(counts.0, counts.1, Area::new(extent.0, extent.1), seed).map_err(Error::from)?
        }
    };
    config.rng_seed = seed;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, config.to_toml())?;
    Ok(())
}

fn thread_cap() -> Result<(), Failure> {
    let Ok(value) = std::env::var("FBS_SIM_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.parse().ok().filter(|n| *n > 0).ok_or_else(|| Failure {
        kind: "invalid_environment",
        message: format!("FBS_SIM_THREADS must be a positive integer, got {value:?}"),
        code: 1,
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure {
            kind: "invalid_environment",
            message: e.to_string(),
            code: 1,
        })
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    thread_cap()?;
    match cli.command {
        Command::Run(common) => cmd_run(&common),
        Command::SweepPower { common, power_dbm } => cmd_sweep(&common, &power_dbm),
        Command::CompareBaselines { common, baseline } => cmd_compare(&common, baseline),
        Command::AccessCompare(common) => cmd_access(&common),
        Command::Generate {
            preset,
            seed,
            turbines,
            waypoints,
            width,
            height,
            out,
        } => cmd_generate(preset, seed, (turbines, waypoints), (width, height), &out),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            println!("{}", json!({ "error": f.kind, "message": f.message }));
            ExitCode::from(f.code)
        }
    }
}
