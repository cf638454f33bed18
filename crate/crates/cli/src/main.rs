use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wormbot::profile::{fingerprint, reference_params, MODEL_REVISION};
use wormbot::scenario::{parse_config, run_scenario, ConfigError, RunError, RunOptions};

#[derive(Parser)]
#[command(name = "wormbot", version = version_string(), about = "Amphibious earthworm robot simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a maneuver scenario.
    Simulate(RunArgs),
    /// Solve a steady-state scenario.
    Steady(RunArgs),
    /// Run a thrust or turn-map sweep.
    Sweep(RunArgs),
    /// Simulate a peristaltic gait.
    Gait(RunArgs),
    /// Fit damping coefficients to steady targets.
    Calibrate(RunArgs),
    /// Compute spheroid added mass.
    AddedMass(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration (TOML).
    config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn version_string() -> String {
    format!(
        "{} (model revision {}, default profile {})",
        env!("CARGO_PKG_VERSION"),
        MODEL_REVISION,
        fingerprint(&reference_params())
    )
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::Simulate(a) => ("maneuver", a),
            Command::Steady(a) => ("steady", a),
            Command::Sweep(a) => ("sweep", a),
            Command::Gait(a) => ("gait", a),
            Command::Calibrate(a) => ("calibrate", a),
            Command::AddedMass(a) => ("added_mass", a),
        }
    }
}

fn read_config(path: &Path) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|source| {
        RunError::Output(wormbot::scenario::OutputError::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn execute(command: &Command) -> Result<Vec<PathBuf>, RunError> {
    let (expected, args) = command.parts();
    let text = read_config(&args.config)?;
    let config = parse_config(&text)?;
    if config.scenario.kind() != expected {
        return Err(ConfigError::WrongScenario {
            expected: expected.into(),
            found: config.scenario.kind().into(),
        }
        .into());
    }
    let options = RunOptions {
        out_dir: args.out.clone(),
        protected: vec![args.config.clone()],
    };
    Ok(run_scenario(&config, &options)?.files)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let path = cli.command.parts().1.config.display().to_string();
            match &e {
                RunError::Config(c) => eprintln!("{path}: config error [{}]: {c}", c.code()),
                other => eprintln!("{path}: {other}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
