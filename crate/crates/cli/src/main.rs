use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nemsamp::{parse_unchecked, run, CliError, Command, Format, RunOptions, Scenario};
use nemsamp_core::Preset;

#[derive(Parser)]
#[command(
    name = "nemsamp",
    version,
    about = "NEMS discrete-time parametric amplifier simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Scenario file (`section.key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `run.out_dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Device preset; replaces the scenario's device section.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Format of the summary printed on stdout.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Derived device constants and comparison with the published table.
    DeviceReport,
    /// Quasi-static up/down C-V sweep.
    CvSweep,
    /// Beam dynamics under a step or pulse drive.
    Transient,
    /// Amplifier waveforms for the scenario's stimulus.
    Amplify,
    /// DC gain versus input amplitude.
    GainSweep,
    /// Dynamic power estimate.
    Power,
}

#[derive(ValueEnum, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

fn load(cli: &Cli) -> Result<Scenario, CliError> {
    let mut scenario = match &cli.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
            parse_unchecked(&text)?
        }
        None => Scenario::default(),
    };
    if let Some(name) = &cli.preset {
        scenario.use_preset(parse_preset(name)?);
    }
    scenario.validate()?;
    Ok(scenario)
}

fn parse_preset(name: &str) -> Result<Preset, CliError> {
    Preset::from_name(name).ok_or_else(|| CliError::Constraint {
        message: format!(
            "unknown preset `{name}` (expected one of large, lv-high-gain, lv-low-gain)"
        ),
    })
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    let scenario = load(cli)?;
    let command = match cli.command {
        Cmd::DeviceReport => Command::DeviceReport,
        Cmd::CvSweep => Command::CvSweep,
        Cmd::Transient => Command::Transient,
        Cmd::Amplify => Command::Amplify,
        Cmd::GainSweep => Command::GainSweep,
        Cmd::Power => Command::Power,
    };
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let report = run(
        command,
        &scenario,
        RunOptions {
            jobs: cli.jobs,
            format,
        },
    )?;
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| scenario.out_dir());
    report.outputs.commit(&out_dir)?;
    Ok(report.render(format))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
