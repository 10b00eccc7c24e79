//! Scenario files and command implementations behind the `nemsamp` binary.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

pub use commands::{Format, Report, RunOptions};
pub use error::CliError;
pub use scenario::{parse_scenario, parse_unchecked, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    DeviceReport,
    CvSweep,
    Transient,
    Amplify,
    GainSweep,
    Power,
}

/// Runs one command on a scenario without touching the filesystem.
pub fn run(command: Command, scenario: &Scenario, options: RunOptions) -> Result<Report, CliError> {
    match command {
        Command::DeviceReport => commands::device_report(scenario),
        Command::CvSweep => commands::cv(scenario),
        Command::Transient => commands::transient_cmd(scenario),
        Command::Amplify => commands::amplify(scenario),
        Command::GainSweep => commands::gain_sweep(scenario, options),
        Command::Power => commands::power(scenario),
    }
}
