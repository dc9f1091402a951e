//! Command-line front end: one subcommand per scenario.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};
use emission::experiments::{
    exit_code, run_scenario, OutputFormat, RunOptions, ScenarioConfig, ScenarioKind,
    EXIT_INVALID_CONFIG, EXIT_OK, EXIT_TOLERANCE,
};
use emission::params::UnitMode;
use emission::EmissionError;

const SUBCOMMANDS: [(ScenarioKind, &str); 8] = [
    (
        ScenarioKind::Roots,
        "Roots of the characteristic cubic and the decay timescale",
    ),
    (ScenarioKind::Kernels, "Response kernels over the time grid"),
    (
        ScenarioKind::Spectrum,
        "Closed-form emission rates over the frequency grid",
    ),
    (
        ScenarioKind::FiniteTime,
        "Finite-time emission rate over frequency and time grids",
    ),
    (
        ScenarioKind::OracleCheck,
        "Check kernels and rates against brute-force oracles",
    ),
    (
        ScenarioKind::CompareOrders,
        "Compare the free-particle rates obtained with different limit orders",
    ),
    (
        ScenarioKind::ConvergenceScan,
        "Approach of the finite-time rate to its asymptote",
    ),
    (
        ScenarioKind::McEstimate,
        "Monte-Carlo estimate of the spectrum from noisy trajectories",
    ),
];

fn cli() -> Command {
    let mut cmd = Command::new("emission")
        .about("Photon emission of a charged particle driven by colored noise")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_name("PATH")
                .value_parser(value_parser!(PathBuf))
                .help("Scenario configuration (JSON with unit annotations); built-in defaults if absent"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .global(true)
                .value_name("DIR")
                .value_parser(value_parser!(PathBuf))
                .help("Output directory (default: config, then $EMISSION_OUT_DIR, then ./out)"),
        )
        .arg(
            Arg::new("format")
                .long("format")
                .global(true)
                .value_parser(["csv", "json"])
                .default_value("csv")
                .help("Data file format"),
        )
        .arg(
            Arg::new("seed")
                .long("seed")
                .global(true)
                .value_name("N")
                .value_parser(value_parser!(u64))
                .help("Master seed for Monte-Carlo runs"),
        )
        .arg(
            Arg::new("scaled")
                .long("scaled")
                .global(true)
                .action(ArgAction::SetTrue)
                .conflicts_with("si")
                .help("Report frequencies and times in natural units, rates as shapes"),
        )
        .arg(
            Arg::new("si")
                .long("si")
                .global(true)
                .action(ArgAction::SetTrue)
                .help("Report SI values (default)"),
        );
    for (kind, about) in SUBCOMMANDS {
        cmd = cmd.subcommand(Command::new(kind.name()).about(about));
    }
    cmd
}

fn run(kind: ScenarioKind, m: &ArgMatches) -> Result<i32, EmissionError> {
    let mut config = match m.get_one::<PathBuf>("config") {
        Some(p) => ScenarioConfig::from_path(p)?,
        None => ScenarioConfig::builtin(kind),
    };
    if let Some(seed) = m.get_one::<u64>("seed") {
        if let Some(e) = config.ensemble.as_mut() {
            e.master_seed = *seed;
        }
    }
    let format = match m.get_one::<String>("format").map(String::as_str) {
        Some("json") => OutputFormat::Json,
        _ => OutputFormat::Csv,
    };
    let opts = RunOptions {
        out_dir: RunOptions::resolve_out_dir(m.get_one::<PathBuf>("out").cloned(), &config),
        format,
        units: if m.get_flag("scaled") {
            UnitMode::Scaled
        } else {
            UnitMode::Si
        },
    };
    let outcome = run_scenario(&config, Some(kind), &opts)?;
    // a closed pipe (e.g. `| head`) must not turn a finished run into a panic
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(outcome.summary.as_bytes());
    for f in &outcome.files {
        let _ = writeln!(out, "wrote {}", f.display());
    }
    Ok(if outcome.passed {
        EXIT_OK
    } else {
        EXIT_TOLERANCE
    })
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() {
                EXIT_INVALID_CONFIG
            } else {
                EXIT_OK
            };
            return ExitCode::from(code as u8);
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let kind = SUBCOMMANDS
        .iter()
        .find(|(k, _)| k.name() == name)
        .map(|(k, _)| *k)
        .expect("registered subcommand");
    let code = match run(kind, sub) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
