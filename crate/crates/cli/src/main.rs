//! `nashflow`: validate instances, compute and certify Nash flows over time,
//! and export breakpoint tables for plotting.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nashflow::{ExtRat, Rat};

use commands::Failure;

#[derive(Parser, Debug)]
#[command(
    name = "nashflow",
    version,
    about = "Nash flows over time with several sources and sinks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check an instance file and print a summary.
    Validate {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Solve and certify a single thin-flow problem.
    ThinFlow {
        /// Thin-flow problem JSON.
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Construct the Nash flow, certify it and write the profile.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-certify a stored profile, or solve an instance and certify it.
    Check {
        #[command(flatten)]
        input: ProfileInput,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Split a profile into one subflow per sink and certify the split.
    Decompose {
        #[command(flatten)]
        input: ProfileInput,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write breakpoint tables of labels, cumulative flows and rates.
    Export {
        #[command(flatten)]
        input: ProfileInput,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Include the super sink and its arcs.
        #[arg(long)]
        keep_super_sink: bool,
        /// Append per-sink subflow rows.
        #[arg(long)]
        subflows: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a random valid instance.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        nodes: usize,
        #[arg(long, default_value_t = 2)]
        sources: usize,
        #[arg(long, default_value_t = 2)]
        sinks: usize,
        #[arg(long, default_value_t = 3)]
        extra_arcs: usize,
        #[arg(long, default_value_t = 1)]
        back_arcs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct ProfileInput {
    /// Instance JSON; it is solved first.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Profile JSON written by `solve`.
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EngineArgs {
    /// Last particle to compute, a positive rational or `inf`.
    #[arg(long, default_value = "1000", value_parser = parse_phi_max)]
    phi_max: ExtRat,
    #[arg(long, default_value_t = nashflow::engine::DEFAULT_PHASE_CAP, value_parser = parse_phase_cap)]
    phase_cap: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_phi_max(s: &str) -> Result<ExtRat, String> {
    let v: ExtRat = s.parse().map_err(|e| format!("{e}"))?;
    if v <= ExtRat::Finite(Rat::zero()) {
        return Err("must be positive".into());
    }
    Ok(v)
}

fn parse_phase_cap(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NASHFLOW_LOG", "warn")).init();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(report)) => {
            eprintln!("{report}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use nashflow::rat;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn phi_max_accepts_rationals_and_infinity() {
        assert_eq!(parse_phi_max("inf").unwrap(), ExtRat::Infinity);
        assert_eq!(parse_phi_max("3/2").unwrap(), ExtRat::Finite(rat(3, 2)));
        assert!(parse_phi_max("0").is_err());
        assert!(parse_phi_max("-1").is_err());
        assert!(parse_phi_max("x").is_err());
    }

    #[test]
    fn phase_cap_is_positive() {
        assert_eq!(parse_phase_cap("5").unwrap(), 5);
        assert!(parse_phase_cap("0").is_err());
    }

    #[test]
    fn check_takes_exactly_one_input() {
        assert!(Cli::try_parse_from(["nashflow", "check"]).is_err());
        assert!(
            Cli::try_parse_from(["nashflow", "check", "--instance", "a", "--profile", "b"])
                .is_err()
        );
        assert!(Cli::try_parse_from(["nashflow", "check", "--profile", "b"]).is_ok());
    }
}
