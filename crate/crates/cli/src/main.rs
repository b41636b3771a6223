//! Batch experiment runner: builds classes, runs duels and significance
//! sweeps, and replays the demonstration tables with their expectations
//! checked.
//!
//! Exit codes: 0 on success, 1 on usage or runtime errors, 2 when a checked
//! property fails.

mod commands;
mod demos;
mod report;
mod source;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use report::{emit, Failure, Format, Report};

#[derive(Parser, Debug)]
#[command(name = "conline", version, about = "Littlestone dimensions, mistake-bound games and their computability demos")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Tsv, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Littlestone dimension with a verified witness tree.
    Ldim(commands::LdimArgs),
    /// A learner against the exhaustive adversary: bound and worst run.
    Duel(commands::DuelArgs),
    /// Significance verdicts for every realizable history up to a length.
    Significance(commands::SignificanceArgs),
    /// The thresholds-plus-one-set gap table.
    DemoHdprime(demos::HdPrimeArgs),
    /// Forced a-optimal predictions equal the halting bits; B errs twice.
    DemoRerHalt(demos::RerHaltArgs),
    /// Dimension, decider and four-case significance table of the DR class.
    DemoDrExt(demos::DrArgs),
    /// Learner B and forced a-optimal predictions on the halting DR class.
    DemoDrHalt(demos::DrArgs),
    /// A toy learner replayed on its forcing sample.
    DemoSplit(demos::SplitArgs),
    /// Threshold search in the halting-time class.
    DemoInit(demos::InitArgs),
    /// Write a class file and its names sidecar.
    Build(commands::BuildArgs),
    /// Online-to-batch conversion of a learner on one sample.
    Convert(commands::ConvertArgs),
    /// Seeded PAC evaluation of the converted learner.
    PacEval(commands::PacArgs),
}

fn run(command: &Command) -> Result<Report, Failure> {
    match command {
        Command::Ldim(a) => commands::ldim_cmd(a),
        Command::Duel(a) => commands::duel_cmd(a),
        Command::Significance(a) => commands::significance_cmd(a),
        Command::DemoHdprime(a) => demos::demo_hdprime(a),
        Command::DemoRerHalt(a) => demos::demo_rer_halt(a),
        Command::DemoDrExt(a) => demos::demo_dr_ext(a),
        Command::DemoDrHalt(a) => demos::demo_dr_halt(a),
        Command::DemoSplit(a) => demos::demo_split(a),
        Command::DemoInit(a) => demos::demo_init(a),
        Command::Build(a) => commands::build_cmd(a),
        Command::Convert(a) => commands::convert_cmd(a),
        Command::PacEval(a) => commands::pac_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    emit(run(&cli.command), cli.format)
}
