mod render;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use gftc::density::Request;
use gftc::ifs::parse_spec;
use gftc::pipeline::{analyze, densities, Options};
use gftc::Error;

use crate::report::{Format, RunReport};

/// Hausdorff and packing measures of self-similar sets on the line.
#[derive(Parser)]
#[command(name = "gftc", version)]
struct Cli {
    /// Emit the JSON report.
    #[arg(long, global = true, conflicts_with = "text")]
    json: bool,
    /// Emit a plain text summary (default).
    #[arg(long, global = true)]
    text: bool,
    /// Include wall-clock timings in the report.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Overlap types, dimension, measure and assumption checks.
    Analyze(Common),
    /// Maximal density and the Hausdorff measure.
    Hausdorff(Search),
    /// Minimal density and the packing measure.
    Packing(Search),
    /// Both assumptions only; exits 6 unless both hold.
    Check(Common),
    /// SVG diagram of the first generations of islands.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        levels: usize,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    config: PathBuf,
    #[arg(long, default_value_t = gftc::numerics::DEFAULT_PRECISION)]
    precision_bits: u32,
    /// Generations examined before giving up on finite type.
    #[arg(long, default_value_t = gftc::typing::DEFAULT_MAX_GENERATIONS)]
    type_generations: usize,
}

#[derive(Args)]
struct Search {
    #[command(flatten)]
    common: Common,
    /// Largest generation the density search may reach.
    #[arg(long, default_value_t = gftc::density::DEFAULT_MAX_GENERATION)]
    max_generation: usize,
    /// Wall-clock budget for the density search, in seconds.
    #[arg(long, default_value_t = 300.0)]
    budget: f64,
    /// Proceed even when Assumption B is not verified.
    #[arg(long)]
    assume_b: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::RatioOutOfRange { .. }
        | Error::NegativeRatio { .. }
        | Error::ImageOutOfUnit { .. }
        | Error::Normalization(_)
        | Error::SymbolOutOfRange { .. } => 2,
        Error::GftcNotConfirmed { .. } | Error::RefinementUnstable(_) | Error::GenerationTooLarge { .. } => 3,
        Error::NotIrreducible => 4,
        Error::ThresholdInfeasible { .. } => 5,
        Error::AssumptionA { .. } | Error::AssumptionB(_) | Error::RelaxedGuard(_) => 6,
        Error::BudgetExceeded { .. } | Error::Undecidable { .. } | Error::Inconclusive { .. } => 7,
        _ => 1,
    }
}

fn options(common: &Common) -> Options {
    Options { type_generations: common.type_generations, precision_bits: common.precision_bits, ..Options::default() }
}

fn load(path: &Path) -> gftc::Result<gftc::ifs::IfsSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_spec(&text)
}

fn run(cli: &Cli, fmt: Format) -> gftc::Result<()> {
    let (name, common) = match &cli.command {
        Command::Analyze(c) => ("analyze", c),
        Command::Check(c) => ("check", c),
        Command::Hausdorff(s) => ("hausdorff", &s.common),
        Command::Packing(s) => ("packing", &s.common),
        Command::Render { common, .. } => ("render", common),
    };
    let spec = load(&common.config)?;
    if let Command::Render { levels, out, .. } = &cli.command {
        let svg = render::render(&spec, *levels, common.type_generations)?;
        std::fs::write(out, svg).map_err(|e| Error::Config(format!("{}: {e}", out.display())))?;
        return Ok(());
    }
    let mut opts = options(common);
    let analysis = analyze(spec, &opts)?;
    let mut rep = RunReport::new(name, &analysis);
    match &cli.command {
        Command::Hausdorff(s) | Command::Packing(s) => {
            opts.max_generation = s.max_generation;
            opts.budget = Some(Duration::from_secs_f64(s.budget));
            opts.assume_b = s.assume_b;
            let req = Request { hausdorff: name == "hausdorff", packing: name == "packing" };
            let run = densities(&analysis, req, &opts)?;
            rep.attach(run);
        }
        Command::Check(_) => {
            let ok = rep.assumptions_hold();
            rep.emit(fmt, cli.timings);
            if !ok {
                return Err(Error::AssumptionB("assumptions do not both hold".into()));
            }
            return Ok(());
        }
        _ => {}
    }
    rep.emit(fmt, cli.timings);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let fmt = if cli.json { Format::Json } else { Format::Text };
    match run(&cli, fmt) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            report::emit_error(fmt, &e, code, matches!(cli.command, Command::Check(_)));
            ExitCode::from(code)
        }
    }
}
