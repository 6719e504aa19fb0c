use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use capa_core::exec::Execution;
use capa_core::sweep::{export_csv, mean_wssr, parse_values, run_sweep, write_csv, SimConfig, SweepKind, SweepSpec};
use capa_core::Scheme;
use clap::Parser;

/// Monte-Carlo sweeps of secure beamforming schemes for continuous and
/// discrete apertures, written as CSV.
#[derive(Debug, Parser)]
#[command(name = "capa-secbeam", version)]
struct Args {
    /// power, aperture, num-luts, num-eves, convergence or single
    kind: String,
    /// JSON file with `scenario` and `fp` sections; omitted fields keep their defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random layouts per sweep value
    #[arg(long)]
    trials: Option<usize>,
    /// Seed of the first trial; trial `t` uses `seed + t`
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated scheme names (default: all six)
    #[arg(long)]
    schemes: Option<String>,
    /// Sweep values, `a,b,c` or geometric `start:stop:count`
    #[arg(long)]
    values: Option<String>,
    /// Worker threads for the parallel pool
    #[arg(long)]
    threads: Option<usize>,
    /// Run every trial on the calling thread
    #[arg(long)]
    sequential: bool,
    /// Fill the wall_time_ms column
    #[arg(long)]
    timing: bool,
    /// Print mean WSSR per scheme and value to stderr
    #[arg(long)]
    summary: bool,
}

fn build_spec(args: &Args) -> Result<SweepSpec> {
    let kind = SweepKind::parse(&args.kind)?;
    let config = match &args.config {
        Some(path) => SimConfig::from_json_file(path).with_context(|| format!("reading config {}", path.display()))?,
        None => SimConfig::default(),
    };
    let mut spec = SweepSpec::new(kind, config);
    if let Some(v) = &args.values {
        spec.values = parse_values(v)?;
    }
    if let Some(s) = &args.schemes {
        spec.schemes = Scheme::parse_list(s)?;
    }
    spec.trials = match (args.trials, kind) {
        (Some(t), _) => t,
        (None, SweepKind::Single) => 1,
        (None, _) => spec.trials,
    };
    spec.base_seed = args.seed;
    spec.record_timing = args.timing;
    spec.validate()?;
    Ok(spec)
}

fn run(args: Args) -> Result<()> {
    let spec = build_spec(&args)?;
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    let records = Execution::install(args.threads, || run_sweep(&spec, exec))?;
    match &args.out {
        Some(path) => export_csv(&records, path).with_context(|| format!("writing {}", path.display()))?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(&records, &mut lock)?;
            lock.flush()?;
        }
    }
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed, see the error column", records.len());
    }
    if args.summary {
        for (scheme, value, mean, count) in mean_wssr(&records) {
            eprintln!("{scheme:>9} {value:>12.4e} {mean:>10.4} ({count} runs)");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
