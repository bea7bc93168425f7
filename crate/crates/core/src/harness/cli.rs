//! `tngeo` command line. Exit codes: 0 success, 1 configuration or usage
//! error, 2 runtime error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::config::ExperimentConfig;
use super::report::{report, summary_csv, summary_table};
use super::sweep::{sweep, SweepTable};
use crate::compactify::compactify;
use crate::error::{Error, Result};
use crate::geometry::{build, diameter, sizes, Family, GeometrySpec};
use crate::optimizer::{run_trial, OptimConfig};
use crate::surrogate::TargetState;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "tngeo", version, about = "Train tensor networks of different geometries on target states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a target state file (binary plus JSON sidecar).
    Generate(GenerateArgs),
    /// Train one network and print the result.
    Train(TrainArgs),
    /// Run every cell of an experiment config and write CSV plus JSONL.
    Sweep(SweepArgs),
    /// Aggregate a sweep CSV into per-group statistics.
    Report(ReportArgs),
    /// Print structural metrics of a geometry.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TargetKind {
    Random,
    Hidden,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "random")]
    target: TargetKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    p: usize,
    /// Geometry of the hidden network.
    #[arg(long, default_value = "mps")]
    family: Family,
    /// Bond dimension of the hidden network.
    #[arg(long, default_value_t = 2)]
    chi: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    p: usize,
    /// Bond dimension; defaults to the maximal Schmidt rank p^(n/2).
    #[arg(long)]
    chi: Option<usize>,
    #[arg(long)]
    compact: bool,
    /// `random`, `hidden`, or the path of a target file.
    #[arg(long, default_value = "random")]
    target: String,
    #[arg(long)]
    target_family: Option<Family>,
    #[arg(long, default_value_t = 2)]
    target_chi: usize,
    #[arg(long, default_value_t = 0)]
    target_seed: u64,
    /// Seed for the initial network.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON file with optimizer settings.
    #[arg(long)]
    optim: Option<PathBuf>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Write the training curve as CSV.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Print the full result as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// JSONL mirror; defaults to the CSV path with a `.jsonl` extension.
    #[arg(long)]
    jsonl: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    threshold: f64,
    /// Where to write the summary CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    chi: usize,
    #[arg(long, default_value_t = 2)]
    p: usize,
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a, out),
        Command::Train(a) => train(a, out),
        Command::Sweep(a) => run_sweep(a, out),
        Command::Report(a) => run_report(a, out),
        Command::Inspect(a) => inspect(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn read_input(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn generate(a: GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let target = match a.target {
        TargetKind::Random => TargetState::full_random(a.n, a.p, a.seed)?,
        TargetKind::Hidden => {
            let spec = GeometrySpec { family: a.family, n: a.n, chi: a.chi, p: a.p };
            spec.validate()?;
            TargetState::hidden_tn(&spec, a.seed)?
        }
    };
    target.save(&a.out)?;
    writeln!(out, "wrote {} ({} amplitudes)", a.out.display(), target.state().len())?;
    Ok(())
}

fn train(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let mut spec = GeometrySpec { family: a.family, n: a.n, chi: 1, p: a.p };
    spec.chi = a.chi.unwrap_or_else(|| spec.schmidt_bound());
    spec.validate()?;
    if a.compact && !a.family.is_tree() {
        return Err(Error::Config(format!("{} has loops and cannot be compacted", a.family)));
    }
    let target = match a.target.as_str() {
        "random" => TargetState::full_random(a.n, a.p, a.target_seed)?,
        "hidden" => {
            let family = a.target_family.unwrap_or(a.family);
            let t = GeometrySpec { family, n: a.n, chi: a.target_chi, p: a.p };
            t.validate()?;
            TargetState::hidden_tn(&t, a.target_seed)?
        }
        path => {
            let path = Path::new(path);
            if !path.exists() {
                return Err(Error::Config(format!("target file {} not found", path.display())));
            }
            TargetState::load(path)?
        }
    };
    let mut cfg = match &a.optim {
        Some(p) => serde_json::from_str::<OptimConfig>(&read_input(p)?)
            .map_err(|e| Error::Config(format!("malformed optimizer settings: {e}")))?,
        None => OptimConfig::default(),
    };
    if let Some(m) = a.max_iters {
        cfg.max_iters = m;
    }
    cfg.validate()?;

    let r = run_trial(&target, &spec, a.compact, a.seed, &cfg)?;
    if let Some(path) = &a.history {
        std::fs::write(path, r.history_csv())?;
    }
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?;
    } else {
        writeln!(out, "geometry:         {spec} compact={}", a.compact)?;
        writeln!(out, "seed:             {}", r.seed)?;
        writeln!(out, "final infidelity: {:.6e}", r.final_infidelity)?;
        writeln!(out, "iterations:       {}", r.iterations_used)?;
        writeln!(out, "stop reason:      {}", r.converged)?;
        writeln!(out, "wall time ms:     {:.1}", r.wall_time_ms)?;
        writeln!(out, "largest tensor:   {}", r.metrics.largest_tensor)?;
        writeln!(out, "total elements:   {}", r.metrics.total_elems)?;
        writeln!(out, "diameter:         {}", r.metrics.diameter)?;
        if let Some(d) = &r.diagnostic {
            writeln!(out, "diagnostic:       {d}")?;
        }
    }
    Ok(())
}

fn run_sweep(a: SweepArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let table = sweep(&cfg)?;
    let jsonl = a.jsonl.unwrap_or_else(|| a.out.with_extension("jsonl"));
    table.save(&a.out, &jsonl)?;
    let failed = table.rows.iter().filter(|r| r.converged_reason == super::sweep::FAILED).count();
    writeln!(out, "wrote {} rows to {} and {} ({failed} failed)", table.rows.len(), a.out.display(), jsonl.display())?;
    Ok(())
}

fn run_report(a: ReportArgs, out: &mut dyn Write) -> Result<()> {
    if !(a.threshold > 0.0) {
        return Err(Error::Config("threshold must be positive".into()));
    }
    let table = SweepTable::from_csv(&read_input(&a.input)?).map_err(|e| Error::Config(e.to_string()))?;
    if table.rows.is_empty() {
        return Err(Error::Config(format!("{} has no rows", a.input.display())));
    }
    let groups = report(&table, a.threshold);
    write!(out, "{}", summary_table(&groups))?;
    if let Some(path) = &a.summary {
        std::fs::write(path, summary_csv(&groups))?;
    }
    Ok(())
}

fn inspect(a: InspectArgs, out: &mut dyn Write) -> Result<()> {
    let spec = GeometrySpec { family: a.family, n: a.n, chi: a.chi, p: a.p };
    spec.validate()?;
    let net = build(&spec, 0)?;
    let s = sizes(&net);
    let dims: Vec<String> = net.bond_dims().iter().map(usize::to_string).collect();
    writeln!(out, "geometry:       {spec}")?;
    writeln!(out, "nodes:          {}", net.num_nodes())?;
    writeln!(out, "diameter:       {}", diameter(&net)?)?;
    writeln!(out, "largest tensor: {}", s.largest_tensor)?;
    writeln!(out, "total elements: {}", s.total_elems)?;
    writeln!(out, "bond dims:      {}", dims.join(" "))?;
    if net.is_tree() {
        let c = compactify(&net, spec.chi)?;
        let cs = sizes(&c);
        writeln!(
            out,
            "compacted:      nodes {} diameter {} largest tensor {} total elements {}",
            c.num_nodes(),
            diameter(&c)?,
            cs.largest_tensor,
            cs.total_elems
        )?;
    } else {
        writeln!(out, "compacted:      not applicable (network has loops)")?;
    }
    Ok(())
}
