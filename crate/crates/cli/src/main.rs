use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use uvftc::allocation::AllocatorKind;
use uvftc::bundle::{plot_panel, read_bundle_series, write_bundle, Panel};
use uvftc::config::{parse_config, set_param};
use uvftc::par::Execution;
use uvftc::sim::presets::{names, preset};
use uvftc::sim::{compare_runs, run_batch, run_scenario, Scenario, SimOutput};

/// Fault-tolerant trajectory tracking simulator for a 4-DOF underwater vehicle.
#[derive(Debug, Parser)]
#[command(name = "uvftc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write a result bundle.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory (default: runs/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a comparison table of result bundles; the first is the reference.
    Compare {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
    /// Run one scenario per value of a parameter, in parallel.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Dotted parameter path, e.g. `backstep.k` or `allocator`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Parent directory; each run goes to `<out>/<param>=<value>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract the columns of one figure panel from a result bundle as CSV.
    Plotdata {
        dir: PathBuf,
        /// a = trajectory, b = errors, c = velocities.
        #[arg(long, default_value = "a")]
        panel: String,
        /// Write to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Path to a TOML scenario file, or a preset name.
    target: String,
    /// Scenario seed; falls back to UVFTC_SEED, then to the file.
    #[arg(long, env = "UVFTC_SEED")]
    seed: Option<u64>,
    /// Shortened run: a fifth of the duration at dt = 0.02.
    #[arg(long)]
    fast: bool,
    /// Allocator override: goa, pinv-t or pinv-s.
    #[arg(long)]
    allocator: Option<AllocatorKind>,
    /// Seed for the swarm search only.
    #[arg(long)]
    goa_seed: Option<u64>,
}

impl ScenarioArgs {
    fn label(&self) -> String {
        Path::new(&self.target).file_stem().map_or_else(|| self.target.clone(), |s| s.to_string_lossy().into_owned())
    }

    fn resolve(&self) -> Result<Scenario> {
        let path = Path::new(&self.target);
        let mut s = if path.is_file() {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).with_context(|| format!("in {}", path.display()))?
        } else {
            preset(&self.target)?
        };
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(kind) = self.allocator {
            s.allocator = kind;
        }
        if let Some(seed) = self.goa_seed {
            s.goa.seed = Some(seed);
        }
        if self.fast {
            s = s.fast();
        }
        s.validate()?;
        Ok(s)
    }
}

fn report_divergence(label: &str, out: &SimOutput) {
    if let Some(t) = out.diverged_at {
        eprintln!("warning: {label}: vehicle state diverged at t = {t:.2} s; series truncated");
    }
}

fn run(args: ScenarioArgs, out: Option<PathBuf>) -> Result<()> {
    let scenario = args.resolve()?;
    let label = args.label();
    let dir = out.unwrap_or_else(|| Path::new("runs").join(&label));
    let output = run_scenario(&scenario)?;
    report_divergence(&label, &output);
    let metrics = write_bundle(&dir, &scenario, &output)?;
    let v = metrics.signed_extreme_vc;
    println!(
        "{label}: {} steps, v_c extremes ({:.4}, {:.4}, {:.4}, {:.4}), settled error {:.4} m -> {}",
        metrics.steps,
        v[0],
        v[1],
        v[2],
        v[3],
        metrics.mean_position_error_final_quarter,
        dir.display()
    );
    Ok(())
}

fn compare(dirs: Vec<PathBuf>) -> Result<()> {
    let runs = dirs
        .iter()
        .map(|d| {
            let label = d.file_name().map_or_else(|| d.display().to_string(), |n| n.to_string_lossy().into_owned());
            Ok((label, read_bundle_series(d)?))
        })
        .collect::<Result<Vec<_>>>()?;
    print!("{}", compare_runs(&runs)?.to_table());
    Ok(())
}

fn sweep(args: ScenarioArgs, param: String, values: Vec<String>, out: Option<PathBuf>) -> Result<()> {
    let base = args.resolve()?;
    let scenarios = values
        .iter()
        .map(|v| set_param(&base, &param, v).with_context(|| format!("{param} = {v}")))
        .collect::<Result<Vec<_>>>()?;
    let parent = out.unwrap_or_else(|| Path::new("runs").join(format!("{}-sweep", args.label())));
    let outputs = run_batch(&scenarios, Execution::preferred());

    let mut bundles = Vec::new();
    for ((value, scenario), output) in values.iter().zip(&scenarios).zip(outputs) {
        let label = format!("{param}={value}");
        let output = output.with_context(|| label.clone())?;
        report_divergence(&label, &output);
        write_bundle(&parent.join(&label), scenario, &output)?;
        bundles.push((label, output));
    }
    match compare_runs(&bundles) {
        Ok(table) => print!("{}", table.to_table()),
        Err(e) => eprintln!("runs written to {}; no table: {e}", parent.display()),
    }
    Ok(())
}

fn plotdata(dir: PathBuf, panel: String, output: Option<PathBuf>) -> Result<()> {
    let panel: Panel = panel.parse()?;
    let csv = plot_panel(&read_bundle_series(&dir)?, panel);
    match output {
        Some(path) => fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, out } => run(scenario, out),
        Command::Compare { dirs } => compare(dirs),
        Command::Sweep { scenario, param, values, out } => sweep(scenario, param, values, out),
        Command::Plotdata { dir, panel, output } => plotdata(dir, panel, output),
        Command::Presets => {
            names().iter().for_each(|n| println!("{n}"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
