use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lod_core::bench::{
    run_convergence, run_decay_study, run_solve, write_convergence_csv, write_solution_csv, ExperimentConfig,
    OutputFormat,
};
use lod_core::lod::write_decay_csv;

#[derive(Parser)]
#[command(name = "lod-bench", version, about = "LOD multiscale benchmark driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Error and EOC table against the fine reference solution.
    Convergence,
    /// Decay of global correctors outside growing patches.
    Decay,
    /// Multiscale solution on the first coarse level.
    Solve,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Every flag overrides the corresponding key of `--config`.
#[derive(Args)]
struct Options {
    /// key = value file applied before the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Fine grid spacing 2^-LEVEL.
    #[arg(long, global = true)]
    fine_level: Option<u32>,
    /// Coarse grid spacings 2^-l, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    coarse_levels: Option<Vec<u32>>,
    /// Coarse layers per coarse level, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    layers: Option<Vec<f64>>,
    /// Fine element layers per coarse level; needs --layers or a layer list in the config.
    #[arg(long, global = true, value_delimiter = ',')]
    fine_layers: Option<Vec<usize>>,
    /// Layers m ln(1/H), rounded to halves.
    #[arg(long, global = true, conflicts_with = "layers")]
    layer_multiplier: Option<f64>,
    #[arg(long, global = true)]
    quad_subdiv: Option<usize>,
    /// Localized basis: corrector or unit-vector.
    #[arg(long, global = true)]
    basis: Option<String>,
    #[arg(long, global = true)]
    abstol: Option<f64>,
    #[arg(long, global = true)]
    reltol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Drop the nonlinear term.
    #[arg(long, global = true)]
    linear: bool,
    /// benchmark, identity or contrast:<c>.
    #[arg(long, global = true)]
    decay_coefficient: Option<String>,
    #[arg(long, global = true)]
    decay_level: Option<u32>,
    #[arg(long, global = true)]
    decay_nodes: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Newton history CSV of the solve command.
    #[arg(long, global = true)]
    history: Option<PathBuf>,
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn build_config(o: &Options) -> Result<ExperimentConfig> {
    let mut cfg = match &o.config {
        Some(p) => ExperimentConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    let mut set = |k: &str, v: Option<String>| -> Result<()> {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
        Ok(())
    };
    set("epsilon", o.epsilon.map(|x| x.to_string()))?;
    set("fine_level", o.fine_level.map(|x| x.to_string()))?;
    set("coarse_levels", o.coarse_levels.as_deref().map(join))?;
    set("layers", o.layers.as_deref().map(join))?;
    set("fine_layers", o.fine_layers.as_deref().map(join))?;
    set("layer_multiplier", o.layer_multiplier.map(|x| x.to_string()))?;
    set("quad_subdiv", o.quad_subdiv.map(|x| x.to_string()))?;
    set("basis", o.basis.clone())?;
    set("abstol", o.abstol.map(|x| x.to_string()))?;
    set("reltol", o.reltol.map(|x| x.to_string()))?;
    set("max_iters", o.max_iters.map(|x| x.to_string()))?;
    set("linear", o.linear.then(|| "true".to_string()))?;
    set("decay_coefficient", o.decay_coefficient.clone())?;
    set("decay_level", o.decay_level.map(|x| x.to_string()))?;
    set("decay_nodes", o.decay_nodes.map(|x| x.to_string()))?;
    set("out", o.out.as_ref().map(|p| p.display().to_string()))?;
    set(
        "format",
        o.format.map(|f| match f {
            Format::Csv => "csv".to_string(),
            Format::Json => "json".to_string(),
        }),
    )?;
    cfg.validate()?;
    Ok(cfg)
}

fn output(cfg: &ExperimentConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = build_config(&cli.opts)?;
    match cli.command {
        Command::Convergence => {
            let report = run_convergence(&cfg)?;
            let mut out = output(&cfg)?;
            match cfg.format {
                OutputFormat::Csv => write_convergence_csv(&report, &mut out)?,
                OutputFormat::Json => serde_json::to_writer_pretty(&mut out, &report)?,
            }
            out.flush()?;
            let r = &report.reference;
            eprintln!(
                "reference: {} Newton iterations, |G| = {:.3e}, u_h in [{:.4}, {:.4}]",
                r.newton_iterations, r.final_residual, r.min_value, r.max_value
            );
            if !cfg.linear && (r.min_value < -1.75 || r.max_value > 0.0) {
                eprintln!("warning: reference solution leaves the expected range [-1.75, 0]");
            }
            let show = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.3}"));
            eprintln!(
                "average EOC: L2 {}, H1 {}",
                show(report.average_eoc_l2),
                show(report.average_eoc_h1)
            );
            for row in report.rows.iter().filter(|r| r.error.is_some()) {
                eprintln!("row H={} failed: {}", row.h, row.error.as_deref().unwrap_or(""));
            }
            Ok(report.all_succeeded())
        }
        Command::Decay => {
            let profiles = run_decay_study(&cfg)?;
            let mut out = output(&cfg)?;
            match cfg.format {
                OutputFormat::Csv => write_decay_csv(&profiles, &mut out)?,
                OutputFormat::Json => serde_json::to_writer_pretty(&mut out, &profiles)?,
            }
            out.flush()?;
            for p in &profiles {
                match p.fit {
                    Some(f) => eprintln!("node {}: theta {:.4}, R^2 {:.4}", p.node, f.theta, f.r_squared),
                    None => eprintln!("node {}: too few nonzero tails to fit", p.node),
                }
            }
            Ok(true)
        }
        Command::Solve => {
            let report = run_solve(&cfg)?;
            let mut out = output(&cfg)?;
            match cfg.format {
                OutputFormat::Csv => write_solution_csv(&report, &mut out)?,
                OutputFormat::Json => serde_json::to_writer_pretty(&mut out, &report)?,
            }
            out.flush()?;
            if let Some(p) = &cli.opts.history {
                report.newton.write_history_csv(BufWriter::new(File::create(p)?))?;
            }
            eprintln!(
                "H = {}, {} Newton iterations, |G| = {:.3e}",
                report.h,
                report.newton.iterations,
                report.newton.residual_norms.last().copied().unwrap_or(f64::NAN)
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
