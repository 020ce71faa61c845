//! Benchmark CLI: single solves, convergence studies, contour diagnostics.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use expint::{
    emit_csv, emit_table, harness, quadrature_apply, run_study, ContourRule64,
    SingleRunConfig, StudyConfig,
};

#[derive(Parser)]
#[command(name = "expint", version, about = "Exponential multistep solver benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solve and dump the final state as CSV (i, x, u).
    Solve(SolveArgs),
    /// Reproduce a convergence table from a study config file.
    Study(StudyArgs),
    /// Dump contour nodes/weights and optional decay diagnostics.
    ContourDiag(ContourArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Flat key/value config file (see README for the schema).
    #[arg(long)]
    config: PathBuf,
    /// Output path for the final state; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also dump the time mesh (n, t_n, tau_n) to this path.
    #[arg(long)]
    dump_mesh: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    /// Flat key/value config file (see README for the schema).
    #[arg(long)]
    config: PathBuf,
    /// Output path; falls back to the config's `out` entry, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for independent table cells; 0 picks automatically.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct ContourArgs {
    /// Stepsize the rule is built for (accepts fractions like 1/100).
    #[arg(long)]
    tau: String,
    /// Half node count K (the rule has 2K+1 nodes).
    #[arg(long, default_value_t = 32)]
    nodes: usize,
    /// Contour half-angle in radians; default pi/4.
    #[arg(long)]
    alpha: Option<f64>,
    /// Output path for the node/weight table; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also print quadrature-vs-exponential decay over a K sweep.
    #[arg(long)]
    decay: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
}

fn main() -> ExitCode {
    env_logger::init();
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve(args) => solve_cmd(args),
        Command::Study(args) => study_cmd(args),
        Command::ContourDiag(args) => contour_cmd(args),
    }
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(content.as_bytes())?,
    }
    Ok(())
}

fn solve_cmd(args: SolveArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let config: SingleRunConfig<f64> = SingleRunConfig::parse(&text)?;
    let history = config.run()?;

    if let Some(mesh_path) = &args.dump_mesh {
        let mut buf = Vec::new();
        history.mesh().write_csv(&mut buf)?;
        fs::write(mesh_path, buf).with_context(|| format!("writing {}", mesh_path.display()))?;
    }

    let op = expint::DirichletLaplacian1D64::new(config.spatial_points)?;
    let mut out = String::from("i,x,u\n");
    for (i, u) in history.final_state().iter().enumerate() {
        out.push_str(&format!("{},{:e},{:e}\n", i + 1, op.grid_point(i), u));
    }
    let path = args
        .out
        .or_else(|| config.out_path.as_ref().map(PathBuf::from));
    write_output(path.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn study_cmd(args: StudyArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let config: StudyConfig<f64> = StudyConfig::parse(&text)?;

    let report = if args.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build()
            .context("building thread pool")?;
        pool.install(|| run_study(&config))?
    } else {
        run_study(&config)?
    };

    let rendered = match args.format {
        Format::Csv => emit_csv(&report),
        Format::Table => emit_table(&report),
    };
    let path = args
        .out
        .or_else(|| config.out_path.as_ref().map(PathBuf::from));
    write_output(path.as_deref(), &rendered)?;

    if report.failures > 0 {
        eprintln!("{} of {} cells failed:", report.failures, report.cells.len());
        for cell in report.cells.iter().filter(|c| c.error.is_some()) {
            eprintln!(
                "  T = {}, tau = {}: {}",
                cell.t_final,
                cell.tau,
                cell.error.as_deref().unwrap_or("unknown")
            );
        }
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn contour_cmd(args: ContourArgs) -> Result<ExitCode> {
    let tau: f64 = harness::parse_number(&args.tau)?;
    let alpha = args.alpha.unwrap_or(std::f64::consts::FRAC_PI_4);
    let rule = ContourRule64::build(tau, args.nodes, alpha)?;
    let mut buf = Vec::new();
    rule.write_csv(&mut buf)?;
    write_output(args.out.as_deref(), &String::from_utf8(buf)?)?;

    if args.decay {
        println!("quadrature decay toward e^(tau a), tau = {tau:e}, alpha = {alpha:.6}:");
        println!("{:>6} {:>14} {:>14} {:>14}", "K", "a=0", "a=-1", "a=-100");
        for k in [8usize, 16, 24, 32, 48] {
            let mut row = format!("{k:>6}");
            for a in [0.0f64, -1.0, -100.0] {
                let rule = ContourRule64::build(tau, k, alpha)?;
                let got = quadrature_apply(
                    &rule,
                    tau,
                    |z, b| Ok(vec![b[0] / (z - a)]),
                    |_z| Ok(vec![1.0.into()]),
                )?;
                let err = (got[0] - (tau * a).exp()).abs();
                row.push_str(&format!(" {err:>14.3e}"));
            }
            println!("{row}");
        }
    }
    Ok(ExitCode::SUCCESS)
}
