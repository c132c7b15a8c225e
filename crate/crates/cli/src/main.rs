use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use geomarch::ballmask::pixel_delta;
use geomarch::io::{read_field, read_target, write_field};
use geomarch::loss::{binary_cross_entropy, dice_coefficient};
use geomarch::{
    fast_march, fit_potential_with, gradcheck, hausdorff, iou, soft_mask, AdamConfig, Error, FitConfig, GradcheckConfig,
    Grid2D, PotentialField, Result, SeedSet,
};

const USAGE_EXIT: u8 = 1;
const GRADCHECK_FAIL_EXIT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "geomarch", version, about = "Differentiable Fast Marching on 2D grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Geodesic distance from the seeds under the potential in --phi.
    Solve(SolveArgs),
    /// Soft unit geodesic ball around the seeds.
    Mask(MaskArgs),
    /// Compare adjoint gradients with finite differences on a random instance.
    Gradcheck(GradcheckArgs),
    /// Fit a potential whose soft unit ball matches a binary target.
    Fit(FitArgs),
    /// Overlap metrics between a prediction and a target mask.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    phi: PathBuf,
    /// Seed node as `i,j` (column, row); repeatable.
    #[arg(long = "seed", required = true, value_parser = parse_seed)]
    seeds: Vec<(usize, usize)>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MaskArgs {
    #[arg(long)]
    phi: PathBuf,
    #[arg(long = "seed", required = true, value_parser = parse_seed)]
    seeds: Vec<(usize, usize)>,
    /// Sigmoid width; defaults to one pixel, 1 / max(nx, ny).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long)]
    nx: usize,
    #[arg(long)]
    ny: usize,
    /// Grid spacing; defaults to 1 / max(nx, ny).
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    probes: usize,
    #[arg(long)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Binary target as a PGM image or a field file.
    #[arg(long)]
    target: PathBuf,
    /// Seed node as `i,j`; defaults to the node nearest the target barycenter.
    #[arg(long = "seed", value_parser = parse_seed)]
    seeds: Vec<(usize, usize)>,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// L1 mass bound on the potential; unbounded when absent.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    #[arg(long)]
    out_phi: PathBuf,
    #[arg(long)]
    out_mask: PathBuf,
    /// CSV trace, one row appended and flushed per iteration.
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    target: PathBuf,
}

fn parse_seed(s: &str) -> std::result::Result<(usize, usize), String> {
    let (i, j) = s.split_once(',').ok_or_else(|| format!("expected `i,j`, got `{s}`"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad seed coordinate `{t}`"));
    Ok((parse(i)?, parse(j)?))
}

fn seed_set(grid: &Grid2D, seeds: &[(usize, usize)]) -> Result<SeedSet> {
    SeedSet::from_coords(grid, seeds)
}

fn read_potential(path: &Path) -> Result<PotentialField> {
    PotentialField::new(read_field(path)?)
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let phi = read_potential(&args.phi)?;
    let seeds = seed_set(phi.grid(), &args.seeds)?;
    let u = fast_march(&phi, &seeds)?;
    write_field(&u.to_field(), &args.out)?;
    Ok(ExitCode::SUCCESS)
}

fn mask(args: MaskArgs) -> Result<ExitCode> {
    let phi = read_potential(&args.phi)?;
    let seeds = seed_set(phi.grid(), &args.seeds)?;
    let delta = args.delta.unwrap_or_else(|| pixel_delta(phi.grid()));
    let u = fast_march(&phi, &seeds)?;
    write_field(soft_mask(&u, delta)?.field(), &args.out)?;
    Ok(ExitCode::SUCCESS)
}

fn run_gradcheck(args: GradcheckArgs) -> Result<ExitCode> {
    let cfg = GradcheckConfig {
        nx: args.nx,
        ny: args.ny,
        h: args.h,
        probes: args.probes,
        tol: args.tol,
        rng_seed: args.rng_seed,
        ..GradcheckConfig::default()
    };
    let report = gradcheck(&cfg)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "seed={}", report.seed)?;
    for p in &report.probes {
        writeln!(out, "probe={} adjoint={:e} fd={:e} rel_err={:e}", p.index, p.adjoint, p.fd, p.rel_err)?;
    }
    let verdict = if report.passed() { "pass" } else { "fail" };
    writeln!(out, "within={}/{} tol={:e} result={verdict}", report.within(), report.probes.len(), report.tol)?;
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(GRADCHECK_FAIL_EXIT)
    })
}

fn fit(args: FitArgs) -> Result<ExitCode> {
    let target = read_target(&args.target)?;
    let seeds = if args.seeds.is_empty() {
        None
    } else {
        Some(seed_set(target.grid(), &args.seeds)?)
    };
    let cfg = FitConfig {
        adam: AdamConfig { lr: args.lr, ..AdamConfig::default() },
        delta: args.delta,
        lambda: args.lambda,
        max_iters: args.iters,
        rng_seed: args.rng_seed,
        ..FitConfig::default()
    };
    let mut trace = BufWriter::new(File::create(&args.trace)?);
    writeln!(trace, "iter,loss,iou,gradnorm")?;
    trace.flush()?;
    let result = fit_potential_with(&target, seeds, &cfg, |row| {
        writeln!(trace, "{},{},{},{}", row.iter, row.loss, row.iou, row.grad_norm)?;
        trace.flush()?;
        Ok(())
    })?;
    write_field(result.phi.as_field(), &args.out_phi)?;
    write_field(&result.mask, &args.out_mask)?;
    println!(
        "iters={} best_iter={} best_loss={} iou={}",
        result.trace.len(),
        result.best_iter,
        result.best_loss,
        iou(&result.mask, &target)?
    );
    Ok(ExitCode::SUCCESS)
}

fn eval(args: EvalArgs) -> Result<ExitCode> {
    let pred = read_target(&args.pred)?;
    let target = read_target(&args.target)?;
    target.ensure_binary()?;
    if pred.grid().nx() != target.grid().nx() || pred.grid().ny() != target.grid().ny() {
        return Err(Error::Shape {
            expected: target.values().len(),
            found: pred.values().len(),
        });
    }
    println!("dice={}", dice_coefficient(&pred, &target)?);
    println!("iou={}", iou(&pred, &target)?);
    println!("bce={}", binary_cross_entropy(&pred, &target)?);
    println!("hausdorff={}", hausdorff(&pred, &target)?);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE_EXIT),
            };
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Mask(a) => mask(a),
        Command::Gradcheck(a) => run_gradcheck(a),
        Command::Fit(a) => fit(a),
        Command::Eval(a) => eval(a),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(e.exit_code() as u8)
    })
}
