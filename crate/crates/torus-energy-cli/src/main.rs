//! `torus-energy`: reproducible experiments over torus point-set energies.
//!
//! Every report embeds the invoked configuration and the crate version;
//! seeds fully determine randomized runs. Exit codes: 0 success, 2 usage
//! or input error, 3 numeric failure.

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;
use torus_energy::bounds::{
    corollary1_rhs, fejer_identity_check, montgomery_check, sandwich_report, thm3_lower,
};
use torus_energy::energies::{pair_energy, Acceleration};
use torus_energy::geometry::{read_points, write_points, Generator, TorusPointSet};
use torus_energy::heat::{
    l2_deviation_sq, optimize_heat, prop2_check, sup_deviation, HeatDeviationField, TimeSpec,
};
use torus_energy::kernels::{KernelSpec, LogVariant};
use torus_energy::reduce::reduce_iterate;
use torus_energy::spectra::{energy, energy_nonzero, FrequencyRegion, SpectralWeight};
use torus_energy::stats::{discrepancy_scan, gaussian_pair_statistic, pair_correlation, CenterSpec};
use torus_energy::Error;

#[derive(Parser, Debug)]
#[command(name = "torus-energy", version, about = "Spectral energies of point sets on the torus")]
struct Cli {
    /// Worker threads for parallel reductions (default: available cores).
    /// Reductions are deterministic regardless of the thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated point set as CSV
    Generate(GenerateArgs),
    /// Spectral energy over a box or ball frequency region
    Spectrum(SpectrumArgs),
    /// Pairwise bounds, identities and sandwich reports
    Bounds(BoundsArgs),
    /// Iterated pair-merging reduction, trace as JSON lines
    Reduce(ReduceArgs),
    /// Heat deviation field: L2, grid sup, L^q norms, spectral floor
    Heat(HeatArgs),
    /// Gradient descent on the spectral heat objective
    HeatOpt(HeatOptArgs),
    /// Disk discrepancy scan on T^2
    Discrepancy(DiscrepancyArgs),
    /// 1-D pair correlation and Gaussian pair statistic
    Paircorr(PaircorrArgs),
    /// Timing checks for the energy and pair-energy paths
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// uniform-random | grid | kronecker | jittered-grid | clustered-pairs
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 0)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    p: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Kronecker directions, comma-separated
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    /// clustered-pairs offset radius
    #[arg(long, default_value_t = 0.0)]
    radius: f64,
    /// clustered-pairs base set (CSV); omitted means a uniform random base of --n points
    #[arg(long)]
    base: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Box half-widths per axis
    #[arg(long, num_args = 1.., conflicts_with = "ball")]
    r#box: Vec<f64>,
    /// Ball radius
    #[arg(long)]
    ball: Option<f64>,
    /// uniform | fejer | gaussian
    #[arg(long, default_value = "uniform")]
    weight: String,
    /// Heat time for the gaussian weight
    #[arg(long)]
    t: Option<f64>,
    /// Drop the k = 0 term
    #[arg(long)]
    nonzero: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[command(subcommand)]
    which: BoundsCommand,
}

#[derive(Subcommand, Debug)]
enum BoundsCommand {
    /// Lower bound, exact ball energy and Gaussian upper bound
    Sandwich {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Box energy against its N X1 X2 floor
    Montgomery {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        x1: f64,
        #[arg(long)]
        x2: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Relative error of the exact Fejér product identity
    Fejer {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, num_args = 1..)]
        xs: Vec<u32>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Coordinatewise logarithmic lower bound
    Thm3 {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, num_args = 1..)]
        xs: Vec<f64>,
        /// averaging-length | point-count
        #[arg(long, default_value = "averaging-length")]
        log_variant: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Disk-discrepancy right-hand side
    Corollary1 {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Pairwise energy under an arbitrary kernel spec
    PairEnergy {
        #[arg(short, long)]
        input: PathBuf,
        /// e.g. `riesz_quartic(x=8)` or `gaussian_heat(x=4,c=1,dim=2)`
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        no_diagonal: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    max_iters: Option<usize>,
    /// JSON-lines trace destination (stdout when omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HeatArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 64)]
    grid_m: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HeatOptArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    t: f64,
    /// Optimize per-point heat times (capped at --t) along with positions
    #[arg(long)]
    per_point: bool,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 1e-3)]
    step_size: f64,
    /// Objective trace CSV destination
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DiscrepancyArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5])]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    grid_m: usize,
    /// Additional random centers
    #[arg(long, default_value_t = 4096)]
    random_centers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PaircorrArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
    s_grid: Vec<f64>,
    /// Also report the Gaussian pair statistic at this bandwidth
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1000usize, 10_000])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 64.0)]
    x: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit 0
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: failed to configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::SingularAtZero | Error::CoincidentPoints { .. } => 3,
        _ => 2,
    }
}

/// 17 significant digits, stable across platforms.
fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

fn emit(report: serde_json::Value, output: Option<&PathBuf>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    match output {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn wrap_report(command: &str, config: serde_json::Value, body: serde_json::Value) -> serde_json::Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "report": body,
    })
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Spectrum(args) => spectrum(args),
        Command::Bounds(args) => bounds(args.which),
        Command::Reduce(args) => reduce(args),
        Command::Heat(args) => heat(args),
        Command::HeatOpt(args) => heat_opt(args),
        Command::Discrepancy(args) => discrepancy(args),
        Command::Paircorr(args) => paircorr(args),
        Command::Bench(args) => bench(args),
    }
}

fn generate(args: GenerateArgs) -> Result<(), Error> {
    let generator = match args.kind.as_str() {
        "uniform-random" => Generator::UniformRandom { n: args.n, dim: args.d },
        "grid" => Generator::Grid { p: args.p, dim: args.d },
        "kronecker" => Generator::Kronecker { n: args.n, alpha: args.alpha.clone() },
        "jittered-grid" => Generator::JitteredGrid { p: args.p, dim: args.d, jitter: args.jitter },
        "clustered-pairs" => {
            let base = match &args.base {
                Some(path) => read_points(path)?,
                None => Generator::UniformRandom { n: args.n, dim: args.d }.generate(args.seed)?,
            };
            let ps = torus_energy::geometry::clustered_pairs_of(&base, args.radius, args.seed.wrapping_add(1))?;
            write_points(&ps, &args.output)?;
            eprintln!("wrote {} points (d={}) to {}", ps.len(), ps.dim(), args.output.display());
            return Ok(());
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown generator kind `{other}`; expected uniform-random, grid, kronecker, jittered-grid or clustered-pairs"
            )))
        }
    };
    let ps = generator.generate(args.seed)?;
    write_points(&ps, &args.output)?;
    eprintln!("wrote {} points (d={}) to {}", ps.len(), ps.dim(), args.output.display());
    Ok(())
}

fn parse_weight(weight: &str, t: Option<f64>) -> Result<SpectralWeight, Error> {
    match weight {
        "uniform" => Ok(SpectralWeight::Uniform),
        "fejer" => Ok(SpectralWeight::Fejer),
        "gaussian" => {
            let t = t.ok_or_else(|| {
                Error::InvalidInput("the gaussian weight needs --t".into())
            })?;
            Ok(SpectralWeight::Gaussian { t })
        }
        other => Err(Error::InvalidInput(format!(
            "unknown weight `{other}`; expected uniform, fejer or gaussian"
        ))),
    }
}

fn spectrum(args: SpectrumArgs) -> Result<(), Error> {
    let ps = read_points(&args.input)?;
    let region = match (&args.r#box[..], args.ball) {
        (widths, None) if !widths.is_empty() => {
            FrequencyRegion::Box { half_widths: widths.to_vec() }
        }
        ([], Some(radius)) => FrequencyRegion::Ball { radius, dim: ps.dim() },
        _ => return Err(Error::InvalidInput("give exactly one of --box or --ball".into())),
    };
    let weight = parse_weight(&args.weight, args.t)?;
    let value = if args.nonzero {
        if !matches!(weight, SpectralWeight::Uniform) {
            return Err(Error::InvalidInput("--nonzero applies to the uniform weight".into()));
        }
        energy_nonzero(&ps, &region)?
    } else {
        energy(&ps, &region, &weight)?
    };
    let config = json!({
        "input": args.input,
        "region": region,
        "weight": args.weight,
        "t": args.t,
        "nonzero": args.nonzero,
    });
    let body = json!({
        "n": ps.len(),
        "dim": ps.dim(),
        "energy": sig17(value),
    });
    emit(wrap_report("spectrum", config, body), args.output.as_ref())
}

fn bounds(which: BoundsCommand) -> Result<(), Error> {
    match which {
        BoundsCommand::Sandwich { input, x, c, output } => {
            let ps = read_points(&input)?;
            let rep = sandwich_report(&ps, x, c)?;
            let config = json!({"input": input, "x": x, "c": c});
            let body = json!({
                "n": ps.len(),
                "lower_thm1": sig17(rep.lower_thm1),
                "energy_exact": sig17(rep.energy_exact),
                "upper_thm4": sig17(rep.upper_thm4),
                "ratio_lower": sig17(rep.ratio_lower),
                "ratio_upper": sig17(rep.ratio_upper),
            });
            emit(wrap_report("bounds sandwich", config, body), output.as_ref())
        }
        BoundsCommand::Montgomery { input, x1, x2, output } => {
            let ps = read_points(&input)?;
            let rec = montgomery_check(&ps, x1, x2)?;
            let config = json!({"input": input, "x1": x1, "x2": x2});
            let body = json!({
                "energy": sig17(rec.energy),
                "floor": sig17(rec.floor),
                "holds": rec.holds,
                "slack": sig17(rec.slack),
            });
            emit(wrap_report("bounds montgomery", config, body), output.as_ref())
        }
        BoundsCommand::Fejer { input, xs, output } => {
            let ps = read_points(&input)?;
            let rel = fejer_identity_check(&ps, &xs)?;
            let config = json!({"input": input, "xs": xs});
            emit(
                wrap_report("bounds fejer", config, json!({"relative_error": sig17(rel)})),
                output.as_ref(),
            )
        }
        BoundsCommand::Thm3 { input, xs, log_variant, output } => {
            let ps = read_points(&input)?;
            let variant = match log_variant.as_str() {
                "averaging-length" => LogVariant::AveragingLength,
                "point-count" => LogVariant::PointCount,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown log variant `{other}`; expected averaging-length or point-count"
                    )))
                }
            };
            let value = thm3_lower(&ps, &xs, variant)?;
            let config = json!({"input": input, "xs": xs, "log_variant": log_variant});
            emit(
                wrap_report("bounds thm3", config, json!({"lower": sig17(value)})),
                output.as_ref(),
            )
        }
        BoundsCommand::Corollary1 { input, output } => {
            let ps = read_points(&input)?;
            let value = corollary1_rhs(&ps)?;
            let config = json!({"input": input});
            emit(
                wrap_report("bounds corollary1", config, json!({"rhs": sig17(value)})),
                output.as_ref(),
            )
        }
        BoundsCommand::PairEnergy { input, kernel, no_diagonal, output } => {
            let ps = read_points(&input)?;
            let spec: KernelSpec = kernel.parse()?;
            let rep = pair_energy(&ps, &spec, !no_diagonal)?;
            let config = json!({"input": input, "kernel": kernel, "diagonal": !no_diagonal});
            let body = json!({
                "total": sig17(rep.total),
                "diagonal": sig17(rep.diagonal),
                "offdiagonal": sig17(rep.offdiagonal),
                "acceleration": rep.acceleration,
                "remainder_bound": sig17(rep.remainder_bound),
            });
            emit(wrap_report("bounds pair-energy", config, body), output.as_ref())
        }
    }
}

fn reduce(args: ReduceArgs) -> Result<(), Error> {
    let ps = read_points(&args.input)?;
    let trace = reduce_iterate(&ps, args.max_iters)?;
    match &args.output {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            trace.write_jsonl(std::io::BufWriter::new(file))?;
        }
        None => {
            let mut buf = Vec::new();
            trace.write_jsonl(&mut buf)?;
            print!("{}", String::from_utf8_lossy(&buf));
        }
    }
    Ok(())
}

fn heat(args: HeatArgs) -> Result<(), Error> {
    let ps = read_points(&args.input)?;
    let l2 = l2_deviation_sq(&ps, args.t)?;
    let sup = sup_deviation(&ps, args.t, args.grid_m)?;
    let field = HeatDeviationField::sample(&ps, args.t, args.grid_m)?;
    let prop2 = prop2_check(&ps, args.t)?;
    let config = json!({"input": args.input, "t": args.t, "grid_m": args.grid_m});
    let body = json!({
        "n": ps.len(),
        "l2_deviation_sq": sig17(l2),
        "grid_max": sig17(sup.grid_max),
        "grid_max_is_lower_bound": sup.lower_bound_flag,
        "grid_l2": sig17(field.lq_norm(2.0)),
        "grid_l4": sig17(field.lq_norm(4.0)),
        "grid_linf": sig17(field.lq_norm(f64::INFINITY)),
        "prop2": {
            "lhs": sig17(prop2.lhs),
            "rhs": sig17(prop2.rhs),
            "holds": prop2.holds,
        },
    });
    emit(wrap_report("heat", config, body), args.output.as_ref())
}

fn heat_opt(args: HeatOptArgs) -> Result<(), Error> {
    let ps = read_points(&args.input)?;
    let spec = if args.per_point {
        TimeSpec::PerPoint(vec![args.t; ps.len()])
    } else {
        TimeSpec::Single(args.t)
    };
    let rec = optimize_heat(&ps, &spec, args.steps, args.step_size)?;
    if let Some(path) = &args.trace {
        std::fs::write(path, rec.trace_csv())?;
    }
    let first = rec.objective_trace.first().map(|r| r.value).unwrap_or(0.0);
    let last = rec.objective_trace.last().map(|r| r.value).unwrap_or(0.0);
    let config = json!({
        "input": args.input,
        "t": args.t,
        "per_point": args.per_point,
        "steps": args.steps,
        "step_size": args.step_size,
    });
    let body = json!({
        "initial_objective": sig17(first),
        "final_objective": sig17(last),
        "stalled": rec.stalled,
        "final_l2_deviation_sq": sig17(l2_deviation_sq(&rec.final_set, args.t)?),
        "final_grid_max": sig17(sup_deviation(&rec.final_set, args.t, 64)?.grid_max),
        "trace_rows": rec.objective_trace.len(),
    });
    emit(wrap_report("heat-opt", config, body), args.output.as_ref())
}

fn discrepancy(args: DiscrepancyArgs) -> Result<(), Error> {
    let ps = read_points(&args.input)?;
    let grid = discrepancy_scan(&ps, &args.radii, &CenterSpec::Grid { m: args.grid_m })?;
    let config = json!({
        "input": args.input,
        "radii": args.radii,
        "grid_m": args.grid_m,
        "random_centers": args.random_centers,
        "seed": args.seed,
    });
    let mut max_record = grid.max_record.clone();
    if args.random_centers > 0 {
        let random = discrepancy_scan(
            &ps,
            &args.radii,
            &CenterSpec::Random { count: args.random_centers, seed: args.seed },
        )?;
        if random.max_record.deviation > max_record.deviation {
            max_record = random.max_record;
        }
    }
    let body = json!({
        "n": ps.len(),
        "max_deviation": sig17(max_record.deviation),
        "max_center": max_record.center,
        "max_radius": max_record.radius,
        "max_count": max_record.count,
        "max_expected": sig17(max_record.expected),
        "corollary1_rhs": sig17(grid.corollary1_rhs),
        "scanned": grid.all.len() + args.random_centers * args.radii.len(),
    });
    emit(wrap_report("discrepancy", config, body), args.output.as_ref())
}

fn paircorr(args: PaircorrArgs) -> Result<(), Error> {
    let ps = read_points(&args.input)?;
    let rep = pair_correlation(&ps, &args.s_grid)?;
    let gaussian = args
        .sigma
        .map(|sigma| gaussian_pair_statistic(&ps, sigma))
        .transpose()?;
    let config = json!({"input": args.input, "s_grid": args.s_grid, "sigma": args.sigma});
    let body = json!({
        "n": rep.n,
        "s_grid": rep.s_grid,
        "f_values": rep.f_values.iter().map(|v| sig17(*v)).collect::<Vec<_>>(),
        "gaussian_statistic": gaussian.map(sig17),
    });
    emit(wrap_report("paircorr", config, body), args.output.as_ref())
}

fn bench(args: BenchArgs) -> Result<(), Error> {
    let mut rows = Vec::new();
    for &n in &args.sizes {
        let ps = Generator::UniformRandom { n, dim: 2 }.generate(1)?;
        let region = FrequencyRegion::Ball { radius: args.x, dim: 2 };
        let start = Instant::now();
        let e = energy(&ps, &region, &SpectralWeight::Uniform)?;
        let energy_secs = start.elapsed().as_secs_f64();
        let freq_count = (2.0 * args.x + 1.0).powi(2);
        let throughput = n as f64 * freq_count / energy_secs;

        let spec = KernelSpec::GaussianHeat { x: args.x, c: 1.0, dim: 2 };
        let start = Instant::now();
        let dense = pair_energy_timed(&ps, &spec, Acceleration::Dense)?;
        let dense_secs = start.elapsed().as_secs_f64();
        let start = Instant::now();
        let cell = pair_energy_timed(&ps, &spec, Acceleration::CellList)?;
        let cell_secs = start.elapsed().as_secs_f64();

        rows.push(json!({
            "n": n,
            "energy": sig17(e),
            "energy_secs": sig17(energy_secs),
            "point_frequency_pairs_per_sec": sig17(throughput),
            "pair_dense_secs": sig17(dense_secs),
            "pair_cell_list_secs": sig17(cell_secs),
            "pair_dense": sig17(dense),
            "pair_cell_list": sig17(cell),
        }));
    }
    let config = json!({"sizes": args.sizes, "x": args.x});
    emit(wrap_report("bench", config, json!({"rows": rows})), args.output.as_ref())
}

fn pair_energy_timed(
    ps: &TorusPointSet,
    spec: &KernelSpec,
    acceleration: Acceleration,
) -> Result<f64, Error> {
    Ok(torus_energy::energies::pair_energy_with(ps, spec, true, acceleration)?.total)
}
