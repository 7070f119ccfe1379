use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use orthofact::datagen::{read_instance, InstanceKind};
use orthofact::harness::{
    aggregate, generate_dataset, orthogonality_for, read_raw_csv, run_benchmark, run_solve, write_aggregate_csv,
    write_plot_data, write_raw_csv, write_wide_tables, Algorithm, ConfigOverrides, ExperimentGrid, InstanceSource,
    RawRow, SolverSettings,
};
use orthofact::model::ProblemSpec;
use orthofact::rng::{derive_seed, random_init};
use orthofact::{Error, SolveReport};

#[derive(Parser)]
#[command(name = "orthofact", version, about = "Orthogonal NMF solvers and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic instances (R, G, H text files) for a grid of sizes.
    Generate(GenerateArgs),
    /// Run one solver on one instance file and print its report.
    Solve(SolveArgs),
    /// Sweep a grid of instances, ranks, penalties and algorithms.
    Benchmark(BenchmarkArgs),
    /// Turn a raw benchmark CSV into aggregate tables and plot-data files.
    Report(ReportArgs),
}

#[derive(Args)]
struct SolverFlags {
    /// TOML file overriding solver settings ([ding], [mirzal], [pg], [pg_union], [pg_bion]).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Wall-clock limit per solve, seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Outer iteration cap for every solver.
    #[arg(long)]
    max_iters: Option<usize>,
}

impl SolverFlags {
    fn settings(&self) -> Result<SolverSettings, Error> {
        let mut s = SolverSettings::default();
        if let Some(path) = &self.config {
            ConfigOverrides::load(path)?.apply(&mut s);
        }
        if let Some(t) = self.time_limit {
            s.set_time_limit(t);
        }
        if let Some(m) = self.max_iters {
            s.set_max_iters(m);
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Data set; repeat for several. Defaults to both.
    #[arg(long, value_parser = parse_kind)]
    kind: Vec<InstanceKind>,
    #[arg(long, value_delimiter = ',', default_values_t = [50, 100, 200, 500, 1000])]
    n: Vec<usize>,
    #[arg(long = "k-frac", value_delimiter = ',', default_values_t = [0.2, 0.4])]
    k_frac: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    replicates: usize,
    /// Master seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "data")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct SolveArgs {
    /// Path of an `R` matrix file.
    instance: PathBuf,
    #[arg(long, value_parser = parse_alg)]
    alg: Algorithm,
    /// Inner dimension.
    #[arg(long, conflicts_with = "p_frac")]
    p: Option<usize>,
    /// Inner dimension as a fraction of the instance's k.
    #[arg(long = "p-frac")]
    p_frac: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Defaults to beta on BION data and 0 on UNION data.
    #[arg(long)]
    alpha: Option<f64>,
    /// Data set, when it cannot be read from the file name.
    #[arg(long, value_parser = parse_kind)]
    kind: Option<InstanceKind>,
    /// Seed of the random initial factors.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the per-iteration trace (iter,rse,infeas,objective) here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Data set; repeat for several. Defaults to both.
    #[arg(long, value_parser = parse_kind)]
    kind: Vec<InstanceKind>,
    #[arg(long, value_delimiter = ',', default_values_t = [50, 100])]
    n: Vec<usize>,
    #[arg(long = "k-frac", value_delimiter = ',', default_values_t = [0.2, 0.4])]
    k_frac: Vec<f64>,
    #[arg(long = "p-frac", value_delimiter = ',', default_values_t = [0.2, 0.4, 0.6, 0.8, 1.0])]
    p_frac: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0, 100.0, 1000.0])]
    beta: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_alg, default_values = ["ding", "mirzal", "pg"])]
    alg: Vec<Algorithm>,
    #[arg(long, default_value_t = 3)]
    replicates: usize,
    /// Master seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Read instances written by `generate` from this directory instead of generating them.
    #[arg(long)]
    instances: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory for raw.csv, aggregate.csv and the wide tables.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct ReportArgs {
    /// Raw CSV written by `benchmark`.
    raw: PathBuf,
    #[arg(long, default_value = "plots")]
    out: PathBuf,
}

fn parse_kind(s: &str) -> Result<InstanceKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_alg(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn kinds(v: &[InstanceKind]) -> Vec<InstanceKind> {
    if v.is_empty() {
        vec![InstanceKind::Union, InstanceKind::Bion]
    } else {
        v.to_vec()
    }
}

fn generate(a: GenerateArgs) -> Result<(), Error> {
    let mut total = 0;
    for kind in kinds(&a.kind) {
        let grid = ExperimentGrid {
            ns: a.n.clone(),
            k_fractions: a.k_frac.clone(),
            replicates: a.replicates,
            master_seed: a.seed,
            ..ExperimentGrid::default_for(kind)
        };
        total += generate_dataset(&grid, &a.out)?.len();
    }
    println!("wrote {total} files to {}", a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct SolveLine<'a> {
    instance: String,
    kind: String,
    n: usize,
    k: Option<usize>,
    p: usize,
    alg: &'a str,
    alpha: f64,
    beta: f64,
    seed: u64,
    final_rse: f64,
    final_infeas: f64,
    iters: usize,
    wall_seconds: f64,
    termination: &'a str,
}

fn write_trace(path: &Path, report: &SolveReport) -> Result<(), Error> {
    let mut text = String::from("iter,rse,infeas,objective\n");
    for (i, t) in report.trace.iter().enumerate() {
        text.push_str(&format!("{i},{},{},{}\n", t.rse, t.infeas, t.objective));
    }
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn solve(a: SolveArgs) -> Result<(), Error> {
    let settings = a.solver.settings()?;
    let loaded = read_instance(&a.instance);
    // Files outside the naming scheme still load when --kind is given.
    let (r, kind, k) = match (loaded, a.kind) {
        (Ok(inst), kind) => (inst.r, kind.unwrap_or(inst.name.kind), Some(inst.name.k)),
        (Err(Error::FileName { .. }), Some(kind)) => {
            let m = orthofact::datagen::read_matrix(&a.instance)?;
            (orthofact::NonNegMatrix::new(m)?, kind, None)
        }
        (Err(e), _) => return Err(e),
    };
    let p = match (a.p, a.p_frac, k) {
        (Some(p), _, _) => p,
        (None, Some(f), Some(k)) => ((f * k as f64).round() as usize).max(1),
        (None, Some(_), None) => return Err(Error::Parameter("--p-frac needs k from the instance file name".into())),
        (None, None, Some(k)) => k,
        (None, None, None) => return Err(Error::Parameter("give --p".into())),
    };
    let alpha = a.alpha.unwrap_or(match kind {
        InstanceKind::Bion => a.beta,
        InstanceKind::Union => 0.0,
    });
    let (m, n) = (r.rows(), r.cols());
    let spec = ProblemSpec::new(r, p, orthogonality_for(kind), alpha, a.beta)?;
    let report = run_solve(a.alg, &spec, kind, &settings, random_init(m, p, n, derive_seed(a.seed, &[p as u64])))?;
    if let Some(path) = &a.trace {
        write_trace(path, &report)?;
    }
    let line = SolveLine {
        instance: a.instance.display().to_string(),
        kind: kind.to_string(),
        n,
        k,
        p,
        alg: a.alg.as_str(),
        alpha: spec.alpha(),
        beta: a.beta,
        seed: a.seed,
        final_rse: report.final_rse(),
        final_infeas: report.final_infeas(),
        iters: report.iters,
        wall_seconds: report.wall_seconds,
        termination: report.termination.as_str(),
    };
    match a.format {
        Format::Json => println!("{}", serde_json::to_string(&line).expect("plain data serializes")),
        Format::Csv => {
            println!("alg,kind,n,p,alpha,beta,final_rse,final_infeas,iters,wall_seconds,termination");
            println!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                line.alg,
                line.kind,
                line.n,
                line.p,
                line.alpha,
                line.beta,
                line.final_rse,
                line.final_infeas,
                line.iters,
                line.wall_seconds,
                line.termination
            );
        }
    }
    Ok(())
}

fn write_tables(out: &Path, rows: &[RawRow]) -> Result<Vec<PathBuf>, Error> {
    let aggs = aggregate(rows);
    let agg_path = out.join("aggregate.csv");
    write_aggregate_csv(&agg_path, &aggs)?;
    let mut paths = vec![agg_path];
    paths.extend(write_wide_tables(out, &aggs)?);
    Ok(paths)
}

fn benchmark(a: BenchmarkArgs) -> Result<(), Error> {
    let settings = a.solver.settings()?;
    let source = match &a.instances {
        Some(dir) => InstanceSource::Directory(dir.clone()),
        None => InstanceSource::Generate,
    };
    let mut rows = Vec::new();
    for kind in kinds(&a.kind) {
        let grid = ExperimentGrid {
            kind,
            ns: a.n.clone(),
            k_fractions: a.k_frac.clone(),
            p_fractions: a.p_frac.clone(),
            betas: a.beta.clone(),
            algorithms: a.alg.clone(),
            replicates: a.replicates,
            master_seed: a.seed,
        };
        let cells = grid.cells().len();
        eprintln!("{kind}: {cells} solves");
        rows.extend(run_benchmark(&grid, &settings, &source, a.threads)?);
    }
    let raw = a.out.join("raw.csv");
    write_raw_csv(&raw, &rows)?;
    let failed = rows.iter().filter(|r| r.is_error()).count();
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", raw.display());
    for p in write_tables(&a.out, &rows)? {
        let _ = writeln!(out, "{}", p.display());
    }
    if failed > 0 {
        eprintln!("{failed} of {} solves failed; see the termination column", rows.len());
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<(), Error> {
    let rows = read_raw_csv(&a.raw)?;
    let mut paths = write_tables(&a.out, &rows)?;
    paths.extend(write_plot_data(&a.out, &aggregate(&rows))?);
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
