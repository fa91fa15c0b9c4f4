//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error, 3 the solve hit its
//! time limit (the solution and report are still written).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use crowdship_core::bench::{self, ClassPattern, GeneratorConfig, GroupBy};
use crowdship_core::orchestrator::{PricingExecutor, SequentialExecutor};
use crowdship_core::{oracle, BehaviorCoefficients, Solver, SolveStatus, Variant, VariantConfig};

use crate::format::{load_instance, save_instance, save_solution};
use crate::report::{load_report, save_report};
use crate::runtime::{ThreadedExecutor, WallClock};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_TIME_LIMIT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "crowdship", version, about = "Bundling, assignment and compensation for crowdsourced delivery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write the benchmark instance library (or a set of tiny instances).
    Generate(GenerateArgs),
    /// Solve one instance with one variant.
    Solve(SolveArgs),
    /// Metrics table with gaps from a set of run reports.
    Gaps(GapsArgs),
    /// Mean offer metrics grouped by class, size, ratio or pattern.
    Sensitivity(SensitivityArgs),
    /// Exhaustive optimum of a tiny instance.
    Oracle(OracleArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub master_seed: u64,
    /// Write this many tiny oracle-sized instances instead of the library.
    #[arg(long)]
    pub tiny: Option<u64>,
    #[arg(long, default_value_t = 10)]
    pub n_full_instances: usize,
    #[arg(long, default_value_t = 120)]
    pub full_tasks: usize,
    #[arg(long, default_value_t = 60)]
    pub full_drivers: usize,
    #[arg(long, value_delimiter = ',', default_value = "30,60,90,120")]
    pub task_sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
    pub driver_ratios: Vec<f64>,
    #[arg(long, default_value_t = 5.0)]
    pub region_half_width: f64,
    #[arg(long, default_value_t = 10)]
    pub load_min: u64,
    #[arg(long, default_value_t = 30)]
    pub load_max: u64,
    #[arg(long, default_value_t = 100.0)]
    pub capacity: f64,
    #[arg(long, default_value_t = 4.95)]
    pub outsource_cost: f64,
    /// Comma-separated pattern names (c1, c2, c3, m1..m5); all by default.
    #[arg(long, value_delimiter = ',')]
    pub patterns: Vec<String>,
    /// `alpha,beta1,beta2,gamma` for class 1.
    #[arg(long, value_delimiter = ',', num_args = 4, allow_negative_numbers = true)]
    pub class1: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 4, allow_negative_numbers = true)]
    pub class2: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 4, allow_negative_numbers = true)]
    pub class3: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long, value_parser = parse_variant)]
    pub variant: Variant,
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Text report, or JSON when the name ends in `.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Seconds; unlimited by default.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = 36.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 100)]
    pub col_limit: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub pool_cap: Option<usize>,
}

#[derive(Args, Debug)]
pub struct GapsArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub reports: Vec<PathBuf>,
    /// Reports whose objectives serve as optimal or best-known references.
    /// Without it the best integrated objective among `--reports` is used.
    #[arg(long, num_args = 1..)]
    pub reference: Vec<PathBuf>,
    /// Output table; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SensitivityArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub reports: Vec<PathBuf>,
    /// Directory holding `<instance name>.txt` for every report.
    #[arg(long)]
    pub instance_dir: PathBuf,
    #[arg(long, value_parser = parse_group_by, default_value = "class")]
    pub group_by: GroupBy,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Also write the optimal solution.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("unknown variant {s:?} (h-b, h-d, h-dd, h-ddc, h-c, e-dd, e-ddc, seq)"))
}

fn parse_group_by(s: &str) -> Result<GroupBy, String> {
    GroupBy::parse(s).ok_or_else(|| format!("unknown grouping {s:?} (class, tasks, ratio, pattern)"))
}

/// A failure after the arguments were accepted.
#[derive(Debug)]
pub struct RuntimeError(pub String);

impl<E: std::fmt::Display> From<E> for RuntimeError {
    fn from(e: E) -> Self {
        RuntimeError(e.to_string())
    }
}

fn with_path<E: std::fmt::Display>(path: &Path) -> impl FnOnce(E) -> RuntimeError + '_ {
    move |e| RuntimeError(format!("{}: {e}", path.display()))
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Messages go to standard output and standard error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Solve(a) => solve(&a),
        Command::Gaps(a) => gaps(&a),
        Command::Sensitivity(a) => sensitivity(&a),
        Command::Oracle(a) => run_oracle(&a),
    };
    match result {
        Ok(code) => code,
        Err(RuntimeError(msg)) => {
            eprintln!("error: {msg}");
            EXIT_RUNTIME
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> Result<i32, RuntimeError> {
    eprintln!("error: {msg}");
    Ok(EXIT_USAGE)
}

fn coefficients(values: &[f64], class: u8) -> BehaviorCoefficients {
    match values {
        [a, b1, b2, g] => BehaviorCoefficients::new(*a, *b1, *b2, *g),
        _ => BehaviorCoefficients::class(class).expect("benchmark class"),
    }
}

fn generator_config(a: &GenerateArgs) -> Result<GeneratorConfig, String> {
    let patterns = if a.patterns.is_empty() {
        ClassPattern::ALL.to_vec()
    } else {
        a.patterns
            .iter()
            .map(|p| ClassPattern::parse(p).ok_or_else(|| format!("unknown class pattern {p:?}")))
            .collect::<Result<_, _>>()?
    };
    if a.load_min == 0 || a.load_min > a.load_max {
        return Err(format!("load range {}..{} is empty or starts at zero", a.load_min, a.load_max));
    }
    for (i, c) in [&a.class1, &a.class2, &a.class3].into_iter().enumerate() {
        if !c.is_empty() {
            coefficients(c, 1).check().map_err(|r| format!("class {}: {r}", i + 1))?;
        }
    }
    Ok(GeneratorConfig {
        n_full_instances: a.n_full_instances,
        full_tasks: a.full_tasks,
        full_drivers: a.full_drivers,
        task_sizes: a.task_sizes.clone(),
        driver_ratios: a.driver_ratios.clone(),
        region_half_width: a.region_half_width,
        load_range: (a.load_min, a.load_max),
        capacity: a.capacity,
        outsource_cost: a.outsource_cost,
        class_coefficients: [coefficients(&a.class1, 1), coefficients(&a.class2, 2), coefficients(&a.class3, 3)],
        patterns,
        master_seed: a.master_seed,
    })
}

fn generate(a: &GenerateArgs) -> Result<i32, RuntimeError> {
    let config = match generator_config(a) {
        Ok(c) => c,
        Err(msg) => return usage(msg),
    };
    fs::create_dir_all(&a.out_dir).map_err(with_path(&a.out_dir))?;
    let mut written = 0usize;
    if let Some(count) = a.tiny {
        for k in 0..count {
            let inst = bench::tiny_instance(bench::derive_seed(a.master_seed, &[k]));
            let path = a.out_dir.join(format!("tiny{k:03}.txt"));
            save_instance(&inst, &path).map_err(with_path(&path))?;
            written += 1;
        }
    } else {
        for (b, p, m, r) in bench::library_plan(&config) {
            let inst = bench::generate_instance(&config, b, p, m, r)?;
            let path = a.out_dir.join(format!("{}.txt", inst.name()));
            save_instance(&inst, &path).map_err(with_path(&path))?;
            written += 1;
        }
    }
    println!("wrote {written} instances to {}", a.out_dir.display());
    Ok(EXIT_OK)
}

fn solve(a: &SolveArgs) -> Result<i32, RuntimeError> {
    if a.workers == 0 {
        return usage("--workers must be at least 1");
    }
    if !(a.theta > 0.0 && a.theta <= 180.0) {
        return usage("--theta must be in (0, 180]");
    }
    if a.col_limit == 0 {
        return usage("--col-limit must be at least 1");
    }
    if a.time_limit.is_some_and(|t| t.is_nan() || t <= 0.0) {
        return usage("--time-limit must be positive");
    }
    let instance = load_instance(&a.instance).map_err(with_path(&a.instance))?;
    let mut config = VariantConfig::new(a.variant);
    config.theta_degrees = a.theta;
    config.column_limit = a.col_limit;
    config.rng_seed = a.seed;
    config.time_limit_seconds = a.time_limit.unwrap_or(f64::INFINITY);
    if let Some(cap) = a.pool_cap {
        config.pool_cap = cap;
    }

    let clock = WallClock::new();
    let threaded = ThreadedExecutor::new(a.workers);
    let executor: &dyn PricingExecutor = if a.workers > 1 { &threaded } else { &SequentialExecutor };
    let report = Solver::new(&clock, executor).run(&instance, &config);

    save_solution(&report.solution, &a.out).map_err(with_path(&a.out))?;
    if let Some(path) = &a.report {
        save_report(&report, path).map_err(with_path(path))?;
    }
    let opt = |v: Option<f64>| v.map_or_else(|| String::from("-"), |x| format!("{x:.6}"));
    println!(
        "{} {}: objective {:.6} upper bound {} gap_h {} offers {} status {} ({:.2} s)",
        report.instance_name,
        report.variant,
        report.solution.objective,
        opt(report.upper_bound),
        opt(report.gap_h),
        report.solution.offers.len(),
        report.status,
        report.wall_time_seconds
    );
    Ok(if report.status == SolveStatus::TimeLimit { EXIT_TIME_LIMIT } else { EXIT_OK })
}

fn load_reports(paths: &[PathBuf]) -> Result<Vec<crowdship_core::RunReport>, RuntimeError> {
    paths.iter().map(|p| load_report(p).map_err(with_path(p))).collect()
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), RuntimeError> {
    match out {
        Some(path) => fs::write(path, text).map_err(with_path(path)),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn gaps(a: &GapsArgs) -> Result<i32, RuntimeError> {
    let reports = load_reports(&a.reports)?;
    let references: BTreeMap<String, f64> =
        if a.reference.is_empty() { bench::best_known(&reports) } else { bench::best_known(&load_reports(&a.reference)?) };
    let mut table = String::new();
    let _ = writeln!(table, "{}", bench::METRICS_HEADER);
    for row in bench::compute_gaps(&reports, &references) {
        let _ = writeln!(table, "{}", row.to_tsv());
    }
    emit(a.out.as_deref(), &table)?;
    Ok(EXIT_OK)
}

fn sensitivity(a: &SensitivityArgs) -> Result<i32, RuntimeError> {
    let reports = load_reports(&a.reports)?;
    let mut instances = BTreeMap::new();
    for r in &reports {
        if !instances.contains_key(&r.instance_name) {
            let path = a.instance_dir.join(format!("{}.txt", r.instance_name));
            instances.insert(r.instance_name.clone(), load_instance(&path).map_err(with_path(&path))?);
        }
    }
    let runs: Vec<_> = reports.iter().map(|r| (&instances[&r.instance_name], &r.solution)).collect();
    let mut table = String::new();
    let _ = writeln!(table, "{}", bench::SENSITIVITY_HEADER);
    for row in bench::sensitivity_summary(&runs, a.group_by) {
        let _ = writeln!(table, "{}", row.to_tsv());
    }
    emit(a.out.as_deref(), &table)?;
    Ok(EXIT_OK)
}

fn run_oracle(a: &OracleArgs) -> Result<i32, RuntimeError> {
    let instance = load_instance(&a.instance).map_err(with_path(&a.instance))?;
    let solution = match oracle::solve(&instance) {
        Ok(s) => s,
        Err(e) => return usage(e),
    };
    if let Some(path) = &a.out {
        save_solution(&solution, path).map_err(with_path(path))?;
    }
    println!("{}", crate::format::real(solution.objective));
    Ok(EXIT_OK)
}
