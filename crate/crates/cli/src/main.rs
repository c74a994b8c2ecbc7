use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use prsplit::bench::{self, BenchConfig, OutputFormat, StepSchedule};
use prsplit::problems::{self, FeasibilityInstance};
use prsplit::splitting::{merit_dr, merit_pr, run_with_observer, Method};
use prsplit::Vector;

#[derive(Parser)]
#[command(name = "prsplit", version, about = "Peaceman-Rachford vs Douglas-Rachford on random sparse feasibility problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the randomized PR/DR comparison and write a results table.
    Bench(BenchArgs),
    /// Solve one random instance, optionally dumping a per-iteration trace.
    Solve(SolveArgs),
}

#[derive(Args)]
struct StepArgs {
    /// Initial γ for PR.
    #[arg(long)]
    pr_gamma0: Option<f64>,
    /// γ₁ for the PR heuristic.
    #[arg(long)]
    pr_gamma1: Option<f64>,
    /// Initial γ for DR.
    #[arg(long)]
    dr_gamma0: Option<f64>,
    /// γ₁ for the DR heuristic.
    #[arg(long)]
    dr_gamma1: Option<f64>,
    /// Keep γ fixed at its initial value.
    #[arg(long)]
    no_heuristic: bool,
}

impl StepArgs {
    fn apply(&self, method: Method, mut s: StepSchedule) -> StepSchedule {
        let (g0, g1) = match method {
            Method::PeacemanRachford => (self.pr_gamma0, self.pr_gamma1),
            Method::DouglasRachford => (self.dr_gamma0, self.dr_gamma1),
        };
        if let Some(g) = g0 {
            s.gamma0 = g;
        }
        if let Some(g) = g1 {
            s.gamma_floor = Some(g);
        }
        if self.no_heuristic {
            s.gamma_floor = None;
        }
        s
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated `MxN` shapes, e.g. `100x1000,150x500`.
    #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
    pairs: Option<Vec<(usize, usize)>>,
    /// Use the full-size shapes (m 100..500, n 4000..6000, 50 trials).
    #[arg(long)]
    full: bool,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "dr,pr")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    #[command(flatten)]
    steps: StepArgs,
    /// Output file; the table goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Print one line per solve to stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Read the instance from a file written by `--save-instance` instead.
    #[arg(long, conflicts_with_all = ["m", "n", "seed"])]
    instance: Option<PathBuf>,
    /// Write the generated instance in the plain-text format.
    #[arg(long)]
    save_instance: Option<PathBuf>,
    #[arg(long, default_value = "pr")]
    method: Method,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    #[command(flatten)]
    steps: StepArgs,
    /// Per-iteration CSV with columns t,gamma,merit,dz,fval.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (m, n) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("`{s}` is not of the form MxN"))?;
    let m = m.trim().parse().map_err(|_| format!("bad m in `{s}`"))?;
    let n = n.trim().parse().map_err(|_| format!("bad n in `{s}`"))?;
    Ok((m, n))
}

fn bench_cmd(args: BenchArgs) -> Result<()> {
    let mut cfg = if args.full { BenchConfig::full() } else { BenchConfig::desk() };
    if let Some(pairs) = args.pairs {
        cfg.pairs = pairs;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    cfg.methods = args.methods;
    cfg.base_seed = args.seed;
    cfg.tol = args.tol;
    cfg.max_iter = args.max_iter;
    cfg.pr = args.steps.apply(Method::PeacemanRachford, cfg.pr);
    cfg.dr = args.steps.apply(Method::DouglasRachford, cfg.dr);
    cfg.validate()?;

    let verbose = args.verbose;
    let rows = bench::run_bench_with_progress(&cfg, |m, n, trial, r| {
        if verbose {
            eprintln!(
                "{m}x{n} trial {trial:>3} {}: iter {:>6} fval {:.3e} {:?} ({:.2}s)",
                r.method, r.iterations, r.fval, r.outcome, r.seconds
            );
        }
    })?;
    match args.out {
        Some(path) => {
            bench::emit_table(&rows, args.format, &path).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{}", bench::render(&rows, args.format)?),
    }
    Ok(())
}

fn load_instance(args: &SolveArgs) -> Result<FeasibilityInstance> {
    let inst = match &args.instance {
        Some(path) => {
            let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            problems::read_instance(BufReader::new(f))?
        }
        None => problems::gen_feasibility(args.m, args.n, args.seed)?,
    };
    if let Some(path) = &args.save_instance {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        problems::write_instance(&inst, BufWriter::new(f))?;
    }
    Ok(inst)
}

fn solve_cmd(args: SolveArgs) -> Result<()> {
    let inst = load_instance(&args)?;
    let defaults = BenchConfig {
        tol: args.tol,
        max_iter: args.max_iter,
        ..BenchConfig::desk()
    };
    let mut cfg = defaults.solver_config(args.method);
    let schedule = args.steps.apply(args.method, defaults.schedule(args.method));
    cfg.gamma0 = schedule.gamma0;
    cfg.heuristic = schedule.gamma_floor.map(prsplit::splitting::Heuristic::new);
    cfg.validate()?;

    let mut problem = inst.split(args.method)?;
    let mut trace = match &args.trace {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
            writeln!(w, "t,gamma,merit,dz,fval")?;
            Some(w)
        }
        None => None,
    };
    let mut trace_err = None;
    let report = {
        // The observer only borrows the instance; the problem is borrowed by the engine.
        let merit_problem = inst.split(args.method)?;
        run_with_observer(&mut problem, &cfg, Vector::zeros(inst.cols()), |s, gamma| {
            let Some(w) = trace.as_mut() else { return };
            let merit = match args.method {
                Method::PeacemanRachford => merit_pr(&s.y, &s.z, &s.x, &merit_problem, gamma),
                Method::DouglasRachford => merit_dr(&s.y, &s.z, &s.x, &merit_problem, gamma),
            }
            .unwrap_or(f64::NAN);
            let fval = problems::evaluate_fval(&s.z, &inst);
            if let Err(e) = writeln!(w, "{},{:e},{:e},{:e},{:e}", s.t, gamma, merit, s.z.dist(&s.y), fval) {
                trace_err.get_or_insert(e);
            }
        })?
    };
    if let Some(e) = trace_err {
        bail!("writing trace: {e}");
    }
    if let Some(mut w) = trace {
        w.flush()?;
    }

    let fval = problems::evaluate_fval(&report.state.z, &inst);
    let outcome = problems::classify(fval).map(|o| format!("{o:?}")).unwrap_or_else(|_| "n/a".into());
    println!("method        {}", args.method);
    println!("instance      m={} n={} r={} seed={}", inst.rows(), inst.cols(), inst.sparse_set().sparsity(), inst.seed());
    println!("termination   {:?}", report.termination);
    println!("iterations    {}", report.iterations);
    println!("final gamma   {:e}", report.final_gamma().unwrap_or(cfg.gamma0));
    println!("fval          {fval:e} ({outcome})");
    if let Some(s) = report.stationarity {
        println!("stationarity  {:e}", s.practical);
    }
    println!("|z - y|       {:e}", report.state.z.dist(&report.state.y));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench(a) => bench_cmd(a),
        Command::Solve(a) => solve_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
