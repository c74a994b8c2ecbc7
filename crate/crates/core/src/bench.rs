//! Random sparse-feasibility benchmark comparing PR and DR.
//!
//! For each `(m, n)` pair and trial index an instance is generated from a
//! seed derived from `(base_seed, m, n, trial)`, solved from the origin by
//! every requested method, classified by `½d_C²(z)` at termination and
//! aggregated into one [`BenchRow`] per `(m, n, method)`.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::problems::{classify, evaluate_fval, gen_feasibility, FeasibilityInstance, Outcome};
use crate::splitting::{run, Heuristic, Method, SolverConfig, SolverReport, Termination};

/// Step-size schedule for one method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub gamma0: f64,
    /// γ₁ of the decreasing heuristic; `None` keeps γ fixed at `gamma0`.
    pub gamma_floor: Option<f64>,
}

impl StepSchedule {
    /// PR: start at `0.95/5`, halve toward `γ₁ = 1/12`.
    pub fn pr_default() -> Self {
        StepSchedule {
            gamma0: 0.95 / 5.0,
            gamma_floor: Some(1.0 / 12.0),
        }
    }

    /// DR: start at `0.95`, halve toward `γ₁ = 1/3`, which keeps the
    /// settled step below `1/L = 1`.
    pub fn dr_default() -> Self {
        StepSchedule {
            gamma0: 0.95,
            gamma_floor: Some(1.0 / 3.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            other => Err(Error::Parse(format!("unknown format `{other}` (expected csv or markdown)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub pairs: Vec<(usize, usize)>,
    pub trials: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    pub tol: f64,
    pub max_iter: usize,
    pub pr: StepSchedule,
    pub dr: StepSchedule,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl BenchConfig {
    /// `m ∈ {50, 100, 150}`, `n ∈ {500, 1000}`, 20 trials.
    pub fn desk() -> Self {
        let pairs = [50, 100, 150]
            .iter()
            .flat_map(|&m| [500, 1000].into_iter().map(move |n| (m, n)))
            .collect();
        BenchConfig {
            pairs,
            trials: 20,
            base_seed: 42,
            methods: vec![Method::DouglasRachford, Method::PeacemanRachford],
            tol: SolverConfig::DEFAULT_TOL,
            max_iter: SolverConfig::DEFAULT_MAX_ITER,
            pr: StepSchedule::pr_default(),
            dr: StepSchedule::dr_default(),
        }
    }

    /// `m ∈ {100, …, 500}`, `n ∈ {4000, 5000, 6000}`, 50 trials.
    pub fn full() -> Self {
        let pairs = [100, 200, 300, 400, 500]
            .iter()
            .flat_map(|&m| [4000, 5000, 6000].into_iter().map(move |n| (m, n)))
            .collect();
        BenchConfig {
            pairs,
            trials: 50,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::InvalidConfig("no (m, n) pairs".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        for &(m, n) in &self.pairs {
            if m < 5 || n < m {
                return Err(Error::InvalidConfig(format!("pair {m}x{n}: need m ≥ 5 and n ≥ m")));
            }
        }
        self.solver_config(Method::PeacemanRachford).validate()?;
        self.solver_config(Method::DouglasRachford).validate()
    }

    pub fn schedule(&self, method: Method) -> StepSchedule {
        match method {
            Method::PeacemanRachford => self.pr,
            Method::DouglasRachford => self.dr,
        }
    }

    pub fn solver_config(&self, method: Method) -> SolverConfig {
        let s = self.schedule(method);
        let mut cfg = SolverConfig::new(method, s.gamma0)
            .with_tol(self.tol)
            .with_max_iter(self.max_iter);
        if let Some(floor) = s.gamma_floor {
            cfg = cfg.with_heuristic(Heuristic::new(floor));
        }
        cfg
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// `base ⊕ h(m, n, trial)` with `h` a SplitMix64 chain.
pub fn trial_seed(base: u64, m: usize, n: usize, trial: usize) -> u64 {
    let h = splitmix64(splitmix64(splitmix64(m as u64) ^ n as u64) ^ trial as u64);
    base ^ h
}

/// One solve of one instance.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub method: Method,
    pub iterations: usize,
    pub termination: Termination,
    pub fval: f64,
    pub outcome: Outcome,
    pub seconds: f64,
}

/// Solves `inst` from the origin with the schedule for `method`.
pub fn solve_instance(inst: &FeasibilityInstance, cfg: &SolverConfig) -> Result<(SolverReport, TrialResult)> {
    let mut problem = inst.split(cfg.method)?;
    let start = Instant::now();
    let report = run(&mut problem, cfg, Vector::zeros(inst.cols()))?;
    let seconds = start.elapsed().as_secs_f64();
    let fval = evaluate_fval(&report.state.z, inst);
    let outcome = if report.termination == Termination::Diverged || !fval.is_finite() {
        log::warn!(
            "{} diverged on seed {} after {} iterations",
            cfg.method,
            inst.seed(),
            report.iterations
        );
        Outcome::Failure
    } else {
        classify(fval)?
    };
    let trial = TrialResult {
        method: cfg.method,
        iterations: report.iterations,
        termination: report.termination,
        fval: if fval.is_finite() { fval } else { f64::INFINITY },
        outcome,
        seconds,
    };
    Ok((report, trial))
}

/// Aggregate statistics for one `(m, n, method)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub m: usize,
    pub n: usize,
    pub method: Method,
    pub mean_iterations: f64,
    pub fval_max: f64,
    pub fval_min: f64,
    pub successes: usize,
    pub failures: usize,
    pub undecided: usize,
    pub mean_seconds: f64,
}

impl BenchRow {
    pub fn trials(&self) -> usize {
        self.successes + self.failures + self.undecided
    }

    pub fn aggregate(m: usize, n: usize, method: Method, trials: &[TrialResult]) -> Self {
        let count = trials.len() as f64;
        let count_of = |o: Outcome| trials.iter().filter(|t| t.outcome == o).count();
        BenchRow {
            m,
            n,
            method,
            mean_iterations: trials.iter().map(|t| t.iterations as f64).sum::<f64>() / count,
            fval_max: trials.iter().map(|t| t.fval).fold(f64::NEG_INFINITY, f64::max),
            fval_min: trials.iter().map(|t| t.fval).fold(f64::INFINITY, f64::min),
            successes: count_of(Outcome::Success),
            failures: count_of(Outcome::Failure),
            undecided: count_of(Outcome::Undecided),
            mean_seconds: trials.iter().map(|t| t.seconds).sum::<f64>() / count,
        }
    }
}

/// Runs the whole protocol. Rows come out pair by pair, methods in the
/// order given by `cfg.methods`.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    run_bench_with_progress(cfg, |_, _, _, _| {})
}

/// [`run_bench`] with a callback `(m, n, trial, result)` after every solve.
pub fn run_bench_with_progress<P>(cfg: &BenchConfig, mut progress: P) -> Result<Vec<BenchRow>>
where
    P: FnMut(usize, usize, usize, &TrialResult),
{
    cfg.validate()?;
    let solver_cfgs: Vec<SolverConfig> = cfg.methods.iter().map(|&m| cfg.solver_config(m)).collect();
    let mut rows = Vec::with_capacity(cfg.pairs.len() * cfg.methods.len());
    for &(m, n) in &cfg.pairs {
        let mut per_method: Vec<Vec<TrialResult>> = vec![Vec::with_capacity(cfg.trials); cfg.methods.len()];
        for trial in 0..cfg.trials {
            let inst = gen_feasibility(m, n, trial_seed(cfg.base_seed, m, n, trial))?;
            for (k, scfg) in solver_cfgs.iter().enumerate() {
                let (_, result) = solve_instance(&inst, scfg)?;
                progress(m, n, trial, &result);
                per_method[k].push(result);
            }
        }
        for (k, &method) in cfg.methods.iter().enumerate() {
            rows.push(BenchRow::aggregate(m, n, method, &per_method[k]));
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Output

/// One significant digit with a signed two-digit exponent, e.g. `3e-02`.
pub fn format_sci(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.0e}");
    let (mant, exp) = s.split_once('e').expect("LowerExp always has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

pub const CSV_HEADER: [&str; 10] = [
    "m", "n", "method", "iter", "fval_max", "fval_min", "succ", "fail", "undecided", "seconds",
];

pub fn render_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.n.to_string(),
            r.method.label().to_string(),
            format!("{:.1}", r.mean_iterations),
            format_sci(r.fval_max),
            format_sci(r.fval_min),
            r.successes.to_string(),
            r.failures.to_string(),
            r.undecided.to_string(),
            format!("{:.4}", r.mean_seconds),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse(format!("unexpected CSV header {headers:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::Parse(format!("missing column {}", CSV_HEADER[i])));
        let num = |i: usize| -> Result<f64> {
            field(i)?
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad {} value", CSV_HEADER[i])))
        };
        let count = |i: usize| -> Result<usize> {
            field(i)?
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad {} value", CSV_HEADER[i])))
        };
        rows.push(BenchRow {
            m: count(0)?,
            n: count(1)?,
            method: field(2)?.parse()?,
            mean_iterations: num(3)?,
            fval_max: num(4)?,
            fval_min: num(5)?,
            successes: count(6)?,
            failures: count(7)?,
            undecided: count(8)?,
            mean_seconds: num(9)?,
        });
    }
    Ok(rows)
}

/// Table with one line per `(m, n)` and a column group per method, in the
/// order methods first appear in `rows`.
pub fn render_markdown(rows: &[BenchRow]) -> String {
    let mut methods: Vec<Method> = Vec::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
        if !pairs.contains(&(r.m, r.n)) {
            pairs.push((r.m, r.n));
        }
    }
    let group = ["iter", "fval_max", "fval_min", "succ", "fail", "undecided", "seconds"];
    let mut out = String::from("| m | n |");
    for m in &methods {
        for g in group {
            out.push_str(&format!(" {m} {g} |"));
        }
    }
    out.push_str("\n|---:|---:|");
    for _ in &methods {
        out.push_str(&"---:|".repeat(group.len()));
    }
    out.push('\n');
    for &(m, n) in &pairs {
        out.push_str(&format!("| {m} | {n} |"));
        for method in &methods {
            match rows.iter().find(|r| r.m == m && r.n == n && r.method == *method) {
                Some(r) => out.push_str(&format!(
                    " {:.0} | {} | {} | {} | {} | {} | {:.3} |",
                    r.mean_iterations,
                    format_sci(r.fval_max),
                    format_sci(r.fval_min),
                    r.successes,
                    r.failures,
                    r.undecided,
                    r.mean_seconds
                )),
                None => out.push_str(&" |".repeat(group.len())),
            }
        }
        out.push('\n');
    }
    out
}

pub fn render(rows: &[BenchRow], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => render_csv(rows),
        OutputFormat::Markdown => Ok(render_markdown(rows)),
    }
}

/// Writes `rows` to `path` in the requested format.
pub fn emit_table(rows: &[BenchRow], format: OutputFormat, path: &Path) -> Result<()> {
    use std::io::Write;
    if rows.is_empty() {
        return Err(Error::InvalidConfig("no rows to emit".into()));
    }
    let text = render(rows, format)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}
