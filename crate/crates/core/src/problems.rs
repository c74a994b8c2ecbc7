//! Application problems assembled into [`SplitProblem`]s.
//!
//! * Sparse feasibility: find `x` with `Ax = b`, `‖x‖₀ ≤ r`, `‖x‖∞ ≤ 10⁶`,
//!   posed as `min ½d_C² + δ_D` and shifted by `α = 5` for PR.
//! * Constrained least squares: `min_{u∈D} ½‖Au − b‖²`, shifted by
//!   `α = 5λ_max(AᵀA)`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::functions::{
    AffineSet, ConstraintSet, HalfSqDist, Indicator, ShiftedHalfSqDist, ShiftedLeastSquares, ShiftedProx,
    SparseBoxSet,
};
use crate::linalg::{lipschitz_upper_bound, DenseMatrix, GaussianSource, Vector};
use crate::splitting::{Method, SplitProblem};

/// `ℓ∞` cap on the sparse set in the random experiments.
pub const FEASIBILITY_BOUND: f64 = 1e6;

/// Random sparse linear system `Ax = b` with a planted `r`-sparse solution.
#[derive(Debug, Clone)]
pub struct FeasibilityInstance {
    set: Arc<AffineSet>,
    sparse: SparseBoxSet,
    seed: u64,
    planted: Vector,
    support: Vec<usize>,
}

impl FeasibilityInstance {
    /// Assembles an instance from its parts, checking `A x̃ = b`.
    pub fn from_parts(a: DenseMatrix, support: Vec<usize>, values: Vec<f64>, r: usize, bound: f64, seed: u64) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                found: values.len(),
            });
        }
        let n = a.cols();
        let mut planted = Vector::zeros(n);
        for (&i, &v) in support.iter().zip(&values) {
            if i >= n {
                return Err(Error::InvalidConfig(format!("support index {i} out of range for n = {n}")));
            }
            planted[i] = v;
        }
        let sparse = SparseBoxSet::new(r, bound)?;
        if planted.count_nonzero() > r {
            return Err(Error::InvalidConfig("planted solution exceeds the sparsity level".into()));
        }
        let b = a.mul_vec(&planted);
        let set = Arc::new(AffineSet::new(a, b)?);
        Ok(FeasibilityInstance {
            set,
            sparse,
            seed,
            planted,
            support,
        })
    }

    pub fn rows(&self) -> usize {
        self.set.matrix().rows()
    }

    pub fn cols(&self) -> usize {
        self.set.matrix().cols()
    }

    pub fn affine(&self) -> &Arc<AffineSet> {
        &self.set
    }

    pub fn sparse_set(&self) -> SparseBoxSet {
        self.sparse
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn planted(&self) -> &Vector {
        &self.planted
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// The split for `method`: shifted pair for PR, plain pair for DR.
    pub fn split(&self, method: Method) -> Result<SplitProblem> {
        match method {
            Method::PeacemanRachford => build_feasibility_pr(self),
            Method::DouglasRachford => build_feasibility_dr(self),
        }
    }
}

/// `⌈m/5⌉`
pub fn sparsity_for(m: usize) -> usize {
    m.div_ceil(5)
}

/// Draws `A` (m×n, N(0,1)), then `x̂ ∈ Rʳ` (N(0,1)), then `r` support
/// positions by partial Fisher–Yates, all from one seeded stream; sets
/// `b = A x̃`.
pub fn gen_feasibility(m: usize, n: usize, seed: u64) -> Result<FeasibilityInstance> {
    if m < 5 || n < m {
        return Err(Error::InvalidConfig(format!("need m ≥ 5 and n ≥ m, got m = {m}, n = {n}")));
    }
    let r = sparsity_for(m);
    let mut rng = GaussianSource::new(seed);
    let a = rng.matrix(m, n);
    let values = rng.vector(r).into_inner();
    let support = rng.choose_indices(n, r);
    FeasibilityInstance::from_parts(a, support, values, r, FEASIBILITY_BOUND, seed)
}

/// PR split: `f = ½d_C² + (5/2)‖·‖²` (σ = 5, L = 6) and
/// `g = δ_D − (5/2)‖·‖²`, whose prox is `P_D(w/(1 − 5γ))`.
pub fn build_feasibility_pr(inst: &FeasibilityInstance) -> Result<SplitProblem> {
    build_shifted_feasibility(inst.set.clone(), ConstraintSet::SparseBox(inst.sparse))
}

/// Shifted split of `½d_C² + δ_D` for any constraint set `D` (L_F = 1).
pub fn build_shifted_feasibility(set: Arc<AffineSet>, d: ConstraintSet) -> Result<SplitProblem> {
    let n = set.dim();
    let f = ShiftedHalfSqDist::new(set);
    let g = ShiftedProx::new(Indicator::new(d), ShiftedHalfSqDist::SHIFT);
    SplitProblem::new(Box::new(f), Box::new(g), n)
}

/// DR baseline split: `f = ½d_C²` (σ = 0, L = 1), `g = δ_D`.
pub fn build_feasibility_dr(inst: &FeasibilityInstance) -> Result<SplitProblem> {
    let n = inst.cols();
    let f = HalfSqDist::new(inst.set.clone());
    let g = Indicator::new(ConstraintSet::SparseBox(inst.sparse));
    SplitProblem::baseline(Box::new(f), Box::new(g), n)
}

/// `min_{u∈D} ½‖Au − b‖²`.
#[derive(Debug, Clone)]
pub struct LsInstance {
    a: Arc<DenseMatrix>,
    b: Vector,
    constraint: ConstraintSet,
    lambda_max: f64,
}

impl LsInstance {
    /// Estimates `λ_max(AᵀA)` by power iteration (inflated by `1 + 1e-6`).
    pub fn new(a: DenseMatrix, b: Vector, constraint: ConstraintSet) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: b.len(),
            });
        }
        let lambda_max = lipschitz_upper_bound(&a)?;
        Ok(LsInstance {
            a: Arc::new(a),
            b,
            constraint,
            lambda_max,
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &Vector {
        &self.b
    }

    pub fn constraint(&self) -> &ConstraintSet {
        &self.constraint
    }

    /// The `λ_max(AᵀA)` estimate used as `L_F`.
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// `½‖Au − b‖²`
    pub fn loss(&self, u: &Vector) -> f64 {
        0.5 * self.a.mul_vec(u).dist_sq(&self.b)
    }
}

/// `f = ½‖A·−b‖² + (5λ/2)‖·‖²` (σ = 5λ, L = 6λ) and
/// `g = δ_D − (5λ/2)‖·‖²` with prox `P_D(w/(1 − 5λγ))`.
pub fn build_constrained_ls(inst: &LsInstance) -> Result<SplitProblem> {
    let n = inst.a.cols();
    let f = ShiftedLeastSquares::new(inst.a.clone(), inst.b.clone(), inst.lambda_max)?;
    let g = ShiftedProx::new(Indicator::new(inst.constraint), 5.0 * inst.lambda_max);
    SplitProblem::new(Box::new(f), Box::new(g), n)
}

/// `½‖z − P_C(z)‖²`, the reported function value.
pub fn evaluate_fval(z: &Vector, inst: &FeasibilityInstance) -> f64 {
    inst.set.half_sq_dist(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Success,
    Failure,
    Undecided,
}

pub const SUCCESS_BELOW: f64 = 1e-12;
pub const FAILURE_ABOVE: f64 = 1e-6;

/// `< 1e-12` success, `> 1e-6` failure, in between undecided.
pub fn classify(fval: f64) -> Result<Outcome> {
    if fval < 0.0 {
        return Err(Error::NegativeValue(fval));
    }
    Ok(if fval < SUCCESS_BELOW {
        Outcome::Success
    } else if fval > FAILURE_ABOVE {
        Outcome::Failure
    } else {
        // NaN lands here too; callers treat non-finite values as failures first.
        Outcome::Undecided
    })
}

// ---------------------------------------------------------------------------
// Plain-text instance format
//
//   prsplit-feasibility 1
//   dims <m> <n>
//   sparsity <r> <bound>
//   seed <seed>
//   A
//   <m lines of n values>
//   b
//   <one line of m values>
//   support
//   <r lines: index value>
//
// Floats use Rust's shortest round-trip representation.

const MAGIC: &str = "prsplit-feasibility 1";

pub fn write_instance<W: Write>(inst: &FeasibilityInstance, mut out: W) -> Result<()> {
    let a = inst.set.matrix();
    let mut buf = String::new();
    writeln!(buf, "{MAGIC}").unwrap();
    writeln!(buf, "dims {} {}", a.rows(), a.cols()).unwrap();
    writeln!(buf, "sparsity {} {}", inst.sparse.sparsity(), inst.sparse.bound()).unwrap();
    writeln!(buf, "seed {}", inst.seed).unwrap();
    buf.push_str("A\n");
    for i in 0..a.rows() {
        let row: Vec<String> = a.row(i).iter().map(|v| v.to_string()).collect();
        buf.push_str(&row.join(" "));
        buf.push('\n');
    }
    buf.push_str("b\n");
    let b: Vec<String> = inst.set.rhs().iter().map(|v| v.to_string()).collect();
    buf.push_str(&b.join(" "));
    buf.push_str("\nsupport\n");
    for &i in &inst.support {
        writeln!(buf, "{} {}", i, inst.planted[i]).unwrap();
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.ok_or_else(|| parse_err(format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(format!("bad {what}")))
}

/// Reads an instance written by [`write_instance`]. `b` is recomputed from
/// `A` and the support and checked against the stored copy.
pub fn read_instance<R: BufRead>(input: R) -> Result<FeasibilityInstance> {
    let mut lines = input.lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| parse_err(format!("unexpected end of input before {what}")))?
            .map_err(Error::from)
    };
    if next("header")?.trim() != MAGIC {
        return Err(parse_err("not a prsplit feasibility instance"));
    }
    let dims = next("dims")?;
    let mut t = dims.split_whitespace();
    if t.next() != Some("dims") {
        return Err(parse_err("expected `dims`"));
    }
    let m: usize = parse_num(t.next(), "m")?;
    let n: usize = parse_num(t.next(), "n")?;
    let sp = next("sparsity")?;
    let mut t = sp.split_whitespace();
    if t.next() != Some("sparsity") {
        return Err(parse_err("expected `sparsity`"));
    }
    let r: usize = parse_num(t.next(), "r")?;
    let bound: f64 = parse_num(t.next(), "bound")?;
    let sd = next("seed")?;
    let mut t = sd.split_whitespace();
    if t.next() != Some("seed") {
        return Err(parse_err("expected `seed`"));
    }
    let seed: u64 = parse_num(t.next(), "seed")?;
    if next("A")?.trim() != "A" {
        return Err(parse_err("expected `A`"));
    }
    let mut data = Vec::with_capacity(m * n);
    for i in 0..m {
        let row = next("matrix row")?;
        let before = data.len();
        for tok in row.split_whitespace() {
            data.push(parse_num::<f64>(Some(tok), "matrix entry")?);
        }
        if data.len() - before != n {
            return Err(parse_err(format!("row {i} has {} entries, expected {n}", data.len() - before)));
        }
    }
    let a = DenseMatrix::new(m, n, data)?;
    if next("b")?.trim() != "b" {
        return Err(parse_err("expected `b`"));
    }
    let b: Vec<f64> = next("rhs")?
        .split_whitespace()
        .map(|tok| parse_num(Some(tok), "rhs entry"))
        .collect::<Result<_>>()?;
    if b.len() != m {
        return Err(parse_err(format!("rhs has {} entries, expected {m}", b.len())));
    }
    if next("support")?.trim() != "support" {
        return Err(parse_err("expected `support`"));
    }
    let mut support = Vec::new();
    let mut values = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut t = line.split_whitespace();
        support.push(parse_num(t.next(), "support index")?);
        values.push(parse_num(t.next(), "support value")?);
    }
    let inst = FeasibilityInstance::from_parts(a, support, values, r, bound, seed)?;
    let stored = Vector::from(b);
    if inst.set.rhs().dist(&stored) > 1e-9 * (1.0 + stored.norm()) {
        return Err(parse_err("stored b does not match A·x̃"));
    }
    Ok(inst)
}
