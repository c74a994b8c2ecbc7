//! Peaceman–Rachford and Douglas–Rachford iterations for `min f + g`.
//!
//! One PR step from `x` with step size `γ`:
//!
//! ```text
//! y' = prox_{γf}(x)
//! z' ∈ prox_{γg}(2y' − x)
//! x' = x + 2(z' − y')
//! ```
//!
//! DR is identical except that `x' = x + (z' − y')`. For PR the merit
//! function
//!
//! ```text
//! P_γ(y,z,x) = f(y) + g(z) − (3/2γ)‖y − z‖² + (1/γ)⟨x − y, z − y⟩
//! ```
//!
//! is nonincreasing along the iterates (from the first step on) whenever
//! `3σ > 2L` and `0 < γ < (3σ − 2L)/L²`, where σ and L are the strong
//! convexity and gradient Lipschitz moduli of `f`. DR uses
//! `D_γ = P_γ + (1/γ)‖y − z‖²`.

use crate::error::{Error, Result};
use crate::functions::{ProxOracle, SmoothOracle};
use crate::linalg::Vector;

/// Which x-update to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Reflection factor 2.
    PeacemanRachford,
    /// Reflection factor 1.
    DouglasRachford,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::PeacemanRachford => "PR",
            Method::DouglasRachford => "DR",
        }
    }

    fn reflection(&self) -> f64 {
        match self {
            Method::PeacemanRachford => 2.0,
            Method::DouglasRachford => 1.0,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pr" => Ok(Method::PeacemanRachford),
            "dr" => Ok(Method::DouglasRachford),
            other => Err(Error::Parse(format!("unknown method `{other}` (expected pr or dr)"))),
        }
    }
}

/// The pair `(f, g)` both engines iterate on.
pub struct SplitProblem {
    f: Box<dyn SmoothOracle>,
    g: Box<dyn ProxOracle>,
    dim: usize,
}

impl std::fmt::Debug for SplitProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitProblem")
            .field("dim", &self.dim)
            .field("sigma", &self.f.strong_convexity())
            .field("lipschitz", &self.f.lipschitz())
            .finish()
    }
}

impl SplitProblem {
    /// Requires `σ > 0` and `L ≥ σ`.
    pub fn new(f: Box<dyn SmoothOracle>, g: Box<dyn ProxOracle>, dim: usize) -> Result<Self> {
        let (sigma, l) = (f.strong_convexity(), f.lipschitz());
        if !(sigma > 0.0 && l >= sigma) {
            return Err(Error::InvalidConfig(format!(
                "split problem needs σ > 0 and L ≥ σ, got σ = {sigma}, L = {l}"
            )));
        }
        Ok(SplitProblem { f, g, dim })
    }

    /// Like [`SplitProblem::new`] but admits `σ = 0`, for the DR baseline.
    pub fn baseline(f: Box<dyn SmoothOracle>, g: Box<dyn ProxOracle>, dim: usize) -> Result<Self> {
        let (sigma, l) = (f.strong_convexity(), f.lipschitz());
        if !(sigma >= 0.0 && l > 0.0 && l >= sigma) {
            return Err(Error::InvalidConfig(format!(
                "baseline problem needs σ ≥ 0 and L ≥ σ, got σ = {sigma}, L = {l}"
            )));
        }
        Ok(SplitProblem { f, g, dim })
    }

    pub fn f(&self) -> &dyn SmoothOracle {
        self.f.as_ref()
    }

    pub fn g(&self) -> &dyn ProxOracle {
        self.g.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> f64 {
        self.f.strong_convexity()
    }

    pub fn lipschitz(&self) -> f64 {
        self.f.lipschitz()
    }

    /// Lets γ-dependent oracles refresh cached factorizations.
    pub fn prepare(&mut self, gamma: f64) -> Result<()> {
        self.f.prepare(gamma)
    }

    /// `(3σ − 2L)/L²` for this problem's `f`.
    pub fn gamma_threshold(&self) -> Result<f64> {
        gamma_threshold(self.sigma(), self.lipschitz())
    }
}

/// Supremum of admissible PR step sizes, `(3σ − 2L)/L²`.
pub fn gamma_threshold(sigma: f64, lipschitz: f64) -> Result<f64> {
    if !(3.0 * sigma > 2.0 * lipschitz) {
        return Err(Error::InsufficientStrongConvexity { sigma, lipschitz });
    }
    Ok((3.0 * sigma - 2.0 * lipschitz) / (lipschitz * lipschitz))
}

/// `(yᵗ, zᵗ, xᵗ)` plus the subgradient of `g` at `zᵗ` that the last step
/// certified: `v = (2yᵗ − xᵗ⁻¹ − zᵗ)/γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub y: Vector,
    pub z: Vector,
    pub x: Vector,
    pub t: usize,
    subgradient: Option<Vector>,
}

impl IterateState {
    /// `y = z = x = x0`, `t = 0`.
    pub fn initial(x0: Vector) -> Self {
        IterateState {
            y: x0.clone(),
            z: x0.clone(),
            x: x0,
            t: 0,
            subgradient: None,
        }
    }

    pub fn subgradient(&self) -> Option<&Vector> {
        self.subgradient.as_ref()
    }

    pub fn is_finite(&self) -> bool {
        self.y.is_finite() && self.z.is_finite() && self.x.is_finite()
    }

    pub fn max_norm(&self) -> f64 {
        self.y.norm().max(self.z.norm()).max(self.x.norm())
    }
}

fn step(method: Method, s: &IterateState, p: &SplitProblem, gamma: f64) -> Result<IterateState> {
    if s.x.len() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: s.x.len(),
        });
    }
    let y = p.f.prox(gamma, &s.x)?;
    let reflected = y.combine(2.0, &s.x, -1.0);
    let z = p.g.prox(gamma, &reflected)?;
    let mut x = s.x.clone();
    let gap = z.sub(&y);
    x.axpy(method.reflection(), &gap);
    let subgradient = reflected.combine(1.0 / gamma, &z, -1.0 / gamma);
    Ok(IterateState {
        y,
        z,
        x,
        t: s.t + 1,
        subgradient: Some(subgradient),
    })
}

/// One Peaceman–Rachford step.
pub fn pr_step(s: &IterateState, p: &SplitProblem, gamma: f64) -> Result<IterateState> {
    step(Method::PeacemanRachford, s, p, gamma)
}

/// One Douglas–Rachford step.
pub fn dr_step(s: &IterateState, p: &SplitProblem, gamma: f64) -> Result<IterateState> {
    step(Method::DouglasRachford, s, p, gamma)
}

fn objective_parts(y: &Vector, z: &Vector, p: &SplitProblem) -> Result<(f64, f64)> {
    let fy = p.f.value(y);
    let gz = p.g.value(z);
    if !fy.is_finite() {
        return Err(Error::InfiniteValue("f(y)"));
    }
    if !gz.is_finite() {
        return Err(Error::InfiniteValue("g(z)"));
    }
    Ok((fy, gz))
}

/// The three algebraically equal expressions of `P_γ(y,z,x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeritForms {
    /// `f + g − (3/2γ)‖y−z‖² + (1/γ)⟨x−y, z−y⟩`
    pub inner_product: f64,
    /// `f + g + (1/2γ)‖2y−z−x‖² − (1/2γ)‖x−y‖² − (2/γ)‖y−z‖²`
    pub reflected: f64,
    /// `f + g + (1/2γ)(‖x−y‖² − ‖x−z‖² − 2‖y−z‖²)`
    pub distances: f64,
    /// Magnitude of the summed terms, for relative comparisons.
    pub scale: f64,
}

impl MeritForms {
    pub fn max_relative_disagreement(&self) -> f64 {
        let v = [self.inner_product, self.reflected, self.distances];
        let spread = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - v.iter().cloned().fold(f64::INFINITY, f64::min);
        spread / self.scale.max(1.0)
    }
}

pub fn merit_pr_forms(y: &Vector, z: &Vector, x: &Vector, p: &SplitProblem, gamma: f64) -> Result<MeritForms> {
    let (fy, gz) = objective_parts(y, z, p)?;
    let xy = x.sub(y);
    let zy = z.sub(y);
    let yz_sq = zy.norm_sq();
    let xy_sq = xy.norm_sq();
    let xz_sq = x.dist_sq(z);
    let refl_sq = xy.combine(-1.0, &zy, -1.0).norm_sq(); // 2y − z − x = −(x−y) − (z−y)
    let base = fy + gz;
    let inner_product = base - 1.5 / gamma * yz_sq + xy.dot(&zy) / gamma;
    let reflected = base + refl_sq / (2.0 * gamma) - xy_sq / (2.0 * gamma) - 2.0 / gamma * yz_sq;
    let distances = base + (xy_sq - xz_sq - 2.0 * yz_sq) / (2.0 * gamma);
    let scale = fy.abs() + gz.abs() + (xy_sq + xz_sq + yz_sq + refl_sq) / gamma;
    Ok(MeritForms {
        inner_product,
        reflected,
        distances,
        scale,
    })
}

/// Peaceman–Rachford merit `P_γ(y,z,x)`.
pub fn merit_pr(y: &Vector, z: &Vector, x: &Vector, p: &SplitProblem, gamma: f64) -> Result<f64> {
    let forms = merit_pr_forms(y, z, x, p, gamma)?;
    debug_assert!(
        forms.max_relative_disagreement() <= 1e-9,
        "merit expressions disagree: {forms:?}"
    );
    Ok(forms.inner_product)
}

/// Douglas–Rachford merit `D_γ(y,z,x) = P_γ(y,z,x) + (1/γ)‖y − z‖²`.
pub fn merit_dr(y: &Vector, z: &Vector, x: &Vector, p: &SplitProblem, gamma: f64) -> Result<f64> {
    let (fy, gz) = objective_parts(y, z, p)?;
    let xy = x.sub(y);
    let zy = z.sub(y);
    Ok(fy + gz - zy.norm_sq() / (2.0 * gamma) + xy.dot(&zy) / gamma)
}

fn merit(method: Method, s: &IterateState, p: &SplitProblem, gamma: f64) -> Result<f64> {
    match method {
        Method::PeacemanRachford => merit_pr(&s.y, &s.z, &s.x, p, gamma),
        Method::DouglasRachford => merit_dr(&s.y, &s.z, &s.x, p, gamma),
    }
}

/// Stationarity residuals of a post-step state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stationarity {
    /// `‖∇f(y) + v + (z − y)/γ‖`; zero up to rounding by construction.
    pub at_y: f64,
    /// `‖∇f(z) + v + (z − y)/γ‖`, the residual of the merged point.
    pub practical: f64,
}

pub fn stationarity_residual(s: &IterateState, p: &SplitProblem, gamma: f64) -> Result<Stationarity> {
    let v = s.subgradient.as_ref().ok_or(Error::NoStep)?;
    let mut common = v.clone();
    common.axpy(1.0 / gamma, &s.z.sub(&s.y));
    Ok(Stationarity {
        at_y: p.f.gradient(&s.y).add(&common).norm(),
        practical: p.f.gradient(&s.z).add(&common).norm(),
    })
}

/// `max(‖Δx‖, ‖Δy‖, ‖Δz‖) / max(‖x‖, ‖y‖, ‖z‖, 1)` with the denominators
/// taken at the previous iterate.
pub fn relative_change(prev: &IterateState, next: &IterateState) -> f64 {
    let num = next
        .x
        .dist(&prev.x)
        .max(next.y.dist(&prev.y))
        .max(next.z.dist(&prev.z));
    let den = prev.x.norm().max(prev.y.norm()).max(prev.z.norm()).max(1.0);
    num / den
}

/// Step-size heuristic: start large and halve toward a floor γ₁ while the
/// iterates look unstable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Heuristic {
    /// γ₁: the rule never acts once γ ≤ γ₁, and never goes below `floor_factor·γ₁`.
    pub gamma_floor: f64,
    /// Multiplier applied on each decrease.
    pub shrink: f64,
    /// The decreased γ is at least `floor_factor·γ₁`.
    pub floor_factor: f64,
    /// Trigger when `‖yᵗ − yᵗ⁻¹‖ > step_budget/t`.
    pub step_budget: f64,
    /// ...or when `‖yᵗ‖ > blowup`.
    pub blowup: f64,
}

impl Heuristic {
    pub fn new(gamma_floor: f64) -> Self {
        Heuristic {
            gamma_floor,
            shrink: 0.5,
            floor_factor: 0.9999,
            step_budget: 1000.0,
            blowup: 1e10,
        }
    }

    pub fn update(&self, gamma: f64, t: usize, y_t: &Vector, y_prev: &Vector) -> f64 {
        if gamma <= self.gamma_floor {
            return gamma;
        }
        let unstable = y_t.dist(y_prev) > self.step_budget / t.max(1) as f64 || y_t.norm() > self.blowup;
        if unstable {
            (self.shrink * gamma).max(self.floor_factor * self.gamma_floor)
        } else {
            gamma
        }
    }
}

/// `max(γ/2, 0.9999·γ₁)` if `γ > γ₁` and either `‖yᵗ − yᵗ⁻¹‖ > 1000/t` or
/// `‖yᵗ‖ > 10¹⁰`; otherwise `γ`.
pub fn heuristic_update(gamma: f64, t: usize, y_t: &Vector, y_prev: &Vector, gamma_floor: f64) -> f64 {
    Heuristic::new(gamma_floor).update(gamma, t, y_t, y_prev)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub gamma0: f64,
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    pub heuristic: Option<Heuristic>,
    pub record_trace: bool,
}

impl SolverConfig {
    pub const DEFAULT_TOL: f64 = 1e-8;
    pub const DEFAULT_MAX_ITER: usize = 50_000;
    /// Iterates with `‖y‖` above this are treated as divergent.
    pub const DIVERGENCE_NORM: f64 = 1e12;

    pub fn new(method: Method, gamma0: f64) -> Self {
        SolverConfig {
            gamma0,
            method,
            tol: Self::DEFAULT_TOL,
            max_iter: Self::DEFAULT_MAX_ITER,
            heuristic: None,
            record_trace: false,
        }
    }

    /// Fixed γ at 99% of the PR threshold of `p`.
    pub fn fixed_step(p: &SplitProblem, method: Method) -> Result<Self> {
        Ok(Self::new(method, 0.99 * p.gamma_threshold()?))
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_heuristic(mut self, heuristic: Heuristic) -> Self {
        self.heuristic = Some(heuristic);
        self
    }

    pub fn with_trace(mut self, record: bool) -> Self {
        self.record_trace = record;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return Err(Error::InvalidConfig(format!("γ₀ must be positive, got {}", self.gamma0)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if let Some(h) = &self.heuristic {
            if !(h.gamma_floor > 0.0 && h.shrink > 0.0 && h.shrink < 1.0 && h.floor_factor > 0.0) {
                return Err(Error::InvalidConfig(format!("bad heuristic parameters {h:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIter,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub state: IterateState,
    pub iterations: usize,
    pub termination: Termination,
    /// Merit value (`P_γ` for PR, `D_γ` for DR) after each iteration, at
    /// the γ used for that iteration. Empty unless tracing was requested.
    pub merit_trace: Vec<f64>,
    /// γ used at each iteration.
    pub gamma_history: Vec<f64>,
    /// Residuals at exit; `None` when no step was taken.
    pub stationarity: Option<Stationarity>,
    /// Steps within a constant-γ stretch where the PR merit rose by more
    /// than `1e-9·(1 + |merit|)`. Only counted when tracing.
    pub merit_increases: usize,
    /// Largest `max(‖y‖, ‖z‖, ‖x‖)` seen.
    pub max_iterate_norm: f64,
}

impl SolverReport {
    pub fn final_gamma(&self) -> Option<f64> {
        self.gamma_history.last().copied()
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Runs the configured method from `x0`.
pub fn run(p: &mut SplitProblem, cfg: &SolverConfig, x0: Vector) -> Result<SolverReport> {
    run_with_observer(p, cfg, x0, |_, _| {})
}

/// Like [`run`], calling `observer(state, γ)` after every step.
pub fn run_with_observer<O>(p: &mut SplitProblem, cfg: &SolverConfig, x0: Vector, mut observer: O) -> Result<SolverReport>
where
    O: FnMut(&IterateState, f64),
{
    cfg.validate()?;
    if x0.len() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: x0.len(),
        });
    }
    if !x0.is_finite() {
        return Err(Error::NonFinite("starting point"));
    }
    let mut gamma = cfg.gamma0;
    p.prepare(gamma)?;

    let mut state = IterateState::initial(x0);
    let mut merit_trace = Vec::new();
    let mut gamma_history = Vec::new();
    let mut merit_increases = 0;
    let mut max_iterate_norm = state.max_norm();
    let mut termination = Termination::MaxIter;

    while state.t < cfg.max_iter {
        let next = step(cfg.method, &state, p, gamma)?;
        if !next.is_finite() || next.y.norm() > SolverConfig::DIVERGENCE_NORM {
            termination = Termination::Diverged;
            break;
        }
        max_iterate_norm = max_iterate_norm.max(next.max_norm());
        gamma_history.push(gamma);
        if cfg.record_trace {
            let value = merit(cfg.method, &next, p, gamma)?;
            if let Some(&last) = merit_trace.last() {
                let same_gamma = gamma_history.len() >= 2 && gamma_history[gamma_history.len() - 2] == gamma;
                if cfg.method == Method::PeacemanRachford && same_gamma && value > last + 1e-9 * (1.0 + f64::abs(last)) {
                    merit_increases += 1;
                }
            }
            merit_trace.push(value);
        }
        observer(&next, gamma);

        let change = relative_change(&state, &next);
        let prev_y = std::mem::replace(&mut state, next).y;
        if change < cfg.tol {
            termination = Termination::Converged;
            break;
        }
        if let Some(h) = &cfg.heuristic {
            let updated = h.update(gamma, state.t, &state.y, &prev_y);
            if updated != gamma {
                gamma = updated;
                p.prepare(gamma)?;
            }
        }
    }

    let stationarity = match gamma_history.last() {
        Some(&g) => Some(stationarity_residual(&state, p, g)?),
        None => None,
    };
    Ok(SolverReport {
        iterations: state.t,
        state,
        termination,
        merit_trace,
        gamma_history,
        stationarity,
        merit_increases,
        max_iterate_norm,
    })
}

// ---------------------------------------------------------------------------
// Diagnostics

/// Upper bound on the one-step PR merit change:
/// `½(−3σ + 2L + γL²)‖yᵗ⁺¹ − yᵗ‖²`.
pub fn merit_decrease_bound(sigma: f64, lipschitz: f64, gamma: f64, dy_sq: f64) -> f64 {
    0.5 * (-3.0 * sigma + 2.0 * lipschitz + gamma * lipschitz * lipschitz) * dy_sq
}

/// Lower bound on `P_γ(y¹,z¹,x¹)` at a later iterate:
/// `f(z) + g(z) + ½(1/γ − L)‖y − z‖²`.
pub fn merit_lower_bound(s: &IterateState, p: &SplitProblem, gamma: f64) -> f64 {
    p.f.value(&s.z) + p.g.value(&s.z) + 0.5 * (1.0 / gamma - p.lipschitz()) * s.y.dist_sq(&s.z)
}

/// Both sides of the ergodic objective-gap bound for the shifted scheme on
/// a convex problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapBound {
    /// `F(z̄ᴺ) + G(z̄ᴺ) − F(z̄) − G(z̄)` with `z̄ᴺ` the mean of `z¹..zᴺ`.
    pub lhs: f64,
    /// `(1/(40γNL_F))(1/γ − 5L_F)‖x⁰ − x̄‖²`.
    pub rhs: f64,
}

/// Evaluates the ergodic bound from the first `n` entries of `z_trace`
/// (which holds `z¹, z², …`). `objective` is `F + G` of the unshifted
/// problem; `z_ref`/`x_ref` stand in for the limit point.
#[allow(clippy::too_many_arguments)]
pub fn ergodic_gap_bound<O>(
    z_trace: &[Vector],
    objective: O,
    z_ref: &Vector,
    x0: &Vector,
    x_ref: &Vector,
    gamma: f64,
    lf: f64,
    n: usize,
) -> Result<GapBound>
where
    O: Fn(&Vector) -> f64,
{
    if n == 0 {
        return Err(Error::EmptyAverage);
    }
    if z_trace.len() < n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: z_trace.len(),
        });
    }
    let mut avg = Vector::zeros(z_ref.len());
    for z in &z_trace[..n] {
        avg.axpy(1.0, z);
    }
    let avg = avg.scaled(1.0 / n as f64);
    let lhs = objective(&avg) - objective(z_ref);
    let rhs = (1.0 / gamma - 5.0 * lf) * x0.dist_sq(x_ref) / (40.0 * gamma * n as f64 * lf);
    Ok(GapBound { lhs, rhs })
}

/// `min_{0≤t≤N} ‖xᵗ⁺¹ − xᵗ‖ · √N`, given `step_norms[t] = ‖xᵗ⁺¹ − xᵗ‖`.
pub fn scaled_min_step(step_norms: &[f64], n: usize) -> Result<f64> {
    if step_norms.len() < n + 1 {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            found: step_norms.len(),
        });
    }
    let min = step_norms[..=n].iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(min * (n as f64).sqrt())
}

/// Smallest `r` with `eᵗ⁺¹ ≤ r·eᵗ` across consecutive entries of
/// `sq_errors` (typically `‖xᵗ − x̄‖²`).
pub fn contraction_factor(sq_errors: &[f64]) -> f64 {
    sq_errors
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .fold(0.0, f64::max)
}
