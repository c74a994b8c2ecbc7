//! Smooth and proximal oracles consumed by the splitting engines.
//!
//! A [`SmoothOracle`] is the strongly convex, Lipschitz-differentiable half
//! of a split; a [`ProxOracle`] is the (possibly nonconvex) half for which
//! only a proximal map is available. The concrete oracles cover the maps the
//! two applications need: affine projection, sparse-box and box projection,
//! half squared distance to an affine set (plain and shifted), shifted least
//! squares, and generic quadratics.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{spd_factor, DenseMatrix, SpdFactorization, Vector};

/// Smooth half `f` of a split.
pub trait SmoothOracle: Send + Sync {
    fn value(&self, y: &Vector) -> f64;

    fn gradient(&self, y: &Vector) -> Vector;

    /// Strong convexity modulus σ (may be 0 for baseline-only oracles).
    fn strong_convexity(&self) -> f64;

    /// Lipschitz modulus L of the gradient.
    fn lipschitz(&self) -> f64;

    /// `argmin_y f(y) + ‖y − w‖²/(2γ)`.
    fn prox(&self, gamma: f64, w: &Vector) -> Result<Vector>;

    /// Called by the engine before the first step and whenever γ changes, so
    /// oracles can cache γ-dependent factorizations.
    fn prepare(&mut self, _gamma: f64) -> Result<()> {
        Ok(())
    }
}

/// Proximal half `g` of a split.
pub trait ProxOracle: Send + Sync {
    /// One deterministic element of `Argmin_z g(z) + ‖z − w‖²/(2γ)`.
    fn prox(&self, gamma: f64, w: &Vector) -> Result<Vector>;

    /// `g(z)`, possibly `+∞`.
    fn value(&self, z: &Vector) -> f64;
}

impl<T: SmoothOracle + ?Sized> SmoothOracle for Box<T> {
    fn value(&self, y: &Vector) -> f64 {
        (**self).value(y)
    }
    fn gradient(&self, y: &Vector) -> Vector {
        (**self).gradient(y)
    }
    fn strong_convexity(&self) -> f64 {
        (**self).strong_convexity()
    }
    fn lipschitz(&self) -> f64 {
        (**self).lipschitz()
    }
    fn prox(&self, gamma: f64, w: &Vector) -> Result<Vector> {
        (**self).prox(gamma, w)
    }
    fn prepare(&mut self, gamma: f64) -> Result<()> {
        (**self).prepare(gamma)
    }
}

impl<T: ProxOracle + ?Sized> ProxOracle for Box<T> {
    fn prox(&self, gamma: f64, w: &Vector) -> Result<Vector> {
        (**self).prox(gamma, w)
    }
    fn value(&self, z: &Vector) -> f64 {
        (**self).value(z)
    }
}

fn check_len(expected: usize, v: &Vector) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("step size must be positive, got {gamma}")))
    }
}

// ---------------------------------------------------------------------------
// Sets

/// `C = {x : Ax = b}` with `A` of full row rank. `AAᵀ` is factored once.
#[derive(Debug, Clone)]
pub struct AffineSet {
    a: DenseMatrix,
    b: Vector,
    gram: SpdFactorization,
}

impl AffineSet {
    pub fn new(a: DenseMatrix, b: Vector) -> Result<Self> {
        check_len(a.rows(), &b)?;
        let gram = spd_factor(&a.gram_rows())?;
        Ok(AffineSet { a, b, gram })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &Vector {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    /// `Ax − b`
    pub fn residual(&self, x: &Vector) -> Vector {
        self.a.mul_vec(x).sub(&self.b)
    }

    pub fn project(&self, w: &Vector) -> Result<Vector> {
        check_len(self.dim(), w)?;
        let r = self.residual(w);
        let lam = self.gram.solve(&r)?;
        let mut p = w.clone();
        p.axpy(-1.0, &self.a.tr_mul_vec(&lam));
        Ok(p)
    }

    /// `½ d_C(w)²`
    pub fn half_sq_dist(&self, w: &Vector) -> f64 {
        let p = self.project(w).expect("dimension checked by caller");
        0.5 * w.dist_sq(&p)
    }
}

/// `D = {x : ‖x‖₀ ≤ r, ‖x‖∞ ≤ bound}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseBoxSet {
    r: usize,
    bound: f64,
}

impl SparseBoxSet {
    pub fn new(r: usize, bound: f64) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidConfig("sparsity level must be at least 1".into()));
        }
        if !(bound > 0.0) {
            return Err(Error::InvalidConfig(format!("bound must be positive, got {bound}")));
        }
        Ok(SparseBoxSet { r, bound })
    }

    pub fn sparsity(&self) -> usize {
        self.r
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.count_nonzero() <= self.r && x.norm_inf() <= self.bound
    }
}

/// Coordinate box `{x : lower ≤ xᵢ ≤ upper}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSet {
    lower: f64,
    upper: f64,
}

impl BoxSet {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::InvalidConfig(format!("empty box [{lower}, {upper}]")));
        }
        Ok(BoxSet { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn project(&self, w: &Vector) -> Vector {
        w.iter().map(|v| v.clamp(self.lower, self.upper)).collect()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.iter().all(|v| *v >= self.lower && *v <= self.upper)
    }
}

/// The constraint sets `D` used by the applications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintSet {
    SparseBox(SparseBoxSet),
    Box(BoxSet),
}

impl ConstraintSet {
    pub fn project(&self, w: &Vector) -> Vector {
        match self {
            ConstraintSet::SparseBox(d) => project_sparse_box(d, w),
            ConstraintSet::Box(b) => b.project(w),
        }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        match self {
            ConstraintSet::SparseBox(d) => d.contains(x),
            ConstraintSet::Box(b) => b.contains(x),
        }
    }

    pub fn is_convex(&self) -> bool {
        matches!(self, ConstraintSet::Box(_))
    }
}

/// Euclidean projection onto `{x : Ax = b}`: `w − Aᵀ(AAᵀ)⁻¹(Aw − b)`.
pub fn project_affine(c: &AffineSet, w: &Vector) -> Result<Vector> {
    c.project(w)
}

/// Projection onto the sparse box: keep the `r` largest magnitudes (ties go
/// to the lower index), zero the rest, then clip survivors to `±bound`.
///
/// The clip comes after support selection, which is the exact nearest point
/// whenever no entry exceeds `bound` in magnitude.
pub fn project_sparse_box(d: &SparseBoxSet, w: &Vector) -> Vector {
    let n = w.len();
    let mut out = Vector::zeros(n);
    if d.r >= n {
        for i in 0..n {
            out[i] = w[i].clamp(-d.bound, d.bound);
        }
        return out;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let order = |a: &usize, b: &usize| w[*b].abs().total_cmp(&w[*a].abs()).then(a.cmp(b));
    idx.select_nth_unstable_by(d.r - 1, order);
    for &i in &idx[..d.r] {
        out[i] = w[i].clamp(-d.bound, d.bound);
    }
    out
}

// ---------------------------------------------------------------------------
// Closed-form proximal maps

/// Linear system `[(αγ + 1)I + γAᵀA] y = rhs`, factored once per γ.
///
/// Uses the Woodbury identity through the m×m matrix `cI + γAAᵀ` when
/// `m < n/2`, otherwise factors the n×n matrix directly.
#[derive(Debug, Clone)]
enum LsSystem {
    Woodbury {
        c: f64,
        gamma: f64,
        inner: SpdFactorization,
    },
    Direct(SpdFactorization),
}

impl LsSystem {
    fn new(a: &DenseMatrix, alpha: f64, gamma: f64) -> Result<Self> {
        let c = alpha * gamma + 1.0;
        if 2 * a.rows() < a.cols() {
            let mut k = a.gram_rows();
            k.scale(gamma);
            k.add_diagonal(c);
            Ok(LsSystem::Woodbury {
                c,
                gamma,
                inner: spd_factor(&k)?,
            })
        } else {
            let mut m = a.gram_cols();
            m.scale(gamma);
            m.add_diagonal(c);
            Ok(LsSystem::Direct(spd_factor(&m)?))
        }
    }

    fn solve(&self, a: &DenseMatrix, rhs: &Vector) -> Result<Vector> {
        match self {
            LsSystem::Direct(f) => f.solve(rhs),
            LsSystem::Woodbury { c, gamma, inner } => {
                let t = inner.solve(&a.mul_vec(rhs))?;
                let mut y = rhs.clone();
                y.axpy(-gamma, &a.tr_mul_vec(&t));
                Ok(y.scaled(1.0 / c))
            }
        }
    }
}

/// Minimizer of `½‖Ay − b‖² + (5λ/2)‖y‖² + ‖y − w‖²/(2γ)`, i.e.
/// `[(5γλ + 1)I + γAᵀA]⁻¹(w + γAᵀb)`, with `λ ≥ λ_max(AᵀA)`.
///
/// Factors the system on every call; [`ShiftedLeastSquares`] caches it.
pub fn prox_shifted_quadratic(
    a: &DenseMatrix,
    b: &Vector,
    lambda_max: f64,
    gamma: f64,
    w: &Vector,
) -> Result<Vector> {
    check_gamma(gamma)?;
    check_len(a.rows(), b)?;
    check_len(a.cols(), w)?;
    let sys = LsSystem::new(a, 5.0 * lambda_max, gamma)?;
    let mut rhs = w.clone();
    rhs.axpy(gamma, &a.tr_mul_vec(b));
    sys.solve(a, &rhs)
}

/// Minimizer of `½d_C(y)² + (α/2)‖y‖² + ‖y − w‖²/(2γ)`:
/// `(γ·P_C(w/(1 + αγ)) + w) / ((1 + α)γ + 1)`.
fn prox_halfsqdist_with_shift(c: &AffineSet, alpha: f64, gamma: f64, w: &Vector) -> Result<Vector> {
    check_gamma(gamma)?;
    let u = c.project(&w.scaled(1.0 / (1.0 + alpha * gamma)))?;
    Ok(u.combine(gamma, w, 1.0).scaled(1.0 / ((1.0 + alpha) * gamma + 1.0)))
}

/// Prox of `γ(½d_C² + (5/2)‖·‖²)`: `(γ·P_C(w/(1+5γ)) + w)/(6γ+1)`.
pub fn prox_shifted_halfsqdist(c: &AffineSet, gamma: f64, w: &Vector) -> Result<Vector> {
    prox_halfsqdist_with_shift(c, 5.0, gamma, w)
}

/// Prox of `γ·½d_C²`: `(w + γ·P_C(w))/(1 + γ)`.
pub fn prox_halfsqdist(c: &AffineSet, gamma: f64, w: &Vector) -> Result<Vector> {
    prox_halfsqdist_with_shift(c, 0.0, gamma, w)
}

// ---------------------------------------------------------------------------
// Smooth oracles

/// `F(y) = ½d_C(y)²`: convex, `σ = 0`, `L = 1`.
#[derive(Debug, Clone)]
pub struct HalfSqDist {
    set: Arc<AffineSet>,
}

impl HalfSqDist {
    pub fn new(set: Arc<AffineSet>) -> Self {
        HalfSqDist { set }
    }
}

impl SmoothOracle for HalfSqDist {
    fn value(&self, y: &Vector) -> f64 {
        self.set.half_sq_dist(y)
    }
    fn gradient(&self, y: &Vector) -> Vector {
        y.sub(&self.set.project(y).expect("dimension"))
    }
    fn strong_convexity(&self) -> f64 {
        0.0
    }
    fn lipschitz(&self) -> f64 {
        1.0
    }
    fn prox(&self, gamma: f64, w: &Vector) -> Result<Vector> {
        prox_halfsqdist(&self.set, gamma, w)
    }
}

/// `f(y) = ½d_C(y)² + (5/2)‖y‖²` with the closed-form prox: `σ = 5`, `L = 6`.
#[derive(Debug, Clone)]
pub struct ShiftedHalfSqDist {
    set: Arc<AffineSet>,
}

impl ShiftedHalfSqDist {
    pub const SHIFT: f64 = 5.0;

    pub fn new(set: Arc<AffineSet>) -> Self {
        ShiftedHalfSqDist { set }
    }
}

impl SmoothOracle for ShiftedHalfSqDist {
    fn value(&self, y: &Vector) -> f64 {
        self.set.half_sq_dist(y) + 0.5 * Self::SHIFT * y.norm_sq()
    }
    fn gradient(&self, y: &Vector) -> Vector {
        let p = self.set.project(y).expect("dimension");
        y.combine(1.0 + Self::SHIFT, &p, -1.0)
    }
    fn strong_convexity(&self) -> f64 {
        Self::SHIFT
    }
    fn lipschitz(&self) -> f64 {
        1.0 + Self::SHIFT
    }
    fn prox(&self, gamma: f64, w: &Vector) -> Result<Vector> {
        prox_shifted_halfsqdist(&self.set, gamma, w)
    }
}

/// `f(y) = ½‖Ay − b‖² + (α/2)‖y‖²` with `α = 5λ` and `λ ≥ λ_max(AᵀA)`:
/// `σ = 5λ`, `L = 6λ`.
#[derive(Debug, Clone)]
pub struct ShiftedLeastSquares {
    a: Arc<DenseMatrix>,
    b: Vector,
    atb: Vector,
    lambda_max: f64,
    cache: Option<(f64, LsSystem)>,
}

impl ShiftedLeastSquares {
    pub fn new(a: Arc<DenseMatrix>, b: Vector, lambda_max: f64) -> Result<Self> {
        check_len(a.rows(), &b)?;
        if !(lambda_max > 0.0) {
            return Err(Error::InvalidConfig(format!("λ_max must be positive, got {lambda_max}")));
        }
        let atb = a.tr_mul_vec(&b);
        Ok(ShiftedLeastSquares {
            a,
            b,
            atb,
            lambda_max,
            cache: None,
        })
    }

    fn alpha(&self) -> f64 {
        5.0 * self.lambda_max
    }
}

impl SmoothOracle for ShiftedLeastSquares {
    fn value(&self, y: &Vector) -> f64 {
        0.5 * self.a.mul_vec(y).dist_sq(&self.b) + 0.5 * self.alpha() * y.norm_sq()
    }
    fn gradient(&self, y: &Vector) -> Vector {
        let r = self.a.mul_vec(y).sub(&self.b);
        self.a.tr_mul_vec(&r).combine(1.0, y, self.alpha())
    }
    fn strong_convexity(&self) -> f64 {
        self.alpha()
    }
    fn lipschitz(&self) -> f64 {
        self.lambda_max + self.alpha()
    }
    fn prox(&self, gamma: f64, w: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        check_len(self.a.cols(), w)?;
        let mut rhs = w.clone();
        rhs.axpy(gamma, &self.atb);
        match &self.cache {
            Some((g, sys)) if *g == gamma => sys.solve(&self.a, &rhs),
            _ => LsSystem::new(&self.a, self.alpha(), gamma)?.solve(&self.a, &rhs),
        }
    }
    fn prepare(&mut self, gamma: f64) -> Result<()> {
        check_gamma(gamma)?;
        if !matches!(&self.cache, Some((g, _)) if *g == gamma) {
            self.cache = Some((gamma, LsSystem::new(&self.a, self.alpha(), gamma)?));
        }
        Ok(())
    }
}

/// `f(y) = ½yᵀHy − cᵀy + k` for symmetric positive definite `H`, with
/// `σ` and `L` the extreme eigenvalues of `H` as supplied by the caller.
#[derive(Debug, Clone)]
pub struct Quadratic {
    hessian: DenseMatrix,
    linear: Vector,
    constant: f64,
    sigma: f64,
    lipschitz: f64,
    cache: Option<(f64, SpdFactorization)>,
}

impl Quadratic {
    pub fn new(
        hessian: DenseMatrix,
        linear: Vector,
        constant: f64,
        sigma: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        check_len(hessian.rows(), &linear)?;
        if !hessian.is_symmetric(1e-12) {
            return Err(Error::InvalidConfig("Hessian must be symmetric".into()));
        }
        if !(sigma >= 0.0 && lipschitz > 0.0 && sigma <= lipschitz) {
            return Err(Error::InvalidConfig(format!(
                "need 0 ≤ σ ≤ L with L > 0, got σ = {sigma}, L = {lipschitz}"
            )));
        }
        Ok(Quadratic {
            hessian,
            linear,
            constant,
            sigma,
            lipschitz,
            cache: None,
        })
    }

    /// `½‖y − a‖²`: identity Hessian, `σ = L = 1`.
    pub fn centered_at(a: Vector) -> Self {
        let n = a.len();
        let constant = 0.5 * a.norm_sq();
        Quadratic::new(DenseMatrix::identity(n), a, constant, 1.0, 1.0).expect("identity is valid")
    }

    pub fn hessian(&self) -> &DenseMatrix {
        &self.hessian
    }

    fn system(&self, gamma: f64) -> Result<SpdFactorization> {
        let mut m = self.hessian.clone();
        m.add_diagonal(1.0 / gamma);
        spd_factor(&m)
    }
}

impl SmoothOracle for Quadratic {
    fn value(&self, y: &Vector) -> f64 {
        0.5 * y.dot(&self.hessian.mul_vec(y)) - self.linear.dot(y) + self.constant
    }
    fn gradient(&self, y: &Vector) -> Vector {
        self.hessian.mul_vec(y).sub(&self.linear)
    }
    fn strong_convexity(&self) -> f64 {
        self.sigma
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn prox(&self, gamma: f64, w: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        check_len(self.linear.len(), w)?;
        let rhs = self.linear.combine(1.0, w, 1.0 / gamma);
        match &self.cache {
            Some((g, f)) if *g == gamma => f.solve(&rhs),
            _ => self.system(gamma)?.solve(&rhs),
        }
    }
    fn prepare(&mut self, gamma: f64) -> Result<()> {
        check_gamma(gamma)?;
        if !matches!(&self.cache, Some((g, _)) if *g == gamma) {
            self.cache = Some((gamma, self.system(gamma)?));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Prox oracles

/// Indicator `δ_D` of a constraint set.
#[derive(Debug, Clone, Copy)]
pub struct Indicator {
    set: ConstraintSet,
}

impl Indicator {
    pub fn new(set: ConstraintSet) -> Self {
        Indicator { set }
    }

    pub fn set(&self) -> &ConstraintSet {
        &self.set
    }
}

impl ProxOracle for Indicator {
    fn prox(&self, gamma: f64, w: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        Ok(self.set.project(w))
    }
    fn value(&self, z: &Vector) -> f64 {
        if self.set.contains(z) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// `g ≡ 0`; its prox is the identity.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl ProxOracle for Zero {
    fn prox(&self, gamma: f64, w: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        Ok(w.clone())
    }
    fn value(&self, _z: &Vector) -> f64 {
        0.0
    }
}

// ---------------------------------------------------------------------------
// Shifting

/// `f = F + (α/2)‖·‖²`.
///
/// The prox is `prox_{γ'F}(w/(1 + αγ))` with `γ' = γ/(1 + αγ)`.
#[derive(Debug, Clone)]
pub struct ShiftedSmooth<F> {
    inner: F,
    alpha: f64,
}

impl<F> ShiftedSmooth<F> {
    pub fn inner(&self) -> &F {
        &self.inner
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl<F: SmoothOracle> SmoothOracle for ShiftedSmooth<F> {
    fn value(&self, y: &Vector) -> f64 {
        self.inner.value(y) + 0.5 * self.alpha * y.norm_sq()
    }
    fn gradient(&self, y: &Vector) -> Vector {
        self.inner.gradient(y).combine(1.0, y, self.alpha)
    }
    fn strong_convexity(&self) -> f64 {
        self.inner.strong_convexity() + self.alpha
    }
    fn lipschitz(&self) -> f64 {
        self.inner.lipschitz() + self.alpha
    }
    fn prox(&self, gamma: f64, w: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        let s = 1.0 + self.alpha * gamma;
        self.inner.prox(gamma / s, &w.scaled(1.0 / s))
    }
    fn prepare(&mut self, gamma: f64) -> Result<()> {
        check_gamma(gamma)?;
        self.inner.prepare(gamma / (1.0 + self.alpha * gamma))
    }
}

/// `g = G − (α/2)‖·‖²`.
///
/// The prox is `prox_{γ'G}(w/(1 − αγ))` with `γ' = γ/(1 − αγ)`, defined only
/// while `αγ < 1`.
#[derive(Debug, Clone)]
pub struct ShiftedProx<G> {
    inner: G,
    alpha: f64,
}

impl<G> ShiftedProx<G> {
    pub fn new(inner: G, alpha: f64) -> Self {
        ShiftedProx { inner, alpha }
    }

    pub fn inner(&self) -> &G {
        &self.inner
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl<G: ProxOracle> ProxOracle for ShiftedProx<G> {
    fn prox(&self, gamma: f64, w: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        let product = self.alpha * gamma;
        if product >= 1.0 {
            return Err(Error::ShiftIllPosed { product });
        }
        let s = 1.0 - product;
        self.inner.prox(gamma / s, &w.scaled(1.0 / s))
    }
    fn value(&self, z: &Vector) -> f64 {
        self.inner.value(z) - 0.5 * self.alpha * z.norm_sq()
    }
}

/// Rewrites `F + G` as `(F + (α/2)‖·‖²) + (G − (α/2)‖·‖²)`.
///
/// Requires `α > 2·L_F`; `α = 5·L_F` maximizes the admissible step range,
/// giving `γ < 1/(12 L_F)` when `F` is merely convex.
pub fn shift_split<F: SmoothOracle, G: ProxOracle>(
    f: F,
    g: G,
    alpha: f64,
) -> Result<(ShiftedSmooth<F>, ShiftedProx<G>)> {
    let lf = f.lipschitz();
    if !(alpha > 2.0 * lf) {
        return Err(Error::InvalidConfig(format!(
            "shift α = {alpha} must exceed 2·L_F = {}",
            2.0 * lf
        )));
    }
    Ok((ShiftedSmooth { inner: f, alpha }, ShiftedProx { inner: g, alpha }))
}
