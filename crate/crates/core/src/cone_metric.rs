//! The cone `C_a = {f ≥ 0, Var f ≤ a‖f‖₁} ∖ {0}` in BV, its Hilbert projective
//! metric and the cone-geometry inequalities as executable checks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::cone_element;
use crate::scalar::{leq, snapped_ceil, Scalar};
use crate::step_functions::{StepFunction, FLOAT_CHECK_TOL};

/// Default relative tolerance of the α/β bisections.
pub const TOL_CONE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeParams {
    pub a: f64,
    pub nu: f64,
}

impl Default for ConeParams {
    fn default() -> Self {
        Self { a: 120.0, nu: 0.8 }
    }
}

impl ConeParams {
    pub fn new(a: f64, nu: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Config(format!("cone aperture a = {a} must be positive")));
        }
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::Config(format!("nu = {nu} must lie in (0, 1)")));
        }
        Ok(Self { a, nu })
    }

    /// `a = ⌈6/(ν − ¾)⌉` for `ν ∈ (¾, 1)`.
    pub fn from_nu(nu: f64) -> Result<Self> {
        if !(nu > 0.75 && nu < 1.0) {
            return Err(Error::Config(format!("nu = {nu} must lie in (3/4, 1)")));
        }
        Self::new(snapped_ceil(6.0 / (nu - 0.75)) as f64, nu)
    }

    /// `a = ⌈4/(ν − ½)⌉` for `ν ∈ (½, 1)`, valid when every ε is at most ½.
    pub fn from_nu_sharp(nu: f64) -> Result<Self> {
        if !(nu > 0.5 && nu < 1.0) {
            return Err(Error::Config(format!("nu = {nu} must lie in (1/2, 1)")));
        }
        Self::new(snapped_ceil(4.0 / (nu - 0.5)) as f64, nu)
    }

    /// Adaptedness constant `2a + 1`.
    pub fn d(&self) -> f64 {
        2.0 * self.a + 1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeGeometry {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
}

/// `f ∈ C_{scale·a}`.
pub fn cone_contains<S: Scalar>(f: &StepFunction<S>, params: &ConeParams, scale: f64) -> bool {
    !f.is_zero() && contains_or_zero(f, params, scale)
}

/// `f ∈ C_{scale·a} ∪ {0}`.
pub fn contains_or_zero<S: Scalar>(f: &StepFunction<S>, params: &ConeParams, scale: f64) -> bool {
    if f.values().iter().any(|v| *v < S::zero()) {
        return false;
    }
    let bound = S::from_decimal(scale) * S::from_decimal(params.a) * f.l1();
    f.variation() <= bound
}

fn ratio_bounds<S: Scalar>(v: &StepFunction<S>, w: &StepFunction<S>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for (vk, wk) in crate::step_functions::paired_cells(v, w) {
        let (vk, wk) = (vk.to_f64_lossy(), wk.to_f64_lossy());
        if vk > 0.0 {
            lo = lo.min(wk / vk);
            hi = hi.max(wk / vk);
        } else if wk > 0.0 {
            hi = f64::INFINITY;
        }
    }
    (lo, hi)
}

fn bisect(mut ok: f64, mut bad: f64, tol: f64, feasible: impl Fn(f64) -> bool) -> f64 {
    while (ok - bad).abs() > tol * ok.abs().max(bad.abs()) {
        let mid = 0.5 * (ok + bad);
        if mid == ok || mid == bad {
            break;
        }
        if feasible(mid) {
            ok = mid;
        } else {
            bad = mid;
        }
    }
    ok
}

/// `α(v, w) = sup{λ ≥ 0 : w − λv ∈ C_a ∪ {0}}`.
pub fn hilbert_alpha<S: Scalar>(v: &StepFunction<S>, w: &StepFunction<S>, params: &ConeParams, tol: f64) -> f64 {
    let feasible = |lam: f64| contains_or_zero(&w.sub(&v.scale(&S::from_f64_lossy(lam))), params, 1.0);
    let (upper, _) = ratio_bounds(v, w);
    if !(upper > 0.0) || !upper.is_finite() {
        return 0.0;
    }
    if feasible(upper) {
        return upper;
    }
    bisect(0.0, upper, tol, feasible)
}

/// `β(v, w) = inf{μ ≥ 0 : μv − w ∈ C_a ∪ {0}}`, `+∞` if no such μ.
pub fn hilbert_beta<S: Scalar>(v: &StepFunction<S>, w: &StepFunction<S>, params: &ConeParams, tol: f64) -> f64 {
    let feasible = |mu: f64| contains_or_zero(&v.scale(&S::from_f64_lossy(mu)).sub(w), params, 1.0);
    let (_, lower) = ratio_bounds(v, w);
    if !lower.is_finite() {
        return f64::INFINITY;
    }
    if feasible(lower) {
        return lower;
    }
    let mut hi = lower.max(f64::MIN_POSITIVE) * 2.0;
    let mut tries = 0;
    while !feasible(hi) {
        hi *= 2.0;
        tries += 1;
        if tries > 64 {
            return f64::INFINITY;
        }
    }
    bisect(hi, lower, tol, feasible)
}

/// α, β and `θ = log(β/α)` of a pair in `C_a`.
pub fn hilbert_alpha_beta<S: Scalar>(
    v: &StepFunction<S>,
    w: &StepFunction<S>,
    params: &ConeParams,
) -> Result<ConeGeometry> {
    hilbert_alpha_beta_tol(v, w, params, TOL_CONE)
}

pub fn hilbert_alpha_beta_tol<S: Scalar>(
    v: &StepFunction<S>,
    w: &StepFunction<S>,
    params: &ConeParams,
    tol: f64,
) -> Result<ConeGeometry> {
    if !cone_contains(v, params, 1.0) || !cone_contains(w, params, 1.0) {
        return Err(Error::Domain("projective metric needs two cone elements".into()));
    }
    let alpha = hilbert_alpha(v, w, params, tol);
    let beta = hilbert_beta(v, w, params, tol);
    let theta = if alpha > 0.0 && beta.is_finite() { (beta / alpha).ln().max(0.0) } else { f64::INFINITY };
    Ok(ConeGeometry { alpha, beta, theta })
}

pub fn theta<S: Scalar>(v: &StepFunction<S>, w: &StepFunction<S>, params: &ConeParams) -> Result<f64> {
    hilbert_alpha_beta(v, w, params).map(|g| g.theta)
}

/// `tanh(diam/4)`, and 1 for an infinite diameter.
pub fn contraction_factor(diam: f64) -> f64 {
    if diam.is_infinite() {
        1.0
    } else {
        (diam / 4.0).tanh()
    }
}

/// `log tanh(diam/4)` without cancellation for large diameters.
pub fn log_contraction_factor(diam: f64) -> f64 {
    if diam.is_infinite() {
        return 0.0;
    }
    let x = diam / 4.0;
    if x > 1.0 {
        let e = (-2.0 * x).exp();
        (-e).ln_1p() - e.ln_1p()
    } else {
        x.tanh().ln()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaBound {
    pub bound: f64,
    pub actual: f64,
    pub holds: bool,
}

/// `θ_a(f, 𝟙) ≤ log((1+ν)/(1−ν) · esssup f / essinf f)` for `f ∈ C_{νa}`.
///
/// Both sides are scale invariant, so `f` need not be normalized.
pub fn theta_to_constant_bound<S: Scalar>(f: &StepFunction<S>, params: &ConeParams) -> Result<ThetaBound> {
    if !cone_contains(f, params, params.nu) {
        return Err(Error::Precondition("f must lie in C_{nu a}".into()));
    }
    let inf = f.essinf().to_f64_lossy();
    let sup = f.esssup().to_f64_lossy();
    let bound = if inf > 0.0 {
        ((1.0 + params.nu) / (1.0 - params.nu) * sup / inf).ln()
    } else {
        f64::INFINITY
    };
    let actual = theta(f, &StepFunction::one(), params)?;
    Ok(ThetaBound { bound, actual, holds: actual <= bound * (1.0 + FLOAT_CHECK_TOL) + FLOAT_CHECK_TOL })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Adaptedness<S> {
    pub ratio: S,
    pub holds: bool,
}

/// Given `−f ⪯ g ⪯ f`, checks `‖g‖ ≤ (2a+1)‖f‖` in the norm `max{‖·‖₁, Var}`.
pub fn d_adapted_verify<S: Scalar>(
    f: &StepFunction<S>,
    g: &StepFunction<S>,
    params: &ConeParams,
) -> Result<Adaptedness<S>> {
    if !contains_or_zero(&f.sub(g), params, 1.0) || !contains_or_zero(&f.add(g), params, 1.0) {
        return Err(Error::Precondition("need -f <= g <= f in the cone order".into()));
    }
    let nf = f.bv_max_norm();
    if nf.is_zero() {
        return Ok(Adaptedness { ratio: S::zero(), holds: g.is_zero() });
    }
    let ratio = g.bv_max_norm() / nf;
    let holds = leq(&ratio, &S::from_decimal(params.d()), FLOAT_CHECK_TOL);
    Ok(Adaptedness { ratio, holds })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `‖f − g‖ ≤ D² r (e^θ − 1)` for `f, g ∈ C_a` with `‖f‖ = ‖g‖ = r`.
pub fn comparability_norm_bound<S: Scalar>(
    f: &StepFunction<S>,
    g: &StepFunction<S>,
    params: &ConeParams,
) -> Result<NormBound> {
    let (nf, ng) = (f.bv_norm(), g.bv_norm());
    let equal = if S::EXACT {
        nf == ng
    } else {
        let (a, b) = (nf.to_f64_lossy(), ng.to_f64_lossy());
        (a - b).abs() <= FLOAT_CHECK_TOL * a.max(b)
    };
    if !equal {
        return Err(Error::Precondition("f and g must have equal BV norms".into()));
    }
    let th = theta(f, g, params)?;
    let lhs = f.bv_distance(g).to_f64_lossy();
    let d = params.d();
    let rhs = d * d * nf.to_f64_lossy() * th.exp_m1();
    Ok(NormBound { lhs, rhs, holds: lhs <= rhs * (1.0 + FLOAT_CHECK_TOL) + 1e-15 })
}

/// Probe set: `𝟙`, indicators of every run of four consecutive cells of the
/// uniform `⌈2a⌉`-grid (measure `2/a`, so on the boundary of `C_a`), and
/// random cone elements.
pub fn probe_family<S: Scalar>(params: &ConeParams, n_random: usize, seed: u64) -> Vec<StepFunction<S>> {
    let cells = (2.0 * params.a).ceil().max(4.0) as i64;
    let mut out = vec![StepFunction::one()];
    for k in 0..=cells - 4 {
        let lo = S::ratio(2 * k - cells, cells);
        let hi = S::ratio(2 * k + 8 - cells, cells);
        out.push(StepFunction::indicator(lo, hi).expect("grid window"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let den = (cells / 2).max(1);
    out.extend((0..n_random).map(|_| cone_element(&mut rng, params.a, 16, den)));
    out
}

/// `2 · max θ(h, reference)` over the images `h`.
pub fn empirical_diameter<S: Scalar>(
    images: &[StepFunction<S>],
    reference: &StepFunction<S>,
    params: &ConeParams,
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for h in images {
        worst = worst.max(theta(h, reference, params)?);
    }
    Ok(2.0 * worst)
}
