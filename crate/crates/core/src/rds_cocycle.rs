//! Driving systems, the second-iterate transfer-operator cocycle, equivariant
//! densities, the functional η and Lyapunov exponent estimates.
//!
//! Time is counted in second-iterate steps: step `k` applies `P_k`, the
//! transfer operator of `T_{σ^{2k+1}ω} ∘ T_{σ^{2k}ω}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone_metric::{cone_contains, hilbert_alpha, hilbert_beta, probe_family, ConeParams, TOL_CONE};
use crate::error::{Error, Result};
use crate::interval_maps::{make_paired_tent, PairedTentParams, PiecewiseLinearMap, SecondIterate, Side};
use crate::scalar::Scalar;
use crate::step_functions::{pf_apply, StepFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrivingKind {
    Iid,
    Periodic,
}

/// JSON form: `{"kind": "iid"|"periodic", "table": [[e1, e2, p?], ...], "seed": u64, "kappa": real}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivingConfig {
    pub kind: DrivingKind,
    pub table: Vec<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "unit_kappa")]
    pub kappa: f64,
}

fn unit_kappa() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct DrivingStream {
    pub kind: DrivingKind,
    /// Unscaled `(ε₁, ε₂)` entries.
    pub entries: Vec<(f64, f64)>,
    /// Probabilities (iid) or uniform weights over the cycle (periodic).
    pub probs: Vec<f64>,
    pub seed: u64,
    pub kappa: f64,
    cumulative: Vec<f64>,
}

pub fn make_driving(config: &DrivingConfig) -> Result<DrivingStream> {
    DrivingStream::from_config(config)
}

impl DrivingStream {
    pub fn from_config(config: &DrivingConfig) -> Result<Self> {
        if config.table.is_empty() {
            return Err(Error::Config("driving table is empty".into()));
        }
        if !(config.kappa > 0.0 && config.kappa <= 1.0) {
            return Err(Error::Config(format!("kappa = {} must lie in (0, 1]", config.kappa)));
        }
        let mut entries = Vec::with_capacity(config.table.len());
        let mut given = Vec::new();
        for row in &config.table {
            let (e1, e2) = match row.as_slice() {
                [e1, e2] => (*e1, *e2),
                [e1, e2, p] => {
                    given.push(*p);
                    (*e1, *e2)
                }
                _ => return Err(Error::Config(format!("table row {row:?} needs 2 or 3 numbers"))),
            };
            if !(0.0..=1.0).contains(&e1) || !(0.0..=1.0).contains(&e2) {
                return Err(Error::Config(format!("epsilon pair ({e1}, {e2}) outside [0, 1]")));
            }
            entries.push((e1, e2));
        }
        let n = entries.len();
        let probs = match config.kind {
            DrivingKind::Periodic => {
                if !given.is_empty() {
                    return Err(Error::Config("periodic tables take no probabilities".into()));
                }
                vec![1.0 / n as f64; n]
            }
            DrivingKind::Iid if given.is_empty() => vec![1.0 / n as f64; n],
            DrivingKind::Iid => {
                if given.len() != n {
                    return Err(Error::Config("give a probability for every row or for none".into()));
                }
                if given.iter().any(|p| !(*p >= 0.0)) {
                    return Err(Error::Config("negative probability".into()));
                }
                let total: f64 = given.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!("probabilities sum to {total}, not 1")));
                }
                given
            }
        };
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { kind: config.kind, entries, probs, seed: config.seed, kappa: config.kappa, cumulative })
    }

    pub fn constant(eps1: f64, eps2: f64) -> Result<Self> {
        Self::from_config(&DrivingConfig {
            kind: DrivingKind::Iid,
            table: vec![vec![eps1, eps2]],
            seed: 0,
            kappa: 1.0,
        })
    }

    pub fn periodic(cycle: &[(f64, f64)]) -> Result<Self> {
        Self::from_config(&DrivingConfig {
            kind: DrivingKind::Periodic,
            table: cycle.iter().map(|(a, b)| vec![*a, *b]).collect(),
            seed: 0,
            kappa: 1.0,
        })
    }

    pub fn iid(table: &[(f64, f64, f64)], seed: u64) -> Result<Self> {
        Self::from_config(&DrivingConfig {
            kind: DrivingKind::Iid,
            table: table.iter().map(|(a, b, p)| vec![*a, *b, *p]).collect(),
            seed,
            kappa: 1.0,
        })
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        let mut cfg = self.to_config();
        cfg.kappa = kappa;
        Self::from_config(&cfg)
    }

    pub fn to_config(&self) -> DrivingConfig {
        let table = match self.kind {
            DrivingKind::Iid => self.entries.iter().zip(&self.probs).map(|((a, b), p)| vec![*a, *b, *p]).collect(),
            DrivingKind::Periodic => self.entries.iter().map(|(a, b)| vec![*a, *b]).collect(),
        };
        DrivingConfig { kind: self.kind, table, seed: self.seed, kappa: self.kappa }
    }

    /// Number of distinct table rows; a constant driving has one.
    pub fn table_len(&self) -> usize {
        self.entries.len()
    }

    /// Table row selected at base index `n`.
    pub fn row_at(&self, n: i64) -> usize {
        let len = self.entries.len();
        match self.kind {
            DrivingKind::Periodic => n.rem_euclid(len as i64) as usize,
            DrivingKind::Iid if len == 1 => 0,
            DrivingKind::Iid => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(n as u64);
                let u: f64 = rng.random();
                self.cumulative.iter().position(|c| u < *c).unwrap_or(len - 1)
            }
        }
    }

    /// Scaled `(κε₁, κε₂)` at base index `n`.
    pub fn epsilon_at(&self, n: i64) -> (f64, f64) {
        let (a, b) = self.entries[self.row_at(n)];
        (self.kappa * a, self.kappa * b)
    }

    pub fn row_params<S: Scalar>(&self, row: usize) -> PairedTentParams<S> {
        let (a, b) = self.entries[row];
        let k = S::from_decimal(self.kappa);
        PairedTentParams::new(S::from_decimal(a) * k.clone(), S::from_decimal(b) * k)
            .expect("table entries were validated")
    }

    pub fn params_at<S: Scalar>(&self, n: i64) -> PairedTentParams<S> {
        self.row_params(self.row_at(n))
    }

    pub fn map_at<S: Scalar>(&self, n: i64) -> PiecewiseLinearMap<S> {
        make_paired_tent(&self.params_at(n)).expect("validated parameters")
    }

    /// `S = T_{σ(ω)} ∘ T_ω` with `ω` at base index `base`.
    pub fn second_iterate_at_base<S: Scalar>(&self, base: i64) -> SecondIterate<S> {
        SecondIterate::new(self.params_at(base), self.params_at(base + 1)).expect("validated parameters")
    }

    /// Second iterate at step `k`, i.e. base index `2k`.
    ///
    /// For a periodic driving of even period the steps only visit even base
    /// indices, the `σ²`-ergodic component through `0`; odd periods visit the
    /// whole cycle.
    pub fn second_iterate_at<S: Scalar>(&self, k: i64) -> SecondIterate<S> {
        self.second_iterate_at_base(2 * k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Bv,
    L1,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocycleOptions {
    pub cone: ConeParams,
    /// Float mode only: above this many cells a density is averaged onto a
    /// uniform grid of this many cells.
    pub max_cells: usize,
    pub norm: NormKind,
    /// Float mode only: subtract the integral drift in the λ₂ iteration.
    pub recenter: bool,
    pub pullback_depth: usize,
    pub burn_in: usize,
}

impl Default for CocycleOptions {
    fn default() -> Self {
        Self {
            cone: ConeParams::default(),
            max_cells: 4096,
            norm: NormKind::Bv,
            recenter: true,
            pullback_depth: 60,
            burn_in: 0,
        }
    }
}

impl CocycleOptions {
    pub fn norm<S: Scalar>(&self, f: &StepFunction<S>) -> S {
        match self.norm {
            NormKind::Bv => f.bv_norm(),
            NormKind::L1 => f.l1(),
        }
    }

    fn cap<S: Scalar>(&self, f: StepFunction<S>) -> StepFunction<S> {
        if !S::EXACT && f.cells() > self.max_cells {
            f.project_uniform(self.max_cells)
        } else {
            f
        }
    }
}

/// `P_k f`.
pub fn apply_step<S: Scalar>(
    stream: &DrivingStream,
    k: i64,
    f: &StepFunction<S>,
    opts: &CocycleOptions,
) -> StepFunction<S> {
    opts.cap(pf_apply(&stream.second_iterate_at::<S>(k).map, f))
}

/// `P_{k+n-1} ⋯ P_k f` with renormalization after every step; returns the
/// normalized result.
pub fn push_forward_normalized<S: Scalar>(
    stream: &DrivingStream,
    k: i64,
    n: usize,
    f: &StepFunction<S>,
    opts: &CocycleOptions,
) -> StepFunction<S> {
    let mut v = f.scale(&(S::one() / opts.norm(f)));
    for j in 0..n {
        let w = apply_step(stream, k + j as i64, &v, opts);
        v = w.scale(&(S::one() / opts.norm(&w)));
    }
    v
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct EquivariantDensity<S> {
    pub omega_index: i64,
    pub density: StepFunction<S>,
    pub phi: f64,
    pub pullback_depth: usize,
    /// `‖P v̂(ω) − φ̂ v̂(σ²ω)‖`.
    pub residual: f64,
    /// `‖v̂_depth − v̂_{depth−1}‖`.
    pub cauchy_increment: f64,
}

/// `v̂(ω) = L(depth, σ^{-depth}ω) g / ‖·‖` at step `omega_index`.
pub fn pullback_density<S: Scalar>(
    stream: &DrivingStream,
    omega_index: i64,
    depth: usize,
    seed_fn: &StepFunction<S>,
    opts: &CocycleOptions,
) -> Result<EquivariantDensity<S>> {
    if depth == 0 {
        return Err(Error::Config("pullback depth must be at least 1".into()));
    }
    if !cone_contains(seed_fn, &opts.cone, 1.0) {
        return Err(Error::Domain("seed function must lie in the cone".into()));
    }
    let pull = |k: i64, d: usize| push_forward_normalized(stream, k - d as i64, d, seed_fn, opts);
    let ((v, v_prev), v_next) = rayon::join(
        || rayon::join(|| pull(omega_index, depth), || pull(omega_index, depth - 1)),
        || pull(omega_index + 1, depth),
    );
    let pv = apply_step(stream, omega_index, &v, opts);
    let phi = opts.norm(&pv);
    let residual = opts.norm(&pv.sub(&v_next.scale(&phi)));
    let cauchy = opts.norm(&v.sub(&v_prev));
    Ok(EquivariantDensity {
        omega_index,
        density: v,
        phi: phi.to_f64_lossy(),
        pullback_depth: depth,
        residual: residual.to_f64_lossy(),
        cauchy_increment: cauchy.to_f64_lossy(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lambda1Estimate {
    pub lambda1: f64,
    pub stderr: f64,
    pub n_steps: usize,
}

fn batch_stderr(xs: &[f64]) -> f64 {
    let batches = xs.len().min(20);
    if batches < 2 {
        return 0.0;
    }
    let size = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

/// `λ₁ ≈ (1/2n) Σ log φ̂(σ^{2i}ω)` along the forward orbit of the pulled-back density.
pub fn lambda1_birkhoff<S: Scalar>(
    stream: &DrivingStream,
    omega_index: i64,
    n_steps: usize,
    opts: &CocycleOptions,
) -> Result<Lambda1Estimate> {
    if n_steps == 0 {
        return Err(Error::Config("n_steps must be at least 1".into()));
    }
    let start = pullback_density(stream, omega_index, opts.pullback_depth.max(1), &StepFunction::<S>::one(), opts)?;
    let mut v = start.density;
    let mut logs = Vec::with_capacity(n_steps);
    for i in 0..n_steps {
        let w = apply_step(stream, omega_index + i as i64, &v, opts);
        let phi = opts.norm(&w);
        logs.push(phi.to_f64_lossy().ln());
        v = w.scale(&(S::one() / phi));
    }
    let mean = logs.iter().sum::<f64>() / n_steps as f64;
    Ok(Lambda1Estimate { lambda1: mean / 2.0, stderr: batch_stderr(&logs) / 2.0, n_steps })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub lambda1: f64,
    pub lambda2: f64,
    pub n_steps: usize,
    pub stderr: f64,
}

/// `𝟙_{[−1,0]} − 𝟙_{[0,1]}`.
pub fn antisymmetric_seed<S: Scalar>() -> StepFunction<S> {
    StepFunction::half_indicator(Side::Minus).sub(&StepFunction::half_indicator(Side::Plus))
}

/// Growth rate `(1/2n) log ‖P_{k+n−1}⋯P_k f₀‖` of a zero-integral seed.
pub fn lambda2_growth<S: Scalar>(
    stream: &DrivingStream,
    omega_index: i64,
    n_steps: usize,
    renorm_every: usize,
    f0: &StepFunction<S>,
    opts: &CocycleOptions,
) -> Result<f64> {
    if renorm_every == 0 || n_steps < renorm_every {
        return Err(Error::Config("need n_steps >= renorm_every >= 1".into()));
    }
    let mut f = f0.scale(&(S::one() / opts.norm(f0)));
    let mut k = omega_index;
    let step = |f: &StepFunction<S>, k: i64| {
        let g = apply_step(stream, k, f, opts);
        if !S::EXACT && opts.recenter {
            g.shift(&(-g.integral()))
        } else {
            g
        }
    };
    for _ in 0..opts.burn_in {
        let g = step(&f, k);
        f = g.scale(&(S::one() / opts.norm(&g)));
        k += 1;
    }
    let mut acc = 0.0;
    for i in 1..=n_steps {
        f = step(&f, k);
        k += 1;
        if i % renorm_every == 0 || i == n_steps {
            let nf = opts.norm(&f);
            if nf.is_zero() {
                return Ok(f64::NEG_INFINITY);
            }
            acc += nf.to_f64_lossy().ln();
            f = f.scale(&(S::one() / nf));
        }
    }
    Ok(acc / (2.0 * n_steps as f64))
}

/// λ₂ from the antisymmetric seed, λ₁ from the Birkhoff average.
pub fn lambda2_power_iteration<S: Scalar>(
    stream: &DrivingStream,
    omega_index: i64,
    n_steps: usize,
    renorm_every: usize,
    opts: &CocycleOptions,
) -> Result<SpectrumEstimate> {
    let lambda2 = lambda2_growth(stream, omega_index, n_steps, renorm_every, &antisymmetric_seed::<S>(), opts)?;
    let l1 = lambda1_birkhoff::<S>(stream, omega_index, n_steps, opts)?;
    Ok(SpectrumEstimate { lambda1: l1.lambda1, lambda2, n_steps, stderr: l1.stderr })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaComponent {
    pub alpha_seq: Vec<f64>,
    pub beta_seq: Vec<f64>,
    pub eta: f64,
    pub monotone: bool,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaBracket {
    /// Shift `c` in `x = (x + c𝟙) − c𝟙`.
    pub shift: f64,
    pub plus: EtaComponent,
    pub minus: EtaComponent,
    pub eta: f64,
    /// η at `v̂(ω)` itself; 1 up to the bracket tolerance.
    pub eta_of_v: f64,
    pub integral_of_v: f64,
    pub monotone: bool,
    pub closed: bool,
}

/// Relative width below which a bracket counts as closed.
pub const ETA_CLOSE_TOL: f64 = 1e-8;

fn bracket_sequence<S: Scalar>(
    stream: &DrivingStream,
    omega_index: i64,
    v0: &StepFunction<S>,
    g: &StepFunction<S>,
    n_steps: usize,
    opts: &CocycleOptions,
) -> EtaComponent {
    let (mut v, mut u) = (v0.clone(), g.clone());
    let (mut alpha_seq, mut beta_seq) = (Vec::new(), Vec::new());
    for i in 0..=n_steps {
        alpha_seq.push(hilbert_alpha(&v, &u, &opts.cone, TOL_CONE));
        beta_seq.push(hilbert_beta(&v, &u, &opts.cone, TOL_CONE));
        if i == n_steps {
            break;
        }
        let k = omega_index + i as i64;
        let pv = apply_step(stream, k, &v, opts);
        let inv_phi = S::one() / opts.norm(&pv);
        v = pv.scale(&inv_phi);
        u = apply_step(stream, k, &u, opts).scale(&inv_phi);
    }
    let slack = |x: f64| 1e-9 * x.abs() + 1e-12;
    let monotone = alpha_seq.windows(2).all(|w| w[1] >= w[0] - slack(w[0]))
        && beta_seq.windows(2).all(|w| w[1] <= w[0] + slack(w[0]));
    let (a, b) = (*alpha_seq.last().unwrap(), *beta_seq.last().unwrap());
    let closed = b.is_finite() && b - a <= ETA_CLOSE_TOL * b.abs().max(1e-300);
    EtaComponent { alpha_seq, beta_seq, eta: 0.5 * (a + b), monotone, closed }
}

/// `η(ω, x)` as the common limit of `α(v̂(σ^{2i}ω), L̃ g)` and `β(…)` for the
/// two cone parts of `x`.
pub fn eta_bracket<S: Scalar>(
    stream: &DrivingStream,
    omega_index: i64,
    x: &StepFunction<S>,
    n_steps: usize,
    opts: &CocycleOptions,
) -> Result<EtaBracket> {
    if n_steps == 0 {
        return Err(Error::Config("n_steps must be at least 1".into()));
    }
    let v = pullback_density(stream, omega_index, opts.pullback_depth.max(1), &StepFunction::one(), opts)?.density;
    let a = S::from_decimal(opts.cone.a);
    let mut margin = S::ratio(1, 100) * x.bv_norm();
    if margin.is_zero() {
        margin = S::one();
    }
    let c = S::max_of(-x.essinf(), S::zero()) + x.variation() / a + margin;
    let g1 = x.shift(&c);
    let g2 = StepFunction::constant(c.clone());
    let (plus, (minus, at_v)) = rayon::join(
        || bracket_sequence(stream, omega_index, &v, &g1, n_steps, opts),
        || {
            rayon::join(
                || bracket_sequence(stream, omega_index, &v, &g2, n_steps, opts),
                || bracket_sequence(stream, omega_index, &v, &v, 1, opts),
            )
        },
    );
    Ok(EtaBracket {
        shift: c.to_f64_lossy(),
        eta: plus.eta - minus.eta,
        eta_of_v: at_v.eta,
        integral_of_v: v.integral().to_f64_lossy(),
        monotone: plus.monotone && minus.monotone,
        closed: plus.closed && minus.closed,
        plus,
        minus,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub k_p: usize,
    /// Entry `n − 1` holds the value at `n = 1..=horizon`.
    pub l_plus: Vec<usize>,
    pub j_plus: Vec<usize>,
    pub l_minus: Vec<usize>,
    pub j_minus: Vec<usize>,
    pub predicted_diam: Vec<f64>,
    pub forward_ok: bool,
    pub backward_ok: bool,
}

/// Contraction bookkeeping along `n = 1..=horizon`; `in_g(i)` says whether
/// step `i` (relative to ω, either sign) lies in `G_P`.
pub fn contraction_schedule(
    horizon: usize,
    in_g: impl Fn(i64) -> bool,
    k_p: usize,
    d_p: f64,
) -> Result<Schedule> {
    if k_p == 0 {
        return Err(Error::Config("k_P must be at least 1".into()));
    }
    if horizon < k_p {
        return Err(Error::Config("horizon must be at least k_P".into()));
    }
    let forward: Vec<bool> = (0..=horizon as i64).map(&in_g).collect();
    let backward: Vec<bool> = (0..=horizon as i64).map(|i| i >= 1 && in_g(-i)).collect();

    let mut m_plus = Vec::new();
    for (i, _) in forward.iter().enumerate().filter(|(_, v)| **v) {
        if m_plus.last().is_none_or(|&m: &usize| i >= m + k_p) {
            m_plus.push(i);
        }
    }
    let mut m_minus = Vec::new();
    for (i, _) in backward.iter().enumerate().filter(|(i, v)| **v && *i >= k_p) {
        if m_minus.last().is_none_or(|&m: &usize| i >= m + k_p) {
            m_minus.push(i);
        }
    }

    let factor = (d_p / 4.0).tanh();
    let mut s = Schedule {
        k_p,
        l_plus: Vec::with_capacity(horizon),
        j_plus: Vec::with_capacity(horizon),
        l_minus: Vec::with_capacity(horizon),
        j_minus: Vec::with_capacity(horizon),
        predicted_diam: Vec::with_capacity(horizon),
        forward_ok: true,
        backward_ok: true,
    };
    let (mut lp, mut lm) = (usize::from(forward[0]), 0);
    for n in 1..=horizon {
        lp += usize::from(forward[n]);
        lm += usize::from(backward[n]);
        let jp = if n >= k_p { m_plus.partition_point(|&m| m <= n - k_p) } else { 0 };
        let jm = m_minus.partition_point(|&m| m <= n);
        s.forward_ok &= lp <= k_p * (jp + 1);
        s.backward_ok &= lm + 1 <= k_p * (jm + 1);
        s.predicted_diam.push(if jp == 0 { f64::INFINITY } else { factor.powi(jp as i32 - 1) * d_p });
        s.l_plus.push(lp);
        s.j_plus.push(jp);
        s.l_minus.push(lm);
        s.j_minus.push(jm);
    }
    Ok(s)
}

/// Smallest `k ≤ max_k` such that every probe image under `k` steps is
/// bounded below and at finite θ-distance from `𝟙`.
pub fn first_contraction_time<S: Scalar>(
    stream: &DrivingStream,
    omega_index: i64,
    max_k: usize,
    opts: &CocycleOptions,
) -> Option<usize> {
    use rayon::prelude::*;
    let mut probes: Vec<StepFunction<S>> = probe_family(&opts.cone, 8, 0);
    let one = StepFunction::<S>::one();
    for k in 1..=max_k {
        probes = probes
            .par_iter()
            .map(|h| {
                let w = apply_step(stream, omega_index + k as i64 - 1, h, opts);
                w.scale(&(S::one() / opts.norm(&w)))
            })
            .collect();
        let finite = probes.par_iter().all(|h| {
            h.essinf() > S::zero()
                && hilbert_alpha(&one, h, &opts.cone, 1e-6) > 0.0
                && hilbert_beta(&one, h, &opts.cone, 1e-6).is_finite()
        });
        if finite {
            return Some(k);
        }
    }
    None
}
