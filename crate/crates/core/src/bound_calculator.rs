//! Explicit constants of the spectral-gap bound for paired tent cocycles and
//! of its small-κ refinement.
//!
//! All set-valued objects live on the second-iterate step index `j`, which
//! reads the driving at base indices `2j` and `2j + 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone_metric::{log_contraction_factor, ConeParams};
use crate::error::{Error, Result};
use crate::rds_cocycle::{DrivingKind, DrivingStream};
use crate::scalar::snapped_ceil;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasicConstants {
    /// `½ min{∫κε₁, ∫κε₂}`.
    #[serde(rename = "M")]
    pub m: f64,
    /// `4(1 + κB)²`.
    #[serde(rename = "D_eps")]
    pub d_eps: f64,
    /// `max{esssup ε₁, esssup ε₂}` of the unscaled table.
    #[serde(rename = "B")]
    pub b: f64,
    /// `M` of the unscaled table.
    pub m_unscaled: f64,
}

/// Table rows together with their weight in the invariant measure.
fn weighted_rows(stream: &DrivingStream) -> Vec<((f64, f64), f64)> {
    stream.entries.iter().copied().zip(stream.probs.iter().copied()).collect()
}

pub fn basic_constants(stream: &DrivingStream) -> Result<BasicConstants> {
    let rows = weighted_rows(stream);
    let int1: f64 = rows.iter().map(|((e, _), p)| e * p).sum();
    let int2: f64 = rows.iter().map(|((_, e), p)| e * p).sum();
    let m_unscaled = 0.5 * int1.min(int2);
    if !(m_unscaled > 0.0) {
        return Err(Error::Precondition(
            "both leakage parameters need positive mean; one of them vanishes almost everywhere".into(),
        ));
    }
    let b = rows
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|((e1, e2), _)| e1.max(*e2))
        .fold(0.0, f64::max);
    let k = stream.kappa;
    Ok(BasicConstants { m: k * m_unscaled, d_eps: 4.0 * (1.0 + k * b).powi(2), b, m_unscaled })
}

/// `⌈−log(2τ)/log 1.5⌉ + 1`.
pub fn m1_of_tau(tau: f64) -> Result<i64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!("tau = {tau} must lie in (0, 1)")));
    }
    Ok(snapped_ceil(-(2.0 * tau).ln() / 1.5_f64.ln()).max(0) + 1)
}

/// `⌈−log M / log 4⌉`.
pub fn m3_of(m: f64) -> i64 {
    snapped_ceil(-m.ln() / 4.0_f64.ln()).max(0)
}

/// `2 log((2(1+ν)/(1−ν))(1 + νa))`.
pub fn c1_of(cone: &ConeParams) -> f64 {
    2.0 * (2.0 * (1.0 + cone.nu) / (1.0 - cone.nu) * (1.0 + cone.nu * cone.a)).ln()
}

/// Checks that `(a, ν)` makes the second iterates map `C_a` into `C_{νa}`.
pub fn check_cone(stream: &DrivingStream, cone: &ConeParams) -> Result<()> {
    let sharp = stream.entries.iter().all(|(a, b)| stream.kappa * a.max(*b) <= 0.5);
    let general = cone.nu > 0.75 && cone.nu < 1.0 && cone.a >= (6.0 / (cone.nu - 0.75)).ceil() - 1e-9;
    let sharp_ok = sharp && cone.nu > 0.5 && cone.nu < 1.0 && cone.a >= (4.0 / (cone.nu - 0.5)).ceil() - 1e-9;
    if general || sharp_ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "cone (a = {}, nu = {}) is not invariant for this driving: need nu in (3/4,1) and a >= 6/(nu-3/4){}",
            cone.a,
            cone.nu,
            if sharp { ", or nu in (1/2,1) and a >= 4/(nu-1/2)" } else { "" }
        )))
    }
}

/// Membership of step `j` in `G₁` and `G₂`: `max{ε_k(σ^{2j}ω), ε_k(σ^{2j+1}ω)} ≥ M`,
/// compared on the unscaled table so the sets do not depend on κ.
pub fn g_sets_at(stream: &DrivingStream, m_unscaled: f64, j: i64) -> (bool, bool) {
    let (a1, a2) = stream.entries[stream.row_at(2 * j)];
    let (b1, b2) = stream.entries[stream.row_at(2 * j + 1)];
    (a1.max(b1) >= m_unscaled, a2.max(b2) >= m_unscaled)
}

/// Leakage structure: `d` and the measure of `𝒢` within the σ²-component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leakage {
    pub d12: i64,
    pub d21: i64,
    pub d: i64,
    pub mu_g1: f64,
    pub mu_g2: f64,
    pub mu_cal_g: f64,
}

/// `d_kl = 1 + min{i ≥ 0 : μ(G_k ∩ σ^{−2i}G_l) > 0}`, `d = max(d₁₂, d₂₁)` and
/// `𝒢 = (G₁ ∩ ⋃_{i<d} σ^{−2i}G₂) ∪ (G₂ ∩ ⋃_{i<d} σ^{−2i}G₁)`, all exact.
pub fn leakage(stream: &DrivingStream, m_unscaled: f64) -> Result<Leakage> {
    match stream.kind {
        DrivingKind::Periodic => leakage_periodic(stream, m_unscaled),
        DrivingKind::Iid => leakage_iid(stream, m_unscaled),
    }
}

/// Steps of one period of the σ²-component through step 0.
pub fn component_len(stream: &DrivingStream) -> usize {
    let p = stream.entries.len();
    match stream.kind {
        DrivingKind::Periodic if p % 2 == 0 => p / 2,
        DrivingKind::Periodic => p,
        DrivingKind::Iid => 1,
    }
}

fn leakage_periodic(stream: &DrivingStream, m: f64) -> Result<Leakage> {
    let len = component_len(stream);
    let g: Vec<(bool, bool)> = (0..len as i64).map(|j| g_sets_at(stream, m, j)).collect();
    let first_lag = |k: usize, l: usize| -> Result<i64> {
        let pick = |j: usize, s: usize| if s == 0 { g[j % len].0 } else { g[j % len].1 };
        (0..len)
            .find(|&i| (0..len).any(|j| pick(j, k) && pick(j + i, l)))
            .map(|i| i as i64 + 1)
            .ok_or_else(|| Error::Precondition("leakage sets never meet on this component".into()))
    };
    let (d12, d21) = (first_lag(0, 1)?, first_lag(1, 0)?);
    let d = d12.max(d21);
    let in_cal_g = |j: usize| {
        let any = |s: usize| (0..d as usize).any(|i| if s == 0 { g[(j + i) % len].0 } else { g[(j + i) % len].1 });
        (g[j].0 && any(1)) || (g[j].1 && any(0))
    };
    let count = |f: &dyn Fn(usize) -> bool| (0..len).filter(|&j| f(j)).count() as f64 / len as f64;
    Ok(Leakage {
        d12,
        d21,
        d,
        mu_g1: count(&|j| g[j].0),
        mu_g2: count(&|j| g[j].1),
        mu_cal_g: count(&in_cal_g),
    })
}

fn leakage_iid(stream: &DrivingStream, m: f64) -> Result<Leakage> {
    let rows = weighted_rows(stream);
    let (mut p1, mut p2, mut p12) = (0.0, 0.0, 0.0);
    for ((a1, a2), pa) in &rows {
        for ((b1, b2), pb) in &rows {
            let w = pa * pb;
            let (g1, g2) = (a1.max(*b1) >= m, a2.max(*b2) >= m);
            p1 += w * f64::from(u8::from(g1));
            p2 += w * f64::from(u8::from(g2));
            p12 += w * f64::from(u8::from(g1 && g2));
        }
    }
    if !(p1 > 0.0 && p2 > 0.0) {
        return Err(Error::Precondition("a leakage set has measure zero".into()));
    }
    // Distinct steps are independent, so every lag i ≥ 1 is already positive.
    let d = if p12 > 0.0 { 1 } else { 2 };
    let later = |p: f64| 1.0 - (1.0 - p).powi(d as i32 - 1);
    let mu_cal_g = p12 + (p1 - p12) * later(p2) + (p2 - p12) * later(p1);
    Ok(Leakage { d12: d, d21: d, d, mu_g1: p1, mu_g2: p2, mu_cal_g })
}

/// Membership of step `j` in `𝒢`.
pub fn in_cal_g(stream: &DrivingStream, m_unscaled: f64, d: i64, j: i64) -> bool {
    let (g1, g2) = g_sets_at(stream, m_unscaled, j);
    if !(g1 || g2) {
        return false;
    }
    let later: Vec<(bool, bool)> = (0..d).map(|i| g_sets_at(stream, m_unscaled, j + i)).collect();
    (g1 && later.iter().any(|g| g.1)) || (g2 && later.iter().any(|g| g.0))
}

/// Fraction of steps `0..n` in `𝒢`; a Monte-Carlo cross-check of `mu_cal_g`.
pub fn orbit_frequency(stream: &DrivingStream, m_unscaled: f64, d: i64, n: usize) -> f64 {
    (0..n as i64).filter(|&j| in_cal_g(stream, m_unscaled, d, j)).count() as f64 / n as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringTimes {
    pub a: f64,
    pub nu: f64,
    pub m1: i64,
    pub m3: i64,
    pub d: i64,
    #[serde(rename = "G_P_freq")]
    pub g_p_freq: f64,
}

pub fn covering_times(stream: &DrivingStream, cone: &ConeParams) -> Result<CoveringTimes> {
    check_cone(stream, cone)?;
    let basic = basic_constants(stream)?;
    let lk = leakage(stream, basic.m_unscaled)?;
    Ok(CoveringTimes {
        a: cone.a,
        nu: cone.nu,
        m1: m1_of_tau(1.0 / (2.0 * cone.a))?,
        m3: m3_of(basic.m),
        d: lk.d,
        g_p_freq: lk.mu_cal_g,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "D_eps")]
    pub d_eps: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub m1: i64,
    pub m3: i64,
    pub d: i64,
    #[serde(rename = "k_P")]
    pub k_p: i64,
    #[serde(rename = "D_P")]
    pub d_p: f64,
    #[serde(rename = "G_P_freq")]
    pub g_p_freq: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "C_statement_literal")]
    pub c_statement_literal: f64,
}

/// `C = μ(G_P)/(2k_P) · log tanh(D_P/4)` with `D_P = c₁ + 2k_P log D_eps`.
pub fn bound_from_parts(freq: f64, k_p: i64, c1: f64, d_eps: f64) -> (f64, f64) {
    let d_p = c1 + 2.0 * k_p as f64 * d_eps.ln();
    (d_p, freq / (2.0 * k_p as f64) * log_contraction_factor(d_p))
}

/// The displayed closed form `μ(G_P)/(2k_P) · log tanh(−¼ log(…) + ¼ k_P log D_eps)`.
pub fn literal_bound(freq: f64, k_p: i64, cone: &ConeParams, d_eps: f64) -> f64 {
    let arg = -0.25 * (c1_of(cone) / 2.0) + 0.25 * k_p as f64 * d_eps.ln();
    if arg <= 0.0 {
        return f64::NAN;
    }
    freq / (2.0 * k_p as f64) * log_contraction_factor(4.0 * arg)
}

pub fn spectral_gap_bound(stream: &DrivingStream, cone: &ConeParams) -> Result<BoundReport> {
    let basic = basic_constants(stream)?;
    let cov = covering_times(stream, cone)?;
    let k_p = cov.m1 + cov.d + cov.m3;
    let (d_p, c) = bound_from_parts(cov.g_p_freq, k_p, c1_of(cone), basic.d_eps);
    Ok(BoundReport {
        m: basic.m,
        d_eps: basic.d_eps,
        b: basic.b,
        m1: cov.m1,
        m3: cov.m3,
        d: cov.d,
        k_p,
        d_p,
        g_p_freq: cov.g_p_freq,
        c,
        c_statement_literal: literal_bound(cov.g_p_freq, k_p, cone, basic.d_eps),
    })
}

/// Membership of step `j` in `G_P = σ^{−2m₁}𝒢`.
pub fn in_g_p(stream: &DrivingStream, report: &BoundReport, j: i64) -> bool {
    let m_unscaled = report.m / stream.kappa;
    in_cal_g(stream, m_unscaled, report.d, j + report.m1)
}

/// Settings of the Birkhoff-frequency estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyOptions {
    /// Number of sampled start points (iid drivings).
    pub orbits: usize,
    /// Length of each orbit scanned for frequency violations.
    pub horizon: usize,
    pub seed: u64,
}

impl Default for FrequencyOptions {
    fn default() -> Self {
        Self { orbits: 400, horizon: 2048, seed: 0 }
    }
}

/// `N₀`, `f` and `μ(𝒢′)` from the Birkhoff estimator with `δ = ½`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyThreshold {
    pub f: f64,
    pub n0: i64,
    /// Estimated measure of the start points whose counts stay above `f·n` for all `n ≥ N₀`.
    pub freq: f64,
}

/// Last `n` at which an orbit starting at step `start` has fewer than `f·n`
/// visits to `G₁` or to `G₂` among its first `n` steps (0 if never).
fn last_violation(stream: &DrivingStream, m: f64, f: f64, start: i64, horizon: usize) -> usize {
    let (mut c1, mut c2, mut last) = (0usize, 0usize, 0usize);
    for n in 1..=horizon {
        let (g1, g2) = g_sets_at(stream, m, start + n as i64 - 1);
        c1 += usize::from(g1);
        c2 += usize::from(g2);
        let need = f * n as f64;
        if (c1 as f64) < need || (c2 as f64) < need {
            last = n;
        }
    }
    last
}

pub fn frequency_threshold(stream: &DrivingStream, opts: &FrequencyOptions) -> Result<FrequencyThreshold> {
    let basic = basic_constants(stream)?;
    let lk = leakage(stream, basic.m_unscaled)?;
    let f = 0.5 * lk.mu_g1.min(lk.mu_g2);
    let starts: Vec<i64> = match stream.kind {
        DrivingKind::Periodic => (0..component_len(stream) as i64).collect(),
        DrivingKind::Iid if stream.table_len() == 1 => vec![0],
        DrivingKind::Iid => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            (0..opts.orbits).map(|_| rng.random_range(-(1i64 << 40)..(1i64 << 40))).collect()
        }
    };
    let mut lasts: Vec<usize> = {
        use rayon::prelude::*;
        starts.par_iter().map(|s| last_violation(stream, basic.m_unscaled, f, *s, opts.horizon)).collect()
    };
    lasts.sort_unstable();
    let n0 = (lasts[(lasts.len() - 1) / 2] + 1) as i64;
    let freq = lasts.iter().filter(|l| (**l as i64) < n0).count() as f64 / lasts.len() as f64;
    Ok(FrequencyThreshold { f, n0, freq })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub kappa: f64,
    pub m1: i64,
    pub m3_kappa: i64,
    #[serde(rename = "k_P_kappa")]
    pub k_p_kappa: i64,
    pub gamma: f64,
    pub ln_gamma: f64,
    #[serde(rename = "D_P_prime")]
    pub d_p_prime: f64,
    pub c1: f64,
    #[serde(rename = "C1")]
    pub c1_kappa: f64,
    pub c2: f64,
    pub f: f64,
    pub freq: f64,
    pub n0: i64,
    /// `m₃(κ) ≥ N₀`.
    pub asymptotic: bool,
}

/// `C₁(κ) = μ(G′_P)/k_P(κ) · log tanh((c₁ − 2 log γ(κ))/4)` for the driving
/// scaled by `kappa` (the stream's own κ is ignored).
pub fn asymptotic_bound(
    stream: &DrivingStream,
    cone: &ConeParams,
    kappa: f64,
    threshold: &FrequencyThreshold,
) -> Result<AsymptoticReport> {
    let scaled = stream.with_kappa(kappa)?;
    check_cone(&scaled, cone)?;
    let basic = basic_constants(&scaled)?;
    let m1 = m1_of_tau(1.0 / (2.0 * cone.a))?;
    let m3 = m3_of(basic.m);
    let k_p = m1 + 2 * m3;
    let ln4 = 4.0_f64.ln();
    let ln_gamma = -2.0 * k_p as f64 * (kappa * basic.b).ln_1p() - 2.0_f64.ln() - m1 as f64 * ln4
        + (threshold.f * m3 as f64).ln()
        - m3 as f64 * ln4;
    let c1 = c1_of(cone);
    let d_p_prime = c1 - 2.0 * ln_gamma;
    let c1_kappa = threshold.freq / k_p as f64 * log_contraction_factor(d_p_prime);
    let c2 = (-c1 / 2.0).exp() * threshold.freq * threshold.f * basic.m_unscaled / (2.0 * 4.0_f64.powi(m1 as i32));
    Ok(AsymptoticReport {
        kappa,
        m1,
        m3_kappa: m3,
        k_p_kappa: k_p,
        gamma: ln_gamma.exp(),
        ln_gamma,
        d_p_prime,
        c1,
        c1_kappa,
        c2,
        f: threshold.f,
        freq: threshold.freq,
        n0: threshold.n0,
        asymptotic: m3 >= threshold.n0,
    })
}

pub const CSV_HEADER: &str = "M,D_eps,B,m1,m3,d,k_P,D_P,G_P_freq,C,C_literal,kappa,gamma,C1,c2";

/// One CSV row; the asymptotic columns are empty without a report.
pub fn csv_row(r: &BoundReport, kappa: f64, asym: Option<&AsymptoticReport>) -> String {
    let tail = match asym {
        Some(a) => format!("{:e},{:e},{:e}", a.gamma, a.c1_kappa, a.c2),
        None => ",,".to_string(),
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{:e},{:e},{},{}",
        r.m, r.d_eps, r.b, r.m1, r.m3, r.d, r.k_p, r.d_p, r.g_p_freq, r.c, r.c_statement_literal, kappa, tail
    )
}
