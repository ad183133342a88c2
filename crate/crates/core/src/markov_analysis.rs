//! Markov paired tent maps `T_{κₙ,κₙ}` with `(2+2κₙ)ⁿκₙ = 1`: partition,
//! adjacency matrix, characteristic polynomial and exact second eigenvalue.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval_maps::{make_paired_tent, Interval, PairedTentParams};
use crate::poly;
use crate::scalar::Scalar;
use crate::step_functions::StepFunction;

/// Bits of the dyadic approximation of `κₙ` in exact mode.
pub const KAPPA_BITS: u32 = 200;
/// Endpoint matching slack in exact mode, `2^-180`.
pub const SLACK_BITS: u32 = 180;

fn kappa_equation(n: u32, k: f64) -> f64 {
    (2.0 + 2.0 * k).powi(n as i32) * k - 1.0
}

/// Root of `(2+2κ)ⁿκ = 1` in `(0, ½)` by bisection.
pub fn solve_kappa(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    while hi - lo > 1e-15 * 0.5 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if kappa_equation(n, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // The endpoint with the smaller residual.
    Ok(if kappa_equation(n, lo).abs() <= kappa_equation(n, hi).abs() { lo } else { hi })
}

/// Dyadic `κₙ` with `KAPPA_BITS` fractional bits, exact bisection.
pub fn solve_kappa_rational(n: u32) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let one = BigRational::one();
    let two = BigRational::from_integer(2.into());
    let f = |k: &BigRational| num_traits::pow(&two + &two * k, n as usize) * k - &one;
    let (mut lo, mut hi) = (BigRational::zero(), BigRational::new(1.into(), 2.into()));
    for _ in 0..KAPPA_BITS {
        let mid = (&lo + &hi) / &two;
        if f(&mid) < BigRational::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn slack() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << SLACK_BITS)
}

/// Markov partition `{Rᵢ}`, left to right, built from the forward orbits of `±κ`.
pub fn build_partition<S: Scalar>(n: u32, kappa: &S) -> Result<Vec<Interval<S>>> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let map = make_paired_tent(&PairedTentParams::new(kappa.clone(), kappa.clone())?)?;
    let mut orbit = Vec::with_capacity(n as usize);
    let mut x = -kappa.clone();
    for _ in 1..n {
        x = map.evaluate(&x)?;
        orbit.push(x.clone());
    }
    let mut pts = vec![-S::one()];
    pts.extend(orbit.iter().cloned());
    pts.extend([-S::half(), -kappa.clone(), S::zero(), kappa.clone(), S::half()]);
    pts.extend(orbit.iter().rev().map(|y| -y.clone()));
    pts.push(S::one());
    pts.windows(2)
        .map(|w| {
            Interval::new(w[0].clone(), w[1].clone())
                .map_err(|_| Error::Numerical(format!("partition points out of order for n = {n}")))
        })
        .collect()
}

/// `A[i][j] = 1` iff `T(Rᵢ) ⊇ Rⱼ`, checking that every cell image is a union
/// of cells up to `slack`.
pub fn adjacency<S: Scalar>(n: u32, kappa: &S, slack: &S) -> Result<Vec<Vec<u8>>> {
    let cells = build_partition(n, kappa)?;
    let map = make_paired_tent(&PairedTentParams::new(kappa.clone(), kappa.clone())?)?;
    let near = |a: &S, b: &S| (a.clone() - b.clone()).abs() <= *slack;
    let mut pts: Vec<S> = cells.iter().map(|c| c.lo.clone()).collect();
    pts.push(S::one());
    let mut a = vec![vec![0u8; cells.len()]; cells.len()];
    for (i, cell) in cells.iter().enumerate() {
        let images = map.image_of_interval(cell);
        if images.len() != 1 {
            return Err(Error::Numerical(format!("cell {i} straddles a branch boundary")));
        }
        let img = &images[0];
        for end in [&img.lo, &img.hi] {
            if !pts.iter().any(|p| near(p, end)) {
                return Err(Error::Numerical(format!(
                    "Markov property fails: image endpoint {:e} of cell {i} is not a partition point",
                    end.to_f64_lossy()
                )));
            }
        }
        for (j, other) in cells.iter().enumerate() {
            let inside = other.lo.clone() >= img.lo.clone() - slack.clone()
                && other.hi.clone() <= img.hi.clone() + slack.clone();
            a[i][j] = u8::from(inside);
        }
    }
    Ok(a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovModel {
    pub n: u32,
    pub kappa: f64,
    pub partition: Vec<Interval<f64>>,
    pub adjacency: Vec<Vec<u8>>,
    pub rho: f64,
    /// Certified Collatz–Wielandt bracket of `ρ(A)`.
    pub rho_bracket: (f64, f64),
    pub r_n: f64,
    pub lambda2: f64,
    pub ratio_to_minus_2kappa: f64,
    pub charpoly_ok: bool,
    /// `n ≥ 5`.
    pub asymptotic: bool,
    /// Real roots of `xⁿ(x−2) − 2` and `xⁿ(x−2) + 2`.
    pub real_roots_minus: Vec<f64>,
    pub real_roots_plus: Vec<f64>,
}

/// Adjacency matrix of `T_{κₙ,κₙ}` from the exact dyadic `κₙ`.
pub fn adjacency_exact(n: u32) -> Result<Vec<Vec<u8>>> {
    adjacency(n, &solve_kappa_rational(n)?, &slack())
}

/// Model with partition and adjacency filled; spectral fields are `NaN`.
pub fn adjacency_matrix(n: u32) -> Result<MarkovModel> {
    let kappa = solve_kappa(n)?;
    let kq = solve_kappa_rational(n)?;
    let partition = build_partition(n, &kq)?.iter().map(Interval::to_f64).collect();
    Ok(MarkovModel {
        n,
        kappa,
        partition,
        adjacency: adjacency(n, &kq, &slack())?,
        rho: f64::NAN,
        rho_bracket: (f64::NAN, f64::NAN),
        r_n: f64::NAN,
        lambda2: f64::NAN,
        ratio_to_minus_2kappa: f64::NAN,
        charpoly_ok: false,
        asymptotic: n >= 5,
        real_roots_minus: Vec::new(),
        real_roots_plus: Vec::new(),
    })
}

fn as_i64(a: &[Vec<u8>]) -> Vec<Vec<i64>> {
    a.iter().map(|r| r.iter().map(|v| i64::from(*v)).collect()).collect()
}

/// Characteristic polynomial of the dynamics-derived `Aₙ` against
/// `x²(xⁿ(x−2)−2)(xⁿ(x−2)+2)`.
pub fn char_poly_verify(n: u32) -> Result<bool> {
    let a = adjacency_exact(n)?;
    Ok(poly::charpoly(&as_i64(&a))? == poly::markov_charpoly_factored(n as usize))
}

/// Collatz–Wielandt bracket `min (Ax)ᵢ/xᵢ ≤ ρ ≤ max (Ax)ᵢ/xᵢ` refined by power iteration.
pub fn spectral_radius(a: &[Vec<u8>], rel_tol: f64, max_iter: usize) -> (f64, f64) {
    let n = a.len();
    let mut x = vec![1.0; n];
    let mut bracket = (0.0_f64, f64::INFINITY);
    for _ in 0..max_iter {
        let y: Vec<f64> = a
            .iter()
            .map(|r| r.iter().zip(&x).filter(|(v, _)| **v != 0).map(|(_, xi)| xi).sum())
            .collect();
        let ratios = y.iter().zip(&x).map(|(yi, xi)| yi / xi);
        let lo = ratios.clone().fold(f64::INFINITY, f64::min);
        let hi = ratios.fold(0.0, f64::max);
        bracket = (bracket.0.max(lo), bracket.1.min(hi));
        if bracket.1 - bracket.0 <= rel_tol * bracket.1 {
            break;
        }
        let norm = y.iter().cloned().fold(0.0, f64::max);
        x = y.iter().map(|v| v / norm).collect();
    }
    bracket
}

/// Root of `xⁿ(x−2) + 2` in `(2n/(n+1), 2)` by bisection, if any.
pub fn subdominant_real_root(n: u32) -> Option<f64> {
    let g = |x: f64| x.powi(n as i32) * (x - 2.0) + 2.0;
    let mut lo = 2.0 * n as f64 / (n as f64 + 1.0);
    let mut hi = 2.0;
    if g(lo) >= 0.0 {
        return None;
    }
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Eigenvalues of `Aₙ` by a dense Schur decomposition.
pub fn dense_eigenvalues(a: &[Vec<u8>]) -> Vec<nalgebra::Complex<f64>> {
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| f64::from(a[i][j])).complex_eigenvalues().iter().cloned().collect()
}

/// `λ₂ = log((2 − 2rₙ)/(2 + 2κₙ))`. Without a real root near 2 (`n ≤ 3`) the
/// largest non-leading eigenvalue modulus from the dense solver is used.
pub fn exact_lambda2(n: u32) -> Result<MarkovModel> {
    let mut model = adjacency_matrix(n)?;
    let rho = 2.0 + 2.0 * model.kappa;
    let bracket = spectral_radius(&model.adjacency, 1e-13, 200_000);
    let second = match subdominant_real_root(n) {
        Some(x) => x,
        None => {
            let eig = dense_eigenvalues(&model.adjacency);
            eig.iter()
                .map(|z| z.norm())
                .filter(|m| (m - rho).abs() > 1e-6)
                .fold(0.0, f64::max)
        }
    };
    if !(second > 0.0 && second < rho) {
        return Err(Error::Numerical(format!("no subdominant eigenvalue found for n = {n}")));
    }
    model.rho = 0.5 * (bracket.0 + bracket.1);
    model.rho_bracket = bracket;
    model.r_n = (2.0 - second) / 2.0;
    model.lambda2 = (second / rho).ln();
    model.ratio_to_minus_2kappa = model.lambda2 / (-2.0 * model.kappa);
    model.charpoly_ok = poly::charpoly(&as_i64(&model.adjacency))? == poly::markov_charpoly_factored(n as usize);
    let bound = 3.0;
    model.real_roots_minus = poly::real_roots(&poly::tent_factor(n as usize, -2), -bound, bound, 1e-13);
    model.real_roots_plus = poly::real_roots(&poly::tent_factor(n as usize, 2), -bound, bound, 1e-13);
    Ok(model)
}

/// Largest `|μ|/ρ` over eigenvalues of `Aₙ` other than `ρ` and `2 − 2rₙ`, and
/// whether it stays below `(2 − 2rₙ)/ρ + 1e−6`.
pub fn subdominance(model: &MarkovModel) -> (f64, bool) {
    let rho = 2.0 + 2.0 * model.kappa;
    let second = 2.0 - 2.0 * model.r_n;
    let mut eig: Vec<(f64, f64)> = dense_eigenvalues(&model.adjacency).iter().map(|z| (z.re, z.im)).collect();
    for target in [rho, second] {
        if let Some(k) = eig
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let da = (a.1 .0 - target).hypot(a.1 .1);
                let db = (b.1 .0 - target).hypot(b.1 .1);
                da.total_cmp(&db)
            })
            .map(|(k, _)| k)
        {
            eig.remove(k);
        }
    }
    let worst = eig.iter().map(|(re, im)| re.hypot(*im) / rho).fold(0.0, f64::max);
    (worst, worst <= second / rho + 1e-6)
}

/// Lebesgue measures of the cells; a right eigenvector of `Aₙ` for `ρ`.
pub fn cell_measures(model: &MarkovModel) -> Vec<f64> {
    model.partition.iter().map(|c| c.measure()).collect()
}

/// Invariant density of `T_{κₙ,κₙ}` as a step function on the partition,
/// normalized to integral 1. Its cell values form a left eigenvector of `Aₙ`.
pub fn invariant_density(model: &MarkovModel) -> StepFunction<f64> {
    let n = model.adjacency.len();
    let mut h = vec![1.0; n];
    for _ in 0..100_000 {
        let mut next = vec![0.0; n];
        for (i, row) in model.adjacency.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if *v != 0 {
                    next[j] += h[i];
                }
            }
        }
        let mass: f64 = next.iter().zip(&model.partition).map(|(v, c)| v * c.measure()).sum();
        next.iter_mut().for_each(|v| *v /= mass);
        let delta = next.iter().zip(&h).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        h = next;
        if delta < 1e-15 {
            break;
        }
    }
    let mut bps: Vec<f64> = model.partition.iter().map(|c| c.lo).collect();
    bps.push(1.0);
    StepFunction::from_parts(bps, h).expect("partition is increasing")
}

pub const CSV_HEADER: &str = "n,kappa,r_n,rho,lambda2,ratio_to_minus_2kappa,charpoly_ok";

pub fn csv_row(m: &MarkovModel) -> String {
    format!(
        "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
        m.n, m.kappa, m.r_n, m.rho, m.lambda2, m.ratio_to_minus_2kappa, m.charpoly_ok
    )
}
