//! Integer polynomials: characteristic polynomials, products and real-root
//! isolation by Sturm sequences.
//!
//! Coefficients are stored lowest degree first.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type IntPoly = Vec<BigInt>;

pub fn from_i64(coeffs: &[i64]) -> IntPoly {
    trim(coeffs.iter().map(|c| BigInt::from(*c)).collect())
}

fn trim(mut p: IntPoly) -> IntPoly {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

pub fn degree(p: &IntPoly) -> usize {
    p.len().saturating_sub(1)
}

pub fn mul(a: &IntPoly, b: &IntPoly) -> IntPoly {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

/// `xⁿ(x − 2) + c`.
pub fn tent_factor(n: usize, c: i64) -> IntPoly {
    let mut p = vec![BigInt::zero(); n + 2];
    p[0] += c;
    p[n] = BigInt::from(-2);
    p[n + 1] = BigInt::one();
    trim(p)
}

/// `x²(xⁿ(x−2) − 2)(xⁿ(x−2) + 2)`.
pub fn markov_charpoly_factored(n: usize) -> IntPoly {
    let x2 = from_i64(&[0, 0, 1]);
    mul(&x2, &mul(&tent_factor(n, -2), &tent_factor(n, 2)))
}

/// `x^{2n+4} − 4x^{2n+3} + 4x^{2n+2} − 4x²`.
pub fn markov_charpoly_expanded(n: usize) -> IntPoly {
    let mut p = vec![BigInt::zero(); 2 * n + 5];
    p[2] = BigInt::from(-4);
    p[2 * n + 2] += 4;
    p[2 * n + 3] = BigInt::from(-4);
    p[2 * n + 4] = BigInt::one();
    p
}

/// `det(xI − A)` by the Faddeev–LeVerrier recursion in exact integers.
pub fn charpoly(a: &[Vec<i64>]) -> Result<IntPoly> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) {
        return Err(Error::Domain("matrix must be square".into()));
    }
    let a: Vec<Vec<BigInt>> = a.iter().map(|r| r.iter().map(|v| BigInt::from(*v)).collect()).collect();
    let mut coeffs = vec![BigInt::zero(); n + 1];
    coeffs[n] = BigInt::one();
    let mut m = vec![vec![BigInt::zero(); n]; n];
    for k in 1..=n {
        // M_k = A M_{k−1} + c_{n−k+1} I
        let mut next = vec![vec![BigInt::zero(); n]; n];
        for (i, row) in a.iter().enumerate() {
            for (l, ail) in row.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                for j in 0..n {
                    next[i][j] += ail * &m[l][j];
                }
            }
            next[i][i] += &coeffs[n - k + 1];
        }
        m = next;
        let mut trace = BigInt::zero();
        for (i, row) in a.iter().enumerate() {
            for (l, ail) in row.iter().enumerate() {
                trace += ail * &m[l][i];
            }
        }
        let (q, r) = (-trace).div_rem(&BigInt::from(k));
        if !r.is_zero() {
            return Err(Error::Numerical("non-integral Faddeev-LeVerrier step".into()));
        }
        coeffs[n - k] = q;
    }
    Ok(coeffs)
}

fn eval_rational(p: &[BigRational], x: &BigRational) -> BigRational {
    p.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
}

fn to_rational(p: &IntPoly) -> Vec<BigRational> {
    p.iter().map(|c| BigRational::from_integer(c.clone())).collect()
}

fn derivative(p: &[BigRational]) -> Vec<BigRational> {
    p.iter().enumerate().skip(1).map(|(i, c)| c * BigRational::from_integer(i.into())).collect()
}

fn div_rem(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut r = a.to_vec();
    let lead = b.last().expect("nonzero divisor").clone();
    let mut q = vec![BigRational::zero(); a.len().saturating_sub(b.len()) + 1];
    while r.len() >= b.len() && !r.is_empty() {
        let shift = r.len() - b.len();
        let t = r.last().unwrap().clone() / lead.clone();
        for (i, c) in b.iter().enumerate() {
            r[shift + i] = r[shift + i].clone() - t.clone() * c;
        }
        q[shift] = t;
        r.pop();
        while r.last().is_some_and(Zero::is_zero) {
            r.pop();
        }
    }
    (q, r)
}

fn rem(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    div_rem(a, b).1
}

fn chain(p0: Vec<BigRational>) -> Vec<Vec<BigRational>> {
    let p1 = derivative(&p0);
    let mut seq = vec![p0, p1];
    loop {
        let n = seq.len();
        if seq[n - 1].is_empty() {
            seq.pop();
            break;
        }
        let r: Vec<BigRational> = rem(&seq[n - 2], &seq[n - 1]).into_iter().map(|c| -c).collect();
        if r.is_empty() {
            break;
        }
        seq.push(r);
    }
    seq
}

/// Sturm chain of the square-free part of `p`.
fn sturm_sequence(p: &IntPoly) -> Vec<Vec<BigRational>> {
    let p0 = to_rational(p);
    let seq = chain(p0.clone());
    let g = seq.last().expect("nonempty chain");
    if g.len() <= 1 {
        return seq;
    }
    chain(div_rem(&p0, g).0)
}

fn sign_changes(seq: &[Vec<BigRational>], x: &BigRational) -> usize {
    let signs: Vec<i8> = seq
        .iter()
        .map(|p| eval_rational(p, x))
        .filter(|v| !v.is_zero())
        .map(|v| if v.is_positive() { 1 } else { -1 })
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Distinct real roots of `p` in `(lo, hi]`, each to absolute width `tol`.
/// Roots are located by Sturm counts, so multiple roots are found too.
pub fn real_roots(p: &IntPoly, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
    if p.len() < 2 {
        return Vec::new();
    }
    let seq = sturm_sequence(p);
    let count = |a: &BigRational, b: &BigRational| sign_changes(&seq, a) - sign_changes(&seq, b);
    let q = |x: f64| BigRational::from_float(x).expect("finite bound");
    let tol = q(tol);
    let two = BigRational::from_integer(2.into());
    let mut stack = vec![(q(lo), q(hi))];
    let mut roots = Vec::new();
    while let Some((a, b)) = stack.pop() {
        let c = count(&a, &b);
        if c == 0 {
            continue;
        }
        if c == 1 && &b - &a <= tol {
            roots.push(((&a + &b) / &two).to_f64_lossy());
            continue;
        }
        if &b - &a <= &tol / BigRational::from_integer(1_000_000.into()) {
            roots.push(((&a + &b) / &two).to_f64_lossy());
            continue;
        }
        let m = (&a + &b) / &two;
        stack.push((m.clone(), b));
        stack.push((a, m));
    }
    roots.sort_by(f64::total_cmp);
    roots
}

trait ToF64Lossy {
    fn to_f64_lossy(&self) -> f64;
}

impl ToF64Lossy for BigRational {
    fn to_f64_lossy(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Cauchy bound on the moduli of the roots.
pub fn root_bound(p: &IntPoly) -> f64 {
    let lead = num_traits::ToPrimitive::to_f64(&p.last().unwrap().abs()).unwrap_or(1.0);
    1.0 + p[..p.len() - 1]
        .iter()
        .map(|c| num_traits::ToPrimitive::to_f64(&c.abs()).unwrap_or(f64::INFINITY) / lead)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factored_and_expanded_forms_agree() {
        for n in 1..=12 {
            assert_eq!(markov_charpoly_factored(n), markov_charpoly_expanded(n), "n = {n}");
        }
        assert_eq!(markov_charpoly_expanded(1), from_i64(&[0, 0, -4, 0, 4, -4, 1]));
    }

    #[test]
    fn charpoly_of_small_matrices() {
        assert_eq!(charpoly(&[vec![2, 1], vec![1, 2]]).unwrap(), from_i64(&[3, -4, 1]));
        let companion = vec![vec![0, 0, 6], vec![1, 0, -11], vec![0, 1, 6]];
        assert_eq!(charpoly(&companion).unwrap(), from_i64(&[-6, 11, -6, 1]));
    }

    #[test]
    fn sturm_isolates_roots() {
        let p = from_i64(&[-6, 11, -6, 1]);
        let r = real_roots(&p, -10.0, 10.0, 1e-12);
        assert_eq!(r.len(), 3);
        for (x, e) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - e).abs() < 1e-11);
        }
        let x2 = from_i64(&[0, 0, 1]);
        assert_eq!(real_roots(&mul(&x2, &from_i64(&[-2, 0, 1])), -3.0, 3.0, 1e-12).len(), 3);
        assert!(real_roots(&from_i64(&[1, 0, 1]), -3.0, 3.0, 1e-12).is_empty());
    }

    #[test]
    fn tent_factor_roots() {
        // n = 1: x² − 2x ± 2 has roots 1 ± √3 and 1 ± i.
        let r = real_roots(&tent_factor(1, -2), -3.0, 3.0, 1e-13);
        assert!((r[1] - (1.0 + 3f64.sqrt())).abs() < 1e-12);
        assert!(real_roots(&tent_factor(1, 2), -3.0, 3.0, 1e-13).is_empty());
        assert!(root_bound(&tent_factor(5, 2)) <= 3.0);
    }
}
