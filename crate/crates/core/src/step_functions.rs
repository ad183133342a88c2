//! Piecewise-constant representatives of BV classes on `[-1, 1]` and the
//! transfer operator of piecewise-linear maps acting on them.
//!
//! Values live on open cells; point values are never stored, so variation,
//! essential bounds and one-sided limits are read off the cell values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval_maps::{PiecewiseLinearMap, SecondIterate, Side};
use crate::scalar::{leq, Scalar};

/// Tolerance for inequality checks in float mode.
pub const FLOAT_CHECK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction<S> {
    breakpoints: Vec<S>,
    values: Vec<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BvFunctionals<S> {
    pub l1: S,
    pub integral: S,
    pub essinf: S,
    pub esssup: S,
    pub bv_norm: S,
}

/// Plain float form used for JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFunctionJson {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

/// Candidate breakpoint with a merge priority; higher wins inside a cluster.
type Candidate<S> = (S, u8);

const PRIORITY_DERIVED: u8 = 0;
const PRIORITY_FRESH: u8 = 1;
const PRIORITY_ENDPOINT: u8 = 2;

/// Sorts candidates and merges those closer than the merge tolerance.
///
/// A cluster is represented by its highest-priority member.
fn cluster<S: Scalar>(mut pts: Vec<Candidate<S>>) -> Vec<S> {
    let one = S::one();
    pts.push((-one.clone(), PRIORITY_ENDPOINT));
    pts.push((one.clone(), PRIORITY_ENDPOINT));
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("ordered"));
    let tol = S::merge_tol();
    let mut out: Vec<S> = Vec::with_capacity(pts.len());
    let mut start: Option<S> = None;
    let mut best: Option<Candidate<S>> = None;
    for (x, p) in pts {
        let x = S::max_of(S::min_of(x, one.clone()), -one.clone());
        match &start {
            Some(s) if x.clone() - s.clone() <= tol => {
                if p > best.as_ref().expect("open cluster").1 {
                    best = Some((x, p));
                }
            }
            _ => {
                if let Some((b, _)) = best.take() {
                    out.push(b);
                }
                start = Some(x.clone());
                best = Some((x, p));
            }
        }
    }
    if let Some((b, _)) = best {
        out.push(b);
    }
    out
}

impl<S: Scalar> StepFunction<S> {
    /// Builds a step function from `m + 1` breakpoints `-1 = x₀ < … < x_m = 1`
    /// and `m` cell values, returning the canonical form.
    pub fn from_parts(breakpoints: Vec<S>, values: Vec<S>) -> Result<Self> {
        if values.is_empty() || breakpoints.len() != values.len() + 1 {
            return Err(Error::Domain(format!(
                "{} breakpoints for {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if !S::near(&breakpoints[0], &-S::one()) || !S::near(&breakpoints[values.len()], &S::one()) {
            return Err(Error::Domain("breakpoints must run from -1 to 1".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("breakpoints must be strictly increasing".into()));
        }
        let mut bps = breakpoints;
        bps[0] = -S::one();
        let last = bps.len() - 1;
        bps[last] = S::one();
        Ok(Self::canonical(bps, values))
    }

    /// Drops cells narrower than the merge tolerance and merges equal neighbours.
    fn canonical(bps: Vec<S>, vals: Vec<S>) -> Self {
        let tol = S::merge_tol();
        let mut out_b: Vec<S> = Vec::with_capacity(bps.len());
        let mut out_v: Vec<S> = Vec::with_capacity(vals.len());
        out_b.push(bps[0].clone());
        for (i, v) in vals.into_iter().enumerate() {
            let hi = bps[i + 1].clone();
            let width = hi.clone() - out_b.last().expect("nonempty").clone();
            if width <= tol && !out_v.is_empty() {
                *out_b.last_mut().expect("nonempty") = hi;
                continue;
            }
            if out_v.last() == Some(&v) {
                *out_b.last_mut().expect("nonempty") = hi;
            } else {
                out_b.push(hi);
                out_v.push(v);
            }
        }
        let last = out_b.len() - 1;
        out_b[last] = S::one();
        Self { breakpoints: out_b, values: out_v }
    }

    pub fn constant(c: S) -> Self {
        Self { breakpoints: vec![-S::one(), S::one()], values: vec![c] }
    }

    pub fn one() -> Self {
        Self::constant(S::one())
    }

    pub fn zero() -> Self {
        Self::constant(S::zero())
    }

    /// Indicator of `[lo, hi] ⊆ [-1, 1]`.
    pub fn indicator(lo: S, hi: S) -> Result<Self> {
        let one = S::one();
        if lo < -one.clone() || hi > one || !(lo < hi) {
            return Err(Error::Domain(format!("bad indicator interval [{lo:?}, {hi:?}]")));
        }
        let mut bps = vec![-S::one()];
        let mut vals = Vec::new();
        if lo > -S::one() {
            bps.push(lo.clone());
            vals.push(S::zero());
        }
        vals.push(S::one());
        if hi < S::one() {
            bps.push(hi);
            vals.push(S::zero());
        }
        bps.push(S::one());
        Self::from_parts(bps, vals)
    }

    /// Indicator of `[-1, 0]` or `[0, 1]`.
    pub fn half_indicator(half: Side) -> Self {
        match half {
            Side::Minus => Self::indicator(-S::one(), S::zero()),
            Side::Plus => Self::indicator(S::zero(), S::one()),
        }
        .expect("valid half")
    }

    pub fn breakpoints(&self) -> &[S] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    /// Value on the cell containing `x` (cells taken right-open, the last closed).
    pub fn eval(&self, x: &S) -> S {
        let i = self.breakpoints[1..].partition_point(|b| *b <= *x);
        self.values[i.min(self.values.len() - 1)].clone()
    }

    fn widths(&self) -> impl Iterator<Item = S> + '_ {
        self.breakpoints.windows(2).map(|w| w[1].clone() - w[0].clone())
    }

    pub fn variation(&self) -> S {
        self.values
            .windows(2)
            .fold(S::zero(), |acc, w| acc + (w[1].clone() - w[0].clone()).abs())
    }

    pub fn integral(&self) -> S {
        self.widths()
            .zip(&self.values)
            .fold(S::zero(), |acc, (w, v)| acc + w * v.clone())
            / S::two()
    }

    pub fn l1(&self) -> S {
        self.widths()
            .zip(&self.values)
            .fold(S::zero(), |acc, (w, v)| acc + w * v.abs())
            / S::two()
    }

    pub fn essinf(&self) -> S {
        self.values.iter().cloned().reduce(S::min_of).expect("nonempty")
    }

    pub fn esssup(&self) -> S {
        self.values.iter().cloned().reduce(S::max_of).expect("nonempty")
    }

    /// `‖f‖₁ + Var f`.
    pub fn bv_norm(&self) -> S {
        self.l1() + self.variation()
    }

    /// `max{‖f‖₁, Var f}`.
    pub fn bv_max_norm(&self) -> S {
        S::max_of(self.l1(), self.variation())
    }

    pub fn functionals(&self) -> BvFunctionals<S> {
        BvFunctionals {
            l1: self.l1(),
            integral: self.integral(),
            essinf: self.essinf(),
            esssup: self.esssup(),
            bv_norm: self.bv_norm(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    pub fn scale(&self, c: &S) -> Self {
        let vals = self.values.iter().map(|v| v.clone() * c.clone()).collect();
        Self::canonical(self.breakpoints.clone(), vals)
    }

    /// Merged breakpoint grid of several functions.
    fn merged_grid(fs: &[&Self]) -> Vec<S> {
        let pts = fs
            .iter()
            .flat_map(|f| f.breakpoints[1..f.breakpoints.len() - 1].iter().cloned())
            .map(|x| (x, PRIORITY_FRESH))
            .collect();
        cluster(pts)
    }

    /// Pointwise `Σ cᵢ fᵢ`.
    pub fn linear_combine(coeffs: &[S], fs: &[&Self]) -> Result<Self> {
        if fs.is_empty() || coeffs.len() != fs.len() {
            return Err(Error::Domain("need one coefficient per function".into()));
        }
        let grid = Self::merged_grid(fs);
        let vals = grid
            .windows(2)
            .map(|w| {
                let m = S::midpoint(&w[0], &w[1]);
                coeffs
                    .iter()
                    .zip(fs)
                    .fold(S::zero(), |acc, (c, f)| acc + c.clone() * f.eval(&m))
            })
            .collect();
        Ok(Self::canonical(grid, vals))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::linear_combine(&[S::one(), S::one()], &[self, other]).expect("two inputs")
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::linear_combine(&[S::one(), -S::one()], &[self, other]).expect("two inputs")
    }

    /// `self + c·𝟙`.
    pub fn shift(&self, c: &S) -> Self {
        let vals = self.values.iter().map(|v| v.clone() + c.clone()).collect();
        Self::canonical(self.breakpoints.clone(), vals)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        let grid = Self::merged_grid(&[self, other]);
        let vals = grid
            .windows(2)
            .map(|w| {
                let m = S::midpoint(&w[0], &w[1]);
                self.eval(&m) * other.eval(&m)
            })
            .collect();
        Self::canonical(grid, vals)
    }

    pub fn restrict_half(&self, half: Side) -> Self {
        self.mul(&Self::half_indicator(half))
    }

    pub fn l1_distance(&self, other: &Self) -> S {
        self.sub(other).l1()
    }

    pub fn bv_distance(&self, other: &Self) -> S {
        self.sub(other).bv_norm()
    }

    /// Cell averages on the uniform grid of `cells` cells.
    ///
    /// Preserves the integral, positivity and does not increase variation.
    pub fn project_uniform(&self, cells: usize) -> Self {
        let n = cells.max(1);
        let grid: Vec<S> = (0..=n)
            .map(|k| S::ratio(2 * k as i64 - n as i64, n as i64))
            .collect();
        let mut mass = vec![S::zero(); n];
        for (i, v) in self.values.iter().enumerate() {
            let (a, b) = (&self.breakpoints[i], &self.breakpoints[i + 1]);
            let k0 = grid[1..].partition_point(|g| g <= a).min(n - 1);
            let mut k = k0;
            while k < n && grid[k] < *b {
                let lo = S::max_of(a.clone(), grid[k].clone());
                let hi = S::min_of(b.clone(), grid[k + 1].clone());
                if hi > lo {
                    mass[k] = mass[k].clone() + (hi - lo) * v.clone();
                }
                k += 1;
            }
        }
        let width = S::ratio(2, n as i64);
        let vals = mass.into_iter().map(|m| m / width.clone()).collect();
        Self::canonical(grid, vals)
    }

    pub fn to_f64(&self) -> StepFunction<f64> {
        StepFunction::canonical(
            self.breakpoints.iter().map(|x| x.to_f64_lossy()).collect(),
            self.values.iter().map(|x| x.to_f64_lossy()).collect(),
        )
    }

    pub fn to_json(&self) -> StepFunctionJson {
        StepFunctionJson {
            breakpoints: self.breakpoints.iter().map(|x| x.to_f64_lossy()).collect(),
            values: self.values.iter().map(|x| x.to_f64_lossy()).collect(),
        }
    }

    /// Rows `lo,hi,value`, one per cell, with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lo,hi,value\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{}\n",
                self.breakpoints[i].to_f64_lossy(),
                self.breakpoints[i + 1].to_f64_lossy(),
                v.to_f64_lossy()
            ));
        }
        s
    }
}

impl StepFunction<f64> {
    pub fn from_json(j: &StepFunctionJson) -> Result<Self> {
        Self::from_parts(j.breakpoints.clone(), j.values.clone())
    }
}

impl<S: Scalar> Serialize for StepFunction<S> {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        self.to_json().serialize(s)
    }
}

/// Values of `f` and `g` on each cell of their common refinement.
pub fn paired_cells<S: Scalar>(f: &StepFunction<S>, g: &StepFunction<S>) -> Vec<(S, S)> {
    StepFunction::merged_grid(&[f, g])
        .windows(2)
        .map(|w| {
            let m = S::midpoint(&w[0], &w[1]);
            (f.eval(&m), g.eval(&m))
        })
        .collect()
}

/// Transfer operator: `Lf = Σ_b |slope_b|⁻¹ · f∘b⁻¹ · 𝟙_{b(D_b)}`.
pub fn pf_apply<S: Scalar>(map: &PiecewiseLinearMap<S>, f: &StepFunction<S>) -> StepFunction<S> {
    let interior = &f.breakpoints[1..f.breakpoints.len() - 1];
    let mut cand: Vec<Candidate<S>> = Vec::with_capacity(map.len() * (interior.len() + 2));
    for b in map.branches() {
        let im = b.image();
        cand.push((im.lo, PRIORITY_FRESH));
        cand.push((im.hi, PRIORITY_FRESH));
        for x in interior.iter().filter(|x| **x > b.domain.lo && **x < b.domain.hi) {
            cand.push((b.apply(x), PRIORITY_DERIVED));
        }
    }
    let grid = cluster(cand);
    let mids: Vec<S> = grid.windows(2).map(|w| S::midpoint(&w[0], &w[1])).collect();
    let mut vals = vec![S::zero(); mids.len()];
    for b in map.branches() {
        let im = b.image();
        let w = b.weight();
        let k0 = mids.partition_point(|m| *m <= im.lo);
        let k1 = mids.partition_point(|m| *m < im.hi);
        for k in k0..k1 {
            let y = f.eval(&b.inverse(&mids[k]));
            vals[k] = vals[k].clone() + y * w.clone();
        }
    }
    StepFunction::canonical(grid, vals)
}

/// `𝟙_{half} · L f`.
pub fn pf_restricted<S: Scalar>(
    map: &PiecewiseLinearMap<S>,
    f: &StepFunction<S>,
    half: Side,
) -> StepFunction<S> {
    pf_apply(map, f).restrict_half(half)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LyCheck<S> {
    pub lhs: S,
    pub rhs_general: S,
    pub rhs_sharp: Option<S>,
    pub general_holds: bool,
    pub sharp_holds: Option<bool>,
}

/// Compares `Var(P f)` with `¾ Var f + 6‖f‖₁`, and with `½ Var f + 4‖f‖₁`
/// when every parameter of the second iterate is at most ½.
pub fn ly_check<S: Scalar>(si: &SecondIterate<S>, f: &StepFunction<S>) -> LyCheck<S> {
    let lhs = pf_apply(&si.map, f).variation();
    let var = f.variation();
    let l1 = f.l1();
    let rhs_general = S::ratio(3, 4) * var.clone() + S::ratio(6, 1) * l1.clone();
    let rhs_sharp = (si.max_eps() <= S::half()).then(|| S::half() * var + S::ratio(4, 1) * l1);
    LyCheck {
        general_holds: leq(&lhs, &rhs_general, FLOAT_CHECK_TOL),
        sharp_holds: rhs_sharp.as_ref().map(|r| leq(&lhs, r, FLOAT_CHECK_TOL)),
        lhs,
        rhs_general,
        rhs_sharp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval_maps::{make_paired_tent, PairedTentParams};
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::ratio(n, d)
    }

    fn sf(bps: &[(i64, i64)], vals: &[(i64, i64)]) -> StepFunction<Q> {
        StepFunction::from_parts(
            bps.iter().map(|&(n, d)| q(n, d)).collect(),
            vals.iter().map(|&(n, d)| q(n, d)).collect(),
        )
        .unwrap()
    }

    fn tent(e1: Q, e2: Q) -> PiecewiseLinearMap<Q> {
        make_paired_tent(&PairedTentParams::new(e1, e2).unwrap()).unwrap()
    }

    #[test]
    fn variation_examples() {
        assert_eq!(StepFunction::<Q>::half_indicator(Side::Plus).variation(), q(1, 1));
        assert_eq!(StepFunction::constant(q(5, 1)).variation(), q(0, 1));
        let f = sf(&[(-1, 1), (-1, 3), (1, 3), (1, 1)], &[(1, 1), (3, 1), (2, 1)]);
        assert_eq!(f.variation(), q(3, 1));
    }

    #[test]
    fn functionals_examples() {
        let one = StepFunction::<Q>::one().functionals();
        assert_eq!(one.l1, q(1, 1));
        assert_eq!(one.bv_norm, q(1, 1));
        let f = sf(&[(-1, 1), (0, 1), (1, 1)], &[(3, 2), (1, 2)]).functionals();
        assert_eq!(
            f,
            BvFunctionals { l1: q(1, 1), integral: q(1, 1), essinf: q(1, 2), esssup: q(3, 2), bv_norm: q(2, 1) }
        );
    }

    #[test]
    fn canonical_form_merges_equal_neighbours() {
        let f = sf(&[(-1, 1), (0, 1), (1, 1)], &[(1, 1), (1, 1)]);
        assert_eq!(f, StepFunction::one());
        let g = StepFunction::<Q>::half_indicator(Side::Minus).add(&StepFunction::half_indicator(Side::Plus));
        assert_eq!(g, StepFunction::one());
        let z = f.sub(&f);
        assert!(z.is_zero());
        assert_eq!(z.cells(), 1);
    }

    #[test]
    fn rejects_malformed_parts() {
        assert!(StepFunction::from_parts(vec![q(-1, 1), q(1, 1)], vec![]).is_err());
        assert!(StepFunction::from_parts(vec![q(-1, 2), q(1, 1)], vec![q(1, 1)]).is_err());
        assert!(StepFunction::from_parts(vec![q(-1, 1), q(1, 2), q(0, 1), q(1, 1)], vec![q(1, 1); 3]).is_err());
    }

    #[test]
    fn pf_examples() {
        let t0 = tent(q(0, 1), q(0, 1));
        let left = StepFunction::<Q>::half_indicator(Side::Minus);
        assert_eq!(pf_apply(&t0, &left), left);
        assert!(pf_restricted(&t0, &left, Side::Plus).is_zero());
        let t1 = tent(q(1, 1), q(1, 1));
        assert_eq!(pf_apply(&t1, &left), StepFunction::constant(q(1, 2)));
    }

    #[test]
    fn pf_preserves_integral_and_splits_into_halves() {
        let t = tent(q(3, 10), q(7, 10));
        let f = sf(&[(-1, 1), (-2, 7), (1, 5), (1, 1)], &[(2, 1), (-1, 3), (5, 4)]);
        let pf = pf_apply(&t, &f);
        assert_eq!(pf.integral(), f.integral());
        let split = pf_restricted(&t, &f, Side::Minus).add(&pf_restricted(&t, &f, Side::Plus));
        assert_eq!(split, pf);
    }

    #[test]
    fn ly_examples() {
        let si = SecondIterate::new(
            PairedTentParams::new(q(1, 10), q(2, 10)).unwrap(),
            PairedTentParams::new(q(1, 10), q(2, 10)).unwrap(),
        )
        .unwrap();
        let r = ly_check(&si, &StepFunction::half_indicator(Side::Plus));
        assert!(r.lhs <= q(5, 2));
        assert_eq!(r.rhs_sharp, Some(q(5, 2)));
        assert_eq!(r.sharp_holds, Some(true));
        let r1 = ly_check(&si, &StepFunction::one());
        assert!(r1.lhs <= q(6, 1) && r1.general_holds);
    }

    #[test]
    fn uniform_projection_keeps_mass() {
        let f = sf(&[(-1, 1), (-2, 7), (1, 5), (1, 1)], &[(2, 1), (1, 3), (5, 4)]);
        let p = f.project_uniform(8);
        assert_eq!(p.integral(), f.integral());
        assert!(p.variation() <= f.variation());
        assert!(p.cells() <= 8);
    }

    #[test]
    fn json_round_trip() {
        let f = StepFunction::<f64>::from_parts(vec![-1.0, 0.25, 1.0], vec![2.0, 0.5]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"breakpoints":[-1.0,0.25,1.0],"values":[2.0,0.5]}"#);
        let back: StepFunctionJson = serde_json::from_str(&s).unwrap();
        assert_eq!(StepFunction::from_json(&back).unwrap(), f);
    }
}
