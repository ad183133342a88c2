//! Piecewise-linear expanding maps of `[-1, 1]`, paired tent maps and their
//! second iterates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::step_functions::StepFunction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval<S> {
    pub lo: S,
    pub hi: S,
}

impl<S: Scalar> Interval<S> {
    pub fn new(lo: S, hi: S) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Domain(format!("empty interval [{lo:?}, {hi:?}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn full() -> Self {
        Self { lo: -S::one(), hi: S::one() }
    }

    /// Normalized Lebesgue measure, so that `[-1, 1]` has measure one.
    pub fn measure(&self) -> S {
        (self.hi.clone() - self.lo.clone()) / S::two()
    }

    pub fn width(&self) -> S {
        self.hi.clone() - self.lo.clone()
    }

    /// Intersection with nonempty interior, if any.
    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lo = S::max_of(self.lo.clone(), other.lo.clone());
        let hi = S::min_of(self.hi.clone(), other.hi.clone());
        (hi.clone() - lo.clone() > S::merge_tol()).then_some(Self { lo, hi })
    }

    pub fn contains(&self, x: &S) -> bool {
        *x >= self.lo && *x <= self.hi
    }

    pub fn to_f64(&self) -> Interval<f64> {
        Interval { lo: self.lo.to_f64_lossy(), hi: self.hi.to_f64_lossy() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffineBranch<S> {
    pub domain: Interval<S>,
    pub slope: S,
    pub intercept: S,
}

impl<S: Scalar> AffineBranch<S> {
    pub fn apply(&self, x: &S) -> S {
        self.slope.clone() * x.clone() + self.intercept.clone()
    }

    pub fn inverse(&self, y: &S) -> S {
        (y.clone() - self.intercept.clone()) / self.slope.clone()
    }

    pub fn image(&self) -> Interval<S> {
        self.image_of(&self.domain)
    }

    fn image_of(&self, i: &Interval<S>) -> Interval<S> {
        let a = self.apply(&i.lo);
        let b = self.apply(&i.hi);
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    /// Preimage of `target` under the affine extension of the branch.
    fn preimage_of(&self, target: &Interval<S>) -> Interval<S> {
        let a = self.inverse(&target.lo);
        let b = self.inverse(&target.hi);
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn weight(&self) -> S {
        S::one() / self.slope.abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

/// A branch endpoint approached from one side.
#[derive(Clone, Debug, PartialEq)]
pub struct OneTailedPoint<S> {
    pub x: S,
    pub side: Side,
    /// One-sided limit of the map at `x`.
    pub limit: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairedTentParams<S> {
    pub eps1: S,
    pub eps2: S,
}

impl<S: Scalar> PairedTentParams<S> {
    pub fn new(eps1: S, eps2: S) -> Result<Self> {
        for (name, e) in [("eps1", &eps1), ("eps2", &eps2)] {
            if *e < S::zero() || *e > S::one() {
                return Err(Error::Domain(format!("{name} = {e:?} outside [0, 1]")));
            }
        }
        Ok(Self { eps1, eps2 })
    }

    pub fn to_f64(&self) -> PairedTentParams<f64> {
        PairedTentParams { eps1: self.eps1.to_f64_lossy(), eps2: self.eps2.to_f64_lossy() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinearMap<S> {
    branches: Vec<AffineBranch<S>>,
}

impl<S: Scalar> PiecewiseLinearMap<S> {
    /// Validates that the domains tile `[-1, 1]` left to right and every image
    /// stays inside `[-1, 1]`.
    pub fn new(branches: Vec<AffineBranch<S>>) -> Result<Self> {
        let first = branches.first().ok_or_else(|| Error::Domain("no branches".into()))?;
        if !S::near(&first.domain.lo, &-S::one()) {
            return Err(Error::Domain("domains must start at -1".into()));
        }
        for w in branches.windows(2) {
            if !S::near(&w[0].domain.hi, &w[1].domain.lo) {
                return Err(Error::Domain("branch domains must be contiguous".into()));
            }
        }
        if !S::near(&branches[branches.len() - 1].domain.hi, &S::one()) {
            return Err(Error::Domain("domains must end at 1".into()));
        }
        let lo = -S::one() - S::merge_tol();
        let hi = S::one() + S::merge_tol();
        for b in &branches {
            if b.slope.is_zero() {
                return Err(Error::Domain("zero slope".into()));
            }
            let im = b.image();
            if im.lo < lo || im.hi > hi {
                return Err(Error::Domain(format!("branch image {im:?} leaves [-1, 1]")));
            }
        }
        Ok(Self { branches })
    }

    pub fn branches(&self) -> &[AffineBranch<S>] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Value at `x`; at a shared endpoint the left branch is used.
    pub fn evaluate(&self, x: &S) -> Result<S> {
        let tol = S::merge_tol();
        if *x < -S::one() - tol.clone() || *x > S::one() + tol {
            return Err(Error::Domain(format!("x = {x:?} outside [-1, 1]")));
        }
        let i = self.branches.partition_point(|b| b.domain.hi < *x);
        Ok(self.branches[i.min(self.branches.len() - 1)].apply(x))
    }

    /// `second ∘ self`, with branches on the nonempty `D_i ∩ self⁻¹(D_j)`.
    pub fn then(&self, second: &Self) -> Self {
        let mut out = Vec::new();
        for b1 in &self.branches {
            for b2 in &second.branches {
                let pre = b1.preimage_of(&b2.domain);
                if let Some(domain) = b1.domain.intersect(&pre) {
                    out.push(AffineBranch {
                        domain,
                        slope: b2.slope.clone() * b1.slope.clone(),
                        intercept: b2.slope.clone() * b1.intercept.clone() + b2.intercept.clone(),
                    });
                }
            }
        }
        out.sort_by(|a, b| a.domain.lo.partial_cmp(&b.domain.lo).expect("ordered"));
        for i in 1..out.len() {
            let prev_hi = out[i - 1].domain.hi.clone();
            out[i].domain.lo = prev_hi;
        }
        if let Some(first) = out.first_mut() {
            first.domain.lo = -S::one();
        }
        if let Some(last) = out.last_mut() {
            last.domain.hi = S::one();
        }
        Self { branches: out }
    }

    /// Step function equal to `1/|slope|` on every branch.
    pub fn weight_function(&self) -> StepFunction<S> {
        let mut bps = vec![-S::one()];
        let mut vals = Vec::with_capacity(self.branches.len());
        for b in &self.branches {
            bps.push(b.domain.hi.clone());
            vals.push(b.weight());
        }
        StepFunction::from_parts(bps, vals).expect("branch domains tile [-1, 1]")
    }

    /// One-tailed branch endpoints whose one-sided image is not `±1`.
    pub fn hanging_points(&self) -> Vec<OneTailedPoint<S>> {
        self.hanging_points_within(&Interval::full())
    }

    /// Hanging points of the branches whose domain lies in `window`.
    pub fn hanging_points_within(&self, window: &Interval<S>) -> Vec<OneTailedPoint<S>> {
        let one = S::one();
        let is_end = |y: &S| S::near(y, &one) || S::near(y, &-one.clone());
        let mut out = Vec::new();
        for b in &self.branches {
            if b.domain.lo < window.lo || b.domain.hi > window.hi {
                continue;
            }
            let left = b.apply(&b.domain.lo);
            if !is_end(&left) {
                out.push(OneTailedPoint { x: b.domain.lo.clone(), side: Side::Plus, limit: left });
            }
            let right = b.apply(&b.domain.hi);
            if !is_end(&right) {
                out.push(OneTailedPoint { x: b.domain.hi.clone(), side: Side::Minus, limit: right });
            }
        }
        out
    }

    /// `T(I)` as a minimal union of closed intervals.
    pub fn image_of_interval(&self, i: &Interval<S>) -> Vec<Interval<S>> {
        let mut pieces: Vec<Interval<S>> = self
            .branches
            .iter()
            .filter_map(|b| b.domain.intersect(i).map(|j| b.image_of(&j)))
            .collect();
        pieces.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("ordered"));
        let mut merged: Vec<Interval<S>> = Vec::new();
        for p in pieces {
            match merged.last_mut() {
                Some(last) if p.lo <= last.hi.clone() + S::merge_tol() => {
                    if p.hi > last.hi {
                        last.hi = p.hi;
                    }
                }
                _ => merged.push(p),
            }
        }
        merged
    }

    pub fn min_abs_slope(&self) -> S {
        self.branches
            .iter()
            .map(|b| b.slope.abs())
            .reduce(S::min_of)
            .expect("at least one branch")
    }

    /// Graph samples: both one-sided values at every branch endpoint plus
    /// `per_branch` interior points per branch.
    pub fn graph(&self, per_branch: usize) -> Vec<(f64, f64)> {
        let mut pts = Vec::new();
        for b in &self.branches {
            let lo = b.domain.lo.to_f64_lossy();
            let hi = b.domain.hi.to_f64_lossy();
            let m = b.slope.to_f64_lossy();
            let c = b.intercept.to_f64_lossy();
            for k in 0..=per_branch + 1 {
                let x = lo + (hi - lo) * k as f64 / (per_branch + 1) as f64;
                pts.push((x, m * x + c));
            }
        }
        pts
    }

    pub fn to_f64(&self) -> PiecewiseLinearMap<f64> {
        PiecewiseLinearMap {
            branches: self
                .branches
                .iter()
                .map(|b| AffineBranch {
                    domain: b.domain.to_f64(),
                    slope: b.slope.to_f64_lossy(),
                    intercept: b.intercept.to_f64_lossy(),
                })
                .collect(),
        }
    }
}

/// The four-branch paired tent map `T_{ε1, ε2}`.
pub fn make_paired_tent<S: Scalar>(params: &PairedTentParams<S>) -> Result<PiecewiseLinearMap<S>> {
    let p = PairedTentParams::new(params.eps1.clone(), params.eps2.clone())?;
    let one = S::one();
    let two = S::two();
    let half = S::half();
    let s1 = two.clone() * (one.clone() + p.eps1);
    let s2 = two * (one.clone() + p.eps2);
    let dom = |lo: S, hi: S| Interval { lo, hi };
    PiecewiseLinearMap::new(vec![
        AffineBranch {
            domain: dom(-one.clone(), -half.clone()),
            slope: s1.clone(),
            intercept: s1.clone() - one.clone(),
        },
        AffineBranch { domain: dom(-half.clone(), S::zero()), slope: -s1, intercept: -one.clone() },
        AffineBranch { domain: dom(S::zero(), half.clone()), slope: -s2.clone(), intercept: one.clone() },
        AffineBranch { domain: dom(half, one.clone()), slope: s2.clone(), intercept: one - s2 },
    ])
}

/// `second ∘ first`: apply `first`, then `second`.
pub fn compose_second_iterate<S: Scalar>(
    first: &PiecewiseLinearMap<S>,
    second: &PiecewiseLinearMap<S>,
) -> PiecewiseLinearMap<S> {
    first.then(second)
}

/// `S_ω = T_{σω} ∘ T_ω` together with the parameters it was built from.
#[derive(Clone, Debug)]
pub struct SecondIterate<S> {
    pub map: PiecewiseLinearMap<S>,
    pub now: PairedTentParams<S>,
    pub next: PairedTentParams<S>,
}

impl<S: Scalar> SecondIterate<S> {
    pub fn new(now: PairedTentParams<S>, next: PairedTentParams<S>) -> Result<Self> {
        let first = make_paired_tent(&now)?;
        let second = make_paired_tent(&next)?;
        Ok(Self { map: first.then(&second), now, next })
    }

    pub fn eps(&self) -> [S; 4] {
        [self.now.eps1.clone(), self.now.eps2.clone(), self.next.eps1.clone(), self.next.eps2.clone()]
    }

    pub fn max_eps(&self) -> S {
        self.eps().into_iter().reduce(S::max_of).expect("four parameters")
    }
}
