//! Random step functions, cone elements and parameters for property sweeps.

use rand::seq::index::sample;
use rand::Rng;

use crate::scalar::Scalar;
use crate::step_functions::StepFunction;

/// Step function with breakpoints on the grid `-1 + k/den` and values
/// `j/value_den` with `j` drawn from `values`.
pub fn grid_step_function<S: Scalar, R: Rng>(
    rng: &mut R,
    max_cells: usize,
    den: i64,
    values: std::ops::RangeInclusive<i64>,
    value_den: i64,
) -> StepFunction<S> {
    let slots = (2 * den - 1) as usize;
    let cells = rng.random_range(1..=max_cells.max(1)).min(slots + 1);
    let mut ks: Vec<usize> = sample(rng, slots, cells - 1).into_iter().map(|k| k + 1).collect();
    ks.sort_unstable();
    let mut bps = vec![-S::one()];
    bps.extend(ks.into_iter().map(|k| S::ratio(k as i64 - den, den)));
    bps.push(S::one());
    let vals = (0..cells)
        .map(|_| S::ratio(rng.random_range(values.clone()), value_den))
        .collect();
    StepFunction::from_parts(bps, vals).expect("grid breakpoints are increasing")
}

/// Signed step function on a grid, values in `[-1, 1]`.
pub fn signed_step_function<S: Scalar, R: Rng>(rng: &mut R, max_cells: usize, den: i64) -> StepFunction<S> {
    grid_step_function(rng, max_cells, den, -20..=20, 20)
}

/// Nonnegative, nonzero step function on a grid.
pub fn nonneg_step_function<S: Scalar, R: Rng>(rng: &mut R, max_cells: usize, den: i64) -> StepFunction<S> {
    let f = grid_step_function(rng, max_cells, den, 0..=20, 20);
    if f.is_zero() {
        StepFunction::one()
    } else {
        f
    }
}

/// Element of `C_a = {f ≥ 0, Var f ≤ a‖f‖₁}`; about half of the draws sit
/// exactly on the boundary `Var f = a‖f‖₁`.
pub fn cone_element<S: Scalar, R: Rng>(rng: &mut R, a: f64, max_cells: usize, den: i64) -> StepFunction<S> {
    let f = push_into_cone(&nonneg_step_function::<S, R>(rng, max_cells, den), a);
    if rng.random_bool(0.5) {
        let extra = S::ratio(rng.random_range(0..=10), 10) * f.l1();
        f.shift(&extra)
    } else {
        f
    }
}

/// Smallest `f + t·𝟙`, `t ≥ 0`, lying in `C_a`, for nonnegative nonzero `f`.
pub fn push_into_cone<S: Scalar>(f: &StepFunction<S>, a: f64) -> StepFunction<S> {
    let deficit = f.variation() / S::from_decimal(a) - f.l1();
    f.shift(&S::max_of(deficit, S::zero()))
}

/// Rational parameter `k/den` in `[0, 1]`.
pub fn unit_parameter<S: Scalar, R: Rng>(rng: &mut R, den: i64) -> S {
    S::ratio(rng.random_range(0..=den), den)
}

/// Float step function with breakpoints drawn uniformly from `(-1, 1)`.
pub fn float_step_function<R: Rng>(rng: &mut R, max_cells: usize, nonneg: bool) -> StepFunction<f64> {
    let cells = rng.random_range(1..=max_cells.max(1));
    let mut inner: Vec<f64> = (1..cells).map(|_| rng.random_range(-1.0..1.0)).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let mut bps = vec![-1.0];
    bps.extend(inner);
    bps.push(1.0);
    let lo = if nonneg { 0.0 } else { -1.0 };
    let vals = (0..bps.len() - 1).map(|_| rng.random_range(lo..1.0)).collect();
    StepFunction::from_parts(bps, vals).expect("sorted breakpoints")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_metric::{cone_contains, ConeParams};
    use num_rational::BigRational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cone_elements_are_in_the_cone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = ConeParams::default();
        for _ in 0..200 {
            let f: StepFunction<BigRational> = cone_element(&mut rng, p.a, 12, 60);
            assert!(cone_contains(&f, &p, 1.0));
        }
    }

    #[test]
    fn grid_functions_respect_cell_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let f: StepFunction<f64> = signed_step_function(&mut rng, 7, 5);
            assert!(f.cells() <= 7);
        }
    }
}
