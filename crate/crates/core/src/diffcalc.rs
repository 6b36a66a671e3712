//! Finite-difference calculus on tabulated sequences.
//!
//! The central operation is [`newton_shift`], the Newton binomial series
//! `sum_n C(h, n) Δ^n s(base)`, which stands in for a fractional shift of a
//! sequence by `h` steps. Forward differences of high order lose digits
//! quickly in double precision, so tables are built in double-double and
//! every order carries an estimate of the rounding error inherited from the
//! inputs.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::{CompensatedSum, Dd, SeriesEval, SeriesStatus};

/// Default term budget for Newton series.
pub const DEFAULT_MAX_TERMS: usize = 40;

/// Terms must stay below tolerance this many times in a row to count as converged.
const CONVERGED_RUN: usize = 3;
/// Width of the window used for the monotonicity and growth tests.
const TREND_WINDOW: usize = 5;
/// Growth over one trend window above which a series is called divergent.
const DIVERGENCE_GROWTH: f64 = 1.5;
/// A term is noise when it is within this factor of its rounding floor.
const NOISE_FACTOR: f64 = 10.0;
/// A growing term must clear its rounding floor by this factor to count as divergence.
const SIGNAL_FACTOR: f64 = 100.0;

/// Consecutive values of a sequence starting at `base_index`.
///
/// Values may carry a low-order correction (the second half of a
/// double-double), which lets callers feed in sums that were accumulated
/// with compensation without losing the extra digits.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqWindow {
    base_index: usize,
    values: Vec<Dd>,
}

impl SeqWindow {
    pub fn new(base_index: usize, values: Vec<Complex64>) -> Result<Self> {
        Self::from_dd(base_index, values.into_iter().map(Dd::from_value).collect())
    }

    pub fn from_real(base_index: usize, values: &[f64]) -> Result<Self> {
        Self::new(
            base_index,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn from_dd(base_index: usize, values: Vec<Dd>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientWindow { len: 0, needed: 1 });
        }
        if let Some((index, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.hi.re.is_finite() && v.hi.im.is_finite()))
        {
            return Err(Error::NonFiniteValue {
                index,
                value: v.hi,
            });
        }
        Ok(SeqWindow { base_index, values })
    }

    pub fn base_index(&self) -> usize {
        self.base_index
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, k: usize) -> Complex64 {
        self.values[k].value()
    }

    pub fn values(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.values.iter().map(Dd::value)
    }
}

/// Generalized binomial coefficient `C(h, n)` by the product recurrence.
///
/// Exact for integer `h >= 0` once `n > h` (the factor `h - h` is an exact zero).
pub fn gen_binomial(h: f64, n: usize) -> f64 {
    let mut c = 1.0;
    for k in 0..n {
        c *= (h - k as f64) / (k as f64 + 1.0);
        if c == 0.0 {
            break;
        }
    }
    c
}

/// Forward differences `Δ^k s(base)` for `k = 0..=max_order`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceTable {
    /// `leading[k] = Δ^k s(base)`.
    pub leading: Vec<Complex64>,
    /// Bound on the rounding error carried by `leading[k]`.
    pub rounding_floor: Vec<f64>,
    /// `row_vanishes[k]` is true when row `k` of the table is identically zero,
    /// so every higher difference vanishes too.
    pub row_vanishes: Vec<bool>,
}

impl DifferenceTable {
    pub fn max_order(&self) -> usize {
        self.leading.len() - 1
    }
}

/// Builds the difference table of `w` up to `max_order`, one row from the previous.
pub fn difference_table(w: &SeqWindow, max_order: usize) -> Result<DifferenceTable> {
    if w.len() < max_order + 1 {
        return Err(Error::InsufficientWindow {
            len: w.len(),
            needed: max_order + 1,
        });
    }
    let eps = f64::EPSILON;
    let mut row: Vec<Dd> = w.values[..=max_order].to_vec();
    // Propagated input rounding: eps * sum_i C(k, i) |s(base + i)|, built with
    // the same Pascal recurrence as the differences themselves.
    let mut weight: Vec<f64> = row.iter().map(|v| v.value().norm()).collect();

    let mut leading = Vec::with_capacity(max_order + 1);
    let mut rounding_floor = Vec::with_capacity(max_order + 1);
    let mut row_vanishes = Vec::with_capacity(max_order + 1);

    for k in 0..=max_order {
        leading.push(row[0].value());
        // Differencing in double-double adds O(eps^2); the inherited input
        // rounding dominates.
        rounding_floor.push(eps * weight[0]);
        row_vanishes.push(row.iter().all(Dd::is_zero));
        if k == max_order {
            break;
        }
        for i in 0..row.len() - 1 {
            row[i] = row[i + 1].sub(row[i]);
            weight[i] += weight[i + 1];
        }
        row.pop();
        weight.pop();
    }

    Ok(DifferenceTable {
        leading,
        rounding_floor,
        row_vanishes,
    })
}

/// Sums the Newton series `sum_n C(h, n) Δ^n s(base)` for `h` in `[0, 1)`.
///
/// Classification of the partial sums:
/// * `Terminated`: a row of the difference table vanishes identically
///   (polynomial data); the sum is exact.
/// * `Converged`: three consecutive terms below `tol * max(1, |partial|)` and
///   term magnitudes non-increasing over the last five terms.
/// * `Diverged`: term magnitudes increase monotonically across a five-term
///   window, by more than 1.5x overall, while standing well clear of the
///   rounding floor.
/// * `Stagnated`: the terms sank into the rounding floor of the difference
///   table, or `max_terms` ran out, before the tolerance was met. If the
///   terms had turned upward by then, the sum stops at the smallest term.
pub fn newton_shift(w: &SeqWindow, h: f64, tol: f64, max_terms: usize) -> Result<SeriesEval> {
    if !(0.0..1.0).contains(&h) {
        return Err(Error::InvalidParameter(format!(
            "fractional shift h = {h} outside [0, 1)"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    if h == 0.0 {
        return Ok(SeriesEval {
            value: w.value(0),
            status: SeriesStatus::Terminated,
            terms_used: 1,
            tail_estimate: 0.0,
            rounding_floor: 0.0,
        });
    }
    let table = difference_table(w, max_terms)?;
    Ok(sum_binomial_series(&table, |n| gen_binomial(h, n), tol))
}

/// Shared driver: sums `sum_n weight(n) Δ^n` over a prepared table with the
/// Newton-series convergence heuristics. Also used by the Bernoulli operator.
pub(crate) fn sum_binomial_series(
    table: &DifferenceTable,
    weight: impl Fn(usize) -> f64,
    tol: f64,
) -> SeriesEval {
    let mut partial = CompensatedSum::new();
    let mut mags: Vec<f64> = Vec::with_capacity(table.leading.len());
    let mut small_run = 0usize;
    let mut noise_run = 0usize;
    let mut floor_acc = 0.0f64;
    // Partial sum before the current run of noise-level terms began.
    let mut before_noise = (Complex64::new(0.0, 0.0), 0usize, 0.0f64);
    // Partial sum through the smallest term so far: the optimal truncation
    // if the budget runs out with terms growing again.
    let mut at_smallest = (Complex64::new(0.0, 0.0), 0usize, f64::INFINITY);

    for n in 0..=table.max_order() {
        if table.row_vanishes[n] {
            return SeriesEval {
                value: partial.total(),
                status: SeriesStatus::Terminated,
                terms_used: n,
                tail_estimate: 0.0,
                rounding_floor: floor_acc,
            };
        }
        let c = weight(n);
        let term = table.leading[n] * c;
        let mag = term.norm();
        let term_floor = c.abs() * table.rounding_floor[n];

        if mag <= NOISE_FACTOR * term_floor && n > 0 {
            if noise_run == 0 {
                before_noise = (partial.total(), n, mags.last().copied().unwrap_or(mag));
            }
            noise_run += 1;
        } else {
            noise_run = 0;
        }

        partial.add(term);
        floor_acc += term_floor;
        mags.push(mag);
        if n > 0 && mag < at_smallest.2 {
            at_smallest = (partial.total(), n + 1, mag);
        }

        let scale = partial.total().norm().max(1.0);
        if mag < tol * scale {
            small_run += 1;
        } else {
            small_run = 0;
        }

        if small_run >= CONVERGED_RUN && non_increasing_tail(&mags) {
            return SeriesEval {
                value: partial.total(),
                status: SeriesStatus::Converged,
                terms_used: n + 1,
                tail_estimate: mag,
                rounding_floor: floor_acc,
            };
        }

        if noise_run >= CONVERGED_RUN {
            let (value, used, last_signal) = before_noise;
            return SeriesEval {
                value,
                status: SeriesStatus::Stagnated,
                terms_used: used,
                tail_estimate: last_signal,
                rounding_floor: floor_acc,
            };
        }

        if n + 1 >= TREND_WINDOW {
            let old = mags[n + 1 - TREND_WINDOW];
            let rising = mags[n + 1 - TREND_WINDOW..].windows(2).all(|p| p[1] > p[0]);
            if rising && mag > DIVERGENCE_GROWTH * old && mag > SIGNAL_FACTOR * term_floor {
                return SeriesEval {
                    value: partial.total(),
                    status: SeriesStatus::Diverged,
                    terms_used: n + 1,
                    tail_estimate: mag,
                    rounding_floor: floor_acc,
                };
            }
        }
    }

    let last = mags.last().copied().unwrap_or(0.0);
    if at_smallest.1 > 0 && at_smallest.2 < last {
        // Terms turned upward, typically amplified input rounding that the
        // floor estimate missed; stop at the smallest one.
        return SeriesEval {
            value: at_smallest.0,
            status: SeriesStatus::Stagnated,
            terms_used: at_smallest.1,
            tail_estimate: at_smallest.2,
            rounding_floor: floor_acc,
        };
    }
    SeriesEval {
        value: partial.total(),
        status: SeriesStatus::Stagnated,
        terms_used: table.leading.len(),
        tail_estimate: last,
        rounding_floor: floor_acc,
    }
}

fn non_increasing_tail(mags: &[f64]) -> bool {
    if mags.len() < TREND_WINDOW {
        return false;
    }
    mags[mags.len() - TREND_WINDOW..]
        .windows(2)
        .all(|p| p[1] <= p[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    // Direct binomial-sum oracle for a single difference.
    fn direct_difference(values: &[Complex64], k: usize) -> Complex64 {
        (0..=k)
            .map(|i| {
                let sign = if (k - i).is_multiple_of(2) { 1.0 } else { -1.0 };
                values[i] * (gen_binomial(k as f64, i) * sign)
            })
            .sum()
    }

    // Lagrange interpolation oracle through (0..len, values) evaluated at x.
    fn lagrange(values: &[f64], x: f64) -> f64 {
        let n = values.len();
        (0..n)
            .map(|i| {
                let mut w = values[i];
                for j in 0..n {
                    if j != i {
                        w *= (x - j as f64) / (i as f64 - j as f64);
                    }
                }
                w
            })
            .sum()
    }

    #[test]
    fn gen_binomial_examples() {
        assert_eq!(gen_binomial(1.0, 1), 1.0);
        assert_eq!(gen_binomial(0.5, 0), 1.0);
        assert_eq!(gen_binomial(0.5, 2), -0.125);
        assert_eq!(gen_binomial(3.0, 5), 0.0);
        assert_eq!(gen_binomial(6.0, 3), 20.0);
    }

    #[test]
    fn difference_table_of_squares() {
        let w = SeqWindow::from_real(0, &[0.0, 1.0, 4.0, 9.0]).unwrap();
        let t = difference_table(&w, 2).unwrap();
        assert_eq!(t.leading, vec![c(0.0), c(1.0), c(2.0)]);
    }

    #[test]
    fn difference_table_of_constant_and_alternating() {
        let w = SeqWindow::from_real(3, &[2.5, 2.5, 2.5]).unwrap();
        let t = difference_table(&w, 2).unwrap();
        assert_eq!(t.leading, vec![c(2.5), c(0.0), c(0.0)]);
        assert!(t.row_vanishes[1]);

        let w = SeqWindow::from_real(0, &[1.0, -1.0, 1.0, -1.0]).unwrap();
        let t = difference_table(&w, 3).unwrap();
        assert_eq!(t.leading, vec![c(1.0), c(-2.0), c(4.0), c(-8.0)]);
    }

    #[test]
    fn difference_table_rejects_short_window() {
        let w = SeqWindow::from_real(0, &[1.0, 2.0]).unwrap();
        assert_eq!(
            difference_table(&w, 2),
            Err(Error::InsufficientWindow { len: 2, needed: 3 })
        );
    }

    #[test]
    fn window_rejects_empty_and_nan() {
        assert!(SeqWindow::new(0, vec![]).is_err());
        assert!(matches!(
            SeqWindow::from_real(0, &[1.0, f64::NAN]),
            Err(Error::NonFiniteValue { index: 1, .. })
        ));
    }

    #[test]
    fn newton_shift_of_squares_terminates_at_interpolant() {
        let vals: Vec<f64> = (1..=45).map(|k| (k * k) as f64).collect();
        let w = SeqWindow::from_real(1, &vals).unwrap();
        let r = newton_shift(&w, 0.5, 1e-13, 40).unwrap();
        assert_eq!(r.status, SeriesStatus::Terminated);
        assert_eq!(r.value, c(2.25));
        assert!(r.terms_used <= 3);
    }

    #[test]
    fn newton_shift_of_constant_terminates() {
        let w = SeqWindow::from_real(0, &[7.25; 41]).unwrap();
        for h in [0.1, 0.5, 0.9] {
            let r = newton_shift(&w, h, 1e-13, 40).unwrap();
            assert_eq!(r.status, SeriesStatus::Terminated);
            assert_eq!(r.value, c(7.25));
        }
    }

    #[test]
    fn newton_shift_of_alternating_diverges() {
        let vals: Vec<f64> = (0..41).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let w = SeqWindow::from_real(0, &vals).unwrap();
        let r = newton_shift(&w, 0.5, 1e-13, 40).unwrap();
        assert_eq!(r.status, SeriesStatus::Diverged);
        // Brute force: partial sums oscillate with growing amplitude.
        let partials: Vec<f64> = (0..12)
            .scan(0.0, |acc, n| {
                *acc += gen_binomial(0.5, n) * (-2.0f64).powi(n as i32);
                Some(*acc)
            })
            .collect();
        assert!(partials[11].abs() > partials[5].abs());
    }

    #[test]
    fn h_zero_short_circuits_exactly() {
        let w = SeqWindow::from_real(4, &[0.1 + 0.2, 9.0]).unwrap();
        let r = newton_shift(&w, 0.0, 1e-13, 1).unwrap();
        assert_eq!(r.value, c(0.1 + 0.2));
    }

    #[test]
    fn newton_shift_converges_for_smooth_decay() {
        // 1/(k+30): the shift by h is 1/(30+h) exactly (Laplace-transform class).
        let vals: Vec<f64> = (0..41).map(|k| 1.0 / (k as f64 + 30.0)).collect();
        let w = SeqWindow::from_real(0, &vals).unwrap();
        let r = newton_shift(&w, 0.25, 1e-14, 40).unwrap();
        assert!(r.is_usable());
        assert_relative_eq!(r.value.re, 1.0 / 30.25, max_relative = 1e-12);
    }

    #[test]
    fn invalid_shift_rejected() {
        let w = SeqWindow::from_real(0, &[1.0, 2.0]).unwrap();
        assert!(newton_shift(&w, 1.0, 1e-12, 1).is_err());
        assert!(newton_shift(&w, 0.5, 0.0, 1).is_err());
    }

    proptest! {
        #[test]
        fn iterative_rows_match_direct_formula(vals in prop::collection::vec(-1e3f64..1e3, 12)) {
            let w = SeqWindow::from_real(0, &vals).unwrap();
            let t = difference_table(&w, 11).unwrap();
            let cv: Vec<Complex64> = vals.iter().map(|&v| c(v)).collect();
            for k in 0..=11 {
                let direct = direct_difference(&cv, k);
                // The direct formula carries its own rounding of the same size.
                prop_assert!((t.leading[k] - direct).norm() <= 4.0 * t.rounding_floor[k] + 1e-300);
            }
        }

        #[test]
        fn polynomial_shift_matches_interpolation(
            coeffs in prop::collection::vec(-3.0f64..3.0, 1..6),
            h in 0.01f64..0.99,
            base in 0usize..20,
        ) {
            let d = coeffs.len() - 1;
            let p = |x: f64| coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a);
            let vals: Vec<f64> = (0..41).map(|k| p((base + k) as f64)).collect();
            let w = SeqWindow::from_real(base, &vals).unwrap();
            let r = newton_shift(&w, h, 1e-13, 40).unwrap();
            let expected = lagrange(&vals[..=d], h);
            let scale = vals[..=d].iter().fold(1.0f64, |m, v| m.max(v.abs()));
            prop_assert!((r.value.re - expected).abs() <= 1e-12 * scale);
            prop_assert!((r.value.re - p(base as f64 + h)).abs() <= 1e-12 * scale);
        }

        #[test]
        fn integer_polynomials_terminate_within_degree_plus_one(
            coeffs in prop::collection::vec(-5i64..5, 1..6),
            h in 0.01f64..0.99,
        ) {
            let d = coeffs.len() - 1;
            let vals: Vec<f64> = (0..41i64)
                .map(|k| coeffs.iter().rev().fold(0i64, |acc, &a| acc * k + a) as f64)
                .collect();
            let w = SeqWindow::from_real(0, &vals).unwrap();
            let r = newton_shift(&w, h, 1e-13, 40).unwrap();
            prop_assert_eq!(r.status, SeriesStatus::Terminated);
            prop_assert!(r.terms_used <= d + 1);
        }

        #[test]
        fn newton_shift_is_linear(
            alpha in -2.0f64..2.0, beta in -2.0f64..2.0, h in 0.05f64..0.95,
            a in 15.0f64..40.0, b in 15.0f64..40.0,
        ) {
            let u: Vec<f64> = (0..41).map(|k| 1.0 / (k as f64 + a)).collect();
            let v: Vec<f64> = (0..41).map(|k| (k as f64 + b).powf(-1.5)).collect();
            let uv: Vec<f64> = u.iter().zip(&v).map(|(x, y)| alpha * x + beta * y).collect();
            let su = newton_shift(&SeqWindow::from_real(0, &u).unwrap(), h, 1e-14, 40).unwrap();
            let sv = newton_shift(&SeqWindow::from_real(0, &v).unwrap(), h, 1e-14, 40).unwrap();
            let suv = newton_shift(&SeqWindow::from_real(0, &uv).unwrap(), h, 1e-14, 40).unwrap();
            let ok = |e: &SeriesEval| e.status == SeriesStatus::Converged;
            prop_assume!(ok(&su) && ok(&sv) && ok(&suv));
            let combined = su.value * alpha + sv.value * beta;
            prop_assert!((suv.value - combined).norm() <= 1e-12 * (1.0 + combined.norm()));
        }
    }
}
