//! Reference oracle: Bernoulli numbers and polynomials, the Hurwitz zeta
//! function by Euler–Maclaurin summation, and the Riemann zeta, Dirichlet eta
//! and Dirichlet L-functions built on it.
//!
//! Every value produced by the renormalization engine is cross-checked
//! against this module, so it shares no code with the difference calculus.
//!
//! Bernoulli numbers use the `B_1 = -1/2` convention throughout.

use std::sync::LazyLock;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{CompensatedSum, SeriesEval, SeriesStatus};

/// Largest index in the Bernoulli-number table.
pub const BERNOULLI_TABLE_MAX: usize = 30;
/// Upper limit for the automatic growth of the Euler–Maclaurin shift.
pub const MAX_SHIFT_TERMS: usize = 512;

static BERNOULLI: LazyLock<Vec<f64>> = LazyLock::new(|| {
    bernoulli_rationals(BERNOULLI_TABLE_MAX)
        .iter()
        .map(|b| b.to_f64().expect("Bernoulli numbers are finite"))
        .collect()
});

// sum_{j=0}^{k} C(k+1, j) B_j = 0 for k >= 1, solved for B_k in exact arithmetic.
fn bernoulli_rationals(max: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(max + 1);
    b.push(BigRational::from_integer(BigInt::from(1)));
    for k in 1..=max {
        let mut acc = BigRational::zero();
        let mut binom = BigInt::from(1); // C(k+1, 0)
        for (j, bj) in b.iter().enumerate() {
            acc += BigRational::from_integer(binom.clone()) * bj;
            binom = binom * BigInt::from(k + 1 - j) / BigInt::from(j + 1);
        }
        // binom is now C(k+1, k) = k + 1.
        b.push(-acc / BigRational::from_integer(binom));
    }
    b
}

/// Forces the write-once Bernoulli table. Later reads are lock-free.
pub fn init_tables() {
    LazyLock::force(&BERNOULLI);
}

/// `B_k` as the nearest double.
pub fn bernoulli_number(k: usize) -> Result<f64> {
    BERNOULLI.get(k).copied().ok_or(Error::OutOfTable(k))
}

/// Bernoulli polynomial `B_n(t) = sum_k C(n, k) B_k t^(n-k)`.
pub fn bernoulli_polynomial(n: usize, t: f64) -> Result<f64> {
    if n > BERNOULLI_TABLE_MAX {
        return Err(Error::OutOfTable(n));
    }
    let mut binom = 1.0;
    let mut acc = 0.0;
    for k in 0..=n {
        acc += binom * BERNOULLI[k] * t.powi((n - k) as i32);
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    Ok(acc)
}

/// Parameters of the Euler–Maclaurin scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerMaclaurinConfig {
    /// Number of leading terms summed directly before the asymptotic tail (N).
    pub shift_terms: usize,
    /// Number of Bernoulli corrections (K), at most 15.
    pub correction_terms: usize,
    pub tol: f64,
}

impl Default for EulerMaclaurinConfig {
    fn default() -> Self {
        EulerMaclaurinConfig {
            shift_terms: 15,
            correction_terms: 12,
            tol: 1e-12,
        }
    }
}

impl EulerMaclaurinConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shift_terms < 1 {
            return Err(Error::InvalidParameter("shift_terms must be >= 1".into()));
        }
        if !(1..=BERNOULLI_TABLE_MAX / 2).contains(&self.correction_terms) {
            return Err(Error::InvalidParameter(format!(
                "correction_terms = {} outside 1..=15",
                self.correction_terms
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        Ok(())
    }
}

/// Euler–Maclaurin pieces of `zeta(s, t)` at a fixed shift: everything except
/// the pole term `x^(1-s)/(s-1)`, with `x = t + N`.
struct EmParts {
    regular: Complex64,
    x: f64,
    last_correction: f64,
}

fn em_parts(s: Complex64, t: f64, n_shift: usize, k_corr: usize) -> EmParts {
    let mut direct = CompensatedSum::new();
    for n in 0..n_shift {
        direct.add(cpow(t + n as f64, -s));
    }
    let x = t + n_shift as f64;
    let x_neg_s = cpow(x, -s);
    direct.add(x_neg_s * 0.5);

    // term_k = B_2k/(2k)! * (s)_{2k-1} * x^{-s-2k+1}
    let mut rising = s; // (s)_1
    let mut x_pow = x_neg_s / x; // x^{-s-1}
    let mut fact = 2.0; // (2k)!
    let mut last = 0.0;
    for k in 1..=k_corr {
        let term = rising * x_pow * (BERNOULLI[2 * k] / fact);
        direct.add(term);
        last = term.norm();
        let kk = 2 * k as u32;
        rising *= (s + (kk - 1) as f64) * (s + kk as f64);
        x_pow /= x * x;
        fact *= ((kk + 1) * (kk + 2)) as f64;
    }
    EmParts {
        regular: direct.total(),
        x,
        last_correction: last,
    }
}

#[inline]
fn cpow(base: f64, exponent: Complex64) -> Complex64 {
    // Real powf keeps the modulus within an ulp; exp(s ln x) loses |s ln x| ulps.
    let modulus = base.powf(exponent.re);
    if exponent.im == 0.0 {
        Complex64::new(modulus, 0.0)
    } else {
        Complex64::from_polar(modulus, exponent.im * base.ln())
    }
}

/// `(e^z - 1) / z`, accurate near `z = 0`.
pub(crate) fn exprel(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut acc = term;
        for k in 2..30 {
            term *= z / k as f64;
            acc += term;
            if term.norm() < 1e-18 * acc.norm() {
                break;
            }
        }
        acc
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Weighted Hurwitz sum `sum_r w_r zeta(s, a_r)` multiplied by
/// `(s - 1)` when `times_pole` is set (which makes it entire).
fn hurwitz_weighted(
    s: Complex64,
    terms: &[(Complex64, f64)],
    times_pole: bool,
    cfg: &EulerMaclaurinConfig,
) -> Result<SeriesEval> {
    cfg.validate()?;
    if let Some(&(_, a)) = terms.iter().find(|(_, a)| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "Hurwitz parameter t = {a} must be positive"
        )));
    }
    let weight_sum: Complex64 = terms.iter().map(|(w, _)| *w).sum();
    let sm1 = s - 1.0;
    let at_pole = sm1.norm() == 0.0;
    if at_pole && !times_pole && weight_sum.norm() > 1e-12 * (1.0 + max_weight(terms)) {
        return Err(Error::PoleAtOne);
    }

    let mut n_shift = cfg.shift_terms;
    loop {
        let mut regular = CompensatedSum::new();
        let mut pole = CompensatedSum::new();
        let mut last = 0.0f64;
        for &(w, a) in terms {
            let p = em_parts(s, a, n_shift, cfg.correction_terms);
            regular.add(w * p.regular);
            last = last.max(w.norm() * p.last_correction);
            let z = -sm1 * p.x.ln(); // (1 - s) ln x
            if times_pole {
                pole.add(w * cpow(p.x, -sm1));
            } else if z.norm() < 0.5 {
                // w * (x^{1-s} - 1)/(s - 1) = -w * ln x * exprel(z)
                pole.add(-w * p.x.ln() * exprel(z));
            } else {
                pole.add(w * (cpow(p.x, -sm1) - 1.0) / sm1);
            }
        }
        let value = if times_pole {
            regular.total() * sm1 + pole.total()
        } else {
            let mut v = regular.total() + pole.total();
            if !at_pole {
                v += weight_sum / sm1;
            }
            v
        };
        let tail = if times_pole { last * sm1.norm() } else { last };
        let scale = value.norm().max(f64::MIN_POSITIVE);
        if tail <= cfg.tol * scale || tail == 0.0 {
            return Ok(SeriesEval {
                value,
                status: SeriesStatus::Converged,
                terms_used: n_shift + cfg.correction_terms,
                tail_estimate: tail,
                rounding_floor: f64::EPSILON * scale,
            });
        }
        if n_shift >= MAX_SHIFT_TERMS {
            return Err(Error::NoConvergence { s, t: terms[0].1 });
        }
        n_shift = (2 * n_shift).min(MAX_SHIFT_TERMS);
    }
}

fn max_weight(terms: &[(Complex64, f64)]) -> f64 {
    terms.iter().map(|(w, _)| w.norm()).fold(0.0, f64::max)
}

/// Hurwitz zeta `zeta(s, t) = sum_{n>=0} (t + n)^(-s)`, continued to `s != 1`.
pub fn hurwitz_zeta(s: Complex64, t: f64, cfg: &EulerMaclaurinConfig) -> Result<SeriesEval> {
    hurwitz_weighted(s, &[(Complex64::new(1.0, 0.0), t)], false, cfg)
}

/// `sum_r w_r zeta(s, a_r)`. Regular at `s = 1` when the weights sum to zero.
pub fn hurwitz_combination(
    s: Complex64,
    terms: &[(Complex64, f64)],
    cfg: &EulerMaclaurinConfig,
) -> Result<SeriesEval> {
    hurwitz_weighted(s, terms, false, cfg)
}

/// `(s - 1) sum_r w_r zeta(s, a_r)`, an entire function of `s`.
pub fn hurwitz_pole_product(
    s: Complex64,
    terms: &[(Complex64, f64)],
    cfg: &EulerMaclaurinConfig,
) -> Result<SeriesEval> {
    hurwitz_weighted(s, terms, true, cfg)
}

/// Riemann zeta `zeta(s) = zeta(s, 1)`.
pub fn riemann_zeta(s: Complex64, cfg: &EulerMaclaurinConfig) -> Result<SeriesEval> {
    hurwitz_zeta(s, 1.0, cfg)
}

/// Dirichlet eta `(1 - 2^(1-s)) zeta(s)`, evaluated as `2^(-s) (zeta(s,1/2) - zeta(s,1))`
/// so that it stays finite at `s = 1`.
pub fn dirichlet_eta(s: Complex64, cfg: &EulerMaclaurinConfig) -> Result<SeriesEval> {
    let one = Complex64::new(1.0, 0.0);
    let e = hurwitz_combination(s, &[(one, 0.5), (-one, 1.0)], cfg)?;
    Ok(e.scaled(cpow(2.0, -s)))
}

/// Dirichlet L-function `L(s, chi) = k^(-s) sum_{i=1}^{k} chi(i) zeta(s, i/k)` for a
/// character given by its value table `chi(1), ..., chi(k)`.
pub fn dirichlet_l(s: Complex64, chi: &[Complex64], cfg: &EulerMaclaurinConfig) -> Result<SeriesEval> {
    if chi.is_empty() {
        return Err(Error::InvalidCharacter("empty value table".into()));
    }
    let k = chi.len() as f64;
    let terms: Vec<(Complex64, f64)> = chi
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(i, &c)| (c, (i + 1) as f64 / k))
        .collect();
    let e = hurwitz_combination(s, &terms, cfg)?;
    Ok(e.scaled(cpow(k, -s)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg() -> EulerMaclaurinConfig {
        EulerMaclaurinConfig::default()
    }

    fn zeta(s: Complex64, t: f64) -> Complex64 {
        hurwitz_zeta(s, t, &cfg()).unwrap().value
    }

    // Direct summation with only the integral and half-term tail: independent
    // of the Bernoulli corrections, valid for Re s > 1.
    fn brute_hurwitz(s: Complex64, t: f64, n: usize) -> Complex64 {
        let mut acc = CompensatedSum::new();
        for k in 0..n {
            acc.add(cpow(t + k as f64, -s));
        }
        let x = t + n as f64;
        acc.add(cpow(x, 1.0 - s) / (s - 1.0));
        acc.add(cpow(x, -s) * 0.5);
        acc.add(s * cpow(x, -s - 1.0) / 12.0);
        acc.total()
    }

    #[test]
    fn bernoulli_examples() {
        assert_eq!(bernoulli_number(0).unwrap(), 1.0);
        assert_eq!(bernoulli_number(1).unwrap(), -0.5);
        assert_eq!(bernoulli_number(12).unwrap(), -691.0 / 2730.0);
        assert_eq!(bernoulli_number(3).unwrap(), 0.0);
        assert_eq!(bernoulli_number(30).unwrap(), 8615841276005.0 / 14322.0);
        assert_eq!(bernoulli_number(31), Err(Error::OutOfTable(31)));
    }

    #[test]
    fn bernoulli_recurrence_holds_in_floating_point() {
        for k in 1..=20usize {
            let mut binom = 1.0;
            let mut acc = 0.0;
            for j in 0..=k {
                acc += binom * bernoulli_number(j).unwrap();
                binom = binom * (k + 1 - j) as f64 / (j + 1) as f64;
            }
            let scale = bernoulli_number(k).unwrap().abs().max(1.0) * 2f64.powi(k as i32);
            assert!(acc.abs() < 1e-12 * scale, "k = {k}: {acc}");
        }
    }

    #[test]
    fn basel_value() {
        let z = riemann_zeta(c(2.0, 0.0), &cfg()).unwrap();
        assert_eq!(z.status, SeriesStatus::Converged);
        assert!((z.value.re - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        assert!((z.value.re - 1.6449340668).abs() < 1e-10);
    }

    #[test]
    fn zeta_minus_one() {
        let z = riemann_zeta(c(-1.0, 0.0), &cfg()).unwrap();
        assert!((z.value.re + 1.0 / 12.0).abs() < 1e-12);
        assert!(z.value.im.abs() < 1e-15);
    }

    #[test]
    fn zeta_at_zero_is_half_minus_t() {
        assert!((zeta(c(0.0, 0.0), 0.75).re + 0.25).abs() < 1e-13);
        // Continuation check: approach s = 0 from both sides.
        let near = |d: f64| zeta(c(d, 0.0), 0.75).re;
        assert!(((near(1e-6) + near(-1e-6)) / 2.0 + 0.25).abs() < 1e-9);
    }

    #[test]
    fn pole_reported() {
        assert_eq!(hurwitz_zeta(c(1.0, 0.0), 2.0, &cfg()), Err(Error::PoleAtOne));
        assert!(matches!(
            hurwitz_zeta(c(2.0, 0.0), 0.0, &cfg()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn matches_brute_force_in_convergent_region() {
        for (s, t) in [(c(2.0, 0.0), 0.3), (c(3.5, 2.0), 1.7), (c(1.5, -4.0), 7.0)] {
            let brute = brute_hurwitz(s, t, 200_000);
            assert!((zeta(s, t) - brute).norm() < 1e-11, "s = {s}, t = {t}");
        }
    }

    #[test]
    fn hurwitz_recurrence_grid() {
        let grid_s = [c(-3.0, 0.0), c(-1.0, 0.0), c(0.5, 0.0), c(2.0, 0.0), c(2.0, 3.0)];
        for s in grid_s {
            for t in [0.25, 1.0, 2.0, 7.5] {
                let lhs = zeta(s, t) - zeta(s, t + 1.0);
                let rhs = cpow(t, -s);
                assert!((lhs - rhs).norm() < 1e-10, "s = {s}, t = {t}: {}", (lhs - rhs).norm());
            }
        }
    }

    #[test]
    fn distribution_law_grid() {
        let grid_s = [c(-3.0, 0.0), c(-1.0, 0.0), c(0.5, 0.0), c(2.0, 0.0), c(2.0, 3.0)];
        for s in grid_s {
            for t in [0.25, 1.0, 2.0, 7.5] {
                for m in [2u32, 3] {
                    let lhs: Complex64 = (0..m).map(|i| zeta(s, (t + i as f64) / m as f64)).sum();
                    let rhs = cpow(m as f64, s) * zeta(s, t);
                    assert!((lhs - rhs).norm() < 1e-9 * (1.0 + rhs.norm()), "s = {s}, t = {t}, m = {m}");
                }
            }
        }
    }

    #[test]
    fn negative_integers_match_bernoulli_polynomials() {
        for n in 0..=3usize {
            for t in [0.5, 1.0, 2.0] {
                let expected = -bernoulli_polynomial(n + 1, t).unwrap() / (n + 1) as f64;
                let got = zeta(c(-(n as f64), 0.0), t);
                assert!((got.re - expected).abs() < 1e-10 && got.im.abs() < 1e-12, "n = {n}, t = {t}");
            }
        }
    }

    #[test]
    fn eta_and_catalan() {
        let eta2 = dirichlet_eta(c(2.0, 0.0), &cfg()).unwrap().value;
        assert!((eta2.re - 0.8224670334).abs() < 1e-10);
        let half_zeta2 = 0.5 * zeta(c(2.0, 0.0), 1.0).re;
        assert!((eta2.re - half_zeta2).abs() < 1e-13);
        // Finite at s = 1: ln 2.
        let eta1 = dirichlet_eta(c(1.0, 0.0), &cfg()).unwrap().value;
        assert!((eta1.re - std::f64::consts::LN_2).abs() < 1e-12);

        let chi4 = [c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)];
        let catalan = dirichlet_l(c(2.0, 0.0), &chi4, &cfg()).unwrap().value;
        // Oracle: pair the terms 1/(4k+1)^2 - 1/(4k+3)^2, tail O(1/K^2).
        let k_max = 2_000_000;
        let brute: f64 = (0..k_max)
            .rev()
            .map(|k| {
                let a = 4.0 * k as f64;
                1.0 / ((a + 1.0) * (a + 1.0)) - 1.0 / ((a + 3.0) * (a + 3.0))
            })
            .sum();
        assert!((catalan.re - brute).abs() < 1e-12);
        assert!((catalan.re - 0.9159655942).abs() < 1e-10);
    }

    #[test]
    fn pole_product_is_entire() {
        let one = c(1.0, 0.0);
        // (s - 1) zeta(s, t) -> 1 as s -> 1.
        let at = hurwitz_pole_product(one, &[(one, 2.5)], &cfg()).unwrap().value;
        assert!((at - one).norm() < 1e-13);
        let near = hurwitz_pole_product(c(1.0 + 1e-7, 0.0), &[(one, 2.5)], &cfg()).unwrap().value;
        assert!((near - one).norm() < 1e-6);
        let s = c(-2.5, 1.0);
        let direct = zeta(s, 2.5) * (s - 1.0);
        let prod = hurwitz_pole_product(s, &[(one, 2.5)], &cfg()).unwrap().value;
        assert!((direct - prod).norm() < 1e-12 * (1.0 + direct.norm()));
    }

    #[test]
    fn combination_is_regular_at_one_when_weights_cancel() {
        let one = c(1.0, 0.0);
        // zeta(s, a) - zeta(s, b) -> psi(b) - psi(a) at s = 1; psi(2) - psi(1) = 1.
        let v = hurwitz_combination(one, &[(one, 1.0), (-one, 2.0)], &cfg()).unwrap().value;
        assert!((v - one).norm() < 1e-13);
        assert_eq!(
            hurwitz_combination(one, &[(one, 1.0)], &cfg()),
            Err(Error::PoleAtOne)
        );
    }

    #[test]
    fn config_validation() {
        let mut bad = cfg();
        bad.correction_terms = 16;
        assert!(bad.validate().is_err());
        bad.correction_terms = 0;
        assert!(bad.validate().is_err());
        let mut bad = cfg();
        bad.shift_terms = 0;
        assert!(bad.validate().is_err());
    }
}
