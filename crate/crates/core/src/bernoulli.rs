//! The Bernoulli operator `B = sum_n (-Δ)^n / (n + 1)` on functions of the
//! class H, its scaled variants, and the continued Dirichlet series it yields.
//!
//! The raw series converges slowly and cancels badly at small `t`, so
//! [`bernoulli_apply`] evaluates it at a shifted point `T = t + N` and pulls the
//! value back with the exact relation
//! `B f(s, t) = B f(s, t + N) - s sum_{i<N} f(s - 1, t + i)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diffcalc::{self, difference_table, SeqWindow};
use crate::error::{Error, Result};
use crate::hfun::{falling_factorial, HFamily, DEFAULT_EVAL_TOL};
use crate::series::{worst_status, CompensatedSum, SeriesEval, SeriesStatus};
use crate::zetaref::bernoulli_number;

/// Smallest evaluation point of the raw series when the shift is automatic.
pub const DEFAULT_MIN_BASE: f64 = 30.0;
/// How many times the shift is doubled before a divergent raw series is an error.
const SHIFT_RETRIES: usize = 2;
/// Euler–Maclaurin corrections used for the tail of the A-series.
const A_TAIL_CORRECTIONS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BEvalConfig {
    /// Shift `N`; `None` picks the smallest `N` with `t + N >= min_base`.
    #[serde(default)]
    pub shift_base: Option<usize>,
    #[serde(default = "default_min_base")]
    pub min_base: f64,
    #[serde(default = "default_b_tol")]
    pub tol: f64,
    #[serde(default = "default_max_terms")]
    pub max_terms: usize,
}

fn default_min_base() -> f64 {
    DEFAULT_MIN_BASE
}

fn default_b_tol() -> f64 {
    1e-11
}

fn default_max_terms() -> usize {
    diffcalc::DEFAULT_MAX_TERMS
}

impl Default for BEvalConfig {
    fn default() -> Self {
        BEvalConfig {
            shift_base: None,
            min_base: DEFAULT_MIN_BASE,
            tol: default_b_tol(),
            max_terms: default_max_terms(),
        }
    }
}

impl BEvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("B tolerance must be positive".into()));
        }
        if self.max_terms < 1 {
            return Err(Error::InvalidParameter("max_terms must be at least 1".into()));
        }
        if !self.min_base.is_finite() {
            return Err(Error::InvalidParameter("min_base must be finite".into()));
        }
        Ok(())
    }

    /// The shift `N` used at `t`.
    pub fn shift_for(&self, t: f64) -> usize {
        self.shift_base
            .unwrap_or_else(|| (self.min_base - t).ceil().max(0.0) as usize)
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("t = {t} must be positive")))
    }
}

/// Raw series `sum_n (-1)^n Δ^n f(s, .)|_T / (n + 1)` with unit steps.
pub fn bernoulli_raw(fam: &HFamily, s: Complex64, big_t: f64, cfg: &BEvalConfig) -> Result<SeriesEval> {
    cfg.validate()?;
    check_t(big_t)?;
    let samples = (0..=cfg.max_terms)
        .map(|k| fam.eval_f(s, big_t + k as f64, DEFAULT_EVAL_TOL).map(|e| e.value))
        .collect::<Result<Vec<_>>>()?;
    let table = difference_table(&SeqWindow::new(0, samples)?, cfg.max_terms)?;
    let sign = |n: usize| if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(diffcalc::sum_binomial_series(&table, |n| sign(n) / (n + 1) as f64, cfg.tol))
}

/// `s sum_{i<n} f(s - 1, t + i)`.
fn pull_back_sum(fam: &HFamily, s: Complex64, t: f64, n: usize) -> Result<Complex64> {
    if n == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut acc = CompensatedSum::new();
    for i in 0..n {
        acc.add(fam.eval_f(s - 1.0, t + i as f64, DEFAULT_EVAL_TOL)?.value);
    }
    Ok(acc.total() * s)
}

/// `B f(s, t)`.
pub fn bernoulli_apply(fam: &HFamily, s: Complex64, t: f64, cfg: &BEvalConfig) -> Result<SeriesEval> {
    cfg.validate()?;
    check_t(t)?;
    let mut n = cfg.shift_for(t);
    let mut raw = bernoulli_raw(fam, s, t + n as f64, cfg)?;
    let mut retries = 0;
    while raw.status == SeriesStatus::Diverged {
        if retries == SHIFT_RETRIES {
            return Err(Error::Diverged(format!(
                "Bernoulli series for `{}` at s = {s}, t = {t} (shift {n})",
                fam.name()
            )));
        }
        retries += 1;
        n = (2 * n).max(n + DEFAULT_MIN_BASE as usize);
        raw = bernoulli_raw(fam, s, t + n as f64, cfg)?;
    }
    let pull = pull_back_sum(fam, s, t, n)?;
    raw.value -= pull;
    raw.rounding_floor += f64::EPSILON * pull.norm() * n as f64;
    Ok(raw)
}

/// `B_h f(s, t) = h^s (B g)(s, t/h)` with `g(s, x) = h^(-s) f(s, h x)`.
pub fn bernoulli_apply_scaled(fam: &HFamily, s: Complex64, t: f64, h: f64, cfg: &BEvalConfig) -> Result<SeriesEval> {
    check_t(t)?;
    let g = fam.scaled_by(h)?;
    let b = bernoulli_apply(&g, s, t / h, cfg)?;
    let factor = Complex64::new(h, 0.0).powc(s);
    Ok(scale_eval(b, factor))
}

fn scale_eval(mut e: SeriesEval, factor: Complex64) -> SeriesEval {
    let k = factor.norm();
    e.value *= factor;
    e.tail_estimate *= k;
    e.rounding_floor *= k;
    e
}

/// The continued Dirichlet series `D^f(sigma, t) = -(1/s) B f(s, t)` with `s = 1 - sigma`.
pub fn dirichlet_value(fam: &HFamily, sigma: Complex64, t: f64, cfg: &BEvalConfig) -> Result<SeriesEval> {
    let s = 1.0 - sigma;
    if s.norm() == 0.0 {
        return Err(Error::PoleAtSigma);
    }
    let b = bernoulli_apply(fam, s, t, cfg)?;
    Ok(scale_eval(b, -1.0 / s))
}

/// `sum_{n>=0} f(s - 1, t + n)` for `Re s` below the family's Dirichlet abscissa.
///
/// The first terms are summed directly; the remainder from `T >= 30` on is
/// the Euler–Maclaurin expansion, whose integral and derivatives are again
/// values of `f` because `d/dt f(s, t) = s f(s - 1, t)`.
pub fn series_sum_a(fam: &HFamily, s: Complex64, t: f64, tol: f64) -> Result<SeriesEval> {
    check_t(t)?;
    let limit = fam.dirichlet_abscissa();
    if s.re >= limit {
        return Err(Error::OutsideConvergence {
            family: fam.name().to_string(),
            re_s: s.re,
            limit,
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let n_direct = (DEFAULT_MIN_BASE - t).ceil().max(0.0) as usize;
    let mut acc = CompensatedSum::new();
    let mut abs_sum = 0.0;
    for i in 0..n_direct {
        let v = fam.eval_f(s - 1.0, t + i as f64, DEFAULT_EVAL_TOL)?.value;
        abs_sum += v.norm();
        acc.add(v);
    }
    let big_t = t + n_direct as f64;
    let g = |k: u32| -> Result<Complex64> {
        // g^(k)(x) = (s-1)^(k falling) f(s-1-k, x) with g(x) = f(s-1, x)
        let f = fam.eval_f(s - 1.0 - k as f64, big_t, DEFAULT_EVAL_TOL)?.value;
        Ok(falling_factorial(s - 1.0, k) * f)
    };
    // integral_T^inf g = -f(s, T)/s
    acc.add(-fam.eval_f(s, big_t, DEFAULT_EVAL_TOL)?.value / s);
    acc.add(g(0)? * 0.5);
    let mut fact = 1.0;
    let mut last = f64::INFINITY;
    let mut status = SeriesStatus::Stagnated;
    let mut used = n_direct;
    for k in 1..=A_TAIL_CORRECTIONS {
        fact *= ((2 * k - 1) * (2 * k)) as f64;
        let term = -g(2 * k as u32 - 1)? * (bernoulli_number(2 * k)? / fact);
        if term.norm() > last {
            break;
        }
        acc.add(term);
        last = term.norm();
        used += 1;
        if last <= tol * acc.total().norm() {
            status = SeriesStatus::Converged;
            break;
        }
    }
    Ok(SeriesEval {
        value: acc.total(),
        status,
        terms_used: used,
        tail_estimate: last,
        rounding_floor: f64::EPSILON * abs_sum,
    })
}

/// Relative residuals of the operator identities at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// Distribution: `B f(s,t)` against `(m^s/m) sum_i B f^m(s, (t+i)/m)`.
    pub r1: f64,
    /// Telescoping: `B f(s,t+5) - B f(s,t)` against `s sum_{n<5} f(s-1, t+n)`.
    pub r2: f64,
    /// Shift: Newton series `E^h` on samples of `f(s, .)` against `f(s, . + h)`.
    pub r3: f64,
    /// Derivative: `Δ B f(s,t)` against `s f(s-1, t)`.
    pub r4: f64,
    /// A-link: `B f(s,t)` against `-s sum_n f(s-1, t+n)`; `None` outside convergence.
    pub r5: Option<f64>,
}

impl IdentityResiduals {
    /// `(name, residual)` pairs; a skipped check has no residual.
    pub fn entries(&self) -> [(&'static str, Option<f64>); 5] {
        [
            ("r1", Some(self.r1)),
            ("r2", Some(self.r2)),
            ("r3", Some(self.r3)),
            ("r4", Some(self.r4)),
            ("r5", self.r5),
        ]
    }

    pub fn max(&self) -> f64 {
        self.entries().iter().filter_map(|(_, r)| *r).fold(0.0, f64::max)
    }
}

/// `|a - b| / max(|a|, |b|)`, and 0 when both sides vanish.
pub fn relative_residual(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Evaluates the five operator identities for `fam` at `(s, t)` with scale
/// factor `m` and fractional shift `h` in `[0, 1)`.
///
/// Paired evaluations share their shift so that each identity exercises the
/// raw series at distinct points rather than the exact pull-back relation.
pub fn identity_residuals(
    fam: &HFamily,
    s: Complex64,
    t: f64,
    m: u32,
    h: f64,
    cfg: &BEvalConfig,
) -> Result<IdentityResiduals> {
    check_t(t)?;
    if m < 1 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let n = cfg.shift_for(t);
    let fixed = BEvalConfig {
        shift_base: Some(n),
        ..*cfg
    };
    let bf = bernoulli_apply(fam, s, t, &fixed)?.value;

    // r1
    let fm = fam.scaled_family(m);
    let mut dist = CompensatedSum::new();
    for i in 0..m {
        dist.add(bernoulli_apply(&fm, s, (t + i as f64) / m as f64, cfg)?.value);
    }
    let mf = m as f64;
    let rhs1 = dist.total() * Complex64::new(mf, 0.0).powc(s) / mf;
    let r1 = relative_residual(bf, rhs1);

    // r2
    let bf5 = bernoulli_apply(fam, s, t + 5.0, &fixed)?.value;
    let tele = pull_back_sum(fam, s, t, 5)?;
    let r2 = relative_residual(bf5 - bf, tele);

    // r3
    let big_t = t + n as f64;
    let samples = (0..=cfg.max_terms)
        .map(|k| fam.eval_f(s, big_t + k as f64, DEFAULT_EVAL_TOL).map(|e| e.value))
        .collect::<Result<Vec<_>>>()?;
    // newton_shift measures its tolerance against max(1, |partial|); scale it
    // so the check stays relative for small f.
    let tol = cfg.tol * samples[0].norm().clamp(f64::MIN_POSITIVE, 1.0);
    let shifted = diffcalc::newton_shift(&SeqWindow::new(0, samples)?, h, tol, cfg.max_terms)?;
    let direct = fam.eval_f(s, big_t + h, DEFAULT_EVAL_TOL)?.value;
    let r3 = relative_residual(shifted.value, direct);

    // r4
    let bf1 = bernoulli_apply(fam, s, t + 1.0, &fixed)?.value;
    let deriv = s * fam.eval_f(s - 1.0, t, DEFAULT_EVAL_TOL)?.value;
    let r4 = relative_residual(bf1 - bf, deriv);

    // r5
    let r5 = if s.re < fam.dirichlet_abscissa() {
        let a = series_sum_a(fam, s, t, cfg.tol)?;
        Some(relative_residual(bf, -s * a.value))
    } else {
        None
    };

    Ok(IdentityResiduals { r1, r2, r3, r4, r5 })
}

/// Combined status of several evaluations, for reporting.
pub fn combined_status(evals: &[SeriesEval]) -> SeriesStatus {
    evals
        .iter()
        .map(|e| e.status)
        .fold(SeriesStatus::Terminated, worst_status)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zetaref::{hurwitz_zeta, EulerMaclaurinConfig};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn zeta(s: Complex64, t: f64) -> Complex64 {
        hurwitz_zeta(s, t, &EulerMaclaurinConfig::default()).unwrap().value
    }

    fn cfg() -> BEvalConfig {
        BEvalConfig::default()
    }

    #[test]
    fn power_examples() {
        let p = HFamily::power();
        let b = |s: Complex64, t: f64| bernoulli_apply(&p, s, t, &cfg()).unwrap().value;
        assert!((b(c(2.0, 0.0), 1.0) - 1.0 / 6.0).norm() < 1e-10);
        assert!((b(c(2.0, 0.0), 2.0) - 13.0 / 6.0).norm() < 1e-10);
        for t in [0.3, 1.0, 7.0, 45.0] {
            assert_eq!(b(c(0.0, 0.0), t), c(1.0, 0.0));
        }
    }

    #[test]
    fn power_matches_hurwitz_oracle() {
        let p = HFamily::power();
        for s in [c(-2.0, 0.0), c(-0.5, 0.0), c(0.5, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(2.0, 3.0)] {
            for t in [0.5, 1.0, 2.0, 10.0] {
                let b = bernoulli_apply(&p, s, t, &cfg()).unwrap();
                let oracle = -s * zeta(1.0 - s, t);
                assert!((b.value - oracle).norm() < 1e-8, "s = {s}, t = {t}: {}", (b.value - oracle).norm());
                let moved = BEvalConfig {
                    shift_base: Some(cfg().shift_for(t) + 7),
                    ..cfg()
                };
                let b7 = bernoulli_apply(&p, s, t, &moved).unwrap();
                assert!((b.value - b7.value).norm() < 1e-9, "s = {s}, t = {t}");
            }
        }
    }

    #[test]
    fn scaled_examples() {
        let p = HFamily::power();
        // B_h t^2 = t^2 - h t + h^2/6
        let v = bernoulli_apply_scaled(&p, c(2.0, 0.0), 1.0, 2.0, &cfg()).unwrap().value;
        assert!((v - c(-1.0 / 3.0, 0.0)).norm() < 1e-10);
        let v = bernoulli_apply_scaled(&p, c(0.0, 0.0), 1.0, 3.0, &cfg()).unwrap().value;
        assert!((v - c(1.0, 0.0)).norm() < 1e-14);
        let h = HFamily::hurwitz();
        for (s, t) in [(c(1.5, 0.5), 0.7), (c(-2.0, 0.0), 3.0)] {
            let a = bernoulli_apply(&h, s, t, &cfg()).unwrap().value;
            let b = bernoulli_apply_scaled(&h, s, t, 1.0, &cfg()).unwrap().value;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn dirichlet_values_of_power_family() {
        let p = HFamily::power();
        let d = |sigma: f64| dirichlet_value(&p, c(sigma, 0.0), 1.0, &cfg()).unwrap().value;
        assert!((d(2.0).re - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-10);
        assert!((d(-1.0).re + 1.0 / 12.0).abs() < 1e-10);
        assert!((d(0.0).re + 0.5).abs() < 1e-10);
        assert_eq!(dirichlet_value(&p, c(1.0, 0.0), 1.0, &cfg()), Err(Error::PoleAtSigma));
    }

    #[test]
    fn a_series_examples() {
        let p = HFamily::power();
        let a = series_sum_a(&p, c(-1.0, 0.0), 1.0, 1e-12).unwrap();
        assert_eq!(a.status, SeriesStatus::Converged);
        assert!((a.value.re - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-11);
        let a = series_sum_a(&p, c(-2.0, 0.0), 2.0, 1e-12).unwrap();
        assert!((a.value.re - 0.2020569031595943).abs() < 1e-11);
        assert!(matches!(series_sum_a(&p, c(0.5, 0.0), 1.0, 1e-12), Err(Error::OutsideConvergence { .. })));
        // The first term never exceeds the whole (positive terms).
        let first = p.eval_f(c(-3.0, 0.0), 2.0, 1e-12).unwrap().value.re;
        assert!(first <= a.value.re + a.tail_estimate);
    }

    #[test]
    fn dirichlet_value_matches_direct_summation() {
        let p = HFamily::power();
        for sigma in [1.5, 2.0, 3.0] {
            for t in [1.0, 2.0] {
                let d = dirichlet_value(&p, c(sigma, 0.0), t, &cfg()).unwrap().value;
                let a = series_sum_a(&p, c(1.0 - sigma, 0.0), t, 1e-13).unwrap().value;
                assert!((d - a).norm() < 1e-9, "sigma = {sigma}, t = {t}: {}", (d - a).norm());
            }
        }
    }

    #[test]
    fn identity_examples() {
        let p = HFamily::power();
        let r = identity_residuals(&p, c(2.0, 0.0), 1.0, 2, 0.5, &cfg()).unwrap();
        assert!(r.max() < 1e-8, "{r:?}");
        assert!(r.r5.is_none());
        let r = identity_residuals(&p, c(0.0, 0.0), 1.0, 2, 0.5, &cfg()).unwrap();
        assert_eq!(r.r4, 0.0);
        let h = HFamily::hurwitz();
        let r = identity_residuals(&h, c(-2.0, 0.0), 1.5, 3, 1.0 / 3.0, &cfg()).unwrap();
        assert!(r.max() < 1e-6, "{r:?}");
        assert!(r.r5.is_some());
    }
}
