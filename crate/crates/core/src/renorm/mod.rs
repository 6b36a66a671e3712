//! Probabilistic renormalization of a term sequence `a_n`.
//!
//! For each modulus `m`, partial sums are split into residue classes, each
//! class is extended off its class by a Newton shift, and the class average
//! `X(n)` is read off over a tail window. A finite expectation for every `m`
//! makes the sequence weakly renormalizable; `E(m) = S (1 - m^c)` across `m`
//! makes it strongly renormalizable.

mod expectation;
mod fit;
mod table;

pub use expectation::{expectation, ExpectationConfig, TailEstimate, Verdict};
pub use fit::{strong_fit, FitVerdict, StrongFit};
pub use table::{class_partial_sums, grandi_terms, sample_x, PartialSums, ResidueClassTable};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bernoulli::{bernoulli_apply, relative_residual, BEvalConfig};
use crate::error::{Error, Result};
use crate::hfun::HFamily;
use crate::series::{worst_status, SeriesStatus};

pub const MIN_MODULUS: u32 = 2;
pub const MAX_MODULUS: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenormConfig {
    /// Last index of the tail window.
    pub n_eval: usize,
    /// Tail window length.
    pub window: usize,
    /// Newton-series length used to extend each class.
    pub max_terms: usize,
    pub newton_tol: f64,
    pub expectation: ExpectationConfig,
    /// Retry divergent class extensions with the alternating part summed
    /// in closed form.
    pub fallback_analytic_binomial: bool,
    pub bernoulli: BEvalConfig,
}

impl Default for RenormConfig {
    fn default() -> Self {
        RenormConfig {
            n_eval: 160,
            window: 64,
            max_terms: 40,
            newton_tol: 1e-13,
            expectation: ExpectationConfig::default(),
            fallback_analytic_binomial: false,
            bernoulli: BEvalConfig::default(),
        }
    }
}

impl RenormConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 32 {
            return Err(Error::InvalidParameter(format!("window {} is below 32", self.window)));
        }
        if self.window > self.n_eval {
            return Err(Error::InvalidParameter(format!(
                "window {} longer than n_eval {}",
                self.window, self.n_eval
            )));
        }
        if self.max_terms < 2 {
            return Err(Error::InvalidParameter("max_terms must be at least 2".into()));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidParameter("newton_tol must be positive".into()));
        }
        self.expectation.validate()?;
        self.bernoulli.validate()
    }

    /// Highest term index the pipeline reads for modulus `m`.
    pub fn n_max(&self, m: u32) -> usize {
        self.n_eval + m as usize * self.max_terms
    }

    /// First index of the tail window.
    pub fn window_start(&self) -> usize {
        self.n_eval + 1 - self.window
    }
}

/// Renormalization outcome for one modulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub m: u32,
    pub expectation: Option<Complex64>,
    pub verdict: Option<Verdict>,
    /// `max |X(n) - X(n_eval)|` over the tail window.
    pub constancy_deviation: f64,
    /// Same over `n in [m, n_eval]`.
    pub full_range_deviation: f64,
    pub tail_window: [usize; 2],
    pub fit_degree: usize,
    pub fit_residual: f64,
    /// Worst Newton-shift status over all classes in the tail window.
    pub extension_status: SeriesStatus,
    /// Closed-form expectation from the Bernoulli operator (rho = 1 only).
    pub closed_form: Option<Complex64>,
    pub cross_residual: Option<f64>,
    /// Why the closed form is missing, when it was attempted.
    pub closed_form_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormReport {
    pub label: String,
    pub s: Option<Complex64>,
    pub t0: Option<f64>,
    pub rho: u8,
    pub per_m: Vec<ModulusReport>,
    pub weakly_renormalizable: bool,
}

impl RenormReport {
    /// `(m, E(m))` for every modulus with an expectation.
    pub fn expectations(&self) -> Vec<(u32, Complex64)> {
        self.per_m
            .iter()
            .filter_map(|r| r.expectation.map(|e| (r.m, e)))
            .collect()
    }
}

fn check_moduli(m_list: &[u32]) -> Result<u32> {
    if m_list.is_empty() {
        return Err(Error::InvalidParameter("empty modulus list".into()));
    }
    if let Some(m) = m_list.iter().find(|m| !(MIN_MODULUS..=MAX_MODULUS).contains(*m)) {
        return Err(Error::InvalidParameter(format!(
            "modulus {m} outside [{MIN_MODULUS}, {MAX_MODULUS}]"
        )));
    }
    Ok(*m_list.iter().max().unwrap())
}

/// `X(n)` for `n in [m, n_eval]` together with the worst extension status
/// over the tail window. Shifts before the window are not needed for the
/// expectation; near the start of a class they may legitimately fail.
pub fn class_average(sums: &PartialSums, m: u32, rho: u8, cfg: &RenormConfig) -> Result<(Vec<Complex64>, SeriesStatus)> {
    cfg.validate()?;
    let n_max = cfg.n_max(m);
    let mut tables = Vec::with_capacity(m as usize);
    let mut status = SeriesStatus::Terminated;
    for j in 0..m {
        let mut t = sums.class_table(m, j, rho, n_max)?;
        t.extend(cfg.n_eval, cfg.newton_tol, cfg.max_terms, cfg.fallback_analytic_binomial)?;
        for n in cfg.window_start().max(j as usize)..=cfg.n_eval {
            if let Some(st) = t.extension_status(n) {
                status = worst_status(status, st);
            }
        }
        tables.push(t);
    }
    let x = (m as usize..=cfg.n_eval)
        .map(|n| sample_x(&tables, n))
        .collect::<Result<Vec<_>>>()?;
    Ok((x, status))
}

fn modulus_report(sums: &PartialSums, m: u32, rho: u8, cfg: &RenormConfig) -> Result<ModulusReport> {
    let (x, status) = class_average(sums, m, rho, cfg)?;
    let first = m as usize;
    let start = cfg.window_start().max(first);
    let tail = &x[start - first..];
    let last = *x.last().unwrap();
    let dev = |xs: &[Complex64]| xs.iter().map(|v| (v - last).norm()).fold(0.0, f64::max);
    let mut report = ModulusReport {
        m,
        expectation: None,
        verdict: None,
        constancy_deviation: dev(tail),
        full_range_deviation: dev(&x),
        tail_window: [start, cfg.n_eval],
        fit_degree: 0,
        fit_residual: 0.0,
        extension_status: status,
        closed_form: None,
        cross_residual: None,
        closed_form_error: None,
    };
    if status == SeriesStatus::Diverged {
        report.verdict = Some(Verdict::ExtensionDivergence);
        return Ok(report);
    }
    let est = expectation(start, tail, &cfg.expectation)?;
    report.expectation = est.value;
    report.verdict = est.verdict;
    report.fit_degree = est.degree;
    report.fit_residual = est.fit_residual;
    Ok(report)
}

/// Weak renormalization of an explicit term sequence (`terms[n] = a_n`).
///
/// `terms` must reach index `n_eval + max(m) * max_terms`.
pub fn weak_report_terms(
    label: &str,
    terms: Vec<Complex64>,
    rho: u8,
    m_list: &[u32],
    cfg: &RenormConfig,
) -> Result<RenormReport> {
    cfg.validate()?;
    if rho > 1 {
        return Err(Error::InvalidParameter(format!("rho must be 0 or 1 (got {rho})")));
    }
    let m_top = check_moduli(m_list)?;
    let sums = PartialSums::new(terms)?;
    if sums.n_max() < cfg.n_max(m_top) {
        return Err(Error::InsufficientWindow {
            len: sums.n_max() + 1,
            needed: cfg.n_max(m_top) + 1,
        });
    }
    let per_m = m_list
        .iter()
        .map(|&m| modulus_report(&sums, m, rho, cfg))
        .collect::<Result<Vec<_>>>()?;
    let weak = per_m.iter().all(|r| r.expectation.is_some());
    Ok(RenormReport {
        label: label.to_string(),
        s: None,
        t0: None,
        rho,
        per_m,
        weakly_renormalizable: weak,
    })
}

/// Closed-form expectation `-(1/s)(B f(s, t0) - m^s B f^m(s, (t0 + m - 1)/m))`
/// for `rho = 1`.
pub fn closed_form_expectation(fam: &HFamily, s: Complex64, t0: f64, m: u32, cfg: &BEvalConfig) -> Result<Complex64> {
    if s.norm() == 0.0 {
        return Err(Error::SIsZero);
    }
    let whole = bernoulli_apply(fam, s, t0, cfg)?.value;
    let sub = bernoulli_apply(&fam.scaled_family(m), s, (t0 + m as f64 - 1.0) / m as f64, cfg)?.value;
    Ok(-(whole - Complex64::new(m as f64, 0.0).powc(s) * sub) / s)
}

/// Weak renormalization of `a_n = f(s - 1, t0 + n - 1)`.
///
/// With `rho = 1` each expectation is cross-checked against the Bernoulli
/// closed form; a failure there is recorded, not raised.
pub fn weak_report(
    fam: &HFamily,
    s: Complex64,
    t0: f64,
    rho: u8,
    m_list: &[u32],
    cfg: &RenormConfig,
) -> Result<RenormReport> {
    if s.norm() == 0.0 {
        return Err(Error::SIsZero);
    }
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::InvalidParameter(format!("t0 = {t0} must be positive")));
    }
    cfg.validate()?;
    let m_top = check_moduli(m_list)?;
    let terms = fam.terms(s, t0, cfg.n_max(m_top))?;
    let mut report = weak_report_terms(fam.name(), terms, rho, m_list, cfg)?;
    report.s = Some(s);
    report.t0 = Some(t0);
    if rho == 1 {
        for r in &mut report.per_m {
            match closed_form_expectation(fam, s, t0, r.m, &cfg.bernoulli) {
                Ok(e) => {
                    r.closed_form = Some(e);
                    r.cross_residual = r.expectation.map(|x| relative_residual(x, e));
                }
                Err(err) => r.closed_form_error = Some(err.to_string()),
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zetaref::{riemann_zeta, EulerMaclaurinConfig};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn natural_numbers_have_expectation_one_quarter() {
        let cfg = RenormConfig::default();
        let rep = weak_report(&HFamily::power(), c(2.0, 0.0), 1.0, 1, &[2], &cfg).unwrap();
        let r = &rep.per_m[0];
        assert_eq!(r.expectation, Some(c(0.25, 0.0)));
        assert!(r.full_range_deviation < 1e-10);
        assert!(r.cross_residual.unwrap() < 1e-10);
        assert!(rep.weakly_renormalizable);
    }

    #[test]
    fn power_family_matches_zeta_shape() {
        let cfg = RenormConfig::default();
        let zcfg = EulerMaclaurinConfig::default();
        for s in [c(3.0, 0.0), c(0.5, 0.0), c(2.0, 1.0)] {
            let rep = weak_report(&HFamily::power(), s, 1.0, 1, &[2, 3, 6], &cfg).unwrap();
            let z = riemann_zeta(1.0 - s, &zcfg).unwrap().value;
            for r in &rep.per_m {
                let want = (1.0 - Complex64::new(r.m as f64, 0.0).powc(s)) * z;
                let got = r.expectation.unwrap_or_else(|| panic!("{s} m={}: {r:?}", r.m));
                assert!((got - want).norm() < 1e-6 * want.norm().max(1.0), "{s} m={}: {got} vs {want}", r.m);
                assert!(r.constancy_deviation < 1e-8, "{s} m={}: {r:?}", r.m);
            }
        }
    }

    #[test]
    fn grandi_verdicts() {
        let cfg = RenormConfig::default();
        let terms = grandi_terms(cfg.n_max(3));
        let rep = weak_report_terms("grandi", terms.clone(), 0, &[2, 3], &cfg).unwrap();
        assert_eq!(rep.per_m[0].verdict, Some(Verdict::Drift));
        assert_eq!(rep.per_m[1].verdict, Some(Verdict::ExtensionDivergence));
        assert!(!rep.weakly_renormalizable);
    }

    #[test]
    fn convergent_series_without_rescaling() {
        // a_n = 1/n^2, rho = 0: E(m) = (1 - m^-2) zeta(2).
        let cfg = RenormConfig::default();
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        let rep = weak_report(&HFamily::power(), c(-1.0, 0.0), 1.0, 0, &[2, 3, 5], &cfg).unwrap();
        for r in &rep.per_m {
            let want = (1.0 - 1.0 / (r.m * r.m) as f64) * z2;
            let got = r.expectation.unwrap();
            assert!((got.re - want).abs() < 1e-8 && got.im.abs() < 1e-12, "m={}: {got} vs {want} {r:?}", r.m);
        }
    }

    #[test]
    fn argument_checks() {
        let cfg = RenormConfig::default();
        let p = HFamily::power();
        assert!(matches!(weak_report(&p, c(0.0, 0.0), 1.0, 1, &[2], &cfg), Err(Error::SIsZero)));
        assert!(weak_report(&p, c(2.0, 0.0), 1.0, 1, &[13], &cfg).is_err());
        assert!(weak_report(&p, c(2.0, 0.0), 1.0, 2, &[2], &cfg).is_err());
        let short = RenormConfig { window: 16, ..cfg };
        assert!(weak_report(&p, c(2.0, 0.0), 1.0, 1, &[2], &short).is_err());
    }

    #[test]
    fn report_round_trips_through_json() {
        let cfg = RenormConfig::default();
        let rep = weak_report(&HFamily::power(), c(0.5, 0.25), 1.0, 1, &[2, 3], &cfg).unwrap();
        let text = serde_json::to_string(&rep).unwrap();
        let back: RenormReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rep);
    }
}
