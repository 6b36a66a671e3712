use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Why a tail window has no expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// `X(n)` trends away without settling.
    Drift,
    /// Some residue class could not be extended off its class.
    ExtensionDivergence,
    /// `X(n)` neither settles nor trends.
    Oscillation,
}

/// Tail-window settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpectationConfig {
    /// Window counts as constant when `max |X(n) - X(n_eval)|` is below this.
    pub const_tol: f64,
    /// Relative rms misfit the extrapolating fit may leave.
    pub fit_tol: f64,
    /// Largest polynomial degree in `1/n` tried by the extrapolation.
    pub max_degree: usize,
}

impl Default for ExpectationConfig {
    fn default() -> Self {
        ExpectationConfig {
            const_tol: 1e-10,
            fit_tol: 1e-6,
            max_degree: 4,
        }
    }
}

impl ExpectationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.const_tol > 0.0 && self.fit_tol > 0.0) {
            return Err(Error::InvalidParameter("expectation tolerances must be positive".into()));
        }
        if self.max_degree > 8 {
            return Err(Error::InvalidParameter("max_degree above 8 is ill-conditioned".into()));
        }
        Ok(())
    }
}

/// Result of reading an expectation off a tail window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub value: Option<Complex64>,
    pub verdict: Option<Verdict>,
    /// Degree in `1/n` of the accepted fit; 0 for a constant window.
    pub degree: usize,
    /// rms misfit of the accepted (or best rejected) fit.
    pub fit_residual: f64,
}

/// Expectation of the samples `x[i] = X(first_n + i)`.
///
/// A window that is constant to `const_tol` reports its last sample. Otherwise
/// `X` is fitted by a polynomial in `1/n`, raising the degree while each step
/// cuts the misfit tenfold, and the fit is extrapolated to `n = ∞`. A misfit
/// above `fit_tol` means no limit: a clear linear trend is `Drift`, anything
/// else `Oscillation`.
pub fn expectation(first_n: usize, x: &[Complex64], cfg: &ExpectationConfig) -> Result<TailEstimate> {
    cfg.validate()?;
    if x.len() < cfg.max_degree + 3 {
        return Err(Error::InsufficientWindow {
            len: x.len(),
            needed: cfg.max_degree + 3,
        });
    }
    if first_n == 0 {
        return Err(Error::InvalidParameter("tail window must start at n >= 1".into()));
    }
    let last = *x.last().unwrap();
    let spread = x.iter().map(|v| (v - last).norm()).fold(0.0, f64::max);
    if spread < cfg.const_tol {
        return Ok(TailEstimate {
            value: Some(last),
            verdict: None,
            degree: 0,
            fit_residual: spread,
        });
    }

    let n_last = (first_n + x.len() - 1) as f64;
    // v = n_last / n lies in [1, n_last/first_n]; map it onto [-1, 1].
    let v: Vec<f64> = (0..x.len()).map(|i| n_last / (first_n + i) as f64).collect();
    let (lo, hi) = (1.0, n_last / first_n as f64);
    let centre = 0.5 * (hi + lo);
    let half = 0.5 * (hi - lo);
    let z: Vec<f64> = v.iter().map(|v| (v - centre) / half).collect();
    let z_inf = -centre / half;

    let scale = x.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let mut best = poly_fit(&z, x, 0, z_inf);
    for degree in 1..=cfg.max_degree {
        let next = poly_fit(&z, x, degree, z_inf);
        if next.1 < best.1 / 10.0 && best.1 > 1e-15 * scale {
            best = next;
        } else {
            break;
        }
    }
    let (alpha, residual, degree) = best;
    if residual <= cfg.fit_tol * alpha.norm().max(1.0) {
        return Ok(TailEstimate {
            value: Some(alpha),
            verdict: None,
            degree,
            fit_residual: residual,
        });
    }

    // No limit. A linear fit in n separates a trend from bounded wandering.
    let n: Vec<f64> = (0..x.len()).map(|i| (first_n + i) as f64).collect();
    let n_mid = 0.5 * (n[0] + n_last);
    let zn: Vec<f64> = n.iter().map(|n| (n - n_mid) / (n_last - n_mid)).collect();
    let (coef, lin_residual) = lsq(&zn, x, 1);
    let trend = coef[1].norm();
    let verdict = if trend > 10.0 * lin_residual {
        Verdict::Drift
    } else {
        Verdict::Oscillation
    };
    Ok(TailEstimate {
        value: None,
        verdict: Some(verdict),
        degree,
        fit_residual: residual,
    })
}

/// Fits a polynomial of `degree` in `z`; returns its value at `z_at`, the rms
/// misfit and the degree.
fn poly_fit(z: &[f64], x: &[Complex64], degree: usize, z_at: f64) -> (Complex64, f64, usize) {
    let (coef, residual) = lsq(z, x, degree);
    let value = coef.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z_at + c);
    (value, residual, degree)
}

/// Least squares in the monomial basis `1, z, .., z^degree`, real and
/// imaginary parts separately. Returns coefficients and rms misfit.
fn lsq(z: &[f64], x: &[Complex64], degree: usize) -> (Vec<Complex64>, f64) {
    let a = DMatrix::from_fn(z.len(), degree + 1, |i, k| z[i].powi(k as i32));
    let svd = a.clone().svd(true, true);
    let solve = |rhs: DVector<f64>| -> DVector<f64> {
        svd.solve(&rhs, 1e-14)
            .unwrap_or_else(|_| DVector::zeros(degree + 1))
    };
    let re = solve(DVector::from_iterator(x.len(), x.iter().map(|v| v.re)));
    let im = solve(DVector::from_iterator(x.len(), x.iter().map(|v| v.im)));
    let fit_re = &a * &re;
    let fit_im = &a * &im;
    let ss: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v.re - fit_re[i]).powi(2) + (v.im - fit_im[i]).powi(2))
        .sum();
    let coef = re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect();
    (coef, (ss / x.len() as f64).sqrt())
}
