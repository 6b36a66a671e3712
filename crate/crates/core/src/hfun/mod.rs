//! Functions `f(s, t)` of the class H and the example coefficient families.
//!
//! Every family is packaged as
//!
//! ```text
//! f(s, t) = s^(nu falling) * sum_{i>=0} c_{i+1} (t + i)^(s - nu)
//! ```
//!
//! where the coefficients `c_n` come from a [`CoeffRule`]. Families with a
//! known continuation (power, Hurwitz, eta, Dirichlet character) evaluate for
//! every `s` through [`crate::zetaref`]; the others are evaluable only where
//! the series converges absolutely.

mod character;
mod coeff;

use std::sync::Arc;

use num_complex::Complex64;

pub use character::Character;
pub use coeff::{
    alternating_coeff, character_coeff, constant_coeff, ehrhart_coeff, gauss_ideal_coeff, jacobi_coeff, CoeffFn,
    CoeffRule, Shape, MAX_DIMENSION,
};
use coeff::CoeffCache;

use crate::error::{Error, Result};
use crate::series::{CompensatedSum, SeriesEval, SeriesStatus};
use crate::zetaref::{self, EulerMaclaurinConfig};

/// Relative tolerance used when a caller does not pass one.
pub const DEFAULT_EVAL_TOL: f64 = 1e-13;
/// Margin kept between a requested `Re s` and the convergence threshold.
pub const CONVERGENCE_MARGIN: f64 = 0.1;
/// Hard cap on the number of series terms in one evaluation.
pub const MAX_SERIES_TERMS: usize = 1 << 22;

// Coefficients in the first CALIBRATION positions fix the growth constant.
const CALIBRATION: usize = 16;
const OVERFLOW_FACTOR: f64 = 10.0;
const BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ClosedForm {
    Power,
    Hurwitz,
    Eta,
    CharacterL,
}

/// A function `f(s, t)` in the class H, possibly rescaled to
/// `h^(-s) f(s, h t)`.
///
/// Clones share the coefficient cache.
#[derive(Debug, Clone)]
pub struct HFamily {
    name: String,
    nu: u32,
    growth_exponent: f64,
    convergence_threshold: f64,
    closed_form: Option<ClosedForm>,
    coeffs: Arc<CoeffCache>,
    scale: f64,
}

impl HFamily {
    fn build(name: &str, nu: u32, growth_exponent: f64, closed_form: Option<ClosedForm>, rule: CoeffRule) -> Self {
        HFamily {
            name: name.to_string(),
            nu,
            growth_exponent,
            convergence_threshold: nu as f64 - growth_exponent - 1.0,
            closed_form,
            coeffs: Arc::new(CoeffCache::new(rule)),
            scale: 1.0,
        }
    }

    /// `t^s`.
    pub fn power() -> Self {
        Self::build("power", 0, 0.0, Some(ClosedForm::Power), CoeffRule::Delta)
    }

    /// `c(z) = 1/(1 - z)`: `f(s, t) = s zeta(1 - s, t)`.
    pub fn hurwitz() -> Self {
        Self::build("hurwitz", 1, 0.0, Some(ClosedForm::Hurwitz), CoeffRule::Constant)
    }

    /// `c(z) = 1/(1 + z)`: `f(s, t) = sum (-1)^i (t + i)^s`.
    pub fn eta() -> Self {
        Self::build("eta", 0, 0.0, Some(ClosedForm::Eta), CoeffRule::Alternating)
    }

    /// `c_n = chi(n)`; `nu = 1` for a principal character, 0 otherwise.
    pub fn character(chi: Character) -> Self {
        let nu = u32::from(chi.is_principal());
        Self::build("character", nu, 0.0, Some(ClosedForm::CharacterL), CoeffRule::Character(chi))
    }

    /// `c_n` = number of lattice points in `n P`.
    pub fn ehrhart(shape: Shape) -> Result<Self> {
        let d = shape.dimension();
        if d > MAX_DIMENSION {
            return Err(Error::DimensionTooLarge(d));
        }
        if d == 0 {
            return Err(Error::InvalidParameter("polytope dimension must be at least 1".into()));
        }
        let name = match shape {
            Shape::Box(_) => "ehrhart_box",
            Shape::Simplex(_) => "ehrhart_simplex",
        };
        Ok(Self::build(name, d + 1, d as f64, None, CoeffRule::Ehrhart(shape)))
    }

    /// `c_{i+1} = P_i^{(a,b)}(x)`.
    pub fn jacobi(a: f64, b: f64, x: f64) -> Result<Self> {
        jacobi_coeff(a, b, x, 0)?;
        Ok(Self::build("jacobi", 0, 0.0, None, CoeffRule::Jacobi { a, b, x }))
    }

    /// `c_n` = number of ideals of norm `n` in `Z[i]`.
    pub fn gauss_ideal() -> Self {
        Self::build("gauss_ideal", 1, 0.5, None, CoeffRule::GaussIdeal)
    }

    /// A family from an arbitrary coefficient rule `n -> c_n` (`n >= 1`) with
    /// declared pole order `nu` and growth `|c_n| = O(n^g)`.
    pub fn from_coefficients(
        name: &str,
        nu: u32,
        growth_exponent: f64,
        rule: impl Fn(u64) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !growth_exponent.is_finite() || growth_exponent < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "growth exponent must be finite and >= 0 (got {growth_exponent})"
            )));
        }
        Ok(Self::build(name, nu, growth_exponent, None, CoeffRule::Custom(Arc::new(rule))))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn growth_exponent(&self) -> f64 {
        self.growth_exponent
    }

    /// `sigma*`: the defining series converges absolutely for `Re s < sigma*`.
    pub fn convergence_threshold(&self) -> f64 {
        self.convergence_threshold
    }

    pub fn has_closed_form(&self) -> bool {
        self.closed_form.is_some()
    }

    pub fn coeff_rule(&self) -> &CoeffRule {
        self.coeffs.rule()
    }

    /// Scale `h` of the companion `h^(-s) f(s, h t)`; 1 for an unscaled family.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `Re s` below which `sum_n f(s - 1, t + n)` converges.
    pub fn dirichlet_abscissa(&self) -> f64 {
        (self.convergence_threshold + 1.0 - CONVERGENCE_MARGIN).min(0.0)
    }

    /// The coefficient `c_n`, `n >= 1`.
    pub fn coefficient(&self, n: u64) -> Result<Complex64> {
        if n == 0 {
            return Err(Error::InvalidParameter("coefficients are indexed from 1".into()));
        }
        Ok(self.coeffs.snapshot(n as usize)[n as usize - 1])
    }

    /// The companion `f^m(s, t) = m^(-s) f(s, m t)`.
    pub fn scaled_family(&self, m: u32) -> HFamily {
        self.scaled_by(m.max(1) as f64).expect("positive integer scale")
    }

    /// `h^(-s) f(s, h t)` for a real `h > 0`.
    pub fn scaled_by(&self, h: f64) -> Result<HFamily> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale h = {h} must be positive")));
        }
        let mut out = self.clone();
        // t^s is scale invariant.
        if self.closed_form != Some(ClosedForm::Power) {
            out.scale *= h;
        }
        Ok(out)
    }

    /// `f(s, t)` to relative accuracy `tol`.
    pub fn eval_f(&self, s: Complex64, t: f64, tol: f64) -> Result<SeriesEval> {
        self.eval_with(s, t, tol, false)
    }

    /// `f(s, t)` by direct summation, ignoring any closed form.
    pub fn eval_series(&self, s: Complex64, t: f64, tol: f64) -> Result<SeriesEval> {
        self.eval_with(s, t, tol, true)
    }

    fn eval_with(&self, s: Complex64, t: f64, tol: f64, force_series: bool) -> Result<SeriesEval> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("t = {t} must be positive")));
        }
        if !(s.re.is_finite() && s.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("s = {s} is not finite")));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        let base = match self.closed_form {
            Some(form) if !force_series => self.eval_closed(form, s, self.scale * t)?,
            _ => self.eval_sum(s, self.scale * t, tol)?,
        };
        if self.scale == 1.0 {
            Ok(base)
        } else {
            Ok(base.scaled(real_pow(self.scale, -s)))
        }
    }

    fn eval_closed(&self, form: ClosedForm, s: Complex64, t: f64) -> Result<SeriesEval> {
        let cfg = EulerMaclaurinConfig::default();
        let one = Complex64::new(1.0, 0.0);
        match form {
            ClosedForm::Power => Ok(SeriesEval::exact(crate::ddreal::accurate_pow(t, s))),
            // s zeta(1 - s, t) = -(u - 1) zeta(u, t), u = 1 - s
            ClosedForm::Hurwitz => Ok(zetaref::hurwitz_pole_product(one - s, &[(one, t)], &cfg)?.scaled(-one)),
            // 2^s (zeta(-s, t/2) - zeta(-s, (t+1)/2))
            ClosedForm::Eta => {
                let e = zetaref::hurwitz_combination(-s, &[(one, t / 2.0), (-one, (t + 1.0) / 2.0)], &cfg)?;
                Ok(e.scaled(real_pow(2.0, s)))
            }
            // s^(nu falling) k^(s - nu) sum_r chi(r) zeta(nu - s, (t + r - 1)/k)
            ClosedForm::CharacterL => {
                let CoeffRule::Character(chi) = self.coeffs.rule() else {
                    unreachable!("character closed form without a character")
                };
                let k = chi.modulus() as f64;
                let terms: Vec<(Complex64, f64)> = chi
                    .values()
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v.norm() > 0.0)
                    .map(|(r, &v)| (v, (t + r as f64) / k))
                    .collect();
                if self.nu == 1 {
                    let e = zetaref::hurwitz_pole_product(one - s, &terms, &cfg)?;
                    Ok(e.scaled(-real_pow(k, s - 1.0)))
                } else {
                    let e = zetaref::hurwitz_combination(-s, &terms, &cfg)?;
                    Ok(e.scaled(real_pow(k, s)))
                }
            }
        }
    }

    fn eval_sum(&self, s: Complex64, t: f64, tol: f64) -> Result<SeriesEval> {
        let limit = self.convergence_threshold - CONVERGENCE_MARGIN;
        if s.re >= limit {
            return Err(Error::OutsideConvergence {
                family: self.name.clone(),
                re_s: s.re,
                limit,
            });
        }
        let prefactor = falling_factorial(s, self.nu);
        let exponent = s - self.nu as f64;
        let g = self.growth_exponent;
        // Tail terms: |c_{i+1}| (t+i)^{Re s - nu} <= C (1+i)^g (t+i)^{...} <= C M^g (t+i)^p.
        let p = s.re - self.nu as f64 + g;
        let m_g = (1.0f64 / t).max(1.0).powf(g);

        let mut acc = CompensatedSum::new();
        let mut abs_sum = 0.0;
        let mut calibration = 0.0f64;
        let mut block_max: Vec<f64> = Vec::new();
        let mut current_block = 0.0f64;
        let mut coeffs = self.coeffs.snapshot(1024);
        let mut i = 0usize;
        loop {
            if i == coeffs.len() {
                coeffs = self.coeffs.snapshot(2 * i);
            }
            let c = coeffs[i];
            let weight = (1.0 + i as f64).powf(g);
            let ratio = c.norm() / weight;
            if i < CALIBRATION {
                calibration = calibration.max(ratio);
            } else if ratio > OVERFLOW_FACTOR * calibration {
                return Err(Error::CoefficientOverflow {
                    family: self.name.clone(),
                    index: i as u64 + 1,
                    magnitude: c.norm(),
                    bound: OVERFLOW_FACTOR * calibration * weight,
                });
            }
            current_block = current_block.max(ratio);
            if c.norm() != 0.0 {
                let term = c * real_pow(t + i as f64, exponent);
                abs_sum += term.norm();
                acc.add(term);
            }
            i += 1;
            if i.is_multiple_of(BLOCK) {
                block_max.push(current_block);
                current_block = 0.0;
                // Growth constant from the most recent half of the coefficients.
                let recent = block_max[block_max.len() / 2..].iter().cloned().fold(0.0, f64::max);
                let tail = prefactor.norm() * recent * m_g * (t + i as f64 - 1.0).powf(p + 1.0) / (-p - 1.0);
                let value = acc.total() * prefactor;
                let done = tail <= tol * value.norm() || (tail == 0.0);
                if done || i >= MAX_SERIES_TERMS {
                    return Ok(SeriesEval {
                        value,
                        status: if done { SeriesStatus::Converged } else { SeriesStatus::Stagnated },
                        terms_used: i,
                        tail_estimate: tail,
                        rounding_floor: f64::EPSILON * abs_sum * prefactor.norm(),
                    });
                }
            }
        }
    }

    /// `a_n = f(s - 1, t0 + n - 1)` for `n >= 1`, and `a_0 = 0`.
    pub fn term_a(&self, s: Complex64, t0: f64, n: u64) -> Result<Complex64> {
        if n == 0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(self.eval_f(s - 1.0, t0 + n as f64 - 1.0, DEFAULT_EVAL_TOL)?.value)
    }

    /// `a_0, ..., a_{n_max}`.
    pub fn terms(&self, s: Complex64, t0: f64, n_max: usize) -> Result<Vec<Complex64>> {
        (0..=n_max as u64).map(|n| self.term_a(s, t0, n)).collect()
    }

    /// Relative residual of `d/dt f(s, t) = s f(s - 1, t)`, with the
    /// derivative taken by a five-point central difference of width `step`.
    pub fn check_h_derivative(&self, s: Complex64, t: f64, step: f64) -> Result<f64> {
        if !(step > 0.0 && step < t / 2.0) {
            return Err(Error::InvalidParameter(format!("step {step} must lie in (0, t/2)")));
        }
        let f = |x: f64| self.eval_f(s, x, DEFAULT_EVAL_TOL).map(|e| e.value);
        let derivative = (f(t - 2.0 * step)? - f(t + 2.0 * step)? + 8.0 * (f(t + step)? - f(t - step)?)) / (12.0 * step);
        let rhs = s * self.eval_f(s - 1.0, t, DEFAULT_EVAL_TOL)?.value;
        Ok((derivative - rhs).norm() / (1.0 + rhs.norm()))
    }
}

/// Default instances of every built-in family.
pub fn catalogue() -> Vec<HFamily> {
    vec![
        HFamily::power(),
        HFamily::hurwitz(),
        HFamily::eta(),
        HFamily::character(Character::chi_minus_4()),
        HFamily::ehrhart(Shape::Box(2)).expect("d = 2 is supported"),
        HFamily::ehrhart(Shape::Simplex(2)).expect("d = 2 is supported"),
        HFamily::jacobi(0.0, 0.0, 0.5).expect("valid Legendre parameters"),
        HFamily::gauss_ideal(),
    ]
}

/// `s (s - 1) ... (s - nu + 1)`.
pub fn falling_factorial(s: Complex64, nu: u32) -> Complex64 {
    (0..nu).fold(Complex64::new(1.0, 0.0), |acc, k| acc * (s - k as f64))
}

/// `x^s` for real `x > 0`, keeping the modulus accurate to an ulp.
pub(crate) fn real_pow(x: f64, s: Complex64) -> Complex64 {
    let modulus = x.powf(s.re);
    if s.im == 0.0 {
        Complex64::new(modulus, 0.0)
    } else {
        Complex64::from_polar(modulus, s.im * x.ln())
    }
}
