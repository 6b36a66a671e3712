//! Coefficient generators for the example families and a shared, grow-only
//! coefficient cache.

use std::fmt;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::character::Character;
use crate::error::{Error, Result};

/// Largest supported polytope dimension.
pub const MAX_DIMENSION: u32 = 4;

/// Lattice polytopes with an Ehrhart coefficient rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "shape", content = "d")]
pub enum Shape {
    /// The unit cube `[0,1]^d`.
    Box(u32),
    /// The standard simplex `{x >= 0, x_1 + ... + x_d <= 1}`.
    Simplex(u32),
}

impl Shape {
    pub fn dimension(&self) -> u32 {
        match *self {
            Shape::Box(d) | Shape::Simplex(d) => d,
        }
    }
}

pub fn constant_coeff(_n: u64) -> f64 {
    1.0
}

/// `(-1)^(n-1)` for `n >= 1`.
pub fn alternating_coeff(n: u64) -> f64 {
    if n % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

pub fn character_coeff(chi: &Character, n: u64) -> Complex64 {
    chi.value(n)
}

/// Number of lattice points in the dilate `n P`.
pub fn ehrhart_coeff(shape: Shape, n: u64) -> Result<f64> {
    let d = shape.dimension();
    if d > MAX_DIMENSION {
        return Err(Error::DimensionTooLarge(d));
    }
    Ok(match shape {
        Shape::Box(d) => ((n + 1) as f64).powi(d as i32),
        Shape::Simplex(d) => {
            // C(n + d, d)
            let mut acc = 1.0;
            for i in 1..=d as u64 {
                acc = acc * (n + i) as f64 / i as f64;
            }
            acc.round()
        }
    })
}

fn check_jacobi(a: f64, b: f64, x: f64) -> Result<()> {
    if !(a > -1.0 && b > -1.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Jacobi parameters must satisfy a, b > -1 (got a = {a}, b = {b})"
        )));
    }
    if !(x > -1.0 && x < 1.0) {
        return Err(Error::InvalidParameter(format!("Jacobi argument x = {x} outside (-1, 1)")));
    }
    Ok(())
}

/// Jacobi polynomials `P_0, ..., P_{len-1}` at `x` by the three-term recurrence.
fn jacobi_values(a: f64, b: f64, x: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut prev = 1.0;
    let mut cur = (a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0;
    out.push(prev);
    if len > 1 {
        out.push(cur);
    }
    for n in 2..len {
        let n = n as f64;
        let ab = 2.0 * n + a + b;
        let c1 = 2.0 * n * (n + a + b) * (ab - 2.0);
        let c2 = (ab - 1.0) * (ab * (ab - 2.0) * x + a * a - b * b);
        let c3 = 2.0 * (n + a - 1.0) * (n + b - 1.0) * ab;
        let next = (c2 * cur - c3 * prev) / c1;
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out.truncate(len);
    out
}

/// Jacobi polynomial `P_n^{(a,b)}(x)`.
pub fn jacobi_coeff(a: f64, b: f64, x: f64, n: u64) -> Result<f64> {
    check_jacobi(a, b, x)?;
    Ok(*jacobi_values(a, b, x, n as usize + 1).last().expect("nonempty"))
}

fn chi4(d: u64) -> i64 {
    match d % 4 {
        1 => 1,
        3 => -1,
        _ => 0,
    }
}

/// Number of ideals of norm `n` in the Gaussian integers: `sum_{d | n} chi_{-4}(d)`.
pub fn gauss_ideal_coeff(n: u64) -> Result<i64> {
    if n == 0 {
        return Err(Error::InvalidParameter("gauss_ideal_coeff needs n >= 1".into()));
    }
    let mut acc = 0;
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            acc += chi4(d);
            if d * d != n {
                acc += chi4(n / d);
            }
        }
        d += 1;
    }
    Ok(acc)
}

/// `c_1, ..., c_len` of the ideal-count sequence by a divisor sieve.
fn gauss_ideal_sieve(len: usize) -> Vec<f64> {
    let mut out = vec![0i64; len + 1];
    for d in (1..=len).step_by(2) {
        let w = chi4(d as u64);
        for multiple in (d..=len).step_by(d) {
            out[multiple] += w;
        }
    }
    out[1..].iter().map(|&v| v as f64).collect()
}

/// User-supplied coefficient rule `n -> c_n` for `n >= 1`.
pub type CoeffFn = dyn Fn(u64) -> Complex64 + Send + Sync;

/// The coefficient sequence `c_1, c_2, ...` of a family.
#[derive(Clone)]
pub enum CoeffRule {
    /// `c_1 = 1`, all others zero (the power family).
    Delta,
    Constant,
    Alternating,
    Character(Character),
    Ehrhart(Shape),
    Jacobi { a: f64, b: f64, x: f64 },
    GaussIdeal,
    Custom(Arc<CoeffFn>),
}

impl fmt::Debug for CoeffRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffRule::Delta => write!(f, "Delta"),
            CoeffRule::Constant => write!(f, "Constant"),
            CoeffRule::Alternating => write!(f, "Alternating"),
            CoeffRule::Character(chi) => write!(f, "Character(mod {})", chi.modulus()),
            CoeffRule::Ehrhart(shape) => write!(f, "Ehrhart({shape:?})"),
            CoeffRule::Jacobi { a, b, x } => write!(f, "Jacobi({a}, {b}, {x})"),
            CoeffRule::GaussIdeal => write!(f, "GaussIdeal"),
            CoeffRule::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl CoeffRule {
    /// `c_1, ..., c_len`.
    fn generate(&self, len: usize) -> Vec<Complex64> {
        let real = |v: f64| Complex64::new(v, 0.0);
        match self {
            CoeffRule::Delta => (1..=len as u64).map(|n| real(if n == 1 { 1.0 } else { 0.0 })).collect(),
            CoeffRule::Constant => (1..=len as u64).map(|n| real(constant_coeff(n))).collect(),
            CoeffRule::Alternating => (1..=len as u64).map(|n| real(alternating_coeff(n))).collect(),
            CoeffRule::Character(chi) => (1..=len as u64).map(|n| character_coeff(chi, n)).collect(),
            CoeffRule::Ehrhart(shape) => (1..=len as u64)
                .map(|n| real(ehrhart_coeff(*shape, n).expect("dimension checked at construction")))
                .collect(),
            // c(z) = sum_{i>=0} P_i z^i, so c_{i+1} = P_i.
            CoeffRule::Jacobi { a, b, x } => jacobi_values(*a, *b, *x, len).into_iter().map(real).collect(),
            CoeffRule::GaussIdeal => gauss_ideal_sieve(len).into_iter().map(real).collect(),
            CoeffRule::Custom(rule) => (1..=len as u64).map(|n| rule(n)).collect(),
        }
    }
}

/// Grow-only table of `c_1, c_2, ...`, shared between clones of a family.
///
/// Readers take a snapshot `Arc` and release the lock before iterating.
#[derive(Debug)]
pub(crate) struct CoeffCache {
    rule: CoeffRule,
    table: RwLock<Arc<Vec<Complex64>>>,
}

impl CoeffCache {
    pub(crate) fn new(rule: CoeffRule) -> Self {
        CoeffCache {
            rule,
            table: RwLock::new(Arc::new(Vec::new())),
        }
    }

    pub(crate) fn rule(&self) -> &CoeffRule {
        &self.rule
    }

    /// Snapshot holding at least `len` coefficients.
    pub(crate) fn snapshot(&self, len: usize) -> Arc<Vec<Complex64>> {
        {
            let table = self.table.read().unwrap_or_else(|e| e.into_inner());
            if table.len() >= len {
                return Arc::clone(&table);
            }
        }
        let mut table = self.table.write().unwrap_or_else(|e| e.into_inner());
        if table.len() < len {
            let target = len.max(2 * table.len()).max(64);
            *table = Arc::new(self.rule.generate(target));
        }
        Arc::clone(&table)
    }
}
