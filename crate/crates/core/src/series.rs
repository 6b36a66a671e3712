//! Truncated-series bookkeeping and error-free summation helpers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Outcome of truncating an infinite series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeriesStatus {
    /// Terms fell below the requested tolerance.
    Converged,
    /// The series is a finite sum (all remaining terms vanish exactly).
    Terminated,
    /// Term magnitudes grow; the value is the last partial sum and must not be used.
    Diverged,
    /// The term budget ran out, or the terms sank into the rounding floor,
    /// before the tolerance was met.
    Stagnated,
}

/// Value of a truncated series together with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesEval {
    pub value: Complex64,
    pub status: SeriesStatus,
    pub terms_used: usize,
    pub tail_estimate: f64,
    pub rounding_floor: f64,
}

impl SeriesEval {
    pub fn exact(value: Complex64) -> Self {
        SeriesEval {
            value,
            status: SeriesStatus::Converged,
            terms_used: 0,
            tail_estimate: 0.0,
            rounding_floor: 0.0,
        }
    }

    /// True unless the series diverged.
    pub fn is_usable(&self) -> bool {
        self.status != SeriesStatus::Diverged
    }

    pub(crate) fn scaled(mut self, factor: Complex64) -> Self {
        let k = factor.norm();
        self.value *= factor;
        self.tail_estimate *= k;
        self.rounding_floor *= k;
        self
    }
}

pub(crate) fn worst_status(a: SeriesStatus, b: SeriesStatus) -> SeriesStatus {
    use SeriesStatus::*;
    let rank = |s: SeriesStatus| match s {
        Terminated => 0,
        Converged => 1,
        Stagnated => 2,
        Diverged => 3,
    };
    if rank(a) >= rank(b) {
        a
    } else {
        b
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// Complex double-double: `hi + lo` with `|lo| <= ulp(hi)/2` componentwise.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: Complex64,
    pub lo: Complex64,
}

impl Dd {
    pub const ZERO: Dd = Dd {
        hi: Complex64::new(0.0, 0.0),
        lo: Complex64::new(0.0, 0.0),
    };

    pub fn new(hi: Complex64, lo: Complex64) -> Self {
        let (rh, rl) = fast_norm(hi.re, lo.re);
        let (ih, il) = fast_norm(hi.im, lo.im);
        Dd {
            hi: Complex64::new(rh, ih),
            lo: Complex64::new(rl, il),
        }
    }

    pub fn from_value(v: Complex64) -> Self {
        Dd {
            hi: v,
            lo: Complex64::new(0.0, 0.0),
        }
    }

    pub fn value(&self) -> Complex64 {
        self.hi + self.lo
    }

    pub fn is_zero(&self) -> bool {
        self.hi == Complex64::new(0.0, 0.0) && self.lo == Complex64::new(0.0, 0.0)
    }

    pub fn add(self, other: Dd) -> Dd {
        let (rh, rl) = dd_add(self.hi.re, self.lo.re, other.hi.re, other.lo.re);
        let (ih, il) = dd_add(self.hi.im, self.lo.im, other.hi.im, other.lo.im);
        Dd {
            hi: Complex64::new(rh, ih),
            lo: Complex64::new(rl, il),
        }
    }

    pub fn sub(self, other: Dd) -> Dd {
        self.add(other.neg())
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn add_value(self, v: Complex64) -> Dd {
        self.add(Dd::from_value(v))
    }

    /// Exact-product scaling by a real factor (error-free via fused multiply-add).
    pub fn scale_real(self, k: f64) -> Dd {
        let part = |hi: f64, lo: f64| {
            let p = hi * k;
            let e = hi.mul_add(k, -p);
            fast_norm(p, e + lo * k)
        };
        let (rh, rl) = part(self.hi.re, self.lo.re);
        let (ih, il) = part(self.hi.im, self.lo.im);
        Dd {
            hi: Complex64::new(rh, ih),
            lo: Complex64::new(rl, il),
        }
    }
}

#[inline]
fn fast_norm(hi: f64, lo: f64) -> (f64, f64) {
    if hi.abs() >= lo.abs() {
        fast_two_sum(hi, lo)
    } else {
        fast_two_sum(lo, hi)
    }
}

#[inline]
fn dd_add(ahi: f64, alo: f64, bhi: f64, blo: f64) -> (f64, f64) {
    let (s, e) = two_sum(ahi, bhi);
    let (t, f) = two_sum(alo, blo);
    let (s, e) = fast_norm(s, e + t);
    fast_norm(s, e + f)
}

/// Running sum of complex terms carried in double-double precision.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    acc: Dd,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, term: Complex64) {
        self.acc = self.acc.add_value(term);
    }

    pub fn total(&self) -> Complex64 {
        self.acc.value()
    }

    pub fn as_dd(&self) -> Dd {
        self.acc
    }
}

impl FromIterator<Complex64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for t in iter {
            s.add(t);
        }
        s
    }
}
