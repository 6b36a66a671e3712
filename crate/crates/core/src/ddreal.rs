//! Real double-double arithmetic, just enough for an accurate `x^s`.
//!
//! Forward differences of sampled `t^s` amplify independent rounding errors
//! by up to `2^n`; computing the phase `Im(s) ln x` in double-double keeps
//! each sample within about an ulp.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct D2 {
    hi: f64,
    lo: f64,
}

const LN2: D2 = D2 {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};
const FRAC_PI_2: D2 = D2 {
    hi: std::f64::consts::FRAC_PI_2,
    lo: 6.123_233_995_736_766e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl D2 {
    pub(crate) fn from_f64(x: f64) -> Self {
        D2 { hi: x, lo: 0.0 }
    }

    pub(crate) fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn add(self, o: D2) -> D2 {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        D2 { hi, lo }
    }

    fn neg(self) -> D2 {
        D2 {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn sub(self, o: D2) -> D2 {
        self.add(o.neg())
    }

    fn mul(self, o: D2) -> D2 {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let (hi, lo) = quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi));
        D2 { hi, lo }
    }

    fn mul_f64(self, k: f64) -> D2 {
        self.mul(D2::from_f64(k))
    }

    fn div(self, o: D2) -> D2 {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        D2 { hi, lo }.add(D2::from_f64(q3))
    }

    /// Natural logarithm of a positive finite `x`.
    pub(crate) fn ln(x: f64) -> D2 {
        // x = m 2^k with m in [sqrt(1/2), sqrt(2)); ln m = 2 atanh((m-1)/(m+1)).
        let mut k = x.log2().round() as i32;
        let mut m = x / 2f64.powi(k);
        if m < std::f64::consts::FRAC_1_SQRT_2 {
            m *= 2.0;
            k -= 1;
        } else if m > std::f64::consts::SQRT_2 {
            m /= 2.0;
            k += 1;
        }
        let num = D2::from_f64(m).sub(D2::from_f64(1.0));
        let den = D2::from_f64(m).add(D2::from_f64(1.0));
        let u = num.div(den);
        let u2 = u.mul(u);
        let mut power = u;
        let mut acc = u;
        for j in 1..40 {
            power = power.mul(u2);
            let term = power.div(D2::from_f64((2 * j + 1) as f64));
            acc = acc.add(term);
            if term.hi.abs() < 1e-34 * acc.hi.abs().max(1e-300) {
                break;
            }
        }
        acc.mul_f64(2.0).add(LN2.mul_f64(k as f64))
    }

    /// `(sin x, cos x)` for moderate `|x|`.
    pub(crate) fn sin_cos(self) -> (f64, f64) {
        let q = (self.hi / FRAC_PI_2.hi).round();
        let r = self.sub(FRAC_PI_2.mul_f64(q));
        let r2 = r.mul(r);
        let mut sin = r;
        let mut cos = D2::from_f64(1.0);
        let mut term_s = r;
        let mut term_c = D2::from_f64(1.0);
        for j in 1..30 {
            let j = j as f64;
            term_s = term_s.mul(r2).div(D2::from_f64(-(2.0 * j) * (2.0 * j + 1.0)));
            term_c = term_c.mul(r2).div(D2::from_f64(-(2.0 * j - 1.0) * (2.0 * j)));
            sin = sin.add(term_s);
            cos = cos.add(term_c);
            if term_c.hi.abs() < 1e-34 && term_s.hi.abs() < 1e-34 {
                break;
            }
        }
        let (s, c) = (sin.to_f64(), cos.to_f64());
        match (q as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

/// `x^s` for real `x > 0` with the phase computed in double-double.
pub(crate) fn accurate_pow(x: f64, s: Complex64) -> Complex64 {
    if s.im == 0.0 {
        return Complex64::new(x.powf(s.re), 0.0);
    }
    let modulus = x.powf(s.re);
    let theta = D2::ln(x).mul_f64(s.im);
    let (sin, cos) = theta.sin_cos();
    Complex64::new(modulus * cos, modulus * sin)
}
