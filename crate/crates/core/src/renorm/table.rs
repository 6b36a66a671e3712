use num_complex::Complex64;

use crate::diffcalc::{newton_shift, SeqWindow};
use crate::error::{Error, Result};
use crate::hfun::HFamily;
use crate::series::{worst_status, Dd, SeriesStatus};

/// Prefix sums `sum_{i<=n} a_i` of a term sequence, kept in double-double so
/// that differences of large partial sums keep their low digits.
#[derive(Debug, Clone)]
pub struct PartialSums {
    prefix: Vec<Dd>,
    terms: Vec<Complex64>,
}

impl PartialSums {
    /// `terms[n] = a_n`; `a_0` is taken as given (normally 0).
    pub fn new(terms: Vec<Complex64>) -> Result<Self> {
        if let Some((index, &value)) = terms
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::NonFiniteValue { index, value });
        }
        let mut acc = Dd::ZERO;
        let prefix = terms
            .iter()
            .map(|&a| {
                acc = acc.add_value(a);
                acc
            })
            .collect();
        Ok(PartialSums { prefix, terms })
    }

    /// Largest index `n` with a known term.
    pub fn n_max(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn terms(&self) -> &[Complex64] {
        &self.terms
    }

    pub fn prefix(&self, n: usize) -> Dd {
        self.prefix[n]
    }

    /// `sum_{i=0}^{k} a_{m i}`.
    fn subsampled(&self, m: usize, k: usize) -> Dd {
        let mut acc = Dd::ZERO;
        for i in 0..=k {
            acc = acc.add_value(self.terms[m * i]);
        }
        acc
    }

    /// Raw class sums `s_[j],n` for `n = j + m k <= n_max`.
    pub fn class_table(&self, m: u32, j: u32, rho: u8, n_max: usize) -> Result<ResidueClassTable> {
        check_class(m, j, rho)?;
        if n_max > self.n_max() {
            return Err(Error::InsufficientWindow {
                len: self.terms.len(),
                needed: n_max + 1,
            });
        }
        let (mu, ju) = (m as usize, j as usize);
        let factor = (m as f64).powi(rho as i32);
        let mut raw = Vec::new();
        let mut sub = Dd::ZERO;
        let mut k = 0;
        while ju + mu * k <= n_max {
            sub = sub.add_value(self.terms[mu * k]);
            raw.push(self.prefix[ju + mu * k].sub(sub.scale_real(factor)));
            k += 1;
        }
        debug_assert!(raw.is_empty() || sub == self.subsampled(mu, k - 1));
        Ok(ResidueClassTable {
            m,
            j,
            rho,
            raw,
            extended: Vec::new(),
            extension_status: Vec::new(),
        })
    }
}

fn check_class(m: u32, j: u32, rho: u8) -> Result<()> {
    if m < 1 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    if j >= m {
        return Err(Error::InvalidParameter(format!("class j = {j} outside [0, {m})")));
    }
    if rho > 1 {
        return Err(Error::InvalidParameter(format!("rho must be 0 or 1 (got {rho})")));
    }
    Ok(())
}

/// Sums on one residue class `[j]` modulo `m` and their extension to all
/// integers `n >= j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueClassTable {
    m: u32,
    j: u32,
    rho: u8,
    /// `raw[k] = s_[j], j + m k`.
    raw: Vec<Dd>,
    /// `extended[n - j]`, filled by [`ResidueClassTable::extend`].
    extended: Vec<Complex64>,
    extension_status: Vec<SeriesStatus>,
}

impl ResidueClassTable {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn rho(&self) -> u8 {
        self.rho
    }

    /// The class-indexed sequence `k -> s_[j], j + m k`.
    pub fn class_sequence(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.raw.iter().map(Dd::value)
    }

    /// `s_[j],n` for `n` in the class, if tabulated.
    pub fn raw(&self, n: usize) -> Option<Complex64> {
        let (m, j) = (self.m as usize, self.j as usize);
        if n < j || !(n - j).is_multiple_of(m) {
            return None;
        }
        self.raw.get((n - j) / m).map(Dd::value)
    }

    /// Extended value at `n`, once [`ResidueClassTable::extend`] has run.
    pub fn extended(&self, n: usize) -> Option<Complex64> {
        let j = self.j as usize;
        if n < j {
            return None;
        }
        self.extended.get(n - j).copied()
    }

    pub fn extension_status(&self, n: usize) -> Option<SeriesStatus> {
        let j = self.j as usize;
        if n < j {
            return None;
        }
        self.extension_status.get(n - j).copied()
    }

    /// Worst status over every extended index.
    pub fn worst_extension_status(&self) -> SeriesStatus {
        self.extension_status
            .iter()
            .copied()
            .fold(SeriesStatus::Terminated, worst_status)
    }

    pub fn diverged(&self) -> bool {
        self.extension_status.contains(&SeriesStatus::Diverged)
    }

    /// Fills the extension for `n in [j, n_eval]` by Newton shifts of the
    /// class sequence from base `floor((n-j)/m)` by `h = {(n-j)/m}`.
    ///
    /// With `fallback_alternating`, a divergent shift is retried on
    /// `(-1)^k s_k`, and the result multiplied by `(-1)^k0 e^{i pi h}`, the
    /// principal-branch value of `(1 + Δ)^h` on the alternating part.
    pub fn extend(&mut self, n_eval: usize, tol: f64, max_terms: usize, fallback_alternating: bool) -> Result<()> {
        let (m, j) = (self.m as usize, self.j as usize);
        if n_eval < j {
            self.extended.clear();
            self.extension_status.clear();
            return Ok(());
        }
        let last_base = (n_eval - j) / m;
        let needed = last_base + max_terms + 1;
        if self.raw.len() < needed {
            return Err(Error::InsufficientWindow {
                len: self.raw.len(),
                needed,
            });
        }
        let mut extended = Vec::with_capacity(n_eval - j + 1);
        let mut status = Vec::with_capacity(n_eval - j + 1);
        for n in j..=n_eval {
            let k0 = (n - j) / m;
            let h = ((n - j) % m) as f64 / m as f64;
            let window = SeqWindow::from_dd(k0, self.raw[k0..=k0 + max_terms].to_vec())?;
            let mut shift = newton_shift(&window, h, tol, max_terms)?;
            if shift.status == SeriesStatus::Diverged && fallback_alternating {
                let flipped: Vec<Dd> = self.raw[k0..=k0 + max_terms]
                    .iter()
                    .enumerate()
                    .map(|(i, v)| if (k0 + i) % 2 == 0 { *v } else { v.neg() })
                    .collect();
                let alt = newton_shift(&SeqWindow::from_dd(k0, flipped)?, h, tol, max_terms)?;
                let sign = if k0 % 2 == 0 { 1.0 } else { -1.0 };
                let phase = Complex64::from_polar(sign, std::f64::consts::PI * h);
                shift = alt;
                shift.value *= phase;
            }
            extended.push(shift.value);
            status.push(shift.status);
        }
        self.extended = extended;
        self.extension_status = status;
        Ok(())
    }
}

/// Raw class sums of the family's term sequence `a_n = f(s-1, t0+n-1)`.
pub fn class_partial_sums(
    fam: &HFamily,
    s: Complex64,
    t0: f64,
    m: u32,
    j: u32,
    rho: u8,
    n_max: usize,
) -> Result<ResidueClassTable> {
    check_class(m, j, rho)?;
    PartialSums::new(fam.terms(s, t0, n_max)?)?.class_table(m, j, rho, n_max)
}

/// `X_a(n) = (1/m) sum_j s_[j](n)` over extended tables for `j = 0..m`.
pub fn sample_x(tables: &[ResidueClassTable], n: usize) -> Result<Complex64> {
    let m = tables.len();
    if m == 0 || tables.iter().any(|t| t.m as usize != m) {
        return Err(Error::InvalidParameter("sample_x needs one table per class j = 0..m".into()));
    }
    let mut acc = Dd::ZERO;
    for table in tables {
        let v = table.extended(n).ok_or_else(|| {
            Error::InvalidParameter(format!("class {} is not extended to n = {n}", table.j))
        })?;
        acc = acc.add_value(v);
    }
    Ok(acc.value() / m as f64)
}

/// Terms of Grandi's series `a_0 = 0`, `a_n = (-1)^(n+1)`.
pub fn grandi_terms(n_max: usize) -> Vec<Complex64> {
    (0..=n_max)
        .map(|n| match n {
            0 => 0.0,
            n if n % 2 == 1 => 1.0,
            _ => -1.0,
        })
        .map(|v| Complex64::new(v, 0.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn linear_sums(n_max: usize) -> PartialSums {
        PartialSums::new((0..=n_max).map(|n| c(n as f64)).collect()).unwrap()
    }

    #[test]
    fn class_sum_examples() {
        let p = linear_sums(20);
        let t0 = p.class_table(2, 0, 1, 20).unwrap();
        assert_eq!(t0.raw(4), Some(c(-2.0)));
        assert_eq!(t0.raw(5), None);
        let t1 = p.class_table(2, 1, 1, 20).unwrap();
        assert_eq!(t1.raw(5), Some(c(3.0)));
        let r0 = p.class_table(2, 0, 0, 20).unwrap();
        assert_eq!(r0.raw(4), Some(c(4.0)));
        // Same via the family interface: a_n = n is the power family at s = 2.
        let fam = class_partial_sums(&HFamily::power(), c(2.0), 1.0, 2, 1, 1, 20).unwrap();
        assert_eq!(fam.raw(5), Some(c(3.0)));
        assert!(p.class_table(2, 2, 1, 20).is_err());
        assert!(p.class_table(2, 0, 2, 20).is_err());
    }

    #[test]
    fn linear_class_sums_extend_linearly() {
        let p = linear_sums(200);
        let mut t0 = p.class_table(2, 0, 1, 200).unwrap();
        let mut t1 = p.class_table(2, 1, 1, 200).unwrap();
        t0.extend(60, 1e-13, 40, false).unwrap();
        t1.extend(60, 1e-13, 40, false).unwrap();
        assert_eq!(t0.extended(3), Some(c(-1.5)));
        assert_eq!(t1.extended(4), Some(c(2.5)));
        // Raw values are reproduced exactly on the class.
        for n in (0..=60).step_by(2) {
            assert_eq!(t0.extended(n), t0.raw(n));
        }
        assert_eq!(sample_x(&[t0, t1], 10).unwrap(), c(0.25));
    }

    #[test]
    fn quadratic_x_without_rescaling() {
        let p = linear_sums(200);
        let mut tables: Vec<_> = (0..2).map(|j| p.class_table(2, j, 0, 200).unwrap()).collect();
        for t in &mut tables {
            t.extend(40, 1e-13, 40, false).unwrap();
        }
        // n^2/4 + n/4 + 1/8 at n = 10
        assert_eq!(sample_x(&tables, 10).unwrap(), c(27.625));
    }

    #[test]
    fn constant_class_sums_extend_to_the_constant() {
        let p = PartialSums::new(std::iter::once(c(0.0)).chain(std::iter::repeat_n(c(0.0), 200)).collect()).unwrap();
        let mut t = p.class_table(3, 1, 0, 200).unwrap();
        t.extend(30, 1e-13, 40, false).unwrap();
        for n in 1..=30 {
            assert_eq!(t.extended(n), Some(c(0.0)));
            assert_eq!(t.extension_status(n), Some(SeriesStatus::Terminated));
        }
    }

    #[test]
    fn grandi_odd_class_diverges() {
        let p = PartialSums::new(grandi_terms(300)).unwrap();
        let mut t = p.class_table(3, 1, 0, 300).unwrap();
        let seq: Vec<_> = t.class_sequence().take(6).collect();
        assert_eq!(seq, vec![c(1.0), c(-1.0), c(1.0), c(-1.0), c(1.0), c(-1.0)]);
        t.extend(60, 1e-13, 40, false).unwrap();
        assert!(t.diverged());
        // The fallback sums the alternating part analytically: (-1)^{k0 + h} on the principal branch.
        t.extend(60, 1e-13, 40, true).unwrap();
        assert!(!t.diverged());
        let v = t.extended(2).unwrap(); // k0 = 0, h = 1/3
        let expected = Complex64::from_polar(1.0, std::f64::consts::PI / 3.0);
        assert!((v - expected).norm() < 1e-14);
    }

    #[test]
    fn short_tables_are_rejected() {
        let p = linear_sums(50);
        let mut t = p.class_table(2, 0, 1, 50).unwrap();
        assert!(matches!(t.extend(40, 1e-13, 40, false), Err(Error::InsufficientWindow { .. })));
    }
}
