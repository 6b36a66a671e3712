use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zetaref::exprel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitVerdict {
    /// `E(m) = S (1 - m^c)` holds at every m to tolerance.
    Strong,
    /// No `(S, c)` fits every m.
    WeakOnly,
    /// Every expectation vanishes: `S = 0`, `c` undetermined.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongFit {
    #[serde(rename = "S")]
    pub s_value: Option<Complex64>,
    pub c: Option<Complex64>,
    /// `(m, |E(m) - S (1 - m^c)| / (1 + |S|))`.
    pub residuals: Vec<(u32, f64)>,
    pub verdict: FitVerdict,
    /// Several roots fit within tolerance; the one with smallest `|c|` won.
    pub tie_break: bool,
}

/// Grid of Newton starting points for `c`.
const SEED_RANGE: f64 = 6.0;
const SEED_STEP: f64 = 0.5;
const NEWTON_ITERS: usize = 80;

/// `q_m(c) = (m^c - 1)/c` and its derivative, regular at `c = 0`.
fn q_and_dq(m: u32, c: Complex64) -> (Complex64, Complex64) {
    let l = (m as f64).ln();
    let z = c * l;
    let q = exprel(z) * l;
    // d/dz exprel(z) = (z e^z - e^z + 1)/z^2 = sum_k k z^{k-1}/(k+1)!
    let d = if z.norm() < 0.5 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut zp = Complex64::new(1.0, 0.0);
        let mut fact = 2.0;
        for k in 1..30 {
            let term = zp * (k as f64 / fact);
            acc += term;
            if term.norm() < 1e-17 * acc.norm() {
                break;
            }
            zp *= z;
            fact *= (k + 2) as f64;
        }
        acc
    } else {
        let e = z.exp();
        (z * e - e + 1.0) / (z * z)
    };
    (q, d * l * l)
}

/// Fits `E(m) = S (1 - m^c)` to expectations at three or more distinct `m`.
///
/// The first two points give `psi(c) = E_2 q_{m1}(c) - E_1 q_{m2}(c) = 0`,
/// which has the trivial root `c = 0` divided out. Its roots are found by
/// Newton iteration from a grid; each candidate sets `S = E_1 / (1 - m1^c)`
/// and is scored on every point. `tol` bounds the residual relative to
/// `1 + |S|`.
pub fn strong_fit(points: &[(u32, Complex64)], tol: f64) -> Result<StrongFit> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("fit tolerance {tol} must be positive")));
    }
    let mut pts: Vec<(u32, Complex64)> = points.to_vec();
    pts.sort_by_key(|p| p.0);
    pts.dedup_by_key(|p| p.0);
    if pts.len() < 3 || pts[0].0 < 2 {
        return Err(Error::InvalidParameter(
            "strong fit needs expectations at three or more distinct m >= 2".into(),
        ));
    }
    if let Some(&(m, e)) = pts.iter().find(|(_, e)| !(e.re.is_finite() && e.im.is_finite())) {
        return Err(Error::InvalidParameter(format!("expectation at m = {m} is not finite: {e}")));
    }

    let scale = pts.iter().map(|p| p.1.norm()).fold(0.0, f64::max);
    if scale < tol {
        return Ok(StrongFit {
            s_value: Some(Complex64::new(0.0, 0.0)),
            c: None,
            residuals: pts.iter().map(|&(m, e)| (m, e.norm())).collect(),
            verdict: FitVerdict::Degenerate,
            tie_break: false,
        });
    }

    let (m1, e1) = pts[0];
    let (m2, e2) = pts[1];
    let psi = |c: Complex64| {
        let (q1, d1) = q_and_dq(m1, c);
        let (q2, d2) = q_and_dq(m2, c);
        (e2 * q1 - e1 * q2, e2 * d1 - e1 * d2)
    };

    let mut roots: Vec<Complex64> = Vec::new();
    let steps = (2.0 * SEED_RANGE / SEED_STEP).round() as i32;
    for a in 0..=steps {
        for b in 0..=steps {
            let mut c = Complex64::new(-SEED_RANGE + a as f64 * SEED_STEP, -SEED_RANGE + b as f64 * SEED_STEP);
            let mut converged = false;
            for _ in 0..NEWTON_ITERS {
                let (f, df) = psi(c);
                if df.norm() == 0.0 || !df.norm().is_finite() {
                    break;
                }
                let step = f / df;
                c -= step;
                if !(c.re.is_finite() && c.im.is_finite()) || c.norm() > 1e3 {
                    break;
                }
                if step.norm() < 1e-14 * (1.0 + c.norm()) {
                    converged = true;
                    break;
                }
            }
            if converged && !roots.iter().any(|r| (r - c).norm() < 1e-8 * (1.0 + c.norm())) {
                roots.push(c);
            }
        }
    }

    let score = |c: Complex64| -> Option<(Complex64, Vec<(u32, f64)>, f64)> {
        let denom = 1.0 - Complex64::new(m1 as f64, 0.0).powc(c);
        if denom.norm() < 1e-12 {
            return None;
        }
        let s = e1 / denom;
        let res: Vec<(u32, f64)> = pts
            .iter()
            .map(|&(m, e)| (m, (e - s * (1.0 - Complex64::new(m as f64, 0.0).powc(c))).norm() / (1.0 + s.norm())))
            .collect();
        let worst = res.iter().map(|r| r.1).fold(0.0, f64::max);
        Some((s, res, worst))
    };

    let mut scored: Vec<(Complex64, Complex64, Vec<(u32, f64)>, f64)> = roots
        .into_iter()
        .filter_map(|c| score(c).map(|(s, r, w)| (c, s, r, w)))
        .collect();
    let fitting: Vec<usize> = (0..scored.len()).filter(|&i| scored[i].3 < tol).collect();

    if fitting.is_empty() {
        scored.sort_by(|a, b| a.3.total_cmp(&b.3));
        return Ok(match scored.into_iter().next() {
            Some((c, s, residuals, _)) => StrongFit {
                s_value: Some(s),
                c: Some(c),
                residuals,
                verdict: FitVerdict::WeakOnly,
                tie_break: false,
            },
            None => StrongFit {
                s_value: None,
                c: None,
                residuals: Vec::new(),
                verdict: FitVerdict::WeakOnly,
                tie_break: false,
            },
        });
    }
    let tie_break = fitting.len() > 1;
    let best = *fitting
        .iter()
        .min_by(|&&a, &&b| scored[a].0.norm().total_cmp(&scored[b].0.norm()))
        .unwrap();
    let (c, s, residuals, _) = scored.swap_remove(best);
    Ok(StrongFit {
        s_value: Some(s),
        c: Some(c),
        residuals,
        verdict: FitVerdict::Strong,
        tie_break,
    })
}
