use num_complex::Complex64;
use probrenorm::bernoulli::{bernoulli_apply, identity_residuals, series_sum_a, BEvalConfig};
use probrenorm::hfun::{catalogue, ehrhart_coeff, gauss_ideal_coeff, Character, HFamily, Shape};
use probrenorm::renorm::{
    grandi_terms, strong_fit, weak_report, weak_report_terms, FitVerdict, RenormConfig, Verdict,
};
use probrenorm::zetaref::{
    bernoulli_polynomial, dirichlet_l, hurwitz_pole_product, hurwitz_zeta, EulerMaclaurinConfig,
};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Operators,
    Oracle,
    Families,
    Renorm,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Operators => "operators",
            Suite::Oracle => "oracle",
            Suite::Families => "families",
            Suite::Renorm => "renorm",
        }
    }
}

/// One residual against its bound. `residual` is `None` when the check could
/// not be evaluated; `note` then says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub check: String,
    pub residual: Option<f64>,
    pub bound: f64,
    pub pass: bool,
    pub note: Option<String>,
}

struct Recorder {
    suite: &'static str,
    checks: Vec<Check>,
}

impl Recorder {
    fn new(suite: Suite) -> Self {
        Recorder {
            suite: suite.name(),
            checks: Vec::new(),
        }
    }

    fn record(&mut self, check: String, result: probrenorm::Result<f64>, bound: f64) {
        let (residual, note) = match result {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let pass = residual.is_some_and(|r| r <= bound);
        self.checks.push(Check {
            suite: self.suite.to_string(),
            check,
            residual,
            bound,
            pass,
            note,
        });
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn run(suite: Suite) -> Vec<Check> {
    let mut rec = Recorder::new(suite);
    match suite {
        Suite::Operators => operators(&mut rec),
        Suite::Oracle => oracle(&mut rec),
        Suite::Families => families(&mut rec),
        Suite::Renorm => renorm(&mut rec),
    }
    rec.checks
}

/// Grid of admissible `s` per family for the identity checks.
pub fn identity_grid(fam: &HFamily) -> Vec<Complex64> {
    match fam.name() {
        "power" | "hurwitz" => vec![c(2.0, 0.0), c(0.5, 1.0), c(-2.0, 0.0), c(-2.5, 1.0)],
        _ if fam.has_closed_form() => vec![c(-2.0, 0.0), c(-2.5, 1.0)],
        _ => vec![c(-8.0, 0.0), c(-7.5, 1.0)],
    }
}

pub fn identity_bound(fam: &HFamily) -> f64 {
    if fam.has_closed_form() {
        1e-8
    } else {
        1e-6
    }
}

fn operators(rec: &mut Recorder) {
    let cfg = BEvalConfig::default();
    for fam in catalogue() {
        let bound = identity_bound(&fam);
        for s in identity_grid(&fam) {
            match identity_residuals(&fam, s, 1.5, 3, 1.0 / 3.0, &cfg) {
                Ok(r) => {
                    for (name, value) in r.entries() {
                        if let Some(v) = value {
                            rec.record(format!("{} s={s} {name}", fam.name()), Ok(v), bound);
                        }
                    }
                }
                Err(e) => rec.record(format!("{} s={s}", fam.name()), Err(e), bound),
            }
        }
    }
}

/// Relative above magnitude one, absolute below: zeta at negative `s` can be
/// far smaller than the cancellation error of its own evaluation.
fn mixed_residual(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

fn oracle(rec: &mut Recorder) {
    let zcfg = EulerMaclaurinConfig::default();
    let one = c(1.0, 0.0);
    let grid_s = [c(-3.0, 0.0), c(-1.0, 0.0), c(0.5, 0.0), c(2.0, 0.0), c(2.0, 3.0)];
    for s in grid_s {
        for t in [0.25, 1.0, 2.0, 7.5] {
            let r = (|| {
                let lhs = hurwitz_zeta(s, t, &zcfg)?.value - hurwitz_zeta(s, t + 1.0, &zcfg)?.value;
                Ok(mixed_residual(lhs, c(t, 0.0).powc(-s)))
            })();
            rec.record(format!("hurwitz recurrence s={s} t={t}"), r, 1e-10);
            for m in [2u32, 3] {
                let r = (|| {
                    let mf = m as f64;
                    let mut sum = c(0.0, 0.0);
                    for i in 0..m {
                        sum += hurwitz_zeta(s, (t + i as f64) / mf, &zcfg)?.value;
                    }
                    Ok(mixed_residual(sum, c(mf, 0.0).powc(s) * hurwitz_zeta(s, t, &zcfg)?.value))
                })();
                rec.record(format!("hurwitz distribution s={s} t={t} m={m}"), r, 1e-9);
            }
        }
    }
    for n in 0..=3usize {
        for t in [0.5, 1.0, 2.0] {
            let r = (|| {
                let z = hurwitz_zeta(c(-(n as f64), 0.0), t, &zcfg)?.value;
                let b = -bernoulli_polynomial(n + 1, t)? / (n + 1) as f64;
                Ok((z - b).norm() / b.abs().max(1.0))
            })();
            rec.record(format!("bernoulli polynomial n={n} t={t}"), r, 1e-10);
        }
    }
    let cfg = BEvalConfig::default();
    let power = HFamily::power();
    for s in [c(-2.0, 0.0), c(-0.5, 0.0), c(0.5, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(2.0, 3.0)] {
        for t in [0.5, 1.0, 2.0, 10.0] {
            let r = (|| {
                let b = bernoulli_apply(&power, s, t, &cfg)?.value;
                let reference = hurwitz_pole_product(1.0 - s, &[(one, t)], &zcfg)?.value;
                Ok((b - reference).norm())
            })();
            rec.record(format!("B t^s oracle s={s} t={t}"), r, 1e-8);
            let r = (|| {
                let n = cfg.shift_for(t);
                let a = bernoulli_apply(&power, s, t, &BEvalConfig { shift_base: Some(n), ..cfg })?.value;
                let b = bernoulli_apply(&power, s, t, &BEvalConfig { shift_base: Some(n + 7), ..cfg })?.value;
                Ok((a - b).norm())
            })();
            rec.record(format!("pull-back N vs N+7 s={s} t={t}"), r, 1e-9);
        }
    }
}

fn lattice_count(shape: Shape, n: u64) -> u64 {
    match shape {
        Shape::Box(d) => (0..d).fold(1, |acc, _| acc * (n + 1)),
        Shape::Simplex(d) => {
            // points with non-negative coordinates summing to at most n
            let mut count = 0;
            let mut stack = vec![(d, n)];
            while let Some((dims, left)) = stack.pop() {
                if dims == 0 {
                    count += 1;
                    continue;
                }
                for used in 0..=left {
                    stack.push((dims - 1, left - used));
                }
            }
            count
        }
    }
}

fn ideals_of_norm(n: i64) -> i64 {
    // r2(n) / 4 counts ideals of norm n in Z[i]
    let mut r2 = 0;
    let b = (n as f64).sqrt() as i64 + 1;
    for x in -b..=b {
        for y in -b..=b {
            if x * x + y * y == n {
                r2 += 1;
            }
        }
    }
    r2 / 4
}

fn families(rec: &mut Recorder) {
    for fam in catalogue() {
        let s = if fam.has_closed_form() { c(-2.5, 0.5) } else { c(-8.0, 0.5) };
        rec.record(format!("{} h-derivative s={s}", fam.name()), fam.check_h_derivative(s, 2.0, 1e-2), 1e-6);
    }
    for shape in [Shape::Box(2), Shape::Simplex(2), Shape::Box(3), Shape::Simplex(3)] {
        let r = (|| {
            let mut worst = 0.0f64;
            for n in 0..=20 {
                worst = worst.max((ehrhart_coeff(shape, n)? - lattice_count(shape, n) as f64).abs());
            }
            Ok(worst)
        })();
        rec.record(format!("ehrhart {shape:?} n<=20 lattice counts"), r, 0.0);
    }
    let r = (|| {
        let mut worst = 0i64;
        for n in 1..=60 {
            worst = worst.max((gauss_ideal_coeff(n as u64)? - ideals_of_norm(n)).abs());
        }
        Ok(worst as f64)
    })();
    rec.record("gauss_ideal n<=60 ideal counts".into(), r, 0.0);
    let r = (|| Ok(((gauss_ideal_coeff(5)? - 2).abs() + gauss_ideal_coeff(3)?.abs()) as f64))();
    rec.record("gauss_ideal c5=2 c3=0".into(), r, 0.0);
    let r = (|| {
        let chi = Character::chi_minus_4();
        let l = dirichlet_l(c(1.0, 0.0), chi.values(), &EulerMaclaurinConfig::default())?.value;
        Ok((l - std::f64::consts::FRAC_PI_4).norm())
    })();
    rec.record("L(1, chi_-4) = pi/4".into(), r, 1e-12);
}

fn renorm(rec: &mut Recorder) {
    let cfg = RenormConfig::default();
    let zcfg = EulerMaclaurinConfig::default();
    let power = HFamily::power();
    let m_list = [2, 3, 4, 5, 6];

    // Constant class averages for rho = 1.
    match weak_report(&power, c(2.0, 0.0), 1.0, 1, &[2], &cfg) {
        Ok(r) => {
            rec.record("s=2 m=2 X(n) constant on [2,160]".into(), Ok(r.per_m[0].full_range_deviation), 1e-10);
            let e = r.per_m[0].expectation.map_or(f64::INFINITY, |e| (e - 0.25).norm());
            rec.record("s=2 m=2 E = 1/4".into(), Ok(e), 1e-12);
        }
        Err(e) => rec.record("s=2 m=2".into(), Err(e), 1e-10),
    }
    for s in [c(3.0, 0.0), c(0.5, 0.0), c(-1.0, 0.0), c(2.0, 1.0)] {
        let z = match hurwitz_zeta(1.0 - s, 1.0, &zcfg) {
            Ok(z) => z.value,
            Err(e) => {
                rec.record(format!("s={s} zeta(1-s)"), Err(e), 1e-6);
                continue;
            }
        };
        match weak_report(&power, s, 1.0, 1, &m_list, &cfg) {
            Ok(r) => {
                for m in &r.per_m {
                    rec.record(format!("s={s} m={} tail constancy", m.m), Ok(m.constancy_deviation), 1e-8);
                    let want = (1.0 - c(m.m as f64, 0.0).powc(s)) * z;
                    let err = m.expectation.map_or(f64::INFINITY, |e| (e - want).norm() / want.norm().max(1.0));
                    rec.record(format!("s={s} m={} E vs (1-m^s) zeta(1-s)", m.m), Ok(err), 1e-6);
                    let cross = m.cross_residual.ok_or_else(|| {
                        probrenorm::Error::InvalidParameter(
                            m.closed_form_error.clone().unwrap_or_else(|| "no expectation".into()),
                        )
                    });
                    rec.record(format!("s={s} m={} closed-form cross-residual", m.m), cross, 1e-6);
                }
            }
            Err(e) => rec.record(format!("s={s}"), Err(e), 1e-6),
        }
    }

    // Convergent case: E(m) = L - L_m with both sums taken directly.
    match weak_report(&power, c(-1.0, 0.0), 1.0, 0, &m_list, &cfg) {
        Ok(r) => {
            match series_sum_a(&power, c(-1.0, 0.0), 1.0, 1e-15) {
                Ok(l) => {
                    for m in &r.per_m {
                        let mf = m.m as f64;
                        let want = l.value - l.value / (mf * mf);
                        let err = m.expectation.map_or(f64::INFINITY, |e| (e - want).norm());
                        rec.record(format!("1/n^2 rho=0 m={} E = L - L_m", m.m), Ok(err), 1e-8);
                    }
                }
                Err(e) => rec.record("1/n^2 direct sum".into(), Err(e), 1e-8),
            }
            match strong_fit(&r.expectations(), 1e-7) {
                Ok(fit) => {
                    let z2 = std::f64::consts::PI.powi(2) / 6.0;
                    let s_err = fit.s_value.map_or(f64::INFINITY, |v| (v - z2).norm());
                    let c_err = fit.c.map_or(f64::INFINITY, |v| (v + 2.0).norm());
                    rec.record("1/n^2 fit S = zeta(2)".into(), Ok(s_err), 1e-6);
                    rec.record("1/n^2 fit c = -2".into(), Ok(c_err), 1e-6);
                }
                Err(e) => rec.record("1/n^2 fit".into(), Err(e), 1e-6),
            }
        }
        Err(e) => rec.record("1/n^2 rho=0".into(), Err(e), 1e-8),
    }

    // Grandi: even m drifts, odd m cannot be extended.
    let terms = grandi_terms(cfg.n_max(3));
    match weak_report_terms("grandi", terms, 0, &[2, 3], &cfg) {
        Ok(r) => {
            let miss = |i: usize, v: Verdict| if r.per_m[i].verdict == Some(v) { 0.0 } else { 1.0 };
            rec.record("grandi m=2 drift".into(), Ok(miss(0, Verdict::Drift)), 0.0);
            rec.record("grandi m=3 extension divergence".into(), Ok(miss(1, Verdict::ExtensionDivergence)), 0.0);
        }
        Err(e) => rec.record("grandi".into(), Err(e), 0.0),
    }

    // Planted fits.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20_240_601);
    for k in 0..20 {
        let s = c(rng.gen_range(0.2..3.0), rng.gen_range(-2.0..2.0));
        let cc = c(rng.gen_range(-4.0..4.0), rng.gen_range(-3.0..3.0));
        let points: Vec<(u32, Complex64)> = m_list
            .iter()
            .map(|&m| {
                let noise = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 1e-10;
                (m, s * (1.0 - c(m as f64, 0.0).powc(cc)) + noise)
            })
            .collect();
        let r = strong_fit(&points, 1e-7).map(|fit| {
            let es = fit.s_value.map_or(f64::INFINITY, |v| (v - s).norm() / s.norm());
            let ec = fit.c.map_or(f64::INFINITY, |v| (v - cc).norm() / cc.norm().max(1.0));
            es.max(ec)
        });
        rec.record(format!("planted fit #{k} S={s:.3} c={cc:.3}"), r, 1e-6);
    }
    let zeros: Vec<(u32, Complex64)> = m_list.iter().map(|&m| (m, c(0.0, 0.0))).collect();
    let r = strong_fit(&zeros, 1e-7).map(|f| if f.verdict == FitVerdict::Degenerate { 0.0 } else { 1.0 });
    rec.record("all-zero fit degenerate".into(), r, 0.0);
}
