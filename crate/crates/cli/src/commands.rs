use std::path::{Path, PathBuf};

use num_complex::Complex64;
use probrenorm::bernoulli::{bernoulli_apply, dirichlet_value, BEvalConfig};
use probrenorm::hfun::{catalogue, HFamily};
use probrenorm::renorm::{
    grandi_terms, strong_fit, weak_report, weak_report_terms, ModulusReport, RenormReport, StrongFit,
};
use probrenorm::zetaref::{hurwitz_pole_product, EulerMaclaurinConfig};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, FamilySpec, Format};
use crate::error::CliError;
use crate::output::{float, opt_float, sink, write_csv, write_json};

/// Columns shared by `renormalize` and `fit` output.
pub const REPORT_COLUMNS: [&str; 9] = [
    "record",
    "m",
    "re_value",
    "im_value",
    "verdict",
    "constancy_deviation",
    "residual",
    "re_c",
    "im_c",
];

/// Everything `renormalize` writes in JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenormOutput {
    pub report: RenormReport,
    pub strong_fit: Option<StrongFit>,
    /// Why no fit was attempted.
    pub strong_fit_note: Option<String>,
}

/// Resolved output destination: command-line flags override the config.
pub struct Destination {
    pub path: Option<PathBuf>,
    pub format: Format,
}

impl Destination {
    pub fn resolve(cfg: Option<&ExperimentConfig>, path: Option<PathBuf>, format: Option<Format>) -> Self {
        let spec = cfg.and_then(|c| c.output.as_ref());
        Destination {
            path: path.or_else(|| spec.and_then(|o| o.path.clone())),
            format: format.or(spec.map(|o| o.format)).unwrap_or(Format::Csv),
        }
    }
}

pub fn run_renormalize(cfg: &ExperimentConfig) -> Result<RenormOutput, CliError> {
    let rcfg = cfg.renorm_config();
    let report = match cfg.family.build()? {
        Some(fam) => weak_report(&fam, cfg.s.expect("validated"), cfg.t0, cfg.rho, &cfg.m_list, &rcfg)?,
        None => {
            let m_top = *cfg.m_list.iter().max().expect("validated");
            weak_report_terms("grandi", grandi_terms(rcfg.n_max(m_top)), cfg.rho, &cfg.m_list, &rcfg)?
        }
    };
    let points = report.expectations();
    let (strong_fit, strong_fit_note) = if points.len() >= 3 {
        (Some(strong_fit(&points, cfg.tolerances.strong_fit)?), None)
    } else {
        (
            None,
            Some(format!("{} finite expectation(s); the fit needs three", points.len())),
        )
    };
    Ok(RenormOutput {
        report,
        strong_fit,
        strong_fit_note,
    })
}

fn verdict_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn modulus_row(r: &ModulusReport) -> Vec<String> {
    let verdict = match (&r.expectation, &r.verdict) {
        (Some(_), _) => "finite".to_string(),
        (None, Some(v)) => verdict_name(v),
        (None, None) => String::new(),
    };
    vec![
        "expectation".into(),
        r.m.to_string(),
        opt_float(r.expectation.map(|e| e.re)),
        opt_float(r.expectation.map(|e| e.im)),
        verdict,
        float(r.constancy_deviation),
        opt_float(r.cross_residual),
        String::new(),
        String::new(),
    ]
}

fn fit_rows(fit: Option<&StrongFit>) -> Vec<Vec<String>> {
    let Some(fit) = fit else {
        let mut row = vec![String::new(); REPORT_COLUMNS.len()];
        row[0] = "strong_fit".into();
        row[4] = "unavailable".into();
        return vec![row];
    };
    let worst = fit.residuals.iter().map(|r| r.1).fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
    let mut rows = vec![vec![
        "strong_fit".into(),
        String::new(),
        opt_float(fit.s_value.map(|v| v.re)),
        opt_float(fit.s_value.map(|v| v.im)),
        verdict_name(&fit.verdict),
        String::new(),
        opt_float(worst),
        opt_float(fit.c.map(|v| v.re)),
        opt_float(fit.c.map(|v| v.im)),
    ]];
    for &(m, res) in &fit.residuals {
        let mut row = vec![String::new(); REPORT_COLUMNS.len()];
        row[0] = "fit_residual".into();
        row[1] = m.to_string();
        row[6] = float(res);
        rows.push(row);
    }
    rows
}

pub fn write_renorm(out: &RenormOutput, dest: &Destination) -> Result<(), CliError> {
    let mut w = sink(dest.path.as_deref())?;
    match dest.format {
        Format::Json => write_json(&mut *w, out),
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = out.report.per_m.iter().map(modulus_row).collect();
            rows.extend(fit_rows(out.strong_fit.as_ref()));
            write_csv(&mut *w, &REPORT_COLUMNS, &rows)
        }
    }
}

/// Re-fits `E(m) = S (1 - m^c)` to the expectations of a saved JSON report.
pub fn run_fit(report_path: &Path, tol: f64) -> Result<StrongFit, CliError> {
    let text = std::fs::read_to_string(report_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", report_path.display())))?;
    let report = match serde_json::from_str::<RenormOutput>(&text) {
        Ok(o) => o.report,
        Err(_) => serde_json::from_str::<RenormReport>(&text)
            .map_err(|e| CliError::Config(format!("{} is not a renormalization report: {e}", report_path.display())))?,
    };
    if !(tol > 0.0) {
        return Err(CliError::Config(format!("fit tolerance {tol} must be positive")));
    }
    let points = report.expectations();
    if points.len() < 3 {
        return Err(CliError::Config(format!(
            "report has {} finite expectation(s); the fit needs three",
            points.len()
        )));
    }
    Ok(strong_fit(&points, tol)?)
}

pub fn write_fit(fit: &StrongFit, dest: &Destination) -> Result<(), CliError> {
    let mut w = sink(dest.path.as_deref())?;
    match dest.format {
        Format::Json => write_json(&mut *w, fit),
        Format::Csv => write_csv(&mut *w, &REPORT_COLUMNS, &fit_rows(Some(fit))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliEvalOutput {
    pub family: String,
    pub s: Complex64,
    pub t: f64,
    pub b: Complex64,
    pub status: probrenorm::SeriesStatus,
    /// `D^f(1 - s, t) = -(1/s) B f(s, t)`; absent at `s = 0`.
    pub dirichlet: Option<Complex64>,
    /// `-s zeta(1 - s, t)` for the power family.
    pub reference: Option<Complex64>,
    pub reference_diff: Option<f64>,
}

pub fn run_bernoulli_eval(spec: &FamilySpec, s: Complex64, t: f64) -> Result<BernoulliEvalOutput, CliError> {
    let fam = spec
        .build()?
        .ok_or_else(|| CliError::Config("grandi is a direct term feed, not an H-family".into()))?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(CliError::Config(format!("t = {t} must be positive")));
    }
    let cfg = BEvalConfig::default();
    let b = bernoulli_apply(&fam, s, t, &cfg)?;
    let dirichlet = if s.norm() == 0.0 {
        None
    } else {
        Some(dirichlet_value(&fam, 1.0 - s, t, &cfg)?.value)
    };
    let reference = if matches!(spec, FamilySpec::Power {}) {
        let one = Complex64::new(1.0, 0.0);
        Some(hurwitz_pole_product(1.0 - s, &[(one, t)], &EulerMaclaurinConfig::default())?.value)
    } else {
        None
    };
    Ok(BernoulliEvalOutput {
        family: fam.name().to_string(),
        s,
        t,
        b: b.value,
        status: b.status,
        dirichlet,
        reference,
        reference_diff: reference.map(|r| (r - b.value).norm()),
    })
}

pub fn write_bernoulli(out: &BernoulliEvalOutput, dest: &Destination) -> Result<(), CliError> {
    let mut w = sink(dest.path.as_deref())?;
    match dest.format {
        Format::Json => write_json(&mut *w, out),
        Format::Csv => write_csv(
            &mut *w,
            &[
                "family", "re_s", "im_s", "t", "re_b", "im_b", "status", "re_d", "im_d", "re_ref", "im_ref",
                "ref_diff",
            ],
            &[vec![
                out.family.clone(),
                float(out.s.re),
                float(out.s.im),
                float(out.t),
                float(out.b.re),
                float(out.b.im),
                verdict_name(&out.status),
                opt_float(out.dirichlet.map(|d| d.re)),
                opt_float(out.dirichlet.map(|d| d.im)),
                opt_float(out.reference.map(|d| d.re)),
                opt_float(out.reference.map(|d| d.im)),
                opt_float(out.reference_diff),
            ]],
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyEntry {
    pub name: String,
    pub nu: u32,
    pub sigma_star: f64,
    pub growth_exponent: f64,
    pub closed_form: bool,
}

pub fn list_families() -> Vec<FamilyEntry> {
    catalogue()
        .iter()
        .map(|f: &HFamily| FamilyEntry {
            name: f.name().to_string(),
            nu: f.nu(),
            sigma_star: f.convergence_threshold(),
            growth_exponent: f.growth_exponent(),
            closed_form: f.has_closed_form(),
        })
        .collect()
}

pub fn write_families(list: &[FamilyEntry], dest: &Destination) -> Result<(), CliError> {
    let mut w = sink(dest.path.as_deref())?;
    match dest.format {
        Format::Json => write_json(&mut *w, &list),
        Format::Csv => write_csv(
            &mut *w,
            &["name", "nu", "sigma_star", "growth_exponent", "closed_form"],
            &list
                .iter()
                .map(|f| {
                    vec![
                        f.name.clone(),
                        f.nu.to_string(),
                        float(f.sigma_star),
                        float(f.growth_exponent),
                        f.closed_form.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    }
}
