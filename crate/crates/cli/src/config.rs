use std::path::{Path, PathBuf};

use num_complex::Complex64;
use probrenorm::hfun::{Character, HFamily, Shape};
use probrenorm::renorm::{ExpectationConfig, RenormConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeName {
    Box,
    Simplex,
}

/// Term source. Everything but `grandi` is an H-family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    // Empty braces rather than unit variants: serde skips the unknown-field
    // check on unit variants of an internally tagged enum.
    Power {},
    Hurwitz {},
    Eta {},
    /// Character values `chi(1), .., chi(k)` as `[re, im]` pairs; χ₋₄ if omitted.
    Character {
        #[serde(default)]
        values: Option<Vec<Complex64>>,
    },
    Ehrhart {
        shape: ShapeName,
        d: u32,
    },
    Jacobi {
        a: f64,
        b: f64,
        x: f64,
    },
    GaussIdeal {},
    /// `a_n = (-1)^(n+1)`, fed directly.
    Grandi {},
}

impl FamilySpec {
    /// Builtin with default parameters, for command-line use.
    pub fn builtin(name: &str) -> Result<FamilySpec, CliError> {
        Ok(match name {
            "power" => FamilySpec::Power {},
            "hurwitz" => FamilySpec::Hurwitz {},
            "eta" => FamilySpec::Eta {},
            "character" => FamilySpec::Character { values: None },
            "ehrhart" | "ehrhart_box" => FamilySpec::Ehrhart { shape: ShapeName::Box, d: 2 },
            "ehrhart_simplex" => FamilySpec::Ehrhart { shape: ShapeName::Simplex, d: 2 },
            "jacobi" => FamilySpec::Jacobi { a: 0.0, b: 0.0, x: 0.5 },
            "gauss_ideal" => FamilySpec::GaussIdeal {},
            "grandi" => FamilySpec::Grandi {},
            other => return Err(CliError::UnknownFamily(other.to_string())),
        })
    }

    /// The H-family, or `None` for a direct term feed.
    pub fn build(&self) -> Result<Option<HFamily>, CliError> {
        let bad = |e: probrenorm::Error| CliError::Config(e.to_string());
        Ok(Some(match self {
            FamilySpec::Power {} => HFamily::power(),
            FamilySpec::Hurwitz {} => HFamily::hurwitz(),
            FamilySpec::Eta {} => HFamily::eta(),
            FamilySpec::Character { values: None } => HFamily::character(Character::chi_minus_4()),
            FamilySpec::Character { values: Some(v) } => HFamily::character(Character::new(v.clone()).map_err(bad)?),
            FamilySpec::Ehrhart { shape, d } => {
                let shape = match shape {
                    ShapeName::Box => Shape::Box(*d),
                    ShapeName::Simplex => Shape::Simplex(*d),
                };
                HFamily::ehrhart(shape).map_err(bad)?
            }
            FamilySpec::Jacobi { a, b, x } => HFamily::jacobi(*a, *b, *x).map_err(bad)?,
            FamilySpec::GaussIdeal {} => HFamily::gauss_ideal(),
            FamilySpec::Grandi {} => return Ok(None),
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_newton")]
    pub newton: f64,
    #[serde(default = "default_const")]
    pub constant: f64,
    #[serde(default = "default_fit")]
    pub tail_fit: f64,
    #[serde(default = "default_strong")]
    pub strong_fit: f64,
}

fn default_newton() -> f64 {
    RenormConfig::default().newton_tol
}
fn default_const() -> f64 {
    ExpectationConfig::default().const_tol
}
fn default_fit() -> f64 {
    ExpectationConfig::default().fit_tol
}
fn default_strong() -> f64 {
    1e-7
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            newton: default_newton(),
            constant: default_const(),
            tail_fit: default_fit(),
            strong_fit: default_strong(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default = "default_format")]
    pub format: Format,
}

fn default_format() -> Format {
    Format::Csv
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilySpec,
    /// Required for H-families; ignored by `grandi`.
    #[serde(default)]
    pub s: Option<Complex64>,
    #[serde(default = "default_t0")]
    pub t0: f64,
    #[serde(default = "default_rho")]
    pub rho: u8,
    #[serde(default = "default_m_list")]
    pub m_list: Vec<u32>,
    #[serde(default = "default_n_eval")]
    pub n_eval: usize,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_max_terms")]
    pub max_terms: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub fallback_analytic_binomial: bool,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

fn default_t0() -> f64 {
    1.0
}
fn default_rho() -> u8 {
    1
}
fn default_m_list() -> Vec<u32> {
    (2..=6).collect()
}
fn default_n_eval() -> usize {
    RenormConfig::default().n_eval
}
fn default_window() -> usize {
    RenormConfig::default().window
}
fn default_max_terms() -> usize {
    RenormConfig::default().max_terms
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            // Unknown family names surface as an unknown variant of the `name` tag.
            if msg.contains("unknown variant") && msg.contains("expected one of `power`") {
                CliError::UnknownFamily(msg)
            } else {
                CliError::Config(msg)
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.rho > 1 {
            return Err(CliError::Config(format!("rho must be 0 or 1, got {}", self.rho)));
        }
        if !matches!(self.family, FamilySpec::Grandi {}) {
            match self.s {
                None => return Err(CliError::Config("`s` is required for H-families".into())),
                Some(s) if !(s.re.is_finite() && s.im.is_finite()) => {
                    return Err(CliError::Config("`s` must be finite".into()))
                }
                _ => {}
            }
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(CliError::Config(format!("t0 must be positive, got {}", self.t0)));
        }
        self.renorm_config()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.m_list.is_empty() {
            return Err(CliError::Config("m_list is empty".into()));
        }
        let mut seen = self.m_list.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.m_list.len() {
            return Err(CliError::Config("m_list has repeated entries".into()));
        }
        if let Some(m) = self.m_list.iter().find(|m| !(2..=12).contains(*m)) {
            return Err(CliError::Config(format!("m = {m} outside [2, 12]")));
        }
        if !(self.tolerances.strong_fit > 0.0) {
            return Err(CliError::Config("strong_fit tolerance must be positive".into()));
        }
        // Surface family parameter errors at load time.
        self.family.build()?;
        Ok(())
    }

    pub fn renorm_config(&self) -> RenormConfig {
        RenormConfig {
            n_eval: self.n_eval,
            window: self.window,
            max_terms: self.max_terms,
            newton_tol: self.tolerances.newton,
            expectation: ExpectationConfig {
                const_tol: self.tolerances.constant,
                fit_tol: self.tolerances.tail_fit,
                ..ExpectationConfig::default()
            },
            fallback_analytic_binomial: self.fallback_analytic_binomial,
            ..RenormConfig::default()
        }
    }
}
