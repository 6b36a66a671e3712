//! `probrenorm`: batch runner for renormalization experiments and the
//! numerical verification suites.
//!
//! Exit codes: 0 success (verdicts such as `drift` are results), 1 config
//! error or unknown family, 2 evaluation error, 3 verify residual breach.

mod commands;
mod config;
mod error;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;

use commands::Destination;
use config::{ExperimentConfig, FamilySpec, Format};
use error::CliError;
use verify::Suite;

#[derive(Debug, Parser)]
#[command(name = "probrenorm", version, about = "Probabilistic renormalization of divergent series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct OutputArgs {
    /// Write here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the renormalization pipeline described by a JSON config.
    Renormalize {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's rescale exponent.
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
        rho: Option<u8>,
        /// Sum alternating class sums in closed form when their Newton series diverges.
        #[arg(long)]
        fallback_analytic_binomial: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Re-fit `E(m) = S (1 - m^c)` from a saved JSON report.
    Fit {
        /// Report written by `renormalize --format json`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run a residual suite; exits 3 if any residual exceeds its bound.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Evaluate `B f(s, t)` and the continued Dirichlet series.
    BernoulliEval {
        /// Family config; its `family`, `s` and `t0` are used.
        #[arg(long, conflicts_with_all = ["family", "s"])]
        config: Option<PathBuf>,
        /// Builtin family with default parameters.
        #[arg(long)]
        family: Option<String>,
        /// `re` or `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        s: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// List the registered families.
    ListFamilies {
        #[command(flatten)]
        out: OutputArgs,
    },
}

fn parse_complex(text: &str) -> Result<Complex64, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let num = |p: &str| {
        p.parse::<f64>()
            .map_err(|_| CliError::Config(format!("cannot read `{text}` as a complex number")))
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(CliError::Config(format!("cannot read `{text}` as a complex number"))),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Renormalize {
            config,
            rho,
            fallback_analytic_binomial,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(rho) = rho {
                cfg.rho = rho;
            }
            cfg.fallback_analytic_binomial |= fallback_analytic_binomial;
            let dest = Destination::resolve(Some(&cfg), out.output, out.format);
            let result = commands::run_renormalize(&cfg)?;
            commands::write_renorm(&result, &dest)
        }
        Command::Fit { input, tol, out } => {
            let fit = commands::run_fit(&input, tol)?;
            commands::write_fit(&fit, &Destination::resolve(None, out.output, out.format))
        }
        Command::Verify { suite, out } => {
            let checks = verify::run(suite);
            let dest = Destination::resolve(None, out.output, out.format);
            write_checks(&checks, &dest)?;
            let failed: Vec<_> = checks.iter().filter(|c| !c.pass).collect();
            for c in &failed {
                eprintln!(
                    "breach: {} {}: residual {} > bound {:e}{}",
                    c.suite,
                    c.check,
                    c.residual.map_or("n/a".to_string(), |r| format!("{r:e}")),
                    c.bound,
                    c.note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default()
                );
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Breach(failed.len()))
            }
        }
        Command::BernoulliEval {
            config,
            family,
            s,
            t,
            out,
        } => {
            let (spec, s, t, cfg) = match config {
                Some(path) => {
                    let cfg = ExperimentConfig::load(&path)?;
                    let s = cfg
                        .s
                        .ok_or_else(|| CliError::Config("config has no `s`".into()))?;
                    (cfg.family.clone(), s, cfg.t0, Some(cfg))
                }
                None => {
                    let name = family.ok_or_else(|| CliError::Config("pass --family or --config".into()))?;
                    let s = parse_complex(s.as_deref().ok_or_else(|| CliError::Config("pass --s".into()))?)?;
                    (FamilySpec::builtin(&name)?, s, t, None)
                }
            };
            let result = commands::run_bernoulli_eval(&spec, s, t)?;
            commands::write_bernoulli(&result, &Destination::resolve(cfg.as_ref(), out.output, out.format))
        }
        Command::ListFamilies { out } => commands::write_families(
            &commands::list_families(),
            &Destination::resolve(None, out.output, out.format),
        ),
    }
}

fn write_checks(checks: &[verify::Check], dest: &Destination) -> Result<(), CliError> {
    let mut w = output::sink(dest.path.as_deref())?;
    match dest.format {
        Format::Json => output::write_json(&mut *w, &checks),
        Format::Csv => output::write_csv(
            &mut *w,
            &["suite", "check", "residual", "bound", "pass", "note"],
            &checks
                .iter()
                .map(|c| {
                    vec![
                        c.suite.clone(),
                        c.check.clone(),
                        output::opt_float(c.residual),
                        output::float(c.bound),
                        c.pass.to_string(),
                        c.note.clone().unwrap_or_default(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits with 2 on usage errors; here 2 means an evaluation error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Breach(_)) {
                eprintln!("error: {e}");
            } else {
                eprintln!("{e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
