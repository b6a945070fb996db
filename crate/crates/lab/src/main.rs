use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use residue_core::pairings::{pair_analytic_continuation, pair_regularized, pair_tube};
use residue_core::{ComplexPolynomial, HoloMap};
use residue_lab::config::{ExperimentConfig, ExperimentKind};
use residue_lab::rate::parse_complex;
use residue_lab::{
    demo, fit_rate, membership_test, run_sweep, verify_suite, LabError, LabResult, SweepTable,
};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "residue-lab",
    version,
    about = "Regularized residue-current experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pair once, at --eps or at the finest schedule point.
    Pair {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated ε vector.
        #[arg(long)]
        eps: Option<String>,
        /// Use the λ analytic continuation instead of kernels.
        #[arg(long)]
        continuation: bool,
    },
    /// Pair at every schedule point and write a CSV table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit |value − ref| ≈ C‖ε‖∞^ω to a sweep table.
    Rate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "ref")]
        reference: String,
    },
    /// Sharp tube integrals over the schedule; CSV to --out or stdout.
    Tube {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide h ∈ ⟨f⟩ for f = (z1^a1, …, zn^an).
    Membership {
        /// Comma-separated components of f.
        #[arg(long)]
        f: String,
        #[arg(long)]
        h: String,
        #[arg(long, default_value_t = 4)]
        degree: u32,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Run a verification suite: kernels, oracle, convergence, bm, restriction or all.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Worked examples: blowup or passare-tsikh.
    Demo {
        #[arg(long)]
        name: String,
    },
}

fn print_json<T: Serialize>(v: &T) -> LabResult<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn parse_eps(s: &str) -> LabResult<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| LabError::Config(format!("ε '{x}': {e}")))
        })
        .collect()
}

#[derive(Serialize)]
struct SweepSummary {
    rows: usize,
    failed: usize,
    limit: Option<residue_core::PairingResult>,
}

fn summarize(t: &SweepTable) -> SweepSummary {
    SweepSummary {
        rows: t.rows.len(),
        failed: t.rows.iter().filter(|r| !r.ok()).count(),
        limit: t.limit_estimate(),
    }
}

fn run(cmd: Cmd) -> LabResult<bool> {
    match cmd {
        Cmd::Pair {
            config,
            eps,
            continuation,
        } => {
            let cfg = ExperimentConfig::load(config)?;
            let (f, phi) = (cfg.holomap()?, cfg.test_form()?);
            if continuation {
                let copts = cfg.continuation.clone().unwrap_or_default();
                print_json(&pair_analytic_continuation(
                    &f,
                    &phi,
                    &copts,
                    &cfg.quadrature,
                )?)?;
                return Ok(true);
            }
            let eps = match eps {
                Some(s) => parse_eps(&s)?,
                None => cfg
                    .schedule_points()?
                    .into_iter()
                    .min_by(|a, b| {
                        a.iter()
                            .cloned()
                            .fold(0.0, f64::max)
                            .total_cmp(&b.iter().cloned().fold(0.0, f64::max))
                    })
                    .ok_or_else(|| LabError::Config("no --eps and no schedule points".into()))?,
            };
            let r = match cfg.kind {
                ExperimentKind::Tube => pair_tube(&f, &phi, &eps, cfg.tube_points)?,
                _ => pair_regularized(&f, &phi, &cfg.kernel_list()?, &eps, &cfg.quadrature)?,
            };
            print_json(&r)?;
            Ok(true)
        }
        Cmd::Sweep { config, out } => {
            let cfg = ExperimentConfig::load(config)?;
            let t = run_sweep(&cfg)?;
            t.write_csv(BufWriter::new(File::create(out)?), cfg.record_timing)?;
            print_json(&summarize(&t))?;
            Ok(true)
        }
        Cmd::Rate { input, reference } => {
            let t = SweepTable::read_csv(File::open(input)?)?;
            print_json(&fit_rate(&t, parse_complex(&reference)?)?)?;
            Ok(true)
        }
        Cmd::Tube { config, out } => {
            let mut cfg = ExperimentConfig::load(config)?;
            cfg.kind = ExperimentKind::Tube;
            let t = run_sweep(&cfg)?;
            match out {
                Some(p) => {
                    t.write_csv(BufWriter::new(File::create(p)?), cfg.record_timing)?;
                    print_json(&summarize(&t))?;
                }
                None => print!("{}", t.to_csv(cfg.record_timing)),
            }
            Ok(true)
        }
        Cmd::Membership {
            f,
            h,
            degree,
            threshold,
        } => {
            let comps: Vec<&str> = f.split(',').map(str::trim).collect();
            let dim = comps
                .iter()
                .map(|c| ComplexPolynomial::max_var_index(c))
                .chain([ComplexPolynomial::max_var_index(&h)])
                .max()
                .unwrap_or(0);
            let map = HoloMap::parse(dim, &comps, comps.len())?;
            let h = ComplexPolynomial::parse(&h, dim)?;
            print_json(&membership_test(&h, &map, degree, threshold)?)?;
            Ok(true)
        }
        Cmd::Verify { suite } => {
            let report = verify_suite(&suite)?;
            print_json(&report)?;
            Ok(report.all_passed())
        }
        Cmd::Demo { name } => {
            print_json(&demo::run_demo(&name)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
