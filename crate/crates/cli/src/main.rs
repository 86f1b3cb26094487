//! `klm`: run the teleportation protocol, compare success-probability
//! formulas, optimize resource states and emit sweep tables.
//!
//! Exit codes: 0 on success, 2 for invalid configuration, 3 when two
//! independent computation routes disagree.

mod input;

use std::fmt::Write as _;
use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use klm_core::correction::{
    classify_extrema, classify_extrema_compressed, p_success_closed_form, p_success_given_m, p_success_joint,
    p_success_total_brute,
};
use klm_core::optimize::{
    avg_fidelity_closed_form, maximize, objective_avg_fidelity_with, objective_success, Budget, FailureConvention,
    Objective, SimplexPoint,
};
use klm_core::teleport::{run_analytic, run_oracle, OracleRun, ResourceCoefficients, TeleportOutcome};
use klm_core::Error;
use num_complex::Complex64;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "klm",
    version,
    about = "Linear-optical teleportation with multimode resource states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CoeffArgs {
    /// Resource size; inferred from inline or file coefficients when omitted.
    #[arg(long)]
    n: Option<usize>,
    /// `uniform`, `random`, `inline:v0,v1,...` (reals or re:im), `file:PATH` or a path.
    #[arg(long, default_value = "uniform")]
    coeffs: String,
    /// Inline or file values are squared moduli |c_m|^2.
    #[arg(long)]
    squared: bool,
    /// Rescale coefficients whose squared norm is not 1.
    #[arg(long)]
    renormalize: bool,
    /// Seed for `--coeffs random`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Teleport a qubit and tabulate every photon-count outcome.
    Teleport {
        #[command(flatten)]
        coeffs: CoeffArgs,
        /// `re,im+re,im` for (alpha, beta), or `random:SEED`.
        #[arg(long, default_value = "0.7071067811865476,0+0.7071067811865476,0")]
        qubit: String,
        /// Cross-check against the Fock-space simulation.
        #[arg(long)]
        oracle: bool,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        out: Option<String>,
    },
    /// Compare the pairwise-minima success probability with the extrema formula.
    Psuccess {
        #[command(flatten)]
        coeffs: CoeffArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        out: Option<String>,
    },
    /// Search the weight simplex for the best resource state.
    Optimize {
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        #[arg(long)]
        n: usize,
        /// Monte-Carlo samples for the average-fidelity check.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 5_000_000)]
        max_evals: usize,
        #[arg(long, value_enum, default_value_t = ConventionArg::Collapse)]
        convention: ConventionArg,
        #[arg(long)]
        out: Option<String>,
    },
    /// CSV of uniform and optimized figures of merit over a range of n.
    Sweep {
        #[arg(long, default_value_t = 1)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ConventionArg::Collapse)]
        convention: ConventionArg,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Success,
    Avgfid,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    /// Failure outcomes hand on logical 0 or logical 1.
    Collapse,
    /// Failure outcomes hand on the maximally mixed state.
    Mixed,
}

impl From<ConventionArg> for FailureConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Collapse => FailureConvention::CollapseToLogical,
            ConventionArg::Mixed => FailureConvention::MaximallyMixed,
        }
    }
}

enum Failure {
    Config(String),
    Consistency(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_consistency_failure() {
            Failure::Consistency(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure::Config(s)
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Consistency(msg)) => {
            eprintln!("consistency failure: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Teleport {
            coeffs,
            qubit,
            oracle,
            format,
            out,
        } => {
            let rc = resolve(&coeffs)?;
            let q = input::qubit(&qubit)?;
            let oracle_run = if oracle { Some(run_oracle(&rc, &q)?) } else { None };
            let outcomes = run_analytic(&rc, &q);
            emit(
                out.as_deref(),
                &teleport_output(&rc, &q, &outcomes, oracle_run.as_ref(), format)?,
            )
        }
        Command::Psuccess { coeffs, format, out } => {
            let rc = resolve(&coeffs)?;
            emit(out.as_deref(), &psuccess_output(&rc, format))
        }
        Command::Optimize {
            objective,
            n,
            samples,
            seed,
            restarts,
            max_evals,
            convention,
            out,
        } => {
            check_n(n)?;
            check_samples(samples)?;
            if restarts == 0 || max_evals == 0 {
                return Err(Failure::Config("--restarts and --max-evals must be at least 1".into()));
            }
            let objective = match objective {
                ObjectiveArg::Success => Objective::Success,
                ObjectiveArg::Avgfid => Objective::AvgFidelity {
                    samples,
                    convention: convention.into(),
                },
            };
            let budget = Budget {
                restarts,
                max_evaluations: max_evals,
            };
            let report = maximize(objective, n, budget, seed)?;
            let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
            text.push('\n');
            emit(out.as_deref(), &text)
        }
        Command::Sweep {
            n_min,
            n_max,
            samples,
            seed,
            convention,
            out,
        } => {
            check_n(n_min)?;
            if n_max < n_min || n_max > 64 {
                return Err(Failure::Config(format!(
                    "sweep range {n_min}..={n_max} is invalid; need 1 <= n-min <= n-max <= 64"
                )));
            }
            check_samples(samples)?;
            emit(
                out.as_deref(),
                &sweep_output(n_min, n_max, samples, seed, convention.into())?,
            )
        }
    }
}

fn check_n(n: usize) -> CliResult<()> {
    if n == 0 {
        return Err(Failure::Config("n must be at least 1".into()));
    }
    Ok(())
}

fn check_samples(samples: usize) -> CliResult<()> {
    if samples == 0 {
        return Err(Failure::Config("--samples must be at least 1".into()));
    }
    Ok(())
}

fn resolve(args: &CoeffArgs) -> CliResult<ResourceCoefficients> {
    if args.n == Some(0) {
        return Err(Failure::Config("n must be at least 1".into()));
    }
    Ok(input::coefficients(
        &args.coeffs,
        args.n,
        args.squared,
        args.renormalize,
        args.seed,
    )?)
}

fn emit(out: Option<&str>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Config(format!("cannot write {path}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Shortest round-trip text of a float, as in the JSON output.
fn num(x: f64) -> String {
    Value::from(x).to_string()
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn complex_text(z: Complex64) -> String {
    format!("{:.10}{:+.10}i", z.re, z.im)
}

struct Row {
    m: usize,
    p: f64,
    conditional: Option<(Complex64, Complex64)>,
    given_m: Option<f64>,
    joint: f64,
}

fn rows(rc: &ResourceCoefficients, q: &klm_core::fock::QubitAmplitudes, outcomes: &[TeleportOutcome]) -> Vec<Row> {
    outcomes
        .iter()
        .map(|o| {
            let success = o.is_success_class();
            Row {
                m: o.m,
                p: o.probability,
                conditional: o.conditional.map(|c| (c.alpha, c.beta)),
                given_m: if success {
                    p_success_given_m(o.m, rc, q).ok()
                } else {
                    Some(0.0)
                },
                joint: if success { p_success_joint(o.m, rc) } else { 0.0 },
            }
        })
        .collect()
}

fn teleport_output(
    rc: &ResourceCoefficients,
    q: &klm_core::fock::QubitAmplitudes,
    outcomes: &[TeleportOutcome],
    oracle: Option<&OracleRun>,
    format: Format,
) -> CliResult<String> {
    let rows = rows(rc, q, outcomes);
    let total = p_success_total_brute(rc);
    let mut s = String::new();
    match format {
        Format::Json => {
            let outcomes: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "m": r.m,
                        "p_m": r.p,
                        "conditional": r.conditional.map(|(a, b)| json!([complex_json(a), complex_json(b)])),
                        "p_success_given_m": r.given_m,
                        "p_success_joint": r.joint,
                    })
                })
                .collect();
            let doc = json!({
                "n": rc.n(),
                "coefficients": rc.coefficients().iter().map(|&c| complex_json(c)).collect::<Vec<_>>(),
                "qubit": [complex_json(q.alpha), complex_json(q.beta)],
                "outcomes": outcomes,
                "p_success": total,
                "oracle": oracle.map(|o| json!({
                    "patterns": o.patterns.len(),
                    "max_deviation": o.max_deviation,
                })),
            });
            s = serde_json::to_string_pretty(&doc).expect("json serializes");
            s.push('\n');
        }
        Format::Csv => {
            s.push_str("m,p_m,alpha_re,alpha_im,beta_re,beta_im,p_success_given_m,p_success_joint\n");
            for r in &rows {
                let (a, b) = match r.conditional {
                    Some((a, b)) => (
                        format!("{},{}", num(a.re), num(a.im)),
                        format!("{},{}", num(b.re), num(b.im)),
                    ),
                    None => (",".into(), ",".into()),
                };
                let g = r.given_m.map(num).unwrap_or_default();
                let _ = writeln!(s, "{},{},{a},{b},{g},{}", r.m, num(r.p), num(r.joint));
            }
        }
        Format::Table => {
            let _ = writeln!(
                s,
                "n = {}, qubit = ({}, {})",
                rc.n(),
                complex_text(q.alpha),
                complex_text(q.beta)
            );
            let _ = writeln!(
                s,
                "{:>3}  {:>12}  {:>28}  {:>28}  {:>12}  {:>12}",
                "m", "p(m)", "alpha", "beta", "P(S|m)", "p(S,m)"
            );
            for r in &rows {
                let (a, b) = match r.conditional {
                    Some((a, b)) => (complex_text(a), complex_text(b)),
                    None => ("-".into(), "-".into()),
                };
                let g = r.given_m.map(|g| format!("{g:.10}")).unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    s,
                    "{:>3}  {:>12.10}  {a:>28}  {b:>28}  {g:>12}  {:>12.10}",
                    r.m, r.p, r.joint
                );
            }
            let _ = writeln!(s, "p(S) = {total}");
            if let Some(o) = oracle {
                let _ = writeln!(
                    s,
                    "oracle: {} detection patterns, max deviation {:.3e}",
                    o.patterns.len(),
                    o.max_deviation
                );
            }
        }
    }
    Ok(s)
}

fn psuccess_output(rc: &ResourceCoefficients, format: Format) -> String {
    let brute = p_success_total_brute(rc);
    let closed = p_success_closed_form(rc).ok();
    let ex = classify_extrema(rc);
    let compressed = classify_extrema_compressed(rc);
    let diff = closed.map(|c| (c - brute).abs());
    let runs = |v: &[klm_core::correction::Run]| -> Vec<String> {
        v.iter()
            .map(|r| {
                if r.start == r.end {
                    r.start.to_string()
                } else {
                    format!("{}-{}", r.start, r.end)
                }
            })
            .collect()
    };
    let (maxima, minima) = if ex.strict {
        (
            ex.maxima.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            ex.interior_minima.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
        )
    } else {
        (runs(&compressed.maxima), runs(&compressed.interior_minima))
    };
    let mut s = String::new();
    match format {
        Format::Json => {
            let doc = json!({
                "n": rc.n(),
                "weights": rc.weights(),
                "brute": brute,
                "closed_form": closed,
                "strict": ex.strict,
                "maxima": maxima,
                "interior_minima": minima,
                "difference": diff,
            });
            s = serde_json::to_string_pretty(&doc).expect("json serializes");
            s.push('\n');
        }
        Format::Csv => {
            s.push_str("n,brute,closed_form,difference,strict,maxima,interior_minima\n");
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                rc.n(),
                num(brute),
                closed.map(num).unwrap_or_default(),
                diff.map(num).unwrap_or_default(),
                ex.strict,
                maxima.join(" "),
                minima.join(" ")
            );
        }
        Format::Table => {
            let w: Vec<String> = rc.weights().iter().map(|w| format!("{w:.10}")).collect();
            let _ = writeln!(s, "weights: {}", w.join(", "));
            let _ = writeln!(s, "brute (pairwise minima): {brute}");
            match closed {
                Some(c) => {
                    let _ = writeln!(s, "closed form (extrema):   {c}");
                }
                None => {
                    let _ = writeln!(s, "closed form (extrema):   inapplicable (plateau)");
                }
            }
            let label = if ex.strict { "" } else { " (runs)" };
            let _ = writeln!(s, "maxima{label}: [{}]", maxima.join(", "));
            let _ = writeln!(s, "interior minima{label}: [{}]", minima.join(", "));
            match diff {
                Some(d) => {
                    let _ = writeln!(s, "difference: {d:e}");
                }
                None => {
                    let _ = writeln!(s, "difference: -");
                }
            }
        }
    }
    s
}

fn sweep_output(
    n_min: usize,
    n_max: usize,
    samples: usize,
    seed: u64,
    convention: FailureConvention,
) -> CliResult<String> {
    let mut s = String::from("n,p_success_uniform,avg_fid_uniform,avg_fid_optimized\n");
    for n in n_min..=n_max {
        let uniform = SimplexPoint::uniform(n)?;
        let p_success = objective_success(&uniform);
        let checked = objective_avg_fidelity_with(&uniform, samples, seed.wrapping_add(n as u64), convention)?;
        let objective = Objective::AvgFidelity { samples, convention };
        let report = maximize(objective, n, Budget::default(), seed)?;
        debug_assert_eq!(checked.closed_form, avg_fidelity_closed_form(&uniform, convention));
        let _ = writeln!(
            s,
            "{n},{},{},{}",
            num(p_success),
            num(checked.closed_form),
            num(report.best_value)
        );
    }
    Ok(s)
}
