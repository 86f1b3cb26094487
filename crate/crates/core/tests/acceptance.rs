use std::process::ExitCode;
use std::time::{Duration, Instant};

use klm_core::correction::{classify_extrema, p_success_closed_form, p_success_given_m, p_success_total_brute};
use klm_core::fock::QubitAmplitudes;
use klm_core::optics::permanent_row_major;
use klm_core::optimize::{
    certify_klm_bound, maximize, objective_avg_fidelity, objective_success, Budget, FailureConvention, Objective,
    SimplexPoint,
};
use klm_core::polarization::{correction_circuit, PolarizedPhotonState};
use klm_core::teleport::{outcome_probability, run_analytic, run_oracle, ResourceCoefficients};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = std::result::Result<String, String>;

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn random_coefficients(n: usize, rng: &mut ChaCha8Rng) -> ResourceCoefficients {
    ResourceCoefficients::normalized((0..=n).map(|_| gaussian(rng)).collect()).unwrap()
}

fn random_qubit(rng: &mut ChaCha8Rng) -> QubitAmplitudes {
    QubitAmplitudes::normalized(gaussian(rng), gaussian(rng)).unwrap()
}

fn minima_sum(w: &[f64]) -> f64 {
    w.windows(2).map(|p| p[0].min(p[1])).sum()
}

/// Permanent by summing over all permutations.
fn naive_permanent(a: &[Complex64], k: usize) -> Complex64 {
    fn go(a: &[Complex64], k: usize, row: usize, used: &mut Vec<bool>) -> Complex64 {
        if row == k {
            return Complex64::new(1.0, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for col in 0..k {
            if !used[col] {
                used[col] = true;
                acc += a[row * k + col] * go(a, k, row + 1, used);
                used[col] = false;
            }
        }
        acc
    }
    go(a, k, 0, &mut vec![false; k])
}

fn klm_success_probability() -> Check {
    let mut worst: f64 = 0.0;
    for n in 1..=8 {
        let rc = ResourceCoefficients::uniform(n).map_err(|e| e.to_string())?;
        let p = p_success_total_brute(&rc);
        worst = worst.max((p - n as f64 / (n + 1) as f64).abs());
    }
    if worst <= 1e-12 {
        Ok(format!("max |p(S) - n/(n+1)| = {worst:.1e} for n = 1..8"))
    } else {
        Err(format!("deviation {worst:.3e} exceeds 1e-12"))
    }
}

fn oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut patterns = 0usize;
    for n in 1..=4 {
        let omega = |k: f64| Complex64::from_polar(1.0, std::f64::consts::TAU * k / (n + 1) as f64);
        for _ in 0..20 {
            let rc = random_coefficients(n, &mut rng);
            let q = random_qubit(&mut rng);
            let run = run_oracle(&rc, &q).map_err(|e| format!("n={n}: {e}"))?;
            let analytic = run_analytic(&rc, &q);
            for (agg, an) in run.aggregated.iter().zip(&analytic) {
                worst = worst.max((agg.probability - an.probability).abs());
                if let (Some(x), Some(y)) = (agg.conditional, an.conditional) {
                    worst = worst.max(1.0 - x.fidelity(&y));
                    let g = x.inner(&y);
                    let g = g / g.norm();
                    worst = worst
                        .max((x.alpha * g - y.alpha).norm())
                        .max((x.beta * g - y.beta).norm());
                }
            }
            for p in &run.patterns {
                let (Some(pattern), Some(phase)) = (&p.pattern, p.corrective_phase) else {
                    continue;
                };
                let weighted: u32 = pattern
                    .occupations()
                    .iter()
                    .enumerate()
                    .map(|(l, &k)| l as u32 * k)
                    .sum();
                worst = worst.max((phase - omega(-(weighted as f64))).norm());
                patterns += 1;
            }
        }
    }
    if worst <= 1e-10 {
        Ok(format!(
            "80 runs, {patterns} success patterns, max deviation {worst:.1e}"
        ))
    } else {
        Err(format!("max deviation {worst:.3e} exceeds 1e-10"))
    }
}

fn closed_form_theorem() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut count = 0usize;
    for n in 2..=12 {
        let mut done = 0;
        while done < 1000 {
            let rc = ResourceCoefficients::from_weights(SimplexPoint::random(n, &mut rng).weights())
                .map_err(|e| e.to_string())?;
            if !classify_extrema(&rc).strict {
                continue;
            }
            let closed = p_success_closed_form(&rc).map_err(|e| e.to_string())?;
            worst = worst.max((closed - minima_sum(&rc.weights())).abs());
            done += 1;
            count += 1;
        }
    }
    if worst < 1e-12 {
        Ok(format!("{count} strict sequences, max difference {worst:.1e}"))
    } else {
        Err(format!("max difference {worst:.3e} is not below 1e-12"))
    }
}

fn optimality() -> Check {
    let mut notes = Vec::new();
    for n in 2..=6 {
        let report = maximize(Objective::Success, n, Budget::default(), 4).map_err(|e| e.to_string())?;
        let target = n as f64 / (n + 1) as f64;
        let gap = (report.best_value - target).abs();
        let dist = report.best_point.distance_from_uniform();
        if gap > 1e-6 || dist > 1e-3 {
            return Err(format!("n={n}: value gap {gap:.3e}, L-inf distance {dist:.3e}"));
        }
        notes.push(format!("n={n} gap {gap:.0e}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for n in 1..=8 {
        let bound = n as f64 / (n + 1) as f64 + 1e-12;
        for _ in 0..10_000 {
            let p = SimplexPoint::random(n, &mut rng);
            let v = objective_success(&p);
            if v > bound {
                return Err(format!("n={n}: random point {:?} reaches {v}", p.weights()));
            }
        }
    }
    Ok(format!("{}; 80000 random points below n/(n+1)", notes.join(", ")))
}

fn certificates() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    let mut min_slack = f64::INFINITY;
    let mut min_margin = f64::INFINITY;
    while checked < 10_000 {
        let n = 1 + checked % 10;
        let p = SimplexPoint::random(n, &mut rng);
        let cert = certify_klm_bound(&p);
        if !cert.applicable {
            continue;
        }
        if !cert.all_pass() {
            return Err(format!("certificate fails on {:?}: {cert:?}", p.weights()));
        }
        min_slack = min_slack.min(cert.pairing_slack);
        min_margin = min_margin.min(cert.success_margin);
        checked += 1;
    }
    Ok(format!(
        "10000 sequences, n = 1..10, min pairing slack {min_slack:.2e}, min success margin {min_margin:.2e}"
    ))
}

fn circuit_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_p: f64 = 0.0;
    let mut worst_f: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let rc = random_coefficients(n, &mut rng);
        let q = random_qubit(&mut rng);
        let m = rng.random_range(1..=n);
        let teleported = run_analytic(&rc, &q)[m].conditional.ok_or("zero-probability outcome")?;
        let r =
            correction_circuit(m, &rc, &PolarizedPhotonState::from_qubit(&teleported)).map_err(|e| e.to_string())?;
        let w = rc.weights();
        let expect = w[m - 1].min(w[m]) / outcome_probability(&rc, &q, m);
        worst_p = worst_p.max((r.p_success - expect).abs());
        let recovered = r.recovered.ok_or("circuit never succeeds")?;
        worst_f = worst_f.max((1.0 - recovered.fidelity(&q)).abs());
    }
    if worst_p <= 1e-10 && worst_f <= 1e-10 {
        Ok(format!("100 triples, max p gap {worst_p:.1e}, max 1-F {worst_f:.1e}"))
    } else {
        Err(format!("p gap {worst_p:.3e}, fidelity gap {worst_f:.3e}"))
    }
}

fn input_independence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=8 {
        for _ in 0..5 {
            let rc = random_coefficients(n, &mut rng);
            let w = rc.weights();
            for m in 1..=n {
                let exact = w[m - 1].min(w[m]);
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for _ in 0..50 {
                    let q = random_qubit(&mut rng);
                    let joint =
                        outcome_probability(&rc, &q, m) * p_success_given_m(m, &rc, &q).map_err(|e| e.to_string())?;
                    lo = lo.min(joint);
                    hi = hi.max(joint);
                    worst = worst.max((joint - exact).abs());
                }
                worst = worst.max(hi - lo);
                cases += 1;
            }
        }
    }
    if worst < 1e-14 {
        Ok(format!("{cases} (c, m) pairs x 50 qubits, max spread {worst:.1e}"))
    } else {
        Err(format!("spread {worst:.3e} is not below 1e-14"))
    }
}

fn fidelity_scaling() -> Check {
    const SAMPLES: usize = 1_000_000;
    let mut opt_scaled = Vec::new();
    let mut uni_scaled = Vec::new();
    for n in 2..=8usize {
        let objective = Objective::AvgFidelity {
            samples: SAMPLES,
            convention: FailureConvention::CollapseToLogical,
        };
        let report = maximize(objective, n, Budget::default(), 8).map_err(|e| format!("n={n}: {e}"))?;
        let opt = report.mc_check.ok_or("missing Monte-Carlo check")?;
        let uniform = SimplexPoint::uniform(n).map_err(|e| e.to_string())?;
        let uni = objective_avg_fidelity(&uniform, SAMPLES, 800 + n as u64).map_err(|e| format!("n={n}: {e}"))?;
        let se = (opt.std_error.powi(2) + uni.std_error.powi(2)).sqrt();
        let z = (opt.mean - uni.mean) / se;
        if z < 5.0 {
            return Err(format!(
                "n={n}: optimized exceeds uniform by only {z:.1} standard errors"
            ));
        }
        if report.best_point.distance_from_uniform() < 1e-3 {
            return Err(format!("n={n}: optimum is the uniform point"));
        }
        opt_scaled.push((1.0 - opt.mean) * ((n + 2) * (n + 2)) as f64);
        uni_scaled.push((1.0 - uni.mean) * (n + 1) as f64);
    }
    let ratio = |v: &[f64]| {
        v.iter().copied().fold(f64::NEG_INFINITY, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let (ro, ru) = (ratio(&opt_scaled), ratio(&uni_scaled));
    if ro <= 3.0 && ru <= 2.0 {
        Ok(format!(
            "deficit_opt*(n+2)^2 spread {ro:.3} (<= 3), deficit_uniform*(n+1) spread {ru:.3} (<= 2)"
        ))
    } else {
        Err(format!("band ratios {ro:.3} (limit 3) and {ru:.3} (limit 2)"))
    }
}

fn permanent_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for i in 0..500 {
        let k = 1 + i % 6;
        let a: Vec<Complex64> = (0..k * k).map(|_| gaussian(&mut rng)).collect();
        worst = worst.max((permanent_row_major(&a, k) - naive_permanent(&a, k)).norm());
    }
    if worst <= 1e-10 {
        Ok(format!("500 matrices, k = 1..6, max difference {worst:.1e}"))
    } else {
        Err(format!("max difference {worst:.3e} exceeds 1e-10"))
    }
}

type Criterion = (&'static str, fn() -> Check, Duration);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            "1 uniform-resource success probability",
            klm_success_probability,
            Duration::from_secs(1),
        ),
        (
            "2 Fock oracle matches analytic path",
            oracle_equivalence,
            Duration::from_secs(120),
        ),
        ("3 extrema closed form", closed_form_theorem, Duration::from_secs(5)),
        ("4 uniform resource is optimal", optimality, Duration::from_secs(30)),
        ("5 bound certificates", certificates, Duration::from_secs(10)),
        (
            "6 circuit equals Kraus correction",
            circuit_equivalence,
            Duration::from_secs(5),
        ),
        (
            "7 success independent of input",
            input_independence,
            Duration::from_secs(5),
        ),
        ("8 average-fidelity scaling", fidelity_scaling, Duration::from_secs(600)),
        ("9 Ryser permanent", permanent_oracle, Duration::from_secs(5)),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS  {name} [{elapsed:.2?}]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name} [{elapsed:.2?}]: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
