//! Search over resource weights `w_m = |c_m|^2`.
//!
//! Two objectives are supported: the probability of perfect (unit-fidelity)
//! teleportation after correction, and the Haar-average fidelity when every
//! outcome is accepted. Both depend only on the weights, so the search runs
//! on the probability simplex through a softmax parameterization.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::correction::{classify_weights, pairwise_minima_sum};
use crate::error::{Error, Result};
use crate::fock::QubitAmplitudes;
use crate::teleport::{run_analytic, ResourceCoefficients};

const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// A point `(w_0, ..., w_n)` of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexPoint {
    weights: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidPoint(format!(
                "need at least 2 weights, got {}",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| w.is_nan() || **w < -SIMPLEX_TOLERANCE) {
            return Err(Error::InvalidPoint(format!("weight {w} is negative")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidPoint(format!("weights sum to {sum}")));
        }
        Ok(SimplexPoint {
            weights: weights.into_iter().map(|w| w.max(0.0)).collect(),
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPoint("n must be at least 1".into()));
        }
        Ok(SimplexPoint {
            weights: vec![1.0 / (n + 1) as f64; n + 1],
        })
    }

    /// Uniformly distributed point (flat Dirichlet).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let raw: Vec<f64> = (0..=n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let sum: f64 = raw.iter().sum();
        SimplexPoint {
            weights: raw.into_iter().map(|x| x / sum).collect(),
        }
    }

    pub fn from_coefficients(rc: &ResourceCoefficients) -> Self {
        SimplexPoint { weights: rc.weights() }
    }

    pub fn n(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Real nonnegative coefficients `c_m = sqrt(w_m)`.
    pub fn to_coefficients(&self) -> ResourceCoefficients {
        ResourceCoefficients::normalized(self.weights.iter().map(|w| Complex64::new(w.sqrt(), 0.0)).collect())
            .expect("simplex point has unit mass")
    }

    /// `max_m |w_m - 1/(n+1)|`.
    pub fn distance_from_uniform(&self) -> f64 {
        let u = 1.0 / self.weights.len() as f64;
        self.weights.iter().map(|w| (w - u).abs()).fold(0.0, f64::max)
    }
}

/// Unit-fidelity success probability `Σ_m min(w_(m-1), w_m)`.
pub fn objective_success(p: &SimplexPoint) -> f64 {
    pairwise_minima_sum(&p.weights)
}

/// What the receiver holds after a failure outcome (`m = 0` or `m = n+1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum FailureConvention {
    /// The qubit collapses to the surviving logical basis state: logical 0
    /// for `m = 0`, logical 1 for `m = n + 1`.
    #[default]
    CollapseToLogical,
    /// The receiver outputs the maximally mixed state (fidelity 1/2).
    MaximallyMixed,
}

/// Haar-average fidelity in closed form.
///
/// With real coefficients `a = sqrt(w_m)`, `b = sqrt(w_(m-1))` and
/// `x = |alpha|^2` uniform on `[0, 1]`, outcome `m` contributes
/// `E[(x a + (1-x) b)^2] = (a^2 + b^2 + ab)/3`; under the collapse convention
/// the failures add `(w_0 + w_n)/3`, giving `(2 + Σ_m sqrt(w_(m-1) w_m))/3`.
pub fn avg_fidelity_closed_form(p: &SimplexPoint, convention: FailureConvention) -> f64 {
    let w = &p.weights;
    let overlap: f64 = w.windows(2).map(|x| (x[0] * x[1]).sqrt()).sum();
    let base = (2.0 + overlap) / 3.0;
    match convention {
        FailureConvention::CollapseToLogical => base,
        FailureConvention::MaximallyMixed => base - (w[0] + w[w.len() - 1]) / 12.0,
    }
}

/// Monte-Carlo estimate of the average fidelity next to its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AvgFidelityEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub closed_form: f64,
    pub samples: usize,
}

/// Number of standard errors allowed between the estimate and the closed form.
pub const MC_AGREEMENT_SIGMAS: f64 = 3.0;

pub fn objective_avg_fidelity(p: &SimplexPoint, samples: usize, seed: u64) -> Result<AvgFidelityEstimate> {
    objective_avg_fidelity_with(p, samples, seed, FailureConvention::default())
}

/// Draws `samples` Haar-random input qubits, runs the analytic protocol for
/// each and averages the outcome fidelities weighted by `p(m)`.
///
/// Fails with [`Error::MonteCarloMismatch`] if the estimate and the closed
/// form differ by more than [`MC_AGREEMENT_SIGMAS`] standard errors.
pub fn objective_avg_fidelity_with(
    p: &SimplexPoint,
    samples: usize,
    seed: u64,
    convention: FailureConvention,
) -> Result<AvgFidelityEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let rc = p.to_coefficients();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let q = QubitAmplitudes::haar_random(&mut rng);
        let f: f64 = run_analytic(&rc, &q)
            .iter()
            .filter(|o| o.probability > 0.0)
            .map(|o| {
                let fid = match (o.is_success_class(), convention) {
                    (false, FailureConvention::MaximallyMixed) => 0.5,
                    _ => o.output_qubit().map_or(0.0, |out| out.fidelity(&q)),
                };
                o.probability * fid
            })
            .sum();
        sum += f;
        sum_sq += f * f;
    }
    let count = samples as f64;
    let mean = sum / count;
    let var = if samples > 1 {
        ((sum_sq - sum * sum / count) / (count - 1.0)).max(0.0)
    } else {
        0.0
    };
    let std_error = (var / count).sqrt();
    let closed_form = avg_fidelity_closed_form(p, convention);
    let allowed = (MC_AGREEMENT_SIGMAS * std_error).max(1e-12);
    if (mean - closed_form).abs() > allowed {
        return Err(Error::MonteCarloMismatch {
            estimate: mean,
            closed_form,
            std_error,
            sigmas: MC_AGREEMENT_SIGMAS,
        });
    }
    Ok(AvgFidelityEstimate {
        mean,
        std_error,
        closed_form,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Objective {
    Success,
    AvgFidelity {
        /// Monte-Carlo samples for the final check at the optimum.
        samples: usize,
        convention: FailureConvention,
    },
}

impl Objective {
    pub fn tag(&self) -> &'static str {
        match self {
            Objective::Success => "success",
            Objective::AvgFidelity { .. } => "avgfid",
        }
    }

    /// Deterministic value used by the search.
    pub fn evaluate(&self, p: &SimplexPoint) -> f64 {
        match self {
            Objective::Success => objective_success(p),
            Objective::AvgFidelity { convention, .. } => avg_fidelity_closed_form(p, *convention),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Budget {
    /// Independent Nelder-Mead starts.
    pub restarts: usize,
    /// Cap on objective evaluations across all starts.
    pub max_evaluations: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            restarts: 32,
            max_evaluations: 5_000_000,
        }
    }
}

/// Checks of the bound that no unbalanced sequence reaches `n/(n+1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KlmCertificate {
    /// False for sequences with a plateau, where no strict maximum exists.
    pub applicable: bool,
    pub n: usize,
    /// Index `M` of the largest maximum.
    pub largest_max_index: Option<usize>,
    pub largest_max: f64,
    /// `1/(n+1)`.
    pub threshold: f64,
    /// `w_M > 1/(n+1)`.
    pub largest_max_exceeds_threshold: bool,
    /// `Σ_(max, m != M) w_m - Σ_(interior min) w_m`.
    pub pairing_slack: f64,
    pub pairing_nonnegative: bool,
    pub p_success: f64,
    /// `n/(n+1) - p(S)`.
    pub success_margin: f64,
    pub below_uniform_bound: bool,
}

impl KlmCertificate {
    pub fn all_pass(&self) -> bool {
        self.applicable && self.largest_max_exceeds_threshold && self.pairing_nonnegative && self.below_uniform_bound
    }
}

pub fn certify_klm_bound(p: &SimplexPoint) -> KlmCertificate {
    let n = p.n();
    let w = &p.weights;
    let threshold = 1.0 / (n + 1) as f64;
    let p_success = objective_success(p);
    let uniform_value = n as f64 / (n + 1) as f64;
    let ex = classify_weights(w);
    let largest = ex.maxima.iter().copied().max_by(|&a, &b| w[a].total_cmp(&w[b]));
    match largest {
        Some(big) if ex.strict => {
            let other_max: f64 = ex.maxima.iter().filter(|&&m| m != big).map(|&m| w[m]).sum();
            let minima: f64 = ex.interior_minima.iter().map(|&m| w[m]).sum();
            let pairing_slack = other_max - minima;
            KlmCertificate {
                applicable: true,
                n,
                largest_max_index: Some(big),
                largest_max: w[big],
                threshold,
                largest_max_exceeds_threshold: w[big] > threshold,
                pairing_slack,
                pairing_nonnegative: pairing_slack >= 0.0,
                p_success,
                success_margin: uniform_value - p_success,
                below_uniform_bound: p_success < uniform_value,
            }
        }
        _ => KlmCertificate {
            applicable: false,
            n,
            largest_max_index: None,
            largest_max: w.iter().copied().fold(0.0, f64::max),
            threshold,
            largest_max_exceeds_threshold: false,
            pairing_slack: 0.0,
            pairing_nonnegative: false,
            p_success,
            success_margin: uniform_value - p_success,
            below_uniform_bound: false,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationReport {
    pub objective: String,
    pub n: usize,
    pub best_point: SimplexPoint,
    pub best_value: f64,
    /// Objective value of the uniform point, for comparison.
    pub uniform_reference: f64,
    pub method: String,
    pub evaluations: usize,
    pub budget_exhausted: bool,
    /// Bound checks on the best point (success objective only).
    pub certificate: Option<KlmCertificate>,
    /// Monte-Carlo confirmation at the best point (average-fidelity objective only).
    pub mc_check: Option<AvgFidelityEstimate>,
}

/// Multi-start Nelder-Mead over softmax logits, with an exhaustive grid of
/// step 0.05 as a floor for `n <= 3`. Deterministic for a given seed.
pub fn maximize(objective: Objective, n: usize, budget: Budget, seed: u64) -> Result<OptimizationReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if budget.restarts == 0 || budget.max_evaluations == 0 {
        return Err(Error::InvalidArgument(
            "budget must allow at least one start and one evaluation".into(),
        ));
    }
    let mut evals = 0usize;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let consider = |value: f64, w: Vec<f64>, best: &mut Option<(f64, Vec<f64>)>| {
        let better = match best {
            None => true,
            Some((bv, bw)) => value > *bv || (value == *bv && lex_less(&w, bw)),
        };
        if better {
            *best = Some((value, w));
        }
    };

    let grid = n <= 3;
    if grid {
        for w in simplex_grid(n, 20) {
            let p = SimplexPoint { weights: w };
            let v = objective.evaluate(&p);
            evals += 1;
            consider(v, p.weights, &mut best);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exhausted = false;
    let mut starts_run = 0;
    for _ in 0..budget.restarts {
        let remaining = budget.max_evaluations.saturating_sub(evals);
        if remaining == 0 {
            exhausted = true;
            break;
        }
        let z0: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let f = |z: &[f64]| -objective.evaluate(&SimplexPoint { weights: softmax(z) });
        let run = nelder_mead_with_restarts(&f, z0, remaining);
        evals += run.evaluations;
        exhausted |= run.exhausted;
        starts_run += 1;
        consider(-run.value, softmax(&run.x), &mut best);
    }

    let (best_value, weights) = best.expect("at least one evaluation");
    let best_point = SimplexPoint { weights };
    let uniform = SimplexPoint::uniform(n)?;
    let (certificate, mc_check) = match objective {
        Objective::Success => (Some(certify_klm_bound(&best_point)), None),
        Objective::AvgFidelity { samples, convention } => (
            None,
            Some(objective_avg_fidelity_with(&best_point, samples, seed, convention)?),
        ),
    };
    let method = format!(
        "nelder-mead(softmax, {starts_run} starts){}",
        if grid { " + grid(step 0.05)" } else { "" }
    );
    Ok(OptimizationReport {
        objective: objective.tag().to_string(),
        n,
        uniform_reference: objective.evaluate(&uniform),
        best_point,
        best_value,
        method,
        evaluations: evals,
        budget_exhausted: exhausted,
        certificate,
        mc_check,
    })
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

/// Softmax of `(z_0, ..., z_(n-1), 0)`; the last logit is pinned.
fn softmax(z: &[f64]) -> Vec<f64> {
    let peak = z.iter().copied().fold(0.0, f64::max);
    let mut e: Vec<f64> = z.iter().map(|x| (x - peak).exp()).collect();
    e.push((-peak).exp());
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// All points with coordinates in multiples of `1/steps`.
fn simplex_grid(n: usize, steps: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n + 1];
    fn rec(pos: usize, left: usize, cur: &mut Vec<usize>, steps: usize, out: &mut Vec<Vec<f64>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.iter().map(|&k| k as f64 / steps as f64).collect());
            return;
        }
        for k in 0..=left {
            cur[pos] = k;
            rec(pos + 1, left - k, cur, steps, out);
        }
    }
    rec(0, steps, &mut cur, steps, &mut out);
    out
}

struct NmResult {
    x: Vec<f64>,
    value: f64,
    evaluations: usize,
    exhausted: bool,
}

/// Nelder-Mead followed by restarts from the incumbent with a shrinking
/// initial simplex, until a restart no longer improves the value.
fn nelder_mead_with_restarts<F: Fn(&[f64]) -> f64>(f: &F, x0: Vec<f64>, max_evals: usize) -> NmResult {
    let mut run = nelder_mead(f, &x0, 1.0, max_evals);
    let mut step = 0.25;
    for _ in 0..12 {
        if run.exhausted {
            break;
        }
        let next = nelder_mead(f, &run.x, step, max_evals - run.evaluations);
        let evaluations = run.evaluations + next.evaluations;
        let improved = next.value < run.value;
        if improved {
            run = NmResult { evaluations, ..next };
        } else {
            run.evaluations = evaluations;
            run.exhausted |= next.exhausted;
            step *= 0.1;
            if step < 1e-9 {
                break;
            }
        }
    }
    run
}

/// Adaptive-coefficient Nelder-Mead minimizer.
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], step: f64, max_evals: usize) -> NmResult {
    let d = x0.len();
    let dim = d as f64;
    let (alpha, gamma, rho, sigma) = if d >= 2 {
        (1.0, 1.0 + 2.0 / dim, 0.75 - 1.0 / (2.0 * dim), 1.0 - 1.0 / dim)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let mut exhausted = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[d].1 - simplex[0].1;
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= 1e-15 && size <= 1e-10 {
            break;
        }
        if size <= 1e-13 {
            break;
        }
        if evals + d + 2 > max_evals {
            exhausted = true;
            break;
        }

        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim;
            }
        }
        let worst = simplex[d].clone();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(alpha * gamma);
            let fe = eval(&xe, &mut evals);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = along(alpha * rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    for (xi, bi) in x.iter_mut().zip(&best) {
                        *xi = bi + sigma * (*xi - bi);
                    }
                    *v = eval(x, &mut evals);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    NmResult {
        x,
        value,
        evaluations: evals,
        exhausted,
    }
}
