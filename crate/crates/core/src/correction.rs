//! Error correction after teleportation with an unbalanced resource.
//!
//! For outcome `m` the teleported qubit is `(alpha c_m, beta c_(m-1))`
//! normalized. A two-outcome generalized measurement `{E_S, E_F}` attenuates
//! whichever branch has the larger coefficient; on `S` the input qubit is
//! restored exactly. The joint probability `p(S, m)` is
//! `min(|c_(m-1)|^2, |c_m|^2)` for every input qubit, so the total success
//! probability is the sum of pairwise minima of the weight sequence. That sum
//! can also be written in terms of the sequence's local extrema, see
//! [`p_success_closed_form`].

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fock::QubitAmplitudes;
use crate::teleport::{outcome_probability, ResourceCoefficients, TeleportOutcome};

/// A 2×2 complex matrix in the logical `{|0>, |1>}` basis, row-major.
pub type Matrix2 = [[Complex64; 2]; 2];

fn diag(a: Complex64, b: Complex64) -> Matrix2 {
    let z = Complex64::new(0.0, 0.0);
    [[a, z], [z, b]]
}

fn mul_vec(m: &Matrix2, v: (Complex64, Complex64)) -> (Complex64, Complex64) {
    (m[0][0] * v.0 + m[0][1] * v.1, m[1][0] * v.0 + m[1][1] * v.1)
}

/// `m† m`.
fn gram(m: &Matrix2) -> Matrix2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = m[0][i].conj() * m[0][j] + m[1][i].conj() * m[1][j];
        }
    }
    out
}

/// The success/failure operators of the correcting measurement for outcome `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausPair {
    pub m: usize,
    pub e_s: Matrix2,
    pub e_f: Matrix2,
}

impl KrausPair {
    /// `max |(E_S†E_S + E_F†E_F - I)_{ij}|`.
    pub fn completeness_error(&self) -> f64 {
        let gs = gram(&self.e_s);
        let gf = gram(&self.e_f);
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gs[i][j] + gf[i][j] - id).norm());
            }
        }
        worst
    }

    /// `<psi| E_S† E_S |psi>`.
    pub fn success_probability(&self, psi: &QubitAmplitudes) -> f64 {
        let (a, b) = mul_vec(&self.e_s, (psi.alpha, psi.beta));
        a.norm_sqr() + b.norm_sqr()
    }
}

/// Kraus pair for outcome `m`, `1 <= m <= n`.
///
/// When `|c_(m-1)| <= |c_m|` the logical-0 branch is scaled by
/// `c_(m-1)/c_m`; otherwise the logical-1 branch is scaled by `c_m/c_(m-1)`.
/// Complex ratios are used as is, so the `S` branch also undoes the relative
/// phase between the coefficients.
pub fn kraus_for(m: usize, rc: &ResourceCoefficients) -> Result<KrausPair> {
    let n = rc.n();
    if !(1..=n).contains(&m) {
        return Err(Error::NotSuccessOutcome { m, n });
    }
    let cm = rc.coeff(m as i64);
    let cprev = rc.coeff(m as i64 - 1);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if cm.norm_sqr() == 0.0 && cprev.norm_sqr() == 0.0 {
        return Err(Error::UndefinedKraus { m });
    }
    let (e_s, e_f) = if cprev.norm_sqr() <= cm.norm_sqr() {
        let r = cprev / cm;
        let f = (1.0 - r.norm_sqr()).max(0.0).sqrt();
        (diag(r, one), diag(Complex64::new(f, 0.0), zero))
    } else {
        let r = cm / cprev;
        let f = (1.0 - r.norm_sqr()).max(0.0).sqrt();
        (diag(one, r), diag(zero, Complex64::new(f, 0.0)))
    };
    Ok(KrausPair { m, e_s, e_f })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionFlag {
    Success,
    Failure,
}

/// Performs the correcting measurement on a success-class outcome, sampling
/// the result with a ChaCha8 stream seeded by `seed`.
pub fn apply_correction(
    outcome: &TeleportOutcome,
    rc: &ResourceCoefficients,
    seed: u64,
) -> Result<(CorrectionFlag, QubitAmplitudes)> {
    if !outcome.is_success_class() {
        return Err(Error::NotSuccessOutcome {
            m: outcome.m,
            n: outcome.n,
        });
    }
    let psi = outcome.conditional.ok_or(Error::ZeroProbability { m: outcome.m })?;
    let kraus = kraus_for(outcome.m, rc)?;
    let p_s = kraus.success_probability(&psi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: f64 = rng.random();
    let (flag, op) = if u < p_s {
        (CorrectionFlag::Success, &kraus.e_s)
    } else {
        (CorrectionFlag::Failure, &kraus.e_f)
    };
    let (a, b) = mul_vec(op, (psi.alpha, psi.beta));
    Ok((flag, QubitAmplitudes::normalized(a, b)?))
}

/// `p(S, m) = min(|c_(m-1)|^2, |c_m|^2)`.
pub fn p_success_joint(m: usize, rc: &ResourceCoefficients) -> f64 {
    let m = m as i64;
    rc.weight(m - 1).min(rc.weight(m))
}

/// `p(S | m) = min(|c_(m-1)|^2, |c_m|^2) / p(m)`.
pub fn p_success_given_m(m: usize, rc: &ResourceCoefficients, q: &QubitAmplitudes) -> Result<f64> {
    let n = rc.n();
    if !(1..=n).contains(&m) {
        return Err(Error::NotSuccessOutcome { m, n });
    }
    let p = outcome_probability(rc, q, m);
    if p == 0.0 {
        return Err(Error::ZeroProbability { m });
    }
    Ok(p_success_joint(m, rc) / p)
}

/// Total success probability as the sum of pairwise minima.
pub fn p_success_total_brute(rc: &ResourceCoefficients) -> f64 {
    pairwise_minima_sum(&rc.weights())
}

pub(crate) fn pairwise_minima_sum(w: &[f64]) -> f64 {
    w.windows(2).map(|p| p[0].min(p[1])).sum()
}

/// Local extrema of the weight sequence `|c_m|^2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtremaClassification {
    /// Every local maximum, endpoints included.
    pub maxima: Vec<usize>,
    /// Local minima strictly inside `1..n`.
    pub interior_minima: Vec<usize>,
    /// False when two adjacent weights are equal; both lists are then empty.
    pub strict: bool,
}

pub fn classify_extrema(rc: &ResourceCoefficients) -> ExtremaClassification {
    classify_weights(&rc.weights())
}

pub(crate) fn classify_weights(w: &[f64]) -> ExtremaClassification {
    if w.windows(2).any(|p| p[0] == p[1]) {
        return ExtremaClassification {
            maxima: Vec::new(),
            interior_minima: Vec::new(),
            strict: false,
        };
    }
    let last = w.len() - 1;
    let mut maxima = Vec::new();
    let mut interior_minima = Vec::new();
    for m in 0..=last {
        let above_left = m == 0 || w[m] > w[m - 1];
        let above_right = m == last || w[m] > w[m + 1];
        if above_left && above_right {
            maxima.push(m);
        } else if m != 0 && m != last && w[m] < w[m - 1] && w[m] < w[m + 1] {
            interior_minima.push(m);
        }
    }
    ExtremaClassification {
        maxima,
        interior_minima,
        strict: true,
    }
}

/// `1 - Σ_max |c_m|^2 + Σ_(interior min) |c_m|^2`, defined for strict sequences.
pub fn p_success_closed_form(rc: &ResourceCoefficients) -> Result<f64> {
    closed_form_weights(&rc.weights())
}

pub(crate) fn closed_form_weights(w: &[f64]) -> Result<f64> {
    let ex = classify_weights(w);
    if !ex.strict {
        return Err(Error::Plateau);
    }
    let maxima: f64 = ex.maxima.iter().map(|&m| w[m]).sum();
    let minima: f64 = ex.interior_minima.iter().map(|&m| w[m]).sum();
    Ok(1.0 - maxima + minima)
}

/// A run of equal adjacent weights, `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub start: usize,
    pub end: usize,
}

/// Extrema of the run-length-compressed sequence. For display only: the
/// success probability is always taken from the pairwise-minima sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedExtrema {
    pub maxima: Vec<Run>,
    pub interior_minima: Vec<Run>,
}

pub fn classify_extrema_compressed(rc: &ResourceCoefficients) -> CompressedExtrema {
    let w = rc.weights();
    let mut runs: Vec<Run> = Vec::new();
    for (i, &x) in w.iter().enumerate() {
        match runs.last_mut() {
            Some(r) if w[r.start] == x => r.end = i,
            _ => runs.push(Run { start: i, end: i }),
        }
    }
    let values: Vec<f64> = runs.iter().map(|r| w[r.start]).collect();
    let last = w.len() - 1;
    let mut maxima = Vec::new();
    let mut interior_minima = Vec::new();
    if runs.len() == 1 {
        return CompressedExtrema {
            maxima,
            interior_minima,
        };
    }
    for (k, r) in runs.iter().enumerate() {
        let above_left = k == 0 || values[k] > values[k - 1];
        let above_right = k + 1 == runs.len() || values[k] > values[k + 1];
        let below_left = k > 0 && values[k] < values[k - 1];
        let below_right = k + 1 < runs.len() && values[k] < values[k + 1];
        if above_left && above_right {
            maxima.push(*r);
        } else if below_left && below_right && r.start != 0 && r.end != last {
            interior_minima.push(*r);
        }
    }
    CompressedExtrema {
        maxima,
        interior_minima,
    }
}
