//! Teleportation of a photon-number qubit through a multimode resource state.
//!
//! Mode layout on the full `2n + 1` mode system: mode 0 carries the input
//! qubit, modes `1..=n` the first half of the resource state and modes
//! `n+1..=2n` the second half. When `m` photons are counted in modes
//! `0..=n`, the qubit reappears in mode `n + m`.
//!
//! Two routes are provided: [`run_analytic`] evaluates the closed-form
//! outcome distribution and [`run_oracle`] simulates the optics in Fock space
//! and reconciles every detection pattern against the analytic result.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{measure_photon_counts, tensor, FockBasisState, PureState, QubitAmplitudes, NORM_TOLERANCE};
use crate::optics::{apply, embed, fourier_unitary, transition_amplitude};

/// Squared-norm tolerance applied when reading coefficient files.
pub const FILE_NORM_TOLERANCE: f64 = 1e-9;

/// Amplitudes smaller than this are treated as absent when deriving phases.
const PHASE_EPS: f64 = 1e-12;

/// Coefficients `c_0..c_n` of the resource state, normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceCoefficients {
    c: Vec<Complex64>,
}

impl ResourceCoefficients {
    pub fn new(c: Vec<Complex64>) -> Result<Self> {
        Self::check_shape(&c)?;
        let norm_sqr: f64 = c.iter().map(|x| x.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(ResourceCoefficients { c })
    }

    /// Rescales `c` to unit norm.
    pub fn normalized(c: Vec<Complex64>) -> Result<Self> {
        Self::check_shape(&c)?;
        let norm = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(ResourceCoefficients {
            c: c.into_iter().map(|x| x / norm).collect(),
        })
    }

    /// The maximally entangled resource, `c_i = 1/sqrt(n+1)`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidCoefficients("n must be at least 1".into()));
        }
        let v = Complex64::new(1.0 / ((n + 1) as f64).sqrt(), 0.0);
        Ok(ResourceCoefficients { c: vec![v; n + 1] })
    }

    /// Real nonnegative coefficients from squared moduli `|c_i|^2`.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| w.is_nan() || **w < 0.0) {
            return Err(Error::InvalidCoefficients(format!("negative or non-finite weight {w}")));
        }
        Self::new(weights.iter().map(|w| Complex64::new(w.sqrt(), 0.0)).collect())
    }

    fn check_shape(c: &[Complex64]) -> Result<()> {
        if c.len() < 2 {
            return Err(Error::InvalidCoefficients(format!(
                "need at least 2 coefficients (n >= 1), got {}",
                c.len()
            )));
        }
        if c.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::InvalidCoefficients("non-finite coefficient".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.c.len() - 1
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.c
    }

    /// `c_i`, zero outside `0..=n`.
    pub fn coeff(&self, i: i64) -> Complex64 {
        if i < 0 || i as usize >= self.c.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.c[i as usize]
        }
    }

    /// `|c_i|^2`, zero outside `0..=n`.
    pub fn weight(&self, i: i64) -> f64 {
        self.coeff(i).norm_sqr()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.c.iter().map(|x| x.norm_sqr()).collect()
    }
}

/// JSON coefficient file: `{"n": 2, "c": [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub n: usize,
    pub c: Vec<[f64; 2]>,
}

impl CoefficientFile {
    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::CoefficientFile(e.to_string()))
    }

    pub fn from_coefficients(rc: &ResourceCoefficients) -> Self {
        CoefficientFile {
            n: rc.n(),
            c: rc.coefficients().iter().map(|x| [x.re, x.im]).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("coefficient file serializes")
    }

    /// Validates the file. The squared norm must be within
    /// [`FILE_NORM_TOLERANCE`] of 1 unless `renormalize` is set; accepted
    /// coefficients are always rescaled to unit norm.
    pub fn into_coefficients(self, renormalize: bool) -> Result<ResourceCoefficients> {
        if self.n == 0 {
            return Err(Error::CoefficientFile("n must be at least 1".into()));
        }
        if self.c.len() != self.n + 1 {
            return Err(Error::CoefficientFile(format!(
                "expected {} coefficients for n = {}, found {}",
                self.n + 1,
                self.n,
                self.c.len()
            )));
        }
        let c: Vec<Complex64> = self.c.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        let norm_sqr: f64 = c.iter().map(|x| x.norm_sqr()).sum();
        if !renormalize && (norm_sqr.is_nan() || (norm_sqr - 1.0).abs() > FILE_NORM_TOLERANCE) {
            return Err(Error::CoefficientFile(format!(
                "squared norm {norm_sqr} differs from 1 by more than {FILE_NORM_TOLERANCE:e}; pass --renormalize to rescale"
            )));
        }
        ResourceCoefficients::normalized(c)
    }
}

/// One outcome of the photon-count measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct TeleportOutcome {
    /// Resource size.
    pub n: usize,
    /// Total photons counted in modes `0..=n`.
    pub m: usize,
    /// Full detection pattern (oracle path only).
    pub pattern: Option<FockBasisState>,
    pub probability: f64,
    /// Mode `n + m` holding the qubit, for success-class outcomes.
    pub qubit_mode: Option<usize>,
    /// Normalized qubit after phase correction; `None` on failure outcomes
    /// and on success-class outcomes of zero probability.
    pub conditional: Option<QubitAmplitudes>,
    /// `exp(i phi)` removed from the `|1>` component (oracle path only).
    pub corrective_phase: Option<Complex64>,
}

impl TeleportOutcome {
    pub fn is_success_class(&self) -> bool {
        (1..=self.n).contains(&self.m)
    }

    /// The logical state handed on: the conditional qubit for success-class
    /// outcomes, logical 0 for `m = 0` and logical 1 for `m = n + 1`.
    pub fn output_qubit(&self) -> Option<QubitAmplitudes> {
        if self.m == 0 {
            Some(QubitAmplitudes::zero())
        } else if self.m == self.n + 1 {
            Some(QubitAmplitudes::one())
        } else {
            self.conditional
        }
    }
}

/// The `2n`-mode resource state `Σ_i c_i |1>^i|0>^(n-i) |0>^i|1>^(n-i)`.
pub fn build_resource_state(rc: &ResourceCoefficients) -> Result<PureState> {
    let n = rc.n();
    let terms = rc
        .coefficients()
        .iter()
        .enumerate()
        .map(|(i, &c)| (resource_term(n, i), c));
    PureState::from_terms(2 * n, terms)
}

fn resource_term(n: usize, i: usize) -> FockBasisState {
    let mut occ = vec![0u32; 2 * n];
    occ[..i].fill(1);
    occ[n + i..].fill(1);
    FockBasisState::new(occ)
}

/// `p(m) = |alpha c_m|^2 + |beta c_(m-1)|^2`.
pub fn outcome_probability(rc: &ResourceCoefficients, q: &QubitAmplitudes, m: usize) -> f64 {
    let m = m as i64;
    (q.alpha * rc.coeff(m)).norm_sqr() + (q.beta * rc.coeff(m - 1)).norm_sqr()
}

/// Closed-form outcome distribution for `m = 0..=n+1`.
pub fn run_analytic(rc: &ResourceCoefficients, q: &QubitAmplitudes) -> Vec<TeleportOutcome> {
    let n = rc.n();
    (0..=n + 1)
        .map(|m| {
            let probability = outcome_probability(rc, q, m);
            let success = (1..=n).contains(&m);
            let conditional = if success && probability > 0.0 {
                QubitAmplitudes::normalized(q.alpha * rc.coeff(m as i64), q.beta * rc.coeff(m as i64 - 1)).ok()
            } else {
                None
            };
            TeleportOutcome {
                n,
                m,
                pattern: None,
                probability,
                qubit_mode: success.then_some(n + m),
                conditional,
                corrective_phase: None,
            }
        })
        .collect()
}

/// The analytic conditional qubit for outcome `m`, unnormalized.
fn analytic_pair(rc: &ResourceCoefficients, q: &QubitAmplitudes, m: usize) -> (Complex64, Complex64) {
    (q.alpha * rc.coeff(m as i64), q.beta * rc.coeff(m as i64 - 1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Largest resource size the Fock-space simulation accepts.
    pub max_n: usize,
    /// Agreement required between the oracle and the analytic path.
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_n: 4,
            tolerance: 1e-10,
        }
    }
}

/// Result of a Fock-space simulation of the protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    /// One entry per detection pattern, ordered by `m` then pattern.
    pub patterns: Vec<TeleportOutcome>,
    /// Patterns aggregated by `m`, for `m = 0..=n+1`.
    pub aggregated: Vec<TeleportOutcome>,
    /// Largest deviation from the analytic path seen in any probability or
    /// corrected qubit amplitude.
    pub max_deviation: f64,
}

/// Simulates the protocol in Fock space with the default [`OracleConfig`].
pub fn run_oracle(rc: &ResourceCoefficients, q: &QubitAmplitudes) -> Result<OracleRun> {
    run_oracle_with(rc, q, &OracleConfig::default())
}

pub fn run_oracle_with(rc: &ResourceCoefficients, q: &QubitAmplitudes, config: &OracleConfig) -> Result<OracleRun> {
    let n = rc.n();
    if n > config.max_n {
        return Err(Error::OracleLimit { n, limit: config.max_n });
    }
    let tol = config.tolerance;
    let total_modes = 2 * n + 1;
    let measured: Vec<usize> = (0..=n).collect();

    let input = tensor(&q.to_single_mode(), &build_resource_state(rc)?)?;
    let fourier = embed(&fourier_unitary(n + 1)?, &measured, total_modes)?;
    let evolved = apply(&fourier, &input)?;
    let branches = measure_photon_counts(&evolved, &measured)?;

    let mut patterns = Vec::with_capacity(branches.len());
    let mut deviation: f64 = 0.0;
    for br in branches {
        let m = br.pattern.total() as usize;
        let outcome = if m == 0 || m == n + 1 {
            let expected = failure_spectators(n, m);
            check_single_fock(&br.conditional, &expected, &br.pattern)?;
            TeleportOutcome {
                n,
                m,
                pattern: Some(br.pattern),
                probability: br.probability,
                qubit_mode: None,
                conditional: None,
                corrective_phase: None,
            }
        } else {
            let (zero, one) = success_basis(n, m);
            let oracle = extract_qubit(&br.conditional, &zero, &one, &[m - 1], &br.pattern, tol)?;
            let analytic = analytic_pair(rc, q, m);
            let rec = reconcile(oracle, analytic, tol)?;
            deviation = deviation.max(rec.deviation);
            TeleportOutcome {
                n,
                m,
                pattern: Some(br.pattern),
                probability: br.probability,
                qubit_mode: Some(n + m),
                conditional: Some(rec.corrected),
                corrective_phase: Some(rec.phase),
            }
        };
        patterns.push(outcome);
    }
    patterns.sort_by(|a, b| (a.m, &a.pattern).cmp(&(b.m, &b.pattern)));

    let analytic = run_analytic(rc, q);
    let aggregated = aggregate(&patterns, &analytic);
    for (agg, an) in aggregated.iter().zip(&analytic) {
        deviation = deviation.max((agg.probability - an.probability).abs());
    }
    if deviation > tol {
        return Err(Error::OracleMismatch {
            deviation,
            tolerance: tol,
        });
    }
    Ok(OracleRun {
        patterns,
        aggregated,
        max_deviation: deviation,
    })
}

/// Sums pattern probabilities per `m`; the representative conditional qubit
/// is the one from the most likely pattern.
pub(crate) fn aggregate(patterns: &[TeleportOutcome], analytic: &[TeleportOutcome]) -> Vec<TeleportOutcome> {
    analytic
        .iter()
        .map(|an| {
            let group: Vec<&TeleportOutcome> = patterns.iter().filter(|p| p.m == an.m).collect();
            let probability = group.iter().map(|p| p.probability).sum();
            let best = group
                .iter()
                .max_by(|a, b| a.probability.total_cmp(&b.probability))
                .and_then(|p| p.conditional);
            TeleportOutcome {
                n: an.n,
                m: an.m,
                pattern: None,
                probability,
                qubit_mode: an.qubit_mode,
                conditional: best,
                corrective_phase: None,
            }
        })
        .collect()
}

/// Occupations of modes `n+1..=2n` after a failure outcome: all occupied for
/// `m = 0`, empty for `m = n + 1`.
fn failure_spectators(n: usize, m: usize) -> FockBasisState {
    FockBasisState::new(vec![if m == 0 { 1 } else { 0 }; n])
}

/// Basis states of modes `n+1..=2n` carrying logical 0 and logical 1 in mode
/// `n + m`. Modes after the qubit mode hold one photon, modes before it none.
fn success_basis(n: usize, m: usize) -> (FockBasisState, FockBasisState) {
    let mut zero = vec![0u32; n];
    zero[m..].fill(1);
    let mut one = zero.clone();
    one[m - 1] = 1;
    (FockBasisState::new(zero), FockBasisState::new(one))
}

pub(crate) fn check_single_fock(state: &PureState, expected: &FockBasisState, pattern: &FockBasisState) -> Result<()> {
    let ok = state.len() == 1 && (state.amplitude(expected).norm() - 1.0).abs() < 1e-10;
    if ok {
        Ok(())
    } else {
        Err(Error::Factorization {
            pattern: pattern.to_string(),
            reason: format!("expected the Fock state {expected}, found {} terms", state.len()),
        })
    }
}

/// Reads the qubit amplitudes out of a conditional state after checking that
/// it is a product of the qubit mode with a fixed spectator Fock state.
pub(crate) fn extract_qubit(
    state: &PureState,
    zero: &FockBasisState,
    one: &FockBasisState,
    qubit_slots: &[usize],
    pattern: &FockBasisState,
    tol: f64,
) -> Result<(Complex64, Complex64)> {
    let impurity = state.bipartite_impurity(qubit_slots);
    if impurity > tol {
        return Err(Error::Factorization {
            pattern: pattern.to_string(),
            reason: format!("qubit entangled with spectators (impurity {impurity:.3e})"),
        });
    }
    if let Some((stray, _)) = state.iter().find(|(b, _)| *b != zero && *b != one) {
        return Err(Error::Factorization {
            pattern: pattern.to_string(),
            reason: format!("unexpected basis state {stray}"),
        });
    }
    Ok((state.amplitude(zero), state.amplitude(one)))
}

pub(crate) struct Reconciled {
    pub phase: Complex64,
    pub corrected: QubitAmplitudes,
    pub deviation: f64,
}

/// Finds `exp(i phi)` such that `diag(1, exp(-i phi))` maps the oracle qubit
/// onto the analytic one up to a global phase.
pub(crate) fn reconcile(
    oracle: (Complex64, Complex64),
    analytic: (Complex64, Complex64),
    tol: f64,
) -> Result<Reconciled> {
    let oracle = QubitAmplitudes::normalized(oracle.0, oracle.1)?;
    let analytic = QubitAmplitudes::normalized(analytic.0, analytic.1)?;
    let gap = (oracle.alpha.norm() - analytic.alpha.norm())
        .abs()
        .max((oracle.beta.norm() - analytic.beta.norm()).abs());
    if gap > tol {
        return Err(Error::PhaseIrreconcilable { gap });
    }
    let both = [oracle.alpha, oracle.beta, analytic.alpha, analytic.beta]
        .iter()
        .all(|x| x.norm() > PHASE_EPS);
    let phase = if both {
        let r = (oracle.beta / oracle.alpha) / (analytic.beta / analytic.alpha);
        r / r.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let corrected = QubitAmplitudes {
        alpha: oracle.alpha,
        beta: oracle.beta * phase.conj(),
    };
    let overlap = corrected.inner(&analytic);
    let global = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let aligned = QubitAmplitudes {
        alpha: corrected.alpha * global,
        beta: corrected.beta * global,
    };
    let deviation = (aligned.alpha - analytic.alpha)
        .norm()
        .max((aligned.beta - analytic.beta).norm());
    Ok(Reconciled {
        phase,
        corrected: aligned,
        deviation,
    })
}

/// Input occupations of the Fourier-transformed modes `0..=n` feeding outcome
/// `m`: (logical-0 branch, logical-1 branch).
fn measured_inputs(n: usize, m: usize) -> (FockBasisState, FockBasisState) {
    let mut zero = vec![0u32; n + 1];
    zero[1..=m].fill(1);
    let mut one = vec![0u32; n + 1];
    one[..m].fill(1);
    (FockBasisState::new(zero), FockBasisState::new(one))
}

/// The corrective phase for a single detection pattern, computed from the
/// Fourier transition amplitudes of the two branches feeding it.
///
/// Returns 1 when either branch is absent (nothing to correct).
pub fn derive_phase_correction(
    pattern: &FockBasisState,
    m: usize,
    rc: &ResourceCoefficients,
    q: &QubitAmplitudes,
) -> Result<Complex64> {
    let n = rc.n();
    if !(1..=n).contains(&m) {
        return Err(Error::NotSuccessOutcome { m, n });
    }
    if pattern.modes() != n + 1 || pattern.total() as usize != m {
        return Err(Error::InvalidArgument(format!(
            "pattern {pattern} is not an m = {m} pattern on {} modes",
            n + 1
        )));
    }
    let fourier = fourier_unitary(n + 1)?;
    let (in0, in1) = measured_inputs(n, m);
    let a0 = transition_amplitude(&fourier, &in0, pattern)?;
    let a1 = transition_amplitude(&fourier, &in1, pattern)?;
    let (x0, x1) = analytic_pair(rc, q, m);
    let oracle = (x0 * a0, x1 * a1);
    if oracle.0.norm_sqr() + oracle.1.norm_sqr() < 1e-30 {
        return Err(Error::ZeroProbability { m });
    }
    Ok(reconcile(oracle, (x0, x1), OracleConfig::default().tolerance)?.phase)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternPhase {
    pub m: usize,
    pub pattern: FockBasisState,
    /// Corrective phase in radians, in `(-pi, pi]`.
    pub phase: f64,
}

/// Empirical record of how the corrective phase varies across detection
/// patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReport {
    pub n: usize,
    pub entries: Vec<PatternPhase>,
    /// True if some `m` has patterns needing different corrections.
    pub depends_on_pattern: bool,
}

/// Runs the oracle with the uniform resource and a generic input qubit and
/// tabulates the corrective phase of every success-class pattern.
pub fn phase_dependence_report(n: usize) -> Result<PhaseReport> {
    let rc = ResourceCoefficients::uniform(n)?;
    let q = QubitAmplitudes::normalized(Complex64::new(0.8, 0.0), Complex64::from_polar(0.6, 0.7))?;
    let run = run_oracle(&rc, &q)?;
    let entries: Vec<PatternPhase> = run
        .patterns
        .iter()
        .filter_map(|o| {
            Some(PatternPhase {
                m: o.m,
                pattern: o.pattern.clone()?,
                phase: o.corrective_phase?.arg(),
            })
        })
        .collect();
    let depends_on_pattern = (1..=n).any(|m| {
        let mut phases = entries
            .iter()
            .filter(|e| e.m == m)
            .map(|e| Complex64::from_polar(1.0, e.phase));
        match phases.next() {
            Some(first) => phases.any(|p| (p - first).norm() > 1e-9),
            None => false,
        }
    });
    Ok(PhaseReport {
        n,
        entries,
        depends_on_pattern,
    })
}
