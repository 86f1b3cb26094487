//! Polarization encoding of the protocol and the optical correction circuit.
//!
//! Each spatial mode `k` carries two slots, `2k` (horizontal) and `2k + 1`
//! (vertical). The logical qubit is `alpha|H> + beta|V>`; the resource state
//! places one photon in every spatial mode, with `|V>` playing the role of an
//! occupied mode in the photon-number encoding.
//!
//! The correction circuit works on a single photon spread over four spatial
//! modes: [`H_ARM`], [`V_ARM`], [`DETECTOR_MODE`] and [`OUTPUT_MODE`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{measure_photon_counts, tensor, FockBasisState, PureState, QubitAmplitudes, NORM_TOLERANCE};
use crate::optics::{apply, embed, fourier_unitary, ModeUnitary};
use crate::teleport::{
    aggregate, check_single_fock, extract_qubit, reconcile, run_analytic, OracleConfig, ResourceCoefficients,
    TeleportOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    fn offset(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }
}

/// Slot index of `(mode, polarization)`.
pub fn slot(mode: usize, pol: Polarization) -> usize {
    2 * mode + pol.offset()
}

/// A Fock state over `(spatial mode, polarization)` slots.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizedPhotonState {
    spatial_modes: usize,
    state: PureState,
}

impl PolarizedPhotonState {
    pub fn from_fock(state: PureState) -> Result<Self> {
        if !state.modes().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "polarized state needs an even slot count, got {}",
                state.modes()
            )));
        }
        state.check_normalized()?;
        Ok(PolarizedPhotonState {
            spatial_modes: state.modes() / 2,
            state,
        })
    }

    /// One photon in a single spatial mode, `alpha|H> + beta|V>`.
    pub fn from_qubit(q: &QubitAmplitudes) -> Self {
        let mut s = PureState::empty(2);
        s.add(FockBasisState::new(vec![1, 0]), q.alpha);
        s.add(FockBasisState::new(vec![0, 1]), q.beta);
        s.prune(crate::fock::PRUNE_THRESHOLD);
        PolarizedPhotonState {
            spatial_modes: 1,
            state: s,
        }
    }

    pub fn spatial_modes(&self) -> usize {
        self.spatial_modes
    }

    pub fn as_fock(&self) -> &PureState {
        &self.state
    }

    pub fn is_single_photon(&self) -> bool {
        self.state.photon_numbers() == [1]
    }

    /// Amplitude of one photon in `(mode, pol)` and vacuum elsewhere.
    pub fn single_photon_amplitude(&self, mode: usize, pol: Polarization) -> Complex64 {
        let mut occ = vec![0u32; 2 * self.spatial_modes];
        occ[slot(mode, pol)] = 1;
        self.state.amplitude(&FockBasisState::new(occ))
    }
}

/// Outcome of the polarization-encoded protocol with its detected counts.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationOutcome {
    pub outcome: TeleportOutcome,
    /// Horizontal photons counted in spatial modes `0..=n`.
    pub horizontal: usize,
    /// Vertical photons counted in spatial modes `0..=n`; equals `m`.
    pub vertical: usize,
}

/// Closed-form outcomes with logical 0/1 read as H/V.
pub fn run_analytic_polarization(rc: &ResourceCoefficients, q: &QubitAmplitudes) -> Vec<PolarizationOutcome> {
    let n = rc.n();
    run_analytic(rc, q)
        .into_iter()
        .map(|o| PolarizationOutcome {
            horizontal: n + 1 - o.m,
            vertical: o.m,
            outcome: o,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationOracleRun {
    pub patterns: Vec<PolarizationOutcome>,
    pub aggregated: Vec<PolarizationOutcome>,
    pub max_deviation: f64,
}

/// Default oracle settings for the polarization encoding; the slot count is
/// twice that of the photon-number encoding.
pub fn polarization_oracle_config() -> OracleConfig {
    OracleConfig {
        max_n: 3,
        tolerance: 1e-10,
    }
}

/// The `4n`-slot polarization resource state.
pub fn build_polarized_resource_state(rc: &ResourceCoefficients) -> Result<PureState> {
    let n = rc.n();
    let terms = rc.coefficients().iter().enumerate().map(|(i, &c)| {
        let mut occ = vec![0u32; 4 * n];
        for j in 0..n {
            let first = if j < i { Polarization::V } else { Polarization::H };
            let second = if j < i { Polarization::H } else { Polarization::V };
            occ[slot(j, first)] = 1;
            occ[slot(n + j, second)] = 1;
        }
        (FockBasisState::new(occ), c)
    });
    PureState::from_terms(4 * n, terms)
}

pub fn run_oracle_polarization(rc: &ResourceCoefficients, q: &QubitAmplitudes) -> Result<PolarizationOracleRun> {
    run_oracle_polarization_with(rc, q, &polarization_oracle_config())
}

/// Fock-space simulation over `2(2n+1)` slots. The Fourier transform acts
/// identically on the H and V slots of spatial modes `0..=n`.
pub fn run_oracle_polarization_with(
    rc: &ResourceCoefficients,
    q: &QubitAmplitudes,
    config: &OracleConfig,
) -> Result<PolarizationOracleRun> {
    let n = rc.n();
    if n > config.max_n {
        return Err(Error::OracleLimit { n, limit: config.max_n });
    }
    let tol = config.tolerance;
    let slots = 2 * (2 * n + 1);

    let input = tensor(
        PolarizedPhotonState::from_qubit(q).as_fock(),
        &build_polarized_resource_state(rc)?,
    )?;
    let f = fourier_unitary(n + 1)?;
    let h_slots: Vec<usize> = (0..=n).map(|k| slot(k, Polarization::H)).collect();
    let v_slots: Vec<usize> = (0..=n).map(|k| slot(k, Polarization::V)).collect();
    let u = embed(&f, &h_slots, slots)?.compose(&embed(&f, &v_slots, slots)?)?;
    let evolved = apply(&u, &input)?;
    let measured: Vec<usize> = (0..2 * (n + 1)).collect();
    let branches = measure_photon_counts(&evolved, &measured)?;

    let mut patterns = Vec::with_capacity(branches.len());
    let mut deviation: f64 = 0.0;
    for br in branches {
        let occ = br.pattern.occupations();
        let horizontal: usize = occ.iter().step_by(2).map(|&x| x as usize).sum();
        let vertical: usize = occ.iter().skip(1).step_by(2).map(|&x| x as usize).sum();
        if horizontal + vertical != n + 1 {
            return Err(Error::Factorization {
                pattern: br.pattern.to_string(),
                reason: format!("counted {} photons, expected {}", horizontal + vertical, n + 1),
            });
        }
        let m = vertical;
        let outcome = if m == 0 || m == n + 1 {
            let fill = if m == 0 { Polarization::V } else { Polarization::H };
            let mut expected = vec![0u32; 2 * n];
            for j in 0..n {
                expected[slot(j, fill)] = 1;
            }
            check_single_fock(&br.conditional, &FockBasisState::new(expected), &br.pattern)?;
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
            let (zero, one) = polarized_success_basis(n, m);
            let qubit = m - 1;
            let oracle = extract_qubit(
                &br.conditional,
                &zero,
                &one,
                &[slot(qubit, Polarization::H), slot(qubit, Polarization::V)],
                &br.pattern,
                tol,
            )?;
            let analytic = (q.alpha * rc.coeff(m as i64), q.beta * rc.coeff(m as i64 - 1));
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
        patterns.push(PolarizationOutcome {
            outcome,
            horizontal,
            vertical,
        });
    }
    patterns.sort_by(|a, b| (a.outcome.m, &a.outcome.pattern).cmp(&(b.outcome.m, &b.outcome.pattern)));

    let analytic = run_analytic(rc, q);
    let flat: Vec<TeleportOutcome> = patterns.iter().map(|p| p.outcome.clone()).collect();
    let aggregated: Vec<PolarizationOutcome> = aggregate(&flat, &analytic)
        .into_iter()
        .map(|o| PolarizationOutcome {
            horizontal: n + 1 - o.m,
            vertical: o.m,
            outcome: o,
        })
        .collect();
    for (agg, an) in aggregated.iter().zip(&analytic) {
        deviation = deviation.max((agg.outcome.probability - an.probability).abs());
    }
    if deviation > tol {
        return Err(Error::OracleMismatch {
            deviation,
            tolerance: tol,
        });
    }
    Ok(PolarizationOracleRun {
        patterns,
        aggregated,
        max_deviation: deviation,
    })
}

/// Slots of spatial modes `n+1..=2n` with the qubit in mode `n + m` as H and
/// as V; earlier modes hold H photons, later ones V photons.
fn polarized_success_basis(n: usize, m: usize) -> (FockBasisState, FockBasisState) {
    let mut base = vec![0u32; 2 * n];
    for j in 0..n {
        if j < m - 1 {
            base[slot(j, Polarization::H)] = 1;
        } else if j > m - 1 {
            base[slot(j, Polarization::V)] = 1;
        }
    }
    let mut zero = base.clone();
    zero[slot(m - 1, Polarization::H)] = 1;
    let mut one = base;
    one[slot(m - 1, Polarization::V)] = 1;
    (FockBasisState::new(zero), FockBasisState::new(one))
}

/// Mode 1 of the correction setup: horizontal output of the first PBS.
pub const H_ARM: usize = 0;
/// Mode 2: vertical output of the first PBS.
pub const V_ARM: usize = 1;
/// Mode 3: port watched by the detector.
pub const DETECTOR_MODE: usize = 2;
/// Mode 4: surviving port of the rotated PBS.
pub const OUTPUT_MODE: usize = 3;

const CIRCUIT_MODES: usize = 4;
const CIRCUIT_SLOTS: usize = 2 * CIRCUIT_MODES;

/// A polarizing beam splitter whose reflect/transmit basis is rotated by
/// `theta`: it reflects `|H'> = cos θ|H> - sin θ|V>` and transmits
/// `|V'> = cos θ|V> + sin θ|H>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedPBS {
    pub theta: f64,
    pub input_mode: usize,
    pub reflect_mode: usize,
    pub transmit_mode: usize,
}

impl RotatedPBS {
    /// `|H'>` in the `(H, V)` basis.
    pub fn reflected_polarization(&self) -> [f64; 2] {
        [self.theta.cos(), -self.theta.sin()]
    }

    /// `|V'>` in the `(H, V)` basis.
    pub fn transmitted_polarization(&self) -> [f64; 2] {
        [self.theta.sin(), self.theta.cos()]
    }

    /// Largest deviation of `{H', V'}` from an orthonormal pair.
    pub fn orthogonality_error(&self) -> f64 {
        let h = self.reflected_polarization();
        let v = self.transmitted_polarization();
        let dot = h[0] * v[0] + h[1] * v[1];
        let nh = h[0] * h[0] + h[1] * h[1];
        let nv = v[0] * v[0] + v[1] * v[1];
        dot.abs().max((nh - 1.0).abs()).max((nv - 1.0).abs())
    }

    /// Single-photon action on the circuit slots: the `H'` component of the
    /// input mode is exchanged with that of the reflect mode, the `V'`
    /// component with that of the transmit mode.
    pub fn unitary(&self, modes: usize) -> ModeUnitary {
        let dim = 2 * modes;
        let mut u = vec![Complex64::new(0.0, 0.0); dim * dim];
        for k in 0..dim {
            u[k * dim + k] = Complex64::new(1.0, 0.0);
        }
        let h = self.reflected_polarization();
        let v = self.transmitted_polarization();
        let swaps = [(self.reflect_mode, h), (self.transmit_mode, v)];
        for (other, pol) in swaps {
            if other == self.input_mode {
                continue;
            }
            let x = [
                (slot(self.input_mode, Polarization::H), pol[0]),
                (slot(self.input_mode, Polarization::V), pol[1]),
            ];
            let y = [
                (slot(other, Polarization::H), pol[0]),
                (slot(other, Polarization::V), pol[1]),
            ];
            // U += |x><y| + |y><x| - |x><x| - |y><y|
            for &(i, a) in x.iter().chain(&y) {
                for &(j, b) in x.iter().chain(&y) {
                    let same_side = x.iter().any(|e| e.0 == i) == x.iter().any(|e| e.0 == j);
                    let sign = if same_side { -1.0 } else { 1.0 };
                    u[i * dim + j] += Complex64::new(sign * a * b, 0.0);
                }
            }
        }
        ModeUnitary::new(dim, u).expect("rotated PBS is unitary")
    }
}

/// Rotation of the polarization in `mode` by `theta`, taking `|H'>` to
/// `|H>` and `|V'>` to `|V>`.
fn polarization_rotation(mode: usize, theta: f64, modes: usize) -> ModeUnitary {
    let (s, c) = theta.sin_cos();
    let block = ModeUnitary::new(
        2,
        vec![
            Complex64::new(c, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(c, 0.0),
        ],
    )
    .expect("rotation is unitary");
    embed(
        &block,
        &[slot(mode, Polarization::H), slot(mode, Polarization::V)],
        2 * modes,
    )
    .expect("valid slots")
}

fn phase_plate(mode: usize, phase: Complex64, modes: usize) -> ModeUnitary {
    let block = ModeUnitary::new(
        2,
        vec![phase, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), phase],
    )
    .expect("phase plate is unitary");
    embed(
        &block,
        &[slot(mode, Polarization::H), slot(mode, Polarization::V)],
        2 * modes,
    )
    .expect("valid slots")
}

fn mat_vec(u: &ModeUnitary, v: &[Complex64]) -> Vec<Complex64> {
    let d = u.dim();
    (0..d).map(|i| (0..d).map(|j| u.entry(i, j) * v[j]).sum()).collect()
}

/// Which arm carries the rotated PBS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionArm {
    /// `|c_m| = |c_(m-1)|`: nothing to attenuate.
    Balanced,
    /// `|c_m| < |c_(m-1)|`: the vertical arm (mode 2) is attenuated.
    Vertical,
    /// `|c_m| > |c_(m-1)|`: the horizontal arm (mode 1) is attenuated.
    Horizontal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitOutcome {
    pub arm: CorrectionArm,
    pub pbs: RotatedPBS,
    /// Probability that the detector stays dark.
    pub p_success: f64,
    /// Amplitude sent to the detector, along the polarization it receives.
    pub failure_amplitude: Complex64,
    /// Norm of the photon just before the detector projection.
    pub norm_before_detection: f64,
    /// Logical qubit (H in the horizontal rail, V in the vertical rail) when
    /// the detector stays dark; `None` if that has probability zero.
    pub recovered: Option<QubitAmplitudes>,
}

/// Runs the correction circuit on the teleported single photon for outcome `m`.
///
/// The photon is split by a PBS into mode 1 (H) and mode 2 (V). The arm with
/// the larger coefficient passes a rotated PBS with `cos θ` equal to the
/// coefficient ratio; its detector port is mode 3 and its surviving port mode
/// 4. A phase plate and a polarization rotation on mode 4 then restore the
/// input qubit, carried by mode 1 and mode 4 (or mode 4 and mode 2 when the
/// horizontal arm was attenuated).
pub fn correction_circuit(
    m: usize,
    rc: &ResourceCoefficients,
    teleported: &PolarizedPhotonState,
) -> Result<CircuitOutcome> {
    let n = rc.n();
    if !(1..=n).contains(&m) {
        return Err(Error::NotSuccessOutcome { m, n });
    }
    if teleported.spatial_modes() != 1 || !teleported.is_single_photon() {
        return Err(Error::NotSinglePhoton(format!(
            "{} spatial modes, photon numbers {:?}",
            teleported.spatial_modes(),
            teleported.as_fock().photon_numbers()
        )));
    }
    let cm = rc.coeff(m as i64);
    let cprev = rc.coeff(m as i64 - 1);
    if cm.norm_sqr() == 0.0 && cprev.norm_sqr() == 0.0 {
        return Err(Error::UndefinedKraus { m });
    }

    let mut amps = vec![Complex64::new(0.0, 0.0); CIRCUIT_SLOTS];
    amps[slot(H_ARM, Polarization::H)] = teleported.single_photon_amplitude(0, Polarization::H);
    amps[slot(H_ARM, Polarization::V)] = teleported.single_photon_amplitude(0, Polarization::V);

    let first = RotatedPBS {
        theta: 0.0,
        input_mode: H_ARM,
        reflect_mode: H_ARM,
        transmit_mode: V_ARM,
    };
    amps = mat_vec(&first.unitary(CIRCUIT_MODES), &amps);

    let unit = |z: Complex64| {
        if z.norm() > 0.0 {
            z / z.norm()
        } else {
            Complex64::new(1.0, 0.0)
        }
    };
    let (arm, pbs, plate) = if cm.norm_sqr() <= cprev.norm_sqr() {
        let arm = if cm.norm_sqr() == cprev.norm_sqr() {
            CorrectionArm::Balanced
        } else {
            CorrectionArm::Vertical
        };
        let ratio = (cm.norm() / cprev.norm()).min(1.0);
        let pbs = RotatedPBS {
            theta: ratio.acos(),
            input_mode: V_ARM,
            reflect_mode: DETECTOR_MODE,
            transmit_mode: OUTPUT_MODE,
        };
        (arm, pbs, unit(cm) * unit(cprev).conj())
    } else {
        let ratio = (cprev.norm() / cm.norm()).min(1.0);
        let pbs = RotatedPBS {
            theta: ratio.acos(),
            input_mode: H_ARM,
            reflect_mode: OUTPUT_MODE,
            transmit_mode: DETECTOR_MODE,
        };
        (CorrectionArm::Horizontal, pbs, unit(cprev) * unit(cm).conj())
    };
    amps = mat_vec(&pbs.unitary(CIRCUIT_MODES), &amps);
    let norm_before_detection = amps.iter().map(|a| a.norm_sqr()).sum::<f64>();

    let toward_detector = match arm {
        CorrectionArm::Horizontal => pbs.transmitted_polarization(),
        _ => pbs.reflected_polarization(),
    };
    let failure_amplitude = amps[slot(DETECTOR_MODE, Polarization::H)] * toward_detector[0]
        + amps[slot(DETECTOR_MODE, Polarization::V)] * toward_detector[1];

    amps[slot(DETECTOR_MODE, Polarization::H)] = Complex64::new(0.0, 0.0);
    amps[slot(DETECTOR_MODE, Polarization::V)] = Complex64::new(0.0, 0.0);
    let p_success = amps.iter().map(|a| a.norm_sqr()).sum::<f64>();

    amps = mat_vec(&phase_plate(OUTPUT_MODE, plate, CIRCUIT_MODES), &amps);
    amps = mat_vec(&polarization_rotation(OUTPUT_MODE, pbs.theta, CIRCUIT_MODES), &amps);

    let (zero_slot, one_slot) = match arm {
        CorrectionArm::Horizontal => (slot(OUTPUT_MODE, Polarization::H), slot(V_ARM, Polarization::V)),
        _ => (slot(H_ARM, Polarization::H), slot(OUTPUT_MODE, Polarization::V)),
    };
    let stray: f64 = amps
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != zero_slot && *i != one_slot)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    if stray > NORM_TOLERANCE {
        return Err(Error::Factorization {
            pattern: format!("correction arm {arm:?}"),
            reason: format!("photon left the logical rails (weight {stray:.3e})"),
        });
    }
    let recovered = if p_success > 0.0 {
        QubitAmplitudes::normalized(amps[zero_slot], amps[one_slot]).ok()
    } else {
        None
    };
    Ok(CircuitOutcome {
        arm,
        pbs,
        p_success,
        failure_amplitude,
        norm_before_detection,
        recovered,
    })
}
