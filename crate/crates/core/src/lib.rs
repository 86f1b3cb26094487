//! Linear-optical teleportation with arbitrary multimode resource states.
//!
//! The crate covers bosonic Fock states ([`fock`]), passive linear optics and
//! permanents ([`optics`]), the photon-number teleportation protocol with an
//! exact Fock-space oracle ([`teleport`]), the corrective two-outcome
//! measurement and success probabilities ([`correction`]), the polarization
//! encoding with its beam-splitter correction circuit ([`polarization`]) and
//! the search over resource weights ([`optimize`]).

pub mod correction;
pub mod error;
pub mod fock;
pub mod optics;
pub mod optimize;
pub mod polarization;
pub mod teleport;

pub use correction::{
    classify_extrema, kraus_for, p_success_closed_form, p_success_given_m, p_success_joint, p_success_total_brute,
    ExtremaClassification, KrausPair,
};
pub use error::{Error, Result};
pub use fock::{FockBasisState, PureState, QubitAmplitudes};
pub use optics::{apply, fourier_unitary, permanent, transition_amplitude, ModeUnitary};
pub use optimize::{
    certify_klm_bound, maximize, objective_avg_fidelity, objective_success, Budget, FailureConvention, KlmCertificate,
    Objective, OptimizationReport, SimplexPoint,
};
pub use polarization::{correction_circuit, run_oracle_polarization, PolarizedPhotonState};
pub use teleport::{run_analytic, run_oracle, CoefficientFile, OracleRun, ResourceCoefficients, TeleportOutcome};
