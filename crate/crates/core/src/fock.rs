//! Multimode photon-number states.
//!
//! A [`PureState`] is a sparse superposition of [`FockBasisState`]s kept in a
//! `BTreeMap`, so iteration order is the lexicographic order of occupation
//! lists. Amplitudes below [`PRUNE_THRESHOLD`] in modulus are dropped.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Amplitudes with modulus below this are treated as exact zeros.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// Tolerance on the squared norm of states and qubits handed to the library.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Photon occupation numbers, one entry per mode.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockBasisState(Vec<u32>);

impl FockBasisState {
    pub fn new(occupations: Vec<u32>) -> Self {
        FockBasisState(occupations)
    }

    pub fn vacuum(modes: usize) -> Self {
        FockBasisState(vec![0; modes])
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn occupations(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn get(&self, mode: usize) -> u32 {
        self.0[mode]
    }

    /// Concatenates two occupation lists.
    pub fn concat(&self, other: &FockBasisState) -> FockBasisState {
        let mut occ = Vec::with_capacity(self.0.len() + other.0.len());
        occ.extend_from_slice(&self.0);
        occ.extend_from_slice(&other.0);
        FockBasisState(occ)
    }

    /// Splits into (occupations of `selected` in the listed order, occupations of
    /// the remaining modes in ascending order).
    pub fn split(&self, selected: &[usize]) -> (FockBasisState, FockBasisState) {
        let picked = selected.iter().map(|&k| self.0[k]).collect();
        let rest = (0..self.0.len())
            .filter(|k| !selected.contains(k))
            .map(|k| self.0[k])
            .collect();
        (FockBasisState(picked), FockBasisState(rest))
    }

    /// Inverse of [`split`](Self::split).
    pub fn join(selected: &[usize], picked: &FockBasisState, rest: &FockBasisState) -> FockBasisState {
        let modes = picked.modes() + rest.modes();
        let mut occ = vec![0; modes];
        for (slot, &k) in selected.iter().enumerate() {
            occ[k] = picked.0[slot];
        }
        let mut rest_iter = rest.0.iter();
        for (k, o) in occ.iter_mut().enumerate() {
            if !selected.contains(&k) {
                *o = *rest_iter.next().expect("rest has one entry per unselected mode");
            }
        }
        FockBasisState(occ)
    }
}

impl fmt::Display for FockBasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, o) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{o}")?;
        }
        write!(f, ">")
    }
}

impl From<Vec<u32>> for FockBasisState {
    fn from(v: Vec<u32>) -> Self {
        FockBasisState(v)
    }
}

/// All ways of placing `total_photons` photons into `modes` modes, in
/// ascending lexicographic order.
pub fn enumerate_basis(modes: usize, total_photons: u32) -> Result<Vec<FockBasisState>> {
    if modes == 0 {
        return Err(Error::ZeroModes);
    }
    let mut out = Vec::new();
    let mut current = vec![0u32; modes];
    fill_compositions(&mut current, 0, total_photons, &mut out);
    Ok(out)
}

fn fill_compositions(current: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<FockBasisState>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(FockBasisState(current.to_vec()));
        return;
    }
    for k in 0..=remaining {
        current[pos] = k;
        fill_compositions(current, pos + 1, remaining - k, out);
    }
    current[pos] = 0;
}

/// A logical qubit `alpha|0> + beta|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitAmplitudes {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl QubitAmplitudes {
    /// Validating constructor; the squared norm must be 1 within 1e-12.
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm_sqr = alpha.norm_sqr() + beta.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(QubitAmplitudes { alpha, beta })
    }

    /// Rescales `(alpha, beta)` to unit norm.
    pub fn normalized(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(QubitAmplitudes {
            alpha: alpha / norm,
            beta: beta / norm,
        })
    }

    pub fn zero() -> Self {
        QubitAmplitudes {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
        }
    }

    pub fn one() -> Self {
        QubitAmplitudes {
            alpha: Complex64::new(0.0, 0.0),
            beta: Complex64::new(1.0, 0.0),
        }
    }

    /// Haar-random pure qubit: `|alpha|^2` uniform on [0, 1], relative phase
    /// uniform on [0, 2pi).
    pub fn haar_random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let x: f64 = rng.random();
        let phi: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        QubitAmplitudes {
            alpha: Complex64::new(x.sqrt(), 0.0),
            beta: Complex64::from_polar((1.0 - x).sqrt(), phi),
        }
    }

    pub fn inner(&self, other: &QubitAmplitudes) -> Complex64 {
        self.alpha.conj() * other.alpha + self.beta.conj() * other.beta
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &QubitAmplitudes) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// The same ray with the global phase chosen so that the larger component
    /// is real and positive.
    pub fn canonical_phase(&self) -> QubitAmplitudes {
        let pivot = if self.alpha.norm() >= self.beta.norm() {
            self.alpha
        } else {
            self.beta
        };
        if pivot.norm() == 0.0 {
            return *self;
        }
        let rot = pivot.conj() / pivot.norm();
        QubitAmplitudes {
            alpha: self.alpha * rot,
            beta: self.beta * rot,
        }
    }

    /// The single-mode Fock state `alpha|0> + beta|1>`.
    pub fn to_single_mode(&self) -> PureState {
        let mut s = PureState::empty(1);
        s.add(FockBasisState(vec![0]), self.alpha);
        s.add(FockBasisState(vec![1]), self.beta);
        s
    }
}

/// Sparse normalized superposition over Fock basis states of a fixed mode count.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    modes: usize,
    amplitudes: BTreeMap<FockBasisState, Complex64>,
}

impl PureState {
    /// The zero vector on `modes` modes; used as an accumulator.
    pub fn empty(modes: usize) -> Self {
        PureState {
            modes,
            amplitudes: BTreeMap::new(),
        }
    }

    pub fn basis(state: FockBasisState) -> Self {
        let mut s = PureState::empty(state.modes());
        s.amplitudes.insert(state, Complex64::new(1.0, 0.0));
        s
    }

    /// Builds a state from `(basis, amplitude)` terms, summing repeated keys and
    /// normalizing the result.
    pub fn from_terms<I>(modes: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (FockBasisState, Complex64)>,
    {
        let mut s = PureState::empty(modes);
        for (b, a) in terms {
            if b.modes() != modes {
                return Err(Error::DimensionMismatch {
                    expected: modes,
                    found: b.modes(),
                });
            }
            s.add(b, a);
        }
        s.prune(PRUNE_THRESHOLD);
        s.normalize()?;
        Ok(s)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitude(&self, b: &FockBasisState) -> Complex64 {
        self.amplitudes.get(b).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FockBasisState, &Complex64)> {
        self.amplitudes.iter()
    }

    /// Adds `amp` to the amplitude of `b`. Does not prune.
    pub fn add(&mut self, b: FockBasisState, amp: Complex64) {
        debug_assert_eq!(b.modes(), self.modes);
        *self.amplitudes.entry(b).or_default() += amp;
    }

    pub fn prune(&mut self, threshold: f64) {
        self.amplitudes.retain(|_, a| a.norm() >= threshold);
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        for a in self.amplitudes.values_mut() {
            *a /= norm;
        }
        Ok(())
    }

    pub fn check_normalized(&self) -> Result<()> {
        let norm_sqr = self.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(())
    }

    pub fn scaled(&self, factor: Complex64) -> PureState {
        let mut s = self.clone();
        for a in s.amplitudes.values_mut() {
            *a *= factor;
        }
        s.prune(PRUNE_THRESHOLD);
        s
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        let (small, large, flip) = if self.len() <= other.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, a) in &small.amplitudes {
            if let Some(o) = large.amplitudes.get(b) {
                acc += if flip { o.conj() * a } else { a.conj() * o };
            }
        }
        acc
    }

    /// Largest modulus of the componentwise difference.
    pub fn max_abs_diff(&self, other: &PureState) -> f64 {
        let mut worst: f64 = 0.0;
        for (b, a) in &self.amplitudes {
            worst = worst.max((a - other.amplitude(b)).norm());
        }
        for (b, a) in &other.amplitudes {
            if !self.amplitudes.contains_key(b) {
                worst = worst.max(a.norm());
            }
        }
        worst
    }

    /// Distinct total photon numbers present in the superposition.
    pub fn photon_numbers(&self) -> Vec<u32> {
        let mut n: Vec<u32> = self.amplitudes.keys().map(|b| b.total()).collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    /// `1 - tr(rho_A^2)` for the reduced state on `subsystem`; zero exactly
    /// when the state is a product across the cut.
    pub fn bipartite_impurity(&self, subsystem: &[usize]) -> f64 {
        // Group amplitudes by the environment configuration; rho_A entries are
        // sums over shared environment keys.
        let mut by_env: BTreeMap<FockBasisState, Vec<(FockBasisState, Complex64)>> = BTreeMap::new();
        for (b, a) in &self.amplitudes {
            let (sys, env) = b.split(subsystem);
            by_env.entry(env).or_default().push((sys, *a));
        }
        let mut rho: BTreeMap<(FockBasisState, FockBasisState), Complex64> = BTreeMap::new();
        for terms in by_env.values() {
            for (si, ai) in terms {
                for (sj, aj) in terms {
                    *rho.entry((si.clone(), sj.clone())).or_default() += ai * aj.conj();
                }
            }
        }
        let trace: f64 = rho.iter().filter(|((i, j), _)| i == j).map(|(_, v)| v.re).sum();
        let purity: f64 = rho.values().map(|v| v.norm_sqr()).sum();
        (trace * trace - purity).max(0.0)
    }
}

/// `a ⊗ b` on `a.modes() + b.modes()` modes.
pub fn tensor(a: &PureState, b: &PureState) -> Result<PureState> {
    a.check_normalized()?;
    b.check_normalized()?;
    let mut out = PureState::empty(a.modes + b.modes);
    for (ba, aa) in &a.amplitudes {
        for (bb, ab) in &b.amplitudes {
            out.amplitudes.insert(ba.concat(bb), aa * ab);
        }
    }
    out.prune(PRUNE_THRESHOLD);
    Ok(out)
}

/// One outcome of a photon-counting measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBranch {
    /// Counts on the measured modes, in the order they were listed.
    pub pattern: FockBasisState,
    pub probability: f64,
    /// Normalized post-measurement state on the unmeasured modes (ascending).
    pub conditional: PureState,
}

/// Outcomes below this probability are omitted from measurement results.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-15;

/// Projective photon counting on `measured` modes.
///
/// Branches come back sorted by pattern. Each conditional state keeps the
/// phases it had in `state`, so `sum_k sqrt(p_k) |pattern_k> ⊗ |cond_k>`
/// reproduces the input.
pub fn measure_photon_counts(state: &PureState, measured: &[usize]) -> Result<Vec<MeasurementBranch>> {
    if measured.is_empty() {
        return Err(Error::EmptyMeasurement);
    }
    for (i, &k) in measured.iter().enumerate() {
        if k >= state.modes {
            return Err(Error::ModeOutOfRange {
                index: k,
                modes: state.modes,
            });
        }
        if measured[..i].contains(&k) {
            return Err(Error::DuplicateMode(k));
        }
    }
    state.check_normalized()?;

    let rest_modes = state.modes - measured.len();
    let mut groups: BTreeMap<FockBasisState, PureState> = BTreeMap::new();
    for (b, a) in &state.amplitudes {
        let (picked, rest) = b.split(measured);
        groups
            .entry(picked)
            .or_insert_with(|| PureState::empty(rest_modes))
            .amplitudes
            .insert(rest, *a);
    }

    let mut out = Vec::with_capacity(groups.len());
    for (pattern, mut conditional) in groups {
        let probability = conditional.norm_sqr();
        if probability < MIN_BRANCH_PROBABILITY {
            continue;
        }
        conditional.normalize()?;
        out.push(MeasurementBranch {
            pattern,
            probability,
            conditional,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn binomial(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn basis_single_mode() {
        assert_eq!(enumerate_basis(1, 3).unwrap(), vec![FockBasisState::new(vec![3])]);
    }

    #[test]
    fn basis_vacuum() {
        assert_eq!(enumerate_basis(2, 0).unwrap(), vec![FockBasisState::vacuum(2)]);
    }

    #[test]
    fn basis_three_modes_two_photons() {
        let got: Vec<Vec<u32>> = enumerate_basis(3, 2)
            .unwrap()
            .into_iter()
            .map(|b| b.occupations().to_vec())
            .collect();
        assert_eq!(
            got,
            vec![
                vec![0, 0, 2],
                vec![0, 1, 1],
                vec![0, 2, 0],
                vec![1, 0, 1],
                vec![1, 1, 0],
                vec![2, 0, 0]
            ]
        );
    }

    #[test]
    fn basis_rejects_zero_modes() {
        assert_eq!(enumerate_basis(0, 1), Err(Error::ZeroModes));
    }

    #[test]
    fn basis_counts_match_stars_and_bars() {
        for modes in 1..=8usize {
            for photons in 0..=8u32 {
                let basis = enumerate_basis(modes, photons).unwrap();
                let expected = binomial(photons as u64 + modes as u64 - 1, modes as u64 - 1);
                assert_eq!(basis.len() as u64, expected, "modes={modes} photons={photons}");
                assert!(basis.windows(2).all(|w| w[0] < w[1]));
                assert!(basis.iter().all(|b| b.total() == photons));
            }
        }
    }

    #[test]
    fn tensor_basic() {
        let one = PureState::basis(FockBasisState::new(vec![1]));
        let zero = PureState::basis(FockBasisState::new(vec![0]));
        let t = tensor(&one, &zero).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.amplitude(&FockBasisState::new(vec![1, 0])), c(1.0, 0.0));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = QubitAmplitudes::new(c(h, 0.0), c(h, 0.0)).unwrap().to_single_mode();
        let t = tensor(&plus, &one).unwrap();
        assert_eq!(t.modes(), 2);
        assert!((t.amplitude(&FockBasisState::new(vec![0, 1])) - c(h, 0.0)).norm() < 1e-15);
        assert!((t.amplitude(&FockBasisState::new(vec![1, 1])) - c(h, 0.0)).norm() < 1e-15);
        assert!((t.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_rejects_unnormalized() {
        let mut s = PureState::empty(1);
        s.add(FockBasisState::new(vec![0]), c(2.0, 0.0));
        let one = PureState::basis(FockBasisState::new(vec![1]));
        assert!(matches!(tensor(&s, &one), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn measure_both_modes_of_bell_like_state() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = PureState::from_terms(
            2,
            [
                (FockBasisState::new(vec![0, 1]), c(h, 0.0)),
                (FockBasisState::new(vec![1, 0]), c(h, 0.0)),
            ],
        )
        .unwrap();
        let branches = measure_photon_counts(&s, &[0, 1]).unwrap();
        assert_eq!(branches.len(), 2);
        assert_eq!(branches[0].pattern.occupations(), &[0, 1]);
        assert_eq!(branches[1].pattern.occupations(), &[1, 0]);
        for b in &branches {
            assert!((b.probability - 0.5).abs() < 1e-12);
            assert_eq!(b.conditional.modes(), 0);
        }
    }

    #[test]
    fn measure_product_state() {
        let q = QubitAmplitudes::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let s = tensor(&PureState::basis(FockBasisState::new(vec![1])), &q.to_single_mode()).unwrap();
        let branches = measure_photon_counts(&s, &[0]).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].pattern.occupations(), &[1]);
        assert!((branches[0].probability - 1.0).abs() < 1e-12);
        let cond = &branches[0].conditional;
        assert!((cond.amplitude(&FockBasisState::new(vec![0])) - q.alpha).norm() < 1e-12);
        assert!((cond.amplitude(&FockBasisState::new(vec![1])) - q.beta).norm() < 1e-12);
    }

    #[test]
    fn measure_rejects_bad_modes() {
        let s = PureState::basis(FockBasisState::new(vec![1, 0]));
        assert!(matches!(
            measure_photon_counts(&s, &[2]),
            Err(Error::ModeOutOfRange { index: 2, modes: 2 })
        ));
        assert_eq!(measure_photon_counts(&s, &[]), Err(Error::EmptyMeasurement));
        assert_eq!(measure_photon_counts(&s, &[1, 1]), Err(Error::DuplicateMode(1)));
    }

    #[test]
    fn impurity_detects_entanglement() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = PureState::from_terms(
            2,
            [
                (FockBasisState::new(vec![0, 1]), c(h, 0.0)),
                (FockBasisState::new(vec![1, 0]), c(h, 0.0)),
            ],
        )
        .unwrap();
        assert!((bell.bipartite_impurity(&[0]) - 0.5).abs() < 1e-12);
        let prod = PureState::from_terms(
            2,
            [
                (FockBasisState::new(vec![0, 1]), c(h, 0.0)),
                (FockBasisState::new(vec![1, 1]), c(0.0, h)),
            ],
        )
        .unwrap();
        assert!(prod.bipartite_impurity(&[0]) < 1e-15);
    }

    #[test]
    fn split_join_inverse() {
        let b = FockBasisState::new(vec![3, 1, 4, 1, 5]);
        let sel = [3, 0];
        let (p, r) = b.split(&sel);
        assert_eq!(p.occupations(), &[1, 3]);
        assert_eq!(r.occupations(), &[1, 4, 5]);
        assert_eq!(FockBasisState::join(&sel, &p, &r), b);
    }

    fn arb_state(modes: usize, max_photons: u32) -> impl Strategy<Value = PureState> {
        let basis: Vec<FockBasisState> = (0..=max_photons)
            .flat_map(|p| enumerate_basis(modes, p).unwrap())
            .collect();
        let len = basis.len();
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, proptest::bool::weighted(0.5)), len).prop_filter_map(
            "nonzero",
            move |amps| {
                let terms = basis
                    .iter()
                    .cloned()
                    .zip(amps)
                    .filter(|(_, (_, _, keep))| *keep)
                    .map(|(b, (re, im, _))| (b, Complex64::new(re, im)));
                PureState::from_terms(modes, terms).ok()
            },
        )
    }

    proptest! {
        #[test]
        fn measurement_is_complete_and_reconstructs(
            state in arb_state(3, 2),
            mask in 1u8..7,
            phase in 0.0f64..std::f64::consts::TAU,
        ) {
            let measured: Vec<usize> = (0..3).filter(|k| mask & (1 << k) != 0).collect();
            let branches = measure_photon_counts(&state, &measured).unwrap();
            let total: f64 = branches.iter().map(|b| b.probability).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);

            let mut rebuilt = PureState::empty(3);
            for br in &branches {
                prop_assert!((br.conditional.norm_sqr() - 1.0).abs() < 1e-12);
                for (rest, a) in br.conditional.iter() {
                    rebuilt.add(FockBasisState::join(&measured, &br.pattern, rest), a * br.probability.sqrt());
                }
            }
            prop_assert!(rebuilt.max_abs_diff(&state) < 1e-10);

            let rotated = state.scaled(Complex64::from_polar(1.0, phase));
            let rb = measure_photon_counts(&rotated, &measured).unwrap();
            prop_assert_eq!(rb.len(), branches.len());
            for (x, y) in rb.iter().zip(&branches) {
                prop_assert_eq!(&x.pattern, &y.pattern);
                prop_assert!((x.probability - y.probability).abs() < 1e-12);
            }
        }
    }
}
