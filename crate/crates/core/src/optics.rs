//! Passive linear optics on Fock states.
//!
//! A [`ModeUnitary`] `U` acts on creation operators as `a_k† ↦ Σ_l U[l][k] a_l†`.
//! Multiphoton transition amplitudes are permanents of submatrices of `U`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fock::{enumerate_basis, FockBasisState, PureState, PRUNE_THRESHOLD};

/// Tolerance on `U†U = I` accepted at construction.
pub const UNITARITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnitary {
    dim: usize,
    // row-major: entries[l * dim + k] = U[l][k]
    entries: Vec<Complex64>,
}

impl ModeUnitary {
    /// Row-major entries; rejected unless unitary within [`UNITARITY_TOLERANCE`].
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        let u = ModeUnitary { dim, entries };
        let deviation = u.unitarity_deviation();
        if deviation > UNITARITY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(u)
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for k in 0..dim {
            entries[k * dim + k] = Complex64::new(1.0, 0.0);
        }
        ModeUnitary { dim, entries }
    }

    /// Haar-random unitary via Gram-Schmidt on a complex Gaussian matrix.
    pub fn haar_random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let mut cols: Vec<Vec<Complex64>> = (0..dim)
            .map(|_| {
                (0..dim)
                    .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    .collect()
            })
            .collect();
        for k in 0..dim {
            let (done, rest) = cols.split_at_mut(k);
            let col = &mut rest[0];
            for prev in done.iter() {
                let proj: Complex64 = prev.iter().zip(col.iter()).map(|(p, x)| p.conj() * x).sum();
                for (x, p) in col.iter_mut().zip(prev) {
                    *x -= proj * p;
                }
            }
            let norm = col.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            for x in col.iter_mut() {
                *x /= norm;
            }
        }
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (k, col) in cols.iter().enumerate() {
            for (l, x) in col.iter().enumerate() {
                entries[l * dim + k] = *x;
            }
        }
        ModeUnitary { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// `max |(U†U - I)_{ij}|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..d {
                    acc += self.entry(l, i).conj() * self.entry(l, j);
                }
                if i == j {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    /// Matrix product `self · other` (apply `other` first).
    pub fn compose(&self, other: &ModeUnitary) -> Result<ModeUnitary> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let d = self.dim;
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                entries[i * d + j] = (0..d).map(|l| self.entry(i, l) * other.entry(l, j)).sum();
            }
        }
        Ok(ModeUnitary { dim: d, entries })
    }

    /// Whether mode `k` is left untouched (column and row `k` are the unit vector).
    fn is_passive(&self, k: usize) -> bool {
        (0..self.dim).all(|l| {
            let expect = if l == k { 1.0 } else { 0.0 };
            self.entry(l, k) == Complex64::new(expect, 0.0) && self.entry(k, l) == Complex64::new(expect, 0.0)
        })
    }
}

/// The `points`-point mode Fourier transform, entry `(l, k) = ω^{kl}/√points`
/// with `ω = exp(2πi/points)`.
pub fn fourier_unitary(points: usize) -> Result<ModeUnitary> {
    if points == 0 {
        return Err(Error::InvalidArgument(
            "Fourier transform needs at least one point".into(),
        ));
    }
    let scale = 1.0 / (points as f64).sqrt();
    let mut entries = Vec::with_capacity(points * points);
    for l in 0..points {
        for k in 0..points {
            // reduce the exponent first so large points stay accurate
            let e = (k * l) % points;
            let angle = std::f64::consts::TAU * e as f64 / points as f64;
            entries.push(Complex64::from_polar(scale, angle));
        }
    }
    ModeUnitary::new(points, entries)
}

/// Places `u` on `targets` (in the listed order) inside a `total`-mode identity.
pub fn embed(u: &ModeUnitary, targets: &[usize], total: usize) -> Result<ModeUnitary> {
    if targets.len() != u.dim {
        return Err(Error::DimensionMismatch {
            expected: u.dim,
            found: targets.len(),
        });
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= total {
            return Err(Error::ModeOutOfRange { index: t, modes: total });
        }
        if targets[..i].contains(&t) {
            return Err(Error::DuplicateMode(t));
        }
    }
    let mut out = ModeUnitary::identity(total);
    for (a, &ta) in targets.iter().enumerate() {
        for (b, &tb) in targets.iter().enumerate() {
            out.entries[ta * total + tb] = u.entry(a, b);
        }
    }
    Ok(out)
}

/// Permanent of a square matrix given as rows.
pub fn permanent(rows: &[Vec<Complex64>]) -> Result<Complex64> {
    let k = rows.len();
    let mut flat = Vec::with_capacity(k * k);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != k {
            return Err(Error::NotSquare {
                rows: k,
                row: r,
                len: row.len(),
            });
        }
        flat.extend_from_slice(row);
    }
    Ok(permanent_row_major(&flat, k))
}

/// Ryser's formula with Gray-code subset updates, `O(2^k · k)`.
///
/// `a` is a `k × k` matrix in row-major order. The empty matrix has permanent 1.
pub fn permanent_row_major(a: &[Complex64], k: usize) -> Complex64 {
    assert_eq!(a.len(), k * k, "permanent_row_major: expected {k}x{k} entries");
    match k {
        0 => return Complex64::new(1.0, 0.0),
        1 => return a[0],
        2 => return a[0] * a[3] + a[1] * a[2],
        _ => {}
    }
    assert!(k < 64, "permanent_row_major: k = {k} too large");

    let mut row_sums = vec![Complex64::new(0.0, 0.0); k];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for g in 1u64..(1u64 << k) {
        let j = g.trailing_zeros() as usize;
        let bit = 1u64 << j;
        gray ^= bit;
        if gray & bit != 0 {
            for i in 0..k {
                row_sums[i] += a[i * k + j];
            }
        } else {
            for i in 0..k {
                row_sums[i] -= a[i * k + j];
            }
        }
        let prod = row_sums.iter().fold(Complex64::new(1.0, 0.0), |acc, x| acc * x);
        if gray.count_ones().is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if k % 2 == 1 {
        -total
    } else {
        total
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// `<output| Û |input>` for Fock basis states of equal photon number.
pub fn transition_amplitude(u: &ModeUnitary, input: &FockBasisState, output: &FockBasisState) -> Result<Complex64> {
    if input.modes() != u.dim || output.modes() != u.dim {
        return Err(Error::DimensionMismatch {
            expected: u.dim,
            found: if input.modes() != u.dim {
                input.modes()
            } else {
                output.modes()
            },
        });
    }
    if input.total() != output.total() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let cols = repeated_indices(input.occupations());
    let rows = repeated_indices(output.occupations());
    let k = cols.len();
    let mut sub = Vec::with_capacity(k * k);
    for &l in &rows {
        for &c in &cols {
            sub.push(u.entry(l, c));
        }
    }
    let norm: f64 = input
        .occupations()
        .iter()
        .chain(output.occupations())
        .map(|&o| factorial(o))
        .product();
    Ok(permanent_row_major(&sub, k) / norm.sqrt())
}

fn repeated_indices(occ: &[u32]) -> Vec<usize> {
    occ.iter()
        .enumerate()
        .flat_map(|(mode, &o)| std::iter::repeat_n(mode, o as usize))
        .collect()
}

/// Applies `u` to a Fock-space state.
///
/// Modes on which `u` is the identity keep their occupations; only
/// distributions of the remaining photons over the active modes are
/// enumerated. Amplitudes below the pruning threshold are dropped.
pub fn apply(u: &ModeUnitary, state: &PureState) -> Result<PureState> {
    if u.dim != state.modes() {
        return Err(Error::DimensionMismatch {
            expected: u.dim,
            found: state.modes(),
        });
    }
    let active: Vec<usize> = (0..u.dim).filter(|&k| !u.is_passive(k)).collect();
    if active.is_empty() {
        return Ok(state.clone());
    }
    let max_photons = state.iter().map(|(b, _)| b.total()).max().unwrap_or(0);
    let factorials: Vec<f64> = (0..=max_photons).map(factorial).collect();
    let mut outputs_by_count: BTreeMap<u32, Vec<FockBasisState>> = BTreeMap::new();

    let mut out = PureState::empty(u.dim);
    let mut sub = Vec::new();
    for (input, amp) in state.iter() {
        let (in_active, passive) = input.split(&active);
        let photons = in_active.total();
        let outputs = outputs_by_count
            .entry(photons)
            .or_insert_with(|| enumerate_basis(active.len(), photons).expect("active modes non-empty"));

        let cols: Vec<usize> = repeated_indices(in_active.occupations())
            .into_iter()
            .map(|slot| active[slot])
            .collect();
        let in_norm: f64 = in_active
            .occupations()
            .iter()
            .map(|&o| factorials[o as usize])
            .product();

        for target in outputs.iter() {
            let rows = repeated_indices(target.occupations());
            let k = rows.len();
            sub.clear();
            for &slot in &rows {
                let l = active[slot];
                for &c in &cols {
                    sub.push(u.entry(l, c));
                }
            }
            let out_norm: f64 = target.occupations().iter().map(|&o| factorials[o as usize]).product();
            let t = permanent_row_major(&sub, k) / (in_norm * out_norm).sqrt();
            if t.norm() == 0.0 {
                continue;
            }
            out.add(FockBasisState::join(&active, target, &passive), amp * t);
        }
    }
    out.prune(PRUNE_THRESHOLD);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn fourier_small_cases() {
        let f1 = fourier_unitary(1).unwrap();
        assert_eq!(f1.entries(), &[c(1.0, 0.0)]);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let f2 = fourier_unitary(2).unwrap();
        let expect = [c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)];
        for (a, b) in f2.entries().iter().zip(expect) {
            assert!(close(*a, b, 1e-15));
        }

        let f3 = fourier_unitary(3).unwrap();
        let s = 1.0 / 3f64.sqrt();
        for k in 0..3 {
            assert!(close(f3.entry(0, k), c(s, 0.0), 1e-15));
        }
        // ω = exp(2πi/3) = -1/2 + i√3/2
        let omega = c(-0.5, 3f64.sqrt() / 2.0);
        assert!(close(f3.entry(1, 1), omega * s, 1e-15));
        assert!(close(f3.entry(2, 2), omega * s, 1e-15)); // ω^4 = ω
    }

    #[test]
    fn fourier_is_unitary_for_many_sizes() {
        for points in 1..=16 {
            assert!(fourier_unitary(points).unwrap().unitarity_deviation() < 1e-12);
        }
        assert!(fourier_unitary(0).is_err());
    }

    #[test]
    fn embed_identity_and_blocks() {
        let id1 = ModeUnitary::identity(1);
        assert_eq!(embed(&id1, &[2], 4).unwrap(), ModeUnitary::identity(4));

        let f2 = fourier_unitary(2).unwrap();
        let e = embed(&f2, &[0, 1], 3).unwrap();
        assert_eq!(e.entry(2, 2), c(1.0, 0.0));
        assert_eq!(e.entry(0, 2), c(0.0, 0.0));
        assert_eq!(e.entry(1, 1), f2.entry(1, 1));

        // targets (2, 0): local index 0 -> mode 2, local index 1 -> mode 0
        let p = embed(&f2, &[2, 0], 3).unwrap();
        assert_eq!(p.entry(2, 2), f2.entry(0, 0));
        assert_eq!(p.entry(2, 0), f2.entry(0, 1));
        assert_eq!(p.entry(0, 2), f2.entry(1, 0));
        assert_eq!(p.entry(0, 0), f2.entry(1, 1));
        assert_eq!(p.entry(1, 1), c(1.0, 0.0));
        assert!(p.unitarity_deviation() < 1e-12);
    }

    #[test]
    fn embed_rejects_bad_targets() {
        let f2 = fourier_unitary(2).unwrap();
        assert_eq!(embed(&f2, &[1, 1], 3), Err(Error::DuplicateMode(1)));
        assert!(matches!(embed(&f2, &[0, 3], 3), Err(Error::ModeOutOfRange { .. })));
        assert!(matches!(embed(&f2, &[0], 3), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn permanent_examples() {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        assert_eq!(permanent(&[vec![one, zero], vec![zero, one]]).unwrap(), one);
        let ones = vec![vec![one; 3]; 3];
        assert!(close(permanent(&ones).unwrap(), c(6.0, 0.0), 1e-12));
        assert!(close(
            permanent(&[vec![one, one], vec![one, -one]]).unwrap(),
            zero,
            1e-15
        ));
        assert_eq!(permanent(&[]).unwrap(), one);
        assert!(matches!(
            permanent(&[vec![one, one], vec![one]]),
            Err(Error::NotSquare { .. })
        ));
        // all-ones k×k has permanent k!
        let ones6 = vec![one; 36];
        assert!(close(permanent_row_major(&ones6, 6), c(720.0, 0.0), 1e-9));
    }

    #[test]
    fn apply_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let f2 = fourier_unitary(2).unwrap();

        let s = PureState::basis(FockBasisState::new(vec![1, 0]));
        assert_eq!(apply(&ModeUnitary::identity(2), &s).unwrap(), s);

        let out = apply(&f2, &s).unwrap();
        assert!(close(out.amplitude(&FockBasisState::new(vec![1, 0])), c(h, 0.0), 1e-15));
        assert!(close(out.amplitude(&FockBasisState::new(vec![0, 1])), c(h, 0.0), 1e-15));

        // Hong-Ou-Mandel
        let hom = apply(&f2, &PureState::basis(FockBasisState::new(vec![1, 1]))).unwrap();
        assert_eq!(hom.amplitude(&FockBasisState::new(vec![1, 1])), c(0.0, 0.0));
        assert!(close(hom.amplitude(&FockBasisState::new(vec![2, 0])), c(h, 0.0), 1e-15));
        assert!(close(
            hom.amplitude(&FockBasisState::new(vec![0, 2])),
            c(-h, 0.0),
            1e-15
        ));
        assert_eq!(hom.len(), 2);
    }

    #[test]
    fn apply_dimension_mismatch() {
        let s = PureState::basis(FockBasisState::new(vec![1, 0, 0]));
        assert!(matches!(
            apply(&fourier_unitary(2).unwrap(), &s),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_photon_sector_is_matrix_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in 1..=5 {
            let u = ModeUnitary::haar_random(dim, &mut rng);
            let q: Vec<Complex64> = (0..dim).map(|_| c(rng.random(), rng.random())).collect();
            let terms = (0..dim).map(|k| {
                let mut occ = vec![0; dim];
                occ[k] = 1;
                (FockBasisState::new(occ), q[k])
            });
            let s = PureState::from_terms(dim, terms).unwrap();
            let out = apply(&u, &s).unwrap();
            for l in 0..dim {
                let mut occ = vec![0; dim];
                occ[l] = 1;
                let expect: Complex64 = (0..dim)
                    .map(|k| {
                        u.entry(l, k)
                            * s.amplitude(&{
                                let mut o = vec![0; dim];
                                o[k] = 1;
                                FockBasisState::new(o)
                            })
                    })
                    .sum();
                assert!(close(out.amplitude(&FockBasisState::new(occ)), expect, 1e-12));
            }
        }
    }

    #[test]
    fn passive_modes_match_full_enumeration() {
        // Embedding leaves three modes passive; compare against the full
        // transition-amplitude sum over every output basis state.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u3 = ModeUnitary::haar_random(3, &mut rng);
        let u = embed(&u3, &[4, 1, 2], 6).unwrap();
        let input = FockBasisState::new(vec![1, 1, 0, 2, 1, 0]);
        let out = apply(&u, &PureState::basis(input.clone())).unwrap();
        for target in enumerate_basis(6, input.total()).unwrap() {
            let direct = transition_amplitude(&u, &input, &target).unwrap();
            assert!(close(out.amplitude(&target), direct, 1e-12), "{target}");
        }
    }
}
