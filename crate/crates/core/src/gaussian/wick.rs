//! Wick/Isserlis contraction of ladder-operator products on Gaussian states.
//!
//! Every operator is split into its mean and a zero-mean fluctuation. The
//! fluctuation part of a Gaussian state has vanishing odd moments and its
//! even moments are sums over ordered pairings of two-point functions. All
//! polynomials here are kept in fluctuation form so that large displacements
//! never enter as uncentered powers.

use std::sync::OnceLock;

use num_complex::Complex64;

use super::state::{GaussianState, LadderMoments};
use crate::error::{Error, Result};

/// Longest word the contraction engine accepts.
pub const MAX_WORD_LEN: usize = 12;

/// A single creation or annihilation operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ladder {
    pub mode: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn a(mode: usize) -> Self {
        Ladder { mode, dagger: false }
    }

    pub fn ad(mode: usize) -> Self {
        Ladder { mode, dagger: true }
    }
}

/// Ordered product of ladder operators, e.g. `c₁†c₁c₂†c₂`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct OperatorWord {
    pub factors: Vec<Ladder>,
}

impl OperatorWord {
    pub fn new(factors: Vec<Ladder>) -> Self {
        OperatorWord { factors }
    }

    /// `a_i† a_i` repeated for each listed mode, in order.
    pub fn number_product(modes: &[usize]) -> Self {
        let factors = modes
            .iter()
            .flat_map(|&m| [Ladder::ad(m), Ladder::a(m)])
            .collect();
        OperatorWord { factors }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

type Pairing = Vec<(u8, u8)>;

/// Perfect matchings of `0..len` (len even), as index pairs `(i, j)`, `i < j`.
fn pairings(len: usize) -> &'static [Pairing] {
    static TABLE: [OnceLock<Vec<Pairing>>; MAX_WORD_LEN / 2 + 1] =
        [const { OnceLock::new() }; MAX_WORD_LEN / 2 + 1];
    debug_assert!(len.is_multiple_of(2) && len <= MAX_WORD_LEN);
    TABLE[len / 2].get_or_init(|| {
        let mut out = Vec::new();
        let idx: Vec<u8> = (0..len as u8).collect();
        enumerate_pairings(&idx, &mut Vec::new(), &mut out);
        out
    })
}

fn enumerate_pairings(rest: &[u8], current: &mut Vec<(u8, u8)>, out: &mut Vec<Vec<(u8, u8)>>) {
    if rest.is_empty() {
        out.push(current.clone());
        return;
    }
    let first = rest[0];
    for k in 1..rest.len() {
        current.push((first, rest[k]));
        let remaining: Vec<u8> = rest[1..]
            .iter()
            .enumerate()
            .filter(|&(p, _)| p + 1 != k)
            .map(|(_, &v)| v)
            .collect();
        enumerate_pairings(&remaining, current, out);
        current.pop();
    }
}

/// Ordered two-point function `⟨δo₁ δo₂⟩`.
fn two_point(lm: &LadderMoments, o1: Ladder, o2: Ladder) -> Complex64 {
    let (j, k) = (o1.mode, o2.mode);
    match (o1.dagger, o2.dagger) {
        (false, false) => lm.anomalous[(j, k)],
        (true, true) => lm.anomalous[(j, k)].conj(),
        (true, false) => lm.normal[(j, k)],
        (false, true) => {
            let comm = if j == k { 1.0 } else { 0.0 };
            lm.normal[(k, j)] + comm
        }
    }
}

/// `⟨δo₁ ⋯ δo_n⟩` for a word of pure fluctuation operators.
pub fn centered_word_expectation(lm: &LadderMoments, ops: &[Ladder]) -> Complex64 {
    let n = ops.len();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if n % 2 == 1 {
        return Complex64::new(0.0, 0.0);
    }
    let mut table = [[Complex64::new(0.0, 0.0); MAX_WORD_LEN]; MAX_WORD_LEN];
    for i in 0..n {
        for j in i + 1..n {
            table[i][j] = two_point(lm, ops[i], ops[j]);
        }
    }
    pairings(n)
        .iter()
        .map(|p| {
            p.iter()
                .fold(Complex64::new(1.0, 0.0), |acc, &(i, j)| {
                    acc * table[i as usize][j as usize]
                })
        })
        .sum()
}

/// Polynomial in fluctuation operators `δa`, `δa†` with complex coefficients.
#[derive(Debug, Clone, Default)]
pub struct FluctuationPoly {
    terms: Vec<(Complex64, Vec<Ladder>)>,
}

impl FluctuationPoly {
    pub fn constant(c: f64) -> Self {
        Self::from_term(Complex64::new(c, 0.0), Vec::new())
    }

    pub fn from_term(coeff: Complex64, ops: Vec<Ladder>) -> Self {
        FluctuationPoly {
            terms: vec![(coeff, ops)],
        }
    }

    pub fn terms(&self) -> &[(Complex64, Vec<Ladder>)] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(_, o)| o.len()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &FluctuationPoly) -> FluctuationPoly {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        FluctuationPoly { terms }.pruned()
    }

    pub fn scale(&self, c: f64) -> FluctuationPoly {
        FluctuationPoly {
            terms: self.terms.iter().map(|(k, o)| (k * c, o.clone())).collect(),
        }
        .pruned()
    }

    pub fn add_constant(&self, c: f64) -> FluctuationPoly {
        self.add(&FluctuationPoly::constant(c))
    }

    pub fn mul(&self, other: &FluctuationPoly) -> FluctuationPoly {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (c1, o1) in &self.terms {
            for (c2, o2) in &other.terms {
                let mut ops = Vec::with_capacity(o1.len() + o2.len());
                ops.extend_from_slice(o1);
                ops.extend_from_slice(o2);
                terms.push((c1 * c2, ops));
            }
        }
        FluctuationPoly { terms }.pruned()
    }

    pub fn pow(&self, k: u32) -> FluctuationPoly {
        (0..k).fold(FluctuationPoly::constant(1.0), |acc, _| acc.mul(self))
    }

    fn pruned(mut self) -> Self {
        self.terms.retain(|(c, _)| *c != Complex64::new(0.0, 0.0));
        self
    }

    /// Expectation on the Gaussian state whose moments are `lm`.
    pub fn expect(&self, lm: &LadderMoments) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for (c, ops) in &self.terms {
            if ops.len() > MAX_WORD_LEN {
                return Err(Error::WordTooLong {
                    len: ops.len(),
                    max: MAX_WORD_LEN,
                });
            }
            if ops.len() % 2 == 1 {
                continue;
            }
            total += c * centered_word_expectation(lm, ops);
        }
        Ok(total)
    }

    /// `δN_i = N_i - ⟨N_i⟩ = ᾱ* δa + ᾱ δa† + δa†δa - ⟨δa†δa⟩`.
    pub fn photon_number(lm: &LadderMoments, mode: usize) -> FluctuationPoly {
        let alpha = lm.alpha[mode];
        FluctuationPoly {
            terms: vec![
                (alpha.conj(), vec![Ladder::a(mode)]),
                (alpha, vec![Ladder::ad(mode)]),
                (Complex64::new(1.0, 0.0), vec![Ladder::ad(mode), Ladder::a(mode)]),
                (-lm.normal[(mode, mode)], vec![]),
            ],
        }
        .pruned()
    }

    /// `δX_θ = (e^{-iθ} δa + e^{iθ} δa†)/√2`.
    pub fn quadrature(mode: usize, angle: f64) -> FluctuationPoly {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        FluctuationPoly {
            terms: vec![
                (Complex64::from_polar(s, -angle), vec![Ladder::a(mode)]),
                (Complex64::from_polar(s, angle), vec![Ladder::ad(mode)]),
            ],
        }
    }
}

fn check_word(state: &GaussianState, word: &OperatorWord) -> Result<()> {
    if word.len() > MAX_WORD_LEN {
        return Err(Error::WordTooLong {
            len: word.len(),
            max: MAX_WORD_LEN,
        });
    }
    for f in &word.factors {
        state.check_mode(f.mode)?;
    }
    Ok(())
}

/// Exact `⟨word⟩` on a displaced Gaussian state.
///
/// Each operator is written as `δo + ⟨o⟩` and the product is expanded; the
/// fluctuation sub-words are contracted with [`centered_word_expectation`].
pub fn expectation(state: &GaussianState, word: &OperatorWord) -> Result<Complex64> {
    check_word(state, word)?;
    let lm = state.ladder_moments();
    let poly = word.factors.iter().fold(FluctuationPoly::constant(1.0), |acc, &op| {
        let mean = if op.dagger {
            lm.alpha[op.mode].conj()
        } else {
            lm.alpha[op.mode]
        };
        let factor = FluctuationPoly {
            terms: vec![(mean, vec![]), (Complex64::new(1.0, 0.0), vec![op])],
        }
        .pruned();
        acc.mul(&factor)
    });
    poly.expect(&lm)
}

/// `⟨δo₁ ⋯ δo_n⟩` with every operator replaced by its fluctuation.
pub fn centered_expectation(state: &GaussianState, word: &OperatorWord) -> Result<Complex64> {
    check_word(state, word)?;
    Ok(centered_word_expectation(&state.ladder_moments(), &word.factors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pairing_counts() {
        let expected = [1usize, 1, 3, 15, 105, 945, 10395];
        for (k, &e) in expected.iter().enumerate() {
            assert_eq!(pairings(2 * k).len(), e);
        }
    }

    #[test]
    fn vacuum_number_is_zero() {
        let v = GaussianState::vacuum(1);
        let n = expectation(&v, &OperatorWord::number_product(&[0])).unwrap();
        assert_eq!(n, Complex64::new(0.0, 0.0));
        // ⟨a a†⟩ = 1 on vacuum
        let w = OperatorWord::new(vec![Ladder::a(0), Ladder::ad(0)]);
        assert_relative_eq!(expectation(&v, &w).unwrap().re, 1.0);
    }

    #[test]
    fn coherent_moments() {
        let alpha = Complex64::new(1.3, -0.7);
        let s = GaussianState::coherent(alpha);
        let n = alpha.norm_sqr();
        let n2 = expectation(&s, &OperatorWord::number_product(&[0, 0])).unwrap();
        assert_relative_eq!(n2.re, n * n + n, epsilon = 1e-12);
        assert!(n2.im.abs() < 1e-14);
        let a3 = expectation(&s, &OperatorWord::new(vec![Ladder::a(0); 3])).unwrap();
        assert_relative_eq!(a3.re, (alpha * alpha * alpha).re, epsilon = 1e-12);
    }

    #[test]
    fn squeezed_second_moment_of_number() {
        let lambda = 0.7;
        let s = GaussianState::squeezed_vacuum(lambda, 0.4).unwrap();
        let n2 = expectation(&s, &OperatorWord::number_product(&[0, 0])).unwrap();
        assert_relative_eq!(n2.re, 3.0 * lambda * lambda + 2.0 * lambda, epsilon = 1e-12);
    }

    #[test]
    fn twin_beam_cross_moment() {
        let lambda = 1.7;
        let s = GaussianState::twin_beam(lambda, 0.0).unwrap();
        let v = expectation(&s, &OperatorWord::number_product(&[0, 1])).unwrap();
        assert_relative_eq!(v.re, lambda + 2.0 * lambda * lambda, epsilon = 1e-12);
    }

    #[test]
    fn odd_words_vanish_without_displacement() {
        let s = GaussianState::twin_beam(0.9, 0.3)
            .unwrap()
            .apply_beam_splitter(0, 1, 0.3)
            .unwrap();
        let w = OperatorWord::new(vec![Ladder::a(0), Ladder::ad(1), Ladder::a(1)]);
        assert_eq!(expectation(&s, &w).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rejects_long_and_foreign_words() {
        let s = GaussianState::vacuum(1);
        let long = OperatorWord::new(vec![Ladder::a(0); MAX_WORD_LEN + 2]);
        assert!(matches!(expectation(&s, &long), Err(Error::WordTooLong { .. })));
        let foreign = OperatorWord::number_product(&[1]);
        assert!(matches!(expectation(&s, &foreign), Err(Error::InvalidMode { .. })));
    }

    #[test]
    fn photon_number_poly_matches_raw_variance() {
        let s = GaussianState::coherent(Complex64::new(0.4, 0.9))
            .tensor(&GaussianState::squeezed_vacuum(0.5, 1.0).unwrap())
            .apply_beam_splitter(0, 1, 0.6)
            .unwrap();
        let lm = s.ladder_moments();
        let dn = FluctuationPoly::photon_number(&lm, 0);
        let var = dn.pow(2).expect(&lm).unwrap().re;
        let n = expectation(&s, &OperatorWord::number_product(&[0])).unwrap().re;
        let n2 = expectation(&s, &OperatorWord::number_product(&[0, 0])).unwrap().re;
        assert_relative_eq!(var, n2 - n * n, epsilon = 1e-12);
        assert!(dn.expect(&lm).unwrap().norm() < 1e-15);
    }
}
