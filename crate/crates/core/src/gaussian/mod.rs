//! Gaussian states, symplectic maps, loss, and exact operator moments.

mod state;
mod wick;

use std::collections::BTreeMap;

pub use state::{symplectic_form, two_mode_symplectic, GaussianState, LadderMoments};
pub use wick::{
    centered_expectation, centered_word_expectation, expectation, FluctuationPoly, Ladder,
    OperatorWord, MAX_WORD_LEN,
};

use crate::error::{Error, Result};
use crate::moments::ReadoutMoments;

/// Highest joint order supported by [`centered_photon_moments`].
pub const MAX_PHOTON_ORDER: usize = 6;

/// All `⟨δN_i^p δN_j^q⟩` with `p + q ≤ max_order`, contracted directly on
/// fluctuation operators.
pub fn centered_photon_moments(
    state: &GaussianState,
    modes: (usize, usize),
    max_order: usize,
) -> Result<ReadoutMoments> {
    if max_order > MAX_PHOTON_ORDER {
        return Err(Error::OrderTooHigh {
            order: max_order,
            max: MAX_PHOTON_ORDER,
        });
    }
    let (i, j) = modes;
    state.check_mode(i)?;
    state.check_mode(j)?;
    if i == j {
        return Err(Error::SameMode(i));
    }
    let lm = state.ladder_moments();
    let dn1 = FluctuationPoly::photon_number(&lm, i);
    let dn2 = FluctuationPoly::photon_number(&lm, j);
    let pow1: Vec<_> = (0..=max_order as u32).map(|k| dn1.pow(k)).collect();
    let pow2: Vec<_> = (0..=max_order as u32).map(|k| dn2.pow(k)).collect();
    let mut centered = BTreeMap::new();
    for total in 2..=max_order.max(2) {
        for q in 0..=total {
            let p = total - q;
            let v = pow1[p].mul(&pow2[q]).expect(&lm)?.re;
            centered.insert((p, q), v);
        }
    }
    Ok(ReadoutMoments {
        mean_1: state.mean_photon_number(i)?,
        mean_2: state.mean_photon_number(j)?,
        var_1: centered[&(2, 0)],
        var_2: centered[&(0, 2)],
        cov: centered[&(1, 1)],
        max_order: max_order.max(2),
        centered,
    })
}
