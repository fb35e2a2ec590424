use std::collections::BTreeMap;

/// Joint photon-number statistics of the two readout modes.
///
/// `centered[(p, q)] = ⟨δN₁^p δN₂^q⟩` for `2 ≤ p + q ≤ max_order`; the
/// second-order entries duplicate `var_1`, `var_2` and `cov`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutMoments {
    pub mean_1: f64,
    pub mean_2: f64,
    pub var_1: f64,
    pub var_2: f64,
    pub cov: f64,
    pub max_order: usize,
    pub centered: BTreeMap<(usize, usize), f64>,
}

impl ReadoutMoments {
    /// Second-order moments only.
    pub fn second_order(mean_1: f64, mean_2: f64, var_1: f64, var_2: f64, cov: f64) -> Self {
        let mut centered = BTreeMap::new();
        centered.insert((2, 0), var_1);
        centered.insert((0, 2), var_2);
        centered.insert((1, 1), cov);
        ReadoutMoments {
            mean_1,
            mean_2,
            var_1,
            var_2,
            cov,
            max_order: 2,
            centered,
        }
    }

    pub fn get(&self, p: usize, q: usize) -> Option<f64> {
        match (p, q) {
            (0, 0) => Some(1.0),
            (1, 0) | (0, 1) => Some(0.0),
            _ => self.centered.get(&(p, q)).copied(),
        }
    }

    /// `⟨(δN₁ + s·δN₂)^k⟩` assembled from the table, `s = ±1`.
    pub fn combined_moment(&self, sign: f64, k: usize) -> Option<f64> {
        let mut total = 0.0;
        for j in 0..=k {
            let m = self.get(k - j, j)?;
            total += binomial(k, j) * sign.powi(j as i32) * m;
        }
        Some(total)
    }

    /// `var_i ≥ 0`, means ≥ 0 and `|cov| ≤ √(var₁ var₂)` (1e-10 relative).
    pub fn is_consistent(&self) -> bool {
        let tol = 1e-10 * self.var_1.abs().max(self.var_2.abs()).max(1e-300);
        self.var_1 >= -tol
            && self.var_2 >= -tol
            && self.mean_1 >= -1e-12 * self.mean_1.abs().max(1.0)
            && self.mean_2 >= -1e-12 * self.mean_2.abs().max(1.0)
            && self.cov.abs() <= (self.var_1 * self.var_2).max(0.0).sqrt() * (1.0 + 1e-10) + tol
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combined_second_moment() {
        let m = ReadoutMoments::second_order(1.0, 2.0, 3.0, 4.0, 1.5);
        assert_eq!(m.combined_moment(-1.0, 2), Some(3.0 + 4.0 - 3.0));
        assert_eq!(m.combined_moment(1.0, 2), Some(10.0));
        assert_eq!(m.combined_moment(1.0, 3), None);
        assert!(m.is_consistent());
        let bad = ReadoutMoments::second_order(1.0, 1.0, 1.0, 1.0, 2.0);
        assert!(!bad.is_consistent());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(4, 0), 1.0);
        assert_eq!(binomial(4, 4), 1.0);
    }
}
