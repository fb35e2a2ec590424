use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{check_non_negative, check_unit_interval, Error, Result};

/// Multimode Gaussian state in the quadrature representation.
///
/// Quadratures are ordered `(x_1, y_1, ..., x_n, y_n)` with
/// `x = (a + a†)/√2`, `y = (a - a†)/(i√2)`, so the vacuum covariance is
/// `I/2`. The covariance is the symmetrized one, `½⟨{δr_j, δr_k}⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

/// First and second moments of the ladder operators.
///
/// `alpha[j] = ⟨a_j⟩`, `normal[(j,k)] = ⟨δa_j† δa_k⟩`,
/// `anomalous[(j,k)] = ⟨δa_j δa_k⟩`.
#[derive(Debug, Clone)]
pub struct LadderMoments {
    pub alpha: Vec<Complex64>,
    pub normal: DMatrix<Complex64>,
    pub anomalous: DMatrix<Complex64>,
}

impl GaussianState {
    pub fn vacuum(n_modes: usize) -> Self {
        assert!(n_modes > 0, "a Gaussian state needs at least one mode");
        GaussianState {
            n_modes,
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes) * 0.5,
        }
    }

    /// Builds a state after checking symmetry and the uncertainty relation.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "displacement length {dim} is not a positive even number"
            )));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::InvalidParameter(format!(
                "covariance is {}x{}, expected {dim}x{dim}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let state = GaussianState {
            n_modes: dim / 2,
            mean,
            cov,
        };
        state.validate()?;
        Ok(state)
    }

    /// Coherent state `|α⟩` of a single mode.
    pub fn coherent(alpha: Complex64) -> Self {
        let mut s = Self::vacuum(1);
        s.mean[0] = std::f64::consts::SQRT_2 * alpha.re;
        s.mean[1] = std::f64::consts::SQRT_2 * alpha.im;
        s
    }

    /// Single-mode squeezed vacuum with mean photon number `lambda = sinh² r`.
    ///
    /// `⟨aa⟩ = e^{iθ} sinh r cosh r`; the squeezed quadrature sits at angle
    /// `theta/2 + π/2`, so `theta = 0` squeezes `y`.
    pub fn squeezed_vacuum(lambda: f64, theta: f64) -> Result<Self> {
        check_non_negative("lambda", lambda)?;
        let normal = DMatrix::from_element(1, 1, Complex64::new(lambda, 0.0));
        let m = Complex64::from_polar((lambda * (1.0 + lambda)).sqrt(), theta);
        let anomalous = DMatrix::from_element(1, 1, m);
        Ok(Self::from_ladder_moments(&[Complex64::new(0.0, 0.0)], &normal, &anomalous))
    }

    /// Two-mode squeezed vacuum `Σ_m c_m |m,m⟩` with `λ` photons per mode.
    ///
    /// `⟨a_1 a_2⟩ = e^{iθ} √(λ(1+λ))`.
    pub fn twin_beam(lambda: f64, theta: f64) -> Result<Self> {
        check_non_negative("lambda", lambda)?;
        let zero = Complex64::new(0.0, 0.0);
        let mut normal = DMatrix::from_element(2, 2, zero);
        normal[(0, 0)] = Complex64::new(lambda, 0.0);
        normal[(1, 1)] = Complex64::new(lambda, 0.0);
        let mut anomalous = DMatrix::from_element(2, 2, zero);
        let m = Complex64::from_polar((lambda * (1.0 + lambda)).sqrt(), theta);
        anomalous[(0, 1)] = m;
        anomalous[(1, 0)] = m;
        Ok(Self::from_ladder_moments(&[zero, zero], &normal, &anomalous))
    }

    /// Assembles a state from `⟨a⟩`, `⟨δa†δa⟩` and `⟨δaδa⟩`.
    pub fn from_ladder_moments(
        alpha: &[Complex64],
        normal: &DMatrix<Complex64>,
        anomalous: &DMatrix<Complex64>,
    ) -> Self {
        let n = alpha.len();
        let mut mean = DVector::zeros(2 * n);
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        let s2 = std::f64::consts::SQRT_2;
        for j in 0..n {
            mean[2 * j] = s2 * alpha[j].re;
            mean[2 * j + 1] = s2 * alpha[j].im;
            for k in 0..n {
                let delta = if j == k { 0.5 } else { 0.0 };
                let m = anomalous[(j, k)];
                let nn = normal[(j, k)];
                cov[(2 * j, 2 * k)] = m.re + nn.re + delta;
                cov[(2 * j + 1, 2 * k + 1)] = nn.re - m.re + delta;
                cov[(2 * j, 2 * k + 1)] = m.im + nn.im;
                cov[(2 * j + 1, 2 * k)] = m.im - nn.im;
            }
        }
        GaussianState {
            n_modes: n,
            mean,
            cov,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Direct sum: modes of `self` followed by modes of `other`.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let d1 = 2 * self.n_modes;
        let d2 = 2 * other.n_modes;
        let mut mean = DVector::zeros(d1 + d2);
        mean.rows_mut(0, d1).copy_from(&self.mean);
        mean.rows_mut(d1, d2).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(d1 + d2, d1 + d2);
        cov.view_mut((0, 0), (d1, d1)).copy_from(&self.cov);
        cov.view_mut((d1, d1), (d2, d2)).copy_from(&other.cov);
        GaussianState {
            n_modes: self.n_modes + other.n_modes,
            mean,
            cov,
        }
    }

    pub(crate) fn check_mode(&self, i: usize) -> Result<()> {
        if i < self.n_modes {
            Ok(())
        } else {
            Err(Error::InvalidMode {
                index: i,
                n_modes: self.n_modes,
            })
        }
    }

    /// Applies a 2×2 unitary `[c_i; c_j] = U [a_i; a_j]` to modes `i`, `j`.
    pub fn apply_two_mode_unitary(
        &self,
        i: usize,
        j: usize,
        u: [[Complex64; 2]; 2],
    ) -> Result<GaussianState> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return Err(Error::SameMode(i));
        }
        let s = two_mode_symplectic(self.n_modes, i, j, u);
        Ok(self.transformed(&s))
    }

    /// Beam splitter: `c_i = √τ a_i + i√(1-τ) a_j`, `c_j = i√(1-τ) a_i + √τ a_j`.
    pub fn apply_beam_splitter(&self, i: usize, j: usize, tau: f64) -> Result<GaussianState> {
        check_unit_interval("tau", tau)?;
        let t = tau.sqrt();
        let r = (1.0 - tau).sqrt();
        self.apply_two_mode_unitary(i, j, beam_splitter_matrix(t, r))
    }

    /// Interferometer at phase `phi`, equivalent to a beam splitter with
    /// `τ = cos²(φ/2)` but using the signed amplitudes `cos(φ/2)`, `sin(φ/2)`
    /// so the map is analytic in `phi`.
    pub fn apply_interferometer(&self, i: usize, j: usize, phi: f64) -> Result<GaussianState> {
        let (s, c) = (0.5 * phi).sin_cos();
        self.apply_two_mode_unitary(i, j, beam_splitter_matrix(c, s))
    }

    /// Phase rotation `a_i → e^{iφ} a_i`.
    pub fn apply_phase(&self, i: usize, phi: f64) -> Result<GaussianState> {
        self.check_mode(i)?;
        let (s, c) = phi.sin_cos();
        let mut m = DMatrix::<f64>::identity(2 * self.n_modes, 2 * self.n_modes);
        m[(2 * i, 2 * i)] = c;
        m[(2 * i, 2 * i + 1)] = -s;
        m[(2 * i + 1, 2 * i)] = s;
        m[(2 * i + 1, 2 * i + 1)] = c;
        Ok(self.transformed(&m))
    }

    /// Pure-loss channel of transmissivity `eta` on mode `i`.
    pub fn apply_loss(&self, i: usize, eta: f64) -> Result<GaussianState> {
        self.check_mode(i)?;
        check_unit_interval("eta", eta)?;
        let g = eta.sqrt();
        let mut out = self.clone();
        for q in [2 * i, 2 * i + 1] {
            out.mean[q] *= g;
            for k in 0..2 * self.n_modes {
                out.cov[(q, k)] *= g;
                out.cov[(k, q)] *= g;
            }
            out.cov[(q, q)] += 0.5 * (1.0 - eta);
        }
        Ok(out)
    }

    /// Reduced state of the listed modes, in the listed order.
    pub fn marginal(&self, modes: &[usize]) -> Result<GaussianState> {
        let mut idx = Vec::with_capacity(2 * modes.len());
        for &m in modes {
            self.check_mode(m)?;
            idx.push(2 * m);
            idx.push(2 * m + 1);
        }
        let d = idx.len();
        let mean = DVector::from_fn(d, |r, _| self.mean[idx[r]]);
        let cov = DMatrix::from_fn(d, d, |r, c| self.cov[(idx[r], idx[c])]);
        Ok(GaussianState {
            n_modes: modes.len(),
            mean,
            cov,
        })
    }

    fn transformed(&self, s: &DMatrix<f64>) -> GaussianState {
        GaussianState {
            n_modes: self.n_modes,
            mean: s * &self.mean,
            cov: s * &self.cov * s.transpose(),
        }
    }

    pub fn mean_photon_number(&self, i: usize) -> Result<f64> {
        self.check_mode(i)?;
        let (x, y) = (self.mean[2 * i], self.mean[2 * i + 1]);
        let vx = self.cov[(2 * i, 2 * i)];
        let vy = self.cov[(2 * i + 1, 2 * i + 1)];
        Ok(0.5 * (vx + vy - 1.0) + 0.5 * (x * x + y * y))
    }

    /// Ladder-operator moments used by the Wick contraction engine.
    pub fn ladder_moments(&self) -> LadderMoments {
        let n = self.n_modes;
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let alpha = (0..n)
            .map(|j| Complex64::new(self.mean[2 * j] * s2, self.mean[2 * j + 1] * s2))
            .collect();
        let zero = Complex64::new(0.0, 0.0);
        let mut normal = DMatrix::from_element(n, n, zero);
        let mut anomalous = DMatrix::from_element(n, n, zero);
        for j in 0..n {
            for k in 0..n {
                let sxx = self.cov[(2 * j, 2 * k)];
                let syy = self.cov[(2 * j + 1, 2 * k + 1)];
                let sxy = self.cov[(2 * j, 2 * k + 1)];
                let syx = self.cov[(2 * j + 1, 2 * k)];
                let delta = if j == k { 1.0 } else { 0.0 };
                anomalous[(j, k)] = Complex64::new(0.5 * (sxx - syy), 0.5 * (sxy + syx));
                normal[(j, k)] = Complex64::new(0.5 * (sxx + syy - delta), 0.5 * (sxy - syx));
            }
        }
        LadderMoments {
            alpha,
            normal,
            anomalous,
        }
    }

    /// Symplectic eigenvalues, sorted ascending (one per mode).
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let dim = 2 * self.n_modes;
        let chol = self
            .cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Unphysical("covariance is not positive definite".into()))?;
        let l = chol.l();
        let omega = symplectic_form(self.n_modes);
        let a = l.transpose() * omega * &l;
        let sym = -(&a * &a);
        let sym = (&sym + sym.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok((0..dim / 2).map(|k| 0.5 * (ev[2 * k] + ev[2 * k + 1])).collect())
    }

    /// Checks symmetry (1e-12 relative) and `ν ≥ 1/2 - 1e-10`.
    pub fn validate(&self) -> Result<()> {
        let scale = self.cov.amax().max(1.0);
        let asym = (&self.cov - self.cov.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::Unphysical(format!("covariance asymmetry {asym:e}")));
        }
        if !self.mean.iter().chain(self.cov.iter()).all(|v| v.is_finite()) {
            return Err(Error::Unphysical("non-finite entries".into()));
        }
        let nu = self.symplectic_eigenvalues()?;
        if let Some(&min) = nu.first() {
            if min < 0.5 - 1e-10 * scale.max(1.0) {
                return Err(Error::Unphysical(format!(
                    "symplectic eigenvalue {min} below 1/2"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn beam_splitter_matrix(t: f64, r: f64) -> [[Complex64; 2]; 2] {
    let tt = Complex64::new(t, 0.0);
    let ir = Complex64::new(0.0, r);
    [[tt, ir], [ir, tt]]
}

/// `Ω = ⊕ [[0, 1], [-1, 0]]` in the interleaved ordering.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        o[(2 * k, 2 * k + 1)] = 1.0;
        o[(2 * k + 1, 2 * k)] = -1.0;
    }
    o
}

/// Real symplectic matrix of a two-mode unitary embedded in `n_modes`.
pub fn two_mode_symplectic(
    n_modes: usize,
    i: usize,
    j: usize,
    u: [[Complex64; 2]; 2],
) -> DMatrix<f64> {
    let mut s = DMatrix::<f64>::identity(2 * n_modes, 2 * n_modes);
    let modes = [i, j];
    for (r, &rm) in modes.iter().enumerate() {
        for (c, &cm) in modes.iter().enumerate() {
            let (x, y) = (u[r][c].re, u[r][c].im);
            s[(2 * rm, 2 * cm)] = x;
            s[(2 * rm, 2 * cm + 1)] = -y;
            s[(2 * rm + 1, 2 * cm)] = y;
            s[(2 * rm + 1, 2 * cm + 1)] = x;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vacuum_is_exact() {
        let v = GaussianState::vacuum(3);
        assert!(v.mean().iter().all(|&x| x == 0.0));
        assert_eq!(v.cov(), &(DMatrix::identity(6, 6) * 0.5));
        v.validate().unwrap();
    }

    #[test]
    fn beam_splitter_keeps_vacuum() {
        let v = GaussianState::vacuum(2);
        for tau in [0.0, 0.3, 1.0] {
            let out = v.apply_beam_splitter(0, 1, tau).unwrap();
            assert_relative_eq!(out.cov(), v.cov(), epsilon = 1e-15);
            assert!(out.mean().iter().all(|&x| x.abs() < 1e-15));
        }
    }

    #[test]
    fn coherent_reflection() {
        let mu: f64 = 3.0;
        let tau = 0.7;
        let s = GaussianState::vacuum(1).tensor(&GaussianState::coherent(c(mu.sqrt(), 0.0)));
        let out = s.apply_beam_splitter(0, 1, tau).unwrap();
        assert_relative_eq!(out.mean_photon_number(0).unwrap(), (1.0 - tau) * mu, epsilon = 1e-12);
        assert_relative_eq!(out.mean_photon_number(1).unwrap(), tau * mu, epsilon = 1e-12);
    }

    #[test]
    fn twin_beam_transmission() {
        let lambda = 0.8;
        let tau = 0.35;
        let s = GaussianState::twin_beam(lambda, 0.0)
            .unwrap()
            .tensor(&GaussianState::vacuum(1));
        let out = s.apply_beam_splitter(0, 2, tau).unwrap();
        assert_relative_eq!(out.mean_photon_number(0).unwrap(), tau * lambda, epsilon = 1e-12);
    }

    #[test]
    fn phase_rotation() {
        let mu: f64 = 2.0;
        let psi = 0.4;
        let s = GaussianState::coherent(c(mu.sqrt(), 0.0));
        assert_eq!(s.apply_phase(0, 0.0).unwrap(), s);
        let r = s.apply_phase(0, psi).unwrap();
        assert_relative_eq!(r.mean()[0], (2.0 * mu).sqrt() * psi.cos(), epsilon = 1e-14);
        assert_relative_eq!(r.mean()[1], (2.0 * mu).sqrt() * psi.sin(), epsilon = 1e-14);
    }

    #[test]
    fn rotation_swaps_squeezed_quadrature() {
        // theta = 0 squeezes y
        let s = GaussianState::squeezed_vacuum(1.5, 0.0).unwrap();
        assert!(s.cov()[(1, 1)] < 0.5 && s.cov()[(0, 0)] > 0.5);
        let r = s.apply_phase(0, FRAC_PI_2).unwrap();
        assert_relative_eq!(r.cov()[(0, 0)], s.cov()[(1, 1)], epsilon = 1e-14);
        assert_relative_eq!(r.cov()[(1, 1)], s.cov()[(0, 0)], epsilon = 1e-14);
    }

    #[test]
    fn squeezed_quadrature_variance() {
        let lambda: f64 = 2.0;
        let r = lambda.sqrt().asinh();
        let s = GaussianState::squeezed_vacuum(lambda, 0.0).unwrap();
        assert_relative_eq!(s.cov()[(1, 1)], 0.5 * (-2.0 * r).exp(), epsilon = 1e-13);
        assert_relative_eq!(s.mean_photon_number(0).unwrap(), lambda, epsilon = 1e-13);
        let nu = s.symplectic_eigenvalues().unwrap();
        assert_relative_eq!(nu[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn loss_scales_photon_number() {
        let s = GaussianState::coherent(c(1.2, -0.4));
        assert_eq!(s.apply_loss(0, 1.0).unwrap(), s);
        let n0 = s.mean_photon_number(0).unwrap();
        let l = s.apply_loss(0, 0.3).unwrap();
        assert_relative_eq!(l.mean_photon_number(0).unwrap(), 0.3 * n0, epsilon = 1e-14);
    }

    #[test]
    fn ladder_moments_roundtrip() {
        let s = GaussianState::twin_beam(0.6, 0.9)
            .unwrap()
            .tensor(&GaussianState::coherent(c(0.3, 0.8)))
            .apply_beam_splitter(1, 2, 0.4)
            .unwrap();
        let lm = s.ladder_moments();
        let back = GaussianState::from_ladder_moments(&lm.alpha, &lm.normal, &lm.anomalous);
        assert_relative_eq!(back.cov(), s.cov(), epsilon = 1e-14);
        assert_relative_eq!(back.mean(), s.mean(), epsilon = 1e-14);
        assert!(lm.anomalous[(0, 2)].norm() > 0.0);
    }

    #[test]
    fn errors() {
        let s = GaussianState::vacuum(2);
        assert!(matches!(s.apply_beam_splitter(0, 2, 0.5), Err(Error::InvalidMode { .. })));
        assert!(matches!(s.apply_beam_splitter(1, 1, 0.5), Err(Error::SameMode(1))));
        assert!(matches!(s.apply_beam_splitter(0, 1, 1.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(s.apply_loss(0, -0.1), Err(Error::OutOfRange { .. })));
        assert!(matches!(s.apply_phase(5, PI), Err(Error::InvalidMode { .. })));
        let bad = DMatrix::identity(2, 2) * 0.3;
        assert!(matches!(
            GaussianState::new(DVector::zeros(2), bad),
            Err(Error::Unphysical(_))
        ));
    }
}
