//! Truncated Fock-basis construction of the holometer states, used as an
//! independent check of the Gaussian engine at small photon numbers.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{check_unit_interval, Error, Result};
use crate::holometer::{HolometerConfig, InputKind};
use crate::moments::{binomial, ReadoutMoments};

/// Highest joint moment order computed from Fock amplitudes.
pub const MAX_FOCK_ORDER: usize = 4;
/// Allowed norm change of a unitary step on a truncated basis.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Tail probability accepted for a user-supplied cutoff.
pub const TAIL_TOLERANCE: f64 = 1e-12;
/// Automatic cutoffs bound the tail weighted by `(1+n)⁴`.
pub const WEIGHTED_TAIL_TOLERANCE: f64 = 1e-13;
/// Largest automatic cutoff per mode.
pub const CUTOFF_CAP: usize = 160;
pub const MAX_ORACLE_MU: f64 = 4.0;
pub const MAX_ORACLE_LAMBDA: f64 = 1.0;
/// Dense tensors above this many amplitudes are refused.
const MAX_DENSE_LEN: usize = 1 << 24;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Beam-splitter matrix convention for the Fock simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsConvention {
    /// `[[√τ, i√(1-τ)], [i√(1-τ), √τ]]`, as in the Gaussian engine.
    Symmetric,
    /// `[[√τ, √(1-τ)], [√(1-τ), √τ]]`. Not unitary; negative control only.
    BrokenSymmetricReal,
}

impl BsConvention {
    pub fn matrix(self, tau: f64) -> [[Complex64; 2]; 2] {
        let t = Complex64::from(tau.sqrt());
        let r = (1.0 - tau).max(0.0).sqrt();
        match self {
            BsConvention::Symmetric => [[t, I * r], [I * r, t]],
            BsConvention::BrokenSymmetricReal => [[t, r.into()], [r.into(), t]],
        }
    }

    pub fn is_unitary(self) -> bool {
        self == BsConvention::Symmetric
    }
}

/// Interferometer at phase `φ`, with signed `cos(φ/2)`, `sin(φ/2)`.
pub fn interferometer_matrix(phi: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (0.5 * phi).sin_cos();
    [[c.into(), I * s], [I * s, c.into()]]
}

/// Pure state on `n_modes` modes, each truncated to `0..cutoff` photons.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    n_modes: usize,
    cutoff: usize,
    amps: Vec<Complex64>,
}

impl FockState {
    pub fn vacuum(n_modes: usize, cutoff: usize) -> Result<Self> {
        let len = dense_len(n_modes, cutoff)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); len];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(FockState { n_modes, cutoff, amps })
    }

    pub fn from_amplitudes(n_modes: usize, cutoff: usize, amps: Vec<Complex64>) -> Result<Self> {
        let len = dense_len(n_modes, cutoff)?;
        if amps.len() != len {
            return Err(Error::InvalidParameter(format!(
                "expected {len} amplitudes, got {}",
                amps.len()
            )));
        }
        Ok(FockState { n_modes, cutoff, amps })
    }

    /// Product of single-mode states of equal cutoff.
    pub fn product(modes: &[Vec<Complex64>]) -> Result<Self> {
        let cutoff = modes.first().map_or(0, Vec::len);
        if modes.iter().any(|m| m.len() != cutoff) {
            return Err(Error::InvalidParameter("single-mode cutoffs differ".into()));
        }
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for m in modes {
            amps = amps
                .iter()
                .flat_map(|a| m.iter().map(move |b| a * b))
                .collect();
        }
        FockState::from_amplitudes(modes.len(), cutoff, amps)
    }

    /// Two-mode state `Σ C[m,n] |m,n⟩`.
    pub fn two_mode(c: &DMatrix<Complex64>) -> Result<Self> {
        if c.nrows() != c.ncols() {
            return Err(Error::InvalidParameter("amplitude matrix must be square".into()));
        }
        let n = c.nrows();
        let amps = (0..n * n).map(|k| c[(k / n, k % n)]).collect();
        FockState::from_amplitudes(2, n, amps)
    }

    /// Appends `extra` modes in vacuum.
    pub fn with_vacuum_modes(&self, extra: usize) -> Result<Self> {
        let stride = self.cutoff.pow(extra as u32);
        let mut out = FockState::vacuum(self.n_modes + extra, self.cutoff)?;
        out.amps.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for (k, a) in self.amps.iter().enumerate() {
            out.amps[k * stride] = *a;
        }
        Ok(out)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if !(n > 0.0) {
            return Err(Error::Undefined("zero state cannot be normalized".into()));
        }
        Ok(FockState {
            amps: self.amps.iter().map(|a| a / n).collect(),
            ..self.clone()
        })
    }

    pub fn amplitude(&self, occupation: &[usize]) -> Result<Complex64> {
        if occupation.len() != self.n_modes {
            return Err(Error::InvalidParameter("occupation has wrong length".into()));
        }
        let mut idx = 0;
        for &n in occupation {
            if n >= self.cutoff {
                return Ok(Complex64::new(0.0, 0.0));
            }
            idx = idx * self.cutoff + n;
        }
        Ok(self.amps[idx])
    }

    fn stride(&self, mode: usize) -> usize {
        self.cutoff.pow((self.n_modes - 1 - mode) as u32)
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        for m in [i, j] {
            if m >= self.n_modes {
                return Err(Error::InvalidMode {
                    index: m,
                    n_modes: self.n_modes,
                });
            }
        }
        if i == j {
            return Err(Error::SameMode(i));
        }
        Ok(())
    }

    /// Applies the linear map `[cᵢ; cⱼ] = u [aᵢ; aⱼ]` without checking that
    /// `u` is unitary or that the result fits the cutoff.
    pub fn apply_two_mode_matrix(&self, i: usize, j: usize, u: [[Complex64; 2]; 2]) -> Result<Self> {
        self.check_pair(i, j)?;
        let c = self.cutoff;
        let tables = transform_tables(u, c);
        let (si, sj) = (self.stride(i), self.stride(j));
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (idx, a) in self.amps.iter().enumerate() {
            if *a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let p = (idx / si) % c;
            let q = (idx / sj) % c;
            let base = idx - p * si - q * sj;
            let n = p + q;
            for (k, coeff) in tables[p * c + q].iter().enumerate() {
                let l = n - k;
                if k < c && l < c {
                    out[base + k * si + l * sj] += a * coeff;
                }
            }
        }
        Ok(FockState {
            amps: out,
            ..self.clone()
        })
    }

    /// Unitary two-mode map; fails if more than [`NORM_TOLERANCE`] of the
    /// norm leaves the truncated basis.
    pub fn apply_two_mode_unitary(&self, i: usize, j: usize, u: [[Complex64; 2]; 2]) -> Result<Self> {
        let out = self.apply_two_mode_matrix(i, j, u)?;
        let before = self.norm_sqr();
        let lost = before - out.norm_sqr();
        if lost.abs() > NORM_TOLERANCE * before.max(1.0) {
            return Err(Error::Cutoff {
                cutoff: self.cutoff,
                reason: format!("norm changed by {lost:e} in a two-mode unitary"),
            });
        }
        Ok(out)
    }

    pub fn apply_bs_unitary(&self, i: usize, j: usize, tau: f64) -> Result<Self> {
        self.apply_bs_with(i, j, tau, BsConvention::Symmetric)
    }

    pub fn apply_bs_with(&self, i: usize, j: usize, tau: f64, convention: BsConvention) -> Result<Self> {
        check_unit_interval("tau", tau)?;
        let u = convention.matrix(tau);
        if convention.is_unitary() {
            self.apply_two_mode_unitary(i, j, u)
        } else {
            self.apply_two_mode_matrix(i, j, u)
        }
    }

    pub fn apply_interferometer(&self, i: usize, j: usize, phi: f64) -> Result<Self> {
        self.apply_two_mode_unitary(i, j, interferometer_matrix(phi))
    }

    /// `P(nᵢ, nⱼ)` normalized to the state norm.
    pub fn joint_distribution(&self, i: usize, j: usize) -> Result<DMatrix<f64>> {
        self.check_pair(i, j)?;
        let c = self.cutoff;
        let (si, sj) = (self.stride(i), self.stride(j));
        let mut p = DMatrix::<f64>::zeros(c, c);
        for (idx, a) in self.amps.iter().enumerate() {
            p[((idx / si) % c, (idx / sj) % c)] += a.norm_sqr();
        }
        let norm = p.sum();
        Ok(p / norm)
    }
}

fn dense_len(n_modes: usize, cutoff: usize) -> Result<usize> {
    if n_modes == 0 || cutoff == 0 {
        return Err(Error::InvalidParameter("need at least one mode and cutoff ≥ 1".into()));
    }
    cutoff
        .checked_pow(n_modes as u32)
        .filter(|&l| l <= MAX_DENSE_LEN)
        .ok_or_else(|| Error::Cutoff {
            cutoff,
            reason: format!("{n_modes}-mode tensor too large"),
        })
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for k in 1..=n {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

/// For every input `|p, q⟩`, the coefficients of `|k, p+q-k⟩` in the output,
/// from `aᵢ† → u₀₀cᵢ† + u₁₀cⱼ†` and `aⱼ† → u₀₁cᵢ† + u₁₁cⱼ†`.
fn transform_tables(u: [[Complex64; 2]; 2], cutoff: usize) -> Vec<Vec<Complex64>> {
    let fact = factorials(2 * cutoff);
    let mut tables = Vec::with_capacity(cutoff * cutoff);
    for p in 0..cutoff {
        let first: Vec<Complex64> = (0..=p)
            .map(|s| binomial(p, s) * u[0][0].powu(s as u32) * u[1][0].powu((p - s) as u32))
            .collect();
        for q in 0..cutoff {
            let n = p + q;
            let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
            for t in 0..=q {
                let second = binomial(q, t) * u[0][1].powu(t as u32) * u[1][1].powu((q - t) as u32);
                for (s, f) in first.iter().enumerate() {
                    out[s + t] += f * second;
                }
            }
            for (k, v) in out.iter_mut().enumerate() {
                *v *= (fact[k] * fact[n - k] / (fact[p] * fact[q])).sqrt();
            }
            tables.push(out);
        }
    }
    tables
}

/// `S(n, k)`, Stirling numbers of the second kind.
fn stirling2(n: usize) -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; n + 1]; n + 1];
    s[0][0] = 1.0;
    for i in 1..=n {
        for k in 1..=i {
            s[i][k] = k as f64 * s[i - 1][k] + s[i - 1][k - 1];
        }
    }
    s
}

/// Centered moments from normally ordered moments `⟨:N₁^a N₂^b:⟩` of the
/// lossless modes, after detection with efficiencies `eta`.
fn moments_from_factorial(
    factorial: &DMatrix<f64>,
    max_order: usize,
    eta: (f64, f64),
) -> ReadoutMoments {
    let s = stirling2(max_order);
    let mut raw = DMatrix::<f64>::zeros(max_order + 1, max_order + 1);
    for p in 0..=max_order {
        for q in 0..=max_order - p {
            let mut v = 0.0;
            for a in 0..=p {
                for b in 0..=q {
                    v += s[p][a] * s[q][b] * eta.0.powi(a as i32) * eta.1.powi(b as i32) * factorial[(a, b)];
                }
            }
            raw[(p, q)] = v;
        }
    }
    let (m1, m2) = (raw[(1, 0)], raw[(0, 1)]);
    let mut centered = std::collections::BTreeMap::new();
    for total in 2..=max_order {
        for q in 0..=total {
            let p = total - q;
            let mut v = 0.0;
            for i in 0..=p {
                for j in 0..=q {
                    v += binomial(p, i)
                        * binomial(q, j)
                        * (-m1).powi((p - i) as i32)
                        * (-m2).powi((q - j) as i32)
                        * raw[(i, j)];
                }
            }
            centered.insert((p, q), v);
        }
    }
    ReadoutMoments {
        mean_1: m1,
        mean_2: m2,
        var_1: centered[&(2, 0)],
        var_2: centered[&(0, 2)],
        cov: centered[&(1, 1)],
        max_order,
        centered,
    }
}

fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| n as f64 - i as f64).product()
}

fn check_order(max_order: usize) -> Result<usize> {
    if max_order > MAX_FOCK_ORDER {
        return Err(Error::OrderTooHigh {
            order: max_order,
            max: MAX_FOCK_ORDER,
        });
    }
    Ok(max_order.max(2))
}

/// Joint photon-number moments of modes `(i, j)` detected with efficiency
/// `eta`, through η-scaling of normally ordered moments.
pub fn fock_moments(
    state: &FockState,
    modes: (usize, usize),
    max_order: usize,
    eta: f64,
) -> Result<ReadoutMoments> {
    check_unit_interval("eta", eta)?;
    let max_order = check_order(max_order)?;
    let p = state.joint_distribution(modes.0, modes.1)?;
    let mut f = DMatrix::zeros(max_order + 1, max_order + 1);
    for a in 0..=max_order {
        for b in 0..=max_order - a {
            let mut v = 0.0;
            for n in a..p.nrows() {
                for m in b..p.ncols() {
                    v += p[(n, m)] * falling(n, a) * falling(m, b);
                }
            }
            f[(a, b)] = v;
        }
    }
    Ok(moments_from_factorial(&f, max_order, (eta, eta)))
}

/// Same moments with loss modelled by beam splitters onto vacuum ancillas.
pub fn fock_moments_with_ancilla_loss(
    state: &FockState,
    modes: (usize, usize),
    max_order: usize,
    eta: f64,
) -> Result<ReadoutMoments> {
    let n = state.n_modes();
    let lossy = state
        .with_vacuum_modes(2)?
        .apply_bs_unitary(modes.0, n, eta)?
        .apply_bs_unitary(modes.1, n + 1, eta)?;
    fock_moments(&lossy, modes, max_order, 1.0)
}

/// Smallest `M` with `Σ_{n≥M} pₙ(1+n)⁴ ≤ WEIGHTED_TAIL_TOLERANCE`.
fn auto_cutoff(prob: impl Fn(usize) -> f64, mean: f64) -> Result<usize> {
    let limit = CUTOFF_CAP + 400;
    let weighted: Vec<f64> = (0..limit).map(|n| prob(n) * ((1 + n) as f64).powi(4)).collect();
    let mut tail = 0.0;
    let mut cut = limit;
    for n in (0..limit).rev() {
        if tail + weighted[n] > WEIGHTED_TAIL_TOLERANCE && n as f64 > mean {
            break;
        }
        tail += weighted[n];
        cut = n;
    }
    let cut = cut.max(1);
    if cut > CUTOFF_CAP {
        return Err(Error::Cutoff {
            cutoff: CUTOFF_CAP,
            reason: format!("tail bound needs {cut} levels"),
        });
    }
    Ok(cut)
}

fn check_cutoff(prob: impl Fn(usize) -> f64, cutoff: usize) -> Result<usize> {
    let kept: f64 = (0..cutoff).map(prob).sum();
    if 1.0 - kept > TAIL_TOLERANCE {
        return Err(Error::Cutoff {
            cutoff,
            reason: format!("tail probability {:e}", 1.0 - kept),
        });
    }
    Ok(cutoff)
}

fn thermal_prob(lambda: f64) -> impl Fn(usize) -> f64 {
    move |n| (lambda / (1.0 + lambda)).powi(n as i32) / (1.0 + lambda)
}

fn poisson_prob(mu: f64) -> impl Fn(usize) -> f64 {
    move |n| {
        let ln = n as f64 * mu.max(f64::MIN_POSITIVE).ln() - mu - ln_factorial(n);
        if mu == 0.0 {
            if n == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            ln.exp()
        }
    }
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// `e^{-|β|²/2} βⁿ/√n!` for `n < cutoff`.
pub fn coherent_amplitudes(beta: Complex64, cutoff: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(cutoff);
    let mut a = Complex64::from((-0.5 * beta.norm_sqr()).exp());
    for n in 0..cutoff {
        out.push(a);
        a = a * beta / ((n + 1) as f64).sqrt();
    }
    out
}

/// `(1/√(1+λ)) (e^{iθ}√(λ/(1+λ)))^m` for `m < cutoff`.
pub fn twin_beam_amplitudes(lambda: f64, theta: f64, cutoff: usize) -> Vec<Complex64> {
    let x = Complex64::from_polar((lambda / (1.0 + lambda)).sqrt(), theta);
    let mut a = Complex64::from(1.0 / (1.0 + lambda).sqrt());
    (0..cutoff)
        .map(|_| {
            let v = a;
            a *= x;
            v
        })
        .collect()
}

/// Squeezed vacuum with `λ = sinh²r`: `(e^{iθ}tanh r)ⁿ √((2n)!)/(2ⁿn!) / √cosh r`
/// on `|2n⟩`.
pub fn squeezed_amplitudes(lambda: f64, theta: f64, cutoff: usize) -> Vec<Complex64> {
    let r = lambda.sqrt().asinh();
    let x = Complex64::from_polar(r.tanh(), theta);
    let mut out = vec![Complex64::new(0.0, 0.0); cutoff];
    let mut a = Complex64::from(1.0 / r.cosh().sqrt());
    let mut n = 0;
    while 2 * n < cutoff {
        out[2 * n] = a;
        // ratio of √((2n)!)/(2ⁿn!) between n+1 and n
        a = a * x * (((2 * n + 1) * (2 * n + 2)) as f64).sqrt() / (2.0 * (n + 1) as f64);
        n += 1;
    }
    out
}

fn squeezed_prob(lambda: f64) -> impl Fn(usize) -> f64 {
    let r = lambda.sqrt().asinh();
    let t2 = r.tanh().powi(2);
    move |n| {
        if n % 2 == 1 {
            return 0.0;
        }
        let k = n / 2;
        // (2k)!/(4^k k!²) via logs
        let ln = ln_factorial(2 * k) - 2.0 * ln_factorial(k) - k as f64 * 4f64.ln();
        (ln + k as f64 * t2.ln()).exp() / r.cosh()
    }
}

/// Truncated input of the double interferometer: the `(a₁, a₂)` pair in the
/// Fock basis and the coherent amplitude fed to both `b` ports.
#[derive(Debug, Clone)]
pub struct FockInput {
    pub a_pair: FockState,
    pub beta: Complex64,
    /// Levels kept for the coherent beams.
    pub coherent_cutoff: usize,
}

/// Builds the truncated input; `cutoff = None` selects the smallest cutoff
/// meeting the weighted tail bound.
pub fn build_fock_input(config: &HolometerConfig, cutoff: Option<usize>) -> Result<FockInput> {
    config.validate()?;
    if config.mu > MAX_ORACLE_MU {
        return Err(Error::OutOfRange {
            name: "mu",
            value: config.mu,
            min: 0.0,
            max: MAX_ORACLE_MU,
        });
    }
    if config.lambda > MAX_ORACLE_LAMBDA {
        return Err(Error::OutOfRange {
            name: "lambda",
            value: config.lambda,
            min: 0.0,
            max: MAX_ORACLE_LAMBDA,
        });
    }
    let lambda = config.lambda;
    let a_pair = match config.input_kind {
        InputKind::CoherentOnly => FockState::vacuum(2, cutoff.unwrap_or(1))?,
        InputKind::Twb => {
            let m = match cutoff {
                Some(c) => check_cutoff(thermal_prob(lambda), c)?,
                None => auto_cutoff(thermal_prob(lambda), lambda)?,
            };
            let amps = twin_beam_amplitudes(lambda, config.theta, m);
            FockState::two_mode(&DMatrix::from_diagonal(&amps.into()))?.normalized()?
        }
        InputKind::TwoSqueezed => {
            let m = match cutoff {
                Some(c) => check_cutoff(squeezed_prob(lambda), c)?,
                None => auto_cutoff(squeezed_prob(lambda), lambda)?,
            };
            let v = squeezed_amplitudes(lambda, config.squeezing_phase(), m);
            FockState::product(&[v.clone(), v])?.normalized()?
        }
    };
    Ok(FockInput {
        a_pair,
        beta: Complex64::from_polar(config.mu.sqrt(), config.psi),
        coherent_cutoff: auto_cutoff(poisson_prob(config.mu), config.mu)?,
    })
}

/// `⟨φₘ| c^{†p} c^p |φₘ'⟩` for `p ≤ max_order`, where `|φₘ⟩` is the output of
/// one interferometer fed with `|m⟩` in `a` and `|β⟩` in `b`, with `d` traced
/// out. Built by applying `(u₀₀c† + u₁₀d†)` to the displaced `(c, d)` vacuum on
/// an explicit two-mode grid.
fn grid_factorial_matrices(
    m_cut: usize,
    beta: Complex64,
    kb: usize,
    phi: f64,
    max_order: usize,
) -> Vec<DMatrix<Complex64>> {
    let u = interferometer_matrix(phi);
    let k_dim = m_cut + kb;
    let gc = coherent_amplitudes(u[0][1] * beta, k_dim);
    let gd = coherent_amplitudes(u[1][1] * beta, k_dim);
    let rows = k_dim * k_dim;
    let sqrt: Vec<f64> = (0..=k_dim).map(|n| (n as f64).sqrt()).collect();

    let mut re = DMatrix::<f64>::zeros(rows, m_cut);
    let mut im = DMatrix::<f64>::zeros(rows, m_cut);
    let mut cur: Vec<Complex64> = (0..rows).map(|r| gc[r / k_dim] * gd[r % k_dim]).collect();
    for m in 0..m_cut {
        for (r, v) in cur.iter().enumerate() {
            re[(r, m)] = v.re;
            im[(r, m)] = v.im;
        }
        if m + 1 == m_cut {
            break;
        }
        let norm = 1.0 / ((m + 1) as f64).sqrt();
        let mut next = vec![Complex64::new(0.0, 0.0); rows];
        for k in 0..k_dim {
            for l in 0..k_dim {
                let mut v = Complex64::new(0.0, 0.0);
                if k > 0 {
                    v += u[0][0] * sqrt[k] * cur[(k - 1) * k_dim + l];
                }
                if l > 0 {
                    v += u[1][0] * sqrt[l] * cur[k * k_dim + l - 1];
                }
                next[k * k_dim + l] = v * norm;
            }
        }
        cur = next;
    }

    (0..=max_order)
        .map(|p| {
            let mut a = re.clone();
            let mut b = im.clone();
            for r in 0..rows {
                let w = falling(r / k_dim, p).sqrt();
                a.row_mut(r).scale_mut(w);
                b.row_mut(r).scale_mut(w);
            }
            let real = a.tr_mul(&a) + b.tr_mul(&b);
            let imag = a.tr_mul(&b) - b.tr_mul(&a);
            DMatrix::from_fn(m_cut, m_cut, |i, j| Complex64::new(real[(i, j)], imag[(i, j)]))
        })
        .collect()
}

/// Same matrices from ladder-operator matrix elements: with
/// `c = u₀₀a + u₀₁b` and `b|β⟩ = β|β⟩`,
/// `cᵖ|m⟩|β⟩ = Σⱼ C(p,j) u₀₀ʲ (u₀₁β)^{p-j} √(m!/(m-j)!) |m-j⟩|β⟩`,
/// so the result is banded with half-width `p`.
fn ladder_factorial_matrices(
    m_cut: usize,
    beta: Complex64,
    phi: f64,
    max_order: usize,
) -> Vec<DMatrix<Complex64>> {
    let u = interferometer_matrix(phi);
    let gamma = u[0][1] * beta;
    (0..=max_order)
        .map(|p| {
            // w[m][j]: coefficient of |m-j⟩ in cᵖ|m⟩
            let w: Vec<Vec<Complex64>> = (0..m_cut)
                .map(|m| {
                    let mut lower = 1.0;
                    (0..=p.min(m))
                        .map(|j| {
                            if j > 0 {
                                lower *= ((m - j + 1) as f64).sqrt();
                            }
                            binomial(p, j) * u[0][0].powu(j as u32) * gamma.powu((p - j) as u32) * lower
                        })
                        .collect()
                })
                .collect();
            let mut out = DMatrix::zeros(m_cut, m_cut);
            for m in 0..m_cut {
                let lo = m.saturating_sub(p);
                let hi = (m + p).min(m_cut - 1);
                for mp in lo..=hi {
                    let mut v = Complex64::new(0.0, 0.0);
                    for (j, a) in w[m].iter().enumerate() {
                        // matching |m-j⟩ = |m'-j'⟩
                        if let Some(jp) = (mp + j).checked_sub(m) {
                            if let Some(b) = w[mp].get(jp) {
                                v += a.conj() * b;
                            }
                        }
                    }
                    out[(m, mp)] = v;
                }
            }
            out
        })
        .collect()
}

/// `x · y` for `x` zero outside `|i-k| ≤ band`.
fn band_mul(x: &DMatrix<Complex64>, band: usize, y: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = x.nrows();
    let mut out = DMatrix::zeros(n, y.ncols());
    for i in 0..n {
        for k in i.saturating_sub(band)..=(i + band).min(n - 1) {
            let a = x[(i, k)];
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..y.ncols() {
                out[(i, j)] += a * y[(k, j)];
            }
        }
    }
    out
}

/// Which construction of the single-interferometer matrices to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OraclePath {
    /// Banded ladder-operator matrix elements (fast).
    Ladder,
    /// Explicit two-mode output grid (slow, for cross-checks).
    Grid,
}

/// Photon-number moments at the readout ports computed in the Fock basis.
pub fn oracle_moments_from_input(
    input: &FockInput,
    config: &HolometerConfig,
    phi: (f64, f64),
    max_order: usize,
    path: OraclePath,
) -> Result<ReadoutMoments> {
    let max_order = check_order(max_order)?;
    let m_cut = input.a_pair.cutoff();
    let amps = input.a_pair.amplitudes();
    let c = DMatrix::from_fn(m_cut, m_cut, |i, j| amps[i * m_cut + j]);
    let (m1, m2, band) = match path {
        OraclePath::Ladder => (
            ladder_factorial_matrices(m_cut, input.beta, phi.0, max_order),
            ladder_factorial_matrices(m_cut, input.beta, phi.1, max_order),
            max_order,
        ),
        OraclePath::Grid => (
            grid_factorial_matrices(m_cut, input.beta, input.coherent_cutoff, phi.0, max_order),
            grid_factorial_matrices(m_cut, input.beta, input.coherent_cutoff, phi.1, max_order),
            m_cut,
        ),
    };
    let mut f = DMatrix::zeros(max_order + 1, max_order + 1);
    for p in 0..=max_order {
        let left = band_mul(&m1[p], band, &c);
        for q in 0..=max_order - p {
            // (M₁ C M₂ᵀ) = (M₂ (M₁C)ᵀ)ᵀ
            let full = band_mul(&m2[q], band, &left.transpose());
            f[(p, q)] = c
                .iter()
                .zip(full.transpose().iter())
                .map(|(x, y)| (x.conj() * y).re)
                .sum();
        }
    }
    let norm = f[(0, 0)];
    f /= norm;
    Ok(moments_from_factorial(&f, max_order, (config.eta_1(), config.eta_2())))
}

/// Fock-basis moments at the central phases.
pub fn oracle_moments(config: &HolometerConfig, max_order: usize) -> Result<ReadoutMoments> {
    let input = build_fock_input(config, None)?;
    oracle_moments_from_input(
        &input,
        config,
        (config.phi0_1, config.phi0_2),
        max_order,
        OraclePath::Ladder,
    )
}

/// Full four-mode tensor `(a₁, b₁, a₂, b₂)` with a common cutoff.
pub fn dense_holometer_state(config: &HolometerConfig, cutoff: usize) -> Result<FockState> {
    let input = build_fock_input(config, None)?;
    let m = input.a_pair.cutoff();
    let src = input.a_pair.amplitudes();
    let mut pair = vec![Complex64::new(0.0, 0.0); cutoff * cutoff];
    for i in 0..m.min(cutoff) {
        for j in 0..m.min(cutoff) {
            pair[i * cutoff + j] = src[i * m + j];
        }
    }
    let beam = coherent_amplitudes(input.beta, cutoff);
    // a₁ a₂ b₁ b₂, then reorder to a₁ b₁ a₂ b₂
    let mut amps = vec![Complex64::new(0.0, 0.0); cutoff.pow(4)];
    for a1 in 0..cutoff {
        for a2 in 0..cutoff {
            let p = pair[a1 * cutoff + a2];
            for b1 in 0..cutoff {
                for b2 in 0..cutoff {
                    amps[((a1 * cutoff + b1) * cutoff + a2) * cutoff + b2] = p * beam[b1] * beam[b2];
                }
            }
        }
    }
    FockState::from_amplitudes(4, cutoff, amps)?.normalized()
}

/// Readout moments from the dense four-mode tensor.
pub fn dense_oracle_moments(config: &HolometerConfig, cutoff: usize, max_order: usize) -> Result<ReadoutMoments> {
    if config.eta_2() != config.eta {
        return Err(Error::Unsupported("dense path uses one efficiency".into()));
    }
    let s = dense_holometer_state(config, cutoff)?
        .apply_interferometer(0, 1, config.phi0_1)?
        .apply_interferometer(2, 3, config.phi0_2)?;
    fock_moments(&s, (0, 2), max_order, config.eta)
}
