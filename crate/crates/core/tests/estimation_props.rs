use std::f64::consts::{FRAC_PI_2, SQRT_2};

use proptest::prelude::*;
use twinbeam::estimation::{u0, EstimatorKind, EstimatorSpec};
use twinbeam::phase_noise::{mc_expectation, mc_single_arm, EstimatorEvaluator, PhaseNoiseModel};
use twinbeam::{HolometerConfig, InputKind};

fn config(kind: InputKind, mu: f64, lambda: f64, eta: f64, phi: f64, psi: f64) -> HolometerConfig {
    HolometerConfig {
        mu,
        lambda,
        eta,
        psi,
        phi0_1: phi,
        phi0_2: phi,
        input_kind: kind,
        ..Default::default()
    }
}

/// Smallest μ giving regime parameter `k` at `φ₀`.
fn mu_for_k(k: f64, lambda: f64, phi: f64) -> f64 {
    let tau = (0.5 * phi).cos().powi(2);
    k * tau * lambda / (1.0 - tau)
}

fn ratio(c: &HolometerConfig, kind: EstimatorKind) -> f64 {
    u0(c, &EstimatorSpec::new(kind)).unwrap().ratio
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sum_and_difference_readouts_agree_in_regime_b(
        lambda in 0.5f64..20.0,
        eta in 0.5f64..1.0,
        log_phi in -3.0f64..-0.5,
        // the gap closes like 1/k and is largest as η → 1 (4.7% at k = 10⁴)
        log_k in 6.0f64..8.0,
    ) {
        let phi = 10f64.powf(log_phi);
        let mu = mu_for_k(10f64.powf(log_k), lambda, phi);
        let diff = ratio(&config(InputKind::Twb, mu, lambda, eta, phi, FRAC_PI_2), EstimatorKind::TwbDifferenceSquared);
        let sum = ratio(&config(InputKind::Twb, mu, lambda, eta, phi, 0.0), EstimatorKind::TwbSumSquared);
        prop_assert!((diff - sum).abs() <= 0.01 * diff, "{} vs {}", diff, sum);
    }

    #[test]
    fn twin_beam_costs_root_two_over_squeezing_in_regime_b(
        lambda in 1.0f64..20.0,
        eta in 0.5f64..1.0,
        log_phi in -3.0f64..-1.0,
        log_k in 4.0f64..6.0,
    ) {
        let phi = 10f64.powf(log_phi);
        let mu = mu_for_k(10f64.powf(log_k), lambda, phi);
        let twb = ratio(&config(InputKind::Twb, mu, lambda, eta, phi, FRAC_PI_2), EstimatorKind::TwbDifferenceSquared);
        let sq = ratio(&config(InputKind::TwoSqueezed, mu, lambda, eta, phi, FRAC_PI_2), EstimatorKind::QuadratureProduct);
        prop_assert!((twb / sq - SQRT_2).abs() <= 0.01 * SQRT_2, "{}", twb / sq);
    }

    #[test]
    fn ratio_never_beats_zero(
        lambda in 0.01f64..20.0,
        eta in 0.1f64..1.0,
        log_phi in -6.0f64..0.0,
        log_mu in 3.0f64..12.0,
    ) {
        let c = config(InputKind::TwoSqueezed, 10f64.powf(log_mu), lambda, eta, 10f64.powf(log_phi), 0.0);
        let r = u0(&c, &EstimatorSpec::new(EstimatorKind::QuadratureProduct)).unwrap();
        prop_assert!(r.ratio > 0.0 && r.ratio.is_finite());
        prop_assert!(r.numerator_var >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn noise_configurations_share_marginals(
        seed_par in any::<u64>(),
        seed_perp in any::<u64>(),
        eps_frac in -1.0f64..1.0,
        phi in 0.1f64..1.5,
    ) {
        let c = config(InputKind::Twb, 1e4, 1.0, 0.9, phi, FRAC_PI_2);
        let sigma2 = 1e-4;
        let par = PhaseNoiseModel::parallel(sigma2, eps_frac * sigma2, seed_par).unwrap();
        let perp = PhaseNoiseModel::perpendicular(sigma2, seed_perp).unwrap();
        let (n_par, v_par) = mc_single_arm(&c, &par, 20_000).unwrap();
        let (n_perp, v_perp) = mc_single_arm(&c, &perp, 20_000).unwrap();
        let z = |a: f64, sa: f64, b: f64, sb: f64| (a - b).abs() / sa.hypot(sb);
        prop_assert!(z(n_par.mean, n_par.std_error, n_perp.mean, n_perp.std_error) < 5.0);
        prop_assert!(z(v_par.mean, v_par.std_error, v_perp.mean, v_perp.std_error) < 5.0);
    }

    #[test]
    fn noiseless_average_is_the_central_value(
        seed in any::<u64>(),
        phi in 0.1f64..1.5,
        kind in prop_oneof![Just(EstimatorKind::TwbDifferenceSquared), Just(EstimatorKind::QuadratureProduct)],
    ) {
        let input = if kind == EstimatorKind::QuadratureProduct { InputKind::TwoSqueezed } else { InputKind::Twb };
        let c = config(input, 1e4, 1.0, 0.9, phi, FRAC_PI_2);
        let noise = PhaseNoiseModel::parallel(0.0, 0.0, seed).unwrap();
        let e = mc_expectation(&c, &EstimatorSpec::new(kind), &noise, 1000).unwrap();
        let central = EstimatorEvaluator::new(&c, kind).unwrap().mean(phi, phi);
        prop_assert_eq!(e.mean, central);
        prop_assert_eq!(e.std_error, 0.0);
    }
}
