//! PHY abstraction: from per-sub-band post-processing SNRs to a
//! transport-block error decision.
//!
//! Instead of simulating the coded chain symbol by symbol, the per-sub-band
//! SNRs are compressed into one effective SNR in the capacity domain
//! (`gamma_eff = C^-1(mean C(gamma_l))` with `C(x) = log2(1 + x)`), and the
//! block error probability is a logistic ramp in dB around the Shannon
//! threshold of the configured spectral efficiency plus an implementation
//! gap. One uniform draw per transport block then decides success or error,
//! which keeps Monte-Carlo trials cheap and exactly reproducible.

use crate::error::{Error, Result};
use crate::numerics::Scalar;
use crate::precoding::SubbandAssignment;

/// Logistic transport-block error model for one modulation-and-coding
/// scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McsModel<T> {
    spectral_eff_bits: T,
    shannon_gap_db: T,
    transition_slope: T,
}

impl<T: Scalar> McsModel<T> {
    /// Validates and builds a model.
    ///
    /// `spectral_eff_bits` is the information rate in bits per symbol,
    /// `shannon_gap_db` shifts the error threshold above the Shannon limit
    /// for that rate, and `transition_slope` sets the logistic steepness in
    /// 1/dB (larger = sharper waterfall).
    pub fn new(spectral_eff_bits: T, shannon_gap_db: T, transition_slope: T) -> Result<Self> {
        if !(spectral_eff_bits > T::zero()) {
            return Err(Error::Parameter(
                "spectral efficiency must be positive".into(),
            ));
        }
        if !(shannon_gap_db >= T::zero()) {
            return Err(Error::Parameter(
                "implementation gap must be nonnegative".into(),
            ));
        }
        if !(transition_slope > T::zero()) {
            return Err(Error::Parameter(
                "transition slope must be positive".into(),
            ));
        }
        Ok(Self {
            spectral_eff_bits,
            shannon_gap_db,
            transition_slope,
        })
    }

    /// Information bits per symbol.
    pub fn spectral_eff_bits(&self) -> T {
        self.spectral_eff_bits
    }

    /// Gap to the Shannon limit in dB.
    pub fn shannon_gap_db(&self) -> T {
        self.shannon_gap_db
    }

    /// Logistic steepness in 1/dB.
    pub fn transition_slope(&self) -> T {
        self.transition_slope
    }

    /// The 50%-error SNR in dB: `10 log10(2^eff - 1) + gap`.
    pub fn threshold_db(&self) -> T {
        let ten = T::from_f64(10.0).unwrap();
        ten * (self.spectral_eff_bits.exp2() - T::one()).log10() + self.shannon_gap_db
    }
}

impl<T: Scalar> Default for McsModel<T> {
    /// 64QAM MCS index 22 per TS 38.214 Table 5.1.3.1-1 (Qm = 6,
    /// R = 666/1024, spectral efficiency 3.9023 bits/symbol), with a 2 dB
    /// implementation gap and a 5/dB waterfall.
    fn default() -> Self {
        Self::new(
            T::from_f64(3.9023).unwrap(),
            T::from_f64(2.0).unwrap(),
            T::from_f64(5.0).unwrap(),
        )
        .expect("default model is valid")
    }
}

/// Capacity-domain effective SNR: `2^(mean_l log2(1 + gamma_l)) - 1`.
///
/// Equal inputs map to themselves; mixed inputs land between the minimum and
/// the maximum, weighted the way a capacity-achieving code would see them.
pub fn effective_snr<T: Scalar>(gammas: &[T]) -> Result<T> {
    if gammas.is_empty() {
        return Err(Error::Parameter(
            "effective SNR of an empty sub-band list".into(),
        ));
    }
    let n = T::from_usize(gammas.len()).unwrap();
    let mean_capacity = gammas
        .iter()
        .fold(T::zero(), |acc, &g| acc + (T::one() + g).log2())
        / n;
    Ok(mean_capacity.exp2() - T::one())
}

/// Numerically stable logistic `1 / (1 + exp(x))`.
fn logistic_of_neg<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        let e = (-x).exp();
        e / (T::one() + e)
    } else {
        T::one() / (T::one() + x.exp())
    }
}

/// Transport-block error probability at a given effective SNR.
pub fn tb_error_prob<T: Scalar>(gamma_eff: T, mcs: &McsModel<T>) -> T {
    let ten = T::from_f64(10.0).unwrap();
    let gamma_db = ten * gamma_eff.log10();
    logistic_of_neg(mcs.transition_slope() * (gamma_db - mcs.threshold_db()))
}

/// Decides one transport block: error iff `draw` falls below the block error
/// probability of the assignments' effective SNR. `draw` is a uniform sample
/// from `[0, 1)`; the decision is a pure function of it.
pub fn simulate_tb<T: Scalar>(
    assignments: &[SubbandAssignment<T>],
    mcs: &McsModel<T>,
    draw: T,
) -> Result<bool> {
    let gammas: Vec<T> = assignments.iter().map(|a| a.post_snr_linear()).collect();
    let p = tb_error_prob(effective_snr(&gammas)?, mcs);
    Ok(draw < p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{fixture, FixtureKind, GridSpec};
    use crate::codebook::legacy_codebook;
    use crate::precoding::{assign_all, partition, PrecodingMode, SelectionRule};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn equal_inputs_are_a_fixed_point() {
        for &g in &[0.01f64, 1.0, 7.5, 1234.5] {
            let eff = effective_snr(&[g, g, g]).unwrap();
            assert!((eff - g).abs() <= 1e-12 * g.max(1.0), "gamma {g} -> {eff}");
        }
    }

    #[test]
    fn capacity_mean_of_zero_and_three_is_one() {
        // C(0) = 0 and C(3) = 2, so the mean capacity is 1 and the inverse
        // map gives 2^1 - 1 = 1.
        let eff = effective_snr(&[0.0f64, 3.0]).unwrap();
        assert!((eff - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(effective_snr::<f64>(&[]).is_err());
    }

    proptest! {
        #[test]
        fn effective_snr_lies_between_min_and_max(
            gammas in proptest::collection::vec(0.0f64..1e4, 1..20),
        ) {
            let eff = effective_snr(&gammas).unwrap();
            let lo = gammas.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = gammas.iter().cloned().fold(0.0, f64::max);
            prop_assert!(eff >= lo - 1e-9 * (1.0 + lo));
            prop_assert!(eff <= hi + 1e-9 * (1.0 + hi));
        }

        #[test]
        fn error_probability_is_monotone_decreasing(
            db_a in -10.0f64..40.0,
            step in 0.01f64..10.0,
        ) {
            let mcs = McsModel::<f64>::default();
            let ga = 10f64.powf(db_a / 10.0);
            let gb = 10f64.powf((db_a + step) / 10.0);
            let pa = tb_error_prob(ga, &mcs);
            let pb = tb_error_prob(gb, &mcs);
            // Strictness holds wherever the logistic is not saturated to a
            // representable endpoint.
            prop_assert!(pb <= pa);
            if pa < 1.0 - 1e-12 && pb > 1e-12 {
                prop_assert!(pb < pa);
            }
            prop_assert!((0.0..=1.0).contains(&pa));
            prop_assert!((0.0..=1.0).contains(&pb));
        }
    }

    #[test]
    fn error_probability_is_half_at_the_threshold() {
        let mcs = McsModel::<f64>::default();
        let gamma = 10f64.powf(mcs.threshold_db() / 10.0);
        assert!((tb_error_prob(gamma, &mcs) - 0.5).abs() <= 1e-12);
        // MCS 22 at 3.9023 bits/symbol: Shannon threshold ~11.45 dB, +2 dB
        // gap.
        assert!((mcs.threshold_db() - 13.45).abs() < 0.05);
    }

    #[test]
    fn logistic_limits_behave() {
        let mcs = McsModel::<f64>::default();
        assert!(tb_error_prob(1e12, &mcs) < 1e-9);
        // Zero SNR maps to -inf dB: certain error.
        assert_eq!(tb_error_prob(0.0, &mcs), 1.0);
        assert!(tb_error_prob(1.0, &mcs) > 0.5);
    }

    #[test]
    fn model_parameters_are_validated() {
        assert!(McsModel::new(0.0, 2.0, 5.0).is_err());
        assert!(McsModel::new(3.9, -0.1, 5.0).is_err());
        assert!(McsModel::new(3.9, 2.0, 0.0).is_err());
        assert!(McsModel::new(3.9, 0.0, 5.0).is_ok());
    }

    fn fixture_assignments(p_total: f64) -> Vec<crate::precoding::SubbandAssignment<f64>> {
        let spec = GridSpec::new(8, 12, 30_000.0).unwrap();
        let grid = fixture::<f64>(FixtureKind::TwoTap, &spec, 2, 2).unwrap();
        let part = partition(&spec, 1).unwrap();
        let cb = legacy_codebook::<f64>(2).unwrap();
        assign_all(
            &grid,
            &part,
            SelectionRule::Codebook(&cb),
            PrecodingMode::Subband,
            p_total,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn extreme_draws_pin_the_decision() {
        // Mid-waterfall power so the probability is strictly inside (0, 1).
        let assignments = fixture_assignments(60.0);
        let mcs = McsModel::<f64>::default();
        assert!(simulate_tb(&assignments, &mcs, 0.0).unwrap());
        assert!(!simulate_tb(&assignments, &mcs, 1.0).unwrap());
        assert!(simulate_tb(&[], &mcs, 0.5).is_err());
    }

    #[test]
    fn empirical_error_rate_concentrates_on_the_model_probability() {
        let assignments = fixture_assignments(60.0);
        let mcs = McsModel::<f64>::default();
        let gammas: Vec<f64> = assignments.iter().map(|a| a.post_snr_linear()).collect();
        let p = tb_error_prob(effective_snr(&gammas).unwrap(), &mcs);
        assert!(p > 0.05 && p < 0.95, "probability {p} is not mid-waterfall");

        let n = 100_000;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut errors = 0usize;
        for _ in 0..n {
            let u: f64 = rng.random();
            if simulate_tb(&assignments, &mcs, u).unwrap() {
                errors += 1;
            }
        }
        let rate = errors as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (rate - p).abs() <= 3.0 * sigma,
            "rate {rate}, model {p}, sigma {sigma}"
        );
    }
}
