use std::sync::OnceLock;

use approx::{abs_diff_eq, relative_eq};
use atomarray::lattice::SumSettings;
use atomarray::mf1::{steady_one, steady_two, SteadySettings};
use atomarray::observables::{cavity_intensity, rts_one, rts_two, wfa_single, wfa_two};
use atomarray::{ArrayConfig, Drive, Polarization, SingleState, SumCache};
use proptest::prelude::*;

fn one() -> &'static SumCache {
    static CACHE: OnceLock<SumCache> = OnceLock::new();
    CACHE.get_or_init(|| {
        let config = ArrayConfig::single(0.8, Polarization::DeltaMpm1);
        SumCache::build(&config, SumSettings::default()).unwrap()
    })
}

fn two() -> &'static SumCache {
    static CACHE: OnceLock<SumCache> = OnceLock::new();
    CACHE.get_or_init(|| {
        let config = ArrayConfig::pair(0.8, Polarization::DeltaMpm1, 5.01);
        SumCache::build(&config, SumSettings::default()).unwrap()
    })
}

/// Bloch vector of a two-level atom stays inside the unit ball.
fn bloch_length(s: &SingleState) -> f64 {
    (4.0 * s.sigma_minus.norm_sqr() + (2.0 * s.e_pop - 1.0).powi(2)).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn intensity_round_trips(log_i in -12.0f64..4.0, delta in -5.0f64..5.0) {
        let i = 10f64.powf(log_i);
        let d = Drive::from_intensity(i, delta);
        prop_assert!(relative_eq!(d.intensity(), i, max_relative = 2.0 * f64::EPSILON));
    }

    #[test]
    fn weak_field_single_array_is_lossless_and_symmetric(x in -3.0f64..3.0) {
        let c = one();
        let r = wfa_single(c.delta_shift() + x, c);
        prop_assert!(abs_diff_eq!(r.norm_sqr() + (1.0 + r).norm_sqr(), 1.0, epsilon = 1e-12));
        let mirror = wfa_single(c.delta_shift() - x, c);
        prop_assert!(abs_diff_eq!(r.norm_sqr(), mirror.norm_sqr(), epsilon = 1e-12));
    }

    #[test]
    fn weak_field_pair_is_lossless(delta in -0.05f64..0.05) {
        let w = wfa_two(delta, two()).unwrap();
        prop_assert!(abs_diff_eq!(w.r_tot.norm_sqr() + w.t_tot.norm_sqr(), 1.0, epsilon = 1e-8));
        prop_assert!(w.cavity_gain >= 0.0);
    }

    #[test]
    fn mf1_single_array_is_physical_and_conserves_flux(delta in -3.0f64..3.0, log_i in -4.0f64..2.5) {
        let drive = Drive::from_intensity(10f64.powf(log_i), delta);
        let r = steady_one(&drive, one(), &SteadySettings::default()).unwrap();
        prop_assert!(r.converged);
        prop_assert!(bloch_length(&r.state) <= 1.0 + 1e-12);
        prop_assert!(r.state.incoherent_weight() >= -1e-15);
        let rts = rts_one(&r.state, &drive, &one().config).unwrap();
        prop_assert!(abs_diff_eq!(rts.total(), 1.0, epsilon = 1e-9), "R+T+S = {}", rts.total());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mf1_pair_is_physical_and_conserves_flux(delta in -0.05f64..0.05, log_i in -8.0f64..0.0) {
        let c = two();
        let drive = Drive::from_intensity(10f64.powf(log_i), delta);
        let r = steady_two(&drive, c, &SteadySettings::default()).unwrap();
        prop_assert!(r.converged);
        for s in [r.state.alpha, r.state.beta] {
            prop_assert!(bloch_length(&s) <= 1.0 + 1e-12);
        }
        let rts = rts_two(&r.state, &drive, &c.config).unwrap();
        prop_assert!(abs_diff_eq!(rts.total(), 1.0, epsilon = 1e-8), "R+T+S = {}", rts.total());
        prop_assert!(cavity_intensity(&r.state, &drive, &c.config).unwrap() >= 0.0);
    }
}
