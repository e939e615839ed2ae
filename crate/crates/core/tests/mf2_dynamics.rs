use atomarray::lattice::SumSettings;
use atomarray::mf1::{steady_one, SteadySettings};
use atomarray::mf2::{evolve_mf2_to_steady, evolve_model, Mf2Model, Mf2Settings, RhsMode};
use atomarray::{ArrayConfig, Drive, Polarization, SumCache};

const N_W: usize = 6;

fn cache() -> SumCache {
    let config = ArrayConfig::single(0.8, Polarization::DeltaMpm1);
    SumCache::build(
        &config,
        SumSettings {
            n_cut: 400,
            n_w: Some(N_W),
            ..Default::default()
        },
    )
    .unwrap()
}

#[test]
fn vacuum_is_a_fixed_point() {
    let cache = cache();
    let model = Mf2Model::from_cache(&cache, N_W).unwrap();
    let d = model.rhs(&model.zeros(), &Drive::new(0.0, 0.3));
    assert_eq!(d.snapshot(), model.zeros().snapshot());
}

#[test]
fn full_evaluation_preserves_reflection_relations() {
    let cache = cache();
    let drive = Drive::new(0.3, cache.delta_shift());
    let model = Mf2Model::from_cache(&cache, N_W)
        .unwrap()
        .with_modes(atomarray::mf2::CMode::Fft, RhsMode::Full);
    let settings = Mf2Settings {
        tol: Some(0.0),
        t_max: 2.0,
        rhs_mode: RhsMode::Full,
        ..Default::default()
    };
    let mut w = model.zeros();
    let mut worst: f64 = 0.0;
    for _ in 0..15 {
        w = evolve_model(&model, &drive, w, &settings).unwrap().window;
        worst = worst.max(w.symmetry_defect());
    }
    assert!(
        w.cumulant_at(0) > 1e-6,
        "trajectory should build up correlations"
    );
    assert!(worst <= 1e-11, "symmetry defect {worst:e}");
}

#[test]
fn half_and_full_storage_reach_the_same_steady_state() {
    let cache = cache();
    let drive = Drive::new(0.2, cache.delta_shift());
    let run = |rhs_mode| {
        let settings = Mf2Settings {
            rhs_mode,
            tol: Some(1e-12),
            ..Default::default()
        };
        evolve_mf2_to_steady(&drive, &cache, N_W, &settings).unwrap()
    };
    let half = run(RhsMode::Half);
    let full = run(RhsMode::Full);
    assert!(half.converged && full.converged);
    let d = (half.window.singles.sigma_minus - full.window.singles.sigma_minus).norm();
    assert!(d < 1e-10, "{d:e}");
    for i in 0..half.window.index.len() {
        assert!((half.window.sp[i] - full.window.sp[i]).norm() < 1e-10);
    }
}

#[test]
fn zeroed_cumulants_reproduce_mf1() {
    let cache = cache();
    for (omega, delta) in [(0.3, 0.0), (0.8, -0.5), (0.1, cache.delta_shift())] {
        let drive = Drive::new(omega, delta);
        let settings = Mf2Settings {
            zero_cumulants: true,
            tol: Some(1e-12),
            ..Default::default()
        };
        let mf2 = evolve_mf2_to_steady(&drive, &cache, N_W, &settings).unwrap();
        let mf1 = steady_one(&drive, &cache, &SteadySettings::default()).unwrap();
        assert!(mf2.converged);
        assert!(mf2.diagnostics.max_cumulant < 1e-15);
        let s = mf2.window.singles;
        assert!(
            (s.sigma_minus - mf1.state.sigma_minus).norm() < 1e-9,
            "{omega} {delta}"
        );
        assert!((s.e_pop - mf1.state.e_pop).abs() < 1e-9);
    }
}

#[test]
fn weak_field_singles_approach_mf1_quadratically() {
    let cache = cache();
    let deviation = |omega: f64| {
        let drive = Drive::new(omega, cache.delta_shift());
        let mf2 = evolve_mf2_to_steady(&drive, &cache, N_W, &Mf2Settings::default()).unwrap();
        let mf1 = steady_one(&drive, &cache, &SteadySettings::default()).unwrap();
        assert!(mf2.converged);
        (mf2.window.singles.sigma_minus - mf1.state.sigma_minus).norm() / omega
    };
    let d1 = deviation(2e-3);
    let d2 = deviation(1e-3);
    let ratio = d1 / d2;
    assert!(d1 < 1e-3, "{d1:e}");
    assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
}
