//! 𝒞-sums against term-by-term summation over the coupled sites.

mod common;

use std::sync::Arc;

use atomarray::lattice::{in_plane_green, SquareTable};
use atomarray::mf2::{compute_c, CKind, CMode, Mf2Model, PairKind, WindowIndex, WindowShape};
use atomarray::Polarization;
use common::{random_window, rng};
use num_complex::Complex64;

const N_W: usize = 6;
const REACH: i64 = 3 * N_W as i64;

/// Lattice couplings truncated to the square |m_y|, |m_z| ≤ REACH.
fn truncated(pol: Polarization) -> SquareTable<Complex64> {
    let values = (-REACH..=REACH)
        .flat_map(|my| (-REACH..=REACH).map(move |mz| (my, mz)))
        .map(|(my, mz)| {
            if (my, mz) == (0, 0) {
                Complex64::new(0.0, 0.0)
            } else {
                in_plane_green(0.8, pol, my, mz)
            }
        })
        .collect();
    SquareTable {
        radius: REACH as usize,
        values,
    }
}

fn pair_kind(kind: CKind) -> PairKind {
    match kind {
        CKind::Plus => PairKind::Pm,
        CKind::Minus => PairKind::Ss,
        CKind::Zero => PairKind::Es,
    }
}

#[test]
fn fft_direct_and_single_site_sums_match_brute_force() {
    for (seed, pol) in [(1, Polarization::DeltaMpm1), (2, Polarization::DeltaM0)] {
        let gtab = truncated(pol);
        let g_big: Complex64 = gtab.values.iter().sum();
        let index = Arc::new(WindowIndex::new(N_W, WindowShape::Disk));
        let model = Mf2Model::from_couplings(g_big, gtab.clone(), index).unwrap();
        let mut w = model.zeros();
        random_window(&mut w, &mut rng(seed));

        let brute = |kind: CKind, n: (i64, i64)| -> Complex64 {
            let mut total = Complex64::new(0.0, 0.0);
            for my in -REACH..=REACH {
                for mz in -REACH..=REACH {
                    if (my, mz) == (0, 0) || (my, mz) == n {
                        continue;
                    }
                    total +=
                        gtab.get(my, mz) * w.pair_lookup(pair_kind(kind), (my - n.0, mz - n.1));
                }
            }
            total
        };

        let fft = model.c_sums(&w);
        let direct = model
            .with_modes(CMode::Direct, atomarray::mf2::RhsMode::Half)
            .c_sums(&w);
        for kind in CKind::ALL {
            let reference = brute(kind, (0, 0));
            let scale = reference.norm().max(1e-3);
            assert!(
                (fft.at_origin(kind) - reference).norm() < 1e-9 * scale,
                "{kind:?} origin"
            );
            assert!((direct.at_origin(kind) - reference).norm() < 1e-9 * scale);
            for (i, &n) in w.index.seps.iter().enumerate() {
                let reference = brute(kind, n);
                let scale = reference.norm().max(1e-3);
                assert!(
                    (fft.at(kind, i) - reference).norm() < 1e-9 * scale,
                    "{kind:?} at {n:?}: {} vs {reference}",
                    fft.at(kind, i)
                );
                assert!((direct.at(kind, i) - reference).norm() < 1e-9 * scale);
                let single = compute_c(g_big, &gtab, &w, kind, n);
                assert!((single - reference).norm() < 1e-9 * scale);
            }
        }
    }
}

#[test]
fn factorised_window_gives_product_times_remainder() {
    let gtab = truncated(Polarization::DeltaMpm1);
    let g_big: Complex64 = gtab.values.iter().sum();
    let index = Arc::new(WindowIndex::new(N_W, WindowShape::Disk));
    let model = Mf2Model::from_couplings(g_big, gtab.clone(), index.clone()).unwrap();
    let singles = atomarray::SingleState::new(Complex64::new(0.1, -0.2), 0.3);
    let w = atomarray::mf2::PairWindow::factorized(index, singles);
    let c = model.c_sums(&w);
    let s = singles.sigma_minus;
    for (i, &(my, mz)) in w.index.seps.iter().enumerate() {
        let expected = s.conj() * s * (g_big - gtab.get(my, mz));
        assert!((c.at(CKind::Plus, i) - expected).norm() < 1e-14);
    }
}

#[test]
fn zero_window_gives_zero_sums() {
    let gtab = truncated(Polarization::DeltaMpm1);
    let g_big: Complex64 = gtab.values.iter().sum();
    let index = Arc::new(WindowIndex::new(N_W, WindowShape::Disk));
    let model = Mf2Model::from_couplings(g_big, gtab, index).unwrap();
    let c = model.c_sums(&model.zeros());
    assert!(c
        .origin
        .iter()
        .chain(c.values.iter().flatten())
        .all(|v| v.norm() == 0.0));
}
