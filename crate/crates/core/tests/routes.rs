use kkmono::suite::{energy_gap, route_energies};
use kkmono::{Convention, Half, ModelParams, Sector};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.3..3.0f64, 0.0..2.0f64, 0.0..3.0f64, 0.0..3.0f64, -1.0..1.0f64)
        .prop_filter_map("valid", |(mu, c1, c2, c3, c4)| ModelParams::new(mu, c1, c2, c3, c4).ok())
}

fn state() -> impl Strategy<Value = (Sector, Half)> {
    (-4i64..=4, 0i64..=4, 1i64..=4).prop_filter_map("admissible", |(tq, dm, k)| {
        let s = Sector::new(Half::from_twice(tq), Half::from_twice(tq.rem_euclid(2) + 2 * dm - 4)).ok()?;
        Some((s, s.m_plus() + Half::from_int(k)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_routes_agree(p in params(), (sector, n) in state()) {
        let conv = Convention::reconciled();
        let r = route_energies(n, sector, &p, &conv);
        prop_assert!(energy_gap(&r.spherical, &r.algebraic) < 1e-9, "{r:?}");
        for v in r.parabolic.iter().chain(&r.ladder) {
            prop_assert!(energy_gap(&r.spherical, v) < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn energies_lie_below_threshold(p in params(), (sector, n) in state()) {
        let conv = Convention::reconciled();
        let e = kkmono::spectra::energy_spherical(n, sector, &p, &conv);
        let top = kkmono::spectra::threshold_energy(sector, &p);
        for s in e.into_iter().flatten() {
            prop_assert!(s.energy < top);
        }
    }
}
