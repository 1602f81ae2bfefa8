use proptest::prelude::*;
use sfa_fisher::amplitude::{coherent_sums, intercycle_factor, mg_at, AmplitudeModel, Normalization};
use sfa_fisher::field::LaserField;
use sfa_fisher::fisher::{cfi_partition, classical_fisher};
use sfa_fisher::measure::BinPartition;
use sfa_fisher::reference::{fd_derivative, fd_derivative_c};
use sfa_fisher::saddle::{action_bundle, mono_saddle_times, solve_slot, Momentum};
use sfa_fisher::C64;

const CEP: f64 = std::f64::consts::FRAC_PI_2;

fn pulse() -> LaserField {
    LaserField::gaussian(0.44, 0.057, CEP, 5.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ds_dup_matches_finite_difference(
        par in -1.5f64..1.5, perp in 0.0f64..1.0, re in -200.0f64..200.0, im in 0.0f64..40.0,
    ) {
        let f = pulse();
        let p = Momentum::new(par, perp);
        let t = C64::new(re, im);
        let t_ref = -400.0;
        let exact = action_bundle(p, t, &f, 0.5, t_ref).ds_dup;
        let fd = fd_derivative_c(|u| action_bundle(p, t, &f.with_up(u), 0.5, t_ref).s, f.up, 1e-3 * f.up).unwrap();
        prop_assert!((fd - exact).norm() <= 1e-6 * exact.norm().max(1.0), "{fd} vs {exact}");
    }

    #[test]
    fn primitive_of_a_differentiates_to_a(t in -400.0f64..400.0) {
        let f = pulse();
        let d = fd_derivative(|s| f.primitive_a(C64::new(s, 0.0)).re, t, 0.5).unwrap();
        let a = f.vector_potential_re(t);
        prop_assert!((d - a).abs() < 1e-7 * f.peak_a(), "{d} vs {a}");
    }

    #[test]
    fn observables_do_not_depend_on_time_origin(
        par in -1.0f64..1.0, perp in 0.0f64..0.8, shift in -300.0f64..0.0,
    ) {
        let f = pulse();
        let p = Momentum::new(par, perp);
        let sad: Vec<_> = (-4..=4).map(|m| solve_slot(p, &f, 0.5, m)).collect();
        let t_final = f.nearest_carrier_zero(250.0);
        let at = |t_ref: f64| {
            let model = AmplitudeModel::new(f, 0.5, t_ref, Normalization::PlaneWave).unwrap();
            let (m, base) = coherent_sums(&model.terms(p, &sad).unwrap().0);
            let mg = mg_at(m, base, model.ds_dup_final(p, t_final));
            (m.norm_sqr(), 2.0 * (m.conj() * mg).re, mg.norm())
        };
        let (a, b) = (at(-360.0), at(-360.0 + shift));
        prop_assert!((a.0 - b.0).abs() <= 1e-9 * a.0.max(1e-300));
        prop_assert!((a.1 - b.1).abs() <= 1e-8 * a.1.abs().max(a.0 * 1e-3).max(1e-300));
        prop_assert!((a.2 - b.2).abs() <= 1e-8 * a.2.max(1e-300));
    }

    #[test]
    fn splitting_a_region_never_loses_information(
        data in prop::collection::vec((1e-6f64..1.0, -5.0f64..5.0, any::<bool>()), 8..64),
        n_regions in 1usize..6,
    ) {
        // synthetic amplitudes with prescribed |M|² and ∂|M|²/∂Up
        let m: Vec<C64> = data.iter().map(|d| C64::new(d.0.sqrt(), 0.0)).collect();
        let mg: Vec<C64> = data.iter().map(|d| C64::new(d.1 * d.0.sqrt() / 2.0, 0.3)).collect();
        let w = vec![1.0; m.len()];
        let labels: Vec<usize> = (0..m.len()).map(|i| i % n_regions).collect();
        let part = BinPartition::from_labels(&labels);
        let before = cfi_partition(&w, &m, &mg, &part).unwrap();
        for r in 0..part.n_regions() {
            let split = part.split(r, |i| data[i].2);
            let after = cfi_partition(&w, &m, &mg, &split).unwrap();
            prop_assert!(after >= before * (1.0 - 1e-10), "{after} < {before}");
        }
        let full = cfi_partition(&w, &m, &mg, &BinPartition::from_labels(&(0..m.len()).collect::<Vec<_>>())).unwrap();
        prop_assert!(full >= before * (1.0 - 1e-10));
    }

    #[test]
    fn classical_fisher_is_scale_covariant(
        probs in prop::collection::vec(1e-6f64..1.0, 2..20), k in 0.1f64..10.0,
    ) {
        let derivs: Vec<f64> = probs.iter().enumerate().map(|(i, p)| p * (i as f64 - 3.0)).collect();
        let a = classical_fisher(&probs, &derivs).unwrap();
        let scaled: Vec<f64> = derivs.iter().map(|d| d * k).collect();
        let b = classical_fisher(&probs, &scaled).unwrap();
        prop_assert!((b - k * k * a).abs() <= 1e-10 * b.abs().max(1e-300));
    }
}

#[test]
fn intercycle_factorization_on_grid() {
    let f = LaserField::monochromatic(0.44, 0.057, 0.0).unwrap();
    let model = AmplitudeModel::new(f, 0.5, 0.0, Normalization::PlaneWave).unwrap();
    let n = 5;
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        for j in 0..50 {
            let p = Momentum::new(-1.5 + 3.0 * (i as f64 + 0.5) / 50.0, 1.5 * (j as f64 + 0.5) / 50.0);
            let one = mono_saddle_times(p, &f, 0.5, 1..2).unwrap();
            let many = mono_saddle_times(p, &f, 0.5, 1..(1 + n)).unwrap();
            let m1 = coherent_sums(&model.terms(p, &one.entries).unwrap().0).0.norm_sqr();
            let mn = coherent_sums(&model.terms(p, &many.entries).unwrap().0).0.norm_sqr();
            let om = intercycle_factor(p, n as usize, &f, 0.5).unwrap();
            let scale = mn.max(om * m1);
            if scale > 0.0 {
                worst = worst.max((mn - om * m1).abs() / scale);
            }
        }
    }
    assert!(worst < 1e-8, "{worst}");
}
