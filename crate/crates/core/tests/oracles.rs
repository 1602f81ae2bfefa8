use approx::assert_relative_eq;
use sfa_fisher::amplitude::{bound_matrix_element, coherent_sums, AmplitudeModel, Normalization};
use sfa_fisher::field::{omega_from_wavelength, up_from_intensity, LaserField};
use sfa_fisher::reference::{amplitude_by_quadrature, blind_root_scan, zero_range_matrix_element, Region};
use sfa_fisher::saddle::{mono_saddle_times, nominal_time, solve_slot, Momentum, RESIDUAL_TOL};

// Unit conversion done by hand from SI constants.
fn up_si(intensity_wcm2: f64, wavelength_nm: f64) -> f64 {
    let (e, me, c, eps0) = (1.602_176_634e-19, 9.109_383_7015e-31, 2.997_924_58e8, 8.854_187_8128e-12);
    let hartree = 4.359_744_722_2071e-18;
    let i = intensity_wcm2 * 1e4;
    let w = 2.0 * std::f64::consts::PI * c / (wavelength_nm * 1e-9);
    e * e * i / (2.0 * eps0 * c * me * w * w) / hartree
}

#[test]
fn ponderomotive_energy_frozen_values() {
    assert_relative_eq!(up_from_intensity(2e14, 800.0).unwrap(), up_si(2e14, 800.0), max_relative = 2e-4);
    assert_relative_eq!(up_from_intensity(1.13e14, 800.0).unwrap(), 0.2481, max_relative = 2e-3);
    assert_relative_eq!(omega_from_wavelength(800.0).unwrap(), 0.056_954, max_relative = 1e-4);
}

#[test]
fn matrix_element_from_zero_range_potential() {
    for ip in [0.5, 1.0] {
        let direct = zero_range_matrix_element(ip, 0.0, 1e-3).unwrap();
        assert_relative_eq!(direct, bound_matrix_element(ip).unwrap(), max_relative = 1e-5);
    }
    assert_relative_eq!(bound_matrix_element(0.5).unwrap(), 0.053_391_6, max_relative = 1e-5);
}

#[test]
fn blind_scan_finds_only_slot_saddles() {
    let f = LaserField::gaussian(0.44, 0.057, std::f64::consts::FRAC_PI_2, 3.0).unwrap();
    for p in [Momentum::new(0.0, 0.1), Momentum::new(0.6, 0.3), Momentum::new(-0.9, 0.5)] {
        let slots: Vec<i64> = (-5..=5).collect();
        let known: Vec<_> = slots.iter().map(|&m| solve_slot(p, &f, 0.5, m)).collect();
        assert!(known.iter().all(|s| s.converged && s.residual < RESIDUAL_TOL));
        let im = known.iter().map(|s| s.t_ion.im).fold(0.0, f64::max);
        let region = Region {
            re: (nominal_time(&f, -4), nominal_time(&f, 4)),
            im: (0.0, 1.2 * im),
        };
        for r in blind_scan_roots(p, &f, region) {
            assert!(known.iter().any(|s| (s.t_ion - r).norm() < 1e-6), "unexpected root {r} at {p:?}");
        }
    }
}

fn blind_scan_roots(p: Momentum, f: &LaserField, region: Region) -> Vec<sfa_fisher::C64> {
    blind_root_scan(p, f, 0.5, region, 400)
}

#[test]
fn saddle_point_matches_time_quadrature() {
    let f = LaserField::gaussian(0.44, 0.057, std::f64::consts::FRAC_PI_2, 2.0).unwrap();
    let tau = f.tau().unwrap();
    let window = (-3.0 * tau, 3.0 * tau);
    let model = AmplitudeModel::new(f, 0.5, window.0, Normalization::PlaneWave).unwrap();
    let slots: Vec<i64> = (-6..=6).collect();
    for p in [Momentum::new(0.3, 0.2), Momentum::new(-0.5, 0.4), Momentum::new(0.8, 0.1)] {
        let sad: Vec<_> = slots.iter().map(|&m| solve_slot(p, &f, 0.5, m)).collect();
        let (m, _) = coherent_sums(&model.terms(p, &sad).unwrap().0);
        let q = amplitude_by_quadrature(&f, 0.5, Normalization::PlaneWave, p, window.0, window).unwrap();
        assert_relative_eq!(m.norm_sqr(), q.norm_sqr(), max_relative = 0.2);
    }
}

#[test]
fn mono_saddles_are_periodic() {
    let f = LaserField::monochromatic(0.44, 0.057, 0.0).unwrap();
    let p = Momentum::new(0.4, 0.3);
    let set = mono_saddle_times(p, &f, 0.5, 1..4).unwrap();
    let t = f.period();
    for pair in set.entries.chunks(2).collect::<Vec<_>>().windows(2) {
        for e in 0..2 {
            assert_relative_eq!(pair[1][e].t_ion.re - pair[0][e].t_ion.re, t, max_relative = 1e-12);
            assert_relative_eq!(pair[1][e].t_ion.im, pair[0][e].t_ion.im, max_relative = 1e-12);
        }
    }
}
