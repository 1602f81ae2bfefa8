//! Oracle audits of a configuration: saddle residuals, missed-saddle scans,
//! finite-difference checks of the Up derivatives and direct time quadrature.

use serde::{Deserialize, Serialize};

use crate::amplitude::{coherent_sums, intercycle_chi, intercycle_factor, intercycle_factor_dup, AmplitudeModel};
use crate::config::RunConfig;
use crate::error::Result;
use crate::field::{Envelope, LaserField};
use crate::pipeline::{evaluate, Setup};
use crate::reference::{amplitude_by_quadrature, blind_root_scan, fd_derivative, fd_derivative_c, Region};
use crate::saddle::{
    action_bundle, mono_saddle_times, nominal_time, select_slots, solve_slot, ChannelPlan, Momentum, SaddleTime,
    RESIDUAL_TOL,
};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl AuditRow {
    fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value.is_finite() && value < tolerance }
    }
}

/// Deterministic probe momenta inside the main lobe, |p| ≤ 0.8 p_max.
pub fn probe_momenta(p_max: f64, n: usize) -> Vec<Momentum> {
    let r = 0.8 * p_max;
    (0..n)
        .map(|k| {
            // golden-angle spiral on the half disc p⊥ > 0
            let f = (k as f64 + 0.5) / n as f64;
            let th = std::f64::consts::PI * ((k as f64 * 0.618_033_988_749_895).fract() * 0.9 + 0.05);
            let rad = r * f.sqrt();
            Momentum::new(rad * th.cos(), rad * th.sin())
        })
        .collect()
}

fn slot_solutions(p: Momentum, field: &LaserField, ip: f64, slots: &[i64]) -> Vec<SaddleTime> {
    slots.iter().map(|&m| solve_slot(p, field, ip, m)).collect()
}

fn amplitude_with(model: &AmplitudeModel, p: Momentum, slots: &[i64]) -> Result<(C64, C64)> {
    let sad = slot_solutions(p, &model.field, model.ip, slots);
    let (terms, _) = model.terms(p, &sad)?;
    Ok(coherent_sums(&terms))
}

/// Largest saddle residual on the configured grid; fails on any
/// non-converged slot.
pub fn audit_residuals(setup: &Setup) -> Result<AuditRow> {
    let grid = setup.momentum_grid()?;
    let s = evaluate(&grid, &setup.model, &setup.slots)?;
    let d = s.diagnostics;
    let mut row = AuditRow::below("saddle residual (grid max)", d.max_residual, RESIDUAL_TOL);
    row.pass &= d.n_failed == 0;
    Ok(row)
}

/// Roots of the saddle equation near the real axis that no slot accounts
/// for, over the span of the selected slots.
pub fn audit_missed_saddles(setup: &Setup, probes: &[Momentum]) -> Result<AuditRow> {
    let f = &setup.field;
    let ip = setup.model.ip;
    let (lo, hi) = (setup.slots[0], *setup.slots.last().unwrap_or(&setup.slots[0]));
    let all: Vec<i64> = (lo..=hi).collect();
    let t0 = nominal_time(f, lo) - 0.25 * f.period();
    let t1 = nominal_time(f, hi) + 0.25 * f.period();
    let mut extra = 0usize;
    for &p in probes {
        // neighbours of the span can leak a root across its edges
        let known = slot_solutions(p, f, ip, &((lo - 1)..=(hi + 1)).collect::<Vec<_>>());
        let im_max = known.iter().filter(|s| s.converged).map(|s| s.t_ion.im).fold(0.0, f64::max);
        let region = Region { re: (t0, t1), im: (0.0, 1.5 * im_max) };
        let roots = blind_root_scan(p, f, ip, region, 48 * all.len());
        extra += roots
            .iter()
            .filter(|r| !known.iter().any(|s| s.converged && (s.t_ion - **r).norm() < 1e-6))
            .count();
    }
    Ok(AuditRow { name: "unaccounted saddles near the real axis".into(), value: extra as f64, tolerance: 0.0, pass: extra == 0 })
}

/// ∂S/∂Up at fixed complex time against a Richardson finite difference.
pub fn audit_ds_dup(setup: &Setup, probes: &[Momentum]) -> Result<AuditRow> {
    let f = setup.field;
    let (ip, t_ref) = (setup.model.ip, setup.model.t_ref);
    let mut worst: f64 = 0.0;
    for &p in probes {
        for s in slot_solutions(p, &f, ip, &setup.slots).iter().filter(|s| s.converged) {
            let exact = action_bundle(p, s.t_ion, &f, ip, t_ref).ds_dup;
            let h = 1e-3 * f.up;
            let fd = fd_derivative_c(|u| action_bundle(p, s.t_ion, &f.with_up(u), ip, t_ref).s, f.up, h)?;
            worst = worst.max((fd - exact).norm() / exact.norm().max(1.0));
        }
    }
    Ok(AuditRow::below("dS/dUp vs finite difference", worst, 1e-6))
}

/// M_g against dM/dUp − i·∂S/∂Up(t_f)·M, with saddles re-solved at each Up.
pub fn audit_mg(setup: &Setup, probes: &[Momentum]) -> Result<AuditRow> {
    let model = setup.model;
    let t = setup.t_final;
    let up = model.field.up;
    let (mut num, mut den) = (0.0, 0.0);
    for &p in probes {
        let (m, base) = amplitude_with(&model, p, &setup.slots)?;
        let dsf = model.ds_dup_final(p, t);
        let mg = crate::amplitude::mg_at(m, base, dsf);
        let at = |u: f64| -> C64 {
            let mm = AmplitudeModel { field: model.field.with_up(u), ..model };
            amplitude_with(&mm, p, &setup.slots).map(|x| x.0).unwrap_or(C64::new(f64::NAN, 0.0))
        };
        let dm = fd_derivative_c(at, up, 1e-4 * up)?;
        let fd = dm - C64::new(0.0, dsf) * m;
        num += (fd - mg).norm_sqr();
        den += mg.norm_sqr();
    }
    let rel = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    Ok(AuditRow::below("M_g vs finite difference (relative L2)", rel, 1e-2))
}

/// Saddle-point |M|² against direct time quadrature, every event of the
/// pulse included. Monochromatic fields are skipped (value NaN, pass).
pub fn audit_quadrature(setup: &Setup, probes: &[Momentum]) -> Result<AuditRow> {
    let f = setup.field;
    let name = "saddle-point |M|^2 vs time quadrature (max relative)";
    if f.envelope == Envelope::Monochromatic {
        return Ok(AuditRow { name: name.into(), value: f64::NAN, tolerance: 0.2, pass: true });
    }
    let plan = ChannelPlan { n_channels: None, intra_pairs: true, envelope_cut: 1e-3, ..ChannelPlan::default() };
    let slots = select_slots(&f, &plan, setup.window)?;
    let mut worst: f64 = 0.0;
    for &p in probes {
        let (m, _) = amplitude_with(&setup.model, p, &slots)?;
        let q = amplitude_by_quadrature(&f, setup.model.ip, setup.model.normalization, p, setup.model.t_ref, setup.window)?;
        worst = worst.max((m.norm_sqr() - q.norm_sqr()).abs() / q.norm_sqr());
    }
    Ok(AuditRow::below(name, worst, 0.2))
}

/// Intercycle identities on the monochromatic field of the same Up and ω:
/// χ_N·Ω_N = ∂Ω_N/∂Up by finite differences and |M_N|² = Ω_N|M_1|².
pub fn audit_intercycle(setup: &Setup, probes: &[Momentum], n: usize) -> Result<(AuditRow, AuditRow)> {
    let f = LaserField::monochromatic(setup.field.up, setup.field.omega, setup.field.cep)?;
    let ip = setup.model.ip;
    let model = AmplitudeModel::new(f, ip, 0.0, setup.model.normalization)?;
    let (mut chi_err, mut fac_err): (f64, f64) = (0.0, 0.0);
    for &p in probes {
        let om = intercycle_factor(p, n, &f, ip)?;
        let dom = intercycle_factor_dup(p, n, &f, ip)?;
        let fd = fd_derivative(|u| intercycle_factor(p, n, &f.with_up(u), ip).unwrap_or(f64::NAN), f.up, 1e-6)?;
        let scale = dom.abs().max(om.abs()).max(1.0);
        chi_err = chi_err.max((fd - dom).abs() / scale);
        if om > 1e-6 {
            let chi = intercycle_chi(p, n, &f, ip)?;
            chi_err = chi_err.max((chi * om - dom).abs() / scale);
        }
        let one = mono_saddle_times(p, &f, ip, 1..2)?;
        let many = mono_saddle_times(p, &f, ip, 1..(1 + n as i64))?;
        let m1 = coherent_sums(&model.terms(p, &one.entries)?.0).0.norm_sqr();
        let mn = coherent_sums(&model.terms(p, &many.entries)?.0).0.norm_sqr();
        fac_err = fac_err.max((mn - om * m1).abs() / mn.max(om * m1).max(1e-300));
    }
    Ok((
        AuditRow::below("chi_N and dOmega_N/dUp vs finite difference", chi_err, 1e-6),
        AuditRow::below("|M_N|^2 = Omega_N |M_1|^2", fac_err, 1e-8),
    ))
}

/// All audits for `config`.
pub fn audit(config: &RunConfig) -> Result<Vec<AuditRow>> {
    let setup = Setup::new(config)?;
    let probes = probe_momenta(setup.p_max, 20);
    let few = &probes[..6];
    let (chi, fac) = audit_intercycle(&setup, &probes, 5)?;
    Ok(vec![
        audit_residuals(&setup)?,
        audit_missed_saddles(&setup, few)?,
        audit_ds_dup(&setup, &probes)?,
        audit_mg(&setup, &probes)?,
        audit_quadrature(&setup, &probes)?,
        chi,
        fac,
    ])
}
