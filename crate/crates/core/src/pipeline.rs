//! End-to-end evaluation: field → saddles on the grid → amplitudes →
//! measurements → Fisher information, plus sweeps, incoherent ensembles and
//! CSV/JSON emission.
//!
//! Grid rows are evaluated in parallel and every reduction runs in a fixed
//! order, so output is byte-identical for a given configuration.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitude::{coherent_sums, mg_at, AmplitudeModel, AmplitudePair};
use crate::config::{EnvelopeKind, GridKind, OutputFormat, PovmKind, RunConfig, SweepVariable};
use crate::error::{Error, Result};
use crate::field::{intensity_from_up, LaserField};
use crate::fisher::{
    alpha, cfi_full, cfi_partition, cfi_spectral_coarse, cfi_spectral_full, cfi_yield, cramer_rao, quantum_fisher,
    spectra, CfiSet, FisherReport, IncoherentSummary, ReportParams, UncertaintySet,
};
use crate::incoherent::{combined, OutcomeDist, Tabulated};
use crate::measure::{default_p_max, partition_sums, BinPartition, EnergyGrid, Grid, MomentumGrid};
use crate::saddle::{select_slots, track_row, Momentum, SaddleDiagnostics};
use crate::C64;

/// Total yield above which the depletion flag is raised.
pub const DEPLETION_THRESHOLD: f64 = 0.1;

/// Chebyshev nodes in ln I used to tabulate microscopic distributions for
/// the incoherent layers.
pub const TABLE_NODES: usize = 16;

/// Fixed CSV header of report tables.
pub const CSV_HEADER: [&str; 16] = [
    "sweep_var",
    "qf",
    "alpha",
    "cfi_full",
    "cfi_coarse",
    "cfi_yield",
    "cfi_spec",
    "cfi_spec_coarse",
    "unc_opt_pct",
    "unc_full_pct",
    "unc_coarse_pct",
    "unc_yield_pct",
    "unc_spec_pct",
    "unc_spec_coarse_pct",
    "yield_total",
    "depletion_flag",
];

/// Field, amplitude model, channel slots and time conventions of a run.
#[derive(Debug, Clone)]
pub struct Setup {
    pub config: RunConfig,
    pub field: LaserField,
    pub model: AmplitudeModel,
    pub slots: Vec<i64>,
    /// Pulse: [−wτ, wτ]; monochromatic: [0, N·T].
    pub window: (f64, f64),
    /// Default evaluation time: a zero of A at (or, for monochromatic fields,
    /// not after) the window end.
    pub t_final: f64,
    pub p_max: f64,
}

impl Setup {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let f = &config.field;
        let cycles = match f.envelope {
            EnvelopeKind::Mono => None,
            EnvelopeKind::Gaussian => f.cycles_fwhm,
        };
        let field = LaserField::from_lab(f.intensity_wcm2, f.wavelength_nm, f.cep_rad, cycles)?;
        let (window, t_final) = match field.tau() {
            Some(tau) => {
                let w = config.time.window_tau * tau;
                ((-w, w), field.nearest_carrier_zero(w))
            }
            None => {
                let end = config.time.window_cycles * field.period();
                ((0.0, end), field.carrier_zero_at_or_before(end))
            }
        };
        let t_final = match config.time.t_eval {
            Some(t) => field.nearest_carrier_zero(t),
            None => t_final,
        };
        let model = AmplitudeModel::new(field, config.ip, window.0, config.normalization)?;
        let slots = select_slots(&field, &config.channels.plan(), window)?;
        let p_max = config.grid.p_max.unwrap_or_else(|| default_p_max(field.up, field.omega));
        Ok(Self { config: config.clone(), field, model, slots, window, t_final, p_max })
    }

    pub fn momentum_grid(&self) -> Result<MomentumGrid> {
        let g = &self.config.grid;
        match (g.n_par, g.n_perp) {
            (Some(a), Some(b)) => MomentumGrid::gauss_legendre(self.p_max, a, b),
            _ => MomentumGrid::composite(self.p_max, g.panel, g.order),
        }
    }

    pub fn energy_grid(&self) -> Result<EnergyGrid> {
        let g = &self.config.grid;
        EnergyGrid::new(self.p_max, g.energy_panel, g.energy_order, g.n_theta)
    }
}

/// M and Σc·i·∂S/∂Up(t′) at every node of a grid.
#[derive(Debug, Clone)]
pub struct Samples {
    pub points: Vec<Momentum>,
    pub weights: Vec<f64>,
    row_len: usize,
    pub m: Vec<C64>,
    pub base: Vec<C64>,
    pub diagnostics: SaddleDiagnostics,
    /// Converged saddles dropped for Im S < 0.
    pub skipped: usize,
}

impl Grid for Samples {
    fn points(&self) -> &[Momentum] {
        &self.points
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
    fn row_len(&self) -> usize {
        self.row_len
    }
}

impl Samples {
    /// M_g at a real time, from the closed-form field integrals over
    /// [t_ref, t], which are the same for every node.
    pub fn mg_at(&self, model: &AmplitudeModel, t: f64) -> Vec<C64> {
        let (tr, te) = (C64::new(model.t_ref, 0.0), C64::new(t, 0.0));
        let ia = model.field.int_a(tr, te).re;
        let ia2 = model.field.int_a2(tr, te).re;
        let up2 = 2.0 * model.field.up;
        self.points
            .par_iter()
            .zip(self.m.par_iter().zip(&self.base))
            .map(|(p, (&m, &b))| mg_at(m, b, (p.par * ia + ia2) / up2))
            .collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.m.iter().map(|x| x.norm_sqr()).collect()
    }

    /// 2Re[M̄ M_g] = ∂|M|²/∂Up; independent of the evaluation time.
    pub fn prob_derivatives(&self) -> Vec<f64> {
        self.m.iter().zip(&self.base).map(|(m, b)| 2.0 * (m.conj() * b).re).collect()
    }
}

/// Saddles, amplitudes and derivative bases on every node of `grid`.
pub fn evaluate<G: Grid + Sync>(grid: &G, model: &AmplitudeModel, slots: &[i64]) -> Result<Samples> {
    type Row = (Vec<C64>, Vec<C64>, SaddleDiagnostics, usize);
    let rows = grid.rows();
    let per_row: Vec<Result<Row>> = rows
        .par_iter()
        .map(|row| {
            let tracked = track_row(row, &model.field, model.ip, slots);
            let mut m = Vec::with_capacity(row.len());
            let mut base = Vec::with_capacity(row.len());
            let mut diag = SaddleDiagnostics::default();
            let mut skipped = 0;
            for (&p, sad) in row.iter().zip(&tracked) {
                sad.iter().for_each(|s| diag.record(s));
                let (terms, sk) = model.terms(p, sad)?;
                skipped += sk - sad.iter().filter(|s| !s.converged).count();
                let (mm, bb) = coherent_sums(&terms);
                m.push(mm);
                base.push(bb);
            }
            Ok((m, base, diag, skipped))
        })
        .collect();
    let mut out = Samples {
        points: grid.points().to_vec(),
        weights: grid.weights().to_vec(),
        row_len: grid.row_len(),
        m: Vec::with_capacity(grid.len()),
        base: Vec::with_capacity(grid.len()),
        diagnostics: SaddleDiagnostics::default(),
        skipped: 0,
    };
    for r in per_row {
        let (m, base, diag, skipped) = r?;
        out.m.extend(m);
        out.base.extend(base);
        out.diagnostics.merge(&diag);
        out.skipped += skipped;
    }
    Ok(out)
}

/// Amplitudes of one configuration on its momentum and polar grids.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub setup: Setup,
    pub momentum: Samples,
    /// Polar-grid samples for the spectral measurements.
    pub energy: Option<(EnergyGrid, Samples)>,
}

impl Evaluation {
    pub fn new(setup: Setup) -> Result<Self> {
        let spectral = setup.config.grid.spectral;
        let (momentum, energy) = match setup.config.grid.kind {
            GridKind::Cylindrical => {
                let mg = setup.momentum_grid()?;
                let momentum = evaluate(&mg, &setup.model, &setup.slots)?;
                let energy = if spectral {
                    let eg = setup.energy_grid()?;
                    let s = evaluate(&eg, &setup.model, &setup.slots)?;
                    Some((eg, s))
                } else {
                    None
                };
                (momentum, energy)
            }
            GridKind::Polar => {
                let eg = setup.energy_grid()?;
                let s = evaluate(&eg, &setup.model, &setup.slots)?;
                let energy = if spectral { Some((eg, s.clone())) } else { None };
                (s, energy)
            }
        };
        Ok(Self { setup, momentum, energy })
    }

    pub fn diagnostics(&self) -> SaddleDiagnostics {
        let mut d = self.momentum.diagnostics;
        if let (Some((_, s)), GridKind::Cylindrical) = (&self.energy, self.setup.config.grid.kind) {
            d.merge(&s.diagnostics);
        }
        d
    }

    /// Total ionization probability ∫|M|².
    pub fn yield_total(&self) -> f64 {
        self.momentum.integrate(&self.momentum.probabilities())
    }

    /// Fisher report at `t_eval` (snapped to a zero of A) for coarse widths
    /// `dp` and `de`.
    pub fn report(&self, t_eval: f64, dp: f64, de: f64, sweep_var: Option<f64>) -> Result<FisherReport> {
        let setup = &self.setup;
        let t = setup.field.nearest_carrier_zero(t_eval);
        let s = &self.momentum;
        let w = s.weights();
        let mg = s.mg_at(&setup.model, t);
        let qf = quantum_fisher(w, &s.m, &mg)?;
        let mut cfi = CfiSet {
            full: cfi_full(w, &s.m, &mg)?,
            coarse: cfi_partition(w, &s.m, &mg, &BinPartition::coarse(s, dp)?)?,
            coarse_2x: cfi_partition(w, &s.m, &mg, &BinPartition::coarse(s, 2.0 * dp)?)?,
            yield_: cfi_yield(w, &s.m, &mg)?,
            spec: 0.0,
            spec_coarse: 0.0,
        };
        if let Some((eg, es)) = &self.energy {
            let emg = es.mg_at(&setup.model, t);
            cfi.spec = cfi_spectral_full(eg, &es.m, &emg)?;
            cfi.spec_coarse = cfi_spectral_coarse(eg, &es.m, &emg, de)?;
        }
        let yield_total = self.yield_total();
        let n = setup.config.n_measurements;
        let mut uncertainty_pct = UncertaintySet::from_fisher(qf, &cfi, n, setup.field.up);
        if self.energy.is_none() {
            uncertainty_pct.spec = None;
            uncertainty_pct.spec_coarse = None;
        }
        let depletion_flag = yield_total > DEPLETION_THRESHOLD;
        if depletion_flag {
            log::warn!(
                "total yield {yield_total:.3} exceeds {DEPLETION_THRESHOLD}: depletion is not modelled at {:.3e} W/cm²",
                setup.config.field.intensity_wcm2
            );
        }
        Ok(FisherReport {
            params: report_params(setup, dp, de, sweep_var),
            t_eval: t,
            qf,
            alpha: alpha(yield_total),
            cfi,
            n_measurements: n,
            uncertainty_pct,
            yield_total,
            depletion_flag,
            diagnostics: self.diagnostics(),
            incoherent: None,
        })
    }

    /// Ionized-outcome distribution of `povm` with derivatives per W/cm².
    pub fn outcomes(&self, povm: PovmKind) -> Result<OutcomeDist> {
        let cfg = &self.setup.config;
        let scale = self.setup.field.up / cfg.field.intensity_wcm2;
        let s = &self.momentum;
        let (p, d) = (s.probabilities(), s.prob_derivatives());
        let (prob, deriv) = match povm {
            PovmKind::Full => (
                p.iter().zip(s.weights()).map(|(a, w)| a * w).collect(),
                d.iter().zip(s.weights()).map(|(a, w)| a * w).collect(),
            ),
            PovmKind::Coarse => {
                let part = BinPartition::coarse(s, cfg.povm.dp)?;
                (partition_sums(s.weights(), &p, &part)?, partition_sums(s.weights(), &d, &part)?)
            }
            PovmKind::Yield => (vec![s.integrate(&p)], vec![s.integrate(&d)]),
            PovmKind::Spec | PovmKind::SpecCoarse => {
                let (eg, es) = self
                    .energy
                    .as_ref()
                    .ok_or_else(|| Error::Config("povm.povm: spectral measurement needs grid.spectral = true".into()))?;
                let mg = es.mg_at(&self.setup.model, self.setup.t_final);
                let (pe, de) = spectra(eg, &es.m, &mg);
                let we = &eg.energy.weights;
                if povm == PovmKind::Spec {
                    (
                        pe.iter().zip(we).map(|(a, w)| a * w).collect(),
                        de.iter().zip(we).map(|(a, w)| a * w).collect(),
                    )
                } else {
                    let bins = eg.energy_bins(cfg.povm.de)?;
                    let nb = bins.iter().max().map_or(0, |b| b + 1);
                    let (mut pb, mut db) = (vec![0.0; nb], vec![0.0; nb]);
                    for (((&b, &a), &c), &w) in bins.iter().zip(&pe).zip(&de).zip(we) {
                        pb[b] += w * a;
                        db[b] += w * c;
                    }
                    (pb, db)
                }
            }
        };
        Ok(OutcomeDist { prob, deriv: deriv.into_iter().map(|x: f64| x * scale).collect() })
    }
}

fn report_params(setup: &Setup, dp: f64, de: f64, sweep_var: Option<f64>) -> ReportParams {
    let f = &setup.config.field;
    ReportParams {
        intensity_wcm2: f.intensity_wcm2,
        wavelength_nm: f.wavelength_nm,
        up: setup.field.up,
        omega: setup.field.omega,
        cep: setup.field.cep,
        cycles_fwhm: setup.field.tau().map(|t| t / setup.field.period()),
        ip: setup.config.ip,
        n_events: setup.slots.len(),
        dp,
        de,
        sweep_var,
    }
}

/// Microscopic outcome distribution at (I, φ) on the grid of `base`.
pub fn micro_sample(base: &RunConfig, p_max: f64, intensity: f64, cep: f64) -> Result<OutcomeDist> {
    let mut c = base.clone();
    c.field.intensity_wcm2 = intensity;
    c.field.cep_rad = cep;
    c.grid.p_max = Some(p_max);
    c.ensemble = Default::default();
    let povm = c.povm.povm;
    c.grid.spectral = matches!(povm, PovmKind::Spec | PovmKind::SpecCoarse);
    Evaluation::new(Setup::new(&c)?)?.outcomes(povm)
}

/// Averaged distribution over the configured ensemble layers.
pub fn ensemble_outcomes(setup: &Setup) -> Result<OutcomeDist> {
    let cfg = &setup.config;
    let ens = &cfg.ensemble;
    let i0 = cfg.field.intensity_wcm2;
    let phi0 = cfg.field.cep_rad;
    let mut lo = i0;
    let mut hi = i0;
    if let Some(f) = &ens.focal {
        lo *= f.min_fraction;
    }
    if let Some(f) = &ens.fluct {
        let d = f.sigma_pct * f.delta_sigmas / 100.0;
        lo *= 1.0 - d;
        hi *= 1.0 + d;
    }
    let phis: Vec<f64> = match &ens.cep {
        Some(c) => (0..c.n_phi).map(|k| phi0 + 2.0 * PI * k as f64 / c.n_phi as f64).collect(),
        None => vec![phi0],
    };
    if hi > lo {
        let tables = phis
            .iter()
            .map(|&phi| Tabulated::build(|i| micro_sample(cfg, setup.p_max, i, phi), lo, hi, TABLE_NODES))
            .collect::<Result<Vec<_>>>()?;
        let sampler = |i: f64, phi: f64| -> Result<OutcomeDist> {
            let k = phis
                .iter()
                .position(|&p| (p - phi).abs() < 1e-9)
                .ok_or_else(|| Error::Numerical(format!("no table for CEP {phi}")))?;
            tables[k].eval(i)
        };
        combined(ens, &sampler, i0, phi0)
    } else {
        let sampler = |i: f64, phi: f64| micro_sample(cfg, setup.p_max, i, phi);
        combined(ens, &sampler, i0, phi0)
    }
}

/// Bare and averaged CFI of the configured measurement.
pub fn incoherent_summary(setup: &Setup) -> Result<IncoherentSummary> {
    let cfg = &setup.config;
    let i0 = cfg.field.intensity_wcm2;
    let bare = micro_sample(cfg, setup.p_max, i0, cfg.field.cep_rad)?.fisher()?;
    let avg = ensemble_outcomes(setup)?.fisher()?;
    let n = cfg.n_measurements;
    Ok(IncoherentSummary {
        povm: cfg.povm.povm,
        cfi_intensity: avg,
        cfi_intensity_bare: bare,
        uncertainty_pct: cramer_rao(avg, n, i0).ok(),
        uncertainty_bare_pct: cramer_rao(bare, n, i0).ok(),
    })
}

/// Full pipeline at the configured evaluation time.
pub fn run_point(config: &RunConfig) -> Result<FisherReport> {
    let setup = Setup::new(config)?;
    let t = setup.t_final;
    let ev = Evaluation::new(setup)?;
    let mut report = ev.report(t, config.povm.dp, config.povm.de, None)?;
    if !config.ensemble.is_empty() {
        report.incoherent = Some(incoherent_summary(&ev.setup)?);
    }
    Ok(report)
}

/// Total ionization probability of `config`, spectral grids skipped.
pub fn total_yield(config: &RunConfig) -> Result<f64> {
    let mut c = config.clone();
    c.grid.spectral = false;
    Ok(Evaluation::new(Setup::new(&c)?)?.yield_total())
}

/// Intensity (W/cm²) inside `bracket` at which the total yield reaches
/// `DEPLETION_THRESHOLD`, by regula falsi on ln Y against ln I.
pub fn depletion_crossing(config: &RunConfig, bracket: (f64, f64), rel_tol: f64) -> Result<f64> {
    let g = |i: f64| -> Result<f64> {
        let mut c = config.clone();
        c.field.intensity_wcm2 = i;
        Ok(total_yield(&c)?.ln() - DEPLETION_THRESHOLD.ln())
    };
    let (mut a, mut b) = (bracket.0.ln(), bracket.1.ln());
    let (mut ga, mut gb) = (g(a.exp())?, g(b.exp())?);
    if !(ga < 0.0 && gb > 0.0) {
        return Err(Error::Numerical(format!(
            "yield does not cross {DEPLETION_THRESHOLD} between {:.3e} and {:.3e} W/cm²",
            bracket.0, bracket.1
        )));
    }
    // Illinois variant: halve the retained end's value when it repeats
    let mut side = 0i8;
    for _ in 0..40 {
        let x = (a * gb - b * ga) / (gb - ga);
        let gx = g(x.exp())?;
        if gx.abs() < 1e-12 || (b - a) < rel_tol {
            return Ok(x.exp());
        }
        if gx < 0.0 {
            a = x;
            ga = gx;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            gb = gx;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
        if gx.abs() < rel_tol {
            return Ok(x.exp());
        }
    }
    Err(Error::Convergence("depletion crossing search did not converge".into()))
}

/// Least-squares slopes of ln(uncertainty) against ln(sweep variable).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub optimal: Option<f64>,
    pub full: Option<f64>,
}

pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx > 0.0 {
        Some(sxy / sxx)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub reports: Vec<FisherReport>,
    /// Cycle and intensity sweeps only.
    pub fit: Option<ExponentFit>,
}

/// One report per sweep value. Time and resolution sweeps reuse a single
/// amplitude evaluation.
pub fn run_sweep(config: &RunConfig) -> Result<SweepResult> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep: missing [sweep] table".into()))?;
    let values = sweep.values()?;
    let (dp, de) = (config.povm.dp, config.povm.de);
    let reports = match sweep.variable {
        SweepVariable::Time | SweepVariable::Dp | SweepVariable::De => {
            let setup = Setup::new(config)?;
            let t_final = setup.t_final;
            let period = setup.field.period();
            let ev = Evaluation::new(setup)?;
            values
                .iter()
                .map(|&v| match sweep.variable {
                    SweepVariable::Time => ev.report(v * period, dp, de, Some(v)),
                    SweepVariable::Dp => ev.report(t_final, v, de, Some(v)),
                    _ => ev.report(t_final, dp, v, Some(v)),
                })
                .collect::<Result<Vec<_>>>()?
        }
        SweepVariable::Cycles | SweepVariable::Intensity => values
            .iter()
            .map(|&v| {
                let mut c = config.clone();
                c.sweep = None;
                match sweep.variable {
                    SweepVariable::Cycles => match c.field.envelope {
                        EnvelopeKind::Gaussian => c.field.cycles_fwhm = Some(v),
                        EnvelopeKind::Mono => c.time.window_cycles = v,
                    },
                    _ => c.field.intensity_wcm2 = v,
                }
                let mut r = run_point(&c)?;
                r.params.sweep_var = Some(v);
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let fit = match sweep.variable {
        SweepVariable::Cycles | SweepVariable::Intensity => {
            let x: Vec<f64> = reports.iter().filter_map(|r| r.params.sweep_var).collect();
            let col = |f: fn(&FisherReport) -> Option<f64>| -> Vec<f64> {
                reports.iter().map(|r| f(r).unwrap_or(f64::NAN)).collect()
            };
            Some(ExponentFit {
                optimal: loglog_slope(&x, &col(|r| r.uncertainty_pct.optimal)),
                full: loglog_slope(&x, &col(|r| r.uncertainty_pct.full)),
            })
        }
        _ => None,
    };
    Ok(SweepResult { variable: sweep.variable, reports, fit })
}

/// M and M_g on the cylindrical grid at the configured evaluation time.
pub fn momentum_map(config: &RunConfig) -> Result<Vec<AmplitudePair>> {
    let setup = Setup::new(config)?;
    let grid = setup.momentum_grid()?;
    let s = evaluate(&grid, &setup.model, &setup.slots)?;
    let mg = s.mg_at(&setup.model, setup.t_final);
    Ok(s.points
        .iter()
        .zip(s.m.iter().zip(&mg))
        .map(|(&p, (&m, &m_g))| AmplitudePair { m, m_g, p, t_final: setup.t_final })
        .collect())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(w: W, reports: &[FisherReport]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wr.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in reports {
        let u = &r.uncertainty_pct;
        wr.write_record([
            opt(r.params.sweep_var),
            r.qf.to_string(),
            r.alpha.to_string(),
            r.cfi.full.to_string(),
            r.cfi.coarse.to_string(),
            r.cfi.yield_.to_string(),
            r.cfi.spec.to_string(),
            r.cfi.spec_coarse.to_string(),
            opt(u.optimal),
            opt(u.full),
            opt(u.coarse),
            opt(u.yield_),
            opt(u.spec),
            opt(u.spec_coarse),
            r.yield_total.to_string(),
            r.depletion_flag.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(mut w: W, reports: &[FisherReport]) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, reports)?;
    writeln!(w)?;
    Ok(())
}

/// Writes `reports` to `path` (stdout when `None`).
pub fn emit(reports: &[FisherReport], format: OutputFormat, path: Option<&Path>) -> Result<()> {
    let write = |w: &mut dyn Write| match format {
        OutputFormat::Csv => write_csv(w, reports),
        OutputFormat::Json => write_json(w, reports),
    };
    match path {
        Some(p) => {
            let with_path = |e: std::io::Error| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display())));
            let mut f = std::io::BufWriter::new(std::fs::File::create(p).map_err(with_path)?);
            write(&mut f)?;
            f.flush().map_err(with_path)?;
            Ok(())
        }
        None => write(&mut std::io::stdout().lock()),
    }
}

/// Intensity in W/cm² of a ponderomotive energy at the configured wavelength.
pub fn intensity_of(config: &RunConfig, up: f64) -> Result<f64> {
    intensity_from_up(up, config.field.wavelength_nm)
}

/// Standard configurations: 800 nm, Ip = 0.5, 2×10¹⁴ W/cm², CEP π/2 for
/// pulses. Monochromatic fields use CEP 0 and a five-cycle window, so the
/// first event sits at T/4 and the evaluation time at 4.75T.
pub mod presets {
    use super::*;
    use crate::config::{ChannelCount, GridConfig};
    use crate::saddle::ChannelStart;

    fn base(cycles: Option<f64>) -> RunConfig {
        let mut c = RunConfig::default();
        match cycles {
            Some(n) => {
                c.field.envelope = EnvelopeKind::Gaussian;
                c.field.cycles_fwhm = Some(n);
            }
            None => {
                c.field.envelope = EnvelopeKind::Mono;
                c.field.cycles_fwhm = None;
                c.field.cep_rad = 0.0;
                c.time.window_cycles = 5.0;
            }
        }
        c
    }

    /// One ionization event: the one at the pulse peak, or the first one of
    /// the monochromatic window.
    pub fn single_channel(cycles: Option<f64>) -> RunConfig {
        let mut c = base(cycles);
        c.channels.n_channels = ChannelCount::Count(1);
        c.channels.intra_pairs = false;
        c.channels.start = ChannelStart::Peak;
        c
    }

    /// Five consecutive same-branch events from the half maximum, optionally
    /// with their intracycle partners.
    pub fn five_channels(cycles: Option<f64>, intra_pairs: bool) -> RunConfig {
        let mut c = base(cycles);
        c.channels.n_channels = ChannelCount::Count(5);
        c.channels.intra_pairs = intra_pairs;
        c.channels.start = ChannelStart::HalfMaximum;
        c
    }

    /// Every event of a pulse on a fine polar grid.
    pub fn all_channels(cycles: Option<f64>, intensity_wcm2: f64) -> RunConfig {
        let mut c = base(cycles);
        c.field.intensity_wcm2 = intensity_wcm2;
        c.channels.intra_pairs = true;
        c.grid = GridConfig { kind: GridKind::Polar, energy_panel: 0.005, n_theta: 48, ..GridConfig::default() };
        c
    }

    /// Three-cycle pulse with every event, at a given intensity and number of
    /// measurements.
    pub fn short_pulse(intensity_wcm2: f64, n_measurements: f64) -> RunConfig {
        let mut c = all_channels(Some(3.0), intensity_wcm2);
        c.n_measurements = n_measurements;
        c
    }
}
