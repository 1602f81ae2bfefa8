//! Quantum and classical Fisher information about Up, Cramér–Rao bounds and
//! the large-time ponderomotive-phase limit of the QFI.
//!
//! Inputs are node samples of M and M_g with the matching quadrature weights.

use errorfunctions::RealErrorFunctions;
use serde::{Deserialize, Serialize};

use crate::config::PovmKind;
use crate::error::{invalid, Error, Result};
use crate::field::{Envelope, LaserField};
use crate::measure::{partition_sums, BinPartition, EnergyGrid, Grid};
use crate::saddle::SaddleDiagnostics;
use crate::C64;

/// Outcomes with probability below this fraction of the largest are dropped.
pub const FLOOR_REL: f64 = 1e-15;

fn check(weights: &[f64], m: &[C64], mg: &[C64]) -> Result<()> {
    if weights.len() != m.len() || m.len() != mg.len() {
        return Err(invalid("weights, M and M_g must have equal length"));
    }
    Ok(())
}

/// Σ dᵢ²/pᵢ over outcomes above the floor.
pub fn classical_fisher(probs: &[f64], derivs: &[f64]) -> Result<f64> {
    if probs.is_empty() || probs.len() != derivs.len() {
        return Err(invalid("classical Fisher information needs matching, non-empty outcomes"));
    }
    let pmax = probs.iter().cloned().fold(0.0, f64::max);
    let floor = FLOOR_REL * pmax;
    Ok(probs
        .iter()
        .zip(derivs)
        .filter(|(&p, _)| p > floor && p > 0.0)
        .map(|(&p, &d)| d * d / p)
        .sum())
}

/// Q_F = 4{∫|M_g|² − |∫M̄ M_g|²}.
pub fn quantum_fisher(weights: &[f64], m: &[C64], mg: &[C64]) -> Result<f64> {
    check(weights, m, mg)?;
    let mut a = 0.0;
    let mut b = C64::new(0.0, 0.0);
    for ((&w, &x), &y) in weights.iter().zip(m).zip(mg) {
        a += w * y.norm_sqr();
        b += w * x.conj() * y;
    }
    let q = 4.0 * (a - b.norm_sqr());
    if q < -1e-10 * a.max(1.0) {
        return Err(Error::Numerical(format!("negative quantum Fisher information {q:e}")));
    }
    Ok(q.max(0.0))
}

/// I_F = ∫ 4Re[M̄ M_g]²/|M|², pointwise.
pub fn cfi_full(weights: &[f64], m: &[C64], mg: &[C64]) -> Result<f64> {
    check(weights, m, mg)?;
    let pmax = m.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
    let floor = FLOOR_REL * pmax;
    Ok(weights
        .iter()
        .zip(m)
        .zip(mg)
        .filter(|((_, x), _)| x.norm_sqr() > floor && x.norm_sqr() > 0.0)
        .map(|((&w, x), y)| {
            let d = 2.0 * (x.conj() * y).re;
            w * d * d / x.norm_sqr()
        })
        .sum())
}

/// Σ_R 4Re[∫_R M̄ M_g]²/∫_R |M|².
pub fn cfi_partition(weights: &[f64], m: &[C64], mg: &[C64], partition: &BinPartition) -> Result<f64> {
    check(weights, m, mg)?;
    let p: Vec<f64> = m.iter().map(|x| x.norm_sqr()).collect();
    let d: Vec<f64> = m.iter().zip(mg).map(|(x, y)| 2.0 * (x.conj() * y).re).collect();
    classical_fisher(&partition_sums(weights, &p, partition)?, &partition_sums(weights, &d, partition)?)
}

/// Single-region case of [`cfi_partition`].
pub fn cfi_yield(weights: &[f64], m: &[C64], mg: &[C64]) -> Result<f64> {
    check(weights, m, mg)?;
    let mut p = 0.0;
    let mut d = 0.0;
    for ((&w, x), y) in weights.iter().zip(m).zip(mg) {
        p += w * x.norm_sqr();
        d += w * 2.0 * (x.conj() * y).re;
    }
    classical_fisher(&[p], &[d])
}

/// Energy spectrum P(E) and P′(E) on the energy nodes.
pub fn spectra(grid: &EnergyGrid, m: &[C64], mg: &[C64]) -> (Vec<f64>, Vec<f64>) {
    let p: Vec<f64> = m.iter().map(|x| x.norm_sqr()).collect();
    let d: Vec<f64> = m.iter().zip(mg).map(|(x, y)| 2.0 * (x.conj() * y).re).collect();
    (grid.energy_spectrum(&p), grid.energy_spectrum(&d))
}

/// ∫ P′(E)²/P(E) dE.
pub fn cfi_spectral_full(grid: &EnergyGrid, m: &[C64], mg: &[C64]) -> Result<f64> {
    check(grid.weights(), m, mg)?;
    let (p, d) = spectra(grid, m, mg);
    let pmax = p.iter().cloned().fold(0.0, f64::max);
    Ok(p.iter()
        .zip(&d)
        .zip(&grid.energy.weights)
        .filter(|((&pe, _), _)| pe > FLOOR_REL * pmax && pe > 0.0)
        .map(|((&pe, &de), &w)| w * de * de / pe)
        .sum())
}

/// Σ_k (∫_{bin k} P′ dE)²/∫_{bin k} P dE for bins of width `de`.
pub fn cfi_spectral_coarse(grid: &EnergyGrid, m: &[C64], mg: &[C64], de: f64) -> Result<f64> {
    check(grid.weights(), m, mg)?;
    let bins = grid.energy_bins(de)?;
    let (p, d) = spectra(grid, m, mg);
    let nb = bins.iter().max().map_or(0, |b| b + 1);
    let mut pb = vec![0.0; nb];
    let mut db = vec![0.0; nb];
    for (((&b, &pe), &dd), &w) in bins.iter().zip(&p).zip(&d).zip(&grid.energy.weights) {
        pb[b] += w * pe;
        db[b] += w * dd;
    }
    classical_fisher(&pb, &db)
}

/// Relative uncertainty in percent: 100/(√(N F)·Up).
pub fn cramer_rao(fisher: f64, n: f64, up: f64) -> Result<f64> {
    if !(fisher > 0.0) {
        return Err(Error::Numerical(format!("uncertainty undefined for Fisher information {fisher:e}")));
    }
    if !(n >= 1.0) {
        return Err(invalid(format!("number of measurements must be at least 1, got {n}")));
    }
    Ok(100.0 / ((n * fisher).sqrt() * up))
}

/// α = P(1 − P) for total yield P.
pub fn alpha(total_yield: f64) -> f64 {
    total_yield * (1.0 - total_yield)
}

/// ((1/Up)∫_{t0}^{t} A² ds)².
pub fn qf_asymptote(field: &LaserField, t0: f64, t: f64) -> f64 {
    let v = field.int_a2(C64::new(t0, 0.0), C64::new(t, 0.0)).re / field.up;
    v * v
}

/// lim_{t→∞} (1/Up)∫_0^t A² ds for a Gaussian pulse:
/// τ√(π/4ln2)·(1 + cos2φ·e^{−τ²ω²/4ln2}) − 2 sin2φ·D(ω/√a)/√a, a = 4ln2/τ²,
/// with D the Dawson function.
pub fn gaussian_phase_limit(field: &LaserField) -> Result<f64> {
    let tau = match field.envelope {
        Envelope::Gaussian { tau } => tau,
        Envelope::Monochromatic => return Err(invalid("Gaussian limit needs a Gaussian field")),
    };
    let a = 4.0 * std::f64::consts::LN_2 / (tau * tau);
    let w = field.omega;
    let root = (std::f64::consts::PI / a).sqrt();
    let phi2 = 2.0 * field.cep;
    let damp = (-w * w / a).exp();
    Ok(root * (1.0 + phi2.cos() * damp) - 2.0 * phi2.sin() * (w / a.sqrt()).dawson() / a.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CfiSet {
    pub full: f64,
    pub coarse: f64,
    pub coarse_2x: f64,
    #[serde(rename = "yield")]
    pub yield_: f64,
    pub spec: f64,
    pub spec_coarse: f64,
}

/// Relative uncertainties in percent; identical for Up and intensity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UncertaintySet {
    pub optimal: Option<f64>,
    pub full: Option<f64>,
    pub coarse: Option<f64>,
    #[serde(rename = "yield")]
    pub yield_: Option<f64>,
    pub spec: Option<f64>,
    pub spec_coarse: Option<f64>,
}

impl UncertaintySet {
    pub fn from_fisher(qf: f64, cfi: &CfiSet, n: f64, up: f64) -> Self {
        let u = |f: f64| cramer_rao(f, n, up).ok();
        Self {
            optimal: u(qf),
            full: u(cfi.full),
            coarse: u(cfi.coarse),
            yield_: u(cfi.yield_),
            spec: u(cfi.spec),
            spec_coarse: u(cfi.spec_coarse),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub intensity_wcm2: f64,
    pub wavelength_nm: f64,
    pub up: f64,
    pub omega: f64,
    pub cep: f64,
    /// Intensity FWHM in optical cycles; `None` for a monochromatic field.
    pub cycles_fwhm: Option<f64>,
    pub ip: f64,
    pub n_events: usize,
    pub dp: f64,
    pub de: f64,
    pub sweep_var: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherReport {
    pub params: ReportParams,
    pub t_eval: f64,
    pub qf: f64,
    pub alpha: f64,
    pub cfi: CfiSet,
    pub n_measurements: f64,
    pub uncertainty_pct: UncertaintySet,
    pub yield_total: f64,
    pub depletion_flag: bool,
    pub diagnostics: SaddleDiagnostics,
    /// Present when incoherent averaging is configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incoherent: Option<IncoherentSummary>,
}

/// Classical Fisher information of the incoherently averaged measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncoherentSummary {
    pub povm: PovmKind,
    /// About the peak intensity, in (W/cm²)⁻², bound state included.
    pub cfi_intensity: f64,
    /// Same measurement without averaging.
    pub cfi_intensity_bare: f64,
    pub uncertainty_pct: Option<f64>,
    pub uncertainty_bare_pct: Option<f64>,
}


impl FisherReport {
    /// √(Q_F/I_F) for a CFI value.
    pub fn ratio(&self, cfi: f64) -> f64 {
        (self.qf / cfi).sqrt()
    }
}
