//! Incoherent averaging of outcome distributions over the carrier-envelope
//! phase, the focal-volume intensity distribution and shot-to-shot intensity
//! fluctuations, with exact intensity derivatives.
//!
//! Distributions carry the ionized outcomes only; the bound complement
//! 1 − ΣP is appended when the Fisher information is formed. Intensities are
//! in W/cm² and derivatives are with respect to the (peak) intensity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fisher::classical_fisher;
use crate::quadrature::gauss_legendre_on;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDist {
    pub prob: Vec<f64>,
    pub deriv: Vec<f64>,
}

impl OutcomeDist {
    pub fn zeros(n: usize) -> Self {
        Self { prob: vec![0.0; n], deriv: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.prob.iter().sum()
    }

    fn add_scaled(&mut self, other: &OutcomeDist, wp: f64, wd: f64) -> Result<()> {
        if other.len() != self.len() {
            return Err(Error::Numerical("outcome count changed between samples".into()));
        }
        for i in 0..self.len() {
            self.prob[i] += wp * other.prob[i];
            self.deriv[i] += wd * other.deriv[i];
        }
        Ok(())
    }

    /// Outcomes plus the bound state (1 − ΣP, −ΣP′).
    pub fn with_bound(&self) -> OutcomeDist {
        let mut out = self.clone();
        out.prob.push(1.0 - self.total());
        out.deriv.push(-self.deriv.iter().sum::<f64>());
        out
    }

    /// Classical Fisher information about intensity, bound state included.
    pub fn fisher(&self) -> Result<f64> {
        let b = self.with_bound();
        classical_fisher(&b.prob, &b.deriv)
    }
}

/// Microscopic outcome distribution at a given intensity and CEP.
pub trait Sampler: Sync {
    fn sample(&self, intensity: f64, cep: f64) -> Result<OutcomeDist>;
}

impl<F> Sampler for F
where
    F: Fn(f64, f64) -> Result<OutcomeDist> + Sync,
{
    fn sample(&self, intensity: f64, cep: f64) -> Result<OutcomeDist> {
        self(intensity, cep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CepSpec {
    pub n_phi: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BeamProfile {
    /// I = I₀(w₀/w)² exp(−2ρ²/w²), w = w₀√(1 + ζ²).
    #[default]
    Standard,
    /// I = I₀(w₀/w) exp(−2ρ²/w²), w = w₀(1 + |ζ|^{1/2}).
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FocalSpec {
    pub w0_um: f64,
    pub z0_um: f64,
    /// Half-length of the interaction region along z, in Rayleigh ranges.
    pub zrange_z0: f64,
    #[serde(default = "default_nodes")]
    pub n_shells: usize,
    /// Lowest shell intensity as a fraction of the peak.
    #[serde(default = "default_min_fraction")]
    pub min_fraction: f64,
    #[serde(default)]
    pub profile: BeamProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluctSpec {
    /// RMS intensity error in percent of I₀.
    pub sigma_pct: f64,
    /// Cutoff Δ in units of σ.
    #[serde(default = "default_delta")]
    pub delta_sigmas: f64,
    #[serde(default = "default_nodes")]
    pub n_nodes: usize,
}

fn default_nodes() -> usize {
    33
}
fn default_min_fraction() -> f64 {
    0.2
}
fn default_delta() -> f64 {
    6.0
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub focal: Option<FocalSpec>,
    pub cep: Option<CepSpec>,
    pub fluct: Option<FluctSpec>,
}

impl EnsembleSpec {
    pub fn is_empty(&self) -> bool {
        self.focal.is_none() && self.cep.is_none() && self.fluct.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.cep {
            if c.n_phi < 4 {
                return Err(invalid("ensemble.cep.n_phi must be at least 4"));
            }
        }
        if let Some(f) = self.focal {
            if !(f.w0_um > 0.0) || !(f.z0_um > 0.0) {
                return Err(invalid("ensemble.focal: w0_um and z0_um must be positive"));
            }
            if !(f.zrange_z0 > 0.0) || !f.zrange_z0.is_finite() {
                return Err(invalid("ensemble.focal.zrange_z0 must be finite and positive"));
            }
            if !(f.min_fraction > 0.0 && f.min_fraction < 1.0) {
                return Err(invalid("ensemble.focal.min_fraction must lie in (0, 1)"));
            }
            if f.n_shells < 2 {
                return Err(invalid("ensemble.focal.n_shells must be at least 2"));
            }
        }
        if let Some(f) = self.fluct {
            if !(f.sigma_pct > 0.0) {
                return Err(invalid("ensemble.fluct.sigma_pct must be positive"));
            }
            if !(f.delta_sigmas >= 4.0) {
                return Err(invalid("ensemble.fluct.delta_sigmas must be at least 4"));
            }
            if !(f.sigma_pct * f.delta_sigmas < 100.0) {
                return Err(invalid("ensemble.fluct: intensity window reaches zero"));
            }
            if f.n_nodes < 2 {
                return Err(invalid("ensemble.fluct.n_nodes must be at least 2"));
            }
        }
        Ok(())
    }
}

/// Trapezoidal average over φ = φ₀ + 2πk/n.
pub fn cep_average<S: Sampler + ?Sized>(sampler: &S, intensity: f64, phi0: f64, spec: &CepSpec) -> Result<OutcomeDist> {
    if spec.n_phi < 4 {
        return Err(invalid("n_phi must be at least 4"));
    }
    let w = 1.0 / spec.n_phi as f64;
    let mut acc: Option<OutcomeDist> = None;
    for k in 0..spec.n_phi {
        let s = sampler.sample(intensity, phi0 + 2.0 * PI * k as f64 / spec.n_phi as f64)?;
        let a = acc.get_or_insert_with(|| OutcomeDist::zeros(s.len()));
        a.add_scaled(&s, w, w)?;
    }
    acc.ok_or_else(|| Error::Numerical("no CEP samples".into()))
}

/// Shell weight density in s = I/I₀ (unnormalized).
fn shell_density(s: f64, spec: &FocalSpec) -> f64 {
    match spec.profile {
        BeamProfile::Standard => {
            let zm = (1.0 / s - 1.0).max(0.0).sqrt().min(spec.zrange_z0);
            (zm + zm.powi(3) / 3.0) / s
        }
        BeamProfile::Literal => {
            let zm = (1.0 / s - 1.0).max(0.0).powi(2).min(spec.zrange_z0);
            (zm + 4.0 / 3.0 * zm.powf(1.5) + 0.5 * zm * zm) / s
        }
    }
}

/// Relative intensities and normalized volume weights of the focal shells.
pub fn focal_shells(spec: &FocalSpec) -> Result<Vec<(f64, f64)>> {
    if !(spec.zrange_z0.is_finite() && spec.zrange_z0 > 0.0) {
        return Err(invalid("focal z-range must be finite and positive"));
    }
    let lo = spec.min_fraction;
    // the density has a kink where the isointensity surface reaches the z cut
    let kink = match spec.profile {
        BeamProfile::Standard => 1.0 / (1.0 + spec.zrange_z0 * spec.zrange_z0),
        BeamProfile::Literal => 1.0 / (1.0 + spec.zrange_z0.sqrt()),
    };
    let mut pieces = vec![(lo, 1.0)];
    if kink > lo && kink < 1.0 {
        pieces = vec![(lo, kink), (kink, 1.0)];
    }
    let per = (spec.n_shells / pieces.len()).max(2);
    let mut out = Vec::new();
    for (a, b) in pieces {
        let r = gauss_legendre_on(per, a, b);
        for (&s, &w) in r.nodes.iter().zip(&r.weights) {
            out.push((s, w * shell_density(s, spec)));
        }
    }
    let norm: f64 = out.iter().map(|x| x.1).sum();
    if !(norm > 0.0) {
        return Err(Error::Numerical("focal shells carry no volume".into()));
    }
    Ok(out.into_iter().map(|(s, w)| (s, w / norm)).collect())
}

/// Focal-volume average; shells scale with I₀, so dP/dI₀ = Σ W_k s_k ∂P/∂I(s_k I₀).
pub fn focal_average<F>(inner: F, spec: &FocalSpec, i0: f64) -> Result<OutcomeDist>
where
    F: Fn(f64) -> Result<OutcomeDist>,
{
    let mut acc: Option<OutcomeDist> = None;
    for (s, w) in focal_shells(spec)? {
        let d = inner(s * i0)?;
        let a = acc.get_or_insert_with(|| OutcomeDist::zeros(d.len()));
        a.add_scaled(&d, w, w * s)?;
    }
    acc.ok_or_else(|| Error::Numerical("no focal shells".into()))
}

/// Intensity nodes and normalized weights of the truncated Gaussian, plus
/// the boundary density f̃(±Δ).
fn fluct_nodes(sigma: f64, delta: f64, n: usize) -> (Vec<(f64, f64)>, f64) {
    let r = gauss_legendre_on(n, -delta, delta);
    let z = errorfunctions::RealErrorFunctions::erf(delta / (sigma * 2f64.sqrt()));
    let dens = |u: f64| (-0.5 * (u / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt() * z);
    let raw: Vec<(f64, f64)> = r.nodes.iter().zip(&r.weights).map(|(&u, &w)| (u, w * dens(u))).collect();
    let norm: f64 = raw.iter().map(|x| x.1).sum();
    (raw.into_iter().map(|(u, w)| (u, w / norm)).collect(), dens(delta))
}

/// P_IF(I₀) = ∫ f̃(I − I₀) P(I) dI over |I − I₀| ≤ Δ, with
/// dP_IF/dI₀ = ∫ (I − I₀)/σ² f̃ P dI + f̃(Δ)[P(I₀ + Δ) − P(I₀ − Δ)].
/// The inner derivatives are not used.
pub fn fluct_average<F>(inner: F, sigma: f64, delta: f64, n_nodes: usize, i0: f64) -> Result<OutcomeDist>
where
    F: Fn(f64) -> Result<OutcomeDist>,
{
    if !(sigma > 0.0) || !(delta >= 4.0 * sigma) {
        return Err(invalid("fluctuation layer needs sigma > 0 and delta >= 4 sigma"));
    }
    if !(i0 - delta > 0.0) {
        return Err(invalid("fluctuation window reaches non-positive intensity"));
    }
    let (nodes, edge) = fluct_nodes(sigma, delta, n_nodes);
    let mut acc: Option<OutcomeDist> = None;
    for (u, w) in nodes {
        let d = inner(i0 + u)?;
        let a = acc.get_or_insert_with(|| OutcomeDist::zeros(d.len()));
        for i in 0..d.len() {
            a.prob[i] += w * d.prob[i];
            a.deriv[i] += w * u / (sigma * sigma) * d.prob[i];
        }
    }
    let mut a = acc.ok_or_else(|| Error::Numerical("no fluctuation nodes".into()))?;
    let hi = inner(i0 + delta)?;
    let lo = inner(i0 - delta)?;
    for i in 0..a.len() {
        a.deriv[i] += edge * (hi.prob[i] - lo.prob[i]);
    }
    Ok(a)
}

/// fluct ∘ focal ∘ cep applied to `sampler` at peak intensity `i0`.
pub fn combined<S: Sampler + ?Sized>(ensemble: &EnsembleSpec, sampler: &S, i0: f64, phi0: f64) -> Result<OutcomeDist> {
    if ensemble.is_empty() {
        return Err(invalid("at least one averaging layer must be enabled"));
    }
    ensemble.validate()?;
    let cep_layer = |i: f64| match &ensemble.cep {
        Some(c) => cep_average(sampler, i, phi0, c),
        None => sampler.sample(i, phi0),
    };
    let focal_layer = |i: f64| match &ensemble.focal {
        Some(f) => focal_average(cep_layer, f, i),
        None => cep_layer(i),
    };
    match &ensemble.fluct {
        Some(f) => {
            let sigma = f.sigma_pct / 100.0 * i0;
            fluct_average(focal_layer, sigma, f.delta_sigmas * sigma, f.n_nodes, i0)
        }
        None => focal_layer(i0),
    }
}

/// Classical Fisher information about I₀ of the averaged distribution.
pub fn combined_cfi<S: Sampler + ?Sized>(ensemble: &EnsembleSpec, sampler: &S, i0: f64, phi0: f64) -> Result<f64> {
    combined(ensemble, sampler, i0, phi0)?.fisher()
}

/// Outcome distributions tabulated at Chebyshev nodes in ln I and
/// interpolated barycentrically; the CEP is fixed at tabulation time.
pub struct Tabulated {
    log_nodes: Vec<f64>,
    bary: Vec<f64>,
    samples: Vec<OutcomeDist>,
}

impl Tabulated {
    pub fn build<F>(sample: F, i_lo: f64, i_hi: f64, n: usize) -> Result<Self>
    where
        F: Fn(f64) -> Result<OutcomeDist> + Sync,
    {
        use rayon::prelude::*;
        if !(i_lo > 0.0 && i_hi > i_lo) || n < 2 {
            return Err(invalid("tabulation needs 0 < i_lo < i_hi and n >= 2"));
        }
        let (a, b) = (i_lo.ln(), i_hi.ln());
        let log_nodes: Vec<f64> = (0..n)
            .map(|k| 0.5 * (a + b) + 0.5 * (b - a) * (PI * (k as f64 + 0.5) / n as f64).cos())
            .collect();
        let bary: Vec<f64> = (0..n)
            .map(|k| {
                let th = PI * (k as f64 + 0.5) / n as f64;
                if k % 2 == 0 { th.sin() } else { -th.sin() }
            })
            .collect();
        let samples = log_nodes.par_iter().map(|&x| sample(x.exp())).collect::<Result<Vec<_>>>()?;
        Ok(Self { log_nodes, bary, samples })
    }

    pub fn eval(&self, intensity: f64) -> Result<OutcomeDist> {
        let x = intensity.ln();
        let n0 = self.samples[0].len();
        for (k, &xk) in self.log_nodes.iter().enumerate() {
            if x == xk {
                return Ok(self.samples[k].clone());
            }
        }
        let lo = self.log_nodes.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.log_nodes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        if x < lo - 0.05 * span || x > hi + 0.05 * span {
            return Err(invalid(format!("intensity {intensity:e} outside tabulated range")));
        }
        let c: Vec<f64> = self.log_nodes.iter().zip(&self.bary).map(|(&xk, &b)| b / (x - xk)).collect();
        let norm: f64 = c.iter().sum();
        let mut out = OutcomeDist::zeros(n0);
        for (ck, s) in c.iter().zip(&self.samples) {
            out.add_scaled(s, ck / norm, ck / norm)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_sampler(i: f64, _phi: f64) -> Result<OutcomeDist> {
        let x = i / 1e14;
        let p = vec![1e-3 * x.powi(5), 2e-3 * x.powi(3), 5e-4 * x];
        let d = vec![5e-3 * x.powi(4) / 1e14, 6e-3 * x.powi(2) / 1e14, 5e-4 / 1e14];
        Ok(OutcomeDist { prob: p, deriv: d })
    }

    #[test]
    fn cep_independent_is_identity() {
        let a = cep_average(&power_sampler, 1.3e14, 0.0, &CepSpec { n_phi: 8 }).unwrap();
        let b = power_sampler(1.3e14, 0.0).unwrap();
        for i in 0..3 {
            assert!((a.prob[i] - b.prob[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn fluct_linear_exact() {
        let lin = |i: f64| Ok(OutcomeDist { prob: vec![1e-16 * i], deriv: vec![1e-16] });
        let a = fluct_average(lin, 1e13, 6e13, 33, 2e14).unwrap();
        assert!((a.prob[0] - 0.02).abs() < 1e-15);
        assert!((a.deriv[0] - 1e-16).abs() < 1e-22, "{:e}", a.deriv[0]);
    }

    #[test]
    fn shells_monotone() {
        let spec = FocalSpec { w0_um: 20.0, z0_um: 800.0, zrange_z0: 2.0, n_shells: 17, min_fraction: 0.05, profile: BeamProfile::Standard };
        let sh = focal_shells(&spec).unwrap();
        let dens: Vec<f64> = sh.iter().map(|&(s, _)| shell_density(s, &spec)).collect();
        assert!(dens.windows(2).all(|w| w[0] > w[1]));
        assert!((sh.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-14);
        let bad = FocalSpec { zrange_z0: f64::INFINITY, ..spec };
        assert!(focal_shells(&bad).is_err());
    }

    #[test]
    fn tabulated_reproduces_smooth_sampler() {
        let t = Tabulated::build(|i| power_sampler(i, 0.0), 0.5e14, 2.5e14, 20).unwrap();
        let a = t.eval(1.37e14).unwrap();
        let b = power_sampler(1.37e14, 0.0).unwrap();
        for i in 0..3 {
            assert!((a.prob[i] - b.prob[i]).abs() < 1e-12 * b.prob[i]);
        }
    }
}
