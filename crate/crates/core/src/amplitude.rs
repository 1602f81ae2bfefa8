//! Saddle-point transition amplitude M(p), the Up-derivative amplitude
//! M_g(p, t) and the monochromatic intercycle factor.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{Envelope, LaserField};
use crate::saddle::{action_bundle, ds_dup_real, ChannelPlan, Momentum, SaddleSet, SaddleTime};
use crate::C64;

/// ⟨q|V|0⟩ for the regularized zero-range potential binding a state of
/// energy −Ip with plane waves normalized to δ(q − q′). Independent of q.
pub fn bound_matrix_element(ip: f64) -> Result<f64> {
    if !(ip > 0.0) {
        return Err(invalid(format!("ip must be positive, got {ip}")));
    }
    Ok((2.0 * PI).powf(-1.5) * ip.powf(0.25))
}

/// Overall amplitude scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Plane waves normalized to δ(q − q′); |M|² d³p is an absolute probability.
    PlaneWave,
    /// Plane-wave amplitudes times (2π)². Puts the 10% total-ionization
    /// threshold of 3/5/10/20-cycle 800 nm pulses at 2.25/2.0/1.75/1.5 × 10¹⁴ W/cm².
    #[default]
    YieldCalibrated,
}

impl Normalization {
    pub fn factor(self) -> f64 {
        match self {
            Normalization::PlaneWave => 1.0,
            Normalization::YieldCalibrated => 4.0 * PI * PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceOptions {
    pub channels: ChannelPlan,
    /// Sum amplitudes (true) or probabilities (false).
    pub coherent: bool,
}

impl Default for InterferenceOptions {
    fn default() -> Self {
        Self { channels: ChannelPlan::default(), coherent: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudePair {
    pub m: C64,
    pub m_g: C64,
    pub p: Momentum,
    pub t_final: f64,
}

impl AmplitudePair {
    pub fn prob(&self) -> f64 {
        self.m.norm_sqr()
    }

    /// ∂|M|²/∂Up = 2 Re[M̄ M_g].
    pub fn dprob(&self) -> f64 {
        2.0 * (self.m.conj() * self.m_g).re
    }
}

/// One saddle's contribution: c = √(2πi/S″)·d·e^{iS} and ∂S/∂Up at t′.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleTerm {
    pub c: C64,
    pub ds_dup: C64,
}

/// Per-run constants shared by every momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeModel {
    pub field: LaserField,
    pub ip: f64,
    pub t_ref: f64,
    pub normalization: Normalization,
}

impl AmplitudeModel {
    pub fn new(field: LaserField, ip: f64, t_ref: f64, normalization: Normalization) -> Result<Self> {
        bound_matrix_element(ip)?;
        Ok(Self { field, ip, t_ref, normalization })
    }

    fn d(&self) -> f64 {
        bound_matrix_element(self.ip).unwrap_or(0.0) * self.normalization.factor()
    }

    /// Contributions of the converged saddles. Saddles whose action has
    /// Im S < 0 (growing rather than tunnelling-suppressed) are skipped and
    /// counted in the second return value.
    pub fn terms<'a, I>(&self, p: Momentum, saddles: I) -> Result<(Vec<SaddleTerm>, usize)>
    where
        I: IntoIterator<Item = &'a SaddleTime>,
    {
        let d = self.d();
        let mut out = Vec::new();
        let mut skipped = 0;
        for s in saddles {
            if !s.converged {
                skipped += 1;
                continue;
            }
            let b = action_bundle(p, s.t_ion, &self.field, self.ip, self.t_ref);
            if b.s_dd.norm() < 1e-14 {
                return Err(Error::Singular(format!("S'' = 0 at p = ({}, {})", p.par, p.perp)));
            }
            if !(b.s.im >= 0.0) || !b.s.is_finite() {
                skipped += 1;
                continue;
            }
            let pref = (C64::new(0.0, 2.0 * PI) / b.s_dd).sqrt();
            let c = pref * d * C64::new(0.0, b.s.re).exp() * (-b.s.im).exp();
            out.push(SaddleTerm { c, ds_dup: b.ds_dup });
        }
        Ok((out, skipped))
    }

    /// ∂S/∂Up(p, t) at a real evaluation time.
    pub fn ds_dup_final(&self, p: Momentum, t_final: f64) -> f64 {
        ds_dup_real(p, t_final, &self.field, self.t_ref)
    }

    /// Coherent M and M_g at `t_final` from precomputed terms.
    pub fn pair_from_terms(&self, p: Momentum, terms: &[SaddleTerm], t_final: f64) -> AmplitudePair {
        let (m, base) = coherent_sums(terms);
        let m_g = mg_at(m, base, self.ds_dup_final(p, t_final));
        AmplitudePair { m, m_g, p, t_final }
    }
}

/// (Σc, Σ c·i·∂S/∂Up(t′)).
pub fn coherent_sums(terms: &[SaddleTerm]) -> (C64, C64) {
    let i = C64::new(0.0, 1.0);
    terms.iter().fold((C64::new(0.0, 0.0), C64::new(0.0, 0.0)), |(m, b), t| {
        (m + t.c, b + t.c * i * t.ds_dup)
    })
}

/// M_g(t) = Σ c·i(∂S/∂Up(t′) − ∂S/∂Up(t)) = base − i·∂S/∂Up(t)·M.
pub fn mg_at(m: C64, base: C64, ds_dup_t: f64) -> C64 {
    base - C64::new(0.0, ds_dup_t) * m
}

#[derive(Debug, Clone, PartialEq)]
pub enum Amplitude {
    Coherent(C64),
    PerSaddle(Vec<C64>),
}

impl Amplitude {
    pub fn probability(&self) -> f64 {
        match self {
            Amplitude::Coherent(m) => m.norm_sqr(),
            Amplitude::PerSaddle(v) => v.iter().map(|m| m.norm_sqr()).sum(),
        }
    }
}

/// M(p) = Σ √(2πi/S″)·d·e^{iS} over the converged entries of `saddles`.
pub fn transition_amplitude(
    model: &AmplitudeModel,
    p: Momentum,
    saddles: &SaddleSet,
    opts: &InterferenceOptions,
) -> Result<Amplitude> {
    let (terms, _) = model.terms(p, &saddles.entries)?;
    Ok(if opts.coherent {
        Amplitude::Coherent(terms.iter().map(|t| t.c).sum())
    } else {
        Amplitude::PerSaddle(terms.iter().map(|t| t.c).collect())
    })
}

/// M_g(p, t_final) = Σ √(2πi/S″)·i·d·(∂S/∂Up(t′) − ∂S/∂Up(t_final))·e^{iS}.
/// d does not depend on Up, so no ∂d/∂Up term appears.
pub fn derivative_amplitude(
    model: &AmplitudeModel,
    p: Momentum,
    t_final: f64,
    saddles: &SaddleSet,
    opts: &InterferenceOptions,
) -> Result<Amplitude> {
    let (terms, _) = model.terms(p, &saddles.entries)?;
    let dsf = model.ds_dup_final(p, t_final);
    let i = C64::new(0.0, 1.0);
    let parts = terms.iter().map(|t| t.c * i * (t.ds_dup - dsf));
    Ok(if opts.coherent {
        Amplitude::Coherent(parts.sum())
    } else {
        Amplitude::PerSaddle(parts.collect())
    })
}

fn mono_phase(p: Momentum, field: &LaserField, ip: f64) -> Result<f64> {
    if field.envelope != Envelope::Monochromatic {
        return Err(invalid("intercycle factor needs a monochromatic field"));
    }
    let x = ip + field.up + 0.5 * p.norm_sqr();
    let u = PI * x / field.omega;
    Ok(u - PI * (u / PI).round())
}

/// Ω_N = sin²(Nπx/ω)/sin²(πx/ω), x = Ip + Up + p²/2; N² on ATI resonances.
pub fn intercycle_factor(p: Momentum, n: usize, field: &LaserField, ip: f64) -> Result<f64> {
    let u = mono_phase(p, field, ip)?;
    let nf = n as f64;
    if u.abs() < 1e-7 {
        return Ok(nf * nf * (1.0 - (nf * nf - 1.0) * u * u / 3.0));
    }
    let r = (nf * u).sin() / u.sin();
    Ok(r * r)
}

/// χ_N = ∂ln Ω_N/∂Up = (2π/ω)[N cot(Nπx/ω) − cot(πx/ω)]; zero on resonances,
/// infinite where Ω_N vanishes.
pub fn intercycle_chi(p: Momentum, n: usize, field: &LaserField, ip: f64) -> Result<f64> {
    let u = mono_phase(p, field, ip)?;
    let nf = n as f64;
    let k = 2.0 * PI / field.omega;
    if u.abs() < 1e-7 {
        return Ok(-k * (nf * nf - 1.0) * u / 3.0);
    }
    Ok(k * (nf / (nf * u).tan() - 1.0 / u.tan()))
}

/// ∂Ω_N/∂Up, finite everywhere.
pub fn intercycle_factor_dup(p: Momentum, n: usize, field: &LaserField, ip: f64) -> Result<f64> {
    let u = mono_phase(p, field, ip)?;
    let nf = n as f64;
    let k = PI / field.omega;
    if u.abs() < 1e-7 {
        return Ok(-k * 2.0 * nf * nf * (nf * nf - 1.0) * u / 3.0);
    }
    let (s, c) = u.sin_cos();
    let (sn, cn) = (nf * u).sin_cos();
    Ok(k * 2.0 * (sn / s) * (nf * cn * s - sn * c) / (s * s))
}

/// Momentum-map CSV: `p_par,p_perp,reM,imM,reMg,imMg,prob`.
pub fn write_momentum_map<W: Write>(mut w: W, pairs: &[AmplitudePair]) -> std::io::Result<()> {
    writeln!(w, "p_par,p_perp,reM,imM,reMg,imMg,prob")?;
    for a in pairs {
        writeln!(
            w,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            a.p.par,
            a.p.perp,
            a.m.re,
            a.m.im,
            a.m_g.re,
            a.m_g.im,
            a.prob()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saddle::mono_saddle_times;

    #[test]
    fn matrix_element_values() {
        assert!((bound_matrix_element(1.0).unwrap() - (2.0 * PI).powf(-1.5)).abs() < 1e-16);
        assert!((bound_matrix_element(0.5).unwrap() - 0.0533916).abs() < 1e-7);
        assert!(bound_matrix_element(0.0).is_err());
    }

    #[test]
    fn omega_limits() {
        let f = LaserField::monochromatic(0.44, 0.057, 0.0).unwrap();
        let p = Momentum::new(0.31, 0.2);
        assert!((intercycle_factor(p, 1, &f, 0.5).unwrap() - 1.0).abs() < 1e-14);
        // put x on an ATI resonance
        let k = ((0.5f64 + 0.44) / 0.057).ceil();
        let e = k * 0.057 - 0.5 - 0.44;
        let p = Momentum::new((2.0f64 * e).sqrt(), 0.0);
        assert!((intercycle_factor(p, 5, &f, 0.5).unwrap() - 25.0).abs() < 1e-8);
        assert!(intercycle_chi(p, 5, &f, 0.5).unwrap().abs() < 1e-4);
    }

    #[test]
    fn omega_factorization() {
        let f = LaserField::monochromatic(0.44, 0.057, 0.0).unwrap();
        let model = AmplitudeModel::new(f, 0.5, 0.0, Normalization::PlaneWave).unwrap();
        let opts = InterferenceOptions::default();
        let p = Momentum::new(0.23, 0.41);
        let one = mono_saddle_times(p, &f, 0.5, 1..2).unwrap();
        let five = mono_saddle_times(p, &f, 0.5, 1..6).unwrap();
        let m1 = transition_amplitude(&model, p, &one, &opts).unwrap().probability();
        let m5 = transition_amplitude(&model, p, &five, &opts).unwrap().probability();
        let om = intercycle_factor(p, 5, &f, 0.5).unwrap();
        assert!((m5 - om * m1).abs() / m5 < 1e-8);
    }

    #[test]
    fn incoherent_mode() {
        let f = LaserField::monochromatic(0.44, 0.057, 0.0).unwrap();
        let model = AmplitudeModel::new(f, 0.5, 0.0, Normalization::PlaneWave).unwrap();
        let p = Momentum::new(0.1, 0.2);
        let set = mono_saddle_times(p, &f, 0.5, 1..3).unwrap();
        let opts = InterferenceOptions { coherent: false, ..Default::default() };
        match transition_amplitude(&model, p, &set, &opts).unwrap() {
            Amplitude::PerSaddle(v) => assert_eq!(v.len(), 4),
            _ => panic!("expected per-saddle amplitudes"),
        }
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_momentum_map(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "p_par,p_perp,reM,imM,reMg,imMg,prob\n");
    }
}
