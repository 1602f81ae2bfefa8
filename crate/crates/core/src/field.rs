//! Linearly polarized driving field in the velocity gauge.
//!
//! A(t) = 2√Up · F(t) · cos(ωt + φ), with F = 1 (monochromatic) or
//! F = exp(−2 ln2 · t²/τ²) (Gaussian, τ = FWHM of the intensity envelope F²).
//! All evaluations accept complex time.

use std::f64::consts::{LN_2, PI};

use errorfunctions::ComplexErrorFunctions;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::C64;

/// Speed of light in atomic units.
pub const SPEED_OF_LIGHT: f64 = 137.035_999_084;
/// One atomic unit of intensity in W/cm² (ε₀ = 1/4π convention).
pub const AU_INTENSITY_WCM2: f64 = 6.4364e15;
/// Bohr radius in nm.
pub const BOHR_NM: f64 = 0.052_917_721_090_3;

/// Angular frequency (a.u.) for a vacuum wavelength in nm.
pub fn omega_from_wavelength(wavelength_nm: f64) -> Result<f64> {
    if !(wavelength_nm > 0.0) || !wavelength_nm.is_finite() {
        return Err(invalid(format!("wavelength must be positive, got {wavelength_nm}")));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT * BOHR_NM / wavelength_nm)
}

/// Ponderomotive energy Up = I/(2cε₀ω²) in a.u. for an intensity in W/cm².
pub fn up_from_intensity(intensity_wcm2: f64, wavelength_nm: f64) -> Result<f64> {
    let omega = omega_from_wavelength(wavelength_nm)?;
    if !(intensity_wcm2 >= 0.0) {
        return Err(invalid(format!("intensity must be non-negative, got {intensity_wcm2}")));
    }
    let eps0 = 1.0 / (4.0 * PI);
    let i_au = intensity_wcm2 / AU_INTENSITY_WCM2;
    Ok(i_au / (2.0 * SPEED_OF_LIGHT * eps0 * omega * omega))
}

/// Inverse of [`up_from_intensity`].
pub fn intensity_from_up(up: f64, wavelength_nm: f64) -> Result<f64> {
    Ok(up / up_from_intensity(1.0, wavelength_nm)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    Monochromatic,
    Gaussian { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserField {
    pub up: f64,
    pub omega: f64,
    pub cep: f64,
    pub envelope: Envelope,
}

impl LaserField {
    pub fn new(up: f64, omega: f64, cep: f64, envelope: Envelope) -> Result<Self> {
        if !(up > 0.0) || !up.is_finite() {
            return Err(invalid(format!("up must be positive, got {up}")));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(invalid(format!("omega must be positive, got {omega}")));
        }
        if let Envelope::Gaussian { tau } = envelope {
            if !(tau > 0.0) || !tau.is_finite() {
                return Err(invalid(format!("tau must be positive, got {tau}")));
            }
        }
        Ok(Self { up, omega, cep, envelope })
    }

    pub fn monochromatic(up: f64, omega: f64, cep: f64) -> Result<Self> {
        Self::new(up, omega, cep, Envelope::Monochromatic)
    }

    /// Gaussian pulse with intensity FWHM of `cycles` optical periods.
    pub fn gaussian(up: f64, omega: f64, cep: f64, cycles: f64) -> Result<Self> {
        Self::new(up, omega, cep, Envelope::Gaussian { tau: cycles * 2.0 * PI / omega })
    }

    pub fn from_lab(
        intensity_wcm2: f64,
        wavelength_nm: f64,
        cep: f64,
        envelope_cycles: Option<f64>,
    ) -> Result<Self> {
        let up = up_from_intensity(intensity_wcm2, wavelength_nm)?;
        let omega = omega_from_wavelength(wavelength_nm)?;
        match envelope_cycles {
            None => Self::monochromatic(up, omega, cep),
            Some(c) => Self::gaussian(up, omega, cep, c),
        }
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn tau(&self) -> Option<f64> {
        match self.envelope {
            Envelope::Gaussian { tau } => Some(tau),
            Envelope::Monochromatic => None,
        }
    }

    pub fn peak_a(&self) -> f64 {
        2.0 * self.up.sqrt()
    }

    /// Same field with a different ponderomotive energy.
    pub fn with_up(&self, up: f64) -> Self {
        Self { up, ..*self }
    }

    pub fn with_cep(&self, cep: f64) -> Self {
        Self { cep, ..*self }
    }

    pub fn envelope(&self, t: C64) -> C64 {
        match self.envelope {
            Envelope::Monochromatic => C64::new(1.0, 0.0),
            Envelope::Gaussian { tau } => (-2.0 * LN_2 * t * t / (tau * tau)).exp(),
        }
    }

    fn envelope_derivative(&self, t: C64) -> C64 {
        match self.envelope {
            Envelope::Monochromatic => C64::new(0.0, 0.0),
            Envelope::Gaussian { tau } => {
                let a = 2.0 * LN_2 / (tau * tau);
                -2.0 * a * t * self.envelope(t)
            }
        }
    }

    pub fn vector_potential(&self, t: C64) -> C64 {
        self.peak_a() * self.envelope(t) * (self.omega * t + self.cep).cos()
    }

    pub fn vector_potential_re(&self, t: f64) -> f64 {
        self.vector_potential(C64::new(t, 0.0)).re
    }

    /// dA/dt.
    pub fn vector_potential_dt(&self, t: C64) -> C64 {
        let ph = self.omega * t + self.cep;
        self.peak_a()
            * (self.envelope_derivative(t) * ph.cos() - self.envelope(t) * self.omega * ph.sin())
    }

    /// E(t) = −dA/dt.
    pub fn electric_field(&self, t: C64) -> C64 {
        -self.vector_potential_dt(t)
    }

    /// An antiderivative of A.
    pub fn primitive_a(&self, t: C64) -> C64 {
        let w = self.omega;
        match self.envelope {
            Envelope::Monochromatic => self.peak_a() * (w * t + self.cep).sin() / w,
            Envelope::Gaussian { tau } => {
                let a = 2.0 * LN_2 / (tau * tau);
                let e = C64::from_polar(1.0, self.cep);
                0.5 * self.peak_a()
                    * (e * gauss_wave_primitive(t, a, w) + e.conj() * gauss_wave_primitive(t, a, -w))
            }
        }
    }

    /// An antiderivative of A².
    pub fn primitive_a2(&self, t: C64) -> C64 {
        let w = self.omega;
        let up = self.up;
        match self.envelope {
            Envelope::Monochromatic => 2.0 * up * t + up * (2.0 * (w * t + self.cep)).sin() / w,
            Envelope::Gaussian { tau } => {
                let a = 4.0 * LN_2 / (tau * tau);
                let e2 = C64::from_polar(1.0, 2.0 * self.cep);
                2.0 * up
                    * (gauss_wave_primitive(t, a, 0.0)
                        + 0.5
                            * (e2 * gauss_wave_primitive(t, a, 2.0 * w)
                                + e2.conj() * gauss_wave_primitive(t, a, -2.0 * w)))
            }
        }
    }

    /// ∫_{t0}^{t1} A dt along the straight path.
    pub fn int_a(&self, t0: C64, t1: C64) -> C64 {
        if t0 == t1 {
            return C64::new(0.0, 0.0);
        }
        self.primitive_a(t1) - self.primitive_a(t0)
    }

    /// ∫_{t0}^{t1} A² dt along the straight path.
    pub fn int_a2(&self, t0: C64, t1: C64) -> C64 {
        if t0 == t1 {
            return C64::new(0.0, 0.0);
        }
        self.primitive_a2(t1) - self.primitive_a2(t0)
    }

    /// Real zeros of A: ωt + φ = π/2 + kπ. Returns the zero nearest to `t`.
    pub fn nearest_carrier_zero(&self, t: f64) -> f64 {
        let k = ((self.omega * t + self.cep - 0.5 * PI) / PI).round();
        (0.5 * PI + k * PI - self.cep) / self.omega
    }

    /// Largest real zero of A not later than `t`.
    pub fn carrier_zero_at_or_before(&self, t: f64) -> f64 {
        let x = (self.omega * t + self.cep - 0.5 * PI) / PI;
        let k = (x + 1e-12).floor();
        (0.5 * PI + k * PI - self.cep) / self.omega
    }
}

/// Antiderivative of exp(−a s² + i k s), a > 0, k real:
/// (√π/2√a) · e^{−k²/4a} · erf(√a t − i k/(2√a)).
///
/// The product e^{−k²/4a}·erf(z) is formed through the Faddeeva function,
/// e^{−b}erf(z) = e^{−b} − e^{−at²+ikt} w(iz) for Re z ≥ 0, so no overflowing
/// intermediate appears for large |k|/√a.
fn gauss_wave_primitive(t: C64, a: f64, k: f64) -> C64 {
    let sa = a.sqrt();
    let b = k * k / (4.0 * a);
    let z = sa * t - C64::new(0.0, k / (2.0 * sa));
    let phase = (-a * t * t + C64::new(0.0, k) * t).exp();
    let eb = C64::new((-b).exp(), 0.0);
    let i = C64::new(0.0, 1.0);
    let h = if z.re >= 0.0 {
        eb - phase * (i * z).w()
    } else {
        phase * (-i * z).w() - eb
    };
    0.5 * (PI / a).sqrt() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn up_conversion() {
        let up = up_from_intensity(2e14, 800.0).unwrap();
        assert!((up - 0.44).abs() < 0.005, "{up}");
        let up = up_from_intensity(1.13e14, 800.0).unwrap();
        assert!((up - 0.249).abs() / 0.249 < 0.005, "{up}");
        assert_eq!(up_from_intensity(0.0, 800.0).unwrap(), 0.0);
        assert!(up_from_intensity(1e14, 0.0).is_err());
        assert!(up_from_intensity(1e14, -800.0).is_err());
    }

    #[test]
    fn up_matches_si_conversion() {
        // Up[eV] = e²E²/(4mω²) in SI, then to hartree.
        let (e, me, c0, eps0, hbar) = (1.602176634e-19, 9.1093837015e-31, 299792458.0, 8.8541878128e-12, 1.054571817e-34);
        let i_si = 2e14 * 1e4;
        let field = (2.0f64 * i_si / (c0 * eps0)).sqrt();
        let w = 2.0 * PI * c0 / 800e-9;
        let up_j = e * e * field * field / (4.0 * me * w * w);
        let hartree = 4.3597447222071e-18;
        let up_si = up_j / hartree;
        let up = up_from_intensity(2e14, 800.0).unwrap();
        assert!((up - up_si).abs() / up_si < 2e-3, "{up} vs {up_si}");
        let w_au = w * hbar / hartree;
        assert!((omega_from_wavelength(800.0).unwrap() - w_au).abs() / w_au < 1e-8);
    }

    #[test]
    fn vector_potential_trivia() {
        let f = LaserField::monochromatic(0.44, 0.057, 0.0).unwrap();
        assert!((f.vector_potential(c(0.0)) - c(2.0 * 0.44f64.sqrt())).norm() < 1e-15);
        let g = LaserField::gaussian(0.44, 0.057, PI / 2.0, 5.0).unwrap();
        assert!(g.vector_potential(c(0.0)).norm() < 1e-15);
        assert!(g.vector_potential(c(1e4)).norm() < 1e-150);
        let tau = g.tau().unwrap();
        let f2 = g.envelope(c(tau / 2.0)).norm_sqr();
        assert!((f2 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn integrals_close_form() {
        let f = LaserField::monochromatic(0.44, 0.057, 0.3).unwrap();
        let t = f.period();
        let v = f.int_a2(c(1.7), c(1.7 + t));
        assert!((v.re - 2.0 * 0.44 * t).abs() < 1e-10 && v.im.abs() < 1e-12);
        assert_eq!(f.int_a(c(3.0), c(3.0)), c(0.0));
        let g = LaserField::gaussian(0.44, 0.057, 0.3, 5.0).unwrap();
        assert_eq!(g.int_a2(c(3.0), c(3.0)), c(0.0));
    }

    #[test]
    fn carrier_zeros() {
        let g = LaserField::gaussian(0.44, 0.057, PI / 2.0, 5.0).unwrap();
        let z = g.nearest_carrier_zero(3.0 * g.tau().unwrap());
        assert!(g.vector_potential_re(z).abs() < 1e-12);
        let m = LaserField::monochromatic(0.44, 0.057, 0.0).unwrap();
        let z = m.carrier_zero_at_or_before(5.0 * m.period());
        assert!((z - 4.75 * m.period()).abs() < 1e-9);
        let z = m.carrier_zero_at_or_before(4.75 * m.period());
        assert!((z - 4.75 * m.period()).abs() < 1e-9);
    }
}
