//! Brute-force oracles: real-time quadrature of the amplitude integral,
//! Richardson-extrapolated finite differences and a blind complex root scan.
//! None of these use the saddle-point machinery or the closed-form field
//! integrals.

use std::f64::consts::PI;

use crate::amplitude::{bound_matrix_element, Normalization};
use crate::error::{invalid, Error, Result};
use crate::field::LaserField;
use crate::quadrature::{gauss_legendre, Rule};
use crate::saddle::Momentum;
use crate::C64;

const NODES: usize = 16;

fn phase_rate(field: &LaserField, p: Momentum, ip: f64, t: f64) -> f64 {
    let v = p.par + field.vector_potential_re(t);
    ip + 0.5 * (v * v + p.perp * p.perp)
}

fn integrate_rate(field: &LaserField, p: Momentum, ip: f64, a: f64, b: f64, rule: &Rule) -> f64 {
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * h * phase_rate(field, p, ip, c + h * x)).sum()
}

fn quadrature_pass(
    field: &LaserField,
    p: Momentum,
    ip: f64,
    t_ref: f64,
    window: (f64, f64),
    panels: usize,
    rule: &Rule,
) -> C64 {
    let (t0, t1) = window;
    let width = (t1 - t0) / panels as f64;
    let mut s = if t0 == t_ref { 0.0 } else { integrate_rate(field, p, ip, t_ref, t0, rule) };
    let s_start = s;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..panels {
        let a = t0 + k as f64 * width;
        let b = a + width;
        let h = 0.5 * width;
        let c = a + h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = c + h * x;
            let st = s + integrate_rate(field, p, ip, a, t, rule);
            acc += w * h * C64::from_polar(1.0, st);
        }
        s += integrate_rate(field, p, ip, a, b, rule);
    }
    // field-free tails beyond the window: ∫ e^{iS} = ±i e^{iS(edge)}/S′(edge)
    let i = C64::new(0.0, 1.0);
    acc += i * C64::from_polar(1.0, s) / phase_rate(field, p, ip, t1);
    acc -= i * C64::from_polar(1.0, s_start) / phase_rate(field, p, ip, t0);
    acc
}

/// M(p) = ∫ d e^{iS(p,t)} dt over the real axis, with the action itself
/// obtained by quadrature of Ip + ½(p + A)² from `t_ref`. The field must be
/// negligible outside `window`; the free-electron tails are added analytically.
pub fn amplitude_by_quadrature(
    field: &LaserField,
    ip: f64,
    normalization: Normalization,
    p: Momentum,
    t_ref: f64,
    window: (f64, f64),
) -> Result<C64> {
    let (t0, t1) = window;
    if !(t1 >= t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(invalid("quadrature window must be finite and ordered"));
    }
    if t1 == t0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let d = bound_matrix_element(ip)? * normalization.factor();
    let rule = gauss_legendre(NODES);
    let mut panels = ((t1 - t0) / (field.period() / 40.0)).ceil().max(1.0) as usize;
    let mut prev = quadrature_pass(field, p, ip, t_ref, window, panels, &rule);
    for _ in 0..4 {
        panels *= 2;
        let next = quadrature_pass(field, p, ip, t_ref, window, panels, &rule);
        if (next - prev).norm() * d < 1e-6 {
            return Ok(next * d);
        }
        prev = next;
    }
    Err(Error::Numerical(format!("time quadrature did not converge at p = ({}, {})", p.par, p.perp)))
}

/// Central difference with one Richardson step: (4D(h/2) − D(h))/3.
pub fn fd_derivative(f: impl Fn(f64) -> f64, g: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    let vals = [f(g + h), f(g - h), f(g + 0.5 * h), f(g - 0.5 * h)];
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite sample in finite difference".into()));
    }
    let d1 = (vals[0] - vals[1]) / (2.0 * h);
    let d2 = (vals[2] - vals[3]) / h;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Complex finite difference, same scheme.
pub fn fd_derivative_c(f: impl Fn(f64) -> C64, g: f64, h: f64) -> Result<C64> {
    if !(h > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    let vals = [f(g + h), f(g - h), f(g + 0.5 * h), f(g - 0.5 * h)];
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite sample in finite difference".into()));
    }
    let d1 = (vals[0] - vals[1]) / (2.0 * h);
    let d2 = (vals[2] - vals[3]) / h;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Rectangle in the complex time plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Region {
    fn contains(&self, t: C64) -> bool {
        t.re >= self.re.0 && t.re < self.re.1 && t.im > self.im.0 && t.im <= self.im.1
    }

    fn is_empty(&self) -> bool {
        !(self.re.1 > self.re.0) || !(self.im.1 > self.im.0)
    }
}

fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Roots of (p∥ + A(t))² + p⊥² + 2Ip inside `region`, from Newton iterations
/// started at `n_seeds` Halton points. Deduplicated and sorted by Re t.
pub fn blind_root_scan(p: Momentum, field: &LaserField, ip: f64, region: Region, n_seeds: usize) -> Vec<C64> {
    if region.is_empty() {
        return Vec::new();
    }
    let g = |t: C64| {
        let v = p.par + field.vector_potential(t);
        v * v + p.perp * p.perp + 2.0 * ip
    };
    let mut roots: Vec<C64> = Vec::new();
    for k in 1..=n_seeds {
        let mut t = C64::new(
            region.re.0 + (region.re.1 - region.re.0) * halton(k, 2),
            region.im.0 + (region.im.1 - region.im.0) * halton(k, 3),
        );
        let mut gt = g(t);
        for _ in 0..100 {
            let v = p.par + field.vector_potential(t);
            let dg = 2.0 * v * field.vector_potential_dt(t);
            if dg.norm() == 0.0 || !dg.is_finite() {
                break;
            }
            let step = gt / dg;
            let mut lam = 1.0;
            let mut cand = t - step;
            let mut gc = g(cand);
            for _ in 0..20 {
                if gc.is_finite() && gc.norm() < gt.norm() {
                    break;
                }
                lam *= 0.5;
                cand = t - step * lam;
                gc = g(cand);
            }
            t = cand;
            gt = gc;
            if !t.is_finite() || (step * lam).norm() < 1e-15 * t.norm().max(1.0) {
                break;
            }
        }
        if t.is_finite() && gt.norm() < 1e-10 && region.contains(t) && !roots.iter().any(|r| (r - t).norm() < 1e-7) {
            roots.push(t);
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}

/// Plane-wave matrix element of V̂ψ₀ for the zero-range potential
/// V̂ = −(2π/√Ip) δ(r) ∂_r r and bound state rψ₀ = Ip^{1/4} e^{−√Ip r}/(2π).
/// The δ-strength is found by differentiating rψ₀ numerically at r = 0; the δ
/// is smeared to a normalized Gaussian of width `eps` whose Fourier integral is
/// done by radial quadrature.
pub fn zero_range_matrix_element(ip: f64, q: f64, eps: f64) -> Result<f64> {
    let k = ip.sqrt();
    let r_psi = |r: f64| ip.powf(0.25) * (-k * r).exp() / (2.0 * PI);
    let c = -(2.0 * PI / k) * fd_derivative(r_psi, 0.0, 1e-3)?;
    let rule = crate::quadrature::gauss_legendre_on(400, 0.0, 12.0 * eps);
    let norm = (2.0 * PI * eps * eps).powf(-1.5);
    let ft = rule.integrate(|r| {
        let j0 = if q * r == 0.0 { 1.0 } else { (q * r).sin() / (q * r) };
        4.0 * PI * r * r * norm * (-r * r / (2.0 * eps * eps)).exp() * j0
    });
    Ok(c * ft * (2.0 * PI).powf(-1.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_square() {
        let d = fd_derivative(|g| g * g, 3.0, 1e-2).unwrap();
        assert!((d - 6.0).abs() < 1e-10);
        assert!(fd_derivative(|_| f64::NAN, 1.0, 0.1).is_err());
    }

    #[test]
    fn empty_window_and_region() {
        let f = LaserField::gaussian(0.44, 0.057, PI / 2.0, 2.0).unwrap();
        let m = amplitude_by_quadrature(&f, 0.5, Normalization::PlaneWave, Momentum::new(0.3, 0.3), 0.0, (5.0, 5.0)).unwrap();
        assert_eq!(m, C64::new(0.0, 0.0));
        let r = blind_root_scan(Momentum::new(0.0, 0.0), &f, 0.5, Region { re: (1.0, 1.0), im: (0.0, 10.0) }, 64);
        assert!(r.is_empty());
    }

    #[test]
    fn zero_range_constant() {
        let a = zero_range_matrix_element(0.5, 0.0, 1e-3).unwrap();
        let b = zero_range_matrix_element(0.5, 5.0 * 2f64.sqrt(), 1e-4).unwrap();
        let exact = bound_matrix_element(0.5).unwrap();
        assert!((a - exact).abs() < 1e-6 * exact, "{a} {exact}");
        assert!((b - exact).abs() < 1e-6 * exact, "{b} {exact}");
    }
}
