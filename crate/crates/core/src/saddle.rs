//! Complex ionization times from the stationary-action condition
//! (p∥ + A(t))² + p⊥² + 2Ip = 0, and the action evaluated at them.
//!
//! Events are labelled by the half-cycle index `m`: the field extremum
//! nearest to the event sits at ωt + φ = π/2 + mπ. Even `m` corresponds to
//! intracycle index e = 1 (cycle n = m/2 + 1), odd `m` to e = 0
//! (n = (m + 1)/2). On the branch with intracycle index e the linear form
//! p∥ + A(t) = i(−1)^e κ holds, κ = √(2Ip + p⊥²).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{Envelope, LaserField};
use crate::C64;

const MAX_ITER: usize = 50;
const MAX_HALVINGS: usize = 8;
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Momentum {
    pub par: f64,
    pub perp: f64,
}

impl Momentum {
    pub fn new(par: f64, perp: f64) -> Self {
        Self { par, perp }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.par * self.par + self.perp * self.perp
    }

    pub fn kappa(&self, ip: f64) -> f64 {
        (2.0 * ip + self.perp * self.perp).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleTime {
    pub t_ion: C64,
    pub e: u8,
    pub n: i64,
    pub residual: f64,
    pub converged: bool,
}

impl SaddleTime {
    pub fn slot(&self) -> i64 {
        en_to_slot(self.e, self.n)
    }
}

pub fn slot_to_en(m: i64) -> (u8, i64) {
    if m.rem_euclid(2) == 0 {
        (1, m.div_euclid(2) + 1)
    } else {
        (0, (m + 1).div_euclid(2))
    }
}

pub fn en_to_slot(e: u8, n: i64) -> i64 {
    if e == 1 {
        2 * n - 2
    } else {
        2 * n - 1
    }
}

/// (−1)^e for the branch of slot `m`.
pub fn branch_sign(m: i64) -> f64 {
    if m.rem_euclid(2) == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Real time of the field extremum that labels slot `m`.
pub fn nominal_time(field: &LaserField, m: i64) -> f64 {
    (0.5 * PI + m as f64 * PI - field.cep) / field.omega
}

/// Slot whose nominal time is nearest to `t`.
pub fn slot_near(field: &LaserField, t: f64) -> i64 {
    ((field.omega * t + field.cep - 0.5 * PI) / PI).round() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleFlags {
    pub intra_pairs_included: bool,
    pub n_channels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleSet {
    pub entries: Vec<SaddleTime>,
    pub channel_window: (f64, f64),
    pub flags: SaddleFlags,
}

impl SaddleSet {
    fn from_entries(mut entries: Vec<SaddleTime>, window: (f64, f64), intra: bool) -> Self {
        entries.sort_by(|a, b| a.t_ion.re.total_cmp(&b.t_ion.re));
        let mut cycles: Vec<i64> = entries.iter().map(|s| s.n).collect();
        cycles.sort_unstable();
        cycles.dedup();
        let flags = SaddleFlags { intra_pairs_included: intra, n_channels: cycles.len() };
        Self { entries, channel_window: window, flags }
    }

    pub fn converged(&self) -> impl Iterator<Item = &SaddleTime> {
        self.entries.iter().filter(|s| s.converged)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SaddleDiagnostics {
    pub n_saddles: usize,
    pub n_failed: usize,
    pub max_residual: f64,
}

impl SaddleDiagnostics {
    pub fn record(&mut self, s: &SaddleTime) {
        if s.converged {
            self.n_saddles += 1;
            self.max_residual = self.max_residual.max(s.residual);
        } else {
            self.n_failed += 1;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.n_saddles += other.n_saddles;
        self.n_failed += other.n_failed;
        self.max_residual = self.max_residual.max(other.max_residual);
    }
}

/// |(p∥ + A)² + p⊥² + 2Ip|.
pub fn saddle_residual(p: Momentum, field: &LaserField, ip: f64, t: C64) -> f64 {
    let v = p.par + field.vector_potential(t);
    (v * v + p.perp * p.perp + 2.0 * ip).norm()
}

/// Closed-form time of slot `m` for a monochromatic field of ponderomotive
/// energy `up` (the field's CEP and frequency are used).
pub fn mono_slot_time(p: Momentum, field: &LaserField, ip: f64, up: f64, m: i64) -> C64 {
    let (e, n) = slot_to_en(m);
    let s = branch_sign(m);
    let z = C64::new(-p.par, s * p.kappa(ip)) / (2.0 * up.sqrt());
    let base = 2.0 * PI * (n - e as i64) as f64;
    (base - s * z.acos() - field.cep) / field.omega
}

/// Monochromatic saddle times for the cycles in `n_range`, both intracycle
/// branches per cycle.
pub fn mono_saddle_times(
    p: Momentum,
    field: &LaserField,
    ip: f64,
    n_range: std::ops::Range<i64>,
) -> Result<SaddleSet> {
    if field.envelope != Envelope::Monochromatic {
        return Err(invalid("mono_saddle_times needs a monochromatic field"));
    }
    if p.perp < 0.0 {
        return Err(invalid("p_perp must be non-negative"));
    }
    let mut entries = Vec::new();
    for n in n_range.clone() {
        for e in 0..2u8 {
            let t = mono_slot_time(p, field, ip, field.up, en_to_slot(e, n));
            let residual = saddle_residual(p, field, ip, t);
            entries.push(SaddleTime { t_ion: t, e, n, residual, converged: t.im > 0.0 });
        }
    }
    let window = (
        2.0 * PI * n_range.start as f64 / field.omega,
        2.0 * PI * n_range.end as f64 / field.omega,
    );
    Ok(SaddleSet::from_entries(entries, window, true))
}

/// Local-envelope seed for slot `m`.
pub fn envelope_seed(p: Momentum, field: &LaserField, ip: f64, m: i64) -> C64 {
    let t0 = nominal_time(field, m);
    let f = field.envelope(C64::new(t0, 0.0)).re;
    let up_loc = (field.up * f * f).max(1e-300);
    mono_slot_time(p, field, ip, up_loc, m)
}

/// Damped Newton refinement of slot `m` from `seed`.
pub fn refine(p: Momentum, field: &LaserField, ip: f64, m: i64, seed: C64) -> SaddleTime {
    let (e, n) = slot_to_en(m);
    let target = C64::new(-p.par, branch_sign(m) * p.kappa(ip));
    let h = |t: C64| field.vector_potential(t) - target;
    let mut t = seed;
    let mut ht = h(t);
    for _ in 0..MAX_ITER {
        let d = field.vector_potential_dt(t);
        if d.norm() == 0.0 || !d.is_finite() {
            break;
        }
        let step = ht / d;
        let mut lambda = 1.0;
        let mut cand = t - step;
        let mut hc = h(cand);
        for _ in 0..MAX_HALVINGS {
            if hc.is_finite() && hc.norm() < ht.norm() {
                break;
            }
            lambda *= 0.5;
            cand = t - step * lambda;
            hc = h(cand);
        }
        if !hc.is_finite() {
            break;
        }
        t = cand;
        ht = hc;
        if (step * lambda).norm() < 1e-14 * t.norm().max(1.0) {
            break;
        }
    }
    let residual = saddle_residual(p, field, ip, t);
    let half = 0.5 * field.period();
    let plausible = t.is_finite()
        && t.im > 0.0
        && t.im < 2.0 * half
        && (t.re - nominal_time(field, m)).abs() < half;
    let converged = plausible && residual < RESIDUAL_TOL;
    SaddleTime { t_ion: t, e, n, residual, converged }
}

/// Saddle time of slot `m` for a single momentum, seeded from the local envelope.
pub fn solve_slot(p: Momentum, field: &LaserField, ip: f64, m: i64) -> SaddleTime {
    match field.envelope {
        Envelope::Monochromatic => {
            let t = mono_slot_time(p, field, ip, field.up, m);
            let (e, n) = slot_to_en(m);
            let residual = saddle_residual(p, field, ip, t);
            SaddleTime { t_ion: t, e, n, residual, converged: t.im > 0.0 && t.is_finite() }
        }
        Envelope::Gaussian { .. } => refine(p, field, ip, m, envelope_seed(p, field, ip, m)),
    }
}

/// Pulse saddle times for the listed slots at a single momentum.
pub fn pulse_saddle_times(
    p: Momentum,
    field: &LaserField,
    ip: f64,
    slots: &[i64],
    window: (f64, f64),
    intra_pairs: bool,
) -> Result<SaddleSet> {
    if !matches!(field.envelope, Envelope::Gaussian { .. }) {
        return Err(invalid("pulse_saddle_times needs a Gaussian envelope"));
    }
    if p.perp < 0.0 {
        return Err(invalid("p_perp must be non-negative"));
    }
    let entries = slots.iter().map(|&m| refine(p, field, ip, m, envelope_seed(p, field, ip, m))).collect();
    Ok(SaddleSet::from_entries(entries, window, intra_pairs))
}

/// Saddle times of every slot along a row of momenta, each solution seeding
/// the next point. Result is indexed `[point][slot]`.
pub fn track_row(
    row: &[Momentum],
    field: &LaserField,
    ip: f64,
    slots: &[i64],
) -> Vec<Vec<SaddleTime>> {
    let mut out = vec![Vec::with_capacity(slots.len()); row.len()];
    for &m in slots {
        let mut prev: Option<C64> = None;
        for (k, &p) in row.iter().enumerate() {
            let s = match (field.envelope, prev) {
                (Envelope::Monochromatic, _) => solve_slot(p, field, ip, m),
                (_, Some(seed)) => {
                    let s = refine(p, field, ip, m, seed);
                    if s.converged {
                        s
                    } else {
                        refine(p, field, ip, m, envelope_seed(p, field, ip, m))
                    }
                }
                (_, None) => solve_slot(p, field, ip, m),
            };
            prev = if s.converged { Some(s.t_ion) } else { None };
            out[k].push(s);
        }
    }
    out
}

/// Largest jump of any slot's time between neighbouring row points,
/// relative to the smallest distance between distinct saddles at either point.
pub fn max_relative_jump(tracked: &[Vec<SaddleTime>]) -> f64 {
    let mut worst: f64 = 0.0;
    for w in tracked.windows(2) {
        let min_sep = |ts: &[SaddleTime]| {
            let mut d = f64::INFINITY;
            for i in 0..ts.len() {
                for j in (i + 1)..ts.len() {
                    if ts[i].converged && ts[j].converged {
                        d = d.min((ts[i].t_ion - ts[j].t_ion).norm());
                    }
                }
            }
            d
        };
        let sep = min_sep(&w[0]).min(min_sep(&w[1]));
        for (a, b) in w[0].iter().zip(&w[1]) {
            if a.converged && b.converged && sep.is_finite() {
                worst = worst.max((a.t_ion - b.t_ion).norm() / sep);
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionBundle {
    pub s: C64,
    pub ds_dup: C64,
    pub s_dd: C64,
}

/// S(p,t) = (Ip + p²/2)(t − t_ref) + p∥∫A + ½∫A² over [t_ref, t], its
/// Up-derivative (A ∝ √Up) and ∂²S/∂t².
pub fn action_bundle(p: Momentum, t: C64, field: &LaserField, ip: f64, t_ref: f64) -> ActionBundle {
    let tr = C64::new(t_ref, 0.0);
    let ia = field.int_a(tr, t);
    let ia2 = field.int_a2(tr, t);
    let s = (ip + 0.5 * p.norm_sqr()) * (t - tr) + p.par * ia + 0.5 * ia2;
    let ds_dup = (p.par * ia + ia2) / (2.0 * field.up);
    let s_dd = (p.par + field.vector_potential(t)) * field.vector_potential_dt(t);
    ActionBundle { s, ds_dup, s_dd }
}

/// ∂S/∂Up at a real time.
pub fn ds_dup_real(p: Momentum, t: f64, field: &LaserField, t_ref: f64) -> f64 {
    let ia = field.int_a(C64::new(t_ref, 0.0), C64::new(t, 0.0));
    let ia2 = field.int_a2(C64::new(t_ref, 0.0), C64::new(t, 0.0));
    ((p.par * ia + ia2) / (2.0 * field.up)).re
}

/// Where channels are counted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelStart {
    /// The event at the envelope peak (window start for monochromatic fields).
    Peak,
    /// The first event at or after −τ/2 on the peak event's branch.
    HalfMaximum,
}

/// Which ionization events enter the amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPlan {
    /// `None`: every event in the window (monochromatic) or with F² above
    /// `envelope_cut` (Gaussian), both branches.
    pub n_channels: Option<usize>,
    pub intra_pairs: bool,
    pub start: ChannelStart,
    pub envelope_cut: f64,
}

impl Default for ChannelPlan {
    fn default() -> Self {
        Self { n_channels: None, intra_pairs: true, start: ChannelStart::Peak, envelope_cut: 0.1 }
    }
}

/// Slots selected by `plan`. `window` is the monochromatic channel window.
pub fn select_slots(field: &LaserField, plan: &ChannelPlan, window: (f64, f64)) -> Result<Vec<i64>> {
    if plan.n_channels == Some(0) {
        return Err(invalid("n_channels must be at least 1"));
    }
    let first = match field.envelope {
        Envelope::Monochromatic => {
            let mut m = slot_near(field, window.0) - 1;
            while nominal_time(field, m) < window.0 - 1e-9 {
                m += 1;
            }
            m
        }
        Envelope::Gaussian { tau } => {
            let peak = slot_near(field, 0.0);
            match plan.start {
                ChannelStart::Peak => peak,
                ChannelStart::HalfMaximum => {
                    let mut m = peak;
                    while nominal_time(field, m - 2) >= -0.5 * tau - 1e-9 {
                        m -= 2;
                    }
                    while nominal_time(field, m) < -0.5 * tau - 1e-9 {
                        m += 2;
                    }
                    m
                }
            }
        }
    };
    let mut slots = match plan.n_channels {
        Some(n) => {
            let mut v = Vec::new();
            for k in 0..n as i64 {
                let m = first + 2 * k;
                v.push(m);
                if plan.intra_pairs {
                    v.push(m + 1);
                }
            }
            v
        }
        None => match field.envelope {
            Envelope::Monochromatic => {
                let mut v = Vec::new();
                let mut m = first;
                while nominal_time(field, m) < window.1 - 1e-9 {
                    v.push(m);
                    m += 1;
                }
                v
            }
            Envelope::Gaussian { .. } => {
                let peak = slot_near(field, 0.0);
                let keep = |m: i64| field.envelope(C64::new(nominal_time(field, m), 0.0)).re.powi(2) >= plan.envelope_cut;
                let mut lo = peak;
                while keep(lo - 1) {
                    lo -= 1;
                }
                let mut hi = peak;
                while keep(hi + 1) {
                    hi += 1;
                }
                (lo..=hi).collect()
            }
        },
    };
    slots.sort_unstable();
    slots.dedup();
    if slots.is_empty() {
        return Err(Error::Numerical("channel selection produced no events".into()));
    }
    Ok(slots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_mono() -> LaserField {
        LaserField::monochromatic(0.44, 0.057, 0.0).unwrap()
    }

    #[test]
    fn labels_round_trip() {
        for m in -7..7 {
            let (e, n) = slot_to_en(m);
            assert_eq!(en_to_slot(e, n), m);
        }
        assert_eq!(slot_to_en(0), (1, 1));
        assert_eq!(slot_to_en(1), (0, 1));
    }

    #[test]
    fn mono_times_at_field_maxima() {
        let f = std_mono();
        let set = mono_saddle_times(Momentum::new(0.0, 0.0), &f, 0.5, 0..4).unwrap();
        assert_eq!(set.entries.len(), 8);
        for s in &set.entries {
            let e = s.e as i64;
            let sign = if e == 0 { 1.0 } else { -1.0 };
            let expect = 2.0 * PI * (s.n - e) as f64 - sign * PI / 2.0;
            assert!((f.omega * s.t_ion.re - expect).abs() < 1e-12);
            assert!(s.t_ion.im > 0.0);
            assert!(s.residual < 1e-10);
        }
        assert!(set.entries.windows(2).all(|w| w[0].t_ion.re <= w[1].t_ion.re));
    }

    #[test]
    fn mono_residuals_many_momenta() {
        let f = std_mono();
        for i in 0..20 {
            for j in 0..10 {
                let p = Momentum::new(-1.5 + 0.15 * i as f64, 0.15 * j as f64);
                let set = mono_saddle_times(p, &f, 0.5, 0..3).unwrap();
                for s in &set.entries {
                    assert!(s.residual < 1e-10, "{p:?} {s:?}");
                    assert!(s.t_ion.im > 0.0);
                }
            }
        }
    }

    #[test]
    fn pulse_requires_gaussian() {
        let f = std_mono();
        assert!(pulse_saddle_times(Momentum::new(0.0, 0.0), &f, 0.5, &[0], (0.0, 1.0), false).is_err());
        let g = LaserField::gaussian(0.44, 0.057, PI / 2.0, 5.0).unwrap();
        assert!(mono_saddle_times(Momentum::new(0.0, 0.0), &g, 0.5, 0..1).is_err());
    }

    #[test]
    fn long_pulse_matches_mono() {
        let g = LaserField::gaussian(0.44, 0.057, 0.0, 1000.0).unwrap();
        let f = std_mono();
        for p in [Momentum::new(0.0, 0.0), Momentum::new(0.4, 0.2), Momentum::new(-0.7, 0.5)] {
            for m in [0, 1] {
                let sg = solve_slot(p, &g, 0.5, m);
                let sm = solve_slot(p, &f, 0.5, m);
                assert!(sg.converged);
                assert!((sg.t_ion - sm.t_ion).norm() < 1e-4, "{:?} {:?}", sg.t_ion, sm.t_ion);
            }
        }
    }

    #[test]
    fn saddle_condition_zero_derivative() {
        let g = LaserField::gaussian(0.44, 0.057, PI / 2.0, 2.0).unwrap();
        let p = Momentum::new(0.3, 0.3);
        for m in -3..=3 {
            let s = solve_slot(p, &g, 0.5, m);
            if !s.converged {
                continue;
            }
            let v = p.par + g.vector_potential(s.t_ion);
            let ds = 0.5 + 0.5 * (v * v + p.perp * p.perp);
            assert!(ds.norm() < 1e-10);
        }
    }

    #[test]
    fn s_dd_at_field_zero() {
        let f = std_mono();
        let t = 0.25 * f.period();
        let b = action_bundle(Momentum::new(0.0, 0.0), C64::new(t, 0.0), &f, 0.5, 0.0);
        let expect = f.vector_potential(C64::new(t, 0.0)) * f.vector_potential_dt(C64::new(t, 0.0));
        assert!((b.s_dd - expect).norm() < 1e-15);
    }

    #[test]
    fn slot_selection() {
        let f = std_mono();
        let one = ChannelPlan { n_channels: Some(1), intra_pairs: false, ..Default::default() };
        let s = select_slots(&f, &one, (0.0, 5.0 * f.period())).unwrap();
        assert_eq!(s, vec![0]);
        assert!((nominal_time(&f, 0) - 0.25 * f.period()).abs() < 1e-9);
        let all = ChannelPlan::default();
        assert_eq!(select_slots(&f, &all, (0.0, 5.0 * f.period())).unwrap().len(), 10);
        let g = LaserField::gaussian(0.44, 0.057, PI / 2.0, 5.0).unwrap();
        assert_eq!(select_slots(&g, &one, (0.0, 0.0)).unwrap(), vec![0]);
        let half = ChannelPlan { n_channels: Some(5), intra_pairs: false, start: ChannelStart::HalfMaximum, ..Default::default() };
        let s = select_slots(&g, &half, (0.0, 0.0)).unwrap();
        assert_eq!(s.len(), 5);
        let tau = g.tau().unwrap();
        assert!(nominal_time(&g, s[0]) >= -0.5 * tau);
        assert!(nominal_time(&g, s[0] - 2) < -0.5 * tau);
        let pairs = ChannelPlan { intra_pairs: true, ..half };
        assert_eq!(select_slots(&g, &pairs, (0.0, 0.0)).unwrap().len(), 10);
        let zero = ChannelPlan { n_channels: Some(0), ..Default::default() };
        assert!(select_slots(&g, &zero, (0.0, 0.0)).is_err());
    }
}
