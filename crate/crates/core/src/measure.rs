//! Momentum quadrature with the cylindrical measure, the (E, cos θ) grid for
//! spectral measurements, and measurement-region partitions.
//!
//! Node-indexed samples are laid out row-major: one row per perpendicular
//! momentum (or energy), contiguous along p∥ (or cos θ). Sums are reduced row
//! by row and then over rows in index order, so results do not depend on the
//! number of worker threads.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::{composite, gauss_legendre_on, Rule};
use crate::saddle::Momentum;

/// ½p_max² = 2Up + 10ω.
pub fn default_p_max(up: f64, omega: f64) -> f64 {
    (2.0 * (2.0 * up + 10.0 * omega)).sqrt()
}

/// Nodes and cylindrical-measure weights of any grid.
pub trait Grid {
    fn points(&self) -> &[Momentum];
    fn weights(&self) -> &[f64];
    fn row_len(&self) -> usize;

    fn len(&self) -> usize {
        self.points().len()
    }

    fn is_empty(&self) -> bool {
        self.points().is_empty()
    }

    fn rows(&self) -> Vec<&[Momentum]> {
        self.points().chunks(self.row_len()).collect()
    }

    /// Σ wᵢ fᵢ with a fixed reduction order.
    fn integrate(&self, f: &[f64]) -> f64 {
        assert_eq!(f.len(), self.len(), "sample count must match grid");
        let n = self.row_len();
        let rows: Vec<f64> = f
            .par_chunks(n)
            .zip(self.weights().par_chunks(n))
            .map(|(fr, wr)| fr.iter().zip(wr).map(|(a, b)| a * b).sum())
            .collect();
        rows.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub p_par: Rule,
    pub p_perp: Rule,
    pub p_max: f64,
    points: Vec<Momentum>,
    weights: Vec<f64>,
}

impl MomentumGrid {
    fn from_rules(p_par: Rule, p_perp: Rule, p_max: f64) -> Self {
        let mut points = Vec::with_capacity(p_par.len() * p_perp.len());
        let mut weights = Vec::with_capacity(points.capacity());
        for (&pp, &wp) in p_perp.nodes.iter().zip(&p_perp.weights) {
            for (&pl, &wl) in p_par.nodes.iter().zip(&p_par.weights) {
                points.push(Momentum::new(pl, pp));
                weights.push(2.0 * PI * wl * wp * pp);
            }
        }
        Self { p_par, p_perp, p_max, points, weights }
    }

    /// Single Gauss–Legendre rule per axis.
    pub fn gauss_legendre(p_max: f64, n_par: usize, n_perp: usize) -> Result<Self> {
        if !(p_max > 0.0) {
            return Err(invalid(format!("p_max must be positive, got {p_max}")));
        }
        if n_par < 16 || n_perp < 16 {
            return Err(invalid("grid needs at least 16 nodes per axis"));
        }
        Ok(Self::from_rules(gauss_legendre_on(n_par, -p_max, p_max), gauss_legendre_on(n_perp, 0.0, p_max), p_max))
    }

    /// Composite Gauss–Legendre panels of width `panel` with `order` nodes
    /// each; panel edges sit on multiples of `panel`, and the extent is
    /// `p_max` rounded up to a whole number of panels.
    pub fn composite(p_max: f64, panel: f64, order: usize) -> Result<Self> {
        if !(p_max > 0.0) || !(panel > 0.0) || order == 0 {
            return Err(invalid("composite grid needs positive p_max, panel and order"));
        }
        let k = (p_max / panel - 1e-9).ceil().max(1.0) as usize;
        let ext = k as f64 * panel;
        if 2 * k * order < 16 {
            return Err(invalid("grid needs at least 16 nodes per axis"));
        }
        Ok(Self::from_rules(composite(-ext, ext, 2 * k, order), composite(0.0, ext, k, order), ext))
    }

    pub fn n_par(&self) -> usize {
        self.p_par.len()
    }

    pub fn n_perp(&self) -> usize {
        self.p_perp.len()
    }

    pub fn index(&self, i_par: usize, j_perp: usize) -> usize {
        j_perp * self.n_par() + i_par
    }
}

impl Grid for MomentumGrid {
    fn points(&self) -> &[Momentum] {
        &self.points
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
    fn row_len(&self) -> usize {
        self.n_par()
    }
}

/// Polar grid in energy and cos θ. Rows are fixed energy.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGrid {
    pub energy: Rule,
    pub cos_theta: Rule,
    pub e_max: f64,
    points: Vec<Momentum>,
    weights: Vec<f64>,
}

impl EnergyGrid {
    /// Energy nodes E = p²/2 from composite Gauss–Legendre panels of width
    /// `panel` in p on [0, p_max rounded up to whole panels], `order` nodes
    /// each; `n_theta` Gauss–Legendre nodes in cos θ. Parametrizing by p keeps
    /// the integrand smooth at E = 0.
    pub fn new(p_max: f64, panel: f64, order: usize, n_theta: usize) -> Result<Self> {
        if !(p_max > 0.0) || !(panel > 0.0) || order == 0 || n_theta < 2 {
            return Err(invalid("energy grid needs positive p_max, panel, order and n_theta >= 2"));
        }
        let k = (p_max / panel - 1e-9).ceil().max(1.0) as usize;
        let ext = k as f64 * panel;
        let pr = composite(0.0, ext, k, order);
        let energy = Rule {
            nodes: pr.nodes.iter().map(|p| 0.5 * p * p).collect(),
            weights: pr.nodes.iter().zip(&pr.weights).map(|(p, w)| p * w).collect(),
        };
        let cos_theta = gauss_legendre_on(n_theta, -1.0, 1.0);
        let mut points = Vec::with_capacity(energy.len() * n_theta);
        let mut weights = Vec::with_capacity(points.capacity());
        for (&e, &we) in energy.nodes.iter().zip(&energy.weights) {
            let p = (2.0 * e).sqrt();
            for (&c, &wc) in cos_theta.nodes.iter().zip(&cos_theta.weights) {
                points.push(Momentum::new(p * c, p * (1.0 - c * c).sqrt()));
                weights.push(2.0 * PI * p * we * wc);
            }
        }
        Ok(Self { energy, cos_theta, e_max: 0.5 * ext * ext, points, weights })
    }

    pub fn n_energy(&self) -> usize {
        self.energy.len()
    }

    pub fn n_theta(&self) -> usize {
        self.cos_theta.len()
    }

    /// P(E) = 2π p ∫ d(cos θ) f at each energy node.
    pub fn energy_spectrum(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.points.len(), "sample count must match grid");
        let nt = self.n_theta();
        f.par_chunks(nt)
            .zip(self.energy.nodes.par_iter())
            .map(|(row, &e)| {
                let p = (2.0 * e).sqrt();
                2.0 * PI * p * row.iter().zip(&self.cos_theta.weights).map(|(a, w)| a * w).sum::<f64>()
            })
            .collect()
    }

    /// ∫ P(E) dE.
    pub fn integrate_spectrum(&self, spectrum: &[f64]) -> f64 {
        spectrum.iter().zip(&self.energy.weights).map(|(a, w)| a * w).sum()
    }

    /// Energy-bin index of every energy node for bins [kΔE, (k+1)ΔE).
    pub fn energy_bins(&self, de: f64) -> Result<Vec<usize>> {
        if !(de > 0.0) {
            return Err(invalid(format!("dE must be positive, got {de}")));
        }
        Ok(self.energy.nodes.iter().map(|&e| (e / de).floor() as usize).collect())
    }
}

impl Grid for EnergyGrid {
    fn points(&self) -> &[Momentum] {
        &self.points
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
    fn row_len(&self) -> usize {
        self.n_theta()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionKind {
    FullMomentum,
    CoarseMomentum { dp: f64 },
    Yield,
    SpectralFull,
    SpectralCoarse { de: f64 },
    Custom,
}

/// Disjoint cover of grid nodes by measurement regions.
#[derive(Debug, Clone, PartialEq)]
pub struct BinPartition {
    pub kind: PartitionKind,
    region_of: Vec<usize>,
    n_regions: usize,
}

impl BinPartition {
    fn from_keys<K: Ord + Copy>(kind: PartitionKind, keys: impl Iterator<Item = K>) -> Self {
        let keys: Vec<K> = keys.collect();
        let mut ids = BTreeMap::new();
        for &k in &keys {
            let next = ids.len();
            ids.entry(k).or_insert(next);
        }
        // renumber in key order so region ids are independent of node order
        let order: BTreeMap<K, usize> = ids.keys().enumerate().map(|(i, &k)| (k, i)).collect();
        let region_of = keys.iter().map(|k| order[k]).collect();
        Self { kind, region_of, n_regions: order.len() }
    }

    /// Every node its own region.
    pub fn full<G: Grid>(grid: &G) -> Self {
        Self { kind: PartitionKind::FullMomentum, region_of: (0..grid.len()).collect(), n_regions: grid.len() }
    }

    /// Squares of side `dp` in (p∥, p⊥) with edges on multiples of `dp`.
    pub fn coarse<G: Grid>(grid: &G, dp: f64) -> Result<Self> {
        if !(dp > 0.0) {
            return Err(invalid(format!("dp must be positive, got {dp}")));
        }
        Ok(Self::from_keys(
            PartitionKind::CoarseMomentum { dp },
            grid.points().iter().map(|p| ((p.par / dp).floor() as i64, (p.perp / dp).floor() as i64)),
        ))
    }

    /// A single region: ionized.
    pub fn yield_only<G: Grid>(grid: &G) -> Self {
        Self { kind: PartitionKind::Yield, region_of: vec![0; grid.len()], n_regions: 1 }
    }

    /// Energy shells [kΔE, (k+1)ΔE).
    pub fn spectral_coarse<G: Grid>(grid: &G, de: f64) -> Result<Self> {
        if !(de > 0.0) {
            return Err(invalid(format!("dE must be positive, got {de}")));
        }
        Ok(Self::from_keys(
            PartitionKind::SpectralCoarse { de },
            grid.points().iter().map(|p| (0.5 * p.norm_sqr() / de).floor() as i64),
        ))
    }

    /// Region per energy node of an [`EnergyGrid`] (all angles merged).
    pub fn spectral_full(grid: &EnergyGrid) -> Self {
        let nt = grid.n_theta();
        Self::from_keys(PartitionKind::SpectralFull, (0..grid.len()).map(|i| i / nt))
    }

    /// Explicit region ids per node, renumbered compactly.
    pub fn from_labels(labels: &[usize]) -> Self {
        Self::from_keys(PartitionKind::Custom, labels.iter().copied())
    }

    pub fn n_regions(&self) -> usize {
        self.n_regions
    }

    pub fn region_of(&self) -> &[usize] {
        &self.region_of
    }

    /// Node lists per region.
    pub fn regions(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_regions];
        for (i, &r) in self.region_of.iter().enumerate() {
            out[r].push(i);
        }
        out
    }

    /// Split region `r` into the nodes where `keep` is true and the rest.
    pub fn split(&self, r: usize, keep: impl Fn(usize) -> bool) -> Self {
        let labels: Vec<usize> = self
            .region_of
            .iter()
            .enumerate()
            .map(|(i, &g)| if g == r && !keep(i) { self.n_regions } else { g })
            .collect();
        Self::from_labels(&labels)
    }
}

/// Weighted per-region sums Σ_{i∈R} wᵢ fᵢ, accumulated in node order.
pub fn partition_sums(weights: &[f64], f: &[f64], partition: &BinPartition) -> Result<Vec<f64>> {
    if f.len() != weights.len() || partition.region_of.len() != weights.len() {
        return Err(invalid("samples, weights and partition must have equal length"));
    }
    if partition.n_regions == 0 {
        return Err(invalid("empty partition"));
    }
    let mut out = vec![0.0; partition.n_regions];
    for ((&w, &v), &r) in weights.iter().zip(f).zip(&partition.region_of) {
        out[r] += w * v;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral() {
        let g = MomentumGrid::gauss_legendre(6.0, 128, 128).unwrap();
        let f: Vec<f64> = g.points().iter().map(|p| (-p.norm_sqr()).exp()).collect();
        assert!((g.integrate(&f) - PI.powf(1.5)).abs() < 1e-8);
        let c = MomentumGrid::composite(6.0, 0.25, 6).unwrap();
        let f: Vec<f64> = c.points().iter().map(|p| (-p.norm_sqr()).exp()).collect();
        assert!((c.integrate(&f) - PI.powf(1.5)).abs() < 1e-8);
        assert!(g.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn default_cutoff() {
        let p = default_p_max(0.44, 0.057);
        assert!((0.5 * p * p - 1.45).abs() < 1e-12);
    }

    #[test]
    fn too_small_grid() {
        assert!(MomentumGrid::gauss_legendre(1.0, 8, 32).is_err());
        assert!(MomentumGrid::gauss_legendre(-1.0, 32, 32).is_err());
    }

    #[test]
    fn partitions_cover() {
        let g = MomentumGrid::composite(1.0, 0.05, 4).unwrap();
        let f: Vec<f64> = g.points().iter().map(|p| (-2.0 * p.norm_sqr()).exp() * (1.0 + p.par)).collect();
        let total = g.integrate(&f);
        for part in [
            BinPartition::coarse(&g, 0.1).unwrap(),
            BinPartition::coarse(&g, 0.37).unwrap(),
            BinPartition::yield_only(&g),
            BinPartition::full(&g),
            BinPartition::spectral_coarse(&g, 0.05).unwrap(),
        ] {
            let s = partition_sums(g.weights(), &f, &part).unwrap();
            assert!((s.iter().sum::<f64>() - total).abs() < 1e-12);
            let mut seen = vec![false; g.len()];
            for r in part.regions() {
                for i in r {
                    assert!(!seen[i]);
                    seen[i] = true;
                }
            }
            assert!(seen.iter().all(|&b| b));
        }
        let y = partition_sums(g.weights(), &f, &BinPartition::yield_only(&g)).unwrap();
        assert_eq!(y.len(), 1);
        let huge = partition_sums(g.weights(), &f, &BinPartition::coarse(&g, 1e6).unwrap()).unwrap();
        // bins are aligned at zero, so a huge dp still separates the p∥ < 0 half
        assert_eq!(huge.len(), 2);
        assert!((huge[0] + huge[1] - y[0]).abs() < 1e-14);
        let c = BinPartition::coarse(&g, 0.1).unwrap();
        assert_eq!(c.n_regions(), 20 * 10);
    }

    #[test]
    fn spectrum_normalization() {
        let eg = EnergyGrid::new(6.0, 0.25, 6, 24).unwrap();
        let f: Vec<f64> = eg.points().iter().map(|p| (-p.norm_sqr()).exp()).collect();
        let spec = eg.energy_spectrum(&f);
        assert!((eg.integrate_spectrum(&spec) - eg.integrate(&f)).abs() < 1e-12);
        assert!((eg.integrate(&f) - PI.powf(1.5)).abs() < 1e-8);
        let zero = eg.energy_spectrum(&vec![0.0; eg.len()]);
        assert!(zero.iter().all(|&v| v == 0.0));
    }
}
