//! Exact distances between lifted measures of an abelian group without
//! materializing the atoms.
//!
//! When `G` is a torus and every level net is a subgroup, the atoms of the
//! level-`n` lift of `δ_x` form the coset `a_x + Γ_n`, where
//! `a_x = (0, …, 0, x)`, `Γ_0 = {0}` and `Γ_{i+1} = {(k, k + τ) : k ∈ H_i,
//! τ ∈ Γ_i}` with `H_i` the level-`i` net. Translating by `Γ_n` is an
//! isometry of any coordinatewise cost, so the optimal coupling between two
//! such uniform measures is a translate and
//!
//! `W2² = min_{γ ∈ Γ_n} Σ_s c(x_s − y_s − γ_s)`.
//!
//! Unrolled, `γ = Σ_i [0, …, 0, k_i, k_i]` where the block `(k_i, k_i)`
//! fills the last `2^{i+1}` slots. Choosing `k_{n−1}, …, k_0` in that order
//! fixes the slots slab by slab, which drives a depth-first branch and bound.

use std::f64::consts::TAU;

use super::net_pattern;
use crate::error::{Error, Result};
use crate::groups::{circle_distance, GroupSpec};

/// Orbit minimization for one tower level of a toroidal group.
pub struct OrbitSearch {
    level: usize,
    /// Circumference and metric scale of each flat coordinate of `G`.
    layout: Vec<(f64, f64)>,
    /// `signs[s][i]`: coefficient of `k_i`'s pattern sign at slot `s`.
    signs: Vec<Vec<i8>>,
    /// Per lift level, the flat coordinates of the net points.
    candidates: Vec<Vec<Vec<f64>>>,
}

/// Per-slot cost of a coordinate difference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SlotCost {
    /// Squared geodesic distance in the level group.
    Intrinsic,
    /// Squared chord after the embedding scaled by `M`.
    Chordal { scale: f64 },
}

impl OrbitSearch {
    /// `nets[i]` is the resolution of the net used for lift `i`; only the
    /// first `level` are used.
    pub fn new(group: &GroupSpec, level: usize, nets: &[usize], seed: u64) -> Result<Self> {
        let layout = group.torus_layout().ok_or_else(|| {
            Error::InvalidConfig("orbit search needs an abelian (toroidal) group".into())
        })?;
        if nets.len() < level {
            return Err(Error::InvalidConfig(format!(
                "{} nets for level {level}",
                nets.len()
            )));
        }
        let candidates = nets[..level]
            .iter()
            .map(|&q| {
                group
                    .net_with_seed(q, seed)?
                    .elements
                    .iter()
                    .map(|t| group.to_coordinates(t))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let slots = 1usize << level;
        let patterns: Vec<Vec<i8>> = (0..level).map(net_pattern).collect();
        let signs = (0..slots)
            .map(|s| {
                (0..level)
                    .map(|i| {
                        let start = slots - (2usize << i);
                        if s >= start {
                            patterns[i][(s - start) % (1 << i)]
                        } else {
                            0
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            level,
            layout,
            signs,
            candidates,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Number of atoms in each lifted measure.
    pub fn orbit_size(&self) -> usize {
        self.candidates.iter().map(Vec::len).product()
    }

    fn slot_cost(&self, diff: &[f64], cost: SlotCost) -> f64 {
        match cost {
            SlotCost::Intrinsic => {
                let level_scale = (1u64 << self.level) as f64;
                level_scale
                    * diff
                        .iter()
                        .zip(&self.layout)
                        .map(|(d, (c, s))| (s * circle_distance(*d, 0.0, *c)).powi(2))
                        .sum::<f64>()
            }
            SlotCost::Chordal { scale } => diff
                .iter()
                .zip(&self.layout)
                .map(|(d, (c, s))| {
                    let radius = scale * s * c / TAU;
                    (2.0 * radius * (TAU * d / (2.0 * c)).sin()).powi(2)
                })
                .sum(),
        }
    }

    /// `W2` between the level lifts of `δ_x` and `δ_y`, given as flat
    /// coordinates.
    pub fn distance(&self, x: &[f64], y: &[f64], cost: SlotCost) -> Result<f64> {
        let d = self.layout.len();
        for v in [x, y] {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
        }
        let delta: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        if self.level == 0 {
            return Ok(self.slot_cost(&delta, cost).sqrt());
        }
        let mut state = Search {
            owner: self,
            cost,
            delta,
            chosen: vec![0; self.level],
            best: f64::INFINITY,
        };
        state.descend(self.level - 1, 0.0);
        Ok(state.best.sqrt())
    }
}

struct Search<'a> {
    owner: &'a OrbitSearch,
    cost: SlotCost,
    delta: Vec<f64>,
    chosen: Vec<usize>,
    best: f64,
}

impl Search<'_> {
    /// Slots settled once `k_j` is chosen.
    fn slab(&self, j: usize) -> std::ops::Range<usize> {
        let slots = 1usize << self.owner.level;
        let start = slots - (2usize << j);
        let end = if j == 0 { slots } else { slots - (1 << j) };
        start..end
    }

    fn descend(&mut self, j: usize, partial: f64) {
        let owner = self.owner;
        let d = owner.layout.len();
        let slab = self.slab(j);
        let last = (1usize << owner.level) - 1;

        // Contribution of the already fixed higher levels to each slot.
        let base: Vec<Vec<f64>> = slab
            .clone()
            .map(|s| {
                let mut v = if s == last { self.delta.clone() } else { vec![0.0; d] };
                for i in j + 1..owner.level {
                    let sign = owner.signs[s][i] as f64;
                    if sign != 0.0 {
                        let t = &owner.candidates[i][self.chosen[i]];
                        for c in 0..d {
                            v[c] -= sign * t[c];
                        }
                    }
                }
                v
            })
            .collect();

        let mut scored: Vec<(f64, usize)> = owner.candidates[j]
            .iter()
            .enumerate()
            .map(|(idx, t)| {
                let mut total = 0.0;
                let mut diff = vec![0.0; d];
                for (s, b) in slab.clone().zip(&base) {
                    let sign = owner.signs[s][j] as f64;
                    for c in 0..d {
                        diff[c] = b[c] - sign * t[c];
                    }
                    total += owner.slot_cost(&diff, self.cost);
                }
                (total, idx)
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        for (slab_cost, idx) in scored {
            let value = partial + slab_cost;
            if value >= self.best {
                break;
            }
            self.chosen[j] = idx;
            if j == 0 {
                self.best = value;
            } else {
                self.descend(j - 1, value);
            }
        }
    }
}
