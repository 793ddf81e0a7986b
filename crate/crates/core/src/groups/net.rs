//! Finite nets of compact groups.
//!
//! Torus nets are the regular grids `{j·L/q}`; their covering radius is
//! known in closed form. SU(2) nets are the first `q` points of a farthest
//! point ordering of a fixed seeded pool that starts at the identity, so
//! nets for increasing `q` are nested. Their covering radius is measured
//! against a seeded probe set.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{random_unit_quaternion, sphere_angle, GroupElement, GroupSpec};
use crate::error::{Error, Result};

pub(super) const DEFAULT_SEED: u64 = 0x5eed_5002;

/// Candidates from which SU(2) nets are drawn.
pub const SU2_POOL_SIZE: usize = 16384;

/// Probe points used to measure SU(2) covering radii.
pub const SU2_PROBE_SIZE: usize = 100_000;

const MAX_NET_SIZE: usize = 1 << 24;

/// A finite subset of a group with its covering radius `mesh`: every group
/// element lies within `mesh` of some net point.
#[derive(Clone, Debug, PartialEq)]
pub struct Net {
    pub elements: Vec<GroupElement>,
    pub mesh: f64,
}

impl Net {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

pub(super) fn build(spec: &GroupSpec, q: usize, seed: u64) -> Result<Net> {
    if q == 0 {
        return Err(Error::InvalidConfig("net resolution must be positive".into()));
    }
    match spec {
        GroupSpec::Torus { circumference, .. } => torus_net(circumference, q),
        GroupSpec::Su2 { radius } => {
            let points = su2_points(q, seed)?;
            let mesh = radius * su2_covering_angle(&points, &su2_probe_set(SU2_PROBE_SIZE, seed));
            Ok(Net {
                elements: points.into_iter().map(GroupElement::Su2).collect(),
                mesh,
            })
        }
        GroupSpec::Product { factors } => {
            let nets = factors
                .iter()
                .map(|f| build(f, q, seed))
                .collect::<Result<Vec<_>>>()?;
            let size = nets
                .iter()
                .try_fold(1usize, |acc, n| acc.checked_mul(n.len()))
                .filter(|s| *s <= MAX_NET_SIZE)
                .ok_or_else(|| Error::InvalidConfig(format!("product net with q = {q} is too large")))?;
            let mut elements = Vec::with_capacity(size);
            let mut index = vec![0usize; nets.len()];
            for _ in 0..size {
                elements.push(GroupElement::Product(
                    nets.iter().zip(&index).map(|(n, &i)| n.elements[i].clone()).collect(),
                ));
                for k in (0..nets.len()).rev() {
                    index[k] += 1;
                    if index[k] < nets[k].len() {
                        break;
                    }
                    index[k] = 0;
                }
            }
            let mesh = nets.iter().map(|n| n.mesh * n.mesh).sum::<f64>().sqrt();
            Ok(Net { elements, mesh })
        }
        GroupSpec::Scaled { base, factor } => {
            let net = build(base, q, seed)?;
            Ok(Net {
                elements: net.elements,
                mesh: factor * net.mesh,
            })
        }
    }
}

fn torus_net(circumference: &[f64], q: usize) -> Result<Net> {
    let d = circumference.len();
    let size = (0..d)
        .try_fold(1usize, |acc, _| acc.checked_mul(q))
        .filter(|s| *s <= MAX_NET_SIZE)
        .ok_or_else(|| Error::InvalidConfig(format!("torus net {q}^{d} is too large")))?;
    let mut elements = Vec::with_capacity(size);
    let mut index = vec![0usize; d];
    for _ in 0..size {
        elements.push(GroupElement::Torus(
            index
                .iter()
                .zip(circumference)
                .map(|(&j, c)| j as f64 * c / q as f64)
                .collect(),
        ));
        for k in (0..d).rev() {
            index[k] += 1;
            if index[k] < q {
                break;
            }
            index[k] = 0;
        }
    }
    let mesh = circumference
        .iter()
        .map(|c| (c / (2.0 * q as f64)).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(Net { elements, mesh })
}

fn su2_points(q: usize, seed: u64) -> Result<Vec<[f64; 4]>> {
    if q > SU2_POOL_SIZE {
        return Err(Error::InvalidConfig(format!(
            "SU(2) nets are limited to {SU2_POOL_SIZE} points, asked for {q}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = Vec::with_capacity(SU2_POOL_SIZE);
    pool.push([1.0, 0.0, 0.0, 0.0]);
    while pool.len() < SU2_POOL_SIZE {
        pool.push(random_unit_quaternion(&mut rng));
    }

    let mut chosen = vec![pool[0]];
    let mut nearest: Vec<f64> = pool.iter().map(|p| sphere_angle(p, &pool[0])).collect();
    while chosen.len() < q {
        let (far, _) = nearest
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        let p = pool[far];
        chosen.push(p);
        nearest
            .par_iter_mut()
            .zip(&pool)
            .for_each(|(d, x)| *d = d.min(sphere_angle(x, &p)));
    }
    Ok(chosen)
}

/// Deterministic uniform sample of unit quaternions.
pub fn su2_probe_set(n: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..n).map(|_| random_unit_quaternion(&mut rng)).collect()
}

/// Largest angle from a probe point to its nearest net point.
fn su2_covering_angle(net: &[[f64; 4]], probes: &[[f64; 4]]) -> f64 {
    probes
        .par_iter()
        .map(|p| net.iter().map(|x| sphere_angle(p, x)).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max)
}
