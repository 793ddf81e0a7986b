//! The lifting tower `G ← √2G × √2G ← … ← (MG)^{M²}`, `M = 2^{m/2}`.
//!
//! A point `x ∈ G` starts as `δ_x`, is lifted level by level to a uniform
//! measure on the fibre of the fold map `(A, B) ↦ A⁻¹B`, and at level `m` is
//! pushed into `E^{k·M²}` by `M` times the isometric embedding of `G` applied
//! coordinatewise. Level groups are stored flat: a level-`i` element is a
//! tuple of `2^i` elements of `G` with metric `√2^i` times the ℓ²-product.

mod orbit;
mod pipeline;

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

pub use orbit::{OrbitSearch, SlotCost};
pub use pipeline::{
    run_pipeline, PairRecord, PipelineReport, Route, Timings, PROJECTION_TOLERANCE, UPPER_BOUND_SLACK,
};

use crate::error::{Error, Result};
use crate::groups::{GroupElement, GroupSpec};
use crate::transport::DiscreteMeasure;

pub const DEFAULT_ATOM_CAP: usize = 2048;

/// Largest supported depth; level groups have `2^m` coordinates.
pub const MAX_DEPTH: usize = 16;

/// How final distances are computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteChoice {
    /// Assignment when the atom count fits the cap, orbit search otherwise.
    #[default]
    Auto,
    Assignment,
    Orbit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct TowerConfig {
    pub group: GroupSpec,
    pub depth: usize,
    /// Net resolution used at each of the `depth` lifts.
    pub nets: Vec<usize>,
    pub cap: usize,
    pub route: RouteChoice,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    group: GroupSpec,
    depth: usize,
    #[serde(default)]
    nets: Option<Vec<usize>>,
    #[serde(default)]
    density: Option<usize>,
    #[serde(default = "default_cap")]
    cap: usize,
    #[serde(default)]
    route: RouteChoice,
    #[serde(default)]
    seed: u64,
}

fn default_cap() -> usize {
    DEFAULT_ATOM_CAP
}

impl TryFrom<RawConfig> for TowerConfig {
    type Error = Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        let nets = match (raw.nets, raw.density) {
            (Some(nets), None) => nets,
            (None, Some(q)) => density_nets(raw.depth, q)?,
            (None, None) if raw.depth == 0 => Vec::new(),
            _ => {
                return Err(Error::InvalidConfig(
                    "give exactly one of `nets` and `density`".into(),
                ))
            }
        };
        let config = TowerConfig {
            group: raw.group,
            depth: raw.depth,
            nets,
            cap: raw.cap,
            route: raw.route,
            seed: raw.seed,
        };
        config.validate()?;
        Ok(config)
    }
}

/// `q·2^i` at level `i`: constant point density per unit length of the
/// level group's diagonal.
fn density_nets(depth: usize, q: usize) -> Result<Vec<usize>> {
    if depth > MAX_DEPTH {
        return Err(Error::InvalidConfig(format!("depth {depth} exceeds {MAX_DEPTH}")));
    }
    (0..depth)
        .map(|i| {
            q.checked_mul(1 << i)
                .ok_or_else(|| Error::InvalidConfig("net size overflows".into()))
        })
        .collect()
}

impl TowerConfig {
    pub fn new(group: GroupSpec, depth: usize, nets: Vec<usize>) -> Result<Self> {
        let config = Self {
            group,
            depth,
            nets,
            cap: DEFAULT_ATOM_CAP,
            route: RouteChoice::Auto,
            seed: 0,
        };
        config.validate()?;
        Ok(config)
    }

    /// Nets of size `q·2^i` at level `i`.
    pub fn with_density(group: GroupSpec, depth: usize, q: usize) -> Result<Self> {
        Self::new(group, depth, density_nets(depth, q)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "depth must be even, got {}",
                self.depth
            )));
        }
        if self.depth > MAX_DEPTH {
            return Err(Error::InvalidConfig(format!(
                "depth {} exceeds {MAX_DEPTH}",
                self.depth
            )));
        }
        if self.nets.len() != self.depth {
            return Err(Error::InvalidConfig(format!(
                "{} net sizes for depth {}",
                self.nets.len(),
                self.depth
            )));
        }
        if self.nets.contains(&0) {
            return Err(Error::InvalidConfig("net sizes must be positive".into()));
        }
        if self.cap == 0 {
            return Err(Error::InvalidConfig("atom cap must be positive".into()));
        }
        Ok(())
    }

    /// `M = 2^{m/2}`.
    pub fn scale(&self) -> f64 {
        (1u64 << (self.depth / 2)) as f64
    }

    /// Flat description of the level-`i` group: `√2^i · G^{2^i}`.
    pub fn level_group(&self, level: usize) -> Result<GroupSpec> {
        flat_level_group(&self.group, level)
    }
}

pub fn flat_level_group(group: &GroupSpec, level: usize) -> Result<GroupSpec> {
    if level == 0 {
        return Ok(group.clone());
    }
    GroupSpec::scaled(
        GroupSpec::product(vec![group.clone(); 1 << level])?,
        SQRT_2.powi(level as i32),
    )
}

/// Level groups `0..=m` as nested products: level `i+1` is `√2(L_i × L_i)`.
pub fn build_tower(config: &TowerConfig) -> Result<Vec<GroupSpec>> {
    config.validate()?;
    let mut levels = vec![config.group.clone()];
    for _ in 0..config.depth {
        let last = levels.last().unwrap().clone();
        levels.push(GroupSpec::scaled(GroupSpec::product(vec![last.clone(), last])?, SQRT_2)?);
    }
    Ok(levels)
}

/// Nested element of [`build_tower`]'s level `level` from a flat tuple.
pub fn nest(tuple: &[GroupElement], level: usize) -> Result<GroupElement> {
    if tuple.len() != 1 << level {
        return Err(Error::DimensionMismatch {
            expected: 1 << level,
            found: tuple.len(),
        });
    }
    if level == 0 {
        return Ok(tuple[0].clone());
    }
    let (a, b) = tuple.split_at(tuple.len() / 2);
    Ok(GroupElement::Product(vec![nest(a, level - 1)?, nest(b, level - 1)?]))
}

/// Sign pattern of the level-`i` net: `w_0 = (1)`, `w_{i+1} = (−w_i, w_i)`.
pub fn net_pattern(level: usize) -> Vec<i8> {
    let mut w = vec![1i8];
    for _ in 0..level {
        let mut next: Vec<i8> = w.iter().map(|s| -s).collect();
        next.extend_from_slice(&w);
        w = next;
    }
    w
}

/// The level-`i` net: `{(t^{w_k})_k : t ∈ net(G, q)}`, a copy of a net of
/// `G` inside the level group. Returns the tuples and the covering radius of
/// the copy, `2^i · mesh(net(G, q))`.
pub fn level_net(
    group: &GroupSpec,
    level: usize,
    q: usize,
    seed: u64,
) -> Result<(Vec<Vec<GroupElement>>, f64)> {
    let base = group.net_with_seed(q, seed)?;
    let pattern = net_pattern(level);
    let tuples = base
        .elements
        .iter()
        .map(|t| {
            let inv = group.inverse(t)?;
            Ok(pattern
                .iter()
                .map(|&s| if s > 0 { t.clone() } else { inv.clone() })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok((tuples, (1u64 << level) as f64 * base.mesh))
}

/// Uniform measure on tuples of level `level`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedMeasure {
    pub level: usize,
    pub atoms: Vec<Vec<GroupElement>>,
    pub weights: Vec<f64>,
}

impl LiftedMeasure {
    pub fn dirac(x: GroupElement) -> Self {
        Self {
            level: 0,
            atoms: vec![vec![x]],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

fn compose_tuple(group: &GroupSpec, a: &[GroupElement], b: &[GroupElement]) -> Result<Vec<GroupElement>> {
    a.iter().zip(b).map(|(x, y)| group.compose(x, y)).collect()
}

/// Atoms `(g, g·u)` for `g ∈ S`, `u` an atom of `mu`, weight `w(u)/|S|`.
pub fn lift_measure(
    group: &GroupSpec,
    mu: &LiftedMeasure,
    net: &[Vec<GroupElement>],
) -> Result<LiftedMeasure> {
    if net.is_empty() {
        return Err(Error::InvalidConfig("empty net".into()));
    }
    let width = 1usize << mu.level;
    if let Some(bad) = net.iter().find(|g| g.len() != width) {
        return Err(Error::DimensionMismatch {
            expected: width,
            found: bad.len(),
        });
    }
    let share = 1.0 / net.len() as f64;
    let mut atoms = Vec::with_capacity(net.len() * mu.len());
    let mut weights = Vec::with_capacity(net.len() * mu.len());
    for g in net {
        for (u, w) in mu.atoms.iter().zip(&mu.weights) {
            let mut atom = g.clone();
            atom.extend(compose_tuple(group, g, u)?);
            atoms.push(atom);
            weights.push(w * share);
        }
    }
    Ok(LiftedMeasure {
        level: mu.level + 1,
        atoms,
        weights,
    })
}

/// `(A, B) ↦ A⁻¹B` componentwise; halves the tuple length.
pub fn fold(group: &GroupSpec, atom: &[GroupElement]) -> Result<Vec<GroupElement>> {
    if atom.len() < 2 || atom.len() % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "cannot fold a tuple of length {}",
            atom.len()
        )));
    }
    let (a, b) = atom.split_at(atom.len() / 2);
    a.iter().zip(b).map(|(x, y)| group.divide(x, y)).collect()
}

/// Atom number `index` of the level-`nets.len()` lift of `δ_x`, in the
/// order produced by repeated [`lift_measure`].
pub fn lifted_atom(
    group: &GroupSpec,
    x: &GroupElement,
    nets: &[Vec<Vec<GroupElement>>],
    mut index: usize,
) -> Result<Vec<GroupElement>> {
    let total: usize = nets.iter().map(Vec::len).product();
    if index >= total {
        return Err(Error::InvalidConfig(format!(
            "atom index {index} out of range {total}"
        )));
    }
    // lift_measure puts the net index outermost, so the last level's choice
    // is the most significant digit.
    let mut digits = vec![0; nets.len()];
    let mut stride = total;
    for i in (0..nets.len()).rev() {
        stride /= nets[i].len();
        digits[i] = index / stride;
        index %= stride;
    }
    let mut atom = vec![x.clone()];
    for (i, net) in nets.iter().enumerate() {
        let g = &net[digits[i]];
        let mut next = g.clone();
        next.extend(compose_tuple(group, g, &atom)?);
        atom = next;
    }
    Ok(atom)
}

/// `F_m`: `M·f` applied to every coordinate of a level-`m` atom.
pub fn embed_atom(config: &TowerConfig, atom: &[GroupElement]) -> Result<Vec<f64>> {
    if atom.len() != 1 << config.depth {
        return Err(Error::DimensionMismatch {
            expected: 1 << config.depth,
            found: atom.len(),
        });
    }
    let scaled = GroupSpec::scaled(config.group.clone(), config.scale())?;
    let mut out = Vec::with_capacity(atom.len() * scaled.embed_dim());
    for g in atom {
        out.extend(scaled.embed(g)?);
    }
    Ok(out)
}

/// Push-forward of a level-`m` lift into `E^{k·M²}`.
pub fn embed_level_m(mu: &LiftedMeasure, config: &TowerConfig) -> Result<DiscreteMeasure<Vec<f64>>> {
    if mu.level != config.depth {
        return Err(Error::InvalidConfig(format!(
            "measure is at level {}, embedding needs level {}",
            mu.level, config.depth
        )));
    }
    let atoms = mu
        .atoms
        .iter()
        .map(|a| embed_atom(config, a))
        .collect::<Result<Vec<_>>>()?;
    DiscreteMeasure::new(atoms, mu.weights.clone())
}

/// Inverse embedding per coordinate, then `m` folds.
pub fn project_back(p: &[f64], config: &TowerConfig) -> Result<GroupElement> {
    let scaled = GroupSpec::scaled(config.group.clone(), config.scale())?;
    let k = scaled.embed_dim();
    let slots = 1usize << config.depth;
    if p.len() != k * slots {
        return Err(Error::DimensionMismatch {
            expected: k * slots,
            found: p.len(),
        });
    }
    let mut tuple = p
        .chunks(k)
        .map(|chunk| scaled.embed_inverse(chunk))
        .collect::<Result<Vec<_>>>()?;
    while tuple.len() > 1 {
        tuple = fold(&config.group, &tuple)?;
    }
    Ok(tuple.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::f64::consts::{PI, TAU};

    fn circle() -> GroupSpec {
        GroupSpec::circle(TAU).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(TowerConfig::new(circle(), 1, vec![4]).is_err());
        assert!(TowerConfig::new(circle(), 2, vec![4]).is_err());
        assert!(TowerConfig::new(circle(), 2, vec![4, 0]).is_err());
        let c = TowerConfig::with_density(circle(), 4, 16).unwrap();
        assert_eq!(c.nets, vec![16, 32, 64, 128]);
        assert_eq!(c.scale(), 4.0);

        let parsed: TowerConfig = serde_json::from_str(
            r#"{"group":{"kind":"torus","circumference":6.283185307179586},"depth":2,"density":8}"#,
        )
        .unwrap();
        assert_eq!(parsed.nets, vec![8, 16]);
        assert_eq!(parsed.cap, DEFAULT_ATOM_CAP);
        let text = serde_json::to_string(&parsed).unwrap();
        assert_eq!(serde_json::from_str::<TowerConfig>(&text).unwrap(), parsed);
        assert!(serde_json::from_str::<TowerConfig>(
            r#"{"group":{"kind":"su2"},"depth":2,"density":8,"nets":[1,2]}"#
        )
        .is_err());
    }

    #[test]
    fn tower_levels() {
        let config = TowerConfig::new(circle(), 2, vec![2, 2]).unwrap();
        let levels = build_tower(&config).unwrap();
        assert_eq!(levels.len(), 3);
        assert_eq!(levels[0], circle());
        assert_eq!(levels[2].coordinate_len(), 4);
        assert_eq!(build_tower(&TowerConfig::new(circle(), 0, vec![]).unwrap()).unwrap().len(), 1);

        // Nested and flat level groups agree, and the top level is (2G)^4.
        let t = |v: f64| GroupElement::Torus(vec![v]);
        let a = vec![t(0.1), t(1.0), t(2.0), t(3.0)];
        let b = vec![t(0.4), t(0.2), t(5.0), t(3.3)];
        let nested = levels[2]
            .distance(&nest(&a, 2).unwrap(), &nest(&b, 2).unwrap())
            .unwrap();
        let flat = config.level_group(2).unwrap();
        let top = GroupSpec::product(vec![GroupSpec::scaled(circle(), 2.0).unwrap(); 4]).unwrap();
        let (ea, eb) = (GroupElement::Product(a), GroupElement::Product(b));
        assert!((flat.distance(&ea, &eb).unwrap() - nested).abs() < 1e-12);
        assert!((top.distance(&ea, &eb).unwrap() - nested).abs() < 1e-12);
    }

    #[test]
    fn lift_of_identity_folds_back() {
        let g = circle();
        let (net, _) = level_net(&g, 0, 4, 0).unwrap();
        let lifted = lift_measure(&g, &LiftedMeasure::dirac(g.identity()), &net).unwrap();
        assert_eq!(lifted.len(), 4);
        assert!(lifted.weights.iter().all(|w| *w == 0.25));
        for atom in &lifted.atoms {
            assert_eq!(atom[0], atom[1]);
            assert_eq!(fold(&g, atom).unwrap(), vec![g.identity()]);
        }
    }

    #[test]
    fn indexed_atoms_match_lifts() {
        for g in [circle(), GroupSpec::su2(1.0).unwrap()] {
            let x = g.random_element(&mut rand_chacha::ChaCha8Rng::seed_from_u64(5));
            let nets: Vec<_> = (0..3).map(|i| level_net(&g, i, 3 + i, 0).unwrap().0).collect();
            let mut mu = LiftedMeasure::dirac(x.clone());
            for net in &nets {
                mu = lift_measure(&g, &mu, net).unwrap();
            }
            for (k, atom) in mu.atoms.iter().enumerate() {
                assert_eq!(&lifted_atom(&g, &x, &nets, k).unwrap(), atom);
            }
            assert!(lifted_atom(&g, &x, &nets, mu.len()).is_err());
        }
    }

    #[test]
    fn embedding_and_projection() {
        let g = circle();
        let config = TowerConfig::new(g.clone(), 0, vec![]).unwrap();
        let e = embed_level_m(&LiftedMeasure::dirac(g.identity()), &config).unwrap();
        assert_eq!(e.atoms(), &[vec![1.0, 0.0]]);

        let config = TowerConfig::new(g.clone(), 2, vec![8, 8]).unwrap();
        let x = GroupElement::Torus(vec![2.0]);
        let mut mu = LiftedMeasure::dirac(x.clone());
        for i in 0..2 {
            mu = lift_measure(&g, &mu, &level_net(&g, i, 8, 0).unwrap().0).unwrap();
        }
        assert!(embed_level_m(&LiftedMeasure::dirac(x.clone()), &config).is_err());
        let image = embed_level_m(&mu, &config).unwrap();
        assert_eq!(image.len(), 64);
        for p in image.atoms() {
            assert_eq!(p.len(), 8);
            let back = project_back(p, &config).unwrap();
            assert!(g.distance(&back, &x).unwrap() < 1e-9);
        }
        let mut off = image.atoms()[0].clone();
        off[0] += 0.1;
        assert!(matches!(project_back(&off, &config), Err(Error::OffManifold { .. })));
        // The antipode check of the scaled chord.
        let chord = crate::numeric::euclidean(
            &embed_atom(&TowerConfig::new(g.clone(), 0, vec![]).unwrap(), &[g.identity()]).unwrap(),
            &embed_atom(&TowerConfig::new(g, 0, vec![]).unwrap(), &[GroupElement::Torus(vec![PI])]).unwrap(),
        );
        assert!((chord - 2.0).abs() < 1e-15);
    }
}
