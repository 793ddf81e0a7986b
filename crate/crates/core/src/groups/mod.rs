//! Compact groups with bi-invariant metrics: flat tori and SU(2) ≅ S³,
//! closed under ℓ²-products and metric scaling.
//!
//! Every group carries an explicit Riemannian-isometric embedding into a
//! Euclidean space: each torus coordinate circle of circumference `L` goes
//! to the round circle of radius `L/2π`, and SU(2) of radius `r` to the
//! sphere of radius `r` in `E⁴`.

mod net;

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use net::{su2_probe_set, Net, SU2_POOL_SIZE, SU2_PROBE_SIZE};

use crate::error::{Error, Result};

/// Default distance of a point to the embedded submanifold accepted by
/// [`GroupSpec::embed_inverse`].
pub const EMBEDDING_TOLERANCE: f64 = 1e-6;

/// Quaternion norm tolerance for user-supplied SU(2) elements.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// A compact group with a bi-invariant metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", try_from = "RawGroupSpec")]
pub enum GroupSpec {
    /// Flat torus; one circumference per coordinate.
    Torus {
        dims: usize,
        #[serde(serialize_with = "scalar_or_list")]
        circumference: Vec<f64>,
    },
    /// Unit quaternions with the round metric of the sphere of `radius`.
    Su2 { radius: f64 },
    /// ℓ²-product of the factors.
    Product { factors: Vec<GroupSpec> },
    /// The base group with every distance multiplied by `factor`.
    Scaled { base: Box<GroupSpec>, factor: f64 },
}

fn scalar_or_list<S: Serializer>(values: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    match values {
        [first, rest @ ..] if rest.iter().all(|v| v == first) => s.serialize_f64(*first),
        _ => values.serialize(s),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

fn deserialize_circumference<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ScalarOrList, D::Error> {
    ScalarOrList::deserialize(d)
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawGroupSpec {
    Torus {
        #[serde(default = "one")]
        dims: usize,
        #[serde(deserialize_with = "deserialize_circumference")]
        circumference: ScalarOrList,
    },
    Su2 {
        #[serde(default = "unit")]
        radius: f64,
    },
    Product {
        factors: Vec<GroupSpec>,
    },
    Scaled {
        base: Box<GroupSpec>,
        factor: f64,
    },
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl TryFrom<RawGroupSpec> for GroupSpec {
    type Error = Error;

    fn try_from(raw: RawGroupSpec) -> Result<Self> {
        match raw {
            RawGroupSpec::Torus {
                dims,
                circumference: ScalarOrList::Scalar(c),
            } => GroupSpec::torus(dims, c),
            RawGroupSpec::Torus {
                dims,
                circumference: ScalarOrList::List(cs),
            } => {
                if cs.len() != dims {
                    return Err(Error::InvalidGroup(format!(
                        "{} circumferences for a {dims}-dimensional torus",
                        cs.len()
                    )));
                }
                GroupSpec::torus_with(cs)
            }
            RawGroupSpec::Su2 { radius } => GroupSpec::su2(radius),
            RawGroupSpec::Product { factors } => GroupSpec::product(factors),
            RawGroupSpec::Scaled { base, factor } => GroupSpec::scaled(*base, factor),
        }
    }
}

/// An element of a [`GroupSpec`]. Scaled groups share their base's elements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupElement {
    Torus(Vec<f64>),
    Su2([f64; 4]),
    Product(Vec<GroupElement>),
}

fn positive(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidGroup(format!("{what} must be positive, got {v}")))
    }
}

fn mismatch(spec: &GroupSpec, g: &GroupElement) -> Error {
    Error::KindMismatch(format!("{} element for a {} group", g.kind(), spec.kind()))
}

/// Shortest distance between two angles on a circle of circumference `c`.
pub fn circle_distance(a: f64, b: f64, c: f64) -> f64 {
    let d = (a - b).rem_euclid(c);
    d.min(c - d)
}

/// Reduces a coordinate into `[0, c)`.
pub fn reduce(x: f64, c: f64) -> f64 {
    let r = x.rem_euclid(c);
    if r >= c {
        0.0
    } else {
        r
    }
}

/// Chord over arc for an arc of length `s` on a circle of radius `radius`.
fn chord_ratio(s: f64, radius: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        2.0 * radius * (s / (2.0 * radius)).sin() / s
    }
}

pub fn quat_mul(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    let [w1, x1, y1, z1] = *a;
    let [w2, x2, y2, z2] = *b;
    [
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ]
}

fn quat_conj(a: &[f64; 4]) -> [f64; 4] {
    [a[0], -a[1], -a[2], -a[3]]
}

fn quat_normalize(a: &[f64; 4]) -> [f64; 4] {
    let n = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    [a[0] / n, a[1] / n, a[2] / n, a[3] / n]
}

/// Great-circle angle between unit quaternions, stable near 0 and π.
pub fn sphere_angle(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let mut diff = 0.0;
    let mut sum = 0.0;
    for k in 0..4 {
        diff += (a[k] - b[k]) * (a[k] - b[k]);
        sum += (a[k] + b[k]) * (a[k] + b[k]);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

impl GroupElement {
    fn kind(&self) -> &'static str {
        match self {
            GroupElement::Torus(_) => "torus",
            GroupElement::Su2(_) => "su2",
            GroupElement::Product(_) => "product",
        }
    }
}

impl GroupSpec {
    pub fn circle(circumference: f64) -> Result<Self> {
        Self::torus(1, circumference)
    }

    pub fn torus(dims: usize, circumference: f64) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidGroup("torus needs at least one dimension".into()));
        }
        Self::torus_with(vec![circumference; dims])
    }

    pub fn torus_with(circumference: Vec<f64>) -> Result<Self> {
        if circumference.is_empty() {
            return Err(Error::InvalidGroup("torus needs at least one dimension".into()));
        }
        for c in &circumference {
            positive(*c, "circumference")?;
        }
        Ok(GroupSpec::Torus {
            dims: circumference.len(),
            circumference,
        })
    }

    pub fn su2(radius: f64) -> Result<Self> {
        Ok(GroupSpec::Su2 {
            radius: positive(radius, "radius")?,
        })
    }

    pub fn product(factors: Vec<GroupSpec>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidGroup("product needs at least one factor".into()));
        }
        Ok(GroupSpec::Product { factors })
    }

    /// `factor · base`; nested scalings collapse into one.
    pub fn scaled(base: GroupSpec, factor: f64) -> Result<Self> {
        let factor = positive(factor, "scale factor")?;
        Ok(match base {
            GroupSpec::Scaled { base, factor: inner } => GroupSpec::Scaled {
                base,
                factor: inner * factor,
            },
            other => GroupSpec::Scaled {
                base: Box::new(other),
                factor,
            },
        })
    }

    fn kind(&self) -> &'static str {
        match self {
            GroupSpec::Torus { .. } => "torus",
            GroupSpec::Su2 { .. } => "su2",
            GroupSpec::Product { .. } => "product",
            GroupSpec::Scaled { base, .. } => base.kind(),
        }
    }

    /// True when every factor is a torus.
    pub fn is_abelian(&self) -> bool {
        match self {
            GroupSpec::Torus { .. } => true,
            GroupSpec::Su2 { .. } => false,
            GroupSpec::Product { factors } => factors.iter().all(GroupSpec::is_abelian),
            GroupSpec::Scaled { base, .. } => base.is_abelian(),
        }
    }

    /// Checks kind, shape and (for SU(2)) unit norm.
    pub fn validate(&self, g: &GroupElement) -> Result<()> {
        match (self, g) {
            (GroupSpec::Torus { dims, .. }, GroupElement::Torus(x)) => {
                if x.len() != *dims {
                    return Err(Error::DimensionMismatch {
                        expected: *dims,
                        found: x.len(),
                    });
                }
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::KindMismatch("non-finite torus coordinate".into()));
                }
                Ok(())
            }
            (GroupSpec::Su2 { .. }, GroupElement::Su2(q)) => {
                let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (n - 1.0).abs() > UNIT_TOLERANCE {
                    return Err(Error::KindMismatch(format!("quaternion has norm {n}")));
                }
                Ok(())
            }
            (GroupSpec::Product { factors }, GroupElement::Product(parts)) => {
                if factors.len() != parts.len() {
                    return Err(Error::DimensionMismatch {
                        expected: factors.len(),
                        found: parts.len(),
                    });
                }
                factors.iter().zip(parts).try_for_each(|(f, p)| f.validate(p))
            }
            (GroupSpec::Scaled { base, .. }, g) => base.validate(g),
            (spec, g) => Err(mismatch(spec, g)),
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            GroupSpec::Torus { dims, .. } => GroupElement::Torus(vec![0.0; *dims]),
            GroupSpec::Su2 { .. } => GroupElement::Su2([1.0, 0.0, 0.0, 0.0]),
            GroupSpec::Product { factors } => {
                GroupElement::Product(factors.iter().map(GroupSpec::identity).collect())
            }
            GroupSpec::Scaled { base, .. } => base.identity(),
        }
    }

    /// Group multiplication `g · h`.
    pub fn compose(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        match (self, g, h) {
            (GroupSpec::Torus { circumference, .. }, GroupElement::Torus(a), GroupElement::Torus(b))
                if a.len() == circumference.len() && b.len() == circumference.len() =>
            {
                Ok(GroupElement::Torus(
                    a.iter()
                        .zip(b)
                        .zip(circumference)
                        .map(|((x, y), c)| reduce(x + y, *c))
                        .collect(),
                ))
            }
            (GroupSpec::Su2 { .. }, GroupElement::Su2(a), GroupElement::Su2(b)) => {
                Ok(GroupElement::Su2(quat_normalize(&quat_mul(a, b))))
            }
            (GroupSpec::Product { factors }, GroupElement::Product(a), GroupElement::Product(b))
                if a.len() == factors.len() && b.len() == factors.len() =>
            {
                Ok(GroupElement::Product(
                    factors
                        .iter()
                        .zip(a.iter().zip(b))
                        .map(|(f, (x, y))| f.compose(x, y))
                        .collect::<Result<_>>()?,
                ))
            }
            (GroupSpec::Scaled { base, .. }, g, h) => base.compose(g, h),
            (spec, g, h) => Err(if g.kind() == spec.kind() {
                mismatch(spec, h)
            } else {
                mismatch(spec, g)
            }),
        }
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement> {
        match (self, g) {
            (GroupSpec::Torus { circumference, .. }, GroupElement::Torus(a))
                if a.len() == circumference.len() =>
            {
                Ok(GroupElement::Torus(
                    a.iter()
                        .zip(circumference)
                        .map(|(x, c)| reduce(-x, *c))
                        .collect(),
                ))
            }
            (GroupSpec::Su2 { .. }, GroupElement::Su2(a)) => Ok(GroupElement::Su2(quat_conj(a))),
            (GroupSpec::Product { factors }, GroupElement::Product(a)) if a.len() == factors.len() => {
                Ok(GroupElement::Product(
                    factors
                        .iter()
                        .zip(a)
                        .map(|(f, x)| f.inverse(x))
                        .collect::<Result<_>>()?,
                ))
            }
            (GroupSpec::Scaled { base, .. }, g) => base.inverse(g),
            (spec, g) => Err(mismatch(spec, g)),
        }
    }

    /// `g⁻¹ · h`.
    pub fn divide(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.compose(&self.inverse(g)?, h)
    }

    /// Geodesic distance of the bi-invariant metric.
    pub fn distance(&self, g: &GroupElement, h: &GroupElement) -> Result<f64> {
        Ok(self.squared_distance(g, h)?.sqrt())
    }

    pub fn squared_distance(&self, g: &GroupElement, h: &GroupElement) -> Result<f64> {
        match (self, g, h) {
            (GroupSpec::Torus { circumference, .. }, GroupElement::Torus(a), GroupElement::Torus(b))
                if a.len() == circumference.len() && b.len() == circumference.len() =>
            {
                Ok(a.iter()
                    .zip(b)
                    .zip(circumference)
                    .map(|((x, y), c)| circle_distance(*x, *y, *c).powi(2))
                    .sum())
            }
            (GroupSpec::Su2 { radius }, GroupElement::Su2(a), GroupElement::Su2(b)) => {
                Ok((radius * sphere_angle(a, b)).powi(2))
            }
            (GroupSpec::Product { factors }, GroupElement::Product(a), GroupElement::Product(b))
                if a.len() == factors.len() && b.len() == factors.len() =>
            {
                factors
                    .iter()
                    .zip(a.iter().zip(b))
                    .map(|(f, (x, y))| f.squared_distance(x, y))
                    .sum()
            }
            (GroupSpec::Scaled { base, factor }, g, h) => {
                Ok(factor * factor * base.squared_distance(g, h)?)
            }
            (spec, g, h) => Err(if g.kind() == spec.kind() {
                mismatch(spec, h)
            } else {
                mismatch(spec, g)
            }),
        }
    }

    /// Reduces torus coordinates and renormalizes quaternions.
    pub fn canonical(&self, g: &GroupElement) -> Result<GroupElement> {
        match (self, g) {
            (GroupSpec::Torus { circumference, .. }, GroupElement::Torus(a))
                if a.len() == circumference.len() =>
            {
                Ok(GroupElement::Torus(
                    a.iter().zip(circumference).map(|(x, c)| reduce(*x, *c)).collect(),
                ))
            }
            (GroupSpec::Su2 { .. }, GroupElement::Su2(a)) => Ok(GroupElement::Su2(quat_normalize(a))),
            (GroupSpec::Product { factors }, GroupElement::Product(a)) if a.len() == factors.len() => {
                Ok(GroupElement::Product(
                    factors
                        .iter()
                        .zip(a)
                        .map(|(f, x)| f.canonical(x))
                        .collect::<Result<_>>()?,
                ))
            }
            (GroupSpec::Scaled { base, .. }, g) => base.canonical(g),
            (spec, g) => Err(mismatch(spec, g)),
        }
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        match self {
            GroupSpec::Torus { circumference, .. } => GroupElement::Torus(
                circumference.iter().map(|c| rng.random_range(0.0..*c)).collect(),
            ),
            GroupSpec::Su2 { .. } => GroupElement::Su2(random_unit_quaternion(rng)),
            GroupSpec::Product { factors } => {
                GroupElement::Product(factors.iter().map(|f| f.random_element(rng)).collect())
            }
            GroupSpec::Scaled { base, .. } => base.random_element(rng),
        }
    }

    /// Number of scalars in the flat coordinate form of an element.
    pub fn coordinate_len(&self) -> usize {
        match self {
            GroupSpec::Torus { dims, .. } => *dims,
            GroupSpec::Su2 { .. } => 4,
            GroupSpec::Product { factors } => factors.iter().map(GroupSpec::coordinate_len).sum(),
            GroupSpec::Scaled { base, .. } => base.coordinate_len(),
        }
    }

    /// Flat coordinates: torus angles, quaternion `(w, x, y, z)`, products
    /// concatenated.
    pub fn to_coordinates(&self, g: &GroupElement) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.coordinate_len());
        self.push_coordinates(g, &mut out)?;
        Ok(out)
    }

    fn push_coordinates(&self, g: &GroupElement, out: &mut Vec<f64>) -> Result<()> {
        self.validate(g)?;
        match (self, g) {
            (GroupSpec::Torus { .. }, GroupElement::Torus(a)) => out.extend_from_slice(a),
            (GroupSpec::Su2 { .. }, GroupElement::Su2(q)) => out.extend_from_slice(q),
            (GroupSpec::Product { factors }, GroupElement::Product(parts)) => {
                for (f, p) in factors.iter().zip(parts) {
                    f.push_coordinates(p, out)?;
                }
            }
            (GroupSpec::Scaled { base, .. }, g) => base.push_coordinates(g, out)?,
            (spec, g) => return Err(mismatch(spec, g)),
        }
        Ok(())
    }

    /// Parses flat coordinates. Torus angles are reduced; quaternions are
    /// renormalized when their norm is within [`EMBEDDING_TOLERANCE`] of 1.
    pub fn element_from_coordinates(&self, coords: &[f64]) -> Result<GroupElement> {
        if coords.len() != self.coordinate_len() {
            return Err(Error::DimensionMismatch {
                expected: self.coordinate_len(),
                found: coords.len(),
            });
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::KindMismatch("non-finite coordinate".into()));
        }
        match self {
            GroupSpec::Torus { circumference, .. } => Ok(GroupElement::Torus(
                coords.iter().zip(circumference).map(|(x, c)| reduce(*x, *c)).collect(),
            )),
            GroupSpec::Su2 { .. } => {
                let q = [coords[0], coords[1], coords[2], coords[3]];
                let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (n - 1.0).abs() > EMBEDDING_TOLERANCE {
                    return Err(Error::KindMismatch(format!("quaternion has norm {n}")));
                }
                Ok(GroupElement::Su2(quat_normalize(&q)))
            }
            GroupSpec::Product { factors } => {
                let mut offset = 0;
                let mut parts = Vec::with_capacity(factors.len());
                for f in factors {
                    let len = f.coordinate_len();
                    parts.push(f.element_from_coordinates(&coords[offset..offset + len])?);
                    offset += len;
                }
                Ok(GroupElement::Product(parts))
            }
            GroupSpec::Scaled { base, .. } => base.element_from_coordinates(coords),
        }
    }

    /// Dimension of the Euclidean space the group embeds into.
    pub fn embed_dim(&self) -> usize {
        match self {
            GroupSpec::Torus { dims, .. } => 2 * dims,
            GroupSpec::Su2 { .. } => 4,
            GroupSpec::Product { factors } => factors.iter().map(GroupSpec::embed_dim).sum(),
            GroupSpec::Scaled { base, .. } => base.embed_dim(),
        }
    }

    /// The Riemannian-isometric embedding into `E^{embed_dim}`.
    pub fn embed(&self, g: &GroupElement) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.embed_dim());
        self.push_embedding(g, 1.0, &mut out)?;
        Ok(out)
    }

    fn push_embedding(&self, g: &GroupElement, scale: f64, out: &mut Vec<f64>) -> Result<()> {
        match (self, g) {
            (GroupSpec::Torus { circumference, .. }, GroupElement::Torus(a))
                if a.len() == circumference.len() =>
            {
                for (x, c) in a.iter().zip(circumference) {
                    let r = scale * c / TAU;
                    let angle = TAU * x / c;
                    out.push(r * angle.cos());
                    out.push(r * angle.sin());
                }
            }
            (GroupSpec::Su2 { radius }, GroupElement::Su2(q)) => {
                out.extend(q.iter().map(|v| scale * radius * v));
            }
            (GroupSpec::Product { factors }, GroupElement::Product(parts))
                if parts.len() == factors.len() =>
            {
                for (f, p) in factors.iter().zip(parts) {
                    f.push_embedding(p, scale, out)?;
                }
            }
            (GroupSpec::Scaled { base, factor }, g) => {
                base.push_embedding(g, scale * factor, out)?
            }
            (spec, g) => return Err(mismatch(spec, g)),
        }
        Ok(())
    }

    /// Inverse of [`GroupSpec::embed`] with the default tolerance.
    pub fn embed_inverse(&self, p: &[f64]) -> Result<GroupElement> {
        self.embed_inverse_with(p, EMBEDDING_TOLERANCE)
    }

    /// Projects `p` back to the group; fails when `p` is farther than
    /// `tolerance` from the embedded submanifold.
    pub fn embed_inverse_with(&self, p: &[f64], tolerance: f64) -> Result<GroupElement> {
        if p.len() != self.embed_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.embed_dim(),
                found: p.len(),
            });
        }
        let mut offset = 0;
        let g = self.pull_embedding(p, 1.0, tolerance, &mut offset)?;
        Ok(g)
    }

    fn pull_embedding(
        &self,
        p: &[f64],
        scale: f64,
        tolerance: f64,
        offset: &mut usize,
    ) -> Result<GroupElement> {
        match self {
            GroupSpec::Torus { circumference, .. } => {
                let mut coords = Vec::with_capacity(circumference.len());
                for c in circumference {
                    let (a, b) = (p[*offset], p[*offset + 1]);
                    *offset += 2;
                    let r = scale * c / TAU;
                    let off = (a.hypot(b) - r).abs();
                    if !(off <= tolerance) {
                        return Err(Error::OffManifold {
                            distance: off,
                            tolerance,
                        });
                    }
                    coords.push(reduce(b.atan2(a) / TAU * c, *c));
                }
                Ok(GroupElement::Torus(coords))
            }
            GroupSpec::Su2 { radius } => {
                let q = [p[*offset], p[*offset + 1], p[*offset + 2], p[*offset + 3]];
                *offset += 4;
                let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
                let off = (n - scale * radius).abs();
                if !(off <= tolerance) {
                    return Err(Error::OffManifold {
                        distance: off,
                        tolerance,
                    });
                }
                Ok(GroupElement::Su2(quat_normalize(&q)))
            }
            GroupSpec::Product { factors } => Ok(GroupElement::Product(
                factors
                    .iter()
                    .map(|f| f.pull_embedding(p, scale, tolerance, offset))
                    .collect::<Result<_>>()?,
            )),
            GroupSpec::Scaled { base, factor } => {
                base.pull_embedding(p, scale * factor, tolerance, offset)
            }
        }
    }

    /// Infimum of chord/geodesic over pairs at geodesic distance below
    /// `threshold`.
    pub fn local_embedding_distortion(&self, threshold: f64) -> Result<f64> {
        if !(threshold > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold must be positive, got {threshold}"
            )));
        }
        Ok(self.local_ratio(threshold))
    }

    fn local_ratio(&self, t: f64) -> f64 {
        match self {
            GroupSpec::Torus { circumference, .. } => circumference
                .iter()
                .map(|c| chord_ratio(t.min(c / 2.0), c / TAU))
                .fold(1.0, f64::min),
            GroupSpec::Su2 { radius } => chord_ratio(t.min(PI * radius), *radius),
            // chord² / geodesic² is a weighted mean of the factors' ratios.
            GroupSpec::Product { factors } => factors
                .iter()
                .map(|f| f.local_ratio(t))
                .fold(1.0, f64::min),
            GroupSpec::Scaled { base, factor } => base.local_ratio(t / factor),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            GroupSpec::Torus { circumference, .. } => {
                circumference.iter().map(|c| (c / 2.0).powi(2)).sum::<f64>().sqrt()
            }
            GroupSpec::Su2 { radius } => PI * radius,
            GroupSpec::Product { factors } => {
                factors.iter().map(|f| f.diameter().powi(2)).sum::<f64>().sqrt()
            }
            GroupSpec::Scaled { base, factor } => factor * base.diameter(),
        }
    }

    /// Bound on the Lipschitz constant of the inverse embedding
    /// (arc over chord at antipodes).
    pub fn inverse_lipschitz_bound(&self) -> f64 {
        PI / 2.0
    }

    /// For abelian groups: per flat coordinate, its circumference and the
    /// metric scale applied to it.
    pub fn torus_layout(&self) -> Option<Vec<(f64, f64)>> {
        let mut out = Vec::new();
        self.push_layout(1.0, &mut out).then_some(out)
    }

    fn push_layout(&self, scale: f64, out: &mut Vec<(f64, f64)>) -> bool {
        match self {
            GroupSpec::Torus { circumference, .. } => {
                out.extend(circumference.iter().map(|c| (*c, scale)));
                true
            }
            GroupSpec::Su2 { .. } => false,
            GroupSpec::Product { factors } => factors.iter().all(|f| f.push_layout(scale, out)),
            GroupSpec::Scaled { base, factor } => base.push_layout(scale * factor, out),
        }
    }

    /// `q`-net with its covering radius; see [`Net`].
    pub fn net(&self, q: usize) -> Result<Net> {
        net::build(self, q, net::DEFAULT_SEED)
    }

    pub fn net_with_seed(&self, q: usize, seed: u64) -> Result<Net> {
        net::build(self, q, seed)
    }
}

pub fn random_unit_quaternion<R: Rng + ?Sized>(rng: &mut R) -> [f64; 4] {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
        }
    }
}
