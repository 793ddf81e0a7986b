//! Distances in quotient spaces: Euclidean space modulo a finite isometry
//! group, its compactification by a scaled lattice of shifts, and the
//! diagonal quotient `(√2G × √2G)/G`, which is isometric to `G`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{GroupElement, GroupSpec};

pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;
pub const CLOSURE_TOLERANCE: f64 = 1e-9;

const MAX_GROUP_ORDER: usize = 1 << 13;

/// `y ↦ Q y + t` with `Q` orthogonal.
#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanIsometry {
    matrix: DMatrix<f64>,
    translation: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawIsometry {
    matrix: Vec<Vec<f64>>,
    translation: Vec<f64>,
}

impl EuclideanIsometry {
    pub fn new(matrix: DMatrix<f64>, translation: DVector<f64>) -> Result<Self> {
        let m = matrix.nrows();
        if matrix.ncols() != m {
            return Err(Error::InvalidGroup(format!(
                "{}×{} matrix is not square",
                m,
                matrix.ncols()
            )));
        }
        if translation.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: translation.len(),
            });
        }
        if matrix.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidGroup("non-finite isometry entry".into()));
        }
        let defect = (matrix.transpose() * &matrix - DMatrix::identity(m, m)).amax();
        if defect > ORTHOGONALITY_TOLERANCE {
            return Err(Error::InvalidGroup(format!(
                "matrix is not orthogonal (QᵀQ − I has entry {defect:e})"
            )));
        }
        Ok(Self { matrix, translation })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            matrix: DMatrix::identity(m, m),
            translation: DVector::zeros(m),
        }
    }

    /// Coordinate permutation `(P y)_i = y_{p[i]}`.
    pub fn permutation(p: &[usize]) -> Result<Self> {
        let m = p.len();
        let mut seen = vec![false; m];
        for &k in p {
            if k >= m || std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidGroup(format!("{p:?} is not a permutation")));
            }
        }
        let mut matrix = DMatrix::zeros(m, m);
        for (i, &k) in p.iter().enumerate() {
            matrix[(i, k)] = 1.0;
        }
        Ok(Self {
            matrix,
            translation: DVector::zeros(m),
        })
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn translation(&self) -> &DVector<f64> {
        &self.translation
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let v = &self.matrix * DVector::from_column_slice(y) + &self.translation;
        v.as_slice().to_vec()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix * &other.matrix,
            translation: &self.matrix * &other.translation + &self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let qt = self.matrix.transpose();
        Self {
            translation: -(&qt * &self.translation),
            matrix: qt,
        }
    }

    fn gap(&self, other: &Self) -> f64 {
        self.entries()
            .zip(other.entries())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        self.matrix.iter().chain(self.translation.iter()).copied()
    }

    /// Weighted entry sum; elements within `gap` ε differ by at most
    /// `ε · Σ weights`.
    fn signature(&self) -> f64 {
        self.entries()
            .enumerate()
            .map(|(k, v)| v * (1.0 + 0.618_033_988_75 * k as f64).fract().max(0.1))
            .sum()
    }

    /// The permutation when this is a pure coordinate permutation.
    pub fn as_permutation(&self) -> Option<Vec<usize>> {
        if self.translation.iter().any(|t| *t != 0.0) {
            return None;
        }
        let m = self.dim();
        (0..m)
            .map(|i| {
                let row = self.matrix.row(i);
                let k = (0..m).find(|&k| row[k] == 1.0)?;
                (0..m).all(|j| j == k || row[j] == 0.0).then_some(k)
            })
            .collect()
    }
}

impl Serialize for EuclideanIsometry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawIsometry {
            matrix: self
                .matrix
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            translation: self.translation.as_slice().to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EuclideanIsometry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawIsometry::deserialize(d)?;
        let m = raw.matrix.len();
        if raw.matrix.iter().any(|r| r.len() != m) {
            return Err(serde::de::Error::custom("isometry matrix is not square"));
        }
        let matrix = DMatrix::from_fn(m, m, |i, j| raw.matrix[i][j]);
        EuclideanIsometry::new(matrix, DVector::from_vec(raw.translation))
            .map_err(serde::de::Error::custom)
    }
}

/// Sorted signatures for near-neighbour membership tests.
struct Index {
    keys: Vec<(f64, usize)>,
    slack: f64,
}

impl Index {
    fn new(dim: usize) -> Self {
        Self {
            keys: Vec::new(),
            slack: CLOSURE_TOLERANCE * (dim * dim + dim) as f64,
        }
    }

    fn insert(&mut self, e: &EuclideanIsometry, id: usize) {
        let key = e.signature();
        let at = self.keys.partition_point(|(k, _)| *k < key);
        self.keys.insert(at, (key, id));
    }

    fn find(&self, elements: &[EuclideanIsometry], e: &EuclideanIsometry) -> Option<usize> {
        let key = e.signature();
        let lo = self.keys.partition_point(|(k, _)| *k < key - self.slack);
        self.keys[lo..]
            .iter()
            .take_while(|(k, _)| *k <= key + self.slack)
            .map(|(_, id)| *id)
            .find(|&id| elements[id].gap(e) <= CLOSURE_TOLERANCE)
    }
}

/// A finite group of Euclidean isometries, validated for closure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGroup", into = "Vec<EuclideanIsometry>")]
pub struct FiniteIsometryGroup {
    elements: Vec<EuclideanIsometry>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawGroup {
    Elements(Vec<EuclideanIsometry>),
    Permutations { permutations: Vec<Vec<usize>> },
}

impl TryFrom<RawGroup> for FiniteIsometryGroup {
    type Error = Error;

    fn try_from(raw: RawGroup) -> Result<Self> {
        match raw {
            RawGroup::Elements(elements) => Self::new(elements),
            RawGroup::Permutations { permutations } => Self::from_permutations(&permutations),
        }
    }
}

impl From<FiniteIsometryGroup> for Vec<EuclideanIsometry> {
    fn from(g: FiniteIsometryGroup) -> Self {
        g.elements
    }
}

impl FiniteIsometryGroup {
    /// Validates identity membership and closure under composition.
    pub fn new(elements: Vec<EuclideanIsometry>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidGroup("group has no elements".into()));
        };
        let m = first.dim();
        if let Some(bad) = elements.iter().find(|e| e.dim() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: bad.dim(),
            });
        }
        if elements.len() > MAX_GROUP_ORDER {
            return Err(Error::InvalidGroup(format!(
                "groups are limited to {MAX_GROUP_ORDER} elements"
            )));
        }
        let mut index = Index::new(m);
        for (k, e) in elements.iter().enumerate() {
            index.insert(e, k);
        }
        if index.find(&elements, &EuclideanIsometry::identity(m)).is_none() {
            return Err(Error::InvalidGroup("identity is missing".into()));
        }
        for a in &elements {
            for b in &elements {
                if index.find(&elements, &a.compose(b)).is_none() {
                    return Err(Error::InvalidGroup("not closed under composition".into()));
                }
            }
        }
        Ok(Self { elements })
    }

    pub fn from_permutations(perms: &[Vec<usize>]) -> Result<Self> {
        Self::new(
            perms
                .iter()
                .map(|p| EuclideanIsometry::permutation(p))
                .collect::<Result<_>>()?,
        )
    }

    /// Closure of the generators under composition.
    pub fn generate(m: usize, generators: &[EuclideanIsometry]) -> Result<Self> {
        let mut elements = vec![EuclideanIsometry::identity(m)];
        let mut index = Index::new(m);
        index.insert(&elements[0], 0);
        let mut frontier = elements.clone();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for a in &frontier {
                for g in generators {
                    if g.dim() != m {
                        return Err(Error::DimensionMismatch {
                            expected: m,
                            found: g.dim(),
                        });
                    }
                    let ga = g.compose(a);
                    if index.find(&elements, &ga).is_none() {
                        index.insert(&ga, elements.len());
                        elements.push(ga.clone());
                        next.push(ga);
                        if elements.len() > MAX_GROUP_ORDER {
                            return Err(Error::InvalidGroup(
                                "generated group is infinite or too large".into(),
                            ));
                        }
                    }
                }
            }
            frontier = next;
        }
        Self::new(elements)
    }

    /// All coordinate permutations of `E^m`.
    pub fn symmetric(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidGroup("dimension must be positive".into()));
        }
        let mut gens = vec![EuclideanIsometry::identity(m)];
        if m > 1 {
            let mut swap: Vec<usize> = (0..m).collect();
            swap.swap(0, 1);
            let cycle: Vec<usize> = (0..m).map(|i| (i + 1) % m).collect();
            gens.push(EuclideanIsometry::permutation(&swap)?);
            gens.push(EuclideanIsometry::permutation(&cycle)?);
        }
        Self::generate(m, &gens)
    }

    pub fn trivial(m: usize) -> Self {
        Self {
            elements: vec![EuclideanIsometry::identity(m)],
        }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[EuclideanIsometry] {
        &self.elements
    }

    pub fn as_permutations(&self) -> Option<Vec<Vec<usize>>> {
        self.elements.iter().map(EuclideanIsometry::as_permutation).collect()
    }
}

/// Shifts `x ↦ x + M·a`, `a ∈ Z^m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeShiftAction {
    scale: f64,
    dim: usize,
}

impl LatticeShiftAction {
    pub fn new(scale: f64, dim: usize) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidScale(scale));
        }
        Ok(Self { scale, dim })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Representative in the fundamental cube `[0, M)^m`.
    pub fn canonicalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| crate::groups::reduce(*v, self.scale)).collect()
    }
}

fn check_dims(expected: usize, x: &[f64], y: &[f64]) -> Result<()> {
    for v in [x, y] {
        if v.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: v.len(),
            });
        }
    }
    Ok(())
}

/// `min_{g∈G} |x − g(y)|`.
pub fn euclidean_quotient_distance(x: &[f64], y: &[f64], group: &FiniteIsometryGroup) -> Result<f64> {
    check_dims(group.dim(), x, y)?;
    Ok(group
        .elements()
        .iter()
        .map(|g| crate::numeric::squared_euclidean(x, &g.apply(y)))
        .fold(f64::INFINITY, f64::min)
        .sqrt())
}

/// Distance in `R^m / (perms ⋉ M·Z^m)`.
///
/// For a fixed permutation the lattice term separates by coordinate, so each
/// coordinate takes its best shift within the window independently.
pub fn compactified_distance(
    x: &[f64],
    y: &[f64],
    perms: &FiniteIsometryGroup,
    shifts: &LatticeShiftAction,
) -> Result<f64> {
    let m = shifts.dim();
    check_dims(m, x, y)?;
    if perms.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: perms.dim(),
        });
    }
    let tables = perms.as_permutations().ok_or_else(|| {
        Error::InvalidGroup("compactification needs a group of coordinate permutations".into())
    })?;
    let big_m = shifts.scale();
    let x = shifts.canonicalize(x);
    let y = shifts.canonicalize(y);
    let mut best = f64::INFINITY;
    for p in &tables {
        let sup = (0..m).map(|i| (x[i] - y[p[i]]).abs()).fold(0.0, f64::max);
        let window = (sup / big_m).ceil() as i64 + 1;
        let total: f64 = (0..m)
            .map(|i| {
                let diff = x[i] - y[p[i]];
                (-window..=window)
                    .map(|a| (diff - big_m * a as f64).powi(2))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        best = best.min(total);
    }
    Ok(best.sqrt())
}

/// Orbit `[(g₁, g₂)]` of the diagonal left action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalQuotientPoint {
    pub first: GroupElement,
    pub second: GroupElement,
}

impl DiagonalQuotientPoint {
    pub fn new(group: &GroupSpec, first: GroupElement, second: GroupElement) -> Result<Self> {
        group.validate(&first)?;
        group.validate(&second)?;
        Ok(Self { first, second })
    }
}

/// `min_{g∈S} sqrt(2 d(g a₁, b₁)² + 2 d(g a₂, b₂)²)`.
pub fn diagonal_quotient_distance(
    a: &DiagonalQuotientPoint,
    b: &DiagonalQuotientPoint,
    group: &GroupSpec,
    net: &[GroupElement],
) -> Result<f64> {
    if net.is_empty() {
        return Err(Error::InvalidConfig("empty net".into()));
    }
    let mut best = f64::INFINITY;
    for g in net {
        let d1 = group.squared_distance(&group.compose(g, &a.first)?, &b.first)?;
        let d2 = group.squared_distance(&group.compose(g, &a.second)?, &b.second)?;
        best = best.min(2.0 * d1 + 2.0 * d2);
    }
    Ok(best.sqrt())
}

/// `g₁⁻¹ g₂`; the quotient is isometric to `G` through this map.
pub fn diagonal_canonical(a: &DiagonalQuotientPoint, group: &GroupSpec) -> Result<GroupElement> {
    group.divide(&a.first, &a.second)
}
