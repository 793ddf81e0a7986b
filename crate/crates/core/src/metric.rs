//! Finite metric spaces, scaling and ℓ²-products, and Lipschitz constants of
//! maps between finite spaces.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the triangle inequality and symmetry checks,
/// measured against the largest matrix entry.
pub const METRIC_TOLERANCE: f64 = 1e-12;

/// A finite set of labelled, pairwise distinct points with a validated
/// distance matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace")]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawSpace {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
}

impl TryFrom<RawSpace> for FiniteMetricSpace {
    type Error = Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        FiniteMetricSpace::new(raw.labels, raw.dist)
    }
}

impl FiniteMetricSpace {
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self> {
        validate_matrix(&dist)?;
        if labels.len() != dist.len() {
            return Err(Error::InvalidMetric(format!(
                "{} labels for a {}x{} matrix",
                labels.len(),
                dist.len(),
                dist.len()
            )));
        }
        Ok(Self { labels, dist })
    }

    /// Builds a space with labels `0..n`.
    pub fn from_matrix(dist: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (0..dist.len()).map(|i| i.to_string()).collect();
        Self::new(labels, dist)
    }

    /// Builds the space induced on `points` by `metric`.
    pub fn from_points<P>(
        labels: Vec<String>,
        points: &[P],
        metric: impl Fn(&P, &P) -> f64,
    ) -> Result<Self> {
        let n = points.len();
        let mut dist = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = metric(&points[i], &points[j]);
                dist[i][j] = d;
                dist[j][i] = d;
            }
        }
        Self::new(labels, dist)
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn diameter(&self) -> f64 {
        max_entry(&self.dist)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Writes one `label_i,label_j,distance` row per unordered pair.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["label_i", "label_j", "distance"])?;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                writer.write_record([
                    self.labels[i].as_str(),
                    self.labels[j].as_str(),
                    &format!("{:.17e}", self.dist[i][j]),
                ])?;
            }
        }
        writer.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn max_entry(dist: &[Vec<f64>]) -> f64 {
    dist.iter().flatten().copied().fold(0.0, f64::max)
}

/// Checks everything a distance matrix of distinct points must satisfy.
pub fn validate_matrix(dist: &[Vec<f64>]) -> Result<()> {
    let n = dist.len();
    for (i, row) in dist.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidMetric(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidMetric(format!(
                "row {i} contains invalid distance {v}"
            )));
        }
    }
    let tol = METRIC_TOLERANCE * max_entry(dist).max(f64::MIN_POSITIVE);
    for i in 0..n {
        if dist[i][i] != 0.0 {
            return Err(Error::InvalidMetric(format!(
                "nonzero diagonal entry at {i}"
            )));
        }
        for j in (i + 1)..n {
            if (dist[i][j] - dist[j][i]).abs() > tol {
                return Err(Error::InvalidMetric(format!(
                    "asymmetric entries at ({i}, {j})"
                )));
            }
            if dist[i][j] == 0.0 {
                return Err(Error::InvalidMetric(format!(
                    "points {i} and {j} coincide"
                )));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if dist[i][k] > dist[i][j] + dist[j][k] + tol {
                    return Err(Error::InvalidMetric(format!(
                        "triangle inequality fails for ({i}, {j}, {k})"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Multiplicative factor for a scaled metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ScaleFactor(f64);

impl ScaleFactor {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(Self(lambda))
        } else {
            Err(Error::InvalidScale(lambda))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ScaleFactor {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ScaleFactor> for f64 {
    fn from(s: ScaleFactor) -> f64 {
        s.0
    }
}

/// The space with every distance multiplied by `lambda`.
pub fn scale_space(x: &FiniteMetricSpace, lambda: ScaleFactor) -> Result<FiniteMetricSpace> {
    let dist = x
        .dist
        .iter()
        .map(|row| row.iter().map(|d| lambda.0 * d).collect())
        .collect();
    FiniteMetricSpace::new(x.labels.clone(), dist)
}

/// Cartesian product with squared distances adding. Points are ordered
/// pairs, first factor major: index `i * |Y| + j` is `(x_i, y_j)`.
pub fn product_space(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<FiniteMetricSpace> {
    let (nx, ny) = (x.len(), y.len());
    let mut labels = Vec::with_capacity(nx * ny);
    for a in &x.labels {
        for b in &y.labels {
            labels.push(format!("({a},{b})"));
        }
    }
    let mut dist = vec![vec![0.0; nx * ny]; nx * ny];
    for i1 in 0..nx {
        for j1 in 0..ny {
            let p = i1 * ny + j1;
            for i2 in 0..nx {
                for j2 in 0..ny {
                    let (a, b) = (x.dist[i1][i2], y.dist[j1][j2]);
                    dist[p][i2 * ny + j2] = (a * a + b * b).sqrt();
                }
            }
        }
    }
    FiniteMetricSpace::new(labels, dist)
}

/// `X^n` with the ℓ²-product metric, tuples in lexicographic order.
pub fn power_space(x: &FiniteMetricSpace, n: usize) -> Result<FiniteMetricSpace> {
    if n == 0 {
        return Err(Error::EmptyPower);
    }
    if n == 1 {
        return Ok(x.clone());
    }
    let base = x.len();
    let count = base
        .checked_pow(n as u32)
        .ok_or_else(|| Error::InvalidMetric("power space too large".into()))?;
    let digits = |mut idx: usize| {
        let mut out = vec![0; n];
        for slot in out.iter_mut().rev() {
            *slot = idx % base;
            idx /= base;
        }
        out
    };
    let tuples: Vec<Vec<usize>> = (0..count).map(digits).collect();
    let labels = tuples
        .iter()
        .map(|t| {
            let parts: Vec<&str> = t.iter().map(|&i| x.labels[i].as_str()).collect();
            format!("({})", parts.join(","))
        })
        .collect();
    let mut dist = vec![vec![0.0; count]; count];
    for p in 0..count {
        for q in (p + 1)..count {
            let sq: f64 = tuples[p]
                .iter()
                .zip(&tuples[q])
                .map(|(&a, &b)| x.dist[a][b] * x.dist[a][b])
                .sum();
            dist[p][q] = sq.sqrt();
            dist[q][p] = dist[p][q];
        }
    }
    FiniteMetricSpace::new(labels, dist)
}

/// A map between finite metric spaces given by an index assignment.
#[derive(Clone, Debug)]
pub struct PointMap {
    pub domain: FiniteMetricSpace,
    pub codomain: FiniteMetricSpace,
    assignment: Vec<usize>,
}

impl PointMap {
    pub fn new(
        domain: FiniteMetricSpace,
        codomain: FiniteMetricSpace,
        assignment: Vec<usize>,
    ) -> Result<Self> {
        if assignment.len() != domain.len() {
            return Err(Error::DimensionMismatch {
                expected: domain.len(),
                found: assignment.len(),
            });
        }
        if let Some(&bad) = assignment.iter().find(|&&j| j >= codomain.len()) {
            return Err(Error::InvalidMetric(format!(
                "assignment target {bad} outside codomain of size {}",
                codomain.len()
            )));
        }
        Ok(Self {
            domain,
            codomain,
            assignment,
        })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// The inverse map, when the assignment is a bijection.
    pub fn inverse(&self) -> Option<PointMap> {
        if self.domain.len() != self.codomain.len() {
            return None;
        }
        let mut inv = vec![usize::MAX; self.codomain.len()];
        for (i, &j) in self.assignment.iter().enumerate() {
            if inv[j] != usize::MAX {
                return None;
            }
            inv[j] = i;
        }
        Some(PointMap {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            assignment: inv,
        })
    }

    fn image_distance(&self, i: usize, j: usize) -> f64 {
        self.codomain
            .distance(self.assignment[i], self.assignment[j])
    }

    /// Supremum of `d_Y(f a, f b) / d_X(a, b)` over distinct pairs.
    pub fn lipschitz_constant(&self) -> f64 {
        let n = self.domain.len();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.max(self.image_distance(i, j) / self.domain.distance(i, j));
            }
        }
        best
    }

    /// Smallest `c ≥ 1` with `d_Y / c ≤ d_X ≤ c · d_Y` on every pair;
    /// infinite when two points collapse.
    pub fn bilipschitz_constant(&self) -> f64 {
        let n = self.domain.len();
        let source: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| self.domain.distance(i, j)).collect())
            .collect();
        let target: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| self.image_distance(i, j)).collect())
            .collect();
        bilipschitz_between(&source, &target)
    }
}

/// Bi-Lipschitz constant of the identity correspondence between two
/// distance matrices on the same index set. Pseudo-metrics are allowed; a
/// pair that is collapsed on exactly one side gives `+∞`.
pub fn bilipschitz_between(source: &[Vec<f64>], target: &[Vec<f64>]) -> f64 {
    let n = source.len();
    let mut worst: f64 = 1.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let (dx, dy) = (source[i][j], target[i][j]);
            match (dx == 0.0, dy == 0.0) {
                (true, true) => {}
                (true, false) | (false, true) => return f64::INFINITY,
                (false, false) => worst = worst.max(dx / dy).max(dy / dx),
            }
        }
    }
    worst
}
