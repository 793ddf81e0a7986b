//! Exact optimal transport between finitely supported measures.
//!
//! Squared ground costs are supplied through a distance callback so that
//! quotient and group metrics plug in without materializing coordinates.
//! Uniform measures with equal atom counts are solved as linear assignment;
//! everything else goes through the transportation simplex.

mod assignment;
mod simplex;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use assignment::{solve_assignment, solve_dense, Assignment};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Absolute tolerance on the total mass of a measure.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Absolute tolerance on coupling marginals.
pub const MARGINAL_TOLERANCE: f64 = 1e-10;

/// A finitely supported probability measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawMeasure<P>",
    bound(deserialize = "P: Deserialize<'de>", serialize = "P: Serialize")
)]
pub struct DiscreteMeasure<P> {
    atoms: Vec<P>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMeasure<P> {
    atoms: Vec<P>,
    weights: Vec<f64>,
}

impl<P> TryFrom<RawMeasure<P>> for DiscreteMeasure<P> {
    type Error = Error;

    fn try_from(raw: RawMeasure<P>) -> Result<Self> {
        DiscreteMeasure::new(raw.atoms, raw.weights)
    }
}

impl<P> DiscreteMeasure<P> {
    pub fn new(atoms: Vec<P>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidMeasure(format!("weight {w} is not positive")));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(Self { atoms, weights })
    }

    /// Uniform weights `1/N`; repeated atoms are kept as separate entries.
    pub fn uniform(atoms: Vec<P>) -> Result<Self> {
        let n = atoms.len();
        Self::new(atoms, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn dirac(atom: P) -> Self {
        Self {
            atoms: vec![atom],
            weights: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[P] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights
            .iter()
            .all(|x| (x - w).abs() <= WEIGHT_TOLERANCE)
    }

    pub fn map<Q>(&self, f: impl FnMut(&P) -> Q) -> DiscreteMeasure<Q> {
        DiscreteMeasure {
            atoms: self.atoms.iter().map(f).collect(),
            weights: self.weights.clone(),
        }
    }
}

impl<P: Clone + PartialEq> DiscreteMeasure<P> {
    /// Merges atoms that compare equal, adding their weights.
    pub fn merged(&self) -> Self {
        let mut atoms: Vec<P> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            match atoms.iter().position(|b| b == a) {
                Some(k) => weights[k] += w,
                None => {
                    atoms.push(a.clone());
                    weights.push(*w);
                }
            }
        }
        Self { atoms, weights }
    }
}

/// A transport plan between two measures, indexed by (atom of μ, atom of ν).
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    pub plan: DMatrix<f64>,
}

impl Coupling {
    /// Largest deviation of the row/column sums from the given marginals.
    pub fn marginal_error(&self, row_weights: &[f64], col_weights: &[f64]) -> f64 {
        let rows = self
            .plan
            .row_iter()
            .zip(row_weights)
            .map(|(r, w)| (compensated_sum(r.iter().copied()) - w).abs());
        let cols = self
            .plan
            .column_iter()
            .zip(col_weights)
            .map(|(c, w)| (compensated_sum(c.iter().copied()) - w).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }

    pub fn is_feasible(&self, row_weights: &[f64], col_weights: &[f64]) -> bool {
        self.plan.iter().all(|x| *x >= 0.0)
            && self.plan.nrows() == row_weights.len()
            && self.plan.ncols() == col_weights.len()
            && self.marginal_error(row_weights, col_weights) <= MARGINAL_TOLERANCE
    }
}

/// Outcome of an exact W2 computation.
#[derive(Clone, Debug)]
pub struct Transport {
    pub distance: f64,
    pub coupling: Coupling,
}

fn squared_cost_matrix<P>(
    from: &[P],
    to: &[P],
    metric: &impl Fn(&P, &P) -> f64,
) -> Result<Vec<f64>> {
    let mut cost = Vec::with_capacity(from.len() * to.len());
    for a in from {
        for b in to {
            let d = metric(a, b);
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::InvalidCost(format!(
                    "distance oracle returned {d}"
                )));
            }
            cost.push(d * d);
        }
    }
    Ok(cost)
}

/// Exact 2-Wasserstein distance and an optimal coupling.
pub fn w2_discrete<P>(
    mu: &DiscreteMeasure<P>,
    nu: &DiscreteMeasure<P>,
    metric: impl Fn(&P, &P) -> f64,
) -> Result<Transport> {
    let cost = squared_cost_matrix(&mu.atoms, &nu.atoms, &metric)?;
    if mu.len() == nu.len() && mu.is_uniform() && nu.is_uniform() {
        let n = mu.len();
        let a = solve_dense(n, &cost)?;
        let mut plan = DMatrix::zeros(n, n);
        for (i, &j) in a.permutation.iter().enumerate() {
            plan[(i, j)] = 1.0 / n as f64;
        }
        return Ok(Transport {
            distance: (a.cost / n as f64).max(0.0).sqrt(),
            coupling: Coupling { plan },
        });
    }
    Ok(simplex_transport(mu, nu, &cost))
}

/// Exact 2-Wasserstein distance always solved by the transportation
/// simplex, bypassing the assignment shortcut.
pub fn w2_simplex<P>(
    mu: &DiscreteMeasure<P>,
    nu: &DiscreteMeasure<P>,
    metric: impl Fn(&P, &P) -> f64,
) -> Result<Transport> {
    let cost = squared_cost_matrix(&mu.atoms, &nu.atoms, &metric)?;
    Ok(simplex_transport(mu, nu, &cost))
}

fn simplex_transport<P>(mu: &DiscreteMeasure<P>, nu: &DiscreteMeasure<P>, cost: &[f64]) -> Transport {
    let (m, n) = (mu.len(), nu.len());
    let flow = simplex::solve_transport(&mu.weights, &nu.weights, cost);
    let total = compensated_sum(flow.iter().zip(cost).map(|(f, c)| f * c));
    Transport {
        distance: total.max(0.0).sqrt(),
        coupling: Coupling {
            plan: DMatrix::from_row_slice(m, n, &flow),
        },
    }
}

/// An ordered tuple of points of a base space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TuplePoint<P>(Vec<P>);

impl<P> TuplePoint<P> {
    pub fn new(points: Vec<P>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure("empty tuple".into()));
        }
        Ok(Self(points))
    }

    pub fn points(&self) -> &[P] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<P: Clone> TuplePoint<P> {
    /// Each entry repeated twice, in place: the canonical inclusion of
    /// `X^N / S_N` into `X^{2N} / S_{2N}`. It leaves the empirical measure
    /// unchanged.
    pub fn doubled(&self) -> Self {
        Self(self.0.iter().flat_map(|p| [p.clone(), p.clone()]).collect())
    }
}

/// Distance in `X^N / S_N`: the best matching of squared costs.
pub fn perm_quotient_distance<P>(
    x: &TuplePoint<P>,
    y: &TuplePoint<P>,
    metric: impl Fn(&P, &P) -> f64,
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let cost = squared_cost_matrix(&x.0, &y.0, &metric)?;
    let a = solve_dense(x.len(), &cost)?;
    Ok(a.cost.max(0.0).sqrt())
}

/// Distance in the rescaled quotient `(1/√N)·X^N / S_N`, the space on which
/// [`empirical_measure`] is an isometry.
pub fn normalized_perm_quotient_distance<P>(
    x: &TuplePoint<P>,
    y: &TuplePoint<P>,
    metric: impl Fn(&P, &P) -> f64,
) -> Result<f64> {
    Ok(perm_quotient_distance(x, y, metric)? / (x.len() as f64).sqrt())
}

/// The empirical measure of a tuple: weight `1/N` on each entry, with
/// repeated entries merged. Isometric from `(1/√N)·X^N / S_N` into the
/// 2-Wasserstein space.
pub fn empirical_measure<P: Clone + PartialEq>(x: &TuplePoint<P>) -> DiscreteMeasure<P> {
    let n = x.len() as f64;
    DiscreteMeasure {
        atoms: x.0.clone(),
        weights: vec![1.0 / n; x.len()],
    }
    .merged()
}
