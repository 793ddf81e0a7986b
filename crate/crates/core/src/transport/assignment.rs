//! Dense linear assignment by shortest augmenting paths with dual
//! potentials (Jonker–Volgenant family), O(n³).

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// An optimal permutation `row -> column` and its total cost.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub permutation: Vec<usize>,
    pub cost: f64,
}

/// Minimizes `Σ_i cost[i][σ(i)]` over permutations `σ`.
pub fn solve_assignment(cost: &[Vec<f64>]) -> Result<Assignment> {
    let n = cost.len();
    let mut flat = Vec::with_capacity(n * n);
    for (row, entries) in cost.iter().enumerate() {
        if entries.len() != n {
            return Err(Error::NonSquare {
                rows: n,
                row,
                cols: entries.len(),
            });
        }
        flat.extend_from_slice(entries);
    }
    solve_dense(n, &flat)
}

/// Same as [`solve_assignment`] on a row-major `n × n` buffer.
pub fn solve_dense(n: usize, cost: &[f64]) -> Result<Assignment> {
    if cost.len() != n * n {
        return Err(Error::NonSquare {
            rows: n,
            row: 0,
            cols: cost.len() / n.max(1),
        });
    }
    if let Some(bad) = cost.iter().find(|c| !c.is_finite()) {
        return Err(Error::InvalidCost(format!("non-finite entry {bad}")));
    }
    let permutation = augmenting_paths(n, cost);
    let total = compensated_sum(
        permutation
            .iter()
            .enumerate()
            .map(|(i, &j)| cost[i * n + j]),
    );
    Ok(Assignment {
        permutation,
        cost: total,
    })
}

fn augmenting_paths(n: usize, cost: &[f64]) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    // 1-based columns; column 0 is the virtual root of each search tree.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_slack = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        min_slack.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = row[j - 1] - u[i0] - v[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut permutation = vec![0usize; n];
    for j in 1..=n {
        permutation[row_of[j] - 1] = j - 1;
    }
    permutation
}
