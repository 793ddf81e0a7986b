//! Exact transportation problem by the network simplex method on the
//! complete bipartite graph (rows are supplies, columns are demands).
//!
//! The basis is a spanning tree with `m + n - 1` cells, started from the
//! north-west corner rule. Pivoting uses Dantzig's rule and falls back to
//! Bland's rule after a run of degenerate pivots.

use std::collections::VecDeque;

/// Optimal flow, row-major `m × n`.
pub(crate) fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Vec<f64> {
    let (m, n) = (supply.len(), demand.len());
    debug_assert_eq!(cost.len(), m * n);
    let mut tableau = Tableau::north_west(supply, demand);
    let scale = cost.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
    let tol = 1e-12 * scale;

    let mut degenerate_run = 0usize;
    let max_iterations = 50 * (m + n) * (m + n) + 1000;
    for _ in 0..max_iterations {
        let (u, v) = tableau.potentials(cost);
        let bland = degenerate_run > m + n;
        let Some((ei, ej)) = tableau.entering(cost, &u, &v, tol, bland) else {
            break;
        };
        let theta = tableau.pivot(ei, ej);
        if theta == 0.0 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
    }
    tableau.flow
}

struct Tableau {
    m: usize,
    n: usize,
    flow: Vec<f64>,
    basic: Vec<bool>,
}

impl Tableau {
    fn north_west(supply: &[f64], demand: &[f64]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut flow = vec![0.0; m * n];
        let mut basic = vec![false; m * n];
        let mut s = supply.to_vec();
        let mut d = demand.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let x = s[i].min(d[j]).max(0.0);
            flow[i * n + j] = x;
            basic[i * n + j] = true;
            s[i] -= x;
            d[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            // Exactly one index advances per cell, so the staircase holds
            // m + n - 1 cells and is a spanning tree.
            if j == n - 1 || (i < m - 1 && s[i] <= d[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { m, n, flow, basic }
    }

    /// Adjacency of the basis tree: nodes `0..m` are rows, `m..m+n` columns.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for i in 0..self.m {
            for j in 0..self.n {
                if self.basic[i * self.n + j] {
                    adj[i].push(self.m + j);
                    adj[self.m + j].push(i);
                }
            }
        }
        adj
    }

    fn potentials(&self, cost: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let adj = self.adjacency();
        let mut pot = vec![f64::NAN; m + n];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &next in &adj[node] {
                if !pot[next].is_nan() {
                    continue;
                }
                let (i, j) = if node < m { (node, next - m) } else { (next, node - m) };
                let c = cost[i * n + j];
                pot[next] = c - pot[node];
                queue.push_back(next);
            }
        }
        let (u, v) = pot.split_at(m);
        (u.to_vec(), v.to_vec())
    }

    fn entering(
        &self,
        cost: &[f64],
        u: &[f64],
        v: &[f64],
        tol: f64,
        bland: bool,
    ) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.m {
            for j in 0..self.n {
                if self.basic[i * self.n + j] {
                    continue;
                }
                let reduced = cost[i * self.n + j] - u[i] - v[j];
                if reduced < -tol {
                    if bland {
                        return Some((i, j));
                    }
                    if best.is_none_or(|(_, _, r)| reduced < r) {
                        best = Some((i, j, reduced));
                    }
                }
            }
        }
        best.map(|(i, j, _)| (i, j))
    }

    /// Sends flow around the cycle closed by `(ei, ej)`; returns the amount.
    fn pivot(&mut self, ei: usize, ej: usize) -> f64 {
        let (m, n) = (self.m, self.n);
        let adj = self.adjacency();
        // Tree path from column node of `ej` to row node `ei`.
        let start = m + ej;
        let mut parent = vec![usize::MAX; m + n];
        parent[start] = start;
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == ei {
                break;
            }
            for &next in &adj[node] {
                if parent[next] == usize::MAX {
                    parent[next] = node;
                    queue.push_back(next);
                }
            }
        }
        let mut path = vec![ei];
        let mut node = ei;
        while node != start {
            node = parent[node];
            path.push(node);
        }
        // path runs ei -> ... -> m+ej; edges alternate -, +, -, ... starting
        // from the edge next to the entering cell's row.
        let cell = |a: usize, b: usize| {
            if a < m {
                a * n + (b - m)
            } else {
                b * n + (a - m)
            }
        };
        let cells: Vec<usize> = path.windows(2).map(|w| cell(w[0], w[1])).collect();
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for &c in cells.iter().step_by(2) {
            if self.flow[c] < theta || (self.flow[c] == theta && c < leaving) {
                theta = self.flow[c];
                leaving = c;
            }
        }
        let entering = ei * n + ej;
        self.flow[entering] += theta;
        for (k, &c) in cells.iter().enumerate() {
            if k % 2 == 0 {
                self.flow[c] -= theta;
            } else {
                self.flow[c] += theta;
            }
        }
        self.flow[leaving] = 0.0;
        self.basic[leaving] = false;
        self.basic[entering] = true;
        theta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(flow: &[f64], cost: &[f64]) -> f64 {
        flow.iter().zip(cost).map(|(f, c)| f * c).sum()
    }

    #[test]
    fn classic_instance() {
        let supply = [20.0, 30.0, 25.0];
        let demand = [10.0, 35.0, 30.0];
        let cost = [
            8.0, 6.0, 10.0, //
            9.0, 12.0, 13.0, //
            14.0, 9.0, 16.0,
        ];
        let flow = solve_transport(&supply, &demand, &cost);
        let best = brute_vertex_min(&supply, &demand, &cost);
        assert!((total(&flow, &cost) - best).abs() < 1e-9);
    }

    /// Minimum over a fine grid of the 2×2 free variables (3×3 instance has
    /// four degrees of freedom); exact because the grid contains every vertex.
    fn brute_vertex_min(supply: &[f64], demand: &[f64], cost: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for a in 0..=20 {
            for b in 0..=20 {
                for c in 0..=30 {
                    for d in 0..=30 {
                        let (a, b, c, d) = (a as f64, b as f64, c as f64, d as f64);
                        let mut x = [
                            a,
                            b,
                            supply[0] - a - b,
                            c,
                            d,
                            supply[1] - c - d,
                            demand[0] - a - c,
                            demand[1] - b - d,
                            0.0,
                        ];
                        x[8] = supply[2] - x[6] - x[7];
                        if x.iter().any(|v| *v < 0.0) || (x[2] + x[5] + x[8] - demand[2]).abs() > 1e-9 {
                            continue;
                        }
                        best = best.min(total(&x, cost));
                    }
                }
            }
        }
        best
    }

    #[test]
    fn degenerate_marginals() {
        let supply = [0.5, 0.5];
        let demand = [0.5, 0.5];
        let cost = [1.0, 0.0, 0.0, 1.0];
        let flow = solve_transport(&supply, &demand, &cost);
        assert_eq!(flow, vec![0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn single_row_or_column() {
        let flow = solve_transport(&[1.0], &[0.25, 0.75], &[3.0, 1.0]);
        assert_eq!(flow, vec![0.25, 0.75]);
        let flow = solve_transport(&[0.4, 0.6], &[1.0], &[3.0, 1.0]);
        assert_eq!(flow, vec![0.4, 0.6]);
    }
}
