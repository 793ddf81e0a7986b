//! Exact evaluation of the Markov type 2 inequality
//! `E d²(f(Z_t), f(Z_0)) ≤ K² t E d²(f(Z_1), f(Z_0))` for stationary
//! reversible chains on a few states, using matrix powers instead of
//! trajectory sampling.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{GroupElement, GroupSpec};

pub const MAX_STATES: usize = 64;
pub const ROW_TOLERANCE: f64 = 1e-12;
pub const STATIONARITY_TOLERANCE: f64 = 1e-10;
pub const BALANCE_TOLERANCE: f64 = 1e-12;
/// Slack on `K²` in [`verify_markov_type2`].
pub const RATIO_SLACK: f64 = 1e-9;

/// Stationary distribution `pi` and transition matrix `a` satisfying
/// detailed balance `π_i a_ij = π_j a_ji`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChain")]
pub struct ReversibleChain {
    pi: Vec<f64>,
    a: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawChain {
    pi: Vec<f64>,
    a: Vec<Vec<f64>>,
}

impl TryFrom<RawChain> for ReversibleChain {
    type Error = Error;

    fn try_from(raw: RawChain) -> Result<Self> {
        ReversibleChain::new(raw.pi, raw.a)
    }
}

impl ReversibleChain {
    pub fn new(pi: Vec<f64>, a: Vec<Vec<f64>>) -> Result<Self> {
        let n = pi.len();
        if n == 0 || n > MAX_STATES {
            return Err(Error::InvalidChain(format!(
                "{n} states (supported: 1..={MAX_STATES})"
            )));
        }
        if a.len() != n || a.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidChain("transition matrix shape differs from pi".into()));
        }
        if pi.iter().chain(a.iter().flatten()).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidChain("entries must be finite and nonnegative".into()));
        }
        if (pi.iter().sum::<f64>() - 1.0).abs() > ROW_TOLERANCE {
            return Err(Error::InvalidChain("pi does not sum to 1".into()));
        }
        for (i, row) in a.iter().enumerate() {
            if (row.iter().sum::<f64>() - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvalidChain(format!("row {i} does not sum to 1")));
            }
        }
        for j in 0..n {
            let flow: f64 = (0..n).map(|i| pi[i] * a[i][j]).sum();
            if (flow - pi[j]).abs() > STATIONARITY_TOLERANCE {
                return Err(Error::InvalidChain(format!("pi is not stationary at state {j}")));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if (pi[i] * a[i][j] - pi[j] * a[j][i]).abs() > BALANCE_TOLERANCE {
                    return Err(Error::InvalidChain(format!(
                        "detailed balance fails between states {i} and {j}"
                    )));
                }
            }
        }
        Ok(Self { pi, a })
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn transitions(&self) -> &[Vec<f64>] {
        &self.a
    }

    fn matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.a[i][j])
    }

    /// `A^t` by successive multiplication.
    pub fn power(&self, t: usize) -> DMatrix<f64> {
        let a = self.matrix();
        let mut p = DMatrix::identity(self.len(), self.len());
        for _ in 0..t {
            p = &p * &a;
        }
        p
    }

    /// `A^t` by repeated squaring.
    pub fn power_by_squaring(&self, mut t: usize) -> DMatrix<f64> {
        let mut base = self.matrix();
        let mut p = DMatrix::identity(self.len(), self.len());
        while t > 0 {
            if t & 1 == 1 {
                p = &p * &base;
            }
            base = &base * &base;
            t >>= 1;
        }
        p
    }
}

/// `π_i = Σ_j W_ij / Σ W`, `a_ij = W_ij / Σ_k W_ik` for symmetric `W ≥ 0`.
pub fn chain_from_weights(w: &[Vec<f64>]) -> Result<ReversibleChain> {
    let n = w.len();
    if w.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidChain("weight matrix is not square".into()));
    }
    for i in 0..n {
        for j in 0..n {
            let v = w[i][j];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidChain(format!("weight ({i}, {j}) = {v}")));
            }
            if v != w[j][i] {
                return Err(Error::InvalidChain(format!("weights not symmetric at ({i}, {j})")));
            }
        }
    }
    let rows: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    if let Some(i) = rows.iter().position(|r| *r <= 0.0) {
        return Err(Error::InvalidChain(format!("state {i} has no weight")));
    }
    let total: f64 = rows.iter().sum();
    let pi = rows.iter().map(|r| r / total).collect();
    let a = w
        .iter()
        .zip(&rows)
        .map(|(row, s)| row.iter().map(|v| v / s).collect())
        .collect();
    ReversibleChain::new(pi, a)
}

/// A chain together with the squared distances between the images of its
/// states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappedConfiguration {
    pub chain: ReversibleChain,
    pub squared_distances: Vec<Vec<f64>>,
}

impl MappedConfiguration {
    pub fn new<P>(
        chain: ReversibleChain,
        images: &[P],
        metric: impl Fn(&P, &P) -> Result<f64>,
    ) -> Result<Self> {
        if images.len() != chain.len() {
            return Err(Error::DimensionMismatch {
                expected: chain.len(),
                found: images.len(),
            });
        }
        let squared_distances = images
            .iter()
            .map(|p| {
                images
                    .iter()
                    .map(|q| metric(p, q).map(|d| d * d))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            chain,
            squared_distances,
        })
    }

    /// `E d²(f(Z_t), f(Z_0))` given `A^t`.
    fn expectation(&self, power: &DMatrix<f64>) -> f64 {
        let pi = self.chain.pi();
        let mut total = 0.0;
        for (i, p) in pi.iter().enumerate() {
            for (j, d2) in self.squared_distances[i].iter().enumerate() {
                total += p * power[(i, j)] * d2;
            }
        }
        total
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkovRatio {
    Value(f64),
    /// `E d²(f(Z_1), f(Z_0)) = 0`: the inequality holds trivially.
    Vacuous,
}

impl MarkovRatio {
    pub fn value(self) -> Option<f64> {
        match self {
            MarkovRatio::Value(v) => Some(v),
            MarkovRatio::Vacuous => None,
        }
    }
}

/// `E d²(f(Z_t), f(Z_0)) / (t · E d²(f(Z_1), f(Z_0)))`.
pub fn markov_ratio(cfg: &MappedConfiguration, t: usize) -> Result<MarkovRatio> {
    if t == 0 {
        return Err(Error::InvalidConfig("t must be at least 1".into()));
    }
    let one = cfg.expectation(&cfg.chain.power(1));
    if one == 0.0 {
        return Ok(MarkovRatio::Vacuous);
    }
    Ok(MarkovRatio::Value(cfg.expectation(&cfg.chain.power(t)) / (t as f64 * one)))
}

/// Ratios for `t = 1..=t_max`, sharing the matrix powers.
pub fn markov_ratios(cfg: &MappedConfiguration, t_max: usize) -> Vec<MarkovRatio> {
    let a = cfg.chain.matrix();
    let one = cfg.expectation(&a);
    if one == 0.0 {
        return vec![MarkovRatio::Vacuous; t_max];
    }
    let mut power = a.clone();
    let mut out = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        if t > 1 {
            power = &power * &a;
        }
        out.push(MarkovRatio::Value(cfg.expectation(&power) / (t as f64 * one)));
    }
    out
}

/// Target spaces for random configurations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetSpace {
    /// Unit quaternions with the round metric of S³.
    Sphere,
    /// Flat torus `R²/(2πZ)²`.
    Torus,
    /// `E³`.
    Euclidean,
    /// Every state mapped to the same point.
    Vacuous,
}

/// Random reversible chains on `2..=max_states` states with random images.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSampler {
    pub target: TargetSpace,
    pub max_states: usize,
}

impl ChainSampler {
    pub fn new(target: TargetSpace, max_states: usize) -> Result<Self> {
        if !(2..=MAX_STATES).contains(&max_states) {
            return Err(Error::InvalidConfig(format!(
                "max_states must lie in 2..={MAX_STATES}, got {max_states}"
            )));
        }
        Ok(Self { target, max_states })
    }

    /// Chain, flat image coordinates and the mapped configuration.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<(Vec<Vec<f64>>, MappedConfiguration)> {
        let n = rng.random_range(2..=self.max_states);
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                // Sparse weights give chains far from mixing in one step.
                let v = if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() };
                w[i][j] = v;
                w[j][i] = v;
            }
        }
        for (i, row) in w.iter_mut().enumerate() {
            if row.iter().sum::<f64>() == 0.0 {
                row[i] = 1.0;
            }
        }
        let chain = chain_from_weights(&w)?;
        match self.target {
            TargetSpace::Sphere => {
                let g = GroupSpec::su2(1.0)?;
                let images: Vec<GroupElement> = (0..n).map(|_| g.random_element(rng)).collect();
                let coords = images.iter().map(|p| g.to_coordinates(p)).collect::<Result<_>>()?;
                Ok((coords, MappedConfiguration::new(chain, &images, |a, b| g.distance(a, b))?))
            }
            TargetSpace::Torus => {
                let g = GroupSpec::torus(2, TAU)?;
                let images: Vec<GroupElement> = (0..n).map(|_| g.random_element(rng)).collect();
                let coords = images.iter().map(|p| g.to_coordinates(p)).collect::<Result<_>>()?;
                Ok((coords, MappedConfiguration::new(chain, &images, |a, b| g.distance(a, b))?))
            }
            TargetSpace::Euclidean => {
                let images: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect();
                let cfg = MappedConfiguration::new(chain, &images, |a, b| {
                    Ok(crate::numeric::euclidean(a, b))
                })?;
                Ok((images, cfg))
            }
            TargetSpace::Vacuous => {
                let images = vec![vec![0.0]; n];
                let cfg = MappedConfiguration::new(chain, &images, |_, _| Ok(0.0))?;
                Ok((images, cfg))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovRow {
    pub trial: usize,
    pub t: usize,
    pub ratio: MarkovRatio,
    /// Largest ratio of this trial over all `t`.
    pub max_over_t: MarkovRatio,
}

/// Largest ratio found, with everything needed to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    pub t: usize,
    pub ratio: f64,
    pub images: Vec<Vec<f64>>,
    pub configuration: MappedConfiguration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    pub sampler: ChainSampler,
    pub trials: usize,
    pub t_max: usize,
    pub k: f64,
    pub seed: u64,
    pub max_ratio: Option<f64>,
    pub vacuous_trials: usize,
    pub pass: bool,
    pub witness: Option<Witness>,
    pub rows: Vec<MarkovRow>,
}

impl MarkovReport {
    pub fn all_vacuous(&self) -> bool {
        self.vacuous_trials == self.trials
    }

    /// Rows `trial,t,ratio,max_over_t`; vacuous entries are written as
    /// `vacuous`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let show = |r: MarkovRatio| match r {
            MarkovRatio::Value(v) => format!("{v:.17e}"),
            MarkovRatio::Vacuous => "vacuous".to_string(),
        };
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial", "t", "ratio", "max_over_t"])?;
        for row in &self.rows {
            w.write_record([
                row.trial.to_string(),
                row.t.to_string(),
                show(row.ratio),
                show(row.max_over_t),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Evaluates every `t ≤ t_max` on `trials` seeded configurations; passes
/// iff the largest ratio is at most `K² + RATIO_SLACK`.
pub fn verify_markov_type2(
    sampler: &ChainSampler,
    trials: usize,
    t_max: usize,
    k: f64,
    seed: u64,
) -> Result<MarkovReport> {
    if t_max == 0 {
        return Err(Error::InvalidConfig("t_max must be at least 1".into()));
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidConfig(format!("K must be positive, got {k}")));
    }
    let results = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let (images, cfg) = sampler.sample(&mut rng)?;
            let ratios = markov_ratios(&cfg, t_max);
            Ok((images, cfg, ratios))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(trials * t_max);
    let mut witness: Option<Witness> = None;
    let mut vacuous_trials = 0;
    for (trial, (images, cfg, ratios)) in results.into_iter().enumerate() {
        let best = ratios
            .iter()
            .enumerate()
            .filter_map(|(k, r)| r.value().map(|v| (k + 1, v)))
            .fold(None, |acc: Option<(usize, f64)>, (t, v)| match acc {
                Some((_, b)) if b >= v => acc,
                _ => Some((t, v)),
            });
        let max_over_t = best.map_or(MarkovRatio::Vacuous, |(_, v)| MarkovRatio::Value(v));
        if best.is_none() {
            vacuous_trials += 1;
        }
        for (k, ratio) in ratios.iter().enumerate() {
            rows.push(MarkovRow {
                trial,
                t: k + 1,
                ratio: *ratio,
                max_over_t,
            });
        }
        if let Some((t, v)) = best {
            if witness.as_ref().is_none_or(|w| v > w.ratio) {
                witness = Some(Witness {
                    trial,
                    t,
                    ratio: v,
                    images,
                    configuration: cfg,
                });
            }
        }
    }
    let max_ratio = witness.as_ref().map(|w| w.ratio);
    let pass = max_ratio.is_none_or(|v| v <= k * k + RATIO_SLACK);
    Ok(MarkovReport {
        sampler: sampler.clone(),
        trials,
        t_max,
        k,
        seed,
        max_ratio,
        vacuous_trials,
        pass,
        witness,
        rows,
    })
}
