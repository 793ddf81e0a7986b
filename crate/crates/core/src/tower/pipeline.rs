use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::orbit::{OrbitSearch, SlotCost};
use super::{embed_atom, flat_level_group, level_net, lift_measure, lifted_atom, project_back};
use super::{LiftedMeasure, RouteChoice, TowerConfig};
use crate::error::{Error, Result};
use crate::groups::{GroupElement, GroupSpec};
use crate::metric::bilipschitz_between;
use crate::numeric::squared_euclidean;
use crate::transport::solve_dense;

/// Roundtrip tolerance of [`project_back`] on pipeline atoms.
pub const PROJECTION_TOLERANCE: f64 = 1e-9;

/// Slack allowed above the coupling upper bound.
pub const UPPER_BOUND_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Assignment,
    Orbit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub x: usize,
    pub y: usize,
    pub x_label: String,
    pub y_label: String,
    pub d_g: f64,
    pub d_final: f64,
    /// `d_final / d_G`.
    pub ratio: f64,
    /// Intrinsic `W2` between the level-`i` lifts, `i = 0..=m`.
    pub level_w2: Vec<Option<f64>>,
    /// Difference between the two routes when both were run.
    pub cross_check: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub nets_ms: f64,
    pub lifts_ms: f64,
    pub distances_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config: TowerConfig,
    pub labels: Vec<String>,
    pub route: Route,
    /// Atoms per lifted measure at levels `0..=m`.
    pub atom_counts: Vec<usize>,
    /// Spacing of each level net inside its level group.
    pub level_meshes: Vec<f64>,
    /// `Σ 2√2 · mesh_i`: allowed excess of `d_final` over `d_G`.
    pub net_error: f64,
    pub upper_bound_holds: bool,
    pub projection_checked: usize,
    pub projection_error: f64,
    pub projection_holds: bool,
    pub max_cross_check: Option<f64>,
    pub distortion: f64,
    pub pairs: Vec<PairRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl PipelineReport {
    /// The report with wall-clock data removed; equal for equal inputs.
    pub fn without_timings(&self) -> Self {
        Self {
            timings: None,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Rows `x_label,y_label,d_G,d_final,ratio`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x_label", "y_label", "d_G", "d_final", "ratio"])?;
        for p in &self.pairs {
            w.write_record([
                p.x_label.clone(),
                p.y_label.clone(),
                format!("{:.17e}", p.d_g),
                format!("{:.17e}", p.d_final),
                format!("{:.17e}", p.ratio),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Lifts every point through the tower, embeds the top level and compares
/// the resulting permutation-quotient distances with `d_G`.
pub fn run_pipeline(
    points: &[GroupElement],
    labels: &[String],
    config: &TowerConfig,
) -> Result<PipelineReport> {
    config.validate()?;
    let group = &config.group;
    if labels.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            found: labels.len(),
        });
    }
    if points.is_empty() {
        return Err(Error::InvalidConfig("no points".into()));
    }
    let points = points
        .iter()
        .map(|p| {
            group.validate(p)?;
            group.canonical(p)
        })
        .collect::<Result<Vec<_>>>()?;
    let m = config.depth;

    let started = Instant::now();
    let nets = (0..m)
        .map(|i| level_net(group, i, config.nets[i], config.seed))
        .collect::<Result<Vec<_>>>()?;
    let mut atom_counts = vec![1usize];
    for (net, _) in &nets {
        let last = *atom_counts.last().unwrap();
        atom_counts.push(last.saturating_mul(net.len()));
    }
    let toroidal = group.torus_layout().is_some();
    let fits = atom_counts[m] <= config.cap;
    let over_cap = || {
        let level = atom_counts.iter().position(|&n| n > config.cap).unwrap();
        Error::AtomCapExceeded {
            level,
            atoms: atom_counts[level],
            cap: config.cap,
        }
    };
    let route = match (config.route, fits, toroidal) {
        (RouteChoice::Auto | RouteChoice::Assignment, true, _) => Route::Assignment,
        (RouteChoice::Auto | RouteChoice::Orbit, false, true) | (RouteChoice::Orbit, true, true) => {
            Route::Orbit
        }
        (RouteChoice::Orbit, _, false) => {
            return Err(Error::InvalidConfig(
                "the orbit route needs an abelian (toroidal) group".into(),
            ))
        }
        (RouteChoice::Auto | RouteChoice::Assignment, false, _) => return Err(over_cap()),
    };

    let level_meshes: Vec<f64> = nets.iter().map(|(_, mesh)| *mesh).collect();
    let net_tuples: Vec<Vec<Vec<GroupElement>>> = nets.into_iter().map(|(t, _)| t).collect();
    let net_error = level_meshes
        .iter()
        .fold(0.0, |acc, h| acc + 2.0 * std::f64::consts::SQRT_2 * h);
    let orbits = if toroidal {
        Some(
            (0..=m)
                .map(|level| OrbitSearch::new(group, level, &config.nets, config.seed))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let nets_ms = ms(started);

    // Lifts, embedded top-level atoms and the projection check.
    let started = Instant::now();
    let mut projection_checked = 0;
    let mut projection_error: f64 = 0.0;
    let mut lifts: Vec<Vec<LiftedMeasure>> = Vec::new();
    let mut images: Vec<Vec<f64>> = Vec::new();
    let dim = GroupSpec::scaled(group.clone(), config.scale())?.embed_dim() << m;
    for x in &points {
        let indices: Vec<usize> = match route {
            Route::Assignment => {
                let mut levels = vec![LiftedMeasure::dirac(x.clone())];
                for net in &net_tuples {
                    let next = lift_measure(group, levels.last().unwrap(), net)?;
                    levels.push(next);
                }
                let mut flat = Vec::with_capacity(atom_counts[m] * dim);
                for atom in &levels[m].atoms {
                    flat.extend(embed_atom(config, atom)?);
                }
                images.push(flat);
                lifts.push(levels);
                (0..atom_counts[m]).collect()
            }
            Route::Orbit => {
                let total = atom_counts[m];
                let sample = total.min(config.cap);
                (0..sample).map(|k| k * total / sample).collect()
            }
        };
        let checks = indices
            .par_iter()
            .map(|&k| {
                let p = match route {
                    Route::Assignment => images.last().unwrap()[k * dim..(k + 1) * dim].to_vec(),
                    Route::Orbit => embed_atom(config, &lifted_atom(group, x, &net_tuples, k)?)?,
                };
                group.distance(&project_back(&p, config)?, x)
            })
            .collect::<Result<Vec<f64>>>()?;
        projection_checked += checks.len();
        projection_error = checks.iter().copied().fold(projection_error, f64::max);
    }
    let lifts_ms = ms(started);

    let started = Instant::now();
    let coords = points
        .iter()
        .map(|p| group.to_coordinates(p))
        .collect::<Result<Vec<_>>>()?;
    let n = points.len();
    let pair_list: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let level_groups = (0..=m)
        .map(|level| flat_level_group(group, level))
        .collect::<Result<Vec<_>>>()?;
    let scale = config.scale();

    let pairs = pair_list
        .par_iter()
        .map(|&(i, j)| -> Result<PairRecord> {
            let d_g = group.distance(&points[i], &points[j])?;
            let orbit = |level: usize, cost: SlotCost| -> Result<Option<f64>> {
                match &orbits {
                    Some(o) => Ok(Some(o[level].distance(&coords[i], &coords[j], cost)?)),
                    None => Ok(None),
                }
            };
            let (d_final, cross_check) = match route {
                Route::Assignment => {
                    let k = atom_counts[m];
                    let (a, b) = (&images[i], &images[j]);
                    let mut cost = Vec::with_capacity(k * k);
                    for u in a.chunks(dim) {
                        for v in b.chunks(dim) {
                            cost.push(squared_euclidean(u, v));
                        }
                    }
                    let d = (solve_dense(k, &cost)?.cost / k as f64).sqrt();
                    let other = orbit(m, SlotCost::Chordal { scale })?;
                    (d, other.map(|o| (o - d).abs()))
                }
                Route::Orbit => (orbit(m, SlotCost::Chordal { scale })?.unwrap(), None),
            };
            let level_w2 = (0..=m)
                .map(|level| -> Result<Option<f64>> {
                    if level == 0 {
                        return Ok(Some(d_g));
                    }
                    match route {
                        Route::Assignment => {
                            let (a, b) = (&lifts[i][level], &lifts[j][level]);
                            let k = a.len();
                            let lg = &level_groups[level];
                            let mut cost = Vec::with_capacity(k * k);
                            for u in &a.atoms {
                                let u = GroupElement::Product(u.clone());
                                for v in &b.atoms {
                                    let v = GroupElement::Product(v.clone());
                                    cost.push(lg.squared_distance(&u, &v)?);
                                }
                            }
                            Ok(Some((solve_dense(k, &cost)?.cost / k as f64).sqrt()))
                        }
                        Route::Orbit => orbit(level, SlotCost::Intrinsic),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(PairRecord {
                x: i,
                y: j,
                x_label: labels[i].clone(),
                y_label: labels[j].clone(),
                d_g,
                d_final,
                ratio: if d_g > 0.0 {
                    d_final / d_g
                } else if d_final == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                },
                level_w2,
                cross_check,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let distances_ms = ms(started);

    let mut source = vec![vec![0.0; n]; n];
    let mut target = vec![vec![0.0; n]; n];
    for p in &pairs {
        source[p.x][p.y] = p.d_g;
        source[p.y][p.x] = p.d_g;
        target[p.x][p.y] = p.d_final;
        target[p.y][p.x] = p.d_final;
    }
    let distortion = bilipschitz_between(&source, &target);
    let upper_bound_holds = pairs
        .iter()
        .all(|p| p.d_final <= p.d_g + net_error + UPPER_BOUND_SLACK);
    let max_cross_check = pairs
        .iter()
        .filter_map(|p| p.cross_check)
        .reduce(f64::max);

    Ok(PipelineReport {
        config: config.clone(),
        labels: labels.to_vec(),
        route,
        atom_counts,
        level_meshes,
        net_error,
        upper_bound_holds,
        projection_checked,
        projection_error,
        projection_holds: projection_error <= PROJECTION_TOLERANCE,
        max_cross_check,
        distortion,
        pairs,
        timings: Some(Timings {
            nets_ms,
            lifts_ms,
            distances_ms,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn circle_points(values: &[f64]) -> (Vec<GroupElement>, Vec<String>) {
        (
            values.iter().map(|v| GroupElement::Torus(vec![*v])).collect(),
            (0..values.len()).map(|k| format!("x{k}")).collect(),
        )
    }

    #[test]
    fn single_point_has_no_pairs() {
        let config = TowerConfig::new(GroupSpec::circle(TAU).unwrap(), 2, vec![4, 4]).unwrap();
        let (pts, labels) = circle_points(&[1.0]);
        let report = run_pipeline(&pts, &labels, &config).unwrap();
        assert!(report.pairs.is_empty());
        assert_eq!(report.distortion, 1.0);
    }

    #[test]
    fn depth_zero_is_the_chordal_metric() {
        let config = TowerConfig::new(GroupSpec::circle(TAU).unwrap(), 0, vec![]).unwrap();
        let (pts, labels) = circle_points(&[0.0, FRAC_PI_2, PI]);
        let report = run_pipeline(&pts, &labels, &config).unwrap();
        assert!((report.distortion - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(report.route, Route::Assignment);
        assert!(report.upper_bound_holds);
    }

    #[test]
    fn routes_agree_and_runs_are_deterministic() {
        let config = TowerConfig::new(GroupSpec::circle(TAU).unwrap(), 2, vec![8, 8]).unwrap();
        let (pts, labels) = circle_points(&[0.0, 1.0, 2.5, 4.0]);
        let report = run_pipeline(&pts, &labels, &config).unwrap();
        assert_eq!(report.atom_counts, vec![1, 8, 64]);
        assert!(report.max_cross_check.unwrap() < 1e-9);
        assert_eq!(report.projection_checked, 4 * 64);
        assert!(report.projection_error < 1e-9);
        let again = run_pipeline(&pts, &labels, &config).unwrap();
        assert_eq!(report.without_timings(), again.without_timings());

        let mut orbit = config.clone();
        orbit.route = RouteChoice::Orbit;
        let via_orbit = run_pipeline(&pts, &labels, &orbit).unwrap();
        for (a, b) in report.pairs.iter().zip(&via_orbit.pairs) {
            assert!((a.d_final - b.d_final).abs() < 1e-9);
            for (u, v) in a.level_w2.iter().zip(&b.level_w2) {
                assert!((u.unwrap() - v.unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cap_errors_name_the_level() {
        let mut config = TowerConfig::new(GroupSpec::su2(1.0).unwrap(), 2, vec![50, 50]).unwrap();
        config.cap = 100;
        let pts = vec![GroupSpec::su2(1.0).unwrap().identity(); 2];
        let labels = vec!["a".to_string(), "b".to_string()];
        match run_pipeline(&pts, &labels, &config) {
            Err(Error::AtomCapExceeded { level, atoms, cap }) => {
                assert_eq!((level, atoms, cap), (2, 2500, 100));
            }
            other => panic!("unexpected {other:?}"),
        }
        config.route = RouteChoice::Orbit;
        assert!(matches!(
            run_pipeline(&pts, &labels, &config),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn csv_rows() {
        let config = TowerConfig::new(GroupSpec::circle(TAU).unwrap(), 0, vec![]).unwrap();
        let (pts, labels) = circle_points(&[0.0, 1.0]);
        let report = run_pipeline(&pts, &labels, &config).unwrap();
        let mut out = Vec::new();
        report.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("x_label,y_label,d_G,d_final,ratio\nx0,x1,"));
    }
}
