use std::f64::consts::{PI, TAU};

use flatspace::groups::{GroupElement, GroupSpec};
use flatspace::tower::{run_pipeline, PipelineReport, RouteChoice, TowerConfig, DEFAULT_ATOM_CAP};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::{load_config, write_csv, write_json, Header};
use crate::{CliError, CliResult, Common, Outcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCell {
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nets: Option<Vec<usize>>,
    /// Nets of size `density·2^i` at level `i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerExperiment {
    pub group: GroupSpec,
    /// Flat coordinates of the points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub sweep: Vec<SweepCell>,
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default)]
    pub route: RouteChoice,
    #[serde(default)]
    pub seed: u64,
}

fn default_cap() -> usize {
    DEFAULT_ATOM_CAP
}

impl Default for TowerExperiment {
    /// Four quarter turns on the circle, depths 0, 2 and 4 at density 16.
    fn default() -> Self {
        Self {
            group: GroupSpec::circle(TAU).expect("valid circle"),
            points: Some((0..4).map(|k| vec![k as f64 * PI / 2.0]).collect()),
            random: None,
            labels: Some(["0", "pi/2", "pi", "3pi/2"].map(String::from).to_vec()),
            sweep: [0, 2, 4]
                .map(|depth| SweepCell {
                    depth,
                    nets: None,
                    density: (depth > 0).then_some(16),
                })
                .to_vec(),
            cap: DEFAULT_ATOM_CAP,
            route: RouteChoice::Auto,
            seed: 0,
        }
    }
}

impl TowerExperiment {
    fn points(&self) -> CliResult<(Vec<GroupElement>, Vec<String>)> {
        let points = match (&self.points, self.random) {
            (Some(coords), None) => coords
                .iter()
                .map(|c| self.group.element_from_coordinates(c))
                .collect::<flatspace::Result<Vec<_>>>()?,
            (None, Some(n)) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..n).map(|_| self.group.random_element(&mut rng)).collect()
            }
            _ => return Err(CliError::Config("give exactly one of `points` and `random`".into())),
        };
        let labels = match &self.labels {
            Some(l) if l.len() == points.len() => l.clone(),
            Some(l) => {
                return Err(CliError::Config(format!(
                    "{} labels for {} points",
                    l.len(),
                    points.len()
                )))
            }
            None => (0..points.len()).map(|i| format!("p{i}")).collect(),
        };
        Ok((points, labels))
    }

    fn cell_config(&self, cell: &SweepCell) -> CliResult<TowerConfig> {
        let mut config = match (&cell.nets, cell.density) {
            (Some(nets), None) => TowerConfig::new(self.group.clone(), cell.depth, nets.clone())?,
            (None, Some(q)) => TowerConfig::with_density(self.group.clone(), cell.depth, q)?,
            (None, None) if cell.depth == 0 => TowerConfig::new(self.group.clone(), 0, vec![])?,
            _ => {
                return Err(CliError::Config(format!(
                    "sweep cell at depth {}: give exactly one of `nets` and `density`",
                    cell.depth
                )))
            }
        };
        config.cap = self.cap;
        config.route = self.route;
        config.seed = self.seed;
        config.validate()?;
        Ok(config)
    }
}

/// One row of the sweep table.
#[derive(Debug)]
struct CellResult {
    depth: usize,
    nets: Vec<usize>,
    report: Result<PipelineReport, String>,
}

const SUMMARY_COLUMNS: [&str; 10] = [
    "cell",
    "depth",
    "nets",
    "route",
    "atoms",
    "distortion",
    "net_error",
    "upper_bound_holds",
    "projection_holds",
    "status",
];

fn summary_row(index: usize, cell: &CellResult) -> Vec<String> {
    let nets = cell.nets.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(";");
    let mut row = vec![index.to_string(), cell.depth.to_string(), nets];
    match &cell.report {
        Ok(r) => row.extend([
            format!("{:?}", r.route).to_lowercase(),
            r.atom_counts.last().copied().unwrap_or(1).to_string(),
            format!("{:.17e}", r.distortion),
            format!("{:.17e}", r.net_error),
            r.upper_bound_holds.to_string(),
            r.projection_holds.to_string(),
            "ok".into(),
        ]),
        Err(message) => {
            row.extend(std::iter::repeat_n(String::new(), 6));
            row.push(message.clone());
        }
    }
    row
}

pub fn run(common: &Common) -> CliResult<Outcome> {
    let mut experiment = match &common.config {
        Some(path) => load_config::<TowerExperiment>(path)?,
        None => TowerExperiment::default(),
    };
    if let Some(seed) = common.seed {
        experiment.seed = seed;
    }
    if let Some(cap) = common.cap {
        experiment.cap = cap;
    }
    let (points, labels) = experiment.points()?;
    let configs = experiment
        .sweep
        .iter()
        .map(|cell| experiment.cell_config(cell))
        .collect::<CliResult<Vec<_>>>()?;
    let header = Header {
        command: "tower",
        config: &experiment,
        seed: experiment.seed,
    };

    let results = configs
        .par_iter()
        .enumerate()
        .map(|(index, config)| -> CliResult<CellResult> {
            let report = match run_pipeline(&points, &labels, config) {
                Ok(report) => report.without_timings(),
                Err(e @ flatspace::Error::AtomCapExceeded { .. }) => {
                    return Ok(CellResult {
                        depth: config.depth,
                        nets: config.nets.clone(),
                        report: Err(e.to_string()),
                    })
                }
                Err(e) => return Err(e.into()),
            };
            write_json(&common.out, &format!("tower_cell{index}.json"), &header, "report", &report)?;
            write_csv(&common.out, &format!("tower_cell{index}_pairs.csv"), &header, |buf| {
                Ok(report.write_csv(buf)?)
            })?;
            Ok(CellResult {
                depth: config.depth,
                nets: config.nets.clone(),
                report: Ok(report),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let path = write_csv(&common.out, "tower.csv", &header, |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(SUMMARY_COLUMNS).map_err(flatspace::Error::from)?;
        for (index, cell) in results.iter().enumerate() {
            w.write_record(summary_row(index, cell)).map_err(flatspace::Error::from)?;
        }
        w.flush().map_err(|e| flatspace::Error::from(csv::Error::from(e)))?;
        Ok(())
    })?;

    let mut failed = false;
    for (index, cell) in results.iter().enumerate() {
        match &cell.report {
            Ok(r) => {
                let ok = r.upper_bound_holds && r.projection_holds;
                failed |= !ok;
                println!(
                    "cell {index}: depth {} distortion {:.6} ({}){}",
                    cell.depth,
                    r.distortion,
                    format!("{:?}", r.route).to_lowercase(),
                    if ok { "" } else { " FAILED bound or projection check" }
                );
            }
            Err(message) => println!("cell {index}: depth {} skipped: {message}", cell.depth),
        }
    }
    println!("wrote {}", path.display());
    Ok(if failed { Outcome::Fail } else { Outcome::Pass })
}
