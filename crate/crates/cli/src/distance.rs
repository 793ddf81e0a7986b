use flatspace::groups::{GroupElement, GroupSpec};
use flatspace::metric::FiniteMetricSpace;
use flatspace::numeric::euclidean;
use flatspace::quotient::{
    compactified_distance, euclidean_quotient_distance, FiniteIsometryGroup, LatticeShiftAction,
};
use flatspace::transport::{
    normalized_perm_quotient_distance, perm_quotient_distance, w2_discrete, DiscreteMeasure,
    TuplePoint,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::output::{field, load_config, write_csv, write_json, Header};
use crate::{CliError, CliResult, Common, Outcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    /// Intrinsic distance of a group.
    Geodesic,
    /// Euclidean distance after the group's isometric embedding.
    Chordal,
    EuclideanQuotient,
    Compactified,
    PermutationQuotient,
    W2,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceConfig {
    pub space: SpaceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isometries: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Rescales permutation-quotient distances by `1/√N`.
    #[serde(default)]
    pub normalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Value>,
    /// Draw this many random group elements instead of giving `points`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default)]
    pub seed: u64,
}

fn pairwise<P>(points: &[P], metric: impl Fn(&P, &P) -> CliResult<f64>) -> CliResult<Vec<Vec<f64>>> {
    let n = points.len();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = metric(&points[i], &points[j])?;
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    Ok(dist)
}

fn group_points(config: &DistanceConfig, group: &GroupSpec) -> CliResult<Vec<GroupElement>> {
    match (&config.points, config.random) {
        (Some(points), None) => {
            let coords: Vec<Vec<f64>> = field("points", Some(points))?;
            coords
                .iter()
                .map(|c| Ok(group.element_from_coordinates(c)?))
                .collect()
        }
        (None, Some(n)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            Ok((0..n).map(|_| group.random_element(&mut rng)).collect())
        }
        _ => Err(CliError::Config("give exactly one of `points` and `random`".into())),
    }
}

fn explicit_points<T: serde::de::DeserializeOwned>(config: &DistanceConfig) -> CliResult<T> {
    if config.random.is_some() {
        return Err(CliError::Config(
            "`random` is only supported for geodesic and chordal spaces".into(),
        ));
    }
    field("points", config.points.as_ref())
}

/// The distance matrix of the configured point set.
pub fn compute(config: &DistanceConfig) -> CliResult<Vec<Vec<f64>>> {
    match config.space {
        SpaceKind::Geodesic | SpaceKind::Chordal => {
            let group: GroupSpec = field("group", config.group.as_ref())?;
            let points = group_points(config, &group)?;
            if config.space == SpaceKind::Geodesic {
                pairwise(&points, |a, b| Ok(group.distance(a, b)?))
            } else {
                let images = points
                    .iter()
                    .map(|p| group.embed(p))
                    .collect::<flatspace::Result<Vec<_>>>()?;
                pairwise(&images, |a, b| Ok(euclidean(a, b)))
            }
        }
        SpaceKind::EuclideanQuotient => {
            let g: FiniteIsometryGroup = field("isometries", config.isometries.as_ref())?;
            let points: Vec<Vec<f64>> = explicit_points(config)?;
            pairwise(&points, |a, b| Ok(euclidean_quotient_distance(a, b, &g)?))
        }
        SpaceKind::Compactified => {
            let g: FiniteIsometryGroup = field("isometries", config.isometries.as_ref())?;
            let scale = config.scale.ok_or(CliError::MissingField("scale"))?;
            let shifts = LatticeShiftAction::new(scale, g.dim())?;
            let points: Vec<Vec<f64>> = explicit_points(config)?;
            pairwise(&points, |a, b| Ok(compactified_distance(a, b, &g, &shifts)?))
        }
        SpaceKind::PermutationQuotient => {
            let tuples: Vec<Vec<Vec<f64>>> = explicit_points(config)?;
            let tuples = tuples
                .into_iter()
                .map(TuplePoint::new)
                .collect::<flatspace::Result<Vec<_>>>()?;
            let metric = |a: &Vec<f64>, b: &Vec<f64>| euclidean(a, b);
            pairwise(&tuples, |a, b| {
                Ok(if config.normalized {
                    normalized_perm_quotient_distance(a, b, metric)?
                } else {
                    perm_quotient_distance(a, b, metric)?
                })
            })
        }
        SpaceKind::W2 => {
            let measures: Vec<DiscreteMeasure<Vec<f64>>> = explicit_points(config)?;
            pairwise(&measures, |a, b| {
                Ok(w2_discrete(a, b, |x: &Vec<f64>, y: &Vec<f64>| euclidean(x, y))?.distance)
            })
        }
    }
}

pub fn run(common: &Common) -> CliResult<Outcome> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("distance needs --config".into()))?;
    let mut config: DistanceConfig = load_config(path)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let dist = compute(&config)?;
    let labels = match &config.labels {
        Some(labels) => labels.clone(),
        None => (0..dist.len()).map(|i| format!("p{i}")).collect(),
    };
    let space = FiniteMetricSpace::new(labels, dist)?;
    let header = Header {
        command: "distance",
        config: &config,
        seed: config.seed,
    };
    let json = write_json(&common.out, "distance.json", &header, "space", &space)?;
    let csv = write_csv(&common.out, "distance.csv", &header, |buf| {
        Ok(space.write_csv(buf)?)
    })?;
    println!(
        "{} points, diameter {:.6}; wrote {} and {}",
        space.len(),
        space.diameter(),
        json.display(),
        csv.display()
    );
    Ok(Outcome::Pass)
}
