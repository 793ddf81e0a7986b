use flatspace::markov::{verify_markov_type2, ChainSampler, TargetSpace};
use serde::{Deserialize, Serialize};

use crate::output::{load_config, write_csv, write_json, Header};
use crate::{CliResult, Common, Outcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarkovExperiment {
    pub target: TargetSpace,
    pub max_states: usize,
    pub trials: usize,
    pub t_max: usize,
    pub k: f64,
    pub seed: u64,
}

impl Default for MarkovExperiment {
    fn default() -> Self {
        Self {
            target: TargetSpace::Sphere,
            max_states: 6,
            trials: 100,
            t_max: 10,
            k: 1.0,
            seed: 0,
        }
    }
}

pub fn run(common: &Common, k: Option<f64>) -> CliResult<Outcome> {
    let mut experiment = match &common.config {
        Some(path) => load_config::<MarkovExperiment>(path)?,
        None => MarkovExperiment::default(),
    };
    if let Some(seed) = common.seed {
        experiment.seed = seed;
    }
    if let Some(k) = k {
        experiment.k = k;
    }
    let sampler = ChainSampler::new(experiment.target, experiment.max_states)?;
    let report = verify_markov_type2(
        &sampler,
        experiment.trials,
        experiment.t_max,
        experiment.k,
        experiment.seed,
    )?;
    let header = Header {
        command: "markov",
        config: &experiment,
        seed: experiment.seed,
    };
    write_json(&common.out, "markov.json", &header, "report", &report)?;
    let path = write_csv(&common.out, "markov.csv", &header, |buf| {
        Ok(report.write_csv(buf)?)
    })?;

    let verdict = if report.pass { "PASS" } else { "FAIL" };
    match report.max_ratio {
        _ if report.all_vacuous() => println!(
            "{verdict}: all {} trials vacuous (E d²(Z₁, Z₀) = 0)",
            report.trials
        ),
        Some(max) => println!(
            "{verdict}: max ratio {max:.15} against K² = {} over {} trials ({} vacuous)",
            experiment.k * experiment.k,
            report.trials,
            report.vacuous_trials
        ),
        None => println!("{verdict}: no ratios"),
    }
    if let Some(w) = &report.witness {
        println!("witness: trial {} t {} ratio {:.15}", w.trial, w.t, w.ratio);
    }
    println!("wrote {}", path.display());
    Ok(if report.pass { Outcome::Pass } else { Outcome::Fail })
}
