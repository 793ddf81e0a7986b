//! Small-scale versions of the library's invariant suites.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::time::Instant;

use flatspace::groups::{GroupElement, GroupSpec};
use flatspace::markov::{verify_markov_type2, ChainSampler, TargetSpace};
use flatspace::numeric::euclidean;
use flatspace::quotient::{
    compactified_distance, diagonal_canonical, diagonal_quotient_distance,
    euclidean_quotient_distance, DiagonalQuotientPoint, FiniteIsometryGroup, LatticeShiftAction,
};
use flatspace::tower::{run_pipeline, TowerConfig};
use flatspace::transport::{
    empirical_measure, normalized_perm_quotient_distance, solve_assignment, w2_discrete, TuplePoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{CliResult, Outcome};

type Check = flatspace::Result<Result<String, String>>;

fn verdict(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..n {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

fn assignment() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for n in 1..=6 {
        let perms = permutations(n);
        for _ in 0..5 {
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.random_range(0.0..10.0)).collect())
                .collect();
            let brute = perms
                .iter()
                .map(|p| (0..n).map(|i| cost[i][p[i]]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max((solve_assignment(&cost)?.cost - brute).abs());
        }
    }
    Ok(verdict(worst <= 1e-9, format!("max gap to permutation search {worst:.1e}")))
}

fn empirical() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let metric = |a: &Vec<f64>, b: &Vec<f64>| euclidean(a, b);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut tuple = || {
            TuplePoint::new(
                (0..4)
                    .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                    .collect(),
            )
        };
        let (x, y) = (tuple()?, tuple()?);
        let q = normalized_perm_quotient_distance(&x, &y, metric)?;
        let w = w2_discrete(&empirical_measure(&x), &empirical_measure(&y), metric)?.distance;
        worst = worst.max((q - w).abs());
    }
    Ok(verdict(worst <= 1e-9, format!("max |W2 - quotient| {worst:.1e}")))
}

fn quotients() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let perms = FiniteIsometryGroup::symmetric(3)?;
    let shifts = LatticeShiftAction::new(1.0, 3)?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let d = euclidean_quotient_distance(&x, &y, &perms)?;
        let c = compactified_distance(&x, &y, &perms, &shifts)?;
        for g in perms.elements() {
            let gy = g.apply(&y);
            worst = worst.max((euclidean_quotient_distance(&x, &gy, &perms)? - d).abs());
            let moved: Vec<f64> = gy.iter().map(|v| v + 2.0).collect();
            worst = worst.max((compactified_distance(&x, &moved, &perms, &shifts)? - c).abs());
        }
    }
    Ok(verdict(worst <= 1e-10, format!("orbit invariance {worst:.1e}")))
}

fn diagonal() -> Check {
    let g = GroupSpec::circle(TAU)?;
    let net = g.net(256)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut pt = || {
            DiagonalQuotientPoint::new(&g, g.random_element(&mut rng), g.random_element(&mut rng))
        };
        let (a, b) = (pt()?, pt()?);
        let d = diagonal_quotient_distance(&a, &b, &g, &net.elements)?;
        let exact = g.distance(&diagonal_canonical(&a, &g)?, &diagonal_canonical(&b, &g)?)?;
        worst = worst.max((d - exact).abs());
    }
    Ok(verdict(
        worst <= 2.0 * net.mesh,
        format!("max error {worst:.2e} (mesh {:.2e})", net.mesh),
    ))
}

fn tower() -> Check {
    let g = GroupSpec::circle(TAU)?;
    let points: Vec<GroupElement> = [0.0, FRAC_PI_2, PI].iter().map(|&t| GroupElement::Torus(vec![t])).collect();
    let labels: Vec<String> = ["0", "pi/2", "pi"].map(String::from).to_vec();
    let flat = run_pipeline(&points, &labels, &TowerConfig::new(g.clone(), 0, vec![])?)?;
    let deep = run_pipeline(&points, &labels, &TowerConfig::new(g, 2, vec![16, 16])?)?;
    let ok = (flat.distortion - FRAC_PI_2).abs() <= 1e-9
        && deep.distortion < flat.distortion
        && deep.upper_bound_holds
        && deep.projection_holds;
    Ok(verdict(
        ok,
        format!("distortion m=0 {:.6}, m=2 {:.6}", flat.distortion, deep.distortion),
    ))
}

fn markov() -> Check {
    let mut worst: f64 = 0.0;
    for target in [TargetSpace::Sphere, TargetSpace::Torus, TargetSpace::Euclidean] {
        let report = verify_markov_type2(&ChainSampler::new(target, 6)?, 20, 10, 1.0, 5)?;
        if !report.pass {
            return Ok(Err(format!("{target:?} failed")));
        }
        worst = worst.max(report.max_ratio.unwrap_or(0.0));
    }
    Ok(verdict(true, format!("max ratio {worst:.12}")))
}

pub fn run() -> CliResult<Outcome> {
    let suites: [(&str, fn() -> Check); 6] = [
        ("assignment", assignment),
        ("empirical", empirical),
        ("quotients", quotients),
        ("diagonal", diagonal),
        ("tower", tower),
        ("markov", markov),
    ];
    let mut failed = 0;
    for (name, suite) in suites {
        let started = Instant::now();
        let (tag, detail) = match suite()? {
            Ok(detail) => ("PASS", detail),
            Err(detail) => {
                failed += 1;
                ("FAIL", detail)
            }
        };
        println!("[{tag}] {name}: {detail} ({:.2} s)", started.elapsed().as_secs_f64());
    }
    println!("{} of {} suites passed", suites.len() - failed, suites.len());
    Ok(if failed == 0 { Outcome::Pass } else { Outcome::Fail })
}
