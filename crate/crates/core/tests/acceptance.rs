//! Acceptance criteria. Each criterion prints one PASS/FAIL line (written
//! straight to stderr so it shows without `--nocapture`) and the test fails
//! if any criterion fails or exceeds its time budget.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::Write;
use std::time::{Duration, Instant};

use flatspace::groups::{GroupElement, GroupSpec};
use flatspace::markov::{
    markov_ratio, markov_ratios, ChainSampler, MappedConfiguration, MarkovRatio, ReversibleChain,
    TargetSpace,
};
use flatspace::numeric::euclidean;
use flatspace::quotient::{
    compactified_distance, diagonal_canonical, diagonal_quotient_distance,
    euclidean_quotient_distance, DiagonalQuotientPoint, FiniteIsometryGroup, LatticeShiftAction,
};
use flatspace::tower::{
    embed_level_m, level_net, lift_measure, project_back, run_pipeline, LiftedMeasure, TowerConfig,
};
use flatspace::transport::{
    empirical_measure, normalized_perm_quotient_distance, solve_assignment, w2_discrete, w2_simplex,
    DiscreteMeasure, TuplePoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
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

fn empirical_measure_isometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let metric = |a: &Vec<f64>, b: &Vec<f64>| euclidean(a, b);
    let mut worst: f64 = 0.0;
    for &n in &[2usize, 4, 8] {
        for _ in 0..50 {
            let mut tuple = || {
                TuplePoint::new(
                    (0..n)
                        .map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
                        .collect(),
                )
                .unwrap()
            };
            let (x, y) = (tuple(), tuple());
            let quotient = normalized_perm_quotient_distance(&x, &y, metric).unwrap();
            let (mx, my) = (empirical_measure(&x), empirical_measure(&y));
            let w2 = w2_discrete(&mx, &my, metric).unwrap().distance;
            let simplex = w2_simplex(&mx, &my, metric).unwrap().distance;
            worst = worst.max((w2 - quotient).abs()).max((simplex - quotient).abs());
        }
    }
    check(worst <= 1e-9, format!("max |W2 - quotient| = {worst:.3e} over 150 pairs"))
}

fn assignment_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut exact = 0;
    for trial in 0..100 {
        let n = 1 + trial % 7;
        // Dyadic entries keep every partial sum exact.
        let cost: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(0..64) as f64 / 8.0).collect())
            .collect();
        let solved = solve_assignment(&cost).unwrap();
        let brute = permutations(n)
            .iter()
            .map(|p| (0..n).map(|i| cost[i][p[i]]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let realized: f64 = (0..n).map(|i| cost[i][solved.permutation[i]]).sum();
        if solved.cost == brute && realized == brute {
            exact += 1;
        }
    }

    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let denominator = 12usize;
        let mut measure = || {
            let k = rng.random_range(1..=4);
            let mut counts = vec![1usize; k];
            for _ in k..denominator {
                counts[rng.random_range(0..k)] += 1;
            }
            let atoms: Vec<f64> = (0..k).map(|_| rng.random_range(-5.0..5.0)).collect();
            (atoms, counts)
        };
        let ((xa, xc), (ya, yc)) = (measure(), measure());
        let weights = |c: &[usize]| c.iter().map(|v| *v as f64 / denominator as f64).collect();
        let mu = DiscreteMeasure::new(xa.clone(), weights(&xc)).unwrap();
        let nu = DiscreteMeasure::new(ya.clone(), weights(&yc)).unwrap();
        let w2 = w2_discrete(&mu, &nu, |a, b| (a - b).abs()).unwrap().distance;

        // Split every atom into unit-mass copies and match them.
        let split = |atoms: &[f64], counts: &[usize]| -> Vec<f64> {
            atoms
                .iter()
                .zip(counts)
                .flat_map(|(a, c)| std::iter::repeat_n(*a, *c))
                .collect()
        };
        let (sx, sy) = (split(&xa, &xc), split(&ya, &yc));
        let cost: Vec<Vec<f64>> = sx
            .iter()
            .map(|a| sy.iter().map(|b| (a - b) * (a - b)).collect())
            .collect();
        let reduced = (solve_assignment(&cost).unwrap().cost / denominator as f64).sqrt();
        worst = worst.max((w2 - reduced).abs());
    }
    check(
        exact == 100 && worst <= 1e-9,
        format!("{exact}/100 assignments exact; max |W2 - split assignment| = {worst:.3e}"),
    )
}

fn diagonal_isometry() -> Outcome {
    let circle = GroupSpec::circle(TAU).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let points: Vec<(DiagonalQuotientPoint, DiagonalQuotientPoint)> = (0..100)
        .map(|_| {
            let mut p = || {
                DiagonalQuotientPoint::new(
                    &circle,
                    circle.random_element(&mut rng),
                    circle.random_element(&mut rng),
                )
                .unwrap()
            };
            (p(), p())
        })
        .collect();
    let mut errors = Vec::new();
    for q in [64, 128, 256] {
        let net = circle.net(q).unwrap();
        let worst = points
            .iter()
            .map(|(a, b)| {
                let d = diagonal_quotient_distance(a, b, &circle, &net.elements).unwrap();
                let exact = circle
                    .distance(
                        &diagonal_canonical(a, &circle).unwrap(),
                        &diagonal_canonical(b, &circle).unwrap(),
                    )
                    .unwrap();
                (d - exact).abs()
            })
            .fold(0.0, f64::max);
        errors.push(worst);
    }
    let ok = errors[1] < errors[0] && errors[2] < errors[1] && errors[2] <= 0.05 * circle.diameter();
    check(
        ok,
        format!(
            "max error q=64: {:.3e}, q=128: {:.3e}, q=256: {:.3e} (limit {:.3e})",
            errors[0],
            errors[1],
            errors[2],
            0.05 * circle.diameter()
        ),
    )
}

fn tower_convergence() -> Outcome {
    let circle = GroupSpec::circle(TAU).unwrap();
    let points: Vec<GroupElement> = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2]
        .iter()
        .map(|v| GroupElement::Torus(vec![*v]))
        .collect();
    let labels: Vec<String> = ["0", "pi/2", "pi", "3pi/2"].iter().map(|s| s.to_string()).collect();
    let mut distortions = Vec::new();
    for m in [0, 2, 4] {
        let config = TowerConfig::with_density(circle.clone(), m, 16).unwrap();
        let report = run_pipeline(&points, &labels, &config).map_err(|e| e.to_string())?;
        if !report.upper_bound_holds || !report.projection_holds {
            return Err(format!("m={m}: coupling bound or projection check failed"));
        }
        distortions.push(report.distortion);
    }
    let closed = [FRAC_PI_2, PI]
        .iter()
        .map(|t| t / (2.0 * (t / 2.0).sin()))
        .fold(1.0, f64::max);
    let ok = distortions.windows(2).all(|w| w[1] <= w[0])
        && (distortions[0] - closed).abs() <= 1e-6;
    check(
        ok,
        format!(
            "distortion m=0: {:.6}, m=2: {:.6}, m=4: {:.6} (closed form m=0: {closed:.6})",
            distortions[0], distortions[1], distortions[2]
        ),
    )
}

fn scale_law() -> Outcome {
    let circle = GroupSpec::circle(TAU).unwrap();
    let deficit = |t: f64| 1.0 - circle.local_embedding_distortion(t).unwrap();
    let (a, b, c) = (deficit(0.4), deficit(0.2), deficit(0.1));
    let factors = [a / b, b / c];
    let ok = factors.iter().all(|f| (3.8..=4.2).contains(f));
    check(ok, format!("deficit ratios {:.4}, {:.4}", factors[0], factors[1]))
}

fn projection_roundtrip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for group in [GroupSpec::circle(TAU).unwrap(), GroupSpec::su2(1.0).unwrap()] {
        let config = TowerConfig::new(group.clone(), 2, vec![8, 16]).unwrap();
        let nets: Vec<_> = (0..2)
            .map(|i| level_net(&group, i, config.nets[i], config.seed).unwrap().0)
            .collect();
        for _ in 0..5 {
            let x = group.random_element(&mut rng);
            let mut mu = LiftedMeasure::dirac(x.clone());
            for net in &nets {
                mu = lift_measure(&group, &mu, net).unwrap();
            }
            let image = embed_level_m(&mu, &config).unwrap();
            for p in image.atoms() {
                let back = project_back(p, &config).map_err(|e| e.to_string())?;
                worst = worst.max(group.distance(&back, &x).unwrap());
                checked += 1;
            }
        }
    }
    check(
        worst <= 1e-9,
        format!("{checked} atoms on circle and SU(2), max error {worst:.3e}"),
    )
}

fn markov_type() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut first_step: f64 = 0.0;
    let mut evaluated = 0;
    for (k, target) in [TargetSpace::Sphere, TargetSpace::Torus, TargetSpace::Euclidean]
        .into_iter()
        .enumerate()
    {
        let sampler = ChainSampler::new(target, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(70 + k as u64);
        for _ in 0..100 {
            let (_, cfg) = sampler.sample(&mut rng).unwrap();
            let ratios = markov_ratios(&cfg, 10);
            if let MarkovRatio::Value(r1) = ratios[0] {
                first_step = first_step.max((r1 - 1.0).abs());
                evaluated += 1;
            }
            worst = ratios.iter().filter_map(|r| r.value()).fold(worst, f64::max);
        }
    }

    let mut closed: f64 = 0.0;
    for p in [0.1, 0.5] {
        let chain =
            ReversibleChain::new(vec![0.5, 0.5], vec![vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap();
        let cfg = MappedConfiguration::new(chain, &[0.0, 1.0], |a: &f64, b: &f64| Ok((a - b).abs()))
            .unwrap();
        for t in 1..=10 {
            let expected = (1.0 - (1.0 - 2.0 * p).powi(t as i32)) / (2.0 * t as f64 * p);
            let got = markov_ratio(&cfg, t).unwrap().value().unwrap();
            closed = closed.max((got - expected).abs());
        }
    }
    let ok = worst <= 1.0 + 1e-9 && first_step <= 1e-12 && closed <= 1e-12;
    check(
        ok,
        format!(
            "max ratio {worst:.15} over 300 chains; |r(1) - 1| <= {first_step:.1e} on {evaluated}; two-state error {closed:.1e}"
        ),
    )
}

fn quotient_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let perms3 = permutations(3);
    let s3 = FiniteIsometryGroup::from_permutations(&perms3).unwrap();
    let shifts = LatticeShiftAction::new(5.0, 3).unwrap();
    let (mut brute_err, mut window_err, mut orbit_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..100 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-4.0..4.0)).collect();
        let y: Vec<f64> = (0..3).map(|_| rng.random_range(-4.0..4.0)).collect();
        let brute = perms3
            .iter()
            .map(|p| (0..3).map(|i| (x[i] - y[p[i]]).powi(2)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min);
        let d = euclidean_quotient_distance(&x, &y, &s3).unwrap();
        brute_err = brute_err.max((d - brute).abs());

        for g in s3.elements() {
            let gx = g.apply(&x);
            let moved = euclidean_quotient_distance(&gx, &y, &s3).unwrap();
            orbit_err = orbit_err.max((moved - d).abs());
        }

        let (cx, cy) = (shifts.canonicalize(&x), shifts.canonicalize(&y));
        let mut window = f64::INFINITY;
        for p in &perms3 {
            for a in 0..125 {
                let shift = [a % 5 - 2, (a / 5) % 5 - 2, a / 25 - 2];
                let v: f64 = (0..3)
                    .map(|i| (cx[i] - cy[p[i]] - 5.0 * shift[i] as f64).powi(2))
                    .sum();
                window = window.min(v.sqrt());
            }
        }
        let c = compactified_distance(&x, &y, &s3, &shifts).unwrap();
        window_err = window_err.max((c - window).abs());
    }
    let ok = brute_err <= 1e-10 && window_err <= 1e-10 && orbit_err <= 1e-10;
    check(
        ok,
        format!(
            "group brute force {brute_err:.1e}, window search {window_err:.1e}, orbit invariance {orbit_err:.1e}"
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, u64); 8] = [
        ("1 empirical measure isometry", empirical_measure_isometry, 10),
        ("2 assignment and OT oracles", assignment_oracles, 30),
        ("3 diagonal quotient isometry", diagonal_isometry, 20),
        ("4 tower distortion convergence", tower_convergence, 120),
        ("5 local distortion scale law", scale_law, 1),
        ("6 projection roundtrip", projection_roundtrip, 30),
        ("7 Markov type 2 constant 1", markov_type, 30),
        ("8 quotient metric correctness", quotient_metrics, 30),
    ];
    let mut failures = Vec::new();
    let mut err = std::io::stderr();
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let (status, detail) = match (&outcome, in_time) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over the {budget} s budget")),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        writeln!(err, "[{status}] {name}: {detail} ({:.2} s)", elapsed.as_secs_f64()).unwrap();
        if status == "FAIL" {
            failures.push(name);
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
