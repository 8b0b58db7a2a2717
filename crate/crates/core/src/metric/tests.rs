use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::problem::{Convexity, SmoothSplit};
use crate::testing::{problem, DenseQuadratic, HalfSqNorm, Linear, Sum};

fn one_d(obj: Arc<dyn Objective>, set: FeasibleSet) -> ObjectiveProblem {
    problem(obj, vec![1], vec![set]).with_convexity(Convexity::Convex)
}

fn euclid(sigma: f64) -> DistanceSpec {
    DistanceSpec::Euclidean { sigma }
}

#[test]
fn metric_eval_examples() {
    let pr = one_d(Arc::new(HalfSqNorm::new(1)), FeasibleSet::unbounded(1));
    let y = pr.point(vec![1.0]).unwrap();
    let lin = MetricSpec::euclidean(1.0);
    assert_eq!(metric_eval(&lin, &pr, &[1.0], &y, 0).unwrap(), 0.0);
    assert_eq!(metric_eval(&lin, &pr, &[0.0], &y, 0).unwrap(), -0.5);
    let prox = MetricSpec::new(MetricFamily::Proximity, euclid(1.0));
    assert_eq!(metric_eval(&prox, &pr, &[0.0], &y, 0).unwrap(), 0.5);
}

#[test]
fn metric_grad1_examples() {
    let pr = one_d(Arc::new(HalfSqNorm::new(1)), FeasibleSet::unbounded(1));
    let y = pr.point(vec![1.0]).unwrap();
    let lin = MetricSpec::euclidean(1.0);
    assert_eq!(metric_grad1(&lin, &pr, &[1.0], &y, 0).unwrap(), vec![1.0]);
    assert_eq!(metric_grad1(&lin, &pr, &[0.0], &y, 0).unwrap(), vec![0.0]);

    // grad f(2) = 0 for 0.5 (x - 2)^2.
    let pr = one_d(
        Arc::new(HalfSqNorm::centered(vec![2.0])),
        FeasibleSet::orthant(1).unwrap(),
    );
    let y = pr.point(vec![2.0]).unwrap();
    let ent = MetricSpec::linearized(DistanceSpec::BregmanEntropy { sigma: 1.0 });
    let g = metric_grad1(&ent, &pr, &[1.0], &y, 0).unwrap();
    assert!((g[0] - (1f64.ln() - 2f64.ln())).abs() < 1e-15);
}

#[test]
fn generalized_project_examples() {
    let pr = problem(
        Arc::new(HalfSqNorm::new(2)),
        vec![2],
        vec![FeasibleSet::cube(2, 0.0, 1.0).unwrap()],
    );
    let y = pr.point(vec![0.5, 0.5]).unwrap();
    assert_eq!(
        generalized_project(&MetricSpec::euclidean(1.0), &pr, &y, 0).unwrap(),
        vec![0.0, 0.0]
    );

    let pr = problem(
        Arc::new(HalfSqNorm::centered(vec![-1.0, -1.0])),
        vec![2],
        vec![FeasibleSet::cube(2, 0.0, 1.0).unwrap()],
    );
    let y = pr.point(vec![0.0, 0.0]).unwrap();
    assert_eq!(
        generalized_project(&MetricSpec::euclidean(0.5), &pr, &y, 0).unwrap(),
        vec![0.0, 0.0]
    );

    let pr = one_d(
        Arc::new(Linear { coef: vec![std::f64::consts::LN_2] }),
        FeasibleSet::orthant(1).unwrap(),
    );
    let y = pr.point(vec![1.0]).unwrap();
    let ent = MetricSpec::linearized(DistanceSpec::BregmanEntropy { sigma: 1.0 });
    let p = generalized_project(&ent, &pr, &y, 0).unwrap();
    assert!((p[0] - 0.5).abs() < 1e-15, "{p:?}");
}

#[test]
fn entropy_needs_interior_point() {
    let pr = problem(
        Arc::new(Linear { coef: vec![1.0, 1.0] }),
        vec![2],
        vec![FeasibleSet::orthant(2).unwrap()],
    );
    let y = pr.point(vec![0.0, 1.0]).unwrap();
    let ent = MetricSpec::linearized(DistanceSpec::BregmanEntropy { sigma: 1.0 });
    assert!(matches!(generalized_project(&ent, &pr, &y, 0), Err(Error::Domain(_))));

    let ball = problem(
        Arc::new(Linear { coef: vec![1.0] }),
        vec![1],
        vec![FeasibleSet::ball(vec![0.0], 1.0).unwrap()],
    );
    let y = ball.point(vec![0.5]).unwrap();
    assert!(generalized_project(&ent, &ball, &y, 0).is_err());
}

#[test]
fn family_preconditions() {
    let pr = problem(Arc::new(HalfSqNorm::new(1)), vec![1], vec![FeasibleSet::unbounded(1)]);
    let y = pr.point(vec![1.0]).unwrap();
    let prox = MetricSpec::new(MetricFamily::Proximity, euclid(1.0));
    assert!(generalized_project(&prox, &pr, &y, 0).is_err(), "convexity unknown");
    let pg = MetricSpec::new(MetricFamily::ProximalGradient, euclid(1.0));
    let convex = pr.clone().with_convexity(Convexity::Convex);
    assert!(generalized_project(&pg, &convex, &y, 0).is_err(), "no split");

    let weak = pr.with_convexity(Convexity::Weak { modulus: 2.0 });
    assert!(generalized_project(&prox, &weak, &y, 0).is_err(), "1/sigma = 1 <= 2");
    let prox_small = MetricSpec::new(MetricFamily::Proximity, euclid(0.25));
    assert!(generalized_project(&prox_small, &weak, &y, 0).is_ok());
}

#[test]
fn stationarity_residual_examples() {
    let pr = problem(
        Arc::new(HalfSqNorm::centered(vec![0.3, 0.4])),
        vec![2],
        vec![FeasibleSet::cube(2, 0.0, 1.0).unwrap()],
    );
    let x = pr.point(vec![0.3, 0.4]).unwrap();
    assert!(euclidean_residual(&pr, &x).unwrap() <= 1e-10);

    let pr = problem(
        Arc::new(HalfSqNorm::centered(vec![-1.0, -1.0])),
        vec![2],
        vec![FeasibleSet::cube(2, 0.0, 1.0).unwrap()],
    );
    assert_eq!(euclidean_residual(&pr, &pr.point(vec![0.0, 0.0]).unwrap()).unwrap(), 0.0);
    assert_eq!(euclidean_residual(&pr, &pr.point(vec![0.5, 0.0]).unwrap()).unwrap(), 0.5);
}

#[test]
fn zero_gradient_short_circuits_every_family() {
    let f: Arc<dyn Objective> = Arc::new(HalfSqNorm::centered(vec![0.25, 0.5]));
    let split = SmoothSplit {
        convex: Arc::clone(&f),
        smooth: Arc::new(Linear { coef: vec![0.0, 0.0] }),
    };
    let pr = problem(f, vec![2], vec![FeasibleSet::simplex(2, 0.75).unwrap()])
        .with_convexity(Convexity::Convex)
        .with_split(split)
        .unwrap();
    let y = pr.point(vec![0.25, 0.5]).unwrap();
    for family in [MetricFamily::Linearized, MetricFamily::Proximity, MetricFamily::ProximalGradient] {
        for d in [
            euclid(0.7),
            DistanceSpec::Scaled { alpha: 1.3, diag: vec![0.5, 2.0] },
            DistanceSpec::BregmanEntropy { sigma: 0.9 },
        ] {
            let p = generalized_project(&MetricSpec::new(family, d), &pr, &y, 0).unwrap();
            assert_eq!(p, vec![0.25, 0.5]);
        }
    }
}

#[test]
fn proximity_matches_closed_form_resolvent() {
    // prox of 0.5 x^2 with sigma: y / (1 + sigma), clipped to the box.
    let pr = one_d(Arc::new(HalfSqNorm::new(1)), FeasibleSet::cube(1, 0.2, 5.0).unwrap());
    let y = pr.point(vec![3.0]).unwrap();
    let prox = MetricSpec::new(MetricFamily::Proximity, euclid(2.0));
    assert_eq!(generalized_project(&prox, &pr, &y, 0).unwrap(), vec![1.0]);
    let y = pr.point(vec![0.45]).unwrap();
    assert_eq!(generalized_project(&prox, &pr, &y, 0).unwrap(), vec![0.2]);
}

#[test]
fn inner_solver_handles_coupled_blocks() {
    // Block 0 of a coupled quadratic: no separable closed form, so the inner solver runs.
    // Check first-order optimality of the returned point directly.
    let pr = problem(
        Arc::new(DenseQuadratic::coupled(4)),
        vec![2, 2],
        vec![FeasibleSet::cube(2, 0.0, 1.0).unwrap(), FeasibleSet::simplex(2, 1.0).unwrap()],
    )
    .with_convexity(Convexity::Convex);
    let y = pr.point(vec![0.9, 0.1, 0.3, 0.7]).unwrap();
    for block in 0..2 {
        for d in [euclid(0.8), DistanceSpec::BregmanEntropy { sigma: 0.8 }] {
            let spec = MetricSpec::new(MetricFamily::Proximity, d);
            let p = generalized_project(&spec, &pr, &y, block).unwrap();
            let g = metric_grad1(&spec, &pr, &p, &y, block).unwrap();
            let u: Vec<f64> = p.iter().zip(&g).map(|(a, b)| a - b).collect();
            let q = pr.set(block).euclidean_project(&u).unwrap();
            let r = q.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(r <= 1e-9, "block {block}: residual {r}");
        }
    }
}

// ---- property checks over random instances -------------------------------------------

/// Coupled convex quadratic with a split `f0 = 0.5 ||x - c||^2`, `f1 = coupled quadratic`.
fn split_problem(sets: Vec<FeasibleSet>, center: Vec<f64>) -> ObjectiveProblem {
    let n = center.len();
    let sizes = sets.iter().map(|s| s.dim()).collect();
    let f0: Arc<dyn Objective> = Arc::new(HalfSqNorm::centered(center));
    let f1: Arc<dyn Objective> = Arc::new(DenseQuadratic::coupled(n));
    let f: Arc<dyn Objective> = Arc::new(Sum(Arc::clone(&f0), Arc::clone(&f1)));
    problem(f, sizes, sets)
        .with_convexity(Convexity::Convex)
        .with_split(SmoothSplit { convex: f0, smooth: f1 })
        .unwrap()
}

fn all_specs(sigma: f64, n: usize) -> Vec<MetricSpec> {
    let diag: Vec<f64> = (0..n).map(|j| 0.5 + 0.4 * j as f64).collect();
    let mut out = Vec::new();
    for family in [MetricFamily::Linearized, MetricFamily::Proximity, MetricFamily::ProximalGradient] {
        for d in [
            euclid(sigma),
            DistanceSpec::Scaled { alpha: sigma, diag: diag.clone() },
            DistanceSpec::BregmanEntropy { sigma },
        ] {
            out.push(MetricSpec::new(family, d));
        }
    }
    out
}

fn arb_instance() -> impl Strategy<Value = (ObjectiveProblem, Vec<f64>, f64)> {
    (1usize..4, 0u8..3, 0.05f64..3.0).prop_flat_map(|(n, kind, sigma)| {
        let set = match kind {
            0 => FeasibleSet::cube(n, 0.0, 1.0).unwrap(),
            1 => FeasibleSet::orthant(n).unwrap(),
            _ => FeasibleSet::simplex(n, 1.0).unwrap(),
        };
        (
            Just(set),
            prop::collection::vec(-1.0f64..2.0, n),
            prop::collection::vec(0.01f64..1.0, n),
            Just(sigma),
        )
            .prop_map(|(set, c, raw, sigma)| {
                // Strictly interior feasible point.
                let x = match &set {
                    FeasibleSet::Simplex { radius, .. } => {
                        let s: f64 = raw.iter().sum();
                        raw.iter().map(|v| v / s * radius).collect()
                    }
                    _ => raw,
                };
                (split_problem(vec![set], c), x, sigma)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_gives_descent_direction((pr, x, sigma) in arb_instance()) {
        let y = pr.point(x.clone()).unwrap();
        let g = pr.gradient(&y).unwrap();
        for spec in all_specs(sigma, x.len()) {
            let p = generalized_project(&spec, &pr, &y, 0).unwrap();
            prop_assert!(pr.set(0).contains(&p, 1e-12).unwrap());
            let slope: f64 = g.iter().zip(p.iter().zip(&x)).map(|(gj, (pj, xj))| gj * (pj - xj)).sum();
            let step = p.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            prop_assert!(slope <= 1e-12, "{spec:?}: slope {slope}");
            if step > 1e-6 {
                prop_assert!(slope < -1e-10 * step, "{spec:?}: slope {slope}, step {step}");
            }
        }
    }

    #[test]
    fn metric_gradient_matches_block_gradient_on_diagonal((pr, x, sigma) in arb_instance()) {
        let y = pr.point(x.clone()).unwrap();
        let g = pr.block_gradient(&y, 0).unwrap();
        for spec in all_specs(sigma, x.len()) {
            let h1 = metric_grad1(&spec, &pr, &x, &y, 0).unwrap();
            for (a, b) in h1.iter().zip(&g) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{spec:?}: {a} vs {b}");
            }
            // Central differences of metric_eval agree with grad_1.
            let h = 1e-6;
            for j in 0..x.len() {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[j] += h;
                xm[j] -= h;
                let fd = (metric_eval(&spec, &pr, &xp, &y, 0).unwrap()
                    - metric_eval(&spec, &pr, &xm, &y, 0).unwrap()) / (2.0 * h);
                prop_assert!((fd - g[j]).abs() <= 1e-5 * (1.0 + g[j].abs()), "{spec:?}: fd {fd} vs {}", g[j]);
            }
        }
    }

    #[test]
    fn projection_is_continuous_in_sigma((pr, x, sigma) in arb_instance()) {
        let y = pr.point(x.clone()).unwrap();
        for (a, b) in all_specs(sigma, x.len()).into_iter().zip(all_specs(sigma * (1.0 + 1e-8), x.len())) {
            let pa = generalized_project(&a, &pr, &y, 0).unwrap();
            let pb = generalized_project(&b, &pr, &y, 0).unwrap();
            let diff = pa.iter().zip(&pb).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
            let scale = 1.0 + pa.iter().map(|u| u * u).sum::<f64>().sqrt();
            prop_assert!(diff <= 1e-6 * scale, "{a:?}: {diff}");
        }
    }

    #[test]
    fn proximity_metric_majorizes_objective((pr, x, sigma) in arb_instance(), t in 0.0f64..1.0) {
        let y = pr.point(x.clone()).unwrap();
        let other = pr.set(0).euclidean_project(&x.iter().map(|v| v + t - 0.5).collect::<Vec<_>>()).unwrap();
        let z = pr.point(other.clone()).unwrap();
        let spec = MetricSpec::new(MetricFamily::Proximity, euclid(sigma));
        let h = metric_eval(&spec, &pr, &other, &y, 0).unwrap();
        prop_assert!(h >= pr.eval_objective(&z).unwrap() - 1e-12);
    }

    #[test]
    fn proximal_gradient_majorizes_when_distance_dominates((pr, x, _sigma) in arb_instance(), t in 0.0f64..1.0) {
        // f1 is the coupled quadratic; its gradient is Lipschitz with constant <= ||A||_inf.
        let n = x.len();
        let a = DenseQuadratic::coupled(n).a;
        let lip = (0..n).map(|i| (0..n).map(|j| a[i * n + j].abs()).sum::<f64>()).fold(0.0, f64::max);
        let sigma = 0.9 / lip;
        let y = pr.point(x.clone()).unwrap();
        let other = pr.set(0).euclidean_project(&x.iter().map(|v| v + t - 0.5).collect::<Vec<_>>()).unwrap();
        let spec = MetricSpec::new(MetricFamily::ProximalGradient, euclid(sigma));
        // h(x, y) + f1(y) >= f(x): the constant f1(y) is not part of h.
        let f1y = pr.split().unwrap().smooth.value(&x);
        let h = metric_eval(&spec, &pr, &other, &y, 0).unwrap() + f1y;
        let fz = pr.eval_objective(&pr.point(other).unwrap()).unwrap();
        prop_assert!(h >= fz - 1e-12, "h {h} < f {fz}");
    }

    #[test]
    fn block_projection_concatenates(vals in prop::collection::vec(-2.0f64..3.0, 4), sigma in 0.1f64..2.0) {
        // Same separable problem seen as one block of 4 and as blocks (1, 3).
        let c = vec![0.2, -0.4, 1.5, 0.7];
        let whole = problem(Arc::new(HalfSqNorm::centered(c.clone())), vec![4],
            vec![FeasibleSet::cube(4, 0.0, 1.0).unwrap()]);
        let parts = problem(Arc::new(HalfSqNorm::centered(c)), vec![1, 3],
            vec![FeasibleSet::cube(1, 0.0, 1.0).unwrap(), FeasibleSet::cube(3, 0.0, 1.0).unwrap()]);
        let x: Vec<f64> = vals.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let full = project_all(&[MetricSpec::euclidean(sigma)], &whole, &whole.point(x.clone()).unwrap()).unwrap();
        let split = project_all(&[MetricSpec::euclidean(sigma), MetricSpec::euclidean(sigma)], &parts,
            &parts.point(x).unwrap()).unwrap();
        prop_assert_eq!(full, split);
    }
}
