mod common;

use drlogit::estimators::EstimatorKind;
use drlogit::model::{expit, Basis, BasisTerm, PhiSpec, ZFamily};
use drlogit::nuisance::fit_outcome_mle;
use drlogit::sim::{
    run_scenario, sample_gaussian_tilted, scenario_catalog, select_scenarios, ComponentLaw, LinearPredictor,
    MonteCarloConfig, Scenario, TrueLaw, XLaw,
};
use drlogit::Error;

fn grid_law(beta: f64, z: ComponentLaw) -> TrueLaw {
    TrueLaw::new(
        vec![beta],
        XLaw::Grid {
            points: vec![vec![-1.0], vec![0.0], vec![1.0]],
            probs: vec![0.25, 0.35, 0.4],
        },
        LinearPredictor::new(vec![(BasisTerm::Intercept, -0.2), (BasisTerm::Linear(0), 0.5), (BasisTerm::Square(0), 0.4)]),
        vec![z],
    )
    .unwrap()
}

fn mean_sd(v: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = v.clone().count();
    let m = v.clone().sum::<f64>() / n as f64;
    let var = v.map(|a| (a - m).powi(2)).sum::<f64>() / n as f64;
    (m, var.sqrt(), n)
}

#[test]
fn untilted_gaussian_moments() {
    let law = grid_law(0.0, ComponentLaw::gaussian(LinearPredictor::new(vec![(BasisTerm::Intercept, 0.3), (BasisTerm::Linear(0), 0.8)]), 1.7));
    let data = sample_gaussian_tilted(&law, 1_000_000, 17).unwrap();
    for (i, x) in [-1.0, 0.0, 1.0].into_iter().enumerate() {
        let rows: Vec<usize> = (0..data.n()).filter(|&k| data.x(k)[0] == x).collect();
        let (m, _, n) = mean_sd(rows.iter().map(|&k| data.z(k)[0]));
        let target = 0.3 + 0.8 * x;
        assert!((m - target).abs() <= 3.0 * (1.7f64 / n as f64).sqrt(), "x index {i}: mean {m}");
        let (var_mean, _, _) = mean_sd(rows.iter().map(|&k| (data.z(k)[0] - target).powi(2)));
        // Var of (Z - m)² is 2σ⁴.
        assert!((var_mean - 1.7).abs() <= 3.0 * (2.0 * 1.7f64.powi(2) / n as f64).sqrt());
        let p1 = expit(-0.2 + 0.5 * x + 0.4 * x * x);
        let (freq, _, _) = mean_sd(rows.iter().map(|&k| f64::from(data.y(k))));
        assert!((freq - p1).abs() <= 3.0 * (p1 * (1.0 - p1) / n as f64).sqrt());
    }
}

#[test]
fn unit_tilt_response_frequency() {
    let law = TrueLaw::new(
        vec![1.0],
        XLaw::Grid {
            points: vec![vec![0.0]],
            probs: vec![1.0],
        },
        LinearPredictor::constant(0.0),
        vec![ComponentLaw::gaussian(LinearPredictor::constant(0.0), 1.0)],
    )
    .unwrap();
    let (_, p1) = common::tilt_by_integration(1.0, 0.0, 1.0, 0.0);
    let t = 0.5f64.exp();
    assert!((p1 - t / (1.0 + t)).abs() <= 1e-10);
    assert!((p1 - 0.6225).abs() < 1e-4);
    let data = sample_gaussian_tilted(&law, 1_000_000, 23).unwrap();
    let freq = data.count_y1() as f64 / data.n() as f64;
    assert!((freq - p1).abs() <= 3.0 * (p1 * (1.0 - p1) / data.n() as f64).sqrt(), "{freq}");
}

#[test]
fn tilted_data_follow_a_logistic_model_in_z() {
    // On a 3-point grid the basis (1, x, x²) is saturated in X, so the logistic fit is correct.
    let law = grid_law(
        0.7,
        ComponentLaw::gaussian(LinearPredictor::new(vec![(BasisTerm::Intercept, 0.1), (BasisTerm::Square(0), 0.6)]), 0.8),
    );
    let data = sample_gaussian_tilted(&law, 1_000_000, 29).unwrap();
    let fit = fit_outcome_mle(&data, &Basis::parse(&["1", "x1", "x1^2"]).unwrap()).unwrap();
    let inv = fit.info_matrix.clone().try_inverse().unwrap();
    let se = (inv[(0, 0)] / data.n() as f64).sqrt();
    assert!((fit.params.beta[0] - 0.7).abs() <= 3.0 * se, "{} ± {se}", fit.params.beta[0]);
}

#[test]
fn tilt_formula_matches_integration() {
    let mut rng = common::rng(31);
    use rand::Rng;
    for _ in 0..20 {
        let beta = rng.random_range(-2.0..2.0);
        let m = rng.random_range(-2.0..2.0);
        let s2 = rng.random_range(0.2..3.0);
        let g = rng.random_range(-2.0..2.0);
        let law = TrueLaw::new(
            vec![beta],
            XLaw::Grid {
                points: vec![vec![0.0]],
                probs: vec![1.0],
            },
            LinearPredictor::constant(g),
            vec![ComponentLaw::gaussian(LinearPredictor::constant(m), s2)],
        )
        .unwrap();
        let (c, p1) = law.gaussian_tilt(&[0.0]).unwrap();
        let (ci, p1i) = common::tilt_by_integration(beta, m, s2, g);
        assert!(common::rel_err(c, ci) <= 1e-8 && (p1 - p1i).abs() <= 1e-8);
    }
}

fn small(name: &str, n: usize, reps: usize) -> Scenario {
    select_scenarios(&[name.to_string()]).unwrap().remove(0).with_size(n, reps)
}

#[test]
fn summaries_satisfy_the_rmse_identity() {
    let sc = small("S3-gauss", 400, 40);
    let s = run_scenario(&sc, &MonteCarloConfig::default()).unwrap();
    assert_eq!(s.rows.len(), 5);
    for r in &s.rows {
        assert!((r.rmse.powi(2) - (r.bias.powi(2) + r.sd.powi(2))).abs() <= 1e-10);
        assert!((r.mcse - r.sd / ((40 - r.n_fail) as f64).sqrt()).abs() <= 1e-15);
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let sc = small("S1-bin", 300, 24);
    let mut cfg = MonteCarloConfig::default();
    cfg.estimators.push(EstimatorKind::ClosedForm);
    let one = run_scenario(&sc, &cfg).unwrap();
    cfg.workers = 8;
    let eight = run_scenario(&sc, &cfg).unwrap();
    assert_eq!(one.to_json().unwrap(), eight.to_json().unwrap());
    assert_eq!(one.draws, eight.draws);
    let other_seed = run_scenario(&sc.clone().with_seed(sc.seed + 1), &cfg).unwrap();
    assert_ne!(one.draws, other_seed.draws);
}

#[test]
fn runner_rejects_and_aborts() {
    let mut cfg = MonteCarloConfig::default();
    cfg.estimators = vec![EstimatorKind::ClosedForm];
    assert!(run_scenario(&small("S1-gauss", 100, 5), &cfg).is_err());
    // Twelve observations: the outcome fit fails in most replications.
    let cfg = MonteCarloConfig {
        estimators: vec![EstimatorKind::dr0(PhiSpec::Simple)],
        ..Default::default()
    };
    let err = run_scenario(&small("S2-bin", 12, 20), &cfg).unwrap_err();
    assert!(matches!(err, Error::Aborted(_)), "{err}");
}

#[test]
fn catalog_documents_every_case() {
    let cat = scenario_catalog();
    assert_eq!(cat.len(), 12);
    for s in &cat {
        assert!(s.working_basis.dim() == 3);
        assert_eq!(s.law.families()[0], if s.name.ends_with("-bin") { ZFamily::Bernoulli } else { ZFamily::Gaussian });
        assert!(!s.description.is_empty());
    }
    let s3 = cat.iter().find(|s| s.name == "S3-gauss").unwrap();
    assert_eq!((s3.g_correct, s3.f_correct), (true, false));
}
