mod common;

use drlogit::model::{Basis, Dataset, ZFamily};
use drlogit::nuisance::{fit_covariate, fit_covariate_y1, fit_outcome_calibrated, fit_outcome_mle};
use nalgebra::DVector;

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

#[test]
fn influence_values_predict_sampling_variance() {
    let basis = Basis::linear(1);
    let reps: u64 = 1000;
    let n = 2000;
    let k_out = 3;
    let mut estimates = vec![Vec::new(); k_out + 2];
    let mut predicted = vec![0.0; k_out + 2];
    for rep in 0..reps {
        // Same law every replication; only the sampling seed moves.
        let data = same_law_dataset(1000 + rep, n);
        let out = fit_outcome_mle(&data, &basis).unwrap();
        let cov = fit_covariate(&data, &basis, &[ZFamily::Gaussian]).unwrap();
        let params: Vec<f64> = out
            .params
            .beta
            .iter()
            .chain(out.params.alpha.iter())
            .chain(cov.params.gamma.iter())
            .copied()
            .collect();
        let s: Vec<DVector<f64>> = out
            .s1
            .column_iter()
            .chain(cov.s2.column_iter())
            .map(|c| c.into_owned())
            .collect();
        for k in 0..params.len() {
            estimates[k].push(params[k]);
            predicted[k] += s[k].norm_squared() / (n * n) as f64 / reps as f64;
        }
    }
    for k in 0..estimates.len() {
        let empirical = variance(&estimates[k]);
        let ratio = predicted[k] / empirical;
        assert!((ratio - 1.0).abs() <= 0.15, "parameter {k}: predicted {} empirical {empirical}", predicted[k]);
    }
}

fn same_law_dataset(seed: u64, n: usize) -> Dataset {
    use rand::Rng;
    use rand_distr::{Distribution, Normal};
    let mut r = common::rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let (mut y, mut z, mut x) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let xi: f64 = r.random_range(-1.0..1.0);
        let zi = 0.3 + 0.8 * xi + normal.sample(&mut r);
        let eta = 0.5 * zi - 0.2 + 0.7 * xi;
        y.push(u8::from(r.random::<f64>() < drlogit::model::expit(eta)));
        z.push(vec![zi]);
        x.push(vec![xi]);
    }
    Dataset::new(y, &z, &x).unwrap()
}

#[test]
fn saturated_fits_coincide() {
    // Z = (z, z·x) with binary z and x ∈ {0, 1}: four parameters for four cells.
    let mut r = common::rng(3);
    let (mut y, mut z, mut x) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..800 {
        use rand::Rng;
        let xi = f64::from(r.random::<bool>());
        let zi = f64::from(r.random::<f64>() < 0.4);
        let eta = -0.3 + 0.8 * zi + 0.5 * xi - 0.6 * zi * xi;
        y.push(u8::from(r.random::<f64>() < drlogit::model::expit(eta)));
        z.push(vec![zi, zi * xi]);
        x.push(vec![xi]);
    }
    let data = Dataset::new(y, &z, &x).unwrap();
    let basis = Basis::linear(1);
    let mle = fit_outcome_mle(&data, &basis).unwrap();
    let cal = fit_outcome_calibrated(&data, &basis).unwrap();
    assert!(mle.eq_norm <= 1e-10 && cal.eq_norm <= 1e-10);
    for (a, b) in mle.params.beta.iter().chain(mle.params.alpha.iter()).zip(cal.params.beta.iter().chain(cal.params.alpha.iter())) {
        assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
    }
}

#[test]
fn balanced_z_gives_logit_of_mean_for_both_fits() {
    // Y has mean 1/4 in both Z groups, so β̂ = 0 and α̂ = -ln 3.
    let mut y = Vec::new();
    let mut z = Vec::new();
    for k in 0..16 {
        y.push(u8::from(k % 4 == 0));
        z.push(vec![f64::from((k / 4) % 2 == 0)]);
    }
    let x = vec![vec![]; 16];
    let data = Dataset::new(y, &z, &x).unwrap();
    let basis = Basis::intercept_only();
    for fit in [fit_outcome_mle(&data, &basis).unwrap(), fit_outcome_calibrated(&data, &basis).unwrap()] {
        assert!(fit.params.beta[0].abs() <= 1e-10);
        assert!((fit.params.alpha[0] + 3f64.ln()).abs() <= 1e-10);
    }
}

#[test]
fn covariate_fits_ignore_the_other_response_level() {
    let data = common::forward_dataset(11, 400, 0.7, false);
    let basis = Basis::linear(1);
    let fam = [ZFamily::Gaussian];
    let f0 = fit_covariate(&data, &basis, &fam).unwrap();
    let f1 = fit_covariate_y1(&data, &basis, &fam).unwrap();
    let mut changed = data.clone();
    for i in 0..data.n() {
        let v = data.z(i)[0] * 3.0 - 100.0;
        changed = changed.with_z_row(i, &[v]);
    }
    let mut y1_changed = data.clone();
    let mut y0_changed = data.clone();
    for i in 0..data.n() {
        if data.y(i) == 1 {
            y1_changed = y1_changed.with_z_row(i, changed.z(i));
        } else {
            y0_changed = y0_changed.with_z_row(i, changed.z(i));
        }
    }
    assert_eq!(fit_covariate(&y1_changed, &basis, &fam).unwrap().params, f0.params);
    assert_eq!(fit_covariate_y1(&y0_changed, &basis, &fam).unwrap().params, f1.params);
}

#[test]
fn covariate_fit_solves_its_normal_equations() {
    let basis = Basis::linear(1);
    for (seed, binary) in [(21, false), (22, true)] {
        let data = common::forward_dataset(seed, 500, -0.4, binary);
        let fam = [if binary { ZFamily::Bernoulli } else { ZFamily::Gaussian }];
        for fit in [fit_covariate(&data, &basis, &fam).unwrap(), fit_covariate_y1(&data, &basis, &fam).unwrap()] {
            // Recompute Σ b(x)(z - f(x)) over the subsample.
            let level = fit.side.level();
            let mut eq = [0.0; 2];
            for i in (0..data.n()).filter(|&i| data.y(i) == level) {
                let b = basis.eval(data.x(i));
                let e = data.z(i)[0] - fit.params.mean(0, b.as_slice());
                eq[0] += e;
                eq[1] += e * b[1];
            }
            let m = fit.subsample_size as f64;
            assert!(eq.iter().all(|v| (v / m).abs() <= 1e-10), "{eq:?}");
            for c in fit.s2.column_iter() {
                assert!(c.mean().abs() <= 1e-8);
            }
            assert!(fit.eq_norm <= 1e-10);
        }
    }
}

#[test]
fn outcome_fits_solve_their_equations() {
    let basis = Basis::linear(1);
    let data = common::forward_dataset(31, 1500, 0.9, false);
    let mle = fit_outcome_mle(&data, &basis).unwrap();
    let mut score = [0.0; 3];
    for i in 0..data.n() {
        let b = basis.eval(data.x(i));
        let w = [data.z(i)[0], b[0], b[1]];
        let pi = drlogit::model::pi_eval(data.z(i), data.x(i), &mle.params, &basis).unwrap();
        for k in 0..3 {
            score[k] += (f64::from(data.y(i)) - pi) * w[k] / data.n() as f64;
        }
    }
    assert!(score.iter().all(|v| v.abs() <= 1e-10), "{score:?}");
    let cal = fit_outcome_calibrated(&data, &basis).unwrap();
    assert!(cal.converged && cal.eq_norm <= 1e-10);
}
