use admmlab::model::{generate_instance, MatrixEnsemble, SignalPrior};
use admmlab::prediction::{predict_trajectory, PredictionConfig};
use admmlab::regularizer::SeparableRegularizer;
use admmlab::rng::trial_rng;
use admmlab::solver::{run, AdmmConfig};

fn main() {
    let (delta, p0, sigma_v2, rho, lambda) = (0.9, 0.8, 0.001, 0.1, 0.1);
    let n = 500;
    let trials = 30;
    let iters = 30;
    let prior = SignalPrior::bernoulli_gaussian(p0).unwrap();
    let config = AdmmConfig::new(rho, lambda, iters).unwrap();

    let mut emp = vec![0.0; iters];
    for t in 0..trials {
        let inst = generate_instance(prior, MatrixEnsemble::GaussianIid, n, delta, sigma_v2,
            &mut trial_rng(1, t)).unwrap();
        let traj = run(&inst, &config, SeparableRegularizer::L1).unwrap();
        for (i, r) in traj.records.iter().enumerate() { emp[i] += r.mse; }
    }
    for v in emp.iter_mut() { *v /= trials as f64; }

    let fresh = PredictionConfig { particles: 50_000, seed: 1, fresh_h: true, ..Default::default() };
    let fixed = PredictionConfig { particles: 50_000, seed: 1, fresh_h: false, ..Default::default() };
    let pf = predict_trajectory(prior, SeparableRegularizer::L1, lambda, delta, sigma_v2, rho, iters, &fresh).unwrap();
    let px = predict_trajectory(prior, SeparableRegularizer::L1, lambda, delta, sigma_v2, rho, iters, &fixed).unwrap();

    println!("  k    empirical     pred-fresh    pred-fixed    dB(fixed)");
    for k in 0..iters {
        let db = 10.0 * (emp[k] / px.records[k].mse_corollary).log10();
        println!("{:3}  {:.6e}  {:.6e}  {:.6e}  {:+.3}",
            k + 1, emp[k], pf.records[k].mse_corollary, px.records[k].mse_corollary, db);
    }
}
