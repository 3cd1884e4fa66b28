use sldesign::sampling::{prior_sample, sobol_owen, unit_draws, Method, PriorSpec};
use sldesign::kinetics::ModelKind;
use sldesign::stats::{mean, sd};

#[test]
fn scrambled_points_average_to_one_half() {
    for seed in [1, 2, 3] {
        let b = sobol_owen(1, 1 << 10, seed).unwrap();
        let m = mean(&(0..b.len()).map(|i| b.point(i)[0]).collect::<Vec<_>>());
        assert!((m - 0.5).abs() < 1e-3, "{m}");
    }
}

fn estimate(method: Method, seed: u64) -> f64 {
    let q = 1 << 12;
    let b = unit_draws(2, q, method, seed).unwrap();
    mean(&(0..q).map(|i| b.point(i)[0] * b.point(i)[1]).collect::<Vec<_>>())
}

#[test]
fn rqmc_beats_mc_on_a_smooth_integrand() {
    let rq: Vec<f64> = (0..50).map(|s| estimate(Method::Rqmc, s)).collect();
    let mc: Vec<f64> = (0..50).map(|s| estimate(Method::Mc, s)).collect();
    assert!(sd(&rq) < sd(&mc), "{} vs {}", sd(&rq), sd(&mc));
    assert!((mean(&rq) - 0.25).abs() < 3.0 * sd(&rq) / 50f64.sqrt() + 1e-9);
}

#[test]
fn rqmc_and_mc_agree_on_average() {
    let rq: Vec<f64> = (0..100).map(|s| estimate(Method::Rqmc, 1000 + s)).collect();
    let mc: Vec<f64> = (0..100).map(|s| estimate(Method::Mc, 1000 + s)).collect();
    let se = (sd(&rq).powi(2) / 100.0 + sd(&mc).powi(2) / 100.0).sqrt();
    assert!((mean(&rq) - mean(&mc)).abs() <= 3.0 * se);
}

#[test]
fn prior_draws_have_the_stated_log_moments() {
    let prior = PriorSpec::preset(ModelKind::Si);
    let b = unit_draws(2, 4096, Method::Rqmc, 8).unwrap();
    let logs: Vec<Vec<f64>> = (0..b.len()).map(|i| prior_sample(&prior, b.point(i)).unwrap().log()).collect();
    for p in 0..2 {
        let col: Vec<f64> = logs.iter().map(|v| v[p]).collect();
        assert!((mean(&col) - prior.means()[p]).abs() < 0.01);
        assert!((sd(&col) - prior.sds()[p]).abs() < 0.01);
    }
}
