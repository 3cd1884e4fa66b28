//! Synthetic likelihood, Laplace fits and evidences on surrogates and on the
//! death model.

use approx::assert_relative_eq;
use sldesign::kinetics::{Design, ModelKind, ModelSpec, Simulator};
use sldesign::laplace::{
    importance_sample, laplace_fit, laplace_fit_exact, lis_posterior, posterior_model_probs, LaplaceOptions, LisOptions,
};
use sldesign::linalg::Matrix;
use sldesign::sampling::PriorSpec;
use sldesign::summaries::{summarize, SummaryScheme};
use sldesign::surrogate::LinearGaussian;
use sldesign::synlik::{fit_synlik, CtmcSummaries, MomentSource, SynLikSettings};

fn analytic() -> SynLikSettings {
    SynLikSettings {
        moments: MomentSource::Analytic,
        ..SynLikSettings::default()
    }
}

#[test]
fn synthetic_moments_converge_to_the_exact_ones() {
    let design = Design::from_times(vec![1.0, 2.0, 4.0]).unwrap();
    let model = LinearGaussian::bumps(&design, &[1.5, 3.0], 1.0, 0.4).unwrap();
    let x = [0.2, -0.3];
    let fit = fit_synlik(&model, &x, 20_000, 3).unwrap();
    let mean = model.mean(&x);
    for (a, b) in fit.mean.iter().zip(mean.iter()) {
        assert!((a - b).abs() < 0.02);
    }
    let rel = (&fit.cov - model.noise_cov()).norm() / model.noise_cov().norm();
    assert!(rel < 0.05, "{rel}");
}

#[test]
fn laplace_on_a_conjugate_model_is_the_exact_posterior() {
    let model = LinearGaussian::new(
        Matrix::from_row_slice(3, 2, &[1.0, 0.3, -0.2, 0.8, 0.5, 0.5]),
        Matrix::from_row_slice(3, 3, &[0.2, 0.02, 0.0, 0.02, 0.1, 0.01, 0.0, 0.01, 0.15]),
    )
    .unwrap();
    let prior = PriorSpec::new(vec![0.1, -0.2], vec![0.6, 0.4]).unwrap();
    let s = [0.4, -0.1, 0.2];
    let mut opts = LaplaceOptions::default();
    opts.nelder_mead.x_tol = 1e-9;
    opts.nelder_mead.f_tol = 1e-13;
    opts.nelder_mead.max_iter = 10_000;
    let fit = laplace_fit(&model, &prior, &s, &analytic(), &opts, 1).unwrap();
    let (m, c) = model.posterior(&prior, &s).unwrap();
    assert!(fit.pass);
    for (a, b) in fit.mode.iter().zip(m.iter()) {
        assert_relative_eq!(a, b, epsilon = 1e-5);
    }
    assert!((&fit.cov - &c).norm() / c.norm() < 1e-4);
    assert_relative_eq!(fit.log_evidence, model.log_evidence(&prior, &s).unwrap(), epsilon = 1e-5);
}

#[test]
fn evidences_pick_the_generating_surrogate() {
    let a = LinearGaussian::new(Matrix::from_row_slice(2, 1, &[1.0, 0.0]), Matrix::identity(2, 2) * 0.01).unwrap();
    let b = LinearGaussian::new(Matrix::from_row_slice(2, 1, &[0.0, 1.0]), Matrix::identity(2, 2) * 0.01).unwrap();
    let prior = PriorSpec::new(vec![0.0], vec![1.0]).unwrap();
    let s = [0.8, 0.0];
    let ev: Vec<f64> = [&a, &b]
        .iter()
        .map(|m| laplace_fit(*m, &prior, &s, &analytic(), &LaplaceOptions::default(), 2).unwrap().log_evidence)
        .collect();
    let post = posterior_model_probs(&ev, &[0.5, 0.5]).unwrap();
    assert!(post.probs[0] > 0.99);
}

#[test]
fn synthetic_and_exact_death_posteriors_agree() {
    let spec = ModelSpec::death();
    let prior = PriorSpec::preset(ModelKind::Death);
    let design = Design::from_times(vec![0.5, 1.0, 2.0, 3.0, 5.0, 8.0]).unwrap();
    let th = sldesign::kinetics::Theta::new(vec![(-0.48f64).exp()]).unwrap();
    let traj = sldesign::kinetics::simulate_ssa(&spec, &th, &design, 17).unwrap();
    let scheme = SummaryScheme::mean_variance();
    let s = summarize(&traj, &scheme).unwrap();
    let model = CtmcSummaries::new(spec.clone(), design, scheme, Simulator::Exact).unwrap();
    let syn = laplace_fit(&model, &prior, s.as_slice(), &SynLikSettings::default(), &LaplaceOptions::default(), 5).unwrap();
    let exact = laplace_fit_exact(&spec, &prior, &traj, &LaplaceOptions::default()).unwrap();
    assert!(syn.pass && exact.pass);
    let (sd_s, sd_e) = (syn.cov[(0, 0)].sqrt(), exact.cov[(0, 0)].sqrt());
    assert!((syn.mode[0] - exact.mode[0]).abs() < sd_e, "{} vs {}", syn.mode[0], exact.mode[0]);
    assert!((sd_s / sd_e - 1.0).abs() < 0.35, "{sd_s} vs {sd_e}");
    assert!(sd_e < prior.sds()[0]);
}

#[test]
fn importance_sampling_recovers_a_gaussian_target() {
    let model = LinearGaussian::new(Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.4, 1.0]), Matrix::identity(2, 2) * 0.1)
        .unwrap();
    let prior = PriorSpec::new(vec![0.0, 0.0], vec![0.7, 0.7]).unwrap();
    let s = [0.3, 0.1];
    let fit = laplace_fit(&model, &prior, &s, &analytic(), &LaplaceOptions::default(), 4).unwrap();
    let lis = lis_posterior(&fit, &model, &prior, &s, &analytic(), &LisOptions { n_is: 4000, inflation: 1.2 }, 9).unwrap();
    let (m, c) = model.posterior(&prior, &s).unwrap();
    assert!(lis.ess > 2000.0, "{}", lis.ess);
    for (a, b) in lis.mean.iter().zip(m.iter()) {
        assert!((a - b).abs() < 0.02);
    }
    let exact = -c.determinant().ln();
    assert!((lis.log_det_precision.unwrap() - exact).abs() < 0.15);
    let flat = importance_sample(&fit, &LisOptions::default(), 1, |_| 0.0).unwrap();
    assert!(flat.ess < 1000.0);
}
