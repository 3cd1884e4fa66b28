//! Expected-utility estimates and the design search on surrogates.

use sldesign::design::{ace_optimize, equally_spaced, random_design, AceOptions, DesignSpace, QuadraticObjective};
use sldesign::kinetics::Design;
use sldesign::sampling::{Method, PriorSpec};
use sldesign::stats::{mean, sd};
use sldesign::surrogate::LinearGaussian;
use sldesign::synlik::MomentSource;
use sldesign::utility::{
    aggregate, evaluate_draw, expected_utility, plan_draws, DrawUtility, EstimatorOptions, UtilityKind, UtilityProblem,
};

fn surrogate() -> (Vec<LinearGaussian>, Vec<PriorSpec>) {
    let design = Design::from_times(vec![1.0, 3.0, 5.0, 7.0, 9.0]).unwrap();
    (
        vec![LinearGaussian::bumps(&design, &[2.0, 6.0], 1.5, 0.3).unwrap()],
        vec![PriorSpec::new(vec![0.0, 0.0], vec![0.5, 0.5]).unwrap()],
    )
}

#[test]
fn conjugate_sigp_matches_the_closed_form() {
    let (models, priors) = surrogate();
    let mut problem = UtilityProblem::new(&models, &priors, UtilityKind::Sigp).unwrap();
    problem.settings.moments = MomentSource::Analytic;
    let exact = models[0].expected_information_gain(&priors[0]).unwrap();
    for method in [Method::Mc, Method::Rqmc] {
        let est = expected_utility(&problem, &EstimatorOptions::new(1000, method), 12).unwrap();
        assert!((est.mean - exact).abs() <= 3.0 * est.se, "{method:?}: {} vs {exact} (se {})", est.mean, est.se);
        assert!(est.mean >= 0.0);
    }
}

#[test]
fn repeated_evaluations_scatter_like_the_reported_error() {
    let (models, priors) = surrogate();
    let mut problem = UtilityProblem::new(&models, &priors, UtilityKind::Sigp).unwrap();
    problem.settings.moments = MomentSource::Analytic;
    let runs: Vec<_> = (0..40)
        .map(|s| expected_utility(&problem, &EstimatorOptions::new(200, Method::Mc), 500 + s).unwrap())
        .collect();
    let means: Vec<f64> = runs.iter().map(|e| e.mean).collect();
    let se = mean(&runs.iter().map(|e| e.se).collect::<Vec<_>>());
    let ratio = sd(&means) / se;
    assert!((0.6..1.6).contains(&ratio), "{ratio}");
}

#[test]
fn substitution_never_raises_the_estimate() {
    let (models, priors) = surrogate();
    let mut problem = UtilityProblem::new(&models, &priors, UtilityKind::Sigp).unwrap();
    problem.settings.moments = MomentSource::Analytic;
    let opts = EstimatorOptions::new(64, Method::Mc);
    let draws = plan_draws(&priors, &opts, 3).unwrap();
    let mut outcomes: Vec<Option<DrawUtility>> = draws.iter().map(|d| evaluate_draw(&problem, d).unwrap()).collect();
    let kept: Vec<f64> = outcomes.iter().skip(10).flatten().map(|u| u.value).collect();
    for o in outcomes.iter_mut().take(10) {
        *o = None;
    }
    let est = aggregate(UtilityKind::Sigp, &[1.0], &opts, &draws, &outcomes).unwrap();
    assert_eq!(est.substituted, 10);
    assert!(est.mean <= mean(&kept));
}

#[test]
fn single_model_sigm_is_zero_everywhere() {
    let (models, priors) = surrogate();
    let problem = UtilityProblem::new(&models, &priors, UtilityKind::Sigm).unwrap();
    let est = expected_utility(&problem, &EstimatorOptions::new(16, Method::Rqmc), 1).unwrap();
    assert_eq!(est.mean, 0.0);
    assert_eq!(est.substituted, 0);
}

#[test]
fn fmd_spacing_survives_the_search() {
    let space = DesignSpace::new((0.25, 30.0), 20, 0.25).unwrap();
    let target: Vec<f64> = random_design(&space, 4).times().to_vec();
    let opts = AceOptions {
        sweeps: 2,
        candidates: 8,
        ..AceOptions::default()
    };
    let r = ace_optimize(&QuadraticObjective { target }, &space, &equally_spaced(&space), &opts, 6).unwrap();
    for entry in &r.trace {
        assert!(entry.design.windows(2).all(|w| w[1] - w[0] >= 0.25 - 1e-12));
    }
    assert!(r.design.smallest_gap() >= 0.25 - 1e-12);
}
