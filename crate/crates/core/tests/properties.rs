use proptest::prelude::*;
use sldesign::design::{random_design, DesignSpace};
use sldesign::kinetics::{simulate_into, Design, ModelSpec, Simulator};
use sldesign::laplace::posterior_model_probs;
use sldesign::linalg::{Matrix, Vector};
use sldesign::rng;
use sldesign::sampling::{sobol_owen, Method, PriorSpec};
use sldesign::summaries::{summarize_counts, SummaryScheme};
use sldesign::synlik::{regularize, SynLikFit};
use sldesign::utility::{plan_draws, EstimatorOptions};

fn space() -> impl Strategy<Value = DesignSpace> {
    (0.0f64..5.0, 0.5f64..30.0, 1usize..25, 0.0f64..1.0).prop_map(|(lo, width, l, frac)| {
        let gap = if l > 1 { frac * width / (l - 1) as f64 } else { 0.0 };
        DesignSpace::new((lo, lo + width), l, gap).unwrap()
    })
}

proptest! {
    #[test]
    fn random_designs_satisfy_their_space(space in space(), seed in any::<u64>()) {
        let d = random_design(&space, seed);
        prop_assert_eq!(d.len(), space.points);
        prop_assert!(space.contains(&d));
        prop_assert!(Design::new(d.times().to_vec(), space.window, space.min_gap).is_ok());
    }

    #[test]
    fn moving_one_time_keeps_or_rejects(space in space(), seed in any::<u64>(), k in 0usize..25, t in -10.0f64..40.0) {
        let d = random_design(&space, seed);
        let k = k % d.len();
        if let Ok(moved) = d.with_time(k, t) {
            prop_assert!(space.contains(&moved));
        }
    }

    #[test]
    fn scrambled_points_stay_in_the_unit_cube(dim in 1usize..8, count in 1usize..300, seed in any::<u64>()) {
        let b = sobol_owen(dim, count, seed).unwrap();
        for i in 0..b.len() {
            prop_assert!(b.point(i).iter().all(|&u| u > 0.0 && u <= 1.0));
        }
    }

    #[test]
    fn model_probabilities_are_a_distribution(
        ev in prop::collection::vec(-800.0f64..800.0, 1..6),
        weights in prop::collection::vec(0.01f64..1.0, 6),
    ) {
        let k = ev.len();
        let total: f64 = weights[..k].iter().sum();
        let prior: Vec<f64> = weights[..k].iter().map(|w| w / total).collect();
        let p = posterior_model_probs(&ev, &prior).unwrap();
        prop_assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.probs.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
    }

    #[test]
    fn summaries_are_permutation_invariant(mut counts in prop::collection::vec(0i64..200, 2..30), seed in any::<u64>()) {
        let scheme = SummaryScheme::mean_median_variance();
        let mut a = [0.0; 3];
        summarize_counts(&counts, 1, &scheme, &mut a);
        let lo = *counts.iter().min().unwrap() as f64;
        let hi = *counts.iter().max().unwrap() as f64;
        prop_assert!(a[0] >= lo - 1e-9 && a[0] <= hi + 1e-9);
        prop_assert!(a[1] >= lo && a[1] <= hi);
        prop_assert!(a[2] >= 0.0);
        let n = counts.len();
        counts.swap(0, (seed as usize) % n);
        counts.reverse();
        let mut b = [0.0; 3];
        summarize_counts(&counts, 1, &scheme, &mut b);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn prior_density_is_symmetric_about_the_mean(mu in -3.0f64..3.0, sd in 0.05f64..2.0, dx in 0.0f64..3.0) {
        let p = PriorSpec::new(vec![mu], vec![sd]).unwrap();
        prop_assert!((p.log_density_log(&[mu + dx]) - p.log_density_log(&[mu - dx])).abs() < 1e-12);
        prop_assert!(p.log_density_log(&[mu]) >= p.log_density_log(&[mu + dx]));
    }

    #[test]
    fn infection_counts_never_decrease(b1 in 0.0f64..2.0, b2 in 0.0f64..0.1, seed in any::<u64>(), si in any::<bool>()) {
        let (model, theta) = if si { (ModelSpec::si(), vec![b1, b2]) } else { (ModelSpec::death(), vec![b1]) };
        let times = [0.3, 0.9, 1.5, 4.0, 9.0];
        let mut out = [0i64; 5];
        simulate_into(&model, &theta, &times, Simulator::Exact, &mut rng::stream(seed, 0), &mut out);
        prop_assert!(out.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(out.iter().all(|&x| (0..=50).contains(&x)));
    }

    #[test]
    fn regularised_covariances_factorise(rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 1..3)) {
        let mut cov = Matrix::zeros(3, 3);
        for r in &rows {
            let v = Matrix::from_column_slice(3, 1, r);
            cov += &v * v.transpose();
        }
        let reg = regularize(&cov);
        prop_assert!(reg.clone().cholesky().is_some());
        prop_assert!(SynLikFit::from_moments(vec![0.0], Vector::zeros(3), cov, 10).is_ok());
    }

    #[test]
    fn draw_plans_are_reproducible(seed in any::<u64>(), q in 2usize..64, rqmc in any::<bool>()) {
        let priors = [PriorSpec::new(vec![0.0, 1.0], vec![0.3, 0.2]).unwrap()];
        let method = if rqmc { Method::Rqmc } else { Method::Mc };
        let opts = EstimatorOptions::new(q, method);
        let a = plan_draws(&priors, &opts, seed).unwrap();
        prop_assert_eq!(a.clone(), plan_draws(&priors, &opts, seed).unwrap());
        prop_assert_eq!(a.len(), q);
    }
}
