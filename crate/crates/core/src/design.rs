//! Design spaces, baseline designs and approximate coordinate exchange.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;

use crate::kinetics::Design;
use crate::laplace::LaplaceOptions;
use crate::linalg::{ols, Matrix, SpdFactor};
use crate::rng::{self, derive_path};
use crate::sampling::PriorSpec;
use crate::stats::{mean, median, variance};
use crate::synlik::{SummaryModel, SynLikSettings};
use crate::utility::{expected_utility, EstimatorOptions, UtilityKind, UtilityProblem};
use crate::{Error, Result};

/// `points` observation times in `window`, at least `min_gap` apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpace {
    pub window: (f64, f64),
    pub points: usize,
    pub min_gap: f64,
}

impl DesignSpace {
    pub fn new(window: (f64, f64), points: usize, min_gap: f64) -> Result<Self> {
        let (lo, hi) = window;
        if !(lo >= 0.0) || !(hi > lo) || !hi.is_finite() {
            return Err(Error::invalid("window", "need 0 <= lo < hi"));
        }
        if points == 0 {
            return Err(Error::invalid("points", "need at least one design point"));
        }
        if !(min_gap >= 0.0) {
            return Err(Error::invalid("min_gap", "must be nonnegative"));
        }
        if hi - lo < (points - 1) as f64 * min_gap {
            return Err(Error::invalid("window", "too short for the points at the minimum gap"));
        }
        Ok(Self {
            window,
            points,
            min_gap,
        })
    }

    pub fn contains(&self, design: &Design) -> bool {
        design.len() == self.points
            && Design::new(design.times().to_vec(), self.window, self.min_gap).is_ok()
    }

    /// Feasible interval for coordinate `k` with the others held fixed.
    pub fn coordinate_bounds(&self, design: &Design, k: usize) -> (f64, f64) {
        let t = design.times();
        let lo = if k == 0 { self.window.0 } else { t[k - 1] + self.min_gap };
        let hi = if k + 1 == t.len() { self.window.1 } else { t[k + 1] - self.min_gap };
        (lo.max(self.window.0), hi.min(self.window.1))
    }
}

/// Points evenly spaced from the start to the end of the window.
pub fn equally_spaced(space: &DesignSpace) -> Design {
    let (lo, hi) = space.window;
    let l = space.points;
    let times = if l == 1 {
        vec![lo]
    } else {
        (0..l).map(|k| lo + (hi - lo) * k as f64 / (l - 1) as f64).collect()
    };
    Design::new(times, space.window, space.min_gap).expect("equally spaced points fit a valid space")
}

/// Uniformly random feasible design: sorted uniforms on the window shortened
/// by the mandatory gaps, then spread back out.
pub fn random_design(space: &DesignSpace, seed: u64) -> Design {
    let (lo, hi) = space.window;
    let slack = hi - lo - (space.points - 1) as f64 * space.min_gap;
    let mut r = rng::stream(seed, 0);
    let mut u: Vec<f64> = (0..space.points).map(|_| r.random::<f64>() * slack).collect();
    u.sort_by(|a, b| a.total_cmp(b));
    let times = u
        .iter()
        .enumerate()
        .map(|(k, v)| (lo + v + k as f64 * space.min_gap).min(hi))
        .collect();
    Design::new(times, space.window, space.min_gap).expect("construction respects the space")
}

/// One-dimensional Gaussian-process posterior mean with a squared
/// exponential kernel.
#[derive(Debug, Clone)]
pub struct GpEmulator {
    xs: Vec<f64>,
    alpha: Vec<f64>,
    offset: f64,
    pub lengthscale: f64,
    pub signal_var: f64,
    pub nugget: f64,
}

/// Smallest nugget of [`gp_emulate_1d`].
pub const MIN_NUGGET: f64 = 1e-6;

/// Fits the emulator. The lengthscale is the median pairwise distance of
/// `xs`, the signal variance the sample variance of `ys`, and the nugget the
/// residual variance of a cubic fit (at least [`MIN_NUGGET`]).
pub fn gp_emulate_1d(xs: &[f64], ys: &[f64]) -> Result<GpEmulator> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::invalid("xs", "emulator inputs must be finite"));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup();
    if sorted.len() < 5 {
        return Err(Error::invalid("xs", "need at least five distinct inputs"));
    }
    let n = xs.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in 0..i {
            dists.push((xs[i] - xs[j]).abs());
        }
    }
    let lengthscale = median(&dists);
    let offset = mean(ys);
    let signal_var = variance(ys);
    if signal_var == 0.0 {
        return Ok(GpEmulator {
            xs: xs.to_vec(),
            alpha: vec![0.0; n],
            offset,
            lengthscale,
            signal_var,
            nugget: MIN_NUGGET,
        });
    }
    let nugget = cubic_residual_variance(xs, ys).max(MIN_NUGGET);
    let k = Matrix::from_fn(n, n, |i, j| {
        let kij = se_kernel(xs[i], xs[j], lengthscale, signal_var);
        if i == j {
            kij + nugget
        } else {
            kij
        }
    });
    let f = SpdFactor::new(&k, "emulator covariance")?;
    let r = Matrix::from_iterator(n, 1, ys.iter().map(|y| y - offset));
    let alpha = f.solve(&r).column(0).iter().copied().collect();
    Ok(GpEmulator {
        xs: xs.to_vec(),
        alpha,
        offset,
        lengthscale,
        signal_var,
        nugget,
    })
}

fn se_kernel(a: f64, b: f64, l: f64, s2: f64) -> f64 {
    let z = (a - b) / l;
    s2 * (-0.5 * z * z).exp()
}

fn cubic_residual_variance(xs: &[f64], ys: &[f64]) -> f64 {
    let m = mean(xs);
    let s = variance(xs).sqrt();
    let x = Matrix::from_fn(xs.len(), 3, |i, p| ((xs[i] - m) / s).powi(p as i32 + 1));
    match ols(&x, ys) {
        Ok(fit) if xs.len() > 4 => fit.sigma2,
        _ => variance(ys),
    }
}

impl GpEmulator {
    pub fn predict(&self, x: f64) -> f64 {
        self.offset
            + self
                .xs
                .iter()
                .zip(&self.alpha)
                .map(|(xi, a)| a * se_kernel(x, *xi, self.lengthscale, self.signal_var))
                .sum::<f64>()
    }

    /// Best point of an evenly spaced grid on `[lo, hi]`.
    pub fn argmax(&self, lo: f64, hi: f64, grid: usize) -> (f64, f64) {
        let grid = grid.max(2);
        let mut best = (lo, self.predict(lo));
        for i in 1..grid {
            let x = lo + (hi - lo) * i as f64 / (grid - 1) as f64;
            let v = self.predict(x);
            if v > best.1 {
                best = (x, v);
            }
        }
        best
    }
}

/// Expected utility of a design, estimated with `q` draws per generating
/// model. Equal seeds must give paired estimates across designs.
pub trait DesignObjective {
    fn utility(&self, design: &Design, q: usize, seed: u64) -> Result<f64>;
}

/// Noise-free concave test objective `−Σ (dᵢ − tᵢ)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObjective {
    pub target: Vec<f64>,
}

impl DesignObjective for QuadraticObjective {
    fn utility(&self, design: &Design, _q: usize, _seed: u64) -> Result<f64> {
        if design.len() != self.target.len() {
            return Err(Error::DimensionMismatch {
                expected: self.target.len(),
                got: design.len(),
            });
        }
        Ok(-design
            .times()
            .iter()
            .zip(&self.target)
            .map(|(d, t)| (d - t) * (d - t))
            .sum::<f64>())
    }
}

/// Simulation-based expected utility; `build` turns a design into the
/// candidate summary models.
pub struct UtilityObjective<F> {
    pub build: F,
    pub priors: Vec<PriorSpec>,
    pub model_prior: Vec<f64>,
    pub kind: UtilityKind,
    pub settings: SynLikSettings,
    pub laplace: LaplaceOptions,
    /// Point set and scramble count; the draw count comes from the caller.
    pub estimator: EstimatorOptions,
}

impl<F, M> UtilityObjective<F>
where
    F: Fn(&Design) -> Result<Vec<M>>,
    M: SummaryModel,
{
    pub fn estimate(&self, design: &Design, q: usize, seed: u64) -> Result<crate::utility::UtilityEstimate> {
        let models = (self.build)(design)?;
        let problem = UtilityProblem {
            models: &models,
            priors: &self.priors,
            model_prior: self.model_prior.clone(),
            kind: self.kind,
            settings: self.settings,
            laplace: self.laplace,
        };
        let opts = EstimatorOptions { q, ..self.estimator };
        expected_utility(&problem, &opts, seed)
    }
}

impl<F, M> DesignObjective for UtilityObjective<F>
where
    F: Fn(&Design) -> Result<Vec<M>>,
    M: SummaryModel,
{
    fn utility(&self, design: &Design, q: usize, seed: u64) -> Result<f64> {
        Ok(self.estimate(design, q, seed)?.mean)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AceOptions {
    pub q_emulator: usize,
    pub q_test: usize,
    pub candidates: usize,
    pub sweeps: usize,
    /// Points of the grid searched on the emulator mean.
    pub grid: usize,
}

impl Default for AceOptions {
    fn default() -> Self {
        Self {
            q_emulator: 500,
            q_test: 5000,
            candidates: 20,
            sweeps: 10,
            grid: 200,
        }
    }
}

/// One coordinate step of the exchange.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub sweep: usize,
    pub coordinate: usize,
    pub proposal: f64,
    /// Test estimates of the current and proposed design, on shared draws.
    pub current_value: f64,
    pub proposed_value: f64,
    pub accepted: bool,
    /// Design after the step.
    pub design: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub design: Design,
    /// Test estimate of the final design; `None` if never tested.
    pub value: Option<f64>,
    pub trace: Vec<TraceEntry>,
    /// Objective calls, and draws summed over them.
    pub evaluations: usize,
    pub draws: usize,
}

/// Approximate coordinate exchange. Candidates of one coordinate share a
/// seed, and every acceptance test reuses one seed, so accepted test values
/// never decrease.
pub fn ace_optimize<O: DesignObjective + ?Sized>(
    objective: &O,
    space: &DesignSpace,
    d0: &Design,
    opts: &AceOptions,
    seed: u64,
) -> Result<OptResult> {
    if !space.contains(d0) {
        return Err(Error::InvalidDesign("initial design lies outside the design space".into()));
    }
    if opts.candidates < 5 {
        return Err(Error::invalid("candidates", "the emulator needs at least five"));
    }
    let test_seed = derive_path(seed, &[u64::MAX]);
    let mut current = d0.clone();
    let mut current_value: Option<f64> = None;
    let mut trace = Vec::new();
    let mut evaluations = 0;
    let mut draws = 0;
    for sweep in 0..opts.sweeps {
        for k in 0..space.points {
            let (lo, hi) = space.coordinate_bounds(&current, k);
            if hi - lo < 1e-9 {
                continue;
            }
            let em_seed = derive_path(seed, &[sweep as u64, k as u64]);
            let mut xs = Vec::with_capacity(opts.candidates);
            let mut ys = Vec::with_capacity(opts.candidates);
            for i in 0..opts.candidates {
                let t = lo + (hi - lo) * i as f64 / (opts.candidates - 1) as f64;
                let cand = current.with_time(k, t)?;
                evaluations += 1;
                draws += opts.q_emulator;
                if let Ok(u) = objective.utility(&cand, opts.q_emulator, em_seed) {
                    if u.is_finite() {
                        xs.push(t);
                        ys.push(u);
                    }
                }
            }
            let Ok(gp) = gp_emulate_1d(&xs, &ys) else {
                continue;
            };
            let (proposal, _) = gp.argmax(lo, hi, opts.grid);
            if proposal == current.times()[k] {
                continue;
            }
            let proposed = current.with_time(k, proposal)?;
            let cur = match current_value {
                Some(v) => v,
                None => {
                    evaluations += 1;
                    draws += opts.q_test;
                    let v = objective.utility(&current, opts.q_test, test_seed).unwrap_or(f64::NEG_INFINITY);
                    current_value = Some(v);
                    v
                }
            };
            evaluations += 1;
            draws += opts.q_test;
            let new = objective.utility(&proposed, opts.q_test, test_seed).unwrap_or(f64::NEG_INFINITY);
            let accepted = new - cur > 0.0;
            if accepted {
                current = proposed;
                current_value = Some(new);
            }
            trace.push(TraceEntry {
                sweep,
                coordinate: k,
                proposal,
                current_value: cur,
                proposed_value: new,
                accepted,
                design: current.times().to_vec(),
            });
        }
    }
    Ok(OptResult {
        design: current,
        value: current_value,
        trace,
        evaluations,
        draws,
    })
}
