//! The linear potential `f(x) = eta_1(x)`, the first coordinate of `x` in the
//! eigenbasis `{e1, e2}` of the drift matrix, and diagnostics built on it.
//!
//! With `e1 = (e11, e12)` and `e2 = (e21, e22)`, Cramer's rule gives
//!
//! ```text
//! f(x) = (e22 x1 + |e21| x2) / (e11 e22 + e12 |e21|)
//! ```
//!
//! so `f(e1) = 1`, `f(e2) = 0`, and both weights are positive. Since `f` is
//! linear, `E[f(X')] = f(x) - f(drift)`, which the checks below evaluate with
//! the exact drift.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::drift_matrix::{build_matrix, eigen_analysis, EigenSystem};
use crate::ea::{Mutator, Trajectory};
use crate::error::{Error, Result};
use crate::exact_drift::exact_drift;
use crate::params::Params;
use crate::scalar::Real;
use crate::stats::linear_fit;
use crate::twolin::{accepts, draw_environment, BitString, State};

/// Default bound on `||x||_inf / n` for the contraction check.
pub const DEFAULT_REGION_CAP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Potential<T> {
    pub eigensystem: EigenSystem<T>,
    /// `f(x) >= kappa1 ||x||_inf` on the first quadrant.
    pub kappa1: T,
    /// `f(x) <= kappa2 ||x||_inf` on the first quadrant.
    pub kappa2: T,
    /// `(w1, w2)` with `f(x) = w1 x1 + w2 x2`.
    pub coeffs: [T; 2],
}

pub fn build_potential<T: Real>(es: &EigenSystem<T>) -> Result<Potential<T>> {
    let [e11, e12] = es.e1;
    let [e21, e22] = es.e2;
    let valid = e11 > T::zero() && e12 > T::zero() && e21 < T::zero() && e22 > T::zero();
    let den = e11 * e22 + e12 * e21.abs();
    if !valid || !(den > T::zero() && den.is_finite()) {
        return Err(es.matrix.degenerate());
    }
    let (w1, w2) = (e22 / den, e21.abs() / den);
    Ok(Potential {
        eigensystem: *es,
        kappa1: w1.min(w2),
        // Under the max norm the tight constant is the weight sum.
        kappa2: w1 + w2,
        coeffs: [w1, w2],
    })
}

impl<T: Real> Potential<T> {
    #[inline]
    pub fn value(&self, x: [T; 2]) -> T {
        self.coeffs[0] * x[0] + self.coeffs[1] * x[1]
    }

    /// Constants `(min, max)` of the weights: the tight bounds of `f` against
    /// the 1-norm on the first quadrant.
    pub fn l1_bounds(&self) -> (T, T) {
        (self.coeffs[0].min(self.coeffs[1]), self.coeffs[0].max(self.coeffs[1]))
    }
}

impl Potential<f64> {
    pub fn for_params(p: &Params) -> Result<Self> {
        build_potential(&eigen_analysis(&build_matrix(p))?)
    }

    pub fn at(&self, s: State) -> f64 {
        self.value(s.as_vec())
    }

    /// `E[f(X')] / f(x)` from the exact drift; `None` at the optimum.
    pub fn step_factor(&self, s: State, p: &Params) -> Result<Option<f64>> {
        let fx = self.at(s);
        if fx == 0.0 {
            return Ok(None);
        }
        let d = exact_drift(s, p)?;
        Ok(Some((fx - self.value([d.d_l, d.d_r])) / fx))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorCheck {
    pub state: State,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialDriftReport {
    pub n: usize,
    pub region_cap: f64,
    /// `1 - lambda1 / (4n)` for contraction, `1 + |lambda1| / (2n)` for
    /// expansion.
    pub bound: f64,
    pub contraction: bool,
    pub checked: Vec<FactorCheck>,
    pub violations: Vec<FactorCheck>,
}

impl PotentialDriftReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && !self.checked.is_empty()
    }

    pub fn max_factor(&self) -> Option<f64> {
        self.checked.iter().map(|c| c.factor).reduce(f64::max)
    }

    pub fn min_factor(&self) -> Option<f64> {
        self.checked.iter().map(|c| c.factor).reduce(f64::min)
    }
}

/// Samples `trials` non-optimal states with `||x||_inf <= region_cap n` and
/// flags those where `E[f(X')] > (1 - lambda1 / (4n)) f(x)`. Requires the
/// efficient regime.
pub fn potential_drift_check<R: Rng + ?Sized>(
    p: &Params,
    region_cap: f64,
    trials: usize,
    rng: &mut R,
) -> Result<PotentialDriftReport> {
    let pot = Potential::for_params(p)?;
    let es = pot.eigensystem;
    if es.classifier <= 0.0 {
        return Err(Error::NotEfficient(es.classifier));
    }
    let cap = region_cap_states(p, region_cap)?;
    let states: Vec<State> = (0..trials)
        .map(|_| loop {
            let s = State::new(rng.random_range(0..=cap.0), rng.random_range(0..=cap.1));
            if !s.is_optimum() {
                break s;
            }
        })
        .collect();
    let bound = 1.0 - es.lambda1 / (4.0 * p.n as f64);
    factor_report(&pot, p, region_cap, bound, true, states)
}

/// Checks `E[f(X')] >= (1 + |lambda1| / (2n)) f(x)` at lattice points nearest
/// to the `e1` ray, `x_R = k`, `x_L = round(gamma0 k)`, up to the region cap.
/// Requires the inefficient regime.
pub fn potential_expansion_check(p: &Params, region_cap: f64, points: usize) -> Result<PotentialDriftReport> {
    let pot = Potential::for_params(p)?;
    let es = pot.eigensystem;
    if es.classifier >= 0.0 {
        return Err(Error::NotInefficient(es.classifier));
    }
    let (cap_l, cap_r) = region_cap_states(p, region_cap)?;
    let g = es.gamma0;
    let k_max = ((cap_l as f64 / g).floor() as usize).min(cap_r);
    if k_max == 0 || points == 0 {
        return Err(Error::InvalidConfig("region too small for the e1 ray".into()));
    }
    let mut states: Vec<State> = (1..=points)
        .map(|i| {
            let k = (i * k_max).div_ceil(points).max(1);
            State::new(((g * k as f64).round() as usize).min(cap_l), k)
        })
        .collect();
    states.dedup();
    let bound = 1.0 + es.lambda1.abs() / (2.0 * p.n as f64);
    factor_report(&pot, p, region_cap, bound, false, states)
}

fn region_cap_states(p: &Params, region_cap: f64) -> Result<(usize, usize)> {
    if !(region_cap > 0.0 && region_cap <= 1.0) {
        return Err(Error::InvalidConfig(format!("region cap must be in (0, 1], got {region_cap}")));
    }
    let m = (region_cap * p.n as f64).floor() as usize;
    let cap = (m.min(p.left_len()), m.min(p.right_len()));
    if cap == (0, 0) {
        return Err(Error::InvalidConfig("region cap admits only the optimum".into()));
    }
    Ok(cap)
}

fn factor_report(
    pot: &Potential<f64>,
    p: &Params,
    region_cap: f64,
    bound: f64,
    contraction: bool,
    states: Vec<State>,
) -> Result<PotentialDriftReport> {
    let mut checked = Vec::with_capacity(states.len());
    let mut violations = Vec::new();
    for s in states {
        let Some(factor) = pot.step_factor(s, p)? else { continue };
        let c = FactorCheck { state: s, factor };
        let bad = if contraction { factor > bound } else { factor < bound };
        if bad {
            violations.push(c);
        }
        checked.push(c);
    }
    Ok(PotentialDriftReport { n: p.n, region_cap, bound, contraction, checked, violations })
}

/// `Y_t = x_L(t) - gamma0 x_R(t)` along a recorded trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YStatistic {
    pub gamma0: f64,
    pub series: Vec<(u64, f64)>,
    /// `|Y_t| / max(1, ||x(t)||_inf)` per sample.
    pub relative: Vec<f64>,
    pub mean_relative: f64,
}

impl YStatistic {
    /// Mean of the relative values over the last `fraction` of the samples
    /// (at least one).
    pub fn tail_mean_relative(&self, fraction: f64) -> f64 {
        let m = self.relative.len();
        if m == 0 {
            return 0.0;
        }
        let w = ((m as f64 * fraction).floor() as usize).clamp(1, m);
        self.relative[m - w..].iter().sum::<f64>() / w as f64
    }
}

pub fn y_value(s: State, gamma0: f64) -> f64 {
    s.x_l as f64 - gamma0 * s.x_r as f64
}

pub fn y_statistic<T: Real>(traj: &Trajectory, es: &EigenSystem<T>) -> YStatistic {
    let g = es.gamma0.as_f64();
    let mut series = Vec::with_capacity(traj.samples.len());
    let mut relative = Vec::with_capacity(traj.samples.len());
    for smp in &traj.samples {
        let s = smp.state();
        let y = y_value(s, g);
        series.push((smp.t, y));
        relative.push(y.abs() / s.norm_inf().max(1) as f64);
    }
    let mean_relative = if relative.is_empty() { 0.0 } else { relative.iter().sum::<f64>() / relative.len() as f64 };
    YStatistic { gamma0: g, series, relative, mean_relative }
}

/// Empirical tail `P[||X - X'||_inf >= i]` of one step from a fixed state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTail {
    pub samples: usize,
    /// Index `i` holds the frequency of steps of size at least `i`.
    pub tail: Vec<f64>,
    /// `r` of a fit `P[size >= i] ~ C / (1 + r)^i` over `i >= 1` with at
    /// least 10 observations; `None` if fewer than three such points.
    pub fitted_r: Option<f64>,
}

pub fn step_size_tail<R: Rng + ?Sized>(s: State, p: &Params, samples: usize, rng: &mut R) -> Result<StepTail> {
    if samples == 0 {
        return Err(Error::InvalidConfig("samples must be positive".into()));
    }
    let parent = BitString::canonical(s, p)?;
    let mut mutator = Mutator::new(p)?;
    let mut counts: Vec<usize> = vec![0];
    for _ in 0..samples {
        let env = draw_environment(rng, p);
        let (gl, gr) = parent.gains(mutator.sample(rng));
        let size = if accepts(env, gl, gr, p.n) { gl.unsigned_abs().max(gr.unsigned_abs()) as usize } else { 0 };
        if size >= counts.len() {
            counts.resize(size + 1, 0);
        }
        counts[size] += 1;
    }
    let mut tail = vec![0.0; counts.len()];
    let mut acc = 0usize;
    for i in (0..counts.len()).rev() {
        acc += counts[i];
        tail[i] = acc as f64 / samples as f64;
    }
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .enumerate()
        .skip(1)
        .filter(|&(_, &f)| f * samples as f64 >= 10.0)
        .map(|(i, &f)| (i as f64, f.ln()))
        .collect();
    let fitted_r = if pts.len() >= 3 { linear_fit(&pts).map(|fit| (-fit.slope).exp() - 1.0) } else { None };
    Ok(StepTail { samples, tail, fitted_r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift_matrix::DriftMatrix;
    use crate::ea::{batch_run, RunConfig, StartRule};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pot(chi: f64, rho: f64, ell: f64) -> Potential<f64> {
        build_potential(&eigen_analysis(&DriftMatrix::from_rates(chi, rho, ell)).unwrap()).unwrap()
    }

    #[test]
    fn symmetric_chi2_is_the_average() {
        let f = pot(2.0, 0.5, 0.5);
        assert!((f.coeffs[0] - 0.5).abs() < 1e-14 && (f.coeffs[1] - 0.5).abs() < 1e-14);
        assert!((f.kappa1 - 0.5).abs() < 1e-14);
        assert!((f.kappa2 - 1.0).abs() < 1e-14);
        let (lo, hi) = f.l1_bounds();
        assert!((lo - 0.5).abs() < 1e-14 && (hi - 0.5).abs() < 1e-14);
        // f(1, 1) = 1 = ||(1, 1)||_inf: the weight sum is attained.
        assert!((f.value([1.0, 1.0]) - 1.0).abs() < 1e-14);
        assert_eq!(f.value([0.0, 0.0]), 0.0);
    }

    #[test]
    fn defining_property_on_grid() {
        for i in 1..=9 {
            for j in 1..=9 {
                for &chi in &[0.3, 1.0, 2.0, 3.5, 6.0] {
                    let f = pot(chi, i as f64 / 10.0, j as f64 / 10.0);
                    let es = f.eigensystem;
                    assert!((f.value(es.e1) - 1.0).abs() < 1e-12);
                    assert!(f.value(es.e2).abs() < 1e-12 * es.e2[0].abs().max(1.0));
                    assert!(f.coeffs[0] > 0.0 && f.coeffs[1] > 0.0);
                    assert!(f.kappa1 > 0.0 && f.kappa1 <= f.kappa2);
                }
            }
        }
    }

    #[test]
    fn f32_potential() {
        let es = eigen_analysis(&DriftMatrix::<f32>::from_rates(2.0, 0.5, 0.5)).unwrap();
        let f = build_potential(&es).unwrap();
        assert!((f.value(es.e1) - 1.0).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn norm_bounds_and_linearity(
            chi in 0.1f64..8.0, rho in 0.05f64..0.95, ell in 0.05f64..0.95,
            x1 in 0.0f64..1e4, x2 in 0.0f64..1e4, y1 in 0.0f64..1e4, y2 in 0.0f64..1e4,
            alpha in 0.0f64..10.0,
        ) {
            let f = pot(chi, rho, ell);
            let fx = f.value([x1, x2]);
            let norm = x1.max(x2);
            prop_assert!(fx >= 0.0);
            prop_assert!(fx >= f.kappa1 * norm * (1.0 - 1e-12));
            prop_assert!(fx <= f.kappa2 * norm * (1.0 + 1e-12));
            let lhs = f.value([alpha * x1 + y1, alpha * x2 + y2]);
            let rhs = alpha * fx + f.value([y1, y2]);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn expected_potential_matches_drift() {
        let p = Params::new(1.5, 0.4, 0.6, 200).unwrap();
        let f = Potential::for_params(&p).unwrap();
        let s = State::new(7, 3);
        let d = exact_drift(s, &p).unwrap();
        let factor = f.step_factor(s, &p).unwrap().unwrap();
        let expected = f.at(s) - f.coeffs[0] * d.d_l - f.coeffs[1] * d.d_r;
        assert!((factor * f.at(s) - expected).abs() < 1e-14);
        assert_eq!(f.step_factor(State::OPTIMUM, &p).unwrap(), None);
    }

    #[test]
    fn contraction_small_instance() {
        let p = Params::symmetric(2.0, 2000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = potential_drift_check(&p, 0.01, 40, &mut rng).unwrap();
        assert_eq!(r.checked.len(), 40);
        assert!(r.passed(), "{:?}", r.violations.first());
        assert!(r.max_factor().unwrap() < 1.0);
    }

    #[test]
    fn regime_preconditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sup = Params::symmetric(3.0, 1000).unwrap();
        assert!(matches!(potential_drift_check(&sup, 0.01, 5, &mut rng), Err(Error::NotEfficient(_))));
        let sub = Params::symmetric(1.0, 1000).unwrap();
        assert!(matches!(potential_expansion_check(&sub, 0.01, 5), Err(Error::NotInefficient(_))));
        assert!(potential_drift_check(&sub, 0.0, 5, &mut rng).is_err());
    }

    #[test]
    fn expansion_on_ray() {
        let p = Params::symmetric(3.0, 2000).unwrap();
        let r = potential_expansion_check(&p, 0.01, 10).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.min_factor().unwrap() > 1.0);
    }

    #[test]
    fn y_on_ray_and_symmetric_form() {
        let es = eigen_analysis(&DriftMatrix::<f64>::from_rates(2.0, 0.5, 0.5)).unwrap();
        assert!((es.gamma0 - 1.0).abs() < 1e-14);
        assert_eq!(y_value(State::new(7, 7), es.gamma0), 0.0);
        assert!((y_value(State::new(9, 4), es.gamma0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn y_decays_in_first_phase() {
        // Start far off the e1 ray; the relative distance from the ray over
        // the last tenth of 8000 generations, averaged over 20 runs, is at
        // least 5 times smaller while about 150 zero-bits remain.
        let p = Params::symmetric(2.0, 2000).unwrap();
        let es = eigen_analysis(&build_matrix(&p)).unwrap();
        let cfg = RunConfig::new(p, StartRule::Explicit(State::new(500, 100)), 8000, 11).with_record_every(10);
        let trajs = batch_run(&cfg, 20).unwrap();
        let ys: Vec<YStatistic> = trajs.iter().map(|t| y_statistic(t, &es)).collect();
        let first = ys[0].relative[0];
        assert!((first - 0.8).abs() < 1e-12);
        let late = ys.iter().map(|y| y.tail_mean_relative(0.1)).sum::<f64>() / ys.len() as f64;
        let zeros = trajs.iter().map(|t| t.final_state().total()).sum::<usize>() / trajs.len();
        assert!(zeros > 100, "left the first phase: {zeros}");
        assert!(late * 5.0 <= first, "{first} -> {late}");
    }

    #[test]
    fn step_tail_decays() {
        let p = Params::symmetric(2.0, 1000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = step_size_tail(State::new(300, 300), &p, 200_000, &mut rng).unwrap();
        assert_eq!(t.tail[0], 1.0);
        assert!(t.tail.windows(2).all(|w| w[1] <= w[0]));
        assert!(t.fitted_r.unwrap() > 0.0);
    }
}
