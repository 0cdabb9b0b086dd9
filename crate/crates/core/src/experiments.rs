//! Parameter sweeps over `chi`, threshold estimation, runtime-scaling fits
//! and classifier spot checks.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::drift_matrix::{build_matrix, eigen_analysis, Verdict, DEFAULT_BOUNDARY_TOL};
use crate::ea::{batch_run, budget_for, trial_seed, BatchSummary, Placement, RunConfig, StartRule};
use crate::error::{Error, Result};
use crate::params::Params;
use crate::stats::{linear_fit, LinearFit};

/// Success rate above which a point counts as efficient for fits.
pub const HIGH_SUCCESS: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Supplies `rho` and `ell`; its `chi` and `n` are ignored.
    pub base: Params,
    pub chi_grid: Vec<f64>,
    pub n_list: Vec<usize>,
    pub trials: usize,
    /// Budget `ceil(m n ln n)` generations.
    pub budget_multiplier: f64,
    pub start: StartRule,
    pub seed: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chi_grid.is_empty() || self.n_list.is_empty() {
            return Err(Error::InvalidConfig("chi grid and n list must be non-empty".into()));
        }
        if !self.chi_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig("chi grid must be strictly increasing".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if !(self.budget_multiplier > 0.0 && self.budget_multiplier.is_finite()) {
            return Err(Error::InvalidConfig(format!("bad budget multiplier {}", self.budget_multiplier)));
        }
        for &n in &self.n_list {
            for &chi in &self.chi_grid {
                let p = Params::new(chi, self.base.rho, self.base.ell, n)?;
                p.check_rate()?;
            }
        }
        Ok(())
    }
}

/// One CSV row: a single run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub chi: f64,
    pub rho: f64,
    pub ell: f64,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub hit: Option<u64>,
    pub generations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub chi: f64,
    pub n: usize,
    pub summary: BatchSummary,
    pub classifier: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub n: usize,
    /// Interpolated `chi` where the success rate first falls through 0.5.
    pub chi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    /// Ordered by `n`, then `chi`, as in the config.
    pub points: Vec<SweepPoint>,
    pub thresholds: Vec<ThresholdEstimate>,
    #[serde(skip)]
    pub rows: Vec<TrialRow>,
}

pub fn sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut points = Vec::new();
    let mut rows = Vec::new();
    let mut index = 0u64;
    for &n in &cfg.n_list {
        for &chi in &cfg.chi_grid {
            let p = Params::new(chi, cfg.base.rho, cfg.base.ell, n)?;
            let budget = budget_for(n, cfg.budget_multiplier);
            let point_seed = trial_seed(cfg.seed, index);
            index += 1;
            let run = RunConfig::new(p, cfg.start, budget, point_seed);
            let trajs = batch_run(&run, cfg.trials)?;
            for (trial, t) in trajs.iter().enumerate() {
                rows.push(TrialRow {
                    chi,
                    rho: p.rho,
                    ell: p.ell,
                    n,
                    trial,
                    seed: trial_seed(point_seed, trial as u64),
                    hit: t.hit,
                    generations: t.generations(),
                });
            }
            let classifier = eigen_analysis(&build_matrix(&p))?.classifier;
            points.push(SweepPoint {
                chi,
                n,
                summary: BatchSummary::from_trajectories(&trajs, budget),
                classifier,
                verdict: Verdict::from_classifier(classifier, DEFAULT_BOUNDARY_TOL),
            });
        }
    }
    let thresholds = cfg
        .n_list
        .iter()
        .map(|&n| {
            let curve: Vec<(f64, f64)> =
                points.iter().filter(|pt| pt.n == n).map(|pt| (pt.chi, pt.summary.success_rate)).collect();
            ThresholdEstimate { n, chi: half_crossing(&curve) }
        })
        .collect();
    Ok(SweepResult { config: cfg.clone(), points, thresholds, rows })
}

/// First downward crossing of 0.5 in `(chi, rate)` pairs sorted by `chi`,
/// linearly interpolated.
pub fn half_crossing(curve: &[(f64, f64)]) -> Option<f64> {
    curve.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        (y0 >= 0.5 && y1 < 0.5).then(|| x0 + (y0 - 0.5) / (y0 - y1) * (x1 - x0))
    })
}

impl SweepResult {
    pub fn point(&self, chi: f64, n: usize) -> Option<&SweepPoint> {
        self.points.iter().find(|pt| pt.n == n && (pt.chi - chi).abs() < 1e-12)
    }

    pub fn threshold(&self, n: usize) -> Option<f64> {
        self.thresholds.iter().find(|t| t.n == n).and_then(|t| t.chi)
    }

    /// Rows as `chi,rho,ell,n,trial,seed,hit,generations`; `hit` is empty
    /// for runs that exhausted the budget.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub chi: f64,
    /// `(n, median generations to the optimum)`.
    pub medians: Vec<(usize, f64)>,
    /// Median against `n ln n`.
    pub fit: LinearFit,
}

/// Least squares of the median hit time on `n ln n` over the points at `chi`
/// with success rate at least [`HIGH_SUCCESS`]. Needs three such `n`.
pub fn scaling_fit(results: &SweepResult, chi: f64) -> Result<ScalingFit> {
    let medians: Vec<(usize, f64)> = results
        .points
        .iter()
        .filter(|pt| (pt.chi - chi).abs() < 1e-12 && pt.summary.success_rate >= HIGH_SUCCESS)
        .filter_map(|pt| pt.summary.hit_quantiles.q50.map(|m| (pt.n, m)))
        .collect();
    let mut ns: Vec<usize> = medians.iter().map(|m| m.0).collect();
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} value(s) of n with success rate >= {HIGH_SUCCESS} at chi = {chi}, need 3",
            ns.len()
        )));
    }
    let pts: Vec<(f64, f64)> = medians.iter().map(|&(n, m)| (n as f64 * (n as f64).ln(), m)).collect();
    let fit = linear_fit(&pts).ok_or_else(|| Error::InsufficientData("degenerate fit".into()))?;
    Ok(ScalingFit { chi, medians, fit })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpotcheckRow {
    pub chi: f64,
    pub classifier: f64,
    pub analytic: Verdict,
    pub successes: usize,
    pub trials: usize,
    pub success_rate: f64,
    /// Efficient when at least half of the runs succeed.
    pub empirical: Verdict,
    /// `|classifier| > margin`.
    pub separated: bool,
}

impl SpotcheckRow {
    pub fn agrees(&self) -> bool {
        self.analytic == self.empirical
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotcheckConfig {
    pub rho: f64,
    pub ell: f64,
    pub chi_grid: Vec<f64>,
    pub n: usize,
    pub trials: usize,
    pub budget_multiplier: f64,
    pub margin: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotcheckReport {
    pub config: SpotcheckConfig,
    /// Zero-bits at the start, split in the eigen ratio.
    pub start_zeros: usize,
    pub rows: Vec<SpotcheckRow>,
}

impl SpotcheckReport {
    /// Fraction of margin-separated rows whose verdicts agree; `None` if no
    /// row is separated.
    pub fn agreement(&self) -> Option<f64> {
        let sep: Vec<&SpotcheckRow> = self.rows.iter().filter(|r| r.separated).collect();
        (!sep.is_empty()).then(|| sep.iter().filter(|r| r.agrees()).count() as f64 / sep.len() as f64)
    }
}

/// Compares the classifier sign with simulated success over `chi`. Runs start
/// from `ceil(n^{3/4})` zero-bits in the `gamma0 : 1` ratio, a sublinear start
/// as the positive result requires.
pub fn asymmetric_spotcheck(cfg: &SpotcheckConfig) -> Result<SpotcheckReport> {
    if !(cfg.rho > 0.0 && cfg.rho < 1.0 && cfg.ell > 0.0 && cfg.ell < 1.0) {
        return Err(Error::InvalidParams("spot check needs rho, ell in (0, 1)".into()));
    }
    let start_zeros = (cfg.n as f64).powf(0.75).ceil() as usize;
    let base = Params::new(1.0, cfg.rho, cfg.ell, cfg.n)?;
    let start = StartRule::Zeros { count: start_zeros, placement: Placement::EigenRatio };
    let sweep_cfg = SweepConfig {
        base,
        chi_grid: cfg.chi_grid.clone(),
        n_list: vec![cfg.n],
        trials: cfg.trials,
        budget_multiplier: cfg.budget_multiplier,
        start,
        seed: cfg.seed,
    };
    let res = sweep(&sweep_cfg)?;
    let rows = res
        .points
        .iter()
        .map(|pt| SpotcheckRow {
            chi: pt.chi,
            classifier: pt.classifier,
            analytic: pt.verdict,
            successes: pt.summary.successes,
            trials: pt.summary.trials,
            success_rate: pt.summary.success_rate,
            empirical: if pt.summary.success_rate >= 0.5 { Verdict::Efficient } else { Verdict::Inefficient },
            separated: pt.classifier.abs() > cfg.margin,
        })
        .collect();
    Ok(SpotcheckReport { config: cfg.clone(), start_zeros, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(seed: u64) -> SweepConfig {
        SweepConfig {
            base: Params::symmetric(1.0, 100).unwrap(),
            chi_grid: vec![1.0, 4.0],
            n_list: vec![100],
            trials: 4,
            budget_multiplier: 5.0,
            start: StartRule::UniformRandom,
            seed,
        }
    }

    #[test]
    fn half_crossing_interpolates() {
        let c = [(1.0, 1.0), (2.0, 0.8), (3.0, 0.2), (4.0, 0.0)];
        assert!((half_crossing(&c).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(half_crossing(&[(1.0, 1.0), (2.0, 0.9)]), None);
        assert_eq!(half_crossing(&[(1.0, 0.5), (2.0, 0.4)]), Some(1.0));
    }

    #[test]
    fn config_validation() {
        let mut c = small_cfg(0);
        c.chi_grid = vec![2.0, 1.0];
        assert!(sweep(&c).is_err());
        let mut c = small_cfg(0);
        c.trials = 0;
        assert!(sweep(&c).is_err());
        let mut c = small_cfg(0);
        c.n_list.clear();
        assert!(sweep(&c).is_err());
    }

    #[test]
    fn csv_is_reproducible() {
        let bytes = |seed| {
            let r = sweep(&small_cfg(seed)).unwrap();
            let mut buf = Vec::new();
            r.write_csv(&mut buf).unwrap();
            buf
        };
        let a = bytes(9);
        assert_eq!(a, bytes(9));
        assert_ne!(a, bytes(10));
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().next().unwrap(), "chi,rho,ell,n,trial,seed,hit,generations");
        assert_eq!(text.lines().count(), 1 + 2 * 4);
    }

    #[test]
    fn rows_match_summaries() {
        let r = sweep(&small_cfg(1)).unwrap();
        for pt in &r.points {
            let hits = r.rows.iter().filter(|row| row.chi == pt.chi && row.hit.is_some()).count();
            assert_eq!(hits, pt.summary.successes);
            assert!(pt.summary.successes <= pt.summary.trials);
        }
        assert_eq!(r.point(1.0, 100).unwrap().verdict, Verdict::Efficient);
        assert_eq!(r.point(4.0, 100).unwrap().verdict, Verdict::Inefficient);
    }

    #[test]
    fn scaling_fit_needs_three_sizes() {
        let r = sweep(&small_cfg(2)).unwrap();
        assert!(matches!(scaling_fit(&r, 1.0), Err(Error::InsufficientData(_))));
        assert!(matches!(scaling_fit(&r, 4.0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn spotcheck_rejects_degenerate_parts() {
        let cfg = SpotcheckConfig {
            rho: 0.0,
            ell: 0.5,
            chi_grid: vec![1.0],
            n: 100,
            trials: 1,
            budget_multiplier: 1.0,
            margin: 0.01,
            seed: 0,
        };
        assert!(asymmetric_spotcheck(&cfg).is_err());
    }
}
