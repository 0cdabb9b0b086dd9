//! The (1+1)-EA with standard bit mutation at rate `chi / n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift_matrix::{build_matrix, eigen_analysis};
use crate::error::{Error, Result};
use crate::params::Params;
use crate::stats::{quantile_sorted, wilson_interval, Interval, Z95};
use crate::twolin::{accepts, draw_environment, fitness_of_counts, BitString, Environment, State};

/// How an explicit number of zero-bits is split between the parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    /// Positions drawn uniformly from the whole string.
    Uniform,
    /// `x_L : x_R` as close to `gamma0 : 1` as the part lengths allow.
    EigenRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StartRule {
    UniformRandom,
    AllZeros,
    Explicit(State),
    Zeros { count: usize, placement: Placement },
}

impl StartRule {
    pub fn materialize<R: Rng + ?Sized>(&self, p: &Params, rng: &mut R) -> Result<BitString> {
        match *self {
            StartRule::UniformRandom => Ok(BitString::uniform(p, rng)),
            StartRule::AllZeros => Ok(BitString::zeros(p)),
            StartRule::Explicit(state) => BitString::scattered(state, p, rng),
            StartRule::Zeros { count, placement } => {
                if count > p.n {
                    return Err(Error::InvalidConfig(format!("{count} zero-bits requested for n = {}", p.n)));
                }
                match placement {
                    Placement::Uniform => {
                        let mut bits = vec![true; p.n];
                        for k in rand::seq::index::sample(rng, p.n, count) {
                            bits[k] = false;
                        }
                        Ok(BitString::from_bits(bits, p.left_len()))
                    }
                    Placement::EigenRatio => {
                        let gamma0 = eigen_analysis(&build_matrix(p))?.gamma0;
                        BitString::scattered(eigen_ratio_state(count, gamma0, p), p, rng)
                    }
                }
            }
        }
    }
}

/// Splits `count` zero-bits in ratio `gamma0 : 1`, spilling into the other
/// part when one part is full.
pub fn eigen_ratio_state(count: usize, gamma0: f64, p: &Params) -> State {
    let (left, right) = (p.left_len(), p.right_len());
    let want_left = (count as f64 * gamma0 / (1.0 + gamma0)).round() as usize;
    let mut x_l = want_left.min(left).min(count);
    let mut x_r = (count - x_l).min(right);
    x_l = (count - x_r).min(left);
    if x_l + x_r < count {
        x_r = (count - x_l).min(right);
    }
    State { x_l, x_r }
}

/// `ceil(multiplier * n * ln n)`.
pub fn budget_for(n: usize, multiplier: f64) -> u64 {
    (multiplier * n as f64 * (n as f64).ln()).ceil() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: Params,
    pub start: StartRule,
    /// Maximum number of generations.
    pub budget: u64,
    pub seed: u64,
    /// Trajectory sampling stride; `0` keeps only the first and last state.
    pub record_every: u64,
}

impl RunConfig {
    pub fn new(params: Params, start: StartRule, budget: u64, seed: u64) -> Self {
        RunConfig { params, start, budget, seed, record_every: 0 }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        RunConfig { seed, ..*self }
    }

    pub fn with_record_every(&self, record_every: u64) -> Self {
        RunConfig { record_every, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.params.check_rate()?;
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget must be at least 1".into()));
        }
        if let StartRule::Explicit(s) = self.start {
            s.check(&self.params)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub t: u64,
    #[serde(rename = "x_L")]
    pub x_l: usize,
    #[serde(rename = "x_R")]
    pub x_r: usize,
}

impl Sample {
    pub fn state(&self) -> State {
        State { x_l: self.x_l, x_r: self.x_r }
    }
}

/// Logged states of one run. Generation `t` is the state after `t`
/// mutation-selection steps; the number of function evaluations is `t + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// First generation at which the parent is the optimum.
    pub hit: Option<u64>,
    pub budget_exhausted: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> State {
        self.samples.last().expect("trajectory has a start sample").state()
    }

    /// Generations executed.
    pub fn generations(&self) -> u64 {
        self.samples.last().map_or(0, |s| s.t)
    }

    fn push(&mut self, t: u64, s: State) {
        if self.samples.last().is_some_and(|last| last.t == t) {
            return;
        }
        self.samples.push(Sample { t, x_l: s.x_l, x_r: s.x_r });
    }
}

/// Standard bit mutation: `K ~ Binomial(n, chi / n)` positions, drawn as a
/// uniform `K`-subset. Reuses its buffer between calls.
#[derive(Debug, Clone)]
pub struct Mutator {
    n: usize,
    flips: Binomial,
    buf: Vec<usize>,
}

impl Mutator {
    pub fn new(p: &Params) -> Result<Self> {
        p.check_rate()?;
        let flips = Binomial::new(p.n as u64, p.rate())
            .map_err(|e| Error::InvalidParams(format!("binomial({}, {}): {e}", p.n, p.rate())))?;
        Ok(Mutator { n: p.n, flips, buf: Vec::with_capacity(16) })
    }

    /// Floyd's subset sampler; the buffer is tiny so membership is a scan.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[usize] {
        let k = self.flips.sample(rng) as usize;
        self.buf.clear();
        for j in self.n - k..self.n {
            let t = rng.random_range(0..=j);
            if self.buf.contains(&t) {
                self.buf.push(j);
            } else {
                self.buf.push(t);
            }
        }
        &self.buf
    }
}

/// Positions flipped by one standard bit mutation of `parent`.
pub fn mutate<R: Rng + ?Sized>(parent: &BitString, p: &Params, rng: &mut R) -> Result<Vec<usize>> {
    if parent.len() != p.n {
        return Err(Error::InvalidParams(format!("string length {} != n = {}", parent.len(), p.n)));
    }
    let mut m = Mutator::new(p)?;
    Ok(m.sample(rng).to_vec())
}

/// One generation's outcome, before the flips are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub env: Environment,
    pub gain_left: i64,
    pub gain_right: i64,
    pub accepted: bool,
}

/// Draws the environment, mutates, and selects. Applies the flips to
/// `x` on acceptance.
pub fn step<R: Rng + ?Sized>(x: &mut BitString, mutator: &mut Mutator, p: &Params, rng: &mut R) -> StepOutcome {
    let env = draw_environment(rng, p);
    let flips = mutator.sample(rng);
    let (gain_left, gain_right) = x.gains(flips);
    let accepted = accepts(env, gain_left, gain_right, p.n);
    if accepted {
        #[cfg(debug_assertions)]
        let before = fitness_of_counts(x.ones_left() as u64, x.ones_right() as u64, env, p.n as u64);
        x.apply(flips);
        #[cfg(debug_assertions)]
        {
            let after = fitness_of_counts(x.ones_left() as u64, x.ones_right() as u64, env, p.n as u64);
            debug_assert!(after >= before, "accepted step lowered the selecting fitness");
        }
    }
    StepOutcome { env, gain_left, gain_right, accepted }
}

pub fn run(cfg: &RunConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let p = &cfg.params;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = cfg.start.materialize(p, &mut rng)?;
    let mut traj = Trajectory { samples: Vec::new(), hit: None, budget_exhausted: false };
    traj.push(0, x.state());
    if x.state().is_optimum() {
        traj.hit = Some(0);
        return Ok(traj);
    }
    let mut mutator = Mutator::new(p)?;
    let mut t = 0;
    while t < cfg.budget {
        t += 1;
        step(&mut x, &mut mutator, p, &mut rng);
        if cfg.record_every > 0 && t % cfg.record_every == 0 {
            traj.push(t, x.state());
        }
        if x.state().is_optimum() {
            traj.hit = Some(t);
            break;
        }
    }
    traj.push(t, x.state());
    traj.budget_exhausted = traj.hit.is_none();
    Ok(traj)
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index))
}

/// Independent trials in parallel; trial `i` runs with seed
/// [`trial_seed`]`(cfg.seed, i)`. Output is in trial order.
pub fn batch_run(cfg: &RunConfig, trials: usize) -> Result<Vec<Trajectory>> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    cfg.validate()?;
    (0..trials as u64)
        .into_par_iter()
        .map(|i| run(&cfg.with_seed(trial_seed(cfg.seed, i))))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HitQuantiles {
    pub q10: Option<f64>,
    pub q25: Option<f64>,
    pub q50: Option<f64>,
    pub q75: Option<f64>,
    pub q90: Option<f64>,
}

impl HitQuantiles {
    pub fn from_hits(hits: &[u64]) -> Self {
        let mut xs: Vec<f64> = hits.iter().map(|&h| h as f64).collect();
        xs.sort_by(f64::total_cmp);
        HitQuantiles {
            q10: quantile_sorted(&xs, 0.10),
            q25: quantile_sorted(&xs, 0.25),
            q50: quantile_sorted(&xs, 0.50),
            q75: quantile_sorted(&xs, 0.75),
            q90: quantile_sorted(&xs, 0.90),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub trials: usize,
    pub successes: usize,
    pub budget: u64,
    /// Quantiles over the successful trials only.
    pub hit_quantiles: HitQuantiles,
    pub success_rate: f64,
    pub wilson95: Interval,
}

impl BatchSummary {
    pub fn from_trajectories(trajs: &[Trajectory], budget: u64) -> Self {
        let hits: Vec<u64> = trajs.iter().filter_map(|t| t.hit).collect();
        Self::from_hits(&hits, trajs.len(), budget)
    }

    pub fn from_hits(hits: &[u64], trials: usize, budget: u64) -> Self {
        BatchSummary {
            trials,
            successes: hits.len(),
            budget,
            hit_quantiles: HitQuantiles::from_hits(hits),
            success_rate: hits.len() as f64 / trials as f64,
            wilson95: wilson_interval(hits.len(), trials, Z95),
        }
    }
}
