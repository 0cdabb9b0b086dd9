//! Exact one-step drift of the zero-bit counts `(x_L, x_R)`.
//!
//! Three independent routes compute `E[X^t - X^{t+1} | X^t = x]`:
//!
//! - [`exact_drift`] works from the laws of the net one-bit gain per part.
//!   Selection only depends on the signs of the gains `u` (left) and `v`
//!   (right): both non-negative is accepted by either function, `u > 0 > v`
//!   only by `f1`, `u < 0 < v` only by `f2`, everything else is rejected.
//! - [`ClaimOne`] evaluates the conditional drifts `Delta_{i,j}` (given `i`
//!   left and `j` right zero-bits flip) as three double sums over the numbers
//!   `r1`, `r2` of flipped one-bits.
//! - [`brute_force_drift`] enumerates all `2^n` flip masks and runs the
//!   literal fitness comparison.
//!
//! [`mc_drift`] adds a sampled estimate with a confidence interval.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::binomial::{BinomialTable, DEFAULT_TAIL_TOL};
use crate::drift_matrix::build_matrix;
use crate::ea::Mutator;
use crate::error::{Error, Result};
use crate::params::Params;
use crate::stats::{KahanSum, Z99};
use crate::twolin::{accepts, compare, draw_environment, BitString, Decision, Environment, State};

/// Largest `n` accepted by [`brute_force_drift`].
pub const BRUTE_FORCE_MAX_N: usize = 14;

/// Absolute slack for sign tests on computed drifts.
pub const NUMERIC_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Exact { truncation_mass: f64 },
    BruteForce,
    MonteCarlo { samples: usize, ci_halfwidth: [f64; 2] },
}

/// Expected one-step decrease of `(x_L, x_R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftVector {
    #[serde(rename = "dL")]
    pub d_l: f64,
    #[serde(rename = "dR")]
    pub d_r: f64,
    pub method: Method,
}

impl DriftVector {
    pub fn total(&self) -> f64 {
        self.d_l + self.d_r
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.d_l, self.d_r]
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &DriftVector) -> f64 {
        (self.d_l - other.d_l).abs().max((self.d_r - other.d_r).abs())
    }
}

/// Sign-split moments of the net one-bit gain `u = i - r` of one part, where
/// `i ~ Bin(zeros, q)` zero-bits and `r ~ Bin(ones, q)` one-bits flip.
#[derive(Debug, Clone, Copy, Default)]
struct NetGain {
    pos: f64,
    zero: f64,
    neg: f64,
    /// `E[u; u > 0]`.
    mean_pos: f64,
    /// `E[u; u < 0]`.
    mean_neg: f64,
    tail: f64,
}

impl NetGain {
    fn of(zeros: usize, ones: usize, q: f64, tol: f64) -> Self {
        let zt = BinomialTable::truncated(zeros, q, tol);
        let ot = BinomialTable::truncated(ones, q, tol);
        let (mut pos, mut zero, mut neg) = (KahanSum::new(), KahanSum::new(), KahanSum::new());
        let (mut mpos, mut mneg) = (KahanSum::new(), KahanSum::new());
        for (i, &pi) in zt.probs.iter().enumerate() {
            for (r, &pr) in ot.probs.iter().enumerate() {
                let w = pi * pr;
                let u = i as f64 - r as f64;
                match i.cmp(&r) {
                    std::cmp::Ordering::Greater => {
                        pos.add(w);
                        mpos.add(w * u);
                    }
                    std::cmp::Ordering::Equal => zero.add(w),
                    std::cmp::Ordering::Less => {
                        neg.add(w);
                        mneg.add(w * u);
                    }
                }
            }
        }
        NetGain {
            pos: pos.value(),
            zero: zero.value(),
            neg: neg.value(),
            mean_pos: mpos.value(),
            mean_neg: mneg.value(),
            tail: zt.tail_mass + ot.tail_mass,
        }
    }
}

pub fn exact_drift(state: State, p: &Params) -> Result<DriftVector> {
    exact_drift_with_tol(state, p, DEFAULT_TAIL_TOL)
}

pub fn exact_drift_with_tol(state: State, p: &Params, tol: f64) -> Result<DriftVector> {
    p.validate()?;
    state.check(p)?;
    if state.is_optimum() {
        return Ok(DriftVector { d_l: 0.0, d_r: 0.0, method: Method::Exact { truncation_mass: 0.0 } });
    }
    let q = p.rate();
    let rho = p.rho;
    let left = NetGain::of(state.x_l, p.left_len() - state.x_l, q, tol);
    let right = NetGain::of(state.x_r, p.right_len() - state.x_r, q, tol);

    let mut d_l = KahanSum::new();
    d_l.add(left.mean_pos * (right.pos + right.zero));
    d_l.add(left.mean_pos * right.neg * rho);
    d_l.add(left.mean_neg * right.pos * (1.0 - rho));

    let mut d_r = KahanSum::new();
    d_r.add(right.mean_pos * (left.pos + left.zero));
    d_r.add(right.mean_pos * left.neg * (1.0 - rho));
    d_r.add(right.mean_neg * left.pos * rho);

    Ok(DriftVector {
        d_l: d_l.value(),
        d_r: d_r.value(),
        method: Method::Exact { truncation_mass: left.tail + right.tail },
    })
}

/// Componentwise `|drift - A x / n| / |A x / n|` at `state`, with `A` the
/// drift matrix of `p`.
pub fn matrix_deviation(state: State, p: &Params) -> Result<[f64; 2]> {
    let d = exact_drift(state, p)?;
    let lin = build_matrix(p).apply(state.as_vec());
    let n = p.n as f64;
    let rel = |got: f64, want: f64| (got - want / n).abs() / (want / n).abs();
    Ok([rel(d.d_l, lin[0]), rel(d.d_r, lin[1])])
}

/// Enumerates every flip mask of the canonical string for `state` and applies
/// the fitness comparison on materialized strings.
pub fn brute_force_drift(state: State, p: &Params) -> Result<DriftVector> {
    p.validate()?;
    if p.n > BRUTE_FORCE_MAX_N {
        return Err(Error::TooLarge { n: p.n, max: BRUTE_FORCE_MAX_N });
    }
    let parent = BitString::canonical(state, p)?;
    let q = p.rate();
    let n = p.n;
    let (mut d_l, mut d_r) = (KahanSum::new(), KahanSum::new());
    let mut flips = Vec::with_capacity(n);
    for mask in 0u32..(1u32 << n) {
        flips.clear();
        flips.extend((0..n).filter(|&k| mask >> k & 1 == 1));
        let k = flips.len();
        let prob = q.powi(k as i32) * (1.0 - q).powi((n - k) as i32);
        let child = parent.with_flips(&flips);
        let change_l = parent.state().x_l as f64 - child.state().x_l as f64;
        let change_r = parent.state().x_r as f64 - child.state().x_r as f64;
        for (env, weight) in [(Environment::F1, p.rho), (Environment::F2, 1.0 - p.rho)] {
            if weight > 0.0 && compare(&parent, &child, env, p) == Decision::AcceptOffspring {
                d_l.add(prob * weight * change_l);
                d_r.add(prob * weight * change_r);
            }
        }
    }
    Ok(DriftVector { d_l: d_l.value(), d_r: d_r.value(), method: Method::BruteForce })
}

/// Sampled drift from a fixed state with a 99% normal interval per component.
pub fn mc_drift<R: Rng + ?Sized>(state: State, p: &Params, samples: usize, rng: &mut R) -> Result<DriftVector> {
    if samples < 100 {
        return Err(Error::InvalidConfig(format!("at least 100 samples required, got {samples}")));
    }
    p.validate()?;
    let parent = BitString::canonical(state, p)?;
    let mut mutator = Mutator::new(p)?;
    let (mut sl, mut sr, mut sll, mut srr) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let env = draw_environment(rng, p);
        let (gl, gr) = parent.gains(mutator.sample(rng));
        if accepts(env, gl, gr, p.n) {
            let (gl, gr) = (gl as f64, gr as f64);
            sl += gl;
            sr += gr;
            sll += gl * gl;
            srr += gr * gr;
        }
    }
    let m = samples as f64;
    let (ml, mr) = (sl / m, sr / m);
    let var = |s2: f64, mean: f64| ((s2 - m * mean * mean) / (m - 1.0)).max(0.0);
    let half = |v: f64| Z99 * (v / m).sqrt();
    Ok(DriftVector {
        d_l: ml,
        d_r: mr,
        method: Method::MonteCarlo {
            samples,
            ci_halfwidth: [half(var(sll, ml)), half(var(srr, mr))],
        },
    })
}

/// The conditional drifts `Delta_{i,j}` at a fixed state, from the laws
/// `p_{r1}` and `q_{r2}` of the numbers of one-bits flipped in each part:
///
/// ```text
/// Delta_{i,j} =       sum_{r1<=i} sum_{r2<=j} (i+j-r1-r2) p_{r1} q_{r2}
///             + rho     sum_{r1<i}  sum_{r2>j} (i+j-r1-r2) p_{r1} q_{r2}
///             + (1-rho) sum_{r1>i}  sum_{r2<j} (i+j-r1-r2) p_{r1} q_{r2}
/// ```
#[derive(Debug, Clone)]
pub struct ClaimOne {
    state: State,
    rho: f64,
    ones_left: BinomialTable,
    ones_right: BinomialTable,
    case_b_scale: f64,
}

impl ClaimOne {
    pub fn new(state: State, p: &Params) -> Result<Self> {
        Self::with_tol(state, p, DEFAULT_TAIL_TOL)
    }

    pub fn with_tol(state: State, p: &Params, tol: f64) -> Result<Self> {
        p.validate()?;
        state.check(p)?;
        let q = p.rate();
        Ok(ClaimOne {
            state,
            rho: p.rho,
            ones_left: BinomialTable::truncated(p.left_len() - state.x_l, q, tol),
            ones_right: BinomialTable::truncated(p.right_len() - state.x_r, q, tol),
            case_b_scale: 1.0,
        })
    }

    /// Scales the `rho` coefficient of the second sum. Only meant for checking
    /// that the verification suites notice a wrong formula.
    pub fn perturb_case_b(mut self, scale: f64) -> Self {
        self.case_b_scale = scale;
        self
    }

    pub fn truncation_mass(&self) -> f64 {
        self.ones_left.tail_mass + self.ones_right.tail_mass
    }

    pub fn delta(&self, i: usize, j: usize) -> Result<f64> {
        if i > self.state.x_l || j > self.state.x_r {
            return Err(Error::IndexOutOfRange { i, j, x_l: self.state.x_l, x_r: self.state.x_r });
        }
        let (p, q) = (&self.ones_left.probs, &self.ones_right.probs);
        let ij = (i + j) as f64;
        let mut both = KahanSum::new();
        let mut only_f1 = KahanSum::new();
        let mut only_f2 = KahanSum::new();
        for (r1, &pr1) in p.iter().enumerate() {
            for (r2, &qr2) in q.iter().enumerate() {
                let w = (ij - (r1 + r2) as f64) * pr1 * qr2;
                if r1 <= i && r2 <= j {
                    both.add(w);
                } else if r1 < i && r2 > j {
                    only_f1.add(w);
                } else if r1 > i && r2 < j {
                    only_f2.add(w);
                }
            }
        }
        Ok(both.value() + self.rho * self.case_b_scale * only_f1.value() + (1.0 - self.rho) * only_f2.value())
    }

    /// `p_{r1}` for `r1 = 0..`, truncated.
    pub fn left_one_flip_law(&self) -> &BinomialTable {
        &self.ones_left
    }

    pub fn right_one_flip_law(&self) -> &BinomialTable {
        &self.ones_right
    }
}

/// `Delta_{i,j}` at `state`.
pub fn conditional_drift(i: usize, j: usize, state: State, p: &Params) -> Result<f64> {
    ClaimOne::new(state, p)?.delta(i, j)
}

/// All `Delta_{i,j}` for `0 <= i <= x_L`, `0 <= j <= x_R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalDriftTable {
    pub state: State,
    /// Row-major in `i`, `x_R + 1` columns.
    pub delta: Vec<f64>,
    pub truncation_mass: f64,
}

impl ConditionalDriftTable {
    pub fn build(state: State, p: &Params) -> Result<Self> {
        Self::from_claim(&ClaimOne::new(state, p)?)
    }

    pub fn from_claim(claim: &ClaimOne) -> Result<Self> {
        let s = claim.state;
        let mut delta = Vec::with_capacity((s.x_l + 1) * (s.x_r + 1));
        for i in 0..=s.x_l {
            for j in 0..=s.x_r {
                delta.push(claim.delta(i, j)?);
            }
        }
        Ok(ConditionalDriftTable { state: s, delta, truncation_mass: claim.truncation_mass() })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.delta[i * (self.state.x_r + 1) + j]
    }
}

/// `sum_{i,j} Pr[E_{i,j}] Delta_{i,j}`, the scalar drift rebuilt from the
/// conditional drifts.
pub fn total_drift_from_conditionals(claim: &ClaimOne, p: &Params) -> Result<f64> {
    let s = claim.state;
    let q = p.rate();
    let zl = BinomialTable::truncated(s.x_l, q, DEFAULT_TAIL_TOL);
    let zr = BinomialTable::truncated(s.x_r, q, DEFAULT_TAIL_TOL);
    let mut acc = KahanSum::new();
    for (i, &pi) in zl.probs.iter().enumerate() {
        for (j, &pj) in zr.probs.iter().enumerate() {
            if i + j > 0 {
                acc.add(pi * pj * claim.delta(i, j)?);
            }
        }
    }
    Ok(acc.value())
}

/// `sum_{i+j>=2} Pr[E_{i,j}] |Delta_{i,j}|`: the part of the drift coming from
/// mutations that flip at least two zero-bits.
pub fn multiflip_contribution(state: State, p: &Params) -> Result<f64> {
    let claim = ClaimOne::new(state, p)?;
    let q = p.rate();
    let zl = BinomialTable::truncated(state.x_l, q, DEFAULT_TAIL_TOL);
    let zr = BinomialTable::truncated(state.x_r, q, DEFAULT_TAIL_TOL);
    let mut acc = KahanSum::new();
    for (i, &pi) in zl.probs.iter().enumerate() {
        for (j, &pj) in zr.probs.iter().enumerate() {
            if i + j >= 2 {
                acc.add(pi * pj * claim.delta(i, j)?.abs());
            }
        }
    }
    Ok(acc.value())
}

/// `sum_{k>=2} E[F | E_k] Pr[E_k]` with `F` the number of flipped bits and
/// `E_k` the event that exactly `k` zero-bits flip; bounds
/// [`multiflip_contribution`] from above.
pub fn multiflip_flip_count_bound(state: State, p: &Params) -> Result<f64> {
    p.validate()?;
    state.check(p)?;
    let q = p.rate();
    let z = state.total();
    let ones_expected = (p.n - z) as f64 * q;
    let zt = BinomialTable::truncated(z, q, DEFAULT_TAIL_TOL);
    Ok(zt
        .probs
        .iter()
        .enumerate()
        .skip(2)
        .map(|(k, &pk)| pk * (k as f64 + ones_expected))
        .collect::<KahanSum>()
        .value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationViolation {
    pub state: State,
    pub i: usize,
    pub j: usize,
    pub delta: f64,
    pub delta_10: Option<f64>,
    pub delta_01: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingViolation {
    pub state: State,
    /// `true` for the left-part inequality `Delta_{i,0} >= c Delta_{1,0}`.
    pub left: bool,
    pub k: usize,
    pub delta: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DominationReport {
    pub states_checked: usize,
    /// States where every defined single-flip drift is positive.
    pub premise_held: usize,
    pub violations: Vec<DominationViolation>,
    pub scaling_checked: usize,
    pub scaling_violations: Vec<ScalingViolation>,
    /// States with positive total drift where a single-flip drift is not
    /// positive.
    pub positive_drift_without_premise: Vec<State>,
    pub max_truncation_mass: f64,
}

impl DominationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.scaling_violations.is_empty()
    }

    pub fn merge(&mut self, other: DominationReport) {
        self.states_checked += other.states_checked;
        self.premise_held += other.premise_held;
        self.violations.extend(other.violations);
        self.scaling_checked += other.scaling_checked;
        self.scaling_violations.extend(other.scaling_violations);
        self.positive_drift_without_premise.extend(other.positive_drift_without_premise);
        self.max_truncation_mass = self.max_truncation_mass.max(other.max_truncation_mass);
    }
}

/// Checks, at every state in `states`, that positive `Delta_{1,0}` and
/// `Delta_{0,1}` force `Delta_{i,j} > 0` for all `i + j >= 1`, and the
/// one-part scaling `Delta_{i,0} >= c_i Delta_{1,0}` with
/// `c_i = sum_{r<i} p_r / p_0` (likewise for the right part).
///
/// A single-flip drift that cannot occur (`x_L = 0` or `x_R = 0`) does not
/// enter the premise.
pub fn check_domination<I>(p: &Params, states: I) -> Result<DominationReport>
where
    I: IntoIterator<Item = State>,
{
    let mut report = DominationReport::default();
    for s in states {
        let claim = ClaimOne::new(s, p)?;
        report.merge(check_domination_at(&claim, p)?);
    }
    Ok(report)
}

/// [`check_domination`] over every state of the instance.
pub fn check_domination_all(p: &Params) -> Result<DominationReport> {
    check_domination(p, State::all(p))
}

pub fn check_domination_at(claim: &ClaimOne, p: &Params) -> Result<DominationReport> {
    let s = claim.state;
    let mut report = DominationReport { states_checked: 1, ..Default::default() };
    report.max_truncation_mass = claim.truncation_mass();
    if s.is_optimum() {
        return Ok(report);
    }
    let table = ConditionalDriftTable::from_claim(claim)?;
    let d10 = (s.x_l >= 1).then(|| table.get(1, 0));
    let d01 = (s.x_r >= 1).then(|| table.get(0, 1));
    let premise = d10.is_none_or(|d| d > NUMERIC_SLACK) && d01.is_none_or(|d| d > NUMERIC_SLACK);
    if premise {
        report.premise_held = 1;
        for i in 0..=s.x_l {
            for j in 0..=s.x_r {
                let d = table.get(i, j);
                if i + j >= 1 && d <= -NUMERIC_SLACK {
                    report.violations.push(DominationViolation { state: s, i, j, delta: d, delta_10: d10, delta_01: d01 });
                }
            }
        }
    } else {
        let total = exact_drift(s, p)?.total();
        if total > NUMERIC_SLACK {
            report.positive_drift_without_premise.push(s);
        }
    }

    let scaling = |law: &BinomialTable, k: usize| -> f64 {
        (0..k).map(|r| law.get(r)).sum::<f64>() / law.get(0)
    };
    if let Some(d10) = d10 {
        for i in 2..=s.x_l {
            let bound = scaling(claim.left_one_flip_law(), i) * d10;
            let d = table.get(i, 0);
            report.scaling_checked += 1;
            if d < bound - NUMERIC_SLACK {
                report.scaling_violations.push(ScalingViolation { state: s, left: true, k: i, delta: d, bound });
            }
        }
    }
    if let Some(d01) = d01 {
        for j in 2..=s.x_r {
            let bound = scaling(claim.right_one_flip_law(), j) * d01;
            let d = table.get(0, j);
            report.scaling_checked += 1;
            if d < bound - NUMERIC_SLACK {
                report.scaling_violations.push(ScalingViolation { state: s, left: false, k: j, delta: d, bound });
            }
        }
    }
    let _ = p;
    Ok(report)
}
