//! Property suites behind the `verify` subcommand.
//!
//! - `oracle`: exact drift against mask enumeration, and the conditional
//!   drifts against the total drift.
//! - `domination`: the single-flip domination implication and the one-part
//!   scaling inequality, exhaustively at `n = 20`.
//! - `potential`: eigenbasis potential identities, contraction below the
//!   threshold and expansion above it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::drift_matrix::{build_matrix, eigen_analysis};
use crate::error::{Error, Result};
use crate::exact_drift::{
    brute_force_drift, check_domination_at, exact_drift, total_drift_from_conditionals, ClaimOne,
    NUMERIC_SLACK,
};
use crate::params::Params;
use crate::potential::{build_potential, potential_drift_check, potential_expansion_check, DEFAULT_REGION_CAP};
use crate::twolin::State;

pub const CHI_GRID: [f64; 3] = [0.5, 1.0, 2.0];
pub const RHO_GRID: [f64; 3] = [0.3, 0.5, 0.7];
pub const ELL_GRID: [f64; 3] = [0.25, 0.5, 0.75];
pub const ORACLE_SIZES: [usize; 4] = [6, 8, 10, 12];
pub const ORACLE_TOL: f64 = 1e-12;
pub const DOMINATION_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Suite {
    Oracle,
    Domination,
    Potential,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Suite::Oracle),
            "domination" => Ok(Suite::Domination),
            "potential" => Ok(Suite::Potential),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidConfig(format!("unknown suite {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Scales one coefficient of the conditional-drift formula; for checking
    /// that the suites notice a wrong formula.
    pub inject_fault: Option<f64>,
    pub seed: u64,
}

/// The instance behind the first failure of a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Offender {
    pub params: Params,
    pub state: Option<State>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub instances: usize,
    pub max_error: Option<f64>,
    pub tolerance: Option<f64>,
    pub passed: bool,
    pub offender: Option<Offender>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Tracks the worst error and first offender of one check.
struct Tally {
    suite: &'static str,
    name: &'static str,
    instances: usize,
    max_error: f64,
    tolerance: Option<f64>,
    offender: Option<Offender>,
    failed: bool,
}

impl Tally {
    fn new(suite: &'static str, name: &'static str, tolerance: Option<f64>) -> Self {
        Tally { suite, name, instances: 0, max_error: 0.0, tolerance, offender: None, failed: false }
    }

    fn error(&mut self, err: f64, p: &Params, s: Option<State>, detail: impl FnOnce() -> String) {
        self.instances += 1;
        self.max_error = self.max_error.max(err);
        let tol = self.tolerance.unwrap_or(0.0);
        if !(err <= tol) {
            self.fail(p, s, detail);
        }
    }

    fn fail(&mut self, p: &Params, s: Option<State>, detail: impl FnOnce() -> String) {
        self.failed = true;
        if self.offender.is_none() {
            self.offender = Some(Offender { params: *p, state: s, detail: detail() });
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            suite: self.suite.into(),
            name: self.name.into(),
            instances: self.instances,
            max_error: self.tolerance.map(|_| self.max_error),
            tolerance: self.tolerance,
            passed: !self.failed && self.instances > 0,
            offender: self.offender,
        }
    }
}

fn grid(n: usize) -> Result<Vec<Params>> {
    let mut out = Vec::new();
    for &chi in &CHI_GRID {
        for &rho in &RHO_GRID {
            for &ell in &ELL_GRID {
                out.push(Params::new(chi, rho, ell, n)?);
            }
        }
    }
    Ok(out)
}

fn claim(s: State, p: &Params, opts: &VerifyOptions) -> Result<ClaimOne> {
    let c = ClaimOne::new(s, p)?;
    Ok(match opts.inject_fault {
        Some(scale) => c.perturb_case_b(scale),
        None => c,
    })
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    if matches!(suite, Suite::Oracle | Suite::All) {
        report.checks.extend(oracle_suite(opts)?);
    }
    if matches!(suite, Suite::Domination | Suite::All) {
        report.checks.extend(domination_suite(opts)?);
    }
    if matches!(suite, Suite::Potential | Suite::All) {
        report.checks.extend(potential_suite(opts)?);
    }
    Ok(report)
}

pub fn oracle_suite(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let mut brute = Tally::new("oracle", "exact drift = mask enumeration", Some(ORACLE_TOL));
    let mut ltp = Tally::new("oracle", "sum of conditional drifts = total drift", Some(NUMERIC_SLACK));
    for &n in &ORACLE_SIZES {
        for p in grid(n)? {
            for s in State::all(&p) {
                let ex = exact_drift(s, &p)?;
                let bf = brute_force_drift(s, &p)?;
                brute.error(ex.max_abs_diff(&bf), &p, Some(s), || format!("exact {ex:?} vs brute {bf:?}"));
                let via = total_drift_from_conditionals(&claim(s, &p, opts)?, &p)?;
                let err = (via - ex.total()).abs();
                ltp.error(err, &p, Some(s), || format!("conditionals {via} vs total {}", ex.total()));
            }
        }
    }
    Ok(vec![brute.finish(), ltp.finish()])
}

pub fn domination_suite(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let mut dom = Tally::new("domination", "single-flip drifts positive => all positive", None);
    let mut scale = Tally::new("domination", "one-part scaling of Delta_{k,0}, Delta_{0,k}", None);
    let mut ltp = Tally::new("domination", "conditional drifts consistent with total drift", Some(NUMERIC_SLACK));
    let mut premise = 0usize;
    let mut without = 0usize;
    for p in grid(DOMINATION_N)? {
        for s in State::all(&p) {
            let c = claim(s, &p, opts)?;
            let r = check_domination_at(&c, &p)?;
            dom.instances += 1;
            premise += r.premise_held;
            without += r.positive_drift_without_premise.len();
            if let Some(v) = r.violations.first() {
                dom.fail(&p, Some(s), || format!("Delta_{{{},{}}} = {:e}", v.i, v.j, v.delta));
            }
            scale.instances += r.scaling_checked;
            if let Some(v) = r.scaling_violations.first() {
                scale.fail(&p, Some(s), || format!("k = {}: {:e} < {:e}", v.k, v.delta, v.bound));
            }
            let via = total_drift_from_conditionals(&c, &p)?;
            let total = exact_drift(s, &p)?.total();
            ltp.error((via - total).abs(), &p, Some(s), || format!("conditionals {via} vs total {total}"));
        }
    }
    let mut dom = dom.finish();
    dom.name = format!("{} ({premise} premise, {without} positive drift without premise)", dom.name);
    Ok(vec![dom, scale.finish(), ltp.finish()])
}

pub fn potential_suite(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let mut ident = Tally::new("potential", "f(e1) = 1, f(e2) = 0, positive weights", Some(1e-12));
    for r in 1..=9 {
        for l in 1..=9 {
            for k in 0..100 {
                let chi = 0.1 + 0.08 * k as f64;
                let p = Params::new(chi, r as f64 / 10.0, l as f64 / 10.0, 100)?;
                let es = eigen_analysis(&build_matrix(&p))?;
                let f = build_potential(&es)?;
                let scale_e2 = es.e2[0].abs().max(es.e2[1].abs()).max(1.0);
                let err = (f.value(es.e1) - 1.0).abs().max(f.value(es.e2).abs() / scale_e2);
                if !(f.coeffs[0] > 0.0 && f.coeffs[1] > 0.0) {
                    ident.fail(&p, None, || format!("weights {:?}", f.coeffs));
                }
                ident.error(err, &p, None, || format!("f(e1) = {}, f(e2) = {}", f.value(es.e1), f.value(es.e2)));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let sub = Params::symmetric(2.0, 10_000)?;
    let c = potential_drift_check(&sub, DEFAULT_REGION_CAP, 100, &mut rng)?;
    let mut contraction = Tally::new("potential", "contraction below (1 - lambda1/(4n)) at chi = 2", None);
    contraction.instances = c.checked.len();
    if let Some(v) = c.violations.first() {
        contraction.fail(&sub, Some(v.state), || format!("factor {} > bound {}", v.factor, c.bound));
    }

    let sup = Params::symmetric(3.0, 10_000)?;
    let e = potential_expansion_check(&sup, DEFAULT_REGION_CAP, 20)?;
    let mut expansion = Tally::new("potential", "expansion above (1 + |lambda1|/(2n)) at chi = 3", None);
    expansion.instances = e.checked.len();
    if let Some(v) = e.violations.first() {
        expansion.fail(&sup, Some(v.state), || format!("factor {} < bound {}", v.factor, e.bound));
    }
    Ok(vec![ident.finish(), contraction.finish(), expansion.finish()])
}
