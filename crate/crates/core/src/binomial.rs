//! Truncated binomial probability tables.

use statrs::function::factorial::ln_binomial;

/// Default bound on the discarded upper-tail mass of a table.
pub const DEFAULT_TAIL_TOL: f64 = 1e-15;

/// `Binomial(trials, p)` probabilities for `k = 0..probs.len()`, cut where the
/// remaining upper tail is below a tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct BinomialTable {
    pub trials: usize,
    pub probs: Vec<f64>,
    /// Upper bound on `P[K >= probs.len()]`.
    pub tail_mass: f64,
}

/// `ln P[K = k]` for `K ~ Binomial(trials, p)`, via log-factorials.
pub fn ln_pmf(trials: usize, k: usize, p: f64) -> f64 {
    if k > trials {
        return f64::NEG_INFINITY;
    }
    let (t, k) = (trials as u64, k as u64);
    let mut ln = ln_binomial(t, k);
    if k > 0 {
        ln += k as f64 * p.ln();
    }
    if t > k {
        ln += (t - k) as f64 * (-p).ln_1p();
    }
    ln
}

pub fn pmf(trials: usize, k: usize, p: f64) -> f64 {
    ln_pmf(trials, k, p).exp()
}

impl BinomialTable {
    pub fn full(trials: usize, p: f64) -> Self {
        let mut probs = Vec::with_capacity(trials + 1);
        let mut next = Successive::new(trials, p);
        for k in 0..=trials {
            probs.push(next.at(k));
        }
        BinomialTable { trials, probs, tail_mass: 0.0 }
    }

    /// Keeps `k = 0, 1, ...` until `k` is past the mean and the geometric
    /// bound on the rest of the tail drops below `tol`. Beyond the mode the
    /// ratio `P[k+1] / P[k] = (trials - k) p / ((k + 1)(1 - p))` decreases in
    /// `k`, so `P[K > k] <= P[k+1] / (1 - r_{k+1})` once `r_{k+1} < 1`.
    pub fn truncated(trials: usize, p: f64, tol: f64) -> Self {
        let mean = trials as f64 * p;
        let odds = p / (1.0 - p);
        let mut probs = Vec::new();
        let mut tail_mass = 0.0;
        let mut seq = Successive::new(trials, p);
        let mut k = 0usize;
        loop {
            probs.push(seq.at(k));
            if k == trials {
                break;
            }
            if k as f64 > mean {
                let next = seq.peek(k + 1);
                let ratio = (trials - k - 1) as f64 / (k as f64 + 2.0) * odds;
                if ratio < 1.0 {
                    let bound = next / (1.0 - ratio);
                    if bound < tol {
                        tail_mass = bound;
                        break;
                    }
                }
            }
            k += 1;
        }
        BinomialTable { trials, probs, tail_mass }
    }

    /// Probability of `k`, zero past the truncation point.
    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    /// Largest retained `k`.
    pub fn max_k(&self) -> usize {
        self.probs.len() - 1
    }
}

/// Walks `P[K = k]` upward by the ratio recurrence from `P[K = 0]`, which is
/// more accurate than log-gamma differences when `trials` is large. Falls
/// back to [`pmf`] when `P[K = 0]` underflows.
struct Successive {
    trials: usize,
    p: f64,
    odds: f64,
    last: Option<(usize, f64)>,
    direct: bool,
}

impl Successive {
    fn new(trials: usize, p: f64) -> Self {
        let p0 = pmf(trials, 0, p);
        Successive { trials, p, odds: p / (1.0 - p), last: None, direct: !(p0 > 1e-280) || p >= 1.0 }
    }

    fn peek(&self, k: usize) -> f64 {
        match self.last {
            Some((j, pj)) if !self.direct && j + 1 == k => {
                pj * (self.trials - j) as f64 / (j + 1) as f64 * self.odds
            }
            _ => pmf(self.trials, k, self.p),
        }
    }

    fn at(&mut self, k: usize) -> f64 {
        let v = if k == 0 && !self.direct { (self.trials as f64 * (-self.p).ln_1p()).exp() } else { self.peek(k) };
        self.last = Some((k, v));
        v
    }
}
