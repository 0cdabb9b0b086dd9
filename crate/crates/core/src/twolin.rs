//! The TwoLin environment: bit strings split at `floor(ell * n)` and the two
//! linear fitness functions
//!
//! ```text
//! f1(x) = n * (ones in left part) + (ones in right part)
//! f2(x) =     (ones in left part) + n * (ones in right part)
//! ```
//!
//! Every generation `f1` is drawn with probability `rho`, `f2` otherwise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Environment {
    /// Left part weighted by `n`.
    F1,
    /// Right part weighted by `n`.
    F2,
}

/// Zero-bit counts of the left and right part. `(0, 0)` is the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    #[serde(rename = "x_L")]
    pub x_l: usize,
    #[serde(rename = "x_R")]
    pub x_r: usize,
}

impl State {
    pub const OPTIMUM: State = State { x_l: 0, x_r: 0 };

    pub fn new(x_l: usize, x_r: usize) -> Self {
        State { x_l, x_r }
    }

    pub fn is_optimum(&self) -> bool {
        self.x_l == 0 && self.x_r == 0
    }

    pub fn total(&self) -> usize {
        self.x_l + self.x_r
    }

    /// `max(x_L, x_R)`.
    pub fn norm_inf(&self) -> usize {
        self.x_l.max(self.x_r)
    }

    pub fn swapped(&self) -> State {
        State { x_l: self.x_r, x_r: self.x_l }
    }

    pub fn as_vec(&self) -> [f64; 2] {
        [self.x_l as f64, self.x_r as f64]
    }

    pub fn check(&self, p: &Params) -> Result<()> {
        let (left, right) = (p.left_len(), p.right_len());
        if self.x_l > left || self.x_r > right {
            return Err(Error::StateOutOfBounds { x_l: self.x_l, x_r: self.x_r, left, right });
        }
        Ok(())
    }

    /// Every state of an instance, row-major in `x_L`.
    pub fn all(p: &Params) -> impl Iterator<Item = State> {
        let right = p.right_len();
        (0..=p.left_len()).flat_map(move |x_l| (0..=right).map(move |x_r| State { x_l, x_r }))
    }
}

/// A bit string with cached zero counts per part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitString {
    bits: Vec<bool>,
    left_len: usize,
    zeros_left: usize,
    zeros_right: usize,
}

impl BitString {
    pub fn from_bits(bits: Vec<bool>, left_len: usize) -> Self {
        assert!(left_len <= bits.len());
        let zeros_left = bits[..left_len].iter().filter(|&&b| !b).count();
        let zeros_right = bits[left_len..].iter().filter(|&&b| !b).count();
        BitString { bits, left_len, zeros_left, zeros_right }
    }

    pub fn ones(p: &Params) -> Self {
        Self::from_bits(vec![true; p.n], p.left_len())
    }

    pub fn zeros(p: &Params) -> Self {
        Self::from_bits(vec![false; p.n], p.left_len())
    }

    /// Zeros at the leading positions of each part.
    pub fn canonical(state: State, p: &Params) -> Result<Self> {
        state.check(p)?;
        let left = p.left_len();
        let bits = (0..p.n)
            .map(|k| if k < left { k >= state.x_l } else { k - left >= state.x_r })
            .collect();
        Ok(Self::from_bits(bits, left))
    }

    /// Zeros at uniformly random positions within each part.
    pub fn scattered<R: Rng + ?Sized>(state: State, p: &Params, rng: &mut R) -> Result<Self> {
        state.check(p)?;
        let left = p.left_len();
        let mut bits = vec![true; p.n];
        for k in rand::seq::index::sample(rng, left, state.x_l) {
            bits[k] = false;
        }
        for k in rand::seq::index::sample(rng, p.n - left, state.x_r) {
            bits[left + k] = false;
        }
        Ok(Self::from_bits(bits, left))
    }

    pub fn uniform<R: Rng + ?Sized>(p: &Params, rng: &mut R) -> Self {
        let bits = (0..p.n).map(|_| rng.random::<bool>()).collect();
        Self::from_bits(bits, p.left_len())
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn left_len(&self) -> usize {
        self.left_len
    }

    pub fn state(&self) -> State {
        State { x_l: self.zeros_left, x_r: self.zeros_right }
    }

    pub fn ones_left(&self) -> usize {
        self.left_len - self.zeros_left
    }

    pub fn ones_right(&self) -> usize {
        self.bits.len() - self.left_len - self.zeros_right
    }

    /// Ones gained in the left and right part if `flips` were applied.
    pub fn gains(&self, flips: &[usize]) -> (i64, i64) {
        let (mut gl, mut gr) = (0i64, 0i64);
        for &k in flips {
            let g = if self.bits[k] { -1 } else { 1 };
            if k < self.left_len {
                gl += g;
            } else {
                gr += g;
            }
        }
        (gl, gr)
    }

    /// Flips the listed positions, keeping the cached counts current.
    pub fn apply(&mut self, flips: &[usize]) {
        for &k in flips {
            let was_one = self.bits[k];
            self.bits[k] = !was_one;
            let counter = if k < self.left_len { &mut self.zeros_left } else { &mut self.zeros_right };
            if was_one {
                *counter += 1;
            } else {
                *counter -= 1;
            }
        }
        debug_assert!(self.cache_is_coherent(), "zero-count cache out of sync after flips");
    }

    pub fn with_flips(&self, flips: &[usize]) -> Self {
        let mut y = self.clone();
        y.apply(flips);
        y
    }

    /// Recounts zeros from the bits and compares with the cache.
    pub fn cache_is_coherent(&self) -> bool {
        let zl = self.bits[..self.left_len].iter().filter(|&&b| !b).count();
        let zr = self.bits[self.left_len..].iter().filter(|&&b| !b).count();
        zl == self.zeros_left && zr == self.zeros_right
    }
}

/// Fitness from one-counts: `n * heavy + light`, in `u64`.
#[inline]
pub fn fitness_of_counts(ones_left: u64, ones_right: u64, env: Environment, n: u64) -> u64 {
    match env {
        Environment::F1 => n * ones_left + ones_right,
        Environment::F2 => ones_left + n * ones_right,
    }
}

/// Full evaluation of `f1` or `f2` on `x`.
pub fn fitness(x: &BitString, env: Environment, p: &Params) -> u64 {
    let left = x.left_len();
    let ones_left = x.bits()[..left].iter().filter(|&&b| b).count() as u64;
    let ones_right = x.bits()[left..].iter().filter(|&&b| b).count() as u64;
    fitness_of_counts(ones_left, ones_right, env, p.n as u64)
}

pub fn draw_environment<R: Rng + ?Sized>(rng: &mut R, p: &Params) -> Environment {
    if rng.random::<f64>() < p.rho {
        Environment::F1
    } else {
        Environment::F2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    AcceptOffspring,
    KeepParent,
}

/// Elitist selection; ties go to the offspring.
pub fn compare(parent: &BitString, offspring: &BitString, env: Environment, p: &Params) -> Decision {
    assert_eq!(parent.len(), offspring.len());
    if fitness(offspring, env, p) >= fitness(parent, env, p) {
        Decision::AcceptOffspring
    } else {
        Decision::KeepParent
    }
}

/// Delta-evaluated selection from the ones gained per part.
#[inline]
pub fn accepts(env: Environment, gain_left: i64, gain_right: i64, n: usize) -> bool {
    let n = n as i64;
    let diff = match env {
        Environment::F1 => n * gain_left + gain_right,
        Environment::F2 => gain_left + n * gain_right,
    };
    diff >= 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize, ell: f64) -> Params {
        Params::new(1.0, 0.5, ell, n).unwrap()
    }

    fn from_str(s: &str, p: &Params) -> BitString {
        BitString::from_bits(s.chars().map(|c| c == '1').collect(), p.left_len())
    }

    #[test]
    fn fitness_examples() {
        let p = params(10, 0.5);
        let ones = BitString::ones(&p);
        assert_eq!(fitness(&ones, Environment::F1, &p), 55);
        assert_eq!(fitness(&ones, Environment::F2, &p), 55);
        let zeros = BitString::zeros(&p);
        assert_eq!(fitness(&zeros, Environment::F1, &p), 0);
        assert_eq!(fitness(&zeros, Environment::F2, &p), 0);

        let p = params(4, 0.5);
        let x = from_str("1010", &p);
        assert_eq!(fitness(&x, Environment::F1, &p), 5);
        assert_eq!(fitness(&x, Environment::F2, &p), 5);
    }

    #[test]
    fn environment_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = Params::new(1.0, 1.0, 0.5, 10).unwrap();
        assert!((0..1000).all(|_| draw_environment(&mut rng, &p) == Environment::F1));
        let p = Params::new(1.0, 0.0, 0.5, 10).unwrap();
        assert!((0..1000).all(|_| draw_environment(&mut rng, &p) == Environment::F2));
    }

    #[test]
    fn environment_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = Params::new(1.0, 0.5, 0.5, 10).unwrap();
        let draws = 1_000_000;
        let f1 = (0..draws).filter(|_| draw_environment(&mut rng, &p) == Environment::F1).count();
        let frac = f1 as f64 / draws as f64;
        assert!((frac - 0.5).abs() < 0.002, "{frac}");
    }

    #[test]
    fn selection_examples() {
        let p = params(6, 0.5);
        let parent = from_str("010101", &p);
        let better = from_str("110101", &p);
        for env in [Environment::F1, Environment::F2] {
            assert_eq!(compare(&parent, &better, env, &p), Decision::AcceptOffspring);
            assert_eq!(compare(&parent, &parent, env, &p), Decision::AcceptOffspring);
        }
        // One more left one-bit outweighs losing every right one-bit under f1.
        let parent = from_str("100111", &p);
        let off = from_str("110000", &p);
        assert_eq!(compare(&parent, &off, Environment::F1, &p), Decision::AcceptOffspring);
        assert_eq!(compare(&parent, &off, Environment::F2, &p), Decision::KeepParent);
    }

    fn all_strings(n: usize, p: &Params) -> Vec<BitString> {
        (0..1u32 << n)
            .map(|m| BitString::from_bits((0..n).map(|k| m >> k & 1 == 1).collect(), p.left_len()))
            .collect()
    }

    #[test]
    fn exhaustive_sign_rule_n6() {
        // sign(f1(y) - f1(x)) = sign(n (i - r1) + (j - r2)) with gains i - r1, j - r2.
        let p = params(6, 0.5);
        let xs = all_strings(6, &p);
        for x in &xs {
            for y in &xs {
                let gl = y.ones_left() as i64 - x.ones_left() as i64;
                let gr = y.ones_right() as i64 - x.ones_right() as i64;
                for env in [Environment::F1, Environment::F2] {
                    let full = compare(x, y, env, &p) == Decision::AcceptOffspring;
                    assert_eq!(full, accepts(env, gl, gr, p.n));
                }
            }
        }
    }

    #[test]
    fn exhaustive_ties() {
        for (n, ell) in [(5, 0.4), (7, 0.3), (8, 0.5)] {
            let p = params(n, ell);
            let xs = all_strings(n, &p);
            for x in &xs {
                for y in &xs {
                    let same = x.ones_left() == y.ones_left() && x.ones_right() == y.ones_right();
                    for env in [Environment::F1, Environment::F2] {
                        assert_eq!(fitness(x, env, &p) == fitness(y, env, &p), same);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_flips_always_accepted() {
        let p = params(8, 0.5);
        for x in all_strings(8, &p) {
            let zero_positions: Vec<usize> = (0..8).filter(|&k| !x.bits()[k]).collect();
            for m in 0..1u32 << zero_positions.len() {
                let flips: Vec<usize> = zero_positions
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| m >> b & 1 == 1)
                    .map(|(_, &k)| k)
                    .collect();
                let y = x.with_flips(&flips);
                for env in [Environment::F1, Environment::F2] {
                    assert_eq!(compare(&x, &y, env, &p), Decision::AcceptOffspring);
                }
            }
        }
    }

    #[test]
    fn canonical_and_scattered_states() {
        let p = params(9, 0.5);
        let s = State::new(3, 2);
        let x = BitString::canonical(s, &p).unwrap();
        assert_eq!(x.state(), s);
        assert!(x.cache_is_coherent());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = BitString::scattered(s, &p, &mut rng).unwrap();
        assert_eq!(y.state(), s);
        assert!(BitString::canonical(State::new(5, 0), &p).is_err());
        assert_eq!(State::all(&p).count(), 5 * 6);
    }

    #[test]
    fn apply_and_gains_agree() {
        let p = params(10, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut x = BitString::uniform(&p, &mut rng);
        for _ in 0..200 {
            let flips: Vec<usize> = rand::seq::index::sample(&mut rng, 10, 3).into_vec();
            let (gl, gr) = x.gains(&flips);
            let before = x.state();
            x.apply(&flips);
            assert!(x.cache_is_coherent());
            assert_eq!(before.x_l as i64 - gl, x.state().x_l as i64);
            assert_eq!(before.x_r as i64 - gr, x.state().x_r as i64);
        }
    }
}
