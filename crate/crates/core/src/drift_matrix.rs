//! The 2x2 drift matrix of the zero-bit counts `(x_L, x_R)` near the optimum,
//! its eigen-decomposition, and the efficiency classifier `a * gamma0 + b`.
//!
//! For `x_L + x_R = o(n)` the expected one-step decrease of `(x_L, x_R)` is
//! `(1 +- o(1)) A x / n` with
//!
//! ```text
//! a =  rho chi e^{-ell chi} + (1-rho) chi e^{-chi}
//! b = -(1-rho) ell chi^2 e^{-(1-ell) chi}
//! c = -rho (1-ell) chi^2 e^{-ell chi}
//! d =  (1-rho) chi e^{-(1-ell) chi} + rho chi e^{-chi}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::scalar::Real;

/// Default half-width of the band in which [`classify`] reports
/// [`Verdict::Boundary`].
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftMatrix<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Real> DriftMatrix<T> {
    pub fn from_rates(chi: T, rho: T, ell: T) -> Self {
        let one = T::one();
        let chi2 = chi * chi;
        let e_full = (-chi).exp();
        let e_left = (-ell * chi).exp();
        let e_right = (-(one - ell) * chi).exp();
        DriftMatrix {
            a: rho * chi * e_left + (one - rho) * chi * e_full,
            b: -(one - rho) * ell * chi2 * e_right,
            c: -rho * (one - ell) * chi2 * e_left,
            d: (one - rho) * chi * e_right + rho * chi * e_full,
        }
    }

    /// `A x`.
    pub fn apply(&self, x: [T; 2]) -> [T; 2] {
        [self.a * x[0] + self.b * x[1], self.c * x[0] + self.d * x[1]]
    }

    pub fn max_abs_entry(&self) -> T {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    /// `a, d > 0` and `b, c < 0`: the mutually impeding case.
    pub fn has_sign_pattern(&self) -> bool {
        self.a > T::zero() && self.d > T::zero() && self.b < T::zero() && self.c < T::zero()
    }

    /// Residual of `c g^2 + (d - a) g - b` at `g`.
    pub fn ratio_residual(&self, g: T) -> T {
        self.c * g * g + (self.d - self.a) * g - self.b
    }

    pub fn to_f64(&self) -> DriftMatrix<f64> {
        DriftMatrix {
            a: self.a.as_f64(),
            b: self.b.as_f64(),
            c: self.c.as_f64(),
            d: self.d.as_f64(),
        }
    }

    pub(crate) fn degenerate(&self) -> Error {
        let m = self.to_f64();
        Error::Degenerate { a: m.a, b: m.b, c: m.c, d: m.d }
    }
}

/// Evaluates the drift matrix for `p` in double precision.
pub fn build_matrix(p: &Params) -> DriftMatrix<f64> {
    DriftMatrix::from_rates(p.chi, p.rho, p.ell)
}

/// Eigen-decomposition of a drift matrix with the sign pattern `a, d > 0`,
/// `b, c < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenSystem<T> {
    pub matrix: DriftMatrix<T>,
    /// Unique positive root of `c g^2 + (d - a) g - b = 0`.
    pub gamma0: T,
    /// `c gamma0 + d`, eigenvalue of `e1`.
    pub lambda1: T,
    /// `a - c gamma0`, eigenvalue of `e2`.
    pub lambda2: T,
    /// `(gamma0, 1)`, both entries positive.
    pub e1: [T; 2],
    /// `(b, -c gamma0)`, first entry negative, second positive.
    pub e2: [T; 2],
    /// `a gamma0 + b`; has the sign of `lambda1`.
    pub classifier: T,
}

impl<T: Real> EigenSystem<T> {
    /// `max_k |(A e)_k - lambda e_k|` for eigenpair `which` (1 or 2).
    pub fn eigen_residual(&self, which: usize) -> T {
        let (lambda, e) = match which {
            1 => (self.lambda1, self.e1),
            _ => (self.lambda2, self.e2),
        };
        let ae = self.matrix.apply(e);
        (ae[0] - lambda * e[0]).abs().max((ae[1] - lambda * e[1]).abs())
    }

    pub fn root_residual(&self) -> T {
        self.matrix.ratio_residual(self.gamma0).abs()
    }
}

/// Solves for `gamma0` in closed form and assembles the eigenpairs.
///
/// The quadratic `c g^2 + (d - a) g - b` is solved with the cancellation-free
/// form `q = -(B + sign(B) sqrt(B^2 - 4AC)) / 2`, roots `q / A` and `C / q`.
pub fn eigen_analysis<T: Real>(m: &DriftMatrix<T>) -> Result<EigenSystem<T>> {
    if !m.has_sign_pattern() {
        return Err(m.degenerate());
    }
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let qa = m.c;
    let qb = m.d - m.a;
    let qc = -m.b;
    // qa * qc < 0, so the discriminant exceeds qb^2 and q never vanishes.
    let disc = qb * qb - four * qa * qc;
    let sign = if qb < T::zero() { -T::one() } else { T::one() };
    let q = -(qb + sign * disc.sqrt()) / two;
    let r1 = q / qa;
    let r2 = qc / q;
    let gamma0 = if r1 > T::zero() { r1 } else { r2 };
    if !(gamma0 > T::zero() && gamma0.is_finite()) {
        return Err(m.degenerate());
    }
    let lambda1 = m.c * gamma0 + m.d;
    let lambda2 = m.a - m.c * gamma0;
    Ok(EigenSystem {
        matrix: *m,
        gamma0,
        lambda1,
        lambda2,
        e1: [gamma0, T::one()],
        e2: [m.b, -m.c * gamma0],
        classifier: m.a * gamma0 + m.b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    /// `a gamma0 + b > 0`: O(n log n) from o(n) zero-bits.
    Efficient,
    /// `a gamma0 + b < 0`: superpolynomial.
    Inefficient,
    /// `|a gamma0 + b|` within the tolerance.
    Boundary,
}

impl Verdict {
    pub fn from_classifier(classifier: f64, tol: f64) -> Self {
        if classifier > tol {
            Verdict::Efficient
        } else if classifier < -tol {
            Verdict::Inefficient
        } else {
            Verdict::Boundary
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Efficient => "Efficient",
            Verdict::Inefficient => "Inefficient",
            Verdict::Boundary => "Boundary",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn classify(p: &Params) -> Result<Verdict> {
    classify_with_tol(p, DEFAULT_BOUNDARY_TOL)
}

/// Fails with [`Error::Degenerate`] when `rho` or `ell` is 0 or 1 (then `b = 0`
/// or `c = 0` and the parts decouple).
pub fn classify_with_tol(p: &Params, tol: f64) -> Result<Verdict> {
    p.validate()?;
    let es = eigen_analysis(&build_matrix(p))?;
    Ok(Verdict::from_classifier(es.classifier, tol))
}

/// `2 - chi + 2 e^{-chi/2}`; in the symmetric case the classifier equals
/// `chi e^{-chi/2} / 4` times this.
pub fn symmetric_balance<T: Real>(chi: T) -> T {
    let two = T::lit(2.0);
    two - chi + two * (-chi / two).exp()
}

/// The symmetric threshold `chi0 ~ 2.557`, root of [`symmetric_balance`].
pub fn symmetric_threshold() -> f64 {
    symmetric_threshold_in::<f64>(1e-12)
}

/// Bisection on `[2, 3]`, where the balance is strictly decreasing. Stops once
/// the residual is below `tol` or the bracket cannot shrink further.
pub fn symmetric_threshold_in<T: Real>(tol: T) -> T {
    let mut lo = T::lit(2.0);
    let mut hi = T::lit(3.0);
    let two = T::lit(2.0);
    loop {
        let mid = (lo + hi) / two;
        let g = symmetric_balance(mid);
        if g.abs() < tol || mid <= lo || mid >= hi {
            return mid;
        }
        if g > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Points in `chis` (sorted ascending) where the classifier changes sign,
/// located by linear interpolation between neighbouring grid points.
/// Degenerate grid points are skipped.
pub fn classifier_sign_changes(rho: f64, ell: f64, chis: &[f64]) -> Vec<f64> {
    let values: Vec<(f64, f64)> = chis
        .iter()
        .filter_map(|&chi| {
            let m = DriftMatrix::from_rates(chi, rho, ell);
            eigen_analysis(&m).ok().map(|es| (chi, es.classifier))
        })
        .collect();
    values
        .windows(2)
        .filter(|w| w[0].1.signum() != w[1].1.signum())
        .map(|w| {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            x0 + (x1 - x0) * y0 / (y0 - y1)
        })
        .collect()
}
