//! Real-coefficient polynomials in one complex variable.
//!
//! Coefficients are stored highest degree first. The zero polynomial is the
//! empty coefficient vector; every constructor strips exact leading zeros so
//! there is exactly one representation per polynomial.
//!
//! The lag polynomials of a linearly observation-driven model are
//!
//! ```text
//! P(z; a) = z^p - a_1 z^{p-1} - ... - a_p
//! Q(z; b) = b_1 z^{q-1} + b_2 z^{q-2} + ... + b_q
//! ```
//!
//! Invertibility is "all roots of P strictly inside the unit circle" and
//! identifiability additionally needs P and Q to share no root. Root finding
//! goes through companion-matrix eigenvalues; the common-root test is a
//! Euclidean GCD whose zero test is relative to the coefficient max-norm.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statespace::eigenvalues;

/// Default relative tolerance for the numerical common-root test.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for Poly {
    fn from(v: Vec<f64>) -> Self {
        Poly::new(v)
    }
}

impl From<Poly> for Vec<f64> {
    fn from(p: Poly) -> Self {
        p.coeffs
    }
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let first = coeffs
            .iter()
            .position(|&c| c != 0.0)
            .unwrap_or(coeffs.len());
        Poly {
            coeffs: coeffs[first..].to_vec(),
        }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly { coeffs: vec![1.0] }
    }

    /// Monic linear factor `z - root`.
    pub fn linear(root: f64) -> Self {
        Poly::new(vec![1.0, -root])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the leading nonzero coefficient; 0 for constants and for the
    /// zero polynomial.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.first().copied().unwrap_or(0.0)
    }

    /// Coefficient of `z^k`.
    pub fn coeff(&self, k: usize) -> f64 {
        if k > self.degree() || self.is_zero() {
            0.0
        } else {
            self.coeffs[self.degree() - k]
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Divides by the leading coefficient. The zero polynomial stays zero.
    pub fn monic(&self) -> Poly {
        match self.coeffs.first() {
            Some(&lead) => Poly::new(self.coeffs.iter().map(|c| c / lead).collect()),
            None => Poly::zero(),
        }
    }

    /// Drops leading coefficients whose magnitude is at most `abs_tol`.
    pub fn trim(&self, abs_tol: f64) -> Poly {
        let first = self
            .coeffs
            .iter()
            .position(|c| c.abs() > abs_tol)
            .unwrap_or(self.coeffs.len());
        Poly::new(self.coeffs[first..].to_vec())
    }

    /// Long division. Panics if `divisor` is the zero polynomial.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let n = self.coeffs.len();
        let m = divisor.coeffs.len();
        if n < m {
            return (Poly::zero(), self.clone());
        }
        let lead = divisor.coeffs[0];
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0.0; n - m + 1];
        for i in 0..=(n - m) {
            let f = rem[i] / lead;
            quot[i] = f;
            rem[i] = 0.0;
            for j in 1..m {
                rem[i + j] -= f * divisor.coeffs[j];
            }
        }
        (Poly::new(quot), Poly::new(rem[n - m + 1..].to_vec()))
    }

    /// Coefficients of `z^{len-1}, ..., z^0`, zero padded on the left.
    /// Panics if the polynomial does not fit.
    pub fn padded(&self, len: usize) -> Vec<f64> {
        assert!(
            self.coeffs.len() <= len,
            "polynomial does not fit in {len} slots"
        );
        let mut out = vec![0.0; len - self.coeffs.len()];
        out.extend_from_slice(&self.coeffs);
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let d = self.degree();
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let k = d - i;
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}z")?,
                _ => write!(f, "{a}z^{k}")?,
            }
        }
        Ok(())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let a = self.padded(len);
        let b = rhs.padded(len);
        Poly::new(a.iter().zip(&b).map(|(x, y)| x + y).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &rhs.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

/// `z^p - sum_k a_k z^{p-k}`.
pub fn make_p(a: &[f64]) -> Result<Poly> {
    if a.is_empty() {
        return Err(Error::EmptyOrder);
    }
    let mut coeffs = Vec::with_capacity(a.len() + 1);
    coeffs.push(1.0);
    coeffs.extend(a.iter().map(|c| -c));
    Ok(Poly::new(coeffs))
}

/// `sum_{k=0}^{q-1} b_{k+1} z^{q-1-k}`.
pub fn make_q(b: &[f64]) -> Result<Poly> {
    if b.is_empty() {
        return Err(Error::EmptyOrder);
    }
    Ok(Poly::new(b.to_vec()))
}

/// All complex roots with multiplicity, as eigenvalues of the companion
/// matrix of the monic polynomial. Each root gets at most a few Newton steps,
/// accepted only when they shrink the residual.
pub fn roots(poly: &Poly) -> Result<Vec<Complex64>> {
    if poly.is_zero() || poly.degree() == 0 {
        return Err(Error::NoRoots);
    }
    let monic = poly.monic();
    let n = monic.degree();
    let c = monic.coeffs();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -c[j + 1];
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    let mut rs = eigenvalues(&m)?;
    let deriv = derivative(&monic);
    for r in rs.iter_mut() {
        polish(&monic, &deriv, r);
    }
    rs.sort_by(|x, y| {
        y.norm()
            .total_cmp(&x.norm())
            .then(y.re.total_cmp(&x.re))
            .then(y.im.total_cmp(&x.im))
    });
    Ok(rs)
}

fn derivative(p: &Poly) -> Poly {
    let d = p.degree();
    Poly::new(
        p.coeffs()
            .iter()
            .take(d)
            .enumerate()
            .map(|(i, c)| c * (d - i) as f64)
            .collect(),
    )
}

fn polish(p: &Poly, deriv: &Poly, r: &mut Complex64) {
    let mut res = p.eval(*r).norm();
    for _ in 0..3 {
        let dp = deriv.eval(*r);
        if dp.norm() == 0.0 {
            break;
        }
        let cand = *r - p.eval(*r) / dp;
        let cres = p.eval(cand).norm();
        if cres.is_finite() && cres < res {
            *r = cand;
            res = cres;
        } else {
            break;
        }
    }
}

/// Largest root modulus of `P(z; a)`.
pub fn max_root_modulus(a: &[f64]) -> Result<f64> {
    let p = make_p(a)?;
    Ok(roots(&p)?.iter().fold(0.0, |m, r| m.max(r.norm())))
}

/// True iff every root of `P(z; a)` has modulus `< 1`, i.e. `1 - sum a_k z^k`
/// has no zero in the closed unit disk.
pub fn in_stability_region(a: &[f64]) -> bool {
    in_stability_region_with_margin(a, 0.0)
}

/// As [`in_stability_region`] but requires modulus `< 1 - margin`.
/// Empty `a` and non-finite coefficients are never stable.
pub fn in_stability_region_with_margin(a: &[f64], margin: f64) -> bool {
    if a.iter().any(|c| !c.is_finite()) {
        return false;
    }
    match max_root_modulus(a) {
        Ok(m) => m < 1.0 - margin,
        Err(_) => false,
    }
}

/// Monic greatest common divisor by the Euclidean algorithm. Both inputs are
/// scaled to unit max-norm; a remainder counts as zero once its max-norm is
/// at most `tol`. If `q` is zero the result is monic `p`.
pub fn poly_gcd(p: &Poly, q: &Poly, tol: f64) -> Result<Poly> {
    let p = p.trim(tol * p.max_norm());
    let q = q.trim(tol * q.max_norm());
    match (p.is_zero(), q.is_zero()) {
        (true, true) => return Err(Error::ZeroGcd),
        (false, true) => return Ok(p.monic()),
        (true, false) => return Ok(q.monic()),
        _ => {}
    }
    let mut a = p.scale(1.0 / p.max_norm());
    let mut b = q.scale(1.0 / q.max_norm());
    if a.degree() < b.degree() {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        if b.degree() == 0 {
            return Ok(Poly::one());
        }
        let (_, r) = a.div_rem(&b.monic());
        let r = r.trim(tol);
        if r.is_zero() {
            return Ok(b.monic());
        }
        a = b;
        b = r.scale(1.0 / r.max_norm());
    }
}

/// True iff `p` and `q` have no common root at tolerance `tol`.
pub fn coprime(p: &Poly, q: &Poly, tol: f64) -> Result<bool> {
    Ok(poly_gcd(p, q, tol)?.degree() == 0)
}

/// Quotient `p / u`, provided the remainder is within `tol * max(1, |p|)`.
pub fn poly_divide_exact(p: &Poly, u: &Poly, tol: f64) -> Result<Poly> {
    if u.is_zero() {
        return Err(Error::NotDivisible {
            residual: f64::INFINITY,
            tol,
        });
    }
    let (quot, rem) = p.div_rem(u);
    let bound = tol * p.max_norm().max(1.0);
    let residual = rem.max_norm();
    if residual > bound {
        return Err(Error::NotDivisible {
            residual,
            tol: bound,
        });
    }
    Ok(quot)
}
