//! Identifiability of the linear link parameters.
//!
//! With `a` in the stability region, `(omega, a, b)` is identified iff the
//! lag polynomials `P(.; a)` and `Q(.; b)` are coprime. Observationally
//! equivalent parameters share `b_1`, the impulse response `h_k`, and the
//! stationary level `omega * gain(a)`.
//!
//! When `P` and `Q` share a factor `U`, write `P = C U` and `Q = D U`. Then
//! for every `d`
//!
//! ```text
//! Q (P + d C) = P (Q + d D)
//! ```
//!
//! so `(P + d C, Q + d D)` has the same transfer function as `(P, Q)`.
//! Reading `a(d)` and `b(d)` off those polynomials and rescaling `omega` to
//! keep `omega * gain(a)` fixed gives a one-parameter curve of equivalent
//! parameters through the truth.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Family, LodmParams};
use crate::poly::{
    coprime, in_stability_region, in_stability_region_with_margin, make_p, make_q,
    poly_divide_exact, poly_gcd, roots, Poly,
};
use crate::statespace::geometric_gain;

/// Horizon used by [`equivalent`] when callers have no better choice.
pub const DEFAULT_HORIZON: usize = 200;

/// Distance kept between the roots of `P_d` and the unit circle.
pub const STABILITY_MARGIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Identifiable,
    NotIdentifiable,
    InvertibilityFails,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentReport {
    pub invertible: bool,
    pub coprime: bool,
    /// Roots of the common factor, each as `[re, im]`.
    pub common_roots: Vec<Complex64>,
    pub verdict: Verdict,
}

pub fn check_identifiable(params: &LodmParams, tol: f64) -> Result<IdentReport> {
    let p = make_p(&params.a)?;
    let q = make_q(&params.b)?;
    let invertible = in_stability_region(&params.a);
    let gcd = poly_gcd(&p, &q, tol)?;
    let is_coprime = gcd.degree() == 0;
    let common_roots = if is_coprime { Vec::new() } else { roots(&gcd)? };
    let verdict = match (invertible, is_coprime) {
        (false, _) => Verdict::InvertibilityFails,
        (true, true) => Verdict::Identifiable,
        (true, false) => Verdict::NotIdentifiable,
    };
    Ok(IdentReport {
        invertible,
        coprime: is_coprime,
        common_roots,
        verdict,
    })
}

/// Finite-horizon test that two parameters induce the same law: equal `b_1`,
/// impulse responses equal for `k <= horizon`, and equal stationary level
/// `omega * gain(a)`, all within `tol`. Orders may differ.
pub fn equivalent(p1: &LodmParams, p2: &LodmParams, horizon: usize, tol: f64) -> Result<bool> {
    let g1 = geometric_gain(&p1.a).map_err(|_| Error::NotInvertible)?;
    let g2 = geometric_gain(&p2.a).map_err(|_| Error::NotInvertible)?;
    if (p1.b[0] - p2.b[0]).abs() > tol {
        return Ok(false);
    }
    let h1 = p1.companion()?.impulse_response(horizon);
    let h2 = p2.companion()?.impulse_response(horizon);
    if h1.iter().zip(&h2).any(|(x, y)| (x - y).abs() > tol) {
        return Ok(false);
    }
    Ok((p1.omega * g1 - p2.omega * g2).abs() <= tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivCurve {
    pub family: Family,
    pub base: LodmParams,
    /// `a(d) = a* + d * dir_a`: the negated coefficients of `C`.
    pub dir_a: Vec<f64>,
    /// `b_{2..q}(d) = b*_{2..q} + d * dir_b`: the coefficients of `D`.
    pub dir_b: Vec<f64>,
    /// Closed interval of admissible `d`.
    pub d_range: [f64; 2],
    /// The base point has a full neighbourhood inside the family's parameter
    /// set and the range extends on both sides of 0.
    pub interior: bool,
    /// Monic common factor `U`.
    pub gcd: Poly,
}

impl EquivCurve {
    pub fn contains(&self, d: f64) -> bool {
        d >= self.d_range[0] && d <= self.d_range[1]
    }

    /// Linear parameters at `d` without the range check. `omega(d)` keeps
    /// `omega * gain(a)` at its base value.
    fn point_unchecked(&self, d: f64) -> LodmParams {
        let a: Vec<f64> = self
            .base
            .a
            .iter()
            .zip(&self.dir_a)
            .map(|(a, c)| a + d * c)
            .collect();
        let mut b = Vec::with_capacity(self.base.q());
        b.push(self.base.b[0]);
        b.extend(
            self.base.b[1..]
                .iter()
                .zip(&self.dir_b)
                .map(|(b, c)| b + d * c),
        );
        let ratio = (1.0 - a.iter().sum::<f64>()) / (1.0 - self.base.a.iter().sum::<f64>());
        LodmParams {
            omega: self.base.omega * ratio,
            a,
            b,
            phi: self.base.phi,
        }
    }

    fn admissible(&self, d: f64) -> bool {
        let pt = self.point_unchecked(d);
        in_stability_region_with_margin(&pt.a, STABILITY_MARGIN)
            && pt.omega.is_finite()
            && (!self.family.sign_constrained()
                || (pt.omega > 0.0
                    && pt.a.iter().all(|&v| v >= 0.0)
                    && pt.b.iter().all(|&v| v >= 0.0)))
    }
}

/// Builds the curve of parameters equivalent to `params` through the common
/// factor of `P` and `Q`, restricted to where `a(d)` stays stable (with
/// [`STABILITY_MARGIN`]) and the family's sign constraints hold.
pub fn non_ident_curve(family: Family, params: &LodmParams, tol: f64) -> Result<EquivCurve> {
    let report = check_identifiable(params, tol)?;
    match report.verdict {
        Verdict::InvertibilityFails => return Err(Error::NotInvertible),
        Verdict::Identifiable => return Err(Error::NoCurve),
        Verdict::NotIdentifiable => {}
    }
    let (p, q) = (params.p(), params.q());
    let pp = make_p(&params.a)?;
    let qq = make_q(&params.b)?;
    let u = poly_gcd(&pp, &qq, tol)?;
    let c = poly_divide_exact(&pp, &u, tol)?;
    let d_poly = if qq.trim(tol * qq.max_norm()).is_zero() {
        Poly::zero()
    } else {
        poly_divide_exact(&qq, &u, tol)?
    };
    debug_assert!(c.degree() < p && (d_poly.is_zero() || d_poly.degree() + 1 < q));

    let mut curve = EquivCurve {
        family,
        base: params.clone(),
        dir_a: c.padded(p).iter().map(|v| -v).collect(),
        dir_b: d_poly.padded(q - 1),
        d_range: [0.0, 0.0],
        interior: false,
        gcd: u,
    };

    let hi = boundary(&curve, 1.0);
    let lo = -boundary(&curve, -1.0);
    curve.d_range = [lo, hi];
    let base_open = !family.sign_constrained()
        || (params.omega > 0.0
            && params.a.iter().all(|&v| v > 0.0)
            && params.b[1..].iter().all(|&v| v > 0.0));
    curve.interior = base_open && lo < 0.0 && hi > 0.0;
    Ok(curve)
}

/// Largest `t >= 0` such that every `d = sign * s`, `0 <= s <= t`, scanned on
/// a fine grid is admissible, refined by bisection at the first failure.
fn boundary(curve: &EquivCurve, sign: f64) -> f64 {
    if !curve.admissible(0.0) {
        return 0.0;
    }
    let scale = curve
        .dir_a
        .iter()
        .chain(&curve.dir_b)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    // Stable polynomials have |a_k| <= binom(p, k) <= 2^p.
    let extent = (2f64.powi(curve.base.p() as i32)
        + curve.base.a.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        / scale
        + 1.0;
    let step = extent / 4096.0;
    let mut good = 0.0;
    let mut bad = None;
    let mut s = step;
    while s <= extent {
        if curve.admissible(sign * s) {
            good = s;
            s += step;
        } else {
            bad = Some(s);
            break;
        }
    }
    let Some(mut bad) = bad else {
        return good;
    };
    for _ in 0..80 {
        let mid = 0.5 * (good + bad);
        if mid <= good || mid >= bad {
            break;
        }
        if curve.admissible(sign * mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// The parameter at `d`; fails outside `curve.d_range`.
pub fn curve_point(curve: &EquivCurve, d: f64) -> Result<LodmParams> {
    if !curve.contains(d) {
        return Err(Error::OutOfRange {
            d,
            lo: curve.d_range[0],
            hi: curve.d_range[1],
        });
    }
    Ok(curve.point_unchecked(d))
}

/// Coefficient max-norm of `Q* P_d - P* Q_d` at `d`.
pub fn curve_identity_residual(curve: &EquivCurve, d: f64) -> Result<f64> {
    let pt = curve.point_unchecked(d);
    let ps = make_p(&curve.base.a)?;
    let qs = make_q(&curve.base.b)?;
    let pd = make_p(&pt.a)?;
    let qd = make_q(&pt.b)?;
    Ok((&(&qs * &pd) - &(&ps * &qd)).max_norm())
}

/// Convenience wrapper: `true` iff `P(.; a)` and `Q(.; b)` are coprime.
pub fn lag_polynomials_coprime(params: &LodmParams, tol: f64) -> Result<bool> {
    coprime(&make_p(&params.a)?, &make_q(&params.b)?, tol)
}
