//! Inverting the link: recovering latent values from observations.
//!
//! Iterating the link from an arbitrary start `z0` over `y_0..y_k` gives
//! `x_{k+1}`. Because the link is affine, two starts differ after `n`
//! observations by `e_p^T A^n (z0 - z0')`, so the Lipschitz constant is the
//! l1 norm of the row `e_p^T A^n` (with the max metric on states), and it
//! decays geometrically exactly when `a` is in the stability region. The
//! infinite-past limit is the series `sum_k e_p^T A^k (omega_vec + U(Y_{-k}) b_vec)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{simulate, upsilon, Family, LinkState, LodmParams, ModelSpec, DEFAULT_BURN_IN};
use crate::poly::in_stability_region;
use crate::statespace::spectral_radius;

/// Constant start `(x_init, ..., x_init, u_init, ..., u_init)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitPoint {
    pub x_init: f64,
    pub u_init: f64,
}

impl InitPoint {
    pub fn new(x_init: f64, u_init: f64) -> Self {
        InitPoint { x_init, u_init }
    }

    pub fn state(&self, p: usize, q: usize) -> LinkState {
        LinkState::constant(p, q, self.x_init, self.u_init)
    }

    /// Start taken from sample moments of `y`, so it does not depend on the
    /// link parameters: `u_init` is the mean of `U(y)` and `x_init` the latent
    /// value whose conditional mean matches it.
    pub fn from_data(family: Family, phi: Option<f64>, y: &[f64]) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InsufficientInput { needed: 1, got: 0 });
        }
        let n = y.len() as f64;
        let mut u_mean = 0.0;
        for &v in y {
            u_mean += upsilon(family, v)?;
        }
        u_mean /= n;
        let y_mean = y.iter().sum::<f64>() / n;
        let x_init = match family {
            Family::GarchGaussian => u_mean.max(1e-8),
            Family::LogLinPoisson => y_mean.max(1e-3).ln(),
            Family::NbinGarch => {
                let r = phi.filter(|r| *r > 0.0).unwrap_or(1.0);
                (y_mean / r).max(1e-8)
            }
        };
        Ok(InitPoint {
            x_init,
            u_init: u_mean,
        })
    }
}

fn check_output(family: Family, x: f64) -> Result<()> {
    if !x.is_finite() || (family.sign_constrained() && x < 0.0) {
        return Err(Error::Domain(format!(
            "iterated link left the {family} latent domain (x = {x})"
        )));
    }
    Ok(())
}

/// Latent path `x_0, ..., x_n` obtained by running the link from `z0` over
/// `y_0, ..., y_{n-1}`. Entry 0 is the current latent value of `z0`.
pub fn filter_latent(
    spec: &ModelSpec,
    params: &LodmParams,
    y: &[f64],
    z0: &LinkState,
) -> Result<Vec<f64>> {
    if !z0.fits(params) || params.p() != spec.p || params.q() != spec.q {
        return Err(Error::InvalidParams(
            "initial state does not match model orders".into(),
        ));
    }
    let mut state = z0.clone();
    let mut out = Vec::with_capacity(y.len() + 1);
    out.push(state.current());
    for &yk in y {
        let next = state.advance(params, upsilon(spec.family, yk)?);
        check_output(spec.family, next)?;
        out.push(next);
    }
    Ok(out)
}

/// `x_{k+1} = f_{y_0..y_k}(z0)`.
pub fn iterate_link(
    spec: &ModelSpec,
    params: &LodmParams,
    y: &[f64],
    z0: &LinkState,
) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::InsufficientInput { needed: 1, got: 0 });
    }
    Ok(*filter_latent(spec, params, y, z0)?
        .last()
        .expect("filter_latent returns n + 1 values"))
}

/// Truncated infinite-past series for `X_1` given
/// `upsilon_y = (U(Y_{-n}), ..., U(Y_0))` in chronological order.
pub fn latent_reconstruct(params: &LodmParams, upsilon_y: &[f64]) -> Result<f64> {
    if !in_stability_region(&params.a) {
        return Err(Error::NotInvertible);
    }
    if upsilon_y.is_empty() {
        return Err(Error::InsufficientInput { needed: 1, got: 0 });
    }
    let comp = params.companion()?;
    let (xi, last) = (comp.x_index(), comp.dim() - 1);
    let has_u = params.q() > 1;
    let at = comp.matrix().transpose();
    let mut row = DVector::<f64>::zeros(comp.dim());
    row[xi] = 1.0;
    let mut total = 0.0;
    for &u in upsilon_y.iter().rev() {
        let mut term = params.omega * row[xi] + u * params.b[0] * row[xi];
        if has_u {
            term += u * row[last];
        }
        total += term;
        row = &at * row;
    }
    Ok(total)
}

/// `|e_p^T A^n|_1`: the exact Lipschitz constant of `z -> f_y(z)` for `n`
/// observations, under the max metric on states.
pub fn lipschitz_estimate(params: &LodmParams, n: usize) -> Result<f64> {
    Ok(params.companion()?.selector_power(n).lp_norm(1))
}

/// Constant `C` with `|e_p^T A^n|_1 <= C rho^n` for every `n >= 0`, from the
/// Cauchy integral over `|z| = rho`:
/// `C = rho * max_{|z|=rho} |e_p^T (zI - A)^{-1}|_1`, sampled on a fine grid.
/// Needs `rho` strictly above the spectral radius.
pub fn decay_constant(params: &LodmParams, rho: f64) -> Result<f64> {
    let comp = params.companion()?;
    let sr = spectral_radius(&comp)?;
    if rho.is_nan() || rho <= sr {
        return Err(Error::InvalidParams(format!(
            "rho = {rho} must exceed the spectral radius {sr}"
        )));
    }
    let n = comp.dim();
    let at: DMatrix<Complex64> = comp.matrix().transpose().map(|v| Complex64::new(v, 0.0));
    let mut sel = DVector::<Complex64>::zeros(n);
    sel[comp.x_index()] = Complex64::new(1.0, 0.0);
    let grid = 2048;
    let mut worst: f64 = 0.0;
    for j in 0..grid {
        let z = Complex64::from_polar(rho, 2.0 * std::f64::consts::PI * j as f64 / grid as f64);
        let lhs = DMatrix::<Complex64>::identity(n, n) * z - &at;
        let w = lhs
            .lu()
            .solve(&sel)
            .ok_or_else(|| Error::InvalidParams("resolvent is singular on the circle".into()))?;
        worst = worst.max(w.iter().map(|c| c.norm()).sum());
    }
    Ok(rho * worst)
}

/// Number of terms after which the reconstruction error from a start at
/// distance at most `scale` falls below `tol`, from the geometric bound with
/// `rho` halfway between the spectral radius and 1.
pub fn truncation_for_tolerance(params: &LodmParams, tol: f64, scale: f64) -> Result<usize> {
    if !in_stability_region(&params.a) {
        return Err(Error::NotInvertible);
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParams("tolerance must be positive".into()));
    }
    let sr = spectral_radius(&params.companion()?)?;
    let rho = 0.5 * (1.0 + sr);
    let c = decay_constant(params, rho)? * scale.abs().max(f64::MIN_POSITIVE);
    if c <= tol {
        return Ok(0);
    }
    Ok(((tol / c).ln() / rho.ln()).ceil() as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    /// Standard error under an i.i.d. approximation of the path.
    pub std_error: f64,
    pub n: usize,
}

/// Monte Carlo mean of `ln+ |U(Y_k)|` over a simulated stationary path.
pub fn moment_check(
    spec: &ModelSpec,
    params: &LodmParams,
    n_mc: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    let traj = simulate(spec, params, n_mc, DEFAULT_BURN_IN, seed, None)?;
    let vals = traj
        .y
        .iter()
        .map(|&y| upsilon(spec.family, y).map(|u| u.abs().ln().max(0.0)))
        .collect::<Result<Vec<f64>>>()?;
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = if vals.len() > 1 {
        vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(MomentEstimate {
        mean,
        std_error: (var / n).sqrt(),
        n: vals.len(),
    })
}
