//! Conditional likelihood, maximum-likelihood fitting and likelihood
//! profiles along equivalence curves.
//!
//! The latent path is recovered by running the link from a fixed start, so
//! the likelihood of an invertible model only depends on the start through
//! the first few terms. Those are dropped (`discard`) and the remaining
//! per-observation log densities are averaged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ident::{curve_point, EquivCurve};
use crate::invert::InitPoint;
use crate::models::{log_density, upsilon, Family, LodmParams, ModelSpec};
use crate::optim::{nelder_mead, SimplexOptions};
use crate::poly::in_stability_region;

pub const DEFAULT_DISCARD: usize = 100;

/// Mean of `ln g(x_k; y_k)` over `k >= discard`, with `x_k` produced by the
/// link started at `z0` and fed `y_0..y_{k-1}`.
pub fn conditional_loglik(
    spec: &ModelSpec,
    params: &LodmParams,
    y: &[f64],
    z0: &InitPoint,
    discard: usize,
) -> Result<f64> {
    if params.p() != spec.p || params.q() != spec.q {
        return Err(Error::InvalidParams(format!(
            "parameters have orders ({}, {}), model expects ({}, {})",
            params.p(),
            params.q(),
            spec.p,
            spec.q
        )));
    }
    if !in_stability_region(&params.a) {
        return Err(Error::NotInvertible);
    }
    if discard >= y.len() {
        return Err(Error::InsufficientInput {
            needed: discard + 1,
            got: y.len(),
        });
    }
    let mut state = z0.state(spec.p, spec.q);
    let mut total = 0.0;
    for (k, &yk) in y.iter().enumerate() {
        let x = state.current();
        if !x.is_finite() {
            return Err(Error::Domain(format!("latent path diverged at step {k}")));
        }
        if k >= discard {
            total += log_density(spec.family, params.phi, x, yk)?;
        }
        state.advance(params, upsilon(spec.family, yk)?);
    }
    Ok(total / (y.len() - discard) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    pub xtol: f64,
    pub ftol: f64,
    /// Extra simplex runs started from the incumbent.
    pub restarts: usize,
    pub discard: usize,
    /// Start of the latent recursion; taken from the data when absent.
    pub init: Option<InitPoint>,
    /// Keep `b_1` at its start value and search over the other coordinates.
    #[serde(default)]
    pub hold_b1: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 4000,
            xtol: 1e-7,
            ftol: 1e-11,
            restarts: 2,
            discard: DEFAULT_DISCARD,
            init: None,
            hold_b1: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: LodmParams,
    /// `conditional_loglik` at `theta_hat` with the same data, start and
    /// discard.
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub start: LodmParams,
    pub init: InitPoint,
}

/// Unconstrained coordinates: `ln omega` and `ln r` for the positive
/// families, the raw values otherwise.
struct Transform {
    family: Family,
    p: usize,
    q: usize,
    held_b1: Option<f64>,
}

impl Transform {
    fn encode(&self, params: &LodmParams) -> Vec<f64> {
        let positive = self.family.sign_constrained();
        let mut v = Vec::with_capacity(2 + self.p + self.q);
        v.push(if positive {
            params.omega.ln()
        } else {
            params.omega
        });
        v.extend(&params.a);
        let skip = usize::from(self.held_b1.is_some());
        v.extend(&params.b[skip..]);
        if let (Family::NbinGarch, Some(r)) = (self.family, params.phi) {
            v.push(r.ln());
        }
        v
    }

    fn decode(&self, v: &[f64]) -> LodmParams {
        let positive = self.family.sign_constrained();
        let omega = if positive { v[0].exp() } else { v[0] };
        let a = v[1..=self.p].to_vec();
        let free_b = self.q - usize::from(self.held_b1.is_some());
        let mut b = Vec::with_capacity(self.q);
        b.extend(self.held_b1);
        b.extend(&v[1 + self.p..1 + self.p + free_b]);
        let phi = match self.family {
            Family::NbinGarch => Some(v[1 + self.p + free_b].exp()),
            _ => None,
        };
        LodmParams { omega, a, b, phi }
    }

    fn feasible(&self, params: &LodmParams) -> bool {
        params.omega.is_finite()
            && params.a.iter().chain(&params.b).all(|v| v.is_finite())
            && params.phi.is_none_or(|r| r.is_finite() && r > 0.0)
            && params.satisfies_sign_constraints(self.family)
            && in_stability_region(&params.a)
    }
}

/// Maximizes [`conditional_loglik`] with a restarted Nelder–Mead search.
/// Proposals outside the parameter set or the stability region score `-inf`.
pub fn fit_mle(
    spec: &ModelSpec,
    y: &[f64],
    start: &LodmParams,
    opts: &FitOptions,
) -> Result<FitResult> {
    start
        .validate(spec)
        .map_err(|e| Error::InvalidParams(format!("infeasible start: {e}")))?;
    if !in_stability_region(&start.a) {
        return Err(Error::InvalidParams(
            "infeasible start: a lies outside the stability region".into(),
        ));
    }
    let init = match opts.init {
        Some(z) => z,
        None => InitPoint::from_data(spec.family, start.phi, y)?,
    };
    let start_ll = conditional_loglik(spec, start, y, &init, opts.discard)?;

    let tf = Transform {
        family: spec.family,
        p: spec.p,
        q: spec.q,
        held_b1: opts.hold_b1.then_some(start.b[0]),
    };
    let objective = |v: &[f64]| -> f64 {
        let params = tf.decode(v);
        if !tf.feasible(&params) {
            return f64::INFINITY;
        }
        match conditional_loglik(spec, &params, y, &init, opts.discard) {
            Ok(ll) if ll.is_finite() => -ll,
            _ => f64::INFINITY,
        }
    };

    let mut x = tf.encode(start);
    let mut fx = objective(&x);
    let mut iterations = 0;
    let mut converged = false;
    for run in 0..=opts.restarts {
        let scale = if run == 0 { 1.0 } else { 0.2 };
        let simplex = SimplexOptions {
            max_iter: opts.max_iter.saturating_sub(iterations).max(1),
            xtol: opts.xtol,
            ftol: opts.ftol,
            steps: initial_steps(&tf, &x, scale, &objective),
        };
        let r = nelder_mead(&objective, &x, &simplex);
        iterations += r.iterations;
        let gain = fx - r.f;
        if r.f <= fx {
            x = r.x;
            fx = r.f;
        }
        converged = r.converged;
        if run > 0 && gain <= opts.ftol {
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
    }

    let mut theta_hat = tf.decode(&x);
    let mut loglik = conditional_loglik(spec, &theta_hat, y, &init, opts.discard)?;
    if loglik < start_ll {
        theta_hat = start.clone();
        loglik = start_ll;
    }
    Ok(FitResult {
        theta_hat,
        loglik,
        iterations,
        converged,
        start: start.clone(),
        init,
    })
}

/// Per-coordinate simplex edges, flipped or shrunk until the vertex is
/// feasible.
fn initial_steps(
    tf: &Transform,
    x: &[f64],
    scale: f64,
    objective: &impl Fn(&[f64]) -> f64,
) -> Vec<f64> {
    let positive = tf.family.sign_constrained();
    (0..x.len())
        .map(|i| {
            let log_coord =
                positive && i == 0 || tf.family == Family::NbinGarch && i == x.len() - 1;
            let mut h = scale * if log_coord { 0.2 } else { 0.05 };
            for _ in 0..30 {
                for s in [h, -h] {
                    let mut v = x.to_vec();
                    v[i] += s;
                    if objective(&v).is_finite() {
                        return s;
                    }
                }
                h *= 0.5;
            }
            h
        })
        .collect()
}

/// `(d, conditional_loglik(curve_point(d)))` for each `d`, all with the same
/// start and discard.
pub fn profile_along_curve(
    spec: &ModelSpec,
    y: &[f64],
    curve: &EquivCurve,
    d_grid: &[f64],
    z0: &InitPoint,
    discard: usize,
) -> Result<Vec<(f64, f64)>> {
    let points = d_grid
        .iter()
        .map(|&d| curve_point(curve, d))
        .collect::<Result<Vec<_>>>()?;
    d_grid
        .iter()
        .zip(&points)
        .map(|(&d, params)| Ok((d, conditional_loglik(spec, params, y, z0, discard)?)))
        .collect()
}
