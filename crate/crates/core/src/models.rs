//! The three model families, their observation kernels, and path simulation.
//!
//! Every family shares the affine link
//!
//! ```text
//! X_{k+1} = omega + sum_i a_i X_{k+1-i} + sum_j b_j U(Y_{k+1-j})
//! ```
//!
//! and differs only in the observation transform `U` and in the law of
//! `Y_k` given `X_k`:
//!
//! | family          | `U(y)`     | `Y_k \| X_k`                    | latent domain |
//! |-----------------|------------|---------------------------------|---------------|
//! | `GarchGaussian` | `y^2`      | `N(0, X_k)`                     | `x > 0`       |
//! | `LogLinPoisson` | `ln(1+y)`  | `Poisson(e^{X_k})`              | all reals     |
//! | `NbinGarch`     | `y`        | `NegBin(shape r, mean r X_k)`   | `x > 0`       |

use std::fmt;
use std::io;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::in_stability_region;
use crate::statespace::{build_companion, geometric_gain, Companion};

/// Burn-in used when a caller does not pick one.
pub const DEFAULT_BURN_IN: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GarchGaussian,
    LogLinPoisson,
    NbinGarch,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::GarchGaussian => "garch_gaussian",
            Family::LogLinPoisson => "log_lin_poisson",
            Family::NbinGarch => "nbin_garch",
        }
    }

    /// Observations are nonnegative integers.
    pub fn is_count(self) -> bool {
        !matches!(self, Family::GarchGaussian)
    }

    /// Latent domain is the positive half line, which requires
    /// `omega > 0` and nonnegative `a`, `b`.
    pub fn sign_constrained(self) -> bool {
        !matches!(self, Family::LogLinPoisson)
    }

    /// The kernel carries its own parameter (the NBIN shape `r`).
    pub fn has_kernel_param(self) -> bool {
        matches!(self, Family::NbinGarch)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "garch" | "garch_gaussian" => Ok(Family::GarchGaussian),
            "log_lin_poisson" | "loglin_poisson" | "poisson" => Ok(Family::LogLinPoisson),
            "nbin" | "nbin_garch" => Ok(Family::NbinGarch),
            other => Err(Error::InvalidParams(format!("unknown family '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub p: usize,
    pub q: usize,
}

impl ModelSpec {
    pub fn new(family: Family, p: usize, q: usize) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::EmptyOrder);
        }
        Ok(ModelSpec { family, p, q })
    }

    /// Spec whose orders are read off `params`.
    pub fn for_params(family: Family, params: &LodmParams) -> Result<Self> {
        Self::new(family, params.p(), params.q())
    }
}

/// Linear link parameters `(omega, a, b)` plus the optional kernel parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LodmParams {
    pub omega: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
}

impl LodmParams {
    pub fn new(omega: f64, a: Vec<f64>, b: Vec<f64>) -> Self {
        LodmParams {
            omega,
            a,
            b,
            phi: None,
        }
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = Some(phi);
        self
    }

    pub fn p(&self) -> usize {
        self.a.len()
    }

    pub fn q(&self) -> usize {
        self.b.len()
    }

    pub fn companion(&self) -> Result<Companion> {
        build_companion(self.omega, &self.a, &self.b)
    }

    pub fn is_invertible(&self) -> bool {
        in_stability_region(&self.a)
    }

    /// `omega > 0`, `a >= 0`, `b >= 0` where the family needs them.
    pub fn satisfies_sign_constraints(&self, family: Family) -> bool {
        !family.sign_constrained()
            || (self.omega > 0.0
                && self.a.iter().all(|&v| v >= 0.0)
                && self.b.iter().all(|&v| v >= 0.0))
    }

    /// Orders, finiteness, sign constraints and kernel parameter.
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if self.a.is_empty() || self.b.is_empty() {
            return Err(Error::EmptyOrder);
        }
        if self.p() != spec.p || self.q() != spec.q {
            return Err(Error::InvalidParams(format!(
                "orders (p, q) = ({}, {}) do not match the model ({}, {})",
                self.p(),
                self.q(),
                spec.p,
                spec.q
            )));
        }
        let finite = self.omega.is_finite()
            && self.a.iter().chain(&self.b).all(|v| v.is_finite())
            && self.phi.is_none_or(f64::is_finite);
        if !finite {
            return Err(Error::InvalidParams("non-finite coefficient".into()));
        }
        if !self.satisfies_sign_constraints(spec.family) {
            return Err(Error::InvalidParams(format!(
                "{} requires omega > 0 and nonnegative a, b",
                spec.family
            )));
        }
        match (spec.family.has_kernel_param(), self.phi) {
            (true, Some(r)) if r > 0.0 => Ok(()),
            (true, _) => Err(Error::InvalidParams(
                "nbin_garch requires a shape parameter r > 0".into(),
            )),
            (false, Some(_)) => Err(Error::InvalidParams(format!(
                "{} takes no kernel parameter",
                spec.family
            ))),
            (false, None) => Ok(()),
        }
    }
}

/// Recursion state `(x_{k-p+1..k}, u_{k-q+1..k-1})`, both blocks oldest
/// first; the last x entry is the current latent value. Same layout as the
/// companion state vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    x: Vec<f64>,
    u: Vec<f64>,
}

impl LinkState {
    /// `x` must be nonempty.
    pub fn new(x: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyOrder);
        }
        Ok(LinkState { x, u })
    }

    pub fn constant(p: usize, q: usize, x: f64, u: f64) -> Self {
        LinkState {
            x: vec![x; p.max(1)],
            u: vec![u; q.saturating_sub(1)],
        }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn current(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    pub fn fits(&self, params: &LodmParams) -> bool {
        self.x.len() == params.p() && self.u.len() + 1 == params.q()
    }

    /// Concatenated `(x, u)` in companion order.
    pub fn to_vec(&self) -> Vec<f64> {
        self.x.iter().chain(&self.u).copied().collect()
    }

    /// Feeds `u_k = U(y_k)` and returns `x_{k+1}`. Panics if the state does
    /// not match the orders of `params`.
    pub fn advance(&mut self, params: &LodmParams, u_k: f64) -> f64 {
        assert!(self.fits(params), "state does not match model orders");
        let p = self.x.len();
        let m = self.u.len();
        let mut next = params.omega;
        for (i, ai) in params.a.iter().enumerate() {
            next += ai * self.x[p - 1 - i];
        }
        next += params.b[0] * u_k;
        for (j, bj) in params.b.iter().enumerate().skip(1) {
            next += bj * self.u[m - j];
        }
        self.x.rotate_left(1);
        self.x[p - 1] = next;
        if m > 0 {
            self.u.rotate_left(1);
            self.u[m - 1] = u_k;
        }
        next
    }
}

fn check_count(y: f64) -> Result<()> {
    if !(y.is_finite() && y >= 0.0 && y.fract() == 0.0) {
        return Err(Error::Domain(format!(
            "count observation must be a nonnegative integer, got {y}"
        )));
    }
    Ok(())
}

/// Observation transform entering the link.
pub fn upsilon(family: Family, y: f64) -> Result<f64> {
    match family {
        Family::GarchGaussian => {
            if !y.is_finite() {
                return Err(Error::Domain(format!("non-finite observation {y}")));
            }
            Ok(y * y)
        }
        Family::LogLinPoisson => {
            check_count(y)?;
            Ok(y.ln_1p())
        }
        Family::NbinGarch => {
            check_count(y)?;
            Ok(y)
        }
    }
}

fn shape(phi: Option<f64>) -> Result<f64> {
    match phi {
        Some(r) if r > 0.0 && r.is_finite() => Ok(r),
        _ => Err(Error::Domain(
            "nbin_garch requires a shape parameter r > 0".into(),
        )),
    }
}

fn check_latent(family: Family, x: f64) -> Result<()> {
    let ok = match family {
        Family::LogLinPoisson => x.is_finite(),
        _ => x.is_finite() && x > 0.0,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "latent value {x} outside the {family} domain"
        )))
    }
}

/// `ln g(x; y)`.
pub fn log_density(family: Family, phi: Option<f64>, x: f64, y: f64) -> Result<f64> {
    check_latent(family, x)?;
    let v = match family {
        Family::GarchGaussian => {
            if !y.is_finite() {
                return Err(Error::Domain(format!("non-finite observation {y}")));
            }
            -0.5 * ((2.0 * std::f64::consts::PI).ln() + x.ln()) - y * y / (2.0 * x)
        }
        Family::LogLinPoisson => {
            check_count(y)?;
            x * y - x.exp() - libm::lgamma(y + 1.0)
        }
        Family::NbinGarch => {
            check_count(y)?;
            let r = shape(phi)?;
            let l1p = x.ln_1p();
            libm::lgamma(r + y) - libm::lgamma(r) - libm::lgamma(y + 1.0) - r * l1p
                + y * (x.ln() - l1p)
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!(
            "log density not finite at x = {x}, y = {y}"
        )))
    }
}

/// Draw `Y ~ G(x; .)`.
pub fn sample_obs<R: Rng + ?Sized>(
    family: Family,
    phi: Option<f64>,
    x: f64,
    rng: &mut R,
) -> Result<f64> {
    check_latent(family, x)?;
    match family {
        Family::GarchGaussian => {
            let normal = Normal::new(0.0, x.sqrt())
                .map_err(|e| Error::Domain(format!("normal kernel: {e}")))?;
            Ok(normal.sample(rng))
        }
        Family::LogLinPoisson => poisson_draw(x.exp(), rng),
        Family::NbinGarch => {
            let r = shape(phi)?;
            let gamma =
                Gamma::new(r, x).map_err(|e| Error::Domain(format!("gamma mixing: {e}")))?;
            let lambda = gamma.sample(rng);
            poisson_draw(lambda, rng)
        }
    }
}

fn poisson_draw<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<f64> {
    if lambda <= 0.0 {
        return Ok(0.0);
    }
    let pois = Poisson::new(lambda)
        .map_err(|e| Error::Domain(format!("poisson kernel mean {lambda}: {e}")))?;
    Ok(pois.sample(rng))
}

/// Human-readable reasons why the stationary regime may not exist.
pub fn stationarity_warnings(spec: &ModelSpec, params: &LodmParams) -> Vec<String> {
    let mut out = Vec::new();
    if !in_stability_region(&params.a) {
        out.push(format!(
            "a = {:?} lies outside the stability region; the link is not invertible",
            params.a
        ));
    }
    if spec.family.sign_constrained() {
        let s: f64 = params.a.iter().chain(&params.b).sum();
        if s >= 1.0 {
            out.push(format!(
                "sum(a) + sum(b) = {s} >= 1; a stationary solution may not exist"
            ));
        }
    }
    out
}

/// Default start: x at the fixed point `omega * gain(a)` of the noiseless
/// recursion (or `omega` when the gain is undefined), u at `U(0)`.
pub fn default_init(spec: &ModelSpec, params: &LodmParams) -> Result<LinkState> {
    let x = geometric_gain(&params.a)
        .map(|g| params.omega * g)
        .unwrap_or(params.omega);
    let u = upsilon(spec.family, 0.0)?;
    Ok(LinkState::constant(spec.p, spec.q, x, u))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub family: Family,
    pub params: LodmParams,
    pub seed: u64,
    pub burn_in: usize,
    pub n: usize,
    /// Recursion state at the first retained step.
    pub init_state: LinkState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub y: Vec<f64>,
    pub x: Option<Vec<f64>>,
    pub meta: Option<TrajectoryMeta>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// CSV with header `k,y,x`; the x column is empty when unknown.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["k", "y", "x"])?;
        for (k, y) in self.y.iter().enumerate() {
            let x = self
                .x
                .as_ref()
                .map(|xs| xs[k].to_string())
                .unwrap_or_default();
            wtr.write_record([k.to_string(), y.to_string(), x])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a CSV with a `y` column and an optional `x` column, in row
    /// order. Other columns are ignored.
    pub fn read_csv<R: io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let yi = col("y").ok_or_else(|| Error::Io("missing 'y' column".into()))?;
        let xi = col("x");
        let mut y = Vec::new();
        let mut x = Vec::new();
        let mut have_x = xi.is_some();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<Option<f64>> {
                let s = rec.get(i).unwrap_or("").trim();
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|e| Error::Io(format!("row {}: {e}", line + 1)))
            };
            y.push(parse(yi)?.ok_or_else(|| Error::Io(format!("row {}: empty y", line + 1)))?);
            if let Some(xi) = xi {
                match parse(xi)? {
                    Some(v) => x.push(v),
                    None => have_x = false,
                }
            }
        }
        Ok(Trajectory {
            y,
            x: have_x.then_some(x),
            meta: None,
        })
    }
}

/// Simulates the model from `init` (default [`default_init`]), discards
/// `burn_in` steps and keeps `n`. Output depends only on the arguments.
pub fn simulate(
    spec: &ModelSpec,
    params: &LodmParams,
    n: usize,
    burn_in: usize,
    seed: u64,
    init: Option<LinkState>,
) -> Result<Trajectory> {
    params.validate(spec)?;
    if n == 0 {
        return Err(Error::InsufficientInput { needed: 1, got: 0 });
    }
    for w in stationarity_warnings(spec, params) {
        log::warn!("{w}");
    }
    let mut state = match init {
        Some(s) if s.fits(params) => s,
        Some(_) => {
            return Err(Error::InvalidParams(
                "initial state does not match model orders".into(),
            ))
        }
        None => default_init(spec, params)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ys = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    let mut init_state = state.clone();
    for k in 0..burn_in + n {
        if k == burn_in {
            init_state = state.clone();
        }
        let x = state.current();
        let y = sample_obs(spec.family, params.phi, x, &mut rng)?;
        if k >= burn_in {
            ys.push(y);
            xs.push(x);
        }
        state.advance(params, upsilon(spec.family, y)?);
    }
    Ok(Trajectory {
        y: ys,
        x: Some(xs),
        meta: Some(TrajectoryMeta {
            family: spec.family,
            params: params.clone(),
            seed,
            burn_in,
            n,
            init_state,
        }),
    })
}
