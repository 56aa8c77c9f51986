pub mod error;
pub mod ident;
pub mod inference;
pub mod invert;
pub mod models;
pub mod optim;
pub mod poly;
pub mod statespace;

pub use error::{Error, Result};
pub use ident::{
    check_identifiable, curve_point, equivalent, non_ident_curve, EquivCurve, IdentReport, Verdict,
};
pub use inference::{conditional_loglik, fit_mle, profile_along_curve, FitOptions, FitResult};
pub use invert::{
    decay_constant, filter_latent, iterate_link, latent_reconstruct, lipschitz_estimate,
    moment_check, InitPoint,
};
pub use models::{simulate, Family, LinkState, LodmParams, ModelSpec, Trajectory};
pub use poly::{in_stability_region, make_p, make_q, poly_gcd, roots, Poly};
pub use statespace::{
    build_companion, direct_recursion_oracle, geometric_gain, impulse_response, Companion,
};
