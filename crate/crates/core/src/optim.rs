//! Nelder–Mead simplex minimization.
//!
//! Non-finite objective values count as `+inf`, so callers can encode
//! constraints by returning `f64::INFINITY` outside the feasible set.

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexOptions {
    pub max_iter: usize,
    /// Converged once every vertex is within `xtol` of the best one (max
    /// norm) and every objective value within `ftol` of the best value.
    pub xtol: f64,
    pub ftol: f64,
    /// Edge lengths of the initial simplex, one per coordinate.
    pub steps: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` from `x0`. The returned point is never worse than `x0`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;

    let n = x0.len();
    let mut eval = |x: &[f64]| sanitize(f(x));
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.steps.get(i).copied().unwrap_or(0.05);
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, fbest) = (&simplex[0].0, simplex[0].1);
        let spread_x = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(best).map(|(u, v)| (u - v).abs()))
            .fold(0.0f64, f64::max);
        let spread_f = simplex[1..]
            .iter()
            .map(|(_, fx)| (fx - fbest).abs())
            .fold(0.0f64, f64::max);
        if spread_x <= opts.xtol && spread_f <= opts.ftol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let towards = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = towards(ALPHA);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = towards(GAMMA);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = towards(RHO * ALPHA);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = towards(-RHO);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(worst.1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for (x, fx) in simplex.iter_mut().skip(1) {
            for (v, b) in x.iter_mut().zip(&best) {
                *v = b + SIGMA * (*v - b);
            }
            *fx = eval(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    SimplexResult {
        x,
        f,
        iterations,
        converged,
    }
}
