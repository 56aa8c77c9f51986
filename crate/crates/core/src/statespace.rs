//! Companion-form state space of an LODM(p, q) link.
//!
//! The state `Z_k = (x_{k-p+1}, ..., x_k, u_{k-q+1}, ..., u_{k-1})` has
//! dimension `p + q - 1` and evolves as
//!
//! ```text
//! Z_{k+1} = omega_vec + A Z_k + b_vec u_k
//! ```
//!
//! Rows `0..p-1` of `A` shift the x-block, row `p-1` carries
//! `(a_p, ..., a_1, b_q, ..., b_2)`, and the remaining rows shift the u-block
//! with a zero last row. `b_vec = b_1 e_p + e_{p+q-1}` and
//! `omega_vec = omega e_p`. When `q = 1` only the top-left `p x p` block is
//! kept and `b_vec = b_1 e_p`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::in_stability_region;

#[derive(Clone, Debug, PartialEq)]
pub struct Companion {
    p: usize,
    q: usize,
    matrix: DMatrix<f64>,
    b_vec: DVector<f64>,
    omega_vec: DVector<f64>,
    omega: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

pub fn build_companion(omega: f64, a: &[f64], b: &[f64]) -> Result<Companion> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyOrder);
    }
    let (p, q) = (a.len(), b.len());
    let n = p + q - 1;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..p - 1 {
        m[(i, i + 1)] = 1.0;
    }
    for j in 0..p {
        m[(p - 1, j)] = a[p - 1 - j];
    }
    for j in 0..q - 1 {
        m[(p - 1, p + j)] = b[q - 1 - j];
    }
    for i in p..n.saturating_sub(1) {
        m[(i, i + 1)] = 1.0;
    }

    let mut b_vec = DVector::<f64>::zeros(n);
    b_vec[p - 1] = b[0];
    if q > 1 {
        b_vec[n - 1] = 1.0;
    }
    let mut omega_vec = DVector::<f64>::zeros(n);
    omega_vec[p - 1] = omega;

    Ok(Companion {
        p,
        q,
        matrix: m,
        b_vec,
        omega_vec,
        omega,
        a: a.to_vec(),
        b: b.to_vec(),
    })
}

impl Companion {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.p + self.q - 1
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn b_vec(&self) -> &DVector<f64> {
        &self.b_vec
    }

    pub fn omega_vec(&self) -> &DVector<f64> {
        &self.omega_vec
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Index of the selector `e_p` (zero based).
    pub fn x_index(&self) -> usize {
        self.p - 1
    }

    /// `h_k = e_p^T A^k b_vec` for `k = 0..=horizon`.
    pub fn impulse_response(&self, horizon: usize) -> Vec<f64> {
        let mut v = self.b_vec.clone();
        let mut h = Vec::with_capacity(horizon + 1);
        for k in 0..=horizon {
            h.push(v[self.p - 1]);
            if k < horizon {
                v = &self.matrix * v;
            }
        }
        h
    }

    /// Row vector `e_p^T A^n`.
    pub fn selector_power(&self, n: usize) -> DVector<f64> {
        let mut row = DVector::<f64>::zeros(self.dim());
        row[self.p - 1] = 1.0;
        let at = self.matrix.transpose();
        for _ in 0..n {
            row = &at * row;
        }
        row
    }

    /// One step of the state recursion.
    pub fn step(&self, z: &DVector<f64>, u: f64) -> DVector<f64> {
        &self.omega_vec + &self.matrix * z + &self.b_vec * u
    }
}

/// Convenience wrapper around [`Companion::impulse_response`].
pub fn impulse_response(comp: &Companion, horizon: usize) -> Vec<f64> {
    comp.impulse_response(horizon)
}

/// Eigenvalues of a real square matrix via the real Schur decomposition.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = m
        .clone()
        .try_schur(f64::EPSILON, 10_000)
        .ok_or(Error::EigenFailure)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest eigenvalue modulus of `A`.
pub fn spectral_radius(comp: &Companion) -> Result<f64> {
    Ok(eigenvalues(comp.matrix())?
        .iter()
        .fold(0.0, |m, l| m.max(l.norm())))
}

/// `sum_k e_p^T A^k e_p`, which for a companion matrix is `1 / (1 - sum a)`.
pub fn geometric_gain(a: &[f64]) -> Result<f64> {
    if !in_stability_region(a) {
        return Err(Error::GainUndefined);
    }
    Ok(1.0 / (1.0 - a.iter().sum::<f64>()))
}

/// Same quantity as [`geometric_gain`], computed as
/// `e_p^T (I_p - A~)^{-1} e_p` from the top-left companion block.
pub fn geometric_gain_by_inverse(a: &[f64]) -> Result<f64> {
    if !in_stability_region(a) {
        return Err(Error::GainUndefined);
    }
    let comp = build_companion(0.0, a, &[0.0])?;
    let p = a.len();
    let lhs = DMatrix::<f64>::identity(p, p) - comp.matrix();
    let mut rhs = DVector::<f64>::zeros(p);
    rhs[p - 1] = 1.0;
    let sol = lhs.lu().solve(&rhs).ok_or(Error::GainUndefined)?;
    Ok(sol[p - 1])
}

/// Pre-sample values for [`direct_recursion_oracle`], most recent first:
/// `x[i] = x_{-1-i}` and `y[j] = y_{-1-j}`. Missing entries are zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PastValues {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PastValues {
    pub fn zero() -> Self {
        Self::default()
    }
}

/// Scalar recursion `x_t = sum_k a_k x_{t-k} + sum_k b_k y_{t+1-k}` for
/// `t = 0..steps`, driven by `y[0..steps]`. Deliberately independent of the
/// companion matrix; this is the brute-force reference for it.
pub fn direct_recursion_oracle(
    a: &[f64],
    b: &[f64],
    y: &[f64],
    past: &PastValues,
    steps: usize,
) -> Result<Vec<f64>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyOrder);
    }
    if steps == 0 {
        return Err(Error::InsufficientInput { needed: 1, got: 0 });
    }
    if y.len() < steps {
        return Err(Error::InsufficientInput {
            needed: steps,
            got: y.len(),
        });
    }
    let x_at = |x: &[f64], t: isize| -> f64 {
        if t >= 0 {
            x[t as usize]
        } else {
            past.x.get((-t - 1) as usize).copied().unwrap_or(0.0)
        }
    };
    let y_at = |t: isize| -> f64 {
        if t >= 0 {
            y[t as usize]
        } else {
            past.y.get((-t - 1) as usize).copied().unwrap_or(0.0)
        }
    };
    let mut x = Vec::with_capacity(steps);
    for t in 0..steps as isize {
        let mut v = 0.0;
        for (k, ak) in a.iter().enumerate() {
            v += ak * x_at(&x, t - 1 - k as isize);
        }
        for (k, bk) in b.iter().enumerate() {
            v += bk * y_at(t - k as isize);
        }
        x.push(v);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{make_p, make_q};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn impulse(len: usize) -> Vec<f64> {
        let mut y = vec![0.0; len];
        y[0] = 1.0;
        y
    }

    #[test]
    fn scalar_layout() {
        let c = build_companion(0.1, &[0.5], &[0.3]).unwrap();
        assert_eq!(c.matrix(), &DMatrix::from_row_slice(1, 1, &[0.5]));
        assert_eq!(c.b_vec().as_slice(), &[0.3]);
        assert_eq!(c.omega_vec().as_slice(), &[0.1]);
    }

    #[test]
    fn p2_q2_layout() {
        let c = build_companion(0.1, &[0.7, -0.1], &[0.4, -0.2]).unwrap();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(3, 3, &[
            0.0, 1.0, 0.0,
            -0.1, 0.7, -0.2,
            0.0, 0.0, 0.0,
        ]);
        assert_eq!(c.matrix(), &expected);
        assert_eq!(c.b_vec().as_slice(), &[0.0, 0.4, 1.0]);
        assert_eq!(c.omega_vec().as_slice(), &[0.0, 0.1, 0.0]);
    }

    #[test]
    fn p1_q2_layout() {
        let c = build_companion(0.0, &[0.5], &[0.4, 0.2]).unwrap();
        assert_eq!(
            c.matrix(),
            &DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.0, 0.0])
        );
        assert_eq!(c.b_vec().as_slice(), &[0.4, 1.0]);
    }

    #[test]
    fn p3_q3_layout() {
        let c = build_companion(1.0, &[0.1, 0.2, 0.3], &[0.4, 0.5, 0.6]).unwrap();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(5, 5, &[
            0.0, 1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 0.0, 0.0,
            0.3, 0.2, 0.1, 0.6, 0.5,
            0.0, 0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 0.0, 0.0, 0.0,
        ]);
        assert_eq!(c.matrix(), &expected);
        assert_eq!(c.b_vec().as_slice(), &[0.0, 0.0, 0.4, 0.0, 1.0]);
    }

    #[test]
    fn empty_orders_rejected() {
        assert_eq!(build_companion(0.0, &[], &[1.0]), Err(Error::EmptyOrder));
        assert_eq!(build_companion(0.0, &[1.0], &[]), Err(Error::EmptyOrder));
    }

    #[test]
    fn garch11_impulse_response() {
        let c = build_companion(0.1, &[0.5], &[0.3]).unwrap();
        let h = c.impulse_response(10);
        // x_t = 0.5 x_{t-1}, x_0 = 0.3
        let mut x = 0.3;
        for hk in h {
            assert_abs_diff_eq!(hk, x, epsilon = 1e-15);
            x *= 0.5;
        }
    }

    #[test]
    fn impulse_starts_at_b1() {
        let c = build_companion(0.0, &[0.2, 0.1], &[-0.7, 0.3, 0.2]).unwrap();
        assert_eq!(c.impulse_response(0), vec![-0.7]);
    }

    #[test]
    fn p2_q2_first_lag() {
        let c = build_companion(0.1, &[0.7, -0.1], &[0.4, -0.2]).unwrap();
        let h = c.impulse_response(50);
        assert_abs_diff_eq!(h[1], 0.08, epsilon = 1e-15);
        let oracle = direct_recursion_oracle(
            &[0.7, -0.1],
            &[0.4, -0.2],
            &impulse(51),
            &PastValues::zero(),
            51,
        )
        .unwrap();
        for (x, y) in h.iter().zip(&oracle) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn oracle_examples() {
        let y = [0.3, -1.0, 2.0, 0.5];
        let x = direct_recursion_oracle(&[0.0], &[1.0], &y, &PastValues::zero(), 4).unwrap();
        assert_eq!(x, y.to_vec());

        let x =
            direct_recursion_oracle(&[0.5], &[0.3], &impulse(8), &PastValues::zero(), 8).unwrap();
        for (t, v) in x.iter().enumerate() {
            assert_abs_diff_eq!(*v, 0.3 * 0.5f64.powi(t as i32), epsilon = 1e-15);
        }

        assert!(matches!(
            direct_recursion_oracle(&[0.5], &[0.3], &[1.0], &PastValues::zero(), 3),
            Err(Error::InsufficientInput { needed: 3, got: 1 })
        ));
    }

    #[test]
    fn oracle_uses_past_values() {
        // x_0 = 0.5 * 2 + 0.3 * 1 + 0.1 * 4
        let past = PastValues {
            x: vec![2.0],
            y: vec![4.0],
        };
        let x = direct_recursion_oracle(&[0.5], &[0.3, 0.1], &[1.0], &past, 1).unwrap();
        assert_abs_diff_eq!(x[0], 1.7, epsilon = 1e-15);
    }

    #[test]
    fn step_matches_oracle_with_nonzero_start() {
        let (a, b) = ([0.4, 0.2], [0.5, -0.3, 0.1]);
        let c = build_companion(0.0, &a, &b).unwrap();
        // z = (x_{-2}, x_{-1}, y_{-2}, y_{-1})
        let z0 = DVector::from_vec(vec![1.5, -0.5, 2.0, 3.0]);
        let past = PastValues {
            x: vec![-0.5, 1.5],
            y: vec![3.0, 2.0],
        };
        let y = [0.7, -1.1, 0.4, 2.2, 0.0, 1.0];
        let oracle = direct_recursion_oracle(&a, &b, &y, &past, y.len()).unwrap();
        let mut z = z0;
        for (t, &yt) in y.iter().enumerate() {
            z = c.step(&z, yt);
            assert_abs_diff_eq!(z[c.x_index()], oracle[t], epsilon = 1e-14);
        }
    }

    #[test]
    fn gain_examples() {
        assert_abs_diff_eq!(geometric_gain(&[0.5]).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(geometric_gain(&[0.7, -0.1]).unwrap(), 2.5, epsilon = 1e-14);
        assert_abs_diff_eq!(geometric_gain(&[0.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(geometric_gain(&[1.0]), Err(Error::GainUndefined));

        // partial sums of e_p^T A~^k e_p
        let c = build_companion(0.0, &[0.7, -0.1], &[1.0]).unwrap();
        let s: f64 = (0..=200).map(|k| c.selector_power(k)[1]).sum();
        assert_abs_diff_eq!(s, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            geometric_gain_by_inverse(&[0.7, -0.1]).unwrap(),
            2.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn spectral_radius_examples() {
        let c = build_companion(0.0, &[0.5], &[1.0]).unwrap();
        assert_abs_diff_eq!(spectral_radius(&c).unwrap(), 0.5, epsilon = 1e-14);
        let c = build_companion(0.0, &[0.7, -0.1], &[0.4, -0.2]).unwrap();
        assert_abs_diff_eq!(spectral_radius(&c).unwrap(), 0.5, epsilon = 1e-12);
        let mut ev: Vec<f64> = eigenvalues(c.matrix())
            .unwrap()
            .iter()
            .map(|l| l.re)
            .collect();
        ev.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[2], 0.5, epsilon = 1e-12);
        let c = build_companion(0.0, &[0.0], &[1.0]).unwrap();
        assert_eq!(spectral_radius(&c).unwrap(), 0.0);
    }

    fn stable_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(-0.9f64..0.9, 1..=4),
            prop::collection::vec(-1.0f64..1.0, 1..=4),
        )
            .prop_filter("stable a", |(a, _)| in_stability_region(a))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn impulse_matches_oracle((a, b) in stable_pair()) {
            let c = build_companion(0.0, &a, &b).unwrap();
            let h = c.impulse_response(50);
            let x = direct_recursion_oracle(&a, &b, &impulse(51), &PastValues::zero(), 51).unwrap();
            for (u, v) in h.iter().zip(&x) {
                prop_assert!((u - v).abs() <= 1e-10);
            }
        }

        #[test]
        fn gain_times_denominator_is_one(a in prop::collection::vec(-0.9f64..0.9, 1..=5)) {
            prop_assume!(in_stability_region(&a));
            let g = geometric_gain(&a).unwrap();
            prop_assert!(g != 0.0);
            prop_assert!((g * (1.0 - a.iter().sum::<f64>()) - 1.0).abs() <= 1e-12);
            let gi = geometric_gain_by_inverse(&a).unwrap();
            prop_assert!((g - gi).abs() <= 1e-9 * g.abs().max(1.0));
        }

        #[test]
        fn spectral_radius_is_max_root_modulus((a, b) in stable_pair()) {
            let c = build_companion(0.0, &a, &b).unwrap();
            let r = crate::poly::max_root_modulus(&a).unwrap();
            prop_assert!((spectral_radius(&c).unwrap() - r).abs() <= 1e-7);
        }

        // Transfer function of the impulse response:
        // sum_k h_k e^{-i l k} = Q(e^{il}) e^{il(p-q+1)} / P(e^{il}).
        #[test]
        fn fourier_identity((a, b) in stable_pair()) {
            prop_assume!(crate::poly::max_root_modulus(&a).unwrap() < 0.9);
            let c = build_companion(0.0, &a, &b).unwrap();
            let h = c.impulse_response(500);
            let pp = make_p(&a).unwrap();
            let qq = make_q(&b).unwrap();
            let (p, q) = (a.len() as f64, b.len() as f64);
            for j in 0..64 {
                let lam = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / 64.0;
                let series: Complex64 = h
                    .iter()
                    .enumerate()
                    .map(|(k, hk)| Complex64::from_polar(*hk, -lam * k as f64))
                    .sum();
                let z = Complex64::from_polar(1.0, lam);
                let closed = qq.eval(z) * Complex64::from_polar(1.0, lam * (p - q + 1.0)) / pp.eval(z);
                prop_assert!((series - closed).norm() <= 1e-6, "lambda {lam}: {series} vs {closed}");
            }
        }
    }
}
