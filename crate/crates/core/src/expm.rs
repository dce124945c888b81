//! Dense complex matrix exponential via scaling-and-squaring with Padé
//! approximants, following Higham's degree-selection thresholds.

use ndarray::prelude::*;
use ndarray_linalg::Solve;

use crate::error::{Error, Result};
use crate::C64;

/// 1-norm (maximum absolute column sum).
fn one_norm(a: &Array2<C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|x| x.norm()).sum();
        best = best.max(s);
    }
    best
}

fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag(&Array1::from_elem(n, C64::new(1.0, 0.0)))
}

/// Evaluate the `[m/m]` Padé approximant `p(A)/q(A)` of `e^A` and solve
/// `q(A) X = p(A)` column by column.
fn pade(a: &Array2<C64>, coeffs: &[f64]) -> Result<Array2<C64>> {
    let n = a.nrows();
    let a2 = a.dot(a);
    // split p(A) = U + V with U odd (U = A·u_even(A²)), V even
    let mut u = Array2::from_diag(&Array1::from_elem(n, C64::new(coeffs[1], 0.0)));
    let mut v = Array2::from_diag(&Array1::from_elem(n, C64::new(coeffs[0], 0.0)));
    let mut pow = identity(n);
    for k in (2..coeffs.len()).step_by(2) {
        pow = pow.dot(&a2);
        v = v + pow.mapv(|x| x * coeffs[k]);
        if k + 1 < coeffs.len() {
            u = u + pow.mapv(|x| x * coeffs[k + 1]);
        }
    }
    let u = a.dot(&u);
    let p = &v + &u;
    let q = &v - &u;
    let mut x = Array2::zeros((n, n));
    for j in 0..n {
        let col = q.solve(&p.column(j).to_owned())?;
        x.column_mut(j).assign(&col);
    }
    Ok(x)
}

fn pade_coeffs(m: usize) -> Vec<f64> {
    // b_k = (2m-k)! m! / ((2m)! k! (m-k)!)
    let mut c = vec![0.0; m + 1];
    c[0] = 1.0;
    for k in 1..=m {
        c[k] = c[k - 1] * (m - k + 1) as f64 / ((2 * m - k + 1) as f64 * k as f64);
    }
    c
}

/// `e^A` for a dense complex square matrix.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidArgument("expm needs a square matrix".into()));
    }
    if a.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::InvalidArgument("expm input contains non-finite entries".into()));
    }
    let norm = one_norm(a);
    // Higham 2005 θ_m thresholds
    const THETA: [(usize, f64); 4] = [(3, 1.495585e-2), (5, 2.539398e-1), (7, 9.504178e-1), (9, 2.097848)];
    for &(m, theta) in &THETA {
        if norm <= theta {
            return pade(a, &pade_coeffs(m));
        }
    }
    let theta13 = 5.371920351148152;
    let s = ((norm / theta13).log2().ceil()).max(0.0) as u32;
    let scaled = a.mapv(|x| x / 2f64.powi(s as i32));
    let mut x = pade(&scaled, &pade_coeffs(13))?;
    for _ in 0..s {
        x = x.dot(&x);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn exp_zero_is_identity() {
        let z = Array2::zeros((4, 4));
        let e = expm(&z).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((e[[i, j]] - c(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn exp_diagonal() {
        let d = Array2::from_diag(&array![c(0.3, -1.2), c(-2.0, 0.7), c(4.5, 3.0)]);
        let e = expm(&d).unwrap();
        for i in 0..3 {
            assert!((e[[i, i]] - d[[i, i]].exp()).norm() < 1e-12 * d[[i, i]].exp().norm());
        }
        assert!(e[[0, 1]].norm() < 1e-14);
    }

    #[test]
    fn exp_pauli_rotation() {
        // e^{-iθσ_x} = cosθ·I - i sinθ·σ_x
        let th = 0.8;
        let a = array![[c(0.0, 0.0), c(0.0, -th)], [c(0.0, -th), c(0.0, 0.0)]];
        let e = expm(&a).unwrap();
        assert!((e[[0, 0]] - c(th.cos(), 0.0)).norm() < 1e-14);
        assert!((e[[0, 1]] - c(0.0, -th.sin())).norm() < 1e-14);
    }

    #[test]
    fn exp_sum_property_for_commuting_matrices() {
        // A and 2A commute: e^{3A} = e^A e^{2A}
        let a = array![
            [c(0.2, 0.1), c(-0.4, 0.3), c(0.0, 0.9)],
            [c(1.1, 0.0), c(-0.3, -0.2), c(0.5, 0.0)],
            [c(0.0, -0.7), c(0.2, 0.2), c(0.4, -0.1)]
        ];
        let lhs = expm(&a.mapv(|x| x * 3.0)).unwrap();
        let rhs = expm(&a).unwrap().dot(&expm(&a.mapv(|x| x * 2.0)).unwrap());
        let err = (&lhs - &rhs).iter().map(|x| x.norm()).fold(0.0f64, f64::max);
        assert!(err < 1e-12, "err {err}");
    }

    #[test]
    fn large_norm_triggers_squaring() {
        let a = array![[c(0.0, -30.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 30.0)]];
        let e = expm(&a).unwrap();
        assert!((e[[0, 0]] - c((30.0f64).cos(), -(30.0f64).sin())).norm() < 1e-11);
    }

    #[test]
    fn taylor_oracle_random_matrix() {
        // compare against a straightforward 60-term Taylor sum on a small-norm matrix
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 6;
        let a = Array2::from_shape_fn((n, n), |_| {
            c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
        });
        let mut taylor = identity(n);
        let mut term = identity(n);
        for k in 1..60 {
            term = term.dot(&a).mapv(|x| x / k as f64);
            taylor = taylor + &term;
        }
        let e = expm(&a).unwrap();
        let err = (&e - &taylor).iter().map(|x| x.norm()).fold(0.0f64, f64::max);
        assert!(err < 1e-13, "err {err}");
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        assert!(expm(&Array2::zeros((2, 3))).is_err());
        let mut a: Array2<C64> = Array2::zeros((2, 2));
        a[[0, 0]] = c(f64::NAN, 0.0);
        assert!(expm(&a).is_err());
    }
}
