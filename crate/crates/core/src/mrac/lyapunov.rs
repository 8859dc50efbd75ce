use nalgebra::DMatrix;

use super::MracError;

const RESIDUAL_TOL: f64 = 1e-8;

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1.0);
    (m - m.transpose()).amax() <= 1e-12 * scale
}

fn lyapunov_residual(a: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    p * a + a.transpose() * p + q
}

/// Solves `P A + Aᵀ P = −Q` for symmetric positive-definite `P`.
///
/// The equation is vectorized as `(I ⊗ Aᵀ + Aᵀ ⊗ I) vec(P) = −vec(Q)` and
/// solved densely, which is fine for the handful of states a canonical chain
/// carries. One round of iterative refinement is applied before the
/// residual check.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>, MracError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(MracError::Dimension { expected: n, got: a.ncols() });
    }
    if q.nrows() != n || q.ncols() != n {
        return Err(MracError::Dimension { expected: n, got: q.nrows() });
    }
    if !is_symmetric(q) {
        return Err(MracError::NotPositiveDefinite("Q is not symmetric"));
    }
    if q.clone().cholesky().is_none() {
        return Err(MracError::NotPositiveDefinite("Q"));
    }

    let at = a.transpose();
    let eye = DMatrix::<f64>::identity(n, n);
    let system = eye.kronecker(&at) + at.kronecker(&eye);
    let lu = system.lu();
    let rhs = -DMatrix::from_column_slice(n * n, 1, q.as_slice());
    let vec_p = lu
        .solve(&rhs)
        .ok_or_else(|| MracError::Stability("singular Lyapunov operator (A has eigenvalues summing to zero)".into()))?;
    let mut p = DMatrix::from_column_slice(n, n, vec_p.as_slice());

    let r = lyapunov_residual(a, &p, q);
    if let Some(dp) = lu.solve(&-DMatrix::from_column_slice(n * n, 1, r.as_slice())) {
        p += DMatrix::from_column_slice(n, n, dp.as_slice());
    }
    p = (&p + p.transpose()) * 0.5;

    if !p.iter().all(|v| v.is_finite()) {
        return Err(MracError::Stability("non-finite solution".into()));
    }
    if p.clone().cholesky().is_none() {
        return Err(MracError::Stability("solution is not positive definite; A is not Hurwitz".into()));
    }
    let res = lyapunov_residual(a, &p, q).amax();
    if res > RESIDUAL_TOL {
        return Err(MracError::Stability(format!("residual {res:.3e} exceeds {RESIDUAL_TOL:e}")));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar() {
        let p = solve_lyapunov(&DMatrix::from_element(1, 1, -1.0), &DMatrix::from_element(1, 1, 2.0)).unwrap();
        assert!((p[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn companion_two_by_two() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -3.0]);
        let p = solve_lyapunov(&a, &DMatrix::identity(2, 2)).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.25, 0.25, 0.25, 0.25]);
        assert!((p - expected).amax() < 1e-12);
    }

    #[test]
    fn random_hurwitz_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(1..=6);
            let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let shift = m.complex_eigenvalues().iter().map(|e| e.re).fold(f64::MIN, f64::max) + 0.5;
            let a = m - DMatrix::identity(n, n) * shift;
            let q = DMatrix::identity(n, n);
            let p = solve_lyapunov(&a, &q).unwrap();
            assert!(lyapunov_residual(&a, &p, &q).amax() <= 1e-8);
            assert_eq!(p, p.transpose());
        }
    }

    #[test]
    fn unstable_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(solve_lyapunov(&a, &DMatrix::identity(2, 2)), Err(MracError::Stability(_))));
        let marginal = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(matches!(solve_lyapunov(&marginal, &DMatrix::identity(2, 2)), Err(MracError::Stability(_))));
    }

    #[test]
    fn q_must_be_spd() {
        let a = DMatrix::from_element(1, 1, -1.0);
        assert!(matches!(
            solve_lyapunov(&a, &DMatrix::from_element(1, 1, -1.0)),
            Err(MracError::NotPositiveDefinite(_))
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(solve_lyapunov(&(DMatrix::identity(2, 2) * -1.0), &asym).is_err());
    }
}
