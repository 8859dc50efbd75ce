use nalgebra::{Complex, DMatrix, DVector};

use super::{solve_lyapunov, MracError};

/// Closed-loop error matrix with the chain structure of the plant and a free
/// last row, plus the Lyapunov weight `P` that the adaptive law uses.
#[derive(Debug, Clone, PartialEq)]
pub struct HurwitzTarget {
    pub a_h: DMatrix<f64>,
    pub alpha_h: DVector<f64>,
    pub sigma: Vec<Complex<f64>>,
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

impl HurwitzTarget {
    pub fn dim(&self) -> usize {
        self.alpha_h.len()
    }
}

/// `base − 0.01 i` for `i = 0..n`; distinct so the spectrum stays simple.
pub fn default_sigma(base: f64, n: usize) -> Vec<Complex<f64>> {
    (0..n).map(|i| Complex::new(base - 0.01 * i as f64, 0.0)).collect()
}

fn check_spectrum(sigma: &[Complex<f64>]) -> Result<(), MracError> {
    if let Some(s) = sigma.iter().find(|s| !(s.re < 0.0)) {
        return Err(MracError::NotStable(format!("{s}")));
    }
    let tol = |s: &Complex<f64>| 1e-9 * s.norm().max(1.0);
    let mut unmatched: Vec<Complex<f64>> = sigma.iter().filter(|s| s.im.abs() > tol(s)).copied().collect();
    while let Some(s) = unmatched.pop() {
        let conj = unmatched
            .iter()
            .position(|c| (c - s.conj()).norm() <= tol(&s))
            .ok_or(MracError::NotConjugate)?;
        unmatched.swap_remove(conj);
    }
    Ok(())
}

/// Monic coefficients `[c_0, …, c_{n−1}]` of `Π (s − σ_i)`; the leading 1 is
/// implied.
fn monic_coefficients(sigma: &[Complex<f64>]) -> Vec<f64> {
    let mut c = vec![Complex::new(1.0, 0.0)];
    for root in sigma {
        let mut next = vec![Complex::new(0.0, 0.0); c.len() + 1];
        for (k, ck) in c.iter().enumerate() {
            next[k + 1] += ck;
            next[k] -= ck * root;
        }
        c = next;
    }
    c.pop();
    c.into_iter().map(|z| z.re).collect()
}

/// Chooses the last row of `A_H` so that its spectrum is `sigma`.
///
/// `det(sI − A_H) = sⁿ − Σ_i α_H,i (Π_{j ≥ i} δ_j) s^{i−1}`, so each
/// coefficient of the target polynomial fixes one entry of `α_H`.
pub fn build_hurwitz(delta: &[f64], sigma: &[Complex<f64>], q: &DMatrix<f64>) -> Result<HurwitzTarget, MracError> {
    let n = delta.len() + 1;
    if sigma.len() != n {
        return Err(MracError::Dimension { expected: n, got: sigma.len() });
    }
    if q.nrows() != n || q.ncols() != n {
        return Err(MracError::Dimension { expected: n, got: q.nrows() });
    }
    if delta.iter().any(|d| *d == 0.0) {
        return Err(MracError::Parameter("chain gains must be nonzero".into()));
    }
    check_spectrum(sigma)?;

    let coeffs = monic_coefficients(sigma);
    let mut alpha_h = DVector::zeros(n);
    for i in 0..n {
        let chain: f64 = delta[i..].iter().product();
        alpha_h[i] = -coeffs[i] / chain;
    }
    let mut a_h = DMatrix::zeros(n, n);
    for (i, d) in delta.iter().enumerate() {
        a_h[(i, i + 1)] = *d;
    }
    a_h.set_row(n - 1, &alpha_h.transpose());

    let p = solve_lyapunov(&a_h, q)?;
    Ok(HurwitzTarget { a_h, alpha_h, sigma: sigma.to_vec(), p, q: q.clone() })
}
