//! Continuous (`X C + C X^T = R`) and discrete (`Q C Q^T - C = R`) Lyapunov
//! equations.
//!
//! The default path reduces the coefficient matrix to complex Schur form and
//! back-substitutes column by column (Bartels-Stewart style, O(n^3)). The
//! Kronecker path vectorises the equation into an n^2 x n^2 dense system; it
//! is exact up to rounding and serves as the reference and the fallback.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::CorrelationMatrix;
use crate::scalar::{modulus, Real};

/// Eigenvalue margin separating a genuine zero mode from rounding.
pub const STABILITY_TOL: f64 = 1e-10;
/// Maximum entrywise residual accepted from either solver.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LyapunovMethod {
    #[default]
    Schur,
    Kronecker,
}

type CMat<T> = DMatrix<Complex<T>>;

fn complexify<T: Real>(m: &DMatrix<T>) -> CMat<T> {
    m.map(|v| Complex::new(v, T::zero()))
}

fn max_abs<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, v| acc.max(modulus(*v)))
}

/// `max |X C + C X^T - R|`.
pub fn continuous_residual<T: Real>(x: &DMatrix<T>, c: &CMat<T>, r: &CMat<T>) -> T {
    let xc = complexify(x);
    max_abs(&(&xc * c + c * xc.transpose() - r))
}

/// `max |Q C Q^T - C - R|`.
pub fn discrete_residual<T: Real>(q: &DMatrix<T>, c: &CMat<T>, r: &CMat<T>) -> T {
    let qc = complexify(q);
    max_abs(&(&qc * c * qc.transpose() - c - r))
}

struct ComplexSchur<T: Real> {
    u: CMat<T>,
    t: CMat<T>,
}

const SCHUR_MAX_ITER: usize = 10_000;
const SCHUR_RETRIES: usize = 3;

/// Householder reflection `I - 2 v v^T / v^T v` with a fixed quasi-random `v`.
/// The QR iteration can stall on strongly structured matrices; a similarity
/// by this reflection removes the structure without changing the spectrum.
fn reflector<T: Real>(n: usize, seed: usize) -> DMatrix<T> {
    let v = DVector::from_fn(n, |i, _| {
        T::lit(((i + 1) as f64 * (0.754_877_666_246_692_7 + seed as f64)).fract() - 0.5)
    });
    let scale = T::lit(2.0) / v.dot(&v);
    DMatrix::identity(n, n) - &v * v.transpose() * scale
}

/// `m` itself, then its similarity transforms by [`reflector`], with the
/// reflection used (`None` for `m` itself).
fn similar_copies<T: Real>(m: &DMatrix<T>) -> impl Iterator<Item = (Option<DMatrix<T>>, DMatrix<T>)> + '_ {
    let n = m.nrows();
    std::iter::once((None, m.clone())).chain((1..=SCHUR_RETRIES).map(move |seed| {
        let h = reflector::<T>(n, seed);
        let hm = &h * m * &h;
        (Some(h), hm)
    }))
}

/// Eigenvalues of a real square matrix through a bounded real Schur iteration.
pub fn eigenvalues<T: Real>(m: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if let Some(s) = similar_copies(m).find_map(|(_, a)| Schur::try_new(a, T::default_epsilon(), SCHUR_MAX_ITER)) {
        return Ok(s.complex_eigenvalues().iter().copied().collect());
    }
    ComplexSchur::new(m).map(|s| s.eigenvalues())
}

/// Imaginary shifts tried when the iteration stalls on the unshifted matrix.
/// Stalls occur for spectra symmetric under conjugation with many equal
/// moduli; an imaginary shift breaks that symmetry.
const IMAGINARY_SHIFTS: [f64; 3] = [0.0, 0.41, 0.73];

impl<T: Real> ComplexSchur<T> {
    fn new(m: &DMatrix<T>) -> Result<Self> {
        let eps = T::default_epsilon();
        let n = m.nrows();
        for shift in IMAGINARY_SHIFTS {
            let shift = Complex::new(T::zero(), T::lit(shift));
            for (h, a) in similar_copies(m) {
                let shifted = complexify(&a) + CMat::<T>::identity(n, n) * shift;
                if let Some(schur) = Schur::try_new(shifted, eps, SCHUR_MAX_ITER) {
                    let (u, t) = schur.unpack();
                    let t = t - CMat::<T>::identity(n, n) * shift;
                    // m = h a h with h symmetric orthogonal, so m = (h u) t (h u)^*
                    let u = match h {
                        Some(h) => complexify(&h) * u,
                        None => u,
                    };
                    return Ok(Self { u, t });
                }
            }
        }
        Err(Error::SchurFailed)
    }

    fn eigenvalues(&self) -> Vec<Complex<T>> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// `U^* R conj(U)`.
    fn to_schur_basis(&self, r: &CMat<T>) -> CMat<T> {
        self.u.adjoint() * r * self.u.map(|v| v.conj())
    }

    /// `U Z U^T`.
    fn back_from_schur_basis(&self, z: &CMat<T>) -> CMat<T> {
        &self.u * z * self.u.transpose()
    }
}

/// Solves `A z = b` for upper-triangular `A` given as `diag_shift * I + scale * T`.
fn upper_solve_shifted<T: Real>(t: &CMat<T>, scale: Complex<T>, shift: Complex<T>, b: &mut [Complex<T>]) {
    let n = t.nrows();
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc -= scale * t[(i, j)] * b[j];
        }
        b[i] = acc / (scale * t[(i, i)] + shift);
    }
}

fn check_stable<T: Real>(eigs: &[Complex<T>]) -> Result<()> {
    let tol = T::lit(STABILITY_TOL);
    if let Some(bad) = eigs
        .iter()
        .filter(|e| e.re <= tol)
        .min_by(|a, b| a.re.partial_cmp(&b.re).unwrap())
    {
        return Err(Error::NoUniqueNess {
            re: bad.re.to_f64_lossy(),
            im: bad.im.to_f64_lossy(),
            tol: STABILITY_TOL,
        });
    }
    Ok(())
}

fn check_non_resonant<T: Real>(eigs: &[Complex<T>]) -> Result<()> {
    let tol = T::lit(STABILITY_TOL);
    let one = Complex::new(T::one(), T::zero());
    for a in eigs {
        for b in eigs {
            let prod = *a * *b;
            if modulus(prod - one) <= tol {
                return Err(Error::NonUniqueFloquet {
                    re: prod.re.to_f64_lossy(),
                    im: prod.im.to_f64_lossy(),
                    tol: STABILITY_TOL,
                });
            }
        }
    }
    Ok(())
}

fn schur_continuous<T: Real>(schur: &ComplexSchur<T>, r: &CMat<T>) -> CMat<T> {
    let n = r.nrows();
    let t = &schur.t;
    let mut z = schur.to_schur_basis(r);
    let one = Complex::new(T::one(), T::zero());
    for k in (0..n).rev() {
        let mut rhs: Vec<Complex<T>> = z.column(k).iter().copied().collect();
        for m in k + 1..n {
            let tkm = t[(k, m)];
            for i in 0..n {
                rhs[i] -= z[(i, m)] * tkm;
            }
        }
        upper_solve_shifted(t, one, t[(k, k)], &mut rhs);
        z.column_mut(k).copy_from_slice(&rhs);
    }
    schur.back_from_schur_basis(&z)
}

fn schur_discrete<T: Real>(schur: &ComplexSchur<T>, r: &CMat<T>) -> CMat<T> {
    let n = r.nrows();
    let t = &schur.t;
    let mut z = schur.to_schur_basis(r);
    let neg_one = Complex::new(-T::one(), T::zero());
    for k in (0..n).rev() {
        // w = sum_{m>k} T_km z_m ; rhs = r_k - T w
        let mut w = vec![Complex::new(T::zero(), T::zero()); n];
        for m in k + 1..n {
            let tkm = t[(k, m)];
            for i in 0..n {
                w[i] += z[(i, m)] * tkm;
            }
        }
        let mut rhs: Vec<Complex<T>> = z.column(k).iter().copied().collect();
        for i in 0..n {
            let mut tw = Complex::new(T::zero(), T::zero());
            for j in i..n {
                tw += t[(i, j)] * w[j];
            }
            rhs[i] -= tw;
        }
        upper_solve_shifted(t, t[(k, k)], neg_one, &mut rhs);
        z.column_mut(k).copy_from_slice(&rhs);
    }
    schur.back_from_schur_basis(&z)
}

/// Solves `op * vec(C) = vec(R)` for a real operator and complex right-hand side.
fn kron_solve<T: Real>(op: DMatrix<T>, r: &CMat<T>) -> Result<CMat<T>> {
    let n = r.nrows();
    let lu = op.lu();
    let re = nalgebra::DVector::from_iterator(n * n, r.iter().map(|v| v.re));
    let im = nalgebra::DVector::from_iterator(n * n, r.iter().map(|v| v.im));
    let singular = || Error::NonUniqueSteadyState("vectorised Lyapunov operator is singular".into());
    let xr = lu.solve(&re).ok_or_else(singular)?;
    let xi = lu.solve(&im).ok_or_else(singular)?;
    Ok(CMat::from_fn(n, n, |j, k| Complex::new(xr[j + n * k], xi[j + n * k])))
}

fn kron_continuous<T: Real>(x: &DMatrix<T>, r: &CMat<T>) -> Result<CMat<T>> {
    // vec(X C) = (I (x) X) vec C, vec(C X^T) = (X (x) I) vec C, column-major.
    let n = x.nrows();
    let mut op = DMatrix::zeros(n * n, n * n);
    for k in 0..n {
        for j in 0..n {
            let row = j + n * k;
            for l in 0..n {
                op[(row, l + n * k)] += x[(j, l)];
                op[(row, j + n * l)] += x[(k, l)];
            }
        }
    }
    kron_solve(op, r)
}

fn kron_discrete<T: Real>(q: &DMatrix<T>, r: &CMat<T>) -> Result<CMat<T>> {
    // vec(Q C Q^T) = (Q (x) Q) vec C.
    let n = q.nrows();
    let mut op = q.kronecker(q);
    for i in 0..n * n {
        op[(i, i)] -= T::one();
    }
    kron_solve(op, r)
}

fn check_square<T: Real>(a: &DMatrix<T>, r_rows: usize, r_cols: usize) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if r_rows != a.nrows() || r_cols != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", a.nrows(), a.ncols()),
            got: format!("{}x{}", r_rows, r_cols),
        });
    }
    Ok(())
}

/// Solves `X C + C X^T = R` for general complex `R`.
pub fn solve_continuous_general<T: Real>(x: &DMatrix<T>, r: &CMat<T>, method: LyapunovMethod) -> Result<CMat<T>> {
    check_square(x, r.nrows(), r.ncols())?;
    let tol = T::lit(RESIDUAL_TOL);
    let schur = ComplexSchur::new(x);
    if let Ok(s) = &schur {
        check_stable(&s.eigenvalues())?;
    }
    if let (LyapunovMethod::Schur, Ok(s)) = (method, &schur) {
        let c = schur_continuous(s, r);
        if continuous_residual(x, &c, r) <= tol {
            return Ok(c);
        }
    }
    let c = kron_continuous(x, r)?;
    let res = continuous_residual(x, &c, r);
    if res > tol {
        return Err(Error::ResidualTooLarge {
            context: "continuous Lyapunov",
            residual: res.to_f64_lossy(),
            tol: RESIDUAL_TOL,
        });
    }
    Ok(c)
}

/// Solves `Q C Q^T - C = R` for general complex `R`.
pub fn solve_discrete_general<T: Real>(q: &DMatrix<T>, r: &CMat<T>, method: LyapunovMethod) -> Result<CMat<T>> {
    check_square(q, r.nrows(), r.ncols())?;
    let tol = T::lit(RESIDUAL_TOL);
    let schur = ComplexSchur::new(q);
    if let Ok(s) = &schur {
        check_non_resonant(&s.eigenvalues())?;
    }
    if let (LyapunovMethod::Schur, Ok(s)) = (method, &schur) {
        let c = schur_discrete(s, r);
        if discrete_residual(q, &c, r) <= tol {
            return Ok(c);
        }
    }
    let c = kron_discrete(q, r)?;
    let res = discrete_residual(q, &c, r);
    if res > tol {
        return Err(Error::ResidualTooLarge {
            context: "discrete Lyapunov",
            residual: res.to_f64_lossy(),
            tol: RESIDUAL_TOL,
        });
    }
    Ok(c)
}

/// Steady-state correlations from `X C + C X^T = i Y`, with `Y` real antisymmetric.
pub fn solve_continuous_lyapunov<T: Real>(x: &DMatrix<T>, y: &DMatrix<T>) -> Result<CorrelationMatrix<T>> {
    solve_continuous_lyapunov_with(x, y, LyapunovMethod::default())
}

pub fn solve_continuous_lyapunov_with<T: Real>(
    x: &DMatrix<T>,
    y: &DMatrix<T>,
    method: LyapunovMethod,
) -> Result<CorrelationMatrix<T>> {
    let r = y.map(|v| Complex::new(T::zero(), v));
    let c = solve_continuous_general(x, &r, method)?;
    let cleaned = CorrelationMatrix::from_imaginary_part(&c.map(|v| v.im))?;
    let res = continuous_residual(x, cleaned.matrix(), &r);
    if res > T::lit(RESIDUAL_TOL) {
        return Err(Error::ResidualTooLarge {
            context: "continuous Lyapunov cleanup",
            residual: res.to_f64_lossy(),
            tol: RESIDUAL_TOL,
        });
    }
    Ok(cleaned)
}

/// Fixed point of `C -> Q C Q^T - R`, i.e. `Q C Q^T - C = R`.
pub fn solve_discrete_lyapunov<T: Real>(q: &DMatrix<T>, r: &CMat<T>) -> Result<CorrelationMatrix<T>> {
    solve_discrete_lyapunov_with(q, r, LyapunovMethod::default())
}

pub fn solve_discrete_lyapunov_with<T: Real>(
    q: &DMatrix<T>,
    r: &CMat<T>,
    method: LyapunovMethod,
) -> Result<CorrelationMatrix<T>> {
    CorrelationMatrix::from_matrix(solve_discrete_general(q, r, method)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(rows: usize, data: &[(f64, f64)]) -> CMat<f64> {
        CMat::from_row_slice(rows, rows, &data.iter().map(|&(a, b)| Complex::new(a, b)).collect::<Vec<_>>())
    }

    #[test]
    fn identity_coefficient_gives_half_rhs() {
        let x = DMatrix::identity(2, 2);
        let y = DMatrix::from_row_slice(2, 2, &[0.0, 4.0, -4.0, 0.0]);
        for method in [LyapunovMethod::Schur, LyapunovMethod::Kronecker] {
            let c = solve_continuous_lyapunov_with(&x, &y, method).unwrap();
            let expected = cm(2, &[(0.0, 0.0), (0.0, 2.0), (0.0, -2.0), (0.0, 0.0)]);
            assert!((c.matrix() - expected).camax() < 1e-15);
        }
    }

    #[test]
    fn zero_noise_gives_zero() {
        let x = DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, 1.0, 0.0, 0.0, -1.0, 1.5, 0.3, 0.0, 0.0, -0.3, 0.7, 0.1, 0.0, 0.0, -0.1, 0.9,
            ],
        );
        let c = solve_continuous_lyapunov(&x, &DMatrix::zeros(4, 4)).unwrap();
        assert!(c.matrix().camax() < 1e-15);
    }

    #[test]
    fn marginal_coefficient_rejected() {
        // Pure rotation: eigenvalues +-i with zero real part.
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let y = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let err = solve_continuous_lyapunov(&x, &y).unwrap_err();
        assert!(matches!(err, Error::NoUniqueNess { .. }), "{err}");
    }

    #[test]
    fn discrete_zero_map() {
        let q = DMatrix::zeros(2, 2);
        let r = cm(2, &[(0.0, 0.0), (0.0, 0.7), (0.0, -0.7), (0.0, 0.0)]);
        let c = solve_discrete_lyapunov(&q, &r).unwrap();
        assert!((c.matrix() + &r).camax() < 1e-15);
    }

    #[test]
    fn discrete_scalar_resolvent() {
        let alpha = 0.6;
        let q = DMatrix::identity(3, 3) * alpha;
        let r = cm(
            3,
            &[
                (0.0, 0.0),
                (0.3, 0.1),
                (0.0, -0.2),
                (-0.3, -0.1),
                (0.0, 0.0),
                (0.5, 0.0),
                (0.0, 0.2),
                (-0.5, 0.0),
                (0.0, 0.0),
            ],
        );
        for method in [LyapunovMethod::Schur, LyapunovMethod::Kronecker] {
            let c = solve_discrete_general(&q, &r, method).unwrap();
            let expected = r.map(|v| v / (alpha * alpha - 1.0));
            assert!((c - expected).camax() < 1e-14);
        }
    }

    #[test]
    fn discrete_resonance_rejected() {
        // eigenvalues +-i: (i)(-i) = 1
        let q = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let r = CMat::zeros(2, 2);
        assert!(matches!(solve_discrete_lyapunov(&q, &r), Err(Error::NonUniqueFloquet { .. })));
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let x = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(
            solve_continuous_lyapunov(&x, &DMatrix::zeros(2, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
