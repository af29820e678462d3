//! Matrix exponential by scaling and squaring around a diagonal Padé core
//! (Higham 2005 order selection: 3, 5, 7, 9 or 13).

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest absolute column sum.
pub fn norm_1<N: ComplexField>(a: &DMatrix<N>) -> f64 {
    a.column_iter()
        .map(|col| {
            col.iter()
                .map(|v| nalgebra::try_convert::<N::RealField, f64>(v.clone().abs()).unwrap_or(f64::NAN))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

fn scalar<N: ComplexField>(x: f64) -> N {
    nalgebra::convert::<f64, N>(x)
}

/// `exp(a)` for a square real or complex matrix.
pub fn matrix_exp<N: ComplexField>(a: &DMatrix<N>) -> Result<DMatrix<N>> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = norm_1(a);
    if !norm.is_finite() {
        return Err(Error::invalid("a", "matrix exponential needs finite entries"));
    }
    let ident = DMatrix::<N>::identity(n, n);

    for (m, theta) in THETA {
        if norm <= theta {
            let (u, v) = pade_low(a, &ident, m);
            return solve_pade(u, v);
        }
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * scalar::<N>(2f64.powi(-s));
    let (u, v) = pade_13(&scaled, &ident);
    let mut r = solve_pade(u, v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn pade_low<N: ComplexField>(a: &DMatrix<N>, ident: &DMatrix<N>, m: usize) -> (DMatrix<N>, DMatrix<N>) {
    let b: &[f64] = match m {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        _ => &B9,
    };
    let a2 = a * a;
    // even powers A^0, A^2, A^4, ...
    let mut powers = vec![ident.clone(), a2.clone()];
    while powers.len() <= m / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u_inner = DMatrix::<N>::zeros(a.nrows(), a.ncols());
    let mut v = DMatrix::<N>::zeros(a.nrows(), a.ncols());
    for (k, p) in powers.iter().enumerate() {
        v += p * scalar::<N>(b[2 * k]);
        if 2 * k + 1 < b.len() {
            u_inner += p * scalar::<N>(b[2 * k + 1]);
        }
    }
    (a * u_inner, v)
}

fn pade_13<N: ComplexField>(a: &DMatrix<N>, ident: &DMatrix<N>) -> (DMatrix<N>, DMatrix<N>) {
    let b = |k: usize| scalar::<N>(B13[k]);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_hi = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9));
    let u = a * (u_hi + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + ident * b(1));
    let v_hi = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8));
    let v = v_hi + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + ident * b(0);
    (u, v)
}

fn solve_pade<N: ComplexField>(u: DMatrix<N>, v: DMatrix<N>) -> Result<DMatrix<N>> {
    let denom = &v - &u;
    let numer = v + u;
    denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::invalid("a", "Padé denominator is singular"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn zero_gives_identity() {
        let z = DMatrix::<f64>::zeros(4, 4);
        assert_eq!(matrix_exp(&z).unwrap(), DMatrix::identity(4, 4));
    }

    #[test]
    fn diagonal_case() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -2.0]));
        let e = matrix_exp(&a).unwrap();
        assert!((e[(0, 0)] - 1f64.exp()).abs() < 1e-14 * 1f64.exp());
        assert!((e[(1, 1)] - (-2f64).exp()).abs() < 1e-14);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn non_square_rejected() {
        let a = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(matrix_exp(&a), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn rotation_generator() {
        // exp(t [[0, -1], [1, 0]]) is a rotation by t, for every Padé order.
        for t in [1e-3, 0.1, 0.7, 1.9, 4.0, 40.0] {
            let a = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
            let e = matrix_exp(&a).unwrap();
            let expected = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
            assert!((e - expected).amax() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn complex_phase() {
        let a = DMatrix::from_element(1, 1, Complex64::new(0.0, 2.5));
        let e = matrix_exp(&a).unwrap();
        assert!((e[(0, 0)] - Complex64::new(2.5f64.cos(), 2.5f64.sin())).norm() < 1e-14);
    }

    #[test]
    fn single_precision_runs() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0f32, -1.0, 1.0, 0.0]);
        let e = matrix_exp(&a).unwrap();
        assert!((e[(0, 0)] - 1f32.cos()).abs() < 1e-5);
    }
}
