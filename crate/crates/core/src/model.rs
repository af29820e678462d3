//! Chain parameters and the Majorana-space objects built from them.
//!
//! Majorana operators are indexed from zero: site `i` (zero-based) carries
//! `w[2i] = X_i * prod_{i'<i} Z_i'` and `w[2i+1] = Y_i * prod_{i'<i} Z_i'`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{modulus, Real};

/// Residue allowed in the real/imaginary part that must vanish before it is
/// dropped from storage.
pub const REAL_STORAGE_TOL: f64 = 1e-14;

/// Rates of the four boundary Lindblad channels `sigma^+_1`, `sigma^-_1`,
/// `sigma^+_N`, `sigma^-_N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathRates<T = f64> {
    pub gamma_1l: T,
    pub gamma_2l: T,
    pub gamma_1r: T,
    pub gamma_2r: T,
}

impl<T: Real> BathRates<T> {
    pub fn new(gamma_1l: T, gamma_2l: T, gamma_1r: T, gamma_2r: T) -> Result<Self> {
        let rates = Self {
            gamma_1l,
            gamma_2l,
            gamma_1r,
            gamma_2r,
        };
        rates.validate()?;
        Ok(rates)
    }

    pub fn zero() -> Self {
        Self {
            gamma_1l: T::zero(),
            gamma_2l: T::zero(),
            gamma_1r: T::zero(),
            gamma_2r: T::zero(),
        }
    }

    pub fn as_array(&self) -> [T; 4] {
        [self.gamma_1l, self.gamma_2l, self.gamma_1r, self.gamma_2r]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, rate) in ["gamma_1l", "gamma_2l", "gamma_1r", "gamma_2r"]
            .into_iter()
            .zip(self.as_array())
        {
            if !rate.is_finite() || rate < T::zero() {
                return Err(Error::invalid(
                    name,
                    format!("bath rate must be finite and >= 0, got {}", rate),
                ));
            }
        }
        Ok(())
    }

    /// True when at least one channel has a positive rate.
    pub fn is_dissipative(&self) -> bool {
        self.as_array().iter().any(|&r| r > T::zero())
    }
}

impl<T: Real> Default for BathRates<T> {
    /// The rates used for every diagram: (0.5, 0.3, 0.5, 0.1).
    fn default() -> Self {
        Self {
            gamma_1l: T::lit(0.5),
            gamma_2l: T::lit(0.3),
            gamma_1r: T::lit(0.5),
            gamma_2r: T::lit(0.1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams<T = f64> {
    pub n_sites: usize,
    /// Anisotropy in [0, 1].
    pub gamma: T,
    /// Transverse field; ignored by the kicked model.
    pub h: T,
    pub bath: BathRates<T>,
}

impl<T: Real> ChainParams<T> {
    /// Chain with the default bath rates.
    pub fn new(n_sites: usize, gamma: T, h: T) -> Result<Self> {
        Self::with_bath(n_sites, gamma, h, BathRates::default())
    }

    pub fn with_bath(n_sites: usize, gamma: T, h: T, bath: BathRates<T>) -> Result<Self> {
        let params = Self { n_sites, gamma, h, bath };
        params.validate()?;
        Ok(params)
    }

    /// Single-site chains are accepted here because the master-equation
    /// operators are meaningful for them; the quadratic-form builders
    /// require at least two sites.
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 1 {
            return Err(Error::invalid("n_sites", "at least one site required"));
        }
        if !self.gamma.is_finite() || self.gamma < T::zero() || self.gamma > T::one() {
            return Err(Error::invalid(
                "gamma",
                format!("anisotropy must lie in [0, 1], got {}", self.gamma),
            ));
        }
        if !self.h.is_finite() {
            return Err(Error::invalid("h", "field must be finite"));
        }
        self.bath.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickParams<T = f64> {
    /// Kick strength `a = h * tau`.
    pub a: T,
    pub tau: T,
}

impl<T: Real> KickParams<T> {
    pub fn new(a: T, tau: T) -> Result<Self> {
        if !tau.is_finite() || tau <= T::zero() {
            return Err(Error::invalid("tau", format!("kick period must be > 0, got {}", tau)));
        }
        if !a.is_finite() {
            return Err(Error::invalid("a", "kick strength must be finite"));
        }
        Ok(Self { a, tau })
    }

    /// Kick strength folded into the canonical window [0, pi/2).
    pub fn folded_a(&self) -> T {
        fold_kick_strength(self.a)
    }

    /// Effective field `h = a / tau` of the kick.
    pub fn h(&self) -> T {
        self.a / self.tau
    }
}

/// Folds `a` into [0, pi/2) using the period of the kick.
pub fn fold_kick_strength<T: Real>(a: T) -> T {
    let period = T::FRAC_PI_2();
    let mut r = a % period;
    if r < T::zero() {
        r += period;
    }
    if r >= period {
        r -= period;
    }
    r
}

/// Majorana quadratic form `H = w . h w`, with `h` antisymmetric and purely
/// imaginary.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm<T = f64> {
    matrix: DMatrix<Complex<T>>,
}

impl<T: Real> QuadraticForm<T> {
    pub fn from_matrix(matrix: DMatrix<Complex<T>>) -> Result<Self> {
        if !matrix.is_square() || !matrix.nrows().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: "even square matrix".into(),
                got: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        let tol = T::lit(REAL_STORAGE_TOL);
        let n = matrix.nrows();
        for j in 0..n {
            for k in 0..n {
                let v = matrix[(j, k)];
                let w = matrix[(k, j)];
                if v.re.abs() > tol || modulus(v + w) > tol {
                    return Err(Error::invalid("quadratic form", "matrix must be antisymmetric and imaginary"));
                }
            }
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_sites(&self) -> usize {
        self.dim() / 2
    }

    /// Sum with another form of the same size scaled by `factor`.
    pub fn add_scaled(&self, other: &Self, factor: T) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim().to_string(),
                got: other.dim().to_string(),
            });
        }
        let f = Complex::new(factor, T::zero());
        Ok(Self {
            matrix: &self.matrix + other.matrix.map(|v| v * f),
        })
    }
}

/// Sets `m[(p, q)] = i * coef` and `m[(q, p)] = -i * coef`.
fn put_pair<T: Real>(m: &mut DMatrix<Complex<T>>, p: usize, q: usize, coef: T) {
    m[(p, q)] += Complex::new(T::zero(), coef);
    m[(q, p)] -= Complex::new(T::zero(), coef);
}

/// Quadratic form of the nearest-neighbour XY chain, optionally with the
/// transverse field term `h sum_m Z_m`.
pub fn build_xy_form<T: Real>(params: &ChainParams<T>, include_field: bool) -> Result<QuadraticForm<T>> {
    params.validate()?;
    let n = params.n_sites;
    if n < 2 {
        return Err(Error::invalid("n_sites", format!("XY chain needs at least 2 sites, got {n}")));
    }
    let quarter = T::lit(0.25);
    let jx = (T::one() + params.gamma) * quarter;
    let jy = (T::one() - params.gamma) * quarter;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n - 1 {
        // X_i X_{i+1} = -i w[2i+1] w[2i+2]
        put_pair(&mut m, 2 * i + 1, 2 * i + 2, -jx);
        // Y_i Y_{i+1} = i w[2i] w[2i+3]
        put_pair(&mut m, 2 * i, 2 * i + 3, jy);
    }
    if include_field {
        // Z_i = -i w[2i] w[2i+1]
        let half_h = params.h * T::lit(0.5);
        for i in 0..n {
            put_pair(&mut m, 2 * i, 2 * i + 1, -half_h);
        }
    }
    Ok(QuadraticForm { matrix: m })
}

/// Unit-strength form of `sum_m Z_m`.
pub fn build_kick_form<T: Real>(n_sites: usize) -> Result<QuadraticForm<T>> {
    if n_sites < 1 {
        return Err(Error::invalid("n_sites", "at least one site required"));
    }
    let mut m = DMatrix::zeros(2 * n_sites, 2 * n_sites);
    for i in 0..n_sites {
        put_pair(&mut m, 2 * i, 2 * i + 1, -T::lit(0.5));
    }
    Ok(QuadraticForm { matrix: m })
}

/// Linear forms `L_mu = l_mu . w` of the four boundary channels.
///
/// The Jordan-Wigner string of the right-edge operators is not part of the
/// linear form; on the even-parity sector where the asymptotic state lives it
/// acts trivially.
#[derive(Debug, Clone, PartialEq)]
pub struct BathVectors<T = f64> {
    vectors: [DVector<Complex<T>>; 4],
}

impl<T: Real> BathVectors<T> {
    pub fn vectors(&self) -> &[DVector<Complex<T>>; 4] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }
}

pub fn build_bath_vectors<T: Real>(params: &ChainParams<T>) -> Result<BathVectors<T>> {
    params.validate()?;
    let dim = 2 * params.n_sites;
    let half = T::lit(0.5);
    let channel = |rate: T, first: usize, sign: T| {
        let s = rate.sqrt() * half;
        let mut v = DVector::zeros(dim);
        v[first] = Complex::new(s, T::zero());
        v[first + 1] = Complex::new(T::zero(), sign * s);
        v
    };
    let b = &params.bath;
    let last = dim - 2;
    Ok(BathVectors {
        vectors: [
            channel(b.gamma_1l, 0, T::one()),
            channel(b.gamma_2l, 0, -T::one()),
            channel(b.gamma_1r, last, T::one()),
            channel(b.gamma_2r, last, -T::one()),
        ],
    })
}

/// Real matrices driving `dC/dt = -X C - C X^T + i Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrices<T = f64> {
    pub x: DMatrix<T>,
    pub y: DMatrix<T>,
}

/// Builds `X = 4 (i h + M_r)` and `Y = 4 (M_i - M_i^T)` with
/// `M_jk = sum_mu conj(l_mu,j) l_mu,k`.
///
/// The conjugate sits on the first index so that the steady state obeys
/// `X C + C X^T = i Y` for `C_jk = tr(w_j w_k rho) - delta_jk` under the
/// dissipator `2 L rho L^+ - {L^+ L, rho}`.
pub fn assemble_structure<T: Real>(h_form: &QuadraticForm<T>, baths: &BathVectors<T>) -> Result<StructureMatrices<T>> {
    let n = h_form.dim();
    if baths.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n.to_string(),
            got: baths.dim().to_string(),
        });
    }
    let mut m = DMatrix::<Complex<T>>::zeros(n, n);
    for l in baths.vectors() {
        for j in 0..n {
            let lj = l[j].conj();
            if lj == Complex::new(T::zero(), T::zero()) {
                continue;
            }
            for k in 0..n {
                m[(j, k)] += lj * l[k];
            }
        }
    }
    let four = T::lit(4.0);
    let tol = T::lit(REAL_STORAGE_TOL);
    let mut x = DMatrix::zeros(n, n);
    let mut y = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let ih = h_form.matrix()[(j, k)] * Complex::new(T::zero(), T::one());
            if ih.im.abs() > tol {
                return Err(Error::invalid("h_form", "i*h must be real"));
            }
            x[(j, k)] = four * (ih.re + m[(j, k)].re);
            y[(j, k)] = four * (m[(j, k)].im - m[(k, j)].im);
        }
    }
    Ok(StructureMatrices { x, y })
}

/// Majorana two-point matrix `C_jk = tr(w_j w_k rho) - delta_jk`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<T = f64> {
    c: DMatrix<Complex<T>>,
}

impl<T: Real> CorrelationMatrix<T> {
    pub fn from_matrix(c: DMatrix<Complex<T>>) -> Result<Self> {
        if !c.is_square() || !c.nrows().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: "even square matrix".into(),
                got: format!("{}x{}", c.nrows(), c.ncols()),
            });
        }
        Ok(Self { c })
    }

    /// Builds `i * s` from a real matrix, projecting onto the antisymmetric part.
    pub fn from_imaginary_part(s: &DMatrix<T>) -> Result<Self> {
        let half = T::lit(0.5);
        let anti = (s - s.transpose()) * half;
        Self::from_matrix(anti.map(|v| Complex::new(T::zero(), v)))
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.c
    }

    pub fn into_inner(self) -> DMatrix<Complex<T>> {
        self.c
    }

    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn n_sites(&self) -> usize {
        self.dim() / 2
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        (&self.c - &other.c).iter().fold(T::zero(), |acc, v| acc.max(modulus(*v)))
    }

    /// Largest violation of antisymmetry, imaginarity, zero diagonal and
    /// the unit bound on entries.
    pub fn invariant_violation(&self) -> T {
        let n = self.dim();
        let mut worst = T::zero();
        for j in 0..n {
            for k in 0..n {
                let v = self.c[(j, k)];
                worst = worst.max(modulus(v + self.c[(k, j)]));
                worst = worst.max(v.re.abs());
                worst = worst.max(modulus(v) - T::one());
            }
            worst = worst.max(modulus(self.c[(j, j)]));
        }
        worst
    }

    pub fn check_invariants(&self, tol: T) -> Result<()> {
        let v = self.invariant_violation();
        if v > tol {
            return Err(Error::Unphysical(format!("correlation matrix invariants violated by {}", v)));
        }
        Ok(())
    }
}

/// Which index pairs enter the residual correlator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceConvention {
    /// Majorana indices mapped to their sites; pairs at site distance >= N/2.
    #[default]
    Site,
    /// Raw Majorana index distance >= N.
    Majorana,
}

impl DistanceConvention {
    pub fn admits(self, j: usize, k: usize, n_sites: usize) -> bool {
        match self {
            DistanceConvention::Site => {
                let d = (j / 2).abs_diff(k / 2);
                2 * d >= n_sites
            }
            DistanceConvention::Majorana => j.abs_diff(k) >= n_sites,
        }
    }
}

/// Mean of `|C_jk|` over the index pairs admitted by `convention`.
pub fn residual_correlation<T: Real>(c: &CorrelationMatrix<T>, n_sites: usize, convention: DistanceConvention) -> Result<T> {
    if c.dim() != 2 * n_sites {
        return Err(Error::DimensionMismatch {
            expected: (2 * n_sites).to_string(),
            got: c.dim().to_string(),
        });
    }
    let dim = c.dim();
    let mut sum = T::zero();
    let mut count = 0usize;
    for j in 0..dim {
        for k in 0..dim {
            if convention.admits(j, k, n_sites) {
                sum += modulus(c.matrix()[(j, k)]);
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyAdmittedSet { n_sites });
    }
    Ok(sum / T::from_usize(count).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn field_free_form_has_no_site_diagonal_terms() {
        let p = ChainParams::new(5, 0.3, 0.9).unwrap();
        let f = build_xy_form(&p, false).unwrap();
        for i in 0..5 {
            assert_eq!(f.matrix()[(2 * i, 2 * i + 1)], c(0.0, 0.0));
        }
    }

    #[test]
    fn xy_form_rejects_single_site() {
        let p = ChainParams::new(1, 0.3, 0.9).unwrap();
        assert!(matches!(build_xy_form(&p, true), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn kick_form_is_repeated_site_block() {
        let one = build_kick_form::<f64>(1).unwrap();
        let four = build_kick_form::<f64>(4).unwrap();
        for j in 0..8 {
            for k in 0..8 {
                let expected = if j / 2 == k / 2 {
                    one.matrix()[(j % 2, k % 2)]
                } else {
                    c(0.0, 0.0)
                };
                assert_eq!(four.matrix()[(j, k)], expected);
            }
        }
    }

    #[test]
    fn single_left_pump_vector() {
        let bath = BathRates::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let p = ChainParams::with_bath(3, 0.5, 0.0, bath).unwrap();
        let b = build_bath_vectors(&p).unwrap();
        let v = &b.vectors()[0];
        assert_eq!(v[0], c(0.5, 0.0));
        assert_eq!(v[1], c(0.0, 0.5));
        assert!(v.iter().skip(2).all(|z| *z == c(0.0, 0.0)));
        for other in &b.vectors()[1..] {
            assert!(other.iter().all(|z| *z == c(0.0, 0.0)));
        }
    }

    #[test]
    fn zero_rates_give_zero_vectors() {
        let p = ChainParams::with_bath(3, 0.5, 0.0, BathRates::zero()).unwrap();
        let b = build_bath_vectors(&p).unwrap();
        assert!(b.vectors().iter().all(|v| v.iter().all(|z| z.norm() == 0.0)));
        assert!(!p.bath.is_dissipative());
    }

    #[test]
    fn negative_rate_rejected() {
        assert!(BathRates::new(0.5, -0.1, 0.5, 0.1).is_err());
    }

    #[test]
    fn structure_without_baths_is_hamiltonian_part() {
        let p = ChainParams::with_bath(4, 0.4, 0.6, BathRates::zero()).unwrap();
        let f = build_xy_form(&p, true).unwrap();
        let s = assemble_structure(&f, &build_bath_vectors(&p).unwrap()).unwrap();
        assert!(s.y.iter().all(|v| *v == 0.0));
        for j in 0..8 {
            for k in 0..8 {
                let expected = (f.matrix()[(j, k)] * c(0.0, 4.0)).re;
                assert_eq!(s.x[(j, k)], expected);
            }
        }
    }

    #[test]
    fn structure_of_single_pump() {
        // l = (1/2, i/2): M = conj(l) l^T = [[1/4, i/4], [-i/4, 1/4]]
        let l = DVector::from_vec(vec![c(0.5, 0.0), c(0.0, 0.5)]);
        let zero = DVector::zeros(2);
        let baths = BathVectors {
            vectors: [l, zero.clone(), zero.clone(), zero],
        };
        let h = QuadraticForm::from_matrix(DMatrix::zeros(2, 2)).unwrap();
        let s = assemble_structure(&h, &baths).unwrap();
        assert_eq!(s.x, DMatrix::identity(2, 2));
        assert_eq!(s.y, DMatrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]));
    }

    #[test]
    fn folding_kick_strength() {
        let f = fold_kick_strength(10.0_f64);
        assert!((0.0..std::f64::consts::FRAC_PI_2).contains(&f));
        assert!((f - (10.0 - 6.0 * std::f64::consts::FRAC_PI_2)).abs() < 1e-12);
        assert!((fold_kick_strength(-0.25_f64) - (std::f64::consts::FRAC_PI_2 - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn residual_of_zero_and_constant_matrices() {
        let zero = CorrelationMatrix::<f64>::from_matrix(DMatrix::zeros(8, 8)).unwrap();
        assert_eq!(residual_correlation(&zero, 4, DistanceConvention::Site).unwrap(), 0.0);

        let mut m = DMatrix::from_element(8, 8, c(0.0, 0.9));
        for j in 0..8 {
            for k in 0..8 {
                if DistanceConvention::Site.admits(j, k, 4) {
                    m[(j, k)] = c(0.0, if j < k { 0.3 } else { -0.3 });
                }
            }
        }
        let cm = CorrelationMatrix::from_matrix(m).unwrap();
        assert!((residual_correlation(&cm, 4, DistanceConvention::Site).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn distance_conventions_admit_expected_pairs() {
        // N = 5: site distance must be >= 2.5, i.e. 3 or 4.
        assert!(DistanceConvention::Site.admits(0, 6, 5));
        assert!(!DistanceConvention::Site.admits(0, 5, 5));
        assert!(DistanceConvention::Majorana.admits(0, 5, 5));
        assert!(!DistanceConvention::Majorana.admits(0, 4, 5));
    }

    #[test]
    fn invalid_chain_params() {
        assert!(ChainParams::new(4, 1.2, 0.0).is_err());
        assert!(ChainParams::new(0, 0.5, 0.0).is_err());
        assert!(KickParams::new(0.5, 0.0).is_err());
    }
}
