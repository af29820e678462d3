//! Bit-encoded Pauli strings on up to 32 sites.
//!
//! A string is stored as masks `(x, z)` and stands for the Hermitian operator
//! `i^{|x & z|} X^x Z^z`, so a site with both bits set carries `Y = i X Z`.
//! Site `i` (zero-based, leftmost factor of the tensor product) occupies bit
//! `n - 1 - i`, matching the computational-basis index where bit value 1 is
//! spin down.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

const PHASES: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

/// `i^k`.
pub fn i_pow(k: u32) -> Complex64 {
    PHASES[(k % 4) as usize]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    pub x: u32,
    pub z: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[inline]
pub fn site_bit(n_sites: usize, site: usize) -> u32 {
    debug_assert!(site < n_sites && n_sites <= 32);
    1 << (n_sites - 1 - site)
}

impl PauliString {
    pub const IDENTITY: Self = Self { x: 0, z: 0 };

    pub fn single(n_sites: usize, site: usize, axis: Axis) -> Self {
        let b = site_bit(n_sites, site);
        match axis {
            Axis::X => Self { x: b, z: 0 },
            Axis::Y => Self { x: b, z: b },
            Axis::Z => Self { x: 0, z: b },
        }
    }

    /// Two-site string `axis_a` on `site_a` times `axis_b` on `site_b` (sites distinct).
    pub fn pair(n_sites: usize, site_a: usize, axis_a: Axis, site_b: usize, axis_b: Axis) -> Self {
        let a = Self::single(n_sites, site_a, axis_a);
        let b = Self::single(n_sites, site_b, axis_b);
        Self {
            x: a.x | b.x,
            z: a.z | b.z,
        }
    }

    /// Majorana operator `w_p`: `X_i` (p = 2i) or `Y_i` (p = 2i + 1) times
    /// `Z` on every site left of `i`.
    pub fn majorana(n_sites: usize, p: usize) -> Self {
        let site = p / 2;
        let axis = if p.is_multiple_of(2) { Axis::X } else { Axis::Y };
        let mut s = Self::single(n_sites, site, axis);
        for left in 0..site {
            s.z |= site_bit(n_sites, left);
        }
        s
    }

    /// Exponent `a` of the `i^a` prefactor.
    #[inline]
    pub fn y_count(self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Number of sites carrying X or Y.
    #[inline]
    pub fn flip_count(self) -> u32 {
        self.x.count_ones()
    }

    /// True when the string commutes with the total parity `prod_m Z_m`.
    #[inline]
    pub fn is_even(self) -> bool {
        self.flip_count().is_multiple_of(2)
    }

    #[inline]
    pub fn commutes_with(self, other: Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// `self * other = i^k * result`; returns `(k mod 4, result)`.
    #[inline]
    pub fn times(self, other: Self) -> (u32, Self) {
        let out = Self {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        };
        let k = self.y_count() + other.y_count() + 2 * (self.z & other.x).count_ones() + 4 - out.y_count() % 4;
        (k % 4, out)
    }

    /// Nonzero entry of column `s`: `P |s> = phase |s ^ x>`.
    #[inline]
    pub fn apply_to_basis(self, s: usize) -> (usize, Complex64) {
        let sign = if (self.z & s as u32).count_ones().is_multiple_of(2) {
            0
        } else {
            2
        };
        (s ^ self.x as usize, i_pow(self.y_count() + sign))
    }

    pub fn to_dense(self, n_sites: usize) -> DMatrix<Complex64> {
        let dim = 1usize << n_sites;
        let mut m = DMatrix::zeros(dim, dim);
        for s in 0..dim {
            let (t, ph) = self.apply_to_basis(s);
            m[(t, s)] = ph;
        }
        m
    }

    /// `tr(P rho)`.
    pub fn expectation(self, rho: &DMatrix<Complex64>) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for u in 0..rho.nrows() {
            let (t, ph) = self.apply_to_basis(u);
            acc += ph * rho[(u, t)];
        }
        acc
    }
}

/// Linear combination of Pauli strings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PauliSum {
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_term(p: PauliString, c: Complex64) -> Self {
        let mut s = Self::new();
        s.add(p, c);
        s
    }

    pub fn add(&mut self, p: PauliString, c: Complex64) {
        *self.terms.entry(p).or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    pub fn add_sum(&mut self, other: &PauliSum, factor: Complex64) {
        for (p, c) in &other.terms {
            self.add(*p, c * factor);
        }
    }

    pub fn mul(&self, other: &PauliSum) -> PauliSum {
        let mut out = PauliSum::new();
        for (p, a) in &self.terms {
            for (q, b) in &other.terms {
                let (k, r) = p.times(*q);
                out.add(r, a * b * i_pow(k));
            }
        }
        out
    }

    /// Hermitian conjugate (strings are Hermitian, so only coefficients conjugate).
    pub fn adjoint(&self) -> PauliSum {
        PauliSum {
            terms: self.terms.iter().map(|(p, c)| (*p, c.conj())).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn to_dense(&self, n_sites: usize) -> DMatrix<Complex64> {
        let dim = 1usize << n_sites;
        let mut m = DMatrix::zeros(dim, dim);
        for (p, c) in &self.terms {
            for s in 0..dim {
                let (t, ph) = p.apply_to_basis(s);
                m[(t, s)] += c * ph;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kron_single(n: usize, site: usize, op: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let id = DMatrix::<Complex64>::identity(2, 2);
        let mut m = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for i in 0..n {
            m = m.kronecker(if i == site { op } else { &id });
        }
        m
    }

    fn paulis() -> [DMatrix<Complex64>; 3] {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        [
            DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
            DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
            DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
        ]
    }

    #[test]
    fn single_site_strings_match_kronecker_products() {
        let [sx, sy, sz] = paulis();
        for n in 1..4 {
            for site in 0..n {
                for (axis, m) in [(Axis::X, &sx), (Axis::Y, &sy), (Axis::Z, &sz)] {
                    let p = PauliString::single(n, site, axis).to_dense(n);
                    assert_eq!(p, kron_single(n, site, m));
                }
            }
        }
    }

    #[test]
    fn product_rule_matches_dense_products() {
        let n = 3;
        let all: Vec<PauliString> = (0..8u32).flat_map(|x| (0..8u32).map(move |z| PauliString { x, z })).collect();
        for &a in &all {
            for &b in all.iter().step_by(5) {
                let (k, c) = a.times(b);
                let lhs = a.to_dense(n) * b.to_dense(n);
                let rhs = c.to_dense(n) * i_pow(k);
                assert!((lhs - rhs).camax() < 1e-15);
                let commutator = a.to_dense(n) * b.to_dense(n) - b.to_dense(n) * a.to_dense(n);
                assert_eq!(a.commutes_with(b), commutator.camax() < 1e-15);
            }
        }
    }

    #[test]
    fn majoranas_anticommute() {
        let n = 3;
        for p in 0..2 * n {
            for q in 0..2 * n {
                let a = PauliString::majorana(n, p).to_dense(n);
                let b = PauliString::majorana(n, q).to_dense(n);
                let anti = &a * &b + &b * &a;
                let expected = if p == q {
                    DMatrix::identity(8, 8) * Complex64::new(2.0, 0.0)
                } else {
                    DMatrix::zeros(8, 8)
                };
                assert!((anti - expected).camax() < 1e-15);
            }
        }
    }

    #[test]
    fn expectation_is_trace() {
        let n = 2;
        let rho = DMatrix::from_fn(4, 4, |i, j| {
            Complex64::new((i * 3 + j) as f64 * 0.1, (i as f64 - j as f64) * 0.05)
        });
        for x in 0..4u32 {
            for z in 0..4u32 {
                let p = PauliString { x, z };
                let direct = (p.to_dense(n) * &rho).trace();
                assert!((p.expectation(&rho) - direct).norm() < 1e-14);
            }
        }
    }
}
