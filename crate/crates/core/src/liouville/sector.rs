//! Dense superoperators on the parity-even Pauli sector.
//!
//! A state is stored through its real Pauli coordinates `r_P = tr(P rho)`,
//! so `rho = 2^-N sum_P r_P P`; the identity string has index 0 and
//! `r_0 = tr rho`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::operators::{hamiltonian_terms, jump_terms, RangeSpec};
use super::MAX_DENSE_SITES;
use crate::error::{Error, Result};
use crate::lyap::matrix_exp;
use crate::model::{fold_kick_strength, ChainParams, KickParams};
use crate::pauli::{i_pow, PauliString, PauliSum};
use crate::pipelines::KickOrder;

type CMat = DMatrix<Complex64>;

const IMAG_TOL: f64 = 1e-12;

/// Enumeration of the Pauli strings with an even number of X/Y factors.
#[derive(Debug, Clone, PartialEq)]
pub struct EvenSector {
    n_sites: usize,
    strings: Vec<PauliString>,
    index: Vec<u32>,
}

impl EvenSector {
    pub fn new(n_sites: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_DENSE_SITES {
            return Err(Error::MemoryGuard {
                n: n_sites,
                limit: MAX_DENSE_SITES,
                what: "dense superoperator",
            });
        }
        let side = 1u32 << n_sites;
        let mut strings = Vec::with_capacity((side * side / 2) as usize);
        let mut index = vec![u32::MAX; (side * side) as usize];
        for x in (0..side).filter(|x| x.count_ones() % 2 == 0) {
            for z in 0..side {
                index[((x << n_sites) | z) as usize] = strings.len() as u32;
                strings.push(PauliString { x, z });
            }
        }
        Ok(Self { n_sites, strings, index })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.strings.len()
    }

    pub fn strings(&self) -> &[PauliString] {
        &self.strings
    }

    pub fn index_of(&self, p: PauliString) -> Option<usize> {
        let key = ((p.x as usize) << self.n_sites) | p.z as usize;
        self.index.get(key).copied().filter(|&i| i != u32::MAX).map(|i| i as usize)
    }

    /// Pauli coordinates of the parity-even part of `rho`.
    pub fn coordinates(&self, rho: &CMat) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.strings.iter().map(|p| p.expectation(rho).re))
    }

    pub fn density(&self, r: &DVector<f64>) -> CMat {
        let d = 1usize << self.n_sites;
        let scale = 1.0 / d as f64;
        let mut rho = CMat::zeros(d, d);
        for (p, &coef) in self.strings.iter().zip(r.iter()) {
            if coef == 0.0 {
                continue;
            }
            for s in 0..d {
                let (t, ph) = p.apply_to_basis(s);
                rho[(t, s)] += ph * (coef * scale);
            }
        }
        rho
    }

    fn project(&self, sum: &PauliSum, col: usize, m: &mut DMatrix<f64>) -> Result<()> {
        for (p, c) in sum.iter() {
            if c.norm() == 0.0 {
                continue;
            }
            let row = self
                .index_of(*p)
                .ok_or_else(|| Error::Unphysical("superoperator leaves the parity-even sector".into()))?;
            if c.im.abs() > IMAG_TOL {
                return Err(Error::Unphysical(format!("non-real Pauli transfer element {c}")));
            }
            m[(row, col)] += c.re;
        }
        Ok(())
    }
}

/// Real linear map on the Pauli coordinates of the even sector.
#[derive(Debug, Clone)]
pub struct Superoperator {
    sector: Arc<EvenSector>,
    matrix: DMatrix<f64>,
}

impl Superoperator {
    pub fn from_parts(sector: Arc<EvenSector>, matrix: DMatrix<f64>) -> Result<Self> {
        let d = sector.dim();
        if matrix.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: format!("{d}x{d}"),
                got: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        Ok(Self { sector, matrix })
    }

    pub fn sector(&self) -> &Arc<EvenSector> {
        &self.sector
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Acts on the parity-even part of `rho`.
    pub fn apply(&self, rho: &CMat) -> CMat {
        self.sector.density(&(&self.matrix * self.sector.coordinates(rho)))
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &Superoperator) -> Superoperator {
        Superoperator {
            sector: self.sector.clone(),
            matrix: &self.matrix * &first.matrix,
        }
    }

    /// `exp(tau L)` for a generator `L`.
    pub fn exp(&self, tau: f64) -> Result<Superoperator> {
        Ok(Superoperator {
            sector: self.sector.clone(),
            matrix: matrix_exp(&(&self.matrix * tau))?,
        })
    }

    /// Deviation of the trace row from the value expected of a generator
    /// (`generator = true`, row 0 vanishes) or of a map (row 0 is `e_0`).
    pub fn trace_defect(&self, generator: bool) -> f64 {
        let target = if generator { 0.0 } else { 1.0 };
        (0..self.dim())
            .map(|j| (self.matrix[(0, j)] - if j == 0 { target } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }
}

/// Lindblad generator of the chain; `include_field` selects `H` or `H_0`.
pub fn generator(params: &ChainParams, range: RangeSpec, include_field: bool) -> Result<Superoperator> {
    let sector = Arc::new(EvenSector::new(params.n_sites)?);
    let h: Vec<(PauliString, Complex64)> = hamiltonian_terms(params, range, include_field)?
        .iter()
        .map(|(p, c)| (*p, *c))
        .collect();
    let jumps = jump_terms(params)?;
    let adjoints: Vec<PauliSum> = jumps.iter().map(PauliSum::adjoint).collect();
    let mut ltl = PauliSum::new();
    for (l, ld) in jumps.iter().zip(&adjoints) {
        ltl.add_sum(&ld.mul(l), Complex64::new(1.0, 0.0));
    }
    let d = sector.dim();
    let mut m = DMatrix::zeros(d, d);
    for (col, &p) in sector.strings().iter().enumerate() {
        let ps = PauliSum::from_term(p, Complex64::new(1.0, 0.0));
        let mut out = PauliSum::new();
        for &(q, hq) in &h {
            if !q.commutes_with(p) {
                let (k, r) = q.times(p);
                out.add(r, Complex64::new(0.0, -2.0) * hq * i_pow(k));
            }
        }
        for (l, ld) in jumps.iter().zip(&adjoints) {
            out.add_sum(&l.mul(&ps).mul(ld), Complex64::new(2.0, 0.0));
        }
        out.add_sum(&ltl.mul(&ps), Complex64::new(-1.0, 0.0));
        out.add_sum(&ps.mul(&ltl), Complex64::new(-1.0, 0.0));
        sector.project(&out, col, &mut m)?;
    }
    Ok(Superoperator { sector, matrix: m })
}

/// Conjugation `rho -> U rho U^+` with `U = exp(-i a sum_m Z_m)`.
///
/// Per site, `X -> cos 2a X + sin 2a Y` and `Y -> cos 2a Y - sin 2a X`.
pub fn kick_superoperator(sector: &Arc<EvenSector>, a: f64) -> Superoperator {
    let (s, c) = (2.0 * a).sin_cos();
    let d = sector.dim();
    let mut m = DMatrix::zeros(d, d);
    for (col, &p) in sector.strings().iter().enumerate() {
        let flips: Vec<u32> = (0..32).map(|b| 1u32 << b).filter(|b| p.x & b != 0).collect();
        for mask in 0u32..(1 << flips.len()) {
            let mut coef = 1.0;
            let mut z = p.z;
            for (i, &b) in flips.iter().enumerate() {
                if mask & (1 << i) == 0 {
                    coef *= c;
                } else {
                    coef *= if p.z & b == 0 { s } else { -s };
                    z ^= b;
                }
            }
            let row = sector.index_of(PauliString { x: p.x, z }).expect("kick preserves X support");
            m[(row, col)] += coef;
        }
    }
    Superoperator {
        sector: sector.clone(),
        matrix: m,
    }
}

/// One period of the kicked chain, ordered per `order`.
pub fn one_period_map(params: &ChainParams, kick: &KickParams, range: RangeSpec, order: KickOrder) -> Result<Superoperator> {
    let kick = KickParams::new(kick.a, kick.tau)?;
    let free = generator(params, range, false)?.exp(kick.tau)?;
    let k = kick_superoperator(free.sector(), fold_kick_strength(kick.a));
    Ok(match order {
        KickOrder::FreeThenKick => k.compose(&free),
        KickOrder::KickThenFree => free.compose(&k),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::operators::{build_hamiltonian_full, lindblad_apply};

    fn random_state(n: usize, seed: u64) -> CMat {
        let d = 1usize << n;
        let mut x = seed;
        let mut next = move || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = CMat::from_fn(d, d, |_, _| Complex64::new(next(), next()));
        let rho = &a * a.adjoint();
        let t = rho.trace();
        rho / t
    }

    #[test]
    fn sector_sizes_and_identity_first() {
        let s = EvenSector::new(3).unwrap();
        assert_eq!(s.dim(), 32);
        assert_eq!(s.strings()[0], PauliString::IDENTITY);
        assert!(EvenSector::new(7).is_err());
    }

    #[test]
    fn generator_matches_dense_master_equation() {
        let p = ChainParams::new(3, 0.4, 0.6).unwrap();
        let range = RangeSpec::PowerLaw { alpha: 1.5 };
        let l = generator(&p, range, true).unwrap();
        assert!(l.trace_defect(true) < 1e-14);
        let h = build_hamiltonian_full(&p, range, true).unwrap();
        let rho = random_state(3, 7);
        let s = l.sector().clone();
        let even = s.density(&s.coordinates(&rho));
        let direct = lindblad_apply(&even, &h, &p).unwrap();
        assert!((l.apply(&rho) - direct).camax() < 1e-13);
    }

    #[test]
    fn kick_matches_unitary_conjugation() {
        let n = 3;
        let s = Arc::new(EvenSector::new(n).unwrap());
        let a = 0.37;
        let d = 1usize << n;
        let u = CMat::from_fn(d, d, |i, j| {
            if i == j {
                let m = n as f64 - 2.0 * i.count_ones() as f64;
                Complex64::from_polar(1.0, -a * m)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let rho = s.density(&s.coordinates(&random_state(n, 3)));
        let k = kick_superoperator(&s, a);
        assert!((k.apply(&rho) - &u * &rho * u.adjoint()).camax() < 1e-14);
        let kt = k.matrix().transpose() * k.matrix();
        assert!((kt - DMatrix::identity(s.dim(), s.dim())).amax() < 1e-13);
    }

    #[test]
    fn vanishing_period_and_kick_is_identity() {
        let p = ChainParams::new(2, 0.3, 0.0).unwrap();
        let m = one_period_map(
            &p,
            &KickParams::new(0.0, 1e-12).unwrap(),
            RangeSpec::NearestNeighbor,
            KickOrder::FreeThenKick,
        )
        .unwrap();
        assert!((m.matrix() - DMatrix::identity(m.dim(), m.dim())).amax() < 1e-10);
        assert!(m.trace_defect(false) < 1e-14);
    }
}
