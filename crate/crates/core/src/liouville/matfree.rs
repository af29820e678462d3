//! Matrix-free Lindblad generator acting on `2^N x 2^N` density matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::operators::{hamiltonian_terms, jump_terms, RangeSpec};
use super::MAX_FULL_SITES;
use crate::error::{Error, Result};
use crate::model::ChainParams;
use crate::pauli::{PauliString, PauliSum};

type CMat = DMatrix<Complex64>;
type Terms = Vec<(PauliString, Complex64)>;

fn terms(s: &PauliSum) -> Terms {
    s.iter().map(|(p, c)| (*p, *c)).collect()
}

/// `out += c P rho`.
fn add_left(out: &mut CMat, p: PauliString, c: Complex64, rho: &CMat) {
    let d = rho.nrows();
    let phases: Vec<(usize, Complex64)> = (0..d).map(|s| p.apply_to_basis(s)).collect();
    for u in 0..d {
        let src = rho.column(u);
        let mut dst = out.column_mut(u);
        for (s, &(t, ph)) in phases.iter().enumerate() {
            dst[t] += c * ph * src[s];
        }
    }
}

/// `out += c rho P`.
fn add_right(out: &mut CMat, p: PauliString, c: Complex64, rho: &CMat) {
    let d = rho.nrows();
    for t in 0..d {
        // (rho P)[u, t] = rho[u, t ^ x] * phase(t)
        let (s, ph) = p.apply_to_basis(t);
        out.column_mut(t).axpy(c * ph, &rho.column(s), Complex64::new(1.0, 0.0));
    }
}

/// Lindblad generator applied through Pauli-string actions.
#[derive(Debug, Clone)]
pub struct LiouvillianOp {
    n_sites: usize,
    h: Terms,
    jumps: Vec<Terms>,
    ltl: Terms,
    norm_bound: f64,
}

impl LiouvillianOp {
    pub fn new(params: &ChainParams, range: RangeSpec, include_field: bool) -> Result<Self> {
        if params.n_sites > MAX_FULL_SITES {
            return Err(Error::MemoryGuard {
                n: params.n_sites,
                limit: MAX_FULL_SITES,
                what: "master-equation solver",
            });
        }
        let h = hamiltonian_terms(params, range, include_field)?;
        let jumps = jump_terms(params)?;
        let mut ltl = PauliSum::new();
        for l in &jumps {
            ltl.add_sum(&l.adjoint().mul(l), Complex64::new(1.0, 0.0));
        }
        let h_norm: f64 = h.iter().map(|(_, c)| c.norm()).sum();
        let l_norm: f64 = jumps
            .iter()
            .map(|l| l.iter().map(|(_, c)| c.norm()).sum::<f64>().powi(2))
            .sum();
        Ok(Self {
            n_sites: params.n_sites,
            h: terms(&h),
            jumps: jumps.iter().map(terms).collect(),
            ltl: terms(&ltl),
            norm_bound: 2.0 * h_norm + 4.0 * l_norm,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Upper bound on the operator norm of the generator.
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let d = rho.nrows();
        let mut out = CMat::zeros(d, d);
        let minus_i = Complex64::new(0.0, -1.0);
        for &(p, c) in &self.h {
            add_left(&mut out, p, minus_i * c, rho);
            add_right(&mut out, p, -minus_i * c, rho);
        }
        for l in &self.jumps {
            let mut lrho = CMat::zeros(d, d);
            for &(p, c) in l {
                add_left(&mut lrho, p, c, rho);
            }
            for &(p, c) in l {
                add_right(&mut out, p, 2.0 * c.conj(), &lrho);
            }
        }
        for &(p, c) in &self.ltl {
            add_left(&mut out, p, -c, rho);
            add_right(&mut out, p, -c, rho);
        }
        out
    }

    /// Classical fourth-order Runge-Kutta step.
    pub fn rk4_step(&self, rho: &CMat, dt: f64) -> CMat {
        let half = Complex64::new(dt / 2.0, 0.0);
        let full = Complex64::new(dt, 0.0);
        let k1 = self.apply(rho);
        let k2 = self.apply(&(rho + &k1 * half));
        let k3 = self.apply(&(rho + &k2 * half));
        let k4 = self.apply(&(rho + &k3 * full));
        rho + (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(dt / 6.0, 0.0)
    }

    /// Step size used by [`Self::propagate`] and the long-time solver.
    pub fn default_step(&self) -> f64 {
        (0.25 / self.norm_bound.max(1e-12)).min(0.05)
    }

    /// `exp(t L) rho` by fixed-step RK4.
    pub fn propagate(&self, rho: &CMat, t: f64) -> CMat {
        let steps = (t / self.default_step()).ceil().max(1.0) as usize;
        let dt = t / steps as f64;
        let mut r = rho.clone();
        for _ in 0..steps {
            r = self.rk4_step(&r, dt);
        }
        r
    }
}

/// `rho -> U rho U^+` with `U = exp(-i a sum_m Z_m)`, diagonal in the computational basis.
pub fn apply_kick(rho: &CMat, n_sites: usize, a: f64) -> CMat {
    let m = |s: usize| n_sites as f64 - 2.0 * s.count_ones() as f64;
    CMat::from_fn(rho.nrows(), rho.ncols(), |s, t| {
        rho[(s, t)] * Complex64::from_polar(1.0, -a * (m(s) - m(t)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::operators::{build_hamiltonian_full, lindblad_apply};

    #[test]
    fn matches_dense_master_equation() {
        let p = ChainParams::new(3, 0.2, -0.4).unwrap();
        for range in [RangeSpec::NearestNeighbor, RangeSpec::PowerLaw { alpha: 2.0 }] {
            let op = LiouvillianOp::new(&p, range, true).unwrap();
            let h = build_hamiltonian_full(&p, range, true).unwrap();
            let rho = CMat::from_fn(8, 8, |i, j| {
                Complex64::new((i * 8 + j) as f64 * 0.01, i as f64 * 0.02 - j as f64 * 0.03)
            });
            let direct = lindblad_apply(&rho, &h, &p).unwrap();
            assert!((op.apply(&rho) - direct).camax() < 1e-13);
        }
    }
}
