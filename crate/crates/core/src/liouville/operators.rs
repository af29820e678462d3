use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::MAX_HAMILTONIAN_SITES;
use crate::error::{Error, Result};
use crate::model::{ChainParams, CorrelationMatrix};
use crate::pauli::{Axis, PauliString, PauliSum};

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest admissible eigenvalue of a returned state.
pub const POSITIVITY_TOL: f64 = -1e-8;

type CMat = DMatrix<Complex64>;

const fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Range of the exchange couplings.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RangeSpec {
    #[default]
    NearestNeighbor,
    /// `J_jk = J_{j,j+1} |j - k|^-alpha` over the open chain.
    PowerLaw { alpha: f64 },
}

impl RangeSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RangeSpec::NearestNeighbor => Ok(()),
            RangeSpec::PowerLaw { alpha } if alpha.is_finite() && alpha > 0.0 => Ok(()),
            RangeSpec::PowerLaw { alpha } => Err(Error::invalid("alpha", format!("decay exponent must be > 0, got {alpha}"))),
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            RangeSpec::NearestNeighbor => None,
            RangeSpec::PowerLaw { alpha } => Some(alpha),
        }
    }
}

/// Exchange couplings `J^x_jk`, `J^y_jk` (symmetric, zero diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrices {
    pub jx: DMatrix<f64>,
    pub jy: DMatrix<f64>,
}

pub fn couplings(params: &ChainParams, range: RangeSpec) -> Result<CouplingMatrices> {
    params.validate()?;
    range.validate()?;
    let n = params.n_sites;
    let (nn_x, nn_y) = ((1.0 + params.gamma) / 2.0, (1.0 - params.gamma) / 2.0);
    let profile = |d: usize| -> f64 {
        match range {
            RangeSpec::NearestNeighbor => {
                if d == 1 {
                    1.0
                } else {
                    0.0
                }
            }
            RangeSpec::PowerLaw { alpha } => (d as f64).powf(-alpha),
        }
    };
    let mut jx = DMatrix::zeros(n, n);
    let mut jy = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            if j != k {
                let f = profile(j.abs_diff(k));
                jx[(j, k)] = nn_x * f;
                jy[(j, k)] = nn_y * f;
            }
        }
    }
    Ok(CouplingMatrices { jx, jy })
}

/// `H = sum_{j<k} J^x_jk X_j X_k + J^y_jk Y_j Y_k (+ h sum_m Z_m)` as a Pauli sum.
pub fn hamiltonian_terms(params: &ChainParams, range: RangeSpec, include_field: bool) -> Result<PauliSum> {
    let j = couplings(params, range)?;
    let n = params.n_sites;
    if n > 32 {
        return Err(Error::MemoryGuard {
            n,
            limit: 32,
            what: "Pauli-string encoding",
        });
    }
    let mut h = PauliSum::new();
    for a in 0..n {
        for b in a + 1..n {
            if j.jx[(a, b)] != 0.0 {
                h.add(PauliString::pair(n, a, Axis::X, b, Axis::X), c64(j.jx[(a, b)], 0.0));
            }
            if j.jy[(a, b)] != 0.0 {
                h.add(PauliString::pair(n, a, Axis::Y, b, Axis::Y), c64(j.jy[(a, b)], 0.0));
            }
        }
    }
    if include_field && params.h != 0.0 {
        for m in 0..n {
            h.add(PauliString::single(n, m, Axis::Z), c64(params.h, 0.0));
        }
    }
    Ok(h)
}

pub fn build_hamiltonian_full(params: &ChainParams, range: RangeSpec, include_field: bool) -> Result<CMat> {
    if params.n_sites > MAX_HAMILTONIAN_SITES {
        return Err(Error::MemoryGuard {
            n: params.n_sites,
            limit: MAX_HAMILTONIAN_SITES,
            what: "dense Hamiltonian",
        });
    }
    Ok(hamiltonian_terms(params, range, include_field)?.to_dense(params.n_sites))
}

fn ladder(n: usize, site: usize, raising: bool, rate: f64) -> PauliSum {
    let s = rate.sqrt() / 2.0;
    let mut l = PauliSum::from_term(PauliString::single(n, site, Axis::X), c64(s, 0.0));
    l.add(PauliString::single(n, site, Axis::Y), c64(0.0, if raising { s } else { -s }));
    l
}

/// Boundary jump operators with nonzero rate, in the order
/// `sqrt(G1L) s+_1, sqrt(G2L) s-_1, sqrt(G1R) s+_N, sqrt(G2R) s-_N`.
pub fn jump_terms(params: &ChainParams) -> Result<Vec<PauliSum>> {
    params.validate()?;
    let n = params.n_sites;
    let b = params.bath;
    let spec = [
        (0, true, b.gamma_1l),
        (0, false, b.gamma_2l),
        (n - 1, true, b.gamma_1r),
        (n - 1, false, b.gamma_2r),
    ];
    Ok(spec
        .iter()
        .filter(|s| s.2 > 0.0)
        .map(|&(site, up, rate)| ladder(n, site, up, rate))
        .collect())
}

pub fn jump_operators(params: &ChainParams) -> Result<Vec<CMat>> {
    if params.n_sites > MAX_HAMILTONIAN_SITES {
        return Err(Error::MemoryGuard {
            n: params.n_sites,
            limit: MAX_HAMILTONIAN_SITES,
            what: "dense jump operators",
        });
    }
    Ok(jump_terms(params)?.iter().map(|l| l.to_dense(params.n_sites)).collect())
}

/// Right-hand side of the master equation with dense operators.
pub fn lindblad_apply(rho: &CMat, h_full: &CMat, params: &ChainParams) -> Result<CMat> {
    lindblad_apply_with(rho, h_full, &jump_operators(params)?)
}

pub fn lindblad_apply_with(rho: &CMat, h_full: &CMat, jumps: &[CMat]) -> Result<CMat> {
    let d = rho.nrows();
    for m in std::iter::once(rho).chain(std::iter::once(h_full)).chain(jumps.iter()) {
        if m.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: format!("{d}x{d}"),
                got: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
    }
    let mut out = (h_full * rho - rho * h_full) * c64(0.0, -1.0);
    for l in jumps {
        let ld = l.adjoint();
        let ltl = &ld * l;
        out += (l * rho * &ld) * c64(2.0, 0.0) - &ltl * rho - rho * &ltl;
    }
    Ok(out)
}

/// A validated `2^N x 2^N` density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: CMat,
    n_sites: usize,
}

fn sites_of_dim(d: usize) -> Result<usize> {
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::DimensionMismatch {
            expected: "power-of-two dimension".into(),
            got: d.to_string(),
        });
    }
    Ok(d.trailing_zeros() as usize)
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(rho: CMat) -> Result<Self> {
        let dm = Self::unchecked(rho)?;
        dm.check_physical()?;
        Ok(dm)
    }

    pub(crate) fn unchecked(rho: CMat) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::NotSquare {
                rows: rho.nrows(),
                cols: rho.ncols(),
            });
        }
        let n_sites = sites_of_dim(rho.nrows())?;
        Ok(Self { rho, n_sites })
    }

    pub fn maximally_mixed(n_sites: usize) -> Self {
        let d = 1usize << n_sites;
        Self {
            rho: CMat::identity(d, d) / c64(d as f64, 0.0),
            n_sites,
        }
    }

    /// `|psi><psi|` for a normalised state vector.
    pub fn from_pure(psi: &DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::invalid("psi", "zero vector"));
        }
        let v = psi / c64(norm, 0.0);
        Self::new(&v * v.adjoint())
    }

    pub fn matrix(&self) -> &CMat {
        &self.rho
    }

    pub fn into_inner(self) -> CMat {
        self.rho
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).camax()
    }

    pub fn trace_defect(&self) -> f64 {
        (self.rho.trace() - c64(1.0, 0.0)).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.rho + self.rho.adjoint()) * c64(0.5, 0.0);
        herm.symmetric_eigenvalues().min()
    }

    pub fn check_physical(&self) -> Result<()> {
        let h = self.hermiticity_defect();
        if h > HERMITICITY_TOL {
            return Err(Error::Unphysical(format!("hermiticity defect {h:e}")));
        }
        let t = self.trace_defect();
        if t > TRACE_TOL {
            return Err(Error::Unphysical(format!("trace defect {t:e}")));
        }
        let e = self.min_eigenvalue();
        if e < POSITIVITY_TOL {
            return Err(Error::Unphysical(format!("negative eigenvalue {e:e}")));
        }
        Ok(())
    }

    pub fn expectation(&self, p: PauliString) -> Complex64 {
        p.expectation(&self.rho)
    }
}

/// Two-site spin correlators `C^ab_jk = tr(s^a_j s^b_k rho)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCorrelators {
    pub xx: DMatrix<f64>,
    pub xy: DMatrix<f64>,
    pub yy: DMatrix<f64>,
}

/// Imaginary parts (nonzero only on the diagonal of `xy`) are dropped.
pub fn local_correlators(rho: &DensityMatrix) -> LocalCorrelators {
    let n = rho.n_sites();
    let corr = |a: Axis, b: Axis, j: usize, k: usize| -> f64 {
        if j == k {
            let (ph, p) = PauliString::single(n, j, a).times(PauliString::single(n, k, b));
            (crate::pauli::i_pow(ph) * rho.expectation(p)).re
        } else {
            rho.expectation(PauliString::pair(n, j, a, k, b)).re
        }
    };
    LocalCorrelators {
        xx: DMatrix::from_fn(n, n, |j, k| corr(Axis::X, Axis::X, j, k)),
        xy: DMatrix::from_fn(n, n, |j, k| corr(Axis::X, Axis::Y, j, k)),
        yy: DMatrix::from_fn(n, n, |j, k| corr(Axis::Y, Axis::Y, j, k)),
    }
}

/// Which site pairs enter the local residual correlator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LocalPairs {
    /// `j < k` with the three listed correlators.
    #[default]
    UpperTriangle,
    /// Both `(j, k)` and `(k, j)`, so that `C^yx_jk = C^xy_kj` also enters.
    BothOrders,
}

/// Mean of `(|C^xx| + |C^xy| + |C^yy|) / 3` over site pairs with `|j - k| >= N/2`.
pub fn local_residual(c: &LocalCorrelators, pairs: LocalPairs) -> Result<f64> {
    let n = c.xx.nrows();
    for m in [&c.xx, &c.xy, &c.yy] {
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: format!("{n}x{n}"),
                got: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for j in 0..n {
        for k in 0..n {
            let admitted = match pairs {
                LocalPairs::UpperTriangle => j < k,
                LocalPairs::BothOrders => j != k,
            };
            if admitted && 2 * j.abs_diff(k) >= n {
                sum += (c.xx[(j, k)].abs() + c.xy[(j, k)].abs() + c.yy[(j, k)].abs()) / 3.0;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyAdmittedSet { n_sites: n });
    }
    Ok(sum / count as f64)
}

/// `C_jk = tr(w_j w_k rho) - delta_jk` with the full Jordan-Wigner strings.
pub fn majorana_correlations_full(rho: &DensityMatrix) -> Result<CorrelationMatrix> {
    let n = rho.n_sites();
    let dim = 2 * n;
    let w: Vec<PauliString> = (0..dim).map(|p| PauliString::majorana(n, p)).collect();
    let mut c = CMat::zeros(dim, dim);
    for j in 0..dim {
        for k in 0..dim {
            if j != k {
                let (ph, p) = w[j].times(w[k]);
                c[(j, k)] = crate::pauli::i_pow(ph) * rho.expectation(p);
            }
        }
    }
    let full = CorrelationMatrix::from_matrix(c)?;
    let v = full.invariant_violation();
    if v > HERMITICITY_TOL {
        return Err(Error::Unphysical(format!(
            "Majorana correlations violate antisymmetry/imaginarity by {v:e}"
        )));
    }
    CorrelationMatrix::from_imaginary_part(&full.matrix().map(|z| z.im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BathRates;

    #[test]
    fn ising_point_two_sites() {
        let p = ChainParams::new(2, 1.0, 0.0).unwrap();
        let h = build_hamiltonian_full(&p, RangeSpec::NearestNeighbor, true).unwrap();
        assert_eq!(h, PauliString::pair(2, 0, Axis::X, 1, Axis::X).to_dense(2));
    }

    #[test]
    fn power_law_coupling_value() {
        let p = ChainParams::new(3, 0.1, 0.0).unwrap();
        let j = couplings(&p, RangeSpec::PowerLaw { alpha: 2.0 }).unwrap();
        assert!((j.jx[(0, 2)] - 0.1375).abs() < 1e-15);
        assert_eq!(j.jx[(0, 1)], 0.55);
        assert_eq!(j.jy[(1, 2)], 0.45);
        assert!(couplings(&p, RangeSpec::PowerLaw { alpha: 0.0 }).is_err());
    }

    #[test]
    fn single_pump_on_down_state() {
        let bath = BathRates::new(0.5, 0.0, 0.0, 0.0).unwrap();
        let p = ChainParams::with_bath(1, 0.0, 0.0, bath).unwrap();
        let h = CMat::zeros(2, 2);
        let mut rho = CMat::zeros(2, 2);
        rho[(1, 1)] = c64(1.0, 0.0);
        let d = lindblad_apply(&rho, &h, &p).unwrap();
        assert!((d[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!((d[(1, 1)] + c64(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn dissipator_vanishes_without_rates() {
        let p = ChainParams::with_bath(2, 0.5, 0.0, BathRates::zero()).unwrap();
        let rho = DMatrix::from_fn(4, 4, |i, j| c64((i + j) as f64, i as f64 - j as f64));
        let d = lindblad_apply(&rho, &CMat::zeros(4, 4), &p).unwrap();
        assert_eq!(d.camax(), 0.0);
    }

    #[test]
    fn correlators_of_simple_states() {
        let mixed = DensityMatrix::maximally_mixed(3);
        let c = local_correlators(&mixed);
        for m in [&c.xx, &c.xy, &c.yy] {
            for j in 0..3 {
                for k in 0..3 {
                    if j != k {
                        assert_eq!(m[(j, k)], 0.0);
                    }
                }
            }
        }
        assert_eq!(majorana_correlations_full(&mixed).unwrap().matrix().camax(), 0.0);

        let mut up = DVector::zeros(2);
        up[0] = c64(1.0, 0.0);
        let c = majorana_correlations_full(&DensityMatrix::from_pure(&up).unwrap()).unwrap();
        assert!((c.matrix()[(0, 1)] - c64(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn local_residual_constant_mean() {
        let n = 4;
        let m = DMatrix::from_element(n, n, -0.2);
        let c = LocalCorrelators {
            xx: m.clone(),
            xy: m.clone(),
            yy: m,
        };
        assert!((local_residual(&c, LocalPairs::UpperTriangle).unwrap() - 0.2).abs() < 1e-15);
        assert!((local_residual(&c, LocalPairs::BothOrders).unwrap() - 0.2).abs() < 1e-15);
        let one = DMatrix::zeros(1, 1);
        let c = LocalCorrelators {
            xx: one.clone(),
            xy: one.clone(),
            yy: one,
        };
        assert!(matches!(
            local_residual(&c, LocalPairs::UpperTriangle),
            Err(Error::EmptyAdmittedSet { .. })
        ));
    }

    #[test]
    fn unphysical_matrices_rejected() {
        let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![c64(1.5, 0.0), c64(-0.5, 0.0)]));
        assert!(matches!(DensityMatrix::new(bad), Err(Error::Unphysical(_))));
        assert!(DensityMatrix::new(CMat::identity(3, 3)).is_err());
    }
}
