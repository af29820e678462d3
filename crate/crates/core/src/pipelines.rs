//! End-to-end covariance computations for the static and kicked chains.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::lyap::{self, LyapunovMethod, PeriodPropagator};
use crate::model::{
    assemble_structure, build_bath_vectors, build_xy_form, residual_correlation, ChainParams, CorrelationMatrix,
    DistanceConvention, KickParams, StructureMatrices,
};
use crate::scalar::{modulus, Real};

/// Where the period map is anchored relative to the kick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KickOrder {
    /// Free evolution for `tau`, then the kick: the fixed point is the state
    /// immediately after a kick.
    #[default]
    FreeThenKick,
    /// Kick, then free evolution: the fixed point is the state just before a kick.
    KickThenFree,
}

/// Orthogonal action of `U = exp(-i a sum_m Z_m)` on the Majorana vector,
/// oriented so that `rho -> U rho U^+` maps `C -> K C K^T`
/// (that is, `U^+ w_j U = sum_l K_jl w_l`).
#[derive(Debug, Clone, PartialEq)]
pub struct KickMap<T = f64> {
    pub k: DMatrix<T>,
}

impl<T: Real> KickMap<T> {
    pub fn apply(&self, c: &CorrelationMatrix<T>) -> Result<CorrelationMatrix<T>> {
        let k = self.k.map(|v| Complex::new(v, T::zero()));
        CorrelationMatrix::from_matrix(&k * c.matrix() * k.transpose())
    }

    /// `max |K K^T - I|`.
    pub fn orthogonality_defect(&self) -> T {
        let n = self.k.nrows();
        (&self.k * self.k.transpose() - DMatrix::identity(n, n)).amax()
    }
}

pub fn kick_map<T: Real>(n_sites: usize, a: T) -> KickMap<T> {
    let two_a = a + a;
    let (s, c) = (two_a.sin(), two_a.cos());
    let mut k = DMatrix::zeros(2 * n_sites, 2 * n_sites);
    for i in 0..n_sites {
        let (p, q) = (2 * i, 2 * i + 1);
        k[(p, p)] = c;
        k[(p, q)] = -s;
        k[(q, p)] = s;
        k[(q, q)] = c;
    }
    KickMap { k }
}

fn structure<T: Real>(params: &ChainParams<T>, include_field: bool) -> Result<StructureMatrices<T>> {
    let form = build_xy_form(params, include_field)?;
    let baths = build_bath_vectors(params)?;
    assemble_structure(&form, &baths)
}

fn require_dissipation<T: Real>(params: &ChainParams<T>) -> Result<()> {
    if !params.bath.is_dissipative() {
        return Err(Error::NoUniqueNess {
            re: 0.0,
            im: 0.0,
            tol: lyap::STABILITY_TOL,
        });
    }
    Ok(())
}

/// A covariance-path solution with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSolution<T = f64> {
    pub c: CorrelationMatrix<T>,
    /// Lyapunov residual of the returned (cleaned) matrix.
    pub residual: T,
    /// `min Re lambda(X)` for the static chain, `1 - max |lambda(Q)|` for the kicked one.
    pub gap: T,
}

/// Non-equilibrium steady state of the static chain (field included).
pub fn static_ness<T: Real>(params: &ChainParams<T>) -> Result<CorrelationMatrix<T>> {
    static_ness_with(params, LyapunovMethod::default())
}

pub fn static_ness_with<T: Real>(params: &ChainParams<T>, method: LyapunovMethod) -> Result<CorrelationMatrix<T>> {
    require_dissipation(params)?;
    let s = structure(params, true)?;
    lyap::solve_continuous_lyapunov_with(&s.x, &s.y, method)
}

pub fn static_ness_report<T: Real>(params: &ChainParams<T>, method: LyapunovMethod) -> Result<CovarianceSolution<T>> {
    require_dissipation(params)?;
    let s = structure(params, true)?;
    let c = lyap::solve_continuous_lyapunov_with(&s.x, &s.y, method)?;
    let r = s.y.map(|v| Complex::new(T::zero(), v));
    let residual = lyap::continuous_residual(&s.x, c.matrix(), &r);
    let gap = lyap::eigenvalues(&s.x)?
        .iter()
        .map(|z| z.re)
        .fold(T::max_value().unwrap(), |a, b| a.min(b));
    Ok(CovarianceSolution { c, residual, gap })
}

/// Knobs of the kicked covariance pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FloquetOptions {
    pub order: KickOrder,
    pub method: LyapunovMethod,
}

/// Floquet fixed point of the kicked chain; `params.h` is ignored.
pub fn kicked_floquet<T: Real>(params: &ChainParams<T>, kick: &KickParams<T>) -> Result<CorrelationMatrix<T>> {
    kicked_floquet_with(params, kick, FloquetOptions::default())
}

pub fn kicked_floquet_with<T: Real>(
    params: &ChainParams<T>,
    kick: &KickParams<T>,
    opts: FloquetOptions,
) -> Result<CorrelationMatrix<T>> {
    Ok(kicked_floquet_report(params, kick, opts)?.c)
}

pub fn kicked_floquet_report<T: Real>(
    params: &ChainParams<T>,
    kick: &KickParams<T>,
    opts: FloquetOptions,
) -> Result<CovarianceSolution<T>> {
    require_dissipation(params)?;
    let kick = KickParams::new(kick.a, kick.tau)?;
    let s = structure(params, false)?;
    let free = lyap::propagate_period(&s.x, &s.y, kick.tau)?;
    let km = kick_map(params.n_sites, kick.folded_a());
    let period = compose_period(&free, &km, opts.order);
    floquet_fixed_point(&period, opts.method)
}

/// Solves `Q C Q^T - C = i P Q^T` for a composed period map.
pub fn floquet_fixed_point<T: Real>(period: &PeriodPropagator<T>, method: LyapunovMethod) -> Result<CovarianceSolution<T>> {
    let r = (&period.p * period.q.transpose()).map(|v| Complex::new(T::zero(), v));
    let raw = lyap::solve_discrete_lyapunov_with(&period.q, &r, method)?;
    let c = CorrelationMatrix::from_imaginary_part(&raw.matrix().map(|v| v.im))?;
    let residual = lyap::discrete_residual(&period.q, c.matrix(), &r);
    if residual > T::lit(lyap::RESIDUAL_TOL) {
        return Err(Error::ResidualTooLarge {
            context: "discrete Lyapunov cleanup",
            residual: residual.to_f64_lossy(),
            tol: lyap::RESIDUAL_TOL,
        });
    }
    let radius = lyap::eigenvalues(&period.q)?
        .iter()
        .map(|z| modulus(*z))
        .fold(T::zero(), |a, b| a.max(b));
    Ok(CovarianceSolution {
        c,
        residual,
        gap: T::one() - radius,
    })
}

/// Period map including the kick, in the `(Q, P)` parametrisation.
pub fn compose_period<T: Real>(free: &PeriodPropagator<T>, kick: &KickMap<T>, order: KickOrder) -> PeriodPropagator<T> {
    let (q, p) = match order {
        KickOrder::FreeThenKick => (&kick.k * &free.q, &kick.k * &free.p),
        KickOrder::KickThenFree => (&free.q * &kick.k, &free.p * &kick.k),
    };
    PeriodPropagator {
        q,
        p,
        q_condition: free.q_condition,
    }
}

/// Convenience: residual correlator of the static NESS.
pub fn static_residual<T: Real>(params: &ChainParams<T>, convention: DistanceConvention) -> Result<T> {
    residual_correlation(&static_ness(params)?, params.n_sites, convention)
}

/// Convenience: residual correlator of the kicked Floquet state.
pub fn kicked_residual<T: Real>(params: &ChainParams<T>, kick: &KickParams<T>, convention: DistanceConvention) -> Result<T> {
    residual_correlation(&kicked_floquet(params, kick)?, params.n_sites, convention)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BathRates;

    #[test]
    fn zero_kick_is_identity() {
        let k = kick_map(3, 0.0_f64);
        assert_eq!(k.k, DMatrix::identity(6, 6));
    }

    #[test]
    fn kick_map_invariants() {
        for a in [0.1, 0.5, 1.25, 2.9] {
            let k = kick_map(4, a);
            let shifted = kick_map(4, a + std::f64::consts::FRAC_PI_2);
            assert!(k.orthogonality_defect() < 1e-12);
            assert!((&k.k + &shifted.k).amax() < 1e-12);
        }
    }

    #[test]
    fn smallest_chain_is_physical() {
        let bath = BathRates::new(0.4, 0.4, 0.4, 0.4).unwrap();
        let p = ChainParams::with_bath(2, 0.0, 0.0, bath).unwrap();
        let c = static_ness(&p).unwrap();
        c.check_invariants(1e-10).unwrap();
        let s = structure(&p, true).unwrap();
        let r = s.y.map(|v| Complex::new(0.0, v));
        assert!(lyap::continuous_residual(&s.x, c.matrix(), &r) <= 1e-10);
    }

    #[test]
    fn no_dissipation_is_an_error() {
        let p = ChainParams::with_bath(4, 0.5, 0.75, BathRates::zero()).unwrap();
        assert!(matches!(static_ness(&p), Err(Error::NoUniqueNess { .. })));
        let k = KickParams::new(0.5, 0.4).unwrap();
        assert!(matches!(kicked_floquet(&p, &k), Err(Error::NoUniqueNess { .. })));
    }

    #[test]
    fn vanishing_kick_reproduces_static_state() {
        let p = ChainParams::new(5, 0.3, 0.0).unwrap();
        let ness = static_ness(&p).unwrap();
        for tau in [0.3, 1.1] {
            let c = kicked_floquet(&p, &KickParams::new(0.0, tau).unwrap()).unwrap();
            assert!(c.max_abs_diff(&ness) < 1e-8, "tau = {tau}");
        }
    }
}
