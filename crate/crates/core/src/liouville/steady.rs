//! Asymptotic states of the static and kicked chains on the full Hilbert space.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::matfree::{apply_kick, LiouvillianOp};
use super::operators::{DensityMatrix, RangeSpec};
use super::sector::{generator, kick_superoperator, EvenSector, Superoperator};
use super::{MAX_DENSE_SITES, MAX_FULL_SITES};
use crate::error::{Error, Result};
use crate::lyap::eigenvalues;
use crate::model::{fold_kick_strength, ChainParams, KickParams};
use crate::pipelines::KickOrder;

type CMat = DMatrix<Complex64>;

/// Relative pivot size below which the constrained linear system is
/// treated as singular.
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolvePath {
    /// Dense for `N <= MAX_DENSE_SITES`, matrix-free above.
    #[default]
    Auto,
    Dense,
    MatrixFree,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullSolverOptions {
    pub order: KickOrder,
    pub path: SolvePath,
    /// Compute the spectral-gap diagnostic (dense path only; costs an eigensolve).
    pub compute_gap: bool,
    /// Bound on RK4 steps (static) or periods (Floquet) on the matrix-free path.
    pub max_iterations: usize,
    /// `||L rho||_max` target of the static state.
    pub static_tol: f64,
    /// Fixed-point residual target of the Floquet state.
    pub floquet_tol: f64,
}

impl Default for FullSolverOptions {
    fn default() -> Self {
        Self {
            order: KickOrder::default(),
            path: SolvePath::Auto,
            compute_gap: false,
            max_iterations: 2_000_000,
            static_tol: 1e-10,
            floquet_tol: 1e-9,
        }
    }
}

impl FullSolverOptions {
    fn dense(&self, n_sites: usize) -> Result<bool> {
        if n_sites > MAX_FULL_SITES {
            return Err(Error::MemoryGuard {
                n: n_sites,
                limit: MAX_FULL_SITES,
                what: "master-equation solver",
            });
        }
        match self.path {
            SolvePath::Auto => Ok(n_sites <= MAX_DENSE_SITES),
            SolvePath::Dense if n_sites > MAX_DENSE_SITES => Err(Error::MemoryGuard {
                n: n_sites,
                limit: MAX_DENSE_SITES,
                what: "dense superoperator",
            }),
            SolvePath::Dense => Ok(true),
            SolvePath::MatrixFree => Ok(false),
        }
    }
}

/// A solved asymptotic state with its diagnostics.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `||L rho||_max` (static) or `||M rho - rho||_max` (Floquet).
    pub residual: f64,
    /// Distance of the slowest decaying mode from the fixed point, when requested:
    /// `min |lambda|` over the nonzero generator spectrum, or `1 - |mu_2|` for a period map.
    pub gap: Option<f64>,
    pub dense: bool,
    pub iterations: usize,
}

fn require_dissipation(params: &ChainParams) -> Result<()> {
    if !params.bath.is_dissipative() {
        return Err(Error::NonUniqueSteadyState("all bath rates vanish".into()));
    }
    Ok(())
}

/// Solves `A r = e_0` where row 0 of `A` (identically zero for a trace-preserving
/// problem) is replaced by the normalisation `r_0 = 1`.
fn constrained_solve(mut a: DMatrix<f64>) -> Option<DVector<f64>> {
    let d = a.nrows();
    a.row_mut(0).fill(0.0);
    a[(0, 0)] = 1.0;
    let lu = a.lu();
    let u = lu.u();
    let diag = u.diagonal().abs();
    if diag.min() <= PIVOT_TOL * diag.max() {
        return None;
    }
    let mut rhs = DVector::zeros(d);
    rhs[0] = 1.0;
    lu.solve(&rhs).filter(|r| r.iter().all(|v| v.is_finite()))
}

fn sorted_moduli(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = eigenvalues(m)?.iter().map(|z| z.norm()).collect();
    v.sort_by(|a, b| a.total_cmp(b));
    Ok(v)
}

pub fn steady_state_static(params: &ChainParams, range: RangeSpec) -> Result<DensityMatrix> {
    Ok(steady_state_static_with(params, range, FullSolverOptions::default())?.rho)
}

pub fn steady_state_static_with(params: &ChainParams, range: RangeSpec, opts: FullSolverOptions) -> Result<SteadyState> {
    params.validate()?;
    range.validate()?;
    let dense = opts.dense(params.n_sites)?;
    require_dissipation(params)?;
    let op = LiouvillianOp::new(params, range, true)?;
    if dense {
        let l = generator(params, range, true)?;
        let r = constrained_solve(l.matrix().clone())
            .ok_or_else(|| Error::NonUniqueSteadyState("Liouvillian null space is degenerate".into()))?;
        let gap = if opts.compute_gap {
            let g = sorted_moduli(l.matrix())?[1];
            if g < PIVOT_TOL {
                return Err(Error::NonUniqueSteadyState(format!("second generator eigenvalue {g:e}")));
            }
            Some(g)
        } else {
            None
        };
        let rho = l.sector().density(&r);
        let residual = op.apply(&rho).camax();
        finish(rho, residual, opts.static_tol, gap, true, 0, "static steady state")
    } else {
        let d = 1usize << params.n_sites;
        let dt = op.default_step();
        let mut rho = CMat::identity(d, d) / Complex64::new(d as f64, 0.0);
        let check_every = 20;
        let mut steps = 0;
        loop {
            for _ in 0..check_every {
                rho = op.rk4_step(&rho, dt);
            }
            steps += check_every;
            let res = op.apply(&rho).camax();
            if res <= opts.static_tol {
                return finish(rho, res, opts.static_tol, None, false, steps, "static steady state");
            }
            if steps >= opts.max_iterations {
                return Err(Error::NotConverged {
                    iterations: steps,
                    last_change: res,
                });
            }
        }
    }
}

fn finish(
    rho: CMat,
    residual: f64,
    tol: f64,
    gap: Option<f64>,
    dense: bool,
    iterations: usize,
    context: &'static str,
) -> Result<SteadyState> {
    if residual.is_nan() || residual > tol {
        return Err(Error::ResidualTooLarge { context, residual, tol });
    }
    let rho = DensityMatrix::new(rho)?;
    Ok(SteadyState {
        rho,
        residual,
        gap,
        dense,
        iterations,
    })
}

/// Floquet fixed point of the kicked chain (`params.h` is ignored).
pub fn floquet_steady_full(params: &ChainParams, kick: &KickParams, range: RangeSpec) -> Result<DensityMatrix> {
    Ok(floquet_steady_full_with(params, kick, range, FullSolverOptions::default())?.rho)
}

pub fn floquet_steady_full_with(
    params: &ChainParams,
    kick: &KickParams,
    range: RangeSpec,
    opts: FullSolverOptions,
) -> Result<SteadyState> {
    let engine = FloquetEngine::new(params, range, opts)?;
    engine.state(kick)
}

/// Kicked-chain solver that reuses the free generator across grid points and
/// the free propagator across kick strengths sharing a period.
#[derive(Debug, Clone)]
pub struct FloquetEngine {
    params: ChainParams,
    opts: FullSolverOptions,
    op: LiouvillianOp,
    generator: Option<Superoperator>,
}

impl FloquetEngine {
    pub fn new(params: &ChainParams, range: RangeSpec, opts: FullSolverOptions) -> Result<Self> {
        params.validate()?;
        range.validate()?;
        let dense = opts.dense(params.n_sites)?;
        require_dissipation(params)?;
        let op = LiouvillianOp::new(params, range, false)?;
        let generator = if dense { Some(generator(params, range, false)?) } else { None };
        Ok(Self {
            params: *params,
            opts,
            op,
            generator,
        })
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn state(&self, kick: &KickParams) -> Result<SteadyState> {
        let kick = KickParams::new(kick.a, kick.tau)?;
        self.states_for_period(kick.tau, &[kick.a])?.pop().expect("one kick strength")
    }

    /// Fixed points for several kick strengths at one period. The outer
    /// `Result` fails only when the shared propagator cannot be built.
    pub fn states_for_period(&self, tau: f64, kick_strengths: &[f64]) -> Result<Vec<Result<SteadyState>>> {
        KickParams::new(0.0, tau)?;
        match &self.generator {
            Some(l) => {
                let e = l.exp(tau)?;
                Ok(kick_strengths.iter().map(|&a| self.dense_state(&e, a)).collect())
            }
            None => Ok(kick_strengths.iter().map(|&a| self.matrix_free_state(tau, a)).collect()),
        }
    }

    fn dense_state(&self, e: &Superoperator, a: f64) -> Result<SteadyState> {
        if !a.is_finite() {
            return Err(Error::invalid("a", "kick strength must be finite"));
        }
        let sector: &Arc<EvenSector> = e.sector();
        let k = kick_superoperator(sector, fold_kick_strength(a));
        let kt = k.matrix().transpose();
        // r = K E r  <=>  (E - K^T) r = 0, K orthogonal.
        let r = constrained_solve(e.matrix() - &kt).ok_or(Error::NonUniqueFloquet {
            re: 1.0,
            im: 0.0,
            tol: PIVOT_TOL,
        })?;
        let state = match self.opts.order {
            KickOrder::FreeThenKick => r,
            KickOrder::KickThenFree => &kt * r,
        };
        let image = match self.opts.order {
            KickOrder::FreeThenKick => k.matrix() * (e.matrix() * &state),
            KickOrder::KickThenFree => e.matrix() * (k.matrix() * &state),
        };
        let residual = sector.density(&(image - &state)).camax();
        let gap = if self.opts.compute_gap {
            let m = match self.opts.order {
                KickOrder::FreeThenKick => k.matrix() * e.matrix(),
                KickOrder::KickThenFree => e.matrix() * k.matrix(),
            };
            let moduli = sorted_moduli(&m)?;
            let g = 1.0 - moduli[moduli.len() - 2];
            if g < PIVOT_TOL {
                return Err(Error::NonUniqueFloquet {
                    re: moduli[moduli.len() - 2],
                    im: 0.0,
                    tol: PIVOT_TOL,
                });
            }
            Some(g)
        } else {
            None
        };
        finish(
            sector.density(&state),
            residual,
            self.opts.floquet_tol,
            gap,
            true,
            0,
            "Floquet state",
        )
    }

    fn period(&self, rho: &CMat, tau: f64, a: f64) -> CMat {
        let n = self.params.n_sites;
        match self.opts.order {
            KickOrder::FreeThenKick => apply_kick(&self.op.propagate(rho, tau), n, a),
            KickOrder::KickThenFree => self.op.propagate(&apply_kick(rho, n, a), tau),
        }
    }

    /// Power iteration of the RK4 period map with trace renormalisation.
    fn matrix_free_state(&self, tau: f64, a: f64) -> Result<SteadyState> {
        let a = fold_kick_strength(a);
        let d = 1usize << self.params.n_sites;
        let mut rho = CMat::identity(d, d) / Complex64::new(d as f64, 0.0);
        for it in 1..=self.opts.max_iterations {
            let mut next = self.period(&rho, tau, a);
            let tr = next.trace();
            next /= tr;
            let change = (&next - &rho).camax();
            rho = next;
            if change <= self.opts.floquet_tol {
                return finish(rho, change, self.opts.floquet_tol, None, false, it, "Floquet state");
            }
            if it == self.opts.max_iterations {
                return Err(Error::NotConverged {
                    iterations: it,
                    last_change: change,
                });
            }
        }
        Err(Error::NotConverged {
            iterations: 0,
            last_change: f64::INFINITY,
        })
    }
}
