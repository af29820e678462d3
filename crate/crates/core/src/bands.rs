//! Quasi-energy bands of the infinite kicked XY chain and the count of
//! their non-trivial stationary points.
//!
//! With `eps(k) = sqrt(cos^2 k + gamma^2 sin^2 k)` the one-period propagator
//! has bands `+-theta(k)`,
//! `cos theta = cos(2 tau h) cos(2 tau eps) + sin(2 tau h) sin(2 tau eps) cos(k) / eps`.
//! `k = 0` and `k = +-pi` are stationary for every parameter set; all other
//! stationary points are counted.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Slack allowed outside [-1, 1] before the arccos argument is clamped.
pub const ARCCOS_SLACK: f64 = 1e-12;
/// Derivative differences below this magnitude count as zero.
pub const FLAT_TOL: f64 = 1e-13;
pub const DEFAULT_GRID: usize = 10_000;
pub const MIN_GRID: usize = 1_000;

pub fn epsilon<T: Real>(kappa: T, gamma: T) -> T {
    let (s, c) = (kappa.sin(), kappa.cos());
    (c * c + gamma * gamma * s * s).sqrt()
}

/// Upper band `theta_1(kappa)` in `[0, pi]`.
pub fn quasienergy<T: Real>(kappa: T, gamma: T, h: T, tau: T) -> Result<T> {
    let eps = epsilon(kappa, gamma);
    if eps < T::lit(1e-15) {
        return Err(Error::SingularDispersion {
            kappa: kappa.to_f64_lossy(),
        });
    }
    let two = T::lit(2.0);
    let (sh, ch) = (two * tau * h).sin_cos();
    let (se, ce) = (two * tau * eps).sin_cos();
    let arg = ch * ce + sh * se * kappa.cos() / eps;
    let slack = T::lit(ARCCOS_SLACK);
    let arg = if arg > T::one() {
        if arg - T::one() > slack {
            return Err(Error::NumericalInconsistency {
                value: arg.to_f64_lossy(),
            });
        }
        T::one()
    } else if arg < -T::one() {
        if -T::one() - arg > slack {
            return Err(Error::NumericalInconsistency {
                value: arg.to_f64_lossy(),
            });
        }
        -T::one()
    } else {
        arg
    };
    Ok(arg.acos())
}

/// Grid `kappa_i = (i - G/2) 2 pi / G`, exactly symmetric under `kappa -> -kappa`.
pub fn kappa_grid<T: Real>(grid_size: usize) -> Vec<T> {
    let step = T::TAU() / T::from_usize(grid_size).unwrap();
    let half = (grid_size / 2) as i64;
    (0..grid_size as i64).map(|i| T::from_i64(i - half).unwrap() * step).collect()
}

/// Number of sign changes of `d theta / d kappa` away from the trivial points
/// (before halving).
pub fn raw_stationary_count<T: Real>(gamma: T, h: T, tau: T, grid_size: usize) -> Result<usize> {
    if grid_size < MIN_GRID || !grid_size.is_multiple_of(2) {
        return Err(Error::invalid(
            "grid_size",
            format!("need an even grid of at least {MIN_GRID} points, got {grid_size}"),
        ));
    }
    let kappa = kappa_grid::<T>(grid_size);
    let theta = kappa
        .iter()
        .map(|&k| quasienergy(k, gamma, h, tau))
        .collect::<Result<Vec<T>>>()?;
    let g = grid_size;
    let step = T::TAU() / T::from_usize(g).unwrap();
    let window = T::lit(2.0) * step;
    let pi = T::PI();
    let flat = T::lit(FLAT_TOL);
    let admitted = |k: T| (k > -pi + window && k < -window) || (k > window && k < pi - window);
    let mut count = 0;
    let mut last: Option<bool> = None;
    for i in 0..g {
        if !admitted(kappa[i]) {
            last = None;
            continue;
        }
        let d = theta[(i + 1) % g] - theta[(i + g - 1) % g];
        if d.abs() < flat {
            continue;
        }
        let positive = d > T::zero();
        if let Some(prev) = last {
            if prev != positive {
                count += 1;
            }
        }
        last = Some(positive);
    }
    Ok(count)
}

/// Half the number of non-trivial stationary points, with the grid refinement
/// that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandCount {
    pub half_count: usize,
    /// Grid size whose count was returned.
    pub grid_size: usize,
    /// Set when the count changed on the first doubling and settled on the second.
    pub warning: Option<String>,
}

pub fn count_stationary_points<T: Real>(gamma: T, h: T, tau: T, grid_size: usize) -> Result<BandCount> {
    let coarse = raw_stationary_count(gamma, h, tau, grid_size)?;
    let fine = raw_stationary_count(gamma, h, tau, 2 * grid_size)?;
    if coarse == fine {
        return Ok(BandCount {
            half_count: fine / 2,
            grid_size: 2 * grid_size,
            warning: None,
        });
    }
    let finest = raw_stationary_count(gamma, h, tau, 4 * grid_size)?;
    if finest == fine {
        Ok(BandCount {
            half_count: finest / 2,
            grid_size: 4 * grid_size,
            warning: Some(format!("count changed from {} to {} on refinement", coarse / 2, fine / 2)),
        })
    } else {
        Err(Error::UnresolvedBands {
            coarse: fine / 2,
            fine: finest / 2,
        })
    }
}

/// Stationary-point counts over an `(a, tau)` grid with `h = a / tau`;
/// cells are stored with `a` as the outer index and failures stay in place.
#[derive(Debug, Clone)]
pub struct BandMap<T = f64> {
    pub a: Vec<T>,
    pub tau: Vec<T>,
    pub cells: Vec<Result<BandCount>>,
}

impl<T: Real> BandMap<T> {
    pub fn cell(&self, ia: usize, itau: usize) -> &Result<BandCount> {
        &self.cells[ia * self.tau.len() + itau]
    }
}

pub fn band_count_map<T: Real>(gamma: T, a_grid: &[T], tau_grid: &[T], grid_size: usize) -> Result<BandMap<T>> {
    if a_grid.is_empty() || tau_grid.is_empty() {
        return Err(Error::invalid("grid", "a and tau grids must be non-empty"));
    }
    let mut cells = Vec::with_capacity(a_grid.len() * tau_grid.len());
    for &a in a_grid {
        for &tau in tau_grid {
            cells.push(if tau > T::zero() {
                count_stationary_points(gamma, a / tau, tau, grid_size)
            } else {
                Err(Error::invalid("tau", "kick period must be > 0"))
            });
        }
    }
    Ok(BandMap {
        a: a_grid.to_vec(),
        tau: tau_grid.to_vec(),
        cells,
    })
}
