//! Model-level properties: residual correlator behaviour, physicality of
//! every solver output and the band stationary-point counter.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use xychain::bands::{band_count_map, count_stationary_points, kappa_grid, quasienergy, raw_stationary_count, DEFAULT_GRID};
use xychain::liouville::{local_correlators, local_residual, FloquetEngine, FullSolverOptions, LocalPairs, RangeSpec};
use xychain::model::residual_correlation;
use xychain::pipelines::{kicked_floquet_report, static_ness_report, static_residual};
use xychain::{ChainParams, CorrelationMatrix, DistanceConvention, FloquetOptions, KickParams};

#[test]
fn static_residual_drops_across_critical_field() {
    let below = static_residual(&ChainParams::new(17, 0.5, 0.2).unwrap(), DistanceConvention::Site).unwrap();
    let above = static_residual(&ChainParams::new(17, 0.5, 1.2).unwrap(), DistanceConvention::Site).unwrap();
    assert!(below >= 100.0 * above, "C_res(h=0.2) = {below:e}, C_res(h=1.2) = {above:e}");
}

#[test]
fn residual_correlation_symmetries() {
    let c = static_ness_report(&ChainParams::new(6, 0.3, 0.4).unwrap(), Default::default())
        .unwrap()
        .c;
    let base = residual_correlation(&c, 6, DistanceConvention::Site).unwrap();
    let flipped = CorrelationMatrix::from_matrix(-c.matrix().transpose()).unwrap();
    assert_eq!(residual_correlation(&flipped, 6, DistanceConvention::Site).unwrap(), base);
    let scaled = CorrelationMatrix::from_matrix(c.matrix() * Complex64::new(0.25, 0.0)).unwrap();
    let r = residual_correlation(&scaled, 6, DistanceConvention::Site).unwrap();
    assert!((r - 0.25 * base).abs() <= 1e-15 * base.max(1e-300));
    assert!(residual_correlation(&c, 6, DistanceConvention::Majorana).unwrap() > 0.0);
}

#[test]
fn band_counts_stable_under_grid_doubling() {
    let a: Vec<f64> = (0..20)
        .map(|i| (i as f64 + 0.5) * std::f64::consts::FRAC_PI_4 / 20.0)
        .collect();
    let tau: Vec<f64> = (0..20).map(|j| (j as f64 + 1.0) * 0.2).collect();
    let mut stable = 0;
    for &ai in &a {
        for &t in &tau {
            let h = ai / t;
            if raw_stationary_count(0.1, h, t, DEFAULT_GRID).unwrap()
                == raw_stationary_count(0.1, h, t, 2 * DEFAULT_GRID).unwrap()
            {
                stable += 1;
            }
        }
    }
    assert!(stable * 100 >= 95 * 400, "{stable} of 400 cells stable");
}

#[test]
fn band_maps_depend_on_anisotropy() {
    let a: Vec<f64> = (0..12)
        .map(|i| (i as f64 + 0.5) * std::f64::consts::FRAC_PI_4 / 12.0)
        .collect();
    let tau: Vec<f64> = (0..12).map(|j| (j as f64 + 1.0) / 3.0).collect();
    let weak = band_count_map(0.1, &a, &tau, 2000).unwrap();
    let strong = band_count_map(0.9, &a, &tau, 2000).unwrap();
    let differing = weak
        .cells
        .iter()
        .zip(&strong.cells)
        .filter(|(x, y)| x.as_ref().ok().map(|c| c.half_count) != y.as_ref().ok().map(|c| c.half_count))
        .count();
    assert!(differing > 0);
}

fn check_correlations(c: &DMatrix<Complex64>) -> Result<(), TestCaseError> {
    prop_assert!((c + c.transpose()).camax() <= 1e-10);
    prop_assert!(c.iter().all(|v| v.re.abs() <= 1e-10 && v.norm() <= 1.0 + 1e-10));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn static_solutions_are_physical(n in 2usize..=12, gamma in 0.0..=1.0f64, h in 0.0..2.0f64) {
        let sol = static_ness_report(&ChainParams::new(n, gamma, h).unwrap(), Default::default()).unwrap();
        prop_assert!(sol.residual <= 1e-10);
        prop_assert!(sol.gap > 0.0);
        check_correlations(sol.c.matrix())?;
    }

    #[test]
    fn kicked_solutions_are_physical(n in 2usize..=12, gamma in 0.0..=1.0f64, a in 0.0..1.5f64, tau in 0.05..3.0f64) {
        let p = ChainParams::new(n, gamma, 0.0).unwrap();
        match kicked_floquet_report(&p, &KickParams::new(a, tau).unwrap(), FloquetOptions::default()) {
            Ok(sol) => {
                prop_assert!(sol.residual <= 1e-10);
                prop_assert!(sol.gap > 0.0);
                check_correlations(sol.c.matrix())?;
            }
            Err(e) => prop_assert_eq!(e.code(), "resonance"),
        }
    }

    #[test]
    fn master_equation_states_are_physical(n in 2usize..=4, gamma in 0.0..=1.0f64, a in 0.0..1.5f64, tau in 0.1..2.0f64, alpha in prop::option::of(1.0..4.0f64)) {
        let range = alpha.map_or(RangeSpec::NearestNeighbor, |alpha| RangeSpec::PowerLaw { alpha });
        let engine = FloquetEngine::new(&ChainParams::new(n, gamma, 0.0).unwrap(), range, FullSolverOptions::default()).unwrap();
        let ss = engine.state(&KickParams::new(a, tau).unwrap()).unwrap();
        prop_assert!(ss.rho.hermiticity_defect() <= 1e-10);
        prop_assert!(ss.rho.trace_defect() <= 1e-10);
        prop_assert!(ss.rho.min_eigenvalue() >= -1e-8);
        let loc = local_residual(&local_correlators(&ss.rho), LocalPairs::UpperTriangle).unwrap();
        prop_assert!(loc.is_finite() && loc >= 0.0);
    }

    #[test]
    fn bands_are_even_and_paired(gamma in 0.05..=1.0f64, a in 0.0..0.8f64, tau in 0.05..4.0f64) {
        for k in kappa_grid::<f64>(1000).into_iter().step_by(37) {
            let up = quasienergy(k, gamma, a / tau, tau).unwrap();
            prop_assert!((up - quasienergy(-k, gamma, a / tau, tau).unwrap()).abs() < 1e-12);
            prop_assert!((0.0..=std::f64::consts::PI).contains(&up));
        }
        let c = count_stationary_points(gamma, a / tau, tau, 1000);
        prop_assert!(c.is_ok() || c.unwrap_err().code() == "unresolved-bands");
    }
}
