//! Grid evaluation, records and on-disk datasets.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use xychain::bands::{count_stationary_points, ARCCOS_SLACK, FLAT_TOL};
use xychain::liouville::{
    local_correlators, local_residual, majorana_correlations_full, FloquetEngine, FullSolverOptions, SolvePath, SteadyState,
    HERMITICITY_TOL, POSITIVITY_TOL, TRACE_TOL,
};
use xychain::lyap::{RESIDUAL_TOL, STABILITY_TOL};
use xychain::model::residual_correlation;
use xychain::pipelines::{kicked_floquet_report, static_ness_report};
use xychain::{ChainParams, FloquetOptions, KickParams};

use crate::config::{full_job_bytes, Grid, ModelKind, ObservableKind, SweepConfig};
use crate::SweepError;

pub const CSV_COLUMNS: [&str; 12] = [
    "model",
    "N",
    "gamma",
    "alpha",
    "a",
    "tau",
    "h",
    "observable",
    "value",
    "residual",
    "gap",
    "status",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Ok,
    /// Valid value with a caveat (for example a refined band count).
    Warning(String),
    /// No value; `code` is the stable error identifier.
    Masked {
        code: &'static str,
        message: String,
    },
}

impl Outcome {
    pub fn status(&self) -> &str {
        match self {
            Outcome::Ok => "ok",
            Outcome::Warning(_) => "warning",
            Outcome::Masked { code, .. } => code,
        }
    }

    fn message(&self) -> Option<&str> {
        match self {
            Outcome::Ok => None,
            Outcome::Warning(m) | Outcome::Masked { message: m, .. } => Some(m),
        }
    }

    fn masked(e: &xychain::Error) -> Self {
        Outcome::Masked {
            code: e.code(),
            message: e.to_string(),
        }
    }
}

/// One observable at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub model: ModelKind,
    pub n_sites: Option<usize>,
    pub gamma: f64,
    pub alpha: Option<f64>,
    pub a: Option<f64>,
    pub tau: Option<f64>,
    pub h: f64,
    pub observable: ObservableKind,
    pub value: Option<f64>,
    pub residual: Option<f64>,
    pub gap: Option<f64>,
    pub outcome: Outcome,
    pub wall_time_s: f64,
}

impl Record {
    pub fn is_masked(&self) -> bool {
        matches!(self.outcome, Outcome::Masked { .. })
    }
}

#[derive(Serialize)]
struct Row<'a> {
    model: &'a str,
    #[serde(rename = "N")]
    n: Option<usize>,
    gamma: f64,
    alpha: String,
    a: Option<f64>,
    tau: Option<f64>,
    h: f64,
    observable: &'a str,
    value: Option<f64>,
    residual: Option<f64>,
    gap: Option<f64>,
    status: &'a str,
}

/// Point of the grid before the chain size and observables are attached.
#[derive(Debug, Clone, Copy)]
struct Point {
    gamma: f64,
    h: f64,
    a: Option<f64>,
    tau: Option<f64>,
}

fn points(config: &SweepConfig) -> Vec<Point> {
    match &config.grid {
        Grid::Static { gamma, h } => {
            let hs = h.points();
            gamma
                .points()
                .into_iter()
                .flat_map(|g| {
                    hs.iter().map(move |&h| Point {
                        gamma: g,
                        h,
                        a: None,
                        tau: None,
                    })
                })
                .collect()
        }
        Grid::Kicked { a, tau } => {
            let g = config.gamma.expect("validated");
            let taus = tau.points();
            a.points()
                .into_iter()
                .flat_map(|a| {
                    taus.iter().map(move |&t| Point {
                        gamma: g,
                        h: a / t,
                        a: Some(a),
                        tau: Some(t),
                    })
                })
                .collect()
        }
    }
}

/// Evaluated sweep with its provenance.
#[derive(Debug, Clone)]
pub struct SweepDataset {
    pub config: SweepConfig,
    pub records: Vec<Record>,
    pub workers: usize,
    pub seed: Option<u64>,
    pub total_wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Overrides the configured worker count.
    pub workers: Option<usize>,
    /// Recorded in the metadata; every evaluation is deterministic.
    pub seed: Option<u64>,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub fn run_sweep(config: &SweepConfig, opts: RunOptions) -> Result<SweepDataset, SweepError> {
    if config.cut.is_some() {
        let sizes = config.cut.clone().unwrap_or_default();
        return run_cut(config, &sizes, opts);
    }
    let start = Instant::now();
    let workers = opts.workers.or(config.workers).unwrap_or_else(default_workers).max(1);
    let records = evaluate(config, config.n_sites, workers)?;
    Ok(SweepDataset {
        config: config.clone(),
        records,
        workers,
        seed: opts.seed,
        total_wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Evaluates `config` at every chain size in `n_list`, concatenating the records.
pub fn run_cut(config: &SweepConfig, n_list: &[usize], opts: RunOptions) -> Result<SweepDataset, SweepError> {
    if config.model == ModelKind::Bands {
        return Err(SweepError::Runtime("band maps do not depend on the chain size".into()));
    }
    if n_list.is_empty() {
        return Err(SweepError::Runtime("empty list of chain sizes".into()));
    }
    let start = Instant::now();
    let workers = opts.workers.or(config.workers).unwrap_or_else(default_workers).max(1);
    let mut records = Vec::new();
    for &n in n_list {
        records.extend(evaluate(config, Some(n), workers)?);
    }
    let mut config = config.clone();
    config.cut = Some(n_list.to_vec());
    Ok(SweepDataset {
        config,
        records,
        workers,
        seed: opts.seed,
        total_wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, SweepError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SweepError::Runtime(format!("thread pool: {e}")))
}

fn evaluate(config: &SweepConfig, n_sites: Option<usize>, workers: usize) -> Result<Vec<Record>, SweepError> {
    if config.model != ModelKind::Bands && n_sites.is_none() {
        return Err(SweepError::Runtime("no chain size given".into()));
    }
    let pts = points(config);
    match config.model {
        ModelKind::KickedFull => evaluate_full(config, n_sites.expect("checked"), &pts, workers),
        _ => {
            let per_point: Vec<Vec<Record>> =
                pool(workers)?.install(|| pts.par_iter().map(|p| evaluate_covariance(config, n_sites, p)).collect());
            Ok(per_point.into_iter().flatten().collect())
        }
    }
}

fn record(config: &SweepConfig, n_sites: Option<usize>, p: &Point, observable: ObservableKind) -> Record {
    Record {
        model: config.model,
        n_sites,
        gamma: p.gamma,
        alpha: config.alpha,
        a: p.a,
        tau: p.tau,
        h: p.h,
        observable,
        value: None,
        residual: None,
        gap: None,
        outcome: Outcome::Ok,
        wall_time_s: 0.0,
    }
}

fn evaluate_covariance(config: &SweepConfig, n_sites: Option<usize>, p: &Point) -> Vec<Record> {
    let start = Instant::now();
    let mut rec = record(config, n_sites, p, config.observables[0]);
    let result = match config.model {
        ModelKind::Bands => {
            let (a, tau) = (p.a.expect("kicked grid"), p.tau.expect("kicked grid"));
            count_stationary_points(p.gamma, a / tau, tau, config.band_grid).map(|c| {
                if let Some(w) = c.warning {
                    rec.outcome = Outcome::Warning(w);
                }
                rec.value = Some(c.half_count as f64);
            })
        }
        ModelKind::Static => ChainParams::with_bath(n_sites.expect("checked"), p.gamma, p.h, config.bath)
            .and_then(|params| static_ness_report(&params, Default::default()))
            .and_then(|sol| {
                rec.value = Some(residual_correlation(&sol.c, sol.c.n_sites(), config.distance)?);
                rec.residual = Some(sol.residual);
                rec.gap = Some(sol.gap);
                Ok(())
            }),
        ModelKind::KickedCov => {
            let opts = FloquetOptions {
                order: config.kick_order,
                ..Default::default()
            };
            ChainParams::with_bath(n_sites.expect("checked"), p.gamma, 0.0, config.bath)
                .and_then(|params| {
                    let kick = KickParams::new(p.a.expect("kicked grid"), p.tau.expect("kicked grid"))?;
                    kicked_floquet_report(&params, &kick, opts)
                })
                .and_then(|sol| {
                    rec.value = Some(residual_correlation(&sol.c, sol.c.n_sites(), config.distance)?);
                    rec.residual = Some(sol.residual);
                    rec.gap = Some(sol.gap);
                    Ok(())
                })
        }
        ModelKind::KickedFull => unreachable!("handled per period"),
    };
    if let Err(e) = result {
        rec.value = None;
        rec.outcome = Outcome::masked(&e);
    }
    rec.wall_time_s = start.elapsed().as_secs_f64();
    vec![rec]
}

fn full_observables(
    config: &SweepConfig,
    n_sites: usize,
    p: &Point,
    state: &xychain::Result<SteadyState>,
    wall: f64,
) -> Vec<Record> {
    config
        .observables
        .iter()
        .map(|&obs| {
            let mut rec = record(config, Some(n_sites), p, obs);
            rec.wall_time_s = wall;
            let value = state.as_ref().map_err(Clone::clone).and_then(|ss| {
                rec.residual = Some(ss.residual);
                rec.gap = ss.gap;
                ss.rho.check_physical()?;
                match obs {
                    ObservableKind::Fermionic => {
                        residual_correlation(&majorana_correlations_full(&ss.rho)?, n_sites, config.distance)
                    }
                    ObservableKind::Local => local_residual(&local_correlators(&ss.rho), config.local_pairs),
                    ObservableKind::BandHalfCount => unreachable!("validated"),
                }
            });
            match value {
                Ok(v) => rec.value = Some(v),
                Err(e) => rec.outcome = Outcome::masked(&e),
            }
            rec
        })
        .collect()
}

fn evaluate_full(config: &SweepConfig, n_sites: usize, pts: &[Point], workers: usize) -> Result<Vec<Record>, SweepError> {
    let Grid::Kicked { a, tau } = config.grid else {
        unreachable!("validated")
    };
    let params = ChainParams::with_bath(n_sites, config.gamma.expect("validated"), 0.0, config.bath).map_err(SweepError::Core)?;
    let opts = FullSolverOptions {
        order: config.kick_order,
        path: if config.matrix_free {
            SolvePath::Auto
        } else {
            SolvePath::Dense
        },
        compute_gap: config.compute_gap,
        ..Default::default()
    };
    let engine = FloquetEngine::new(&params, config.range(), opts).map_err(SweepError::Core)?;
    let job = full_job_bytes(n_sites, n_sites > xychain::liouville::MAX_DENSE_SITES);
    let affordable = ((config.memory_budget_mb << 20) / job.max(1)).max(1) as usize;
    let a_pts = a.points();
    let columns: Vec<Vec<Vec<Record>>> = pool(workers.min(affordable))?.install(|| {
        tau.points()
            .into_par_iter()
            .enumerate()
            .map(|(it, t)| {
                let start = Instant::now();
                let states = engine.states_for_period(t, &a_pts);
                let wall = start.elapsed().as_secs_f64() / a_pts.len() as f64;
                (0..a_pts.len())
                    .map(|ia| {
                        let p = &pts[ia * tau.steps + it];
                        let state = match &states {
                            Ok(s) => s[ia].clone(),
                            Err(e) => Err(e.clone()),
                        };
                        full_observables(config, n_sites, p, &state, wall)
                    })
                    .collect()
            })
            .collect()
    });
    let mut out = Vec::with_capacity(pts.len() * config.observables.len());
    for ia in 0..a.steps {
        for column in &columns {
            out.extend(column[ia].iter().cloned());
        }
    }
    Ok(out)
}

impl SweepDataset {
    pub fn masked_count(&self) -> usize {
        self.records.iter().filter(|r| r.is_masked()).count()
    }

    /// Records as CSV; contains no timing information, so reruns are byte-identical.
    pub fn to_csv(&self) -> Result<Vec<u8>, SweepError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            let alpha = r.alpha.map_or_else(|| "NN".to_string(), |a| a.to_string());
            w.serialize(Row {
                model: r.model.as_str(),
                n: r.n_sites,
                gamma: r.gamma,
                alpha,
                a: r.a,
                tau: r.tau,
                h: r.h,
                observable: r.observable.as_str(),
                value: r.value,
                residual: r.residual,
                gap: r.gap,
                status: r.outcome.status(),
            })
            .map_err(|e| SweepError::Runtime(format!("csv: {e}")))?;
        }
        w.into_inner().map_err(|e| SweepError::Runtime(format!("csv: {e}")))
    }

    pub fn metadata(&self) -> Value {
        let digest = self.config.digest();
        let generated = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let records: Vec<Value> = self
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut v = json!({ "row": i, "status": r.outcome.status(), "wall_time_s": r.wall_time_s });
                if let Some(m) = r.outcome.message() {
                    v["message"] = json!(m);
                }
                v
            })
            .collect();
        json!({
            "name": self.config.name,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config.echo(),
            "config_digest": digest,
            "notes": self.config.notes,
            "columns": CSV_COLUMNS,
            "tolerances": {
                "lyapunov_residual": RESIDUAL_TOL,
                "stability": STABILITY_TOL,
                "hermiticity": HERMITICITY_TOL,
                "trace": TRACE_TOL,
                "positivity": POSITIVITY_TOL,
                "full_static_residual": FullSolverOptions::default().static_tol,
                "full_floquet_residual": FullSolverOptions::default().floquet_tol,
                "band_arccos_slack": ARCCOS_SLACK,
                "band_flat": FLAT_TOL,
            },
            "record_count": self.records.len(),
            "masked_count": self.masked_count(),
            "workers": self.workers,
            "seed": self.seed,
            "generated_unix_s": generated,
            "total_wall_time_s": self.total_wall_time_s,
            "records": records,
        })
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir` atomically.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf), SweepError> {
        std::fs::create_dir_all(dir).map_err(|e| SweepError::io(dir, e))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        let meta = serde_json::to_vec_pretty(&self.metadata()).map_err(|e| SweepError::Runtime(format!("json: {e}")))?;
        write_atomic(&csv_path, &self.to_csv()?)?;
        write_atomic(&json_path, &meta)?;
        Ok((csv_path, json_path))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SweepError> {
    use std::io::Write;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| SweepError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| SweepError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| SweepError::io(path, e))?;
    tmp.persist(path).map_err(|e| SweepError::io(path, e.error))?;
    Ok(())
}
