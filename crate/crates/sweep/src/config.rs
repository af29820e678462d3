//! Sweep configuration: parsing, exhaustive validation and default injection.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use xychain::liouville::{LocalPairs, RangeSpec, MAX_DENSE_SITES, MAX_FULL_SITES};
use xychain::{BathRates, DistanceConvention, KickOrder};

pub const DEFAULT_MEMORY_BUDGET_MB: u64 = 1024;
pub const DEFAULT_BAND_GRID: usize = xychain::bands::DEFAULT_GRID;
/// Largest chain accepted by the covariance sweeps.
pub const MAX_COVARIANCE_SITES: usize = 400;

const TOP_KEYS: &[&str] = &[
    "name",
    "model",
    "n_sites",
    "gamma",
    "alpha",
    "bath",
    "grid",
    "distance",
    "observables",
    "local_pairs",
    "kick_order",
    "workers",
    "memory_budget_mb",
    "matrix_free",
    "compute_gap",
    "band_grid",
    "output",
    "cut",
];
const BATH_KEYS: [&str; 4] = ["gamma_1l", "gamma_2l", "gamma_1r", "gamma_2r"];
const STATIC_GRID_KEYS: [&str; 6] = ["gamma_min", "gamma_max", "gamma_steps", "h_min", "h_max", "h_steps"];
const KICKED_GRID_KEYS: [&str; 6] = ["a_min", "a_max", "a_steps", "tau_min", "tau_max", "tau_steps"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Static,
    KickedCov,
    KickedFull,
    Bands,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Static => "static",
            ModelKind::KickedCov => "kicked-cov",
            ModelKind::KickedFull => "kicked-full",
            ModelKind::Bands => "bands",
        }
    }

    pub fn is_kicked(self) -> bool {
        !matches!(self, ModelKind::Static)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableKind {
    /// Residual correlator of the Majorana correlation matrix.
    Fermionic,
    /// Residual correlator of the two-site spin correlators.
    Local,
    /// Half the number of non-trivial band stationary points.
    BandHalfCount,
}

impl ObservableKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObservableKind::Fermionic => "c_res",
            ObservableKind::Local => "c_res_loc",
            ObservableKind::BandHalfCount => "band_half_count",
        }
    }

    fn config_name(self) -> &'static str {
        match self {
            ObservableKind::Fermionic => "fermionic",
            ObservableKind::Local => "local",
            ObservableKind::BandHalfCount => "band-half-count",
        }
    }
}

/// Inclusive evenly spaced axis; a single step yields `min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let span = self.max - self.min;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.max
                } else {
                    self.min + span * i as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    /// `(gamma, h)` plane, gamma outer.
    Static { gamma: Axis, h: Axis },
    /// `(a, tau)` plane, a outer.
    Kicked { a: Axis, tau: Axis },
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Static { gamma, h } => gamma.steps * h.steps,
            Grid::Kicked { a, tau } => a.steps * tau.steps,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn has_fixed_axis(&self) -> bool {
        match self {
            Grid::Static { gamma, h } => gamma.steps == 1 || h.steps == 1,
            Grid::Kicked { a, tau } => a.steps == 1 || tau.steps == 1,
        }
    }
}

/// A validated sweep configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub name: String,
    pub model: ModelKind,
    /// Absent only for band maps and for cuts, where `cut` supplies the sizes.
    pub n_sites: Option<usize>,
    /// Fixed anisotropy of the kicked models and band maps.
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub bath: BathRates,
    pub grid: Grid,
    pub distance: DistanceConvention,
    pub observables: Vec<ObservableKind>,
    pub local_pairs: LocalPairs,
    pub kick_order: KickOrder,
    pub workers: Option<usize>,
    pub memory_budget_mb: u64,
    pub matrix_free: bool,
    pub compute_gap: bool,
    pub band_grid: usize,
    pub output: Option<String>,
    pub cut: Option<Vec<usize>>,
    /// Non-fatal remarks produced during validation.
    pub notes: Vec<String>,
}

impl SweepConfig {
    pub fn range(&self) -> RangeSpec {
        match self.alpha {
            Some(alpha) => RangeSpec::PowerLaw { alpha },
            None => RangeSpec::NearestNeighbor,
        }
    }

    /// Chain sizes this configuration evaluates.
    pub fn sizes(&self) -> Vec<Option<usize>> {
        match (&self.cut, self.n_sites) {
            (Some(list), _) => list.iter().map(|&n| Some(n)).collect(),
            (None, n) => vec![n],
        }
    }

    /// Normalised configuration, defaults included, as echoed into the metadata.
    pub fn echo(&self) -> Value {
        let axis = |a: &Axis| json!({ "min": a.min, "max": a.max, "steps": a.steps });
        let grid = match &self.grid {
            Grid::Static { gamma, h } => json!({ "gamma": axis(gamma), "h": axis(h) }),
            Grid::Kicked { a, tau } => json!({ "a": axis(a), "tau": axis(tau) }),
        };
        json!({
            "name": self.name,
            "model": self.model.as_str(),
            "n_sites": self.n_sites,
            "gamma": self.gamma,
            "alpha": self.alpha,
            "bath": {
                "gamma_1l": self.bath.gamma_1l,
                "gamma_2l": self.bath.gamma_2l,
                "gamma_1r": self.bath.gamma_1r,
                "gamma_2r": self.bath.gamma_2r,
            },
            "grid": grid,
            "distance": match self.distance {
                DistanceConvention::Site => "site",
                DistanceConvention::Majorana => "majorana",
            },
            "observables": self.observables.iter().map(|o| o.config_name()).collect::<Vec<_>>(),
            "local_pairs": match self.local_pairs {
                LocalPairs::UpperTriangle => "upper",
                LocalPairs::BothOrders => "both",
            },
            "kick_order": match self.kick_order {
                KickOrder::FreeThenKick => "free-then-kick",
                KickOrder::KickThenFree => "kick-then-free",
            },
            "memory_budget_mb": self.memory_budget_mb,
            "matrix_free": self.matrix_free,
            "compute_gap": self.compute_gap,
            "band_grid": self.band_grid,
            "cut": self.cut,
        })
    }

    /// SHA-256 of the normalised configuration. The name, worker count and
    /// output location do not enter, since they cannot change any value.
    pub fn digest(&self) -> String {
        let mut echo = self.echo();
        if let Some(map) = echo.as_object_mut() {
            map.remove("name");
        }
        hex::encode(Sha256::digest(echo.to_string().as_bytes()))
    }
}

/// Every problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration error(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Estimated peak memory of one full master-equation evaluation.
pub fn full_job_bytes(n_sites: usize, matrix_free: bool) -> u64 {
    if matrix_free {
        // a dozen 2^N x 2^N complex work matrices
        12 * (1u64 << (2 * n_sites)) * 16
    } else {
        let d = 1u64 << (2 * n_sites - 1);
        6 * d * d * 8
    }
}

/// Parses TOML, or JSON when the text starts with `{`.
pub fn parse_raw(raw: &str) -> Result<Value, ConfigErrors> {
    if raw.trim_start().starts_with('{') {
        serde_json::from_str(raw).map_err(|e| ConfigErrors(vec![format!("invalid JSON: {e}")]))
    } else {
        let table: toml::Table = toml::from_str(raw).map_err(|e| ConfigErrors(vec![format!("invalid TOML: {}", e.message())]))?;
        serde_json::to_value(table).map_err(|e| ConfigErrors(vec![format!("unrepresentable TOML value: {e}")]))
    }
}

pub fn validate_config(raw: &str) -> Result<SweepConfig, ConfigErrors> {
    validate_value(&parse_raw(raw)?)
}

struct Fields<'a> {
    map: &'a Map<String, Value>,
    prefix: &'static str,
    errors: Vec<String>,
}

impl<'a> Fields<'a> {
    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            format!("`{key}`")
        } else {
            format!("`{}.{key}`", self.prefix)
        }
    }

    fn err(&mut self, key: &str, msg: impl fmt::Display) {
        let p = self.path(key);
        self.errors.push(format!("{p}: {msg}"));
    }

    fn unknown(&mut self, allowed: &[&str]) {
        let mut extra: Vec<&String> = self.map.keys().filter(|k| !allowed.contains(&k.as_str())).collect();
        extra.sort();
        for k in extra {
            self.err(k, format!("unknown key (allowed: {})", allowed.join(", ")));
        }
    }

    fn f64(&mut self, key: &str) -> Option<f64> {
        match self.map.get(key)? {
            Value::Number(n) => match n.as_f64() {
                Some(v) if v.is_finite() => Some(v),
                _ => {
                    self.err(key, "must be a finite number");
                    None
                }
            },
            other => {
                self.err(key, format!("must be a number, got {other}"));
                None
            }
        }
    }

    fn int(&mut self, key: &str, min: u64, max: u64) -> Option<u64> {
        match self.map.get(key)? {
            Value::Number(n) => match n.as_u64() {
                Some(v) if v >= min && v <= max => Some(v),
                _ => {
                    self.err(key, format!("must be an integer in [{min}, {max}], got {n}"));
                    None
                }
            },
            other => {
                self.err(key, format!("must be an integer, got {other}"));
                None
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<&'a str> {
        match self.map.get(key)? {
            Value::String(s) => Some(s.as_str()),
            other => {
                self.err(key, format!("must be a string, got {other}"));
                None
            }
        }
    }

    fn choice<T: Copy>(&mut self, key: &str, options: &[(&str, T)]) -> Option<T> {
        let s = self.string(key)?;
        match options.iter().find(|(name, _)| *name == s) {
            Some(&(_, v)) => Some(v),
            None => {
                let names: Vec<&str> = options.iter().map(|o| o.0).collect();
                self.err(key, format!("must be one of {}, got \"{s}\"", names.join(" | ")));
                None
            }
        }
    }

    fn bool(&mut self, key: &str) -> Option<bool> {
        match self.map.get(key)? {
            Value::Bool(b) => Some(*b),
            other => {
                self.err(key, format!("must be true or false, got {other}"));
                None
            }
        }
    }

    fn table(&mut self, key: &str) -> Option<&'a Map<String, Value>> {
        match self.map.get(key)? {
            Value::Object(m) => Some(m),
            other => {
                self.err(key, format!("must be a table, got {other}"));
                None
            }
        }
    }

    fn require(&mut self, key: &str) -> bool {
        if self.map.contains_key(key) {
            true
        } else {
            self.err(key, "required field missing");
            false
        }
    }
}

fn axis(g: &mut Fields<'_>, name: &str, lo: Option<f64>, hi: Option<f64>) -> Option<Axis> {
    let (kmin, kmax, ksteps) = (format!("{name}_min"), format!("{name}_max"), format!("{name}_steps"));
    let present = [&kmin, &kmax, &ksteps].map(|k| g.require(k));
    let min = g.f64(&kmin);
    let max = g.f64(&kmax);
    let steps = g.int(&ksteps, 1, 1_000_000);
    if present.contains(&false) {
        return None;
    }
    let (min, max, steps) = (min?, max?, steps? as usize);
    let mut ok = true;
    if min > max {
        g.err(&kmin, format!("must not exceed {name}_max ({max}), got {min}"));
        ok = false;
    }
    if let Some(lo) = lo {
        if min < lo {
            g.err(&kmin, format!("must be >= {lo}, got {min}"));
            ok = false;
        }
    }
    if let Some(hi) = hi {
        if max > hi {
            g.err(&kmax, format!("must be <= {hi}, got {max}"));
            ok = false;
        }
    }
    ok.then_some(Axis { min, max, steps })
}

pub fn validate_value(value: &Value) -> Result<SweepConfig, ConfigErrors> {
    let Value::Object(map) = value else {
        return Err(ConfigErrors(vec!["configuration must be a table of keys".into()]));
    };
    let mut f = Fields {
        map,
        prefix: "",
        errors: Vec::new(),
    };
    let mut notes = Vec::new();
    f.unknown(TOP_KEYS);

    let model = if f.require("model") {
        f.choice(
            "model",
            &[
                ("static", ModelKind::Static),
                ("kicked-cov", ModelKind::KickedCov),
                ("kicked-full", ModelKind::KickedFull),
                ("bands", ModelKind::Bands),
            ],
        )
    } else {
        None
    };
    let name = f.string("name").unwrap_or("sweep").to_string();
    let max_n = match model {
        Some(ModelKind::KickedFull) => MAX_FULL_SITES as u64,
        _ => MAX_COVARIANCE_SITES as u64,
    };
    let cut = match f.map.get("cut") {
        None => None,
        Some(_) => {
            let t = f.table("cut");
            t.and_then(|t| {
                let mut c = Fields {
                    map: t,
                    prefix: "cut",
                    errors: Vec::new(),
                };
                c.unknown(&["n_list"]);
                let list = if c.require("n_list") {
                    match c.map.get("n_list") {
                        Some(Value::Array(items)) if !items.is_empty() => {
                            let parsed: Vec<Option<usize>> = items
                                .iter()
                                .map(|v| v.as_u64().filter(|&n| n >= 2 && n <= max_n).map(|n| n as usize))
                                .collect();
                            if parsed.iter().any(Option::is_none) {
                                c.err("n_list", format!("every entry must be an integer in [2, {max_n}]"));
                                None
                            } else {
                                Some(parsed.into_iter().flatten().collect::<Vec<_>>())
                            }
                        }
                        _ => {
                            c.err("n_list", "must be a non-empty array of chain sizes");
                            None
                        }
                    }
                } else {
                    None
                };
                f.errors.append(&mut c.errors);
                list
            })
        }
    };

    let needs_n = !matches!(model, Some(ModelKind::Bands)) && cut.is_none();
    let n_sites = if needs_n && !f.require("n_sites") {
        None
    } else {
        f.int("n_sites", 2, max_n).map(|n| n as usize)
    };
    if matches!(model, Some(ModelKind::Bands)) && f.map.contains_key("n_sites") {
        f.err("n_sites", "band maps describe the infinite chain and take no chain size");
    }

    let gamma = match model {
        Some(ModelKind::Static) => {
            if f.map.contains_key("gamma") {
                f.err(
                    "gamma",
                    "the static model scans gamma through grid.gamma_min/gamma_max/gamma_steps",
                );
            }
            None
        }
        Some(_) => {
            if f.require("gamma") {
                match f.f64("gamma") {
                    Some(g) if (0.0..=1.0).contains(&g) => Some(g),
                    Some(g) => {
                        f.err("gamma", format!("must lie in [0, 1], got {g}"));
                        None
                    }
                    None => None,
                }
            } else {
                None
            }
        }
        None => None,
    };

    let alpha = match f.f64("alpha") {
        Some(a) if a <= 0.0 => {
            f.err("alpha", format!("decay exponent must be > 0, got {a}"));
            None
        }
        Some(a) if model != Some(ModelKind::KickedFull) => {
            f.err(
                "alpha",
                format!("power-law couplings are only available for kicked-full, got alpha = {a}"),
            );
            None
        }
        other => other,
    };

    let mut rates = BathRates::default().as_array();
    if let Some(t) = f.table("bath") {
        let mut b = Fields {
            map: t,
            prefix: "bath",
            errors: Vec::new(),
        };
        b.unknown(&BATH_KEYS);
        for (slot, key) in rates.iter_mut().zip(BATH_KEYS) {
            match b.f64(key) {
                Some(v) if v < 0.0 => b.err(key, format!("bath rate must be >= 0, got {v}")),
                Some(v) => *slot = v,
                None => {}
            }
        }
        f.errors.append(&mut b.errors);
    }
    let bath = BathRates {
        gamma_1l: rates[0],
        gamma_2l: rates[1],
        gamma_1r: rates[2],
        gamma_2r: rates[3],
    };
    if model != Some(ModelKind::Bands) && !bath.is_dissipative() {
        f.err("bath", "all rates are zero: no unique steady state possible");
    }

    let grid = if f.require("grid") {
        f.table("grid").and_then(|t| {
            let mut g = Fields {
                map: t,
                prefix: "grid",
                errors: Vec::new(),
            };
            let grid = match model {
                Some(ModelKind::Static) => {
                    g.unknown(&STATIC_GRID_KEYS);
                    let gm = axis(&mut g, "gamma", Some(0.0), Some(1.0));
                    let h = axis(&mut g, "h", None, None);
                    gm.zip(h).map(|(gamma, h)| Grid::Static { gamma, h })
                }
                Some(_) => {
                    g.unknown(&KICKED_GRID_KEYS);
                    let a = axis(&mut g, "a", None, None);
                    let tau = axis(&mut g, "tau", None, None);
                    if let Some(t) = tau {
                        if t.min <= 0.0 {
                            g.err("tau_min", format!("kick period must be > 0, got {}", t.min));
                        }
                    }
                    if let Some(a) = a {
                        if a.min < 0.0 || a.max >= FRAC_PI_2 {
                            notes.push(format!(
                                "kick strengths outside [0, pi/2) are folded modulo pi/2 (grid spans [{}, {}])",
                                a.min, a.max
                            ));
                        }
                    }
                    match (a, tau) {
                        (Some(a), Some(tau)) if tau.min > 0.0 => Some(Grid::Kicked { a, tau }),
                        _ => None,
                    }
                }
                None => None,
            };
            f.errors.append(&mut g.errors);
            grid
        })
    } else {
        None
    };

    let distance = f
        .choice(
            "distance",
            &[("site", DistanceConvention::Site), ("majorana", DistanceConvention::Majorana)],
        )
        .unwrap_or_default();

    let observables = match (model, f.map.get("observables")) {
        (Some(ModelKind::Bands), None) => vec![ObservableKind::BandHalfCount],
        (Some(ModelKind::Bands), Some(_)) => {
            f.err("observables", "band maps have a single fixed observable");
            vec![ObservableKind::BandHalfCount]
        }
        (_, None) => vec![ObservableKind::Fermionic],
        (_, Some(Value::Array(items))) if !items.is_empty() => {
            let mut out = Vec::new();
            for item in items {
                match item.as_str() {
                    Some("fermionic") => out.push(ObservableKind::Fermionic),
                    Some("local") if model == Some(ModelKind::KickedFull) => out.push(ObservableKind::Local),
                    Some("local") => f.err(
                        "observables",
                        "the local spin correlator needs the full master equation (model = \"kicked-full\")",
                    ),
                    _ => f.err(
                        "observables",
                        format!("entries must be \"fermionic\" or \"local\", got {item}"),
                    ),
                }
            }
            out.dedup();
            out
        }
        (_, Some(_)) => {
            f.err("observables", "must be a non-empty array");
            Vec::new()
        }
    };

    let local_pairs = f
        .choice(
            "local_pairs",
            &[("upper", LocalPairs::UpperTriangle), ("both", LocalPairs::BothOrders)],
        )
        .unwrap_or_default();
    let kick_order = f
        .choice(
            "kick_order",
            &[
                ("free-then-kick", KickOrder::FreeThenKick),
                ("kick-then-free", KickOrder::KickThenFree),
            ],
        )
        .unwrap_or_default();
    let workers = f.int("workers", 1, 4096).map(|w| w as usize);
    let memory_budget_mb = f
        .int("memory_budget_mb", 1, u32::MAX as u64)
        .unwrap_or(DEFAULT_MEMORY_BUDGET_MB);
    let matrix_free = f.bool("matrix_free").unwrap_or(false);
    let compute_gap = f.bool("compute_gap").unwrap_or(false);
    let band_grid = match f.int("band_grid", xychain::bands::MIN_GRID as u64, 10_000_000) {
        Some(g) if g % 2 == 1 => {
            f.err("band_grid", format!("must be even, got {g}"));
            DEFAULT_BAND_GRID
        }
        Some(g) => g as usize,
        None => DEFAULT_BAND_GRID,
    };
    let output = f.string("output").map(str::to_string);

    if model == Some(ModelKind::KickedFull) {
        let sizes: Vec<usize> = cut.clone().unwrap_or_default().into_iter().chain(n_sites).collect();
        for n in sizes {
            if n > MAX_DENSE_SITES && !matrix_free {
                f.err(
                    "n_sites",
                    format!("kicked-full with N = {n} > {MAX_DENSE_SITES} needs matrix_free = true"),
                );
            } else if n <= MAX_DENSE_SITES && matrix_free {
                notes.push(format!("matrix_free = true is ignored for N = {n}; the dense path is used"));
            }
            let need = full_job_bytes(n, n > MAX_DENSE_SITES).div_ceil(1 << 20);
            if need > memory_budget_mb {
                f.err(
                    "memory_budget_mb",
                    format!("N = {n} needs about {need} MB per evaluation, budget is {memory_budget_mb} MB"),
                );
            }
        }
    }
    if model == Some(ModelKind::Bands) && cut.is_some() {
        f.err("cut", "band maps do not depend on the chain size");
    }
    if let (Some(_), Some(g)) = (&cut, &grid) {
        if !g.has_fixed_axis() {
            f.err("grid", "a cut needs one grid axis fixed (steps = 1)");
        }
    }

    if !f.errors.is_empty() {
        return Err(ConfigErrors(f.errors));
    }
    Ok(SweepConfig {
        name,
        model: model.expect("validated"),
        n_sites,
        gamma,
        alpha,
        bath,
        grid: grid.expect("validated"),
        distance,
        observables,
        local_pairs,
        kick_order,
        workers,
        memory_budget_mb,
        matrix_free,
        compute_gap,
        band_grid,
        output,
        cut,
        notes,
    })
}
