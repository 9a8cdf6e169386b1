//! Sweep configuration and execution, the count cache, CSV and plot-data
//! output, and the acceptance suites.
//!
//! # Config grammar
//!
//! A sweep config is a flat TOML table. Every key is optional:
//!
//! ```toml
//! curve = "parabola"          # or { poly = ["0", "0", "1"], eta = "1", xi = "2" }
//! mode = "full"               # full | tilde
//! q_base = 1024.0
//! q_factor = 2.0
//! q_count = 6
//! delta = 0.1                 # fixed delta, or the power schedule below
//! # delta_c = 1.0
//! # delta_gamma = 0.4         # delta = delta_c * Q^(-delta_gamma)
//! theta = 0.75                # defaults to the curve's exponent
//! epsilon = 0.05
//! regime_c = 1.0
//! workers = 0                 # 0 = all cores
//! enforce_admissible = false
//! output = "sweep.csv"
//! plot = "sweep.dat"
//! plot_kind = "ratio"         # ratio | error-loglog
//! cache_dir = ".ratpoints-cache"
//! ```
//!
//! Command-line `key=value` overrides use the same keys and value syntax.

mod accept;

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::{admissible_delta, choose_k, error_bound, main_term, regime, Regime, RegimeParams, DEFAULT_EPSILON, DEFAULT_REGIME_C};
use crate::curve::{Curve, CurveSpec};
use crate::error::{Error, Result};
use crate::lattice::{count, CountOptions, CountQuery, CountResult, Mode};

pub use accept::{acceptance, AcceptOptions, AcceptanceReport, CriterionReport, SUITES};

/// Stamp mixed into every cache key; bump when counting changes.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+count.1");

/// Environment variable naming the cache directory when the config has none.
pub const CACHE_ENV: &str = "RATPOINTS_CACHE_DIR";

/// Geometric grid `base * factor^i`, `i < count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QGrid {
    pub base: f64,
    pub factor: f64,
    pub count: usize,
}

impl QGrid {
    pub fn points(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count);
        let mut q = self.base;
        for _ in 0..self.count {
            out.push(q);
            q *= self.factor;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DeltaSchedule {
    Fixed(f64),
    /// `c * Q^(-gamma)`
    Power { c: f64, gamma: f64 },
}

impl DeltaSchedule {
    pub fn at(&self, q: f64) -> f64 {
        match *self {
            DeltaSchedule::Fixed(d) => d,
            DeltaSchedule::Power { c, gamma } => c * q.powf(-gamma),
        }
    }
}

impl fmt::Display for DeltaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaSchedule::Fixed(d) => write!(f, "delta = {d}"),
            DeltaSchedule::Power { c, gamma } => write!(f, "delta = {c} * Q^(-{gamma})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PlotKind {
    /// `(log2 Q, count / main)`
    Ratio,
    /// `(ln Q, ln |E|)`
    ErrorLogLog,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ratio" => Ok(PlotKind::Ratio),
            "error-loglog" | "error" => Ok(PlotKind::ErrorLogLog),
            _ => Err(Error::Config(format!("unknown plot kind `{s}` (expected ratio or error-loglog)"))),
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlotKind::Ratio => "ratio",
            PlotKind::ErrorLogLog => "error-loglog",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub curve: CurveSpec,
    pub q_grid: QGrid,
    pub delta: DeltaSchedule,
    pub mode: Mode,
    /// Hölder exponent for the bound; the curve's own when `None`.
    pub theta: Option<f64>,
    pub epsilon: f64,
    pub regime_c: f64,
    pub workers: usize,
    pub enforce_admissible: bool,
    pub output: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub plot_kind: PlotKind,
    pub cache_dir: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            curve: CurveSpec::Builtin("parabola".into()),
            q_grid: QGrid { base: 1024.0, factor: 2.0, count: 6 },
            delta: DeltaSchedule::Fixed(0.1),
            mode: Mode::Full,
            theta: None,
            epsilon: DEFAULT_EPSILON,
            regime_c: DEFAULT_REGIME_C,
            workers: 0,
            enforce_admissible: false,
            output: None,
            plot: None,
            plot_kind: PlotKind::Ratio,
            cache_dir: None,
        }
    }
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    v.as_float()
        .or_else(|| v.as_integer().map(|i| i as f64))
        .ok_or_else(|| Error::Config(format!("`{key}` must be a number, got {v}")))
}

fn as_usize(key: &str, v: &toml::Value) -> Result<usize> {
    v.as_integer()
        .and_then(|i| usize::try_from(i).ok())
        .ok_or_else(|| Error::Config(format!("`{key}` must be a non-negative integer, got {v}")))
}

fn as_str<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::Config(format!("`{key}` must be a string, got {v}")))
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        let mut cfg = Self::default();
        // `delta` first so that an explicit power schedule in the same file wins.
        let mut entries: Vec<_> = table.iter().collect();
        entries.sort_by_key(|(k, _)| k.as_str() != "delta");
        for (key, value) in entries {
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Sets one key. Setting `delta` selects a fixed schedule; setting
    /// `delta_c` or `delta_gamma` selects the power schedule.
    pub fn set(&mut self, key: &str, value: &toml::Value) -> Result<()> {
        match key {
            "curve" => self.curve = CurveSpec::from_toml(value)?,
            "mode" => self.mode = as_str(key, value)?.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            "q_base" => self.q_grid.base = as_f64(key, value)?,
            "q_factor" => self.q_grid.factor = as_f64(key, value)?,
            "q_count" => self.q_grid.count = as_usize(key, value)?,
            "delta" => self.delta = DeltaSchedule::Fixed(as_f64(key, value)?),
            "delta_c" | "delta_gamma" => {
                let (mut c, mut gamma) = match self.delta {
                    DeltaSchedule::Power { c, gamma } => (c, gamma),
                    DeltaSchedule::Fixed(_) => (1.0, 0.0),
                };
                if key == "delta_c" {
                    c = as_f64(key, value)?;
                } else {
                    gamma = as_f64(key, value)?;
                }
                self.delta = DeltaSchedule::Power { c, gamma };
            }
            "theta" => self.theta = Some(as_f64(key, value)?),
            "epsilon" => self.epsilon = as_f64(key, value)?,
            "regime_c" => self.regime_c = as_f64(key, value)?,
            "workers" => self.workers = as_usize(key, value)?,
            "enforce_admissible" => {
                self.enforce_admissible = value
                    .as_bool()
                    .ok_or_else(|| Error::Config(format!("`{key}` must be true or false")))?
            }
            "output" => self.output = Some(as_str(key, value)?.into()),
            "plot" => self.plot = Some(as_str(key, value)?.into()),
            "plot_kind" => self.plot_kind = as_str(key, value)?.parse()?,
            "cache_dir" => self.cache_dir = Some(as_str(key, value)?.into()),
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override. The value is read as a TOML value, and
    /// as a bare string if that fails.
    pub fn set_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        let (key, raw) = (key.trim(), raw.trim());
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        self.set(key, &value)
    }

    pub fn curve(&self) -> Result<Curve> {
        self.curve.build()
    }

    pub fn grid(&self) -> Vec<(f64, f64)> {
        self.q_grid.points().into_iter().map(|q| (q, self.delta.at(q))).collect()
    }

    fn params(&self, curve: &Curve, q: f64, delta: f64) -> RegimeParams {
        RegimeParams::new(self.theta.unwrap_or(curve.theta()), q, delta)
            .with_epsilon(self.epsilon)
            .with_regime_c(self.regime_c)
    }

    pub fn validate(&self) -> Result<Curve> {
        let curve = self.curve()?;
        let g = &self.q_grid;
        if g.count > 0 && !(g.base > 0.0 && g.base.is_finite()) {
            return Err(Error::Config(format!("q_base must be positive, got {}", g.base)));
        }
        if g.count > 1 && !(g.factor > 1.0) {
            return Err(Error::Config(format!("Q grid must be strictly increasing (q_factor = {})", g.factor)));
        }
        for (q, delta) in self.grid() {
            if !(delta > 0.0 && delta < 0.5) {
                return Err(Error::Config(format!("delta = {delta} at Q = {q} is outside (0, 1/2)")));
            }
            if self.enforce_admissible && !admissible_delta(&self.params(&curve, q, delta)) {
                return Err(Error::Config(format!("delta = {delta} is not admissible at Q = {q}")));
            }
        }
        Ok(curve)
    }

    /// Human-readable schedule, written into plot headers.
    pub fn schedule(&self) -> String {
        let g = &self.q_grid;
        format!("{} mode {}, Q = {} * {}^i (i < {}), {}", self.curve_label(), self.mode, g.base, g.factor, g.count, self.delta)
    }

    fn curve_label(&self) -> String {
        match &self.curve {
            CurveSpec::Builtin(name) => name.clone(),
            CurveSpec::Poly { id, coeffs, .. } => id.clone().unwrap_or_else(|| format!("poly[{}]", coeffs.join(","))),
        }
    }
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub curve_id: String,
    pub mode: Mode,
    #[serde(rename = "Q")]
    pub q: f64,
    pub delta: f64,
    /// `None` when the count failed; see `note`.
    pub count: Option<u64>,
    pub boundary_hits: Option<u64>,
    pub main: f64,
    /// `count - main`
    pub error: Option<f64>,
    pub regime: Option<Regime>,
    #[serde(rename = "K")]
    pub k: Option<u64>,
    pub bound: Option<f64>,
    /// `count / main`, when `main > 0`.
    pub ratio: Option<f64>,
    pub elapsed_ms: f64,
    pub note: String,
}

impl SweepRecord {
    /// Equal in every field except the timing.
    pub fn same_content(&self, other: &Self) -> bool {
        let mut a = self.clone();
        a.elapsed_ms = other.elapsed_ms;
        &a == other
    }
}

/// Count results keyed by curve, mode, `Q`, `delta` and [`CODE_VERSION`].
#[derive(Debug, Clone)]
pub struct CountCache {
    dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CachedCount {
    curve_id: String,
    mode: Mode,
    q: f64,
    delta: f64,
    version: String,
    count: u64,
    boundary_hits: u64,
    elapsed_ms: f64,
}

impl CountCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    /// The configured directory, else `$RATPOINTS_CACHE_DIR`, else no cache.
    pub fn resolve(configured: Option<&Path>) -> Result<Option<Self>> {
        match configured {
            Some(dir) => Self::new(dir).map(Some),
            None => match std::env::var_os(CACHE_ENV) {
                Some(dir) if !dir.is_empty() => Self::new(PathBuf::from(dir)).map(Some),
                _ => Ok(None),
            },
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Hex SHA-256 of the curve fingerprint, mode, the bit patterns of `Q`
    /// and `delta`, and the code version.
    pub fn key(curve: &Curve, mode: Mode, q: f64, delta: f64) -> String {
        let fingerprint = format!(
            "{}|{:?}|{}|{}|{mode}|{:016x}|{:016x}|{CODE_VERSION}",
            curve.id(),
            curve.shape(),
            curve.eta_exact(),
            curve.xi_exact(),
            q.to_bits(),
            delta.to_bits()
        );
        hex::encode(Sha256::digest(fingerprint.as_bytes()))
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// `(count, boundary_hits, elapsed_ms)` if present and consistent.
    pub fn get(&self, curve: &Curve, mode: Mode, q: f64, delta: f64) -> Option<(u64, u64, f64)> {
        let text = fs::read_to_string(self.path(&Self::key(curve, mode, q, delta))).ok()?;
        let c: CachedCount = serde_json::from_str(&text).ok()?;
        let matches = c.curve_id == curve.id()
            && c.mode == mode
            && c.q.to_bits() == q.to_bits()
            && c.delta.to_bits() == delta.to_bits()
            && c.version == CODE_VERSION;
        matches.then_some((c.count, c.boundary_hits, c.elapsed_ms))
    }

    pub fn put(&self, curve: &Curve, result: &CountResult, elapsed_ms: f64) -> Result<()> {
        let q = &result.query;
        let entry = CachedCount {
            curve_id: curve.id().to_string(),
            mode: q.mode,
            q: q.q_bound,
            delta: q.delta,
            version: CODE_VERSION.to_string(),
            count: result.count,
            boundary_hits: result.boundary_hits,
            elapsed_ms,
        };
        let key = Self::key(curve, q.mode, q.q_bound, q.delta);
        // Write then rename so a concurrent reader never sees a partial file.
        let tmp = self.dir.join(format!("{key}.{}.tmp", std::process::id()));
        fs::write(&tmp, serde_json::to_vec(&entry)?)?;
        fs::rename(tmp, self.path(&key))?;
        Ok(())
    }
}

/// One record per grid point. Failed points carry the error in `note`.
///
/// When `output` is set the records are written there as CSV; when `plot` is
/// set the plot data is written too.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    let curve = cfg.validate()?;
    let cache = CountCache::resolve(cfg.cache_dir.as_deref())?;
    let opts = CountOptions::workers(cfg.workers);
    let records: Vec<SweepRecord> = cfg
        .grid()
        .into_iter()
        .map(|(q, delta)| sweep_point(cfg, &curve, cache.as_ref(), &opts, q, delta))
        .collect();
    if let Some(path) = &cfg.output {
        write_records(fs::File::create(path)?, &records)?;
    }
    if let Some(path) = &cfg.plot {
        if !records.is_empty() {
            emit_plot_data(fs::File::create(path)?, &records, cfg.plot_kind, &cfg.schedule())?;
        }
    }
    Ok(records)
}

fn sweep_point(cfg: &SweepConfig, curve: &Curve, cache: Option<&CountCache>, opts: &CountOptions, q: f64, delta: f64) -> SweepRecord {
    let main = main_term(curve.eta(), curve.xi(), q, delta, cfg.mode);
    let params = cfg.params(curve, q, delta);
    let mut record = SweepRecord {
        curve_id: curve.id().to_string(),
        mode: cfg.mode,
        q,
        delta,
        count: None,
        boundary_hits: None,
        main,
        error: None,
        regime: regime(&params).ok(),
        k: choose_k(&params).ok().map(|c| c.k),
        bound: error_bound(&params).ok(),
        ratio: None,
        elapsed_ms: 0.0,
        note: String::new(),
    };
    let cached = cache.and_then(|c| c.get(curve, cfg.mode, q, delta));
    let outcome = match cached {
        Some(hit) => Ok(hit),
        None => {
            let start = Instant::now();
            CountQuery::new(q, delta, cfg.mode).and_then(|query| count(curve, &query, opts)).map(|r| {
                let ms = start.elapsed().as_secs_f64() * 1e3;
                if let Some(c) = cache {
                    if let Err(e) = c.put(curve, &r, ms) {
                        record.note = format!("cache write failed: {e}");
                    }
                }
                (r.count, r.boundary_hits, ms)
            })
        }
    };
    match outcome {
        Ok((n, hits, ms)) => {
            record.count = Some(n);
            record.boundary_hits = Some(hits);
            record.error = Some(n as f64 - main);
            record.ratio = (main > 0.0).then(|| n as f64 / main);
            record.elapsed_ms = ms;
        }
        Err(e) => record.note = e.to_string(),
    }
    record
}

/// CSV with a header row; the header is written even with no records.
pub fn write_records<W: Write>(writer: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record([
        "curve_id", "mode", "Q", "delta", "count", "boundary_hits", "main", "error", "regime", "K", "bound", "ratio",
        "elapsed_ms", "note",
    ])?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Count output: `curve_id,mode,Q,delta,count,boundary_hits,elapsed_ms`.
pub fn write_count_csv<W: Write>(writer: W, result: &CountResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["curve_id", "mode", "Q", "delta", "count", "boundary_hits", "elapsed_ms"])?;
    let q = &result.query;
    w.write_record([
        result.curve_id.clone(),
        q.mode.to_string(),
        q.q_bound.to_string(),
        q.delta.to_string(),
        result.count.to_string(),
        result.boundary_hits.to_string(),
        format!("{:.3}", result.elapsed.as_secs_f64() * 1e3),
    ])?;
    w.flush()?;
    Ok(())
}

/// Per-denominator counts: `q,count`.
pub fn write_per_q_csv<W: Write>(writer: W, per_q: &[(u64, u64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["q", "count"])?;
    for (q, n) in per_q {
        w.write_record([q.to_string(), n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Two whitespace-separated columns behind a `#` comment header.
///
/// Records without a count, and with `E = 0` for the log-log plot, are left
/// out with a comment line each.
pub fn emit_plot_data<W: Write>(mut out: W, records: &[SweepRecord], kind: PlotKind, schedule: &str) -> Result<()> {
    let first = records.first().ok_or_else(|| Error::Plot("no records to plot".into()))?;
    if let Some(other) = records.iter().find(|r| r.curve_id != first.curve_id) {
        return Err(Error::Plot(format!(
            "records mix curves `{}` and `{}`; write one plot file per curve",
            first.curve_id, other.curve_id
        )));
    }
    writeln!(out, "# curve {} mode {} kind {kind}", first.curve_id, first.mode)?;
    writeln!(out, "# schedule: {schedule}")?;
    match kind {
        PlotKind::Ratio => writeln!(out, "# log2_Q ratio")?,
        PlotKind::ErrorLogLog => writeln!(out, "# ln_Q ln_abs_E")?,
    }
    for r in records {
        let point = match kind {
            PlotKind::Ratio => r.ratio.map(|v| (r.q.log2(), v)).ok_or("no ratio"),
            PlotKind::ErrorLogLog => match r.error {
                Some(e) if e != 0.0 => Ok((r.q.ln(), e.abs().ln())),
                Some(_) => Err("E = 0"),
                None => Err("no count"),
            },
        };
        match point {
            Ok((x, y)) => writeln!(out, "{x} {y}")?,
            Err(why) => writeln!(out, "# omitted Q = {} delta = {} ({why})", r.q, r.delta)?,
        }
    }
    Ok(())
}
