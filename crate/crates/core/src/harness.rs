//! Multi-seed sweeps over methods and labeled-set sizes, with resumable result
//! files, aggregation and plot-ready CSV output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{build_bundle, DatasetError, DEFAULT_NOISE_SIGMA, DEFAULT_TEST_SIZE};
use crate::losses::LossVariant;
use crate::training::{train, Method, TrainConfig, TrainError};

pub const RESULTS_FILE: &str = "results.csv";
pub const HISTORY_DIR: &str = "history";
pub const MAE_PLOT_FILE: &str = "mae_by_size.csv";
pub const RELATIVE_PLOT_FILE: &str = "relative_error.csv";
pub const VARIANT_PLOT_FILE: &str = "loss_variants.csv";

const RESULTS_HEADER: &str =
    "method,variant,labeled_size,seed,status,test_mae,wall_time_s,checksum,history,error";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{file} line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("no dnn baseline at {labeled_size} labels for {method}")]
    MissingBaseline { method: String, labeled_size: usize },
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("worker pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Desk,
    Full,
}

impl FromStr for Preset {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "desk" => Ok(Preset::Desk),
            "full" | "paper" => Ok(Preset::Full),
            other => Err(HarnessError::InvalidConfig(format!("unknown preset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub methods: Vec<Method>,
    pub labeled_sizes: Vec<usize>,
    pub n_unlabeled: usize,
    pub n_test: usize,
    pub noise_sigma: f64,
    pub n_seeds: u64,
    pub base: TrainConfig,
    pub out_dir: PathBuf,
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
}

impl SweepConfig {
    /// Base training config shared by both presets. Larger unlabeled and fake
    /// batches steady the feature means that the SR-GAN objective compares.
    pub fn preset_train_config() -> TrainConfig {
        TrainConfig {
            steps: 50_000,
            batch_labeled: 32,
            batch_unlabeled: 64,
            batch_fake: 64,
            eval_interval: 5_000,
            ..TrainConfig::default()
        }
    }

    pub fn preset(preset: Preset, out_dir: impl Into<PathBuf>) -> Self {
        let (labeled_sizes, n_unlabeled) = match preset {
            Preset::Desk => (vec![50, 100, 500, 1_000], 5_000),
            Preset::Full => (vec![50, 100, 500, 1_000, 5_000, 10_000], 50_000),
        };
        Self {
            methods: Method::ALL.to_vec(),
            labeled_sizes,
            n_unlabeled,
            n_test: DEFAULT_TEST_SIZE,
            noise_sigma: DEFAULT_NOISE_SIGMA,
            n_seeds: 3,
            base: Self::preset_train_config(),
            out_dir: out_dir.into(),
            workers: 0,
        }
    }

    pub fn desk(out_dir: impl Into<PathBuf>) -> Self {
        Self::preset(Preset::Desk, out_dir)
    }

    pub fn full(out_dir: impl Into<PathBuf>) -> Self {
        Self::preset(Preset::Full, out_dir)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidConfig(m.to_owned()));
        if self.methods.is_empty() {
            return bad("no methods requested");
        }
        if self.labeled_sizes.is_empty() {
            return bad("no labeled sizes requested");
        }
        if self.labeled_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("labeled sizes must be strictly ascending");
        }
        if self.labeled_sizes[0] == 0 {
            return bad("labeled sizes must be positive");
        }
        if self.n_seeds == 0 {
            return bad("n_seeds must be at least 1");
        }
        if self.n_test == 0 {
            return bad("n_test must be positive");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be finite and non-negative");
        }
        self.base.validate()?;
        Ok(())
    }

    /// Applies one `key = value` setting. List values are comma separated.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, HarnessError> {
            v.trim()
                .parse()
                .map_err(|_| HarnessError::InvalidConfig(format!("{key}: cannot parse {v:?}")))
        }
        fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, HarnessError> {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| num(key, s))
                .collect()
        }
        let v = value.trim();
        match key.trim() {
            "preset" => {
                let keep = (self.out_dir.clone(), self.workers);
                *self = Self::preset(v.parse()?, keep.0);
                self.workers = keep.1;
            }
            "methods" => {
                self.methods = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_, _>>()?;
            }
            "labeled_sizes" => self.labeled_sizes = list(key, v)?,
            "n_unlabeled" => self.n_unlabeled = num(key, v)?,
            "n_test" => self.n_test = num(key, v)?,
            "noise_sigma" => self.noise_sigma = num(key, v)?,
            "n_seeds" => self.n_seeds = num(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "workers" => self.workers = num(key, v)?,
            "steps" => self.base.steps = num(key, v)?,
            "batch_labeled" => self.base.batch_labeled = num(key, v)?,
            "batch_unlabeled" => self.base.batch_unlabeled = num(key, v)?,
            "batch_fake" => self.base.batch_fake = num(key, v)?,
            "learning_rate_d" => self.base.learning_rate_d = num(key, v)?,
            "learning_rate_g" => self.base.learning_rate_g = num(key, v)?,
            "lambda" => self.base.lambda = num(key, v)?,
            "noise_dim" => self.base.noise_dim = num(key, v)?,
            "eval_interval" => self.base.eval_interval = num(key, v)?,
            "variant" => {
                self.base.variant = v
                    .parse()
                    .map_err(|e| HarnessError::InvalidConfig(format!("variant: {e}")))?
            }
            other => {
                return Err(HarnessError::InvalidConfig(format!("unknown key {other:?}")));
            }
        }
        Ok(())
    }

    /// Parses a config file on top of `self`. JSON objects and `key = value`
    /// lines (with `#` comments) are both accepted. A `preset` key is applied
    /// before every other key.
    pub fn apply_text(&mut self, text: &str) -> Result<(), HarnessError> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        if text.trim_start().starts_with('{') {
            let value: serde_json::Value = serde_json::from_str(text).map_err(|e| {
                HarnessError::InvalidConfig(format!("json: {e}"))
            })?;
            let obj = value
                .as_object()
                .ok_or_else(|| HarnessError::InvalidConfig("json root must be an object".into()))?;
            for (k, v) in obj {
                let s = match v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Array(items) => items
                        .iter()
                        .map(|i| match i {
                            serde_json::Value::String(s) => s.clone(),
                            other => other.to_string(),
                        })
                        .collect::<Vec<_>>()
                        .join(","),
                    other => other.to_string(),
                };
                pairs.push((k.clone(), s));
            }
        } else {
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| HarnessError::Parse {
                    file: "config".into(),
                    line: i + 1,
                    message: "expected key = value".into(),
                })?;
                pairs.push((k.trim().to_owned(), v.trim().to_owned()));
            }
        }
        pairs.sort_by_key(|(k, _)| k != "preset");
        for (k, v) in pairs {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), HarnessError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        self.apply_text(&text)
    }

    pub fn results_path(&self) -> PathBuf {
        self.out_dir.join(RESULTS_FILE)
    }

    fn worker_count(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }
}

/// Identity of one trial. The loss variant only matters for SR-GAN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrialKey {
    pub method: Method,
    pub variant: Option<LossVariant>,
    pub labeled_size: usize,
    pub seed: u64,
}

impl TrialKey {
    fn new(method: Method, variant: LossVariant, labeled_size: usize, seed: u64) -> Self {
        Self {
            method,
            variant: (method == Method::Srgan).then_some(variant),
            labeled_size,
            seed,
        }
    }

    fn history_name(&self) -> String {
        let variant = self.variant.map_or("na", LossVariant::name);
        format!(
            "{}_{}_n{}_s{}.csv",
            self.method, variant, self.labeled_size, self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub key: TrialKey,
    /// `None` when the trial aborted; see `error`.
    pub test_mae: Option<f64>,
    pub wall_time_s: f64,
    pub bundle_checksum: String,
    pub history_path: Option<PathBuf>,
    pub error: Option<String>,
}

impl ExperimentResult {
    pub fn is_ok(&self) -> bool {
        self.test_mae.is_some()
    }

    fn csv_row(&self) -> String {
        let clean = |s: &str| s.replace([',', '\n', '\r'], " ");
        format!(
            "{},{},{},{},{},{},{:.3},{},{},{}",
            self.key.method,
            self.key.variant.map_or("-", LossVariant::name),
            self.key.labeled_size,
            self.key.seed,
            if self.is_ok() { "ok" } else { "failed" },
            self.test_mae.map_or(String::new(), |m| format!("{m:?}")),
            self.wall_time_s,
            self.bundle_checksum,
            self.history_path
                .as_ref()
                .map_or(String::new(), |p| clean(&p.display().to_string())),
            self.error.as_deref().map_or(String::new(), clean),
        )
    }

    fn parse_row(line: &str, line_no: usize) -> Result<Self, HarnessError> {
        let err = |message: String| HarnessError::Parse {
            file: RESULTS_FILE.into(),
            line: line_no,
            message,
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(err(format!("expected 10 fields, found {}", f.len())));
        }
        let method: Method = f[0].parse().map_err(|e: TrainError| err(e.to_string()))?;
        let variant = match f[1] {
            "-" => None,
            v => Some(v.parse::<LossVariant>().map_err(|e| err(e.to_string()))?),
        };
        let labeled_size = f[2].parse().map_err(|_| err("bad labeled_size".into()))?;
        let seed = f[3].parse().map_err(|_| err("bad seed".into()))?;
        let test_mae = match f[4] {
            "ok" => Some(f[5].parse::<f64>().map_err(|_| err("bad test_mae".into()))?),
            "failed" => None,
            other => return Err(err(format!("unknown status {other:?}"))),
        };
        Ok(Self {
            key: TrialKey {
                method,
                variant,
                labeled_size,
                seed,
            },
            test_mae,
            wall_time_s: f[6].parse().map_err(|_| err("bad wall time".into()))?,
            bundle_checksum: f[7].to_owned(),
            history_path: (!f[8].is_empty()).then(|| PathBuf::from(f[8])),
            error: (!f[9].is_empty()).then(|| f[9].to_owned()),
        })
    }
}

/// Reads a results file. Later rows for the same trial replace earlier ones,
/// except that a failed row never replaces a completed one.
pub fn read_results(path: &Path) -> Result<Vec<ExperimentResult>, HarnessError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut latest: BTreeMap<TrialKey, ExperimentResult> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let row = ExperimentResult::parse_row(line, i + 1)?;
        match latest.get(&row.key) {
            Some(prev) if prev.is_ok() && !row.is_ok() => {}
            _ => {
                latest.insert(row.key, row);
            }
        }
    }
    Ok(latest.into_values().collect())
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// One row per requested trial, sorted by key.
    pub results: Vec<ExperimentResult>,
    /// Trials actually trained in this invocation (resumed rows excluded).
    pub trained: usize,
}

impl SweepOutcome {
    pub fn failed(&self) -> usize {
        self.results.iter().filter(|r| !r.is_ok()).count()
    }
}

struct ResultSink {
    file: Mutex<File>,
}

impl ResultSink {
    fn open(path: &Path) -> Result<Self, HarnessError> {
        let fresh = !path.exists();
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err(path))?;
        if fresh {
            writeln!(file, "{RESULTS_HEADER}").map_err(io_err(path))?;
        }
        Ok(Self {
            file: Mutex::new(file),
        })
    }

    fn push(&self, row: &ExperimentResult) -> io::Result<()> {
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        writeln!(f, "{}", row.csv_row())?;
        f.flush()
    }
}

/// Trains every (method, size, seed) cell of `cfg`, skipping trials already
/// completed in `cfg.out_dir`. One dataset bundle is built per (size, seed)
/// and shared by all methods of that group.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome, HarnessError> {
    cfg.validate()?;
    let history_dir = cfg.out_dir.join(HISTORY_DIR);
    fs::create_dir_all(&history_dir).map_err(io_err(&history_dir))?;
    let results_path = cfg.results_path();
    let done: BTreeMap<TrialKey, ExperimentResult> = read_results(&results_path)?
        .into_iter()
        .filter(ExperimentResult::is_ok)
        .map(|r| (r.key, r))
        .collect();
    let sink = ResultSink::open(&results_path)?;

    let groups: Vec<(usize, u64, Vec<TrialKey>)> = cfg
        .labeled_sizes
        .iter()
        .flat_map(|&size| (0..cfg.n_seeds).map(move |seed| (size, seed)))
        .map(|(size, seed)| {
            let keys = cfg
                .methods
                .iter()
                .map(|&m| TrialKey::new(m, cfg.base.variant, size, seed))
                .filter(|k| !done.contains_key(k))
                .collect();
            (size, seed, keys)
        })
        .filter(|(_, _, keys): &(usize, u64, Vec<TrialKey>)| !keys.is_empty())
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_count())
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;

    let fresh: Vec<ExperimentResult> = pool.install(|| {
        groups
            .par_iter()
            .map(|(size, seed, keys)| run_group(cfg, *size, *seed, keys, &history_dir, &sink))
            .collect::<Result<Vec<Vec<_>>, HarnessError>>()
    })?
    .into_iter()
    .flatten()
    .collect();

    let trained = fresh.len();
    let mut all: BTreeMap<TrialKey, ExperimentResult> = done;
    for r in fresh {
        all.insert(r.key, r);
    }
    Ok(SweepOutcome {
        results: all.into_values().collect(),
        trained,
    })
}

fn run_group(
    cfg: &SweepConfig,
    size: usize,
    seed: u64,
    keys: &[TrialKey],
    history_dir: &Path,
    sink: &ResultSink,
) -> Result<Vec<ExperimentResult>, HarnessError> {
    let bundle = build_bundle(seed, size, cfg.n_unlabeled, cfg.n_test, cfg.noise_sigma)?;
    let checksum = bundle.checksum();
    let mut out = Vec::with_capacity(keys.len());
    for key in keys {
        let config = TrainConfig {
            method: key.method,
            seed,
            ..cfg.base.clone()
        };
        let start = Instant::now();
        let outcome = train(config, &bundle);
        let wall_time_s = start.elapsed().as_secs_f64();
        let row = match outcome {
            Ok(o) => {
                let path = history_dir.join(key.history_name());
                o.history.write_csv(&path)?;
                ExperimentResult {
                    key: *key,
                    test_mae: Some(o.final_test_mae),
                    wall_time_s,
                    bundle_checksum: checksum.clone(),
                    history_path: Some(path),
                    error: None,
                }
            }
            Err(e) => ExperimentResult {
                key: *key,
                test_mae: None,
                wall_time_s,
                bundle_checksum: checksum.clone(),
                history_path: None,
                error: Some(e.to_string()),
            },
        };
        let results_path = cfg.results_path();
        sink.push(&row).map_err(io_err(&results_path))?;
        out.push(row);
    }
    Ok(out)
}

/// Mean test MAE of one (method, variant, size) cell over its completed seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub method: Method,
    pub variant: Option<LossVariant>,
    pub labeled_size: usize,
    pub mean_mae: f64,
    /// Completed seeds with their MAE, ascending by seed.
    pub per_seed: Vec<(u64, f64)>,
    pub failed_seeds: Vec<u64>,
}

impl CellSummary {
    pub fn seed_coverage(&self) -> usize {
        self.per_seed.len()
    }
}

/// Groups results into cells. Cells with no completed seed are kept, with a NaN mean.
pub fn aggregate(results: &[ExperimentResult]) -> Vec<CellSummary> {
    type CellKey = (Method, Option<LossVariant>, usize);
    let mut cells: BTreeMap<CellKey, (Vec<(u64, f64)>, Vec<u64>)> = BTreeMap::new();
    for r in results {
        let k = r.key;
        let entry = cells.entry((k.method, k.variant, k.labeled_size)).or_default();
        match r.test_mae {
            Some(m) => entry.0.push((k.seed, m)),
            None => entry.1.push(k.seed),
        }
    }
    cells
        .into_iter()
        .map(|((method, variant, labeled_size), (mut per_seed, mut failed_seeds))| {
            per_seed.sort_by_key(|&(s, _)| s);
            failed_seeds.sort_unstable();
            let mean_mae = if per_seed.is_empty() {
                f64::NAN
            } else {
                per_seed.iter().map(|&(_, m)| m).sum::<f64>() / per_seed.len() as f64
            };
            CellSummary {
                method,
                variant,
                labeled_size,
                mean_mae,
                per_seed,
                failed_seeds,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelativeRow {
    pub labeled_size: usize,
    pub method: Method,
    pub variant: Option<LossVariant>,
    pub ratio: f64,
}

/// mean(GAN MAE) / mean(DNN MAE) for every non-baseline cell.
pub fn relative_errors(cells: &[CellSummary]) -> Result<Vec<RelativeRow>, HarnessError> {
    let baseline: BTreeMap<usize, f64> = cells
        .iter()
        .filter(|c| c.method == Method::Dnn && c.seed_coverage() > 0)
        .map(|c| (c.labeled_size, c.mean_mae))
        .collect();
    cells
        .iter()
        .filter(|c| c.method != Method::Dnn)
        .map(|c| {
            let base = baseline.get(&c.labeled_size).copied().ok_or_else(|| {
                HarnessError::MissingBaseline {
                    method: c.method.to_string(),
                    labeled_size: c.labeled_size,
                }
            })?;
            Ok(RelativeRow {
                labeled_size: c.labeled_size,
                method: c.method,
                variant: c.variant,
                ratio: c.mean_mae / base,
            })
        })
        .collect()
}

/// Looks up the cell for `method` at `labeled_size` (any variant).
pub fn find_cell(cells: &[CellSummary], method: Method, labeled_size: usize) -> Option<&CellSummary> {
    cells
        .iter()
        .find(|c| c.method == method && c.labeled_size == labeled_size)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantRow {
    pub variant: LossVariant,
    pub mean_mae: f64,
    pub per_seed: Vec<(u64, f64)>,
}

/// Trains SR-GAN once per variant on the same seeds and sizes. The labeled
/// and unlabeled sizes come from `cfg` (one labeled size is expected).
pub fn loss_variant_study(
    cfg: &SweepConfig,
    variants: &[LossVariant],
) -> Result<(Vec<VariantRow>, SweepOutcome), HarnessError> {
    if variants.is_empty() {
        return Err(HarnessError::InvalidConfig("no loss variants requested".into()));
    }
    let mut rows = Vec::with_capacity(variants.len());
    let mut merged = SweepOutcome {
        results: Vec::new(),
        trained: 0,
    };
    for &variant in variants {
        let run = SweepConfig {
            methods: vec![Method::Srgan],
            base: TrainConfig {
                variant,
                ..cfg.base.clone()
            },
            ..cfg.clone()
        };
        let outcome = run_sweep(&run)?;
        let mut per_seed: Vec<(u64, f64)> = outcome
            .results
            .iter()
            .filter(|r| r.key.variant == Some(variant))
            .filter_map(|r| r.test_mae.map(|m| (r.key.seed, m)))
            .collect();
        per_seed.sort_by_key(|&(s, _)| s);
        let mean_mae = if per_seed.is_empty() {
            f64::NAN
        } else {
            per_seed.iter().map(|&(_, m)| m).sum::<f64>() / per_seed.len() as f64
        };
        rows.push(VariantRow {
            variant,
            mean_mae,
            per_seed,
        });
        merged.trained += outcome.trained;
        merged.results.extend(outcome.results);
    }
    merged.results.sort_by_key(|r| r.key);
    merged.results.dedup_by_key(|r| r.key);
    Ok((rows, merged))
}

/// One row of a plot CSV: a labeled size, a series name, its mean and the
/// per-seed values behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub labeled_size: usize,
    pub series: String,
    pub value: f64,
    pub per_seed: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotTable {
    pub value_column: String,
    pub rows: Vec<PlotRow>,
}

impl PlotTable {
    pub fn header(&self) -> String {
        format!("labeled_size,method,{},per_seed", self.value_column)
    }

    /// Values use Rust's shortest round-trip float formatting, so parsing the
    /// output gives back the exact table.
    pub fn to_csv(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for r in &self.rows {
            let seeds = r
                .per_seed
                .iter()
                .map(|(s, v)| format!("{s}:{v:?}"))
                .collect::<Vec<_>>()
                .join(";");
            let _ = writeln!(out, "{},{},{:?},{}", r.labeled_size, r.series, r.value, seeds);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, HarnessError> {
        let err = |line: usize, message: &str| HarnessError::Parse {
            file: "plot table".into(),
            line,
            message: message.to_owned(),
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err(1, "missing header"))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() != 4 || cols[0] != "labeled_size" || cols[1] != "method" || cols[3] != "per_seed" {
            return Err(err(1, "unexpected header"));
        }
        let mut table = PlotTable {
            value_column: cols[2].to_owned(),
            rows: Vec::new(),
        };
        for (i, line) in lines.enumerate() {
            let n = i + 2;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(err(n, "expected 4 fields"));
            }
            let per_seed = f[3]
                .split(';')
                .filter(|s| !s.is_empty())
                .map(|pair| {
                    let (s, v) = pair.split_once(':').ok_or_else(|| err(n, "bad seed pair"))?;
                    Ok((
                        s.parse().map_err(|_| err(n, "bad seed"))?,
                        v.parse().map_err(|_| err(n, "bad value"))?,
                    ))
                })
                .collect::<Result<_, HarnessError>>()?;
            table.rows.push(PlotRow {
                labeled_size: f[0].parse().map_err(|_| err(n, "bad labeled_size"))?,
                series: f[1].to_owned(),
                value: f[2].parse().map_err(|_| err(n, "bad value"))?,
                per_seed,
            });
        }
        Ok(table)
    }
}

fn series_name(method: Method, variant: Option<LossVariant>) -> String {
    match variant {
        Some(v) => format!("{method}-{}", v.name()),
        None => method.to_string(),
    }
}

pub fn mae_table(cells: &[CellSummary]) -> PlotTable {
    PlotTable {
        value_column: "mean_mae".into(),
        rows: cells
            .iter()
            .map(|c| PlotRow {
                labeled_size: c.labeled_size,
                series: series_name(c.method, c.variant),
                value: c.mean_mae,
                per_seed: c.per_seed.clone(),
            })
            .collect(),
    }
}

pub fn relative_table(cells: &[CellSummary], rows: &[RelativeRow]) -> PlotTable {
    let baseline: BTreeMap<usize, &CellSummary> = cells
        .iter()
        .filter(|c| c.method == Method::Dnn)
        .map(|c| (c.labeled_size, c))
        .collect();
    PlotTable {
        value_column: "relative_error".into(),
        rows: rows
            .iter()
            .map(|r| {
                // per-seed ratios where both the GAN and the baseline finished
                let gan = cells.iter().find(|c| {
                    c.method == r.method && c.variant == r.variant && c.labeled_size == r.labeled_size
                });
                let per_seed = match (gan, baseline.get(&r.labeled_size)) {
                    (Some(g), Some(b)) => g
                        .per_seed
                        .iter()
                        .filter_map(|&(s, m)| {
                            b.per_seed
                                .iter()
                                .find(|&&(bs, _)| bs == s)
                                .map(|&(_, bm)| (s, m / bm))
                        })
                        .collect(),
                    _ => Vec::new(),
                };
                PlotRow {
                    labeled_size: r.labeled_size,
                    series: series_name(r.method, r.variant),
                    value: r.ratio,
                    per_seed,
                }
            })
            .collect(),
    }
}

pub fn variant_table(labeled_size: usize, rows: &[VariantRow]) -> PlotTable {
    PlotTable {
        value_column: "mean_mae".into(),
        rows: rows
            .iter()
            .map(|r| PlotRow {
                labeled_size,
                series: series_name(Method::Srgan, Some(r.variant)),
                value: r.mean_mae,
                per_seed: r.per_seed.clone(),
            })
            .collect(),
    }
}

/// Writes each `(file name, table)` under `dir` and returns the written paths.
pub fn emit_plot_data(dir: &Path, tables: &[(&str, &PlotTable)]) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::with_capacity(tables.len());
    for (name, table) in tables {
        let path = dir.join(name);
        fs::write(&path, table.to_csv()).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Human-readable summary of a results set, as printed by `report`.
pub fn format_report(results: &[ExperimentResult]) -> String {
    let cells = aggregate(results);
    let mut out = String::new();
    let _ = writeln!(out, "{:<14} {:>8} {:>10} {:>6}  per-seed", "method", "labels", "mean_mae", "seeds");
    for c in &cells {
        let seeds = c
            .per_seed
            .iter()
            .map(|(s, m)| format!("{s}:{m:.4}"))
            .collect::<Vec<_>>()
            .join(" ");
        let failed = if c.failed_seeds.is_empty() {
            String::new()
        } else {
            format!("  failed: {:?}", c.failed_seeds)
        };
        let _ = writeln!(
            out,
            "{:<14} {:>8} {:>10.4} {:>6}  {seeds}{failed}",
            series_name(c.method, c.variant),
            c.labeled_size,
            c.mean_mae,
            c.seed_coverage()
        );
    }
    let sizes: BTreeSet<usize> = cells.iter().map(|c| c.labeled_size).collect();
    let with_baseline: Vec<CellSummary> = cells
        .iter()
        .filter(|c| {
            c.method == Method::Dnn || find_cell(&cells, Method::Dnn, c.labeled_size).is_some()
        })
        .cloned()
        .collect();
    if let Ok(rel) = relative_errors(&with_baseline) {
        if !rel.is_empty() {
            let _ = writeln!(out, "\nrelative error vs dnn");
            for size in sizes {
                for r in rel.iter().filter(|r| r.labeled_size == size) {
                    let _ = writeln!(
                        out,
                        "{:<14} {:>8} {:>10.4}",
                        series_name(r.method, r.variant),
                        r.labeled_size,
                        r.ratio
                    );
                }
            }
        }
    }
    out
}
