//! Experiment orchestration: generate graphs, run the attacker-defender game
//! under each defence, and emit one CSV row per (instance, method, k).
//!
//! Every instance draws from a stream keyed by its coordinates, so the CSV is
//! a pure function of the configuration apart from the `ms` column, and a run
//! can be resumed from a partial file.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::{self, AttackParams, Defence};
use crate::generators::GeneratorSpec;
use crate::graph::VertexId;
use crate::metrics;
use crate::rng;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Densities 0.1, 0.15, ..., 1.0.
pub fn default_densities() -> Vec<f64> {
    (0..19).map(|i| (10 + 5 * i) as f64 / 100.0).collect()
}

/// A family of random graphs swept over one parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphGrid {
    Er {
        n: usize,
        #[serde(default = "default_densities")]
        densities: Vec<f64>,
        count: usize,
    },
    Ba {
        seed_order: usize,
        growth: usize,
        ms: Vec<usize>,
        count: usize,
    },
}

impl GraphGrid {
    pub fn name(&self) -> &'static str {
        match self {
            GraphGrid::Er { .. } => "er",
            GraphGrid::Ba { .. } => "ba",
        }
    }

    fn params(&self) -> Vec<f64> {
        match self {
            GraphGrid::Er { densities, .. } => densities.clone(),
            GraphGrid::Ba { ms, .. } => ms.iter().map(|&m| m as f64).collect(),
        }
    }

    fn count(&self) -> usize {
        match *self {
            GraphGrid::Er { count, .. } | GraphGrid::Ba { count, .. } => count,
        }
    }

    fn set_count(&mut self, c: usize) {
        match self {
            GraphGrid::Er { count, .. } | GraphGrid::Ba { count, .. } => *count = c,
        }
    }

    fn spec(&self, param: f64, rng_seed: u64) -> GeneratorSpec {
        match *self {
            GraphGrid::Er { n, .. } => GeneratorSpec::Er {
                n,
                density: param,
                rng_seed,
            },
            GraphGrid::Ba {
                seed_order, growth, ..
            } => GeneratorSpec::Ba {
                m: param as usize,
                seed_order,
                growth,
                rng_seed,
            },
        }
    }
}

/// Number of sybils per instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EllRule {
    Fixed(usize),
    /// `ceil(log2 n)`.
    Log2,
}

impl EllRule {
    pub fn ell(self, n: usize) -> usize {
        match self {
            EllRule::Fixed(l) => l,
            EllRule::Log2 => (usize::BITS - n.saturating_sub(1).leading_zeros()) as usize,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub grids: Vec<GraphGrid>,
    pub ell: EllRule,
    pub ks: Vec<usize>,
    pub methods: Vec<Defence>,
    /// Victims per instance; `min(n / 10, 2^ell - 1)` when absent.
    #[serde(default)]
    pub victims: Option<usize>,
    #[serde(default)]
    pub attack: AttackParams,
    pub master_seed: u64,
    pub output: PathBuf,
    /// Defaults to the output path with a `.summary.json` suffix.
    #[serde(default)]
    pub summary: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// ER and BA collections of order 200 with 8 sybils, k in {2, 5, 8}, and
    /// 50 graphs per density or `m`.
    pub fn desk(output: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            grids: vec![
                GraphGrid::Er {
                    n: 200,
                    densities: default_densities(),
                    count: 50,
                },
                GraphGrid::Ba {
                    seed_order: 50,
                    growth: 150,
                    ms: (1..=10).map(|i| 5 * i).collect(),
                    count: 50,
                },
            ],
            ell: EllRule::Fixed(8),
            ks: vec![2, 5, 8],
            methods: vec![Defence::PseudonymOnly, Defence::Kmatch],
            victims: None,
            attack: AttackParams::default(),
            master_seed: 2019,
            output: output.into(),
            summary: None,
            threads: None,
        }
    }

    /// Sets every grid to `count` graphs per parameter value.
    pub fn with_count(mut self, count: usize) -> Self {
        for g in &mut self.grids {
            g.set_count(count);
        }
        self
    }

    /// 10,000 graphs per parameter value.
    pub fn paper_scale(self) -> Self {
        self.with_count(10_000)
    }

    pub fn summary_path(&self) -> PathBuf {
        self.summary.clone().unwrap_or_else(|| {
            let mut s = self.output.clone().into_os_string();
            s.push(".summary.json");
            PathBuf::from(s)
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.grids.is_empty() {
            return bad("no graph grids".into());
        }
        if self.methods.is_empty() {
            return bad("no methods".into());
        }
        if self.ks.is_empty() {
            return bad("no k values".into());
        }
        if self.methods.contains(&Defence::Kmatch) && self.ks.iter().any(|&k| k < 2) {
            return bad("k must be at least 2 for kmatch".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        for g in &self.grids {
            if g.count() == 0 {
                return bad(format!("{} grid has count 0", g.name()));
            }
            if g.params().is_empty() {
                return bad(format!("{} grid has no parameter values", g.name()));
            }
            let order = match g {
                GraphGrid::Er { n, densities, .. } => {
                    if let Some(d) = densities.iter().find(|d| !(0.0..=1.0).contains(*d)) {
                        return bad(format!("density {d} outside [0, 1]"));
                    }
                    *n
                }
                GraphGrid::Ba {
                    seed_order,
                    growth,
                    ms,
                    ..
                } => {
                    if let Some(m) = ms.iter().find(|&&m| m == 0 || m > *seed_order) {
                        return bad(format!("m = {m} must lie in [1, seed_order = {seed_order}]"));
                    }
                    seed_order + growth
                }
            };
            if self.ell.ell(order) == 0 {
                return bad("at least one sybil is required".into());
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub generator: String,
    /// Density for ER, `m` for BA.
    pub kind_param: f64,
    pub n: usize,
    pub instance: usize,
    pub seed: u64,
    pub method: String,
    pub k: usize,
    pub l: usize,
    pub success_rate: f64,
    pub gcc_before: f64,
    pub gcc_after: f64,
    pub avg_lcc_before: f64,
    pub avg_lcc_after: f64,
    pub degree_cosine: f64,
    pub cand_count: usize,
    pub truncated: bool,
    pub error: String,
    pub ms: u64,
}

impl ExperimentRecord {
    fn key(&self) -> RowKey {
        (
            self.generator.clone(),
            param_label(self.kind_param),
            self.instance,
            self.method.clone(),
            self.k,
        )
    }
}

type RowKey = (String, String, usize, String, usize);

fn param_label(p: f64) -> String {
    format!("{p}")
}

#[derive(Clone, Debug)]
struct Job {
    grid: usize,
    param: f64,
    instance: usize,
}

fn instance_seed(master: u64, generator: &str, param: f64, instance: usize) -> u64 {
    rng::derive(rng::derive_named(master, &format!("{generator}/{}", param_label(param))), instance as u64)
}

fn failed(mut base: ExperimentRecord, msg: String) -> ExperimentRecord {
    base.success_rate = f64::NAN;
    base.gcc_after = f64::NAN;
    base.avg_lcc_after = f64::NAN;
    base.degree_cosine = f64::NAN;
    base.error = msg;
    base
}

/// Runs every method and k on one instance.
fn run_job(config: &ExperimentConfig, job: &Job) -> Vec<ExperimentRecord> {
    let grid = &config.grids[job.grid];
    let seed = instance_seed(config.master_seed, grid.name(), job.param, job.instance);
    let spec = grid.spec(job.param, rng::derive_named(seed, "graph"));
    let n = spec.order();
    let ell = config.ell.ell(n);
    let base = ExperimentRecord {
        generator: grid.name().to_string(),
        kind_param: job.param,
        n,
        instance: job.instance,
        seed,
        method: String::new(),
        k: 0,
        l: ell,
        success_rate: f64::NAN,
        gcc_before: f64::NAN,
        gcc_after: f64::NAN,
        avg_lcc_before: f64::NAN,
        avg_lcc_after: f64::NAN,
        degree_cosine: f64::NAN,
        cand_count: 0,
        truncated: false,
        error: String::new(),
        ms: 0,
    };
    let rows_for = |method: Defence| -> Vec<(Defence, usize)> {
        match method {
            Defence::PseudonymOnly => vec![(method, 0)],
            Defence::Kmatch => config.ks.iter().map(|&k| (method, k)).collect(),
        }
    };
    let games: Vec<(Defence, usize)> = config.methods.iter().flat_map(|&m| rows_for(m)).collect();
    let started = Instant::now();
    let env = spec
        .generate()
        .map_err(|e| e.to_string())
        .and_then(|g| attack::prepare(&g, ell, config.victims, seed).map_err(|e| e.to_string()));
    let setup_ms = started.elapsed().as_millis() as u64;
    let env = match env {
        Ok(env) => env,
        Err(msg) => {
            return expand_pseudonym_rows(
                config,
                games
                    .into_iter()
                    .map(|(m, k)| {
                        let mut r = failed(base.clone(), msg.clone());
                        r.method = m.name().to_string();
                        r.k = k;
                        r
                    })
                    .collect(),
            );
        }
    };
    let mut base = base;
    base.gcc_before = metrics::global_clustering(&env.g_plus);
    base.avg_lcc_before = metrics::avg_local_clustering(&env.g_plus);
    let alignment: Vec<VertexId> = (0..env.g_plus.n()).collect();
    let rows = games
        .into_iter()
        .map(|(method, k)| {
            let started = Instant::now();
            let mut row = base.clone();
            row.method = method.name().to_string();
            row.k = k;
            let game_seed = rng::derive_named(seed, &format!("{}/{k}", method.name()));
            match attack::play(&env, method, k, &config.attack, game_seed) {
                Ok(out) => {
                    let u = metrics::utility_report(&env.g_plus, &out.publication.perturbed, &alignment);
                    row.success_rate = attack::to_f64(&out.success);
                    row.gcc_after = u.gcc_after;
                    row.avg_lcc_after = u.avg_lcc_after;
                    row.degree_cosine = u.degree_cosine;
                    row.cand_count = out.result.candidates.len();
                    row.truncated = out.result.truncated || out.result.any_matchings_truncated();
                }
                Err(e) => row = failed(row, e.to_string()),
            }
            row.ms = setup_ms + started.elapsed().as_millis() as u64;
            row
        })
        .collect();
    expand_pseudonym_rows(config, rows)
}

/// The pseudonym-only game does not depend on k; its row is repeated for
/// every k so that each (method, k) cell has the same instances.
fn expand_pseudonym_rows(config: &ExperimentConfig, rows: Vec<ExperimentRecord>) -> Vec<ExperimentRecord> {
    let mut out = Vec::new();
    for r in rows {
        if r.method == Defence::PseudonymOnly.name() {
            for &k in &config.ks {
                let mut c = r.clone();
                c.k = k;
                out.push(c);
            }
        } else {
            out.push(r);
        }
    }
    out
}

fn jobs(config: &ExperimentConfig) -> Vec<Job> {
    let mut out = Vec::new();
    for (gi, grid) in config.grids.iter().enumerate() {
        for param in grid.params() {
            for instance in 0..grid.count() {
                out.push(Job {
                    grid: gi,
                    param,
                    instance,
                });
            }
        }
    }
    out
}

fn expected_keys(config: &ExperimentConfig, job: &Job) -> Vec<RowKey> {
    let grid = &config.grids[job.grid];
    config
        .methods
        .iter()
        .flat_map(|m| {
            config.ks.iter().map(move |&k| {
                (
                    grid.name().to_string(),
                    param_label(job.param),
                    job.instance,
                    m.name().to_string(),
                    k,
                )
            })
        })
        .collect()
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<ExperimentRecord>, HarnessError> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    reader
        .deserialize()
        .collect::<Result<Vec<_>, _>>()
        .map_err(csv_err(path))
}

/// Means over the rows sharing (generator, kind_param, method, k). Rows with
/// an error are counted but left out of the means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub generator: String,
    pub kind_param: f64,
    pub method: String,
    pub k: usize,
    pub rows: usize,
    pub errors: usize,
    pub truncated: usize,
    pub success_rate: f64,
    pub gcc_before: f64,
    pub gcc_after: f64,
    pub avg_lcc_before: f64,
    pub avg_lcc_after: f64,
    pub degree_cosine: f64,
    pub cand_count: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub cells: Vec<CellSummary>,
}

impl ExperimentSummary {
    pub fn cell(&self, generator: &str, kind_param: f64, method: &str, k: usize) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.generator == generator && c.kind_param == kind_param && c.method == method && c.k == k)
    }
}

pub fn summarize(records: &[ExperimentRecord]) -> ExperimentSummary {
    let mut groups: BTreeMap<(String, String, String, usize), Vec<&ExperimentRecord>> = BTreeMap::new();
    let mut order = Vec::new();
    for r in records {
        let key = (r.generator.clone(), param_label(r.kind_param), r.method.clone(), r.k);
        let entry = groups.entry(key.clone()).or_default();
        if entry.is_empty() {
            order.push(key);
        }
        entry.push(r);
    }
    let cells = order
        .into_iter()
        .map(|key| {
            let rows = &groups[&key];
            let ok: Vec<&&ExperimentRecord> = rows.iter().filter(|r| r.error.is_empty()).collect();
            let mean = |f: fn(&ExperimentRecord) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                }
            };
            CellSummary {
                generator: key.0.clone(),
                kind_param: rows[0].kind_param,
                method: key.2.clone(),
                k: key.3,
                rows: rows.len(),
                errors: rows.len() - ok.len(),
                truncated: rows.iter().filter(|r| r.truncated).count(),
                success_rate: mean(|r| r.success_rate),
                gcc_before: mean(|r| r.gcc_before),
                gcc_after: mean(|r| r.gcc_after),
                avg_lcc_before: mean(|r| r.avg_lcc_before),
                avg_lcc_after: mean(|r| r.avg_lcc_after),
                degree_cosine: mean(|r| r.degree_cosine),
                cand_count: mean(|r| r.cand_count as f64),
            }
        })
        .collect();
    ExperimentSummary { cells }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub rows_written: usize,
    pub rows_skipped: usize,
    pub summary: ExperimentSummary,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    run_experiment_with(config, |_, _| {})
}

/// Runs the experiment, calling `progress(done, total)` after each batch
/// of instances.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    progress: impl Fn(usize, usize) + Sync,
) -> Result<RunReport, HarnessError> {
    config.validate()?;
    let path = config.output.as_path();
    let resume = path.exists() && std::fs::metadata(path).map_err(io_err(path))?.len() > 0;
    let done: HashSet<RowKey> = if resume {
        read_records(path)?.iter().map(ExperimentRecord::key).collect()
    } else {
        HashSet::new()
    };
    let all = jobs(config);
    let (todo, skipped): (Vec<Job>, Vec<Job>) = all
        .into_iter()
        .partition(|j| !expected_keys(config, j).iter().all(|k| done.contains(k)));
    let rows_skipped = skipped.len() * config.methods.len() * config.ks.len();

    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    let mut writer = csv::WriterBuilder::new().has_headers(!resume).from_writer(file);

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = config.threads {
            b = b.num_threads(t);
        }
        b.build().map_err(|e| HarnessError::Config(e.to_string()))?
    };
    let batch = pool.current_num_threads().max(1) * 2;
    let total = todo.len();
    let mut rows_written = 0;
    for (bi, chunk) in todo.chunks(batch).enumerate() {
        let rows: Vec<Vec<ExperimentRecord>> = pool.install(|| chunk.par_iter().map(|j| run_job(config, j)).collect());
        for row in rows.iter().flatten() {
            if done.contains(&row.key()) {
                continue;
            }
            writer.serialize(row).map_err(csv_err(path))?;
            rows_written += 1;
        }
        writer.flush().map_err(io_err(path))?;
        progress((bi * batch + chunk.len()).min(total), total);
    }
    drop(writer);

    let summary = summarize(&read_records(path)?);
    let summary_path = config.summary_path();
    let mut f = File::create(&summary_path).map_err(io_err(&summary_path))?;
    serde_json::to_writer_pretty(&mut f, &summary)?;
    writeln!(f).map_err(io_err(&summary_path))?;
    Ok(RunReport {
        rows_written,
        rows_skipped,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            grids: vec![GraphGrid::Er {
                n: 30,
                densities: vec![0.3],
                count: 1,
            }],
            ell: EllRule::Fixed(4),
            ks: vec![2],
            methods: vec![Defence::PseudonymOnly, Defence::Kmatch],
            victims: None,
            attack: AttackParams::default(),
            master_seed: 7,
            output: dir.join("out.csv"),
            summary: None,
            threads: Some(1),
        }
    }

    #[test]
    fn density_defaults() {
        let d = default_densities();
        assert_eq!(d.len(), 19);
        assert_eq!(d[0], 0.1);
        assert_eq!(d[1], 0.15);
        assert_eq!(d[18], 1.0);
    }

    #[test]
    fn ell_rules() {
        assert_eq!(EllRule::Log2.ell(200), 8);
        assert_eq!(EllRule::Log2.ell(256), 8);
        assert_eq!(EllRule::Log2.ell(257), 9);
        assert_eq!(EllRule::Fixed(3).ell(1000), 3);
    }

    #[test]
    fn one_instance_gives_one_row_per_method() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path());
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.rows_written, 2);
        let rows = read_records(&cfg.output).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.error.is_empty()));
        assert_eq!(report.summary.cells.len(), 2);
        assert!(cfg.summary_path().exists());
    }

    #[test]
    fn config_validation() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny(dir.path());
        cfg.ks = vec![1];
        assert!(cfg.validate().is_err());
        let mut cfg = tiny(dir.path());
        cfg.ell = EllRule::Fixed(0);
        assert!(cfg.validate().is_err());
        let mut cfg = tiny(dir.path());
        cfg.grids[0].set_count(0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = ExperimentConfig::desk("x.csv");
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
        assert_eq!(cfg.clone().paper_scale().grids[0].count(), 10_000);
        let minimal = r#"{"grids":[{"kind":"er","n":20,"count":1}],"ell":"log2","ks":[2],
            "methods":["pseudonym-only","kmatch"],"master_seed":1,"output":"o.csv"}"#;
        let parsed: ExperimentConfig = serde_json::from_str(minimal).unwrap();
        assert_eq!(parsed.grids[0].params().len(), 19);
    }
}
