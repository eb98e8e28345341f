//! Batch experiments: generate, synthesize, optimize, verify and compare
//! against the baselines, then write per-instance rows and aggregates.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{approx_bounds, brute_force_uniform};
use crate::benchgen::{Instance, InstanceSpec};
use crate::metrics::{metric_ep, metric_str};
use crate::optimizer::{optimize, OptimizerConfig};
use crate::strategy::{is_winning, InfoMode};
use crate::synthesis::{strat_synth_until, SynthesisError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub approx: bool,
    pub brute: bool,
    pub brute_budget_ms: u64,
    /// Exhaustive search is skipped on larger models.
    pub brute_max_states: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            approx: true,
            brute: false,
            brute_budget_ms: 90_000,
            brute_max_states: 50,
        }
    }
}

/// One benchmark configuration: a generator setting run once per seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEntry {
    pub name: String,
    /// The seed inside is replaced by each entry of `seeds`.
    pub instance: InstanceSpec,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub name: String,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub baselines: BaselineConfig,
    pub configurations: Vec<ConfigEntry>,
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<SuiteConfig, HarnessError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One CSV row. Field order is the column order of `report.csv`; times are
/// in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub config: String,
    pub seed: u64,
    pub model_id: String,
    pub realizable: bool,
    pub st: usize,
    pub gen_time: f64,
    pub synth_time: f64,
    pub str_before: Option<usize>,
    pub ep_before: Option<usize>,
    pub opt_time: Option<f64>,
    pub str_after: Option<usize>,
    pub ep_after: Option<usize>,
    pub ir: bool,
    pub sweeps: Option<usize>,
    pub replacements: Option<usize>,
    pub termination: Option<String>,
    pub approx_time: Option<f64>,
    pub approx_lower: Option<bool>,
    pub approx_upper: Option<bool>,
    pub approx_conclusive: Option<bool>,
    pub brute_time: Option<f64>,
    /// `true`, `false` or `timeout`.
    pub brute_answer: Option<String>,
    pub error: Option<String>,
}

impl InstanceRow {
    fn empty(config: &str, seed: u64) -> Self {
        InstanceRow {
            config: config.to_string(),
            seed,
            model_id: format!("{config}-{seed}"),
            realizable: false,
            st: 0,
            gen_time: 0.0,
            synth_time: 0.0,
            str_before: None,
            ep_before: None,
            opt_time: None,
            str_after: None,
            ep_after: None,
            ir: false,
            sweeps: None,
            replacements: None,
            termination: None,
            approx_time: None,
            approx_lower: None,
            approx_upper: None,
            approx_conclusive: None,
            brute_time: None,
            brute_answer: None,
            error: None,
        }
    }

    fn zero_times(&mut self) {
        self.gen_time = 0.0;
        self.synth_time = 0.0;
        for t in [
            &mut self.opt_time,
            &mut self.approx_time,
            &mut self.brute_time,
        ] {
            if t.is_some() {
                *t = Some(0.0);
            }
        }
    }
}

/// Means over the realizable instances of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub config: String,
    pub instances: usize,
    pub realizable: usize,
    pub errors: usize,
    pub st: Option<f64>,
    pub gen_time: Option<f64>,
    pub synth_time: Option<f64>,
    pub str_before: Option<f64>,
    pub ep_before: Option<f64>,
    pub opt_time: Option<f64>,
    pub str_after: Option<f64>,
    pub ep_after: Option<f64>,
    /// Fraction of realizable instances ending with a uniform winning strategy.
    pub ir: Option<f64>,
    /// `1 - ep_after / ep_before` on the means; `None` when there was nothing to reduce.
    pub conflict_reduction: Option<f64>,
    pub approx_time: Option<f64>,
    pub approx_conclusive: Option<f64>,
    pub brute_time: Option<f64>,
    pub brute_true: Option<f64>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Aggregates per configuration, in order of first appearance.
pub fn aggregate(rows: &[InstanceRow]) -> Vec<Aggregate> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.config.as_str()) {
            names.push(&r.config);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let all: Vec<&InstanceRow> = rows.iter().filter(|r| r.config == name).collect();
            let ok: Vec<&InstanceRow> = all
                .iter()
                .copied()
                .filter(|r| r.realizable && r.error.is_none())
                .collect();
            let m = |f: &dyn Fn(&InstanceRow) -> Option<f64>| mean(ok.iter().filter_map(|r| f(r)));
            let ep_before = m(&|r| r.ep_before.map(|v| v as f64));
            let ep_after = m(&|r| r.ep_after.map(|v| v as f64));
            Aggregate {
                config: name.to_string(),
                instances: all.len(),
                realizable: ok.len(),
                errors: all.iter().filter(|r| r.error.is_some()).count(),
                st: m(&|r| Some(r.st as f64)),
                gen_time: m(&|r| Some(r.gen_time)),
                synth_time: m(&|r| Some(r.synth_time)),
                str_before: m(&|r| r.str_before.map(|v| v as f64)),
                ep_before,
                opt_time: m(&|r| r.opt_time),
                str_after: m(&|r| r.str_after.map(|v| v as f64)),
                ep_after,
                ir: m(&|r| Some(f64::from(u8::from(r.ir)))),
                conflict_reduction: match (ep_before, ep_after) {
                    (Some(b), Some(a)) if b > 0.0 => Some(1.0 - a / b),
                    _ => None,
                },
                approx_time: m(&|r| r.approx_time),
                approx_conclusive: m(&|r| r.approx_conclusive.map(|c| f64::from(u8::from(c)))),
                brute_time: m(&|r| r.brute_time),
                brute_true: m(&|r| {
                    r.brute_answer
                        .as_deref()
                        .map(|a| f64::from(u8::from(a == "true")))
                }),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub suite: String,
    pub rows: Vec<InstanceRow>,
    pub aggregates: Vec<Aggregate>,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(CSV_COLUMNS)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| e.into_error())
            .map_err(|e| HarnessError::Io {
                path: PathBuf::from("report.csv"),
                source: e,
            })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn summary_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for a in &self.aggregates {
            w.serialize(a)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| e.into_error())
            .map_err(|e| HarnessError::Io {
                path: PathBuf::from("summary.csv"),
                source: e,
            })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub const CSV_COLUMNS: [&str; 23] = [
    "config",
    "seed",
    "model_id",
    "realizable",
    "st",
    "gen_time",
    "synth_time",
    "str_before",
    "ep_before",
    "opt_time",
    "str_after",
    "ep_after",
    "ir",
    "sweeps",
    "replacements",
    "termination",
    "approx_time",
    "approx_lower",
    "approx_upper",
    "approx_conclusive",
    "brute_time",
    "brute_answer",
    "error",
];

/// Files written for one instance.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub model: Option<String>,
    pub spec: Option<String>,
    pub strategy: Option<String>,
    pub trace: Option<String>,
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// Runs the full pipeline on one generated instance.
pub fn run_instance(
    config: &str,
    spec: &InstanceSpec,
    suite: &SuiteConfig,
) -> (InstanceRow, Artifacts) {
    let seed = spec.seed();
    let mut row = InstanceRow::empty(config, seed);
    let mut art = Artifacts::default();

    let started = Instant::now();
    let inst: Instance = match spec.generate() {
        Ok(i) => i,
        Err(e) => {
            row.error = Some(format!("generation: {e}"));
            return (row, art);
        }
    };
    row.gen_time = secs(started.elapsed());
    row.st = inst.model.num_states();
    art.model = Some(inst.model.to_json());
    art.spec = Some(inst.sidecar_json());
    let (m, goal) = (&inst.model, &inst.goal);

    let cfg = OptimizerConfig {
        seed,
        ..suite.optimizer.clone()
    };
    let started = Instant::now();
    let synth = strat_synth_until(m, goal, seed, Some(started + cfg.synth_budget));
    row.synth_time = secs(started.elapsed());
    match synth {
        Ok(Some(out)) => {
            row.realizable = true;
            row.str_before = Some(metric_str(m, goal, &out.profile));
            row.ep_before = Some(metric_ep(m, goal, &out.profile));
            let started = Instant::now();
            let trace = optimize(m, goal, &out, &cfg);
            row.opt_time = Some(secs(started.elapsed()));
            let p = &trace.final_profile;
            let ep = metric_ep(m, goal, p);
            row.str_after = Some(metric_str(m, goal, p));
            row.ep_after = Some(ep);
            row.ir = ep == 0 && is_winning(m, goal, p, InfoMode::Imperfect);
            row.sweeps = Some(trace.sweeps);
            row.replacements = Some(trace.replacements);
            row.termination = Some(trace.termination.as_str().to_string());
            art.strategy = Some(serde_json::to_string_pretty(&p.to_file()).expect("serializable"));
            art.trace = Some(serde_json::to_string_pretty(&trace.to_file()).expect("serializable"));
        }
        Ok(None) => {}
        Err(SynthesisError::Timeout) => row.error = Some("synthesis timeout".into()),
        Err(SynthesisError::Goal(e)) => row.error = Some(format!("goal: {e}")),
    }

    if suite.baselines.approx {
        let started = Instant::now();
        if let Ok(b) = approx_bounds(m, goal) {
            row.approx_time = Some(secs(started.elapsed()));
            row.approx_lower = Some(b.lower);
            row.approx_upper = Some(b.upper);
            row.approx_conclusive = Some(b.conclusive());
        }
    }
    if suite.baselines.brute && row.st <= suite.baselines.brute_max_states {
        let deadline = Instant::now() + Duration::from_millis(suite.baselines.brute_budget_ms);
        if let Ok(v) = brute_force_uniform(m, goal, Some(deadline)) {
            row.brute_time = Some(secs(v.elapsed));
            row.brute_answer = Some(match v.answer {
                Some(true) => "true".into(),
                Some(false) => "false".into(),
                None => "timeout".into(),
            });
        }
    }
    (row, art)
}

/// Runs every (configuration, seed) pair on `workers` threads. Rows come
/// back in configuration order, then seed order. With `out_dir`, writes
/// `report.csv`, `report.json`, `summary.csv` and per-instance artifacts
/// under `<out_dir>/<config>/<seed>/`.
pub fn run_suite(
    suite: &SuiteConfig,
    out_dir: Option<&Path>,
    workers: usize,
    no_timing: bool,
) -> Result<ExperimentReport, HarnessError> {
    let jobs: Vec<(&str, InstanceSpec)> = suite
        .configurations
        .iter()
        .flat_map(|c| {
            c.seeds
                .iter()
                .map(|&s| (c.name.as_str(), c.instance.with_seed(s)))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?;
    let results: Vec<(InstanceRow, Artifacts)> = pool.install(|| {
        jobs.par_iter()
            .map(|(name, spec)| {
                let (mut row, art) = run_instance(name, spec, suite);
                if no_timing {
                    row.zero_times();
                }
                (row, art)
            })
            .collect()
    });

    let rows: Vec<InstanceRow> = results.iter().map(|(r, _)| r.clone()).collect();
    let report = ExperimentReport {
        suite: suite.name.clone(),
        aggregates: aggregate(&rows),
        rows,
    };

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        write(&dir.join("report.csv"), &report.to_csv()?)?;
        write(&dir.join("summary.csv"), &report.summary_csv()?)?;
        write(
            &dir.join("report.json"),
            &serde_json::to_string_pretty(&report)?,
        )?;
        for (row, art) in &results {
            let sub = dir.join(&row.config).join(row.seed.to_string());
            fs::create_dir_all(&sub).map_err(io_err(&sub))?;
            let files = [
                ("model.json", &art.model),
                ("spec.json", &art.spec),
                ("strategy.json", &art.strategy),
                ("trace.json", &art.trace),
            ];
            for (name, content) in files {
                if let Some(text) = content {
                    write(&sub.join(name), text)?;
                }
            }
        }
    }
    Ok(report)
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(io_err(path))
}
