//! Experiment orchestration: train, generate candidates, score them
//! against the reference front, and write every artifact a run produces.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use paretoflow_core::envs::{Environment, HyperGridEnv, NGramEnv};
use paretoflow_core::gflownet::{sample_candidates, stream_rng, train, GFNModel};
use paretoflow_core::metrics::{
    compute_report, hypercube_face_reference, topk_diversity, MetricConfig, MetricReport,
    MATCH_TOL,
};
use paretoflow_core::nn::save_checkpoint;
use paretoflow_core::orders::global_rank;
use paretoflow_core::pareto::PointSet;

use crate::config::{BuiltEnv, ConfigError, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] paretoflow_core::Error),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("every seed failed; first error: {0}")]
    AllSeedsFailed(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reference front and the objective scaling used for metric space.
struct EvalFrame {
    /// Reference front in raw objective units (plot overlay).
    reference_raw: PointSet,
    /// Reference front in metric space.
    reference_metric: PointSet,
    /// Per-objective (min, max) when raw values were rescaled.
    normalization: Option<Vec<(f64, f64)>>,
}

impl EvalFrame {
    fn normalize_rows(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        match &self.normalization {
            None => rows.to_vec(),
            Some(ranges) => rows
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(ranges)
                        .map(|(&v, &(lo, hi))| {
                            if hi > lo {
                                (v - lo) / (hi - lo)
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

/// HyperGrid: exact enumerated front, metrics on min-max-normalized
/// objective values over the full grid image.
fn grid_frame(env: &HyperGridEnv) -> Result<EvalFrame, HarnessError> {
    let (_, image) = env.enumerate_objectives()?;
    let d = image.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in image.points() {
        for (i, &v) in p.values().iter().enumerate() {
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        }
    }
    let ranges: Vec<(f64, f64)> = lo.into_iter().zip(hi).collect();
    let reference_raw = env.true_front()?;
    let frame = EvalFrame {
        reference_metric: PointSet::empty(d),
        reference_raw,
        normalization: Some(ranges),
    };
    let rows: Vec<Vec<f64>> = frame
        .reference_raw
        .points()
        .iter()
        .map(|p| p.values().to_vec())
        .collect();
    let normalized = frame.normalize_rows(&rows);
    Ok(EvalFrame {
        reference_metric: PointSet::from_rows(normalized)?,
        ..frame
    })
}

/// N-Grams rewards are already normalized counts in [0, 1]; the reference
/// is the discretized upper faces of the unit hypercube.
fn ngram_frame(env: &NGramEnv, face_grid: usize) -> Result<EvalFrame, HarnessError> {
    let reference = hypercube_face_reference(env.objective_dim(), face_grid)?;
    Ok(EvalFrame {
        reference_raw: reference.clone(),
        reference_metric: reference,
        normalization: None,
    })
}

/// Everything one seed produces.
pub struct SeedArtifacts {
    pub seed: u64,
    pub report: MetricReport,
    pub report_path: PathBuf,
    pub candidates_path: PathBuf,
    pub train_log_path: PathBuf,
    pub checkpoint_path: PathBuf,
    pub plot_candidates_path: PathBuf,
    pub plot_front_path: PathBuf,
}

/// One row of the result table.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub env: String,
    pub method: String,
    pub seed: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_path: Option<String>,
}

pub struct ExperimentOutcome {
    pub rows: Vec<TableRow>,
    pub table_path: PathBuf,
    pub failed_seeds: usize,
    pub succeeded_seeds: usize,
}

impl ExperimentOutcome {
    pub fn partial_failure(&self) -> bool {
        self.failed_seeds > 0 && self.succeeded_seeds > 0
    }

    /// Seed-mean of a metric column over successful rows.
    pub fn mean_of(&self, pick: impl Fn(&MetricReport) -> f64) -> Option<f64> {
        let values: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.seed != "mean")
            .filter_map(|r| r.metrics.as_ref())
            .map(&pick)
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }
}

/// Runs the configured experiment: every seed, all artifacts, the
/// aggregated CSV table. Seeds that fail produce error rows; the others
/// proceed.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<ExperimentOutcome, HarnessError> {
    cfg.validate()?;
    let out_root = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.out_dir))
        .join(cfg.label());
    fs::create_dir_all(&out_root).map_err(io_err(&out_root))?;

    let seeds: Vec<u64> = match seed_override {
        Some(s) => vec![s],
        None => cfg.seeds.clone(),
    };

    let mut rows = Vec::new();
    let mut failed = 0usize;
    let mut first_error = None;
    for &seed in &seeds {
        match run_seed(cfg, seed, &out_root) {
            Ok(artifacts) => rows.push(TableRow {
                env: cfg.env_label(),
                method: cfg.method.name.clone(),
                seed: seed.to_string(),
                metrics: Some(artifacts.report),
                error: None,
                report_path: Some(artifacts.report_path.display().to_string()),
            }),
            Err(err) => {
                failed += 1;
                let message = err.to_string();
                first_error.get_or_insert_with(|| message.clone());
                rows.push(TableRow {
                    env: cfg.env_label(),
                    method: cfg.method.name.clone(),
                    seed: seed.to_string(),
                    metrics: None,
                    error: Some(message),
                    report_path: None,
                });
            }
        }
    }
    let succeeded = seeds.len() - failed;
    if succeeded == 0 {
        return Err(HarnessError::AllSeedsFailed(
            first_error.unwrap_or_else(|| "no seeds configured".into()),
        ));
    }

    // Seed-mean row over the successful seeds.
    if let Some(mean) = mean_report(&rows) {
        rows.push(TableRow {
            env: cfg.env_label(),
            method: cfg.method.name.clone(),
            seed: "mean".into(),
            metrics: Some(mean),
            error: None,
            report_path: None,
        });
    }

    let table_path = out_root.join("results.csv");
    write_table(&table_path, &rows)?;
    Ok(ExperimentOutcome {
        rows,
        table_path,
        failed_seeds: failed,
        succeeded_seeds: succeeded,
    })
}

fn run_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    out_root: &Path,
) -> Result<SeedArtifacts, HarnessError> {
    match cfg.build_env()? {
        BuiltEnv::Grid(env) => {
            let frame = grid_frame(&env)?;
            run_seed_in(cfg, seed, out_root, &env, frame)
        }
        BuiltEnv::NGrams(env) => {
            let frame = ngram_frame(&env, cfg.reference_face_grid)?;
            run_seed_in(cfg, seed, out_root, &env, frame)
        }
    }
}

fn run_seed_in<E: Environment>(
    cfg: &ExperimentConfig,
    seed: u64,
    out_root: &Path,
    env: &E,
    frame: EvalFrame,
) -> Result<SeedArtifacts, HarnessError> {
    let seed_dir = out_root.join(format!("seed_{seed}"));
    fs::create_dir_all(&seed_dir).map_err(io_err(&seed_dir))?;

    let mut init_rng = stream_rng(seed, 9, 0);
    let mut model = GFNModel::new(env, &mut init_rng)?;
    let method = cfg.train_method()?;
    let train_cfg = cfg.train_config(seed);

    // In-training metric snapshots on a small candidate draw.
    let mut snapshot_hook = |model: &GFNModel, step: usize| -> serde_json::Value {
        snapshot_metrics(cfg, env, &frame, model, seed, step)
            .unwrap_or_else(|e| serde_json::json!({ "error": e.to_string() }))
    };
    let hook: Option<&mut dyn FnMut(&GFNModel, usize) -> serde_json::Value> =
        if cfg.training.snapshot_every > 0 {
            Some(&mut snapshot_hook)
        } else {
            None
        };

    let log = train(
        &mut model,
        env,
        &method,
        &train_cfg,
        cfg.replay_config(),
        hook,
    )?;

    // Evaluation protocol: fresh candidates with no exploration mixing.
    let candidates = sample_candidates(&model, env, cfg.eval_samples, seed)?;
    let raw_rows: Vec<Vec<f64>> = candidates
        .iter()
        .map(|c| env.objectives(c).map(|o| o.values().to_vec()))
        .collect::<Result<_, _>>()?;
    let candidates_raw = PointSet::from_rows(raw_rows.clone())?;
    let candidates_metric = PointSet::from_rows(frame.normalize_rows(&raw_rows))?;

    let d = candidates_metric.dim();
    let mut report = compute_report(
        &candidates_metric,
        &frame.reference_metric,
        MetricConfig {
            ref_point: vec![0.0; d],
            utopian: vec![1.0; d],
            n_reference_vectors: 0,
            coverage_tol: MATCH_TOL,
            top_k: cfg.top_k,
            normalization: frame.normalization.clone(),
        },
    )?;
    // Diversity of the top-ranked candidates under the environment's
    // object distance.
    let ranks = global_rank(&candidates_raw, None)?;
    report.top_k_diversity = Some(topk_diversity(
        &candidates,
        ranks.scores(),
        cfg.top_k,
        |a, b| env.object_distance(a, b),
    )?);

    // Artifacts.
    let report_path = seed_dir.join("report.json");
    write_json(&report_path, &report)?;

    let candidates_path = seed_dir.join("candidates.csv");
    write_candidates(&candidates_path, env, &candidates, &raw_rows)?;

    let train_log_path = seed_dir.join("train_log.jsonl");
    let file = fs::File::create(&train_log_path).map_err(io_err(&train_log_path))?;
    log.write_jsonl(std::io::BufWriter::new(file))?;

    let checkpoint_path = seed_dir.join("checkpoint.json");
    save_checkpoint(&model, &checkpoint_path)?;

    let plot_candidates_path = seed_dir.join("plot_candidates.csv");
    write_rows_csv(&plot_candidates_path, &raw_rows)?;

    let plot_front_path = seed_dir.join("plot_front.csv");
    let front_rows: Vec<Vec<f64>> = frame
        .reference_raw
        .points()
        .iter()
        .map(|p| p.values().to_vec())
        .collect();
    write_rows_csv(&plot_front_path, &front_rows)?;

    Ok(SeedArtifacts {
        seed,
        report,
        report_path,
        candidates_path,
        train_log_path,
        checkpoint_path,
        plot_candidates_path,
        plot_front_path,
    })
}

fn snapshot_metrics<E: Environment>(
    cfg: &ExperimentConfig,
    env: &E,
    frame: &EvalFrame,
    model: &GFNModel,
    seed: u64,
    step: usize,
) -> Result<serde_json::Value, HarnessError> {
    let n = cfg.eval_samples.min(256);
    let candidates = sample_candidates(model, env, n, seed ^ (step as u64 + 1))?;
    let rows: Vec<Vec<f64>> = candidates
        .iter()
        .map(|c| env.objectives(c).map(|o| o.values().to_vec()))
        .collect::<Result<_, _>>()?;
    let metric_set = PointSet::from_rows(frame.normalize_rows(&rows))?;
    let d = metric_set.dim();
    let report = compute_report(
        &metric_set,
        &frame.reference_metric,
        MetricConfig {
            ref_point: vec![0.0; d],
            utopian: vec![1.0; d],
            n_reference_vectors: 0,
            coverage_tol: MATCH_TOL,
            top_k: cfg.top_k,
            normalization: frame.normalization.clone(),
        },
    )?;
    Ok(serde_json::json!({
        "step": step,
        "samples": n,
        "hv": report.hv,
        "igd_plus": report.igd_plus,
        "coverage": report.coverage,
        "samples_in_front": report.samples_in_front,
    }))
}

fn mean_report(rows: &[TableRow]) -> Option<MetricReport> {
    let reports: Vec<&MetricReport> = rows.iter().filter_map(|r| r.metrics.as_ref()).collect();
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    let mean = |pick: &dyn Fn(&MetricReport) -> f64| -> f64 {
        reports.iter().map(|r| pick(r)).sum::<f64>() / n
    };
    let top_k: Vec<f64> = reports.iter().filter_map(|r| r.top_k_diversity).collect();
    Some(MetricReport {
        hv: mean(&|r| r.hv),
        r2: mean(&|r| r.r2),
        pc_ent: mean(&|r| r.pc_ent),
        igd_plus: mean(&|r| r.igd_plus),
        igd: mean(&|r| r.igd),
        gd_plus: mean(&|r| r.gd_plus),
        gd: mean(&|r| r.gd),
        d_h: mean(&|r| r.d_h),
        d_h_plus: mean(&|r| r.d_h_plus),
        coverage: mean(&|r| r.coverage),
        samples_in_front: mean(&|r| r.samples_in_front),
        top_k_diversity: if top_k.is_empty() {
            None
        } else {
            Some(top_k.iter().sum::<f64>() / top_k.len() as f64)
        },
        config: reports[0].config.clone(),
    })
}

fn write_table(path: &Path, rows: &[TableRow]) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(paretoflow_core::Error::from)
        .map_err(HarnessError::Core)?;
    let mut header = vec!["env", "method", "seed"];
    header.extend_from_slice(MetricReport::csv_header());
    header.push("report");
    header.push("error");
    writer
        .write_record(&header)
        .map_err(paretoflow_core::Error::from)?;
    for row in rows {
        let mut record = vec![row.env.clone(), row.method.clone(), row.seed.clone()];
        match &row.metrics {
            Some(m) => record.extend(m.csv_row()),
            None => record.extend(std::iter::repeat_n(
                String::new(),
                MetricReport::csv_header().len(),
            )),
        }
        record.push(row.report_path.clone().unwrap_or_default());
        record.push(row.error.clone().unwrap_or_default());
        writer
            .write_record(&record)
            .map_err(paretoflow_core::Error::from)?;
    }
    writer.flush().map_err(io_err(path))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), value)
        .map_err(paretoflow_core::Error::from)?;
    Ok(())
}

fn write_rows_csv(path: &Path, rows: &[Vec<f64>]) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_path(path).map_err(paretoflow_core::Error::from)?;
    for row in rows {
        let record: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writer
            .write_record(&record)
            .map_err(paretoflow_core::Error::from)?;
    }
    writer.flush().map_err(io_err(path))?;
    Ok(())
}

fn write_candidates<E: Environment>(
    path: &Path,
    env: &E,
    candidates: &[E::State],
    rows: &[Vec<f64>],
) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_path(path).map_err(paretoflow_core::Error::from)?;
    let d = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut header = vec!["terminal".to_string()];
    header.extend((0..d).map(|i| format!("f{i}")));
    writer
        .write_record(&header)
        .map_err(paretoflow_core::Error::from)?;
    for (candidate, row) in candidates.iter().zip(rows) {
        let mut record = vec![env.state_label(candidate)];
        record.extend(row.iter().map(|v| format!("{v}")));
        writer
            .write_record(&record)
            .map_err(paretoflow_core::Error::from)?;
    }
    writer.flush().map_err(io_err(path))?;
    Ok(())
}

/// Distinct terminal objects with sample counts, for quick inspection.
pub fn candidate_histogram<E: Environment>(
    env: &E,
    candidates: &[E::State],
) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for c in candidates {
        *counts.entry(env.state_label(c)).or_insert(0) += 1;
    }
    counts
}
