use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use paretoflow_cli::compare::compare_fronts;
use paretoflow_cli::config::ExperimentConfig;
use paretoflow_cli::harness::run_experiment;
use paretoflow_cli::heatmap::{emit_rank_heatmap, HeatmapMethod, HeatmapReward};
use paretoflow_core::consistency::{
    check_consistency, enumerate_dilemmas, ChainLink, ConsistencyVerdict, DilemmaInstance,
};
use paretoflow_core::io::{read_points_csv, write_points_csv};
use paretoflow_core::metrics::{compute_report, MetricConfig, MetricReport, MATCH_TOL};
use paretoflow_core::orders::{
    cheap_global_rank, global_rank, nn_interp_order, nn_order, DistanceMetric,
};
use paretoflow_core::pareto::{PointId, PointSet};

#[derive(Parser)]
#[command(
    name = "paretoflow",
    version,
    about = "Multi-objective optimization with globally ordered rewards"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a points file with a global order and write id,score,aux CSV.
    Rank {
        /// gr | gr-k | cheap | nn | nn-int
        #[arg(long)]
        method: String,
        /// Layer cutoff (gr-k).
        #[arg(long)]
        max_rank: Option<usize>,
        /// euclidean | manhattan (nn methods).
        #[arg(long, default_value = "euclidean")]
        metric: String,
        /// Disable per-axis min-max normalization (nn methods).
        #[arg(long)]
        no_normalize: bool,
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the metric report of a candidate set against a reference.
    Metrics {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// JSON report output path.
        #[arg(long)]
        report: PathBuf,
        /// Optional CSV row output (for table aggregation).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Hypervolume reference point, comma-separated (default:
        /// componentwise minimum over both files).
        #[arg(long)]
        ref_point: Option<String>,
        /// Utopian point, comma-separated (default: componentwise max).
        #[arg(long)]
        utopian: Option<String>,
        /// Match tolerance for coverage and samples-in-front.
        #[arg(long, default_value_t = MATCH_TOL)]
        tol: f64,
    },
    /// Decide whether a consistent joint distribution exists for the
    /// given subsets.
    CheckConsistency {
        #[arg(long)]
        points: PathBuf,
        /// JSON file: array of id arrays.
        #[arg(long)]
        subsets: PathBuf,
        /// Also condition on the full point set itself.
        #[arg(long)]
        include_full_set: bool,
    },
    /// Search subset families for minimal infeasible dilemmas.
    Enumerate {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        subset_size: usize,
        /// Maximum number of families to examine.
        #[arg(long, default_value_t = 100_000)]
        limit: usize,
    },
    /// Train per the experiment config and emit reports and tables.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Run a single seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write an HxH matrix of scores for a unit-square reward map.
    Heatmap {
        /// identity | skew | bump | cossin | "<obj>,<obj>"
        #[arg(long)]
        reward: String,
        /// gr | nn
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 32)]
        grid_size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pool candidate files, recompute the joint front, count survivors.
    Compare {
        /// label=path pairs; candidate CSVs with a terminal column or
        /// plain objective rows.
        #[arg(long = "input", required = true)]
        inputs: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract the Pareto front of a points file.
    Front {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("PARETOFLOW_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Rank {
            method,
            max_rank,
            metric,
            no_normalize,
            points,
            out,
        } => {
            let set = read_points_csv(&points)?;
            let metric = parse_metric(&metric)?;
            let normalize = !no_normalize;
            let assignment = match method.as_str() {
                "gr" => global_rank(&set, None)?,
                "gr-k" => {
                    let k = max_rank.context("gr-k needs --max-rank")?;
                    global_rank(&set, Some(k))?
                }
                "cheap" => cheap_global_rank(&set)?,
                "nn" => nn_order(&set, metric, normalize)?,
                "nn-int" => nn_interp_order(&set, metric, normalize)?,
                other => bail!("unknown rank method {other} (gr|gr-k|cheap|nn|nn-int)"),
            };
            let mut writer = csv::Writer::from_path(&out)?;
            writer.write_record(["id", "score", "layer_or_distance"])?;
            for (id, score, aux) in assignment.iter() {
                writer.write_record(&[
                    id.to_string(),
                    format!("{score}"),
                    format!("{}", aux.as_f64()),
                ])?;
            }
            writer.flush()?;
            println!("wrote {} scores to {}", assignment.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }

        Command::Metrics {
            candidates,
            reference,
            report,
            csv,
            ref_point,
            utopian,
            tol,
        } => {
            let cand = read_points_csv(&candidates)?;
            let refs = read_points_csv(&reference)?;
            let d = cand.dim();
            let lo_hi = |pick_max: bool| -> Vec<f64> {
                (0..d)
                    .map(|i| {
                        cand.points()
                            .iter()
                            .chain(refs.points())
                            .map(|p| p.values()[i])
                            .fold(
                                if pick_max { f64::NEG_INFINITY } else { f64::INFINITY },
                                if pick_max { f64::max } else { f64::min },
                            )
                    })
                    .collect()
            };
            let ref_point = match ref_point {
                Some(s) => parse_vector(&s, d)?,
                None => lo_hi(false),
            };
            let utopian = match utopian {
                Some(s) => parse_vector(&s, d)?,
                None => lo_hi(true),
            };
            let out = compute_report(
                &cand,
                &refs,
                MetricConfig {
                    ref_point,
                    utopian,
                    n_reference_vectors: 0,
                    coverage_tol: tol,
                    top_k: 10,
                    normalization: None,
                },
            )?;
            let file = std::fs::File::create(&report)
                .with_context(|| format!("cannot create {}", report.display()))?;
            serde_json::to_writer_pretty(std::io::BufWriter::new(file), &out)?;
            if let Some(csv_path) = csv {
                let mut writer = csv::Writer::from_path(&csv_path)?;
                writer.write_record(MetricReport::csv_header())?;
                writer.write_record(out.csv_row())?;
                writer.flush()?;
            }
            println!("report written to {}", report.display());
            Ok(ExitCode::SUCCESS)
        }

        Command::CheckConsistency {
            points,
            subsets,
            include_full_set,
        } => {
            let set = read_points_csv(&points)?;
            let text = std::fs::read_to_string(&subsets)
                .with_context(|| format!("cannot read {}", subsets.display()))?;
            let mut subset_ids: Vec<Vec<PointId>> = serde_json::from_str(&text)
                .with_context(|| "subsets file must be a JSON array of id arrays")?;
            if include_full_set {
                subset_ids.push(set.ids().to_vec());
            }
            let inst = DilemmaInstance::new(set, subset_ids)?;
            match check_consistency(&inst)? {
                ConsistencyVerdict::Feasible { witness } => {
                    println!("feasible");
                    for (id, mass) in witness {
                        println!("  P(x{id}) = {mass}");
                    }
                }
                ConsistencyVerdict::Infeasible { contradiction } => {
                    println!("infeasible");
                    for link in contradiction {
                        println!("  {}", render_link(&link));
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Enumerate {
            points,
            subset_size,
            limit,
        } => {
            let set = read_points_csv(&points)?;
            let found = enumerate_dilemmas(&set, subset_size, limit)?;
            println!("{} minimal infeasible families", found.len());
            for inst in found {
                let rendered: Vec<String> = inst
                    .subsets
                    .iter()
                    .map(|s| {
                        let ids: Vec<String> = s.iter().map(|i| format!("x{i}")).collect();
                        format!("{{{}}}", ids.join(","))
                    })
                    .collect();
                println!("  {}", rendered.join(" "));
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Train { config, seed, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let outcome = run_experiment(&cfg, out.as_deref(), seed)?;
            for row in &outcome.rows {
                match (&row.metrics, &row.error) {
                    (Some(m), _) => println!(
                        "{} {} seed={} hv={:.4} coverage={:.3} samples_in_front={:.3} d_h={:.4}",
                        row.env, row.method, row.seed, m.hv, m.coverage, m.samples_in_front, m.d_h
                    ),
                    (None, Some(e)) => println!(
                        "{} {} seed={} FAILED: {e}",
                        row.env, row.method, row.seed
                    ),
                    _ => {}
                }
            }
            println!("table: {}", outcome.table_path.display());
            if outcome.partial_failure() {
                Ok(ExitCode::from(2))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }

        Command::Heatmap {
            reward,
            method,
            grid_size,
            out,
        } => {
            let reward = HeatmapReward::parse(&reward)?;
            let method = HeatmapMethod::parse(&method)?;
            emit_rank_heatmap(&reward, method, grid_size, &out)?;
            println!(
                "wrote {grid_size}x{grid_size} heatmap to {}",
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Compare { inputs, out } => {
            let mut labeled = Vec::new();
            for spec in &inputs {
                let (label, path) = spec
                    .split_once('=')
                    .with_context(|| format!("--input {spec:?} is not label=path"))?;
                labeled.push((label.to_string(), read_candidate_objectives(path)?));
            }
            let rows = compare_fronts(&labeled)?;
            for row in &rows {
                println!(
                    "{}: front {} -> nondominated {}",
                    row.label, row.front_size, row.nondominated
                );
            }
            if let Some(path) = out {
                let mut writer = csv::Writer::from_path(&path)?;
                writer.write_record(["method", "front_size", "nondominated"])?;
                for row in &rows {
                    writer.write_record(&[
                        row.label.clone(),
                        row.front_size.to_string(),
                        row.nondominated.to_string(),
                    ])?;
                }
                writer.flush()?;
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Front { points, out } => {
            let set = read_points_csv(&points)?;
            let front = paretoflow_core::pareto::pareto_front(&set)?;
            let indices: Vec<usize> = front
                .front
                .iter()
                .map(|&id| set.index_of(id).expect("front id"))
                .collect();
            let front_set = set.select(&indices)?;
            write_points_csv(&out, &front_set)?;
            println!("front of {} points: {}", set.len(), front_set.len());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn parse_metric(name: &str) -> Result<DistanceMetric> {
    match name {
        "euclidean" => Ok(DistanceMetric::Euclidean),
        "manhattan" => Ok(DistanceMetric::Manhattan),
        other => bail!("unknown metric {other} (euclidean|manhattan)"),
    }
}

fn parse_vector(spec: &str, d: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = spec
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("cannot parse vector {spec:?}"))?;
    if values.len() != d {
        bail!("expected {d} components, got {}", values.len());
    }
    Ok(values)
}

fn render_link(link: &ChainLink) -> String {
    match link {
        ChainLink::ZeroForced { id, subset } => {
            format!("P(x{id}) = 0 (dominated within subset {subset})")
        }
        ChainLink::Equal { a, b, subset } => {
            format!("P(x{a}) = P(x{b}) (both on the front of subset {subset})")
        }
        ChainLink::RequiredPositive { id } => {
            format!("P(x{id}) > 0 required (global Pareto front member)")
        }
    }
}

/// Reads objective vectors from a candidates CSV (terminal column plus
/// f0..fk header) or from a bare points file.
fn read_candidate_objectives(path: &str) -> Result<PointSet> {
    let path = PathBuf::from(path);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(&path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut skip_first_column = false;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if i == 0 {
            // Header sniffing: a "terminal" column marks harness output.
            let cells: Vec<&str> = record.iter().collect();
            if cells.first() == Some(&"terminal") {
                skip_first_column = true;
                continue;
            }
            if cells.iter().any(|c| c.parse::<f64>().is_err()) {
                continue; // plain header
            }
        }
        let start = usize::from(skip_first_column);
        let row: Vec<f64> = record
            .iter()
            .skip(start)
            .map(|c| c.parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("non-numeric cell in row {}", i + 1))?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{} holds no data rows", path.display());
    }
    Ok(PointSet::from_rows(rows)?)
}
