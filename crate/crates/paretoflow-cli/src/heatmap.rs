//! Rank heatmaps over the discretized unit square: evaluate a planar
//! reward map on an H x H grid and score every cell with a global order.

use std::f64::consts::PI;
use std::path::Path;

use paretoflow_core::envs::objectives::GridObjective;
use paretoflow_core::orders::{global_rank, nn_order, DistanceMetric};
use paretoflow_core::pareto::PointSet;

use crate::config::ConfigError;

/// Two-objective reward map on the unit square.
#[derive(Debug, Clone, PartialEq)]
pub enum HeatmapReward {
    /// r(x, y) = (x, y)
    Identity,
    /// r(x, y) = (x, y / (1 + x^2))
    Skew,
    /// r(x, y) = (x, (e^{-(x - 1/2)^2} + y) / 2)
    Bump,
    /// r(x, y) = (pi x cos(pi x), pi y sin(pi y))
    CosSin,
    /// A pair of named grid objectives.
    Pair(GridObjective, GridObjective),
}

impl HeatmapReward {
    pub fn parse(spec: &str) -> Result<Self, ConfigError> {
        match spec {
            "identity" => Ok(Self::Identity),
            "skew" => Ok(Self::Skew),
            "bump" => Ok(Self::Bump),
            "cossin" => Ok(Self::CosSin),
            other => {
                let parts: Vec<&str> = other.split(',').collect();
                if parts.len() != 2 {
                    return Err(ConfigError::Invalid(format!(
                        "unknown heatmap reward {other:?} (expected identity|skew|bump|cossin or two objective names)"
                    )));
                }
                Ok(Self::Pair(
                    GridObjective::parse(parts[0].trim())?,
                    GridObjective::parse(parts[1].trim())?,
                ))
            }
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<[f64; 2], ConfigError> {
        Ok(match self {
            Self::Identity => [x, y],
            Self::Skew => [x, y / (1.0 + x * x)],
            Self::Bump => [x, ((-(x - 0.5) * (x - 0.5)).exp() + y) / 2.0],
            Self::CosSin => [PI * x * (PI * x).cos(), PI * y * (PI * y).sin()],
            Self::Pair(a, b) => [a.eval(&[x, y], 0)?, b.eval(&[x, y], 0)?],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapMethod {
    GlobalRank,
    NearestNeighbor,
}

impl HeatmapMethod {
    pub fn parse(name: &str) -> Result<Self, ConfigError> {
        match name {
            "gr" => Ok(Self::GlobalRank),
            "nn" => Ok(Self::NearestNeighbor),
            other => Err(ConfigError::Invalid(format!(
                "unknown heatmap method {other} (expected gr|nn)"
            ))),
        }
    }
}

/// Scores the H x H discretization of the unit square. Entry `[i][j]`
/// holds the score of the cell at `x = i / (H - 1)`, `y = j / (H - 1)`.
pub fn rank_heatmap(
    reward: &HeatmapReward,
    method: HeatmapMethod,
    h: usize,
) -> Result<Vec<Vec<f64>>, ConfigError> {
    if h < 2 {
        return Err(ConfigError::Invalid("grid size must be >= 2".into()));
    }
    let mut rows = Vec::with_capacity(h * h);
    for i in 0..h {
        for j in 0..h {
            let x = i as f64 / (h - 1) as f64;
            let y = j as f64 / (h - 1) as f64;
            rows.push(reward.eval(x, y)?.to_vec());
        }
    }
    let set = PointSet::from_rows(rows)?;
    let assignment = match method {
        HeatmapMethod::GlobalRank => global_rank(&set, None)?,
        HeatmapMethod::NearestNeighbor => nn_order(&set, DistanceMetric::Euclidean, true)?,
    };
    let scores = assignment.scores();
    Ok((0..h)
        .map(|i| (0..h).map(|j| scores[i * h + j]).collect())
        .collect())
}

/// Writes the heatmap matrix as CSV, one row per first-coordinate index.
pub fn emit_rank_heatmap(
    reward: &HeatmapReward,
    method: HeatmapMethod,
    h: usize,
    path: &Path,
) -> Result<(), ConfigError> {
    let matrix = rank_heatmap(reward, method, h)?;
    let mut writer = csv::Writer::from_path(path).map_err(paretoflow_core::Error::from)?;
    for row in &matrix {
        let record: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writer
            .write_record(&record)
            .map_err(paretoflow_core::Error::from)?;
    }
    writer
        .flush()
        .map_err(|e| ConfigError::Invalid(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Spearman rank correlation between two equally shaped matrices.
pub fn spearman_correlation(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    fn ranks(values: &[f64]) -> Vec<f64> {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
        let mut out = vec![0.0; values.len()];
        let mut i = 0;
        while i < values.len() {
            let mut j = i;
            while j + 1 < values.len() && values[order[j + 1]] == values[order[i]] {
                j += 1;
            }
            let mid = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                out[order[k]] = mid;
            }
            i = j + 1;
        }
        out
    }
    let flat_a: Vec<f64> = a.iter().flatten().copied().collect();
    let flat_b: Vec<f64> = b.iter().flatten().copied().collect();
    let ra = ranks(&flat_a);
    let rb = ranks(&flat_b);
    let n = ra.len() as f64;
    let mean_a = ra.iter().sum::<f64>() / n;
    let mean_b = rb.iter().sum::<f64>() / n;
    let mut covariance = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        covariance += (x - mean_a) * (y - mean_b);
        var_a += (x - mean_a) * (x - mean_a);
        var_b += (y - mean_b) * (y - mean_b);
    }
    covariance / (var_a.sqrt() * var_b.sqrt())
}
