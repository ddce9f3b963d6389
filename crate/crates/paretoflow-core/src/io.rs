//! Points-file reading and writing: CSV with one row per point, d numeric
//! columns, optional header sniffed from the first row. Ids are assigned
//! by row order.

use std::path::Path;

use crate::error::{Error, Result};
use crate::pareto::PointSet;

/// Reads a point set from CSV. A first row with any non-numeric cell is
/// treated as a header and skipped.
pub fn read_points_csv(path: &Path) -> Result<PointSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|cell| cell.parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue, // header row
            Err(e) => {
                return Err(Error::InvalidInput(format!(
                    "non-numeric cell in row {}: {e}",
                    i + 1
                )))
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptySet);
    }
    PointSet::from_rows(rows)
}

/// Writes a point set as headerless CSV in id order.
pub fn write_points_csv(path: &Path, points: &PointSet) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for point in points.points() {
        let row: Vec<String> = point.values().iter().map(|v| format!("{v}")).collect();
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
