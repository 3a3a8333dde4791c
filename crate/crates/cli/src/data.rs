//! CSV ingestion with declared column roles.

use std::path::Path;

use csa_core::estimate::ObservedData;

use crate::config::ColumnRoles;
use crate::error::CliError;

/// Reads a headered CSV and maps the declared role columns into
/// [`ObservedData`].
pub fn read_csv(path: &Path, roles: &ColumnRoles) -> Result<ObservedData, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(e.to_string()))?
        .clone();
    let index_of = |name: &str| -> Result<usize, CliError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(format!("column '{name}' not found in {}", path.display())))
    };

    let x_idx: Vec<usize> = roles
        .x
        .iter()
        .map(|n| index_of(n))
        .collect::<Result<_, _>>()?;
    let a_idx = index_of(&roles.a)?;
    let m_idx: Vec<usize> = roles
        .mediators
        .iter()
        .map(|n| index_of(n))
        .collect::<Result<_, _>>()?;
    let y_idx = index_of(&roles.y)?;

    let mut x = vec![Vec::new(); x_idx.len()];
    let mut a = Vec::new();
    let mut mediators = vec![Vec::new(); m_idx.len()];
    let mut y = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(e.to_string()))?;
        let field = |idx: usize| -> Result<f64, CliError> {
            record
                .get(idx)
                .ok_or_else(|| CliError::Data(format!("row {row_no}: missing field {idx}")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| CliError::Data(format!("row {row_no}: {e}")))
        };
        for (col, &idx) in x.iter_mut().zip(&x_idx) {
            col.push(field(idx)?);
        }
        a.push(field(a_idx)?);
        for (col, &idx) in mediators.iter_mut().zip(&m_idx) {
            col.push(field(idx)?);
        }
        y.push(field(y_idx)?);
    }

    let data = ObservedData { x, a, mediators, y };
    data.validate().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(data)
}
