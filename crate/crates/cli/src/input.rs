//! CSV ingestion: comma-separated, header row required.

use std::path::Path;

use sepcoef::ObservationSet;

use crate::error::{CliError, CliResult};
use crate::output::format_sig17;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub records: Vec<Vec<String>>,
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let csv_err = |e: csv::Error| match e.kind() {
        csv::ErrorKind::Io(_) => CliError::Read {
            path: path.to_path_buf(),
            source: std::io::Error::other(e.to_string()),
        },
        _ => CliError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        },
    };
    let file = std::fs::File::open(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(CliError::Csv {
            path: path.to_path_buf(),
            message: "missing header row".into(),
        });
    }
    let records = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_owned).collect()))
        .collect::<Result<Vec<Vec<String>>, _>>()
        .map_err(csv_err)?;
    Ok(Table { headers, records })
}

impl Table {
    fn index_of(&self, name: &str, path: &Path) -> CliResult<usize> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| CliError::Csv {
            path: path.to_path_buf(),
            message: format!("no column named '{name}' (columns: {})", self.headers.join(", ")),
        })
    }

    /// Parses one column; rows are numbered from 1, the header excluded.
    fn numeric_column(&self, j: usize, path: &Path) -> CliResult<Vec<f64>> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, rec)| {
                let cell = &rec[j];
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::Cell {
                        path: path.to_path_buf(),
                        row: i + 1,
                        column: self.headers[j].clone(),
                        value: cell.clone(),
                    })
            })
            .collect()
    }

    /// Builds the observation set; `predictors` defaults to every column
    /// other than the response.
    pub fn observations(&self, response: &str, predictors: &[String], path: &Path) -> CliResult<ObservationSet> {
        let yj = self.index_of(response, path)?;
        let names: Vec<String> = if predictors.is_empty() {
            self.headers.iter().filter(|h| h.as_str() != response).cloned().collect()
        } else {
            predictors.to_vec()
        };
        if names.is_empty() {
            return Err(CliError::Usage("no predictor columns selected".into()));
        }
        let columns = names
            .iter()
            .map(|name| self.index_of(name, path).and_then(|j| self.numeric_column(j, path)))
            .collect::<CliResult<Vec<_>>>()?;
        let y = self.numeric_column(yj, path)?;
        Ok(ObservationSet::from_columns(&columns, y)?
            .with_column_names(names)?
            .with_response_name(response))
    }
}

/// Writes predictors then response, floats to 17 significant digits.
pub fn write_observations<W: std::io::Write>(obs: &ObservationSet, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..obs.p()).map(|j| obs.column_label(j)).collect();
    header.push(obs.response_name().unwrap_or("y").to_string());
    w.write_record(&header)?;
    for k in 0..obs.n() {
        let mut rec: Vec<String> = obs.row(k).iter().map(|&v| format_sig17(v)).collect();
        rec.push(format_sig17(obs.y()[k]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
