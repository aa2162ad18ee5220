//! Dataset ingestion: CSV with header `y,x` (record-level) or `y,x,count`
//! (aggregated). Errors carry the offending row number.

use std::path::Path;

use metro_core::target::Dataset;

use crate::CliError;

fn parse_binary(field: &str, name: &str, row: usize) -> Result<bool, CliError> {
    match field.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(CliError::Data(format!(
            "row {row}: {name} must be 0 or 1, got `{other}`"
        ))),
    }
}

fn parse_count(field: &str, row: usize) -> Result<u64, CliError> {
    let n: i64 = field.trim().parse().map_err(|_| {
        CliError::Data(format!(
            "row {row}: count must be an integer, got `{field}`"
        ))
    })?;
    if n < 1 {
        return Err(CliError::Data(format!(
            "row {row}: count must be positive, got {n}"
        )));
    }
    Ok(n as u64)
}

/// Loads and aggregates a dataset. Record-level files collapse to weighted
/// cells, so both formats yield identical datasets for the same subjects.
pub fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l.trim().to_ascii_lowercase(),
            None => {
                return Err(CliError::Data(format!(
                    "{}: empty file, expected a `y,x` or `y,x,count` header",
                    path.display()
                )))
            }
        }
    };
    let aggregated = match header.as_str() {
        "y,x" => false,
        "y,x,count" => true,
        other => {
            return Err(CliError::Data(format!(
                "{}: expected header `y,x` or `y,x,count`, got `{other}`",
                path.display()
            )))
        }
    };

    let mut cells = Vec::new();
    for (idx, raw) in lines {
        let row = idx + 1; // 1-based line number in the file
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = if aggregated { 3 } else { 2 };
        if fields.len() != expected {
            return Err(CliError::Data(format!(
                "row {row}: expected {expected} fields, got {}",
                fields.len()
            )));
        }
        let y = parse_binary(fields[0], "y", row)?;
        let x = parse_binary(fields[1], "x", row)?;
        let count = if aggregated {
            parse_count(fields[2], row)?
        } else {
            1
        };
        cells.push((y, x, count));
    }
    if cells.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Dataset::from_cells(cells).map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn aggregated_study_file() {
        let f = write_tmp("y,x,count\n1,1,3\n1,0,33\n0,1,5\n0,0,193\n");
        let data = load_dataset(f.path()).unwrap();
        assert_eq!(data.total_count(), 234);
        assert_eq!(data.case_count(), 36);
        assert_eq!(data.cell_count(false, false), 193);
    }

    #[test]
    fn record_level_file_aggregates_to_the_same_dataset() {
        let mut rows = String::from("y,x\n");
        for (y, x, n) in [(1, 1, 3), (1, 0, 33), (0, 1, 5), (0, 0, 193)] {
            for _ in 0..n {
                rows.push_str(&format!("{y},{x}\n"));
            }
        }
        let records = load_dataset(write_tmp(&rows).path()).unwrap();
        let aggregated =
            load_dataset(write_tmp("y,x,count\n1,1,3\n1,0,33\n0,1,5\n0,0,193\n").path()).unwrap();
        assert_eq!(records, aggregated);
    }

    #[test]
    fn bad_rows_are_reported_by_number() {
        let err = load_dataset(write_tmp("y,x\n1,0\n2,1\n").path())
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 3"), "{err}");
        assert!(err.contains("y must be 0 or 1"), "{err}");

        let err = load_dataset(write_tmp("y,x,count\n1,1,-3\n").path())
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 2"), "{err}");
        assert!(err.contains("positive"), "{err}");

        let err = load_dataset(write_tmp("y,x,count\n1,1\n").path())
            .unwrap_err()
            .to_string();
        assert!(err.contains("expected 3 fields"), "{err}");
    }

    #[test]
    fn bad_headers_and_empty_files_are_rejected() {
        assert!(load_dataset(write_tmp("").path()).is_err());
        assert!(load_dataset(write_tmp("outcome,exposure\n1,1\n").path()).is_err());
        assert!(load_dataset(write_tmp("y,x\n").path()).is_err());
    }
}
