//! Fixation CSV ingestion: `image_id,participant_id,x,y`, one fixation per row.

use std::path::Path;

use super::DataError;
use crate::metrics::FixationSet;

pub const FIXATION_CSV_HEADER: &str = "image_id,participant_id,x,y";

/// Loads a fixation CSV, validating coordinates against the image bounds.
pub fn load_fixations(path: &Path, width: usize, height: usize) -> Result<FixationSet, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| DataError::Csv {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
    {
        let headers = reader.headers().map_err(|e| DataError::Csv {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        let expected: Vec<&str> = FIXATION_CSV_HEADER.split(',').collect();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(DataError::Parse {
                path: path.to_path_buf(),
                line: 1,
                detail: format!("expected header `{FIXATION_CSV_HEADER}`"),
            });
        }
    }
    let mut points = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| DataError::Csv {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(points.len() + 2);
        if record.len() != 4 {
            return Err(DataError::Parse {
                path: path.to_path_buf(),
                line,
                detail: format!("expected 4 fields, got {}", record.len()),
            });
        }
        let parse = |field: usize, name: &str| -> Result<usize, DataError> {
            record[field].trim().parse().map_err(|_| DataError::Parse {
                path: path.to_path_buf(),
                line,
                detail: format!("bad {name} `{}`", &record[field]),
            })
        };
        let x = parse(2, "x")?;
        let y = parse(3, "y")?;
        if x >= width || y >= height {
            return Err(DataError::FixationOutOfBounds {
                path: path.to_path_buf(),
                line,
                x,
                y,
                width,
                height,
            });
        }
        points.push((x, y));
    }
    Ok(FixationSet::new(width, height, points).expect("bounds checked above"))
}

/// Writes fixations in the schema [`load_fixations`] reads.
pub fn write_fixations(
    path: &Path,
    image_id: &str,
    fix: &FixationSet,
) -> Result<(), DataError> {
    let mut out = String::from(FIXATION_CSV_HEADER);
    out.push('\n');
    for (i, &(x, y)) in fix.points().iter().enumerate() {
        out.push_str(&format!("{image_id},s{i},{x},{y}\n"));
    }
    std::fs::write(path, out).map_err(|e| DataError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
