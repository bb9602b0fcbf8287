//! Reading and writing score files.
//!
//! Writers emit CSV with an `index,score` header. Readers also accept
//! headerless one-number-per-line text and JSON arrays, so scores
//! produced elsewhere can be evaluated directly.

use std::path::Path;

use crate::error::{Error, Result};

/// Writes scores as `index,score` CSV with full float round-tripping.
pub fn write_scores_csv(path: &Path, scores: &[f64]) -> Result<()> {
    let mut body = String::from("index,score\n");
    for (i, s) in scores.iter().enumerate() {
        body.push_str(&format!("{i},{s:.17e}\n"));
    }
    std::fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reads scores from CSV (`index,score`, header optional), plain
/// numbers, or a JSON array.
pub fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return serde_json::from_str::<Vec<f64>>(trimmed).map_err(|e| Error::Format {
            offset: e.column(),
            message: format!("{}: JSON scores: {e}", path.display()),
        });
    }
    let mut scores = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        // The last comma-separated field is the score; a leading index
        // column is ignored.
        let field = line.rsplit(',').next().unwrap().trim();
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => scores.push(v),
            Ok(v) => {
                return Err(Error::InvalidInput(format!(
                    "{}:{}: non-finite score {v}",
                    path.display(),
                    lineno + 1
                )))
            }
            Err(_) if lineno == 0 => continue, // header row
            Err(_) => {
                return Err(Error::Format {
                    offset: lineno + 1,
                    message: format!(
                        "{}:{}: cannot parse score '{field}'",
                        path.display(),
                        lineno + 1
                    ),
                })
            }
        }
    }
    if scores.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: no scores found",
            path.display()
        )));
    }
    Ok(scores)
}
