use std::path::Path;

use super::Dataset;
use crate::{Error, Result};

/// Reads `f0,...,f{d-1},label` rows. When `num_classes` is `None` the class
/// count is inferred as `max(label) + 1`.
pub fn load_csv(path: impl AsRef<Path>, num_classes: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let err = |line: u64, reason: String| Error::Csv {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .quoting(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => err(0, format!("{other:?}")),
        })?;

    let header = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let width = header.len();
    if width < 2 {
        return Err(err(1, "header needs at least one feature column and `label`".into()));
    }
    let dim = width - 1;
    for (i, name) in header.iter().enumerate() {
        let expected = if i == dim { "label".to_string() } else { format!("f{i}") };
        if name.trim() != expected {
            return Err(err(1, format!("column {i} is `{name}`, expected `{expected}`")));
        }
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(err(line, format!("expected {width} fields, found {}", record.len())));
        }
        for (i, field) in record.iter().take(dim).enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| err(line, format!("f{i}: `{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(err(line, format!("f{i}: `{field}` is not finite")));
            }
            features.push(v);
        }
        let raw = &record[dim];
        let label: usize = raw
            .trim()
            .parse()
            .map_err(|_| err(line, format!("label `{raw}` is not a non-negative integer")))?;
        if let Some(c) = num_classes {
            if label >= c {
                return Err(err(line, format!("label {label} out of range for {c} classes")));
            }
        }
        labels.push(label);
    }

    let classes = match num_classes {
        Some(c) => c,
        None => labels.iter().max().map_or(0, |m| m + 1).max(2),
    };
    Dataset::new(features, dim, labels, classes)
}
