//! Input and output formats.
//!
//! Samples CSV: a header row of model ids, an optional second row of domain
//! tags, then one row per trial. Moments JSON: `mu` plus a row-major `omega`,
//! with optional `model_ids` and `tags`.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use peai::{DomainTag, MomentEstimate, PerformanceSamples};
use serde::{Deserialize, Serialize};

use crate::diag::{warn, CliError};

/// Moments plus labels, whatever the input format.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub moments: MomentEstimate,
    pub model_ids: Vec<String>,
    pub tags: Vec<DomainTag>,
}

fn read_to_string(path: &str) -> Result<String, CliError> {
    let mut s = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| CliError::io(path, e))?;
    Ok(s)
}

/// Shortest decimal that parses back to the same `f64`, switching to
/// exponent notation for very large or small magnitudes.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn parse_samples_csv(path: &str, text: &str) -> Result<PerformanceSamples, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let mut records = reader.records();
    let line_of = |r: &csv::StringRecord| r.position().map(|p| p.line());

    let header = match records.next() {
        Some(r) => r.map_err(|e| CliError::parse(path, None, e.to_string()))?,
        None => return Err(CliError::parse(path, None, "file is empty")),
    };
    let ids: Vec<String> = header.iter().map(str::to_string).collect();
    if ids.iter().any(String::is_empty) {
        return Err(CliError::parse(
            path,
            line_of(&header),
            "empty model id in header",
        ));
    }
    if ids.iter().all(|s| s.parse::<f64>().is_ok()) {
        return Err(CliError::parse(
            path,
            line_of(&header),
            "expected a header row of model ids, found numbers",
        ));
    }
    let n = ids.len();

    let mut tags: Option<Vec<DomainTag>> = None;
    let mut rows: Vec<f64> = Vec::new();
    let mut trials = 0usize;
    for (k, record) in records.enumerate() {
        let record = record.map_err(|e| CliError::parse(path, None, e.to_string()))?;
        let line = line_of(&record);
        if record.len() != n {
            return Err(CliError::parse(
                path,
                line,
                format!("expected {n} fields, found {}", record.len()),
            ));
        }
        if k == 0 {
            let parsed: Result<Vec<DomainTag>, _> = record.iter().map(str::parse).collect();
            if let Ok(t) = parsed {
                tags = Some(t);
                continue;
            }
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::parse(
                    path,
                    line,
                    format!("column {}: {field:?} is not a number", col + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(CliError::parse(
                    path,
                    line,
                    format!("column {}: non-finite value", col + 1),
                ));
            }
            rows.push(v);
        }
        trials += 1;
    }
    let tags = tags.unwrap_or_else(|| {
        warn(
            "missing_tags",
            format!("{path}: no domain tag row; every model defaults to Expert"),
        );
        vec![DomainTag::Expert; n]
    });
    let values = DMatrix::from_row_slice(trials, n, &rows);
    Ok(PerformanceSamples::new(values, ids, tags)?)
}

pub fn read_samples_csv(path: &str) -> Result<PerformanceSamples, CliError> {
    parse_samples_csv(path, &read_to_string(path)?)
}

pub fn write_samples_csv<W: Write>(out: W, samples: &PerformanceSamples) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(samples.model_ids())?;
    w.write_record(samples.tags().iter().map(|t| t.as_str()))?;
    for row in samples.values().row_iter() {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsFile {
    pub mu: Vec<f64>,
    /// Row-major N×N.
    pub omega: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_ids: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags: Option<Vec<String>>,
}

impl MomentsFile {
    pub fn from_dataset(d: &Dataset) -> Self {
        let m = &d.moments;
        let n = m.n_models();
        Self {
            mu: m.mu().iter().copied().collect(),
            omega: (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| m.omega()[(i, j)])
                .collect(),
            model_ids: Some(d.model_ids.clone()),
            tags: Some(d.tags.iter().map(|t| t.as_str().to_string()).collect()),
        }
    }
}

pub fn parse_moments_json(path: &str, text: &str) -> Result<Dataset, CliError> {
    let file: MomentsFile = serde_json::from_str(text)
        .map_err(|e| CliError::parse(path, Some(e.line() as u64), e.to_string()))?;
    let n = file.mu.len();
    if n == 0 {
        return Err(CliError::parse(path, None, "mu is empty"));
    }
    if file.omega.len() != n * n {
        return Err(CliError::parse(
            path,
            None,
            format!(
                "omega has {} entries, expected {} for {n} models",
                file.omega.len(),
                n * n
            ),
        ));
    }
    let model_ids = match file.model_ids {
        Some(ids) if ids.len() == n => ids,
        Some(ids) => {
            return Err(CliError::parse(
                path,
                None,
                format!("{} model ids for {n} models", ids.len()),
            ))
        }
        None => (1..=n).map(|i| format!("model_{i}")).collect(),
    };
    let tags = match file.tags {
        Some(t) if t.len() == n => t
            .iter()
            .map(|s| s.parse::<DomainTag>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::parse(path, None, e.to_string()))?,
        Some(t) => {
            return Err(CliError::parse(
                path,
                None,
                format!("{} tags for {n} models", t.len()),
            ))
        }
        None => {
            warn(
                "missing_tags",
                format!("{path}: no tags; every model defaults to Expert"),
            );
            vec![DomainTag::Expert; n]
        }
    };
    let mu = DVector::from_vec(file.mu);
    let omega = DMatrix::from_row_slice(n, n, &file.omega);
    Ok(Dataset {
        moments: MomentEstimate::new(mu, omega)?,
        model_ids,
        tags,
    })
}

pub fn read_moments_json(path: &str) -> Result<Dataset, CliError> {
    parse_moments_json(path, &read_to_string(path)?)
}

/// Writes to `path`, or stdout when `path` is `None` or `-`.
pub fn with_output<F>(path: Option<&Path>, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let label = path
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "<stdout>".into());
    let result = match path {
        Some(p) if p.as_os_str() != "-" => {
            let mut file =
                io::BufWriter::new(File::create(p).map_err(|e| CliError::io(&label, e))?);
            f(&mut file).and_then(|_| file.flush())
        }
        _ => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).and_then(|_| lock.flush())
        }
    };
    result.map_err(|e| CliError::io(&label, e))
}
