use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use mdiica::DataMatrix;
use nalgebra::DMatrix;

pub struct CsvMatrix {
    pub header: Option<Vec<String>>,
    pub data: DataMatrix,
}

/// Reads a numeric CSV matrix. The first row is a header when any of its
/// fields fails to parse as a number.
pub fn read_matrix(path: &Path) -> Result<CsvMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;

    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed CSV", path.display()))?;
        let line = record.position().map_or(k as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<Option<f64>> = record.iter().map(|f| f.parse::<f64>().ok()).collect();
        if k == 0 && parsed.iter().any(Option::is_none) {
            header = Some(record.iter().map(str::to_string).collect());
            continue;
        }
        let mut row = Vec::with_capacity(parsed.len());
        for (col, (value, raw)) in parsed.into_iter().zip(record.iter()).enumerate() {
            match value {
                Some(v) if v.is_finite() => row.push(v),
                _ => bail!("{}:{line}: column {}: `{raw}` is not a finite number", path.display(), col + 1),
            }
        }
        let width = header.as_ref().map(Vec::len).or(rows.first().map(Vec::len));
        if let Some(w) = width {
            if row.len() != w {
                bail!("{}:{line}: expected {w} fields, found {}", path.display(), row.len());
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    let m = rows[0].len();
    if m < 2 {
        bail!("{}: need at least 2 channels, found {m}", path.display());
    }
    let n = rows.len();
    let data = DataMatrix::new(DMatrix::from_fn(n, m, |i, j| rows[i][j]))?;
    Ok(CsvMatrix { header, data })
}

pub fn matrix_csv(values: &DMatrix<f64>, header: Option<&[String]>) -> String {
    let mut out = String::with_capacity(values.len() * 14);
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for row in values.row_iter() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:.9}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Writes through a temp file in the target directory, then renames, so the
/// file is either complete or absent.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
