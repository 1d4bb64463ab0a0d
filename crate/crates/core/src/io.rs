//! CSV datasets with header `y, z1..zp, x1..xq`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Dataset;

fn indexed_columns(headers: &[String], prefix: char) -> Result<Vec<usize>> {
    let mut found: Vec<(usize, usize)> = Vec::new();
    for (col, h) in headers.iter().enumerate() {
        let Some(rest) = h.strip_prefix(prefix) else { continue };
        if let Ok(k) = rest.parse::<usize>() {
            if k == 0 {
                return Err(Error::InvalidInput(format!("column `{h}`: indices start at 1")));
            }
            found.push((k, col));
        }
    }
    found.sort();
    for (pos, (k, _)) in found.iter().enumerate() {
        if *k != pos + 1 {
            return Err(Error::InvalidInput(format!(
                "columns {prefix}1..{prefix}{} must be present exactly once; column `{prefix}{}` is missing or repeated",
                found.len(),
                pos + 1
            )));
        }
    }
    Ok(found.into_iter().map(|(_, c)| c).collect())
}

/// Reads a dataset from CSV text. Columns other than `y`, `z<j>` and `x<j>` are rejected.
pub fn parse_dataset<R: std::io::Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let y_col = headers
        .iter()
        .position(|h| h == "y")
        .ok_or_else(|| Error::InvalidInput("CSV header has no `y` column".into()))?;
    if headers.iter().filter(|h| *h == "y").count() > 1 {
        return Err(Error::InvalidInput("CSV header has more than one `y` column".into()));
    }
    let z_cols = indexed_columns(&headers, 'z')?;
    let x_cols = indexed_columns(&headers, 'x')?;
    if z_cols.is_empty() {
        return Err(Error::InvalidInput("CSV header has no `z1` column".into()));
    }
    if let Some(h) = headers.iter().enumerate().find_map(|(c, h)| {
        (c != y_col && !z_cols.contains(&c) && !x_cols.contains(&c)).then_some(h)
    }) {
        return Err(Error::InvalidInput(format!(
            "unexpected CSV column `{h}` (expected y, z1..zp, x1..xq)"
        )));
    }
    let (p, q) = (z_cols.len(), x_cols.len());
    let mut y = Vec::new();
    let mut z = Vec::new();
    let mut x = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let cell = |c: usize| -> Result<f64> {
            let s = rec.get(c).unwrap_or("");
            s.parse::<f64>().map_err(|_| {
                Error::InvalidInput(format!("line {line}, column `{}`: `{s}` is not a number", headers[c]))
            })
        };
        let yv = cell(y_col)?;
        if yv != 0.0 && yv != 1.0 {
            return Err(Error::InvalidInput(format!("line {line}: y = {yv} is not 0 or 1")));
        }
        y.push(yv as u8);
        for &c in &z_cols {
            z.push(cell(c)?);
        }
        for &c in &x_cols {
            x.push(cell(c)?);
        }
    }
    if y.is_empty() {
        return Err(Error::InvalidInput("CSV has no data rows".into()));
    }
    Dataset::from_flat(y, z, x, p, q)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))?;
    parse_dataset(file)
}

/// Writes `data` with full round-trip precision.
pub fn write_dataset<W: std::io::Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["y".to_string()];
    header.extend((1..=data.p()).map(|j| format!("z{j}")));
    header.extend((1..=data.q()).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut row = vec![data.y(i).to_string()];
        row.extend(data.z(i).iter().map(|v| v.to_string()));
        row.extend(data.x(i).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset_file(path: &Path, data: &Dataset) -> Result<()> {
    write_dataset(std::fs::File::create(path)?, data)
}
