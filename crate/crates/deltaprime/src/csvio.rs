//! Minimal CSV reading/writing with deterministic float formatting.

use crate::error::{Error, Result};
use crate::grid::Grid;
use std::io::Write;
use std::path::Path;

pub(crate) fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

pub(crate) fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

pub(crate) fn write_columns(path: &Path, header: &[&str], cols: &[&[f64]]) -> Result<()> {
    assert_eq!(header.len(), cols.len());
    let n = cols.first().map_or(0, |c| c.len());
    for c in cols {
        assert_eq!(c.len(), n, "ragged columns");
    }
    let rows: Vec<Vec<String>> = (0..n)
        .map(|i| cols.iter().map(|c| fmt(c[i])).collect())
        .collect();
    write_rows(path, header, &rows)
}

pub(crate) fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Csv(format!("{}: empty file", path.display())))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(Error::Csv(format!(
                "{}: line {} has {} fields, expected {}",
                path.display(),
                lineno + 2,
                fields.len(),
                header.len()
            )));
        }
        for (c, field) in cols.iter_mut().zip(&fields) {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Csv(format!(
                    "{}: line {}: cannot parse '{}'",
                    path.display(),
                    lineno + 2,
                    field
                ))
            })?;
            c.push(v);
        }
    }
    Ok((header, cols))
}

pub(crate) fn grid_from_xs(xs: &[f64]) -> Result<Grid> {
    if xs.len() < 3 {
        return Err(Error::Csv("need at least 3 grid points".into()));
    }
    let n = xs.len();
    let grid = Grid::new(xs[0], xs[n - 1], n).map_err(|e| Error::Csv(e.to_string()))?;
    let h = grid.h();
    for (i, &x) in xs.iter().enumerate() {
        if (x - grid.x(i)).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::Csv(format!(
                "grid column is not uniform at index {i}: {x} vs {}",
                grid.x(i)
            )));
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bytes() {
        let dir = std::env::temp_dir().join("deltaprime_csvio_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let a = vec![1.0, -0.25, 3.5e-7];
        let b = vec![0.0, 2.0, -1.0];
        write_columns(&path, &["a", "b"], &[&a, &b]).unwrap();
        let first = std::fs::read(&path).unwrap();
        let (hdr, cols) = read_columns(&path).unwrap();
        assert_eq!(hdr, vec!["a", "b"]);
        assert_eq!(cols[0], a);
        assert_eq!(cols[1], b);
        write_columns(&path, &["a", "b"], &[&cols[0], &cols[1]]).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn uniform_grid_recovery() {
        let g = Grid::new(-2.0, 3.0, 11).unwrap();
        let got = grid_from_xs(&g.xs()).unwrap();
        assert_eq!(got, g);
        let mut bad = g.xs();
        bad[5] += 1e-3;
        assert!(grid_from_xs(&bad).is_err());
    }
}
