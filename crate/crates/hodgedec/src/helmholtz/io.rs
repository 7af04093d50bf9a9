//! CSV serialization of grid fields.
//!
//! One row per node in node-index order, comma-separated, a single leading
//! header line carrying the grid metadata
//! (`# r0=...,R=...,n_r=...,n_ang=...,version=...,kind=...`), then columns
//! `r,phi,theta,v_x,v_y,v_z` for vector fields or `r,phi,theta,u` for scalar
//! fields. Values use the shortest decimal representation that round-trips
//! exactly, so write-then-read reproduces a field bit for bit. Readers
//! rebuild the grid from the header and reject rows whose coordinates do not
//! match the node ordering; parse errors carry one-based line numbers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{GridScalarField, GridVectorField, HelmholtzError, ShellGrid};
use crate::geom::Vec3;

fn header_line(grid: &ShellGrid, kind: &str) -> String {
    format!(
        "# r0={},R={},n_r={},n_ang={},version={},kind={}",
        grid.r0(),
        grid.outer_radius(),
        grid.n_r(),
        grid.n_ang(),
        env!("CARGO_PKG_VERSION"),
        kind,
    )
}

fn node_coords(grid: &ShellGrid, i: usize) -> (f64, f64, f64) {
    let dir = grid.node_direction(i);
    (grid.node_radius(i), dir.phi(), dir.theta())
}

/// Write a vector field, one `r,phi,theta,v_x,v_y,v_z` row per node.
pub fn write_vector_csv(
    path: &Path,
    grid: &ShellGrid,
    field: &GridVectorField,
) -> Result<(), HelmholtzError> {
    if field.values().len() != grid.n_nodes() {
        return Err(HelmholtzError::FieldSizeMismatch {
            expected: grid.n_nodes(),
            got: field.values().len(),
        });
    }
    let mut out = header_line(grid, "vector");
    out.push('\n');
    for (i, v) in field.values().iter().enumerate() {
        let (r, phi, theta) = node_coords(grid, i);
        writeln!(out, "{r},{phi},{theta},{},{},{}", v.x, v.y, v.z).expect("string writes succeed");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write a scalar field, one `r,phi,theta,u` row per node.
pub fn write_scalar_csv(
    path: &Path,
    grid: &ShellGrid,
    field: &GridScalarField,
) -> Result<(), HelmholtzError> {
    if field.values().len() != grid.n_nodes() {
        return Err(HelmholtzError::FieldSizeMismatch {
            expected: grid.n_nodes(),
            got: field.values().len(),
        });
    }
    let mut out = header_line(grid, "scalar");
    out.push('\n');
    for (i, u) in field.values().iter().enumerate() {
        let (r, phi, theta) = node_coords(grid, i);
        writeln!(out, "{r},{phi},{theta},{u}").expect("string writes succeed");
    }
    fs::write(path, out)?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> HelmholtzError {
    HelmholtzError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_number(line: usize, label: &str, text: &str) -> Result<f64, HelmholtzError> {
    let value: f64 = text
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("{label} is not a number: {text:?}")))?;
    if !value.is_finite() {
        return Err(parse_err(line, format!("{label} is not finite: {text:?}")));
    }
    Ok(value)
}

/// Parse the metadata header and rebuild the grid it describes.
fn parse_header(line: &str, expected_kind: &str) -> Result<ShellGrid, HelmholtzError> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| {
            parse_err(
                1,
                "missing metadata header (expected a line starting with #)",
            )
        })?
        .trim();
    let mut r0 = None;
    let mut big_r = None;
    let mut n_r = None;
    let mut n_ang = None;
    let mut kind = None;
    for item in body.split(',') {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| parse_err(1, format!("malformed header entry: {item:?}")))?;
        match key.trim() {
            "r0" => r0 = Some(parse_number(1, "r0", value)?),
            "R" => big_r = Some(parse_number(1, "R", value)?),
            "n_r" => {
                n_r = Some(
                    value
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| parse_err(1, format!("n_r is not a count: {value:?}")))?,
                )
            }
            "n_ang" => {
                n_ang = Some(
                    value
                        .trim()
                        .parse::<u32>()
                        .map_err(|_| parse_err(1, format!("n_ang is not a count: {value:?}")))?,
                )
            }
            "kind" => kind = Some(value.trim().to_string()),
            // unknown keys (including version) are carried, not enforced
            _ => {}
        }
    }
    let missing = |name: &str| parse_err(1, format!("header is missing {name}"));
    let kind = kind.ok_or_else(|| missing("kind"))?;
    if kind != expected_kind {
        return Err(parse_err(
            1,
            format!("expected kind={expected_kind}, found kind={kind}"),
        ));
    }
    ShellGrid::new(
        r0.ok_or_else(|| missing("r0"))?,
        big_r.ok_or_else(|| missing("R"))?,
        n_r.ok_or_else(|| missing("n_r"))?,
        n_ang.ok_or_else(|| missing("n_ang"))?,
    )
}

/// Shared row scan: checks column count and the three coordinate columns
/// against the rebuilt grid, returning the remaining value columns per node.
fn read_rows(
    content: &str,
    expected_kind: &str,
    n_values: usize,
) -> Result<(ShellGrid, Vec<Vec<f64>>), HelmholtzError> {
    let mut lines = content.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let grid = parse_header(first, expected_kind)?;
    let n_cols = 3 + n_values;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(grid.n_nodes());
    for (idx, text) in lines {
        let line = idx + 1;
        if text.trim().is_empty() {
            continue;
        }
        if text.starts_with('#') {
            return Err(parse_err(line, "unexpected second header line"));
        }
        if rows.len() == grid.n_nodes() {
            return Err(parse_err(
                line,
                format!(
                    "more rows than the {} grid nodes in the header",
                    grid.n_nodes()
                ),
            ));
        }
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != n_cols {
            return Err(parse_err(
                line,
                format!("expected {n_cols} columns, found {}", fields.len()),
            ));
        }
        let i = rows.len();
        let (er, ephi, etheta) = node_coords(&grid, i);
        for (label, text, expected) in [
            ("r", fields[0], er),
            ("phi", fields[1], ephi),
            ("theta", fields[2], etheta),
        ] {
            let got = parse_number(line, label, text)?;
            if (got - expected).abs() > 1e-9 * (1.0 + expected.abs()) {
                return Err(parse_err(
                    line,
                    format!(
                        "{label} = {got} does not match node {i} of the header grid ({expected})"
                    ),
                ));
            }
        }
        let values: Result<Vec<f64>, HelmholtzError> = fields[3..]
            .iter()
            .enumerate()
            .map(|(k, text)| parse_number(line, &format!("value column {}", k + 1), text))
            .collect();
        rows.push(values?);
    }
    if rows.len() != grid.n_nodes() {
        return Err(parse_err(
            content.lines().count() + 1,
            format!(
                "expected {} data rows, found {}",
                grid.n_nodes(),
                rows.len()
            ),
        ));
    }
    Ok((grid, rows))
}

/// Read a vector field and the grid it lives on.
pub fn read_vector_csv(path: &Path) -> Result<(ShellGrid, GridVectorField), HelmholtzError> {
    let content = fs::read_to_string(path)?;
    let (grid, rows) = read_rows(&content, "vector", 3)?;
    let values: Vec<Vec3> = rows
        .iter()
        .map(|row| Vec3::new(row[0], row[1], row[2]))
        .collect();
    let field = GridVectorField::from_values(&grid, values)?;
    Ok((grid, field))
}

/// Read a scalar field and the grid it lives on.
pub fn read_scalar_csv(path: &Path) -> Result<(ShellGrid, GridScalarField), HelmholtzError> {
    let content = fs::read_to_string(path)?;
    let (grid, rows) = read_rows(&content, "scalar", 1)?;
    let field = GridScalarField::from_values(&grid, rows.iter().map(|row| row[0]).collect())?;
    Ok((grid, field))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> ShellGrid {
        ShellGrid::new(1.0, 16.0, 16, 2).unwrap()
    }

    #[test]
    fn vector_round_trip_is_exact() {
        let grid = grid();
        let field = GridVectorField::from_fn(&grid, |x| {
            Vec3::new(x.x.sin(), 1.0 / (1.0 + x.norm_squared()), x.y * x.z)
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.csv");
        write_vector_csv(&path, &grid, &field).unwrap();
        let (back_grid, back) = read_vector_csv(&path).unwrap();
        assert_eq!(back_grid.n_nodes(), grid.n_nodes());
        assert_eq!(back, field);
    }

    #[test]
    fn scalar_round_trip_is_exact() {
        let grid = grid();
        let field = GridScalarField::from_fn(&grid, |x| (0.7 * x.x).cos() - x.norm());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.csv");
        write_scalar_csv(&path, &grid, &field).unwrap();
        let (_, back) = read_scalar_csv(&path).unwrap();
        assert_eq!(back, field);
    }

    #[test]
    fn reader_reports_line_numbers() {
        let grid = grid();
        let field = GridScalarField::zeros(&grid);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.csv");
        write_scalar_csv(&path, &grid, &field).unwrap();
        let mut content = fs::read_to_string(&path).unwrap();
        // corrupt the value column of the third data row (file line 4)
        let lines: Vec<&str> = content.lines().collect();
        let mut broken: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
        broken[3] = broken[3].rsplit_once(',').unwrap().0.to_string() + ",not-a-number";
        content = broken.join("\n");
        fs::write(&path, &content).unwrap();
        match read_scalar_csv(&path) {
            Err(HelmholtzError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn reader_rejects_mismatched_shapes() {
        let grid = grid();
        let field = GridScalarField::zeros(&grid);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.csv");
        write_scalar_csv(&path, &grid, &field).unwrap();
        let content = fs::read_to_string(&path).unwrap();

        // wrong kind tag
        let as_vector = content.replacen("kind=scalar", "kind=vector", 1);
        fs::write(&path, &as_vector).unwrap();
        assert!(matches!(
            read_vector_csv(&path),
            Err(HelmholtzError::Parse { line: 2, .. })
        ));
        fs::write(&path, content.replacen("kind=scalar", "kind=tensor", 1)).unwrap();
        assert!(matches!(
            read_scalar_csv(&path),
            Err(HelmholtzError::Parse { line: 1, .. })
        ));

        // truncated file: row count no longer matches the header grid
        let truncated: Vec<&str> = content.lines().take(grid.n_nodes()).collect();
        fs::write(&path, truncated.join("\n")).unwrap();
        assert!(matches!(
            read_scalar_csv(&path),
            Err(HelmholtzError::Parse { .. })
        ));

        // swapped rows: coordinates no longer match the node ordering
        let mut swapped: Vec<String> = content.lines().map(|l| l.to_string()).collect();
        swapped.swap(1, grid.n_nodes());
        fs::write(&path, swapped.join("\n")).unwrap();
        assert!(matches!(
            read_scalar_csv(&path),
            Err(HelmholtzError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            read_scalar_csv(&dir.path().join("absent.csv")),
            Err(HelmholtzError::Io(_))
        ));
    }
}
