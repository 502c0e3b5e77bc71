//! Field CSV files: header `x,y,<components>`, one row per node in grid
//! order, values written with round-trip precision.

use std::path::Path;

use nalgebra::{Matrix2, Matrix3, Vector2};

use super::grid::{Field2, Grid2, Matrix3Field2, MatrixField2, ScalarField2, VectorField2};
use crate::error::{Error, Result};

/// Named columns over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    pub grid: Grid2,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl FieldTable {
    pub fn new(grid: Grid2) -> Self {
        Self { grid, names: Vec::new(), columns: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, column: Vec<f64>) -> &mut Self {
        assert_eq!(column.len(), self.grid.len());
        self.names.push(name.into());
        self.columns.push(column);
        self
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|k| self.columns[k].as_slice())
    }

    pub fn scalar(&mut self, name: &str, f: &ScalarField2) -> &mut Self {
        self.push(name, f.values.clone())
    }

    pub fn vector(&mut self, prefix: &str, f: &VectorField2) -> &mut Self {
        self.push(format!("{prefix}1"), f.component(|v| v.x));
        self.push(format!("{prefix}2"), f.component(|v| v.y))
    }

    pub fn matrix(&mut self, prefix: &str, f: &MatrixField2) -> &mut Self {
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            self.push(format!("{prefix}{}{}", i + 1, j + 1), f.component(|m| m[(i, j)]));
        }
        self
    }

    pub fn matrix3(&mut self, prefix: &str, f: &Matrix3Field2) -> &mut Self {
        for i in 0..3 {
            for j in 0..3 {
                self.push(format!("{prefix}{}{}", i + 1, j + 1), f.component(|m| m[(i, j)]));
            }
        }
        self
    }

    fn require(&self, name: &str) -> Result<&[f64]> {
        self.column(name).ok_or_else(|| Error::config(format!("field file lacks column '{name}'")))
    }

    pub fn get_scalar(&self, name: &str) -> Result<ScalarField2> {
        ScalarField2::from_values(self.grid, self.require(name)?.to_vec())
    }

    pub fn get_vector(&self, prefix: &str) -> Result<VectorField2> {
        let a = self.require(&format!("{prefix}1"))?;
        let b = self.require(&format!("{prefix}2"))?;
        Ok(Field2 { grid: self.grid, values: a.iter().zip(b).map(|(a, b)| Vector2::new(*a, *b)).collect() })
    }

    pub fn get_matrix(&self, prefix: &str) -> Result<MatrixField2> {
        let c: Vec<&[f64]> = ["11", "12", "21", "22"]
            .iter()
            .map(|s| self.require(&format!("{prefix}{s}")))
            .collect::<Result<_>>()?;
        Ok(Field2 {
            grid: self.grid,
            values: (0..self.grid.len()).map(|k| Matrix2::new(c[0][k], c[1][k], c[2][k], c[3][k])).collect(),
        })
    }

    /// 3×3 field; absent entries read as zero.
    pub fn get_matrix3(&self, prefix: &str) -> Result<Matrix3Field2> {
        let mut out = Matrix3Field2::zeros(self.grid);
        let mut found = false;
        for i in 0..3 {
            for j in 0..3 {
                if let Some(col) = self.column(&format!("{prefix}{}{}", i + 1, j + 1)) {
                    found = true;
                    for (m, v) in out.values.iter_mut().zip(col) {
                        m[(i, j)] = *v;
                    }
                }
            }
        }
        if !found {
            return Err(Error::config(format!("field file has no '{prefix}ij' columns")));
        }
        Ok(out)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        let mut header = vec!["x".to_string(), "y".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        let mut rec = Vec::with_capacity(header.len());
        for k in 0..self.grid.len() {
            rec.clear();
            let p = self.grid.point(k);
            rec.push(format!("{:?}", p.x));
            rec.push(format!("{:?}", p.y));
            rec.extend(self.columns.iter().map(|c| format!("{:?}", c[k])));
            w.write_record(&rec)?;
        }
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let rdr = csv::Reader::from_path(path)?;
        Self::read_from(rdr)
    }

    pub fn read_from<R: std::io::Read>(mut rdr: csv::Reader<R>) -> Result<Self> {
        let header: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
        if header.len() < 2 || header[0] != "x" || header[1] != "y" {
            return Err(Error::config("field file header must start with x,y"));
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut columns = vec![Vec::new(); header.len() - 2];
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::Config { line: Some(line + 2), msg: "wrong number of columns".into() });
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config { line: Some(line + 2), msg: format!("bad number '{s}'") })
            };
            xs.push(parse(&rec[0])?);
            ys.push(parse(&rec[1])?);
            for (c, s) in columns.iter_mut().zip(rec.iter().skip(2)) {
                c.push(parse(s)?);
            }
        }
        let grid = infer_grid(&xs, &ys)?;
        Ok(Self { grid, names: header[2..].to_vec(), columns })
    }
}

fn infer_grid(xs: &[f64], ys: &[f64]) -> Result<Grid2> {
    if xs.is_empty() {
        return Err(Error::config("field file has no rows"));
    }
    let nx = xs.iter().skip(1).position(|&x| x <= xs[0]).map_or(xs.len(), |p| p + 1);
    if !xs.len().is_multiple_of(nx) {
        return Err(Error::config("field file rows do not form a rectangular grid"));
    }
    let ny = xs.len() / nx;
    let grid = Grid2::with_origin(nx, ny, xs[nx - 1] - xs[0], ys[xs.len() - 1] - ys[0], Vector2::new(xs[0], ys[0]))?;
    let tol = 1e-9 * grid.lx.max(grid.ly);
    for k in 0..grid.len() {
        let p = grid.point(k);
        if (p.x - xs[k]).abs() > tol || (p.y - ys[k]).abs() > tol {
            return Err(Error::config(format!("node {k} is off the uniform grid")));
        }
    }
    Ok(grid)
}

/// Reads a 3×3 field from a CSV whose columns are named `<prefix>ij`.
pub fn read_matrix3(path: impl AsRef<Path>, prefix: &str) -> Result<Matrix3Field2> {
    FieldTable::read(path)?.get_matrix3(prefix)
}

pub fn matrix3_from_2x2(f: &MatrixField2) -> Matrix3Field2 {
    f.map(|m| {
        let mut out = Matrix3::zeros();
        out.fixed_view_mut::<2, 2>(0, 0).copy_from(m);
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Grid2::with_origin(5, 4, 1.3, 0.7, Vector2::new(-0.2, 0.1)).unwrap();
        let f = ScalarField2::from_fn(g, |p| (p.x * 7.1).sin() / 3.0 + p.y.exp());
        let m = MatrixField2::from_fn(g, |p| Matrix2::new(p.x, 1.0 / 3.0, -p.y, 1e-300));
        let mut t = FieldTable::new(g);
        t.scalar("v", &f).matrix("m", &m);
        let mut buf = csv::Writer::from_writer(Vec::new());
        t.write_to(&mut buf).unwrap();
        let bytes = buf.into_inner().unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("x,y,v,m11,m12,m21,m22\n"));
        let back = FieldTable::read_from(csv::Reader::from_reader(bytes.as_slice())).unwrap();
        assert_eq!(back.get_scalar("v").unwrap().values, f.values);
        assert_eq!(back.get_matrix("m").unwrap().values, m.values);
        assert_eq!(back.grid.nx, 5);
        assert_eq!(back.grid.ny, 4);
    }

    #[test]
    fn rejects_non_rectangular_tables() {
        let text = "x,y,v\n0,0,1\n1,0,1\n0,1,1\n";
        assert!(FieldTable::read_from(csv::Reader::from_reader(text.as_bytes())).is_err());
    }
}
