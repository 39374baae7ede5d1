// SPDX-License-Identifier: Apache-2.0

//! Plain-text instance files.
//!
//! ```text
//! ppg-instance
//! format 1
//! problem sysreal | flasso
//! seed <u64>
//! <key> <values...>          scalar parameters
//! matrix <name> <rows> <cols>
//! <rows lines, row-major, space separated>
//! end
//! ```
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! save/load cycle is exact. The fused-lasso pseudoinverse is recomputed on
//! load.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{FusedLassoInstance, SysRealInstance};
use crate::error::{Error, Result};
use crate::linops::HankelShape;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "ppg-instance";

#[derive(Clone, Debug)]
pub enum StoredInstance {
    SysReal(SysRealInstance<f64>),
    FusedLasso(FusedLassoInstance<f64>),
}

fn write_matrix<W: Write>(w: &mut W, name: &str, m: &DMatrix<f64>) -> std::io::Result<()> {
    writeln!(w, "matrix {name} {} {}", m.nrows(), m.ncols())?;
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_instance<W: Write>(w: &mut W, inst: &StoredInstance) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "format {FORMAT_VERSION}")?;
    match inst {
        StoredInstance::SysReal(s) => {
            let sh = s.shape;
            writeln!(w, "problem sysreal")?;
            writeln!(w, "seed {}", s.seed)?;
            writeln!(w, "shape {} {} {} {}", sh.m, sh.n, sh.j, sh.k)?;
            writeln!(w, "lambda {:e}", s.lambda)?;
            write_matrix(w, "data", &s.measurement_matrix())?;
        }
        StoredInstance::FusedLasso(f) => {
            writeln!(w, "problem flasso")?;
            writeln!(w, "seed {}", f.seed)?;
            writeln!(w, "lambda1 {:e}", f.lambda1)?;
            writeln!(w, "lambda2 {:e}", f.lambda2)?;
            write_matrix(w, "a", &f.a)?;
            write_matrix(w, "labels", &DMatrix::from_row_slice(1, f.labels.len(), f.labels.as_slice()))?;
        }
    }
    writeln!(w, "end")?;
    Ok(())
}

pub fn save_instance(path: &Path, inst: &StoredInstance) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_instance(&mut w, inst)?;
    w.flush()?;
    Ok(())
}

struct Lines<R: BufRead> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        loop {
            self.line_no += 1;
            match self.inner.next() {
                Some(l) => {
                    let l = l?;
                    if !l.trim().is_empty() {
                        return Ok(l);
                    }
                }
                None => return Err(self.err("unexpected end of file")),
            }
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Format(format!("line {}: {msg}", self.line_no))
    }

    /// Reads `key v1 v2 ...` and returns the values.
    fn keyed(&mut self, key: &str) -> Result<Vec<String>> {
        let line = self.next_line()?;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some(k) if k == key => Ok(parts.map(str::to_owned).collect()),
            Some(k) => Err(self.err(&format!("expected '{key}', found '{k}'"))),
            None => Err(self.err(&format!("expected '{key}'"))),
        }
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(&format!("cannot parse '{s}'")))
    }

    fn scalar<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let vals = self.keyed(key)?;
        if vals.len() != 1 {
            return Err(self.err(&format!("'{key}' takes one value")));
        }
        self.parse(&vals[0])
    }

    fn matrix(&mut self, name: &str) -> Result<DMatrix<f64>> {
        let head = self.keyed("matrix")?;
        if head.len() != 3 || head[0] != name {
            return Err(self.err(&format!("expected 'matrix {name} <rows> <cols>'")));
        }
        let rows: usize = self.parse(&head[1])?;
        let cols: usize = self.parse(&head[2])?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = self.next_line()?;
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(self.parse::<f64>(tok)?);
            }
            if data.len() - before != cols {
                return Err(self.err(&format!("expected {cols} values in row")));
            }
        }
        Ok(DMatrix::from_row_slice(rows, cols, &data))
    }
}

pub fn read_instance<R: BufRead>(r: R) -> Result<StoredInstance> {
    let mut lines = Lines {
        inner: r.lines(),
        line_no: 0,
    };
    if lines.next_line()?.trim() != MAGIC {
        return Err(lines.err("missing 'ppg-instance' header"));
    }
    let version: u32 = lines.scalar("format")?;
    if version != FORMAT_VERSION {
        return Err(lines.err(&format!("unsupported format version {version}")));
    }
    let problem: String = lines.scalar("problem")?;
    let seed: u64 = lines.scalar("seed")?;
    let inst = match problem.as_str() {
        "sysreal" => {
            let dims = lines.keyed("shape")?;
            if dims.len() != 4 {
                return Err(lines.err("'shape' takes m n j k"));
            }
            let d: Vec<usize> = dims.iter().map(|s| lines.parse(s)).collect::<Result<_>>()?;
            let shape = HankelShape::new(d[0], d[1], d[2], d[3])?;
            let lambda: f64 = lines.scalar("lambda")?;
            let data = lines.matrix("data")?;
            if data.shape() != shape.domain_shape() {
                return Err(lines.err("data matrix does not match shape"));
            }
            StoredInstance::SysReal(SysRealInstance::from_data(
                shape,
                DVector::from_column_slice(data.as_slice()),
                lambda,
                seed,
            )?)
        }
        "flasso" => {
            let lambda1: f64 = lines.scalar("lambda1")?;
            let lambda2: f64 = lines.scalar("lambda2")?;
            let a = lines.matrix("a")?;
            let labels = lines.matrix("labels")?;
            if labels.nrows() != 1 || labels.ncols() != a.nrows() {
                return Err(lines.err("labels must be 1 x m"));
            }
            let labels = DVector::from_row_slice(labels.as_slice());
            StoredInstance::FusedLasso(FusedLassoInstance::from_matrix(a, labels, lambda1, lambda2, seed)?)
        }
        other => return Err(lines.err(&format!("unknown problem '{other}'"))),
    };
    if lines.next_line()?.trim() != "end" {
        return Err(lines.err("expected 'end'"));
    }
    Ok(inst)
}

pub fn load_instance(path: &Path) -> Result<StoredInstance> {
    read_instance(BufReader::new(File::open(path)?))
}
