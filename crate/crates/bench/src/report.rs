// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::Path;

use crate::suite::ResultRow;
use crate::BenchError;

pub const CSV_HEADER: &str = "problem,solver,param1,param2,iter,cpu_s,pobj,dobj,dfeas,converged";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Pretty,
}

/// Scientific notation with `digits` significant digits and an explicit
/// exponent sign, e.g. `6.073e+0`.
pub fn sci(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), v);
    match s.split_once('e') {
        Some((mant, exp)) if !exp.starts_with('-') => format!("{mant}e+{exp}"),
        _ => s,
    }
}

fn csv_line(r: &ResultRow) -> String {
    format!(
        "{},{},{},{},{},{:.3},{},{},{},{}",
        r.problem,
        r.solver,
        r.param1,
        r.param2,
        r.iter,
        r.cpu_s,
        sci(r.pobj, 4),
        sci(r.dobj, 4),
        sci(r.dfeas, 2),
        r.converged_count
    )
}

pub fn write_csv<W: Write>(rows: &[ResultRow], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", csv_line(r))?;
    }
    Ok(())
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn to_pretty(rows: &[ResultRow]) -> String {
    let header = ["problem", "param1", "param2", "solver", "iter", "cpu(s)", "pobj/dobj", "dfeas", "conv"];
    let body: Vec<[String; 9]> = rows
        .iter()
        .map(|r| {
            [
                r.problem.clone(),
                r.param1.to_string(),
                r.param2.to_string(),
                r.solver.to_string(),
                r.iter.to_string(),
                format!("{:.2}", r.cpu_s),
                format!("{}/{}", sci(r.pobj, 4), sci(r.dobj, 4)),
                sci(r.dfeas, 2),
                format!("{}/{}", r.converged_count, r.instances),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in &body {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

pub fn emit_report(rows: &[ResultRow], format: ReportFormat, path: &Path) -> Result<(), BenchError> {
    if rows.is_empty() {
        return Err(BenchError::Config("no rows to report".into()));
    }
    let text = match format {
        ReportFormat::Csv => to_csv(rows),
        ReportFormat::Pretty => to_pretty(rows),
    };
    std::fs::write(path, text).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SolverKind;

    fn row() -> ResultRow {
        ResultRow {
            problem: "sysreal".into(),
            solver: SolverKind::Ppg,
            param1: 100.0,
            param2: 0.5,
            iter: 58,
            cpu_s: 1.25,
            pobj: 6.0731,
            dobj: -6.0729,
            dfeas: 0.0000112,
            converged_count: 10,
            instances: 10,
        }
    }

    #[test]
    fn number_formats() {
        assert_eq!(sci(6.0731, 4), "6.073e+0");
        assert_eq!(sci(0.0000112, 2), "1.1e-5");
        assert_eq!(sci(167.04, 4), "1.670e+2");
        assert_eq!(sci(-11.8, 4), "-1.180e+1");
        assert_eq!(sci(0.0, 2), "0.0e+0");
    }

    #[test]
    fn one_row_gives_two_lines() {
        let csv = to_csv(&[row()]);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "sysreal,ppg,100,0.5,58,1.250,6.073e+0,-6.073e+0,1.1e-5,10");
    }

    #[test]
    fn pretty_table_aligns() {
        let table = to_pretty(&[row(), ResultRow { solver: SolverKind::Mfbs, iter: 20000, ..row() }]);
        let lines: Vec<_> = table.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[2].contains("6.073e+0/-6.073e+0"));
        assert!(lines[3].contains("20000"));
        assert_eq!(lines[2].len(), lines[3].len());
    }

    #[test]
    fn empty_rows_and_bad_paths() {
        let dir = std::env::temp_dir();
        assert!(emit_report(&[], ReportFormat::Csv, &dir.join("x.csv")).is_err());
        let bad = dir.join("no-such-dir-ppg").join("x.csv");
        assert!(matches!(emit_report(&[row()], ReportFormat::Csv, &bad), Err(BenchError::Io(_))));
    }
}
