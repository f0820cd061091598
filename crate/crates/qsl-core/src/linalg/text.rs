//! Matrix text format used by the CLI.
//!
//! First line `N`, then N lines each holding N `re im` pairs separated by
//! whitespace. Numbers are written with 17 significant digits so a
//! write/parse cycle reproduces every f64 exactly.

use num_complex::Complex64;

use super::{ComplexMatrix, DensityMatrix, HermitianMatrix};
use crate::error::{Error, Result};

pub fn write_matrix(m: &ComplexMatrix) -> String {
    let n = m.dim();
    let mut out = String::new();
    out.push_str(&format!("{n}\n"));
    for i in 0..n {
        let row: Vec<String> = (0..n)
            .map(|j| {
                let z = m.get(i, j);
                format!("{:.16e} {:.16e}", z.re, z.im)
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses the matrix starting at `lines[start]`; `line_base` is the 1-based
/// line number of `lines[start]` for diagnostics. Returns the matrix and the
/// number of lines consumed.
pub(crate) fn parse_matrix_at(
    lines: &[&str],
    start: usize,
    line_base: usize,
) -> Result<(ComplexMatrix, usize)> {
    let header = lines
        .get(start)
        .ok_or_else(|| parse_err(line_base, "missing matrix dimension line"))?;
    let n: usize = header.trim().parse().map_err(|_| {
        parse_err(
            line_base,
            format!("expected matrix dimension, got `{header}`"),
        )
    })?;
    if n == 0 {
        return Err(parse_err(line_base, "matrix dimension must be positive"));
    }
    let mut m = ComplexMatrix::zeros(n);
    for i in 0..n {
        let lineno = line_base + 1 + i;
        let row = lines
            .get(start + 1 + i)
            .ok_or_else(|| parse_err(lineno, format!("missing matrix row {} of {n}", i + 1)))?;
        let toks: Vec<&str> = row.split_whitespace().collect();
        if toks.len() != 2 * n {
            return Err(parse_err(
                lineno,
                format!(
                    "expected {} numbers (re im pairs), got {}",
                    2 * n,
                    toks.len()
                ),
            ));
        }
        for j in 0..n {
            let re: f64 = toks[2 * j]
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad number `{}`", toks[2 * j])))?;
            let im: f64 = toks[2 * j + 1]
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad number `{}`", toks[2 * j + 1])))?;
            if !re.is_finite() || !im.is_finite() {
                return Err(parse_err(lineno, "matrix entries must be finite"));
            }
            m.set(i, j, Complex64::new(re, im));
        }
    }
    Ok((m, n + 1))
}

pub fn parse_matrix(src: &str) -> Result<ComplexMatrix> {
    let lines: Vec<&str> = src.lines().collect();
    let (m, used) = parse_matrix_at(&lines, 0, 1)?;
    if lines[used..].iter().any(|l| !l.trim().is_empty()) {
        return Err(parse_err(used + 1, "unexpected trailing content"));
    }
    Ok(m)
}

/// Parses a matrix in a Hermitian role (states, Hamiltonians); rejects
/// non-Hermitian input.
pub fn parse_hermitian(src: &str) -> Result<HermitianMatrix> {
    HermitianMatrix::new(parse_matrix(src)?)
}

/// Parses and fully validates a density matrix (Hermitian, unit trace, PSD).
pub fn parse_density(src: &str) -> Result<DensityMatrix> {
    DensityMatrix::from_matrix(parse_matrix(src)?)
}
