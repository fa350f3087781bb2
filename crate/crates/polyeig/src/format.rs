//! The `mpoly` text format.
//!
//! ```text
//! mpoly 1
//! <d> <k>
//! <block P_0: k lines of 2k numbers, re im interleaved>
//!
//! <block P_1>
//! ...
//! ```

use std::fmt::Write as _;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::polynomial::MatrixPolynomial;
use crate::rotation::C64;

pub const HEADER: &str = "mpoly 1";

/// Serializes with 17 significant digits, enough to round-trip exactly.
pub fn write_mpoly(p: &MatrixPolynomial) -> String {
    let (d, k) = (p.degree(), p.size());
    let mut out = format!("{HEADER}\n{d} {k}\n");
    for (b, c) in p.coeffs().iter().enumerate() {
        if b > 0 {
            out.push('\n');
        }
        for i in 0..k {
            let row: Vec<String> =
                (0..k).flat_map(|j| [c[(i, j)].re, c[(i, j)].im]).map(|x| format!("{x:.16e}")).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

pub fn read_mpoly(text: &str) -> Result<MatrixPolynomial> {
    let mut lines = text.lines().map(str::trim_end).enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    if header.trim() != HEADER {
        return Err(Error::Parse(format!("expected header `{HEADER}`, found `{header}`")));
    }
    let (_, dims) = lines.next().ok_or_else(|| Error::Parse("missing dimension line".into()))?;
    let dims: Vec<&str> = dims.split_whitespace().collect();
    let parse_dim = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad dimension `{s}`")));
    if dims.len() != 2 {
        return Err(Error::Parse("dimension line must read `<d> <k>`".into()));
    }
    let (d, k) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    if d == 0 {
        return Err(Error::Input("degree must be at least 1".into()));
    }
    if k == 0 {
        return Err(Error::Input("coefficient size must be at least 1".into()));
    }

    let mut blocks: Vec<Vec<Vec<f64>>> = vec![Vec::new()];
    for (no, line) in lines {
        if line.trim().is_empty() {
            if !blocks.last().is_some_and(Vec::is_empty) {
                blocks.push(Vec::new());
            }
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("line {}: bad number `{t}`", no + 1))))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != 2 * k {
            return Err(Error::Dimension(format!("line {}: expected {} numbers, found {}", no + 1, 2 * k, row.len())));
        }
        blocks.last_mut().expect("nonempty").push(row);
    }
    if blocks.last().is_some_and(Vec::is_empty) {
        blocks.pop();
    }
    if blocks.len() != d + 1 {
        return Err(Error::Dimension(format!("expected {} coefficient blocks, found {}", d + 1, blocks.len())));
    }
    let coeffs = blocks
        .iter()
        .enumerate()
        .map(|(b, rows)| {
            if rows.len() != k {
                return Err(Error::Dimension(format!("block {b} has {} rows, expected {k}", rows.len())));
            }
            Ok(DenseMatrix::from_fn(k, k, |i, j| C64::new(rows[i][2 * j], rows[i][2 * j + 1])))
        })
        .collect::<Result<Vec<_>>>()?;
    MatrixPolynomial::new(coeffs)
}

/// Reads `d − 1` blocks of `k×k` matrices in the same layout (no header
/// beyond `mpoly 1` and `<d−1> <k>`), used for custom splits.
pub fn read_blocks(text: &str, k: usize, count: usize) -> Result<Vec<DenseMatrix>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    // A block list is a polynomial of degree count − 1 whose leading block
    // may vanish, so parse it leniently through a padded copy.
    let padded = {
        let mut t = text.to_string();
        if !t.ends_with('\n') {
            t.push('\n');
        }
        let ident: String = (0..k)
            .map(|i| (0..k).map(|j| if i == j { "1 0" } else { "0 0" }).collect::<Vec<_>>().join(" ") + "\n")
            .collect();
        let mut lines: Vec<&str> = t.lines().collect();
        if lines.len() < 2 {
            return Err(Error::Parse("split file too short".into()));
        }
        let dims: Vec<&str> = lines[1].split_whitespace().collect();
        if dims.len() != 2 || dims[0].parse::<usize>().ok() != Some(count) || dims[1].parse::<usize>().ok() != Some(k) {
            return Err(Error::Dimension(format!("split file must declare `{count} {k}`")));
        }
        let header = format!("{HEADER}\n{count} {k}");
        lines.drain(..2);
        format!("{header}\n{}\n\n{ident}", lines.join("\n").trim_end())
    };
    let p = read_mpoly(&padded)?;
    Ok(p.coeffs()[..count].to_vec())
}
