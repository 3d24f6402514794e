//! `SPR1` instance files.
//!
//! Line-oriented UTF-8 text:
//!
//! ```text
//! SPR1 n m s
//! x_0 x_1 … x_{n-1}          signal, zeros included
//! A[0][0] … A[0][n-1]        m rows of the sensing matrix
//! …
//! y_0 … y_{m-1}              observations
//! ```
//!
//! Reals are written with 17 significant digits, so a save/load cycle is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Ensemble, SparseSignal};

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    /// Ground truth; empty support when the file stores an unknown (zero) signal.
    pub signal: SparseSignal,
    /// Sparsity level from the header.
    pub s: usize,
    pub ensemble: Ensemble,
}

/// Formats a real with 17 significant digits.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_vector(v: &[f64]) -> String {
    let mut out = String::with_capacity(v.len() * 24);
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&format_real(*x));
    }
    out
}

pub fn write_instance(signal: &SparseSignal, s: usize, e: &Ensemble) -> Result<String> {
    if signal.n() != e.n() {
        return Err(Error::invalid("signal and ensemble dimensions differ"));
    }
    let mut out = String::new();
    writeln!(out, "SPR1 {} {} {}", e.n(), e.m(), s).unwrap();
    writeln!(out, "{}", format_vector(&signal.to_dense())).unwrap();
    for i in 0..e.m() {
        writeln!(out, "{}", format_vector(e.row(i))).unwrap();
    }
    writeln!(out, "{}", format_vector(e.y())).unwrap();
    Ok(out)
}

fn parse_reals(line: &str, lineno: usize, expected: usize, what: &str) -> Result<Vec<f64>> {
    let vals = line
        .split_whitespace()
        .map(|tok| {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid number `{tok}` in {what}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::parse(lineno, format!("non-finite value in {what}")))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    if vals.len() != expected {
        return Err(Error::parse(
            lineno,
            format!("{what} has {} entries, expected {expected}", vals.len()),
        ));
    }
    Ok(vals)
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "SPR1" {
        return Err(Error::parse(1, "expected header `SPR1 n m s`"));
    }
    let dims = fields[1..]
        .iter()
        .map(|f| f.parse::<usize>().map_err(|_| Error::parse(1, format!("invalid count `{f}`"))))
        .collect::<Result<Vec<usize>>>()?;
    let (n, m, s) = (dims[0], dims[1], dims[2]);
    if n == 0 || m == 0 || s == 0 || s > n {
        return Err(Error::parse(1, format!("invalid dimensions n={n}, m={m}, s={s}")));
    }

    let mut next = |what: &str, expected: usize, lineno_hint: usize| -> Result<Vec<f64>> {
        match lines.next() {
            Some((no, line)) => parse_reals(line, no, expected, what),
            None => Err(Error::parse(lineno_hint, format!("unexpected end of file, missing {what}"))),
        }
    };
    let x = next("signal", n, 2)?;
    let mut a = Vec::with_capacity(m * n);
    for i in 0..m {
        a.extend(next(&format!("row {i}"), n, 3 + i)?);
    }
    let y = next("observations", m, m + 3)?;
    if let Some((no, line)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        let _ = line;
        return Err(Error::parse(no, "trailing content after observations"));
    }

    let signal = SparseSignal::from_dense(&x).map_err(|e| Error::parse(2, e.to_string()))?;
    if signal.s() > s {
        return Err(Error::parse(2, format!("signal has {} nonzeros, header says s={s}", signal.s())));
    }
    let ensemble = Ensemble::new(n, a, y).map_err(|e| Error::parse(m + 3, e.to_string()))?;
    Ok(Instance { signal, s, ensemble })
}

pub fn save_instance(path: impl AsRef<Path>, signal: &SparseSignal, s: usize, e: &Ensemble) -> Result<()> {
    fs::write(path, write_instance(signal, s, e)?)?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    parse_instance(&fs::read_to_string(path)?)
}
