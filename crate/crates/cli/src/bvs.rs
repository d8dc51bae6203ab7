//! The BVS vector-file format.
//!
//! ```text
//! bvs 1
//! norm lp 2            # or `norm sup`, `norm wlp <p> <w1> … <wd>`
//! dim 3
//! count 2
//! v 1 0 0
//! v 1 1 0
//! ```
//!
//! Blank lines and `#` comments are ignored. Numbers are written in the
//! shortest form that parses back to the same `f64`.

use std::fmt;
use std::path::Path;

use essbasis_core::{NormSpec, VectorR};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum BvsError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: unsupported version `{found}` (expected `bvs 1`)")]
    Version { line: usize, found: String },
    #[error("missing `{field}` line (expected at line {line})")]
    Missing { field: &'static str, line: usize },
    #[error("line {line}: expected `{expected}`, found `{found}`")]
    Unexpected {
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error("line {line}: non-numeric entry `{token}`")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("line {line}: vector has {found} entries but dim is {expected}")]
    DimMismatch { line: usize, expected: usize, found: usize },
    #[error("count declares {declared} vectors but the file contains {found} `v` lines")]
    CountMismatch { declared: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvsFile {
    pub norm: NormSpec,
    pub dim: usize,
    pub vectors: Vec<VectorR>,
}

fn number(line: usize, token: &str) -> Result<f64, BvsError> {
    token
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| BvsError::BadNumber {
            line,
            token: token.to_string(),
        })
}

fn integer(line: usize, token: &str) -> Result<usize, BvsError> {
    token.parse::<usize>().map_err(|_| BvsError::BadNumber {
        line,
        token: token.to_string(),
    })
}

fn exponent(line: usize, token: &str) -> Result<f64, BvsError> {
    match token {
        "inf" | "infinity" => Ok(f64::INFINITY),
        t => number(line, t),
    }
}

/// Parses the tokens after `norm`.
pub fn parse_norm(tokens: &[&str], line: usize) -> Result<NormSpec, BvsError> {
    let invalid = |message: String| BvsError::Invalid { line, message };
    match tokens {
        ["sup"] => Ok(NormSpec::Sup),
        ["lp", p] => NormSpec::lp(exponent(line, p)?).map_err(|e| invalid(e.to_string())),
        ["wlp", p, ws @ ..] if !ws.is_empty() => {
            let weights = ws.iter().map(|w| number(line, w)).collect::<Result<Vec<_>, _>>()?;
            NormSpec::weighted(exponent(line, p)?, weights).map_err(|e| invalid(e.to_string()))
        }
        _ => Err(BvsError::Unexpected {
            line,
            expected: "norm lp <p> | norm sup | norm wlp <p> <w1> ... <wd>",
            found: format!("norm {}", tokens.join(" ")),
        }),
    }
}

pub fn parse_bvs(text: &str) -> Result<BvsFile, BvsError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();
    let total = text.lines().count() + 1;

    let mut header = |field: &'static str| -> Result<(usize, Vec<String>), BvsError> {
        match lines.peek() {
            Some((n, l)) if l.split_whitespace().next() == Some(field) => {
                let (n, l) = (*n, l.split_whitespace().skip(1).map(str::to_string).collect());
                lines.next();
                Ok((n, l))
            }
            Some((n, _)) => Err(BvsError::Missing { field, line: *n }),
            None => Err(BvsError::Missing { field, line: total }),
        }
    };

    let (line, version) = header("bvs")?;
    if version != ["1"] {
        return Err(BvsError::Version {
            line,
            found: version.join(" "),
        });
    }
    let (norm_line, norm_tokens) = header("norm")?;
    let norm_refs: Vec<&str> = norm_tokens.iter().map(String::as_str).collect();
    let norm = parse_norm(&norm_refs, norm_line)?;
    let (line, dim) = header("dim")?;
    let dim = match dim.as_slice() {
        [d] => integer(line, d)?,
        _ => return Err(BvsError::Unexpected { line, expected: "dim <d>", found: dim.join(" ") }),
    };
    if dim == 0 {
        return Err(BvsError::Invalid { line, message: "dim must be positive".into() });
    }
    if let Some(w) = norm.weights() {
        if w.len() != dim {
            return Err(BvsError::Invalid {
                line: norm_line,
                message: format!("norm has {} weights but dim is {dim}", w.len()),
            });
        }
    }
    let (line, count) = header("count")?;
    let count = match count.as_slice() {
        [c] => integer(line, c)?,
        _ => return Err(BvsError::Unexpected { line, expected: "count <N>", found: count.join(" ") }),
    };

    let mut vectors = Vec::with_capacity(count);
    for (line, l) in lines {
        let mut tokens = l.split_whitespace();
        if tokens.next() != Some("v") {
            return Err(BvsError::Unexpected {
                line,
                expected: "v <x1> ... <xd>",
                found: l.to_string(),
            });
        }
        let entries = tokens.map(|t| number(line, t)).collect::<Result<Vec<_>, _>>()?;
        if entries.len() != dim {
            return Err(BvsError::DimMismatch {
                line,
                expected: dim,
                found: entries.len(),
            });
        }
        vectors.push(VectorR::from_vec(entries));
    }
    if vectors.len() != count {
        return Err(BvsError::CountMismatch {
            declared: count,
            found: vectors.len(),
        });
    }
    Ok(BvsFile { norm, dim, vectors })
}

pub fn read_bvs(path: &Path) -> Result<BvsFile, BvsError> {
    let text = std::fs::read_to_string(path).map_err(|e| BvsError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_bvs(&text)
}

impl fmt::Display for BvsFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "bvs 1")?;
        writeln!(f, "norm {}", self.norm)?;
        writeln!(f, "dim {}", self.dim)?;
        writeln!(f, "count {}", self.vectors.len())?;
        for v in &self.vectors {
            write!(f, "v")?;
            for x in v.iter() {
                write!(f, " {x:?}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
