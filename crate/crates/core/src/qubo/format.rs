//! Text serializations of [`QuboProblem`].
//!
//! COO layout:
//!
//! ```text
//! # comment
//! p qubo <n> <num_linear> <num_quadratic>
//! offset <value>          (optional, at most once)
//! <i> <j> <value>         (i == j: linear term, otherwise a coupling)
//! ```
//!
//! The JSON mirror is `{"n": .., "offset": .., "h": [..], "Q": [[i, j, v], ..]}`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::QuboProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuboFormat {
    Coo,
    Json,
}

impl QuboFormat {
    /// `.json` selects JSON; anything else is COO.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => QuboFormat::Json,
            _ => QuboFormat::Coo,
        }
    }
}

pub fn to_coo_string(problem: &QuboProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "p qubo {} {} {}",
        problem.n(),
        problem.n(),
        problem.num_quadratic()
    );
    if problem.offset() != 0.0 {
        let _ = writeln!(out, "offset {}", problem.offset());
    }
    for (i, h) in problem.linear().iter().enumerate() {
        let _ = writeln!(out, "{i} {i} {h}");
    }
    for ((i, j), q) in problem.quadratic() {
        let _ = writeln!(out, "{i} {j} {q}");
    }
    out
}

pub fn parse_coo(text: &str) -> Result<QuboProblem> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut offset: Option<f64> = None;
    let mut linear: Vec<f64> = Vec::new();
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    let mut num_linear = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens[0] {
            "p" => {
                if header.is_some() {
                    return Err(Error::parse(lineno, "duplicate header"));
                }
                if tokens.len() != 5 || tokens[1] != "qubo" {
                    return Err(Error::parse(
                        lineno,
                        "expected header `p qubo <n> <num_linear> <num_quadratic>`",
                    ));
                }
                let n = parse_usize(tokens[2], lineno)?;
                if n == 0 {
                    return Err(Error::parse(lineno, "variable count must be positive"));
                }
                header = Some((n, parse_usize(tokens[3], lineno)?, parse_usize(tokens[4], lineno)?));
                linear = vec![0.0; n];
            }
            "offset" => {
                if header.is_none() {
                    return Err(Error::parse(lineno, "offset before header"));
                }
                if offset.is_some() {
                    return Err(Error::parse(lineno, "duplicate offset"));
                }
                if tokens.len() != 2 {
                    return Err(Error::parse(lineno, "expected `offset <value>`"));
                }
                offset = Some(parse_f64(tokens[1], lineno)?);
            }
            _ => {
                let Some((n, _, _)) = header else {
                    return Err(Error::parse(lineno, "data line before header"));
                };
                if tokens.len() != 3 {
                    return Err(Error::parse(lineno, format!("unrecognized line `{content}`")));
                }
                let i = parse_usize(tokens[0], lineno)?;
                let j = parse_usize(tokens[1], lineno)?;
                let v = parse_f64(tokens[2], lineno)?;
                if i >= n || j >= n {
                    return Err(Error::parse(
                        lineno,
                        format!("index {} out of range for n={n}", i.max(j)),
                    ));
                }
                if !seen.insert((i, j)) {
                    return Err(Error::parse(lineno, format!("duplicate entry ({i}, {j})")));
                }
                if i == j {
                    linear[i] = v;
                    num_linear += 1;
                } else {
                    pairs.push(((i, j), v));
                }
            }
        }
    }

    let Some((_, declared_linear, declared_quadratic)) = header else {
        return Err(Error::parse(0, "missing `p qubo` header"));
    };
    if num_linear != declared_linear {
        return Err(Error::parse(
            0,
            format!("header declares {declared_linear} linear terms, found {num_linear}"),
        ));
    }
    if pairs.len() != declared_quadratic {
        return Err(Error::parse(
            0,
            format!(
                "header declares {declared_quadratic} quadratic terms, found {}",
                pairs.len()
            ),
        ));
    }
    QuboProblem::new(linear, pairs, offset.unwrap_or(0.0))
}

fn parse_usize(token: &str, line: usize) -> Result<usize> {
    token
        .parse()
        .map_err(|_| Error::parse(line, format!("expected a non-negative integer, found `{token}`")))
}

fn parse_f64(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("expected a number, found `{token}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite value `{token}`")));
    }
    Ok(v)
}

#[derive(Serialize, Deserialize)]
struct QuboJson {
    n: usize,
    #[serde(default)]
    offset: f64,
    h: Vec<f64>,
    #[serde(rename = "Q", default)]
    q: Vec<(usize, usize, f64)>,
}

pub fn to_json_string(problem: &QuboProblem) -> String {
    let doc = QuboJson {
        n: problem.n(),
        offset: problem.offset(),
        h: problem.linear().to_vec(),
        q: problem.quadratic().map(|((i, j), v)| (i, j, v)).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("qubo json is always serializable")
}

pub fn parse_json(text: &str) -> Result<QuboProblem> {
    let doc: QuboJson = serde_json::from_str(text)?;
    if doc.h.len() != doc.n {
        return Err(Error::Dimension {
            expected: doc.n,
            found: doc.h.len(),
        });
    }
    let mut seen = HashSet::new();
    for &(i, j, _) in &doc.q {
        if !seen.insert((i, j)) {
            return Err(Error::Format(format!("duplicate coupling ({i}, {j})")));
        }
    }
    QuboProblem::new(doc.h, doc.q.into_iter().map(|(i, j, v)| ((i, j), v)), doc.offset)
}

pub fn save_qubo(problem: &QuboProblem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = match QuboFormat::from_path(path) {
        QuboFormat::Coo => to_coo_string(problem),
        QuboFormat::Json => to_json_string(problem),
    };
    crate::io::write_atomic(path, text.as_bytes())
}

pub fn load_qubo(path: impl AsRef<Path>) -> Result<QuboProblem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match QuboFormat::from_path(path) {
        QuboFormat::Coo => parse_coo(&text),
        QuboFormat::Json => parse_json(&text),
    }
}
