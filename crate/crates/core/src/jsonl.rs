//! JSON-lines coefficient files.
//!
//! The first non-blank line is a header
//! `{"kind": "scalar" | "vector", "dim": d, "q": q, "n_max": N}`; every
//! following line is `{"n": n, "re": [...], "im": [...]}` with one entry per
//! coordinate (`im` may be omitted for real data). Line numbers in errors are
//! 1-based.

use crate::error::{Error, Result};
use crate::series::{Coefficient, CoefficientSpaceSpec, DirichletTruncation, SpaceKind, C64};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub kind: SpaceKind,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default, with = "crate::ext::option")]
    pub q: Option<f64>,
    pub n_max: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub n: u64,
    #[serde(deserialize_with = "scalar_or_list")]
    pub re: Vec<f64>,
    #[serde(default, deserialize_with = "scalar_or_list")]
    pub im: Vec<f64>,
}

fn scalar_or_list<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match Repr::deserialize(d)? {
        Repr::One(x) => vec![x],
        Repr::Many(v) => v,
    })
}

impl Header {
    pub fn space(&self) -> std::result::Result<CoefficientSpaceSpec, String> {
        match self.kind {
            SpaceKind::Scalar => match self.dim {
                None | Some(1) => Ok(CoefficientSpaceSpec::scalar()),
                Some(d) => Err(format!("scalar header declares dim {d}")),
            },
            SpaceKind::Vector => {
                let dim = self.dim.ok_or("vector header needs \"dim\"")?;
                let q = self.q.ok_or("vector header needs \"q\"")?;
                CoefficientSpaceSpec::lq(dim, q).map_err(|e| e.to_string())
            }
        }
    }

    pub fn for_series(d: &DirichletTruncation) -> Self {
        let s = d.space();
        Header {
            kind: s.kind(),
            dim: Some(s.dim()),
            q: (!s.is_scalar()).then(|| s.q()),
            n_max: d.n_max(),
        }
    }
}

pub fn read<R: BufRead>(reader: R) -> Result<DirichletTruncation> {
    let mut series: Option<DirichletTruncation> = None;
    let mut seen = std::collections::BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| Error::Parse {
            line: line_no,
            message: e.to_string(),
        };
        let data_err = |message: String| Error::Data {
            line: line_no,
            message,
        };
        let Some(d) = series.as_mut() else {
            let header: Header = serde_json::from_str(&line).map_err(parse_err)?;
            let space = header.space().map_err(data_err)?;
            series = Some(DirichletTruncation::new(space, header.n_max).map_err(|e| data_err(e.to_string()))?);
            continue;
        };
        let rec: Record = serde_json::from_str(&line).map_err(parse_err)?;
        let dim = d.space().dim();
        if rec.n == 0 || rec.n > d.n_max() {
            return Err(data_err(format!("n = {} outside 1..={}", rec.n, d.n_max())));
        }
        if !seen.insert(rec.n) {
            return Err(data_err(format!("duplicate record for n = {}", rec.n)));
        }
        if rec.re.len() != dim {
            return Err(data_err(format!("\"re\" has {} entries, expected {dim}", rec.re.len())));
        }
        if !rec.im.is_empty() && rec.im.len() != dim {
            return Err(data_err(format!("\"im\" has {} entries, expected {dim}", rec.im.len())));
        }
        if rec.re.iter().chain(&rec.im).any(|x| !x.is_finite()) {
            return Err(data_err("non-finite coefficient".into()));
        }
        let v: Vec<C64> = (0..dim)
            .map(|j| C64::new(rec.re[j], rec.im.get(j).copied().unwrap_or(0.0)))
            .collect();
        d.insert(rec.n, Coefficient::from_dense(&v))
            .map_err(|e| data_err(e.to_string()))?;
    }
    series.ok_or(Error::Parse {
        line: 0,
        message: "missing header line".into(),
    })
}

pub fn read_str(s: &str) -> Result<DirichletTruncation> {
    read(s.as_bytes())
}

/// Writes the header and one record per nonzero coefficient.
pub fn write<W: Write>(d: &DirichletTruncation, mut out: W) -> std::io::Result<()> {
    serde_json::to_writer(&mut out, &Header::for_series(d))?;
    writeln!(out)?;
    let dim = d.space().dim();
    for (n, c) in d.iter() {
        let v = c.to_dense(dim);
        let rec = Record {
            n,
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        writeln!(out)?;
    }
    Ok(())
}
