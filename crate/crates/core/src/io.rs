//! JSON schemas shared by the library and the command line.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::duality::{DualityFunction, DualitySpace};
use crate::error::{Error, Result};
use crate::intertwining::IntertwiningOperator;
use crate::markov::{Measure, RateMatrix, StateSpace};
use crate::spectral::SpectralData;

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse(format!("expected {nrows} rows of length {ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// `{"n", "labels"?, "entries"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub entries: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &RateMatrix) -> Self {
        Self { n: m.n(), labels: m.space().labels().map(<[String]>::to_vec), entries: rows(m.entries()) }
    }

    pub fn to_matrix(&self) -> Result<RateMatrix> {
        if self.entries.len() != self.n || self.entries.iter().any(|r| r.len() != self.n) {
            return Err(Error::Parse(format!("entries are not a square {0}x{0} matrix", self.n)));
        }
        if self.n == 0 {
            return Err(Error::Parse("matrix is empty".into()));
        }
        let m = RateMatrix::new(from_rows(&self.entries, self.n, self.n)?)?;
        match &self.labels {
            Some(l) => m.with_space(StateSpace::with_labels(l.clone())?),
            None => Ok(m),
        }
    }
}

/// `{"n", "weights"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureJson {
    pub n: usize,
    pub weights: Vec<f64>,
}

impl MeasureJson {
    pub fn from_measure(mu: &Measure) -> Self {
        Self { n: mu.len(), weights: mu.weights().iter().copied().collect() }
    }

    pub fn to_measure(&self) -> Result<Measure> {
        if self.weights.len() != self.n {
            return Err(Error::Parse(format!("{} weights for n = {}", self.weights.len(), self.n)));
        }
        Measure::from_slice(&self.weights)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockJson {
    pub re: f64,
    pub im: f64,
    pub m: usize,
}

/// `{"blocks": [{"re","im","m"}], "U_re", "U_im", "residual"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralJson {
    pub blocks: Vec<BlockJson>,
    #[serde(rename = "U_re")]
    pub u_re: Vec<Vec<f64>>,
    #[serde(rename = "U_im")]
    pub u_im: Vec<Vec<f64>>,
    pub residual: f64,
}

impl SpectralJson {
    pub fn from_spectral(s: &SpectralData) -> Self {
        let blocks = s.structure().blocks().iter().map(|b| BlockJson { re: b.eigenvalue.re, im: b.eigenvalue.im, m: b.size }).collect();
        Self { blocks, u_re: rows(&s.u().map(|z| z.re)), u_im: rows(&s.u().map(|z| z.im)), residual: s.residual() }
    }
}

/// `{"nhat", "n", "D", "residual", "rank"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityJson {
    pub nhat: usize,
    pub n: usize,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    pub residual: f64,
    pub rank: usize,
}

impl DualityJson {
    pub fn from_duality(d: &DualityFunction) -> Self {
        Self { nhat: d.nhat(), n: d.n(), d: rows(d.matrix()), residual: d.residual(), rank: d.rank() }
    }

    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        from_rows(&self.d, self.nhat, self.n)
    }
}

/// `{"nhat", "n", "dimension", "basis": [D, …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualitySpaceJson {
    pub nhat: usize,
    pub n: usize,
    pub dimension: usize,
    pub max_rank: usize,
    pub basis: Vec<Vec<Vec<f64>>>,
}

impl DualitySpaceJson {
    pub fn from_space(space: &DualitySpace, max_rank: usize) -> Self {
        let (nhat, n) = space.shape();
        Self { nhat, n, dimension: space.dimension(), max_rank, basis: space.basis().iter().map(rows).collect() }
    }
}

/// `{"n", "ntilde", "entries", "stochastic"}` for an `ñ × n` operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub n: usize,
    pub ntilde: usize,
    pub entries: Vec<Vec<f64>>,
    pub stochastic: bool,
}

impl OperatorJson {
    pub fn from_operator(op: &IntertwiningOperator) -> Self {
        let m = op.matrix();
        Self { n: m.ncols(), ntilde: m.nrows(), entries: rows(m), stochastic: op.is_stochastic() }
    }

    pub fn to_operator(&self) -> Result<IntertwiningOperator> {
        IntertwiningOperator::new(from_rows(&self.entries, self.ntilde, self.n)?)
    }
}

pub fn parse_matrix(text: &str) -> Result<RateMatrix> {
    serde_json::from_str::<MatrixJson>(text)?.to_matrix()
}

pub fn read_matrix(path: &Path) -> Result<RateMatrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)? + "\n")?;
    Ok(())
}

/// Comma-separated rows with a header `k\n,0,1,…`.
pub fn table_csv(table: &DMatrix<f64>) -> String {
    let mut out = String::from("k\\n");
    for n in 0..table.ncols() {
        out.push_str(&format!(",{n}"));
    }
    out.push('\n');
    for (k, row) in table.row_iter().enumerate() {
        out.push_str(&k.to_string());
        for v in row.iter() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}
