//! Finite state spaces, rate matrices and reference measures.
//!
//! A generator `L` acts on functions `f: Ω → ℝ` by `Lf(x) = Σ_y L(x,y) f(y)`:
//! off-diagonal entries are jump rates and every row sums to zero. Sub-generators
//! allow rows to sum to a negative number (mass leaking out of the space).

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::DEFAULT_ROW_TOL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    size: usize,
    labels: Option<Vec<String>>,
}

impl StateSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidStateSpace("state space must be non-empty".into()));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut space = Self::new(labels.len())?;
        let distinct: HashSet<&String> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(Error::InvalidStateSpace("labels must be distinct".into()));
        }
        space.labels = Some(labels);
        Ok(space)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
}

/// Outcome of [`classify_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixClass {
    Generator,
    SubGenerator,
    Invalid,
}

/// What a [`RateMatrix`] is known to be. `Raw` carries no constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixKind {
    Generator,
    SubGenerator,
    Raw,
}

impl From<MatrixClass> for MatrixKind {
    fn from(c: MatrixClass) -> Self {
        match c {
            MatrixClass::Generator => MatrixKind::Generator,
            MatrixClass::SubGenerator => MatrixKind::SubGenerator,
            MatrixClass::Invalid => MatrixKind::Raw,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    space: StateSpace,
    entries: DMatrix<f64>,
    kind: MatrixKind,
}

impl RateMatrix {
    /// Wraps a square matrix, recording the strongest kind it satisfies at the
    /// default row tolerance.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let space = square_space(&entries)?;
        let kind = classify_matrix(&entries, DEFAULT_ROW_TOL).into();
        Ok(Self { space, entries, kind })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        if flat.len() != n * n {
            return Err(Error::NotSquare { rows: n, cols: flat.len() / n.max(1) });
        }
        Self::new(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn generator(entries: DMatrix<f64>, tol: f64) -> Result<Self> {
        let space = square_space(&entries)?;
        match classify_matrix(&entries, tol) {
            MatrixClass::Generator => Ok(Self { space, entries, kind: MatrixKind::Generator }),
            _ => Err(Error::WrongKind { expected: "generator", tol }),
        }
    }

    pub fn sub_generator(entries: DMatrix<f64>, tol: f64) -> Result<Self> {
        let space = square_space(&entries)?;
        match classify_matrix(&entries, tol) {
            MatrixClass::Invalid => Err(Error::WrongKind { expected: "sub-generator", tol }),
            _ => Ok(Self { space, entries, kind: MatrixKind::SubGenerator }),
        }
    }

    pub fn raw(entries: DMatrix<f64>) -> Result<Self> {
        let space = square_space(&entries)?;
        Ok(Self { space, entries, kind: MatrixKind::Raw })
    }

    pub fn with_space(mut self, space: StateSpace) -> Result<Self> {
        if space.size() != self.n() {
            return Err(Error::ShapeMismatch(format!("space of size {} for a {}x{} matrix", space.size(), self.n(), self.n())));
        }
        self.space = space;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn apply(&self, f: &DVector<f64>) -> DVector<f64> {
        &self.entries * f
    }
}

fn square_space(m: &DMatrix<f64>) -> Result<StateSpace> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    StateSpace::new(m.nrows())
}

/// Strictly positive weights over a state space.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    weights: DVector<f64>,
    normalized: bool,
}

impl Measure {
    pub fn new(weights: DVector<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| **w <= 0.0 || !w.is_finite()) {
            return Err(Error::InvalidMeasure(format!("weight {w} is not strictly positive")));
        }
        Ok(Self { weights, normalized: false })
    }

    pub fn from_slice(w: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(w))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Ok(Self::new(DVector::from_element(n, 1.0 / n.max(1) as f64))?.normalize())
    }

    pub fn counting(n: usize) -> Result<Self> {
        Self::new(DVector::from_element(n, 1.0))
    }

    pub fn normalize(mut self) -> Self {
        let total = self.weights.sum();
        self.weights /= total;
        self.normalized = true;
        self
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `⟨f, g⟩_μ = Σ_x f(x) g(x) μ(x)`.
    pub fn inner(&self, f: &DVector<f64>, g: &DVector<f64>) -> f64 {
        f.iter().zip(g.iter()).zip(self.weights.iter()).map(|((a, b), w)| a * b * w).sum()
    }
}

/// Total classification of a square matrix.
///
/// Generator: off-diagonals `≥ −tol` and `|row sum| ≤ tol`. SubGenerator:
/// off-diagonals `≥ −tol` and row sums `≤ tol`. Anything else is Invalid.
pub fn classify_matrix(m: &DMatrix<f64>, tol: f64) -> MatrixClass {
    if m.nrows() != m.ncols() {
        return MatrixClass::Invalid;
    }
    let n = m.nrows();
    let mut conservative = true;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            let v = m[(i, j)];
            if !v.is_finite() || (i != j && v < -tol) {
                return MatrixClass::Invalid;
            }
            row += v;
        }
        if row > tol {
            return MatrixClass::Invalid;
        }
        if row.abs() > tol {
            conservative = false;
        }
    }
    if conservative {
        MatrixClass::Generator
    } else {
        MatrixClass::SubGenerator
    }
}

/// Strong connectivity of the digraph with an edge `x → y` whenever `M(x,y) > tol`.
pub fn is_irreducible(m: &DMatrix<f64>, tol: f64) -> bool {
    let n = m.nrows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for y in 0..n {
                let w = if forward { m[(x, y)] } else { m[(y, x)] };
                if x != y && w > tol && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    n > 0 && reach(true) && reach(false)
}

/// Unique stationary probability measure of an irreducible generator, from the
/// kernel of `Lᵀ`.
pub fn stationary_measure(l: &RateMatrix, tol: f64) -> Result<Measure> {
    if classify_matrix(l.entries(), DEFAULT_ROW_TOL.max(tol)) != MatrixClass::Generator {
        return Err(Error::WrongKind { expected: "generator", tol: DEFAULT_ROW_TOL.max(tol) });
    }
    if !is_irreducible(l.entries(), DEFAULT_ROW_TOL) {
        return Err(Error::NotIrreducible);
    }
    let lt = l.entries().transpose();
    let mut v: DVector<f64> = linalg::smallest_right_vectors(&lt, 1).column(0).into_owned();
    let pivot = v.iter().cloned().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if pivot < 0.0 {
        v = -v;
    }
    let min = v.min();
    if min <= 0.0 {
        return Err(Error::NoPositiveSolution(min));
    }
    v /= v.sum();
    let residual = linalg::max_abs_vec(&(l.entries().transpose() * &v));
    if residual >= tol {
        return Err(Error::DecompositionFailed(format!("stationary residual {residual:e} exceeds {tol:e}")));
    }
    Ok(Measure { weights: v, normalized: true })
}

/// `|μ(x)L(x,y) − μ(y)L(y,x)| ≤ tol` for all pairs.
pub fn check_detailed_balance(l: &RateMatrix, mu: &Measure, tol: f64) -> bool {
    let n = l.n();
    if mu.len() != n {
        return false;
    }
    let (m, w) = (l.entries(), mu.weights());
    (0..n).all(|x| (0..n).all(|y| (w[x] * m[(x, y)] - w[y] * m[(y, x)]).abs() <= tol))
}

/// Adjoint of `L` in `L²(μ)`: `L†(x,y) = μ(y) L(y,x) / μ(x)`.
pub fn adjoint(l: &RateMatrix, mu: &Measure) -> Result<RateMatrix> {
    let n = l.n();
    if mu.len() != n {
        return Err(Error::ShapeMismatch(format!("measure of length {} for n = {n}", mu.len())));
    }
    let (m, w) = (l.entries(), mu.weights());
    let adj = DMatrix::from_fn(n, n, |x, y| w[y] * m[(y, x)] / w[x]);
    RateMatrix::raw(adj)
}
