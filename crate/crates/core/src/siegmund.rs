//! Siegmund duality on the ordered space `{1, …, n}` with `D_s(x,y) = 1{x ≥ y}`.

use nalgebra::{DMatrix, DVector};

use crate::duality;
use crate::error::{Error, Result};
use crate::markov::{classify_matrix, MatrixClass, Measure, RateMatrix};
use crate::spectral::check_biorthogonal;
use crate::DEFAULT_ROW_TOL;

/// `D_s(x, y) = 1{x ≥ y}`.
pub fn siegmund_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |x, y| if x >= y { 1.0 } else { 0.0 })
}

/// `Σ_{x′=y}^n [L̂(x,x′) − L̂(x−1,x′)]` for every `(y, x)`, with `L̂(0,·) = 0`,
/// laid out as the matrix `L(y, x)`.
fn dual_entries(lhat: &DMatrix<f64>) -> DMatrix<f64> {
    let n = lhat.nrows();
    // tails[(x, y)] = Σ_{x′ ≥ y} L̂(x, x′)
    let mut tails = DMatrix::zeros(n, n);
    for x in 0..n {
        let mut acc = 0.0;
        for y in (0..n).rev() {
            acc += lhat[(x, y)];
            tails[(x, y)] = acc;
        }
    }
    DMatrix::from_fn(n, n, |y, x| {
        let below = if x == 0 { 0.0 } else { tails[(x - 1, y)] };
        tails[(x, y)] - below
    })
}

/// A generator `L̂` and its Siegmund dual `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiegmundPair {
    pub lhat: RateMatrix,
    pub l: RateMatrix,
    pub class: MatrixClass,
    pub monotone: bool,
    pub residual: f64,
}

impl SiegmundPair {
    pub fn n(&self) -> usize {
        self.lhat.n()
    }
}

/// Builds `L` from `L̂`. Never rejects: whether `L` is a (sub-)generator is
/// reported through `class` and `monotone`.
pub fn siegmund_dual(lhat: &RateMatrix) -> Result<SiegmundPair> {
    let entries = dual_entries(lhat.entries());
    let class = classify_matrix(&entries, DEFAULT_ROW_TOL);
    let l = match class {
        MatrixClass::Invalid => RateMatrix::raw(entries)?,
        _ => RateMatrix::sub_generator(entries, DEFAULT_ROW_TOL)?,
    }
    .with_space(lhat.space().clone())?;
    let residual = duality::residual(lhat, &l, &siegmund_matrix(lhat.n()))?;
    Ok(SiegmundPair { lhat: lhat.clone(), monotone: check_monotone(lhat), l, class, residual })
}

/// Every off-diagonal monotonicity sum is `≥ −tol` (default row tolerance).
pub fn check_monotone(lhat: &RateMatrix) -> bool {
    let d = dual_entries(lhat.entries());
    let n = d.nrows();
    (0..n).all(|y| (0..n).all(|x| x == y || d[(y, x)] >= -DEFAULT_ROW_TOL))
}

/// `u(x) = Σ_{y ≥ x} w(y)`.
pub fn cumulative_transform(w: &DVector<f64>) -> DVector<f64> {
    let mut u = w.clone();
    for x in (0..u.len().saturating_sub(1)).rev() {
        u[x] += u[x + 1];
    }
    u
}

/// Inverse of [`cumulative_transform`]: `w(y) = u(y) − u(y+1)`, `u(n+1) = 0`.
pub fn difference_transform(u: &DVector<f64>) -> DVector<f64> {
    let n = u.len();
    DVector::from_fn(n, |y, _| u[y] - if y + 1 < n { u[y + 1] } else { 0.0 })
}

/// `Σ_i û_i(x) u_i(y)` without any validation.
pub fn siegmund_sum(uhats: &[DVector<f64>], us: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let first = uhats.first().ok_or_else(|| Error::ShapeMismatch("no functions given".into()))?;
    let n = first.len();
    if uhats.len() != us.len() || uhats.iter().chain(us).any(|v| v.len() != n) {
        return Err(Error::ShapeMismatch("families must have equal count and length".into()));
    }
    let mut d = DMatrix::zeros(n, n);
    for (uh, u) in uhats.iter().zip(us) {
        d += uh * u.transpose();
    }
    Ok(d)
}

/// `Σ_i û_i(x) u_i(y)` after checking that the increments `ŵ_i` of the `u_i`
/// are bi-orthogonal to the `û_i` under counting measure; the sum then equals
/// `1{x ≥ y}`.
pub fn reconstruct_siegmund(uhats: &[DVector<f64>], us: &[DVector<f64>], tol: f64) -> Result<DMatrix<f64>> {
    let d = siegmund_sum(uhats, us)?;
    let ws: Vec<DVector<f64>> = us.iter().map(difference_transform).collect();
    let counting = Measure::counting(d.nrows())?;
    if !check_biorthogonal(&ws, uhats, &counting, tol) {
        let worst = ws
            .iter()
            .enumerate()
            .flat_map(|(i, w)| {
                let counting = &counting;
                uhats.iter().enumerate().map(move |(j, uh)| (counting.inner(w, uh) - if i == j { 1.0 } else { 0.0 }).abs())
            })
            .fold(0.0, f64::max);
        return Err(Error::NotBiorthogonal(worst));
    }
    Ok(d)
}

/// Adds an absorbing cemetery state `n+1` that collects the leak
/// `−Σ_y L(x,y)` of every row. A conservative input gains an isolated state.
pub fn extend_with_cemetery(l: &RateMatrix) -> Result<RateMatrix> {
    if classify_matrix(l.entries(), DEFAULT_ROW_TOL) == MatrixClass::Invalid {
        return Err(Error::WrongKind { expected: "sub-generator", tol: DEFAULT_ROW_TOL });
    }
    let n = l.n();
    let mut ext = DMatrix::zeros(n + 1, n + 1);
    ext.view_mut((0, 0), (n, n)).copy_from(l.entries());
    for x in 0..n {
        ext[(x, n)] = (-l.entries().row(x).sum()).max(0.0);
    }
    RateMatrix::generator(ext, DEFAULT_ROW_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocked(n: usize) -> RateMatrix {
        let mut m = DMatrix::zeros(n, n);
        for x in 0..n {
            if x > 0 {
                m[(x, x - 1)] = 1.0;
            }
            if x + 1 < n {
                m[(x, x + 1)] = 1.0;
            }
            m[(x, x)] = -m.row(x).sum();
        }
        RateMatrix::new(m).unwrap()
    }

    fn absorbed(n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for x in 1..n {
            m[(x, x - 1)] = 1.0;
            m[(x, x)] = -2.0;
            if x + 1 < n {
                m[(x, x + 1)] = 1.0;
            }
        }
        m
    }

    #[test]
    fn siegmund_matrix_examples() {
        assert_eq!(siegmund_matrix(1), DMatrix::from_element(1, 1, 1.0));
        assert_eq!(siegmund_matrix(3), DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0]));
    }

    #[test]
    fn blocked_walk_dualizes_to_absorbed() {
        for n in [2, 3, 5] {
            let pair = siegmund_dual(&blocked(n)).unwrap();
            assert_eq!(pair.l.entries(), &absorbed(n));
            assert!(pair.monotone);
            assert_eq!(pair.class, MatrixClass::SubGenerator);
            assert_eq!(pair.residual, 0.0);
        }
        let one = siegmund_dual(&RateMatrix::new(DMatrix::zeros(1, 1)).unwrap()).unwrap();
        assert_eq!(one.l.entries(), &DMatrix::zeros(1, 1));
        assert!(one.monotone);
    }

    #[test]
    fn cyclic_is_not_monotone() {
        let cyc = RateMatrix::from_rows(&[&[-1.0, 1.0, 0.0], &[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0]]).unwrap();
        // brute force over x ≠ y of Σ_{x′≥y} L̂(x,x′) − L̂(x−1,x′)
        let m = cyc.entries();
        let mut negative = false;
        for x in 0..3 {
            for y in 0..3 {
                if x == y {
                    continue;
                }
                let s: f64 = (y..3).map(|xp| m[(x, xp)] - if x > 0 { m[(x - 1, xp)] } else { 0.0 }).sum();
                negative |= s < 0.0;
            }
        }
        assert!(negative);
        let pair = siegmund_dual(&cyc).unwrap();
        assert!(!pair.monotone);
        assert_eq!(pair.class, MatrixClass::Invalid);
        assert!(pair.residual < 1e-14);
    }

    #[test]
    fn cumulative_examples() {
        let n = 4;
        let w = DVector::from_element(n, 1.0 / 2.0);
        let u = cumulative_transform(&w);
        for x in 0..n {
            assert!((u[x] - (n - x) as f64 / 2.0).abs() < 1e-15);
        }
        let mut delta = DVector::zeros(n);
        delta[n - 1] = 1.0;
        assert_eq!(cumulative_transform(&delta), DVector::from_element(n, 1.0));
        assert_eq!(difference_transform(&u), w);
    }

    #[test]
    fn reconstruct_trivial_and_failure() {
        let one = vec![DVector::from_element(1, 1.0)];
        assert_eq!(reconstruct_siegmund(&one, &one, 1e-10).unwrap(), DMatrix::from_element(1, 1, 1.0));
        // standard basis: û_i = e_i, u_i = tail sums of e_i
        let n = 3;
        let uh: Vec<DVector<f64>> = (0..n).map(|i| DVector::from_fn(n, |x, _| if x == i { 1.0 } else { 0.0 })).collect();
        let u: Vec<DVector<f64>> = uh.iter().map(cumulative_transform).collect();
        assert_eq!(reconstruct_siegmund(&uh, &u, 1e-10).unwrap(), siegmund_matrix(n));
        let mut bad = uh.clone();
        bad[1] *= 2.0;
        assert!(matches!(reconstruct_siegmund(&bad, &u, 1e-10), Err(Error::NotBiorthogonal(_))));
        assert!(crate::linalg::max_abs(&(siegmund_sum(&bad, &u).unwrap() - siegmund_matrix(n))) > 0.5);
    }

    #[test]
    fn cemetery() {
        let n = 4;
        let l = RateMatrix::sub_generator(absorbed(n), 1e-12).unwrap();
        let ext = extend_with_cemetery(&l).unwrap();
        assert_eq!(ext.n(), n + 1);
        assert_eq!(ext.entries()[(n - 1, n)], 1.0);
        assert_eq!(ext.entries().column(n).sum(), 1.0);
        assert!(ext.entries().row(n).iter().all(|v| *v == 0.0));
        let cons = blocked(3);
        let ext = extend_with_cemetery(&cons).unwrap();
        assert_eq!(ext.entries().view((0, 0), (3, 3)), cons.entries().view((0, 0), (3, 3)));
        assert!(ext.entries().column(3).iter().all(|v| *v == 0.0));
        let bad = RateMatrix::raw(DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert!(extend_with_cemetery(&bad).is_err());
    }
}
