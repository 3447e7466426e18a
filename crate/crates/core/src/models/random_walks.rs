//! Symmetric nearest-neighbour walks on `{1, …, n}` with closed-form spectra.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::markov::{Measure, RateMatrix};
use crate::siegmund::{cumulative_transform, siegmund_dual, SiegmundPair};
use crate::spectral::{JordanBlock, JordanStructure, SpectralData};
use crate::{DEFAULT_ROW_TOL, DEFAULT_SPECTRAL_TOL};

/// Interior rows `f(x+1) + f(x−1) − 2f(x)`; boundary rows left empty.
fn interior(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for x in 1..n - 1 {
        m[(x, x - 1)] = 1.0;
        m[(x, x + 1)] = 1.0;
        m[(x, x)] = -2.0;
    }
    m
}

fn analytic_spectrum(source: &DMatrix<f64>, values: &[f64], functions: &[DVector<f64>]) -> Result<SpectralData> {
    let n = source.nrows();
    let blocks = values.iter().map(|&v| JordanBlock { eigenvalue: C64::new(v, 0.0), size: 1 }).collect();
    let structure = JordanStructure::new(blocks)?;
    let u = DMatrix::from_fn(n, n, |x, i| C64::new(functions[i][x], 0.0));
    SpectralData::from_parts(source.clone(), structure, u, DEFAULT_SPECTRAL_TOL)
}

/// Reflected-left/absorbed-right walk `L` and reflected-right/absorbed-left
/// walk `L̂`, with eigenfunctions `u_i ∝ cos(θ_i(x−1))`, `û_i ∝ sin(θ_i(x−1))`.
#[derive(Debug, Clone)]
pub struct ReflectedAbsorbed {
    pub l: RateMatrix,
    pub lhat: RateMatrix,
    pub thetas: Vec<f64>,
    /// `λ₁ = 0` followed by `2(cos θ_k − 1)`, in descending order.
    pub eigenvalues: Vec<f64>,
    pub us: Vec<DVector<f64>>,
    pub uhats: Vec<DVector<f64>>,
    pub l_spectrum: SpectralData,
    pub lhat_spectrum: SpectralData,
}

/// `θ_k = (k − ½)π/(n−1)` for `k = 1, …, n−1`.
pub fn reflected_thetas(n: usize) -> Vec<f64> {
    (1..n).map(|k| (k as f64 - 0.5) * PI / (n - 1) as f64).collect()
}

pub fn rw_reflected_absorbed(n: usize) -> Result<ReflectedAbsorbed> {
    if n < 2 {
        return Err(Error::InvalidStateSpace("the walk needs n ≥ 2".into()));
    }
    let mut l = interior(n);
    l[(0, 1)] = 2.0;
    l[(0, 0)] = -2.0;
    let mut lhat = interior(n);
    lhat[(n - 1, n - 2)] = 2.0;
    lhat[(n - 1, n - 1)] = -2.0;

    let thetas = reflected_thetas(n);
    let norm = 1.0 / (n as f64).sqrt();
    let mut eigenvalues = vec![0.0];
    let mut us = vec![DVector::from_element(n, norm)];
    let mut uhats = vec![DVector::from_element(n, norm)];
    for &t in &thetas {
        eigenvalues.push(2.0 * (t.cos() - 1.0));
        us.push(DVector::from_fn(n, |x, _| norm * (t * x as f64).cos()));
        uhats.push(DVector::from_fn(n, |x, _| norm * (t * x as f64).sin()));
    }
    let l_spectrum = analytic_spectrum(&l, &eigenvalues, &us)?;
    let lhat_spectrum = analytic_spectrum(&lhat, &eigenvalues, &uhats)?;
    Ok(ReflectedAbsorbed {
        l: RateMatrix::generator(l, DEFAULT_ROW_TOL)?,
        lhat: RateMatrix::generator(lhat, DEFAULT_ROW_TOL)?,
        thetas,
        eigenvalues,
        us,
        uhats,
        l_spectrum,
        lhat_spectrum,
    })
}

impl ReflectedAbsorbed {
    pub fn n(&self) -> usize {
        self.l.n()
    }

    fn closed_form(&self, a: &[f64], f: impl Fn(f64, usize, usize) -> f64) -> Result<DMatrix<f64>> {
        let n = self.n();
        if a.len() != n {
            return Err(Error::ShapeMismatch(format!("{} coefficients for n = {n}", a.len())));
        }
        let nf = n as f64;
        Ok(DMatrix::from_fn(n, n, |x, y| a[0] / nf + self.thetas.iter().zip(&a[1..]).map(|(&t, ai)| ai / nf * f(t, x, y)).sum::<f64>()))
    }

    /// `a₁/n + Σ_{i≥2} (a_i/n) cos(θ_i(x−1)) cos(θ_i(y−1))`, self-dualities of `L`.
    pub fn selfduality_l(&self, a: &[f64]) -> Result<DMatrix<f64>> {
        self.closed_form(a, |t, x, y| (t * x as f64).cos() * (t * y as f64).cos())
    }

    /// `a₁/n + Σ_{i≥2} (a_i/n) sin(θ_i(x̂−1)) sin(θ_i(ŷ−1))`, self-dualities of `L̂`.
    pub fn selfduality_lhat(&self, a: &[f64]) -> Result<DMatrix<f64>> {
        self.closed_form(a, |t, x, y| (t * x as f64).sin() * (t * y as f64).sin())
    }

    /// `a₁/n + Σ_{i≥2} (a_i/n) sin(θ_i(x̂−1)) cos(θ_i(x−1))`, dualities between
    /// `L̂` (rows) and `L` (columns).
    pub fn duality(&self, a: &[f64]) -> Result<DMatrix<f64>> {
        self.closed_form(a, |t, xh, x| (t * xh as f64).sin() * (t * x as f64).cos())
    }
}

/// Walk `L̂` blocked at both ends and its Siegmund dual `L`, absorbed at `1`
/// and leaking at rate 1 from `n`.
#[derive(Debug, Clone)]
pub struct BlockedAbsorbed {
    pub pair: SiegmundPair,
    pub thetas: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub uhats: Vec<DVector<f64>>,
    pub us: Vec<DVector<f64>>,
    pub lhat_spectrum: SpectralData,
    pub l_spectrum: SpectralData,
}

/// `θ_i = (i−1)π/n` for `i = 2, …, n`.
pub fn blocked_thetas(n: usize) -> Vec<f64> {
    (2..=n).map(|i| (i - 1) as f64 * PI / n as f64).collect()
}

/// The absorbed sub-generator written out directly.
pub fn absorbed_walk(n: usize) -> DMatrix<f64> {
    let mut m = interior(n);
    if n >= 2 {
        m[(n - 1, n - 2)] = 1.0;
        m[(n - 1, n - 1)] = -2.0;
    }
    m
}

pub fn blocked_walk(n: usize) -> DMatrix<f64> {
    let mut m = interior(n);
    if n >= 2 {
        m[(0, 1)] = 1.0;
        m[(0, 0)] = -1.0;
        m[(n - 1, n - 2)] = 1.0;
        m[(n - 1, n - 1)] = -1.0;
    }
    m
}

pub fn rw_blocked_absorbed(n: usize) -> Result<BlockedAbsorbed> {
    if n < 2 {
        return Err(Error::InvalidStateSpace("the walk needs n ≥ 2".into()));
    }
    let lhat = RateMatrix::generator(blocked_walk(n), DEFAULT_ROW_TOL)?;
    let pair = siegmund_dual(&lhat)?;
    let thetas = blocked_thetas(n);
    let nf = n as f64;
    let mut eigenvalues = vec![0.0];
    let mut uhats = vec![DVector::from_element(n, 1.0 / nf.sqrt())];
    let mut us = vec![DVector::from_fn(n, |x, _| (nf - x as f64) / nf.sqrt())];
    for &t in &thetas {
        let c = 1.0 / (nf * (1.0 - t.cos())).sqrt();
        eigenvalues.push(2.0 * (t.cos() - 1.0));
        uhats.push(DVector::from_fn(n, |x, _| {
            let s = t * x as f64;
            c * (-t.sin() * s.cos() + (1.0 - t.cos()) * s.sin())
        }));
        us.push(DVector::from_fn(n, |x, _| c * (t * x as f64).sin()));
    }
    let tol = DEFAULT_SPECTRAL_TOL;
    let lt = pair.lhat.entries().transpose();
    if linalg::max_abs(&(pair.lhat.entries() - &lt)) > 0.0 {
        return Err(Error::DecompositionFailed("blocked walk is not symmetric".into()));
    }
    let counting = Measure::counting(n)?;
    for (i, (uh, u)) in uhats.iter().zip(&us).enumerate() {
        let transported = linalg::max_abs_vec(&(cumulative_transform(uh) - u));
        if transported > tol {
            return Err(Error::DecompositionFailed(format!("u_{} is not the tail sum of û_{}", i + 1, i + 1)));
        }
        for (j, vh) in uhats.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            if (counting.inner(uh, vh) - target).abs() > tol {
                return Err(Error::NotOrthonormal((counting.inner(uh, vh) - target).abs()));
            }
        }
    }
    let lhat_spectrum = analytic_spectrum(pair.lhat.entries(), &eigenvalues, &uhats)?;
    let l_spectrum = analytic_spectrum(pair.l.entries(), &eigenvalues, &us)?;
    Ok(BlockedAbsorbed { pair, thetas, eigenvalues, uhats, us, lhat_spectrum, l_spectrum })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::residual;

    #[test]
    fn reflected_spectrum_small() {
        let rw = rw_reflected_absorbed(3).unwrap();
        let expect = [0.0, 2.0 * ((PI / 4.0).cos() - 1.0), 2.0 * ((3.0 * PI / 4.0).cos() - 1.0)];
        for (a, b) in rw.eigenvalues.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(rw.l.entries()[(0, 1)], 2.0);
        assert!(rw.l.entries().row(2).iter().all(|v| *v == 0.0));
        assert!(rw.lhat.entries().row(0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn reflected_dualities() {
        for n in [2, 5, 9] {
            let rw = rw_reflected_absorbed(n).unwrap();
            let a: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * i as f64).collect();
            assert!(residual(&rw.l, &rw.l, &rw.selfduality_l(&a).unwrap()).unwrap() < 1e-12);
            assert!(residual(&rw.lhat, &rw.lhat, &rw.selfduality_lhat(&a).unwrap()).unwrap() < 1e-12);
            assert!(residual(&rw.lhat, &rw.l, &rw.duality(&a).unwrap()).unwrap() < 1e-12);
        }
    }

    #[test]
    fn blocked_example() {
        for n in [2, 3, 8] {
            let b = rw_blocked_absorbed(n).unwrap();
            assert_eq!(b.pair.l.entries(), &absorbed_walk(n));
            assert!(b.pair.monotone);
            assert!(b.lhat_spectrum.residual() < 1e-12 && b.l_spectrum.residual() < 1e-12);
        }
    }
}
