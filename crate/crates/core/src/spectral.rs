//! Jordan decompositions of small dense real matrices.
//!
//! `decompose` returns `M = U J U⁻¹` where the columns of `U` are (generalized)
//! eigenfunctions grouped by Jordan block, eigenvector first, so that
//! `M u⁽ᵏ⁾ = λ u⁽ᵏ⁾ + u⁽ᵏ⁻¹⁾`. The rows of `U⁻¹` are the dual functions `w_i`
//! with `Σ_x w_i(x) u_j(x) = δ_ij`.
//!
//! Eigenvalues come from a real Schur form. Computed eigenvalues within the
//! cluster tolerance are merged (a defective eigenvalue of multiplicity `m`
//! splits by roughly `ε^{1/m}` under rounding), and each cluster's generalized
//! eigenspace is analysed through the nilpotent restriction of `M − λI`.

use std::cmp::Ordering;

use nalgebra::linalg::{Schur, SymmetricEigen};
use nalgebra::{ComplexField, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::markov::{check_detailed_balance, Measure, RateMatrix};
use crate::{DEFAULT_CLUSTER_TOL, DEFAULT_SPECTRAL_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JordanBlock {
    pub eigenvalue: C64,
    pub size: usize,
}

fn canonical_order(a: &JordanBlock, b: &JordanBlock) -> Ordering {
    b.eigenvalue.re.total_cmp(&a.eigenvalue.re).then(b.eigenvalue.im.total_cmp(&a.eigenvalue.im)).then(b.size.cmp(&a.size))
}

/// Ordered Jordan blocks, sorted by (Re λ desc, Im λ desc, size desc).
#[derive(Debug, Clone, PartialEq)]
pub struct JordanStructure {
    blocks: Vec<JordanBlock>,
}

impl JordanStructure {
    pub fn new(mut blocks: Vec<JordanBlock>) -> Result<Self> {
        if blocks.iter().any(|b| b.size == 0) {
            return Err(Error::DecompositionFailed("empty Jordan block".into()));
        }
        blocks.sort_by(canonical_order);
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[JordanBlock] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }

    /// Column offset of each block.
    pub fn offsets(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, b| {
                let start = *acc;
                *acc += b.size;
                Some(start)
            })
            .collect()
    }

    pub fn jordan_matrix(&self) -> DMatrix<C64> {
        let n = self.n();
        let mut j = DMatrix::<C64>::zeros(n, n);
        for (b, off) in self.blocks.iter().zip(self.offsets()) {
            for k in 0..b.size {
                j[(off + k, off + k)] = b.eigenvalue;
                if k + 1 < b.size {
                    j[(off + k, off + k + 1)] = C64::new(1.0, 0.0);
                }
            }
        }
        j
    }

    pub fn is_diagonal(&self) -> bool {
        self.blocks.iter().all(|b| b.size == 1)
    }

    /// Eigenvalues repeated by algebraic multiplicity, in block order.
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.blocks.iter().flat_map(|b| std::iter::repeat_n(b.eigenvalue, b.size)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeOptions {
    /// Computed eigenvalues closer than this are one cluster.
    pub cluster_tol: f64,
    /// Relative singular-value threshold for null-space and rank decisions.
    pub null_tol: f64,
    /// Relative bound on `‖MU − UJ‖∞` and `‖U⁻¹U − I‖∞`.
    pub spectral_tol: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self { cluster_tol: DEFAULT_CLUSTER_TOL, null_tol: 1e-8, spectral_tol: DEFAULT_SPECTRAL_TOL }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    source: DMatrix<f64>,
    structure: JordanStructure,
    u: DMatrix<C64>,
    u_inv: DMatrix<C64>,
    residual: f64,
}

impl SpectralData {
    /// Assembles spectral data from known (e.g. closed-form) Jordan data,
    /// checking `‖MU − UJ‖∞ ≤ tol`.
    pub fn from_parts(source: DMatrix<f64>, structure: JordanStructure, u: DMatrix<C64>, tol: f64) -> Result<Self> {
        let n = source.nrows();
        if structure.n() != n || u.shape() != (n, n) {
            return Err(Error::ShapeMismatch("structure/U do not match the source".into()));
        }
        let u_inv = u.clone().try_inverse().ok_or_else(|| Error::DecompositionFailed("U is singular".into()))?;
        let residual = linalg::max_abs_c(&(linalg::to_complex(&source) * &u - &u * structure.jordan_matrix()));
        let inv_err = linalg::max_abs_c(&(&u_inv * &u - DMatrix::<C64>::identity(n, n)));
        if residual > tol || inv_err > tol {
            return Err(Error::DecompositionFailed(format!("residual {residual:e}, inverse error {inv_err:e} exceed {tol:e}")));
        }
        Ok(Self { source, structure, u, u_inv, residual })
    }

    pub fn source(&self) -> &DMatrix<f64> {
        &self.source
    }

    pub fn structure(&self) -> &JordanStructure {
        &self.structure
    }

    pub fn u(&self) -> &DMatrix<C64> {
        &self.u
    }

    pub fn u_inv(&self) -> &DMatrix<C64> {
        &self.u_inv
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.structure.eigenvalues()
    }

    /// Columns of `U` belonging to block `index`, in chain order.
    pub fn block_columns(&self, index: usize) -> Vec<DVector<C64>> {
        let off = self.structure.offsets()[index];
        let size = self.structure.blocks()[index].size;
        (off..off + size).map(|c| self.u.column(c).into_owned()).collect()
    }

    /// `U J U⁻¹`.
    pub fn rebuild(&self) -> DMatrix<C64> {
        &self.u * self.structure.jordan_matrix() * &self.u_inv
    }
}

/// Jordan decomposition with default options and the given cluster tolerance.
pub fn decompose(m: &RateMatrix, cluster_tol: f64) -> Result<SpectralData> {
    let opts = DecomposeOptions { cluster_tol, ..DecomposeOptions::default() };
    decompose_matrix(m.entries(), &opts)
}

pub fn decompose_matrix(m: &DMatrix<f64>, opts: &DecomposeOptions) -> Result<SpectralData> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::NotSquare { rows: n, cols: m.ncols() });
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::DecompositionFailed("Schur iteration did not converge".into()))?;
    let eig: Vec<C64> = schur.complex_eigenvalues().iter().copied().collect();
    let clusters = cluster_eigenvalues(&eig, opts.cluster_tol);

    let scale = linalg::max_abs(m).max(1.0);
    let mc = linalg::to_complex(m);
    let mut pieces: Vec<(JordanBlock, Vec<DVector<C64>>)> = Vec::new();
    let positive: Vec<&(C64, usize)> = clusters.iter().filter(|(c, _)| c.im > opts.cluster_tol).collect();
    for &(center, mult) in &clusters {
        if center.im.abs() <= opts.cluster_tol {
            let chains = cluster_chains(m, center.re, mult, opts.null_tol, scale)?;
            for chain in chains {
                let block = JordanBlock { eigenvalue: C64::new(center.re, 0.0), size: chain.len() };
                pieces.push((block, chain.iter().map(|v| v.map(|x| C64::new(x, 0.0))).collect()));
            }
        } else if center.im > 0.0 {
            let chains = cluster_chains(&mc, center, mult, opts.null_tol, scale)?;
            for chain in chains {
                let size = chain.len();
                let conj: Vec<DVector<C64>> = chain.iter().map(|v| v.map(|z| z.conj())).collect();
                pieces.push((JordanBlock { eigenvalue: center, size }, chain));
                pieces.push((JordanBlock { eigenvalue: center.conj(), size }, conj));
            }
        } else {
            let partner = positive.iter().any(|(c, k)| *k == mult && (c.conj() - center).norm() <= opts.cluster_tol * 10.0);
            if !partner {
                return Err(Error::DecompositionFailed(format!("eigenvalue {center} has no conjugate partner of equal multiplicity")));
            }
        }
    }
    if pieces.iter().map(|(b, _)| b.size).sum::<usize>() != n {
        return Err(Error::DecompositionFailed("Jordan chains do not span the space".into()));
    }
    pieces.sort_by(|a, b| canonical_order(&a.0, &b.0));

    let mut u = DMatrix::<C64>::zeros(n, n);
    let mut col = 0;
    for (_, chain) in &pieces {
        for v in chain {
            u.set_column(col, v);
            col += 1;
        }
    }
    let structure = JordanStructure { blocks: pieces.into_iter().map(|(b, _)| b).collect() };
    let u_scale = linalg::max_abs_c(&u).max(1.0);
    SpectralData::from_parts(m.clone(), structure, u, opts.spectral_tol * scale * u_scale).map_err(|e| match e {
        Error::DecompositionFailed(msg) => Error::DecompositionFailed(msg),
        other => other,
    })
}

/// Single-linkage clustering; returns (mean, multiplicity) per cluster.
fn cluster_eigenvalues(eig: &[C64], tol: f64) -> Vec<(C64, usize)> {
    let n = eig.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (eig[i] - eig[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut out: Vec<(usize, C64, usize)> = Vec::new();
    for (i, &z) in eig.iter().enumerate() {
        let r = find(&mut parent, i);
        match out.iter_mut().find(|(root, _, _)| *root == r) {
            Some(entry) => {
                entry.1 += z;
                entry.2 += 1;
            }
            None => out.push((r, z, 1)),
        }
    }
    out.into_iter().map(|(_, sum, k)| (sum / k as f64, k)).collect()
}

/// Makes the first entry of (nearly) maximal modulus real and positive.
fn phase_factor<T>(v: &DVector<T>) -> T
where
    T: ComplexField<RealField = f64>,
{
    let max = v.iter().map(|x| x.clone().modulus()).fold(0.0, f64::max);
    let pivot = v.iter().find(|x| (*x).clone().modulus() >= max * (1.0 - 1e-6)).cloned().unwrap_or_else(T::one);
    let modulus = pivot.clone().modulus();
    if modulus == 0.0 {
        T::one()
    } else {
        pivot.conjugate().unscale(modulus)
    }
}

fn mat_pow<T>(a: &DMatrix<T>, k: usize) -> DMatrix<T>
where
    T: ComplexField<RealField = f64>,
{
    let mut p = DMatrix::<T>::identity(a.nrows(), a.ncols());
    for _ in 0..k {
        p = &p * a;
    }
    p
}

/// Jordan chains (eigenvector first) spanning the generalized eigenspace of a
/// cluster with centre `lambda` and algebraic multiplicity `mult`.
fn cluster_chains<T>(m: &DMatrix<T>, lambda: T, mult: usize, null_tol: f64, scale: f64) -> Result<Vec<Vec<DVector<T>>>>
where
    T: ComplexField<RealField = f64>,
{
    let n = m.nrows();
    let a = m - DMatrix::<T>::identity(n, n) * lambda;
    let geometric = linalg::nullity(&a, null_tol * scale).clamp(1, mult);
    if geometric == mult {
        let basis = linalg::smallest_right_vectors(&a, mult);
        return Ok(basis
            .column_iter()
            .map(|c| {
                let v = c.into_owned();
                let f = phase_factor(&v);
                vec![v * f]
            })
            .collect());
    }

    // Orthonormal basis of Null(A^mult) and the nilpotent restriction of A to it.
    let q = linalg::smallest_right_vectors(&mat_pow(&a, mult), mult);
    let nil = q.adjoint() * &a * &q;
    let mut ranks = vec![mult];
    let mut k = 1;
    while *ranks.last().unwrap() > 0 {
        if k > mult {
            return Err(Error::DecompositionFailed("restriction of M − λI is not nilpotent".into()));
        }
        let tol = null_tol * scale.powi(k as i32);
        ranks.push(linalg::numerical_rank(&mat_pow(&nil, k), Some(tol)));
        k += 1;
    }
    let longest = ranks.len() - 1;
    // at_least[k] = number of blocks of size ≥ k
    let at_least: Vec<usize> =
        (0..=longest + 1).map(|k| if k == 0 || k > longest { 0 } else { ranks[k - 1].saturating_sub(ranks[k]) }).collect();
    if at_least[1] != geometric {
        return Err(Error::DecompositionFailed(format!("inconsistent rank profile {ranks:?} for geometric multiplicity {geometric}")));
    }

    let mut chains_coords: Vec<Vec<DVector<T>>> = Vec::new();
    for level in (1..=longest).rev() {
        let new_tops = at_least[level].saturating_sub(at_least[level + 1]);
        if new_tops == 0 {
            continue;
        }
        let dim_k = mult - ranks[level];
        let x_k = linalg::smallest_right_vectors(&mat_pow(&nil, level), dim_k);
        let mut y_cols: Vec<DVector<T>> = Vec::new();
        if level > 1 {
            let dim_prev = mult - ranks[level - 1];
            let x_prev = linalg::smallest_right_vectors(&mat_pow(&nil, level - 1), dim_prev);
            y_cols.extend(x_prev.column_iter().map(|c| c.into_owned()));
        }
        for chain in &chains_coords {
            // chain is stored eigenvector first; its member at `level` has index level-1
            y_cols.push(chain[level - 1].clone());
        }
        let y = if y_cols.is_empty() {
            DMatrix::<T>::zeros(mult, 0)
        } else {
            linalg::orthonormal_columns(&DMatrix::from_columns(&y_cols), null_tol)
        };
        let tops = linalg::complement_in(&x_k, &y, new_tops);
        for top in tops.column_iter() {
            let mut chain = vec![top.into_owned()];
            for _ in 1..level {
                let next = &nil * chain.last().unwrap();
                chain.push(next);
            }
            chain.reverse();
            chains_coords.push(chain);
        }
    }
    Ok(chains_coords
        .into_iter()
        .map(|chain| {
            let full: Vec<DVector<T>> = chain.iter().map(|c| &q * c).collect();
            let f = phase_factor(full.last().unwrap());
            full.into_iter().map(|v| v * f.clone()).collect()
        })
        .collect())
}

/// `B_J`: block-diagonal anti-identity blocks `H_m`, one per Jordan block.
pub fn build_bj(structure: &JordanStructure) -> DMatrix<f64> {
    let n = structure.n();
    let mut b = DMatrix::zeros(n, n);
    for (block, off) in structure.blocks().iter().zip(structure.offsets()) {
        for k in 0..block.size {
            b[(off + k, off + block.size - 1 - k)] = 1.0;
        }
    }
    b
}

/// A pair of matched Jordan blocks, `dual` indexing blocks of `L̂` and `primal`
/// blocks of `L`, contributing `overlap` to the rank of `T_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockMatch {
    pub dual: usize,
    pub primal: usize,
    pub overlap: usize,
}

/// Certificate of r-similarity: `Ĵ T_r = T_r J` with `rank T_r = r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub t: DMatrix<f64>,
    pub matched: Vec<BlockMatch>,
    pub rank: usize,
}

/// Greedy block matching between the Jordan structures of `L̂` (rows) and `L`.
/// Within each shared eigenvalue both block lists are sorted by size and paired
/// in order, each pair contributing `min(p, q)`.
pub fn match_blocks(dual: &JordanStructure, primal: &JordanStructure, tol: f64) -> Vec<BlockMatch> {
    let mut used_primal = vec![false; primal.blocks().len()];
    let mut used_dual = vec![false; dual.blocks().len()];
    let mut out = Vec::new();
    for i in 0..dual.blocks().len() {
        if used_dual[i] {
            continue;
        }
        let lambda = dual.blocks()[i].eigenvalue;
        let mut ds: Vec<usize> =
            (0..dual.blocks().len()).filter(|&k| !used_dual[k] && (dual.blocks()[k].eigenvalue - lambda).norm() <= tol).collect();
        let mut ps: Vec<usize> =
            (0..primal.blocks().len()).filter(|&k| !used_primal[k] && (primal.blocks()[k].eigenvalue - lambda).norm() <= tol).collect();
        ds.sort_by(|&a, &b| dual.blocks()[b].size.cmp(&dual.blocks()[a].size).then(a.cmp(&b)));
        ps.sort_by(|&a, &b| primal.blocks()[b].size.cmp(&primal.blocks()[a].size).then(a.cmp(&b)));
        for &k in &ds {
            used_dual[k] = true;
        }
        for (&d, &p) in ds.iter().zip(ps.iter()) {
            used_primal[p] = true;
            out.push(BlockMatch { dual: d, primal: p, overlap: dual.blocks()[d].size.min(primal.blocks()[p].size) });
        }
    }
    out
}

/// Largest r for which the two structures are r-similar under [`match_blocks`].
pub fn similarity_rank(dual: &JordanStructure, primal: &JordanStructure, tol: f64) -> usize {
    match_blocks(dual, primal, tol).iter().map(|m| m.overlap).sum()
}

/// Searches for a rank-`r` `T_r` with `Ĵ T_r = T_r J`. `a` describes `L̂`,
/// `b` describes `L`.
pub fn check_r_similar(a: &SpectralData, b: &SpectralData, r: usize, tol: f64) -> Option<Witness> {
    let (sa, sb) = (a.structure(), b.structure());
    if r == 0 || r > sa.n().min(sb.n()) {
        return None;
    }
    let all = match_blocks(sa, sb, tol);
    if all.iter().map(|m| m.overlap).sum::<usize>() < r {
        return None;
    }
    let (oa, ob) = (sa.offsets(), sb.offsets());
    let mut t = DMatrix::zeros(sa.n(), sb.n());
    let mut remaining = r;
    let mut matched = Vec::new();
    for m in all {
        if remaining == 0 {
            break;
        }
        let s = m.overlap.min(remaining);
        let q = sb.blocks()[m.primal].size;
        for i in 0..s {
            t[(oa[m.dual] + i, ob[m.primal] + i + q - s)] = 1.0;
        }
        remaining -= s;
        matched.push(BlockMatch { overlap: s, ..m });
    }
    Some(Witness { t, matched, rank: r })
}

/// `|Σ_x F_i(x) G_j(x) μ(x) − δ_ij| ≤ tol` for all `i, j`.
pub fn check_biorthogonal(f: &[DVector<f64>], g: &[DVector<f64>], mu: &Measure, tol: f64) -> bool {
    if f.len() != g.len() || f.iter().chain(g.iter()).any(|v| v.len() != mu.len()) {
        return false;
    }
    f.iter().enumerate().all(|(i, fi)| {
        g.iter().enumerate().all(|(j, gj)| {
            let target = if i == j { 1.0 } else { 0.0 };
            (mu.inner(fi, gj) - target).abs() <= tol
        })
    })
}

/// Eigenpairs of a reversible generator, orthonormal in `L²(μ)`, eigenvalues
/// in descending order (so `λ₁ = 0` first for a generator).
#[derive(Debug, Clone, PartialEq)]
pub struct ReversibleBasis {
    pub values: Vec<f64>,
    pub functions: Vec<DVector<f64>>,
}

pub fn reversible_eigenbasis(l: &RateMatrix, mu: &Measure, tol: f64) -> Result<ReversibleBasis> {
    if !check_detailed_balance(l, mu, tol) {
        return Err(Error::PreconditionFailed("generator is not reversible w.r.t. the measure".into()));
    }
    let n = l.n();
    let w = mu.weights();
    let s = DMatrix::from_fn(n, n, |x, y| w[x].sqrt() * l.entries()[(x, y)] / w[y].sqrt());
    let sym = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let functions = order
        .iter()
        .map(|&i| {
            let v = DVector::from_fn(n, |x, _| eig.eigenvectors[(x, i)] / w[x].sqrt());
            let f = phase_factor(&v);
            v * f
        })
        .collect();
    Ok(ReversibleBasis { values, functions })
}
