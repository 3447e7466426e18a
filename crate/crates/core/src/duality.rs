//! Duality functions `D` with `L̂ D = D Lᵀ`: residuals, the full solution
//! space, and constructors from (generalized) eigenfunctions.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::markov::{Measure, RateMatrix, StateSpace};
use crate::spectral::{build_bj, ReversibleBasis, SpectralData, Witness};

/// A real matrix `D(x̂, x)` together with its residual against the pair of
/// generators it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct DualityFunction {
    dual_space: StateSpace,
    primal_space: StateSpace,
    matrix: DMatrix<f64>,
    residual: f64,
    rank: usize,
}

impl DualityFunction {
    /// Certifies `matrix` against `(lhat, l)`: records `‖L̂D − DLᵀ‖∞` and the
    /// numerical rank (`rank_tol = None` uses the default threshold).
    pub fn new(lhat: &RateMatrix, l: &RateMatrix, matrix: DMatrix<f64>, rank_tol: Option<f64>) -> Result<Self> {
        let residual = residual(lhat, l, &matrix)?;
        let rank = linalg::numerical_rank(&matrix, rank_tol);
        Ok(Self { dual_space: lhat.space().clone(), primal_space: l.space().clone(), matrix, residual, rank })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn nhat(&self) -> usize {
        self.dual_space.size()
    }

    pub fn n(&self) -> usize {
        self.primal_space.size()
    }

    pub fn dual_space(&self) -> &StateSpace {
        &self.dual_space
    }

    pub fn primal_space(&self) -> &StateSpace {
        &self.primal_space
    }
}

/// `‖L̂D − DLᵀ‖∞`.
pub fn residual(lhat: &RateMatrix, l: &RateMatrix, d: &DMatrix<f64>) -> Result<f64> {
    if d.shape() != (lhat.n(), l.n()) {
        return Err(Error::ShapeMismatch(format!("D is {}x{}, generators need {}x{}", d.nrows(), d.ncols(), lhat.n(), l.n())));
    }
    Ok(linalg::max_abs(&(lhat.entries() * d - d * l.entries().transpose())))
}

/// Basis of `{D : L̂D = DLᵀ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualitySpace {
    nhat: usize,
    n: usize,
    basis: Vec<DMatrix<f64>>,
    accuracy: f64,
}

impl DualitySpace {
    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nhat, self.n)
    }

    /// Relative error bound on the basis, `k ε σ_max / σ_gap` with `σ_gap` the
    /// smallest singular value kept out of the kernel.
    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    /// `Σ_k c_k B_k`.
    pub fn combine(&self, coefficients: &[f64]) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nhat, self.n);
        for (c, b) in coefficients.iter().zip(&self.basis) {
            d += b * *c;
        }
        d
    }
}

/// Kernel of `I_n ⊗ L̂ − L ⊗ I_n̂` acting on column-stacked `D`.
pub fn solve_duality_space(lhat: &RateMatrix, l: &RateMatrix, rank_tol: Option<f64>) -> DualitySpace {
    let (nhat, n) = (lhat.n(), l.n());
    let k = linalg::kron(&DMatrix::identity(n, n), lhat.entries()) - linalg::kron(l.entries(), &DMatrix::identity(nhat, nhat));
    let (sv, v) = linalg::svd_sorted(&k);
    let smax = sv.first().copied().unwrap_or(0.0);
    let tol = rank_tol.unwrap_or_else(|| linalg::default_rank_tol(k.shape(), smax));
    let dim = sv.iter().filter(|&&s| s <= tol).count();
    let total = v.ncols();
    let basis = (total - dim..total).map(|c| DMatrix::from_column_slice(nhat, n, v.column(c).as_slice())).collect();
    let gap = sv.iter().copied().filter(|&s| s > tol).fold(f64::INFINITY, f64::min);
    let eps = linalg::default_rank_tol(k.shape(), smax);
    let accuracy = if gap.is_finite() && gap > 0.0 { (eps / gap).max(f64::EPSILON) } else { f64::EPSILON };
    DualitySpace { nhat, n, basis, accuracy }
}

/// Largest numerical rank over `trials` random combinations of the basis.
/// Singular values below the basis accuracy count as zero.
pub fn max_duality_rank(space: &DualitySpace, seed: u64, trials: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (space.nhat.max(space.n) as f64).sqrt();
    (0..trials.max(1))
        .map(|_| {
            let c: Vec<f64> = (0..space.dimension()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let d = space.combine(&c);
            let smax = d.singular_values().max();
            let tol = linalg::default_rank_tol(d.shape(), smax).max(scale * space.accuracy() * smax);
            linalg::numerical_rank(&d, Some(tol))
        })
        .max()
        .unwrap_or(0)
}

/// Default trial count for [`max_duality_rank`].
pub const RANK_TRIALS: usize = 8;

/// `D = Û T B_J Uᵀ`, with `T` the witness matrix whose matched block pieces are
/// scaled by `coefficients` (one per entry of `witness.matched`). `a` is the
/// spectral data of `L̂`, `b` that of `L`. Coefficients of complex-conjugate
/// matches are tied so the result is real.
pub fn build_from_spectra(
    a: &SpectralData,
    b: &SpectralData,
    witness: &Witness,
    coefficients: &[f64],
    tol: f64,
) -> Result<DualityFunction> {
    if coefficients.len() != witness.matched.len() {
        return Err(Error::ShapeMismatch(format!("{} coefficients for {} matched blocks", coefficients.len(), witness.matched.len())));
    }
    let (sa, sb) = (a.structure(), b.structure());
    let (oa, ob) = (sa.offsets(), sb.offsets());
    let tied = tie_conjugates(a, witness, coefficients);
    let mut t = DMatrix::<C64>::zeros(sa.n(), sb.n());
    for (m, c) in witness.matched.iter().zip(&tied) {
        let (p, q) = (sa.blocks()[m.dual].size, sb.blocks()[m.primal].size);
        for i in 0..p {
            for j in 0..q {
                let w = witness.t[(oa[m.dual] + i, ob[m.primal] + j)];
                if w != 0.0 {
                    t[(oa[m.dual] + i, ob[m.primal] + j)] = C64::new(w * c, 0.0);
                }
            }
        }
    }
    let bj = linalg::to_complex(&build_bj(sb));
    let d = a.u() * t * bj * b.u().transpose();
    let (real, imag) = linalg::split_real(&d);
    let scale = linalg::max_abs(&real).max(1.0);
    if imag > tol * scale {
        return Err(Error::ComplexResidue(imag));
    }
    let lhat = RateMatrix::raw(a.source().clone())?;
    let l = RateMatrix::raw(b.source().clone())?;
    DualityFunction::new(&lhat, &l, real, None)
}

/// Each match on a non-real eigenvalue with negative imaginary part takes the
/// coefficient of its conjugate partner, when the partner is matched too.
fn tie_conjugates(a: &SpectralData, witness: &Witness, coefficients: &[f64]) -> Vec<f64> {
    let blocks = a.structure().blocks();
    let mut out = coefficients.to_vec();
    for (i, m) in witness.matched.iter().enumerate() {
        let lam = blocks[m.dual].eigenvalue;
        if lam.im >= 0.0 {
            continue;
        }
        let partner = witness.matched.iter().position(|o| {
            let mu = blocks[o.dual].eigenvalue;
            mu.im > 0.0 && (mu.conj() - lam).norm() <= 1e-9 * lam.norm().max(1.0) && o.overlap == m.overlap
        });
        if let Some(j) = partner {
            out[i] = coefficients[j];
        }
    }
    out
}

/// Diagonal `D(x,y) = δ_{x,y} / μ(y)`, certified against `(lhat, l)`; it is a
/// duality for `(L†, L)` with `L†` the `L²(μ)` adjoint, and a self-duality of
/// any `L` reversible w.r.t. `μ`.
pub fn cheap_duality(lhat: &RateMatrix, l: &RateMatrix, mu: &Measure) -> Result<DualityFunction> {
    let d = DMatrix::from_diagonal(&mu.weights().map(|w| 1.0 / w));
    DualityFunction::new(lhat, l, d, None)
}

fn rayleigh(m: &DMatrix<f64>, v: &DVector<f64>) -> Option<f64> {
    let nn = v.dot(v);
    (nn > 0.0).then(|| v.dot(&(m * v)) / nn)
}

fn eigen_residual(m: &DMatrix<f64>, v: &DVector<f64>, lambda: f64) -> f64 {
    linalg::max_abs_vec(&(m * v - v * lambda))
}

/// `D(x̂, x) = Σ_i a_i û_i(x̂) u_i(x)` for eigenpairs sharing eigenvalues.
pub fn tensor_duality(
    lhat: &RateMatrix,
    l: &RateMatrix,
    uhats: &[DVector<f64>],
    us: &[DVector<f64>],
    a: &[f64],
    tol: f64,
) -> Result<DualityFunction> {
    if uhats.len() != us.len() || us.len() != a.len() {
        return Err(Error::ShapeMismatch("uhats, us and a must have equal length".into()));
    }
    let mut d = DMatrix::zeros(lhat.n(), l.n());
    for (i, ((uh, u), ai)) in uhats.iter().zip(us).zip(a).enumerate() {
        if uh.len() != lhat.n() || u.len() != l.n() {
            return Err(Error::ShapeMismatch(format!("eigenfunction pair {i} has the wrong length")));
        }
        let lambda = rayleigh(l.entries(), u).ok_or(Error::NotEigenpair { index: i, residual: f64::INFINITY })?;
        let scale = |v: &DVector<f64>| linalg::max_abs_vec(v).max(1.0);
        let r = eigen_residual(l.entries(), u, lambda) / scale(u);
        let rh = eigen_residual(lhat.entries(), uh, lambda) / scale(uh);
        if r > tol || rh > tol || uh.iter().all(|x| *x == 0.0) {
            return Err(Error::NotEigenpair { index: i, residual: r.max(rh) });
        }
        d += uh * u.transpose() * *ai;
    }
    DualityFunction::new(lhat, l, d, None)
}

fn rayleigh_c(m: &DMatrix<f64>, v: &DVector<C64>) -> Option<C64> {
    let mc = linalg::to_complex(m);
    let nn = v.dotc(v);
    (nn.norm() > 0.0).then(|| v.dotc(&(mc * v)) / nn)
}

fn eigen_residual_c(m: &DMatrix<f64>, v: &DVector<C64>, lambda: C64) -> f64 {
    let r = linalg::to_complex(m) * v - v * lambda;
    r.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `D = a û ⊗ u + a û* ⊗ u* = 2a Re(û ⊗ u)` for a shared non-real eigenvalue.
pub fn complex_pair_duality(
    lhat: &RateMatrix,
    l: &RateMatrix,
    uhat: &DVector<C64>,
    u: &DVector<C64>,
    a: f64,
    tol: f64,
) -> Result<DualityFunction> {
    if uhat.len() != lhat.n() || u.len() != l.n() {
        return Err(Error::ShapeMismatch("eigenfunction lengths do not match the generators".into()));
    }
    let lambda = rayleigh_c(l.entries(), u).ok_or(Error::NotEigenpair { index: 0, residual: f64::INFINITY })?;
    let r = eigen_residual_c(l.entries(), u, lambda);
    let rh = eigen_residual_c(lhat.entries(), uhat, lambda);
    if r > tol || rh > tol {
        return Err(Error::NotEigenpair { index: 0, residual: r.max(rh) });
    }
    if lambda.im.abs() <= tol {
        return Err(Error::NotConjugateClosed(lambda.re));
    }
    let d = DMatrix::from_fn(lhat.n(), l.n(), |xh, x| 2.0 * a * (uhat[xh] * u[x]).re);
    DualityFunction::new(lhat, l, d, None)
}

fn chain_eigenvalue(m: &DMatrix<f64>, chain: &[DVector<f64>]) -> Option<f64> {
    chain.first().and_then(|v| rayleigh(m, v))
}

fn validate_chain(m: &DMatrix<f64>, chain: &[DVector<f64>], lambda: f64, tol: f64) -> Result<()> {
    for (k, v) in chain.iter().enumerate() {
        let mut r = m * v - v * lambda;
        if k > 0 {
            r -= &chain[k - 1];
        }
        let res = linalg::max_abs_vec(&r);
        if res > tol {
            return Err(Error::NotChain { order: k + 1, residual: res });
        }
    }
    Ok(())
}

/// `D(x̂, x) = Σ_{k=1}^m û⁽ᵏ⁾(x̂) u⁽ᵐ⁺¹⁻ᵏ⁾(x)` for Jordan chains of a common
/// real eigenvalue. Chains are given eigenvector first.
pub fn chain_duality(
    lhat: &RateMatrix,
    l: &RateMatrix,
    uhat_chain: &[DVector<f64>],
    u_chain: &[DVector<f64>],
    tol: f64,
) -> Result<DualityFunction> {
    let m = u_chain.len();
    if m == 0 || uhat_chain.len() != m {
        return Err(Error::ShapeMismatch("chains must be non-empty and of equal length".into()));
    }
    let lambda = chain_eigenvalue(l.entries(), u_chain).ok_or(Error::NotChain { order: 1, residual: f64::INFINITY })?;
    validate_chain(l.entries(), u_chain, lambda, tol)?;
    validate_chain(lhat.entries(), uhat_chain, lambda, tol)?;
    let mut d = DMatrix::zeros(lhat.n(), l.n());
    for k in 0..m {
        d += &uhat_chain[k] * u_chain[m - 1 - k].transpose();
    }
    DualityFunction::new(lhat, l, d, None)
}

fn orthonormality_error(fs: &[DVector<f64>], mu: &Measure) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, f) in fs.iter().enumerate() {
        for (j, g) in fs.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((mu.inner(f, g) - target).abs());
        }
    }
    worst
}

/// `D(x, y) = Σ_i ũ_i(x) u_i(y)` for two `L²(μ)`-orthonormal eigenbases with
/// matching eigenvalues. The result satisfies
/// `⟨D(x,·), D(x′,·)⟩_μ = δ_{x,x′} / μ(x′)`.
pub fn orthogonal_selfduality(
    l: &RateMatrix,
    mu: &Measure,
    basis: &ReversibleBasis,
    tilde_us: &[DVector<f64>],
    tol: f64,
) -> Result<DualityFunction> {
    let n = l.n();
    if basis.functions.len() != n || tilde_us.len() != n {
        return Err(Error::ShapeMismatch(format!("need {n} functions in each family")));
    }
    for family in [&basis.functions[..], tilde_us] {
        let err = orthonormality_error(family, mu);
        if err > tol {
            return Err(Error::NotOrthonormal(err));
        }
    }
    for (i, (u, ut)) in basis.functions.iter().zip(tilde_us).enumerate() {
        let lambda = basis.values[i];
        let r = eigen_residual(l.entries(), u, lambda).max(eigen_residual(l.entries(), ut, lambda));
        if r > tol {
            return Err(Error::NotEigenpair { index: i, residual: r });
        }
    }
    let mut d = DMatrix::zeros(n, n);
    for (u, ut) in basis.functions.iter().zip(tilde_us) {
        d += ut * u.transpose();
    }
    DualityFunction::new(l, l, d, None)
}

/// `D″(x, x′) = Σ_y D(x,y) D₂(x′,y) μ(y)`, certified as a self-duality of `lhat`.
pub fn compose_dualities(d: &DualityFunction, d2: &DualityFunction, mu: &Measure, lhat: &RateMatrix) -> Result<DualityFunction> {
    if d.n() != d2.n() || mu.len() != d.n() {
        return Err(Error::ShapeMismatch("dualities must share the primal space of the measure".into()));
    }
    if d.nhat() != lhat.n() || d2.nhat() != lhat.n() {
        return Err(Error::ShapeMismatch("dual spaces must match the dual-side generator".into()));
    }
    let m = DMatrix::from_diagonal(mu.weights());
    let composed = d.matrix() * m * d2.matrix().transpose();
    DualityFunction::new(lhat, lhat, composed, None)
}

/// Rank-one factorization `D = f gᵀ` with `L̂f = λf`, `Lg = λg`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneFactor {
    pub f: DVector<f64>,
    pub g: DVector<f64>,
    pub eigenvalue: f64,
}

/// Extracts the eigenpair carried by a rank-one duality; `None` if `D` is not
/// rank one, is not a duality at `tol` relative to its size, or the factors fail validation.
pub fn factor_check(d: &DualityFunction, l: &RateMatrix, lhat: &RateMatrix, tol: f64) -> Option<RankOneFactor> {
    let m = d.matrix();
    if linalg::numerical_rank(m, None) != 1 || residual(lhat, l, m).ok()? > tol * linalg::max_abs(m).max(1.0) {
        return None;
    }
    let svd = m.clone().svd(true, true);
    let k = svd.singular_values.imax();
    // the right factor alone is reliable on rank-deficient input; D g = f
    let g: DVector<f64> = svd.v_t.as_ref()?.row(k).transpose();
    let f: DVector<f64> = m * &g;
    let lambda = rayleigh(lhat.entries(), &f)?;
    let fs = linalg::max_abs_vec(&f).max(1.0);
    let gs = linalg::max_abs_vec(&g).max(1.0);
    let ok = eigen_residual(lhat.entries(), &f, lambda) <= tol * fs && eigen_residual(l.entries(), &g, lambda) <= tol * gs;
    ok.then_some(RankOneFactor { f, g, eigenvalue: lambda })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{adjoint, stationary_measure};
    use crate::spectral::{check_r_similar, decompose, reversible_eigenbasis};

    fn cyclic() -> RateMatrix {
        RateMatrix::from_rows(&[&[-1.0, 1.0, 0.0], &[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0]]).unwrap()
    }

    fn birth_death() -> RateMatrix {
        RateMatrix::from_rows(&[&[-2.0, 2.0, 0.0], &[1.0, -4.0, 3.0], &[0.0, 1.0, -1.0]]).unwrap()
    }

    #[test]
    fn residual_examples() {
        let ones = DMatrix::from_element(3, 3, 1.0);
        assert_eq!(residual(&cyclic(), &birth_death(), &ones).unwrap(), 0.0);
        // L − Lᵀ for the cyclic matrix has entries ±1, so the identity leaves residual 1.
        // (Computed by hand: row 1 of L − Lᵀ is (0, 1, −1).)
        let id = DMatrix::identity(3, 3);
        let r = residual(&cyclic(), &cyclic(), &id).unwrap();
        let oracle = linalg::max_abs(&(cyclic().entries() - cyclic().entries().transpose()));
        assert_eq!(r, oracle);
        assert_eq!(r, 1.0);
        assert!(residual(&cyclic(), &cyclic(), &DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn cheap_duality_against_adjoint() {
        let l = cyclic();
        let mu = Measure::from_slice(&[0.5, 0.25, 0.25]).unwrap();
        let adj = adjoint(&l, &mu).unwrap();
        let d = cheap_duality(&adj, &l, &mu).unwrap();
        assert_eq!(d.matrix(), &DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0, 4.0])));
        assert!(d.residual() < 1e-14);
        let bd = birth_death();
        let pi = stationary_measure(&bd, 1e-9).unwrap();
        assert!(cheap_duality(&bd, &bd, &pi).unwrap().residual() < 1e-12);
        let u3 = Measure::uniform(3).unwrap();
        assert_eq!(cheap_duality(&l, &l, &u3).unwrap().matrix()[(1, 1)], 3.0);
    }

    #[test]
    fn duality_space_dimensions() {
        let bd = birth_death();
        let space = solve_duality_space(&bd, &bd, None);
        assert_eq!(space.dimension(), 3);
        for b in space.basis() {
            assert!(residual(&bd, &bd, b).unwrap() < 1e-12);
        }
        assert_eq!(max_duality_rank(&space, 7, RANK_TRIALS), 3);
        let zero = RateMatrix::new(DMatrix::zeros(1, 1)).unwrap();
        assert_eq!(solve_duality_space(&zero, &zero, None).dimension(), 1);
    }

    #[test]
    fn disjoint_spectra_leave_constants_only() {
        let l1 = RateMatrix::from_rows(&[&[-0.5, 0.5], &[0.5, -0.5]]).unwrap();
        let l2 = RateMatrix::from_rows(&[&[-1.0, 1.0], &[1.0, -1.0]]).unwrap();
        let space = solve_duality_space(&l1, &l2, None);
        assert_eq!(space.dimension(), 1);
        assert_eq!(max_duality_rank(&space, 1, RANK_TRIALS), 1);
        let b = &space.basis()[0];
        assert!((b - DMatrix::from_element(2, 2, b[(0, 0)])).iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn spectral_construction_cyclic_pair() {
        let l = cyclic();
        let s = decompose(&l, 1e-7).unwrap();
        let w = check_r_similar(&s, &s, 3, 1e-7).unwrap();
        let d = build_from_spectra(&s, &s, &w, &[0.0, 1.0, 1.0], 1e-9).unwrap();
        assert!(d.residual() < 1e-12);
        assert_eq!(d.rank(), 2);
        // D depends only on (x + y) mod 3 and averages to zero over a period
        let m = d.matrix();
        for x in 0..3 {
            for y in 0..3 {
                assert!((m[(x, y)] - m[((x + y) % 3, 0)]).abs() < 1e-12);
            }
        }
        assert!((m[(0, 0)] + m[(1, 0)] + m[(2, 0)]).abs() < 1e-12);
        let zero = build_from_spectra(&s, &s, &w, &[0.0; 3], 1e-9).unwrap();
        assert_eq!(zero.rank(), 0);
        assert_eq!(zero.residual(), 0.0);
    }

    #[test]
    fn spectral_construction_reversible_is_cheap() {
        let bd = birth_death();
        let pi = stationary_measure(&bd, 1e-9).unwrap();
        let s = decompose(&bd, 1e-7).unwrap();
        let w = check_r_similar(&s, &s, 3, 1e-7).unwrap();
        let d = build_from_spectra(&s, &s, &w, &[1.0; 3], 1e-9).unwrap();
        assert!(d.residual() < 1e-12);
        // eigenvectors are unit in ℓ², not L²(μ): D is diagonal in the eigenbasis
        // only up to per-mode scaling, so compare after rescaling each mode
        let basis = reversible_eigenbasis(&bd, &pi, 1e-12).unwrap();
        let ones = vec![1.0; 3];
        let t = tensor_duality(&bd, &bd, &basis.functions, &basis.functions, &ones, 1e-9).unwrap();
        let cheap = cheap_duality(&bd, &bd, &pi).unwrap();
        assert!(linalg::max_abs(&(t.matrix() - cheap.matrix())) < 1e-12);
    }

    #[test]
    fn tensor_constant_mode() {
        let n = 4;
        let l = RateMatrix::from_rows(&[&[-1.0, 1.0, 0.0, 0.0], &[1.0, -2.0, 1.0, 0.0], &[0.0, 1.0, -2.0, 1.0], &[0.0, 0.0, 1.0, -1.0]])
            .unwrap();
        let c = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        let d = tensor_duality(&l, &l, std::slice::from_ref(&c), std::slice::from_ref(&c), &[1.0], 1e-9).unwrap();
        assert!(d.matrix().iter().all(|x| (x - 0.25).abs() < 1e-15));
        let bad = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            tensor_duality(&l, &l, std::slice::from_ref(&bad), std::slice::from_ref(&bad), &[1.0], 1e-9),
            Err(Error::NotEigenpair { .. })
        ));
    }

    #[test]
    fn complex_pair_cyclic() {
        let l = cyclic();
        let w = 2.0 * std::f64::consts::PI / 3.0;
        let u = DVector::from_fn(3, |i, _| C64::from_polar(1.0, w * (i + 1) as f64));
        let d = complex_pair_duality(&l, &l, &u, &u, 0.5, 1e-9).unwrap();
        assert!(d.residual() < 1e-12);
        for x in 0..3 {
            for y in 0..3 {
                let expect = (w * ((x + 1) + (y + 1)) as f64).cos();
                assert!((d.matrix()[(x, y)] - expect).abs() < 1e-14);
            }
        }
        let zero = complex_pair_duality(&l, &l, &u, &u, 0.0, 1e-9).unwrap();
        assert!(zero.matrix().iter().all(|x| *x == 0.0));
        let c = DVector::from_element(3, C64::new(1.0, 0.0));
        assert_eq!(complex_pair_duality(&l, &l, &c, &c, 1.0, 1e-9), Err(Error::NotConjugateClosed(0.0)));
    }

    fn jordan4() -> RateMatrix {
        RateMatrix::from_rows(&[&[-0.5, 0.5, 0.0, 0.0], &[0.0, -1.0, 0.5, 0.5], &[0.5, 0.0, -1.0, 0.5], &[0.0, 0.5, 0.5, -1.0]]).unwrap()
    }

    fn jordan4_chain() -> Vec<DVector<f64>> {
        let u1 = DVector::from_fn(4, |i, _| (-1f64).powi(i as i32 + 1) / 2.0);
        let u2 = DVector::from_fn(4, |i, _| (std::f64::consts::FRAC_PI_2 * (i as f64 + 2.0)).cos());
        vec![u1, u2]
    }

    #[test]
    fn chain_duality_jordan4() {
        let l = jordan4();
        let chain = jordan4_chain();
        let d = chain_duality(&l, &l, &chain, &chain, 1e-9).unwrap();
        assert!(d.residual() < 1e-12);
        // unreversed pairing: û⁽¹⁾u⁽¹⁾ + û⁽²⁾u⁽²⁾
        let wrong = &chain[0] * chain[0].transpose() + &chain[1] * chain[1].transpose();
        assert!(residual(&l, &l, &wrong).unwrap() > 1e-3);
        let single = chain_duality(&l, &l, &chain[..1], &chain[..1], 1e-9).unwrap();
        assert_eq!(single.matrix(), &(&chain[0] * chain[0].transpose()));
        let swapped = vec![chain[1].clone(), chain[0].clone()];
        assert!(matches!(chain_duality(&l, &l, &swapped, &swapped, 1e-9), Err(Error::NotChain { .. })));
    }

    #[test]
    fn orthogonal_selfduality_sign_flip() {
        let bd = birth_death();
        let pi = stationary_measure(&bd, 1e-9).unwrap();
        let basis = reversible_eigenbasis(&bd, &pi, 1e-12).unwrap();
        let cheap = cheap_duality(&bd, &bd, &pi).unwrap();
        let same = orthogonal_selfduality(&bd, &pi, &basis, &basis.functions, 1e-9).unwrap();
        assert!(linalg::max_abs(&(same.matrix() - cheap.matrix())) < 1e-12);
        let flipped: Vec<DVector<f64>> = basis.functions.iter().map(|u| -u).collect();
        let neg = orthogonal_selfduality(&bd, &pi, &basis, &flipped, 1e-9).unwrap();
        assert!(linalg::max_abs(&(neg.matrix() + cheap.matrix())) < 1e-12);
        let composed = compose_dualities(&neg, &neg, &pi, &bd).unwrap();
        assert!(linalg::max_abs(&(composed.matrix() - cheap.matrix())) < 1e-10);
        let scaled: Vec<DVector<f64>> = basis.functions.iter().map(|u| u * 2.0).collect();
        assert!(matches!(orthogonal_selfduality(&bd, &pi, &basis, &scaled, 1e-9), Err(Error::NotOrthonormal(_))));
    }

    #[test]
    fn orthogonal_selfduality_mixed_eigenspace() {
        // complete-graph walk on 3 states: eigenvalue −3 has a 2-dimensional eigenspace
        let l = RateMatrix::from_rows(&[&[-2.0, 1.0, 1.0], &[1.0, -2.0, 1.0], &[1.0, 1.0, -2.0]]).unwrap();
        let mu = Measure::uniform(3).unwrap();
        let basis = reversible_eigenbasis(&l, &mu, 1e-12).unwrap();
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let f = &basis.functions;
        let tilde = vec![f[0].clone(), &f[1] * c + &f[2] * s, -(&f[1] * (-s) + &f[2] * c)];
        let d = orthogonal_selfduality(&l, &mu, &basis, &tilde, 1e-9).unwrap();
        assert!(d.residual() < 1e-12);
        let g = compose_dualities(&d, &d, &mu, &l).unwrap();
        let cheap = cheap_duality(&l, &l, &mu).unwrap();
        assert!(linalg::max_abs(&(g.matrix() - cheap.matrix())) < 1e-10);
    }

    #[test]
    fn compose_constants() {
        let l = birth_death();
        let mu = stationary_measure(&l, 1e-9).unwrap();
        let ones = DualityFunction::new(&l, &l, DMatrix::from_element(3, 3, 1.0), None).unwrap();
        let g = compose_dualities(&ones, &ones, &mu, &l).unwrap();
        assert!(g.matrix().iter().all(|x| (x - 1.0).abs() < 1e-14));
        let cheap = cheap_duality(&l, &l, &mu).unwrap();
        let g = compose_dualities(&cheap, &cheap, &mu, &l).unwrap();
        assert!(linalg::max_abs(&(g.matrix() - cheap.matrix())) < 1e-12);
    }

    #[test]
    fn factor_check_examples() {
        let l = cyclic();
        let ones = DualityFunction::new(&l, &l, DMatrix::from_element(3, 3, 1.0), None).unwrap();
        let fac = factor_check(&ones, &l, &l, 1e-9).unwrap();
        assert!(fac.eigenvalue.abs() < 1e-12);
        assert!(fac.f.iter().all(|x| (x - fac.f[0]).abs() < 1e-12));
        let bd = birth_death();
        let pi = stationary_measure(&bd, 1e-9).unwrap();
        let cheap = cheap_duality(&bd, &bd, &pi).unwrap();
        assert!(factor_check(&cheap, &bd, &bd, 1e-9).is_none());
    }
}
