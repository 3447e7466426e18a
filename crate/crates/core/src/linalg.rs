//! Small dense helpers shared by the spectral and duality modules.

use nalgebra::{ComplexField, DMatrix, DVector};

pub use nalgebra::Complex;
pub type C64 = Complex<f64>;

/// Largest absolute entry (the max-norm used for every residual in this crate).
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_c(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.norm()))
}

pub fn max_abs_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

/// Real part of a complex matrix together with the largest discarded imaginary part.
pub fn split_real(m: &DMatrix<C64>) -> (DMatrix<f64>, f64) {
    let im = m.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
    (m.map(|z| z.re), im)
}

/// Singular values and right singular vectors (as columns), sorted by descending
/// singular value. Wide matrices are padded with zero rows so that the full right
/// basis is returned.
pub fn svd_sorted<T>(a: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>)
where
    T: ComplexField<RealField = f64>,
{
    let (rows, cols) = a.shape();
    let padded = if rows < cols {
        let mut p = DMatrix::<T>::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v = svd.v_t.expect("requested right singular vectors").adjoint();
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let values = order.iter().map(|&i| sv[i]).collect();
    let mut sorted = DMatrix::<T>::zeros(cols, order.len());
    for (dst, &src) in order.iter().enumerate() {
        sorted.set_column(dst, &v.column(src));
    }
    (values, sorted)
}

/// Default rank threshold: max dimension x machine epsilon x largest singular value.
pub fn default_rank_tol(shape: (usize, usize), sigma_max: f64) -> f64 {
    shape.0.max(shape.1) as f64 * f64::EPSILON * sigma_max
}

pub fn numerical_rank<T>(a: &DMatrix<T>, tol: Option<f64>) -> usize
where
    T: ComplexField<RealField = f64>,
{
    if a.is_empty() {
        return 0;
    }
    let sv = a.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let tol = tol.unwrap_or_else(|| default_rank_tol(a.shape(), smax));
    sv.iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis (columns) of the `dim` right singular directions with the
/// smallest singular values.
pub fn smallest_right_vectors<T>(a: &DMatrix<T>, dim: usize) -> DMatrix<T>
where
    T: ComplexField<RealField = f64>,
{
    let (_, v) = svd_sorted(a);
    let k = v.ncols();
    v.columns(k - dim, dim).into_owned()
}

/// Number of singular values at or below `tol`.
pub fn nullity<T>(a: &DMatrix<T>, tol: f64) -> usize
where
    T: ComplexField<RealField = f64>,
{
    let (sv, _) = svd_sorted(a);
    sv.iter().filter(|&&s| s <= tol).count()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Orthonormal basis of the orthogonal complement of `span(y)` inside `span(x)`,
/// both given by orthonormal columns with `span(y) ⊆ span(x)`. Candidates are
/// returned in order of descending norm after projection.
pub fn complement_in<T>(x: &DMatrix<T>, y: &DMatrix<T>, count: usize) -> DMatrix<T>
where
    T: ComplexField<RealField = f64>,
{
    let projected = if y.ncols() == 0 { x.clone() } else { x - y * (y.adjoint() * x) };
    let svd = projected.svd(true, false);
    let u = svd.u.expect("requested left singular vectors");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let mut out = DMatrix::<T>::zeros(x.nrows(), count);
    for (dst, &src) in order.iter().take(count).enumerate() {
        out.set_column(dst, &u.column(src));
    }
    out
}

/// Orthonormalize the columns of `m` (thin QR); rank-deficient inputs keep only
/// the leading independent directions.
pub fn orthonormal_columns<T>(m: &DMatrix<T>, tol: f64) -> DMatrix<T>
where
    T: ComplexField<RealField = f64>,
{
    if m.ncols() == 0 {
        return m.clone();
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested left singular vectors");
    let sv = svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = {
        let mut idx: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > tol * smax.max(1.0)).collect();
        idx.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
        idx
    };
    let mut out = DMatrix::<T>::zeros(m.nrows(), keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        out.set_column(dst, &u.column(src));
    }
    out
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}
