//! Single-site self-duality functions `d(k, n)` of SEP(γ) and their
//! factorized products.

use nalgebra::DMatrix;

use super::sep::{checked_pow, ConfigurationSpace, SpaceKind};
use crate::duality::DualityFunction;
use crate::error::{Error, Result};
use crate::intertwining::binomial;
use crate::linalg;
use crate::markov::RateMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleSiteParams {
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
    pub delta: f64,
    pub gamma: usize,
}

/// Parameter regimes, tested in declaration order with exact comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `δ = 0`: `(α+β)^{εn} α^{ε(γ−n)}`, independent of `k`.
    Constant,
    /// `α = 0, ε = 0`: `(β^δ)^k (γ−k)!/γ! · n!/(n−k)! · 1{n ≥ k}`.
    Classical,
    /// `α = 0, ε ≠ 0`: `β^{εγ+δk} 1{n = γ}`.
    Full,
    /// `β = 0`: `α^{εγ+δk}`.
    Flat,
    /// `α = −β`: `α^{εγ+δk} 1{n = 0}` for `ε ≠ 0`, and
    /// `C(γ−k, n)/C(γ, n) · α^{δk}` for `ε = 0`.
    Empty,
    /// Kravchuk family `α^{εγ−εn+δk} (α+β)^{εn} ₂F₁(−k, −n; −γ; 1 − (1+β/α)^δ)`.
    Orthogonal,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Constant => "constant",
            Regime::Classical => "classical",
            Regime::Full => "full",
            Regime::Flat => "flat",
            Regime::Empty => "empty",
            Regime::Orthogonal => "orthogonal",
        }
    }
}

pub fn classify_regime(p: &SingleSiteParams) -> Regime {
    if p.delta == 0.0 {
        Regime::Constant
    } else if p.alpha == 0.0 && p.eps == 0.0 {
        Regime::Classical
    } else if p.alpha == 0.0 {
        Regime::Full
    } else if p.beta == 0.0 {
        Regime::Flat
    } else if p.alpha == -p.beta {
        Regime::Empty
    } else {
        Regime::Orthogonal
    }
}

/// Rejects parameters for which some factor `(α + βv)^{ε}` or
/// `(α + βv)^{δ}`, `v ∈ {0,1}`, is undefined.
fn check_domain(p: &SingleSiteParams) -> Result<()> {
    if p.gamma == 0 {
        return Err(Error::PreconditionFailed("γ must be at least 1".into()));
    }
    if ![p.alpha, p.beta, p.eps, p.delta].iter().all(|v| v.is_finite()) {
        return Err(Error::DomainError("parameters must be finite".into()));
    }
    for base in [p.alpha, p.alpha + p.beta] {
        for exp in [p.eps, p.delta] {
            if base == 0.0 && exp < 0.0 {
                return Err(Error::DomainError(format!("0 raised to {exp}")));
            }
            if base < 0.0 && exp.fract() != 0.0 {
                return Err(Error::DomainError(format!("{base} raised to non-integer {exp}")));
            }
        }
    }
    Ok(())
}

fn factorial_ratio(top: usize, bottom: usize) -> f64 {
    // top! / bottom! for bottom ≤ top
    (bottom + 1..=top).fold(1.0, |acc, i| acc * i as f64)
}

/// Terminating `₂F₁(−k, −n; −γ; z) = Σ_{j ≤ min(k,n)} (−k)_j (−n)_j / ((−γ)_j j!) zʲ`.
pub fn hypergeometric_2f1(k: usize, n: usize, gamma: usize, z: f64) -> Result<f64> {
    let top = k.min(n);
    let mut terms = Vec::with_capacity(top + 1);
    let mut term = 1.0;
    terms.push(term);
    for j in 0..top {
        let denom = (j as f64 - gamma as f64) * (j + 1) as f64;
        if denom == 0.0 {
            return Err(Error::DegenerateHypergeometric(j));
        }
        term *= (j as f64 - k as f64) * (j as f64 - n as f64) / denom * z;
        terms.push(term);
    }
    Ok(linalg::pairwise_sum(&terms))
}

/// The `(γ+1)×(γ+1)` table `d(k, n)` for the detected regime.
pub fn single_site_duality(p: &SingleSiteParams) -> Result<DMatrix<f64>> {
    check_domain(p)?;
    let SingleSiteParams { alpha, beta, eps, delta, gamma } = *p;
    let g = gamma as f64;
    let mut d = DMatrix::zeros(gamma + 1, gamma + 1);
    let regime = classify_regime(p);
    let z = match regime {
        Regime::Orthogonal => 1.0 - checked_pow((alpha + beta) / alpha, delta)?,
        _ => 0.0,
    };
    for k in 0..=gamma {
        for n in 0..=gamma {
            let (kf, nf) = (k as f64, n as f64);
            d[(k, n)] = match regime {
                Regime::Constant => checked_pow(alpha + beta, eps * nf)? * checked_pow(alpha, eps * (g - nf))?,
                Regime::Classical if n >= k => {
                    checked_pow(beta, delta)?.powi(k as i32) * factorial_ratio(n, n - k) / factorial_ratio(gamma, gamma - k)
                }
                Regime::Classical => 0.0,
                Regime::Full if n == gamma => checked_pow(beta, eps * g + delta * kf)?,
                Regime::Full => 0.0,
                Regime::Flat => checked_pow(alpha, eps * g + delta * kf)?,
                Regime::Empty if eps != 0.0 => {
                    if n == 0 {
                        checked_pow(alpha, eps * g + delta * kf)?
                    } else {
                        0.0
                    }
                }
                Regime::Empty => binomial(gamma - k, n) / binomial(gamma, n) * checked_pow(alpha, delta * kf)?,
                Regime::Orthogonal => {
                    checked_pow(alpha, eps * (g - nf) + delta * kf)?
                        * checked_pow(alpha + beta, eps * nf)?
                        * hypergeometric_2f1(k, n, gamma, z)?
                }
            };
        }
    }
    Ok(d)
}

/// `d(k, n)` straight from the ladder product: the average over
/// `η̃ ∈ {0,1}^γ` with `|η̃| = n` of `∏_a (α + β η̃_a)^{ε + δ ξ̃_a}`, where `ξ̃`
/// occupies the first `k` rungs. Exponential in `γ`; used to cross-check
/// [`single_site_duality`].
pub fn single_site_by_enumeration(p: &SingleSiteParams) -> Result<DMatrix<f64>> {
    let g = p.gamma;
    if g == 0 || g > 20 {
        return Err(Error::PreconditionFailed(format!("enumeration needs 1 ≤ γ ≤ 20, got {g}")));
    }
    let mut d = DMatrix::zeros(g + 1, g + 1);
    for k in 0..=g {
        let mut sums = vec![Vec::new(); g + 1];
        for mask in 0u32..(1 << g) {
            let mut v = 1.0;
            for a in 0..g {
                let eta = f64::from((mask >> a) & 1);
                let xi = if a < k { 1.0 } else { 0.0 };
                v *= checked_pow(p.alpha + p.beta * eta, p.eps + p.delta * xi)?;
            }
            sums[mask.count_ones() as usize].push(v);
        }
        for (n, s) in sums.iter().enumerate() {
            d[(k, n)] = linalg::pairwise_sum(s) / binomial(g, n);
        }
    }
    Ok(d)
}

/// `C(γ,n)⁻¹ Σ_ℓ C(k, k−ℓ) C(γ−k, n−k+ℓ) (α+β)^{δ(k−ℓ)} α^{δℓ}`: the part of
/// `d(k, n)` that carries the `δ`-dependence. Equals 1 when `δ = 0`.
pub fn bracket_sum(p: &SingleSiteParams, k: usize, n: usize) -> Result<f64> {
    let g = p.gamma;
    if k > g || n > g {
        return Err(Error::ShapeMismatch(format!("k = {k}, n = {n} exceed γ = {g}")));
    }
    let mut terms = Vec::new();
    for l in 0..=k {
        let moved = k - l;
        if moved > n || n - moved > g - k {
            continue;
        }
        let w = binomial(k, moved) * binomial(g - k, n - moved);
        terms.push(w * checked_pow(p.alpha + p.beta, p.delta * moved as f64)? * checked_pow(p.alpha, p.delta * l as f64)?);
    }
    Ok(linalg::pairwise_sum(&terms) / binomial(g, n))
}

/// `D(ξ, η) = ∏_x d_x(ξ(x), η(x))` over a SEP space, certified against `l`.
pub fn factorized_duality(tables: &[DMatrix<f64>], space: &ConfigurationSpace, l: &RateMatrix) -> Result<DualityFunction> {
    if space.kind() != SpaceKind::Sep {
        return Err(Error::InvalidStateSpace("expected a SEP space".into()));
    }
    let side = space.gamma() + 1;
    if tables.len() != space.vertices().len() || tables.iter().any(|t| t.shape() != (side, side)) {
        return Err(Error::ShapeMismatch(format!("need {} tables of size {side}x{side}", space.vertices().len())));
    }
    let n = space.size();
    let d = DMatrix::from_fn(n, n, |i, j| {
        let (xi, eta) = (space.config(i), space.config(j));
        tables.iter().enumerate().map(|(x, t)| t[(xi[x], eta[x])]).product()
    });
    DualityFunction::new(l, l, d, None)
}
