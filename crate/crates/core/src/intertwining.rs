//! Intertwinings `L̃ Λ = Λ L` and the transport of dualities through them.

use nalgebra::DMatrix;

use crate::duality::DualityFunction;
use crate::error::{Error, Result};
use crate::linalg;
use crate::markov::{RateMatrix, StateSpace};
use crate::models::sep::{ConfigurationSpace, SpaceKind};
use crate::DEFAULT_ROW_TOL;

/// Linear map from functions on the `n`-space of `L` to functions on the
/// `ñ`-space of `L̃`, stored as an `ñ × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IntertwiningOperator {
    from_space: StateSpace,
    to_space: StateSpace,
    lambda: DMatrix<f64>,
    stochastic: bool,
}

impl IntertwiningOperator {
    pub fn new(lambda: DMatrix<f64>) -> Result<Self> {
        let from_space = StateSpace::new(lambda.ncols())?;
        let to_space = StateSpace::new(lambda.nrows())?;
        Ok(Self::with_spaces(lambda, from_space, to_space))
    }

    fn with_spaces(lambda: DMatrix<f64>, from_space: StateSpace, to_space: StateSpace) -> Self {
        let stochastic = lambda.row_iter().all(|r| r.iter().all(|v| *v >= -DEFAULT_ROW_TOL) && (r.sum() - 1.0).abs() <= DEFAULT_ROW_TOL);
        Self { from_space, to_space, lambda, stochastic }
    }

    pub fn labelled(self, from_space: StateSpace, to_space: StateSpace) -> Result<Self> {
        if from_space.size() != self.lambda.ncols() || to_space.size() != self.lambda.nrows() {
            return Err(Error::ShapeMismatch("state spaces do not match the operator".into()));
        }
        Ok(Self::with_spaces(self.lambda, from_space, to_space))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn is_stochastic(&self) -> bool {
        self.stochastic
    }

    pub fn from_space(&self) -> &StateSpace {
        &self.from_space
    }

    pub fn to_space(&self) -> &StateSpace {
        &self.to_space
    }
}

/// `‖L̃Λ − ΛL‖∞`.
pub fn intertwining_residual(ltilde: &RateMatrix, l: &RateMatrix, op: &IntertwiningOperator) -> Result<f64> {
    let lam = op.matrix();
    if lam.nrows() != ltilde.n() || lam.ncols() != l.n() {
        return Err(Error::ShapeMismatch(format!(
            "operator is {}x{}, generators are {} and {}",
            lam.nrows(),
            lam.ncols(),
            ltilde.n(),
            l.n()
        )));
    }
    Ok(linalg::max_abs(&(ltilde.entries() * lam - lam * l.entries())))
}

fn check_preconditions(d: &DualityFunction, ltilde: &RateMatrix, l: &RateMatrix, op: &IntertwiningOperator, tol: f64) -> Result<()> {
    let ir = intertwining_residual(ltilde, l, op)?;
    if ir >= tol {
        return Err(Error::PreconditionFailed(format!("intertwining residual {ir:e} ≥ {tol:e}")));
    }
    if d.residual() >= tol {
        return Err(Error::PreconditionFailed(format!("duality residual {:e} ≥ {tol:e}", d.residual())));
    }
    if d.n() != l.n() {
        return Err(Error::ShapeMismatch("duality primal side does not match L".into()));
    }
    Ok(())
}

/// `D Λᵀ`: a duality for `(L̂, L)` becomes one for `(L̂, L̃)`.
pub fn push_duality(
    d: &DualityFunction,
    lhat: &RateMatrix,
    l: &RateMatrix,
    op: &IntertwiningOperator,
    ltilde: &RateMatrix,
    tol: f64,
) -> Result<DualityFunction> {
    check_preconditions(d, ltilde, l, op, tol)?;
    if d.nhat() != lhat.n() {
        return Err(Error::ShapeMismatch("duality dual side does not match L̂".into()));
    }
    DualityFunction::new(lhat, ltilde, d.matrix() * op.matrix().transpose(), None)
}

/// `Λ D Λᵀ`: a self-duality of `L` becomes one of `L̃`.
pub fn push_selfduality(
    d: &DualityFunction,
    l: &RateMatrix,
    op: &IntertwiningOperator,
    ltilde: &RateMatrix,
    tol: f64,
) -> Result<DualityFunction> {
    check_preconditions(d, ltilde, l, op, tol)?;
    if d.nhat() != l.n() {
        return Err(Error::ShapeMismatch("not a self-duality of L".into()));
    }
    let lam = op.matrix();
    DualityFunction::new(ltilde, ltilde, lam * d.matrix() * lam.transpose(), None)
}

/// `Λ f = f ∘ π` for `π: {0..targets.len()} → {0..n}`.
pub fn lumping_operator(pi: &[usize], n: usize) -> Result<IntertwiningOperator> {
    if let Some(bad) = pi.iter().find(|&&t| t >= n) {
        return Err(Error::ShapeMismatch(format!("target {bad} outside a space of size {n}")));
    }
    let mut lam = DMatrix::zeros(pi.len(), n);
    for (row, &col) in pi.iter().enumerate() {
        lam[(row, col)] = 1.0;
    }
    IntertwiningOperator::new(lam)
}

/// The lumping from ladder configurations onto SEP configurations given by
/// the occupation count of each vertex.
pub fn ladder_lumping(sep: &ConfigurationSpace, ladder: &ConfigurationSpace) -> Result<IntertwiningOperator> {
    check_pair(sep, ladder)?;
    let pi = (0..ladder.size())
        .map(|i| {
            let eta = ladder.project(ladder.config(i));
            sep.index_of(&eta).ok_or_else(|| Error::InvalidStateSpace("projection left the SEP space".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    lumping_operator(&pi, sep.size())?.labelled(sep.state_space()?, ladder.state_space()?)
}

/// `Λ̃ f̃(η) = ∏_x C(γ, η(x))⁻¹ Σ_{η̃ ∼ η} f̃(η̃)`, a stochastic map from
/// ladder functions to SEP functions with `L Λ̃ = Λ̃ L̃`.
pub fn inverse_intertwiner(sep: &ConfigurationSpace, ladder: &ConfigurationSpace) -> Result<IntertwiningOperator> {
    check_pair(sep, ladder)?;
    let mut lam = DMatrix::zeros(sep.size(), ladder.size());
    let gamma = sep.gamma();
    for j in 0..ladder.size() {
        let eta = ladder.project(ladder.config(j));
        let i = sep.index_of(&eta).ok_or_else(|| Error::InvalidStateSpace("projection left the SEP space".into()))?;
        let weight: f64 = eta.iter().map(|&k| 1.0 / binomial(gamma, k)).product();
        lam[(i, j)] = weight;
    }
    IntertwiningOperator::new(lam)?.labelled(ladder.state_space()?, sep.state_space()?)
}

fn check_pair(sep: &ConfigurationSpace, ladder: &ConfigurationSpace) -> Result<()> {
    if sep.kind() != SpaceKind::Sep || ladder.kind() != SpaceKind::Ladder {
        return Err(Error::InvalidStateSpace("expected a SEP space and a ladder space".into()));
    }
    if sep.gamma() != ladder.gamma() || sep.vertices() != ladder.vertices() {
        return Err(Error::InvalidStateSpace("spaces disagree on vertices or γ".into()));
    }
    Ok(())
}

/// `C(n, k)` in floating point.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::sep::{ladder_sep_generator, sep_generator, ssep_selfduality, SsepParams};

    fn ones_p(m: usize) -> DMatrix<f64> {
        DMatrix::from_fn(m, m, |x, y| if x == y { 0.0 } else { 1.0 })
    }

    fn spaces(m: usize, gamma: usize) -> (ConfigurationSpace, ConfigurationSpace) {
        let v: Vec<String> = (1..=m).map(|i| i.to_string()).collect();
        (ConfigurationSpace::sep(v.clone(), gamma).unwrap(), ConfigurationSpace::ladder(v, gamma).unwrap())
    }

    #[test]
    fn identity_and_constant_lumpings() {
        let id = lumping_operator(&[0, 1, 2], 3).unwrap();
        assert_eq!(id.matrix(), &DMatrix::identity(3, 3));
        assert!(id.is_stochastic());
        let c = lumping_operator(&[0, 0, 0, 0], 1).unwrap();
        assert_eq!(c.matrix(), &DMatrix::from_element(4, 1, 1.0));
        assert!(lumping_operator(&[2], 2).is_err());
        let l = RateMatrix::from_rows(&[&[-1.0, 1.0, 0.0], &[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0]]).unwrap();
        assert_eq!(intertwining_residual(&l, &l, &id).unwrap(), 0.0);
    }

    #[test]
    fn inverse_intertwiner_small() {
        let (sep, ladder) = spaces(1, 1);
        assert_eq!(inverse_intertwiner(&sep, &ladder).unwrap().matrix(), &DMatrix::identity(2, 2));
        let (sep, ladder) = spaces(1, 2);
        let inv = inverse_intertwiner(&sep, &ladder).unwrap();
        let row = sep.index_of(&[1]).unwrap();
        for cfg in [[1usize, 0], [0, 1]] {
            assert_eq!(inv.matrix()[(row, ladder.index_of(&cfg).unwrap())], 0.5);
        }
        assert!(inv.is_stochastic());
    }

    #[test]
    fn intertwinings_hold() {
        for gamma in 1..=3 {
            let (sep, ladder) = spaces(2, gamma);
            let p = ones_p(2);
            let l = sep_generator(&sep, &p).unwrap();
            let lt = ladder_sep_generator(&ladder, &p).unwrap();
            let lump = ladder_lumping(&sep, &ladder).unwrap();
            assert!(intertwining_residual(&lt, &l, &lump).unwrap() < 1e-12);
            let inv = inverse_intertwiner(&sep, &ladder).unwrap();
            assert!(inv.is_stochastic());
            assert!(intertwining_residual(&l, &lt, &inv).unwrap() < 1e-12);
            // averaging a lifted function returns it
            let back = inv.matrix() * lump.matrix();
            assert!(linalg::max_abs(&(back - DMatrix::identity(sep.size(), sep.size()))) < 1e-14);
        }
    }

    fn occupied(cfg: &[usize], gamma: usize, x: usize, a: usize) -> usize {
        cfg[x * gamma + a]
    }

    #[test]
    fn counting_identity() {
        for gamma in 1..=3 {
            let (_, ladder) = spaces(2, gamma);
            for i in 0..ladder.size() {
                let c = ladder.config(i);
                let eta = ladder.project(c);
                for (x, y) in [(0, 1), (1, 0)] {
                    let mut s = 0;
                    for a in 0..gamma {
                        for b in 0..gamma {
                            s += occupied(c, gamma, x, a) * (1 - occupied(c, gamma, y, b));
                        }
                    }
                    assert_eq!(s, eta[x] * (gamma - eta[y]));
                }
            }
        }
    }

    #[test]
    fn transfer_identity() {
        for gamma in 1..=3 {
            let (sep, ladder) = spaces(2, gamma);
            for e in 0..sep.size() {
                let eta = sep.config(e).to_vec();
                for (x, y) in [(0usize, 1usize), (1, 0)] {
                    if eta[x] == 0 || eta[y] == gamma {
                        continue;
                    }
                    let mut moved = eta.clone();
                    moved[x] -= 1;
                    moved[y] += 1;
                    for star in (0..ladder.size()).filter(|&j| ladder.project(ladder.config(j)) == moved) {
                        let mut count = 0;
                        for j in (0..ladder.size()).filter(|&j| ladder.project(ladder.config(j)) == eta) {
                            let c = ladder.config(j);
                            for a in 0..gamma {
                                for b in 0..gamma {
                                    if occupied(c, gamma, x, a) == 1 && occupied(c, gamma, y, b) == 0 {
                                        let mut nc = c.to_vec();
                                        nc[x * gamma + a] = 0;
                                        nc[y * gamma + b] = 1;
                                        count += usize::from(nc == ladder.config(star));
                                    }
                                }
                            }
                        }
                        assert_eq!(count, (eta[y] + 1) * (gamma - eta[x] + 1));
                    }
                }
            }
        }
    }

    #[test]
    fn push_through_lumping() {
        let (sep, ladder) = spaces(2, 2);
        let p = ones_p(2);
        let l = sep_generator(&sep, &p).unwrap();
        let lt = ladder_sep_generator(&ladder, &p).unwrap();
        let params = SsepParams { alpha: 1.0, beta: 1.0, eps: 0.0, delta: 1.0 };
        let dt = ssep_selfduality(&ladder, &params, &lt).unwrap();
        let inv = inverse_intertwiner(&sep, &ladder).unwrap();
        let pushed = push_duality(&dt, &lt, &lt, &inv, &l, 1e-9).unwrap();
        assert!(pushed.residual() < 1e-12);
        let both = push_selfduality(&dt, &lt, &inv, &l, 1e-9).unwrap();
        assert!(both.residual() < 1e-12);
        let id = lumping_operator(&(0..lt.n()).collect::<Vec<_>>(), lt.n()).unwrap();
        let same = push_duality(&dt, &lt, &lt, &id, &lt, 1e-9).unwrap();
        assert_eq!(same.matrix(), dt.matrix());
        let lump = ladder_lumping(&sep, &ladder).unwrap();
        assert!(matches!(push_duality(&dt, &lt, &lt, &lump, &l, 1e-9), Err(Error::ShapeMismatch(_))));
        let noise = DualityFunction::new(&lt, &lt, DMatrix::from_fn(lt.n(), lt.n(), |i, _| i as f64), None).unwrap();
        assert!(matches!(push_duality(&noise, &lt, &lt, &inv, &l, 1e-9), Err(Error::PreconditionFailed(_))));
    }
}
