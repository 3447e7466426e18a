//! SEP(γ) on `{0,…,γ}^V` and the γ-ladder exclusion process on
//! `{0,1}^{V×{1,…,γ}}`.

use nalgebra::DMatrix;

use crate::duality::DualityFunction;
use crate::error::{Error, Result};
use crate::markov::{RateMatrix, StateSpace};
use crate::DEFAULT_ROW_TOL;

/// Default enumeration cap, overridable through `DUALITY_MAX_STATES`.
pub const DEFAULT_MAX_STATES: usize = 20_000;

pub fn max_states() -> usize {
    std::env::var("DUALITY_MAX_STATES").ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_MAX_STATES)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Sep,
    Ladder,
}

/// Lexicographically enumerated configurations. SEP configurations hold one
/// occupation number per vertex; ladder configurations hold `γ` bits per
/// vertex, vertex-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationSpace {
    kind: SpaceKind,
    vertices: Vec<String>,
    gamma: usize,
    radix: usize,
    width: usize,
    configs: Vec<Vec<usize>>,
}

impl ConfigurationSpace {
    pub fn sep(vertices: Vec<String>, gamma: usize) -> Result<Self> {
        Self::build(SpaceKind::Sep, vertices, gamma, max_states())
    }

    pub fn ladder(vertices: Vec<String>, gamma: usize) -> Result<Self> {
        Self::build(SpaceKind::Ladder, vertices, gamma, max_states())
    }

    pub fn with_cap(kind: SpaceKind, vertices: Vec<String>, gamma: usize, cap: usize) -> Result<Self> {
        Self::build(kind, vertices, gamma, cap)
    }

    fn build(kind: SpaceKind, vertices: Vec<String>, gamma: usize, cap: usize) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidStateSpace("vertex set is empty".into()));
        }
        let mut sorted = vertices.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != vertices.len() {
            return Err(Error::InvalidStateSpace("vertex labels must be distinct".into()));
        }
        let (radix, width) = match kind {
            SpaceKind::Sep => (gamma + 1, vertices.len()),
            SpaceKind::Ladder => (2, vertices.len() * gamma),
        };
        let size = (0..width).try_fold(1u128, |acc, _| acc.checked_mul(radix as u128)).unwrap_or(u128::MAX);
        if size > cap as u128 {
            return Err(Error::SpaceTooLarge { size, cap });
        }
        let size = size as usize;
        let configs = (0..size)
            .map(|mut i| {
                let mut c = vec![0; width];
                for slot in c.iter_mut().rev() {
                    *slot = i % radix;
                    i /= radix;
                }
                c
            })
            .collect();
        Ok(Self { kind, vertices, gamma, radix, width, configs })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn size(&self) -> usize {
        self.configs.len()
    }

    pub fn config(&self, i: usize) -> &[usize] {
        &self.configs[i]
    }

    pub fn configs(&self) -> &[Vec<usize>] {
        &self.configs
    }

    pub fn index_of(&self, c: &[usize]) -> Option<usize> {
        if c.len() != self.width {
            return None;
        }
        c.iter().try_fold(0usize, |acc, &v| (v < self.radix).then(|| acc * self.radix + v))
    }

    /// Occupation count per vertex; the identity on SEP configurations.
    pub fn project(&self, c: &[usize]) -> Vec<usize> {
        match self.kind {
            SpaceKind::Sep => c.to_vec(),
            SpaceKind::Ladder => (0..self.vertices.len()).map(|x| c[x * self.gamma..(x + 1) * self.gamma].iter().sum()).collect(),
        }
    }

    pub fn label(&self, i: usize) -> String {
        let c = &self.configs[i];
        match self.kind {
            SpaceKind::Sep => c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
            SpaceKind::Ladder => (0..self.vertices.len())
                .map(|x| c[x * self.gamma..(x + 1) * self.gamma].iter().map(|v| v.to_string()).collect::<String>())
                .collect::<Vec<_>>()
                .join("|"),
        }
    }

    pub fn state_space(&self) -> Result<StateSpace> {
        StateSpace::with_labels((0..self.size()).map(|i| self.label(i)).collect())
    }
}

/// Checks `p` is a nonnegative `|V|×|V|` rate function vanishing on the diagonal.
pub fn validate_rates(p: &DMatrix<f64>, vertices: usize) -> Result<()> {
    if p.shape() != (vertices, vertices) {
        return Err(Error::ShapeMismatch(format!("rates are {}x{}, expected {vertices}x{vertices}", p.nrows(), p.ncols())));
    }
    for x in 0..vertices {
        for y in 0..vertices {
            let v = p[(x, y)];
            if !v.is_finite() || v < 0.0 || (x == y && v != 0.0) {
                return Err(Error::PreconditionFailed(format!("invalid rate p({x},{y}) = {v}")));
            }
        }
    }
    Ok(())
}

/// Complete-graph rates `p(x,y) = 1` for `x ≠ y`.
pub fn uniform_rates(vertices: usize) -> DMatrix<f64> {
    DMatrix::from_fn(vertices, vertices, |x, y| if x == y { 0.0 } else { 1.0 })
}

fn assemble(space: &ConfigurationSpace, moves: impl Fn(&[usize], &mut dyn FnMut(Vec<usize>, f64))) -> Result<RateMatrix> {
    let n = space.size();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut out = 0.0;
        moves(space.config(i), &mut |target, rate| {
            let j = space.index_of(&target).expect("moves stay inside the space");
            m[(i, j)] += rate;
            out += rate;
        });
        m[(i, i)] -= out;
    }
    RateMatrix::generator(m, DEFAULT_ROW_TOL)?.with_space(space.state_space()?)
}

/// SEP(γ): a particle moves `x → y` at rate `η(x)(γ−η(y))(p(x,y)+p(y,x))`.
pub fn sep_generator(space: &ConfigurationSpace, p: &DMatrix<f64>) -> Result<RateMatrix> {
    if space.kind() != SpaceKind::Sep {
        return Err(Error::InvalidStateSpace("expected a SEP space".into()));
    }
    let m = space.vertices().len();
    validate_rates(p, m)?;
    let gamma = space.gamma();
    assemble(space, |eta, emit| {
        for x in 0..m {
            for y in 0..m {
                let rate = (eta[x] * (gamma - eta[y])) as f64 * (p[(x, y)] + p[(y, x)]);
                if x != y && rate > 0.0 {
                    let mut t = eta.to_vec();
                    t[x] -= 1;
                    t[y] += 1;
                    emit(t, rate);
                }
            }
        }
    })
}

/// γ-ladder exclusion: a particle moves `(x,a) → (y,b)` at rate
/// `η̃(x,a)(1−η̃(y,b))(p(x,y)+p(y,x))`.
pub fn ladder_sep_generator(space: &ConfigurationSpace, p: &DMatrix<f64>) -> Result<RateMatrix> {
    if space.kind() != SpaceKind::Ladder {
        return Err(Error::InvalidStateSpace("expected a ladder space".into()));
    }
    let m = space.vertices().len();
    validate_rates(p, m)?;
    let gamma = space.gamma();
    assemble(space, |eta, emit| {
        for s in 0..m * gamma {
            for t in 0..m * gamma {
                let (x, y) = (s / gamma, t / gamma);
                let rate = p[(x, y)] + p[(y, x)];
                if x != y && eta[s] == 1 && eta[t] == 0 && rate > 0.0 {
                    let mut c = eta.to_vec();
                    c[s] = 0;
                    c[t] = 1;
                    emit(c, rate);
                }
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsepParams {
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
    pub delta: f64,
}

/// `b^e` with `0⁰ = 1`; zero to a negative power and negative bases with
/// non-integer exponents are domain errors.
pub fn checked_pow(base: f64, exp: f64) -> Result<f64> {
    if base == 0.0 {
        return match exp {
            0.0 => Ok(1.0),
            e if e > 0.0 => Ok(0.0),
            e => Err(Error::DomainError(format!("0 raised to {e}"))),
        };
    }
    if base < 0.0 && exp.fract() != 0.0 {
        return Err(Error::DomainError(format!("{base} raised to non-integer {exp}")));
    }
    Ok(base.powf(exp))
}

/// `D̃(ξ̃, η̃) = ∏_{(x,a)} (α + β η̃(x,a))^{ε + δ ξ̃(x,a)}`, certified against
/// the ladder generator `lt`.
pub fn ssep_selfduality(space: &ConfigurationSpace, params: &SsepParams, lt: &RateMatrix) -> Result<DualityFunction> {
    if space.kind() != SpaceKind::Ladder {
        return Err(Error::InvalidStateSpace("expected a ladder space".into()));
    }
    let SsepParams { alpha, beta, eps, delta } = *params;
    // every entry is a product of these four factors
    let factor = [[alpha, alpha + beta], [alpha, alpha + beta]];
    let mut table = [[0.0; 2]; 2];
    let mut errors = [[None, None], [None, None]];
    for xi in 0..2 {
        for eta in 0..2 {
            match checked_pow(factor[xi][eta], eps + delta * xi as f64) {
                Ok(v) => table[xi][eta] = v,
                Err(e) => errors[xi][eta] = Some(e),
            }
        }
    }
    let n = space.size();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (xi, eta) = (space.config(i), space.config(j));
            let mut v = 1.0;
            for (a, b) in xi.iter().zip(eta) {
                if let Some(e) = &errors[*a][*b] {
                    return Err(e.clone());
                }
                v *= table[*a][*b];
            }
            d[(i, j)] = v;
        }
    }
    DualityFunction::new(lt, lt, d, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verts(m: usize) -> Vec<String> {
        (1..=m).map(|i| format!("v{i}")).collect()
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let s = ConfigurationSpace::sep(verts(2), 2).unwrap();
        assert_eq!(s.size(), 9);
        assert_eq!(s.config(0), &[0, 0]);
        assert_eq!(s.config(1), &[0, 1]);
        assert_eq!(s.config(3), &[1, 0]);
        for i in 0..s.size() {
            assert_eq!(s.index_of(s.config(i)), Some(i));
        }
        let l = ConfigurationSpace::ladder(verts(2), 2).unwrap();
        assert_eq!(l.size(), 16);
        assert_eq!(l.project(&[1, 1, 0, 1]), vec![2, 1]);
        assert_eq!(l.label(13), "11|01");
        assert!(matches!(
            ConfigurationSpace::with_cap(SpaceKind::Ladder, verts(3), 5, 1000),
            Err(Error::SpaceTooLarge { size: 32768, cap: 1000 })
        ));
        assert!(ConfigurationSpace::sep(vec!["a".into(), "a".into()], 1).is_err());
    }

    #[test]
    fn sep_two_sites_one_rung() {
        let s = ConfigurationSpace::sep(verts(2), 1).unwrap();
        let l = sep_generator(&s, &uniform_rates(2)).unwrap();
        // order: 00, 01, 10, 11; rate 2 since both p(x,y) and p(y,x) contribute
        let expect = DMatrix::from_row_slice(4, 4, &[0.0, 0.0, 0.0, 0.0, 0.0, -2.0, 2.0, 0.0, 0.0, 2.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(l.entries(), &expect);
        let lad = ConfigurationSpace::ladder(verts(2), 1).unwrap();
        assert_eq!(ladder_sep_generator(&lad, &uniform_rates(2)).unwrap().entries(), &expect);
    }

    #[test]
    fn gamma_zero_and_conservation() {
        let s = ConfigurationSpace::sep(verts(3), 0).unwrap();
        assert_eq!(s.size(), 1);
        assert_eq!(sep_generator(&s, &uniform_rates(3)).unwrap().entries(), &DMatrix::zeros(1, 1));
        let s = ConfigurationSpace::sep(verts(3), 2).unwrap();
        let p = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.5, 0.0, 0.0, 2.0, 0.25, 0.0, 0.0]);
        let l = sep_generator(&s, &p).unwrap();
        for i in 0..s.size() {
            for j in 0..s.size() {
                let (a, b): (usize, usize) = (s.config(i).iter().sum(), s.config(j).iter().sum());
                if a != b {
                    assert_eq!(l.entries()[(i, j)], 0.0);
                }
            }
            assert_eq!(l.entries().row(i).sum(), 0.0);
        }
        assert!(sep_generator(&s, &DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn ssep_duality_examples() {
        let lad = ConfigurationSpace::ladder(verts(2), 2).unwrap();
        let lt = ladder_sep_generator(&lad, &uniform_rates(2)).unwrap();
        let ind = ssep_selfduality(&lad, &SsepParams { alpha: 0.0, beta: 1.0, eps: 0.0, delta: 1.0 }, &lt).unwrap();
        for i in 0..lad.size() {
            for j in 0..lad.size() {
                let dominated = lad.config(i).iter().zip(lad.config(j)).all(|(a, b)| a <= b);
                assert_eq!(ind.matrix()[(i, j)], if dominated { 1.0 } else { 0.0 });
            }
        }
        assert!(ind.residual() < 1e-12);
        let ones = ssep_selfduality(&lad, &SsepParams { alpha: 3.0, beta: -7.0, eps: 0.0, delta: 0.0 }, &lt).unwrap();
        assert!(ones.matrix().iter().all(|v| *v == 1.0));
        let d = ssep_selfduality(&lad, &SsepParams { alpha: 1.0, beta: 1.0, eps: 0.0, delta: 1.0 }, &lt).unwrap();
        assert!(d.residual() < 1e-12);
        let bad = SsepParams { alpha: 0.0, beta: 1.0, eps: -1.0, delta: 1.0 };
        assert!(matches!(ssep_selfduality(&lad, &bad, &lt), Err(Error::DomainError(_))));
        let bad = SsepParams { alpha: -1.0, beta: 3.0, eps: 0.5, delta: 1.0 };
        assert!(matches!(ssep_selfduality(&lad, &bad, &lt), Err(Error::DomainError(_))));
    }

    #[test]
    fn checked_pow_conventions() {
        assert_eq!(checked_pow(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(checked_pow(0.0, 2.5).unwrap(), 0.0);
        assert_eq!(checked_pow(-2.0, 3.0).unwrap(), -8.0);
        assert!(checked_pow(0.0, -1.0).is_err());
        assert!(checked_pow(-2.0, 0.5).is_err());
    }
}
