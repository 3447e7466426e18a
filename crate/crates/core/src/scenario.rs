//! Named end-to-end reproductions of the worked examples, each a list of
//! pass/fail checks.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::duality::{self, chain_duality, complex_pair_duality, max_duality_rank, solve_duality_space, RANK_TRIALS};
use crate::error::{Error, Result};
use crate::intertwining::{intertwining_residual, inverse_intertwiner, ladder_lumping, push_duality, push_selfduality};
use crate::io::{self, DualityJson, MatrixJson, OperatorJson, SpectralJson};
use crate::linalg::{self, C64};
use crate::markov::{stationary_measure, RateMatrix};
use crate::models::random_walks::{absorbed_walk, rw_blocked_absorbed, rw_reflected_absorbed};
use crate::models::sep::{ladder_sep_generator, sep_generator, ssep_selfduality, uniform_rates, ConfigurationSpace, SsepParams};
use crate::models::single_site::{
    bracket_sum, classify_regime, factorized_duality, single_site_by_enumeration, single_site_duality, SingleSiteParams,
};
use crate::models::small::{cyclic3, cyclic3_eigenfunction, jordan4, jordan4_chain};
use crate::siegmund::{extend_with_cemetery, reconstruct_siegmund, siegmund_matrix};
use crate::spectral::{build_bj, check_r_similar, decompose, match_blocks, SpectralData};
use crate::Tolerances;

pub const SCENARIOS: [&str; 6] = ["rw54", "rw6-siegmund", "cyclic3", "jordan4", "sep-intertwine", "sep-families"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// `observed < tol`.
    pub fn below(name: impl Into<String>, observed: f64, tol: f64) -> Self {
        Self { name: name.into(), expected: format!("< {tol:e}"), observed, tolerance: tol, pass: observed < tol }
    }

    /// `observed > bound`.
    pub fn above(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self { name: name.into(), expected: format!("> {bound:e}"), observed, tolerance: bound, pass: observed > bound }
    }

    pub fn equal(name: impl Into<String>, observed: usize, expected: usize) -> Self {
        Self { name: name.into(), expected: expected.to_string(), observed: observed as f64, tolerance: 0.0, pass: observed == expected }
    }

    /// `observed == 0` exactly.
    pub fn exact(name: impl Into<String>, observed: f64) -> Self {
        Self { name: name.into(), expected: "0".into(), observed, tolerance: 0.0, pass: observed == 0.0 }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), expected: "true".into(), observed: f64::from(u8::from(ok)), tolerance: 0.0, pass: ok }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
}

impl ScenarioReport {
    fn new(name: &str) -> Self {
        Self { scenario: name.into(), checks: Vec::new(), artifacts: Vec::new() }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn emit(&mut self, out: Option<&Path>, file: &str, contents: String) -> Result<()> {
        if let Some(dir) = out {
            fs::create_dir_all(dir)?;
            let path = dir.join(file);
            fs::write(&path, contents)?;
            self.artifacts.push(path.display().to_string());
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut s = format!("scenario {}: {}\n", self.scenario, if self.pass() { "PASS" } else { "FAIL" });
        for c in &self.checks {
            s.push_str(&format!(
                "  [{}] {}: observed {:e}, expected {}\n",
                if c.pass { "ok" } else { "FAIL" },
                c.name,
                c.observed,
                c.expected
            ));
        }
        for a in &self.artifacts {
            s.push_str(&format!("  wrote {a}\n"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioOptions {
    pub n: Option<usize>,
    pub gamma: Option<usize>,
    pub seed: u64,
    pub tol: Tolerances,
    pub out: Option<PathBuf>,
}

/// Runs one scenario, or all of them for `"all"`.
pub fn run_scenario(name: &str, opts: &ScenarioOptions) -> Result<Vec<ScenarioReport>> {
    if name == "all" {
        return SCENARIOS.iter().map(|s| run_one(s, opts)).collect();
    }
    Ok(vec![run_one(name, opts)?])
}

fn run_one(name: &str, opts: &ScenarioOptions) -> Result<ScenarioReport> {
    match name {
        "rw54" => rw54(opts),
        "rw6-siegmund" => rw6(opts),
        "cyclic3" => cyclic(opts),
        "jordan4" => jordan(opts),
        "sep-intertwine" => sep_intertwine(opts),
        "sep-families" => sep_families(opts),
        other => Err(Error::UnknownScenario(other.into())),
    }
}

/// Largest distance between the canonical-order spectra of `s` and `expected`.
fn spectrum_gap(s: &SpectralData, expected: &[C64]) -> f64 {
    let got = s.eigenvalues();
    if got.len() != expected.len() {
        return f64::INFINITY;
    }
    got.iter().zip(expected).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

fn rw54(opts: &ScenarioOptions) -> Result<ScenarioReport> {
    let n = opts.n.unwrap_or(8);
    let mut r = ScenarioReport::new("rw54");
    let rw = rw_reflected_absorbed(n)?;
    let analytic: Vec<C64> = rw.eigenvalues.iter().map(|&v| C64::new(v, 0.0)).collect();
    for (label, m) in [("L", &rw.l), ("L̂", &rw.lhat)] {
        let s = decompose(m, opts.tol.cluster)?;
        r.push(Check::below(format!("analytic spectrum of {label}"), spectrum_gap(&s, &analytic), 1e-8));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let d_l = rw.selfduality_l(&a)?;
    let d_lhat = rw.selfduality_lhat(&a)?;
    let d_cross = rw.duality(&a)?;
    r.push(Check::below("self-duality of L", duality::residual(&rw.l, &rw.l, &d_l)?, 1e-10));
    r.push(Check::below("self-duality of L̂", duality::residual(&rw.lhat, &rw.lhat, &d_lhat)?, 1e-10));
    r.push(Check::below("duality L̂ vs L", duality::residual(&rw.lhat, &rw.l, &d_cross)?, 1e-10));
    for (label, lhat, l) in [("L,L", &rw.l, &rw.l), ("L̂,L̂", &rw.lhat, &rw.lhat), ("L̂,L", &rw.lhat, &rw.l)] {
        let space = solve_duality_space(lhat, l, opts.tol.rank);
        r.push(Check::equal(format!("duality space dimension ({label})"), space.dimension(), n));
        r.push(Check::equal(format!("max duality rank ({label})"), max_duality_rank(&space, opts.seed, RANK_TRIALS), n));
    }
    let cross = duality::DualityFunction::new(&rw.lhat, &rw.l, d_cross, opts.tol.rank)?;
    r.emit(opts.out.as_deref(), "rw54_duality.json", io::to_json(&DualityJson::from_duality(&cross))?)?;
    r.emit(opts.out.as_deref(), "rw54_spectrum.json", io::to_json(&SpectralJson::from_spectral(&rw.l_spectrum))?)?;
    Ok(r)
}

fn rw6(opts: &ScenarioOptions) -> Result<ScenarioReport> {
    let n = opts.n.unwrap_or(8);
    let mut r = ScenarioReport::new("rw6-siegmund");
    let b = rw_blocked_absorbed(n)?;
    let pair = &b.pair;
    r.push(Check::exact("Siegmund dual equals the absorbed walk", linalg::max_abs(&(pair.l.entries() - absorbed_walk(n)))));
    r.push(Check::holds("blocked walk is monotone", pair.monotone));
    r.push(Check::below("D_s residual", pair.residual, 1e-12));
    let lhat_t = pair.lhat.entries().transpose();
    let transport = b
        .uhats
        .iter()
        .zip(&b.us)
        .zip(&b.eigenvalues)
        .map(|((uh, u), lam)| {
            let a = linalg::max_abs_vec(&(&lhat_t * uh - uh * *lam));
            let c = linalg::max_abs_vec(&(pair.l.entries() * u - u * *lam));
            a.max(c)
        })
        .fold(0.0, f64::max);
    r.push(Check::below("eigenfunctions of L̂ᵀ transport to L", transport, 1e-10));
    let ds = reconstruct_siegmund(&b.uhats, &b.us, 1e-10)?;
    r.push(Check::below("Σ û_i(x) u_i(y) = 1{x ≥ y}", linalg::max_abs(&(ds - siegmund_matrix(n))), 1e-8));
    let ext = extend_with_cemetery(&pair.l)?;
    r.push(Check::below("cemetery reached at rate 1 from n", (ext.entries()[(n - 1, n)] - 1.0).abs(), 1e-15));
    let us_ext: Vec<DVector<f64>> = b.us.iter().map(|u| u.clone().insert_row(n, 0.0)).collect();
    let ext_eigen =
        us_ext.iter().zip(&b.eigenvalues).map(|(u, lam)| linalg::max_abs_vec(&(ext.entries() * u - u * *lam))).fold(0.0, f64::max);
    r.push(Check::below("extended eigenfunctions", ext_eigen, 1e-10));
    let mut d_ext = DMatrix::zeros(n, n + 1);
    for (uh, u) in b.uhats.iter().zip(&us_ext) {
        d_ext += uh * u.transpose();
    }
    let target = DMatrix::from_fn(n, n + 1, |x, y| if x >= y { 1.0 } else { 0.0 });
    r.push(Check::below("D_s^ext = 1{x ≥ y}", linalg::max_abs(&(&d_ext - target)), 1e-8));
    r.push(Check::below("D_s^ext duality residual", duality::residual(&pair.lhat, &ext, &d_ext)?, 1e-10));
    r.emit(opts.out.as_deref(), "rw6_siegmund_dual.json", io::to_json(&MatrixJson::from_matrix(&pair.l))?)?;
    Ok(r)
}

fn cyclic(opts: &ScenarioOptions) -> Result<ScenarioReport> {
    let mut r = ScenarioReport::new("cyclic3");
    let l = cyclic3();
    let s = decompose(&l, opts.tol.cluster)?;
    let h = 3f64.sqrt() / 2.0;
    let expected = [C64::new(0.0, 0.0), C64::new(-1.5, h), C64::new(-1.5, -h)];
    r.push(Check::below("eigenvalues {0, −3/2 ± i√3/2}", spectrum_gap(&s, &expected), 1e-10));
    r.push(Check::below("decomposition residual", s.residual(), opts.tol.residual));
    let mu = stationary_measure(&l, opts.tol.residual)?;
    r.push(Check::below("uniform stationary measure", linalg::max_abs_vec(&mu.weights().add_scalar(-1.0 / 3.0)), 1e-12));
    let u = cyclic3_eigenfunction();
    let d = complex_pair_duality(&l, &l, &u, &u, 0.5, opts.tol.residual)?;
    r.push(Check::below("complex-pair duality residual", d.residual(), 1e-12));
    let w = check_r_similar(&s, &s, 3, opts.tol.cluster).ok_or_else(|| Error::PreconditionFailed("not self-similar".into()))?;
    let coeffs: Vec<f64> = w.matched.iter().map(|m| if s.structure().blocks()[m.dual].eigenvalue.im == 0.0 { 0.0 } else { 1.0 }).collect();
    let built = duality::build_from_spectra(&s, &s, &w, &coeffs, opts.tol.residual)?;
    r.push(Check::below("spectral construction residual", built.residual(), 1e-12));
    r.push(Check::equal("spectral construction rank", built.rank(), 2));
    let space = solve_duality_space(&l, &l, opts.tol.rank);
    r.push(Check::equal("self-duality space dimension", space.dimension(), 3));
    r.emit(opts.out.as_deref(), "cyclic3_spectrum.json", io::to_json(&SpectralJson::from_spectral(&s))?)?;
    Ok(r)
}

fn jordan(opts: &ScenarioOptions) -> Result<ScenarioReport> {
    let mut r = ScenarioReport::new("jordan4");
    let l = jordan4();
    let s = decompose(&l, opts.tol.cluster)?;
    let block = s.structure().blocks().iter().any(|b| b.size == 2 && (b.eigenvalue - C64::new(-1.0, 0.0)).norm() < 1e-7);
    r.push(Check::holds("size-2 Jordan block at −1", block));
    r.push(Check::below("decomposition residual", s.residual(), opts.tol.residual));
    let chain = jordan4_chain();
    let d = chain_duality(&l, &l, &chain, &chain, opts.tol.residual)?;
    r.push(Check::below("chain duality residual", d.residual(), 1e-10));
    let unreversed = &chain[0] * chain[0].transpose() + &chain[1] * chain[1].transpose();
    r.push(Check::above("unreversed pairing residual", duality::residual(&l, &l, &unreversed)?, 1e-3));
    let space = solve_duality_space(&l, &l, opts.tol.rank);
    let matched: usize = match_blocks(s.structure(), s.structure(), opts.tol.cluster).iter().map(|m| m.overlap).sum();
    r.push(Check::equal("self-duality space dimension", space.dimension(), matched));
    r.push(Check::equal("max duality rank", max_duality_rank(&space, opts.seed, RANK_TRIALS), 4));
    let bj = build_bj(s.structure());
    r.push(Check::holds("B_J is an involution", bj.clone() * &bj == DMatrix::identity(4, 4)));
    r.emit(opts.out.as_deref(), "jordan4_spectrum.json", io::to_json(&SpectralJson::from_spectral(&s))?)?;
    Ok(r)
}

fn two_vertices() -> Vec<String> {
    vec!["1".into(), "2".into()]
}

fn sep_intertwine(opts: &ScenarioOptions) -> Result<ScenarioReport> {
    let gamma = opts.gamma.unwrap_or(2);
    let mut r = ScenarioReport::new("sep-intertwine");
    let sep = ConfigurationSpace::sep(two_vertices(), gamma)?;
    let ladder = ConfigurationSpace::ladder(two_vertices(), gamma)?;
    let p = uniform_rates(2);
    let l = sep_generator(&sep, &p)?;
    let lt = ladder_sep_generator(&ladder, &p)?;
    let lump = ladder_lumping(&sep, &ladder)?;
    r.push(Check::below("lumping intertwining residual", intertwining_residual(&lt, &l, &lump)?, 1e-12));
    let inv = inverse_intertwiner(&sep, &ladder)?;
    r.push(Check::holds("inverse intertwiner is stochastic", inv.is_stochastic()));
    r.push(Check::below("inverse intertwining residual", intertwining_residual(&l, &lt, &inv)?, 1e-12));
    let params = SsepParams { alpha: 1.0, beta: 1.0, eps: 0.0, delta: 1.0 };
    let dt = ssep_selfduality(&ladder, &params, &lt)?;
    r.push(Check::below("ladder self-duality residual", dt.residual(), 1e-12));
    let half = push_duality(&dt, &lt, &lt, &inv, &l, opts.tol.residual)?;
    r.push(Check::below("duality pushed on one side", half.residual(), 1e-12));
    let both = push_selfduality(&dt, &lt, &inv, &l, opts.tol.residual)?;
    r.push(Check::below("self-duality pushed on both sides", both.residual(), 1e-12));
    let table = single_site_duality(&SingleSiteParams { alpha: 1.0, beta: 1.0, eps: 0.0, delta: 1.0, gamma })?;
    let fact = factorized_duality(&[table.clone(), table], &sep, &l)?;
    r.push(Check::below("factorized = Λ̃ D̃ Λ̃ᵀ", linalg::max_abs(&(fact.matrix() - both.matrix())), 1e-12));
    r.emit(opts.out.as_deref(), "sep_inverse_intertwiner.json", io::to_json(&OperatorJson::from_operator(&inv))?)?;
    Ok(r)
}

/// One parameter set per regime, with bases near 1 so that products over
/// two vertices stay `O(1)`.
pub fn family_representatives(gamma: usize) -> Vec<SingleSiteParams> {
    [(1.0, 0.2, 1.0, 0.0), (0.0, 1.0, 0.0, 1.0), (0.0, 1.1, 1.0, 1.0), (1.1, 0.0, 1.0, 1.0), (1.1, -1.1, 1.0, 1.0), (1.0, 0.2, 1.0, 2.0)]
        .into_iter()
        .map(|(alpha, beta, eps, delta)| SingleSiteParams { alpha, beta, eps, delta, gamma })
        .collect()
}

fn sep_families(opts: &ScenarioOptions) -> Result<ScenarioReport> {
    let gamma = opts.gamma.unwrap_or(3);
    let mut r = ScenarioReport::new("sep-families");
    let sep = ConfigurationSpace::sep(two_vertices(), gamma)?;
    let l = sep_generator(&sep, &uniform_rates(2))?;
    for p in family_representatives(gamma) {
        let name = classify_regime(&p).name();
        let table = single_site_duality(&p)?;
        let oracle = single_site_by_enumeration(&p)?;
        let gap = table.iter().zip(oracle.iter()).map(|(a, b)| (a - b).abs() / b.abs().max(1.0)).fold(0.0, f64::max);
        r.push(Check::below(format!("{name} table matches enumeration"), gap, 1e-12));
        let d = factorized_duality(&[table.clone(), table.clone()], &sep, &l)?;
        r.push(Check::below(format!("{name} factorized self-duality residual"), d.residual(), 1e-10));
        r.emit(opts.out.as_deref(), &format!("sep_family_{name}.csv"), io::table_csv(&table))?;
    }
    let mut cv: f64 = 0.0;
    for g in 1..=5 {
        let p = SingleSiteParams { alpha: 1.3, beta: 0.4, eps: 0.0, delta: 0.0, gamma: g };
        for k in 0..=g {
            for n in 0..=g {
                cv = cv.max((bracket_sum(&p, k, n)? - 1.0).abs());
            }
        }
    }
    r.push(Check::below("Chu–Vandermonde reduction for δ = 0", cv, 1e-12));
    Ok(r)
}

/// Writes a generator in the shared matrix schema.
pub fn write_matrix(path: &Path, m: &RateMatrix) -> Result<()> {
    io::write_json(path, &MatrixJson::from_matrix(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_scenario_passes() {
        for report in run_scenario("all", &ScenarioOptions::default()).unwrap() {
            assert!(report.pass(), "{}", report.render());
        }
    }

    #[test]
    fn unknown_name() {
        assert_eq!(run_scenario("nope", &ScenarioOptions::default()), Err(Error::UnknownScenario("nope".into())));
    }
}
