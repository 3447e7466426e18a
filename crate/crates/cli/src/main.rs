use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use duality_core::duality::{max_duality_rank, solve_duality_space, RANK_TRIALS};
use duality_core::io::{self, DualityJson, DualitySpaceJson, MatrixJson, SpectralJson};
use duality_core::linalg::C64;
use duality_core::markov::{check_detailed_balance, classify_matrix, is_irreducible, stationary_measure, MatrixClass};
use duality_core::models::random_walks::{rw_blocked_absorbed, rw_reflected_absorbed};
use duality_core::models::sep::{ladder_sep_generator, sep_generator, uniform_rates, ConfigurationSpace};
use duality_core::models::single_site::{classify_regime, factorized_duality, single_site_duality, SingleSiteParams};
use duality_core::scenario::{run_scenario, ScenarioOptions};
use duality_core::siegmund::siegmund_dual;
use duality_core::spectral::decompose;
use duality_core::{Error, Tolerances};
use nalgebra::DMatrix;
use serde::Deserialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "duality", version, about = "Stochastic duality for finite-state Markov generators")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Residual tolerance.
    #[arg(long, global = true, default_value_t = duality_core::DEFAULT_SPECTRAL_TOL)]
    tol: f64,
    /// Seed for random coefficients and rank probing.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Directory for emitted JSON/CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a generator and summarize its stationary measure and spectrum.
    Inspect { matrix: PathBuf },
    /// Solve L̂D = DLᵀ for all D.
    DualityBasis { lhat: PathBuf, l: PathBuf },
    /// Build the Siegmund dual of a generator on {1..n}.
    Siegmund { matrix: PathBuf },
    /// Emit the generators of a built-in model.
    Model {
        #[command(subcommand)]
        model: Model,
    },
    /// Single-site duality tables of a built-in model.
    Duality {
        #[command(subcommand)]
        model: DualityModel,
    },
    /// Run a named reproduction (or `all`).
    Scenario {
        name: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        gamma: Option<usize>,
    },
}

#[derive(Subcommand)]
enum Model {
    /// Reflected/absorbed random walks.
    Rw54 {
        #[arg(long, default_value_t = 8)]
        n: usize,
    },
    /// Blocked walk and its absorbed Siegmund dual.
    Rw6 {
        #[arg(long, default_value_t = 8)]
        n: usize,
    },
    /// SEP(γ) and its γ-ladder lift.
    Sep {
        /// JSON file `{"vertices": [...], "p": [[...]]}`; `p` defaults to 1 off the diagonal.
        #[arg(long = "V")]
        vertices: PathBuf,
        #[arg(long, default_value_t = 2)]
        gamma: usize,
    },
}

#[derive(Subcommand)]
enum DualityModel {
    /// Table d(k,n) and the factorized self-duality on two vertices.
    Sep {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true)]
        eps: f64,
        #[arg(long, allow_hyphen_values = true)]
        delta: f64,
        #[arg(long, default_value_t = 2)]
        gamma: usize,
    },
}

#[derive(Deserialize)]
struct VertexFile {
    vertices: Vec<String>,
    p: Option<Vec<Vec<f64>>>,
}

/// Command outcome: `Ok(true)` when every check passed.
type Outcome = duality_core::Result<bool>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse(_) | Error::Io(_) | Error::UnknownScenario(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let c = &cli.common;
    match &cli.command {
        Command::Inspect { matrix } => inspect(c, matrix),
        Command::DualityBasis { lhat, l } => duality_basis(c, lhat, l),
        Command::Siegmund { matrix } => siegmund(c, matrix),
        Command::Model { model } => model_cmd(c, model),
        Command::Duality { model: DualityModel::Sep { alpha, beta, eps, delta, gamma } } => {
            let p = SingleSiteParams { alpha: *alpha, beta: *beta, eps: *eps, delta: *delta, gamma: *gamma };
            duality_sep(c, &p)
        }
        Command::Scenario { name, n, gamma } => scenario(c, name, *n, *gamma),
    }
}

fn tolerances(c: &Common) -> Tolerances {
    Tolerances { residual: c.tol, ..Tolerances::default() }
}

fn class_name(c: MatrixClass) -> &'static str {
    match c {
        MatrixClass::Generator => "Generator",
        MatrixClass::SubGenerator => "SubGenerator",
        MatrixClass::Invalid => "Invalid",
    }
}

/// Eigenvalues with conjugate pairs folded into `a±bi`.
fn format_spectrum(values: &[C64]) -> String {
    let clean = |v: f64| if v.abs() < 5e-13 { 0.0 } else { v };
    values
        .iter()
        .filter(|z| z.im >= 0.0)
        .map(|z| {
            let (re, im) = (clean(z.re), clean(z.im));
            if im == 0.0 {
                format!("{}", round(re))
            } else {
                format!("{}±{}i", round(re), round(im))
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn round(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

fn emit(c: &Common, file: &str, contents: &str) -> duality_core::Result<()> {
    if let Some(dir) = &c.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(file), contents)?;
    }
    Ok(())
}

fn inspect(c: &Common, path: &Path) -> Outcome {
    let m = io::read_matrix(path)?;
    let class = classify_matrix(m.entries(), duality_core::DEFAULT_ROW_TOL);
    let irreducible = is_irreducible(m.entries(), duality_core::DEFAULT_ROW_TOL);
    let stationary = if class == MatrixClass::Generator && irreducible { Some(stationary_measure(&m, c.tol)?) } else { None };
    let reversible = stationary.as_ref().map(|mu| check_detailed_balance(&m, mu, c.tol));
    let spectrum = decompose(&m, duality_core::DEFAULT_CLUSTER_TOL)?;
    let values = spectrum.eigenvalues();
    if c.json {
        let report = json!({
            "class": class_name(class),
            "irreducible": irreducible,
            "stationary": stationary.as_ref().map(|mu| mu.weights().iter().copied().collect::<Vec<_>>()),
            "reversible": reversible,
            "spectrum": SpectralJson::from_spectral(&spectrum),
        });
        println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    } else {
        let mut parts = vec![class_name(class).to_string(), if irreducible { "irreducible" } else { "reducible" }.to_string()];
        if let Some(r) = reversible {
            parts.push(if r { "reversible" } else { "non-reversible" }.to_string());
        }
        parts.push(format!("eigenvalues {}", format_spectrum(&values)));
        println!("{}", parts.join(", "));
        if let Some(mu) = &stationary {
            let w: Vec<String> = mu.weights().iter().map(|v| format!("{}", round(*v))).collect();
            println!("stationary measure: ({})", w.join(", "));
        }
        let sizes: Vec<String> = spectrum
            .structure()
            .blocks()
            .iter()
            .filter(|b| b.size > 1)
            .map(|b| format!("{} at {}", b.size, format_spectrum(&[b.eigenvalue])))
            .collect();
        if !sizes.is_empty() {
            println!("Jordan blocks: {}", sizes.join("; "));
        }
    }
    emit(c, "spectrum.json", &io::to_json(&SpectralJson::from_spectral(&spectrum))?)?;
    Ok(true)
}

fn duality_basis(c: &Common, lhat_path: &Path, l_path: &Path) -> Outcome {
    let lhat = io::read_matrix(lhat_path)?;
    let l = io::read_matrix(l_path)?;
    let space = solve_duality_space(&lhat, &l, None);
    let rank = max_duality_rank(&space, c.seed, RANK_TRIALS);
    let full = rank == lhat.n().min(l.n());
    let doc = DualitySpaceJson::from_space(&space, rank);
    if c.json {
        println!("{}", io::to_json(&doc)?);
    } else {
        println!("dimension {}, max rank {rank}", space.dimension());
        println!("full-rank duality {}", if full { "exists" } else { "does not exist" });
    }
    emit(c, "duality_space.json", &io::to_json(&doc)?)?;
    Ok(true)
}

fn siegmund(c: &Common, path: &Path) -> Outcome {
    let lhat = io::read_matrix(path)?;
    let pair = siegmund_dual(&lhat)?;
    let ok = pair.residual < c.tol;
    if c.json {
        let report = json!({
            "L": MatrixJson::from_matrix(&pair.l),
            "class": class_name(pair.class),
            "monotone": pair.monotone,
            "residual": pair.residual,
        });
        println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    } else {
        println!("dual class {}, monotone {}, D_s residual {:e}", class_name(pair.class), pair.monotone, pair.residual);
        for row in pair.l.entries().row_iter() {
            println!("  {}", row.iter().map(|v| format!("{v:>8}")).collect::<Vec<_>>().join(" "));
        }
    }
    emit(c, "siegmund_dual.json", &io::to_json(&MatrixJson::from_matrix(&pair.l))?)?;
    Ok(ok)
}

fn model_cmd(c: &Common, model: &Model) -> Outcome {
    let doc = match model {
        Model::Rw54 { n } => {
            let rw = rw_reflected_absorbed(*n)?;
            json!({
                "L": MatrixJson::from_matrix(&rw.l),
                "Lhat": MatrixJson::from_matrix(&rw.lhat),
                "spectrum_L": SpectralJson::from_spectral(&rw.l_spectrum),
                "spectrum_Lhat": SpectralJson::from_spectral(&rw.lhat_spectrum),
            })
        }
        Model::Rw6 { n } => {
            let b = rw_blocked_absorbed(*n)?;
            json!({
                "Lhat": MatrixJson::from_matrix(&b.pair.lhat),
                "L": MatrixJson::from_matrix(&b.pair.l),
                "monotone": b.pair.monotone,
                "spectrum_Lhat": SpectralJson::from_spectral(&b.lhat_spectrum),
                "spectrum_L": SpectralJson::from_spectral(&b.l_spectrum),
            })
        }
        Model::Sep { vertices, gamma } => {
            let vf: VertexFile = serde_json::from_str(&fs::read_to_string(vertices)?).map_err(Error::from)?;
            let m = vf.vertices.len();
            let p = match &vf.p {
                Some(rows) => {
                    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                        return Err(Error::Parse(format!("p must be {m}x{m}")));
                    }
                    DMatrix::from_fn(m, m, |i, j| rows[i][j])
                }
                None => uniform_rates(m),
            };
            let sep = ConfigurationSpace::sep(vf.vertices.clone(), *gamma)?;
            let ladder = ConfigurationSpace::ladder(vf.vertices, *gamma)?;
            json!({
                "sep": MatrixJson::from_matrix(&sep_generator(&sep, &p)?),
                "ladder": MatrixJson::from_matrix(&ladder_sep_generator(&ladder, &p)?),
            })
        }
    };
    let text = serde_json::to_string_pretty(&doc).map_err(Error::from)?;
    match &c.out {
        Some(_) => emit(c, "model.json", &text)?,
        None => println!("{text}"),
    }
    Ok(true)
}

fn duality_sep(c: &Common, p: &SingleSiteParams) -> Outcome {
    let table = single_site_duality(p)?;
    let vertices = vec!["1".to_string(), "2".to_string()];
    let sep = ConfigurationSpace::sep(vertices, p.gamma)?;
    let l = sep_generator(&sep, &uniform_rates(2))?;
    let d = factorized_duality(&[table.clone(), table.clone()], &sep, &l)?;
    let ok = d.residual() < c.tol;
    let csv = io::table_csv(&table);
    if c.json {
        let report = json!({
            "regime": classify_regime(p).name(),
            "table": table.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
            "duality": DualityJson::from_duality(&d),
        });
        println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    } else {
        println!("regime {}, factorized self-duality residual {:e}", classify_regime(p).name(), d.residual());
        print!("{csv}");
    }
    emit(c, "single_site.csv", &csv)?;
    emit(c, "factorized_duality.json", &io::to_json(&DualityJson::from_duality(&d))?)?;
    Ok(ok)
}

fn scenario(c: &Common, name: &str, n: Option<usize>, gamma: Option<usize>) -> Outcome {
    let opts = ScenarioOptions { n, gamma, seed: c.seed, tol: tolerances(c), out: c.out.clone() };
    let reports = run_scenario(name, &opts)?;
    if c.json {
        let body = if reports.len() == 1 { serde_json::to_value(&reports[0]) } else { serde_json::to_value(&reports) };
        println!("{}", serde_json::to_string_pretty(&body.map_err(Error::from)?).map_err(Error::from)?);
    } else {
        for r in &reports {
            print!("{}", r.render());
        }
    }
    Ok(reports.iter().all(|r| r.pass()))
}
