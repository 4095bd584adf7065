//! `gtkv`: verification suites and the KV solver from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use gtkv_core::kv_suite::{CheckRecord, SolutionManifest};
use serde::Serialize;
use serde_json::{Map, Value};

use commands::{GlueInputs, Outcome};
use config::{read_json, resolve, Common, Defaults, Format, RunConfig};

#[derive(Parser)]
#[command(name = "gtkv", version, about = "Goldman-Turaev operations and higher-genus Kashiwara-Vergne equations over Q")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lie bialgebra identities for the graded bracket and cobracket
    VerifyBialgebra {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Double bracket axioms for kappa on the group ring
    CheckKappa {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// gDiv of Pi_exp, divergence cocycles and the pullback identity
    CheckDivergence {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Brute-force center of the graded bracket; optionally test one element
    CheckCenter {
        #[command(flatten)]
        common: Common,
        /// A cyclic element such as "|x1*x1| + 2*|z1|"
        #[arg(long)]
        element: Option<String>,
    },
    /// delta_2n is special and divergence free
    CheckDelta2n {
        #[command(flatten)]
        common: Common,
        #[arg(long = "n")]
        n: Option<usize>,
    },
    /// Solve KV I and KV II degree by degree
    SolveKv {
        #[command(flatten)]
        common: Common,
        /// Alternate nullspace branch
        #[arg(long)]
        branch: Option<u64>,
        /// Write the solution manifest here
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Verify a solution manifest
    VerifyKv {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Glue two solutions along a pair of pants
    Glue {
        #[command(flatten)]
        common: Common,
        /// g1,n1,g2,n2
        #[arg(long, default_value = "1,0,1,0")]
        target: String,
        #[arg(long)]
        first: Option<PathBuf>,
        #[arg(long)]
        second: Option<PathBuf>,
        #[arg(long)]
        pants: Option<PathBuf>,
        #[arg(long)]
        branch: Option<u64>,
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Genus one solution from a genus zero one
    Elliptic {
        #[command(flatten)]
        common: Common,
        /// A pants solution at twice the degree
        #[arg(long)]
        pants: Option<PathBuf>,
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Move a solution to another framing
    AdjustFraming {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        to_p: Option<Vec<i64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        to_q: Option<Vec<i64>>,
        #[arg(long)]
        save: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct Report<'a> {
    schema: u32,
    command: &'a str,
    config: &'a RunConfig,
    checks: &'a [CheckRecord],
    artifacts: &'a Map<String, Value>,
}

fn render_text(r: &Report) -> String {
    let passed = r.checks.iter().filter(|c| c.passed()).count();
    let mut s = format!("gtkv {}: {passed}/{} checks passed\n", r.command, r.checks.len());
    for c in r.checks {
        match &c.residual {
            None => s.push_str(&format!("PASS {}\n", c.name)),
            Some(res) => s.push_str(&format!("FAIL {}: {res}\n", c.name)),
        }
    }
    s
}

fn emit(command: &str, common: &Common, cfg: &RunConfig, out: &Outcome) -> Result<bool> {
    let report = Report { schema: 1, command, config: cfg, checks: &out.checks, artifacts: &out.artifacts };
    let text = match common.format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Text => render_text(&report),
    };
    match &common.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(out.checks.iter().all(|c| c.passed()))
}

fn save(path: &Option<PathBuf>, m: &Option<SolutionManifest>) -> Result<()> {
    if let (Some(p), Some(m)) = (path, m) {
        std::fs::write(p, serde_json::to_string_pretty(m)? + "\n")?;
    }
    Ok(())
}

fn manifest(p: &Option<PathBuf>) -> Result<Option<SolutionManifest>> {
    p.as_ref().map(|p| read_json(p)).transpose()
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::VerifyBialgebra { common, samples } => {
            let (mut cfg, file) = resolve(&common, Defaults::default())?;
            let out = commands::verify_bialgebra(&mut cfg, samples.or(file.samples).unwrap_or(20))?;
            emit("verify-bialgebra", &common, &cfg, &out)
        }
        Command::CheckKappa { common, samples } => {
            let (mut cfg, file) = resolve(&common, Defaults::default())?;
            let out = commands::check_kappa(&mut cfg, samples.or(file.samples).unwrap_or(100))?;
            emit("check-kappa", &common, &cfg, &out)
        }
        Command::CheckDivergence { common, samples } => {
            let (mut cfg, file) = resolve(&common, Defaults::default())?;
            let out = commands::check_divergence(&mut cfg, samples.or(file.samples).unwrap_or(10))?;
            emit("check-divergence", &common, &cfg, &out)
        }
        Command::CheckCenter { common, element } => {
            let (mut cfg, _) = resolve(&common, Defaults::default())?;
            let out = commands::check_center(&mut cfg, element.as_deref())?;
            emit("check-center", &common, &cfg, &out)
        }
        Command::CheckDelta2n { common, n } => {
            let (mut cfg, file) = resolve(&common, Defaults { degree: 8, ..Defaults::default() })?;
            let out = commands::check_delta2n(&mut cfg, n.or(file.n).unwrap_or(1))?;
            emit("check-delta2n", &common, &cfg, &out)
        }
        Command::SolveKv { common, branch, save: path } => {
            let (mut cfg, file) = resolve(&common, Defaults::default())?;
            let (out, m) = commands::solve(&mut cfg, branch.or(file.branch))?;
            save(&path, &m)?;
            emit("solve-kv", &common, &cfg, &out)
        }
        Command::VerifyKv { common, solution } => {
            let m: SolutionManifest = read_json(&solution)?;
            let (mut cfg, _) = resolve(&Common { p: None, q: None, ..common.clone() }, Defaults::default())?;
            commands::adopt_manifest(&mut cfg, &m, false, false);
            if let Some(p) = &common.p {
                cfg.p = p.clone();
            }
            if let Some(q) = &common.q {
                cfg.q = q.clone();
            }
            let out = commands::verify(&mut cfg, &m)?;
            emit("verify-kv", &common, &cfg, &out)
        }
        Command::Glue { common, target, first, second, pants, branch, save: path } => {
            let (mut cfg, file) = resolve(&common, Defaults::default())?;
            let t = commands::parse_target(&target)?;
            let inputs = GlueInputs { first: manifest(&first)?, second: manifest(&second)?, pants: manifest(&pants)? };
            let (out, m) = commands::glue(&mut cfg, t, inputs, branch.or(file.branch))?;
            save(&path, &m)?;
            emit("glue", &common, &cfg, &out)
        }
        Command::Elliptic { common, pants, save: path } => {
            let (mut cfg, _) = resolve(&common, Defaults::default())?;
            let (out, m) = commands::elliptic(&mut cfg, manifest(&pants)?)?;
            save(&path, &m)?;
            emit("elliptic", &common, &cfg, &out)
        }
        Command::AdjustFraming { common, solution, to_p, to_q, save: path } => {
            let m: SolutionManifest = read_json(&solution)?;
            let (mut cfg, _) = resolve(&Common { p: None, q: None, ..common.clone() }, Defaults::default())?;
            commands::adopt_manifest(&mut cfg, &m, false, false);
            if let Some(p) = &common.p {
                cfg.p = p.clone();
            }
            if let Some(q) = &common.q {
                cfg.q = q.clone();
            }
            let to_p = to_p.unwrap_or_else(|| cfg.p.clone());
            let to_q = to_q.unwrap_or_else(|| cfg.q.clone());
            let (out, m) = commands::adjust(&mut cfg, &m, to_p, to_q)?;
            save(&path, &m)?;
            emit("adjust-framing", &common, &cfg, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
