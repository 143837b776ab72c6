use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use groundstate::mandel::{self, BetaHatResult};
use groundstate::reduction::{classify, MultistartOptions};
use groundstate::scalar::{self, ScalarGroundState};
use groundstate::variational::{self, CharacterizationReport, MinimizationResult, VariationalOptions};
use groundstate::{Error, Grid};
use groundstate_cli::{run_sweep, Config, ConfigError};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "groundstate", version, about = "Ground-state classification for coupled NLS systems")]
struct Cli {
    /// Seed for multistart searches.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether nontrivial ground-states exist and write the report as JSON.
    Classify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify every point of a one- or two-parameter grid and write CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the characteristic value over a range of β and write JSON.
    BetaHat {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `beta_hat.range` from the config.
        #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
        range: Option<Vec<f64>>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Solve the scalar equation and write the radial profile as CSV.
    SolveScalar {
        #[arg(long)]
        p: f64,
        #[arg(long = "dim", short = 'N')]
        dim: usize,
        #[arg(long)]
        omega: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Metadata JSON (default: next to --out with a .json extension).
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Minimize the action on a 1D grid and check the separable structure.
    VerifyPde {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report JSON (default: next to --out with a .json extension).
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

/// Error wrapper carrying the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure { code: 2, error: e.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Solver(_) | Error::NoGroundStates(_) | Error::Undefined(_) => 3,
            _ => 2,
        };
        Failure { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<Error>() {
            Ok(core) => core.into(),
            Err(e) => match e.downcast::<ConfigError>() {
                Ok(c) => c.into(),
                Err(e) => Failure { code: 1, error: e },
            },
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: 1, error: e.into() }
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn multistart(seed: Option<u64>, cfg: Option<&Config>) -> MultistartOptions {
    let mut opts = MultistartOptions::default();
    if let Some(s) = seed.or(cfg.and_then(|c| c.seed)) {
        opts.seed = s;
    }
    opts
}

fn sibling_json(out: Option<&Path>, explicit: Option<PathBuf>) -> Option<PathBuf> {
    explicit.or_else(|| out.map(|p| p.with_extension("json")))
}

fn cmd_classify(cfg: &Config, opts: &MultistartOptions, out: Option<&Path>) -> Result<(), Failure> {
    let report = classify(&cfg.spec, opts)?;
    write_json(out, &report)?;
    Ok(())
}

fn cmd_sweep(cfg: &Config, opts: &MultistartOptions, out: Option<&Path>) -> Result<(), Failure> {
    if cfg.axes.is_empty() {
        return Err(ConfigError("sweep: missing section".into()).into());
    }
    let rows = run_sweep(&cfg.spec, &cfg.axes, &cfg.labels, opts)?;
    let mut w = csv::Writer::from_writer(sink(out)?);
    let mut header: Vec<String> = cfg.axes.iter().map(|(_, a)| a.param.clone()).collect();
    header.extend(["verdict", "mask", "coeff", "label"].map(String::from));
    w.write_record(&header).map_err(anyhow::Error::from)?;
    for r in rows {
        let mut rec: Vec<String> = r.values.iter().map(|v| sci(*v)).collect();
        rec.extend([r.verdict.as_str().to_string(), r.mask, sci(r.coeff), r.label]);
        w.write_record(&rec).map_err(anyhow::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BetaHatCurve {
    pairs: Vec<[usize; 2]>,
    points: Vec<BetaHatResult>,
}

fn cmd_beta_hat(
    cfg: &Config,
    opts: &MultistartOptions,
    out: Option<&Path>,
    range: Option<Vec<f64>>,
    n: Option<usize>,
) -> Result<(), Failure> {
    let (lo, hi, n) = match (range, &cfg.beta_hat) {
        (Some(r), sec) => (r[0], r[1], n.or(sec.as_ref().map(|s| s.n)).unwrap_or(21)),
        (None, Some(s)) => (s.range[0], s.range[1], n.unwrap_or(s.n)),
        (None, None) => {
            let b = cfg.spec.beta.unwrap_or(1.0);
            (b, b, 1)
        }
    };
    if n == 0 || hi < lo {
        return Err(ConfigError("beta_hat: range must be increasing with n >= 1".into()).into());
    }
    let betas: Vec<f64> =
        (0..n).map(|k| if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect();
    let points =
        betas.iter().map(|&b| mandel::beta_hat_with(&cfg.spec, b, opts)).collect::<groundstate::Result<Vec<_>>>()?;
    let pairs = cfg.spec.pairs.iter().flatten().map(|&(i, j)| [i + 1, j + 1]).collect();
    write_json(out, &BetaHatCurve { pairs, points })?;
    Ok(())
}

#[derive(Serialize)]
struct ScalarMeta<'a> {
    p: f64,
    #[serde(rename = "N")]
    dim: usize,
    omega: f64,
    u0: f64,
    mass: f64,
    grad_energy: f64,
    lp_norm: f64,
    #[serde(rename = "I_value")]
    i_value: f64,
    method: &'a scalar::Method,
    bound_state_defect: f64,
    pohozaev_defect: f64,
    nodes: usize,
}

fn cmd_solve_scalar(p: f64, dim: usize, omega: f64, out: Option<&Path>, meta: Option<PathBuf>) -> Result<(), Failure> {
    let gs: ScalarGroundState = scalar::solve_scalar(p, dim, omega)?;
    let mut w = csv::Writer::from_writer(sink(out)?);
    w.write_record(["r", "u"]).map_err(anyhow::Error::from)?;
    for (r, u) in gs.r.iter().zip(&gs.u) {
        w.write_record([sci(*r), sci(*u)]).map_err(anyhow::Error::from)?;
    }
    w.flush()?;
    let info = ScalarMeta {
        p,
        dim,
        omega,
        u0: gs.u0_at_0,
        mass: gs.mass,
        grad_energy: gs.grad_energy,
        lp_norm: gs.lp_norm,
        i_value: gs.i_value,
        method: &gs.method,
        bound_state_defect: gs.bound_state_defect(),
        pohozaev_defect: gs.pohozaev_defect(),
        nodes: gs.r.len(),
    };
    match sibling_json(out, meta) {
        Some(path) => write_json(Some(&path), &info)?,
        None => {
            serde_json::to_writer_pretty(io::stderr().lock(), &info).map_err(anyhow::Error::from)?;
            eprintln!();
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct PdeReport {
    minimization: MinimizationResult,
    support: String,
    half_width: f64,
    nodes: usize,
    characterization: Option<CharacterizationReport>,
    characterization_holds: Option<bool>,
}

fn cmd_verify_pde(cfg: &Config, out: Option<&Path>, report: Option<PathBuf>, seed: Option<u64>) -> Result<(), Failure> {
    let spec = &cfg.spec;
    let (half_width, nodes) = match &cfg.grid {
        Some(g) => (g.half_width, g.nodes),
        None => ((20.0 / spec.min_omega().sqrt()).max(20.0), 4001),
    };
    let grid = Grid::symmetric(half_width, nodes)?;
    let mut vopts = VariationalOptions::default();
    if let Some(s) = seed.or(cfg.seed) {
        vopts.seed = s;
    }
    let result = variational::minimize_with(spec, grid, None, &vopts)?;
    if !result.converged {
        return Err(Error::Solver(format!(
            "descent stopped after {} iterations without converging",
            result.iterations
        ))
        .into());
    }
    let characterization = if spec.has_equal_omega() {
        let gs = scalar::solve_scalar(spec.p, 1, spec.omega[0])?;
        Some(variational::verify_characterization(spec, &result, &gs)?)
    } else {
        None
    };
    let mut w = csv::Writer::from_writer(sink(out)?);
    let mut header = vec!["x".to_string()];
    header.extend((1..=spec.m).map(|i| format!("u_{i}")));
    w.write_record(&header).map_err(anyhow::Error::from)?;
    let field = &result.field;
    for (k, x) in field.grid().points().iter().enumerate() {
        let mut rec = vec![sci(*x)];
        rec.extend(field.values().iter().map(|row| sci(row[k])));
        w.write_record(&rec).map_err(anyhow::Error::from)?;
    }
    w.flush()?;
    let rep = PdeReport {
        support: result.support().mask_string(spec.m),
        characterization_holds: characterization.as_ref().map(|c| c.holds()),
        minimization: result,
        half_width,
        nodes,
        characterization,
    };
    match sibling_json(out, report) {
        Some(path) => write_json(Some(&path), &rep)?,
        None => write_json(None, &rep)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(anyhow::Error::from)?;
    }
    let seed = cli.seed;
    match cli.command {
        Command::Classify { config, out } => {
            let cfg = Config::load(&config)?;
            cmd_classify(&cfg, &multistart(seed, Some(&cfg)), out.as_deref())
        }
        Command::Sweep { config, out } => {
            let cfg = Config::load(&config)?;
            cmd_sweep(&cfg, &multistart(seed, Some(&cfg)), out.as_deref())
        }
        Command::BetaHat { config, out, range, n } => {
            let cfg = Config::load(&config)?;
            cmd_beta_hat(&cfg, &multistart(seed, Some(&cfg)), out.as_deref(), range, n)
        }
        Command::SolveScalar { p, dim, omega, out, meta } => cmd_solve_scalar(p, dim, omega, out.as_deref(), meta),
        Command::VerifyPde { config, out, report } => {
            let cfg = Config::load(&config)?;
            cmd_verify_pde(&cfg, out.as_deref(), report, seed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
