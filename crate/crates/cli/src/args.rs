use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use projnorm::{Field, FitConfig64, LossWeights};

#[derive(Debug, Parser)]
#[command(
    name = "projnorm",
    version,
    about = "Projective (nuclear) norm estimation for tensors and quantum states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the projective norm of a vector-form tensor.
    Norm(NormArgs),
    /// Estimate the projective norm of a density matrix and report separability.
    DensityNorm(DensityArgs),
    /// Sweep a named state over a grid of one or two parameters.
    Sweep(SweepArgs),
    /// Exact order-2 answer, or a multi-start baseline for higher orders.
    Oracle(OracleArgs),
    /// Run a verification suite and print a report table.
    Verify(VerifyArgs),
    /// Write a named state as canonical tensor JSON.
    ExportState(ExportArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Input {
    /// Named state (bell, ghz, w, psi_b, product, random, random_symmetric, dps3, dps4, zzzg).
    #[arg(long)]
    pub state: Option<String>,
    /// Canonical tensor JSON file.
    #[arg(long)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StateParams {
    /// State parameter `key=value` (repeatable).
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    Real,
    Complex,
}

impl From<FieldArg> for Field {
    fn from(f: FieldArg) -> Self {
        match f {
            FieldArg::Real => Field::Real,
            FieldArg::Complex => Field::Complex,
        }
    }
}

/// Fit settings. Defaults mirror `FitConfig::default()`.
#[derive(Debug, Args)]
pub struct FitArgs {
    /// Independent restarts.
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    /// Epoch budget per restart.
    #[arg(long, default_value_t = 20_000)]
    pub epochs: usize,
    /// Adam step size.
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// Reconstruction weight.
    #[arg(long, default_value_t = 100.0)]
    pub k1: f64,
    /// Rank-count weight.
    #[arg(long, default_value_t = 1.0)]
    pub k2: f64,
    /// Norm weight.
    #[arg(long, default_value_t = 10.0)]
    pub k3: f64,
    /// Indicator threshold of the rank-count term.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Pruning tolerance on coefficient magnitude.
    #[arg(long, default_value_t = 1e-2)]
    pub tolerance: f64,
    /// Absolute reconstruction error accepted as converged [default: 1e-4 ‖T‖_F].
    #[arg(long)]
    pub recon_tol: Option<f64>,
    /// Candidate rank replacing the default bound.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Seed of restart 0; restart i uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl FitArgs {
    pub fn config(&self, field: Option<Field>) -> FitConfig64 {
        FitConfig64 {
            weights: LossWeights {
                k1: self.k1,
                k2: self.k2,
                k3: self.k3,
                epsilon: self.eps,
            },
            step_size: self.lr,
            max_epochs: self.epochs,
            prune_tolerance: self.tolerance,
            restarts: self.restarts,
            seed: self.seed,
            recon_tol: self.recon_tol,
            rank_override: self.rank,
            field,
            ..FitConfig64::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Directory for result.json (and trace.csv with --trace).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Also write the per-epoch trace of the selected restart.
    #[arg(long, requires = "out")]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub params: StateParams,
    /// Model field [default: the target's field].
    #[arg(long, value_enum)]
    pub field: Option<FieldArg>,
    /// Fit with symmetric terms.
    #[arg(long)]
    pub symmetric: bool,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub params: StateParams,
    /// Model field.
    #[arg(long, value_enum, default_value = "complex")]
    pub field: FieldArg,
    /// Distance from 1 still read as separable.
    #[arg(long, default_value_t = 0.02)]
    pub verdict_tol: f64,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Named state to sweep.
    #[arg(long)]
    pub state: String,
    #[command(flatten)]
    pub params: StateParams,
    /// Grid `name=lo:hi:count`, endpoints inclusive (one or two).
    #[arg(long, required = true, value_parser = parse_grid)]
    pub grid: Vec<Grid>,
    /// Model field [default: complex for density states, else real].
    #[arg(long, value_enum)]
    pub field: Option<FieldArg>,
    /// Fit vector states with symmetric terms.
    #[arg(long)]
    pub symmetric: bool,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Directory for sweep.csv [default: CSV on stdout].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub params: StateParams,
    /// Model field [default: the target's field].
    #[arg(long, value_enum)]
    pub field: Option<FieldArg>,
    /// Starts for targets of order above 2.
    #[arg(long, default_value_t = projnorm::verify::ORACLE_STARTS)]
    pub starts: usize,
    /// Epoch budget multiplier for the starts.
    #[arg(long, default_value_t = 2)]
    pub epoch_factor: usize,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Gradients,
    Order2,
    Consistency,
    Fixtures,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Check set to run.
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Random instances per case (gradients) or matrices (order2).
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    /// Reference fixture file (fixtures suite).
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Named state.
    #[arg(long)]
    pub state: String,
    #[command(flatten)]
    pub params: StateParams,
    #[arg(long, value_enum, default_value = "real")]
    pub field: FieldArg,
    /// Directory for state.json [default: stdout].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.hi
                } else {
                    self.lo + step * i as f64
                }
            })
            .collect()
    }
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|e| format!("bad value in `{s}`: {e}"))?;
    if !v.is_finite() {
        return Err(format!("value in `{s}` is not finite"));
    }
    Ok((k.trim().to_string(), v))
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let (name, spec) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=LO:HI:COUNT, got `{s}`"))?;
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err(format!("expected LO:HI:COUNT, got `{spec}`"));
    };
    let lo: f64 = lo
        .parse()
        .map_err(|e| format!("bad lower end `{lo}`: {e}"))?;
    let hi: f64 = hi
        .parse()
        .map_err(|e| format!("bad upper end `{hi}`: {e}"))?;
    let count: usize = count
        .parse()
        .map_err(|e| format!("bad count `{count}`: {e}"))?;
    if count == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(format!("grid `{s}` needs finite ends and a positive count"));
    }
    Ok(Grid {
        name: name.to_string(),
        lo,
        hi,
        count,
    })
}
