use crate::error::{CliError, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dlab_core::norms::{DinfSampler, DualSampler, HpSampler};
use dlab_core::{NormTag, Samplers};
use std::path::PathBuf;

/// Seed used when `--seed` is not given; always written into the record.
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Parser)]
#[command(name = "dlab", version, about = "Abscissas, norms and extremal examples for Dirichlet series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a JSON-lines coefficient file and print a summary
    Ingest { input: PathBuf },
    /// Abscissa estimate for one norm
    Estimate(EstimateArgs),
    /// Weak abscissa: the largest scalar estimate over dual functionals
    Weak(WeakArgs),
    /// Abscissa of unconditional convergence by worst-case sign search
    Unconditional(UnconditionalArgs),
    /// Strip width for a series, or the growth exponent of a norm ratio
    Strip(StripArgs),
    /// Build the prime-block extremal series and measure its gap
    Eco(EcoArgs),
    /// Contraction check for the one-variable radial multiplier
    Weissler(WeisslerArgs),
    /// Lower bounds for the H_q / H_p constant of Dirichlet polynomials
    Moin(MoinArgs),
    /// Merge result records into a table against their targets
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct JobArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for record.json, table.csv and plot.csv
    #[arg(long, default_value = "dlab-out")]
    pub out: PathBuf,
    /// Recompute even when a cached record exists
    #[arg(long)]
    pub no_cache: bool,
}

impl JobArgs {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SamplerArgs {
    /// Monte Carlo samples for H_p norms
    #[arg(long, default_value_t = 4096)]
    pub mc_samples: usize,
    /// Random dual functionals tried by weak norms
    #[arg(long, default_value_t = 32)]
    pub dual_samples: usize,
    #[arg(long, default_value_t = 256)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 3)]
    pub refine_steps: usize,
    #[arg(long, default_value_t = 16)]
    pub torus_samples: usize,
    #[arg(long, default_value_t = 1.0e4)]
    pub t_span: f64,
}

impl SamplerArgs {
    pub fn samplers(&self, seed: u64) -> Samplers {
        Samplers {
            dinf: DinfSampler {
                t_span: self.t_span,
                grid_points: self.grid_points,
                refine_steps: self.refine_steps,
                torus_samples: self.torus_samples,
                seed,
            },
            hp: HpSampler {
                mc_samples: self.mc_samples,
                seed,
            },
            dual: DualSampler {
                samples: self.dual_samples,
                seed,
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct NormArgs {
    /// ell1, ellinf, csup, dinf, hp (with --p) or hp(<p>)
    #[arg(long, default_value = "ell1")]
    pub norm: String,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub weak: bool,
}

impl NormArgs {
    pub fn tag(&self) -> Result<NormTag> {
        let tag = match (self.norm.trim().to_ascii_lowercase().as_str(), self.p) {
            ("hp", Some(p)) => NormTag::hp(p).map_err(|e| CliError::Usage(e.to_string()))?,
            ("hp", None) => return Err(CliError::Usage("--norm hp needs --p".into())),
            (other, _) => other.parse::<NormTag>().map_err(|e| CliError::Usage(e.to_string()))?,
        };
        Ok(if self.weak { tag.weak() } else { tag })
    }
}

/// `dyadic:<kmax>`: the cut points `2, 4, ..., 2^kmax` up to `n_max`.
pub fn parse_schedule(s: &str) -> std::result::Result<u32, String> {
    let k = s
        .strip_prefix("dyadic:")
        .ok_or_else(|| format!("expected dyadic:<kmax>, got {s:?}"))?;
    k.parse::<u32>()
        .ok()
        .filter(|k| (2..=62).contains(k))
        .ok_or_else(|| format!("kmax must be an integer in 2..=62, got {k:?}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateMethod {
    BohrCahen,
    Bisection,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub norm: NormArgs,
    #[arg(long, default_value = "dyadic:20", value_parser = parse_schedule)]
    pub schedule: u32,
    #[arg(long, value_enum, default_value_t = EstimateMethod::BohrCahen)]
    pub method: EstimateMethod,
    /// Estimate through D(s + sigma0) and shift back
    #[arg(long)]
    pub sigma0: Option<f64>,
    /// Bisection bracket `lo,hi`
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [-1.0, 2.0])]
    pub bracket: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    pub iters: usize,
    #[arg(long, default_value_t = dlab_core::abscissa::DEFAULT_GROWTH_TOL)]
    pub growth_tol: f64,
    /// Value the estimate is compared against by `report`
    #[arg(long)]
    pub target: Option<f64>,
    #[command(flatten)]
    pub samplers: SamplerArgs,
    #[command(flatten)]
    pub job: JobArgs,
}

#[derive(Debug, Clone, Args)]
pub struct WeakArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub norm: NormArgs,
    #[arg(long, default_value = "dyadic:20", value_parser = parse_schedule)]
    pub schedule: u32,
    #[arg(long)]
    pub target: Option<f64>,
    #[command(flatten)]
    pub samplers: SamplerArgs,
    #[command(flatten)]
    pub job: JobArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Random,
    Exhaustive,
}

#[derive(Debug, Clone, Args)]
pub struct UnconditionalArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Strategy::Random)]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 16)]
    pub trials: usize,
    #[arg(long, default_value = "dyadic:20", value_parser = parse_schedule)]
    pub schedule: u32,
    #[arg(long)]
    pub target: Option<f64>,
    #[command(flatten)]
    pub samplers: SamplerArgs,
    #[command(flatten)]
    pub job: JobArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ensemble {
    Signs,
    Phases,
}

#[derive(Debug, Clone, Args)]
pub struct StripArgs {
    /// Series file; without it the ratio exponent over random polynomials is fitted
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "ell1")]
    pub norm_a: String,
    #[arg(long, default_value = "csup")]
    pub norm_b: String,
    #[arg(long, default_value = "dyadic:20", value_parser = parse_schedule)]
    pub schedule: u32,
    /// Polynomial lengths for the exponent fit
    #[arg(long, value_delimiter = ',', default_values_t = [64u64, 128, 256, 512, 1024, 2048, 4096])]
    pub n_list: Vec<u64>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = Ensemble::Signs)]
    pub ensemble: Ensemble,
    #[arg(long)]
    pub target: Option<f64>,
    #[command(flatten)]
    pub samplers: SamplerArgs,
    #[command(flatten)]
    pub job: JobArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EcoArgs {
    /// Coefficient space: l<q> such as l1, l1.5 or l4
    #[arg(long, default_value = "l1")]
    pub space: String,
    #[arg(long, default_value_t = 3)]
    pub blocks: usize,
    /// One value for every block, or one per block
    #[arg(long, value_delimiter = ',', default_values_t = [1.0f64, 1.0, 0.44])]
    pub mass_target: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub prime_budget: u64,
    /// Block exponents; defaults to cot - (cot - 1) / 2^(m-1)
    #[arg(long, value_delimiter = ',')]
    pub q_schedule: Option<Vec<f64>>,
    #[arg(long, default_value = "dyadic:13", value_parser = parse_schedule)]
    pub schedule: u32,
    #[arg(long, default_value_t = 16)]
    pub sign_trials: usize,
    #[command(flatten)]
    pub samplers: SamplerArgs,
    #[command(flatten)]
    pub job: JobArgs,
}

#[derive(Debug, Clone, Args)]
pub struct WeisslerArgs {
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 4.0)]
    pub q: f64,
    /// Radius; defaults to sqrt(p/q)
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 10_000)]
    pub mc_samples: usize,
    #[command(flatten)]
    pub job: JobArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MoinArgs {
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 4.0)]
    pub q: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [2u64, 4, 8, 16, 32])]
    pub n_list: Vec<u64>,
    /// Objective evaluations per length
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    #[command(flatten)]
    pub job: JobArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub records: Vec<PathBuf>,
    /// Exit with status 4 when a target is missed
    #[arg(long)]
    pub check: bool,
    /// Tolerance for targets compared by equality
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    /// Directory for report.csv
    #[arg(long)]
    pub out: Option<PathBuf>,
}
