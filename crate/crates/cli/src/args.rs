use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Merton jump-diffusion pricing and jump-tuple calibration on market-data bundles.
///
/// Exit codes: 0 success, 2 invalid input, 3 numerical failure,
/// 4 calibration did not converge (the report is still written).
#[derive(Debug, Parser)]
#[command(name = "jumpcopula", version)]
pub struct Cli {
    /// Worker threads for Monte Carlo and calibration; 0 uses every core.
    /// Reports do not depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price calls on one asset across a moneyness grid.
    PriceSingle(PriceSingle),
    /// Price basket calls and compare against the no-jump baseline.
    PriceBasket(PriceBasket),
    /// Solve for one asset's strike-dependent diffusive vol.
    CalibrateDiffusive(CalibrateDiffusive),
    /// Fit the jump tuple so the basket skew matches the index skew.
    CalibrateTuple(CalibrateTuple),
    /// Tabulate the diffusive correlation that holds the total correlation fixed, per intensity.
    ReportCorrelation(ReportCorrelation),
}

#[derive(Debug, Args)]
pub struct BundleArgs {
    /// Market-data bundle: a directory holding bundle.toml, or the manifest itself.
    #[arg(long)]
    pub bundle: PathBuf,

    /// Maturity in years [default: shortest maturity in the bundle].
    #[arg(long)]
    pub maturity: Option<f64>,

    /// Report destination; `-` writes to standard output.
    #[arg(long, short, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Lowest strike of the report grid, as a fraction of the forward.
    #[arg(long, default_value_t = 0.8)]
    pub min_moneyness: f64,

    /// Highest strike of the report grid, as a fraction of the forward.
    #[arg(long, default_value_t = 1.2)]
    pub max_moneyness: f64,

    /// Number of equally spaced grid points.
    #[arg(long, default_value_t = 9)]
    pub points: usize,

    /// Significant digits in the written table.
    #[arg(long, default_value_t = 6)]
    pub digits: usize,
}

/// Jump tuple overrides. Unset fields come from the bundle's [jump] table;
/// without one the model has no jumps.
#[derive(Debug, Args)]
pub struct JumpArgs {
    /// Jump intensity per year.
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Universal mean proportional jump size.
    #[arg(long, allow_negative_numbers = true)]
    pub k_hat: Option<f64>,

    /// Lognormal jump-size vol.
    #[arg(long)]
    pub delta: Option<f64>,

    /// Vol level at which an asset's jump equals the universal jump.
    #[arg(long)]
    pub sigma0: Option<f64>,

    /// Elasticity of the jump size to the asset's diffusive vol.
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: Option<f64>,

    /// Ignore the bundle's jump tuple and price without jumps.
    #[arg(long)]
    pub no_jumps: bool,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Random seed; required whenever Monte Carlo runs.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Simulated paths, counting both members of an antithetic pair.
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,

    /// Disable antithetic pairing.
    #[arg(long)]
    pub no_antithetic: bool,

    /// Paths per parallel work unit; results do not depend on it.
    #[arg(long, default_value_t = 16_384)]
    pub batch_size: usize,
}

#[derive(Debug, Args)]
pub struct FixedPointArgs {
    /// Largest accepted repricing error of the diffusive-vol fixed point, in vol points.
    #[arg(long, default_value_t = 0.05)]
    pub tolerance_vol_points: f64,

    /// Fixed-point iteration cap.
    #[arg(long, default_value_t = 20)]
    pub max_iterations: usize,
}

#[derive(Debug, Args)]
pub struct PriceSingle {
    #[command(flatten)]
    pub bundle: BundleArgs,

    /// Asset id.
    #[arg(long)]
    pub asset: String,

    /// Flat diffusive vol; when absent the vol curve is calibrated to the asset's quotes.
    #[arg(long)]
    pub sigma: Option<f64>,

    #[command(flatten)]
    pub grid: GridArgs,

    #[command(flatten)]
    pub jump: JumpArgs,

    #[command(flatten)]
    pub fixed_point: FixedPointArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasketMode {
    /// Moment-matched shifted lognormal per jump count.
    Tm,
    /// Gaussian copula over the Merton marginals.
    Copula,
}

#[derive(Debug, Args)]
pub struct PriceBasket {
    #[command(flatten)]
    pub bundle: BundleArgs,

    #[arg(long, value_enum, default_value_t = BasketMode::Copula)]
    pub mode: BasketMode,

    /// Flat diffusive vol for every asset; when absent each curve is calibrated.
    #[arg(long)]
    pub sigma: Option<f64>,

    #[command(flatten)]
    pub grid: GridArgs,

    #[command(flatten)]
    pub jump: JumpArgs,

    #[command(flatten)]
    pub mc: McArgs,

    #[command(flatten)]
    pub fixed_point: FixedPointArgs,
}

#[derive(Debug, Args)]
pub struct CalibrateDiffusive {
    #[command(flatten)]
    pub bundle: BundleArgs,

    /// Asset id.
    #[arg(long)]
    pub asset: String,

    #[command(flatten)]
    pub jump: JumpArgs,

    #[command(flatten)]
    pub fixed_point: FixedPointArgs,
}

#[derive(Debug, Args)]
pub struct CalibrateTuple {
    #[command(flatten)]
    pub bundle: BundleArgs,

    /// Random seed of the basket Monte Carlo; required.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Simulated paths per trial tuple.
    #[arg(long, default_value_t = 20_000)]
    pub paths: usize,

    /// Vol scale held fixed during the search.
    #[arg(long, default_value_t = 0.18)]
    pub sigma0: f64,

    /// Intensity bounds `lo,hi`.
    #[arg(long, value_delimiter = ',', default_values_t = [0.02, 1.0])]
    pub lambda_range: Vec<f64>,

    /// Universal jump bounds `lo,hi`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [-0.4, -0.02])]
    pub k_hat_range: Vec<f64>,

    /// Jump vol bounds `lo,hi`.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.4])]
    pub delta_range: Vec<f64>,

    /// Elasticity bounds `lo,hi`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [0.0, 2.0])]
    pub kappa_range: Vec<f64>,

    /// Starting tuple `lambda,k_hat,delta,kappa` [default: center of the bounds].
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub start: Option<Vec<f64>>,

    /// Initial simplex size of each optimizer restart, in units of the bounds.
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.1, 0.05])]
    pub restart_steps: Vec<f64>,

    /// Objective evaluations allowed per restart.
    #[arg(long, default_value_t = 200)]
    pub max_evaluations: usize,

    /// Worst index-vol miss accepted as converged, in vol points.
    #[arg(long, default_value_t = 0.25)]
    pub tolerance_vol_points: f64,
}

#[derive(Debug, Args)]
pub struct ReportCorrelation {
    #[command(flatten)]
    pub bundle: BundleArgs,

    /// Intensities to tabulate.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.1, 0.25, 0.5, 1.0])]
    pub lambdas: Vec<f64>,

    /// Significant digits in the written table.
    #[arg(long, default_value_t = 6)]
    pub digits: usize,

    #[command(flatten)]
    pub jump: JumpArgs,

    #[command(flatten)]
    pub fixed_point: FixedPointArgs,
}
