use std::f64::consts::FRAC_PI_8;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::table::Format;

/// Every flag of `run` can also be set through an `ERGO_`-prefixed
/// environment variable, e.g. `ERGO_SAMPLES=1000`.
#[derive(Debug, Parser)]
#[command(name = "ergotransport", version, about = "Monte Carlo experiments on ergotropy transport")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment and write its results, metadata and overlays.
    Run(RunArgs),
    /// Print summary statistics of a results file.
    Summarize(SummarizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Product-state gain histograms.
    ProdHist,
    /// Separable against general states.
    SepVsGen,
    /// Two-qubit gain against mutual-information change, with bounds.
    Propeller,
    /// Product-state mean gain over a grid of dimensions.
    AvgShift,
    /// HDU against PFHS separable sampling.
    SamplerCompare,
    /// Spread of the mutual-information change and Levy tails.
    Concentration,
    /// Conditional entropy and enclosing rectangles of rescaled ensembles.
    Dispersion,
    /// Repeated qubit transport through an imperfect swap.
    Cycles,
    /// Marginal-spectrum inequalities on sampled states.
    QmpFuzz,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ProdHist => "prod-hist",
            Experiment::SepVsGen => "sep-vs-gen",
            Experiment::Propeller => "propeller",
            Experiment::AvgShift => "avg-shift",
            Experiment::SamplerCompare => "sampler-compare",
            Experiment::Concentration => "concentration",
            Experiment::Dispersion => "dispersion",
            Experiment::Cycles => "cycles",
            Experiment::QmpFuzz => "qmp-fuzz",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RunArgs {
    #[arg(long, env = "ERGO_EXPERIMENT", value_enum)]
    pub experiment: Experiment,
    /// Dimension of B; the largest B dimension for grid experiments.
    #[arg(long = "db", env = "ERGO_DB", default_value_t = 2)]
    pub d_b: usize,
    /// Dimension of C; the largest C dimension for grid experiments.
    #[arg(long = "dc", env = "ERGO_DC", default_value_t = 2)]
    pub d_c: usize,
    /// Samples per ensemble.
    #[arg(long, env = "ERGO_SAMPLES", default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, env = "ERGO_SEED", default_value_t = 0)]
    pub seed: u64,
    /// general, product, separable_pfhs or separable_hdu.
    #[arg(long, env = "ERGO_STATE_CLASS")]
    pub state_class: Option<String>,
    /// Coarse-graining step for the random Hamiltonians.
    #[arg(long, env = "ERGO_GRAIN", default_value_t = 0.2)]
    pub grain: f64,
    /// Histogram bins; defaults to 100, or 20 per axis for dispersion.
    #[arg(long, env = "ERGO_BINS")]
    pub bins: Option<usize>,
    /// Output directory.
    #[arg(long, env = "ERGO_OUT", default_value = "ergotransport-out")]
    pub out: PathBuf,
    #[arg(long, env = "ERGO_FORMAT", value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads for sample generation.
    #[arg(long, env = "ERGO_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, env = "ERGO_KAPPA", default_value_t = FRAC_PI_8)]
    pub kappa: f64,
    #[arg(long, env = "ERGO_EPS", default_value_t = 0.03)]
    pub eps: f64,
    #[arg(long, env = "ERGO_ITERATIONS", default_value_t = 20)]
    pub iterations: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SummarizeArgs {
    /// A results file written by `run`.
    pub results: PathBuf,
}
