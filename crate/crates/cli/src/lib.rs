//! Experiment runner: samples ensembles, writes plot-ready tables and a
//! metadata sidecar describing how to reproduce them.

pub mod args;
pub mod error;
pub mod experiments;
pub mod summary;
pub mod table;

use std::fs;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::json;

pub use args::{Cli, Command, Experiment, RunArgs, SummarizeArgs};
pub use error::{CliError, Result};
pub use experiments::Output;
pub use summary::{summarize, Summary};
pub use table::{Format, Table, Value};

pub const GIT_REV: &str = env!("ERGO_GIT_REV");

/// Files written by [`run`].
#[derive(Debug, Clone)]
pub struct RunReport {
    pub results: PathBuf,
    pub metadata: PathBuf,
    pub overlay: Option<PathBuf>,
    pub histogram: Option<PathBuf>,
    pub output: Output,
}

/// Configuration echoed into JSON results; excludes wall-clock data so reruns
/// are byte-identical.
fn results_config(args: &RunArgs) -> serde_json::Value {
    json!({
        "experiment": args.experiment.name(),
        "args": args,
        "draw_order_version": ergotransport::sampling::DRAW_ORDER_VERSION,
    })
}

pub fn run(args: &RunArgs) -> Result<RunReport> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let output = experiments::execute(args)?;
    fs::create_dir_all(&args.out).map_err(CliError::io(&args.out))?;

    let ext = args.format.extension();
    let config = results_config(args);
    let results = args.out.join(format!("results.{ext}"));
    output.results.write(&results, args.format, &config)?;
    let overlay = match &output.overlay {
        Some(t) => {
            let p = args.out.join(format!("overlay.{ext}"));
            t.write(&p, args.format, &config)?;
            Some(p)
        }
        None => None,
    };
    let histogram = match &output.histogram {
        Some(t) => {
            let p = args.out.join(format!("histogram.{ext}"));
            t.write(&p, args.format, &config)?;
            Some(p)
        }
        None => None,
    };

    let file_name = |p: &PathBuf| p.file_name().map(|n| n.to_string_lossy().into_owned());
    let metadata = args.out.join("metadata.json");
    let meta = json!({
        "experiment": args.experiment.name(),
        "args": args,
        "master_seed": args.seed,
        "draw_order_version": ergotransport::sampling::DRAW_ORDER_VERSION,
        "package_version": env!("CARGO_PKG_VERSION"),
        "git_rev": GIT_REV,
        "started_unix_seconds": started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
        "wall_time_seconds": clock.elapsed().as_secs_f64(),
        "files": {
            "results": file_name(&results),
            "overlay": overlay.as_ref().and_then(file_name),
            "histogram": histogram.as_ref().and_then(file_name),
        },
        "derived": output.derived,
    });
    let mut bytes = serde_json::to_vec_pretty(&meta).expect("json values serialize");
    bytes.push(b'\n');
    fs::write(&metadata, bytes).map_err(CliError::io(&metadata))?;

    Ok(RunReport {
        results,
        metadata,
        overlay,
        histogram,
        output,
    })
}
