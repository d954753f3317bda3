//! Benchmark harness: configuration, multi-run experiments, aggregation and
//! SVG convergence plots.

pub mod aggregate;
pub mod config;
pub mod error;
pub mod experiment;
pub mod plot;

pub use aggregate::{aggregate_runs, time_bins, AggregateCurve, AlgorithmCurve, RunTrace};
pub use config::{resolve, resolve_args, Algorithm, Cli, ClockKind, DataSource, ExperimentConfig, Provenance};
pub use error::{BenchError, Result};
pub use experiment::{run_experiment, ExperimentOutcome, TRACE_HEADER};
pub use plot::{emit_svg_plot, render_svg, PlotOptions};
