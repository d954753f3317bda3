//! Multi-run comparison: data is built once, every algorithm is run from the
//! same per-run initializations, and traces, aggregate curves and a summary
//! are written to the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bcddr::bcd::{Clock, RunResult, TraceRecord};
use bcddr::datagen::{sparse_surrogate, synthetic_lowrank, SynthSpec};
use bcddr::io::{load_ntf1, save_ntf1};
use bcddr::{run, run_mu, DenseTensor, ModelMode, MuConfig, NtfProblem, RadiusSchedule, SolverConfig};
use rayon::prelude::*;

use crate::aggregate::{aggregate_runs, time_bins, AggregateCurve, RunTrace};
use crate::config::{Algorithm, ClockKind, DataSource, ExperimentConfig, Provenance};
use crate::error::{BenchError, Result};
use crate::plot::{emit_svg_plot, PlotOptions};

pub const TRACE_HEADER: &str = "run,iter,elapsed_s,objective,recon_error,step_norm_total,radius,stationarity,point_class";

/// Builds the data tensor described by the configuration.
pub fn load_data(cfg: &ExperimentConfig) -> Result<DenseTensor> {
    Ok(match &cfg.data {
        DataSource::Synth => {
            let spec = SynthSpec {
                noise_level: cfg.noise,
                ..SynthSpec::lowrank(cfg.shape.clone(), cfg.rank, cfg.seed)
            };
            synthetic_lowrank(&spec)?.0
        }
        DataSource::Surrogate => {
            sparse_surrogate(&SynthSpec::surrogate(cfg.shape.clone(), cfg.seed, cfg.density, cfg.target_mean))?
        }
        DataSource::File(path) => load_ntf1(path)?,
    })
}

/// Appends one CSV row per trace record (17 significant digits).
pub fn write_trace_rows(out: &mut String, run: usize, trace: &[TraceRecord]) {
    for r in trace {
        writeln!(
            out,
            "{run},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.n,
            r.elapsed_seconds,
            r.objective,
            r.reconstruction_error(),
            r.step_norm_total(),
            r.radius,
            r.stationarity,
            r.point_class.as_str()
        )
        .unwrap();
    }
}

pub fn trace_csv(run: usize, trace: &[TraceRecord]) -> String {
    let mut s = format!("{TRACE_HEADER}\n");
    write_trace_rows(&mut s, run, trace);
    s
}

/// Runs one algorithm from the initialization of run `run`.
pub fn run_one(
    problem: &NtfProblem,
    cfg: &ExperimentConfig,
    algorithm: &Algorithm,
    run_index: usize,
) -> bcddr::Result<RunResult> {
    let init_seed = cfg.seed.wrapping_add(run_index as u64);
    let model = problem.init_model(init_seed, cfg.init_scale)?;
    let theta0 = problem.theta_from_model(&model)?;
    let clock = match cfg.clock {
        ClockKind::Wall => Clock::Wall,
        ClockKind::Work => Clock::Work {
            flops_per_second: cfg.work_rate,
        },
    };
    let schedule = match *algorithm {
        Algorithm::AlsDr { beta, c_prime } => RadiusSchedule::power_log(beta, c_prime)?,
        Algorithm::Als => RadiusSchedule::infinite(),
        Algorithm::Mu => {
            let mu = MuConfig {
                max_sweeps: cfg.max_sweeps,
                max_seconds: cfg.max_seconds,
                clock,
                ..Default::default()
            };
            return run_mu(problem, &theta0, &mu);
        }
    };
    let solver = SolverConfig {
        schedule,
        max_sweeps: cfg.max_sweeps,
        max_seconds: cfg.max_seconds,
        seed: init_seed,
        clock,
        ..Default::default()
    };
    run(problem, &theta0, &solver)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub algorithm: Algorithm,
    pub run: usize,
    pub result: std::result::Result<RunResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSummary {
    pub label: String,
    pub completed: usize,
    pub failed: usize,
    pub mean_initial_error: f64,
    pub mean_final_error: f64,
    pub std_final_error: f64,
    /// Mean of `‖X − X̂‖_F / ‖X‖_F` at the end of each run.
    pub mean_final_relative_error: f64,
    pub mean_sweeps: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub outcomes: Vec<RunOutcome>,
    pub aggregate: AggregateCurve,
    pub summaries: Vec<AlgorithmSummary>,
    pub data_norm: f64,
    pub out_dir: PathBuf,
}

impl ExperimentOutcome {
    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| o.result.is_err()).count()
    }

    pub fn summary(&self, label: &str) -> Option<&AlgorithmSummary> {
        self.summaries.iter().find(|s| s.label == label)
    }
}

fn summarize(algorithm: &Algorithm, outcomes: &[RunOutcome], data_norm: f64) -> AlgorithmSummary {
    let done: Vec<&RunResult> = outcomes
        .iter()
        .filter(|o| o.algorithm == *algorithm)
        .filter_map(|o| o.result.as_ref().ok())
        .collect();
    let failed = outcomes
        .iter()
        .filter(|o| o.algorithm == *algorithm && o.result.is_err())
        .count();
    let n = done.len() as f64;
    let mean = |f: &dyn Fn(&RunResult) -> f64| done.iter().map(|r| f(r)).sum::<f64>() / n;
    let first = |r: &RunResult| r.trace.first().map_or(f64::NAN, |t| t.reconstruction_error());
    let last = |r: &RunResult| r.trace.last().map_or(f64::NAN, |t| t.reconstruction_error());
    let mean_final = mean(&last);
    let var = done.iter().map(|r| (last(r) - mean_final).powi(2)).sum::<f64>() / n;
    AlgorithmSummary {
        label: algorithm.label(),
        completed: done.len(),
        failed,
        mean_initial_error: mean(&first),
        mean_final_error: mean_final,
        std_final_error: var.sqrt(),
        mean_final_relative_error: mean(&|r| last(r) / data_norm),
        mean_sweeps: mean(&|r| r.trace.last().map_or(0.0, |t| t.n as f64)),
    }
}

fn summary_text(cfg: &ExperimentConfig, outcome: &ExperimentOutcome) -> String {
    let time_unit = match cfg.clock {
        ClockKind::Wall => "wall-clock seconds",
        ClockKind::Work => "work-clock seconds (flops / work-rate)",
    };
    let mut s = String::new();
    writeln!(s, "data norm ‖X‖_F = {:.6e}", outcome.data_norm).unwrap();
    writeln!(s, "time axis: {time_unit}").unwrap();
    writeln!(
        s,
        "{:<16} {:>5} {:>6} {:>14} {:>14} {:>12} {:>14} {:>8}",
        "algorithm", "runs", "failed", "initial_err", "final_err", "final_std", "final_rel_err", "sweeps"
    )
    .unwrap();
    for a in &outcome.summaries {
        writeln!(
            s,
            "{:<16} {:>5} {:>6} {:>14.6e} {:>14.6e} {:>12.4e} {:>14.6e} {:>8.1}",
            a.label,
            a.completed,
            a.failed,
            a.mean_initial_error,
            a.mean_final_error,
            a.std_final_error,
            a.mean_final_relative_error,
            a.mean_sweeps
        )
        .unwrap();
    }
    if let Some(als) = outcome.summary("als") {
        writeln!(s, "\nradius restriction vs plain ALS (mean final error, lower is better):").unwrap();
        for a in outcome.summaries.iter().filter(|a| a.label.starts_with("als_dr")) {
            let verdict = if a.mean_final_error < als.mean_final_error {
                "lower"
            } else if a.mean_final_error > als.mean_final_error {
                "higher"
            } else {
                "equal"
            };
            writeln!(
                s,
                "  {}: {:.6e} vs als {:.6e} ({verdict})",
                a.label, a.mean_final_error, als.mean_final_error
            )
            .unwrap();
        }
    }
    for o in outcome.outcomes.iter().filter(|o| o.result.is_err()) {
        writeln!(
            s,
            "FAILED {} run {}: {}",
            o.algorithm.label(),
            o.run,
            o.result.as_ref().unwrap_err()
        )
        .unwrap();
    }
    s
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| BenchError::io(path, e))
}

/// Runs every algorithm × run, writes all artifacts, and returns the
/// collected results. Individual run failures are recorded, not raised.
pub fn run_experiment(cfg: &ExperimentConfig, provenance: &Provenance) -> Result<ExperimentOutcome> {
    let traces_dir = cfg.out.join("traces");
    fs::create_dir_all(&traces_dir).map_err(|e| BenchError::io(&traces_dir, e))?;
    write(&cfg.config_path(), cfg.to_config_text(provenance))?;

    let data = load_data(cfg)?;
    if cfg.emit_data {
        save_ntf1(&data, cfg.out.join("data.ntf1"))?;
    }
    let problem = NtfProblem::new(data, cfg.rank, ModelMode::CpAbsorbed, cfg.box_bound)?;
    let data_norm = problem.data_norm();

    let jobs: Vec<(Algorithm, usize)> = cfg
        .algorithms
        .iter()
        .flat_map(|a| (0..cfg.runs).map(move |k| (*a, k)))
        .collect();
    let job = |&(algorithm, k): &(Algorithm, usize)| RunOutcome {
        algorithm,
        run: k,
        result: run_one(&problem, cfg, &algorithm, k).map_err(|e| e.to_string()),
    };
    let outcomes: Vec<RunOutcome> = if cfg.serial {
        jobs.iter().map(job).collect()
    } else {
        jobs.par_iter().map(job).collect()
    };

    for o in &outcomes {
        if let Ok(r) = &o.result {
            write(&cfg.trace_path(&o.algorithm, o.run), trace_csv(o.run, &r.trace))?;
        }
    }

    let run_traces: Vec<RunTrace> = outcomes
        .iter()
        .map(|o| RunTrace {
            algorithm: o.algorithm.label(),
            run: o.run,
            points: o.result.as_ref().map_or_else(
                |_| Vec::new(),
                |r| r.trace.iter().map(|t| (t.elapsed_seconds, t.reconstruction_error())).collect(),
            ),
        })
        .collect();
    let t_max = run_traces
        .iter()
        .filter_map(|t| t.points.last().map(|p| p.0))
        .fold(0.0, f64::max);
    let aggregate = aggregate_runs(&run_traces, &time_bins(t_max, cfg.bins));
    write(&cfg.out.join("aggregate.csv"), aggregate.to_csv())?;

    let summaries = cfg
        .algorithms
        .iter()
        .map(|a| summarize(a, &outcomes, data_norm))
        .collect();
    let outcome = ExperimentOutcome {
        outcomes,
        aggregate,
        summaries,
        data_norm,
        out_dir: cfg.out.clone(),
    };
    write(&cfg.out.join("summary.txt"), summary_text(cfg, &outcome))?;

    if cfg.plot && !outcome.aggregate.is_empty() {
        let opts = PlotOptions {
            log_y: cfg.log_y,
            title: format!("shape {:?}, rank {}, {} runs", cfg.shape, cfg.rank, cfg.runs),
            x_label: match cfg.clock {
                ClockKind::Wall => "elapsed wall-clock time (s)".into(),
                ClockKind::Work => "elapsed work-clock time (s)".into(),
            },
        };
        emit_svg_plot(&outcome.aggregate, &cfg.out.join("convergence.svg"), &opts)?;
    }
    Ok(outcome)
}
