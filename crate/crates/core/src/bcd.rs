//! Block coordinate descent with a diminishing search radius.
//!
//! Each sweep `n` updates blocks `0..m` in order. Block `i` is replaced by
//! an (inexact) minimizer of its convex sub-problem over
//! `box_i ∩ {θ : ‖θ − θ_{n−1}^{(i)}‖_F ≤ c'·w_n}`, with all other blocks at
//! their most recent values. An infinite radius gives plain BCD.
//!
//! Besides the driver this module carries the run diagnostics: monotone
//! descent, per-block radius feasibility, the cumulative squared-step bound,
//! long/short classification of iterates and a projected-gradient
//! stationarity measure.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::schedule::RadiusSchedule;
use crate::subsolver::{solve_block_qp, BoxBallFeasibleSet, QuadraticBlockSubproblem, SubsolverOptions};
use crate::tensor::Matrix;

/// A problem whose objective is convex and quadratic in each block.
pub trait BlockProblem {
    fn num_blocks(&self) -> usize;

    /// `f(θ) ≥ 0`.
    fn objective(&self, theta: &[Matrix]) -> Result<f64>;

    /// Block `block` restriction of `f` with all other blocks fixed at
    /// `theta`; agrees with `objective` up to an additive constant.
    fn block_subproblem(&self, theta: &[Matrix], block: usize) -> Result<QuadraticBlockSubproblem>;

    /// Entrywise `(lower, upper)` bounds of the block's feasible box.
    fn block_bounds(&self, block: usize) -> (f64, f64);

    fn full_gradient(&self, theta: &[Matrix]) -> Result<Vec<Matrix>>;

    /// Floating-point operations needed to build one block sub-problem; feeds
    /// the work clock.
    fn block_cost(&self, _block: usize) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointClass {
    /// No block moved by the full radius; the restriction had no effect.
    Long,
    Short,
}

impl PointClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PointClass::Long => "long",
            PointClass::Short => "short",
        }
    }
}

/// Relative margin below the radius under which a step counts as interior.
pub const LONG_POINT_MARGIN: f64 = 1e-9;

pub fn classify_point(step_norms: &[f64], radius: f64) -> PointClass {
    if radius.is_infinite() {
        return PointClass::Long;
    }
    let max_step = step_norms.iter().copied().fold(0.0, f64::max);
    if max_step < radius * (1.0 - LONG_POINT_MARGIN) {
        PointClass::Long
    } else {
        PointClass::Short
    }
}

/// Per-sweep diagnostics. The record for `n = 0` describes the initial point.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub n: u64,
    pub objective: f64,
    pub block_step_norms: Vec<f64>,
    pub radius: f64,
    pub stationarity: f64,
    pub point_class: PointClass,
    pub elapsed_seconds: f64,
    pub cumulative_sq_steps: f64,
}

impl TraceRecord {
    pub fn step_norm_total(&self) -> f64 {
        self.block_step_norms.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    pub fn reconstruction_error(&self) -> f64 {
        self.objective.max(0.0).sqrt()
    }
}

/// How elapsed time is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clock {
    /// Wall-clock time of the sweep itself; diagnostics are excluded.
    Wall,
    /// Counted floating-point work divided by a nominal rate. Reproducible
    /// bit for bit.
    Work { flops_per_second: f64 },
}

impl Default for Clock {
    fn default() -> Self {
        Clock::Wall
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub schedule: RadiusSchedule,
    pub max_sweeps: u64,
    pub max_seconds: f64,
    pub stationarity_stop: Option<f64>,
    pub subsolver: SubsolverOptions,
    pub seed: u64,
    /// Keep every record; otherwise only the initial and final ones.
    pub record_trace: bool,
    pub clock: Clock,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            schedule: RadiusSchedule::default(),
            max_sweeps: 100,
            max_seconds: f64::INFINITY,
            stationarity_stop: None,
            subsolver: SubsolverOptions::default(),
            seed: 0,
            record_trace: true,
            clock: Clock::Wall,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::InvalidArgument("max_sweeps must be at least 1".into()));
        }
        if !(self.max_seconds > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "max_seconds must be positive, got {}",
                self.max_seconds
            )));
        }
        if let Clock::Work { flops_per_second } = self.clock {
            if !(flops_per_second > 0.0 && flops_per_second.is_finite()) {
                return Err(Error::InvalidArgument("work clock rate must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Tracks time spent inside a sweep under either clock.
pub(crate) struct SweepTimer {
    clock: Clock,
    started: Instant,
    flops: f64,
}

impl SweepTimer {
    pub(crate) fn start(clock: Clock) -> Self {
        Self {
            clock,
            started: Instant::now(),
            flops: 0.0,
        }
    }

    pub(crate) fn add_work(&mut self, flops: f64) {
        self.flops += flops;
    }

    pub(crate) fn seconds(&self) -> f64 {
        match self.clock {
            Clock::Wall => self.started.elapsed().as_secs_f64(),
            Clock::Work { flops_per_second } => self.flops / flops_per_second,
        }
    }
}

fn check_feasible<P: BlockProblem + ?Sized>(problem: &P, theta: &[Matrix]) -> Result<()> {
    if theta.len() != problem.num_blocks() {
        return Err(Error::Shape(format!(
            "{} blocks supplied, problem has {}",
            theta.len(),
            problem.num_blocks()
        )));
    }
    for (i, block) in theta.iter().enumerate() {
        let (lo, hi) = problem.block_bounds(i);
        if let Some(v) = block.data().iter().find(|&&v| !(v >= lo && v <= hi)) {
            return Err(Error::Infeasible(format!("block {i} entry {v} outside [{lo}, {hi}]")));
        }
    }
    Ok(())
}

/// Projected-gradient mapping norm `‖θ − Π_Θ(θ − ∇f(θ))‖_F` over the product
/// of the block boxes. Zero exactly at first-order stationary points.
pub fn stationarity_measure<P: BlockProblem + ?Sized>(problem: &P, theta: &[Matrix]) -> Result<f64> {
    let grads = problem.full_gradient(theta)?;
    let mut total = 0.0;
    for (i, (block, grad)) in theta.iter().zip(&grads).enumerate() {
        let (lo, hi) = problem.block_bounds(i);
        for (&x, &g) in block.data().iter().zip(grad.data()) {
            let d = x - (x - g).clamp(lo, hi);
            total += d * d;
        }
    }
    Ok(total.sqrt())
}

/// One sweep over all blocks at radius `c'·w_n`.
///
/// The record's `elapsed_seconds` and `cumulative_sq_steps` hold this
/// sweep's own time and squared step total; [`run`] accumulates them.
pub fn bcd_dr_sweep<P: BlockProblem + ?Sized>(
    problem: &P,
    theta: &[Matrix],
    n: u64,
    cfg: &SolverConfig,
) -> Result<(Vec<Matrix>, TraceRecord)> {
    let radius = cfg.schedule.radius(n)?;
    let mut timer = SweepTimer::start(cfg.clock);
    let mut current = theta.to_vec();
    let mut step_norms = Vec::with_capacity(current.len());
    for i in 0..current.len() {
        let attach = |e: Error| Error::Block {
            block: i,
            source: Box::new(e),
        };
        let q = problem.block_subproblem(&current, i).map_err(attach)?;
        let (lo, hi) = problem.block_bounds(i);
        let set = BoxBallFeasibleSet::new(lo, hi, current[i].clone(), radius).map_err(attach)?;
        let sol = solve_block_qp(&q, &set, &current[i], &cfg.subsolver).map_err(attach)?;
        let (d, r) = q.block_shape();
        timer.add_work(problem.block_cost(i) + 2.0 * (sol.iterations as f64 + 1.0) * (d * r * r) as f64);
        step_norms.push(sol.point.distance(&current[i]));
        current[i] = sol.point;
    }
    let elapsed = timer.seconds();

    let objective = problem.objective(&current)?;
    if !objective.is_finite() {
        return Err(Error::NonFinite(format!("objective after sweep {n} is {objective}")));
    }
    let stationarity = stationarity_measure(problem, &current)?;
    let sq_steps = step_norms.iter().map(|s| s * s).sum();
    let record = TraceRecord {
        n,
        objective,
        point_class: classify_point(&step_norms, radius),
        block_step_norms: step_norms,
        radius,
        stationarity,
        elapsed_seconds: elapsed,
        cumulative_sq_steps: sq_steps,
    };
    Ok((current, record))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub theta: Vec<Matrix>,
    /// `trace[0]` is the initial point (`n = 0`).
    pub trace: Vec<TraceRecord>,
}

pub(crate) fn initial_record<P: BlockProblem + ?Sized>(problem: &P, theta: &[Matrix]) -> Result<TraceRecord> {
    let objective = problem.objective(theta)?;
    if !objective.is_finite() {
        return Err(Error::NonFinite(format!("initial objective is {objective}")));
    }
    Ok(TraceRecord {
        n: 0,
        objective,
        block_step_norms: vec![0.0; theta.len()],
        radius: f64::INFINITY,
        stationarity: stationarity_measure(problem, theta)?,
        point_class: PointClass::Long,
        elapsed_seconds: 0.0,
        cumulative_sq_steps: 0.0,
    })
}

/// Runs sweeps `n = 1, 2, …` until `max_sweeps`, `max_seconds` or the
/// stationarity threshold is reached.
pub fn run<P: BlockProblem + ?Sized>(problem: &P, theta0: &[Matrix], cfg: &SolverConfig) -> Result<RunResult> {
    cfg.validate()?;
    check_feasible(problem, theta0)?;
    let mut trace = vec![initial_record(problem, theta0)?];
    let mut theta = theta0.to_vec();
    let mut elapsed = 0.0;
    let mut sq_total = 0.0;
    for n in 1..=cfg.max_sweeps {
        let (next, mut rec) = bcd_dr_sweep(problem, &theta, n, cfg).map_err(|e| Error::Sweep {
            sweep: n as usize,
            source: Box::new(e),
        })?;
        elapsed += rec.elapsed_seconds;
        sq_total += rec.cumulative_sq_steps;
        rec.elapsed_seconds = elapsed;
        rec.cumulative_sq_steps = sq_total;
        theta = next;
        let stop = elapsed >= cfg.max_seconds || cfg.stationarity_stop.is_some_and(|s| rec.stationarity <= s);
        if !cfg.record_trace && trace.len() > 1 {
            trace.pop();
        }
        trace.push(rec);
        if stop {
            break;
        }
    }
    Ok(RunResult { theta, trace })
}

/// Outcome of one trace check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub passed: bool,
    /// Largest amount by which the checked inequality was exceeded (≤ 0 when
    /// it held everywhere).
    pub worst_violation: f64,
    /// Sweep index of the worst violation.
    pub worst_sweep: Option<u64>,
}

impl CheckResult {
    fn from_margins(margins: impl Iterator<Item = (u64, f64)>) -> Self {
        let mut worst = f64::NEG_INFINITY;
        let mut worst_sweep = None;
        for (n, m) in margins {
            if m > worst || m.is_nan() {
                worst = m;
                worst_sweep = Some(n);
            }
        }
        if worst_sweep.is_none() {
            worst = 0.0;
        }
        Self {
            passed: !(worst > 0.0) && !worst.is_nan(),
            worst_violation: worst,
            worst_sweep,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceReport {
    /// `f_n ≤ f_{n−1} + 10⁻⁹(1 + f_{n−1})`.
    pub monotone: CheckResult,
    /// Every block step `≤ c'w_n (1 + 10⁻¹²)`.
    pub radius: CheckResult,
    /// `Σ_{k≤N} Σ_i ‖Δθ_k^{(i)}‖² ≤ m c'² Σ_{k≤N} w_k² + 10⁻⁶` for every `N`.
    pub square_steps: CheckResult,
}

impl TraceReport {
    pub fn all_passed(&self) -> bool {
        self.monotone.passed && self.radius.passed && self.square_steps.passed
    }
}

pub const MONOTONE_SLACK: f64 = 1e-9;
pub const RADIUS_SLACK: f64 = 1e-12;
pub const SQUARE_STEP_SLACK: f64 = 1e-6;

/// Re-checks a trace against the schedule it was produced with. Radii are
/// recomputed from `schedule`, not read from the records, and the cumulative
/// step sum is rebuilt from the per-block norms.
pub fn verify_trace(trace: &[TraceRecord], schedule: &RadiusSchedule) -> TraceReport {
    let monotone = CheckResult::from_margins(trace.windows(2).map(|w| {
        let prev = w[0].objective;
        (w[1].n, w[1].objective - prev - MONOTONE_SLACK * (1.0 + prev))
    }));

    let sweeps = || trace.iter().filter(|r| r.n > 0);
    let radius = CheckResult::from_margins(sweeps().flat_map(|rec| {
        let r = schedule.radius(rec.n).unwrap_or(f64::INFINITY);
        rec.block_step_norms
            .iter()
            .map(move |&s| (rec.n, if r.is_infinite() { f64::NEG_INFINITY } else { s - r * (1.0 + RADIUS_SLACK) }))
    }));

    let mut steps = 0.0;
    let mut last_n = 0;
    let mut weight_sq = 0.0;
    let square_steps = CheckResult::from_margins(
        sweeps()
            .map(|rec| {
                for k in last_n + 1..=rec.n {
                    let w = schedule.weight(k).unwrap_or(1.0);
                    weight_sq += w * w;
                }
                last_n = rec.n;
                steps += rec.block_step_norms.iter().map(|s| s * s).sum::<f64>();
                let m = rec.block_step_norms.len() as f64;
                let bound = if schedule.is_infinite() {
                    f64::INFINITY
                } else {
                    m * schedule.c_prime().powi(2) * weight_sq + SQUARE_STEP_SLACK
                };
                (rec.n, steps - bound)
            })
            .collect::<Vec<_>>()
            .into_iter(),
    );

    TraceReport {
        monotone,
        radius,
        square_steps,
    }
}
