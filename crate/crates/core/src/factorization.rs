//! Nonnegative tensor factorization as a block problem.
//!
//! The data tensor `X` of shape `d_1 × … × d_m × T` is approximated by
//! `Out(U^(1), …, U^(m)) ×_{m+1} H`, which is the CP model with factors
//! `U^(1), …, U^(m), Hᵀ`. Internally every block is therefore a `d_k × r`
//! loading matrix and the code block is carried as `Hᵀ` (same Frobenius norm,
//! so radius constraints are unaffected). In [`ModelMode::CpAbsorbed`] the
//! code matrix is fixed to all-ones with `T = 1` and the data has no trailing
//! `T` mode: plain nonnegative CP.
//!
//! With `m = 1` and general mode this is NMF, `X ≈ W H`.

use crate::bcd::{initial_record, BlockProblem, Clock, PointClass, RunResult, SweepTimer, TraceRecord};
use crate::error::{Error, Result};
use crate::rng::{Uniform, INIT_STREAM};
use crate::subsolver::QuadraticBlockSubproblem;
use crate::tensor::{cp_reconstruct, for_each_cp_entry, mttkrp, DenseTensor, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelMode {
    /// Loading matrices plus a learned code matrix `H` (`r × T`).
    General,
    /// Code matrix absorbed into the loadings: `H ≡ 1`, `T = 1`.
    CpAbsorbed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub factors: Vec<Matrix>,
    pub code: Matrix,
    pub mode: ModelMode,
}

impl FactorModel {
    pub fn rank(&self) -> usize {
        self.code.rows()
    }

    pub fn cp(factors: Vec<Matrix>) -> Result<Self> {
        let r = factors
            .first()
            .ok_or_else(|| Error::InvalidArgument("no factors".into()))?
            .cols();
        Ok(Self {
            factors,
            code: Matrix::filled(r, 1, 1.0),
            mode: ModelMode::CpAbsorbed,
        })
    }

    pub fn general(factors: Vec<Matrix>, code: Matrix) -> Self {
        Self {
            factors,
            code,
            mode: ModelMode::General,
        }
    }

    /// Reconstructed tensor; in CP mode the trailing unit mode is dropped.
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        let full = cp_reconstruct(&self.factors, &self.code)?;
        match self.mode {
            ModelMode::General => Ok(full),
            ModelMode::CpAbsorbed => {
                let shape = full.shape()[..full.ndim() - 1].to_vec();
                DenseTensor::new(shape, full.data().to_vec())
            }
        }
    }

    /// Entries of the free parameters (the code matrix is fixed in CP mode).
    fn free_entries(&self) -> impl Iterator<Item = f64> + '_ {
        let code = (self.mode == ModelMode::General).then_some(&self.code);
        self.factors
            .iter()
            .chain(code)
            .flat_map(|m| m.data().iter().copied())
    }

    pub fn max_entry(&self) -> f64 {
        self.free_entries().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.free_entries().fold(f64::INFINITY, f64::min)
    }
}

/// Default entrywise box bound `10·max(1, max X)^{1/(m+1)}` for `m` loading
/// matrices.
pub fn default_box_bound(data: &DenseTensor, num_loadings: usize) -> f64 {
    10.0 * data.max_entry().max(1.0).powf(1.0 / (num_loadings as f64 + 1.0))
}

#[derive(Debug, Clone)]
pub struct NtfProblem {
    data: DenseTensor,
    rank: usize,
    box_bound: f64,
    mode: ModelMode,
    data_norm_sq: f64,
}

impl NtfProblem {
    /// `box_bound = None` selects [`default_box_bound`].
    pub fn new(data: DenseTensor, rank: usize, mode: ModelMode, box_bound: Option<f64>) -> Result<Self> {
        if !data.is_nonnegative() {
            return Err(Error::InvalidArgument("data tensor has negative entries".into()));
        }
        if rank == 0 {
            return Err(Error::InvalidArgument("rank must be positive".into()));
        }
        if data.ndim() < 2 {
            return Err(Error::Shape(format!(
                "factorization needs at least 2 data modes, got {}",
                data.ndim()
            )));
        }
        let num_loadings = match mode {
            ModelMode::General => data.ndim() - 1,
            ModelMode::CpAbsorbed => data.ndim(),
        };
        let box_bound = box_bound.unwrap_or_else(|| default_box_bound(&data, num_loadings));
        if !(box_bound > 0.0 && box_bound.is_finite()) {
            return Err(Error::InvalidArgument(format!("box bound must be positive, got {box_bound}")));
        }
        let data_norm_sq = data.data().iter().map(|v| v * v).sum();
        Ok(Self {
            data,
            rank,
            box_bound,
            mode,
            data_norm_sq,
        })
    }

    pub fn data(&self) -> &DenseTensor {
        &self.data
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn box_bound(&self) -> f64 {
        self.box_bound
    }

    pub fn mode(&self) -> ModelMode {
        self.mode
    }

    pub fn data_norm(&self) -> f64 {
        self.data_norm_sq.sqrt()
    }

    /// Block variables in update order: `U^(1), …, U^(m)` then `Hᵀ` in
    /// general mode.
    pub fn theta_from_model(&self, model: &FactorModel) -> Result<Vec<Matrix>> {
        if model.mode != self.mode {
            return Err(Error::InvalidArgument(format!(
                "model mode {:?} does not match problem mode {:?}",
                model.mode, self.mode
            )));
        }
        let mut theta = model.factors.clone();
        if self.mode == ModelMode::General {
            theta.push(model.code.transpose());
        }
        self.check_theta(&theta)?;
        Ok(theta)
    }

    pub fn model_from_theta(&self, theta: &[Matrix]) -> Result<FactorModel> {
        self.check_theta(theta)?;
        Ok(match self.mode {
            ModelMode::General => {
                let (code_t, factors) = theta.split_last().expect("checked");
                FactorModel::general(factors.to_vec(), code_t.transpose())
            }
            ModelMode::CpAbsorbed => FactorModel::cp(theta.to_vec())?,
        })
    }

    fn check_theta(&self, theta: &[Matrix]) -> Result<()> {
        if theta.len() != self.data.ndim() {
            return Err(Error::Shape(format!(
                "{} blocks for a {}-mode data tensor",
                theta.len(),
                self.data.ndim()
            )));
        }
        for (k, (block, &d)) in theta.iter().zip(self.data.shape()).enumerate() {
            if block.shape() != (d, self.rank) {
                return Err(Error::Shape(format!(
                    "block {k} is {}x{}, expected {d}x{}",
                    block.rows(),
                    block.cols(),
                    self.rank
                )));
            }
        }
        Ok(())
    }

    /// Squared reconstruction error `‖X − X̂‖²_F` of a model.
    pub fn objective(&self, model: &FactorModel) -> Result<f64> {
        let theta = self.theta_from_model(model)?;
        self.theta_objective(&theta)
    }

    pub fn reconstruction_error(&self, model: &FactorModel) -> Result<f64> {
        Ok(self.objective(model)?.sqrt())
    }

    fn theta_objective(&self, theta: &[Matrix]) -> Result<f64> {
        self.check_theta(theta)?;
        let mut data = self.data.data().iter();
        let mut total = 0.0;
        for_each_cp_entry(theta, |v| {
            let x = data.next().expect("shapes checked");
            total += (x - v) * (x - v);
        })?;
        Ok(total)
    }

    /// Normal-equation form of block `block`: Gram `G = ⊙_{j≠i} U_jᵀU_j`,
    /// linear term `B = mttkrp(X, θ, i)`, constant `‖X‖²_F`.
    pub fn block_normal_data(&self, model: &FactorModel, block: usize) -> Result<QuadraticBlockSubproblem> {
        let theta = self.theta_from_model(model)?;
        self.theta_block_normal_data(&theta, block)
    }

    fn theta_block_normal_data(&self, theta: &[Matrix], block: usize) -> Result<QuadraticBlockSubproblem> {
        if block >= theta.len() {
            return Err(Error::BlockOutOfRange {
                block,
                num_blocks: theta.len(),
            });
        }
        self.check_theta(theta)?;
        let mut gram = Matrix::filled(self.rank, self.rank, 1.0);
        for (j, u) in theta.iter().enumerate() {
            if j != block {
                gram = gram.hadamard(&u.gram())?;
            }
        }
        let linear = mttkrp(&self.data, theta, block)?;
        QuadraticBlockSubproblem::new(gram, linear, self.data_norm_sq)
    }

    /// Random feasible starting model with i.i.d. uniform `[0, scale]`
    /// entries drawn from `seed`.
    pub fn init_model(&self, seed: u64, scale: f64) -> Result<FactorModel> {
        init_factors(self.data.shape(), self.rank, seed, scale, self.box_bound, self.mode)
    }
}

impl BlockProblem for NtfProblem {
    fn num_blocks(&self) -> usize {
        self.data.ndim()
    }

    fn objective(&self, theta: &[Matrix]) -> Result<f64> {
        self.theta_objective(theta)
    }

    fn block_subproblem(&self, theta: &[Matrix], block: usize) -> Result<QuadraticBlockSubproblem> {
        self.theta_block_normal_data(theta, block)
    }

    fn block_bounds(&self, _block: usize) -> (f64, f64) {
        (0.0, self.box_bound)
    }

    fn full_gradient(&self, theta: &[Matrix]) -> Result<Vec<Matrix>> {
        (0..theta.len())
            .map(|i| {
                let q = self.theta_block_normal_data(theta, i)?;
                Ok(q.gradient(&theta[i]))
            })
            .collect()
    }

    fn block_cost(&self, block: usize) -> f64 {
        let r = self.rank as f64;
        let n = self.data.len() as f64;
        let grams: f64 = self
            .data
            .shape()
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != block)
            .map(|(_, &d)| d as f64 * r * r)
            .sum();
        2.0 * n * r + grams
    }
}

/// Factors with i.i.d. uniform `[0, scale]` entries, deterministic in `seed`.
/// `shape` is the data shape (including the trailing `T` mode in general
/// mode).
pub fn init_factors(
    shape: &[usize],
    rank: usize,
    seed: u64,
    scale: f64,
    box_bound: f64,
    mode: ModelMode,
) -> Result<FactorModel> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("init scale must be positive, got {scale}")));
    }
    if scale > box_bound {
        return Err(Error::InvalidArgument(format!(
            "init scale {scale} exceeds the box bound {box_bound}"
        )));
    }
    if rank == 0 || shape.is_empty() {
        return Err(Error::InvalidArgument("rank and shape must be nonempty".into()));
    }
    let mut rng = Uniform::new(seed, INIT_STREAM);
    let mut draw = |rows: usize, cols: usize| Matrix::from_fn(rows, cols, |_, _| scale * rng.next_f64());
    match mode {
        ModelMode::CpAbsorbed => FactorModel::cp(shape.iter().map(|&d| draw(d, rank)).collect()),
        ModelMode::General => {
            let (&t, dims) = shape
                .split_last()
                .filter(|(_, dims)| !dims.is_empty())
                .ok_or_else(|| Error::Shape("general mode needs at least two data modes".into()))?;
            let factors = dims.iter().map(|&d| draw(d, rank)).collect();
            let code = draw(rank, t);
            Ok(FactorModel::general(factors, code))
        }
    }
}

/// Default denominator guard of the multiplicative update.
pub const MU_EPS: f64 = 1e-12;

/// One multiplicative-update sweep, `U ← U ⊙ B ⊘ (U G + ε)` block by block,
/// clamped to the box bound.
pub fn mu_sweep(problem: &NtfProblem, theta: &[Matrix], eps: f64) -> Result<Vec<Matrix>> {
    let mut current = theta.to_vec();
    for i in 0..current.len() {
        let q = problem.theta_block_normal_data(&current, i)?;
        let ug = current[i].matmul(q.gram())?;
        let m = problem.box_bound;
        let u = &current[i];
        let updated = Matrix::from_fn(u.rows(), u.cols(), |a, b| {
            let v = u.get(a, b);
            if v == 0.0 {
                return 0.0;
            }
            (v * q.linear().get(a, b) / (ug.get(a, b) + eps)).clamp(0.0, m)
        });
        current[i] = updated;
    }
    Ok(current)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuConfig {
    pub max_sweeps: u64,
    pub max_seconds: f64,
    pub eps: f64,
    pub clock: Clock,
    pub record_trace: bool,
}

impl Default for MuConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 100,
            max_seconds: f64::INFINITY,
            eps: MU_EPS,
            clock: Clock::Wall,
            record_trace: true,
        }
    }
}

/// Multiplicative-update baseline with the same trace format as
/// [`crate::bcd::run`]. Radius is reported as infinite.
pub fn run_mu(problem: &NtfProblem, theta0: &[Matrix], cfg: &MuConfig) -> Result<RunResult> {
    if cfg.max_sweeps == 0 || !(cfg.max_seconds > 0.0) || !(cfg.eps > 0.0) {
        return Err(Error::InvalidArgument(
            "MU needs max_sweeps ≥ 1, max_seconds > 0 and eps > 0".into(),
        ));
    }
    if theta0.iter().any(|b| b.data().iter().any(|&v| v < 0.0)) {
        return Err(Error::Infeasible("MU start has negative entries".into()));
    }
    let mut trace = vec![initial_record(problem, theta0)?];
    let mut theta = theta0.to_vec();
    let mut elapsed = 0.0;
    let mut sq_total = 0.0;
    for n in 1..=cfg.max_sweeps {
        let mut timer = SweepTimer::start(cfg.clock);
        let next = mu_sweep(problem, &theta, cfg.eps)?;
        for (i, b) in next.iter().enumerate() {
            let (d, r) = b.shape();
            timer.add_work(problem.block_cost(i) + 2.0 * (d * r * r) as f64);
        }
        elapsed += timer.seconds();

        let objective = BlockProblem::objective(problem, &next)?;
        if !objective.is_finite() {
            return Err(Error::NonFinite(format!("MU objective after sweep {n} is {objective}")));
        }
        let steps: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a.distance(b)).collect();
        sq_total += steps.iter().map(|s| s * s).sum::<f64>();
        let rec = TraceRecord {
            n,
            objective,
            block_step_norms: steps,
            radius: f64::INFINITY,
            stationarity: crate::bcd::stationarity_measure(problem, &next)?,
            point_class: PointClass::Long,
            elapsed_seconds: elapsed,
            cumulative_sq_steps: sq_total,
        };
        theta = next;
        if !cfg.record_trace && trace.len() > 1 {
            trace.pop();
        }
        trace.push(rec);
        if elapsed >= cfg.max_seconds {
            break;
        }
    }
    Ok(RunResult { theta, trace })
}
