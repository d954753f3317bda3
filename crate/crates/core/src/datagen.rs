//! Seeded synthetic data: exact low-rank nonnegative CP tensors and a sparse
//! nonnegative surrogate for tf-idf style count data.

use crate::error::{Error, Result};
use crate::factorization::FactorModel;
use crate::rng::{Uniform, DATA_STREAM, NOISE_STREAM};
use crate::tensor::{cp_full, DenseTensor, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub dims: Vec<usize>,
    pub rank: usize,
    pub seed: u64,
    pub noise_level: f64,
    /// Fraction of nonzero entries (surrogate only).
    pub density: f64,
    /// Mean absolute entry value (surrogate only).
    pub target_mean_abs: f64,
}

impl SynthSpec {
    pub fn lowrank(dims: Vec<usize>, rank: usize, seed: u64) -> Self {
        Self {
            dims,
            rank,
            seed,
            noise_level: 0.0,
            density: 1.0,
            target_mean_abs: 1.0,
        }
    }

    pub fn surrogate(dims: Vec<usize>, seed: u64, density: f64, target_mean_abs: f64) -> Self {
        Self {
            dims,
            rank: 1,
            seed,
            noise_level: 0.0,
            density,
            target_mean_abs,
        }
    }

    fn check_dims(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::InvalidArgument(format!("dims must be positive, got {:?}", self.dims)));
        }
        Ok(())
    }
}

/// Ground-truth factors `V_k` with i.i.d. uniform `[0, 1)` entries and the
/// tensor `Out(V_1, …, V_m)`. Optional noise is Gaussian with standard
/// deviation `noise_level·‖X‖_F/√N`, clamped at zero afterwards.
pub fn synthetic_lowrank(spec: &SynthSpec) -> Result<(DenseTensor, FactorModel)> {
    spec.check_dims()?;
    let min_dim = spec.dims.iter().copied().min().unwrap_or(0);
    if spec.rank == 0 || spec.rank > min_dim {
        return Err(Error::InvalidArgument(format!(
            "rank {} must lie in 1..={min_dim}",
            spec.rank
        )));
    }
    if !(spec.noise_level >= 0.0 && spec.noise_level.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise level {} is invalid", spec.noise_level)));
    }
    let mut rng = Uniform::new(spec.seed, DATA_STREAM);
    let factors: Vec<Matrix> = spec
        .dims
        .iter()
        .map(|&d| Matrix::from_fn(d, spec.rank, |_, _| rng.next_f64()))
        .collect();
    let mut tensor = cp_full(&factors)?;
    if spec.noise_level > 0.0 {
        let sigma = spec.noise_level * tensor.frobenius_norm() / (tensor.len() as f64).sqrt();
        let mut noise = Uniform::new(spec.seed, NOISE_STREAM);
        let data = tensor
            .data()
            .iter()
            .map(|&v| (v + sigma * standard_normal(&mut noise)).max(0.0))
            .collect();
        tensor = DenseTensor::new(spec.dims.clone(), data)?;
    }
    Ok((tensor, FactorModel::cp(factors)?))
}

/// Box-Muller, one draw per call.
fn standard_normal(rng: &mut Uniform) -> f64 {
    let u1 = rng.next_f64_open_closed();
    let u2 = rng.next_f64();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Sparse nonnegative tensor: each entry is nonzero with probability
/// `density`, nonzero magnitudes are exponential and rescaled so the mean
/// absolute entry equals `target_mean_abs`. A draw without any nonzero entry
/// yields the zero tensor.
pub fn sparse_surrogate(spec: &SynthSpec) -> Result<DenseTensor> {
    spec.check_dims()?;
    if !(spec.density > 0.0 && spec.density <= 1.0) {
        return Err(Error::InvalidArgument(format!("density {} outside (0, 1]", spec.density)));
    }
    if !(spec.target_mean_abs > 0.0 && spec.target_mean_abs.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "target mean {} must be positive",
            spec.target_mean_abs
        )));
    }
    let len: usize = spec.dims.iter().product();
    let mut rng = Uniform::new(spec.seed, DATA_STREAM);
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        let keep = rng.next_f64() < spec.density;
        let magnitude = -rng.next_f64_open_closed().ln();
        data.push(if keep { magnitude } else { 0.0 });
    }
    let mean = data.iter().sum::<f64>() / len as f64;
    if mean > 0.0 {
        let s = spec.target_mean_abs / mean;
        data.iter_mut().for_each(|v| *v *= s);
    }
    DenseTensor::new(spec.dims.clone(), data)
}
