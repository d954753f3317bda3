//! Diminishing search-radius schedules `r_n = c'·w_n`.

use crate::error::{Error, Result};

/// Shape of the weight sequence `w_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    /// `w_n = n^{-β} / ln(n + log_offset)`, clamped into `(0, 1]`.
    PowerLog,
    /// `w_n = n^{-β}`.
    Power,
    /// `w_n = value` for every `n`, clamped into `(0, 1]`.
    Constant { value: f64 },
    /// No radius restriction: plain block coordinate descent (ALS).
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusSchedule {
    kind: ScheduleKind,
    beta: f64,
    c_prime: f64,
    log_offset: u32,
}

impl Default for RadiusSchedule {
    fn default() -> Self {
        Self {
            kind: ScheduleKind::PowerLog,
            beta: 1.0,
            c_prime: 1e5,
            log_offset: 1,
        }
    }
}

impl RadiusSchedule {
    pub fn new(kind: ScheduleKind, beta: f64, c_prime: f64, log_offset: u32) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidArgument(format!("beta must lie in (0, 1], got {beta}")));
        }
        if !(c_prime > 0.0 && c_prime.is_finite()) {
            return Err(Error::InvalidArgument(format!("c_prime must be positive and finite, got {c_prime}")));
        }
        if log_offset == 0 {
            return Err(Error::InvalidArgument("log_offset must be at least 1".into()));
        }
        if let ScheduleKind::Constant { value } = kind {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidArgument(format!("constant weight must be positive, got {value}")));
            }
        }
        Ok(Self {
            kind,
            beta,
            c_prime,
            log_offset,
        })
    }

    pub fn power_log(beta: f64, c_prime: f64) -> Result<Self> {
        Self::new(ScheduleKind::PowerLog, beta, c_prime, 1)
    }

    pub fn power(beta: f64, c_prime: f64) -> Result<Self> {
        Self::new(ScheduleKind::Power, beta, c_prime, 1)
    }

    pub fn constant(value: f64, c_prime: f64) -> Result<Self> {
        Self::new(ScheduleKind::Constant { value }, 1.0, c_prime, 1)
    }

    pub fn infinite() -> Self {
        Self {
            kind: ScheduleKind::Infinite,
            ..Self::default()
        }
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c_prime(&self) -> f64 {
        self.c_prime
    }

    pub fn log_offset(&self) -> u32 {
        self.log_offset
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.kind, ScheduleKind::Infinite)
    }

    /// Weight `w_n ∈ (0, 1]`. Sweeps are numbered from 1.
    pub fn weight(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidArgument("sweep index must be at least 1".into()));
        }
        Ok(self.weight_unchecked(n as f64))
    }

    fn weight_unchecked(&self, n: f64) -> f64 {
        let raw = match self.kind {
            ScheduleKind::PowerLog => n.powf(-self.beta) / (n + f64::from(self.log_offset)).ln(),
            ScheduleKind::Power => n.powf(-self.beta),
            ScheduleKind::Constant { value } => value,
            ScheduleKind::Infinite => 1.0,
        };
        raw.clamp(f64::MIN_POSITIVE, 1.0)
    }

    /// Search radius `c'·w_n`, or `f64::INFINITY` for the infinite kind.
    pub fn radius(&self, n: u64) -> Result<f64> {
        let w = self.weight(n)?;
        if self.is_infinite() {
            return Ok(f64::INFINITY);
        }
        Ok(self.c_prime * w)
    }

    /// Checks the two hypotheses on the weights, `Σ w_n = ∞` and
    /// `Σ w_n² < ∞`.
    ///
    /// Non-summability is known analytically for every finite kind; the
    /// partial sum up to `horizon` is reported as numeric evidence and
    /// compared against `growth_target`. The square-sum bound is the exact
    /// head `Σ_{n≤horizon} w_n²` plus an integral bound on the tail.
    pub fn validate_summability(&self, horizon: u64, growth_target: f64) -> SummabilityReport {
        let horizon = horizon.max(2);
        let mut partial_sum = 0.0;
        let mut square_partial_sum = 0.0;
        for n in 1..=horizon {
            let w = self.weight_unchecked(n as f64);
            partial_sum += w;
            square_partial_sum += w * w;
        }

        let n0 = horizon as f64;
        let a = f64::from(self.log_offset);
        let tail = match self.kind {
            ScheduleKind::PowerLog if self.beta >= 0.5 => {
                // x^{-2β} ≤ 1/x ≤ (1 + a/n0)/(x + a) on [n0, ∞)
                let harmonic_log = (1.0 + a / n0) / (n0 + a).ln();
                if self.beta > 0.5 {
                    let power = n0.powf(1.0 - 2.0 * self.beta)
                        / ((2.0 * self.beta - 1.0) * (n0 + a).ln().powi(2));
                    harmonic_log.min(power)
                } else {
                    harmonic_log
                }
            }
            ScheduleKind::Power if self.beta > 0.5 => n0.powf(1.0 - 2.0 * self.beta) / (2.0 * self.beta - 1.0),
            _ => f64::INFINITY,
        };

        let mut violations = Vec::new();
        if self.is_infinite() {
            violations.push(Hypothesis::NonSummable);
        }
        if tail.is_infinite() {
            violations.push(Hypothesis::SquareSummable);
        }

        SummabilityReport {
            horizon,
            partial_sum,
            growth_target,
            exceeds_growth_target: partial_sum > growth_target,
            square_partial_sum,
            square_sum_bound: square_partial_sum + tail,
            violations,
        }
    }
}

/// One of the two weight hypotheses required for convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// `Σ w_n = ∞`
    NonSummable,
    /// `Σ w_n² < ∞`
    SquareSummable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummabilityReport {
    pub horizon: u64,
    /// `Σ_{n≤horizon} w_n`: numeric evidence of divergence.
    pub partial_sum: f64,
    pub growth_target: f64,
    pub exceeds_growth_target: bool,
    pub square_partial_sum: f64,
    /// Upper bound on `Σ_{n≥1} w_n²`; infinite when the series diverges.
    pub square_sum_bound: f64,
    /// Hypotheses the schedule kind violates analytically.
    pub violations: Vec<Hypothesis>,
}

impl SummabilityReport {
    pub fn satisfies_hypotheses(&self) -> bool {
        self.violations.is_empty()
    }
}
