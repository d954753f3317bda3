//! Mean ± standard deviation of reconstruction error over runs, on a common
//! time grid.

/// One run's `(elapsed seconds, reconstruction error)` series, in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub algorithm: String,
    pub run: usize,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmCurve {
    pub algorithm: String,
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
    pub n_runs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurve {
    pub bins: Vec<f64>,
    pub curves: Vec<AlgorithmCurve>,
    /// Runs skipped because their trace was empty.
    pub warnings: Vec<String>,
}

impl AggregateCurve {
    pub fn is_empty(&self) -> bool {
        self.bins.is_empty() || self.curves.is_empty()
    }

    /// Rows of the aggregate CSV, algorithm by algorithm.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("elapsed_s,algorithm,mean_error,std_error,n_runs\n");
        for c in &self.curves {
            for (k, t) in self.bins.iter().enumerate() {
                s.push_str(&format!(
                    "{:.16e},{},{:.16e},{:.16e},{}\n",
                    t, c.algorithm, c.mean[k], c.std[k], c.n_runs[k]
                ));
            }
        }
        s
    }
}

/// `count` evenly spaced times from 0 to `t_max` inclusive (a single bin at
/// 0 when `t_max` is 0).
pub fn time_bins(t_max: f64, count: usize) -> Vec<f64> {
    if !(t_max > 0.0) || count < 2 {
        return vec![0.0];
    }
    (0..count).map(|k| t_max * k as f64 / (count - 1) as f64).collect()
}

/// Value of the last point at or before `t`; `None` before the first point.
fn carried_forward(points: &[(f64, f64)], t: f64) -> Option<f64> {
    let idx = points.partition_point(|&(s, _)| s <= t);
    (idx > 0).then(|| points[idx - 1].1)
}

/// Resamples each run onto `bins` by last observation carried forward and
/// averages per algorithm. Algorithms keep their first-appearance order.
/// Runs contribute to a bin only once they have a point at or before it.
pub fn aggregate_runs(traces: &[RunTrace], bins: &[f64]) -> AggregateCurve {
    let mut warnings = Vec::new();
    let mut order: Vec<&str> = Vec::new();
    for t in traces {
        if t.points.is_empty() {
            warnings.push(format!("{} run {} has an empty trace and was skipped", t.algorithm, t.run));
        } else if !order.contains(&t.algorithm.as_str()) {
            order.push(&t.algorithm);
        }
    }
    let curves = order
        .into_iter()
        .map(|alg| {
            let runs: Vec<&RunTrace> = traces
                .iter()
                .filter(|t| t.algorithm == alg && !t.points.is_empty())
                .collect();
            let mut mean = Vec::with_capacity(bins.len());
            let mut std = Vec::with_capacity(bins.len());
            let mut n_runs = Vec::with_capacity(bins.len());
            for &b in bins {
                let vals: Vec<f64> = runs.iter().filter_map(|r| carried_forward(&r.points, b)).collect();
                let n = vals.len();
                if n == 0 {
                    mean.push(f64::NAN);
                    std.push(f64::NAN);
                } else {
                    let m = vals.iter().sum::<f64>() / n as f64;
                    let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
                    mean.push(m);
                    std.push(var.sqrt());
                }
                n_runs.push(n);
            }
            AlgorithmCurve {
                algorithm: alg.to_string(),
                mean,
                std,
                n_runs,
            }
        })
        .collect();
    AggregateCurve {
        bins: bins.to_vec(),
        curves,
        warnings,
    }
}
