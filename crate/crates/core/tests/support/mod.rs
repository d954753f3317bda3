//! Independent reference computations used by the integration tests.
//!
//! Nothing here calls into the kernels being checked except for plain data
//! access on `Matrix` / `DenseTensor`.
#![allow(dead_code)]

use bcddr::{DenseTensor, Matrix};

/// SplitMix64; test-only instance generator, separate from the library RNG.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn index(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn matrix(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| self.range(lo, hi))
    }

    pub fn tensor(&mut self, shape: &[usize], lo: f64, hi: f64) -> DenseTensor {
        let len = shape.iter().product();
        let data = (0..len).map(|_| self.range(lo, hi)).collect();
        DenseTensor::new(shape.to_vec(), data).unwrap()
    }
}

/// All multi-indices of `shape` in row-major order.
pub fn multi_indices(shape: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &d in shape {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..d).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect();
    }
    out
}

/// Mode-k unfolding straight from the definition: column index
/// `Σ_{j≠k} i_j · ∏_{l<j, l≠k} d_l`.
pub fn brute_unfold(t: &DenseTensor, k: usize) -> Vec<Vec<f64>> {
    let shape = t.shape();
    let cols: usize = shape.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &d)| d).product();
    let mut out = vec![vec![f64::NAN; cols]; shape[k]];
    for idx in multi_indices(shape) {
        let mut col = 0;
        let mut stride = 1;
        for (j, &i) in idx.iter().enumerate() {
            if j == k {
                continue;
            }
            col += i * stride;
            stride *= shape[j];
        }
        out[idx[k]][col] = t.get(&idx);
    }
    out
}

/// `out[(ia, ib), j] = a[ia, j] · b[ib, j]` by a four-index loop.
pub fn brute_khatri_rao(a: &Matrix, b: &Matrix) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; a.cols()]; a.rows() * b.rows()];
    for ia in 0..a.rows() {
        for ib in 0..b.rows() {
            for j in 0..a.cols() {
                out[ia * b.rows() + ib][j] = a.get(ia, j) * b.get(ib, j);
            }
        }
    }
    out
}

/// `M(i_k, j) = Σ_{all other indices} X(i) ∏_{l≠k} U_l(i_l, j)`.
pub fn brute_mttkrp(t: &DenseTensor, factors: &[Matrix], k: usize) -> Vec<Vec<f64>> {
    let r = factors.iter().enumerate().find(|&(j, _)| j != k).map_or(factors[k].cols(), |(_, f)| f.cols());
    let mut out = vec![vec![0.0; r]; t.shape()[k]];
    for idx in multi_indices(t.shape()) {
        for j in 0..r {
            let mut p = t.get(&idx);
            for (l, &i) in idx.iter().enumerate() {
                if l != k {
                    p *= factors[l].get(i, j);
                }
            }
            out[idx[k]][j] += p;
        }
    }
    out
}

/// Entry `(i_1, …, i_m, t) = Σ_j ∏ U_l(i_l, j) · H(j, t)`.
pub fn brute_cp_reconstruct(factors: &[Matrix], code: &Matrix) -> DenseTensor {
    let mut shape: Vec<usize> = factors.iter().map(|f| f.rows()).collect();
    shape.push(code.cols());
    DenseTensor::from_fn(shape, |idx| {
        let (t, rest) = idx.split_last().unwrap();
        (0..code.rows())
            .map(|j| {
                rest.iter().enumerate().map(|(l, &i)| factors[l].get(i, j)).product::<f64>() * code.get(j, *t)
            })
            .sum()
    })
}

pub fn matrix_close(m: &Matrix, want: &[Vec<f64>], tol: f64) -> bool {
    m.rows() == want.len()
        && (0..m.rows()).all(|i| {
            want[i].len() == m.cols()
                && (0..m.cols()).all(|j| (m.get(i, j) - want[i][j]).abs() <= tol * (1.0 + want[i][j].abs()))
        })
}

/// Box `[lo, hi]^n` intersected with the ball `‖x − c‖ ≤ r`.
#[derive(Clone, Debug)]
pub struct GridSet {
    pub lo: f64,
    pub hi: f64,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl GridSet {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| v >= self.lo && v <= self.hi)
            && (self.radius.is_infinite()
                || x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= self.radius * self.radius)
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        self.center
            .iter()
            .map(|&c| {
                let (a, b) = if self.radius.is_infinite() {
                    (self.lo, self.hi)
                } else {
                    (c - self.radius, c + self.radius)
                };
                (a.max(self.lo), b.min(self.hi))
            })
            .collect()
    }
}

/// Grid search with refinement over a parameter box: a grid of spacing
/// `initial_step`, then repeated 5× refinement on a window of ±3 cells around
/// the incumbent until the spacing drops below `final_step`. `map` turns a
/// parameter vector into a feasible point or rejects it.
fn refine_search(
    bounds: &[(f64, f64)],
    initial_step: f64,
    final_step: f64,
    map: &dyn Fn(&[f64]) -> Option<Vec<f64>>,
    f: &dyn Fn(&[f64]) -> f64,
) -> Option<(Vec<f64>, f64)> {
    let mut window = bounds.to_vec();
    let mut step = initial_step;
    let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    loop {
        let axes: Vec<Vec<f64>> = window
            .iter()
            .map(|&(a, b)| {
                let n = ((b - a) / step).floor() as usize;
                let mut pts: Vec<f64> = (0..=n).map(|k| a + k as f64 * step).collect();
                if *pts.last().unwrap() < b {
                    pts.push(b);
                }
                pts
            })
            .collect();
        let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        for idx in multi_indices(&shape) {
            let t: Vec<f64> = idx.iter().enumerate().map(|(d, &i)| axes[d][i]).collect();
            let Some(x) = map(&t) else { continue };
            let v = f(&x);
            if best.as_ref().map_or(true, |(_, _, b)| v < *b) {
                best = Some((t, x, v));
            }
        }
        if step <= final_step {
            break;
        }
        let (t, _, _) = best.as_ref()?;
        window = t
            .iter()
            .zip(bounds)
            .map(|(&c, &(a, b))| ((c - 3.0 * step).max(a), (c + 3.0 * step).min(b)))
            .collect();
        step /= 5.0;
    }
    best.map(|(_, x, v)| (x, v))
}

/// Minimizes `f` over a ≤3-dimensional `GridSet` by grid search.
///
/// The feasible set is split into strata that each have a flat
/// parameterization: the box part of the ball (axis-aligned grid), the sphere
/// (angles), the sphere cut by one box face (circle angle, or two points in
/// 2-D) and the sphere cut by two faces (points). Each stratum is searched on
/// a refining grid and the best value over all strata is returned.
pub fn grid_minimize(set: &GridSet, initial_step: f64, final_step: f64, f: impl Fn(&[f64]) -> f64) -> (Vec<f64>, f64) {
    let dim = set.center.len();
    assert!((1..=3).contains(&dim));
    let f: &dyn Fn(&[f64]) -> f64 = &f;
    let in_box = |x: &[f64]| x.iter().all(|&v| v >= set.lo - 1e-12 && v <= set.hi + 1e-12);
    let clip = |x: Vec<f64>| -> Vec<f64> { x.into_iter().map(|v| v.clamp(set.lo, set.hi)).collect() };
    let mut candidates: Vec<(Vec<f64>, f64)> = Vec::new();

    let bounds = set.bounds();
    let interior = |t: &[f64]| set.contains(t).then(|| t.to_vec());
    candidates.extend(refine_search(&bounds, initial_step, final_step, &interior, f));

    if set.radius.is_finite() {
        let (c, r) = (&set.center, set.radius);
        let angle_step = initial_step / r;
        let angle_final = final_step / r;
        match dim {
            1 => {
                for x in [c[0] - r, c[0] + r] {
                    if in_box(&[x]) {
                        candidates.push((vec![x], f(&[x])));
                    }
                }
            }
            2 => {
                let sphere = |t: &[f64]| {
                    let x = vec![c[0] + r * t[0].cos(), c[1] + r * t[0].sin()];
                    in_box(&x).then(|| clip(x))
                };
                let b = [(0.0, std::f64::consts::TAU)];
                candidates.extend(refine_search(&b, angle_step, angle_final, &sphere, f));
                for i in 0..2 {
                    let j = 1 - i;
                    for v in [set.lo, set.hi] {
                        let h = r * r - (v - c[i]).powi(2);
                        if h < 0.0 {
                            continue;
                        }
                        for s in [-1.0, 1.0] {
                            let mut x = vec![0.0; 2];
                            x[i] = v;
                            x[j] = c[j] + s * h.sqrt();
                            if in_box(&x) {
                                let x = clip(x);
                                candidates.push((x.clone(), f(&x)));
                            }
                        }
                    }
                }
            }
            _ => {
                let sphere = |t: &[f64]| {
                    let x = vec![
                        c[0] + r * t[0].sin() * t[1].cos(),
                        c[1] + r * t[0].sin() * t[1].sin(),
                        c[2] + r * t[0].cos(),
                    ];
                    in_box(&x).then(|| clip(x))
                };
                let b = [(0.0, std::f64::consts::PI), (0.0, std::f64::consts::TAU)];
                candidates.extend(refine_search(&b, angle_step, angle_final, &sphere, f));
                for i in 0..3 {
                    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                    for v in [set.lo, set.hi] {
                        let h = r * r - (v - c[i]).powi(2);
                        if h < 0.0 {
                            continue;
                        }
                        let rho = h.sqrt();
                        let circle = |t: &[f64]| {
                            let mut x = vec![0.0; 3];
                            x[i] = v;
                            x[j] = c[j] + rho * t[0].cos();
                            x[k] = c[k] + rho * t[0].sin();
                            in_box(&x).then(|| clip(x))
                        };
                        let step = initial_step / rho.max(1e-12);
                        let fin = final_step / rho.max(1e-12);
                        candidates.extend(refine_search(&[(0.0, std::f64::consts::TAU)], step, fin, &circle, f));
                        for w in [set.lo, set.hi] {
                            let h2 = h - (w - c[j]).powi(2);
                            if h2 < 0.0 {
                                continue;
                            }
                            for s in [-1.0, 1.0] {
                                let mut x = vec![0.0; 3];
                                x[i] = v;
                                x[j] = w;
                                x[k] = c[k] + s * h2.sqrt();
                                if in_box(&x) {
                                    let x = clip(x);
                                    candidates.push((x.clone(), f(&x)));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    candidates
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("feasible set is nonempty")
}

/// Euclidean projection onto box ∩ ball via its KKT conditions: the
/// projection is `clamp((p + λc)/(1 + λ))` for the smallest `λ ≥ 0` that puts
/// it inside the ball; `λ` is found by bisection.
pub fn kkt_projection(p: &[f64], set: &GridSet) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> {
        p.iter()
            .zip(&set.center)
            .map(|(&pi, &ci)| ((pi + lambda * ci) / (1.0 + lambda)).clamp(set.lo, set.hi))
            .collect()
    };
    let dist = |z: &[f64]| z.iter().zip(&set.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let z0 = at(0.0);
    if set.radius.is_infinite() || dist(&z0) <= set.radius {
        return z0;
    }
    let mut hi = 1.0;
    while dist(&at(hi)) > set.radius {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dist(&at(mid)) > set.radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(hi)
}

/// `min_{d feasible, ‖d‖=1} ∇f·d` for a 2-variable box, by sampling
/// `samples` directions on the unit circle. Feasible means moving a small
/// distance along `d` stays in the box.
pub fn min_directional_derivative_2d(x: [f64; 2], grad: [f64; 2], lo: f64, hi: f64, samples: usize) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0..samples {
        let a = std::f64::consts::TAU * k as f64 / samples as f64;
        let d = [a.cos(), a.sin()];
        let feasible = (0..2).all(|i| {
            let at_lo = x[i] <= lo && d[i] < -1e-15;
            let at_hi = x[i] >= hi && d[i] > 1e-15;
            !(at_lo || at_hi)
        });
        if feasible {
            best = best.min(grad[0] * d[0] + grad[1] * d[1]);
        }
    }
    best
}

/// Central finite-difference gradient of `f` over a list of matrices, with
/// step `h_rel · max(1, |θ_ij|)`.
pub fn fd_gradient(theta: &[Matrix], h_rel: f64, f: impl Fn(&[Matrix]) -> f64) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(theta.len());
    let mut work = theta.to_vec();
    for b in 0..theta.len() {
        let (rows, cols) = theta[b].shape();
        let mut g = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let x = theta[b].get(i, j);
                let h = h_rel * x.abs().max(1.0);
                work[b].set(i, j, x + h);
                let fp = f(&work);
                work[b].set(i, j, x - h);
                let fm = f(&work);
                work[b].set(i, j, x);
                g.set(i, j, (fp - fm) / (2.0 * h));
            }
        }
        out.push(g);
    }
    out
}

pub fn vec_to_matrix(v: &[f64], rows: usize, cols: usize) -> Matrix {
    Matrix::new(rows, cols, v.to_vec()).unwrap()
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
