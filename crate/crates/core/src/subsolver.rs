//! Convex quadratic block sub-problems over the intersection of a box and a
//! Frobenius ball, solved by projected gradient with Dykstra projections.

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// `q(U) = tr(U G Uᵀ) − 2 tr(U Bᵀ) + c` for `U ∈ ℝ^{d×r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticBlockSubproblem {
    gram: Matrix,
    linear: Matrix,
    constant: f64,
}

impl QuadraticBlockSubproblem {
    pub fn new(gram: Matrix, linear: Matrix, constant: f64) -> Result<Self> {
        let r = gram.rows();
        if gram.cols() != r || linear.cols() != r {
            return Err(Error::Shape(format!(
                "gram is {}x{}, linear term is {}x{}",
                gram.rows(),
                gram.cols(),
                linear.rows(),
                linear.cols()
            )));
        }
        let scale = 1.0 + gram.max_abs();
        for i in 0..r {
            for j in 0..i {
                if (gram.get(i, j) - gram.get(j, i)).abs() > 1e-12 * scale {
                    return Err(Error::InvalidArgument(format!("gram is not symmetric at ({i}, {j})")));
                }
            }
        }
        if !constant.is_finite() {
            return Err(Error::NonFinite("sub-problem constant".into()));
        }
        Ok(Self { gram, linear, constant })
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn linear(&self) -> &Matrix {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Shape `(d, r)` of the block variable.
    pub fn block_shape(&self) -> (usize, usize) {
        self.linear.shape()
    }

    pub fn objective(&self, u: &Matrix) -> f64 {
        let ug = u.matmul(&self.gram).expect("block shape checked by caller");
        self.objective_with(u, &ug)
    }

    fn objective_with(&self, u: &Matrix, ug: &Matrix) -> f64 {
        u.dot(ug) - 2.0 * u.dot(&self.linear) + self.constant
    }

    /// `∇q(U) = 2(U G − B)`.
    pub fn gradient(&self, u: &Matrix) -> Matrix {
        let ug = u.matmul(&self.gram).expect("block shape checked by caller");
        gradient_from(&ug, &self.linear)
    }
}

fn gradient_from(ug: &Matrix, linear: &Matrix) -> Matrix {
    ug.sub(linear).expect("same shape").scale(2.0)
}

/// `{U : lower ≤ U ≤ upper entrywise, ‖U − center‖_F ≤ radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBallFeasibleSet {
    lower: f64,
    upper: f64,
    center: Matrix,
    radius: f64,
}

impl BoxBallFeasibleSet {
    /// `radius` may be `f64::INFINITY`; the center must lie in the box so the
    /// intersection is never empty.
    pub fn new(lower: f64, upper: f64, center: Matrix, radius: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::InvalidArgument(format!("empty box [{lower}, {upper}]")));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        if let Some(v) = center.data().iter().find(|&&v| v < lower || v > upper) {
            return Err(Error::Infeasible(format!("center entry {v} outside [{lower}, {upper}]")));
        }
        Ok(Self {
            lower,
            upper,
            center,
            radius,
        })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn center(&self) -> &Matrix {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn in_box(&self, u: &Matrix) -> bool {
        u.data().iter().all(|&v| v >= self.lower && v <= self.upper)
    }

    pub fn in_ball(&self, u: &Matrix, rel_slack: f64) -> bool {
        self.radius.is_infinite() || u.distance(&self.center) <= self.radius * (1.0 + rel_slack)
    }

    pub fn contains(&self, u: &Matrix) -> bool {
        u.shape() == self.center.shape() && self.in_box(u) && self.in_ball(u, 1e-12)
    }
}

pub fn project_box(p: &Matrix, lower: f64, upper: f64) -> Matrix {
    p.map(|v| v.clamp(lower, upper))
}

pub fn project_ball(p: &Matrix, center: &Matrix, radius: f64) -> Matrix {
    if radius.is_infinite() {
        return p.clone();
    }
    let dist = p.distance(center);
    if dist <= radius {
        return p.clone();
    }
    let t = radius / dist;
    Matrix::from_fn(p.rows(), p.cols(), |i, j| {
        let c = center.get(i, j);
        c + t * (p.get(i, j) - c)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Matrix,
    pub cycles: usize,
    /// False when Dykstra hit `max_cycles` before reaching `tol`.
    pub converged: bool,
    /// Dykstra did not converge and the point came from the multiplier search
    /// instead.
    pub fallback: bool,
}

/// Euclidean projection onto box ∩ ball.
///
/// Exact whenever one of the two constraints is inactive at the projection;
/// otherwise Dykstra's alternating scheme (box, then ball) is run to `tol`.
/// If Dykstra stalls at `max_cycles` (it is only sublinear when `p` is far
/// away), the projection is recomputed by a 1-D search on the ball multiplier.
/// The returned point is always feasible: it is pushed through the box and
/// then the ball, and since the center lies in the box the ball step keeps the
/// point in the box.
pub fn project_box_ball(p: &Matrix, set: &BoxBallFeasibleSet, tol: f64, max_cycles: usize) -> Projection {
    let exact = |point| Projection {
        point,
        cycles: 0,
        converged: true,
        fallback: false,
    };
    let boxed = project_box(p, set.lower, set.upper);
    if set.in_ball(&boxed, 0.0) {
        return exact(boxed);
    }
    let balled = project_ball(p, &set.center, set.radius);
    if set.in_box(&balled) {
        return exact(balled);
    }

    let (rows, cols) = p.shape();
    let mut x = p.clone();
    let mut box_corr = Matrix::zeros(rows, cols);
    let mut ball_corr = Matrix::zeros(rows, cols);
    let mut converged = false;
    let mut cycles = 0;
    while cycles < max_cycles {
        cycles += 1;
        let shifted = x.add(&box_corr).expect("same shape");
        let y = project_box(&shifted, set.lower, set.upper);
        box_corr = shifted.sub(&y).expect("same shape");
        let shifted = y.add(&ball_corr).expect("same shape");
        let x_new = project_ball(&shifted, &set.center, set.radius);
        ball_corr = shifted.sub(&x_new).expect("same shape");

        let change = x_new.distance(&x);
        let gap = x_new.distance(&y);
        x = x_new;
        if change <= tol && gap <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        x = multiplier_projection(p, set);
    }
    let point = project_ball(&project_box(&x, set.lower, set.upper), &set.center, set.radius);
    Projection {
        point,
        cycles,
        converged,
        fallback: !converged,
    }
}

/// Projection onto box ∩ ball when both constraints are active:
/// `x(λ) = clamp((p + λc)/(1 + λ))` with `λ > 0` chosen so `‖x(λ) − c‖ = r`.
/// The distance is nonincreasing in `λ`, so bisection finds it.
fn multiplier_projection(p: &Matrix, set: &BoxBallFeasibleSet) -> Matrix {
    let at = |lambda: f64| {
        let mut x = p.clone();
        for (v, &c) in x.data_mut().iter_mut().zip(set.center.data()) {
            *v = ((*v + lambda * c) / (1.0 + lambda)).clamp(set.lower, set.upper);
        }
        x
    };
    let outside = |lambda: f64| at(lambda).distance(&set.center) > set.radius;
    let (mut lo, mut hi) = (0.0, 1.0);
    while outside(hi) && hi < 1e300 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if outside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(hi)
}

/// Smallest value returned by [`lipschitz_estimate`].
pub const LIPSCHITZ_FLOOR: f64 = 1e-12;

/// Upper estimate of the gradient Lipschitz constant `2·λ_max(G)`, from power
/// iteration started at a fixed vector.
pub fn lipschitz_estimate(q: &QuadraticBlockSubproblem) -> f64 {
    2.0 * lambda_max(&q.gram)
}

fn lambda_max(g: &Matrix) -> f64 {
    let r = g.rows();
    if g.max_abs() == 0.0 {
        return LIPSCHITZ_FLOOR / 2.0;
    }
    // Gershgorin bound as a fallback and a ceiling.
    let gershgorin = (0..r)
        .map(|i| g.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);

    let mut v: Vec<f64> = (0..r).map(|i| 1.0 + 0.1 * i as f64).collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let w: Vec<f64> = (0..r)
            .map(|i| g.row(i).iter().zip(&v).map(|(a, b)| a * b).sum())
            .collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return gershgorin.max(LIPSCHITZ_FLOOR / 2.0);
        }
        let prev = lambda;
        lambda = norm;
        v = w.into_iter().map(|x| x / norm).collect();
        if (lambda - prev).abs() <= 1e-14 * lambda {
            break;
        }
    }
    (lambda * (1.0 + 1e-6)).min(gershgorin).max(LIPSCHITZ_FLOOR / 2.0)
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Solves `G x = b` for symmetric positive definite `G`; `None` when the
/// Cholesky factorization breaks down.
fn cholesky_solve_rows(g: &Matrix, rhs: &Matrix) -> Option<Matrix> {
    let r = g.rows();
    let mut l = vec![0.0; r * r];
    let scale = g.max_abs();
    for i in 0..r {
        for j in 0..=i {
            let mut s = g.get(i, j);
            for k in 0..j {
                s -= l[i * r + k] * l[j * r + k];
            }
            if i == j {
                if s <= 1e-12 * scale {
                    return None;
                }
                l[i * r + i] = s.sqrt();
            } else {
                l[i * r + j] = s / l[j * r + j];
            }
        }
    }
    // Each row u of the solution satisfies G uᵀ = bᵀ.
    let mut out = Matrix::zeros(rhs.rows(), r);
    let mut y = vec![0.0; r];
    for row in 0..rhs.rows() {
        let b = rhs.row(row);
        for i in 0..r {
            let s = b[i] - (0..i).map(|k| l[i * r + k] * y[k]).sum::<f64>();
            y[i] = s / l[i * r + i];
        }
        for i in (0..r).rev() {
            let s = y[i] - (i + 1..r).map(|k| l[k * r + i] * out.get(row, k)).sum::<f64>();
            out.set(row, i, s / l[i * r + i]);
        }
    }
    out.is_finite().then_some(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsolverOptions {
    /// Relative fixed-point residual tolerance.
    pub tol: f64,
    pub max_iters: usize,
    pub dykstra_tol: f64,
    pub max_cycles: usize,
    /// Try the projected unconstrained minimizer `Π(B G⁻¹)` as a starting
    /// point when it improves on the caller's start.
    pub warm_start: bool,
    /// Count iterations where the inner objective increased.
    pub check_monotone: bool,
}

impl Default for SubsolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 500,
            dykstra_tol: 1e-10,
            max_cycles: 2000,
            warm_start: true,
            check_monotone: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSolution {
    pub point: Matrix,
    pub objective: f64,
    /// `‖U − Π(U − ∇q(U)/L̂)‖_F` at the last iterate.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Some Dykstra projection stopped at `max_cycles` and fell back to the
    /// multiplier search.
    pub projection_warning: bool,
    /// Iterations whose objective exceeded the previous one (only counted
    /// with `check_monotone`).
    pub monotone_violations: usize,
}

/// Projected gradient with step `1/L̂` on `q` over `set`, started from a
/// feasible `start`. The returned point is feasible and never has a larger
/// objective than `start`.
pub fn solve_block_qp(
    q: &QuadraticBlockSubproblem,
    set: &BoxBallFeasibleSet,
    start: &Matrix,
    opts: &SubsolverOptions,
) -> Result<BlockSolution> {
    if start.shape() != q.block_shape() || set.center().shape() != q.block_shape() {
        return Err(Error::Shape(format!(
            "block is {:?}, start {:?}, center {:?}",
            q.block_shape(),
            start.shape(),
            set.center().shape()
        )));
    }
    if !set.contains(start) {
        return Err(Error::Infeasible("start point outside box ∩ ball".into()));
    }
    let step = 1.0 / lipschitz_estimate(q);
    let project = |p: &Matrix| project_box_ball(p, set, opts.dykstra_tol, opts.max_cycles);

    let mut u = start.clone();
    let mut ug = u.matmul(&q.gram)?;
    let mut f_u = q.objective_with(&u, &ug);
    let mut projection_warning = false;

    if opts.warm_start {
        if let Some(unconstrained) = cholesky_solve_rows(&q.gram, &q.linear) {
            let proj = project(&unconstrained);
            projection_warning |= !proj.converged;
            let cand_ug = proj.point.matmul(&q.gram)?;
            let f_cand = q.objective_with(&proj.point, &cand_ug);
            if f_cand.is_finite() && f_cand <= f_u && set.contains(&proj.point) {
                u = proj.point;
                ug = cand_ug;
                f_u = f_cand;
            }
        }
    }

    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut monotone_violations = 0;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        iterations += 1;
        let grad = gradient_from(&ug, &q.linear);
        let trial = u.sub(&grad.scale(step))?;
        let proj = project(&trial);
        projection_warning |= !proj.converged;
        let next = proj.point;
        if !next.is_finite() {
            return Err(Error::SolverNan { iteration: iterations });
        }
        residual = next.distance(&u);
        let next_ug = next.matmul(&q.gram)?;
        let f_next = q.objective_with(&next, &next_ug);
        if !f_next.is_finite() {
            return Err(Error::SolverNan { iteration: iterations });
        }
        if opts.check_monotone && f_next > f_u + 1e-14 * (1.0 + f_u.abs()) {
            monotone_violations += 1;
        }
        let done = residual <= opts.tol * (1.0 + u.frobenius_norm());
        if f_next <= f_u {
            u = next;
            ug = next_ug;
            f_u = f_next;
        } else {
            // Inexact projection can cost a hair of descent; keep the better
            // point and stop.
            converged = done;
            break;
        }
        if done {
            converged = true;
            break;
        }
    }

    Ok(BlockSolution {
        point: u,
        objective: f_u,
        residual,
        iterations,
        converged,
        projection_warning,
        monotone_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Matrix {
        Matrix::from_rows(&[&[v]])
    }

    #[test]
    fn box_projection() {
        let p = Matrix::from_rows(&[&[0.5, -2.0, 7.0]]);
        assert_eq!(project_box(&p, 0.0, 5.0).data(), &[0.5, 0.0, 5.0]);
        let inside = Matrix::from_rows(&[&[1.0, 2.0]]);
        assert_eq!(project_box(&inside, 0.0, 5.0), inside);
    }

    #[test]
    fn ball_projection() {
        let c = Matrix::from_rows(&[&[1.0, 1.0]]);
        assert_eq!(project_ball(&c, &c, 0.1), c);
        assert_eq!(project_ball(&scalar(3.0), &scalar(0.0), 1.0), scalar(1.0));
        let p = Matrix::from_rows(&[&[3.0, 4.0]]);
        assert_eq!(project_ball(&p, &Matrix::zeros(1, 2), 5.0), p);
    }

    #[test]
    fn stalled_dykstra_falls_back_to_multiplier_search() {
        let center = Matrix::from_rows(&[&[0.0494], &[0.0760]]);
        let set = BoxBallFeasibleSet::new(0.0, 0.146, center, 0.084).unwrap();
        let p = Matrix::from_rows(&[&[-0.233], &[-1.652]]);
        let long = project_box_ball(&p, &set, 1e-12, 100_000);
        assert!(long.converged && !long.fallback);
        let short = project_box_ball(&p, &set, 1e-12, 5);
        assert!(short.fallback);
        assert!(set.contains(&short.point));
        assert!(short.point.distance(&long.point) < 1e-10);
    }

    #[test]
    fn box_ball_identity_and_degenerate_ball() {
        let center = Matrix::from_rows(&[&[0.5, 0.5]]);
        let set = BoxBallFeasibleSet::new(0.0, 1.0, center.clone(), 1.0).unwrap();
        let p = Matrix::from_rows(&[&[0.6, 0.2]]);
        assert_eq!(project_box_ball(&p, &set, 1e-10, 200).point, p);

        let set = BoxBallFeasibleSet::new(0.0, 1.0, center, f64::INFINITY).unwrap();
        let p = Matrix::from_rows(&[&[3.0, -0.2]]);
        assert_eq!(project_box_ball(&p, &set, 1e-10, 200).point, project_box(&p, 0.0, 1.0));
    }

    #[test]
    fn feasible_set_validation() {
        assert!(BoxBallFeasibleSet::new(0.0, 1.0, scalar(2.0), 1.0).is_err());
        assert!(BoxBallFeasibleSet::new(0.0, 1.0, scalar(0.5), 0.0).is_err());
        assert!(BoxBallFeasibleSet::new(1.0, 0.0, scalar(0.5), 1.0).is_err());
    }

    #[test]
    fn lipschitz_known_spectra() {
        let q = QuadraticBlockSubproblem::new(Matrix::identity(3), Matrix::zeros(2, 3), 0.0).unwrap();
        assert!((lipschitz_estimate(&q) - 2.0).abs() < 1e-5);
        let g = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 4.0]]);
        let q = QuadraticBlockSubproblem::new(g, Matrix::zeros(1, 2), 0.0).unwrap();
        assert!((lipschitz_estimate(&q) - 8.0).abs() < 1e-4);
        let q = QuadraticBlockSubproblem::new(Matrix::zeros(2, 2), Matrix::zeros(1, 2), 0.0).unwrap();
        assert_eq!(lipschitz_estimate(&q), LIPSCHITZ_FLOOR);
    }

    #[test]
    fn asymmetric_gram_rejected() {
        let g = Matrix::from_rows(&[&[1.0, 0.5], &[0.0, 1.0]]);
        assert!(QuadraticBlockSubproblem::new(g, Matrix::zeros(1, 2), 0.0).is_err());
    }

    #[test]
    fn unconstrained_optimum_returned() {
        let b = Matrix::from_rows(&[&[0.3, 0.4], &[0.2, 0.1]]);
        let q = QuadraticBlockSubproblem::new(Matrix::identity(2), b.clone(), 0.0).unwrap();
        let set = BoxBallFeasibleSet::new(0.0, 1.0, b.clone(), 1.0).unwrap();
        let opts = SubsolverOptions::default();
        let sol = solve_block_qp(&q, &set, &b, &opts).unwrap();
        assert!(sol.point.distance(&b) < 1e-15);
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn clamped_to_ball_boundary() {
        // (u − 3)² = u² − 6u + 9
        let q = QuadraticBlockSubproblem::new(scalar(1.0), scalar(3.0), 9.0).unwrap();
        let set = BoxBallFeasibleSet::new(0.0, 10.0, scalar(0.0), 1.0).unwrap();
        for warm_start in [true, false] {
            let opts = SubsolverOptions {
                warm_start,
                ..Default::default()
            };
            let sol = solve_block_qp(&q, &set, &scalar(0.0), &opts).unwrap();
            assert!((sol.point.get(0, 0) - 1.0).abs() < 1e-12, "{sol:?}");
            assert!((sol.objective - 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn infeasible_start_rejected() {
        let q = QuadraticBlockSubproblem::new(scalar(1.0), scalar(3.0), 9.0).unwrap();
        let set = BoxBallFeasibleSet::new(0.0, 10.0, scalar(0.0), 1.0).unwrap();
        let err = solve_block_qp(&q, &set, &scalar(2.0), &SubsolverOptions::default());
        assert!(matches!(err, Err(Error::Infeasible(_))));
    }

    #[test]
    fn cholesky_matches_direct_solution() {
        let g = Matrix::from_rows(&[&[4.0, 1.0], &[1.0, 3.0]]);
        let b = Matrix::from_rows(&[&[1.0, 2.0], &[0.0, -1.0]]);
        let x = cholesky_solve_rows(&g, &b).unwrap();
        assert!(x.matmul(&g).unwrap().distance(&b) < 1e-14);
        assert!(cholesky_solve_rows(&Matrix::zeros(2, 2), &b).is_none());
    }
}
