//! Dense matrices, dense m-mode tensors and the multilinear kernels used by
//! the factorization objective: mode unfolding, Khatri-Rao products, MTTKRP
//! and CP reconstruction.
//!
//! Storage is a flat row-major `f64` buffer (last index varies fastest).
//! Mode indices are zero-based.
//!
//! Unfolding convention: column `c` of `unfold(t, k)` enumerates the remaining
//! modes `(i_0, .., i_{k-1}, i_{k+1}, .., i_{m-1})` with the lowest-numbered
//! mode varying fastest. [`khatri_rao_except`] orders its chain (highest mode
//! first) so that `mttkrp(t, U, k) == unfold(t, k) * khatri_rao_except(U, k)`.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("matrix dimensions must be positive, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix entry {pos} is {}", data[pos])));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input; meant for
    /// literals in tests and examples.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(rows.len(), cols, data).expect("valid literal matrix")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · self`.
    pub fn gram(&self) -> Matrix {
        let r = self.cols;
        let mut out = Matrix::zeros(r, r);
        for i in 0..self.rows {
            let row = self.row(i);
            for a in 0..r {
                let ra = row[a];
                for b in 0..r {
                    out.data[a * r + b] += ra * row[b];
                }
            }
        }
        out
    }

    pub fn hadamard(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        Ok(self.zip_map(other, |a, b| a * b))
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        Ok(self.zip_map(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    pub fn scale(&self, s: f64) -> Matrix {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Frobenius inner product `tr(selfᵀ other)`.
    pub fn dot(&self, other: &Matrix) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖self − other‖_F` without allocating.
    pub fn distance(&self, other: &Matrix) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn zip_map(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    fn check_same_shape(&self, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

/// Dense m-mode tensor stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Shape(format!("tensor dimensions must be positive, got {shape:?}")));
        }
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("tensor entry {pos} is {}", data[pos])));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            increment_row_major(&mut idx, &shape);
        }
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat_index(idx)]
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn scale(&self, s: f64) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self)
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }
}

fn increment_row_major(idx: &mut [usize], shape: &[usize]) {
    for ax in (0..shape.len()).rev() {
        idx[ax] += 1;
        if idx[ax] < shape[ax] {
            return;
        }
        idx[ax] = 0;
    }
}

pub fn frobenius_norm(t: &DenseTensor) -> f64 {
    t.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn check_mode(ndim: usize, mode: usize) -> Result<()> {
    if mode >= ndim {
        return Err(Error::ModeOutOfRange { mode, ndim });
    }
    Ok(())
}

/// Column strides of the mode-`mode` unfolding: lowest remaining mode fastest.
fn unfold_strides(shape: &[usize], mode: usize) -> Vec<usize> {
    let mut strides = vec![0; shape.len()];
    let mut s = 1;
    for (ax, &d) in shape.iter().enumerate() {
        if ax != mode {
            strides[ax] = s;
            s *= d;
        }
    }
    strides
}

/// Mode-`mode` matricization, `d_mode × ∏_{j≠mode} d_j`.
pub fn unfold(t: &DenseTensor, mode: usize) -> Result<Matrix> {
    check_mode(t.ndim(), mode)?;
    let rows = t.shape[mode];
    let cols = t.len() / rows;
    let strides = unfold_strides(&t.shape, mode);
    let mut out = vec![0.0; t.len()];
    let mut idx = vec![0usize; t.ndim()];
    for &v in &t.data {
        let col: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        out[idx[mode] * cols + col] = v;
        increment_row_major(&mut idx, &t.shape);
    }
    Matrix::new(rows, cols, out)
}

/// Inverse of [`unfold`].
pub fn fold(m: &Matrix, mode: usize, shape: &[usize]) -> Result<DenseTensor> {
    check_mode(shape.len(), mode)?;
    let len: usize = shape.iter().product();
    if m.rows() != shape[mode] || m.rows() * m.cols() != len {
        return Err(Error::Shape(format!(
            "{}x{} matrix cannot fold into {shape:?} along mode {mode}",
            m.rows(),
            m.cols()
        )));
    }
    let strides = unfold_strides(shape, mode);
    let mut data = Vec::with_capacity(len);
    let mut idx = vec![0usize; shape.len()];
    for _ in 0..len {
        let col: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        data.push(m.get(idx[mode], col));
        increment_row_major(&mut idx, shape);
    }
    DenseTensor::new(shape.to_vec(), data)
}

/// Column-wise Kronecker product; row `ia * b.rows() + ib` of column `j` is
/// `a[ia, j] * b[ib, j]`.
pub fn khatri_rao(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::Shape(format!(
            "Khatri-Rao needs equal column counts, got {} and {}",
            a.cols(),
            b.cols()
        )));
    }
    let r = a.cols();
    let mut data = Vec::with_capacity(a.rows() * b.rows() * r);
    for ia in 0..a.rows() {
        let ra = a.row(ia);
        for ib in 0..b.rows() {
            data.extend(ra.iter().zip(b.row(ib)).map(|(x, y)| x * y));
        }
    }
    Ok(Matrix {
        rows: a.rows() * b.rows(),
        cols: r,
        data,
    })
}

/// Khatri-Rao chain `U_{m-1} ⊙ … ⊙ U_{mode+1} ⊙ U_{mode-1} ⊙ … ⊙ U_0`, whose
/// row order matches the columns of `unfold(t, mode)`.
pub fn khatri_rao_except(factors: &[Matrix], mode: usize) -> Result<Matrix> {
    check_mode(factors.len(), mode)?;
    let mut chain = (0..factors.len()).rev().filter(|&j| j != mode);
    let Some(first) = chain.next() else {
        let r = factors[mode].cols();
        return Ok(Matrix::filled(1, r, 1.0));
    };
    let mut acc = factors[first].clone();
    for j in chain {
        acc = khatri_rao(&acc, &factors[j])?;
    }
    Ok(acc)
}

fn check_factor_ranks(factors: &[Matrix], skip: Option<usize>) -> Result<usize> {
    let mut rank = None;
    for (j, f) in factors.iter().enumerate() {
        if Some(j) == skip {
            continue;
        }
        match rank {
            None => rank = Some(f.cols()),
            Some(r) if r != f.cols() => {
                return Err(Error::Shape(format!(
                    "factor {j} has {} columns, expected {r}",
                    f.cols()
                )))
            }
            _ => {}
        }
    }
    rank.ok_or_else(|| Error::InvalidArgument("no factors supplied".into()))
}

/// Row-wise products of factor rows over a set of modes, enumerated in
/// row-major order of those modes. Row `p` holds `∏_l U_l(i_l, :)`.
fn row_products(factors: &[&Matrix], rank: usize) -> Vec<f64> {
    let mut table = vec![1.0; rank];
    for f in factors {
        let mut next = Vec::with_capacity(table.len() * f.rows());
        for prev in table.chunks_exact(rank) {
            for i in 0..f.rows() {
                next.extend(prev.iter().zip(f.row(i)).map(|(a, b)| a * b));
            }
        }
        table = next;
    }
    table
}

/// Matricized tensor times Khatri-Rao product for mode `mode`.
///
/// `factors[mode]` is ignored (only its column count is used when the tensor
/// has a single mode). Every other factor must have `d_j` rows and a common
/// column count.
pub fn mttkrp(t: &DenseTensor, factors: &[Matrix], mode: usize) -> Result<Matrix> {
    check_mode(t.ndim(), mode)?;
    if factors.len() != t.ndim() {
        return Err(Error::Shape(format!(
            "{} factors supplied for a {}-mode tensor",
            factors.len(),
            t.ndim()
        )));
    }
    let skip = if t.ndim() > 1 { Some(mode) } else { None };
    let rank = check_factor_ranks(factors, skip)?;
    for (j, f) in factors.iter().enumerate() {
        if j != mode && f.rows() != t.shape[j] {
            return Err(Error::Shape(format!(
                "factor {j} has {} rows, tensor mode {j} has size {}",
                f.rows(),
                t.shape[j]
            )));
        }
    }

    let dk = t.shape[mode];
    let prefix: Vec<&Matrix> = factors[..mode].iter().collect();
    let suffix: Vec<&Matrix> = factors[mode + 1..].iter().collect();
    let kpre = row_products(&prefix, rank);
    let ksuf = row_products(&suffix, rank);
    let s_len = ksuf.len() / rank;

    let mut out = vec![0.0; dk * rank];
    let mut tmp = vec![0.0; rank];
    for (p, pre) in kpre.chunks_exact(rank).enumerate() {
        for i in 0..dk {
            let base = (p * dk + i) * s_len;
            let fiber = &t.data[base..base + s_len];
            tmp.iter_mut().for_each(|v| *v = 0.0);
            for (&x, suf) in fiber.iter().zip(ksuf.chunks_exact(rank)) {
                if x == 0.0 {
                    continue;
                }
                for (acc, &k) in tmp.iter_mut().zip(suf) {
                    *acc += x * k;
                }
            }
            let row = &mut out[i * rank..(i + 1) * rank];
            for ((o, &a), &b) in row.iter_mut().zip(pre).zip(&tmp) {
                *o += a * b;
            }
        }
    }
    Matrix::new(dk, rank, out)
}

/// CP tensor `Σ_j U_0(:,j) ∘ … ∘ U_{m-1}(:,j)`.
pub fn cp_full(factors: &[Matrix]) -> Result<DenseTensor> {
    let shape: Vec<usize> = factors.iter().map(|f| f.rows()).collect();
    let mut data = Vec::with_capacity(shape.iter().product());
    for_each_cp_entry(factors, |v| data.push(v))?;
    DenseTensor::new(shape, data)
}

/// Streams the entries of the CP tensor defined by `factors` in row-major
/// order without materializing it.
pub fn for_each_cp_entry(factors: &[Matrix], mut f: impl FnMut(f64)) -> Result<()> {
    let rank = check_factor_ranks(factors, None)?;
    let (last, head) = factors.split_last().expect("nonempty checked above");
    let head: Vec<&Matrix> = head.iter().collect();
    let kpre = row_products(&head, rank);
    for pre in kpre.chunks_exact(rank) {
        for i in 0..last.rows() {
            f(pre.iter().zip(last.row(i)).map(|(a, b)| a * b).sum());
        }
    }
    Ok(())
}

/// `Out(U_1, …, U_m) ×_{m+1} H`: a tensor of shape `d_1 × … × d_m × T` with
/// entries `Σ_j U_1(i_1,j)…U_m(i_m,j) H(j,t)`.
pub fn cp_reconstruct(factors: &[Matrix], code: &Matrix) -> Result<DenseTensor> {
    let rank = check_factor_ranks(factors, None)?;
    if code.rows() != rank {
        return Err(Error::Shape(format!(
            "code matrix has {} rows, factors have rank {rank}",
            code.rows()
        )));
    }
    let mut all = factors.to_vec();
    all.push(code.transpose());
    cp_full(&all)
}
