//! Dense row-major matrices and the shared parameter store used by the
//! lock-free trainers.

use std::cell::Cell;
use std::sync::atomic::{AtomicU32, Ordering};

use num_traits::Float;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.cols + j] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

impl<T: Float> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    /// `self · v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ · v`.
    pub fn tmul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.rows, v.len(), "tmul_vec shape mismatch");
        let mut out = vec![T::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            axpy(vi, self.row(i), &mut out);
        }
        out
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

#[inline]
pub fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `y += alpha · x`
#[inline]
pub fn axpy<T: Float>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

#[inline]
pub fn norm<T: Float>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Mean of the selected rows. Row indices are summed in ascending order so
/// the result does not depend on the order they were supplied in.
pub fn mean_rows<T: Float>(matrix: &Matrix<T>, rows: &[usize]) -> Vec<T> {
    let mut out = vec![T::zero(); matrix.cols()];
    if rows.is_empty() {
        return out;
    }
    let mut sorted = rows.to_vec();
    sorted.sort_unstable();
    for &r in &sorted {
        axpy(T::one(), matrix.row(r), &mut out);
    }
    let inv = T::one() / T::from(rows.len()).unwrap();
    for x in &mut out {
        *x = *x * inv;
    }
    out
}

/// Row operations the SGD trainers need on an `f32` parameter matrix.
pub trait RowStore {
    fn cols(&self) -> usize;

    fn read_row(&self, i: usize, out: &mut [f32]);

    /// Adds the sum of the selected rows into `out`; indices are visited in
    /// the given order.
    fn accumulate_rows(&self, rows: &[usize], out: &mut [f32]);

    /// `row += alpha · delta`, returning the largest absolute value written.
    fn add_to_row(&self, i: usize, alpha: f32, delta: &[f32]) -> f32;

    fn to_matrix(&self) -> Matrix<f32>;
}

/// `f32` parameter matrix that many workers may read and update without
/// locks. Each element is an independent relaxed atomic: concurrent updates
/// to the same row interleave and the last store wins. With a single worker
/// every operation is deterministic.
pub struct SharedMatrix {
    rows: usize,
    cols: usize,
    data: Vec<AtomicU32>,
}

impl SharedMatrix {
    pub fn from_matrix(m: &Matrix<f32>) -> Self {
        SharedMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|x| AtomicU32::new(x.to_bits())).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

impl RowStore for SharedMatrix {
    fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    fn read_row(&self, i: usize, out: &mut [f32]) {
        let row = &self.data[i * self.cols..(i + 1) * self.cols];
        for (o, a) in out.iter_mut().zip(row) {
            *o = f32::from_bits(a.load(Ordering::Relaxed));
        }
    }

    #[inline]
    fn accumulate_rows(&self, rows: &[usize], out: &mut [f32]) {
        for &r in rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += f32::from_bits(a.load(Ordering::Relaxed));
            }
        }
    }

    #[inline]
    fn add_to_row(&self, i: usize, alpha: f32, delta: &[f32]) -> f32 {
        let row = &self.data[i * self.cols..(i + 1) * self.cols];
        let mut max_abs = 0.0f32;
        for (a, &d) in row.iter().zip(delta) {
            let v = f32::from_bits(a.load(Ordering::Relaxed)) + alpha * d;
            max_abs = max_abs.max(v.abs());
            a.store(v.to_bits(), Ordering::Relaxed);
        }
        max_abs
    }

    fn to_matrix(&self) -> Matrix<f32> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|a| f32::from_bits(a.load(Ordering::Relaxed)))
                .collect(),
        }
    }
}

/// Single-threaded counterpart of [`SharedMatrix`] with plain loads and
/// stores, so the row loops vectorize.
pub struct LocalMatrix {
    cols: usize,
    matrix: Matrix<Cell<f32>>,
}

impl LocalMatrix {
    pub fn from_matrix(m: &Matrix<f32>) -> Self {
        LocalMatrix {
            cols: m.cols,
            matrix: Matrix {
                rows: m.rows,
                cols: m.cols,
                data: m.data.iter().map(|&x| Cell::new(x)).collect(),
            },
        }
    }

    #[inline]
    fn row(&self, i: usize) -> &[Cell<f32>] {
        &self.matrix.data[i * self.cols..(i + 1) * self.cols]
    }
}

impl RowStore for LocalMatrix {
    fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    fn read_row(&self, i: usize, out: &mut [f32]) {
        for (o, a) in out.iter_mut().zip(self.row(i)) {
            *o = a.get();
        }
    }

    #[inline]
    fn accumulate_rows(&self, rows: &[usize], out: &mut [f32]) {
        for &r in rows {
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a.get();
            }
        }
    }

    #[inline]
    fn add_to_row(&self, i: usize, alpha: f32, delta: &[f32]) -> f32 {
        let mut max_abs = 0.0f32;
        for (a, &d) in self.row(i).iter().zip(delta) {
            let v = a.get() + alpha * d;
            max_abs = max_abs.max(v.abs());
            a.set(v);
        }
        max_abs
    }

    fn to_matrix(&self) -> Matrix<f32> {
        Matrix {
            rows: self.matrix.rows,
            cols: self.cols,
            data: self.matrix.data.iter().map(Cell::get).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_and_transpose() {
        let a = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let ata = a.transpose().matmul(&a);
        assert_eq!(ata.rows(), 3);
        assert_eq!(ata.get(0, 0), 17.0);
        assert_eq!(ata.get(1, 2), 2.0 * 3.0 + 5.0 * 6.0);
        assert_eq!(a.mul_vec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        assert_eq!(a.tmul_vec(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn mean_rows_is_order_independent() {
        let m = Matrix::from_vec(3, 2, vec![0.1f32, 0.7, 0.3, 0.2, 1e-8, 5.0]);
        let a = mean_rows(&m, &[0, 1, 2, 1]);
        let b = mean_rows(&m, &[1, 2, 1, 0]);
        assert_eq!(a, b);
        assert_eq!(mean_rows(&m, &[]), vec![0.0, 0.0]);
    }

    fn store_round_trip(s: &impl RowStore, m: &Matrix<f32>) {
        let written = s.add_to_row(1, 2.0, &[1.0, -1.0]);
        assert_eq!(written, 5.5);
        let mut buf = [0.0; 2];
        s.read_row(1, &mut buf);
        assert_eq!(buf, [5.5, -1.75]);
        let mut sum = [0.0; 2];
        s.accumulate_rows(&[0, 1], &mut sum);
        assert_eq!(sum, [6.5, -3.75]);
        assert_eq!(s.to_matrix().row(0), m.row(0));
    }

    #[test]
    fn row_stores_round_trip() {
        let m = Matrix::from_vec(2, 2, vec![1.0f32, -2.0, 3.5, 0.25]);
        store_round_trip(&SharedMatrix::from_matrix(&m), &m);
        store_round_trip(&LocalMatrix::from_matrix(&m), &m);
    }
}
