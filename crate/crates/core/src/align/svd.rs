//! One-sided (Hestenes) Jacobi SVD for small square matrices.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// `M = U · diag(S) · Vᵀ` with `S` descending and non-negative.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix<f64>,
    pub s: Vec<f64>,
    pub v: Matrix<f64>,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix<f64> {
        let n = self.s.len();
        let us = Matrix::from_fn(self.u.rows(), n, |i, j| self.u.get(i, j) * self.s[j]);
        us.matmul(&self.v.transpose())
    }
}

const MAX_SWEEPS: usize = 80;

/// Orthogonalizes the columns of `A = M·V` by plane rotations accumulated in
/// `V`; singular values are the final column norms and `U` the normalized
/// columns. Works on the transpose of the column layout so each column is a
/// contiguous row.
pub fn svd_small(m: &Matrix<f64>) -> Result<Svd> {
    if !m.is_finite() {
        return Err(Error::Numerical("SVD input has non-finite entries".into()));
    }
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::invalid(format!("svd_small expects a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    // a[j] = column j of M; vt[j] = column j of V
    let mut a = m.transpose();
    let mut vt = Matrix::<f64>::identity(n);
    let eps = f64::EPSILON;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for (&x, &y) in a.row(p).iter().zip(a.row(q)) {
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut a, p, q, c, s);
                rotate_rows(&mut vt, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| crate::matrix::norm(a.row(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let scale = s.first().copied().unwrap_or(0.0);
    // columns of U (as rows), in descending singular value order
    let mut ut: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let col: Vec<f64> = if s[k] > scale * eps * n as f64 && s[k] > 0.0 {
            a.row(j).iter().map(|x| x / s[k]).collect()
        } else {
            vec![0.0; n]
        };
        ut.push(col);
    }
    reorthonormalize(&mut ut);

    let u = Matrix::from_fn(n, n, |i, k| ut[k][i]);
    let v = Matrix::from_fn(n, n, |i, k| vt.get(order[k], i));
    Ok(Svd { u, s, v })
}

fn rotate_rows(m: &mut Matrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    let (head, tail) = data.split_at_mut(q * cols);
    let rp = &mut head[p * cols..(p + 1) * cols];
    let rq = &mut tail[..cols];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Modified Gram-Schmidt in place, in the given order, twice. Vectors that
/// vanish (zero singular values) are replaced by standard basis vectors
/// orthogonal to the rest.
fn reorthonormalize(vs: &mut [Vec<f64>]) {
    let n = vs.len();
    for k in 0..n {
        for _pass in 0..2 {
            for j in 0..k {
                let proj = crate::matrix::dot(&vs[k], &vs[j]);
                let (done, cur) = vs.split_at_mut(k);
                crate::matrix::axpy(-proj, &done[j], &mut cur[0]);
            }
        }
        let nrm = crate::matrix::norm(&vs[k]);
        if nrm > 0.5 {
            vs[k].iter_mut().for_each(|x| *x /= nrm);
            continue;
        }
        // completion: first basis vector with a large residual
        let mut best: Option<Vec<f64>> = None;
        for e in 0..n {
            let mut cand = vec![0.0; n];
            cand[e] = 1.0;
            for _pass in 0..2 {
                for v in vs.iter().take(k) {
                    let proj = crate::matrix::dot(&cand, v);
                    crate::matrix::axpy(-proj, v, &mut cand);
                }
            }
            let cn = crate::matrix::norm(&cand);
            if cn > 0.5 {
                cand.iter_mut().for_each(|x| *x /= cn);
                best = Some(cand);
                break;
            }
        }
        vs[k] = best.expect("an orthonormal completion always exists");
    }
}
