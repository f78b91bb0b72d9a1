//! Dense row-major linear algebra used by the solvers.

use crate::num::Real;

/// Positive-semidefiniteness test by diagonally pivoted Cholesky.
pub(crate) fn is_psd<T: Real>(h: &[T], n: usize) -> bool {
    let mut a = h.to_vec();
    let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs())).max(T::one());
    let tol = T::lit(1e3) * T::epsilon() * scale * T::from_usize(n.max(1)).unwrap();
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        // largest remaining diagonal
        let (pos, &k) = active
            .iter()
            .enumerate()
            .max_by(|(_, &i), (_, &j)| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap())
            .unwrap();
        let piv = a[k * n + k];
        if piv < -tol {
            return false;
        }
        if piv <= tol {
            // remaining Schur complement must vanish
            return active
                .iter()
                .all(|&i| active.iter().all(|&j| a[i * n + j].abs() <= tol.sqrt().max(tol)));
        }
        active.swap_remove(pos);
        for &i in &active {
            let f = a[i * n + k] / piv;
            for &j in &active {
                let v = a[k * n + j];
                a[i * n + j] -= f * v;
            }
        }
    }
    true
}

/// Solves `a x = b` for square `a` (row-major) by Gaussian elimination with
/// partial pivoting. Returns `None` when singular.
pub(crate) fn lu_solve<T: Real>(a: &[T], n: usize, b: &[T]) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let (piv_row, piv_abs) = (col..n)
            .map(|r| (r, m[r * n + col].abs()))
            .fold((col, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs <= T::pivot_tol() * T::lit(1e-3) {
            return None;
        }
        if piv_row != col {
            for j in 0..n {
                m.swap(col * n + j, piv_row * n + j);
            }
            x.swap(col, piv_row);
        }
        let p = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / p;
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                let v = m[col * n + j];
                m[r * n + j] -= f * v;
            }
            let xv = x[col];
            x[r] -= f * xv;
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for j in col + 1..n {
            s -= m[col * n + j] * x[j];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}

/// Householder QR of the `rows × cols` matrix `a` (row-major).
///
/// Returns the full orthogonal `Q` (`rows × rows`) and the upper-triangular
/// leading block of `R` (`cols × cols`). Requires `cols <= rows`.
pub(crate) fn householder_qr<T: Real>(a: &[T], rows: usize, cols: usize) -> (Vec<T>, Vec<T>) {
    let mut r = a.to_vec();
    let mut q = vec![T::zero(); rows * rows];
    for i in 0..rows {
        q[i * rows + i] = T::one();
    }
    for k in 0..cols.min(rows) {
        let norm = (k..rows).map(|i| r[i * cols + k] * r[i * cols + k]).sum::<T>().sqrt();
        if norm == T::zero() {
            continue;
        }
        let alpha = if r[k * cols + k] > T::zero() { -norm } else { norm };
        let mut v = vec![T::zero(); rows];
        for i in k..rows {
            v[i] = r[i * cols + k];
        }
        v[k] -= alpha;
        let vnorm2: T = v[k..].iter().map(|x| *x * *x).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        let two = T::lit(2.0);
        for j in 0..cols {
            let dot: T = (k..rows).map(|i| v[i] * r[i * cols + j]).sum();
            let f = two * dot / vnorm2;
            for i in k..rows {
                r[i * cols + j] -= f * v[i];
            }
        }
        // Q <- Q H
        for i in 0..rows {
            let dot: T = (k..rows).map(|l| q[i * rows + l] * v[l]).sum();
            let f = two * dot / vnorm2;
            for l in k..rows {
                q[i * rows + l] -= f * v[l];
            }
        }
    }
    let mut rr = vec![T::zero(); cols * cols];
    for i in 0..cols {
        for j in i..cols {
            rr[i * cols + j] = r[i * cols + j];
        }
    }
    (q, rr)
}

/// Cyclic Jacobi eigen-decomposition of a symmetric `n × n` matrix.
///
/// Returns eigenvalues and the eigenvectors as columns of a row-major matrix.
pub(crate) fn symmetric_eigen<T: Real>(s: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    let mut a = s.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let diag: T = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= eps * eps * diag.max(T::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}
