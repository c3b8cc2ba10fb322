//! Small dense complex linear algebra shared by the cocycle, Lyapunov and
//! Grassmannian code. Matrices are `nalgebra::DMatrix<Complex64>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Builds a complex matrix from real row-major entries.
pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> CMat {
    assert_eq!(data.len(), rows * cols);
    CMat::from_fn(rows, cols, |i, j| c(data[i * cols + j], 0.0))
}

pub fn diag(entries: &[Complex64]) -> CMat {
    let n = entries.len();
    CMat::from_fn(n, n, |i, j| if i == j { entries[i] } else { ZERO })
}

/// Singular values in non-increasing order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Operator (spectral) norm.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 1 || m.ncols() == 1 {
        return m.norm();
    }
    singular_values(m)[0]
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("matrix is not invertible".into()))
}

/// QR factorization with a positive real diagonal in R. Returns the unitary
/// factor and the diagonal of R. `m` must be square.
pub fn qr_positive(m: &CMat) -> (CMat, Vec<f64>) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    let n = r.nrows().min(r.ncols());
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let rii = r[(i, i)];
        let a = rii.norm();
        d.push(a);
        if a > 0.0 {
            let phase = rii / a;
            let mut col = q.column_mut(i);
            col *= phase;
        }
    }
    (q, d)
}

/// Orthonormal basis of the column span. Fails if the columns are (numerically)
/// dependent relative to `tol`.
pub fn orthonormalize(m: &CMat, tol: f64) -> Result<CMat> {
    let cols = m.ncols();
    if cols == 0 || cols > m.nrows() {
        return Err(Error::Invalid(format!(
            "cannot orthonormalize {} columns in dimension {}",
            cols,
            m.nrows()
        )));
    }
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let qr = m.clone().qr();
    let r = qr.r();
    for i in 0..cols {
        if r[(i, i)].norm() <= tol * scale {
            return Err(Error::Degenerate(format!(
                "column {i} is dependent on the previous ones"
            )));
        }
    }
    let (q, _) = qr_positive(m);
    Ok(q.columns(0, cols).into_owned())
}

/// Orthonormal basis of the Hermitian orthogonal complement of the span of
/// the orthonormal columns of `q`.
pub fn orthogonal_complement(q: &CMat) -> CMat {
    let n = q.nrows();
    let m = q.ncols();
    let mut basis: Vec<CVec> = (0..m).map(|j| q.column(j).into_owned()).collect();
    let mut used = vec![false; n];
    for _ in m..n {
        // pick the coordinate vector with the largest residual
        let mut best: Option<(usize, CVec, f64)> = None;
        for (j, &u) in used.iter().enumerate() {
            if u {
                continue;
            }
            let mut v = CVec::zeros(n);
            v[j] = ONE;
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dotc(&v);
                    v -= b * proj;
                }
            }
            let nv = v.norm();
            if best.as_ref().map_or(true, |(_, _, bn)| nv > *bn) {
                best = Some((j, v, nv));
            }
        }
        let (j, v, nv) = best.expect("complement dimension bookkeeping");
        used[j] = true;
        basis.push(v / c(nv, 0.0));
    }
    let rest: Vec<CVec> = basis.split_off(m);
    CMat::from_columns(&rest)
}

/// Numerical rank with threshold `rel_tol * sigma_max`.
pub fn rank(m: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        None => 0,
        Some(&top) if top == 0.0 => 0,
        Some(&top) => s.iter().filter(|&&x| x > rel_tol * top).count(),
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Sorted k-subsets of {0..n} in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, k));
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

pub fn minor(m: &CMat, rows: &[usize], cols: &[usize]) -> Complex64 {
    let k = rows.len();
    if k == 0 {
        return ONE;
    }
    let sub = CMat::from_fn(k, k, |i, j| m[(rows[i], cols[j])]);
    sub.determinant()
}

/// Matrix of k×k minors, rows and columns indexed by lexicographic k-subsets.
pub fn exterior_power(m: &CMat, k: usize) -> CMat {
    let rs = subsets(m.nrows(), k);
    let cs = subsets(m.ncols(), k);
    let mut out = CMat::zeros(rs.len(), cs.len());
    for (i, r) in rs.iter().enumerate() {
        for (j, cset) in cs.iter().enumerate() {
            out[(i, j)] = minor(m, r, cset);
        }
    }
    out
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).norm() <= tol * m.norm().max(1.0)
}

/// Conjugate-transpose residual ‖g* J g − J‖ (Frobenius).
pub fn hermitian_form_residual(g: &CMat, j: &CMat) -> f64 {
    (g.adjoint() * j * g - j).norm()
}

/// Transpose residual ‖gᵗ J g − J‖ (Frobenius).
pub fn bilinear_form_residual(g: &CMat, j: &CMat) -> f64 {
    (g.transpose() * j * g - j).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_lexicographic() {
        let s = subsets(4, 2);
        assert_eq!(
            s,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(subsets(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(subsets(5, 5).len(), 1);
        assert_eq!(binomial(20, 10), 184756);
    }

    #[test]
    fn qr_diagonal_positive_and_reconstructs() {
        let m = CMat::from_fn(3, 3, |i, j| c((i * 3 + j) as f64 + 0.5, (i as f64) - (j as f64)));
        let (q, d) = qr_positive(&m);
        assert!(d.iter().all(|&x| x > 0.0));
        let qh_m = q.adjoint() * &m;
        for i in 0..3 {
            assert!((qh_m[(i, i)] - c(d[i], 0.0)).norm() < 1e-10);
            for j in 0..i {
                assert!(qh_m[(i, j)].norm() < 1e-10);
            }
        }
        assert!((q.adjoint() * &q - CMat::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn complement_is_orthogonal() {
        let m = CMat::from_fn(5, 2, |i, j| c((i + 2 * j) as f64, (i * j) as f64 - 1.0));
        let q = orthonormalize(&m, 1e-12).unwrap();
        let w = orthogonal_complement(&q);
        assert_eq!(w.ncols(), 3);
        assert!((q.adjoint() * &w).norm() < 1e-12);
        assert!((w.adjoint() * &w - CMat::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn dependent_columns_rejected() {
        let m = from_real(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(orthonormalize(&m, 1e-10).is_err());
    }
}
