//! Small dense linear algebra: row-major matrices, LU with partial pivoting and
//! Householder least squares. Systems in this crate are at most a few hundred
//! unknowns, so dense storage is adequate.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    /// `selfᵀ x`
    pub fn tr_mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm_inf<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Factorizes a square matrix. Fails when a pivot vanishes relative to the
    /// largest entry of its column.
    pub fn new(mut a: Matrix<T>) -> Result<Self> {
        let n = a.rows;
        if n != a.cols {
            return Err(Error::ShapeMismatch(format!(
                "LU of a non-square {}x{} matrix",
                a.rows, a.cols
            )));
        }
        let scale = a.max_abs();
        let tiny = scale * T::epsilon() * T::lit(1e-3);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[(i, k)].abs()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= tiny || !pmax.is_finite() {
                return Err(Error::Convergence(format!(
                    "singular matrix: no usable pivot in column {k}"
                )));
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    a.data.swap(p * n + j, k * n + j);
                }
            }
            let pivot = a[(k, k)];
            for i in (k + 1)..n {
                let f = a[(i, k)] / pivot;
                if f == T::zero() {
                    continue;
                }
                a[(i, k)] = f;
                let (upper, lower) = a.data.split_at_mut(i * n);
                let row_k = &upper[k * n..k * n + n];
                let row_i = &mut lower[..n];
                for j in (k + 1)..n {
                    row_i[j] -= f * row_k[j];
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows;
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in 0..i {
                s -= row[j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= row[j] * x[j];
            }
            x[i] = s / row[i];
        }
        x
    }
}

/// Solves `a x = b` for square `a`.
pub fn solve<T: Scalar>(a: Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    Ok(Lu::new(a)?.solve(b))
}

/// Least-squares solution of an overdetermined system via Householder QR on
/// column-equilibrated data. `names` labels the columns for rank diagnostics.
pub fn least_squares<T: Scalar>(a: &Matrix<T>, b: &[T], names: &[&str]) -> Result<Vec<T>> {
    let (m, n) = (a.rows, a.cols);
    assert_eq!(b.len(), m);
    assert_eq!(names.len(), n);
    if m < n {
        return Err(Error::RankDeficient {
            column: names[m.min(n - 1)].to_string(),
        });
    }
    let scales: Vec<T> = (0..n)
        .map(|j| {
            let s = (0..m).fold(T::zero(), |acc, i| acc + a[(i, j)] * a[(i, j)]).sqrt();
            if s > T::zero() {
                s
            } else {
                T::one()
            }
        })
        .collect();
    let mut r = a.clone();
    for i in 0..m {
        for j in 0..n {
            r[(i, j)] /= scales[j];
        }
    }
    let mut qtb = b.to_vec();
    let rank_tol = T::lit(1e3) * T::epsilon() * T::from_count(m.max(n)).sqrt();
    for k in 0..n {
        let norm = (k..m).fold(T::zero(), |acc, i| acc + r[(i, k)] * r[(i, k)]).sqrt();
        if norm <= rank_tol {
            return Err(Error::RankDeficient {
                column: names[k].to_string(),
            });
        }
        let alpha = if r[(k, k)] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2 = v.iter().fold(T::zero(), |acc, &x| acc + x * x);
        if vnorm2 > T::zero() {
            for j in k..n {
                let s = v
                    .iter()
                    .enumerate()
                    .fold(T::zero(), |acc, (t, &vi)| acc + vi * r[(k + t, j)]);
                let f = T::lit(2.0) * s / vnorm2;
                for (t, &vi) in v.iter().enumerate() {
                    r[(k + t, j)] -= f * vi;
                }
            }
            let s = v
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (t, &vi)| acc + vi * qtb[k + t]);
            let f = T::lit(2.0) * s / vnorm2;
            for (t, &vi) in v.iter().enumerate() {
                qtb[k + t] -= f * vi;
            }
        }
        if r[(k, k)].abs() <= rank_tol {
            return Err(Error::RankDeficient {
                column: names[k].to_string(),
            });
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = qtb[i];
        for j in (i + 1)..n {
            s -= r[(i, j)] * x[j];
        }
        x[i] = s / r[(i, i)];
    }
    Ok(x.iter().zip(&scales).map(|(&xi, &s)| xi / s).collect())
}

/// Orthogonal decomposition of a full-row-rank constraint matrix `A` (m×n,
/// m ≤ n) from the Householder QR factorization `Aᵀ = Q R`. The first m
/// columns of `Q` span the row space of `A`; the remaining n−m columns form an
/// orthonormal basis of its null space.
#[derive(Debug, Clone)]
pub struct ConstraintBasis<T> {
    q: Matrix<T>,
    r: Matrix<T>,
    m: usize,
}

impl<T: Scalar> ConstraintBasis<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let (m, n) = (a.rows, a.cols);
        if m > n {
            return Err(Error::ShapeMismatch(format!("{m} constraints on {n} unknowns")));
        }
        let mut r = a.transpose();
        let mut q = Matrix::identity(n);
        let scale = a.max_abs();
        let tol = scale * T::epsilon() * T::from_count(n) * T::lit(10.0);
        for k in 0..m {
            let norm = (k..n).fold(T::zero(), |acc, i| acc + r[(i, k)] * r[(i, k)]).sqrt();
            if norm <= tol {
                return Err(Error::RankDeficient {
                    column: format!("constraint {k}"),
                });
            }
            let alpha = if r[(k, k)] > T::zero() { -norm } else { norm };
            let mut v: Vec<T> = (k..n).map(|i| r[(i, k)]).collect();
            v[0] -= alpha;
            let vnorm2 = v.iter().fold(T::zero(), |acc, &x| acc + x * x);
            if vnorm2 == T::zero() {
                continue;
            }
            let two = T::lit(2.0);
            for j in k..m {
                let s = v.iter().enumerate().fold(T::zero(), |acc, (t, &vi)| acc + vi * r[(k + t, j)]);
                let f = two * s / vnorm2;
                for (t, &vi) in v.iter().enumerate() {
                    r[(k + t, j)] -= f * vi;
                }
            }
            // Q ← Q H_k, H_k acting on columns k..n
            for i in 0..n {
                let s = v.iter().enumerate().fold(T::zero(), |acc, (t, &vi)| acc + q[(i, k + t)] * vi);
                let f = two * s / vnorm2;
                for (t, &vi) in v.iter().enumerate() {
                    q[(i, k + t)] -= f * vi;
                }
            }
        }
        let mut upper = Matrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                upper[(i, j)] = r[(i, j)];
            }
        }
        Ok(Self { q, r: upper, m })
    }

    pub fn n_unknowns(&self) -> usize {
        self.q.rows
    }

    pub fn n_constraints(&self) -> usize {
        self.m
    }

    /// Orthonormal null-space basis, n×(n−m).
    pub fn null_space(&self) -> Matrix<T> {
        let n = self.q.rows;
        let mut z = Matrix::zeros(n, n - self.m);
        for i in 0..n {
            for j in self.m..n {
                z[(i, j - self.m)] = self.q[(i, j)];
            }
        }
        z
    }

    /// Minimum-norm correction of `x0` onto `{x : A x = b}`, given the
    /// current residual `b − A x0`.
    pub fn project(&self, x0: &[T], residual: &[T]) -> Vec<T> {
        assert_eq!(residual.len(), self.m);
        // Rᵀ y = residual
        let mut y = residual.to_vec();
        for i in 0..self.m {
            let mut s = y[i];
            for j in 0..i {
                s -= self.r[(j, i)] * y[j];
            }
            y[i] = s / self.r[(i, i)];
        }
        let mut x = x0.to_vec();
        for (i, xi) in x.iter_mut().enumerate() {
            for (j, &yj) in y.iter().enumerate() {
                *xi += self.q[(i, j)] * yj;
            }
        }
        x
    }

    /// Component of `g` orthogonal to the row space of `A`, i.e. `g + Aᵀλ`
    /// for the least-squares multipliers `λ`.
    pub fn reduce_gradient(&self, g: &[T]) -> Vec<T> {
        let n = self.q.rows;
        let mut out = g.to_vec();
        for j in 0..self.m {
            let c = (0..n).fold(T::zero(), |acc, i| acc + self.q[(i, j)] * g[i]);
            for (i, o) in out.iter_mut().enumerate() {
                *o -= c * self.q[(i, j)];
            }
        }
        out
    }
}

/// Cholesky factorization `A = L Lᵀ` of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Fails with [`Error::Convergence`] when `a` is not numerically positive definite.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.rows;
        if n != a.cols {
            return Err(Error::ShapeMismatch(format!("Cholesky of a {}x{} matrix", a.rows, a.cols)));
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return Err(Error::Convergence(format!("matrix not positive definite at pivot {j}")));
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_permuted_system() {
        let a = Matrix::from_rows(3, 3, vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0]).unwrap();
        let x_true = [1.0f64, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let x = solve(a, &b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn lu_rejects_singular() {
        let a = Matrix::from_rows(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(Lu::new(a).is_err());
    }

    #[test]
    fn least_squares_exact_fit_and_rank_error() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let mut a = Matrix::zeros(20, 2);
        let mut b = vec![0.0; 20];
        for (i, &t) in ts.iter().enumerate() {
            a[(i, 0)] = t;
            a[(i, 1)] = t * t;
            b[i] = 3.0 * t - 0.5 * t * t;
        }
        let x = least_squares(&a, &b, &["t", "t2"]).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-12 && (x[1] + 0.5).abs() < 1e-12);

        for i in 0..20 {
            a[(i, 1)] = 2.0 * a[(i, 0)];
        }
        match least_squares(&a, &b, &["t", "t2"]) {
            Err(Error::RankDeficient { column }) => assert_eq!(column, "t2"),
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    fn constraint_matrix() -> Matrix<f64> {
        Matrix::from_rows(2, 4, vec![1.0, 1.0, 0.0, 0.0, 0.0, 1.0, -1.0, 2.0]).unwrap()
    }

    #[test]
    fn null_space_is_orthonormal_and_annihilated() {
        let a = constraint_matrix();
        let cb = ConstraintBasis::new(&a).unwrap();
        let z = cb.null_space();
        assert_eq!((z.rows(), z.cols()), (4, 2));
        for j in 0..2 {
            let col: Vec<f64> = (0..4).map(|i| z[(i, j)]).collect();
            assert!(norm_inf(&a.mul_vec(&col)) < 1e-14);
            for k in 0..2 {
                let other: Vec<f64> = (0..4).map(|i| z[(i, k)]).collect();
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((dot(&col, &other) - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn projection_lands_on_constraints() {
        let a = constraint_matrix();
        let cb = ConstraintBasis::new(&a).unwrap();
        let b = [3.0, -1.0];
        let x0 = [0.5, 0.1, 0.2, -0.3];
        let ax = a.mul_vec(&x0);
        let res: Vec<f64> = b.iter().zip(&ax).map(|(u, v)| u - v).collect();
        let x = cb.project(&x0, &res);
        let ax = a.mul_vec(&x);
        assert!((ax[0] - 3.0).abs() < 1e-14 && (ax[1] + 1.0).abs() < 1e-14);
        // the correction lies in the row space, so it is orthogonal to the null space
        let d: Vec<f64> = x.iter().zip(&x0).map(|(u, v)| u - v).collect();
        let z = cb.null_space();
        assert!(norm_inf(&z.tr_mul_vec(&d)) < 1e-14);
    }

    #[test]
    fn reduced_gradient_removes_row_space() {
        let a = constraint_matrix();
        let cb = ConstraintBasis::new(&a).unwrap();
        let g = a.tr_mul_vec(&[2.0, -0.5]);
        assert!(norm_inf(&cb.reduce_gradient(&g)) < 1e-14);
        let dependent = Matrix::from_rows(2, 3, vec![1.0, 2.0, 3.0, 2.0, 4.0, 6.0]).unwrap();
        assert!(matches!(ConstraintBasis::new(&dependent), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn cholesky_solves_and_rejects_indefinite() {
        let a = Matrix::from_rows(3, 3, vec![4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0]).unwrap();
        let x_true = [1.0f64, -1.0, 2.0];
        let x = Cholesky::new(&a).unwrap().solve(&a.mul_vec(&x_true));
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-14);
        }
        let bad = Matrix::from_rows(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(Cholesky::new(&bad).is_err());
    }
}
