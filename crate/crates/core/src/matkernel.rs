//! Small dense complex linear algebra.
//!
//! Everything here is sized for antenna-count matrices (a few rows and
//! columns), so the routines favour clarity over blocking or SIMD. Matrices
//! are stored row-major.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Reject an LU factorisation when max|pivot| / min|pivot| exceeds this.
pub const PIVOT_RATIO_LIMIT: f64 = 1e12;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}j ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Builds a matrix from row-major entries. Panics if the length is wrong.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must equal rows * cols");
        CMatrix { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Column vector `n x 1`.
    pub fn column_vector(v: &[C64]) -> Self {
        CMatrix::from_vec(v.len(), 1, v.to_vec())
    }

    /// Outer product `u v^H`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        CMatrix::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Copy with column `j` removed.
    pub fn without_column(&self, j: usize) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols - 1, |r, c| {
            self[(r, if c < j { c } else { c + 1 })]
        })
    }

    /// Copy with row `i` and column `i` removed (principal minor).
    pub fn without_row_col(&self, k: usize) -> CMatrix {
        let skip = |x: usize| if x < k { x } else { x + 1 };
        CMatrix::from_fn(self.rows - 1, self.cols - 1, |r, c| self[(skip(r), skip(c))])
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> CMatrix {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Diagonal entries (real part); used on Hermitian matrices.
    pub fn real_diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].re).collect()
    }

    /// `self^H self`, the Gram matrix of the columns.
    pub fn gram(&self) -> CMatrix {
        let (n, m) = (self.rows, self.cols);
        let mut g = CMatrix::zeros(m, m);
        for a in 0..m {
            for b in a..m {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..n {
                    acc += self[(r, a)].conj() * self[(r, b)];
                }
                g[(a, b)] = acc;
                g[(b, a)] = acc.conj();
            }
        }
        g
    }

    /// `self^H v` for a column vector `v` of length `rows`.
    pub fn hermitian_mul_vec(&self, v: &[C64]) -> Vec<C64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![C64::new(0.0, 0.0); self.cols];
        for r in 0..self.rows {
            let vr = v[r];
            for (c, o) in out.iter_mut().enumerate() {
                *o += self[(r, c)].conj() * vr;
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self += s * u v^H`.
    pub fn add_outer_scaled(&mut self, s: C64, u: &[C64], v: &[C64]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for i in 0..self.rows {
            let su = s * u[i];
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (x, vj) in row.iter_mut().zip(v) {
                *x += su * vj.conj();
            }
        }
    }

    /// Forces exact Hermitian symmetry by averaging with the adjoint.
    pub fn hermitian_part(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix add shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix sub shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    /// Panicking product; use [`matmul`] for a checked version.
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        matmul(self, rhs).expect("matrix product shape mismatch")
    }
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let mut out = CMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a[(i, k)];
            if aik == C64::new(0.0, 0.0) {
                continue;
            }
            let brow = b.row(k);
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

pub fn hermitian(a: &CMatrix) -> CMatrix {
    CMatrix::from_fn(a.cols, a.rows, |i, j| a[(j, i)].conj())
}

/// Kronecker product of two column vectors.
pub fn kron(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

/// Packed LU factorisation with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    pub fn new(a: &CMatrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                op: "lu",
                shape: a.shape(),
            });
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..n {
                    let ukj = lu[(k, j)];
                    lu[(i, j)] -= f * ukj;
                }
            }
        }
        Ok(Lu {
            lu,
            perm,
            sign,
            singular,
        })
    }

    pub fn pivots(&self) -> Vec<C64> {
        (0..self.lu.rows).map(|i| self.lu[(i, i)]).collect()
    }

    /// max|pivot| / min|pivot|; infinite when a pivot vanished.
    pub fn pivot_ratio(&self) -> f64 {
        if self.singular {
            return f64::INFINITY;
        }
        let mags: Vec<f64> = self.pivots().iter().map(|p| p.norm()).collect();
        let max = mags.iter().cloned().fold(0.0, f64::max);
        let min = mags.iter().cloned().fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    pub fn det(&self) -> C64 {
        if self.singular {
            return C64::new(0.0, 0.0);
        }
        self.pivots()
            .iter()
            .fold(C64::new(self.sign, 0.0), |acc, &p| acc * p)
    }

    fn check_conditioning(&self) -> Result<()> {
        let ratio = self.pivot_ratio();
        if ratio > PIVOT_RATIO_LIMIT {
            return Err(Error::Singular { condition: ratio });
        }
        Ok(())
    }

    /// Solves `A x = b` for one right-hand side.
    pub fn solve_vec(&self, b: &[C64]) -> Result<Vec<C64>> {
        self.check_conditioning()?;
        let n = self.lu.rows;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                let xk = x[k];
                x[i] -= l * xk;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                let xk = x[k];
                x[i] -= u * xk;
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        self.check_conditioning()?;
        let n = self.lu.rows;
        let mut inv = CMatrix::zeros(n, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            e.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            e[j] = C64::new(1.0, 0.0);
            let col = self.solve_vec(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    Lu::new(a)?.inverse()
}

/// Determinant via pivoted LU; exactly zero when a pivot column vanishes.
pub fn det(a: &CMatrix) -> Result<C64> {
    Ok(Lu::new(a)?.det())
}

/// Moore-Penrose pseudoinverse of a tall full-column-rank matrix via the
/// normal equations, `(A^H A)^-1 A^H`.
pub fn pseudo_inverse(a: &CMatrix) -> Result<CMatrix> {
    if a.rows < a.cols {
        return Err(Error::DimensionMismatch {
            op: "pseudo_inverse (needs rows >= cols)",
            left: a.shape(),
            right: (a.cols, a.rows),
        });
    }
    let gram_inv = inverse(&a.gram())?;
    matmul(&gram_inv, &hermitian(a))
}

/// Lower-triangular Cholesky factor `L` with `A = L L^H`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: CMatrix,
}

impl Cholesky {
    pub fn new(a: &CMatrix) -> Result<Cholesky> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                op: "cholesky",
                shape: a.shape(),
            });
        }
        let n = a.rows;
        let mut l = CMatrix::zeros(n, n);
        let mut dmax: f64 = 0.0;
        let mut dmin = f64::INFINITY;
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Singular {
                    condition: f64::INFINITY,
                });
            }
            let djj = d.sqrt();
            dmax = dmax.max(djj);
            dmin = dmin.min(djj);
            l[(j, j)] = C64::new(djj, 0.0);
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        // squared pivots of L L^H correspond to the LU pivots
        let ratio = (dmax / dmin).powi(2);
        if ratio > PIVOT_RATIO_LIMIT {
            return Err(Error::Singular { condition: ratio });
        }
        Ok(Cholesky { l })
    }

    pub fn factor(&self) -> &CMatrix {
        &self.l
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[C64]) -> Vec<C64> {
        let n = self.l.rows;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let lik = self.l[(i, k)];
                let yk = y[k];
                y[i] -= lik * yk;
            }
            y[i] /= self.l[(i, i)];
        }
        y
    }

    /// Solves `A x = b`.
    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let n = self.l.rows;
        let mut x = self.forward(b);
        for i in (0..n).rev() {
            for k in i + 1..n {
                let lki = self.l[(k, i)].conj();
                let xk = x[k];
                x[i] -= lki * xk;
            }
            x[i] /= self.l[(i, i)];
        }
        x
    }

    /// Diagonal of `A^-1`: `[A^-1]_ii = || L^-1 e_i ||^2`.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let n = self.l.rows;
        let mut e = vec![C64::new(0.0, 0.0); n];
        (0..n)
            .map(|i| {
                e.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                e[i] = C64::new(1.0, 0.0);
                self.forward(&e).iter().map(|z| z.norm_sqr()).sum()
            })
            .collect()
    }

    pub fn log_det(&self) -> f64 {
        (0..self.l.rows).map(|i| 2.0 * self.l[(i, i)].re.ln()).sum()
    }
}
