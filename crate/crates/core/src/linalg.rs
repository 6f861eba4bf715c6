//! Dense exact linear algebra over GF(p).

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::field::Gf;

/// Row-major dense matrix of residues.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries((0..self.rows).map(|i| self.row(i))).finish()
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<u32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    /// Panics on ragged input; meant for literals and tests.
    pub fn from_rows<R: AsRef<[u32]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u32> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [u32] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for i in 0..self.rows {
            data.extend(idx.iter().map(|&j| self[(i, j)]));
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn add(&self, gf: Gf, other: &Matrix) -> Result<Matrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Dimension(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| gf.add(a, b)).collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn mul(&self, gf: Gf, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let p = gf.modulus() as u64;
        let mut out = Matrix::zeros(self.rows, other.cols);
        let mut acc = vec![0u64; other.cols];
        for i in 0..self.rows {
            acc.iter_mut().for_each(|a| *a = 0);
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == 0 {
                    continue;
                }
                for (slot, &b) in acc.iter_mut().zip(other.row(l)) {
                    *slot = (*slot + a as u64 * b as u64) % p;
                }
            }
            for (o, a) in out.row_mut(i).iter_mut().zip(&acc) {
                *o = *a as u32;
            }
        }
        Ok(out)
    }

    /// `self * v` for a column vector `v`.
    pub fn mul_vec(&self, gf: Gf, v: &[u32]) -> Vec<u32> {
        assert_eq!(v.len(), self.cols, "vector length");
        (0..self.rows).map(|i| gf.dot(self.row(i), v)).collect()
    }

    /// `self * v` written into `out`.
    pub fn mul_vec_into(&self, gf: Gf, v: &[u32], out: &mut [u32]) {
        assert_eq!(v.len(), self.cols, "vector length");
        assert_eq!(out.len(), self.rows, "output length");
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = gf.dot(self.row(i), v);
        }
    }

    /// `v * self` for a row vector `v`.
    pub fn vec_mul(&self, gf: Gf, v: &[u32]) -> Vec<u32> {
        assert_eq!(v.len(), self.rows, "vector length");
        let p = gf.modulus() as u64;
        let mut acc = vec![0u64; self.cols];
        for (i, &a) in v.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (slot, &b) in acc.iter_mut().zip(self.row(i)) {
                *slot = (*slot + a as u64 * b as u64) % p;
            }
        }
        acc.into_iter().map(|x| x as u32).collect()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = u32;

    fn index(&self, (i, j): (usize, usize)) -> &u32 {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut u32 {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

/// Entry `(i, j)` is `points[i]^j`.
pub fn vandermonde(gf: Gf, points: &[u32], cols: usize) -> Result<Matrix> {
    for (i, &x) in points.iter().enumerate() {
        if points[..i].contains(&x) {
            return Err(Error::InvalidPoints(format!("duplicate point {x}")));
        }
    }
    let mut m = Matrix::zeros(points.len(), cols);
    for (i, &x) in points.iter().enumerate() {
        let mut acc = 1 % gf.modulus();
        for j in 0..cols {
            m[(i, j)] = acc;
            acc = gf.mul(acc, x);
        }
    }
    Ok(m)
}

/// Index of the first row of `a` lying in the span of the rows before it.
pub fn first_dependent_row(gf: Gf, a: &Matrix) -> Option<usize> {
    // Incremental echelon basis: (pivot column, normalized row).
    let mut basis: Vec<(usize, Vec<u32>)> = Vec::new();
    for i in 0..a.rows() {
        let mut r = a.row(i).to_vec();
        for (pc, b) in &basis {
            let f = r[*pc];
            if f != 0 {
                for (x, &y) in r.iter_mut().zip(b) {
                    *x = gf.sub(*x, gf.mul(f, y));
                }
            }
        }
        match r.iter().position(|&x| x != 0) {
            None => return Some(i),
            Some(pc) => {
                let inv = gf.inv(r[pc]).expect("nonzero pivot");
                r.iter_mut().for_each(|x| *x = gf.mul(*x, inv));
                basis.push((pc, r));
            }
        }
    }
    None
}

/// Solves `a * x = b` for square `a` by Gauss-Jordan elimination, taking the
/// first nonzero entry of each column as pivot.
pub fn solve(gf: Gf, a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Dimension(format!(
            "solve needs a square matrix, got {}x{}",
            n,
            a.cols()
        )));
    }
    if b.rows() != n {
        return Err(Error::Dimension(format!(
            "right-hand side has {} rows, expected {n}",
            b.rows()
        )));
    }
    let m = b.cols();
    let w = n + m;
    let mut aug = Matrix::zeros(n, w);
    for i in 0..n {
        aug.row_mut(i)[..n].copy_from_slice(a.row(i));
        aug.row_mut(i)[n..].copy_from_slice(b.row(i));
    }
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| aug[(r, col)] != 0) else {
            let row = first_dependent_row(gf, a).unwrap_or(col);
            return Err(Error::Singular { row });
        };
        if piv != col {
            for j in 0..w {
                aug.data.swap(piv * w + j, col * w + j);
            }
        }
        let inv = gf.inv(aug[(col, col)])?;
        aug.row_mut(col).iter_mut().for_each(|x| *x = gf.mul(*x, inv));
        let pivot_row = aug.row(col).to_vec();
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = aug[(r, col)];
            if f == 0 {
                continue;
            }
            for (x, &y) in aug.row_mut(r).iter_mut().zip(&pivot_row) {
                *x = gf.sub(*x, gf.mul(f, y));
            }
        }
    }
    Ok(aug.select_cols(&(n..w).collect::<Vec<_>>()))
}

pub fn solve_vec(gf: Gf, a: &Matrix, b: &[u32]) -> Result<Vec<u32>> {
    let rhs = Matrix::new(b.len(), 1, b.to_vec())?;
    Ok(solve(gf, a, &rhs)?.into_data())
}

pub fn inverse(gf: Gf, a: &Matrix) -> Result<Matrix> {
    solve(gf, a, &Matrix::identity(a.rows()))
}

/// Determinant by elimination; zero for singular input.
pub fn determinant(gf: Gf, a: &Matrix) -> Result<u32> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Dimension("determinant of a non-square matrix".into()));
    }
    let mut m = a.clone();
    let mut det = 1 % gf.modulus();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| m[(r, col)] != 0) else {
            return Ok(0);
        };
        if piv != col {
            for j in 0..n {
                m.data.swap(piv * n + j, col * n + j);
            }
            det = gf.neg(det);
        }
        let d = m[(col, col)];
        det = gf.mul(det, d);
        let inv = gf.inv(d)?;
        for r in col + 1..n {
            let f = gf.mul(m[(r, col)], inv);
            if f == 0 {
                continue;
            }
            for j in col..n {
                let v = gf.sub(m[(r, j)], gf.mul(f, m[(col, j)]));
                m[(r, j)] = v;
            }
        }
    }
    Ok(det)
}

/// Symmetric matrix stored as its upper triangle, row-major, diagonal
/// included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricMatrix {
    dim: usize,
    upper: Vec<u32>,
}

pub fn triangle_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

impl SymmetricMatrix {
    pub fn pack(dim: usize, symbols: &[u32]) -> Result<Self> {
        if symbols.len() != triangle_len(dim) {
            return Err(Error::LengthMismatch {
                expected: triangle_len(dim),
                got: symbols.len(),
            });
        }
        Ok(SymmetricMatrix {
            dim,
            upper: symbols.to_vec(),
        })
    }

    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix {
            dim,
            upper: vec![0; triangle_len(dim)],
        }
    }

    /// Reads the upper triangle of `m`, failing if `m` is not symmetric.
    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        let dim = m.rows();
        if m.cols() != dim {
            return Err(Error::Dimension("symmetric matrix must be square".into()));
        }
        let mut upper = Vec::with_capacity(triangle_len(dim));
        for i in 0..dim {
            for j in i..dim {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::Dimension(format!("matrix not symmetric at ({i},{j})")));
                }
                upper.push(m[(i, j)]);
            }
        }
        Ok(SymmetricMatrix { dim, upper })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn unpack(&self) -> &[u32] {
        &self.upper
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // row r of the triangle holds dim - r entries
        let start = i * self.dim - i * i.saturating_sub(1) / 2;
        self.upper[start + (j - i)]
    }

    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dim, self.dim);
        let mut it = self.upper.iter();
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = *it.next().expect("triangle length");
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}
