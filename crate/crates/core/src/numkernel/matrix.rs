use std::fmt;

use nalgebra::DMatrix;
use num::complex::Complex64;

use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Dense complex matrix in floating point, used by the numerical routines.
pub type CMat = DMatrix<Complex64>;

/// Dense complex matrix whose entries are [`Scalar`]s (row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixC {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl MatrixC {
    pub fn new(rows: usize, cols: usize, data: Vec<Scalar>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch("matrices must be non-empty".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} entries for a {}x{} matrix", data.len(), rows, cols)));
        }
        Ok(MatrixC { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        MatrixC::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Convenience constructor from integer entries.
    pub fn from_ints(rows: &[&[i64]]) -> Self {
        MatrixC::from_rows(rows.iter().map(|r| r.iter().map(|&x| Scalar::int(x)).collect()).collect()).expect("rectangular integer matrix")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatrixC { rows, cols, data: vec![Scalar::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = MatrixC::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one());
        }
        m
    }

    pub fn diagonal(values: &[Scalar]) -> Self {
        let n = values.len();
        let mut m = MatrixC::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.set(i, i, v.clone());
        }
        m
    }

    /// Matrix unit `E_{ij}` of size `n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = MatrixC::zeros(n, n);
        m.set(i, j, Scalar::one());
        m
    }

    pub fn from_float(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(Scalar::Float(m[(i, j)]));
            }
        }
        MatrixC { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_float(&self) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).to_c64())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_exact(&self) -> bool {
        self.data.iter().all(Scalar::is_exact)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn map(&self, f: impl Fn(&Scalar) -> Scalar) -> MatrixC {
        MatrixC { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn scale(&self, s: &Scalar) -> MatrixC {
        self.map(|x| x * s)
    }

    pub fn neg(&self) -> MatrixC {
        self.map(|x| -x)
    }

    pub fn to_float_mode(&self) -> MatrixC {
        self.map(Scalar::to_float)
    }

    fn same_shape(&self, other: &MatrixC, what: &str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!("{}: {}x{} vs {}x{}", what, self.rows, self.cols, other.rows, other.cols)));
        }
        Ok(())
    }

    pub fn add(&self, other: &MatrixC) -> Result<MatrixC> {
        self.same_shape(other, "add")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(MatrixC { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &MatrixC) -> Result<MatrixC> {
        self.same_shape(other, "sub")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(MatrixC { rows: self.rows, cols: self.cols, data })
    }

    pub fn mul(&self, other: &MatrixC) -> Result<MatrixC> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!("mul: {}x{} times {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        if !(self.is_exact() && other.is_exact()) {
            return Ok(MatrixC::from_float(&(self.to_float() * other.to_float())));
        }
        let mut out = MatrixC::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Scalar::zero();
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    if a.is_zero() {
                        continue;
                    }
                    acc = acc + a * other.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn trace(&self) -> Result<Scalar> {
        self.require_square("trace")?;
        Ok((0..self.rows).fold(Scalar::zero(), |acc, i| acc + self.get(i, i).clone()))
    }

    pub fn transpose(&self) -> MatrixC {
        let mut out = MatrixC::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn require_square(&self, what: &str) -> Result<()> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!("{} needs a square matrix, got {}x{}", what, self.rows, self.cols)));
        }
        Ok(())
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x.to_c64().norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest modulus strictly below the diagonal.
    pub fn max_below_diagonal(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i.min(self.cols) {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    /// Structural upper-triangularity: every below-diagonal entry is zero.
    pub fn is_upper_triangular(&self) -> bool {
        (0..self.rows).all(|i| (0..i.min(self.cols)).all(|j| self.get(i, j).is_zero()))
    }

    pub fn diagonal_entries(&self) -> Vec<Scalar> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i).clone()).collect()
    }

    /// Inverse; exact Gauss-Jordan elimination in exact mode, LU otherwise.
    pub fn inverse(&self) -> Result<MatrixC> {
        self.require_square("inverse")?;
        if !self.is_exact() {
            return self
                .to_float()
                .try_inverse()
                .map(|m| MatrixC::from_float(&m))
                .ok_or_else(|| Error::Numerical("singular matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = MatrixC::identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a.get(r, col).is_zero()).ok_or_else(|| Error::Numerical("singular matrix".into()))?;
            a.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            let p = a.get(col, col).clone();
            for j in 0..n {
                a.set(col, j, a.get(col, j) / &p);
                inv.set(col, j, inv.get(col, j) / &p);
            }
            for r in 0..n {
                if r == col || a.get(r, col).is_zero() {
                    continue;
                }
                let f = a.get(r, col).clone();
                for j in 0..n {
                    a.set(r, j, a.get(r, j) - &(&f * a.get(col, j)));
                    inv.set(r, j, inv.get(r, j) - &(&f * inv.get(col, j)));
                }
            }
        }
        Ok(inv)
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// `C · self · C_inv`.
    pub fn conjugate(&self, c: &MatrixC, c_inv: &MatrixC) -> Result<MatrixC> {
        c.mul(self)?.mul(c_inv)
    }

    /// Determinant (exact Bareiss-free elimination in exact mode).
    pub fn det(&self) -> Result<Scalar> {
        self.require_square("det")?;
        if !self.is_exact() {
            return Ok(Scalar::Float(self.to_float().determinant()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Scalar::one();
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| !a.get(r, col).is_zero()) else {
                return Ok(Scalar::zero());
            };
            if pivot != col {
                a.swap_rows(col, pivot);
                det = -det;
            }
            let p = a.get(col, col).clone();
            det = &det * &p;
            for r in col + 1..n {
                if a.get(r, col).is_zero() {
                    continue;
                }
                let f = a.get(r, col) / &p;
                for j in col..n {
                    a.set(r, j, a.get(r, j) - &(&f * a.get(col, j)));
                }
            }
        }
        Ok(det)
    }
}

impl fmt::Display for MatrixC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            write!(f, "{}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Frobenius norm of a float matrix.
pub fn fnorm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl serde::Serialize for MatrixC {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.rows))?;
        for i in 0..self.rows {
            seq.serialize_element(self.row(i))?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        let a = MatrixC::identity(2);
        let b = MatrixC::identity(3);
        assert!(a.add(&b).is_err());
        assert!(a.mul(&b).is_err());
        assert!(MatrixC::new(2, 2, vec![Scalar::one(); 3]).is_err());
        assert!(MatrixC::zeros(2, 3).trace().is_err());
    }

    #[test]
    fn exact_inverse_and_det() {
        let r = MatrixC::from_ints(&[&[1, 1], &[1, 2]]);
        let inv = r.inverse().unwrap();
        assert_eq!(inv, MatrixC::from_ints(&[&[2, -1], &[-1, 1]]));
        assert_eq!(r.det().unwrap(), Scalar::one());
        assert!(MatrixC::from_ints(&[&[1, 2], &[2, 4]]).inverse().is_err());
    }
}
