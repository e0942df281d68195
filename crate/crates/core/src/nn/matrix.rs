use crate::error::NnError;

use super::scalar::{axpy, dot, Scalar};

/// Dense row-major matrix.
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
            data: vec![T::ZERO; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, NnError> {
        if data.len() != rows * cols {
            return Err(NnError::shape("Matrix::from_vec", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
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

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out += self · x`
    pub fn matvec_acc(&self, x: &[T], out: &mut [T]) -> Result<(), NnError> {
        if x.len() != self.cols || out.len() != self.rows {
            return Err(NnError::shape(
                "matvec",
                format!("{}x{} · {}", self.rows, self.cols, self.cols),
                format!("vector {} into {}", x.len(), out.len()),
            ));
        }
        for (r, o) in out.iter_mut().enumerate() {
            *o += dot(self.row(r), x);
        }
        Ok(())
    }

    /// `out += selfᵀ · v`
    pub fn matvec_t_acc(&self, v: &[T], out: &mut [T]) -> Result<(), NnError> {
        if v.len() != self.rows || out.len() != self.cols {
            return Err(NnError::shape(
                "matvec_t",
                format!("{}x{}ᵀ · {}", self.rows, self.cols, self.rows),
                format!("vector {} into {}", v.len(), out.len()),
            ));
        }
        for (r, &vr) in v.iter().enumerate() {
            if vr != T::ZERO {
                axpy(vr, self.row(r), out);
            }
        }
        Ok(())
    }

    /// `self += u ⊗ v`
    pub fn add_outer(&mut self, u: &[T], v: &[T]) -> Result<(), NnError> {
        if u.len() != self.rows || v.len() != self.cols {
            return Err(NnError::shape(
                "add_outer",
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", u.len(), v.len()),
            ));
        }
        for (r, &ur) in u.iter().enumerate() {
            if ur != T::ZERO {
                axpy(ur, v, self.row_mut(r));
            }
        }
        Ok(())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_transpose() {
        let m = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut out = vec![0.0; 2];
        m.matvec_acc(&[1.0, 0.0, -1.0], &mut out).unwrap();
        assert_eq!(out, vec![-2.0, -2.0]);
        let mut out = vec![0.0; 3];
        m.matvec_t_acc(&[1.0, 1.0], &mut out).unwrap();
        assert_eq!(out, vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn outer_product_accumulates() {
        let mut m = Matrix::<f64>::zeros(2, 2);
        m.add_outer(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        m.add_outer(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(m.data(), &[4.0, 5.0, 6.0, 8.0]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let m = Matrix::<f32>::zeros(2, 3);
        let mut out = vec![0.0; 2];
        assert!(m.matvec_acc(&[1.0, 2.0], &mut out).is_err());
        assert!(Matrix::<f32>::from_vec(2, 2, vec![0.0; 3]).is_err());
        let mut m = m;
        assert!(m.add_outer(&[1.0; 3], &[1.0; 3]).is_err());
    }
}
