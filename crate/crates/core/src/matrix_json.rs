//! Row-major JSON form for complex matrices: `{"re": [[..]], "im": [[..]]}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ComplexMatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl ComplexMatrixJson {
    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        let rows = |f: fn(&C64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        ComplexMatrixJson {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self, dim: usize) -> Result<DMatrix<C64>> {
        let ok = |rows: &Vec<Vec<f64>>| rows.len() == dim && rows.iter().all(|r| r.len() == dim);
        if !ok(&self.re) || !ok(&self.im) {
            return Err(Error::domain(format!("matrix must be {dim}×{dim}")));
        }
        Ok(DMatrix::from_fn(dim, dim, |i, j| C64::new(self.re[i][j], self.im[i][j])))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ComplexVectorJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexVectorJson {
    pub fn from_vector(v: &DVector<C64>) -> Self {
        ComplexVectorJson {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }

    pub fn from_slice(v: &[C64]) -> Self {
        ComplexVectorJson {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_vec(&self, len: Option<usize>) -> Result<Vec<C64>> {
        if self.re.len() != self.im.len() || len.is_some_and(|n| n != self.re.len()) {
            return Err(Error::domain("complex vector has inconsistent length"));
        }
        Ok(self.re.iter().zip(&self.im).map(|(&a, &b)| C64::new(a, b)).collect())
    }
}
