use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn zeros_like(other: &Dense) -> Self {
        Dense::zeros(other.rows, other.cols)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Dense::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                values.len()
            )));
        }
        Ok(Dense { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::Dimension(format!(
                "row {i} has {} entries, expected {cols}",
                r.len()
            )));
        }
        Ok(Dense {
            rows: rows.len(),
            cols,
            values: rows.concat(),
        })
    }

    /// Column vector (`n x 1`).
    pub fn column(values: Vec<f64>) -> Self {
        Dense {
            rows: values.len(),
            cols: 1,
            values,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn check_same_shape(&self, other: &Dense, op: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "{op}: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Dense) -> Result<Dense> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "matmul: {:?} x {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut out = Dense::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.values[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * x` for a vector `x` of length `cols`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "matvec: {:?} x vector of {}",
                self.shape(),
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| super::dot(self.row(r), x))
            .collect())
    }

    /// `self^T * y` for a vector `y` of length `rows`.
    pub fn matvec_transposed(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::Dimension(format!(
                "transposed matvec: {:?} x vector of {}",
                self.shape(),
                y.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(r)) {
                *o += yr * w;
            }
        }
        Ok(out)
    }

    /// Accumulates the outer product `scale * a b^T` into `self`.
    pub fn add_outer(&mut self, scale: f64, a: &[f64], b: &[f64]) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        for (r, &ar) in a.iter().enumerate() {
            let s = scale * ar;
            if s == 0.0 {
                continue;
            }
            for (v, &bc) in self.row_mut(r).iter_mut().zip(b) {
                *v += s * bc;
            }
        }
    }

    pub fn transpose(&self) -> Dense {
        let mut out = Dense::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// Stacks matrices vertically; all inputs must share a column count.
    pub fn concat_rows(parts: &[&Dense]) -> Result<Dense> {
        let cols = parts.first().map_or(0, |m| m.cols);
        if parts.iter().any(|m| m.cols != cols) {
            return Err(Error::Dimension("concat_rows: column counts differ".into()));
        }
        let values = parts.iter().flat_map(|m| m.values.iter().copied()).collect();
        Ok(Dense {
            rows: parts.iter().map(|m| m.rows).sum(),
            cols,
            values,
        })
    }

    /// Places matrices side by side; all inputs must share a row count.
    pub fn concat_cols(parts: &[&Dense]) -> Result<Dense> {
        let rows = parts.first().map_or(0, |m| m.rows);
        if parts.iter().any(|m| m.rows != rows) {
            return Err(Error::Dimension("concat_cols: row counts differ".into()));
        }
        let cols = parts.iter().map(|m| m.cols).sum();
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for m in parts {
                values.extend_from_slice(m.row(r));
            }
        }
        Ok(Dense { rows, cols, values })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Dense {
        Dense {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn relu(&self) -> Dense {
        self.map(super::relu)
    }

    pub fn tanh(&self) -> Dense {
        self.map(f64::tanh)
    }

    pub fn sigmoid(&self) -> Dense {
        self.map(super::sigmoid)
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn add_assign(&mut self, other: &Dense) -> Result<()> {
        self.check_same_shape(other, "add_assign")?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: f64, other: &Dense) -> Result<()> {
        self.check_same_shape(other, "add_scaled")?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn l2_norm_sq(&self) -> f64 {
        super::l2_norm_sq(&self.values)
    }

    pub fn max_abs_diff(&self, other: &Dense) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct DenseRepr {
    shape: [usize; 2],
    data: Vec<Vec<f64>>,
}

impl Serialize for Dense {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DenseRepr {
            shape: [self.rows, self.cols],
            data: self.to_rows(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dense {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = DenseRepr::deserialize(d)?;
        let [rows, cols] = repr.shape;
        if repr.data.len() != rows || repr.data.iter().any(|r| r.len() != cols) {
            return Err(D::Error::custom(format!(
                "matrix data does not match declared shape {rows}x{cols}"
            )));
        }
        Ok(Dense {
            rows,
            cols,
            values: repr.data.concat(),
        })
    }
}
