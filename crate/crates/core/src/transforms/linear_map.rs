use std::io::Write;
use std::ops::{Add, Mul, Sub};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par::Execution;

pub type C64 = Complex64;

/// Scalar types the real-valued fast transforms operate on.
pub trait Sample:
    Copy + Default + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
}

impl Sample for f64 {}
impl Sample for C64 {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    pub fn join(self, other: Field) -> Field {
        if self == Field::Complex || other == Field::Complex {
            Field::Complex
        } else {
            Field::Real
        }
    }
}

/// A square, matrix-free linear operator on complex vectors.
///
/// For sensing operators `forward` is the measurement direction `Φ*`; for
/// sparsity operators it is the synthesis `Ψ`. `adjoint` is always the exact
/// conjugate transpose of `forward`.
pub trait LinearMap: Send + Sync {
    fn dim(&self) -> usize;

    fn field(&self) -> Field;

    /// Applies the operator in place. `x.len()` must equal `dim()`.
    fn forward_in_place(&self, x: &mut [C64]);

    /// Applies the conjugate transpose in place. `x.len()` must equal `dim()`.
    fn adjoint_in_place(&self, x: &mut [C64]);

    fn rows(&self) -> usize {
        self.dim()
    }

    fn cols(&self) -> usize {
        self.dim()
    }

    fn forward(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.check_len(x.len())?;
        let mut out = x.to_vec();
        self.forward_in_place(&mut out);
        Ok(out)
    }

    fn adjoint(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.check_len(x.len())?;
        let mut out = x.to_vec();
        self.adjoint_in_place(&mut out);
        Ok(out)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::dim(format!(
                "operator of size {} applied to vector of length {len}",
                self.dim()
            )));
        }
        Ok(())
    }
}

impl<M: LinearMap + ?Sized> LinearMap for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn field(&self) -> Field {
        (**self).field()
    }
    fn forward_in_place(&self, x: &mut [C64]) {
        (**self).forward_in_place(x)
    }
    fn adjoint_in_place(&self, x: &mut [C64]) {
        (**self).adjoint_in_place(x)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearMap for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn field(&self) -> Field {
        Field::Real
    }
    fn forward_in_place(&self, _x: &mut [C64]) {}
    fn adjoint_in_place(&self, _x: &mut [C64]) {}
}

/// `outer ∘ inner`: forward applies `inner` first.
#[derive(Debug, Clone)]
pub struct Compose<A, B> {
    outer: A,
    inner: B,
}

impl<A: LinearMap, B: LinearMap> Compose<A, B> {
    pub fn new(outer: A, inner: B) -> Result<Self> {
        if outer.dim() != inner.dim() {
            return Err(Error::dim(format!(
                "cannot compose operators of size {} and {}",
                outer.dim(),
                inner.dim()
            )));
        }
        Ok(Compose { outer, inner })
    }
}

impl<A: LinearMap, B: LinearMap> LinearMap for Compose<A, B> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn field(&self) -> Field {
        self.outer.field().join(self.inner.field())
    }
    fn forward_in_place(&self, x: &mut [C64]) {
        self.inner.forward_in_place(x);
        self.outer.forward_in_place(x);
    }
    fn adjoint_in_place(&self, x: &mut [C64]) {
        self.outer.adjoint_in_place(x);
        self.inner.adjoint_in_place(x);
    }
}

/// `A*` as a map of its own: forward and adjoint swap roles.
#[derive(Debug, Clone, Copy)]
pub struct Adjoint<A>(pub A);

impl<A: LinearMap> LinearMap for Adjoint<A> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn field(&self) -> Field {
        self.0.field()
    }
    fn forward_in_place(&self, x: &mut [C64]) {
        self.0.adjoint_in_place(x)
    }
    fn adjoint_in_place(&self, x: &mut [C64]) {
        self.0.forward_in_place(x)
    }
}

/// Default entry cap for [`densify`].
pub const DEFAULT_DENSIFY_CAP: usize = 1 << 20;

/// Row-major dense complex matrix, used for oracle checks and debugging.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![C64::default(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), rows * cols);
        DenseMatrix {
            rows,
            cols,
            data: values.iter().map(|&v| C64::new(v, 0.0)).collect(),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == C64::default() {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &DenseMatrix) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for ar in 0..self.rows {
            for ac in 0..self.cols {
                let a = self.get(ar, ac);
                for br in 0..other.rows {
                    for bc in 0..other.cols {
                        out.set(ar * other.rows + br, ac * other.cols + bc, a * other.get(br, bc));
                    }
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Writes `re,im` pairs, one matrix row per line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        for r in 0..self.rows {
            let line: Vec<String> = (0..self.cols)
                .map(|c| {
                    let v = self.get(r, c);
                    format!("{},{}", v.re, v.im)
                })
                .collect();
            writeln!(w, "{}", line.join(",")).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Materializes `map` by applying it to every standard basis vector.
pub fn densify(map: &dyn LinearMap, cap: usize) -> Result<DenseMatrix> {
    let n = map.dim();
    let needed = n.saturating_mul(n);
    if needed > cap {
        return Err(Error::SizeCap {
            what: "densify",
            needed,
            cap,
        });
    }
    let columns = Execution::default().map_range(n, |j| {
        let mut e = vec![C64::default(); n];
        e[j] = C64::new(1.0, 0.0);
        map.forward_in_place(&mut e);
        e
    });
    let mut out = DenseMatrix::zeros(n, n);
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            out.set(i, j, *v);
        }
    }
    Ok(out)
}

pub(crate) fn to_complex(x: &[f64]) -> Vec<C64> {
    x.iter().map(|&v| C64::new(v, 0.0)).collect()
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn densify_identity() {
        let d = densify(&Identity(4), DEFAULT_DENSIFY_CAP).unwrap();
        assert_eq!(d, DenseMatrix::identity(4));
    }

    #[test]
    fn densify_cap() {
        assert!(matches!(
            densify(&Identity(64), 100),
            Err(Error::SizeCap { needed: 4096, .. })
        ));
    }

    #[test]
    fn wrong_length_is_dimension_error() {
        assert!(matches!(
            Identity(4).forward(&[C64::default(); 3]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn dense_kron_small() {
        let a = DenseMatrix::from_real(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = DenseMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let k = a.kron(&b);
        assert_eq!(k.get(0, 1), C64::new(1.0, 0.0));
        assert_eq!(k.get(3, 2), C64::new(4.0, 0.0));
        assert_eq!(k.get(2, 1), C64::new(3.0, 0.0));
    }
}
