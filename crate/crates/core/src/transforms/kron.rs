use super::linear_map::{Field, LinearMap, C64};
use crate::error::{Error, Result};
use crate::par::Execution;

/// Matrix-free Kronecker product `A ⊗ B`.
///
/// Vectors are viewed as `dim(A)` consecutive blocks of length `dim(B)`
/// (the `B` index runs fastest); `B` acts within blocks and `A` across them.
#[derive(Debug, Clone)]
pub struct Kron<A, B> {
    outer: A,
    inner: B,
    exec: Execution,
}

impl<A: LinearMap, B: LinearMap> Kron<A, B> {
    pub fn new(outer: A, inner: B) -> Self {
        Kron {
            outer,
            inner,
            exec: Execution::default(),
        }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn outer(&self) -> &A {
        &self.outer
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    fn apply(&self, x: &mut [C64], adjoint: bool) {
        let (na, nb) = (self.outer.dim(), self.inner.dim());
        debug_assert_eq!(x.len(), na * nb);
        let inner = &self.inner;
        self.exec.for_each_chunk(x, nb, |block| {
            if adjoint {
                inner.adjoint_in_place(block)
            } else {
                inner.forward_in_place(block)
            }
        });
        if na == 1 {
            return;
        }
        let mut t = vec![C64::default(); x.len()];
        transpose_into(x, &mut t, na, nb);
        let outer = &self.outer;
        self.exec.for_each_chunk(&mut t, na, |fiber| {
            if adjoint {
                outer.adjoint_in_place(fiber)
            } else {
                outer.forward_in_place(fiber)
            }
        });
        transpose_into(&t, x, nb, na);
    }
}

/// `rows × cols` row-major -> `cols × rows` row-major.
fn transpose_into(x: &[C64], out: &mut [C64], rows: usize, cols: usize) {
    const TILE: usize = 16;
    for r0 in (0..rows).step_by(TILE) {
        let r1 = (r0 + TILE).min(rows);
        for c0 in (0..cols).step_by(TILE) {
            let c1 = (c0 + TILE).min(cols);
            for r in r0..r1 {
                let row = &x[r * cols..];
                for c in c0..c1 {
                    out[c * rows + r] = row[c];
                }
            }
        }
    }
}

impl<A: LinearMap, B: LinearMap> LinearMap for Kron<A, B> {
    fn dim(&self) -> usize {
        self.outer.dim() * self.inner.dim()
    }
    fn field(&self) -> Field {
        self.outer.field().join(self.inner.field())
    }
    fn forward_in_place(&self, x: &mut [C64]) {
        self.apply(x, false)
    }
    fn adjoint_in_place(&self, x: &mut [C64]) {
        self.apply(x, true)
    }
}

/// Applies `(A ⊗ B) u`, or its adjoint.
pub fn kron_apply(a: &dyn LinearMap, b: &dyn LinearMap, u: &[C64], adjoint: bool) -> Result<Vec<C64>> {
    let need = a.dim() * b.dim();
    if u.len() != need {
        return Err(Error::dim(format!(
            "Kronecker operator of size {need} applied to vector of length {}",
            u.len()
        )));
    }
    let k = Kron::new(a, b);
    let mut out = u.to_vec();
    k.apply(&mut out, adjoint);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::linear_map::{densify, norm2, Identity, DEFAULT_DENSIFY_CAP};
    use crate::transforms::{CenteredDft, Hadamard};

    fn sample(n: usize) -> Vec<C64> {
        (0..n)
            .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect()
    }

    #[test]
    fn identity_factors() {
        let u = sample(8);
        let v = kron_apply(&Identity(2), &Identity(4), &u, false).unwrap();
        assert_eq!(u, v);
    }

    #[test]
    fn matches_dense_kronecker() {
        let had = Hadamard::new(4).unwrap();
        let dft = CenteredDft::new(4).unwrap();
        let dense = densify(&had, DEFAULT_DENSIFY_CAP)
            .unwrap()
            .kron(&densify(&dft, DEFAULT_DENSIFY_CAP).unwrap());
        let u = sample(16);
        let fast = kron_apply(&had, &dft, &u, false).unwrap();
        let want = dense.mul_vec(&u);
        let err: f64 = fast
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-12 * norm2(&want));
        assert!((norm2(&fast) - norm2(&u)).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(kron_apply(&Identity(2), &Identity(4), &sample(7), false).is_err());
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let had = Hadamard::new(16).unwrap();
        let dft = CenteredDft::new(32).unwrap();
        let u = sample(512);
        let a = Kron::new(had, dft.clone())
            .with_execution(Execution::Sequential)
            .forward(&u)
            .unwrap();
        let b = Kron::new(had, dft).forward(&u).unwrap();
        assert_eq!(a, b);
    }
}
