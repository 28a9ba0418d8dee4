//! Orthonormal sensing and sparsity bases, applied matrix-free.

mod dft;
mod dims;
mod fwht;
mod haar;
mod kron;
mod linear_map;

pub use dft::{dft_apply, CenteredDft};
pub use dims::{Dims, HSVolume, Index3D};
pub use fwht::{fwht_in_place, fwht_paley, Hadamard};
pub use haar::{
    dhw0_apply, dhw_apply, haar_analysis, haar_synthesis, idhw_apply, AtomIndex, Haar, IsotropicHaar, Orientation,
};
pub use kron::{kron_apply, Kron};
pub(crate) use linear_map::to_complex;
pub use linear_map::{
    densify, dot, norm2, Adjoint, Compose, DenseMatrix, Field, Identity, LinearMap, Sample, C64, DEFAULT_DENSIFY_CAP,
};

use crate::error::Result;
use crate::par::Execution;

/// Spatio-spectral sensing operator; `forward` computes `Φ_sp* x` with
/// `Φ_sp = Φ_had ⊗ Φ_dft`.
pub type SensingOperator = Kron<Hadamard, CenteredDft>;

/// Spatio-spectral sparsity basis `Ψ_sp = Ψ_idhw ⊗ Ψ_dhw`; `forward` synthesizes.
pub type SparsityOperator = Kron<IsotropicHaar, Haar>;

pub fn sensing_operator(dims: Dims) -> Result<SensingOperator> {
    Ok(Kron::new(Hadamard::new(dims.n_p())?, CenteredDft::new(dims.n_xi())?))
}

pub fn sparsity_operator(dims: Dims) -> Result<SparsityOperator> {
    Ok(Kron::new(IsotropicHaar::new(dims.n_p_bar())?, Haar::new(dims.n_xi())?))
}

/// `Ψ_sp* Φ_sp = (Ψ_idhw* Φ_had) ⊗ (Ψ_dhw* Φ_dft)` as a single Kronecker
/// product, which halves the transposes of applying the two in turn.
pub type CouplingOperator =
    Kron<Compose<Adjoint<IsotropicHaar>, Adjoint<Hadamard>>, Compose<Adjoint<Haar>, Adjoint<CenteredDft>>>;

pub fn coupling_operator(dims: Dims) -> Result<CouplingOperator> {
    Ok(Kron::new(
        Compose::new(
            Adjoint(IsotropicHaar::new(dims.n_p_bar())?),
            Adjoint(Hadamard::new(dims.n_p())?),
        )?,
        Compose::new(
            Adjoint(Haar::new(dims.n_xi())?),
            Adjoint(CenteredDft::new(dims.n_xi())?),
        )?,
    ))
}

/// Both spatio-spectral operators for one problem size.
#[derive(Debug, Clone)]
pub struct Operators {
    pub dims: Dims,
    pub sensing: SensingOperator,
    pub sparsity: SparsityOperator,
    pub coupling: CouplingOperator,
}

impl Operators {
    pub fn new(dims: Dims) -> Result<Self> {
        Ok(Operators {
            dims,
            sensing: sensing_operator(dims)?,
            sparsity: sparsity_operator(dims)?,
            coupling: coupling_operator(dims)?,
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.sensing = self.sensing.with_execution(exec);
        self.sparsity = self.sparsity.with_execution(exec);
        self.coupling = self.coupling.with_execution(exec);
        self
    }

    /// `Φ_sp* x` in Kronecker storage order.
    pub fn measure(&self, x: &mut [C64]) {
        self.sensing.forward_in_place(x);
    }

    /// `Φ_sp w`.
    pub fn unmeasure(&self, w: &mut [C64]) {
        self.sensing.adjoint_in_place(w);
    }

    /// `Ψ_sp s`.
    pub fn synthesize(&self, s: &mut [C64]) {
        self.sparsity.forward_in_place(s);
    }

    /// `Ψ_sp* x`.
    pub fn analyze(&self, x: &mut [C64]) {
        self.sparsity.adjoint_in_place(x);
    }

    /// `Ψ_sp* Φ_sp w`: sensing coefficients to sparsity coefficients.
    pub fn couple(&self, w: &mut [C64]) {
        self.coupling.forward_in_place(w);
    }

    /// `Φ_sp* Ψ_sp s`, the inverse of [`Operators::couple`].
    pub fn decouple(&self, s: &mut [C64]) {
        self.coupling.adjoint_in_place(s);
    }
}
