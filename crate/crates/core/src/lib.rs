//! Simulation and reconstruction toolkit for compressive single-pixel
//! Fourier-transform interferometry.
//!
//! The sensing basis is the Kronecker product of a Paley-ordered Hadamard
//! basis (spatial coded apertures) and a centered DFT (optical path
//! difference); the sparsity basis is the Kronecker product of a 2D isotropic
//! Haar basis and a 1D Haar basis. Measurements are drawn by variable density
//! sampling from a pmf proportional to squared local-coherence bounds, and
//! volumes are recovered by weighted basis pursuit denoising.

pub mod acquisition;
pub mod coherence;
pub mod error;
pub mod harness;
pub mod io;
pub mod par;
pub mod phantom;
pub mod recovery;
pub mod seed;
pub mod transforms;

pub use error::{Error, Result};
pub use transforms::{Dims, HSVolume, Index3D};
