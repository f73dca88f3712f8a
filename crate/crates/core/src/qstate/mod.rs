//! Dense complex linear algebra and quantum-state primitives.
//!
//! Tensor products use the A-major convention: basis index `i_a * dim_b + i_b`.

mod eigen;
mod matrix;
mod state;

pub use eigen::{hermitian_eigenvalues, hermitian_eigh, HermitianEigen};
pub use matrix::{tensor, ComplexMatrix};
pub use num_complex::Complex64;
pub use state::{
    entropy_of_spectrum, overlap, partial_trace, partial_trace_matrix, von_neumann_entropy, DensityMatrix, Keep,
    PureState, Tolerances,
};
