//! Cones of positive maps on `d × d` matrix algebras.
//!
//! Maps are stored as superoperators and converted to Choi matrices and
//! Kraus families on demand. The [`certify`] module produces one-sided
//! membership certificates for the k-positive, completely positive,
//! k-superpositive and partially transposed cones; [`witness`] applies
//! k-positive maps as Schmidt-number detectors on states.

pub mod bipartite;
pub mod certify;
pub mod error;
pub mod fuzz;
pub mod maps;
pub mod random;
pub mod witness;

pub use bipartite::{
    hermitian_eig, hs_inner, numerical_rank, partial_transpose, reshuffle, schmidt_decompose,
    unreshuffle, BipartiteVector, CMatrix, CVector, HermitianEigen, MatrixOp, SchmidtDecomposition,
    Subsystem, C64,
};
pub use certify::{
    classify, decomposable_certify, dual_pairing, is_ccp, is_cp, is_k_positive_certify,
    k_block_positive_certify, schmidt_number_bounds, Certificate, ClassifyOpts, ConeReport,
    Detector, SeesawOpts, Verdict,
};
pub use error::{Error, Result};
pub use maps::{KrausSet, MapRep};
pub use witness::{Family, ScanRow, Witness};
