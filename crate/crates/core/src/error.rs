use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector norm {norm:e} is too small to decompose")]
    ZeroVector { norm: f64 },

    #[error("operator has no bipartite dimensions attached")]
    MissingDims,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("map is not Hermiticity preserving (Choi deviation {deviation:e})")]
    NotHermiticityPreserving { deviation: f64 },

    #[error("map is not completely positive (Choi min eigenvalue {min_eig:e})")]
    NotCompletelyPositive { min_eig: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },

    #[error("operator is not a density matrix: {reason}")]
    NotAState { reason: String },

    #[error("empty operator list")]
    EmptyList,

    #[error("rank bound {k} outside 1..={d}")]
    BadRank { k: usize, d: usize },

    #[error("operator rank {rank} exceeds bound {k}")]
    RankTooHigh { rank: usize, k: usize },

    #[error("block operator is not positive (min eigenvalue {min_eig:e}); map is not k-positive")]
    BlockNotPsd { min_eig: f64 },

    #[error("level k = {k} outside 1..={max}")]
    BadK { k: usize, max: usize },

    #[error("bad parameter: {0}")]
    BadParam(String),

    #[error("unknown family: {0}")]
    BadFamily(String),

    #[error("Kraus construction does not reproduce the operator (deviation {deviation:e})")]
    ConstructionMismatch { deviation: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
