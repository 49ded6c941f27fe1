use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not Hermitian (max |M - M†| = {defect:e})")]
    NonHermitian { defect: f64 },

    #[error("dimension {dim} exceeds the dense solver limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("lattice carries no integer image F(γ)")]
    MissingIntegerImage,

    #[error("z = {re}{im:+}i lies within {dist:e} of the spectrum")]
    TooCloseToSpectrum { re: f64, im: f64, dist: f64 },

    #[error("eigenvalue {eigenvalue} lies within {distance:e} of the contour")]
    EigenvalueOnContour { eigenvalue: f64, distance: f64 },

    #[error("contour encloses {rank} of {dim} eigenvalues")]
    ContourMisconfigured { rank: usize, dim: usize },

    #[error("spectrum is empty")]
    EmptySpectrum,

    #[error("no spectral gap detected: {0}")]
    NoGap(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),
}
