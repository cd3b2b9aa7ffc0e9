use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {0}: only d = 1 and d = 2 are supported")]
    InvalidDimension(usize),
    #[error("invalid box radius {0}: must be at least 1")]
    InvalidRadius(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid axis {axis} for a {dim}-dimensional box")]
    InvalidAxis { axis: usize, dim: usize },
    #[error("model requires d = {expected}, got d = {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("inner box of radius {inner} is not contained in box of radius {outer}")]
    BoxNotContained { inner: usize, outer: usize },
    #[error("matrix is singular to working precision (smallest singular value {smallest:e}, norm {norm:e})")]
    SingularInput { smallest: f64, norm: f64 },
    #[error("operator is not chiral: diagonal blocks of the grading do not vanish")]
    NotChiral,
    #[error("matrix is not Hermitian (max |M - M*| = {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (max |U*U - 1| = {0:e})")]
    NotUnitary(f64),
    #[error("kappa = {0} outside [0, 1]")]
    KappaOutOfRange(f64),
    #[error("kappa = {kappa} is outside the proven window [0, 2 kappa_star) (radicand {radicand:e})")]
    KappaTooLarge { kappa: f64, radicand: f64 },
    #[error("outer radius {outer} must be at least twice the localizer radius {ell}")]
    OuterTooSmall { ell: usize, outer: usize },
    #[error("model is gapless on the probe box (gap {0:e})")]
    GaplessModel(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("path endpoint at t = {t} is singular (gap {gap:e})")]
    EndpointSingular { t: f64, gap: f64 },
    #[error("homotopy edge is singular at s = {s} (gap {gap:e})")]
    EdgeSingular { s: f64, gap: f64 },
    #[error("could not resolve eigenvalue crossing near t = {t} (interval width {width:e})")]
    UnresolvedCrossing { t: f64, width: f64 },
    #[error("spectral flow bookkeeping disagrees: signature route {signature}, crossing route {crossings}")]
    FlowMismatch { signature: i64, crossings: i64 },
    #[error("kernel of Q0 + Q1 is ill-conditioned (eigenvalue {0:e} in the ambiguous band)")]
    IllConditionedKernel(f64),
    #[error("gap closes on the k-grid (smallest singular value {0:e})")]
    GapClosedOnGrid(f64),
    #[error("quadrature did not converge (doubling changed result by {0:e})")]
    QuadratureUnconverged(f64),
    #[error("locality budget violated: operator needs C = {needed:e}, budget has C = {budget:e}")]
    BudgetViolated { needed: f64, budget: f64 },
    #[error("eigen/singular value decomposition failed to converge")]
    Decomposition,
}
