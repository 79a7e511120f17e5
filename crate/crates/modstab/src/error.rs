use thiserror::Error;

/// Everything that can go wrong between a parameter point and a stability verdict.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("argument outside the model domain: {0}")]
    Domain(String),
    #[error("no bounded positivity interval of P found")]
    NoRoots,
    #[error("degenerate turning point ({0})")]
    DegenerateRoot(String),
    #[error("{count} positivity intervals found; select one with well_index")]
    MultipleWells { count: usize },
    #[error("well_index {index} requested but only {count} wells exist")]
    WellIndex { index: usize, count: usize },
    #[error("quadrature not converged: relative change {rel:.3e} between orders")]
    QuadratureNotConverged { rel: f64 },
    #[error("jet inconsistent: {what} differs by {rel:.3e} (relative)")]
    JetInconsistent { what: &'static str, rel: f64 },
    #[error("non-generic point: {0}")]
    NonGeneric(String),
    #[error("point is off the dispersion manifold: |W_J| = {residual:.3e}")]
    UnconstrainedPoint { residual: f64 },
    #[error("degenerate pencil: leading coefficient {0:.3e} below tolerance")]
    DegeneratePencil(f64),
    #[error("elimination branch degenerate: {0}")]
    BranchDegenerate(String),
    #[error("matrix A is numerically singular (det = {0:.3e})")]
    SingularA(f64),
    #[error("W_J = 0 has no solution on the scan interval: {0}")]
    ConstraintUnsolvable(String),
    #[error("constraint solve left the domain at {0}")]
    LeftOmega(String),
    #[error("profile integration diverged: {0}")]
    ProfileDivergence(String),
    #[error("Floquet operator under-resolved: coefficient tail {tail:.3e} at N = {modes}")]
    Resolution { tail: f64, modes: usize },
    #[error("eigensolver failed: {0}")]
    EigenFailure(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    ///
    /// `2` is reserved for configuration problems, `3` for genuine degeneracy of the
    /// data, `1` for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::DegenerateRoot(_)
            | Error::NonGeneric(_)
            | Error::BranchDegenerate(_)
            | Error::DegeneratePencil(_)
            | Error::SingularA(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
