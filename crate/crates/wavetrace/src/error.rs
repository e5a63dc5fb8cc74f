use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("jet shape mismatch: ({0}, {1}) vs ({2}, {3})")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("derivative order {order} exceeds jet degree {max_degree}")]
    DegreeOverflow { order: usize, max_degree: usize },
    #[error("singular composition: {0}")]
    SingularComposition(String),
    #[error("non-degenerate bouncing ball required (product of curvature factors = {product})")]
    Degenerate { product: f64 },
    #[error("invalid domain spec: {0}")]
    Spec(String),
    #[error("chord exits chart {chart} at x = {x}")]
    ChartExit { chart: usize, x: f64 },
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("singular Hessian")]
    SingularHessian,
    #[error("circulant symbol vanishes at k = {k} (r = {r}, a = {a})")]
    SymbolPole { r: usize, a: f64, k: usize },
    #[error("Chebyshev denominator 1 - T_2r(-a/2) vanishes (r = {r}, a = {a})")]
    ChebyshevPole { r: usize, a: f64 },
    #[error("row sum undefined at a = -2")]
    RowSumPole,
    #[error("effectively bad Floquet parameter a = {a}: all decoupling determinants below {tol:e}")]
    BadFloquet { a: f64, tol: f64 },
    #[error("cubic vanishes (|f'''(0)| = {value:e}); the inverse algorithm is inapplicable")]
    VanishingCubic { value: f64 },
    #[error("inverse Hessian diagonal vanishes or is undefined for every available iterate at a = {a}")]
    HessianPole { a: f64 },
    #[error("insufficient jet data: need order {need}, have {have}")]
    InsufficientJets { need: usize, have: usize },
    #[error("invariant table is missing entry (r = {r}, j = {j})")]
    MissingEntry { r: usize, j: usize },
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    /// Stable machine-readable name, used by the CLI reports.
    pub fn obstruction(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(..) => "dimension-mismatch",
            Error::DegreeOverflow { .. } => "degree-overflow",
            Error::SingularComposition(_) => "singular-composition",
            Error::Degenerate { .. } => "degenerate-orbit",
            Error::Spec(_) => "invalid-spec",
            Error::ChartExit { .. } => "chart-exit",
            Error::NonConvergence { .. } => "non-convergence",
            Error::SingularHessian => "singular-hessian",
            Error::SymbolPole { .. } => "symbol-pole",
            Error::ChebyshevPole { .. } => "chebyshev-pole",
            Error::RowSumPole => "row-sum-pole",
            Error::BadFloquet { .. } => "bad-floquet",
            Error::VanishingCubic { .. } => "vanishing-cubic",
            Error::HessianPole { .. } => "hessian-pole",
            Error::InsufficientJets { .. } => "insufficient-jets",
            Error::MissingEntry { .. } => "missing-entry",
            Error::Quadrature(_) => "quadrature",
            Error::Invalid(_) => "invalid-input",
        }
    }
}
