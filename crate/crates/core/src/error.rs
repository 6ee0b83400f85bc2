use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("elasticity matrix is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("strain outside the Padé validity range: denominator matrix is singular")]
    PadeSingular,

    #[error("log error bound undefined for |E| = {norm} (requires |E| < 0.5)")]
    BoundUndefined { norm: f64 },

    #[error("degenerate stretch: 1 + 2E1 + 2E2 + 4E1E2 = {value} <= 0")]
    DegenerateStretch { value: f64 },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error(
        "resolved stress ratio |tau/xi| = {ratio:.3} on system {system} exceeds the cap {cap}; reduce the time step"
    )]
    RatioOverflow { system: usize, ratio: f64, cap: f64 },

    #[error("non-positive slip resistance {value:e} on system {system}")]
    NonPositiveResistance { system: usize, value: f64 },

    #[error("flow Newton did not converge in {iterations} iterations (residual {residual:e})")]
    FlowNotConverged { iterations: usize, residual: f64 },

    #[error("dynamic relaxation did not converge in {substeps} substeps (last residual {last_residual:e} Pa)")]
    RelaxationNotConverged { substeps: usize, last_residual: f64 },

    #[error("non-positive Jacobian determinant {det:e} in element {element}")]
    NegativeJacobian { element: usize, det: f64 },

    #[error("element {element}, gauss point {point}: {source}")]
    AtPoint {
        element: usize,
        point: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("global Newton failed at time {time:e} after {bisections} bisections")]
    NewtonDiverged { time: f64, bisections: usize },

    #[error("mesh: {0}")]
    Mesh(String),
}
