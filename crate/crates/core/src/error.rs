use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("element {element} is not convex")]
    NonConvexElement { element: usize },

    #[error("mesh file {path}: {message}")]
    MeshFormat { path: String, message: String },

    #[error("voronoi generator: {0}")]
    DegenerateSeeds(String),

    #[error("unsupported polynomial order {0} (need order >= 2)")]
    UnsupportedOrder(usize),

    #[error("element {element}: singular {what} (condition estimate {condition:.3e})")]
    SingularLocalSystem {
        element: usize,
        what: &'static str,
        condition: f64,
    },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("linear solve inaccurate: relative residual {residual:.3e} exceeds {threshold:.1e}")]
    IllConditioned { residual: f64, threshold: f64 },

    #[error("unknown problem identifier `{0}`")]
    UnknownProblem(String),

    #[error("manufactured solution `{problem}`: {derivative} mismatch at ({x:.6}, {y:.6}), relative error {error:.3e}")]
    DerivativeMismatch {
        problem: String,
        derivative: &'static str,
        x: f64,
        y: f64,
        error: f64,
    },

    #[error("problem data inconsistent: {0}")]
    InconsistentProblem(String),

    #[error("nonlinear solve did not converge at stage {stage} (epsilon = {epsilon}): residual {residual:.3e} after {iterations} iterations")]
    NotConverged {
        stage: usize,
        epsilon: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
