use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("singularity: {0}")]
    Singularity(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },
    #[error("open surface: edge ({0}, {1}) is shared by {2} faces")]
    OpenSurface(usize, usize, usize),
    #[error("inconsistent winding at edge ({0}, {1})")]
    InconsistentWinding(usize, usize),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("accuracy error: {0}")]
    Accuracy(String),
    #[error("linear system is numerically singular (pivot ratio {0:.3e}); possible resonance or quadrature failure")]
    SingularSystem(f64),
    #[error("iterative solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
