use std::path::PathBuf;

/// Errors raised by the geometry, quadrature and experiment layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("point lies on the circumcircle plane; side of cap is ambiguous")]
    AmbiguousSide,

    #[error("singular density edge: {0}")]
    SingularEdge(&'static str),

    #[error("argument error: {0}")]
    Argument(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    NotConverged { estimate: f64, error_bound: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv {path} line {line}: {msg}")]
    Csv {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            domain,
        }
    }
}
