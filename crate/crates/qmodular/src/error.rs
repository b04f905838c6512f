use std::fmt;

/// Library-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Discriminant/weight pair violates the standing hypotheses
    /// (D > 0, D not a square, D ≡ 0, 1 mod 4, k even and ≥ 2).
    InvalidParams(String),
    /// An argument lies outside the domain of the operation
    /// (wrong half-plane, x outside [0,1], κ too small, ...).
    Domain(String),
    /// The point sits on the branch cut of a logarithm of a root ratio.
    BranchCut { z_re: f64, z_im: f64 },
    /// Evaluation refused because the point is (numerically) on the
    /// exceptional set of geodesics, where the sum diverges or a stencil
    /// would straddle a wall.
    OnExceptionalSet { distance: f64 },
    /// A matrix argument is not in the expected group.
    BadMatrix(String),
    /// Quadrature or extrapolation failed to reach the requested accuracy.
    NonConvergent { achieved: f64, target: f64 },
    /// Unknown verification suite name.
    UnknownSuite(String),
    /// Unknown function name in an evaluation request.
    UnknownFunction(String),
    /// I/O failure while writing a report.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::BranchCut { z_re, z_im } => {
                write!(f, "point {z_re}+{z_im}i lies on a logarithm branch cut")
            }
            Error::OnExceptionalSet { distance } => write!(
                f,
                "point is within {distance:.3e} of the exceptional geodesic set"
            ),
            Error::BadMatrix(msg) => write!(f, "bad matrix: {msg}"),
            Error::NonConvergent { achieved, target } => write!(
                f,
                "failed to converge: achieved {achieved:.3e}, target {target:.3e}"
            ),
            Error::UnknownSuite(name) => write!(f, "unknown verification suite '{name}'"),
            Error::UnknownFunction(name) => write!(f, "unknown function '{name}'"),
            Error::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
