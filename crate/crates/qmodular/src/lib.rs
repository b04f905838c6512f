//! Numerical library for indefinite integral binary quadratic forms and the
//! non-modular objects built from them: sign-weighted local cusp forms,
//! locally harmonic completions, holomorphic/non-holomorphic Eichler
//! integrals, and a Schwartz-weighted theta kernel, together with a
//! cross-verification harness and CLI.

pub mod cli;
pub mod diffops;
pub mod error;
pub mod maass;
pub mod qforms;
pub mod series;
pub mod special;
pub mod theta;
pub mod verify;

pub use error::{Error, Result};
pub use qforms::{Params, QForm};
