use std::fmt;

use dualvol::Error;

pub const VERIFY_FAILED: u8 = 1;
pub const INVALID: u8 = 2;
pub const QUADRATURE: u8 = 3;
pub const INFEASIBLE: u8 = 4;
pub const AMBIGUOUS: u8 = 5;
pub const IO: u8 = 6;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(INVALID, message)
    }

    pub fn io(context: &str, err: impl fmt::Display) -> Self {
        Self::new(IO, format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::QuadratureNonConvergence { .. } | Error::NonFiniteIntegrand { .. } => QUADRATURE,
            Error::Infeasible { .. } => INFEASIBLE,
            Error::Ambiguous { .. } => AMBIGUOUS,
            Error::InvalidEllipsoid(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidArgument(_)
            | Error::GammaPole(_)
            | Error::UnsupportedOrder { .. }
            | Error::Unsupported(_) => INVALID,
        };
        Self::new(code, e.to_string())
    }
}
