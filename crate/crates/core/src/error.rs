use thiserror::Error;

/// Errors raised by the analytic pipeline, the simulator and the scenario front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature budget exhausted in {integral}: value {value:e}, error estimate {error:e}")]
    Quadrature {
        integral: &'static str,
        value: f64,
        error: f64,
    },

    #[error("arccos argument {0} lies outside [-1, 1] by more than rounding")]
    AcosDomain(f64),

    #[error("{curve} left [0, 1] by {excursion:e} at t = {at}")]
    CurveExcursion {
        curve: &'static str,
        at: f64,
        excursion: f64,
    },

    #[error("simulator: {0}")]
    Simulator(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Process exit codes of the command-line tool.
pub mod exit {
    pub const OK: i32 = 0;
    /// A comparison ran but its verdict is FAIL.
    pub const VERDICT: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const QUADRATURE: i32 = 3;
    pub const SIMULATOR: i32 = 4;
    pub const IDENTITY: i32 = 5;
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Scenario(_) | Error::Io(_) | Error::Json(_) => exit::VALIDATION,
            Error::Quadrature { .. } | Error::AcosDomain(_) | Error::CurveExcursion { .. } => exit::QUADRATURE,
            Error::Simulator(_) => exit::SIMULATOR,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Error::InvalidParameter("x".into()).exit_code(), 2);
        assert_eq!(Error::Scenario("x".into()).exit_code(), 2);
        let q = Error::Quadrature {
            integral: "i",
            value: 0.0,
            error: 1.0,
        };
        assert_eq!(q.exit_code(), 3);
        assert_eq!(Error::AcosDomain(2.0).exit_code(), 3);
        assert_eq!(Error::Simulator("x".into()).exit_code(), 4);
        assert_eq!(exit::IDENTITY, 5);
    }
}
