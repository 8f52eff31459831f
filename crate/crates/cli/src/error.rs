use std::fmt;

/// Process exit codes.
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_STATE: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub msg: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            msg: msg.into(),
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            msg: msg.into(),
        }
    }

    pub fn state(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_STATE,
            msg: msg.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl From<nspp::Error> for CliError {
    fn from(e: nspp::Error) -> Self {
        use nspp::Error::*;
        let code = match &e {
            Config { .. } | InvalidDomain(_) | InvalidArgument(_) | InvalidPartition(_) | RejectionExhausted { .. } => {
                EXIT_CONFIG
            }
            Data(_) | OutsideRaster { .. } | SingularDesign(_) => EXIT_DATA,
            _ => EXIT_STATE,
        };
        CliError {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e.to_string())
    }
}
