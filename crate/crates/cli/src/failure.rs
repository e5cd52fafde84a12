//! Mapping of failures onto process exit codes.

use std::fmt;

use pyrokin::ErrorKind;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_CONFIG: u8 = 4;

/// Invalid flags or configuration values.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Bad or missing input data detected by the front end itself.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

/// A numerical step the front end itself could not complete.
#[derive(Debug)]
pub struct NumericError(pub String);

impl fmt::Display for NumericError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericError {}

pub fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

pub fn input_err(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

pub fn numeric_err(msg: impl Into<String>) -> anyhow::Error {
    NumericError(msg.into()).into()
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<pyrokin::Error>() {
            return match e.kind() {
                ErrorKind::Input => EXIT_INPUT,
                ErrorKind::Numeric => EXIT_NUMERIC,
                ErrorKind::Config => EXIT_CONFIG,
            };
        }
        if cause.is::<ConfigError>() {
            return EXIT_CONFIG;
        }
        if cause.is::<NumericError>() {
            return EXIT_NUMERIC;
        }
        if cause.is::<InputError>() || cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return EXIT_INPUT;
        }
    }
    EXIT_INPUT
}
