use flost::io::FormatError;

pub const USAGE: u8 = 2;
pub const IO: u8 = 3;
pub const FORMAT: u8 = 4;
pub const VALIDATION: u8 = 5;
pub const NUMERICAL: u8 = 6;

/// A diagnostic plus the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(USAGE, message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(VALIDATION, message)
    }

    /// Prefix the message with the file or stage it concerns.
    pub fn context(mut self, what: impl std::fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

fn code_of(e: &flost::Error) -> u8 {
    match e {
        flost::Error::Format(f) => format_code(f),
        flost::Error::SvdFailure { .. } | flost::Error::SymmetryViolation { .. } => NUMERICAL,
        flost::Error::GridPoint { source, .. } => code_of(source),
        _ => VALIDATION,
    }
}

fn format_code(e: &FormatError) -> u8 {
    match e {
        FormatError::Io(_) => IO,
        _ => FORMAT,
    }
}

impl From<flost::Error> for Failure {
    fn from(e: flost::Error) -> Self {
        Self::new(code_of(&e), e.to_string())
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Self::new(format_code(&e), e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::new(IO, e.to_string())
    }
}
