use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error in {function}: {reason}")]
    Domain {
        function: &'static str,
        reason: String,
    },

    #[error(
        "quadrature did not converge: estimate {estimate:e}, error {abs_error:e} after {intervals} intervals"
    )]
    QuadratureNonConvergence {
        estimate: f64,
        abs_error: f64,
        intervals: usize,
    },

    #[error("series `{series}` exceeded its cap of {cap} terms without meeting tolerance")]
    SeriesCapExceeded { series: &'static str, cap: usize },

    #[error("series `{series}` diverges (terms growing at index {index})")]
    SeriesDivergence { series: &'static str, index: usize },

    #[error("no admissible tier for association")]
    NoAdmissibleTier,

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("{}", config_message(*.line, key, reason))]
    Config {
        line: Option<usize>,
        key: Option<String>,
        reason: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

fn config_message(line: Option<usize>, key: &Option<String>, reason: &str) -> String {
    let mut out = String::from("config");
    if let Some(l) = line {
        out.push_str(&format!(" line {l}"));
    }
    if let Some(k) = key {
        out.push_str(&format!(" key `{k}`"));
    }
    format!("{out}: {reason}")
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(function: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            function,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Fails with `InvalidParameter` unless `value` is finite and satisfies `ok`.
pub(crate) fn check(
    name: &'static str,
    value: f64,
    ok: impl FnOnce(f64) -> bool,
    requirement: &str,
) -> Result<()> {
    if value.is_finite() && ok(value) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{value} violates {requirement}")))
    }
}
