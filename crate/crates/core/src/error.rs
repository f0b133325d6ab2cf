use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the models, transport solvers and filter.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two objects that must agree in size do not.
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A configuration value is outside its valid range.
    Config(String),
    /// A non-finite or otherwise invalid number was produced or supplied.
    Numeric(String),
    /// Marginals of a transport problem do not carry the same mass.
    InfeasibleMarginals { row_mass: f64, col_mass: f64 },
    /// All importance weights collapsed to zero.
    Degeneracy { step: Option<usize>, detail: String },
    /// A state sample became non-finite during propagation.
    Divergence {
        step: Option<usize>,
        hypothesis: usize,
        member: usize,
    },
}

impl Error {
    pub(crate) fn dim(what: &'static str, expected: usize, found: usize) -> Self {
        Error::Dimension {
            what,
            expected,
            found,
        }
    }

    /// Attaches the assimilation step index to degeneracy and divergence errors.
    pub fn at_step(self, n: usize) -> Self {
        match self {
            Error::Degeneracy { detail, .. } => Error::Degeneracy {
                step: Some(n),
                detail,
            },
            Error::Divergence {
                hypothesis, member, ..
            } => Error::Divergence {
                step: Some(n),
                hypothesis,
                member,
            },
            other => other,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension {
                what,
                expected,
                found,
            } => write!(f, "dimension mismatch in {what}: expected {expected}, found {found}"),
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Numeric(msg) => write!(f, "numerical error: {msg}"),
            Error::InfeasibleMarginals { row_mass, col_mass } => write!(
                f,
                "infeasible transport marginals: row mass {row_mass} != column mass {col_mass}"
            ),
            Error::Degeneracy { step, detail } => match step {
                Some(n) => write!(f, "weight degeneracy at step {n}: {detail}"),
                None => write!(f, "weight degeneracy: {detail}"),
            },
            Error::Divergence {
                step,
                hypothesis,
                member,
            } => {
                write!(f, "non-finite state in hypothesis {hypothesis}, member {member}")?;
                if let Some(n) = step {
                    write!(f, " at step {n}")?;
                }
                Ok(())
            }
        }
    }
}

impl core::error::Error for Error {}
