use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A string contained something other than `0`, `1`, `O` or `I`.
    InvalidCharacter { index: usize, found: char },
    /// The brute-force oracle refuses inputs whose shorter side exceeds `limit`.
    BruteForceTooLarge { min_side: usize, limit: usize },
    /// Exhaustive enumeration refused because `n` exceeds `limit`.
    SizeGuard { n: usize, limit: usize },
    /// A string is shorter than the simulation needs.
    StringTooShort { needed: usize, got: usize },
    /// An integer argument lies outside its admissible range.
    OutOfRange { what: &'static str, value: i64, min: i64, max: i64 },
    /// A real argument lies outside its domain.
    Domain { what: &'static str, value: f64 },
    /// A ring or stationary window must have even length.
    OddLength(usize),
    /// The supplied flux is not strictly concave with zero endpoints.
    NotConcave { at: f64 },
    /// Rejection sampling of a balanced configuration gave up.
    SamplingExhausted { attempts: u32 },
    /// The Jacobian became numerically singular.
    SingularJacobian,
    /// Newton iteration failed from every start.
    NoConvergence { starts: usize, best_residual: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidCharacter { index, found } => {
                write!(f, "invalid character {found:?} at position {index}; expected 0/1 or O/I")
            }
            Error::BruteForceTooLarge { min_side, limit } => {
                write!(f, "brute-force oracle limited to min side {limit}, got {min_side}")
            }
            Error::SizeGuard { n, limit } => write!(f, "n = {n} exceeds exhaustive limit {limit}"),
            Error::StringTooShort { needed, got } => {
                write!(f, "string of length {got} is too short, need at least {needed}")
            }
            Error::OutOfRange { what, value, min, max } => {
                write!(f, "{what} = {value} outside [{min}, {max}]")
            }
            Error::Domain { what, value } => write!(f, "{what} = {value} outside its domain"),
            Error::OddLength(len) => write!(f, "length {len} must be even"),
            Error::NotConcave { at } => write!(f, "flux is not strictly concave near y = {at}"),
            Error::SamplingExhausted { attempts } => {
                write!(f, "no balanced configuration after {attempts} attempts")
            }
            Error::SingularJacobian => f.write_str("singular Jacobian"),
            Error::NoConvergence { starts, best_residual } => write!(
                f,
                "Newton failed to reach an admissible root from {starts} starts (best residual {best_residual:e})"
            ),
        }
    }
}

impl core::error::Error for Error {}
