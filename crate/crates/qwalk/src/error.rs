use thiserror::Error;

/// Errors produced by walk construction, evolution, and band analysis.
#[derive(Debug, Error)]
pub enum Error {
    /// Nonzero amplitude would move past the last lattice site; the lattice is
    /// too small for the requested number of steps.
    #[error("nonzero amplitude at x = {x} would leave the lattice (half-width {half_width})")]
    BoundaryOverflow { x: i32, half_width: i32 },

    /// The operation needs a state with positive norm, but the walker has
    /// fully decayed.
    #[error("state norm is zero; the walker has fully decayed")]
    ZeroNorm,

    /// A probability row or count table carries no mass where some is required.
    #[error("empty distribution: {0}")]
    EmptyDistribution(&'static str),

    /// A count table failed structural validation.
    #[error("malformed count table: {0}")]
    MalformedTable(String),

    /// The winding field dropped below tolerance, signalling a band gap
    /// closing (a topological transition) at or near the reported momentum.
    #[error("degenerate band near k = {k:.6}: winding field magnitude {magnitude:.3e} below tolerance")]
    DegenerateBand { k: f64, magnitude: f64 },

    /// The accumulated winding angle did not close on an integer number of
    /// turns. This indicates an unresolved branch ambiguity and should not
    /// occur for a closed sampling loop.
    #[error("winding accumulation did not close on an integer: {turns} turns")]
    NonIntegerWinding { turns: f64 },

    /// A parameter lies outside its allowed domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A state and a coin field (or two rows) disagree on lattice size.
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
