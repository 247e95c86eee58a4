use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Sampler block, attached to errors raised inside a Gibbs sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    StatePath,
    Coefficients,
    Shrinkage,
    ObsScales,
    StateScales,
    ObsDof,
    StateDof,
    Volatility,
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Block::StatePath => "state path (FFBS)",
            Block::Coefficients => "static coefficients",
            Block::Shrinkage => "Dirichlet-Laplace scales",
            Block::ObsScales => "observation scales",
            Block::StateScales => "state scales",
            Block::ObsDof => "observation degrees of freedom",
            Block::StateDof => "state degrees of freedom",
            Block::Volatility => "stochastic volatility",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numerical breakdown in {context} at index {index}")]
    Numerical { context: &'static str, index: usize },
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("Sharpe ratio undefined: strategy returns have zero dispersion")]
    UndefinedSharpe,
    #[error("{block} block failed: {source}")]
    Block {
        block: Block,
        #[source]
        source: Box<Error>,
    },
    #[error("sweep {iteration} failed: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn in_block(self, block: Block) -> Self {
        Error::Block {
            block,
            source: Box::new(self),
        }
    }

    /// True when the root cause is a numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical { .. } => true,
            Error::Block { source, .. } | Error::Iteration { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
