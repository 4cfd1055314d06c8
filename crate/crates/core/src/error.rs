use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {value} outside the admissible range {range}")]
    Domain { value: f64, range: String },

    #[error("{what} = {value} outside the tabulated range [{lo}, {hi}]")]
    Range {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("hypothesis {0} does not hold for this profile")]
    Hypothesis(&'static str),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid sample table: {0}")]
    Table(String),

    #[error("front tracking failed: {0}")]
    Tracking(String),

    #[error("parameter selection failed: {0}")]
    Selection(String),

    #[error("|k| = {k} is not inside the admissible cone |k| < {bound}")]
    Cone { k: f64, bound: f64 },

    #[error("|grad u| = {norm:e} below the floor at stencil point ({i}, {j})")]
    Degenerate { i: usize, j: usize, norm: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
