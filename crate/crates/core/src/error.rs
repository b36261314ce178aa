use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("prime table too small: requested {requested}, capacity {capacity}")]
    TableTooSmall { requested: u64, capacity: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("bisection bracket not separated: slope at lower end {lo_slope}, at upper end {hi_slope} (growth tolerance {growth_tol})")]
    Bracket {
        lo_slope: f64,
        hi_slope: f64,
        growth_tol: f64,
    },

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("admissibility violated by {norm}: {detail}")]
    Admissibility { norm: String, detail: String },

    #[error("block {block}: sum of p^-(1+q/m) is {measured}, required < {bound}")]
    Construction {
        block: usize,
        measured: f64,
        bound: f64,
    },

    #[error("prime budget exhausted while building block {failed_block}; {} complete block(s)", complete.len())]
    PartialPlan {
        failed_block: usize,
        complete: Vec<Vec<u64>>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: {message}")]
    Data { line: usize, message: String },
}
