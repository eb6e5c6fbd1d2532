use thiserror::Error;

pub type Result<T> = std::result::Result<T, CsdError>;

/// One entry of a Picard iterate-difference history: the distance between
/// iterates `n + 1` and `n`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IterateDiff {
    pub n: usize,
    /// Sup-norm difference over the slab, all four fields.
    pub sup: f64,
    /// Weighted space-time metric (factor 3 on the product terms).
    pub metric: f64,
}

#[derive(Debug, Error)]
pub enum CsdError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error(
        "domain overflow: {field} is non-negligible within {cells} cells of the boundary \
         (edge value {edge:.3e}); enlarge the grid"
    )]
    DomainOverflow {
        field: &'static str,
        cells: usize,
        edge: f64,
    },

    #[error("picard iteration did not converge after {iterations} iterations (last sup difference {last:.3e})")]
    ConvergenceFailure {
        iterations: usize,
        last: f64,
        history: Vec<IterateDiff>,
    },

    #[error(
        "slab starting at t = {t_start} cannot be shortened below one step \
         (contraction {contraction:.3}, data norms {norms:?})"
    )]
    SlabUnderflow {
        slab: usize,
        t_start: f64,
        contraction: f64,
        norms: [f64; 4],
    },
}

impl CsdError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CsdError::InvalidArgument(msg.into())
    }
}
