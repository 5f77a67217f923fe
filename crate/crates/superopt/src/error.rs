use thiserror::Error;

#[derive(Debug, Error)]
pub enum SuperoptError {
    #[error("aliasing: grid size {grid} too small for symbol of degree {nsym} (need >= {need})")]
    Aliasing { grid: usize, nsym: usize, need: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("zero_operator: the truncated operator is zero beyond tolerance")]
    ZeroOperator,

    #[error("singular value index {j} out of range (min(m,n) = {limit})")]
    SingularIndexOutOfRange { j: usize, limit: usize },

    #[error("insufficient_grid: phase jump {jump:.3} >= pi between adjacent nodes")]
    InsufficientGrid { jump: f64 },

    #[error("index_mismatch: kernel dimension {kernel_dim} disagrees with winding estimate {winding_dim}")]
    IndexMismatch { kernel_dim: usize, winding_dim: usize },

    #[error("negative density: min entry {min:.3e} below tolerance")]
    NegativeDensity { min: f64 },

    #[error("zero column passed to inner-outer factorization")]
    ZeroColumn,

    #[error("all entries zero: no common inner divisor")]
    AllEntriesZero,

    #[error("completion_not_analytic: residual {residual:.3e} after {iterations} iterations")]
    CompletionNotAnalytic { residual: f64, iterations: usize },

    #[error("non-isometric input: residual {0:.3e}")]
    NotIsometric(f64),

    #[error("optimal_solve_not_converged: gap {gap:.3e} exceeds tolerance {tol:.3e} at level {level}")]
    OptimalSolveNotConverged { gap: f64, tol: f64, level: usize },

    #[error("reduction_failed at level {level}: sandwich residual {residual:.3e} exceeds {tol:.3e}")]
    ReductionFailed { level: usize, residual: f64, tol: f64 },

    #[error("essential_norm_hypothesis failed at level {level}: lower bound {lower_bound:.6e} not below operator norm {norm:.6e}")]
    EssentialNormHypothesis { level: usize, lower_bound: f64, norm: f64 },

    #[error("maximizing vector has vanishing corrected-block component at level {level} (floor {floor:.3e} < guard {guard:.3e})")]
    VanishingComponent { level: usize, floor: f64, guard: f64 },

    #[error("analyticity violated at level {level}: anti-analytic energy {energy:.3e}")]
    NotAnalytic { level: usize, energy: f64 },

    #[error("reconstruction residual {residual:.3e} exceeds {tol:.3e}")]
    ReconstructionFailed { residual: f64, tol: f64 },

    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, SuperoptError>;
