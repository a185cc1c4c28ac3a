use thiserror::Error;

/// Failures reported by the scattering toolkit.
///
/// Each variant corresponds to a precondition of one pipeline stage; the CLI maps
/// them onto process exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScatterError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("input has not decayed at the grid end: |last| = {last:e} > {fraction} * max = {max:e}")]
    NonDecayedInput { last: f64, max: f64, fraction: f64 },
    #[error("evaluation point lies on the integration contour (Im k = {im:e})")]
    PoleOnContour { im: f64 },
    #[error("unsupported tail decay rate {0}; only 1, 2 and 3 are integrated analytically")]
    UnsupportedTail(f64),
    #[error("backward sweep did not converge: {0}")]
    NoConvergence(String),
    #[error("Jost function nearly vanishes at k = {k:e} (|f| = {modulus:e})")]
    ZeroJost { k: f64, modulus: f64 },
    #[error("phase jump of {jump:.3} rad between consecutive nodes near k = {k:e}; refine the grid")]
    UnwrapAmbiguity { k: f64, jump: f64 },
    #[error("winding index of S is {0}; reduce it with the Blaschke-factor step before inversion")]
    NonzeroIndex(i64),
    #[error("logarithm branch could not be continued: {0}")]
    BranchCutFailure(String),
    #[error("symbol 1 + H~(k) is not positive: minimum {min:e} at k = {k:e}")]
    SymbolNotPositive { min: f64, k: f64 },
    #[error("singular system: pivot {pivot:e} at step {step}")]
    SingularSystem { pivot: f64, step: usize },
    #[error("no stored resolvent row at x = {0}")]
    MissingRow(f64),
    #[error("ODE integration failed: {0}")]
    OdeFailure(String),
    #[error("Riccati solution blew up at x = {x} (|A| = {value:e})")]
    BlowUp { x: f64, value: f64 },
    #[error("Marchenko equation could not be solved: {0}")]
    NoContraction(String),
    #[error("invalid Blaschke parameter gamma = {0}")]
    InvalidGamma(f64),
    #[error("winding index {computed} does not match the bound-state data (expected {expected})")]
    IndexMismatch { computed: i64, expected: i64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = ScatterError> = std::result::Result<T, E>;
