use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid would need n_x = {needed} points, above the cap {cap}")]
    GridCapExceeded { needed: usize, cap: usize },
    #[error("grids do not match")]
    GridMismatch,
    #[error("symbol `{0}` has no closed form")]
    MissingClosedForm(String),
    #[error("symbol `{0}` has non-finite values")]
    NonFinite(String),
    #[error("symbol `{label}` is {value:e} at the momentum cutoff; raise xi_max")]
    MomentumAliasing { label: String, value: f64 },
    #[error("cutoff support leaves the neighbourhood O: {0}")]
    SupportLeak(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("|Im z| = {im:e} exceeds {bound:e}")]
    ImaginaryPartTooLarge { im: f64, bound: f64 },
    #[error("a_d radicand is {value:e} at a point of supp a")]
    NegativeRadicand { value: f64 },
    #[error("no parabolic constant up to {0:e} works")]
    NoParabolicConstant(f64),
    #[error("fit needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("linear algebra: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
