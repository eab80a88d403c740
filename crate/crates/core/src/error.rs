use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    InvalidParameter(String),
    #[error("value {value} outside the image [{lo}, {hi}] of branch {branch}")]
    OutsideBranchImage {
        branch: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("no such branch {0}")]
    NoSuchBranch(usize),
    #[error("root finding failed: {0}")]
    RootFinding(String),
    #[error("orbit budget exceeded: n_k_max = {requested} > budget {budget}")]
    OrbitBudget { requested: usize, budget: usize },
    #[error("point {value} outside the admissible interval [{lo}, {hi}]")]
    OutsideInterval { value: f64, lo: f64, hi: f64 },
    #[error("scale function undefined: {0}")]
    ScaleUndefined(String),
    #[error("schedule gate failed: {0}")]
    GateFailed(String),
    #[error("map is not in the two-branch expanding class: {0}")]
    NotInClassJ(String),
    #[error("empty grid")]
    EmptyGrid,
    #[error("grid not strictly increasing at index {0}")]
    GridNotIncreasing(usize),
    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),
    #[error("prerequisite not certified: {0}")]
    NotCertified(String),
    #[error("orbit escaped instrumented region at iterate {iterate} (x = {x})")]
    OrbitEscaped { iterate: usize, x: f64 },
    #[error("map has no regularly varying neutral branch")]
    NoNeutralBranch,
}

pub type Result<T> = std::result::Result<T, Error>;
