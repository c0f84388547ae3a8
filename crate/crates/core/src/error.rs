use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid block dimensions: {0}")]
    InvalidDimension(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("weight is zero; a GNS construction needs a non-zero weight")]
    DegenerateWeight,

    #[error("functional is not dominated by the weight (min eigenvalue of the difference {min_eigenvalue:e})")]
    NotDominated { min_eigenvalue: f64 },

    #[error("inconsistent least-squares system: residual {residual:e} exceeds {tolerance:e}")]
    Inconsistent { residual: f64, tolerance: f64 },

    #[error("map is not a *-automorphism (deviation {deviation:e})")]
    NotAutomorphism { deviation: f64 },

    #[error("relative invariance violated: max deviation {deviation:e}")]
    Invariance { deviation: f64 },

    #[error("weight is not faithful (smallest density eigenvalue {min_eigenvalue:e})")]
    NotFaithful { min_eigenvalue: f64 },

    #[error("quadrature did not reach tolerance {tolerance:e} (achieved {achieved:e})")]
    Accuracy { achieved: f64, tolerance: f64 },

    #[error("order violated: {0}")]
    Order(String),

    #[error("map is not completely positive (min Choi eigenvalue {min_eigenvalue:e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("values exceed the declared bound ({observed} > {bound})")]
    Bound { observed: f64, bound: f64 },

    #[error("invalid instance: {0}")]
    Instance(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
