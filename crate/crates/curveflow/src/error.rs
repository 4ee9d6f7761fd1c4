use thiserror::Error;

/// Errors raised across the engine. Geometry failures carry enough context to
/// locate the offending vesicle/element in a scenario run.
#[derive(Debug, Error)]
pub enum CurveflowError {
    #[error("degenerate element {element}: jacobian {jacobian:.3e} below threshold")]
    DegenerateElement { element: usize, jacobian: f64 },

    #[error("curve is not simple: elements {a} and {b} intersect")]
    SelfIntersection { a: usize, b: usize },

    #[error("vesicles {a} and {b} intersect")]
    VesicleIntersection { a: usize, b: usize },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("vesicle contact: squared distance {d:.3e} below 1e-12 at element {element}")]
    ZeroDistance { element: usize, d: f64 },

    #[error("distance field requires at least one other vesicle")]
    NoOtherVesicles,

    #[error("linear system is singular or failed to factorize")]
    SingularSystem,

    #[error("multiplier Newton did not converge: |f|={residual:.3e} after {iters} iterations")]
    NewtonNoConvergence { iters: usize, residual: f64 },

    #[error("degenerate constraint direction: |∫ div V₂| = {value:.3e} < 1e-12")]
    DegenerateConstraint { value: f64 },

    #[error("moving barrier window contains no mesh point")]
    EmptyBarrierWindow,

    #[error("config validation failed: {0}")]
    Validation(String),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("vesicle {vesicle} failed at iteration {iteration}: {source}")]
    Scenario {
        vesicle: usize,
        iteration: usize,
        #[source]
        source: Box<CurveflowError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
