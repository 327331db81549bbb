use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("leads has {found} entries, expected one per vertex ({expected})")]
    LeadCountMismatch { expected: usize, found: usize },
    #[error("edge {edge}: endpoint {endpoint} out of range (vertex count {vertex_count})")]
    EndpointOutOfRange {
        edge: usize,
        endpoint: usize,
        vertex_count: usize,
    },
    #[error("edge {edge}: non-positive length {length}")]
    NonPositiveLength { edge: usize, length: f64 },
    #[error("edge {edge}: length is not finite")]
    NonFiniteLength { edge: usize },
    #[error("vertex {vertex} has no internal edge")]
    IsolatedVertex { vertex: usize },
    #[error("strip bound undefined (balanced vertex {vertex})")]
    BalancedVertex { vertex: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid rectangle: {0}")]
    InvalidRectangle(String),
    #[error("origin excluded: the rectangle closure contains z = 0")]
    OriginExcluded,
    #[error("origin excluded: z = 0 lies too close to the contour to excise it")]
    OriginOnContour,
    #[error("quadrature did not converge within {evaluations} evaluations (partial winding {partial_winding})")]
    QuadratureFailed {
        evaluations: usize,
        partial_winding: f64,
    },
    #[error("contour passes through a zero near {re} + {im}i even after jittering")]
    ContourOnZero { re: f64, im: f64 },
    #[error("root refinement failed in cell [{re_min}, {re_max}] x [{im_min}, {im_max}]")]
    RefinementFailed {
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
    },
    #[error("non-real zero for closed system at {re} + {im}i")]
    NonRealZero { re: f64, im: f64 },
    #[error("system is not closed")]
    NotClosed,
    #[error("eigenphase stepping failed near x = {x}")]
    PhaseStepFailed { x: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error("invalid ensemble spec: {0}")]
    InvalidSpec(String),
    #[error("unknown fixture: {0}")]
    UnknownFixture(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
