use thiserror::Error;

/// Errors produced by mesh ingestion and geometry queries.
#[derive(Debug, Error)]
pub enum GeomError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("non-triangular face (line {line}: {arity} vertices)")]
    NonTriangularFace { line: usize, arity: usize },

    #[error("empty mesh after cleanup")]
    EmptyMesh,

    #[error("mesh has {components} connected components; expected 1")]
    MultiComponent { components: usize },

    #[error("triangle index {index} out of range ({vertices} vertices)")]
    IndexOutOfRange { index: usize, vertices: usize },

    #[error("mesh is not watertight: {offending_edges} offending edges")]
    NotWatertight { offending_edges: usize },

    #[error("point {point:?} outside grid bounds")]
    OutOfBounds { point: [f64; 3] },

    #[error("surface projection did not converge after {iterations} iterations (residual {residual:.3e})")]
    ProjectionDiverged { iterations: usize, residual: f64 },

    #[error("rank-deficient neighborhood for local frame ({neighbors} usable neighbors)")]
    RankDeficientNeighborhood { neighbors: usize },

    #[error("geodesic reached an open boundary after {traveled:.6} of {requested:.6} arc length")]
    BoundaryReached { traveled: f64, requested: f64 },

    #[error("geodesic walker exceeded {steps} triangle crossings")]
    WalkerStuck { steps: usize },

    #[error("point {point:?} is {distance:.3e} away from the mesh (tolerance {tolerance:.3e})")]
    OffSurface {
        point: [f64; 3],
        distance: f64,
        tolerance: f64,
    },

    #[error("degenerate signed distance gradient (|grad| = {magnitude:.3e}) at {point:?}")]
    DegenerateGradient { point: [f64; 3], magnitude: f64 },

    #[error("procrustes needs at least {required} points per set, got {actual}")]
    TooFewPoints { required: usize, actual: usize },

    #[error("procrustes needs at least 2 sets, got {actual}")]
    TooFewSets { actual: usize },

    #[error("point sets have mismatched sizes: {sizes:?}")]
    MismatchedSets { sizes: Vec<usize> },

    #[error("empty mesh list")]
    EmptyList,

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
