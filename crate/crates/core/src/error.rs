//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("face {face} references vertex {index}, but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },

    #[error("face {face} repeats vertex {index}")]
    RepeatedIndex { face: usize, index: usize },

    #[error("{count} degenerate face(s): {faces:?}{more}", count = faces.len(),
            more = if *truncated { " ..." } else { "" })]
    DegenerateFaces { faces: Vec<usize>, truncated: bool },

    #[error("non-manifold edge ({u}, {v}) shared by {count} faces")]
    NonManifoldEdge { u: usize, v: usize, count: usize },

    #[error("inconsistent orientation: directed edge ({u}, {v}) appears in {count} faces")]
    InconsistentOrientation { u: usize, v: usize, count: usize },

    #[error("non-manifold vertex {vertex}: incident faces do not form a single fan")]
    NonManifoldVertex { vertex: usize },

    #[error("mesh is not connected: {components} components")]
    Disconnected { components: usize },

    #[error(
        "mesh is not a topological disk (chi = {euler_characteristic}, \
         {num_boundary_loops} boundary loop(s))"
    )]
    NotDiskTopology {
        euler_characteristic: i64,
        num_boundary_loops: usize,
    },

    #[error("expected exactly one boundary loop, found {found}")]
    BoundaryLoopCount { found: usize },

    #[error("uv coordinate count {uv} does not match vertex count {vertices}")]
    CountMismatch { uv: usize, vertices: usize },

    #[error("face count mismatch: mesh has {mesh} faces, uv file has {uv}")]
    FaceCountMismatch { mesh: usize, uv: usize },

    #[error("Dirichlet constraint set is empty")]
    EmptyConstraints,

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("boundary vertex {vertex} lies at the origin and cannot be normalized")]
    BoundaryAtOrigin { vertex: usize },

    #[error("vertex {vertex} coincides with the projection pole")]
    PoleVertex { vertex: usize },

    #[error("near-zero denominator in Beltrami composition on face {face}")]
    ComposeDenominator { face: usize },

    #[error("{count} flipped face(s) in the result: {faces:?}{more}", count = faces.len(),
            more = if *truncated { " ..." } else { "" })]
    FlippedFaces { faces: Vec<usize>, truncated: bool },

    #[error("interior vertex {vertex} escaped the unit disk (|uv| = {modulus})")]
    InteriorOutsideDisk { vertex: usize, modulus: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Tag an error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn degenerate_faces(mut faces: Vec<usize>) -> Error {
        let truncated = faces.len() > 16;
        faces.truncate(16);
        Error::DegenerateFaces { faces, truncated }
    }

    pub(crate) fn flipped_faces(mut faces: Vec<usize>) -> Error {
        let truncated = faces.len() > 16;
        faces.truncate(16);
        Error::FlippedFaces { faces, truncated }
    }
}
