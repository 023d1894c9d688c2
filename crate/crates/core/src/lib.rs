//! Bijective disk conformal parameterization of simply-connected open
//! triangle meshes.
//!
//! The pipeline is fully linear: the input surface is glued to an
//! orientation-reversed copy of itself along its boundary, the resulting
//! genus-0 closed mesh is mapped conformally to the unit sphere by one
//! harmonic solve (plus an optional correction solve), a Moebius alignment
//! and stereographic projection carry the kept copy onto a nearly circular
//! planar region, the boundary is normalized onto the unit circle, and one
//! linear Beltrami solve removes the distortion that the normalization
//! introduced. Every step reduces to sparse symmetric positive definite
//! linear systems.
//!
//! ```no_run
//! use std::path::Path;
//! use diskconf::{disk_conformal_parameterize, load_mesh, MeshFormat, PipelineOptions};
//!
//! let mesh = load_mesh(Path::new("foot.obj"), MeshFormat::Auto)?;
//! let param = disk_conformal_parameterize(&mesh, &PipelineOptions::default())?;
//! let report = diskconf::angular_distortion(&mesh, param.uv())?;
//! println!("mean |distortion| = {:.2} degrees", report.mean_abs_deg);
//! # Ok::<(), diskconf::Error>(())
//! ```

pub mod cli;
pub mod cover;
pub mod error;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod pipeline;
pub mod quasiconformal;
pub mod sparse;
pub mod spherical;
pub mod synth;

pub use cover::{double_cover, seam_vertices, CopyTag, GluedMesh};
pub use error::{Error, Result};
pub use io::{load_mesh, load_mesh_with_uv, write_mesh, write_mesh_with_uv, MeshFormat};
pub use mesh::{
    boundary_loop, corner_angles, validate_topology, CornerAngles, TopologyReport, TriMesh,
};
pub use metrics::{
    angular_distortion, bijectivity_report, conformality_stats, BijectivityReport,
    DistortionReport, Histogram,
};
pub use pipeline::{
    disk_conformal_parameterize, mobius_to_hemispheres, normalize_boundary,
    stereographic_project, DiskParameterization, PipelineOptions, Provenance, StageTimings,
};
pub use quasiconformal::{
    beltrami_coefficient, compose_beltrami, dilation_summary, lbs_reconstruct, BeltramiField,
    DilationSummary, DivergenceStencil, FaceDerivativeStencil, LbsOutcome,
};
pub use sparse::{
    cotangent_laplacian, laplacian_weights, solve_spd, solve_with_dirichlet, LaplacianWeights,
    SolveStats, SolveWarning, SparseMatrix,
};
pub use spherical::{
    choose_anchor_face, harmonic_plane_map, inverse_stereographic, south_pole_correction,
    spherical_conformal_map, AnchorTriangle, PlanarEmbedding, SphereEmbedding,
};
