//! Double covering: glue a disk-topology mesh to an orientation-reversed
//! copy of itself along the boundary, producing a genus-0 closed mesh.
//!
//! Seam vertices are stored once (the source indices are kept); mirror faces
//! are the source faces with the second and third vertices swapped. Mirror
//! vertices keep the source 3D coordinates, so every mirrored face has the
//! same intrinsic shape as its source face and the cotangent weights of the
//! two copies coincide exactly.

use crate::error::{Error, Result};
use crate::mesh::{boundary_loop, validate_topology, TriMesh};
use crate::sparse::{
    face_corner_cotangents, laplacian_from_weights, weights_from_cotangents, LaplacianWeights,
    SparseMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CopyTag {
    Original,
    Mirror,
    Seam,
}

/// Closed genus-0 mesh built by [`double_cover`], with the correspondence
/// back to the source mesh.
#[derive(Debug, Clone)]
pub struct GluedMesh {
    mesh: TriMesh,
    copy_of: Vec<CopyTag>,
    to_original: Vec<usize>,
    mirror_of: Vec<usize>,
    seam: Vec<usize>,
    source_vertices: usize,
    source_faces: usize,
}

impl GluedMesh {
    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    /// Vertices of the source mesh; glued indices `0..source_vertex_count()`
    /// are the source vertices (seam included), in source order.
    pub fn source_vertex_count(&self) -> usize {
        self.source_vertices
    }

    /// Faces `0..source_face_count()` are the source faces; the rest are the
    /// reversed mirror faces in the same order.
    pub fn source_face_count(&self) -> usize {
        self.source_faces
    }

    pub fn copy_of(&self, v: usize) -> CopyTag {
        self.copy_of[v]
    }

    pub fn to_original(&self, v: usize) -> usize {
        self.to_original[v]
    }

    /// Involution pairing every vertex with its duplicate; fixes exactly the
    /// seam vertices.
    pub fn mirror_of(&self, v: usize) -> usize {
        self.mirror_of[v]
    }

    /// Cotangent weights of the glued mesh. Per-face cotangents are computed
    /// for the source half only and reused for the mirror half.
    pub fn laplacian_weights(&self) -> Result<LaplacianWeights> {
        let mut cots = Vec::with_capacity(self.mesh.face_count());
        for f in 0..self.source_faces {
            cots.push(face_corner_cotangents(&self.mesh.face_points(f))?);
        }
        for f in 0..self.source_faces {
            let [cu, cv, cw] = cots[f];
            // Mirror face [u, w, v]: corner order permutes accordingly.
            cots.push([cu, cw, cv]);
        }
        Ok(weights_from_cotangents(self.mesh.faces(), &cots))
    }

    pub fn cotangent_laplacian(&self) -> Result<SparseMatrix> {
        let weights = self.laplacian_weights()?;
        Ok(laplacian_from_weights(self.mesh.vertex_count(), &weights))
    }
}

/// The identified seam vertices (glued indices), in the cyclic order of the
/// source boundary loop.
pub fn seam_vertices(glued: &GluedMesh) -> &[usize] {
    &glued.seam
}

/// Build the genus-0 closed double cover of a disk-topology mesh.
pub fn double_cover(mesh: &TriMesh) -> Result<GluedMesh> {
    let report = validate_topology(mesh)?;
    if !report.is_disk_topology {
        return Err(Error::NotDiskTopology {
            euler_characteristic: report.euler_characteristic,
            num_boundary_loops: report.num_boundary_loops,
        });
    }
    let boundary = boundary_loop(mesh)?;
    let nv = mesh.vertex_count();
    let mut on_boundary = vec![false; nv];
    for &v in &boundary {
        on_boundary[v] = true;
    }

    // Gluing identifies boundary vertices by index; an interior edge between
    // two boundary vertices would collapse with its mirror into a
    // four-face edge, so reject such chords up front.
    for (&(u, v), faces) in &mesh.edge_faces() {
        if faces.len() == 2 && on_boundary[u] && on_boundary[v] {
            return Err(Error::NonManifoldEdge {
                u,
                v,
                count: 4,
            });
        }
    }

    // Interior vertices get a duplicate appended after the source block.
    let mut mirror_index = vec![usize::MAX; nv];
    let mut vertices = mesh.vertices().to_vec();
    let mut to_original: Vec<usize> = (0..nv).collect();
    for v in 0..nv {
        if on_boundary[v] {
            mirror_index[v] = v;
        } else {
            mirror_index[v] = vertices.len();
            vertices.push(mesh.position(v));
            to_original.push(v);
        }
    }

    let mut faces = mesh.faces().to_vec();
    for f in mesh.faces() {
        let [u, v, w] = *f;
        faces.push([mirror_index[u], mirror_index[w], mirror_index[v]]);
    }

    let glued_mesh = TriMesh::new(vertices, faces)?;
    let total = glued_mesh.vertex_count();
    let mut copy_of = Vec::with_capacity(total);
    for v in 0..nv {
        copy_of.push(if on_boundary[v] {
            CopyTag::Seam
        } else {
            CopyTag::Original
        });
    }
    copy_of.resize(total, CopyTag::Mirror);

    let mut mirror_of = vec![0usize; total];
    for v in 0..nv {
        mirror_of[v] = mirror_index[v];
        if !on_boundary[v] {
            mirror_of[mirror_index[v]] = v;
        }
    }

    Ok(GluedMesh {
        mesh: glued_mesh,
        copy_of,
        to_original,
        mirror_of,
        seam: boundary,
        source_vertices: nv,
        source_faces: mesh.face_count(),
    })
}
