//! Deterministic synthetic test meshes: structured disks and lifts of them,
//! a sliver-heavy variant, and a uniform grid. Used by the test suites and
//! exposed through the CLI for reproducing results without external data.

use nalgebra::Point3;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::TriMesh;

/// Unit disk triangulated by hexagonal rings; `6 * rings^2` faces.
pub fn disk_mesh(rings: usize) -> TriMesh {
    let (vertices, faces) = disk_vertices_faces(rings);
    TriMesh::new(vertices, faces).expect("structured disk is valid")
}

/// Ring count giving approximately `target` faces for the disk family.
pub fn rings_for_faces(target: usize) -> usize {
    (((target as f64) / 6.0).sqrt().round() as usize).max(2)
}

fn disk_vertices_faces(rings: usize) -> (Vec<Point3<f64>>, Vec<[usize; 3]>) {
    assert!(rings >= 1);
    let n = rings as f64;
    let mut vertices = vec![Point3::new(0.0, 0.0, 0.0)];
    let mut ring_start = vec![0usize; rings + 1];
    for j in 1..=rings {
        ring_start[j] = vertices.len();
        let count = 6 * j;
        let r = j as f64 / n;
        for k in 0..count {
            let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            vertices.push(Point3::new(r * t.cos(), r * t.sin(), 0.0));
        }
    }
    let mut faces = Vec::with_capacity(6 * rings * rings);
    // Innermost ring: fan around the center.
    for o in 0..6 {
        faces.push([0, 1 + o, 1 + (o + 1) % 6]);
    }
    // Annuli: merge the two cyclic rings by angular progress.
    for j in 2..=rings {
        let (m, mm) = (6 * (j - 1), 6 * j);
        let inner = ring_start[j - 1];
        let outer = ring_start[j];
        let (mut i, mut o) = (0usize, 0usize);
        while i < m || o < mm {
            let next_inner = (i + 1) as f64 / m as f64;
            let next_outer = (o + 1) as f64 / mm as f64;
            if o < mm && (i == m || next_outer <= next_inner) {
                faces.push([inner + i % m, outer + o % mm, outer + (o + 1) % mm]);
                o += 1;
            } else {
                faces.push([inner + i % m, outer + o % mm, inner + (i + 1) % m]);
                i += 1;
            }
        }
    }
    (vertices, faces)
}

/// Upper unit hemisphere via the area-preserving lift of the structured disk.
pub fn hemisphere_mesh(rings: usize) -> TriMesh {
    let (mut vertices, faces) = disk_vertices_faces(rings);
    for p in &mut vertices {
        let rho2 = p.x * p.x + p.y * p.y;
        let s = (2.0 - rho2).sqrt();
        *p = Point3::new(p.x * s, p.y * s, 1.0 - rho2);
    }
    TriMesh::new(vertices, faces).expect("hemisphere lift is valid")
}

/// Flat disk with three Gaussian bumps.
pub fn bumpy_disk_mesh(rings: usize) -> TriMesh {
    const BUMPS: [(f64, f64, f64, f64); 3] = [
        (0.35, 0.10, 0.25, 0.22),
        (-0.25, 0.30, 0.20, 0.18),
        (-0.05, -0.40, 0.30, 0.25),
    ];
    let (mut vertices, faces) = disk_vertices_faces(rings);
    for p in &mut vertices {
        let mut z = 0.0;
        for (cx, cy, amp, sigma) in BUMPS {
            let d2 = (p.x - cx).powi(2) + (p.y - cy).powi(2);
            z += amp * (-d2 / (2.0 * sigma * sigma)).exp();
        }
        p.z = z;
    }
    TriMesh::new(vertices, faces).expect("bumpy disk is valid")
}

/// Saddle patch `z = (x^2 - y^2) / 2` over the unit disk.
pub fn saddle_mesh(rings: usize) -> TriMesh {
    let (mut vertices, faces) = disk_vertices_faces(rings);
    for p in &mut vertices {
        p.z = 0.5 * (p.x * p.x - p.y * p.y);
    }
    TriMesh::new(vertices, faces).expect("saddle patch is valid")
}

/// Flat disk with jittered interior vertices (fixed seed, reproducible).
pub fn irregular_disk_mesh(rings: usize, seed: u64) -> TriMesh {
    let (mut vertices, faces) = disk_vertices_faces(rings);
    let boundary_start = vertices.len() - 6 * rings;
    let step = 1.0 / rings as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in vertices.iter_mut().take(boundary_start).skip(1) {
        p.x += rng.random_range(-0.22..0.22) * step;
        p.y += rng.random_range(-0.22..0.22) * step;
    }
    TriMesh::new(vertices, faces).expect("jitter keeps faces non-degenerate")
}

/// Flat disk with needle triangles: a deterministic subset of interior edges
/// is split very close to one endpoint, so well over 10% of the faces get a
/// minimum angle below two degrees.
pub fn sliver_disk_mesh(rings: usize) -> TriMesh {
    let base = disk_mesh(rings);
    let split_fraction = 0.08;
    let t = 0.004;

    let mut vertices = base.vertices().to_vec();
    let mut faces: Vec<[usize; 3]> = base.faces().to_vec();
    let n_faces = faces.len();
    let target_splits = ((n_faces as f64) * split_fraction).ceil() as usize;

    let mut touched = vec![false; n_faces];
    let mut splits = 0usize;
    let edge_faces = base.edge_faces();
    let mut new_faces: Vec<[usize; 3]> = Vec::new();
    let mut removed = vec![false; n_faces];

    for (&(u, v), incident) in &edge_faces {
        if splits >= target_splits {
            break;
        }
        if incident.len() != 2 {
            continue;
        }
        let (f1, f2) = (incident[0], incident[1]);
        if touched[f1] || touched[f2] {
            continue;
        }
        touched[f1] = true;
        touched[f2] = true;
        removed[f1] = true;
        removed[f2] = true;

        // Orient: fa contains directed (u, v), fb contains (v, u).
        let (fa, fb) = if has_directed_edge(&faces[f1], u, v) {
            (f1, f2)
        } else {
            (f2, f1)
        };
        let w = third_vertex(&faces[fa], u, v);
        let x = third_vertex(&faces[fb], u, v);
        let p = vertices.len();
        let pu = vertices[u];
        let pv = vertices[v];
        vertices.push(pu + (pv - pu) * t);
        new_faces.push([u, p, w]);
        new_faces.push([p, v, w]);
        new_faces.push([v, p, x]);
        new_faces.push([p, u, x]);
        splits += 1;
    }

    let mut out_faces: Vec<[usize; 3]> = faces
        .drain(..)
        .enumerate()
        .filter(|(i, _)| !removed[*i])
        .map(|(_, f)| f)
        .collect();
    out_faces.extend(new_faces);
    TriMesh::new(vertices, out_faces).expect("edge splits keep faces valid")
}

fn has_directed_edge(face: &[usize; 3], u: usize, v: usize) -> bool {
    (0..3).any(|i| face[i] == u && face[(i + 1) % 3] == v)
}

fn third_vertex(face: &[usize; 3], u: usize, v: usize) -> usize {
    *face.iter().find(|&&w| w != u && w != v).unwrap()
}

/// Unit square triangulated by an `n x n` grid with one diagonal direction.
/// All triangles have equal area; the domain is convex.
pub fn grid_mesh(n: usize) -> TriMesh {
    assert!(n >= 1);
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point3::new(i as f64 / n as f64, j as f64 / n as f64, 0.0));
        }
    }
    let at = |i: usize, j: usize| j * (n + 1) + i;
    let mut faces = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            faces.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    TriMesh::new(vertices, faces).expect("grid is valid")
}

/// Closed tetrahedron; not disk topology, used by error-path tests.
pub fn tetrahedron() -> TriMesh {
    TriMesh::new(
        vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.5, 1.0, 0.0),
            Point3::new(0.5, 0.5, 1.0),
        ],
        vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]],
    )
    .unwrap()
}
