//! Indexed triangle mesh, topology validation and per-face angle data.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

/// Relative area threshold below which a face counts as degenerate.
/// Compared against the squared bounding-box diagonal of the mesh.
pub const DEGENERATE_AREA_REL: f64 = 1e-12;

/// An immutable indexed triangle mesh with oriented faces.
///
/// Construction validates per-face invariants (indices in range, three
/// distinct vertices, non-vanishing area). Global structure (manifoldness,
/// orientation consistency, boundary loops) is checked by
/// [`validate_topology`].
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(Error::IndexOutOfRange {
                        face: fi,
                        index: v,
                        vertex_count: n,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                let repeated = if f[0] == f[1] { f[0] } else { f[2] };
                return Err(Error::RepeatedIndex {
                    face: fi,
                    index: repeated,
                });
            }
        }
        let mesh = TriMesh { vertices, faces };
        let threshold = DEGENERATE_AREA_REL * mesh.bbox_diag_squared();
        let degenerate: Vec<usize> = (0..mesh.faces.len())
            .filter(|&f| mesh.face_area(f) < threshold)
            .collect();
        if !degenerate.is_empty() {
            return Err(Error::degenerate_faces(degenerate));
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn position(&self, v: usize) -> Point3<f64> {
        self.vertices[v]
    }

    /// The three corner positions of face `f`, in face order.
    pub fn face_points(&self, f: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [p0, p1, p2] = self.face_points(f);
        0.5 * (p1 - p0).cross(&(p2 - p0)).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn bbox_diag_squared(&self) -> f64 {
        if self.vertices.is_empty() {
            return 0.0;
        }
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (hi - lo).norm_squared()
    }

    /// Undirected edges with their incident face lists, keyed by sorted
    /// vertex pair. Deterministic iteration order.
    pub fn edge_faces(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut edges: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            for i in 0..3 {
                let (u, v) = (f[i], f[(i + 1) % 3]);
                let key = if u < v { (u, v) } else { (v, u) };
                edges.entry(key).or_default().push(fi);
            }
        }
        edges
    }

    pub fn edge_count(&self) -> usize {
        self.edge_faces().len()
    }
}

/// Global topology summary produced by [`validate_topology`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopologyReport {
    pub num_vertices: usize,
    pub num_edges: usize,
    pub num_faces: usize,
    pub euler_characteristic: i64,
    pub num_boundary_loops: usize,
    pub is_disk_topology: bool,
}

/// Check manifoldness, orientation consistency and connectivity, and report
/// the Euler characteristic and boundary-loop count.
pub fn validate_topology(mesh: &TriMesh) -> Result<TopologyReport> {
    let edges = mesh.edge_faces();

    // Edge manifoldness and orientation: every undirected edge belongs to at
    // most two faces, and its two directed versions are used once each.
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for f in mesh.faces() {
        for i in 0..3 {
            let e = (f[i], f[(i + 1) % 3]);
            *directed.entry(e).or_insert(0) += 1;
        }
    }
    for (&(u, v), faces) in &edges {
        if faces.len() > 2 {
            return Err(Error::NonManifoldEdge {
                u,
                v,
                count: faces.len(),
            });
        }
    }
    for (&(u, v), &count) in &directed {
        if count > 1 {
            return Err(Error::InconsistentOrientation { u, v, count });
        }
    }

    check_vertex_fans(mesh)?;
    check_connected(mesh)?;

    let boundary_loops = trace_boundary_loops(mesh, &directed)?;

    let v = mesh.vertex_count() as i64;
    let e = edges.len() as i64;
    let f = mesh.face_count() as i64;
    let chi = v - e + f;
    let report = TopologyReport {
        num_vertices: mesh.vertex_count(),
        num_edges: edges.len(),
        num_faces: mesh.face_count(),
        euler_characteristic: chi,
        num_boundary_loops: boundary_loops.len(),
        is_disk_topology: chi == 1 && boundary_loops.len() == 1,
    };
    Ok(report)
}

/// The boundary loop of a disk-topology mesh, in the cyclic order induced by
/// face orientation.
pub fn boundary_loop(mesh: &TriMesh) -> Result<Vec<usize>> {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for f in mesh.faces() {
        for i in 0..3 {
            let e = (f[i], f[(i + 1) % 3]);
            *directed.entry(e).or_insert(0) += 1;
        }
    }
    let mut loops = trace_boundary_loops(mesh, &directed)?;
    if loops.len() != 1 {
        return Err(Error::BoundaryLoopCount { found: loops.len() });
    }
    Ok(loops.pop().unwrap())
}

/// Walk boundary edges (directed face edges without an opposite twin) into
/// closed loops. Loops follow the face orientation.
fn trace_boundary_loops(
    mesh: &TriMesh,
    directed: &HashMap<(usize, usize), usize>,
) -> Result<Vec<Vec<usize>>> {
    // next[u] = v for each boundary edge (u, v)
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    for f in mesh.faces() {
        for i in 0..3 {
            let (u, v) = (f[i], f[(i + 1) % 3]);
            if !directed.contains_key(&(v, u)) {
                if next.insert(u, v).is_some() {
                    // Two boundary edges leave the same vertex.
                    return Err(Error::NonManifoldVertex { vertex: u });
                }
            }
        }
    }
    let mut loops = Vec::new();
    let mut visited: BTreeMap<usize, bool> = BTreeMap::new();
    let starts: Vec<usize> = next.keys().copied().collect();
    for start in starts {
        if visited.contains_key(&start) {
            continue;
        }
        let mut cycle = Vec::new();
        let mut cur = start;
        loop {
            cycle.push(cur);
            visited.insert(cur, true);
            cur = next[&cur];
            if cur == start {
                break;
            }
            if cycle.len() > next.len() {
                return Err(Error::NonManifoldVertex { vertex: cur });
            }
        }
        loops.push(cycle);
    }
    Ok(loops)
}

/// Every vertex's incident faces must form a single fan (one connected
/// component in the shared-edge adjacency restricted to that vertex).
fn check_vertex_fans(mesh: &TriMesh) -> Result<()> {
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); mesh.vertex_count()];
    for (fi, f) in mesh.faces().iter().enumerate() {
        for &v in f {
            incident[v].push(fi);
        }
    }
    let edges = mesh.edge_faces();
    for (v, faces) in incident.iter().enumerate() {
        if faces.len() <= 1 {
            continue;
        }
        // Union faces that share an edge through v.
        let index: HashMap<usize, usize> =
            faces.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        let mut parent: Vec<usize> = (0..faces.len()).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (&(a, b), fs) in &edges {
            if (a == v || b == v) && fs.len() == 2 {
                let (ra, rb) = (
                    find(&mut parent, index[&fs[0]]),
                    find(&mut parent, index[&fs[1]]),
                );
                parent[ra] = rb;
            }
        }
        let root = find(&mut parent, 0);
        for i in 1..faces.len() {
            if find(&mut parent, i) != root {
                return Err(Error::NonManifoldVertex { vertex: v });
            }
        }
    }
    Ok(())
}

fn check_connected(mesh: &TriMesh) -> Result<()> {
    if mesh.vertex_count() == 0 {
        return Ok(());
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); mesh.vertex_count()];
    for f in mesh.faces() {
        for i in 0..3 {
            let (u, v) = (f[i], f[(i + 1) % 3]);
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    let mut seen = vec![false; mesh.vertex_count()];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    let reached = seen.iter().filter(|&&s| s).count();
    if reached != mesh.vertex_count() {
        // Count components for the report.
        let mut components = 1;
        let mut seen2 = seen;
        for s in 0..mesh.vertex_count() {
            if !seen2[s] {
                components += 1;
                let mut stack = vec![s];
                seen2[s] = true;
                while let Some(u) = stack.pop() {
                    for &v in &adj[u] {
                        if !seen2[v] {
                            seen2[v] = true;
                            stack.push(v);
                        }
                    }
                }
            }
        }
        return Err(Error::Disconnected { components });
    }
    Ok(())
}

/// Per-face interior angles in radians.
#[derive(Debug, Clone)]
pub struct CornerAngles {
    angles: Vec<[f64; 3]>,
}

impl CornerAngles {
    pub fn face(&self, f: usize) -> [f64; 3] {
        self.angles[f]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64; 3]> {
        self.angles.iter()
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Interior angles of every face via the arccosine of normalized edge-vector
/// dot products. Angles of a face sum to pi up to rounding.
pub fn corner_angles(mesh: &TriMesh) -> Result<CornerAngles> {
    let mut angles = Vec::with_capacity(mesh.face_count());
    let mut bad = Vec::new();
    for f in 0..mesh.face_count() {
        let pts = mesh.face_points(f);
        match triangle_angles(&pts) {
            Some(a) => angles.push(a),
            None => bad.push(f),
        }
    }
    if !bad.is_empty() {
        return Err(Error::degenerate_faces(bad));
    }
    Ok(CornerAngles { angles })
}

/// Angles of a 3D triangle; `None` on a zero-length edge.
pub fn triangle_angles(pts: &[Point3<f64>; 3]) -> Option<[f64; 3]> {
    let mut out = [0.0; 3];
    for i in 0..3 {
        let a = pts[i];
        let b = pts[(i + 1) % 3];
        let c = pts[(i + 2) % 3];
        let u: Vector3<f64> = b - a;
        let v: Vector3<f64> = c - a;
        let (nu, nv) = (u.norm(), v.norm());
        if nu == 0.0 || nv == 0.0 {
            return None;
        }
        let cos = (u.dot(&v) / (nu * nv)).clamp(-1.0, 1.0);
        out[i] = cos.acos();
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(x: f64, y: f64, z: f64) -> Point3<f64> {
        Point3::new(x, y, z)
    }

    fn single_triangle() -> TriMesh {
        TriMesh::new(
            vec![p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    fn tetrahedron() -> TriMesh {
        TriMesh::new(
            vec![
                p(0.0, 0.0, 0.0),
                p(1.0, 0.0, 0.0),
                p(0.5, 1.0, 0.0),
                p(0.5, 0.5, 1.0),
            ],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_out_of_range_index() {
        let err = TriMesh::new(vec![p(0.0, 0.0, 0.0)], vec![[0, 0, 99]]).unwrap_err();
        match err {
            Error::IndexOutOfRange { index: 99, .. } => {}
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn rejects_degenerate_face() {
        // Collinear points: zero area.
        let err = TriMesh::new(
            vec![p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(2.0, 0.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap_err();
        match err {
            Error::DegenerateFaces { faces, .. } => assert_eq!(faces, vec![0]),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn single_triangle_topology() {
        let report = validate_topology(&single_triangle()).unwrap();
        assert_eq!(report.euler_characteristic, 1);
        assert_eq!(report.num_boundary_loops, 1);
        assert!(report.is_disk_topology);
    }

    #[test]
    fn tetrahedron_topology() {
        let report = validate_topology(&tetrahedron()).unwrap();
        assert_eq!(report.num_vertices, 4);
        assert_eq!(report.num_edges, 6);
        assert_eq!(report.num_faces, 4);
        assert_eq!(report.euler_characteristic, 2);
        assert_eq!(report.num_boundary_loops, 0);
        assert!(!report.is_disk_topology);
    }

    #[test]
    fn two_triangles_sharing_a_vertex_are_rejected() {
        let mesh = TriMesh::new(
            vec![
                p(0.0, 0.0, 0.0),
                p(1.0, 0.0, 0.0),
                p(0.0, 1.0, 0.0),
                p(-1.0, 0.0, 0.0),
                p(0.0, -1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 3, 4]],
        )
        .unwrap();
        let err = validate_topology(&mesh).unwrap_err();
        match err {
            Error::NonManifoldVertex { vertex: 0 } => {}
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn non_manifold_edge_is_rejected() {
        let mesh = TriMesh::new(
            vec![
                p(0.0, 0.0, 0.0),
                p(1.0, 0.0, 0.0),
                p(0.5, 1.0, 0.0),
                p(0.5, -1.0, 0.0),
                p(0.5, 0.0, 1.0),
            ],
            vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]],
        )
        .unwrap();
        match validate_topology(&mesh).unwrap_err() {
            Error::NonManifoldEdge { count: 3, .. } => {}
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn inconsistent_orientation_is_rejected() {
        // Second face repeats the directed edge (0, 1).
        let mesh = TriMesh::new(
            vec![
                p(0.0, 0.0, 0.0),
                p(1.0, 0.0, 0.0),
                p(0.5, 1.0, 0.0),
                p(0.5, -1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 1, 3]],
        )
        .unwrap();
        match validate_topology(&mesh).unwrap_err() {
            Error::InconsistentOrientation { .. } => {}
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn boundary_loop_of_triangle_follows_face_order() {
        let bl = boundary_loop(&single_triangle()).unwrap();
        assert_eq!(bl.len(), 3);
        // Cyclic rotation of [0, 1, 2].
        let start = bl.iter().position(|&v| v == 0).unwrap();
        let rotated: Vec<usize> = (0..3).map(|i| bl[(start + i) % 3]).collect();
        assert_eq!(rotated, vec![0, 1, 2]);
    }

    #[test]
    fn boundary_loop_of_square() {
        let mesh = TriMesh::new(
            vec![
                p(0.0, 0.0, 0.0),
                p(1.0, 0.0, 0.0),
                p(1.0, 1.0, 0.0),
                p(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let bl = boundary_loop(&mesh).unwrap();
        assert_eq!(bl.len(), 4);
        let start = bl.iter().position(|&v| v == 0).unwrap();
        let rotated: Vec<usize> = (0..4).map(|i| bl[(start + i) % 4]).collect();
        assert_eq!(rotated, vec![0, 1, 2, 3]);
    }

    #[test]
    fn closed_mesh_has_no_boundary_loop() {
        match boundary_loop(&tetrahedron()).unwrap_err() {
            Error::BoundaryLoopCount { found: 0 } => {}
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn equilateral_angles() {
        let mesh = TriMesh::new(
            vec![
                p(0.0, 0.0, 0.0),
                p(1.0, 0.0, 0.0),
                p(0.5, 3f64.sqrt() / 2.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let angles = corner_angles(&mesh).unwrap().face(0);
        for a in angles {
            assert!((a - PI / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn right_isoceles_angles() {
        let angles = corner_angles(&single_triangle()).unwrap().face(0);
        assert!((angles[0] - PI / 2.0).abs() < 1e-12);
        assert!((angles[1] - PI / 4.0).abs() < 1e-12);
        assert!((angles[2] - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_3d_angles() {
        let mesh = TriMesh::new(
            vec![p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(0.0, 0.0, 2.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let angles = corner_angles(&mesh).unwrap().face(0);
        assert!((angles[0] - PI / 2.0).abs() < 1e-12);
        assert!((angles[1] - 2f64.atan()).abs() < 1e-12);
        assert!((angles[2] - 0.5f64.atan()).abs() < 1e-12);
    }

    #[test]
    fn face_angles_sum_to_pi() {
        let mesh = crate::synth::bumpy_disk_mesh(6);
        let angles = corner_angles(&mesh).unwrap();
        for a in angles.iter() {
            let sum: f64 = a.iter().sum();
            assert!((sum - PI).abs() < 1e-9 * PI, "sum = {sum}");
        }
    }

    #[test]
    fn boundary_length_matches_boundary_edge_count() {
        let mesh = crate::synth::disk_mesh(5);
        let bl = boundary_loop(&mesh).unwrap();
        let boundary_edges = mesh
            .edge_faces()
            .values()
            .filter(|fs| fs.len() == 1)
            .count();
        assert_eq!(bl.len(), boundary_edges);
    }
}
