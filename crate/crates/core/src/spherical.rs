//! Spherical conformal parameterization of the glued genus-0 mesh: a planar
//! harmonic solve pinned at one well-shaped anchor face, inverse
//! stereographic projection, and an optional quasi-conformal correction of
//! the region that the projection crowds toward the North pole.

use nalgebra::{Point3, Vector3};
use num_complex::Complex64;

use crate::cover::{CopyTag, GluedMesh};
use crate::error::Result;
use crate::mesh::triangle_angles;
use crate::quasiconformal::{
    beltrami_plane_to_surface, beltrami_surface_to_surface, lay_triangle_flat, lbs_reconstruct,
};
use crate::sparse::{solve_with_dirichlet, SolveStats, SolveWarning};

/// Per-vertex 2D coordinates stored as complex numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarEmbedding {
    coords: Vec<Complex64>,
}

impl PlanarEmbedding {
    pub fn new(coords: Vec<Complex64>) -> Self {
        PlanarEmbedding { coords }
    }

    pub fn coord(&self, v: usize) -> Complex64 {
        self.coords[v]
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl From<Vec<Complex64>> for PlanarEmbedding {
    fn from(coords: Vec<Complex64>) -> Self {
        PlanarEmbedding::new(coords)
    }
}

/// Per-vertex unit vectors on the sphere.
#[derive(Debug, Clone)]
pub struct SphereEmbedding {
    points: Vec<Point3<f64>>,
}

impl SphereEmbedding {
    /// Wrap points, renormalizing each onto the unit sphere.
    pub fn from_points(points: Vec<Point3<f64>>) -> Self {
        let points = points
            .into_iter()
            .map(|p| {
                let n = p.coords.norm();
                if n > 0.0 {
                    Point3::from(p.coords / n)
                } else {
                    Point3::new(0.0, 0.0, 1.0)
                }
            })
            .collect();
        SphereEmbedding { points }
    }

    pub fn point(&self, v: usize) -> Point3<f64> {
        self.points[v]
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.points
            .iter()
            .map(|p| (p.coords.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// A face pinned in the plane during the harmonic solve, together with its
/// similar planar target triangle.
#[derive(Debug, Clone)]
pub struct AnchorTriangle {
    pub face: usize,
    pub target: [Complex64; 3],
}

/// Pick the pinned face: the face with the largest minimum interior angle
/// among faces with no seam vertex, preferring the mirror copy so that the
/// crowded region ends up on the half that is later discarded. Ties go to
/// the lowest face index.
pub fn choose_anchor_face(glued: &GluedMesh) -> AnchorTriangle {
    let mesh = glued.mesh();
    let no_seam = |f: &[usize; 3]| f.iter().all(|&v| glued.copy_of(v) != CopyTag::Seam);
    let mirror_interior = |f: &[usize; 3]| f.iter().all(|&v| glued.copy_of(v) == CopyTag::Mirror);

    let best = |pred: &dyn Fn(&[usize; 3]) -> bool| -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (fi, f) in mesh.faces().iter().enumerate() {
            if !pred(f) {
                continue;
            }
            let angles = match triangle_angles(&mesh.face_points(fi)) {
                Some(a) => a,
                None => continue,
            };
            let min_angle = angles.iter().cloned().fold(f64::INFINITY, f64::min);
            match best {
                Some((score, _)) if min_angle <= score => {}
                _ => best = Some((min_angle, fi)),
            }
        }
        best.map(|(_, f)| f)
    };

    let face = best(&mirror_interior)
        .or_else(|| best(&no_seam))
        .or_else(|| best(&|_| true))
        .expect("mesh has at least one face");

    // Pin the face to a congruent planar copy of itself. The pinned face
    // becomes the far field of the plane; the rest of the surface fills its
    // interior, and the scale balancing below spreads it over the sphere.
    let layout = lay_triangle_flat(&mesh.face_points(face)).expect("anchor face is non-degenerate");
    AnchorTriangle {
        face,
        target: layout,
    }
}

/// Orient the plane image consistently with the glued faces (the harmonic
/// solve may come out mirror-imaged depending on the anchor's chirality),
/// then remove the global anti-conformal skew that the three-point pinning
/// injects into the discrete minimizer. The skew is the complex mean of the
/// per-face coefficient against the surface, measured robustly (wrapped and
/// reversed faces excluded), and is removed by composing with the affine
/// map `z -> z + m conj(z)`; a couple of rounds drive the mean to zero.
fn deskew_plane(
    plane: &PlanarEmbedding,
    glued: &GluedMesh,
    anchor_face: usize,
) -> Result<PlanarEmbedding> {
    let faces = glued.mesh().faces();
    let negative = faces
        .iter()
        .filter(|f| {
            let (a, b, c) = (
                plane.coord(f[0]),
                plane.coord(f[1]),
                plane.coord(f[2]),
            );
            ((b.re - a.re) * (c.im - a.im) - (c.re - a.re) * (b.im - a.im)) < 0.0
        })
        .count();
    let mut coords: Vec<Complex64> = if 2 * negative > faces.len() {
        plane.coords().iter().map(|z| z.conj()).collect()
    } else {
        plane.coords().to_vec()
    };

    for _ in 0..3 {
        let current = PlanarEmbedding::new(coords.clone());
        let mu = beltrami_plane_to_surface(faces, &current, glued.mesh().vertices())?;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut count = 0usize;
        for (fi, &m) in mu.values().iter().enumerate() {
            if fi != anchor_face && m.norm() < 0.9 {
                acc += m;
                count += 1;
            }
        }
        if count == 0 {
            break;
        }
        let mean = acc / count as f64;
        if mean.norm() < 1e-4 {
            break;
        }
        for z in &mut coords {
            *z += mean * z.conj();
        }
    }
    Ok(PlanarEmbedding::new(coords))
}

/// Center the plane and rescale it so the anchor face (which wraps the
/// North pole) and the innermost face (nearest the South pole) end up with
/// comparable scales as seen from their poles. Without this the free
/// vertices crowd into a tiny region and the discrete conformality of the
/// spherical map degrades badly.
fn balance_plane(
    plane: &PlanarEmbedding,
    faces: &[[usize; 3]],
    anchor_face: usize,
) -> PlanarEmbedding {
    let n = plane.len() as f64;
    let mean = plane.coords().iter().sum::<Complex64>() / n;
    let centered: Vec<Complex64> = plane.coords().iter().map(|z| z - mean).collect();

    let side = |f: &[usize; 3], of: &dyn Fn(usize) -> Complex64| -> f64 {
        ((of(f[0]) - of(f[1])).norm()
            + (of(f[1]) - of(f[2])).norm()
            + (of(f[2]) - of(f[0])).norm())
            / 3.0
    };
    // Innermost face by total modulus, excluding the anchor.
    let mut inner: Option<(f64, usize)> = None;
    for (fi, f) in faces.iter().enumerate() {
        if fi == anchor_face {
            continue;
        }
        let m = centered[f[0]].norm() + centered[f[1]].norm() + centered[f[2]].norm();
        match inner {
            Some((best, _)) if best <= m => {}
            _ => inner = Some((m, fi)),
        }
    }
    let Some((_, inner_face)) = inner else {
        return PlanarEmbedding::new(centered);
    };
    let north_side = side(&faces[anchor_face], &|v| centered[v]);
    // South-pole view of the plane is the inversion w = 1 / conj(z).
    let south_side = side(&faces[inner_face], &|v| {
        let z = centered[v];
        let n2 = z.norm_sqr().max(1e-300);
        z / n2
    });
    let scale = (north_side * south_side).sqrt() / north_side;
    if !(scale.is_finite() && scale > 0.0) {
        return PlanarEmbedding::new(centered);
    }
    PlanarEmbedding::new(centered.into_iter().map(|z| z * scale).collect())
}

#[derive(Debug, Clone)]
pub struct HarmonicOutcome {
    pub plane: PlanarEmbedding,
    pub stats: SolveStats,
    pub warnings: Vec<SolveWarning>,
}

/// Solve the glued cotangent-Laplacian system with the three anchor vertices
/// pinned to the target triangle. Anchor vertices are eliminated, not
/// solved, so they land on their targets exactly.
pub fn harmonic_plane_map(
    glued: &GluedMesh,
    anchor: &AnchorTriangle,
    tol: f64,
) -> Result<HarmonicOutcome> {
    let laplacian = glued.cotangent_laplacian()?;
    let face = glued.mesh().faces()[anchor.face];
    let fixed: Vec<(usize, Complex64)> = face
        .iter()
        .zip(anchor.target.iter())
        .map(|(&v, &b)| (v, b))
        .collect();
    let rhs = vec![Complex64::new(0.0, 0.0); glued.mesh().vertex_count()];
    let solution = solve_with_dirichlet(&laplacian, &fixed, &rhs, tol)?;
    Ok(HarmonicOutcome {
        plane: PlanarEmbedding::new(solution.values),
        stats: solution.stats,
        warnings: solution.warnings,
    })
}

/// Inverse stereographic projection from the North pole:
/// `z -> (2x, 2y, |z|^2 - 1) / (1 + |z|^2)`. The origin maps to the South
/// pole.
pub fn inverse_stereographic(plane: &PlanarEmbedding) -> SphereEmbedding {
    let points = plane
        .coords()
        .iter()
        .map(|z| {
            let n2 = z.norm_sqr();
            if n2.is_finite() {
                let d = 1.0 + n2;
                Point3::new(2.0 * z.re / d, 2.0 * z.im / d, (n2 - 1.0) / d)
            } else {
                Point3::new(0.0, 0.0, 1.0)
            }
        })
        .collect();
    SphereEmbedding::from_points(points)
}

/// South-pole stereographic projection `(x, y, z) -> (x + iy) / (1 + z)`,
/// sending the North pole's neighborhood to the inner plane.
fn south_stereographic(p: Point3<f64>) -> Complex64 {
    let d = (1.0 + p.z).max(1e-300);
    Complex64::new(p.x / d, p.y / d)
}

fn inverse_south_stereographic(w: Complex64) -> Point3<f64> {
    let n2 = w.norm_sqr();
    if !n2.is_finite() {
        return Point3::new(0.0, 0.0, -1.0);
    }
    let d = 1.0 + n2;
    Point3::new(2.0 * w.re / d, 2.0 * w.im / d, (1.0 - n2) / d)
}

#[derive(Debug, Clone)]
pub struct SouthPoleOutcome {
    pub sphere: SphereEmbedding,
    pub stats: SolveStats,
    pub warnings: Vec<SolveWarning>,
    /// False if the candidate correction did not lower the mean |mu| and the
    /// input embedding was kept.
    pub applied: bool,
    pub clamped_faces: usize,
    pub fixed_vertices: usize,
    pub pole_nudges: usize,
    pub mean_abs_mu_before: f64,
    pub mean_abs_mu_after: f64,
}

/// Correct the conformality distortion that the harmonic step concentrates
/// near the North pole. The sphere is projected from the South pole, the
/// coefficient of the planar region against the glued surface is measured,
/// and the inner region is re-solved with the outermost vertices held fixed.
/// If the candidate does not lower the mean per-face |mu| of the spherical
/// map, the input is returned unchanged.
pub fn south_pole_correction(
    sphere: &SphereEmbedding,
    glued: &GluedMesh,
    tol: f64,
) -> Result<SouthPoleOutcome> {
    let mesh = glued.mesh();
    let mut points = sphere.points().to_vec();

    // A vertex exactly at the projection pole would blow up; nudge it onto a
    // nearby parallel and report.
    let mut pole_nudges = 0usize;
    for p in &mut points {
        if p.z <= -1.0 + 1e-12 {
            pole_nudges += 1;
            let z: f64 = -1.0 + 1e-9;
            let r = (1.0 - z * z).sqrt();
            let horiz = (p.x * p.x + p.y * p.y).sqrt();
            if horiz > 0.0 {
                *p = Point3::new(p.x / horiz * r, p.y / horiz * r, z);
            } else {
                *p = Point3::new(r, 0.0, z);
            }
        }
    }

    // The South-pole projection reverses orientation relative to the
    // North-pole chart; normalize so the faces wind positively, and undo the
    // conjugation after the solve.
    let raw: Vec<Complex64> = points.iter().map(|&p| south_stereographic(p)).collect();
    let negative = mesh
        .faces()
        .iter()
        .filter(|f| {
            let (a, b, c) = (raw[f[0]], raw[f[1]], raw[f[2]]);
            ((b.re - a.re) * (c.im - a.im) - (c.re - a.re) * (b.im - a.im)) < 0.0
        })
        .count();
    let conjugated = 2 * negative > mesh.face_count();
    let plane = PlanarEmbedding::new(if conjugated {
        raw.iter().map(|z| z.conj()).collect()
    } else {
        raw
    });
    let mu = beltrami_plane_to_surface(mesh.faces(), &plane, mesh.vertices())?;

    // Fix everything outside twice the median modulus; the far region is
    // already well laid out.
    let mut moduli: Vec<f64> = plane.coords().iter().map(|z| z.norm()).collect();
    let mut sorted = moduli.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    let threshold = 2.0 * median;
    let mut fixed: Vec<(usize, Complex64)> = moduli
        .iter()
        .enumerate()
        .filter(|&(_, &m)| m > threshold)
        .map(|(v, _)| (v, plane.coord(v)))
        .collect();
    if fixed.len() < 3 {
        let mut order: Vec<usize> = (0..moduli.len()).collect();
        order.sort_by(|&a, &b| moduli[b].total_cmp(&moduli[a]));
        fixed = order[..3.min(order.len())]
            .iter()
            .map(|&v| (v, plane.coord(v)))
            .collect();
    }
    moduli.clear();

    let out = lbs_reconstruct(mesh.faces(), &plane, &mu, &fixed, tol)?;
    let corrected = SphereEmbedding::from_points(
        out.coords
            .coords()
            .iter()
            .map(|&w| inverse_south_stereographic(if conjugated { w.conj() } else { w }))
            .collect(),
    );

    let before = beltrami_surface_to_surface(mesh.faces(), mesh.vertices(), sphere.points())?
        .mean_abs();
    let after = beltrami_surface_to_surface(mesh.faces(), mesh.vertices(), corrected.points())?
        .mean_abs();
    let applied = after <= before;
    Ok(SouthPoleOutcome {
        sphere: if applied {
            corrected
        } else {
            sphere.clone()
        },
        stats: out.stats,
        warnings: out.warnings,
        applied,
        clamped_faces: out.clamped_faces.len(),
        fixed_vertices: fixed.len(),
        pole_nudges,
        mean_abs_mu_before: before,
        mean_abs_mu_after: after.min(before),
    })
}

#[derive(Debug, Clone)]
pub struct SphericalOutcome {
    pub sphere: SphereEmbedding,
    pub anchor: AnchorTriangle,
    pub stats: SolveStats,
    pub warnings: Vec<SolveWarning>,
    /// Faces whose image orientation disagrees with the majority.
    pub sphere_flips: usize,
    pub south_pole: Option<SouthPoleOutcome>,
    pub harmonic_seconds: f64,
    pub south_pole_seconds: f64,
}

/// Spherical conformal map of the glued mesh: anchor selection, harmonic
/// plane map, inverse stereographic projection, and (unless skipped) the
/// South-pole correction.
pub fn spherical_conformal_map(
    glued: &GluedMesh,
    skip_south_pole: bool,
    tol: f64,
) -> Result<SphericalOutcome> {
    let anchor = choose_anchor_face(glued);

    let t0 = std::time::Instant::now();
    let harmonic = harmonic_plane_map(glued, &anchor, tol)?;
    let deskewed = deskew_plane(&harmonic.plane, glued, anchor.face)?;
    let balanced = balance_plane(&deskewed, glued.mesh().faces(), anchor.face);
    let harmonic_seconds = t0.elapsed().as_secs_f64();

    let mut stats = harmonic.stats;
    let mut warnings = harmonic.warnings;
    let sphere = inverse_stereographic(&balanced);

    let t1 = std::time::Instant::now();
    let (sphere, south_pole) = if skip_south_pole {
        (sphere, None)
    } else {
        let outcome = south_pole_correction(&sphere, glued, tol)?;
        stats.absorb(outcome.stats);
        warnings.extend(outcome.warnings.iter().copied());
        (outcome.sphere.clone(), Some(outcome))
    };
    let south_pole_seconds = t1.elapsed().as_secs_f64();

    let sphere_flips = count_orientation_flips(glued, &sphere, Some(anchor.face));
    Ok(SphericalOutcome {
        sphere,
        anchor,
        stats,
        warnings,
        sphere_flips,
        south_pole,
        harmonic_seconds,
        south_pole_seconds,
    })
}

/// Faces of a closed spherical embedding should all wind the same way around
/// the origin; count the minority sign of the triple product. The face that
/// wraps the projection pole (the anchor) covers the complement of its
/// vertex triangle, so its triple product legitimately has the opposite
/// sign; pass it in `wrap_face` to exclude it.
pub fn count_orientation_flips(
    glued: &GluedMesh,
    sphere: &SphereEmbedding,
    wrap_face: Option<usize>,
) -> usize {
    let mut positive = 0usize;
    let mut negative = 0usize;
    for (fi, f) in glued.mesh().faces().iter().enumerate() {
        if Some(fi) == wrap_face {
            continue;
        }
        let (a, b, c) = (
            sphere.point(f[0]).coords,
            sphere.point(f[1]).coords,
            sphere.point(f[2]).coords,
        );
        let det = a.dot(&b.cross(&c));
        if det > 0.0 {
            positive += 1;
        } else {
            negative += 1;
        }
    }
    positive.min(negative)
}

/// Area-weighted centroid direction of a subset of faces of an embedding.
pub(crate) fn face_centroid_direction(
    faces: &[[usize; 3]],
    points: &[Point3<f64>],
) -> Vector3<f64> {
    let mut acc = Vector3::zeros();
    for f in faces {
        let (a, b, c) = (points[f[0]], points[f[1]], points[f[2]]);
        let area = 0.5 * (b - a).cross(&(c - a)).norm();
        let centroid = (a.coords + b.coords + c.coords) / 3.0;
        acc += centroid * area;
    }
    acc
}
