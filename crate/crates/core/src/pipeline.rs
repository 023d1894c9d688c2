//! End-to-end disk parameterization: double cover, spherical conformal map,
//! hemisphere alignment, stereographic projection of the kept copy, boundary
//! normalization, and the quasi-conformal correction that composes the
//! normalized layout into a bijective conformal disk map.

use std::time::Instant;

use nalgebra::{Matrix3, Point3, Rotation3, SymmetricEigen, Vector3};
use num_complex::Complex64;

use crate::cover::{double_cover, seam_vertices, GluedMesh};
use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::quasiconformal::{
    beltrami_plane_to_surface, beltrami_surface_to_plane, lbs_reconstruct,
};
use crate::spherical::{
    face_centroid_direction, inverse_stereographic, spherical_conformal_map, PlanarEmbedding,
    SphereEmbedding,
};

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub skip_south_pole: bool,
    pub solver_tolerance: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            skip_south_pole: false,
            solver_tolerance: 1e-10,
        }
    }
}

/// Wall-clock seconds per pipeline stage.
#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct StageTimings {
    pub double_cover: f64,
    pub harmonic: f64,
    pub south_pole: f64,
    pub mobius_projection: f64,
    pub normalization: f64,
    pub lbs: f64,
    pub total: f64,
}

/// Everything worth knowing about how a parameterization was produced.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Provenance {
    pub anchor_face: usize,
    pub skip_south_pole: bool,
    pub solver_tolerance: f64,
    /// Faces clamped in the final reconstruction.
    pub clamp_events: usize,
    pub south_pole_clamp_events: usize,
    pub south_pole_applied: bool,
    pub sphere_flips: usize,
    pub systems_factored: usize,
    pub rhs_solved: usize,
    /// Mean per-face |mu| of the map from the surface into the normalized
    /// region, and of the final map.
    pub mean_abs_mu_normalized: f64,
    pub mean_abs_mu_final: f64,
    pub solver_warnings: Vec<String>,
    pub timings: StageTimings,
}

/// A disk conformal parameterization of the input mesh: one uv coordinate
/// per vertex, boundary on the unit circle, no flipped faces.
#[derive(Debug, Clone)]
pub struct DiskParameterization {
    uv: PlanarEmbedding,
    provenance: Provenance,
}

impl DiskParameterization {
    pub fn uv(&self) -> &PlanarEmbedding {
        &self.uv
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn into_uv(self) -> PlanarEmbedding {
        self.uv
    }
}

/// Rotate the sphere so the kept copy fills the southern hemisphere, then
/// rescale in stereographic coordinates so the seam straddles the equator
/// (geometric mean of seam moduli equal to one).
pub fn mobius_to_hemispheres(
    sphere: &SphereEmbedding,
    glued: &GluedMesh,
) -> Result<SphereEmbedding> {
    let mesh = glued.mesh();
    let original_faces = &mesh.faces()[..glued.source_face_count()];
    let mut dir = face_centroid_direction(original_faces, sphere.points());
    if dir.norm() < 1e-12 {
        // Symmetric degenerate case: use the seam's best-fit plane normal.
        dir = seam_plane_normal(glued, sphere);
    }
    let dir = dir.normalize();
    let south = Vector3::new(0.0, 0.0, -1.0);
    let rotation = Rotation3::rotation_between(&dir, &south)
        .unwrap_or_else(|| Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI));

    let rotated: Vec<Point3<f64>> = sphere
        .points()
        .iter()
        .map(|p| rotation * p)
        .collect();

    // North-pole stereographic coordinates; the scaling Moebius z -> z / c.
    // A vertex at the pole itself goes far out along its horizontal
    // direction so the inverse projection returns it to the pole.
    let plane: Vec<Complex64> = rotated
        .iter()
        .map(|p| {
            let d = 1.0 - p.z;
            if d < 1e-15 {
                let dir = Complex64::new(p.x, p.y);
                let n = dir.norm();
                if n > 0.0 {
                    dir / n * 1e150
                } else {
                    Complex64::new(1e150, 0.0)
                }
            } else {
                Complex64::new(p.x / d, p.y / d)
            }
        })
        .collect();
    let seam = seam_vertices(glued);
    let log_mean = seam
        .iter()
        .map(|&v| plane[v].norm().clamp(1e-300, 1e300).ln())
        .sum::<f64>()
        / seam.len() as f64;
    let c = log_mean.exp();
    let scaled = PlanarEmbedding::new(plane.into_iter().map(|z| z / c).collect());
    Ok(inverse_stereographic(&scaled))
}

fn seam_plane_normal(glued: &GluedMesh, sphere: &SphereEmbedding) -> Vector3<f64> {
    let seam = seam_vertices(glued);
    let centroid = seam
        .iter()
        .fold(Vector3::zeros(), |a, &v| a + sphere.point(v).coords)
        / seam.len() as f64;
    let mut cov = Matrix3::zeros();
    for &v in seam {
        let d = sphere.point(v).coords - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let min_idx = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    let normal = eig.eigenvectors.column(min_idx).into_owned();
    // Orient toward the original copy's side if that is distinguishable.
    let original_faces = &glued.mesh().faces()[..glued.source_face_count()];
    let side = face_centroid_direction(original_faces, sphere.points());
    if normal.dot(&side) < 0.0 {
        -normal
    } else {
        normal
    }
}

/// North-pole stereographic projection `(x, y, z) -> (x + iy) / (1 - z)`.
/// Strictly-southern vertices land inside the unit circle. Errors if a
/// projected vertex sits at the pole.
pub fn stereographic_project(sphere: &SphereEmbedding) -> Result<PlanarEmbedding> {
    let mut coords = Vec::with_capacity(sphere.len());
    for (v, p) in sphere.points().iter().enumerate() {
        let d = 1.0 - p.z;
        if d < 1e-12 {
            return Err(Error::PoleVertex { vertex: v });
        }
        coords.push(Complex64::new(p.x / d, p.y / d));
    }
    Ok(PlanarEmbedding::new(coords))
}

/// Push the listed boundary vertices radially onto the unit circle; interior
/// vertices are untouched. Overlaps this may create are corrected by the
/// reconstruction step, not here.
pub fn normalize_boundary(
    region: &PlanarEmbedding,
    boundary: &[usize],
) -> Result<PlanarEmbedding> {
    let mut coords = region.coords().to_vec();
    for &v in boundary {
        let z = coords[v];
        let n = z.norm();
        if n == 0.0 {
            return Err(Error::BoundaryAtOrigin { vertex: v });
        }
        coords[v] = z / n;
    }
    Ok(PlanarEmbedding::new(coords))
}

pub fn uv_signed_area(uv: &PlanarEmbedding, face: &[usize; 3]) -> f64 {
    let (a, b, c) = (uv.coord(face[0]), uv.coord(face[1]), uv.coord(face[2]));
    0.5 * ((b.re - a.re) * (c.im - a.im) - (c.re - a.re) * (b.im - a.im))
}

/// The full linear pipeline. Fails loudly (with face lists) if the result
/// violates the bijectivity or boundary contracts.
pub fn disk_conformal_parameterize(
    mesh: &TriMesh,
    options: &PipelineOptions,
) -> Result<DiskParameterization> {
    let total_timer = Instant::now();
    let tol = options.solver_tolerance;

    let t = Instant::now();
    let glued = double_cover(mesh).map_err(|e| e.in_stage("double cover"))?;
    let double_cover_s = t.elapsed().as_secs_f64();

    let spherical = spherical_conformal_map(&glued, options.skip_south_pole, tol)
        .map_err(|e| e.in_stage("spherical map"))?;
    let mut stats = spherical.stats;
    let mut warnings = spherical.warnings.clone();

    let t = Instant::now();
    let aligned = mobius_to_hemispheres(&spherical.sphere, &glued)
        .map_err(|e| e.in_stage("moebius alignment"))?;

    // Only the original copy is carried into the plane; glued vertex indices
    // 0..V are the source vertices.
    let kept = SphereEmbedding::from_points(
        aligned.points()[..glued.source_vertex_count()].to_vec(),
    );
    let region = stereographic_project(&kept).map_err(|e| e.in_stage("stereographic projection"))?;
    let mobius_projection_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let boundary = seam_vertices(&glued).to_vec();
    let mut region = region;
    // The projected image should wind positively; reflect if the sphere
    // orientation came out inverted.
    let negative = mesh
        .faces()
        .iter()
        .filter(|f| uv_signed_area(&region, f) < 0.0)
        .count();
    if 2 * negative > mesh.face_count() {
        region = PlanarEmbedding::new(region.coords().iter().map(|z| z.conj()).collect());
    }
    let normalized =
        normalize_boundary(&region, &boundary).map_err(|e| e.in_stage("boundary normalization"))?;
    let normalization_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    // Coefficient of the map from the normalized region back to the surface;
    // reconstructing with the same coefficient and the circular boundary
    // cancels the distortion of the composition.
    let mu = beltrami_plane_to_surface(mesh.faces(), &normalized, mesh.vertices())
        .map_err(|e| e.in_stage("beltrami coefficient"))?;
    let circle: Vec<(usize, Complex64)> = boundary
        .iter()
        .map(|&v| (v, normalized.coord(v)))
        .collect();
    let lbs = lbs_reconstruct(mesh.faces(), &normalized, &mu, &circle, tol)
        .map_err(|e| e.in_stage("linear beltrami solver"))?;
    stats.absorb(lbs.stats);
    warnings.extend(lbs.warnings.iter().copied());
    let uv = lbs.coords;
    let lbs_s = t.elapsed().as_secs_f64();

    // Contract checks: circular boundary, strict interior, no flips.
    let mut on_boundary = vec![false; mesh.vertex_count()];
    for &v in &boundary {
        on_boundary[v] = true;
        let r = uv.coord(v).norm();
        if (r - 1.0).abs() >= 1e-9 {
            return Err(Error::Solver(format!(
                "boundary vertex {v} off the unit circle by {:e}",
                (r - 1.0).abs()
            ))
            .in_stage("result validation"));
        }
    }
    for v in 0..mesh.vertex_count() {
        if !on_boundary[v] {
            let r = uv.coord(v).norm();
            if !(r < 1.0) {
                return Err(Error::InteriorOutsideDisk {
                    vertex: v,
                    modulus: r,
                }
                .in_stage("result validation"));
            }
        }
    }
    let flipped: Vec<usize> = (0..mesh.face_count())
        .filter(|&f| uv_signed_area(&uv, &mesh.faces()[f]) <= 0.0)
        .collect();
    if !flipped.is_empty() {
        return Err(Error::flipped_faces(flipped).in_stage("result validation"));
    }

    let mean_abs_mu_normalized =
        beltrami_surface_to_plane(mesh.faces(), mesh.vertices(), &normalized)?.mean_abs();
    let mean_abs_mu_final =
        beltrami_surface_to_plane(mesh.faces(), mesh.vertices(), &uv)?.mean_abs();

    let provenance = Provenance {
        anchor_face: spherical.anchor.face,
        skip_south_pole: options.skip_south_pole,
        solver_tolerance: tol,
        clamp_events: lbs.clamped_faces.len(),
        south_pole_clamp_events: spherical
            .south_pole
            .as_ref()
            .map_or(0, |s| s.clamped_faces),
        south_pole_applied: spherical
            .south_pole
            .as_ref()
            .map_or(false, |s| s.applied),
        sphere_flips: spherical.sphere_flips,
        systems_factored: stats.systems_factored,
        rhs_solved: stats.rhs_solved,
        mean_abs_mu_normalized,
        mean_abs_mu_final,
        solver_warnings: warnings.iter().map(|w| format!("{w:?}")).collect(),
        timings: StageTimings {
            double_cover: double_cover_s,
            harmonic: spherical.harmonic_seconds,
            south_pole: spherical.south_pole_seconds,
            mobius_projection: mobius_projection_s,
            normalization: normalization_s,
            lbs: lbs_s,
            total: total_timer.elapsed().as_secs_f64(),
        },
    };
    Ok(DiskParameterization { uv, provenance })
}
