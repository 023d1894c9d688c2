//! Quality evaluation of a parameterization: per-corner angular distortion
//! statistics, a signed-distortion histogram, flip counting, boundary
//! simplicity, and Beltrami/dilation summaries.

use nalgebra::Point3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::{boundary_loop, triangle_angles, TriMesh};
use crate::pipeline::{uv_signed_area, StageTimings};
use crate::quasiconformal::{beltrami_surface_to_plane, dilation_summary, DilationSummary};
use crate::spherical::PlanarEmbedding;

/// Histogram over signed distortion in degrees: `counts[0]` collects values
/// below `edges[0]`, `counts[i]` the half-open bin `[edges[i-1], edges[i])`,
/// and the last slot everything at or above the last edge.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

const HIST_MIN: f64 = -10.0;
const HIST_MAX: f64 = 10.0;
const HIST_BINS: usize = 100;

impl Histogram {
    fn collect(values: impl Iterator<Item = f64>) -> Histogram {
        let edges: Vec<f64> = (0..=HIST_BINS)
            .map(|i| HIST_MIN + (HIST_MAX - HIST_MIN) * i as f64 / HIST_BINS as f64)
            .collect();
        let mut counts = vec![0usize; HIST_BINS + 2];
        let width = (HIST_MAX - HIST_MIN) / HIST_BINS as f64;
        for v in values {
            let slot = if v < HIST_MIN {
                0
            } else if v >= HIST_MAX {
                HIST_BINS + 1
            } else {
                1 + (((v - HIST_MIN) / width) as usize).min(HIST_BINS - 1)
            };
            counts[slot] += 1;
        }
        Histogram { edges, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Angular distortion report: per-corner `new angle - original angle` in
/// degrees, with mean and standard deviation taken over the absolute values.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DistortionReport {
    #[serde(skip)]
    pub per_corner_deg: Vec<[f64; 3]>,
    /// Faces excluded from the statistics because their uv image is
    /// degenerate.
    pub excluded_faces: Vec<usize>,
    pub mean_abs_deg: f64,
    pub sd_abs_deg: f64,
    pub flipped_faces: usize,
    pub histogram: Histogram,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<StageTimings>,
}

/// Compare the uv corner angles against the 3D corner angles, in degrees.
pub fn angular_distortion(mesh: &TriMesh, uv: &PlanarEmbedding) -> Result<DistortionReport> {
    if uv.len() != mesh.vertex_count() {
        return Err(Error::CountMismatch {
            uv: uv.len(),
            vertices: mesh.vertex_count(),
        });
    }
    let rad_to_deg = 180.0 / std::f64::consts::PI;
    let mut per_corner = Vec::with_capacity(mesh.face_count());
    let mut excluded = Vec::new();
    let mut included = Vec::new();
    let mut flipped = 0usize;

    for (fi, f) in mesh.faces().iter().enumerate() {
        let area = uv_signed_area(uv, f);
        if area <= 0.0 {
            flipped += 1;
        }
        let source = triangle_angles(&mesh.face_points(fi)).ok_or_else(|| {
            Error::degenerate_faces(vec![fi])
        })?;
        let flat = [
            uv_point(uv, f[0]),
            uv_point(uv, f[1]),
            uv_point(uv, f[2]),
        ];
        match triangle_angles(&flat) {
            Some(image) if area != 0.0 => {
                let mut corner = [0.0; 3];
                for k in 0..3 {
                    corner[k] = (image[k] - source[k]) * rad_to_deg;
                    included.push(corner[k]);
                }
                per_corner.push(corner);
            }
            _ => {
                excluded.push(fi);
                per_corner.push([f64::NAN; 3]);
            }
        }
    }

    let n = included.len();
    let mean_abs = if n == 0 {
        0.0
    } else {
        included.iter().map(|d| d.abs()).sum::<f64>() / n as f64
    };
    let sd_abs = if n < 2 {
        0.0
    } else {
        let var = included
            .iter()
            .map(|d| {
                let e = d.abs() - mean_abs;
                e * e
            })
            .sum::<f64>()
            / (n - 1) as f64;
        var.sqrt()
    };
    let histogram = Histogram::collect(included.into_iter());
    Ok(DistortionReport {
        per_corner_deg: per_corner,
        excluded_faces: excluded,
        mean_abs_deg: mean_abs,
        sd_abs_deg: sd_abs,
        flipped_faces: flipped,
        histogram,
        timings: None,
    })
}

fn uv_point(uv: &PlanarEmbedding, v: usize) -> Point3<f64> {
    let z = uv.coord(v);
    Point3::new(z.re, z.im, 0.0)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BijectivityReport {
    pub flipped_faces: Vec<usize>,
    pub boundary_simple: bool,
}

impl BijectivityReport {
    pub fn flip_count(&self) -> usize {
        self.flipped_faces.len()
    }
}

/// Count non-positively oriented uv faces and check that the uv boundary
/// polygon does not self-intersect.
pub fn bijectivity_report(mesh: &TriMesh, uv: &PlanarEmbedding) -> Result<BijectivityReport> {
    if uv.len() != mesh.vertex_count() {
        return Err(Error::CountMismatch {
            uv: uv.len(),
            vertices: mesh.vertex_count(),
        });
    }
    let flipped_faces: Vec<usize> = (0..mesh.face_count())
        .filter(|&f| uv_signed_area(uv, &mesh.faces()[f]) <= 0.0)
        .collect();
    let boundary_simple = match boundary_loop(mesh) {
        Ok(loop_verts) => {
            let polygon: Vec<Complex64> = loop_verts.iter().map(|&v| uv.coord(v)).collect();
            polygon_is_simple(&polygon)
        }
        // No single boundary loop (closed mesh): nothing to test.
        Err(_) => true,
    };
    Ok(BijectivityReport {
        flipped_faces,
        boundary_simple,
    })
}

/// Per-face |mu| of the map from the surface to the uv plane, with the
/// maximal dilation.
pub fn conformality_stats(mesh: &TriMesh, uv: &PlanarEmbedding) -> Result<DilationSummary> {
    if uv.len() != mesh.vertex_count() {
        return Err(Error::CountMismatch {
            uv: uv.len(),
            vertices: mesh.vertex_count(),
        });
    }
    let mu = beltrami_surface_to_plane(mesh.faces(), mesh.vertices(), uv)?;
    Ok(dilation_summary(&mu))
}

/// Closed-polygon simplicity via an interval sweep over the segments sorted
/// by minimum x. Consecutive segments may share exactly their common
/// endpoint; any other contact counts as an intersection.
pub fn polygon_is_simple(polygon: &[Complex64]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    #[derive(Clone, Copy)]
    struct Seg {
        a: Complex64,
        b: Complex64,
        idx: usize,
        min_x: f64,
        max_x: f64,
    }
    let mut segs: Vec<Seg> = (0..n)
        .map(|i| {
            let (a, b) = (polygon[i], polygon[(i + 1) % n]);
            Seg {
                a,
                b,
                idx: i,
                min_x: a.re.min(b.re),
                max_x: a.re.max(b.re),
            }
        })
        .collect();
    segs.sort_by(|p, q| p.min_x.total_cmp(&q.min_x));

    let mut active: Vec<Seg> = Vec::new();
    for s in &segs {
        active.retain(|t| t.max_x >= s.min_x);
        for t in &active {
            let gap = (s.idx + n - t.idx) % n;
            if gap == 1 || gap == n - 1 {
                // Neighbors in the loop: only a collinear fold-back is bad.
                let (p, q) = if gap == 1 { (t, s) } else { (s, t) };
                debug_assert_eq!((p.idx + 1) % n, q.idx);
                let d1 = p.b - p.a;
                let d2 = q.b - q.a;
                let cross = d1.re * d2.im - d1.im * d2.re;
                if cross == 0.0 && d1.re * d2.re + d1.im * d2.im < 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(t.a, t.b, s.a, s.b) {
                return false;
            }
        }
        active.push(*s);
    }
    true
}

fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re)
}

fn on_segment(a: Complex64, b: Complex64, p: Complex64) -> bool {
    p.re >= a.re.min(b.re)
        && p.re <= a.re.max(b.re)
        && p.im >= a.im.min(b.im)
        && p.im <= a.im.max(b.im)
}

fn segments_intersect(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}
