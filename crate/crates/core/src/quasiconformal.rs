//! Discrete Beltrami coefficients and the linear Beltrami solver (LBS):
//! measure the per-face complex distortion coefficient of a piecewise-linear
//! map, and reconstruct a planar map with a prescribed coefficient under
//! Dirichlet boundary conditions by solving one sparse symmetric system per
//! coordinate pair.

use nalgebra::Point3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::{solve_with_dirichlet, SolveStats, SolveWarning, SparseMatrix};
use crate::spherical::PlanarEmbedding;

/// Faces with |mu| at or above this bound are rescaled to it before the
/// alpha coefficients are formed; the reconstruction needs |mu| < 1.
pub const MU_CLAMP: f64 = 0.98;

/// Per-face complex Beltrami coefficient.
#[derive(Debug, Clone)]
pub struct BeltramiField {
    mu: Vec<Complex64>,
    degenerate: Vec<usize>,
}

impl BeltramiField {
    pub fn from_mus(mu: Vec<Complex64>) -> Self {
        BeltramiField {
            mu,
            degenerate: Vec::new(),
        }
    }

    pub fn mu(&self, face: usize) -> Complex64 {
        self.mu[face]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Faces whose coefficient came out with modulus 1 because the target
    /// face was degenerate.
    pub fn degenerate_faces(&self) -> &[usize] {
        &self.degenerate
    }

    pub fn mean_abs(&self) -> f64 {
        if self.mu.is_empty() {
            return 0.0;
        }
        self.mu.iter().map(|m| m.norm()).sum::<f64>() / self.mu.len() as f64
    }

    /// Copy with every coefficient of modulus >= `limit` rescaled onto that
    /// modulus; returns the affected face indices.
    pub fn clamped(&self, limit: f64) -> (BeltramiField, Vec<usize>) {
        let mut clamped = Vec::new();
        let mu = self
            .mu
            .iter()
            .enumerate()
            .map(|(f, &m)| {
                let r = m.norm();
                if !r.is_finite() {
                    clamped.push(f);
                    Complex64::new(limit, 0.0)
                } else if r >= limit {
                    clamped.push(f);
                    if r == 0.0 {
                        Complex64::new(limit, 0.0)
                    } else {
                        m * (limit / r)
                    }
                } else {
                    m
                }
            })
            .collect();
        (
            BeltramiField {
                mu,
                degenerate: self.degenerate.clone(),
            },
            clamped,
        )
    }
}

/// Maximal-dilation summary `K = (1 + ||mu||_inf) / (1 - ||mu||_inf)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DilationSummary {
    #[serde(skip)]
    pub per_face_abs: Vec<f64>,
    pub sup_norm: f64,
    pub k: f64,
    pub unbounded: bool,
}

pub fn dilation_summary(mu: &BeltramiField) -> DilationSummary {
    let per_face_abs: Vec<f64> = mu.values().iter().map(|m| m.norm()).collect();
    let sup_norm = per_face_abs.iter().fold(0.0f64, |a, &b| a.max(b));
    let unbounded = sup_norm >= 1.0;
    let k = if unbounded {
        f64::INFINITY
    } else {
        (1.0 + sup_norm) / (1.0 - sup_norm)
    };
    DilationSummary {
        per_face_abs,
        sup_norm,
        k,
        unbounded,
    }
}

/// Coefficients of the diffusion matrix `[[a1, a2], [a2, a3]]` built from
/// `mu = rho + i eta`; positive definite with unit determinant for |mu| < 1.
pub fn alpha_coefficients(mu: Complex64) -> (f64, f64, f64) {
    let (rho, eta) = (mu.re, mu.im);
    let denom = 1.0 - rho * rho - eta * eta;
    let a1 = ((rho - 1.0) * (rho - 1.0) + eta * eta) / denom;
    let a2 = -2.0 * eta / denom;
    let a3 = (1.0 + 2.0 * rho + rho * rho + eta * eta) / denom;
    (a1, a2, a3)
}

/// Row stencils recovering the per-face partial derivatives of a linear
/// function from its three corner values, for a planar source triangle.
/// `dx . (1,1,1) = dy . (1,1,1) = 0` and the stencils are exact on linears.
#[derive(Debug, Clone, Copy)]
pub struct FaceDerivativeStencil {
    pub dx: [f64; 3],
    pub dy: [f64; 3],
}

impl FaceDerivativeStencil {
    pub fn apply(&self, w: [Complex64; 3]) -> (Complex64, Complex64) {
        let dxw = self.dx[0] * w[0] + self.dx[1] * w[1] + self.dx[2] * w[2];
        let dyw = self.dy[0] * w[0] + self.dy[1] * w[1] + self.dy[2] * w[2];
        (dxw, dyw)
    }
}

pub fn face_derivative_stencil(corners: [Complex64; 3]) -> Result<FaceDerivativeStencil> {
    let [z1, z2, z3] = corners;
    let (a1, b1) = (z1.re, z1.im);
    let (a2, b2) = (z2.re, z2.im);
    let (a3, b3) = (z3.re, z3.im);
    let two_signed_area = (a2 - a1) * (b3 - b1) - (a3 - a1) * (b2 - b1);
    if two_signed_area == 0.0 || !two_signed_area.is_finite() {
        return Err(Error::degenerate_faces(vec![]));
    }
    let inv = 1.0 / two_signed_area;
    // The last coefficient is the negated sum of the first two, so the
    // stencil annihilates constants exactly.
    let dx0 = (b2 - b3) * inv;
    let dx1 = (b3 - b1) * inv;
    let dy0 = (a3 - a2) * inv;
    let dy1 = (a1 - a3) * inv;
    Ok(FaceDerivativeStencil {
        dx: [dx0, dx1, -(dx0 + dx1)],
        dy: [dy0, dy1, -(dy0 + dy1)],
    })
}

/// Per-corner divergence coefficients of a face: `a_i = (h_j - h_k)/Area`,
/// `b_i = (g_k - g_j)/Area` with `(g, h)` the planar corner coordinates and
/// `(i, j, k)` cyclic. Each triple sums to zero exactly.
#[derive(Debug, Clone, Copy)]
pub struct DivergenceStencil {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

pub fn divergence_stencil(corners: [Complex64; 3]) -> Result<DivergenceStencil> {
    let g = [corners[0].re, corners[1].re, corners[2].re];
    let h = [corners[0].im, corners[1].im, corners[2].im];
    let two_signed_area = (g[1] - g[0]) * (h[2] - h[0]) - (g[2] - g[0]) * (h[1] - h[0]);
    let area = 0.5 * two_signed_area.abs();
    if area == 0.0 || !area.is_finite() {
        return Err(Error::degenerate_faces(vec![]));
    }
    let inv = 1.0 / area;
    // Third coefficient by negated sum, as in the derivative stencil.
    let a0 = (h[1] - h[2]) * inv;
    let a1 = (h[2] - h[0]) * inv;
    let b0 = (g[2] - g[1]) * inv;
    let b1 = (g[0] - g[2]) * inv;
    Ok(DivergenceStencil {
        a: [a0, a1, -(a0 + a1)],
        b: [b0, b1, -(b0 + b1)],
    })
}

/// Lay a 3D triangle flat: first vertex at the origin, second on the
/// positive real axis, third in the upper half-plane; edge lengths are
/// preserved.
pub fn lay_triangle_flat(pts: &[Point3<f64>; 3]) -> Result<[Complex64; 3]> {
    let e1 = pts[1] - pts[0];
    let e2 = pts[2] - pts[0];
    let l1 = e1.norm();
    let height = e1.cross(&e2).norm();
    if l1 == 0.0 || height == 0.0 {
        return Err(Error::degenerate_faces(vec![]));
    }
    let x3 = e2.dot(&e1) / l1;
    let y3 = height / l1;
    Ok([
        Complex64::new(0.0, 0.0),
        Complex64::new(l1, 0.0),
        Complex64::new(x3, y3),
    ])
}

fn corner_values(embedding: &PlanarEmbedding, face: &[usize; 3]) -> [Complex64; 3] {
    [
        embedding.coord(face[0]),
        embedding.coord(face[1]),
        embedding.coord(face[2]),
    ]
}

fn mu_from_corners(
    face: usize,
    source: [Complex64; 3],
    target: [Complex64; 3],
    degenerate: &mut Vec<usize>,
) -> Result<Complex64> {
    let stencil = face_derivative_stencil(source).map_err(|_| Error::degenerate_faces(vec![face]))?;
    let (dxw, dyw) = stencil.apply(target);
    let fz = 0.5 * (dxw - Complex64::i() * dyw);
    let fzbar = 0.5 * (dxw + Complex64::i() * dyw);
    if fz.norm() == 0.0 {
        degenerate.push(face);
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok(fzbar / fz)
}

fn beltrami_impl<S, T>(faces: &[[usize; 3]], source_of: S, target_of: T) -> Result<BeltramiField>
where
    S: Fn(usize, &[usize; 3]) -> Result<[Complex64; 3]>,
    T: Fn(usize, &[usize; 3]) -> Result<[Complex64; 3]>,
{
    let mut mu = Vec::with_capacity(faces.len());
    let mut degenerate = Vec::new();
    for (fi, f) in faces.iter().enumerate() {
        let src = source_of(fi, f)?;
        match target_of(fi, f) {
            Ok(dst) => mu.push(mu_from_corners(fi, src, dst, &mut degenerate)?),
            Err(_) => {
                // Degenerate target face: flag with |mu| = 1.
                degenerate.push(fi);
                mu.push(Complex64::new(1.0, 0.0));
            }
        }
    }
    Ok(BeltramiField { mu, degenerate })
}

/// Beltrami coefficient of the piecewise-linear map taking `source` to
/// `target` over the same connectivity, per face.
pub fn beltrami_coefficient(
    faces: &[[usize; 3]],
    source: &PlanarEmbedding,
    target: &PlanarEmbedding,
) -> Result<BeltramiField> {
    beltrami_impl(
        faces,
        |_, f| Ok(corner_values(source, f)),
        |_, f| Ok(corner_values(target, f)),
    )
}

/// Coefficient of a map from a planar region to a 3D surface; every target
/// face is laid flat rigidly before differencing.
pub fn beltrami_plane_to_surface(
    faces: &[[usize; 3]],
    source: &PlanarEmbedding,
    target: &[Point3<f64>],
) -> Result<BeltramiField> {
    beltrami_impl(
        faces,
        |_, f| Ok(corner_values(source, f)),
        |_, f| lay_triangle_flat(&[target[f[0]], target[f[1]], target[f[2]]]),
    )
}

/// Coefficient of a map from a 3D surface to a planar region; every source
/// face is laid flat rigidly.
pub fn beltrami_surface_to_plane(
    faces: &[[usize; 3]],
    source: &[Point3<f64>],
    target: &PlanarEmbedding,
) -> Result<BeltramiField> {
    beltrami_impl(
        faces,
        |_, f| lay_triangle_flat(&[source[f[0]], source[f[1]], source[f[2]]]),
        |_, f| Ok(corner_values(target, f)),
    )
}

/// Coefficient of a map between two 3D surfaces over shared connectivity.
pub fn beltrami_surface_to_surface(
    faces: &[[usize; 3]],
    source: &[Point3<f64>],
    target: &[Point3<f64>],
) -> Result<BeltramiField> {
    beltrami_impl(
        faces,
        |_, f| lay_triangle_flat(&[source[f[0]], source[f[1]], source[f[2]]]),
        |_, f| lay_triangle_flat(&[target[f[0]], target[f[1]], target[f[2]]]),
    )
}

/// Per-face Wirtinger derivatives `(f_z, f_zbar)` of the map source->target.
pub fn wirtinger_derivatives(
    faces: &[[usize; 3]],
    source: &PlanarEmbedding,
    target: &PlanarEmbedding,
) -> Result<Vec<(Complex64, Complex64)>> {
    let mut out = Vec::with_capacity(faces.len());
    for (fi, f) in faces.iter().enumerate() {
        let stencil = face_derivative_stencil(corner_values(source, f))
            .map_err(|_| Error::degenerate_faces(vec![fi]))?;
        let (dxw, dyw) = stencil.apply(corner_values(target, f));
        let fz = 0.5 * (dxw - Complex64::i() * dyw);
        let fzbar = 0.5 * (dxw + Complex64::i() * dyw);
        out.push((fz, fzbar));
    }
    Ok(out)
}

/// Beltrami coefficient of a composition `g o f` from the coefficients of
/// the parts and the per-face ratio `conj(f_z) / f_z`.
pub fn compose_beltrami(
    mu_f: &BeltramiField,
    mu_g_of_f: &BeltramiField,
    f_z_ratio: &[Complex64],
) -> Result<BeltramiField> {
    assert_eq!(mu_f.len(), mu_g_of_f.len());
    assert_eq!(mu_f.len(), f_z_ratio.len());
    let mut mu = Vec::with_capacity(mu_f.len());
    for face in 0..mu_f.len() {
        let (mf, mg, r) = (mu_f.mu(face), mu_g_of_f.mu(face), f_z_ratio[face]);
        let num = mf + r * mg;
        let den = Complex64::new(1.0, 0.0) + r * mf.conj() * mg;
        if den.norm() < 1e-12 * (1.0 + num.norm()) {
            return Err(Error::ComposeDenominator { face });
        }
        mu.push(num / den);
    }
    Ok(BeltramiField::from_mus(mu))
}

/// The assembled LBS operator for a planar domain and a (clamped) Beltrami
/// coefficient: the Galerkin form of `div(A grad u) = 0` with the per-face
/// diffusion matrix from [`alpha_coefficients`]. Symmetric positive
/// semidefinite with constant kernel.
pub fn lbs_system(
    faces: &[[usize; 3]],
    domain: &PlanarEmbedding,
    mu: &BeltramiField,
) -> Result<SparseMatrix> {
    assert_eq!(faces.len(), mu.len());
    let mut triplets = Vec::with_capacity(9 * faces.len());
    for (fi, f) in faces.iter().enumerate() {
        let corners = corner_values(domain, f);
        let stencil =
            face_derivative_stencil(corners).map_err(|_| Error::degenerate_faces(vec![fi]))?;
        let (a1, a2, a3) = alpha_coefficients(mu.mu(fi));
        let two_signed_area = {
            let [z1, z2, z3] = corners;
            (z2.re - z1.re) * (z3.im - z1.im) - (z3.re - z1.re) * (z2.im - z1.im)
        };
        let weight = 0.5 * two_signed_area.abs();
        let (dx, dy) = (stencil.dx, stencil.dy);
        for p in 0..3 {
            for q in 0..3 {
                let val = weight
                    * (a1 * (dx[p] * dx[q])
                        + a2 * (dx[p] * dy[q] + dy[p] * dx[q])
                        + a3 * (dy[p] * dy[q]));
                triplets.push((f[p], f[q], val));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(
        domain.len(),
        &triplets,
        true,
    ))
}

#[derive(Debug, Clone)]
pub struct LbsOutcome {
    pub coords: PlanarEmbedding,
    /// Faces whose coefficient was rescaled to modulus [`MU_CLAMP`].
    pub clamped_faces: Vec<usize>,
    pub stats: SolveStats,
    pub warnings: Vec<SolveWarning>,
}

/// Reconstruct a planar map with prescribed Beltrami coefficient and
/// Dirichlet values. Constrained vertices take their boundary values
/// exactly; free vertices satisfy the discrete divergence balance of the
/// assembled operator. Coefficients with |mu| >= [`MU_CLAMP`] are rescaled
/// and reported.
pub fn lbs_reconstruct(
    faces: &[[usize; 3]],
    domain: &PlanarEmbedding,
    mu: &BeltramiField,
    boundary: &[(usize, Complex64)],
    tol: f64,
) -> Result<LbsOutcome> {
    if boundary.is_empty() {
        return Err(Error::EmptyConstraints);
    }
    let (mu, clamped_faces) = mu.clamped(MU_CLAMP);
    let system = lbs_system(faces, domain, &mu)?;
    let rhs = vec![Complex64::new(0.0, 0.0); domain.len()];
    let solution = solve_with_dirichlet(&system, boundary, &rhs, tol)?;
    Ok(LbsOutcome {
        coords: PlanarEmbedding::new(solution.values),
        clamped_faces,
        stats: solution.stats,
        warnings: solution.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::boundary_loop;
    use crate::synth;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn planar_of_mesh(mesh: &crate::mesh::TriMesh) -> PlanarEmbedding {
        PlanarEmbedding::new(mesh.vertices().iter().map(|p| c(p.x, p.y)).collect())
    }

    fn apply_map(source: &PlanarEmbedding, f: impl Fn(Complex64) -> Complex64) -> PlanarEmbedding {
        PlanarEmbedding::new(source.coords().iter().map(|&z| f(z)).collect())
    }

    #[test]
    fn identity_map_has_zero_mu() {
        let mesh = synth::disk_mesh(3);
        let plane = planar_of_mesh(&mesh);
        let mu = beltrami_coefficient(mesh.faces(), &plane, &plane).unwrap();
        for &m in mu.values() {
            assert!(m.norm() < 1e-14);
        }
    }

    #[test]
    fn affine_x_plus_2iy_has_mu_minus_third() {
        let mesh = synth::grid_mesh(4);
        let plane = planar_of_mesh(&mesh);
        let target = apply_map(&plane, |z| c(z.re, 2.0 * z.im));
        let mu = beltrami_coefficient(mesh.faces(), &plane, &target).unwrap();
        for &m in mu.values() {
            assert!((m - c(-1.0 / 3.0, 0.0)).norm() < 1e-13, "mu = {m}");
        }
    }

    #[test]
    fn half_conjugate_has_mu_half() {
        let mesh = synth::grid_mesh(3);
        let plane = planar_of_mesh(&mesh);
        let target = apply_map(&plane, |z| z + 0.5 * z.conj());
        let mu = beltrami_coefficient(mesh.faces(), &plane, &target).unwrap();
        for &m in mu.values() {
            assert!((m - c(0.5, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn stencils_annihilate_constants_and_reproduce_linears() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let corners = [
                c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
                c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
                c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
            ];
            let Ok(st) = face_derivative_stencil(corners) else {
                continue;
            };
            let sum_dx: f64 = st.dx.iter().sum();
            let sum_dy: f64 = st.dy.iter().sum();
            assert_eq!(sum_dx + 1.0, 1.0);
            assert_eq!(sum_dy + 1.0, 1.0);
            // Exactness on the coordinate functions themselves.
            let xs: f64 = (0..3).map(|i| st.dx[i] * corners[i].re).sum();
            let yx: f64 = (0..3).map(|i| st.dx[i] * corners[i].im).sum();
            let xy: f64 = (0..3).map(|i| st.dy[i] * corners[i].re).sum();
            let ys: f64 = (0..3).map(|i| st.dy[i] * corners[i].im).sum();
            assert!((xs - 1.0).abs() < 1e-9, "dx.a = {xs}");
            assert!((ys - 1.0).abs() < 1e-9, "dy.b = {ys}");
            assert!(yx.abs() < 1e-9 && xy.abs() < 1e-9);
        }
    }

    #[test]
    fn divergence_stencil_rows_sum_to_zero() {
        let corners = [c(0.1, 0.2), c(1.3, 0.4), c(0.2, 1.7)];
        let st = divergence_stencil(corners).unwrap();
        assert_eq!(st.a.iter().sum::<f64>() + 1.0, 1.0);
        assert_eq!(st.b.iter().sum::<f64>() + 1.0, 1.0);
    }

    #[test]
    fn alpha_matrix_is_positive_definite_with_unit_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let r = rng.random_range(0.0..0.97f64);
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            let mu = c(r * t.cos(), r * t.sin());
            let (a1, a2, a3) = alpha_coefficients(mu);
            let det = a1 * a3 - a2 * a2;
            assert!((det - 1.0).abs() < 1e-10, "det = {det} for mu = {mu}");
            assert!(a1 > 0.0);
            assert!(a1 + a3 > 0.0);
        }
    }

    #[test]
    fn lbs_with_zero_mu_reproduces_identity() {
        let mesh = synth::disk_mesh(4);
        let plane = planar_of_mesh(&mesh);
        let mu = BeltramiField::from_mus(vec![c(0.0, 0.0); mesh.face_count()]);
        let boundary: Vec<(usize, Complex64)> = boundary_loop(&mesh)
            .unwrap()
            .into_iter()
            .map(|v| (v, plane.coord(v)))
            .collect();
        let out = lbs_reconstruct(mesh.faces(), &plane, &mu, &boundary, 1e-10).unwrap();
        for v in 0..mesh.vertex_count() {
            assert!(
                (out.coords.coord(v) - plane.coord(v)).norm() < 1e-8,
                "vertex {v}"
            );
        }
        assert!(out.clamped_faces.is_empty());
    }

    #[test]
    fn lbs_with_zero_mu_matches_cotangent_laplacian_solution() {
        let mesh = synth::irregular_disk_mesh(5, 9);
        let plane = planar_of_mesh(&mesh);
        let boundary: Vec<(usize, Complex64)> = boundary_loop(&mesh)
            .unwrap()
            .into_iter()
            .map(|v| {
                let z = plane.coord(v);
                (v, z * z + c(0.2, 0.1) * z)
            })
            .collect();
        let mu = BeltramiField::from_mus(vec![c(0.0, 0.0); mesh.face_count()]);
        let lbs = lbs_reconstruct(mesh.faces(), &plane, &mu, &boundary, 1e-12).unwrap();

        let lap = crate::sparse::cotangent_laplacian(&mesh).unwrap();
        let rhs = vec![c(0.0, 0.0); mesh.vertex_count()];
        let harm = solve_with_dirichlet(&lap, &boundary, &rhs, 1e-12).unwrap();
        for v in 0..mesh.vertex_count() {
            assert!(
                (lbs.coords.coord(v) - harm.values[v]).norm() < 1e-8,
                "vertex {v}: {} vs {}",
                lbs.coords.coord(v),
                harm.values[v]
            );
        }
    }

    #[test]
    fn lbs_reconstructs_affine_map_from_constant_mu() {
        // f(x + iy) = x + 2iy has mu = -1/3; prescribing that mu with the
        // exact boundary trace must reproduce f in the interior.
        let mesh = synth::grid_mesh(8);
        let plane = planar_of_mesh(&mesh);
        let f = |z: Complex64| c(z.re, 2.0 * z.im);
        let mu = BeltramiField::from_mus(vec![c(-1.0 / 3.0, 0.0); mesh.face_count()]);
        let boundary: Vec<(usize, Complex64)> = boundary_loop(&mesh)
            .unwrap()
            .into_iter()
            .map(|v| (v, f(plane.coord(v))))
            .collect();
        let out = lbs_reconstruct(mesh.faces(), &plane, &mu, &boundary, 1e-12).unwrap();
        for v in 0..mesh.vertex_count() {
            let err = (out.coords.coord(v) - f(plane.coord(v))).norm();
            assert!(err < 1e-6, "vertex {v}: error {err}");
        }
    }

    #[test]
    fn lbs_round_trip_recovers_measured_mu() {
        // A smooth synthetic quasi-conformal map on an irregular disk:
        // measure its coefficient, reconstruct from the coefficient and the
        // boundary trace, and compare coefficients per face.
        let mesh = synth::irregular_disk_mesh(6, 21);
        let plane = planar_of_mesh(&mesh);
        let f = |z: Complex64| {
            z + c(0.15, 0.05) * z.conj() + c(0.04, -0.03) * z.conj() * z.conj()
                + c(0.05, 0.0) * z * z
        };
        let target = apply_map(&plane, f);
        let mu = beltrami_coefficient(mesh.faces(), &plane, &target).unwrap();
        assert!(dilation_summary(&mu).sup_norm < 1.0);

        let boundary: Vec<(usize, Complex64)> = boundary_loop(&mesh)
            .unwrap()
            .into_iter()
            .map(|v| (v, f(plane.coord(v))))
            .collect();
        let out = lbs_reconstruct(mesh.faces(), &plane, &mu, &boundary, 1e-12).unwrap();
        let mu_back = beltrami_coefficient(mesh.faces(), &plane, &out.coords).unwrap();
        for face in 0..mesh.face_count() {
            let err = (mu_back.mu(face) - mu.mu(face)).norm();
            assert!(err < 1e-6, "face {face}: {err}");
        }
    }

    #[test]
    fn lbs_system_is_symmetric() {
        let mesh = synth::irregular_disk_mesh(4, 5);
        let plane = planar_of_mesh(&mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mu = BeltramiField::from_mus(
            (0..mesh.face_count())
                .map(|_| c(rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)))
                .collect(),
        );
        let a = lbs_system(mesh.faces(), &plane, &mu).unwrap();
        assert_eq!(a.symmetry_violation(), 0.0);
        assert!(a.max_abs_row_sum() < 1e-10 * a.max_abs_entry());
    }

    #[test]
    fn lbs_solution_satisfies_divergence_balance() {
        // Substitute the output into the per-vertex divergence balance; on
        // a uniform-area domain the unweighted and the area-weighted
        // balances coincide.
        let mesh = synth::grid_mesh(6);
        let plane = planar_of_mesh(&mesh);
        let f = |z: Complex64| z + c(0.2, 0.1) * z.conj();
        let target = apply_map(&plane, f);
        let mu = beltrami_coefficient(mesh.faces(), &plane, &target).unwrap();
        let boundary: Vec<(usize, Complex64)> = boundary_loop(&mesh)
            .unwrap()
            .into_iter()
            .map(|v| (v, f(plane.coord(v))))
            .collect();
        let out = lbs_reconstruct(mesh.faces(), &plane, &mu, &boundary, 1e-12).unwrap();

        let constrained: std::collections::HashSet<usize> =
            boundary.iter().map(|&(v, _)| v).collect();
        let mut balance_u = vec![0.0; mesh.vertex_count()];
        let mut balance_v = vec![0.0; mesh.vertex_count()];
        let mut scale: f64 = 0.0;
        for (fi, f) in mesh.faces().iter().enumerate() {
            let corners = [
                plane.coord(f[0]),
                plane.coord(f[1]),
                plane.coord(f[2]),
            ];
            let div = divergence_stencil(corners).unwrap();
            let st = face_derivative_stencil(corners).unwrap();
            let w = [
                out.coords.coord(f[0]),
                out.coords.coord(f[1]),
                out.coords.coord(f[2]),
            ];
            let (dxw, dyw) = st.apply(w);
            let (a_t, b_t) = (dxw.re, dyw.re);
            let (c_t, d_t) = (dxw.im, dyw.im);
            let (a1, a2, a3) = alpha_coefficients(mu.mu(fi));
            for corner in 0..3 {
                let v = f[corner];
                balance_u[v] +=
                    div.a[corner] * (a1 * a_t + a2 * b_t) + div.b[corner] * (a2 * a_t + a3 * b_t);
                balance_v[v] +=
                    div.a[corner] * (a1 * c_t + a2 * d_t) + div.b[corner] * (a2 * c_t + a3 * d_t);
                scale = scale
                    .max(div.a[corner].abs() * (a_t.abs() + b_t.abs()))
                    .max(div.b[corner].abs() * (c_t.abs() + d_t.abs()));
            }
        }
        for v in 0..mesh.vertex_count() {
            if !constrained.contains(&v) {
                assert!(balance_u[v].abs() < 1e-7 * scale, "u at {v}: {}", balance_u[v]);
                assert!(balance_v[v].abs() < 1e-7 * scale, "v at {v}: {}", balance_v[v]);
            }
        }
    }

    #[test]
    fn jacobian_identity_holds_per_face() {
        let mesh = synth::irregular_disk_mesh(5, 13);
        let plane = planar_of_mesh(&mesh);
        let f = |z: Complex64| z + c(0.25, -0.1) * z.conj() + c(0.03, 0.02) * z * z;
        let target = apply_map(&plane, f);
        let mu = beltrami_coefficient(mesh.faces(), &plane, &target).unwrap();
        let wirt = wirtinger_derivatives(mesh.faces(), &plane, &target).unwrap();
        for (fi, face) in mesh.faces().iter().enumerate() {
            let src = [
                plane.coord(face[0]),
                plane.coord(face[1]),
                plane.coord(face[2]),
            ];
            let dst = [
                target.coord(face[0]),
                target.coord(face[1]),
                target.coord(face[2]),
            ];
            let ratio = signed_area(dst) / signed_area(src);
            let (fz, _) = wirt[fi];
            let jac = fz.norm_sqr() * (1.0 - mu.mu(fi).norm_sqr());
            assert!(
                (ratio - jac).abs() < 1e-8 * (1.0 + jac.abs()),
                "face {fi}: area ratio {ratio} vs jacobian {jac}"
            );
        }
    }

    fn signed_area(z: [Complex64; 3]) -> f64 {
        0.5 * ((z[1].re - z[0].re) * (z[2].im - z[0].im)
            - (z[2].re - z[0].re) * (z[1].im - z[0].im))
    }

    #[test]
    fn compose_with_conformal_keeps_mu() {
        let mu_f = BeltramiField::from_mus(vec![c(0.3, -0.2); 4]);
        let mu_g = BeltramiField::from_mus(vec![c(0.0, 0.0); 4]);
        let ratio = vec![c(0.6, 0.8); 4];
        let out = compose_beltrami(&mu_f, &mu_g, &ratio).unwrap();
        for face in 0..4 {
            assert!((out.mu(face) - c(0.3, -0.2)).norm() < 1e-15);
        }
    }

    #[test]
    fn compose_cancellation_is_conformal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let mf = c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            let ratio = c(t.cos(), t.sin()); // conj(fz)/fz is unimodular
            let mg = -mf / ratio;
            let out = compose_beltrami(
                &BeltramiField::from_mus(vec![mf]),
                &BeltramiField::from_mus(vec![mg]),
                &[ratio],
            )
            .unwrap();
            assert!(out.mu(0).norm() < 1e-12, "mu = {}", out.mu(0));
        }
    }

    #[test]
    fn compose_matches_brute_force_affine_composition() {
        // f and g are R-affine maps on one triangle; compose them directly
        // and compare coefficients.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let tri = [c(0.0, 0.0), c(1.0, 0.1), c(0.3, 0.9)];
        let faces = [[0usize, 1, 2]];
        for _ in 0..20 {
            let (p, q) = (
                c(1.0, rng.random_range(-0.2..0.2)),
                c(rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)),
            );
            let (r, s) = (
                c(1.0, rng.random_range(-0.2..0.2)),
                c(rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)),
            );
            let f = |z: Complex64| p * z + q * z.conj();
            let g = |w: Complex64| r * w + s * w.conj();
            let src = PlanarEmbedding::new(tri.to_vec());
            let mid = PlanarEmbedding::new(tri.iter().map(|&z| f(z)).collect());
            let dst = PlanarEmbedding::new(tri.iter().map(|&z| g(f(z))).collect());

            let mu_f = beltrami_coefficient(&faces, &src, &mid).unwrap();
            let mu_g = beltrami_coefficient(&faces, &mid, &dst).unwrap();
            let mu_gf = beltrami_coefficient(&faces, &src, &dst).unwrap();
            let wirt = wirtinger_derivatives(&faces, &src, &mid).unwrap();
            let ratio: Vec<Complex64> = wirt.iter().map(|(fz, _)| fz.conj() / fz).collect();
            let composed = compose_beltrami(&mu_f, &mu_g, &ratio).unwrap();
            assert!(
                (composed.mu(0) - mu_gf.mu(0)).norm() < 1e-8,
                "{} vs {}",
                composed.mu(0),
                mu_gf.mu(0)
            );
        }
    }

    #[test]
    fn dilation_summary_arithmetic() {
        let mu = BeltramiField::from_mus(vec![c(0.0, 0.0), c(1.0 / 3.0, 0.0)]);
        let d = dilation_summary(&mu);
        assert!((d.k - 2.0).abs() < 1e-12);
        assert!(!d.unbounded);

        let zero = dilation_summary(&BeltramiField::from_mus(vec![c(0.0, 0.0)]));
        assert_eq!(zero.k, 1.0);

        let bad = dilation_summary(&BeltramiField::from_mus(vec![c(1.0, 0.0)]));
        assert!(bad.unbounded);
        assert!(bad.k.is_infinite());
    }

    #[test]
    fn degenerate_target_is_flagged_with_unit_mu() {
        let tri = PlanarEmbedding::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)]);
        let collapsed = PlanarEmbedding::new(vec![c(0.5, 0.5); 3]);
        let faces = [[0usize, 1, 2]];
        let mu = beltrami_coefficient(&faces, &tri, &collapsed).unwrap();
        assert_eq!(mu.degenerate_faces(), &[0]);
        assert!((mu.mu(0).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn clamping_reports_faces() {
        let mu = BeltramiField::from_mus(vec![c(0.99, 0.0), c(0.2, 0.0), c(2.0, 0.0)]);
        let (clamped, faces) = mu.clamped(MU_CLAMP);
        assert_eq!(faces, vec![0, 2]);
        assert!((clamped.mu(0).norm() - MU_CLAMP).abs() < 1e-15);
        assert!((clamped.mu(2).norm() - MU_CLAMP).abs() < 1e-15);
        assert_eq!(clamped.mu(1), c(0.2, 0.0));
    }
}
