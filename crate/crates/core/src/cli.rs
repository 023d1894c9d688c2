//! Command-line entry points: parameterize a mesh, evaluate an existing
//! parameterization, export a texture-mapped OBJ, and generate synthetic
//! test meshes.

use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::io::{load_mesh, load_mesh_with_uv, write_mesh, write_mesh_with_uv,
    write_mesh_with_uv_mtl, MeshFormat};
use crate::mesh::TriMesh;
use crate::metrics::{angular_distortion, bijectivity_report, conformality_stats, Histogram};
use crate::pipeline::{disk_conformal_parameterize, PipelineOptions, Provenance, StageTimings};
use crate::spherical::PlanarEmbedding;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown report format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextureMode {
    None,
    Checkerboard,
}

/// Options shared by the commands; validated before use.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub uv: Option<PathBuf>,
    pub format: MeshFormat,
    pub skip_south_pole: bool,
    pub tolerance: f64,
    pub report: ReportFormat,
    pub texture: TextureMode,
    pub density: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: PathBuf::new(),
            output: None,
            uv: None,
            format: MeshFormat::Auto,
            skip_south_pole: false,
            tolerance: 1e-10,
            report: ReportFormat::Text,
            texture: TextureMode::None,
            density: 8,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-4) {
            return Err(Error::Config(format!(
                "solver tolerance must be in (0, 1e-4], got {}",
                self.tolerance
            )));
        }
        if self.density < 1 {
            return Err(Error::Config("checkerboard density must be >= 1".into()));
        }
        Ok(())
    }
}

/// Everything a run reports; serializes directly as the JSON schema.
#[derive(Debug, serde::Serialize)]
pub struct RunReport {
    pub mean_abs_deg: f64,
    pub sd_abs_deg: f64,
    pub flips: usize,
    /// Maximal dilation; `null` in JSON when unbounded.
    pub k: Option<f64>,
    pub unbounded_k: bool,
    pub boundary_simple: bool,
    pub excluded_faces: usize,
    pub histogram: Histogram,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<StageTimings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl RunReport {
    fn build(
        mesh: &TriMesh,
        uv: &PlanarEmbedding,
        timings: Option<StageTimings>,
        provenance: Option<Provenance>,
    ) -> Result<RunReport> {
        let distortion = angular_distortion(mesh, uv)?;
        let bijectivity = bijectivity_report(mesh, uv)?;
        let dilation = conformality_stats(mesh, uv)?;
        Ok(RunReport {
            mean_abs_deg: distortion.mean_abs_deg,
            sd_abs_deg: distortion.sd_abs_deg,
            flips: bijectivity.flip_count(),
            k: (!dilation.unbounded).then_some(dilation.k),
            unbounded_k: dilation.unbounded,
            boundary_simple: bijectivity.boundary_simple,
            excluded_faces: distortion.excluded_faces.len(),
            histogram: distortion.histogram,
            timings,
            provenance,
        })
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => serde_json::to_string_pretty(self).expect("report serializes"),
            ReportFormat::Text => {
                let mut out = String::new();
                out.push_str(&format!("mean_abs_deg: {}\n", self.mean_abs_deg));
                out.push_str(&format!("sd_abs_deg: {}\n", self.sd_abs_deg));
                out.push_str(&format!("flips: {}\n", self.flips));
                match self.k {
                    Some(k) => out.push_str(&format!("k: {k}\n")),
                    None => out.push_str("k: inf\n"),
                }
                out.push_str(&format!("boundary_simple: {}\n", self.boundary_simple));
                out.push_str(&format!("excluded_faces: {}\n", self.excluded_faces));
                if let Some(t) = &self.timings {
                    out.push_str(&format!("time_double_cover_s: {}\n", t.double_cover));
                    out.push_str(&format!("time_harmonic_s: {}\n", t.harmonic));
                    out.push_str(&format!("time_south_pole_s: {}\n", t.south_pole));
                    out.push_str(&format!(
                        "time_mobius_projection_s: {}\n",
                        t.mobius_projection
                    ));
                    out.push_str(&format!("time_normalization_s: {}\n", t.normalization));
                    out.push_str(&format!("time_lbs_s: {}\n", t.lbs));
                    out.push_str(&format!("time_total_s: {}\n", t.total));
                }
                if let Some(p) = &self.provenance {
                    out.push_str(&format!("anchor_face: {}\n", p.anchor_face));
                    out.push_str(&format!("skip_south_pole: {}\n", p.skip_south_pole));
                    out.push_str(&format!("systems_factored: {}\n", p.systems_factored));
                    out.push_str(&format!("rhs_solved: {}\n", p.rhs_solved));
                    out.push_str(&format!("clamp_events: {}\n", p.clamp_events));
                }
                out
            }
        }
    }
}

/// Parameterize a mesh and write the uv OBJ; prints the report to stdout.
pub fn cmd_param(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let output = config
        .output
        .as_ref()
        .ok_or_else(|| Error::Config("param requires --out".into()))?;
    let mesh = load_mesh(&config.input, config.format)?;
    let options = PipelineOptions {
        skip_south_pole: config.skip_south_pole,
        solver_tolerance: config.tolerance,
    };
    let param = disk_conformal_parameterize(&mesh, &options)?;
    write_mesh_with_uv(output, &mesh, param.uv().coords())?;

    let report = RunReport::build(
        &mesh,
        param.uv(),
        Some(param.provenance().timings),
        Some(param.provenance().clone()),
    )?;
    // The pipeline already verified its contracts; fail loudly if the
    // re-checked report disagrees.
    if report.flips > 0 || !report.boundary_simple {
        return Err(Error::Solver(format!(
            "post-run verification failed: {} flips, boundary_simple = {}",
            report.flips, report.boundary_simple
        ))
        .in_stage("result validation"));
    }
    Ok(report)
}

/// Evaluate an existing uv OBJ against the source mesh.
pub fn cmd_metrics(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let uv_path = config
        .uv
        .as_ref()
        .ok_or_else(|| Error::Config("metrics requires --uv".into()))?;
    let mesh = load_mesh(&config.input, config.format)?;
    let (uv_mesh, uv) = load_mesh_with_uv(uv_path)?;
    if uv_mesh.face_count() != mesh.face_count() {
        return Err(Error::FaceCountMismatch {
            mesh: mesh.face_count(),
            uv: uv_mesh.face_count(),
        });
    }
    if uv_mesh.faces() != mesh.faces() {
        return Err(Error::Config(
            "uv file connectivity does not match the input mesh".into(),
        ));
    }
    RunReport::build(&mesh, &PlanarEmbedding::new(uv), None, None)
}

/// Parameterize and export an OBJ with a rainbow checkerboard texture: the
/// uv coordinates are scaled by the checker density and a material library
/// plus PNG accompany the mesh.
pub fn cmd_texture(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let output = config
        .output
        .as_ref()
        .ok_or_else(|| Error::Config("texture requires --out".into()))?;
    let mesh = load_mesh(&config.input, config.format)?;
    let options = PipelineOptions {
        skip_south_pole: config.skip_south_pole,
        solver_tolerance: config.tolerance,
    };
    let param = disk_conformal_parameterize(&mesh, &options)?;

    let stem = output
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("textured");
    let mtl_path = output.with_extension("mtl");
    let png_path = output.with_extension("png");
    let mtl_name = mtl_path
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or("textured.mtl")
        .to_string();
    let png_name = png_path
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or("textured.png")
        .to_string();

    let density = config.density as f64;
    let scaled: Vec<Complex64> = param.uv().coords().iter().map(|z| z * density).collect();
    write_mesh_with_uv_mtl(output, &mesh, &scaled, Some((&mtl_name, stem)))?;

    let mtl = format!(
        "newmtl {stem}\nKa 1 1 1\nKd 1 1 1\nKs 0 0 0\nmap_Kd {png_name}\n"
    );
    std::fs::write(&mtl_path, mtl).map_err(|source| Error::Io {
        path: mtl_path.clone(),
        source,
    })?;
    write_checkerboard(&png_path)?;

    RunReport::build(
        &mesh,
        param.uv(),
        Some(param.provenance().timings),
        Some(param.provenance().clone()),
    )
}

/// One tileable period of a rainbow checkerboard (hue sweeps across the
/// tile, alternating cells darkened).
fn write_checkerboard(path: &Path) -> Result<()> {
    const SIZE: u32 = 512;
    const CELLS: u32 = 8;
    let mut img = image::RgbImage::new(SIZE, SIZE);
    for (x, y, pixel) in img.enumerate_pixels_mut() {
        let (cx, cy) = (x * CELLS / SIZE, y * CELLS / SIZE);
        let dark = (cx + cy) % 2 == 0;
        let hue = (x + y) as f64 / (2.0 * SIZE as f64) * 360.0;
        let value = if dark { 0.35 } else { 1.0 };
        let (r, g, b) = hsv_to_rgb(hue, 0.9, value);
        *pixel = image::Rgb([r, g, b]);
    }
    img.save(path).map_err(|e| Error::Config(format!("writing {path:?}: {e}")))
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (u8, u8, u8) {
    let c = v * s;
    let hp = (h / 60.0).rem_euclid(6.0);
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    (
        ((r + m) * 255.0).round() as u8,
        ((g + m) * 255.0).round() as u8,
        ((b + m) * 255.0).round() as u8,
    )
}

/// Shapes available to the `synth` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthShape {
    Disk,
    Sliver,
    Irregular,
    Hemisphere,
    Bumpy,
    Saddle,
    Tetrahedron,
}

impl std::str::FromStr for SynthShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "disk" => Ok(SynthShape::Disk),
            "sliver" => Ok(SynthShape::Sliver),
            "irregular" => Ok(SynthShape::Irregular),
            "hemisphere" => Ok(SynthShape::Hemisphere),
            "bumpy" => Ok(SynthShape::Bumpy),
            "saddle" => Ok(SynthShape::Saddle),
            "tetrahedron" => Ok(SynthShape::Tetrahedron),
            other => Err(Error::Config(format!("unknown shape '{other}'"))),
        }
    }
}

/// Generate a synthetic test mesh.
pub fn cmd_synth(shape: SynthShape, faces: usize, out: &Path) -> Result<()> {
    let rings = crate::synth::rings_for_faces(faces);
    let mesh = match shape {
        SynthShape::Disk => crate::synth::disk_mesh(rings),
        SynthShape::Sliver => crate::synth::sliver_disk_mesh(rings),
        SynthShape::Irregular => crate::synth::irregular_disk_mesh(rings, 7),
        SynthShape::Hemisphere => crate::synth::hemisphere_mesh(rings),
        SynthShape::Bumpy => crate::synth::bumpy_disk_mesh(rings),
        SynthShape::Saddle => crate::synth::saddle_mesh(rings),
        SynthShape::Tetrahedron => crate::synth::tetrahedron(),
    };
    write_mesh(out, &mesh)
}
