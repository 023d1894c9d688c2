use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use diskconf::cli::{
    cmd_metrics, cmd_param, cmd_synth, cmd_texture, ReportFormat, RunConfig, SynthShape,
    TextureMode,
};
use diskconf::MeshFormat;

/// Bijective disk conformal parameterization of simply-connected open
/// triangle meshes.
#[derive(Parser)]
#[command(name = "diskconf", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a disk parameterization and write an OBJ with uv coordinates.
    Param(ParamArgs),
    /// Evaluate an existing uv OBJ against its source mesh.
    Metrics(MetricsArgs),
    /// Parameterize and export a checkerboard-textured OBJ (+ mtl + png).
    Texture(TextureArgs),
    /// Generate a synthetic test mesh.
    Synth(SynthArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Input mesh (OBJ or OFF).
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Input format override.
    #[arg(long, default_value = "auto", value_parser = parse_format)]
    format: MeshFormat,
    /// Report format: text or json.
    #[arg(long, default_value = "text", value_parser = parse_report)]
    report: ReportFormat,
}

#[derive(Args)]
struct ParamArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output OBJ with vt records.
    #[arg(long = "out", value_name = "PATH")]
    output: PathBuf,
    /// Skip the South-pole correction solve (faster, needs a good anchor).
    #[arg(long)]
    skip_south_pole: bool,
    /// Relative residual tolerance for the linear solves, in (0, 1e-4].
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// OBJ carrying the uv coordinates to evaluate.
    #[arg(long = "uv", value_name = "PATH")]
    uv: PathBuf,
}

#[derive(Args)]
struct TextureArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output OBJ; the material library and texture image are written next
    /// to it.
    #[arg(long = "out", value_name = "PATH")]
    output: PathBuf,
    /// Checkerboard repetitions across the unit square of texture space.
    #[arg(long, default_value_t = 8)]
    density: u32,
    #[arg(long)]
    skip_south_pole: bool,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
}

#[derive(Args)]
struct SynthArgs {
    /// disk | sliver | irregular | hemisphere | bumpy | saddle | tetrahedron
    #[arg(long, value_parser = parse_shape)]
    shape: SynthShape,
    /// Approximate face count.
    #[arg(long, default_value_t = 1000)]
    faces: usize,
    #[arg(long = "out", value_name = "PATH")]
    output: PathBuf,
}

fn parse_format(s: &str) -> Result<MeshFormat, String> {
    s.parse().map_err(|e: diskconf::Error| e.to_string())
}

fn parse_report(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: diskconf::Error| e.to_string())
}

fn parse_shape(s: &str) -> Result<SynthShape, String> {
    s.parse().map_err(|e: diskconf::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Param(args) => {
            let config = RunConfig {
                input: args.common.input,
                output: Some(args.output),
                format: args.common.format,
                skip_south_pole: args.skip_south_pole,
                tolerance: args.tolerance,
                report: args.common.report,
                ..Default::default()
            };
            cmd_param(&config).map(|report| print!("{}", report.render(config.report)))
        }
        Command::Metrics(args) => {
            let config = RunConfig {
                input: args.common.input,
                uv: Some(args.uv),
                format: args.common.format,
                report: args.common.report,
                ..Default::default()
            };
            cmd_metrics(&config).map(|report| print!("{}", report.render(config.report)))
        }
        Command::Texture(args) => {
            let config = RunConfig {
                input: args.common.input,
                output: Some(args.output),
                uv: None,
                format: args.common.format,
                skip_south_pole: args.skip_south_pole,
                tolerance: args.tolerance,
                report: args.common.report,
                texture: TextureMode::Checkerboard,
                density: args.density,
            };
            cmd_texture(&config).map(|report| print!("{}", report.render(config.report)))
        }
        Command::Synth(args) => cmd_synth(args.shape, args.faces, &args.output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::FAILURE
        }
    }
}
