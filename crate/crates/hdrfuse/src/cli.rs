//! Subcommand definitions and drivers.
//!
//! Binary artifacts always go to `--out` paths; standard output carries only
//! CSV so runs can be scripted and diffed. Every command is deterministic:
//! the same inputs and flags produce bit-identical files and CSV.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use hdrfuse_core::coeff_stats::{compare_fits, Band, DistFamily, StatsError};
use hdrfuse_core::crf::{
    radiance_map, solve_response, CrfError, SamplePlan, DEFAULT_LAMBDA, DEFAULT_SAMPLE_COUNT,
};
use hdrfuse_core::fusion::{fuse, FusionError, FusionMethod, MertensParams};
use hdrfuse_core::metrics::{immse, psnr_db, ssim, MetricReport, MetricsError, Scale};
use hdrfuse_core::ppm::{load_ppm, save_ppm};
use hdrfuse_core::rgbe::{read_hdr, write_hdr};
use hdrfuse_core::tonemap::{tonemap_global, TonemapParams};
use hdrfuse_core::transform::{block_dct2, CoeffLayout};

use crate::curvefile;
use crate::error::CliError;
use crate::manifest::StackManifest;

#[derive(Parser, Debug)]
#[command(
    name = "hdrfuse",
    version,
    about = "Fuse bracketed exposures, recover camera response, merge and tone map HDR scenes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fuse a bracketed stack into one low dynamic range image
    Fuse(FuseArgs),
    /// Recover the camera response curve from a bracketed stack
    Response(ResponseArgs),
    /// Merge a bracketed stack into a Radiance .hdr scene
    MergeHdr(MergeHdrArgs),
    /// Compress a .hdr scene into a displayable PPM
    Tonemap(TonemapArgs),
    /// Compare two PPM images (PSNR, MSE, SSIM) as one CSV row
    Metrics(MetricsArgs),
    /// Fit coefficient distributions on a block transform band
    Stats(StatsArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Average the stacks' transform coefficients, then invert
    Dct,
    /// Plain per-pixel mean
    Mean,
    /// Multi-scale quality-weighted blending
    Mertens,
}

impl Method {
    fn label(self) -> &'static str {
        match self {
            Method::Dct => "dct",
            Method::Mean => "mean",
            Method::Mertens => "mertens",
        }
    }
}

#[derive(clap::Args, Debug)]
pub struct FuseArgs {
    /// Stack manifest: one "<image.ppm> <seconds>" line per exposure
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value = "dct")]
    pub method: Method,
    /// Transform tile size for --method dct; 0 means full frame
    #[arg(long, default_value_t = 0)]
    pub block: usize,
    /// Contrast exponent (mertens)
    #[arg(long, default_value_t = 1.0)]
    pub wc: f64,
    /// Saturation exponent (mertens)
    #[arg(long, default_value_t = 1.0)]
    pub ws: f64,
    /// Well-exposedness exponent (mertens)
    #[arg(long, default_value_t = 1.0)]
    pub we: f64,
    /// Pyramid levels (mertens); derived from the image size when absent
    #[arg(long)]
    pub levels: Option<usize>,
    /// Output PPM path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct ResponseArgs {
    pub manifest: PathBuf,
    /// Curvature penalty weight
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Pixel locations sampled across the stack
    #[arg(long, default_value_t = DEFAULT_SAMPLE_COUNT)]
    pub samples: usize,
    /// Output curve text file (256 lines of "z h_R h_G h_B")
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct MergeHdrArgs {
    pub manifest: PathBuf,
    /// Response curve file produced by `response`
    #[arg(long)]
    pub curve: PathBuf,
    /// Output Radiance .hdr path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct TonemapArgs {
    /// Input Radiance .hdr scene
    pub scene: PathBuf,
    /// Middle-gray key the scene's log-average maps to
    #[arg(long, default_value_t = 0.18)]
    pub key: f64,
    /// Log-average luminance floor
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// Output PPM path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Peak {
    /// Compare values in [0,1], peak 1.0
    Unit,
    /// Compare values in [0,255], peak 255
    Byte,
}

#[derive(clap::Args, Debug)]
pub struct MetricsArgs {
    /// Reference image
    pub reference: PathBuf,
    /// Image under test
    pub test: PathBuf,
    /// Scale differences are measured on
    #[arg(long, value_enum, default_value = "unit")]
    pub peak: Peak,
    /// Label for the CSV row; defaults to the test image's file stem
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(clap::Args, Debug)]
pub struct StatsArgs {
    /// Input PPM; statistics run on its luma plane
    pub image: PathBuf,
    /// Transform tile size
    #[arg(long, default_value_t = 8)]
    pub block: usize,
    /// Band to sample: "dc", "all-ac", or "ac:U,V"
    #[arg(long, default_value = "all-ac")]
    pub band: String,
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn load_ppm_file(path: &Path) -> Result<hdrfuse_core::image::ImageRGB, CliError> {
    load_ppm(&read_file(path)?)
        .map_err(|e| CliError::Parse { path: path.to_path_buf(), detail: e.to_string() })
}

fn fusion_error(e: FusionError) -> CliError {
    CliError::Invalid { detail: e.to_string() }
}

fn crf_error(e: CrfError) -> CliError {
    match e {
        CrfError::TooFewExposures { .. }
        | CrfError::IdenticalExposures
        | CrfError::Underdetermined { .. }
        | CrfError::SolveFailed => CliError::Estimation { detail: e.to_string() },
        other => CliError::Invalid { detail: other.to_string() },
    }
}

fn metrics_error(e: MetricsError) -> CliError {
    CliError::Shape { detail: e.to_string() }
}

fn stats_error(e: StatsError) -> CliError {
    CliError::Invalid { detail: e.to_string() }
}

fn cmd_fuse(args: &FuseArgs) -> Result<(), CliError> {
    let stack = StackManifest::load(&args.manifest)?.load_stack()?;
    let method = match args.method {
        Method::Dct => FusionMethod::DctAverage(match args.block {
            0 => CoeffLayout::FullFrame,
            b @ (4 | 8 | 16) => CoeffLayout::Block(b),
            other => {
                return Err(CliError::Invalid {
                    detail: format!("--block {other}: pick 0 (full frame), 4, 8 or 16"),
                })
            }
        }),
        Method::Mean => FusionMethod::SpatialMean,
        Method::Mertens => FusionMethod::MertensPyramid(MertensParams {
            contrast_exp: args.wc,
            saturation_exp: args.ws,
            wellexposed_exp: args.we,
            levels: args.levels,
        }),
    };
    let output = fuse(&stack, &method).map_err(fusion_error)?;
    let image = output.image();
    let bytes = save_ppm(&image).expect("fusion output is unit range");
    write_file(&args.out, &bytes)?;
    println!(
        "{},{},{},{},{}",
        args.method.label(),
        stack.len(),
        stack.width(),
        stack.height(),
        output.max_excursion()
    );
    Ok(())
}

fn cmd_response(args: &ResponseArgs) -> Result<(), CliError> {
    let stack = StackManifest::load(&args.manifest)?.load_stack()?;
    let plan = SamplePlan::stratified(&stack, args.samples).map_err(crf_error)?;
    let solution = solve_response(&stack, &plan, args.lambda).map_err(crf_error)?;
    for (c, diag) in solution.diagnostics.iter().enumerate() {
        if !diag.monotone_before_projection {
            eprintln!(
                "warning: channel {c} response was not monotone; projected (rms {})",
                diag.projection_rms
            );
        }
    }
    curvefile::save_curves(&args.out, &solution.curves)
}

fn cmd_merge_hdr(args: &MergeHdrArgs) -> Result<(), CliError> {
    let stack = StackManifest::load(&args.manifest)?.load_stack()?;
    let curves = curvefile::load_curves(&args.curve)?;
    let merged = radiance_map(&stack, &curves).map_err(crf_error)?;
    write_file(&args.out, &write_hdr(&merged.map))?;
    println!("fallback_pixels,{}", merged.fallback_pixels);
    Ok(())
}

fn cmd_tonemap(args: &TonemapArgs) -> Result<(), CliError> {
    let map = read_hdr(&read_file(&args.scene)?)
        .map_err(|e| CliError::Parse { path: args.scene.clone(), detail: e.to_string() })?;
    let params = TonemapParams { key: args.key, epsilon: args.epsilon };
    let image = tonemap_global(&map, &params)
        .map_err(|e| CliError::Invalid { detail: e.to_string() })?;
    write_file(&args.out, &save_ppm(&image).expect("tone mapped output is unit range"))
}

fn cmd_metrics(args: &MetricsArgs) -> Result<(), CliError> {
    let reference = load_ppm_file(&args.reference)?;
    let test = load_ppm_file(&args.test)?;
    let scale = match args.peak {
        Peak::Unit => Scale::Unit,
        Peak::Byte => Scale::Byte,
    };
    let mse = immse(&reference, &test, scale).map_err(metrics_error)?;
    let report = MetricReport {
        name: args.name.clone().unwrap_or_else(|| {
            args.test.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
        }),
        psnr_db: psnr_db(mse, scale.peak()),
        immse: mse,
        ssim: ssim(&reference, &test).map_err(metrics_error)?,
    };
    println!("{}", report.csv_row());
    Ok(())
}

fn parse_band(selector: &str) -> Result<Band, CliError> {
    match selector {
        "dc" => Ok(Band::Dc),
        "all-ac" => Ok(Band::AllAc),
        other => {
            let rest = other.strip_prefix("ac:").ok_or_else(|| CliError::Invalid {
                detail: format!("--band {other:?}: expected \"dc\", \"all-ac\" or \"ac:U,V\""),
            })?;
            let (u, v) = rest.split_once(',').ok_or_else(|| CliError::Invalid {
                detail: format!("--band {other:?}: expected \"ac:U,V\""),
            })?;
            let parse = |s: &str| {
                s.trim().parse::<usize>().map_err(|_| CliError::Invalid {
                    detail: format!("--band {other:?}: bad index {s:?}"),
                })
            };
            Ok(Band::Ac { u: parse(u)?, v: parse(v)? })
        }
    }
}

fn band_label(band: Band) -> String {
    match band {
        Band::Dc => "dc".into(),
        Band::AllAc => "all-ac".into(),
        Band::Ac { u, v } => format!("ac:{u},{v}"),
    }
}

fn cmd_stats(args: &StatsArgs) -> Result<(), CliError> {
    let image = load_ppm_file(&args.image)?;
    let band = parse_band(&args.band)?;
    let grid = block_dct2(&image.luma_mean(), args.block)
        .map_err(|e| CliError::Invalid { detail: e.to_string() })?;
    let cmp = compare_fits(&grid, band).map_err(stats_error)?;
    let label = band_label(band);
    let winner = match (cmp.winner, cmp.tie) {
        (DistFamily::Laplacian, true) => "laplacian(tie)".to_string(),
        (family, _) => family.to_string(),
    };
    for (fit, d) in [(cmp.laplacian, cmp.laplacian_d), (cmp.gaussian, cmp.gaussian_d)] {
        if fit.degenerate {
            eprintln!("warning: {} fit is degenerate (zero spread)", fit.family);
        }
        println!("{label},{},{},{},{d},{winner}", fit.family, fit.location, fit.scale);
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Fuse(args) => cmd_fuse(args),
        Command::Response(args) => cmd_response(args),
        Command::MergeHdr(args) => cmd_merge_hdr(args),
        Command::Tonemap(args) => cmd_tonemap(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Stats(args) => cmd_stats(args),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_spec_parsing() {
        assert_eq!(parse_band("dc").unwrap(), Band::Dc);
        assert_eq!(parse_band("all-ac").unwrap(), Band::AllAc);
        assert_eq!(parse_band("ac:1,2").unwrap(), Band::Ac { u: 1, v: 2 });
        assert_eq!(parse_band("ac: 3 , 4 ").unwrap(), Band::Ac { u: 3, v: 4 });
        assert!(parse_band("ac").is_err());
        assert!(parse_band("ac:1").is_err());
        assert!(parse_band("ac:x,y").is_err());
        assert!(parse_band("dcx").is_err());
    }

    #[test]
    fn band_labels_round_trip() {
        for selector in ["dc", "all-ac", "ac:1,2"] {
            assert_eq!(band_label(parse_band(selector).unwrap()), selector);
        }
    }

    #[test]
    fn cli_parses_subcommands() {
        let cli = Cli::try_parse_from([
            "hdrfuse", "fuse", "stack.txt", "--method", "mertens", "--levels", "3", "--out",
            "o.ppm",
        ])
        .unwrap();
        match cli.command {
            Command::Fuse(args) => {
                assert_eq!(args.method, Method::Mertens);
                assert_eq!(args.levels, Some(3));
                assert_eq!(args.block, 0);
            }
            other => panic!("parsed {other:?}"),
        }
        assert!(Cli::try_parse_from(["hdrfuse", "fuse"]).is_err());
        assert!(Cli::try_parse_from(["hdrfuse", "nonsense"]).is_err());
    }

    #[test]
    fn error_exit_codes() {
        let args = FuseArgs {
            manifest: PathBuf::from("/no/such/manifest.txt"),
            method: Method::Dct,
            block: 0,
            wc: 1.0,
            ws: 1.0,
            we: 1.0,
            levels: None,
            out: PathBuf::from("/tmp/out.ppm"),
        };
        assert_eq!(cmd_fuse(&args).unwrap_err().exit_code(), 2);
    }
}
