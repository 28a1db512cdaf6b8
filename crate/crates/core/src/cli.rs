//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on I/O failures, 2 on invalid flags, invalid
//! data or infeasible parameters.

use std::ffi::OsString;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::grid::PredictionGrid;
use crate::io::{self, SummaryFormat};
use crate::ladder::ScaleMode;
use crate::manifest::{InputSource, RunManifest};
use crate::pipeline::{self, PixelationParams};
use crate::render::{self, RenderConfig};
use crate::synth::{self, CellRect, SyntheticConfig};

#[derive(Debug, Parser)]
#[command(
    name = "pixelate",
    version,
    about = "Adaptive pixelation of predictions by their uncertainty"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pixelate a prediction grid and write the map, allocation map, table and manifest.
    Pixelate(PixelateArgs),
    /// Write only the quantile-interval allocation map.
    Allocate(StageArgs),
    /// Write only the pixel-dimension summary table.
    Summarize(SummarizeArgs),
    /// Generate a synthetic prediction grid as an x,y,z,u CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// CSV with columns x,y,z,u or x,y,z,z_lo,z_hi.
    #[arg(long, conflicts_with_all = ["input_z", "input_u"])]
    pub input: Option<String>,
    /// ASCII grid of predictions (paired with --input-u).
    #[arg(long, requires = "input_u")]
    pub input_z: Option<String>,
    /// ASCII grid of uncertainties (paired with --input-z).
    #[arg(long, requires = "input_z")]
    pub input_u: Option<String>,
    /// Cells with |z| and u at or below this are zero with certainty.
    #[arg(long, default_value_t = 0.0)]
    pub zero_tol: f64,
}

impl InputArgs {
    fn source(&self) -> Option<InputSource> {
        match (&self.input, &self.input_z, &self.input_u) {
            (Some(path), _, _) => Some(InputSource::Csv { path: path.clone() }),
            (None, Some(z), Some(u)) => Some(InputSource::AsciiPair {
                z_path: z.clone(),
                u_path: u.clone(),
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleArg {
    Imult,
    Iexpn,
}

impl From<ScaleArg> for ScaleMode {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Imult => ScaleMode::Imult,
            ScaleArg::Iexpn => ScaleMode::Iexpn,
        }
    }
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected LX,LY, got {s:?}"))?;
    let a = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    Ok((a, b))
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// Number of pixel sizes (quantile intervals).
    #[arg(long, default_value_t = 6)]
    pub num_sizes: usize,
    #[arg(long, value_enum, default_value = "imult")]
    pub scale: ScaleArg,
    /// Scale factor c: sizes grow by (1 + c) per step (imult) or (1 + c)^k (iexpn).
    #[arg(long, default_value_t = 1)]
    pub factor: u64,
    /// Lower bound on the number of big pixels per axis, as LX,LY.
    #[arg(long, value_parser = parse_pair, default_value = "12,12")]
    pub min_big: (usize, usize),
}

impl ParamArgs {
    fn params(&self) -> PixelationParams {
        PixelationParams {
            num_sizes: self.num_sizes,
            scale: self.scale.into(),
            factor: self.factor,
            min_big: self.min_big,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct StageArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub out_prefix: String,
    #[arg(long, default_value_t = 1)]
    pub px_per_cell: usize,
    /// Append a legend strip below the image.
    #[arg(long)]
    pub legend: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PixelateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Output prefix; required unless re-running a manifest.
    #[arg(long)]
    pub out_prefix: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub px_per_cell: usize,
    #[arg(long)]
    pub legend: bool,
    /// Also write <prefix>.map.svg.
    #[arg(long)]
    pub svg: bool,
    /// Re-run from a manifest; input and parameter flags are taken from it.
    #[arg(long, conflicts_with_all = ["input", "input_z", "input_u"])]
    pub manifest: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Markdown,
}

#[derive(Debug, Clone, Args)]
pub struct SummarizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub out_prefix: String,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Use a bundled configuration instead of the flags below.
    #[arg(long, value_parser = synth::BUNDLED)]
    pub bundled: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub nx: usize,
    #[arg(long, default_value_t = 64)]
    pub ny: usize,
    #[arg(long, default_value_t = 1.0)]
    pub cell_w: f64,
    #[arg(long, default_value_t = 1.0)]
    pub cell_h: f64,
    #[arg(long, default_value_t = 4)]
    pub bumps: usize,
    #[arg(long, default_value_t = 3)]
    pub sites: usize,
    /// Correlation length in projection units.
    #[arg(long, default_value_t = 8.0)]
    pub range: f64,
    #[arg(long, default_value_t = 1.0)]
    pub base_u: f64,
    /// Cell rectangle x0,y0,x1,y1 (half-open) to mark missing.
    #[arg(long)]
    pub missing_rect: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub zero_threshold: f64,
    #[arg(long)]
    pub out: String,
}

impl SynthArgs {
    fn config(&self) -> Result<SyntheticConfig> {
        if let Some(name) = &self.bundled {
            return synth::bundled_config(name);
        }
        Ok(SyntheticConfig {
            seed: self.seed,
            n_x: self.nx,
            n_y: self.ny,
            cell_w: self.cell_w,
            cell_h: self.cell_h,
            num_bumps: self.bumps,
            num_sites: self.sites,
            range: self.range,
            base_u: self.base_u,
            missing_rect: self
                .missing_rect
                .as_deref()
                .map(str::parse::<CellRect>)
                .transpose()?,
            zero_threshold: self.zero_threshold,
        })
    }
}

fn exit_code(err: &Error) -> i32 {
    if err.is_io() {
        1
    } else {
        2
    }
}

fn load(source: &InputSource, zero_tol: f64) -> Result<(PredictionGrid, &'static str)> {
    match source {
        InputSource::Csv { path } => {
            let (grid, mode) = io::read_csv_with_mode(path, zero_tol)?;
            Ok((grid, mode.describe()))
        }
        InputSource::AsciiPair { z_path, u_path } => {
            Ok((io::read_ascii_grid_pair(z_path, u_path, zero_tol)?, "u"))
        }
    }
}

fn require_source(input: &InputArgs) -> Result<InputSource> {
    input.source().ok_or_else(|| {
        Error::InvalidParameter(
            "an input is required: --input <csv> or --input-z <asc> --input-u <asc>".into(),
        )
    })
}

fn write_bytes(path: &str, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_pixelate(args: &PixelateArgs) -> Result<()> {
    let mut manifest = match &args.manifest {
        Some(path) => {
            let m = RunManifest::load(path)?;
            let digest = m.input.digest()?;
            if digest != m.input_digest {
                return Err(Error::InvalidParameter(format!(
                    "input changed since the manifest was written (digest {digest}, manifest has {})",
                    m.input_digest
                )));
            }
            m
        }
        None => {
            let source = require_source(&args.input)?;
            let params = args.params.params();
            RunManifest {
                tool: "pixelate".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                input_digest: source.digest()?,
                input: source,
                uncertainty_mode: String::new(),
                num_sizes: params.num_sizes,
                scale: params.scale,
                factor: params.factor,
                min_big: [params.min_big.0, params.min_big.1],
                zero_tol: args.input.zero_tol,
                px_per_cell: args.px_per_cell,
                legend: args.legend,
                svg: args.svg,
                ladder: Vec::new(),
                big_pixels: [0, 0],
                degenerate: false,
                out_prefix: String::new(),
                outputs: Vec::new(),
                run_digest: String::new(),
            }
        }
    };
    let prefix = args
        .out_prefix
        .clone()
        .or_else(|| args.manifest.as_ref().map(|_| manifest.out_prefix.clone()))
        .ok_or_else(|| Error::InvalidParameter("--out-prefix is required".into()))?;

    let (grid, mode) = load(&manifest.input, manifest.zero_tol)?;
    let result = pipeline::run(&grid, &manifest.params())?;
    warn_all(&result.warnings);

    let config = RenderConfig {
        px_per_cell: manifest.px_per_cell,
        legend: manifest.legend,
        ..Default::default()
    };
    let map = render::map_image(&result.pixelated, &config)?;
    warn_all(&map.warnings);
    let alloc_png = render::render_allocation(&result.partition, &result.alloc, &config)?;

    let mut outputs = vec![
        format!("{prefix}.pixelated.csv"),
        format!("{prefix}.map.png"),
        format!("{prefix}.alloc.png"),
        format!("{prefix}.summary.csv"),
    ];
    io::write_pixelated_csv(&result.pixelated, &outputs[0])?;
    write_bytes(&outputs[1], &map.image.encode_png()?)?;
    write_bytes(&outputs[2], &alloc_png)?;
    io::write_summary(&result.summary, &outputs[3], SummaryFormat::Csv)?;
    if manifest.svg {
        let path = format!("{prefix}.map.svg");
        let svg = render::render_svg(&result.pixelated, &config)?;
        write_bytes(&path, svg.as_bytes())?;
        outputs.push(path);
    }

    manifest.uncertainty_mode = mode.to_string();
    manifest.ladder = result.ladder.sizes().to_vec();
    manifest.big_pixels = [result.partition.n_big_x, result.partition.n_big_y];
    manifest.degenerate = result.alloc.degenerate;
    manifest.out_prefix = prefix.clone();
    manifest.outputs = outputs;
    manifest.run_digest = manifest.compute_run_digest();
    let manifest_path = format!("{prefix}.manifest.json");
    manifest.save(&manifest_path)?;

    println!(
        "ladder {:?}; {}x{} big pixels; run {}",
        manifest.ladder, manifest.big_pixels[0], manifest.big_pixels[1], manifest.run_digest
    );
    Ok(())
}

fn cmd_allocate(args: &StageArgs) -> Result<()> {
    let (grid, _) = load(&require_source(&args.input)?, args.input.zero_tol)?;
    let (_, partition, alloc) = pipeline::allocate_grid(&grid, &args.params.params())?;
    if alloc.degenerate {
        warn_all(&[crate::quantile::DEGENERATE_WARNING.to_string()]);
    }
    let config = RenderConfig {
        px_per_cell: args.px_per_cell,
        legend: args.legend,
        ..Default::default()
    };
    let png = render::render_allocation(&partition, &alloc, &config)?;
    write_bytes(&format!("{}.alloc.png", args.out_prefix), &png)
}

fn cmd_summarize(args: &SummarizeArgs) -> Result<()> {
    let (grid, _) = load(&require_source(&args.input)?, args.input.zero_tol)?;
    let result = pipeline::run(&grid, &args.params.params())?;
    warn_all(&result.warnings);
    let (format, ext) = match args.format {
        FormatArg::Csv => (SummaryFormat::Csv, "csv"),
        FormatArg::Markdown => (SummaryFormat::Markdown, "md"),
    };
    io::write_summary(
        &result.summary,
        format!("{}.summary.{ext}", args.out_prefix),
        format,
    )
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let grid = synth::generate_field(&args.config()?)?;
    io::write_grid_csv(&grid, &args.out)
}

/// Parses `args` (including the program name) and runs the command, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match &cli.command {
        Command::Pixelate(a) => cmd_pixelate(a),
        Command::Allocate(a) => cmd_allocate(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
