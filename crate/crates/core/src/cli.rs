//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};

use crate::classifier::pipeline::{
    derive_seed, global_bbox, linearize_dataset, run_experiment, run_trajectory_experiment, BboxMode,
    GridConfig, PipelineOutcome,
};
use crate::classifier::select::{EncodingMode, SelectionRule};
use crate::error::{Error, Result};
use crate::gaf::{encode_gaf, reconstruct_from_matrix};
use crate::io::dataset::{format_ucr, LabeledDataset, Split};
use crate::io::{
    export_image, load_grid_config, load_trajectories, load_ucr, load_ucr_variable,
    read_csv_matrix, write_checkpoint, write_report, ImageFormat,
};
use crate::matrix::SquareMatrix;
use crate::mtf::encode_mtf;
use crate::series::Series;
use crate::sfc::stretch_series;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gafmtf", version, about = "Time-series classification through GAF/MTF images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Gaf,
    Mtf,
    Dual,
}

impl From<ModeArg> for EncodingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Gaf => EncodingMode::Gaf,
            ModeArg::Mtf => EncodingMode::Mtf,
            ModeArg::Dual => EncodingMode::Dual,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ChannelArg {
    Gaf,
    Mtf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Png,
    Csv,
}

impl From<FormatArg> for ImageFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Png => ImageFormat::Png,
            FormatArg::Csv => ImageFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BboxArg {
    PerTrajectory,
    Global,
}

impl From<BboxArg> for BboxMode {
    fn from(b: BboxArg) -> Self {
        match b {
            BboxArg::PerTrajectory => BboxMode::PerTrajectory,
            BboxArg::Global => BboxMode::Global,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RuleArg {
    LowestError,
    #[value(name = "3sigma")]
    ThreeSigma,
}

impl From<RuleArg> for SelectionRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::LowestError => SelectionRule::LowestError,
            RuleArg::ThreeSigma => SelectionRule::ThreeSigma,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode every series of a file as images, one file per instance and channel.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "dual")]
        mode: ModeArg,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 8)]
        quantiles: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "png")]
        format: FormatArg,
        /// Seed for stretching series shorter than the image size.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Map trajectories onto a Hilbert curve and write them as series.
    Linearize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        order: u32,
        #[arg(long, value_enum, default_value = "per-trajectory")]
        bbox: BboxArg,
        /// Stretch every series to at least this many points.
        #[arg(long)]
        stretch: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output series file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid search, pretraining, SVM training and test evaluation.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, value_enum, default_value = "dual")]
        mode: ModeArg,
        #[arg(long)]
        grid_config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TOML evaluation report.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Pretrained network weights of the selected configuration.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Inputs are trajectory files (`traj_id,t,x,y,label`).
        #[arg(long)]
        trajectories: bool,
        #[arg(long, value_enum, default_value = "per-trajectory")]
        bbox: BboxArg,
        /// Overrides the selection rule of the grid config.
        #[arg(long, value_enum)]
        selection: Option<RuleArg>,
        /// Pretrain on the training split only.
        #[arg(long)]
        inductive: bool,
        /// Series files may hold rows of different lengths.
        #[arg(long)]
        variable_length: bool,
        /// Record wall time in the report.
        #[arg(long)]
        timings: bool,
        #[arg(long, short)]
        verbose: bool,
    },
    /// Render one instance as a single-channel image.
    Render {
        #[arg(long)]
        input: PathBuf,
        /// Zero-based instance index.
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, value_enum, default_value = "gaf")]
        mode: ChannelArg,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 8)]
        quantiles: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "png")]
        format: FormatArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Recover the rescaled series from the diagonal of a GAF matrix (CSV).
    Reconstruct {
        #[arg(long)]
        input: PathBuf,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_DATA,
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    EXIT_OK
                }
                _ => {
                    let _ = e.print();
                    eprintln!("\n{}", Cli::command().render_help());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn prepare(series: &Series, size: usize, seed: u64) -> Result<Series> {
    if series.len() < size {
        stretch_series(series, size, seed)
    } else {
        Ok(series.clone())
    }
}

fn channel_matrix(series: &Series, channel: ChannelArg, size: usize, q: usize) -> Result<SquareMatrix> {
    Ok(match channel {
        ChannelArg::Gaf => encode_gaf(series, size)?.matrix,
        ChannelArg::Mtf => encode_mtf(series, q, size)?.matrix,
    })
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Encode {
            input,
            mode,
            size,
            quantiles,
            out,
            format,
            seed,
        } => {
            let data = load_ucr_variable(&input)?;
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let format = ImageFormat::from(format);
            let channels: &[ChannelArg] = match mode {
                ModeArg::Gaf => &[ChannelArg::Gaf],
                ModeArg::Mtf => &[ChannelArg::Mtf],
                ModeArg::Dual => &[ChannelArg::Gaf, ChannelArg::Mtf],
            };
            for (i, (_, series)) in data.instances.iter().enumerate() {
                let s = prepare(series, size, derive_seed(seed, i as u64))?;
                for &ch in channels {
                    let m = channel_matrix(&s, ch, size, quantiles)
                        .map_err(|e| e.context(format!("instance {i}")))?;
                    let tag = match ch {
                        ChannelArg::Gaf => "gaf",
                        ChannelArg::Mtf => "mtf",
                    };
                    let path = out.join(format!("{i:04}_{tag}.{}", format.extension()));
                    export_image(&m, &path, format)?;
                }
            }
            eprintln!("encoded {} instances into {}", data.len(), out.display());
            Ok(())
        }
        Command::Linearize {
            input,
            order,
            bbox,
            stretch,
            seed,
            out,
        } => {
            let data = load_trajectories(&input)?;
            let global = global_bbox(&[&data]);
            let series = linearize_dataset(&data, order, bbox.into(), global)?;
            let instances = data
                .instances
                .iter()
                .zip(series)
                .enumerate()
                .map(|(i, (rec, s))| {
                    let s = match stretch {
                        Some(target) => prepare(&s, target, derive_seed(seed, i as u64))?,
                        None => s,
                    };
                    Ok((rec.label.clone(), s))
                })
                .collect::<Result<Vec<_>>>()?;
            let ds = LabeledDataset::new(data.name, Split::Unspecified, instances);
            write_text(out.as_deref(), &format_ucr(&ds))
        }
        Command::Train {
            train,
            test,
            mode,
            grid_config,
            seed,
            report,
            checkpoint,
            trajectories,
            bbox,
            selection,
            inductive,
            variable_length,
            timings,
            verbose,
        } => {
            let mut base = GridConfig::default();
            if trajectories {
                base.rule = SelectionRule::ThreeSigma;
            }
            let mut grid = match &grid_config {
                Some(p) => load_grid_config(p, base)?,
                None => base,
            };
            if let Some(r) = selection {
                grid.rule = r.into();
            }
            grid.inductive |= inductive;
            let started = Instant::now();
            let outcome: PipelineOutcome = if trajectories {
                let tr = load_trajectories(&train)?;
                let te = load_trajectories(&test)?;
                run_trajectory_experiment(&tr, &te, mode.into(), &grid, bbox.into(), seed, verbose)?
            } else {
                let load = if variable_length { load_ucr_variable } else { load_ucr };
                let tr = load(&train)?;
                let te = load(&test)?;
                run_experiment(&tr, &te, mode.into(), &grid, seed, verbose)?
            };
            let elapsed = started.elapsed().as_secs_f64();
            let mut rep = outcome.report;
            if timings {
                rep.wall_time_s = Some(elapsed);
            }
            for w in &rep.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(p) = &report {
                write_report(&rep, p)?;
            }
            if let Some(p) = &checkpoint {
                write_checkpoint(&outcome.network, p)?;
            }
            let sel = &rep.selected;
            println!("dataset = {}", rep.dataset);
            println!("mode = {}", rep.mode);
            println!(
                "selected = S {}{}{} C {}",
                sel.size,
                sel.quantiles.map(|q| format!(" Q {q}")).unwrap_or_default(),
                sel.sfc_order.map(|p| format!(" order {p}")).unwrap_or_default(),
                sel.c
            );
            println!("cv_error = {}", rep.cv_error);
            println!("train_error = {}", rep.train_error);
            println!("test_error = {}", rep.test_error);
            eprintln!("wall time {elapsed:.1} s");
            Ok(())
        }
        Command::Render {
            input,
            index,
            mode,
            size,
            quantiles,
            out,
            format,
            seed,
        } => {
            let data = load_ucr_variable(&input)?;
            let (_, series) = data.instances.get(index).ok_or_else(|| {
                Error::invalid(format!("index {index} out of range (dataset has {})", data.len()))
            })?;
            let s = prepare(series, size, derive_seed(seed, index as u64))?;
            let m = channel_matrix(&s, mode, size, quantiles)?;
            export_image(&m, &out, format.into())
        }
        Command::Reconstruct { input, out } => {
            let m = read_csv_matrix(&input)?;
            let s = reconstruct_from_matrix(&m)?;
            let line: Vec<String> = s.values().iter().map(|v| v.to_string()).collect();
            write_text(out.as_deref(), &format!("{}\n", line.join(",")))
        }
    }
}
