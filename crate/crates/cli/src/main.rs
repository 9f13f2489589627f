use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fase_cli::bench::{write_csv, BenchOptions};
use fase_cli::conceal::{conceal, ConcealOptions};
use fase_cli::maskgen::GridLoss;
use fase_cli::pgm::GrayImage;
use fase_cli::spec::{DictSpec, Size};
use fase_cli::tables::{write_dictionary, write_table, Geometry};
use fase_cli::verify::{self, verify, SignalKind, VerifyOptions};
use fase_cli::{CliError, Result};
use fase_core::{Algorithm, ExtrapConfig};

#[derive(Parser)]
#[command(
    name = "fase",
    version,
    about = "Selective extrapolation of lost image regions"
)]
struct Cli {
    /// Run everything on one thread.
    #[arg(long, global = true)]
    single_thread: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// dft, dct, wht, bdft, union:a+b or file:path
    #[arg(long, default_value = "dct")]
    dict: DictSpec,
    #[arg(long, default_value_t = 250)]
    iters: usize,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Weight decay per sample of distance from the area center.
    #[arg(long, default_value_t = 0.8)]
    rho: f64,
}

impl ModelArgs {
    fn config(&self) -> Result<ExtrapConfig> {
        Ok(ExtrapConfig::new(self.iters, self.gamma, self.rho)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fill the lost pixels of a PGM image.
    Conceal {
        image: PathBuf,
        /// PGM of the same size; 0 marks lost pixels.
        mask: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// JSON report destination; stdout when absent.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Undamaged image for PSNR figures.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        /// Tile size WxH; the whole image is one area when absent.
        #[arg(long)]
        block: Option<Size>,
        /// Support ring width around each tile.
        #[arg(long, default_value_t = 24)]
        support: usize,
        /// Gram table file to use instead of building tables.
        #[arg(long)]
        tables: Option<PathBuf>,
        #[arg(long)]
        fft: bool,
    },
    /// Compare SE and FaSE on seeded random signals.
    Verify {
        #[arg(long, default_value = "8x8")]
        size: Size,
        /// Central lost block.
        #[arg(long, default_value = "4x4")]
        loss: Size,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use an all-zero signal instead of random ones.
        #[arg(long)]
        zero_signal: bool,
        #[arg(long)]
        tables: Option<PathBuf>,
        #[arg(long, default_value_t = verify::DEFAULT_MAX_AREA)]
        max_area: usize,
        #[arg(long, default_value_t = verify::DEFAULT_MAX_ATOMS)]
        max_atoms: usize,
        /// JSON report destination; stdout when absent.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Time SE, FaSE and table construction over a parameter grid.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "16x16")]
        sizes: Vec<Size>,
        #[arg(long, value_delimiter = ',', default_value = "dct")]
        dicts: Vec<DictSpec>,
        /// Keep only the first K atoms of each dictionary.
        #[arg(long, value_delimiter = ',')]
        atoms: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',', default_value = "10,50,250")]
        iters: Vec<usize>,
        /// se, fase, table_gen
        #[arg(long, value_delimiter = ',', default_value = "se,fase")]
        algos: Vec<Algorithm>,
        #[arg(long)]
        loss: Option<Size>,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 0.8)]
        rho: f64,
        #[arg(long, default_value_t = 1)]
        warmup: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long)]
        fft: bool,
        /// Skip the counted run and leave the measured columns empty.
        #[arg(long)]
        no_count: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV destination; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build a Gram table file.
    Tables {
        #[arg(long, default_value = "dct")]
        dict: DictSpec,
        /// Area size, used with --loss.
        #[arg(long, default_value = "64x64")]
        size: Size,
        #[arg(long, default_value = "16x16")]
        loss: Size,
        /// PGM mask covering the area; overrides --size and --loss.
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long, default_value_t = 0.8)]
        rho: f64,
        #[arg(long)]
        fft: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write a dictionary file.
    Dict {
        #[arg(long)]
        dict: DictSpec,
        #[arg(long)]
        size: Size,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write a regular-grid block loss mask.
    Mask {
        /// Image size WxH.
        #[arg(long)]
        size: Size,
        #[arg(long, default_value = "16x16")]
        block: Size,
        /// Grid spacing; twice the block when absent.
        #[arg(long)]
        period: Option<Size>,
        /// Keep this many grid blocks, picked with --seed.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn write_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    match path {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            serde_json::to_writer_pretty(&mut out, value)?;
            writeln!(out)?;
            out.flush()?;
        }
        None => {
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, value)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Conceal {
            image,
            mask,
            output,
            report,
            reference,
            model,
            block,
            support,
            tables,
            fft,
        } => {
            let image = GrayImage::load(image)?;
            let mask = GrayImage::load(mask)?;
            let reference = reference.map(GrayImage::load).transpose()?;
            let opts = ConcealOptions {
                dict: model.dict.clone(),
                config: model.config()?,
                block,
                support,
                tables,
                fft,
            };
            let out = conceal(&image, &mask, reference.as_ref(), &opts)?;
            out.image.save(&output)?;
            write_json(&out.report, report.as_deref())?;
        }
        Command::Verify {
            size,
            loss,
            model,
            trials,
            seed,
            zero_signal,
            tables,
            max_area,
            max_atoms,
            report,
        } => {
            let opts = VerifyOptions {
                size,
                dict: model.dict.clone(),
                loss,
                config: model.config()?,
                trials,
                seed,
                signal: if zero_signal {
                    SignalKind::Zero
                } else {
                    SignalKind::Random
                },
                tables,
                max_area,
                max_atoms,
            };
            let result = verify(&opts)?;
            write_json(&result, report.as_deref())?;
            if !result.all_pass {
                eprintln!(
                    "{} of {} trials failed",
                    result.trials.len() - result.passed,
                    result.trials.len()
                );
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Bench {
            sizes,
            dicts,
            atoms,
            iters,
            algos,
            loss,
            gamma,
            rho,
            warmup,
            reps,
            fft,
            no_count,
            seed,
            output,
        } => {
            let opts = BenchOptions {
                sizes,
                dicts,
                atoms,
                iters,
                algos,
                loss,
                gamma,
                rho_hat: rho,
                warmup,
                reps,
                fft,
                count: !no_count,
                seed,
            };
            match output {
                Some(path) => write_csv(&opts, BufWriter::new(File::create(path)?))?,
                None => write_csv(&opts, io::stdout().lock())?,
            }
        }
        Command::Tables {
            dict,
            size,
            loss,
            mask,
            rho,
            fft,
            output,
        } => {
            let geometry = match mask {
                Some(path) => Geometry::Mask(path),
                None => Geometry::Central { size, loss },
            };
            let table = write_table(&dict, &geometry, rho, fft, &output)?;
            eprintln!(
                "wrote {} ({} atoms, provenance {:016x})",
                output.display(),
                table.size(),
                table.provenance()
            );
        }
        Command::Dict { dict, size, output } => {
            let n = write_dictionary(&dict, size, &output)?;
            eprintln!("wrote {} ({n} atoms)", output.display());
        }
        Command::Mask {
            size,
            block,
            period,
            count,
            seed,
            output,
        } => {
            let mut grid = GridLoss::new(size, block);
            if let Some(period) = period {
                grid.period = period;
            }
            grid.count = count;
            grid.seed = seed;
            grid.render()?.save(output)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = if cli.single_thread {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(CliError::from)
            .and_then(|pool| pool.install(|| run(cli.command)))
    } else {
        run(cli.command)
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
