//! Wall-time and operation-count sweeps written as CSV.

use std::io::Write;
use std::time::Instant;

use fase_core::fase::initial_scalar_products_counted;
use fase_core::opcount::{NoCount, OpCounter, Tally};
use fase_core::se::se_extrapolate_with;
use fase_core::{
    build_gram_tables, build_weight_field, fase_iterate, fft_gram_table, fft_initial_products,
    predict_op_counts, Algorithm, Complex64, Dictionary, ExtrapConfig, Field2D, GramTable,
    LossMask, WeightField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::spec::{DictSpec, Size};

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub sizes: Vec<Size>,
    pub dicts: Vec<DictSpec>,
    /// Keep only the first K atoms; one sweep point per entry.
    pub atoms: Option<Vec<usize>>,
    pub iters: Vec<usize>,
    pub algos: Vec<Algorithm>,
    /// Central lost block; a quarter of each side when absent.
    pub loss: Option<Size>,
    pub gamma: f64,
    pub rho_hat: f64,
    pub warmup: usize,
    pub reps: usize,
    /// FFT Gram tables and initial products (DFT dictionaries only).
    pub fft: bool,
    /// Also run once with counters attached to fill the `*_meas` columns.
    pub count: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub algo: String,
    #[serde(rename = "M")]
    pub rows: usize,
    #[serde(rename = "N")]
    pub cols: usize,
    /// Number of atoms.
    pub dict: usize,
    pub iters: usize,
    /// Median wall time.
    pub seconds: f64,
    pub mul_pred: u64,
    pub add_pred: u64,
    pub other_pred: u64,
    pub mul_meas: Option<u64>,
    pub add_meas: Option<u64>,
    pub other_meas: Option<u64>,
}

pub fn run_bench(opts: &BenchOptions, mut emit: impl FnMut(&BenchRow) -> Result<()>) -> Result<()> {
    if opts.reps == 0 {
        return Err(CliError::Usage("at least one repetition is needed".into()));
    }
    ExtrapConfig::new(1, opts.gamma, opts.rho_hat)?;
    for &size in &opts.sizes {
        let (rows, cols) = (size.height, size.width);
        let loss = opts.loss.unwrap_or(Size {
            width: (cols / 4).max(1),
            height: (rows / 4).max(1),
        });
        let mask = LossMask::central_block(rows, cols, loss.height, loss.width)?;
        let weight = build_weight_field(&mask, opts.rho_hat)?;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let signal = Field2D::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.gen_range(0.0..255.0), 0.0)
        })?;

        for spec in &opts.dicts {
            let full = spec.build(rows, cols)?;
            let counts = opts.atoms.clone().unwrap_or_else(|| vec![full.len()]);
            for k in counts {
                let dict = truncate(&full, k)?;
                let fft = opts.fft && k == full.len() && spec.is_pure_dft();
                if opts.fft && !fft {
                    return Err(CliError::Usage(format!(
                        "--fft needs a complete DFT dictionary, got {spec} with {k} atoms"
                    )));
                }
                let point = Point {
                    rows,
                    cols,
                    dict: &dict,
                    weight: &weight,
                    mask: &mask,
                    signal: &signal,
                    fft,
                };
                point.run(opts, &mut emit)?;
            }
        }
    }
    Ok(())
}

fn truncate(dict: &Dictionary, k: usize) -> Result<Dictionary> {
    if k == 0 || k > dict.len() {
        return Err(CliError::Usage(format!(
            "cannot keep {k} of {} atoms",
            dict.len()
        )));
    }
    if k == dict.len() {
        return Ok(dict.clone());
    }
    Ok(Dictionary::new(dict.atoms()[..k].to_vec())?)
}

struct Point<'a> {
    rows: usize,
    cols: usize,
    dict: &'a Dictionary,
    weight: &'a WeightField,
    mask: &'a LossMask,
    signal: &'a Field2D,
    fft: bool,
}

impl Point<'_> {
    fn build_table(&self) -> Result<GramTable> {
        Ok(if self.fft {
            fft_gram_table(self.weight, self.dict)?
        } else {
            build_gram_tables(self.dict, self.weight)?
        })
    }

    fn run(
        &self,
        opts: &BenchOptions,
        emit: &mut impl FnMut(&BenchRow) -> Result<()>,
    ) -> Result<()> {
        let needs_table = opts.algos.iter().any(|&a| a != Algorithm::Se);
        let table = if needs_table {
            Some(self.build_table()?)
        } else {
            None
        };

        for &algo in &opts.algos {
            if algo == Algorithm::TableGen {
                let seconds = median_time(opts, || self.build_table().map(drop))?;
                emit(&self.row(algo, 0, seconds, None)?)?;
                continue;
            }
            for &iters in &opts.iters {
                let cfg = ExtrapConfig::new(iters, opts.gamma, opts.rho_hat)?;
                let seconds = match algo {
                    Algorithm::Se => median_time(opts, || {
                        se_extrapolate_with(
                            self.signal,
                            self.mask,
                            self.dict,
                            &cfg,
                            &mut NoCount,
                            |_, _| {},
                        )?;
                        Ok(())
                    })?,
                    _ => {
                        let table = table.as_ref().expect("built above");
                        median_time(opts, || self.fase(table, &cfg, &mut NoCount, self.fft))?
                    }
                };
                let measured = if opts.count {
                    let mut tally = Tally::new();
                    match algo {
                        Algorithm::Se => se_extrapolate_with(
                            self.signal,
                            self.mask,
                            self.dict,
                            &cfg,
                            &mut tally,
                            |_, _| {},
                        )
                        .map(drop)?,
                        _ => self.fase(
                            table.as_ref().expect("built above"),
                            &cfg,
                            &mut tally,
                            false,
                        )?,
                    }
                    Some(tally.counts)
                } else {
                    None
                };
                emit(&self.row(algo, iters, seconds, measured)?)?;
            }
        }
        Ok(())
    }

    /// FFT products are not instrumented, so counted runs use direct ones.
    fn fase<C: OpCounter>(
        &self,
        table: &GramTable,
        cfg: &ExtrapConfig,
        counter: &mut C,
        fft: bool,
    ) -> Result<()> {
        let products = if fft {
            fft_initial_products(self.signal, self.weight, self.dict)?
        } else {
            initial_scalar_products_counted(self.signal, self.weight, self.dict, counter)?
        };
        fase_iterate(
            products,
            self.dict,
            table,
            cfg.gamma,
            cfg.iterations,
            counter,
            |_| {},
        )?;
        Ok(())
    }

    fn row(
        &self,
        algo: Algorithm,
        iters: usize,
        seconds: f64,
        measured: Option<fase_core::OpCounts>,
    ) -> Result<BenchRow> {
        let pred = predict_op_counts(
            algo,
            self.rows as u64,
            self.cols as u64,
            self.dict.len() as u64,
            iters.max(1) as u64,
        )?;
        Ok(BenchRow {
            algo: algo.to_string(),
            rows: self.rows,
            cols: self.cols,
            dict: self.dict.len(),
            iters,
            seconds,
            mul_pred: pred.mul,
            add_pred: pred.add,
            other_pred: pred.other,
            mul_meas: measured.map(|m| m.mul),
            add_meas: measured.map(|m| m.add),
            other_meas: measured.map(|m| m.other),
        })
    }
}

fn median_time(opts: &BenchOptions, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    for _ in 0..opts.warmup {
        f()?;
    }
    let mut times = Vec::with_capacity(opts.reps);
    for _ in 0..opts.reps {
        let start = Instant::now();
        f()?;
        times.push(start.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    Ok(if times.len() % 2 == 1 {
        times[mid]
    } else {
        (times[mid - 1] + times[mid]) / 2.0
    })
}

/// Runs the sweep and writes CSV with a header row to `out`.
pub fn write_csv(opts: &BenchOptions, out: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    run_bench(opts, |row| {
        writer.serialize(row)?;
        writer.flush()?;
        Ok(())
    })?;
    writer.flush()?;
    Ok(())
}
