//! Concealment of lost pixels in a PGM image.

use std::collections::HashMap;
use std::path::PathBuf;
use std::time::Instant;

use fase_core::{
    apply_model, build_gram_tables, build_weight_field, fase_iterate, fft_gram_table,
    fft_initial_products, initial_scalar_products, psnr_over_region, Complex64, Dictionary,
    ExtrapConfig, Field2D, GramTable, LossMask,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::pgm::GrayImage;
use crate::spec::{DictSpec, Size};

pub const REPORT_SCHEMA: &str = "fase-conceal";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct ConcealOptions {
    pub dict: DictSpec,
    pub config: ExtrapConfig,
    /// Tile size; `None` extrapolates the whole image as one area.
    pub block: Option<Size>,
    /// Width of the support ring around each tile.
    pub support: usize,
    /// Precomputed table to use for every area instead of building one.
    pub tables: Option<PathBuf>,
    /// FFT initial products and Gram tables (DFT dictionaries only).
    pub fft: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub atom: usize,
    /// Real and imaginary part.
    pub coefficient: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockReport {
    pub block: Rect,
    pub area: Rect,
    pub lost: usize,
    pub iterations: usize,
    pub seconds: f64,
    /// Over the tile's lost pixels, before rounding; needs a reference.
    pub psnr: Option<f64>,
    pub max_imag: f64,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableInfo {
    /// `built` or `file`.
    pub source: &'static str,
    pub distinct: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcealReport {
    pub schema: &'static str,
    pub version: u32,
    pub width: usize,
    pub height: usize,
    pub dictionary: String,
    pub dict_size: usize,
    pub iterations: usize,
    pub gamma: f64,
    pub rho_hat: f64,
    pub fft: bool,
    pub tables: TableInfo,
    pub lost_pixels: usize,
    pub psnr: Option<f64>,
    pub seconds: f64,
    pub blocks: Vec<BlockReport>,
}

#[derive(Debug, Clone)]
pub struct ConcealOutput {
    pub image: GrayImage,
    pub report: ConcealReport,
}

/// Lost pixels are those where `mask` is 0.
pub fn conceal(
    image: &GrayImage,
    mask: &GrayImage,
    reference: Option<&GrayImage>,
    opts: &ConcealOptions,
) -> Result<ConcealOutput> {
    let start = Instant::now();
    opts.config.validate()?;
    for (what, other) in [("mask", Some(mask)), ("reference", reference)] {
        if let Some(other) = other {
            if (other.width, other.height) != (image.width, image.height) {
                return Err(CliError::Usage(format!(
                    "{what} is {}x{}, image is {}x{}",
                    other.width, other.height, image.width, image.height
                )));
            }
        }
    }
    let lost: Vec<bool> = mask.pixels.iter().map(|&v| v == 0).collect();
    let areas = plan_areas(image, &lost, opts)?;
    let area_size = areas.first().map(|a| (a.area.height, a.area.width));

    let dict = match area_size {
        Some((rows, cols)) => Some(opts.dict.build(rows, cols)?),
        None => None,
    };
    let masks = areas
        .iter()
        .map(|a| {
            LossMask::new(
                a.area.height,
                a.area.width,
                crop(&lost, image.width, a.area),
            )
        })
        .collect::<fase_core::Result<Vec<_>>>()?;

    let table_start = Instant::now();
    let (tables, source) = match (&dict, &opts.tables) {
        (None, _) => (TableSet::default(), "built"),
        (Some(_), Some(path)) => (TableSet::shared(GramTable::load(path)?), "file"),
        (Some(dict), None) => (TableSet::build(dict, &masks, opts)?, "built"),
    };
    let table_seconds = table_start.elapsed().as_secs_f64();

    let run = |(plan, mask): (&AreaPlan, &LossMask)| {
        run_area(
            image,
            reference,
            dict.as_ref().expect("areas imply a dictionary"),
            &tables,
            plan,
            mask,
            opts,
        )
    };
    let results = areas
        .par_iter()
        .zip(&masks)
        .map(run)
        .collect::<Result<Vec<_>>>()?;

    let mut restored: Vec<f64> = image.pixels.iter().map(|&v| v as f64).collect();
    let mut blocks = Vec::with_capacity(results.len());
    for (values, report) in results {
        for (idx, v) in values {
            restored[idx] = v;
        }
        blocks.push(report);
    }

    let lost_pixels = lost.iter().filter(|&&l| l).count();
    let psnr = match reference {
        Some(reference) if lost_pixels > 0 => {
            let region = LossMask::new(image.height, image.width, lost.clone())?;
            let ref_field = to_field(
                &reference
                    .pixels
                    .iter()
                    .map(|&v| v as f64)
                    .collect::<Vec<_>>(),
                image,
            )?;
            Some(psnr_over_region(
                &ref_field,
                &to_field(&restored, image)?,
                &region,
            )?)
        }
        _ => None,
    };

    let maxval = image.maxval as f64;
    let pixels = restored
        .iter()
        .map(|v| v.round().clamp(0.0, maxval) as u8)
        .collect();
    let mut out = GrayImage::new(image.width, image.height, pixels)?;
    out.maxval = image.maxval;

    let report = ConcealReport {
        schema: REPORT_SCHEMA,
        version: REPORT_VERSION,
        width: image.width,
        height: image.height,
        dictionary: opts.dict.to_string(),
        dict_size: dict.as_ref().map_or(0, Dictionary::len),
        iterations: opts.config.iterations,
        gamma: opts.config.gamma,
        rho_hat: opts.config.rho_hat,
        fft: opts.fft,
        tables: TableInfo {
            source,
            distinct: tables.distinct(),
            seconds: table_seconds,
        },
        lost_pixels,
        psnr,
        seconds: start.elapsed().as_secs_f64(),
        blocks,
    };
    Ok(ConcealOutput { image: out, report })
}

#[derive(Debug, Clone, Copy)]
struct AreaPlan {
    block: Rect,
    area: Rect,
}

fn plan_areas(image: &GrayImage, lost: &[bool], opts: &ConcealOptions) -> Result<Vec<AreaPlan>> {
    let whole = Rect {
        x: 0,
        y: 0,
        width: image.width,
        height: image.height,
    };
    let Some(block) = opts.block else {
        return Ok(if lost.contains(&true) {
            vec![AreaPlan {
                block: whole,
                area: whole,
            }]
        } else {
            Vec::new()
        });
    };
    let area_w = block.width + 2 * opts.support;
    let area_h = block.height + 2 * opts.support;
    let mut plans = Vec::new();
    for by in (0..image.height).step_by(block.height) {
        for bx in (0..image.width).step_by(block.width) {
            let tile = Rect {
                x: bx,
                y: by,
                width: block.width.min(image.width - bx),
                height: block.height.min(image.height - by),
            };
            let any_lost = (tile.y..tile.y + tile.height)
                .any(|y| (tile.x..tile.x + tile.width).any(|x| lost[y * image.width + x]));
            if !any_lost {
                continue;
            }
            if area_w > image.width || area_h > image.height {
                return Err(CliError::Usage(format!(
                    "a {area_w}x{area_h} extrapolation area does not fit the {}x{} image",
                    image.width, image.height
                )));
            }
            let place = |start: usize, extent: usize, limit: usize| {
                start.saturating_sub(opts.support).min(limit - extent)
            };
            let area = Rect {
                x: place(bx, area_w, image.width),
                y: place(by, area_h, image.height),
                width: area_w,
                height: area_h,
            };
            plans.push(AreaPlan { block: tile, area });
        }
    }
    Ok(plans)
}

fn crop<T: Copy>(values: &[T], stride: usize, r: Rect) -> Vec<T> {
    (r.y..r.y + r.height)
        .flat_map(|y| {
            values[y * stride + r.x..y * stride + r.x + r.width]
                .iter()
                .copied()
        })
        .collect()
}

fn to_field(values: &[f64], image: &GrayImage) -> Result<Field2D> {
    Ok(Field2D::from_real(image.height, image.width, values)?)
}

/// Tables keyed by the loss pattern of an area.
#[derive(Default)]
struct TableSet {
    shared: Option<GramTable>,
    by_pattern: HashMap<Vec<bool>, GramTable>,
}

impl TableSet {
    fn shared(table: GramTable) -> Self {
        Self {
            shared: Some(table),
            by_pattern: HashMap::new(),
        }
    }

    fn build(dict: &Dictionary, masks: &[LossMask], opts: &ConcealOptions) -> Result<Self> {
        let mut patterns: Vec<&LossMask> = Vec::new();
        for m in masks {
            if !patterns.iter().any(|p| p.flags() == m.flags()) {
                patterns.push(m);
            }
        }
        let built = patterns
            .iter()
            .map(|m| {
                let weight = build_weight_field(m, opts.config.rho_hat)?;
                let table = if opts.fft {
                    fft_gram_table(&weight, dict)?
                } else {
                    build_gram_tables(dict, &weight)?
                };
                Ok((m.flags().to_vec(), table))
            })
            .collect::<Result<HashMap<_, _>>>()?;
        Ok(Self {
            shared: None,
            by_pattern: built,
        })
    }

    fn get(&self, mask: &LossMask) -> &GramTable {
        self.shared
            .as_ref()
            .unwrap_or_else(|| &self.by_pattern[mask.flags()])
    }

    fn distinct(&self) -> usize {
        if self.shared.is_some() {
            1
        } else {
            self.by_pattern.len()
        }
    }
}

type AreaResult = (Vec<(usize, f64)>, BlockReport);

fn run_area(
    image: &GrayImage,
    reference: Option<&GrayImage>,
    dict: &Dictionary,
    tables: &TableSet,
    plan: &AreaPlan,
    mask: &LossMask,
    opts: &ConcealOptions,
) -> Result<AreaResult> {
    let start = Instant::now();
    let (rows, cols) = (plan.area.height, plan.area.width);
    let pixels: Vec<f64> = crop(&image.pixels, image.width, plan.area)
        .iter()
        .map(|&v| v as f64)
        .collect();
    let signal = Field2D::from_real(rows, cols, &pixels)?;
    let weight = build_weight_field(mask, opts.config.rho_hat)?;
    let table = tables.get(mask);
    table.ensure_matches(dict, &weight)?;
    let products = if opts.fft {
        fft_initial_products(&signal, &weight, dict)?
    } else {
        initial_scalar_products(&signal, &weight, dict)?
    };
    let (model, trace) = fase_iterate(
        products,
        dict,
        table,
        opts.config.gamma,
        opts.config.iterations,
        &mut fase_core::opcount::NoCount,
        |_| {},
    )?;
    let concealed = apply_model(&signal, &model, mask)?;

    // Only the tile's own lost pixels are written back.
    let in_block = |m: usize, n: usize| {
        let (y, x) = (plan.area.y + m, plan.area.x + n);
        y >= plan.block.y
            && y < plan.block.y + plan.block.height
            && x >= plan.block.x
            && x < plan.block.x + plan.block.width
    };
    let region = LossMask::from_fn(rows, cols, |m, n| mask.is_lost(m, n) && in_block(m, n))?;
    let mut values = Vec::new();
    for m in 0..rows {
        for n in 0..cols {
            if region.is_lost(m, n) {
                let idx = (plan.area.y + m) * image.width + plan.area.x + n;
                values.push((idx, concealed.field.get(m, n).re));
            }
        }
    }
    let psnr = match reference {
        Some(reference) => {
            let ref_pixels: Vec<f64> = crop(&reference.pixels, image.width, plan.area)
                .iter()
                .map(|&v| v as f64)
                .collect();
            let ref_field = Field2D::from_real(rows, cols, &ref_pixels)?;
            Some(psnr_over_region(&ref_field, &concealed.field, &region)?)
        }
        None => None,
    };
    let report = BlockReport {
        block: plan.block,
        area: plan.area,
        lost: values.len(),
        iterations: trace.len(),
        seconds: start.elapsed().as_secs_f64(),
        psnr,
        max_imag: concealed.max_imag,
        trace: trace
            .records
            .iter()
            .map(|r| TraceEntry {
                iteration: r.iteration,
                atom: r.index,
                coefficient: coeff_pair(r.coefficient),
            })
            .collect(),
    };
    Ok((values, report))
}

fn coeff_pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}
