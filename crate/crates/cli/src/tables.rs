//! Gram table files and dictionary files.

use std::path::{Path, PathBuf};

use fase_core::{build_gram_tables, build_weight_field, fft_gram_table, GramTable, LossMask};

use crate::error::{CliError, Result};
use crate::pgm::GrayImage;
use crate::spec::{DictSpec, Size};

/// Where the loss pattern of the area comes from.
#[derive(Debug, Clone)]
pub enum Geometry {
    /// Area of `size` with a central lost block of `loss`.
    Central { size: Size, loss: Size },
    /// A PGM mask covering exactly the area; 0 marks lost pixels.
    Mask(PathBuf),
}

impl Geometry {
    pub fn loss_mask(&self) -> Result<LossMask> {
        match self {
            Geometry::Central { size, loss } => {
                if loss.width > size.width || loss.height > size.height {
                    return Err(CliError::Usage(format!(
                        "loss {loss} does not fit area {size}"
                    )));
                }
                Ok(LossMask::central_block(
                    size.height,
                    size.width,
                    loss.height,
                    loss.width,
                )?)
            }
            Geometry::Mask(path) => {
                let img = GrayImage::load(path)?;
                Ok(LossMask::new(
                    img.height,
                    img.width,
                    img.pixels.iter().map(|&v| v == 0).collect(),
                )?)
            }
        }
    }
}

pub fn build_table(
    dict: &DictSpec,
    geometry: &Geometry,
    rho_hat: f64,
    fft: bool,
) -> Result<GramTable> {
    let mask = geometry.loss_mask()?;
    let dictionary = dict.build(mask.rows(), mask.cols())?;
    let weight = build_weight_field(&mask, rho_hat)?;
    if fft {
        if !dict.is_pure_dft() {
            return Err(CliError::Usage(format!(
                "--fft needs the dft dictionary, got {dict}"
            )));
        }
        Ok(fft_gram_table(&weight, &dictionary)?)
    } else {
        Ok(build_gram_tables(&dictionary, &weight)?)
    }
}

pub fn write_table(
    dict: &DictSpec,
    geometry: &Geometry,
    rho_hat: f64,
    fft: bool,
    out: &Path,
) -> Result<GramTable> {
    let table = build_table(dict, geometry, rho_hat, fft)?;
    table.save(out)?;
    Ok(table)
}

pub fn write_dictionary(dict: &DictSpec, size: Size, out: &Path) -> Result<usize> {
    let dictionary = dict.build(size.height, size.width)?;
    dictionary.save(out)?;
    Ok(dictionary.len())
}
