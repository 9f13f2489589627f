//! Sample grids, loss masks, spatial weighting and the PSNR metric.
//!
//! Every grid is stored row-major: sample `(m, n)` lives at `m * cols + n`,
//! with `m` the row (vertical) and `n` the column (horizontal) coordinate.

use num_complex::Complex64;

use crate::error::{check_shape, Error, Result};

/// Peak sample value used by [`psnr_over_region`].
pub const PSNR_PEAK: f64 = 255.0;

/// Returned by [`psnr_over_region`] when the region matches exactly.
pub const PSNR_EXACT_DB: f64 = 99.0;

/// An `rows x cols` grid of complex samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    rows: usize,
    cols: usize,
    values: Vec<Complex64>,
}

impl Field2D {
    pub fn new(rows: usize, cols: usize, values: Vec<Complex64>) -> Result<Self> {
        check_dims(rows, cols)?;
        if values.len() != rows * cols {
            return Err(Error::Parameter(format!(
                "{rows}x{cols} field needs {} samples, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_dims(rows, cols)?;
        Ok(Self {
            rows,
            cols,
            values: vec![Complex64::new(0.0, 0.0); rows * cols],
        })
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Result<Self> {
        check_dims(rows, cols)?;
        let mut values = Vec::with_capacity(rows * cols);
        for m in 0..rows {
            for n in 0..cols {
                values.push(f(m, n));
            }
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.values[m * self.cols + n]
    }

    pub fn set(&mut self, m: usize, n: usize, value: Complex64) {
        self.values[m * self.cols + n] = value;
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Largest absolute imaginary part over all samples.
    pub fn max_abs_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.im.abs()))
    }

    /// `sum |v|^2 * w` over the grid.
    pub fn weighted_energy(&self, weight: &WeightField) -> Result<f64> {
        check_shape(self.shape(), weight.shape())?;
        Ok(self
            .values
            .iter()
            .zip(weight.values())
            .map(|(v, w)| v.norm_sqr() * w)
            .sum())
    }
}

/// Partition of the extrapolation area into support (`false`) and loss
/// (`true`) samples.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LossMask {
    rows: usize,
    cols: usize,
    lost: Vec<bool>,
}

impl LossMask {
    pub fn new(rows: usize, cols: usize, lost: Vec<bool>) -> Result<Self> {
        check_dims(rows, cols)?;
        if lost.len() != rows * cols {
            return Err(Error::Mask(format!(
                "{rows}x{cols} mask needs {} flags, got {}",
                rows * cols,
                lost.len()
            )));
        }
        if lost.iter().all(|&l| l) {
            return Err(Error::Mask("support area is empty".into()));
        }
        Ok(Self { rows, cols, lost })
    }

    /// A mask without any lost sample.
    pub fn full_support(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![false; rows * cols])
    }

    /// A `block_rows x block_cols` loss centered in a `rows x cols` area.
    ///
    /// For odd leftovers the block sits one sample closer to the top/left.
    pub fn central_block(
        rows: usize,
        cols: usize,
        block_rows: usize,
        block_cols: usize,
    ) -> Result<Self> {
        if block_rows > rows || block_cols > cols {
            return Err(Error::Mask(format!(
                "{block_rows}x{block_cols} loss does not fit a {rows}x{cols} area"
            )));
        }
        let top = (rows - block_rows) / 2;
        let left = (cols - block_cols) / 2;
        Self::from_fn(rows, cols, |m, n| {
            (top..top + block_rows).contains(&m) && (left..left + block_cols).contains(&n)
        })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut lost: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        check_dims(rows, cols)?;
        let mut flags = Vec::with_capacity(rows * cols);
        for m in 0..rows {
            for n in 0..cols {
                flags.push(lost(m, n));
            }
        }
        Self::new(rows, cols, flags)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_lost(&self, m: usize, n: usize) -> bool {
        self.lost[m * self.cols + n]
    }

    pub fn flags(&self) -> &[bool] {
        &self.lost
    }

    pub fn loss_count(&self) -> usize {
        self.lost.iter().filter(|&&l| l).count()
    }

    pub fn support_count(&self) -> usize {
        self.lost.len() - self.loss_count()
    }
}

/// Nonnegative per-sample weight `w[m, n]`, zero on the loss area.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

impl WeightField {
    /// Arbitrary nonnegative weights; no relation to a mask is enforced.
    pub fn from_values(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols)?;
        if weights.len() != rows * cols {
            return Err(Error::Parameter(format!(
                "{rows}x{cols} weight field needs {} values, got {}",
                rows * cols,
                weights.len()
            )));
        }
        if let Some(bad) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Parameter(format!(
                "weight {bad} is not a finite nonnegative value"
            )));
        }
        Ok(Self {
            rows,
            cols,
            weights,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.weights[m * self.cols + n]
    }

    pub fn values(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Multiplies every weight by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::Parameter(format!(
                "scale factor {factor} must be positive"
            )));
        }
        Self::from_values(
            self.rows,
            self.cols,
            self.weights.iter().map(|w| w * factor).collect(),
        )
    }
}

/// Isotropic exponential decay around the area center, masked by the loss:
/// `w = rho_hat ^ dist(m, n)` on the support and `0` on the loss, where the
/// distance is measured from the fractional center `((M-1)/2, (N-1)/2)`.
pub fn build_weight_field(mask: &LossMask, rho_hat: f64) -> Result<WeightField> {
    check_rho(rho_hat)?;
    if mask.support_count() == 0 {
        return Err(Error::Mask("support area is empty".into()));
    }
    let cm = (mask.rows() as f64 - 1.0) / 2.0;
    let cn = (mask.cols() as f64 - 1.0) / 2.0;
    let mut weights = Vec::with_capacity(mask.rows() * mask.cols());
    for m in 0..mask.rows() {
        for n in 0..mask.cols() {
            if mask.is_lost(m, n) {
                weights.push(0.0);
            } else {
                let dm = m as f64 - cm;
                let dn = n as f64 - cn;
                weights.push(rho_hat.powf((dm * dm + dn * dn).sqrt()));
            }
        }
    }
    Ok(WeightField {
        rows: mask.rows(),
        cols: mask.cols(),
        weights,
    })
}

/// Parameters shared by both extrapolation algorithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtrapConfig {
    /// Number of selection iterations `I`; every run performs exactly this many.
    pub iterations: usize,
    /// Fraction `gamma` of the projection kept as expansion coefficient.
    pub gamma: f64,
    /// Decay base of the spatial weighting.
    pub rho_hat: f64,
}

impl Default for ExtrapConfig {
    fn default() -> Self {
        Self {
            iterations: 250,
            gamma: 0.5,
            rho_hat: 0.8,
        }
    }
}

impl ExtrapConfig {
    pub fn new(iterations: usize, gamma: f64, rho_hat: f64) -> Result<Self> {
        let cfg = Self {
            iterations,
            gamma,
            rho_hat,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Parameter(
                "iteration count must be at least 1".into(),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Parameter(format!(
                "gamma {} outside (0, 1]",
                self.gamma
            )));
        }
        check_rho(self.rho_hat)
    }
}

/// PSNR in dB over the lost samples of `region`, using the real parts of
/// both fields and a peak of 255.
///
/// Returns [`PSNR_EXACT_DB`] when the region matches exactly.
pub fn psnr_over_region(
    reference: &Field2D,
    candidate: &Field2D,
    region: &LossMask,
) -> Result<f64> {
    check_shape(reference.shape(), candidate.shape())?;
    check_shape(reference.shape(), region.shape())?;
    let mut count = 0usize;
    let mut sse = 0.0;
    for ((r, c), &lost) in reference
        .values()
        .iter()
        .zip(candidate.values())
        .zip(region.flags())
    {
        if lost {
            let d = r.re - c.re;
            sse += d * d;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Parameter("PSNR region is empty".into()));
    }
    let mse = sse / count as f64;
    if mse == 0.0 {
        return Ok(PSNR_EXACT_DB);
    }
    Ok(10.0 * (PSNR_PEAK * PSNR_PEAK / mse).log10())
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::Parameter(format!(
            "grid dimensions {rows}x{cols} must be positive"
        )));
    }
    Ok(())
}

fn check_rho(rho_hat: f64) -> Result<()> {
    if rho_hat > 0.0 && rho_hat <= 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "rho_hat {rho_hat} outside (0, 1]"
        )))
    }
}
