//! Fast selective extrapolation.
//!
//! Instead of the residual field, the iteration state is the vector of
//! weighted residual/atom products `R_k`. After the initial products every
//! step reads one Gram column:
//!
//! ```text
//! u    = argmax_k |R_k| D_k
//! c    = gamma R_u D_u^2
//! R_k -= c C(k, u)        for all k
//! ```
//!
//! Selections and coefficients equal those of [`crate::se`] up to rounding.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dictionary::Dictionary;
use crate::error::{check_shape, Error, Result};
use crate::gram::GramTable;
use crate::grid::{build_weight_field, ExtrapConfig, Field2D, LossMask, WeightField};
use crate::model::{tie_floor, Argmax, IterationRecord, IterationTrace, SparseModel, Term};
use crate::opcount::{NoCount, OpCounter};

/// Weighted products between the current residual and every atom.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualProducts {
    pub values: Vec<Complex64>,
    /// Number of completed iterations.
    pub iteration: usize,
}

/// `R_k = sum s conj(phi_k) w` for every atom, by direct summation.
pub fn initial_scalar_products(
    signal: &Field2D,
    weight: &WeightField,
    dict: &Dictionary,
) -> Result<ResidualProducts> {
    initial_scalar_products_counted(signal, weight, dict, &mut NoCount)
}

/// [`initial_scalar_products`] reporting its work to `counter`.
pub fn initial_scalar_products_counted<C: OpCounter>(
    signal: &Field2D,
    weight: &WeightField,
    dict: &Dictionary,
    counter: &mut C,
) -> Result<ResidualProducts> {
    check_shape(dict.shape(), signal.shape())?;
    check_shape(dict.shape(), weight.shape())?;
    let values = dict
        .atoms()
        .par_iter()
        .map(|a| weighted_product(signal.values(), a.samples(), weight.values()))
        .collect();
    let mn = weight.values().len() as u64;
    counter.mul(2 * mn * dict.len() as u64);
    counter.add(mn * dict.len() as u64);
    Ok(ResidualProducts {
        values,
        iteration: 0,
    })
}

#[inline]
pub(crate) fn weighted_product(
    signal: &[Complex64],
    atom: &[Complex64],
    weight: &[f64],
) -> Complex64 {
    signal
        .iter()
        .zip(atom)
        .zip(weight)
        .map(|((s, phi), &w)| s * phi.conj() * w)
        .sum()
}

/// Full fast extrapolation: weight field from `mask` and `cfg.rho_hat`,
/// direct initial products, then the tabulated iterations.
pub fn fase_extrapolate(
    signal: &Field2D,
    mask: &LossMask,
    dict: &Dictionary,
    tables: &GramTable,
    cfg: &ExtrapConfig,
) -> Result<(SparseModel, IterationTrace)> {
    fase_extrapolate_with(signal, mask, dict, tables, cfg, &mut NoCount, |_| {})
}

/// [`fase_extrapolate`] with an operation counter and a hook that sees the
/// products after every iteration.
pub fn fase_extrapolate_with<C, F>(
    signal: &Field2D,
    mask: &LossMask,
    dict: &Dictionary,
    tables: &GramTable,
    cfg: &ExtrapConfig,
    counter: &mut C,
    inspect: F,
) -> Result<(SparseModel, IterationTrace)>
where
    C: OpCounter,
    F: FnMut(&ResidualProducts),
{
    cfg.validate()?;
    check_shape(dict.shape(), mask.shape())?;
    let weight = build_weight_field(mask, cfg.rho_hat)?;
    tables.ensure_matches(dict, &weight)?;
    let products = initial_scalar_products_counted(signal, &weight, dict, counter)?;
    fase_iterate(
        products,
        dict,
        tables,
        cfg.gamma,
        cfg.iterations,
        counter,
        inspect,
    )
}

/// The iteration loop, starting from precomputed products (direct or FFT).
///
/// The caller is responsible for `tables` matching `dict` and the weight
/// field the products were computed with.
pub fn fase_iterate<C, F>(
    mut products: ResidualProducts,
    dict: &Dictionary,
    tables: &GramTable,
    gamma: f64,
    iterations: usize,
    counter: &mut C,
    mut inspect: F,
) -> Result<(SparseModel, IterationTrace)>
where
    C: OpCounter,
    F: FnMut(&ResidualProducts),
{
    let size = dict.len();
    if tables.size() != size || products.values.len() != size {
        return Err(Error::Parameter(format!(
            "table of {} and {} products for {} atoms",
            tables.size(),
            products.values.len(),
            size
        )));
    }
    if iterations == 0 {
        return Err(Error::Parameter(
            "iteration count must be at least 1".into(),
        ));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Parameter(format!("gamma {gamma} outside (0, 1]")));
    }
    if tables.d().iter().all(|&d| d == 0.0) {
        return Err(Error::NoSelectableAtom);
    }
    let d = tables.d();
    let c = tables.matrix();
    let mn = (dict.rows() * dict.cols()) as u64;

    let mut model = SparseModel::empty(dict.rows(), dict.cols())?;
    let mut trace = IterationTrace::default();
    let mut tie_margin = 0.0;
    counter.begin_iterations();

    for nu in 1..=iterations {
        let mut best = Argmax::amplitude(tie_margin);
        for (k, (r, &dk)) in products.values.iter().zip(d).enumerate() {
            let metric = r.norm() * dk;
            if dk != 0.0 {
                best.offer(k, metric);
            }
        }
        // |R_k|, the comparison, and the product with D_k
        counter.other(2 * size as u64);
        counter.mul(size as u64);
        let u = best.winner().ok_or(Error::NoSelectableAtom)?;
        if nu == 1 {
            tie_margin = tie_floor(best.best_amplitude().unwrap_or(0.0));
        }

        let projection = products.values[u] * (d[u] * d[u]);
        let coefficient = projection * gamma;
        counter.mul(1);

        model.push(
            Term {
                index: u,
                coeff: coefficient,
            },
            dict,
        )?;
        counter.mul(mn);
        counter.add(mn);

        for (k, r) in products.values.iter_mut().enumerate() {
            *r -= coefficient * c[k * size + u];
        }
        counter.mul(size as u64);
        counter.add(size as u64);
        products.iteration = nu;

        trace.records.push(IterationRecord {
            iteration: nu,
            index: u,
            projection,
            coefficient,
        });
        inspect(&products);
    }
    Ok((model, trace))
}
