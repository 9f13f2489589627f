//! Reference selective extrapolation.
//!
//! Every iteration projects the explicit residual onto every atom, so a run
//! costs `O(I * M * N * |D|)`. This is the correctness oracle for
//! [`crate::fase`].

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dictionary::Dictionary;
use crate::error::{check_shape, Error, Result};
use crate::grid::{build_weight_field, ExtrapConfig, Field2D, LossMask, WeightField};
use crate::model::{
    degeneracy_threshold, tie_floor, Argmax, IterationRecord, IterationTrace, SparseModel, Term,
};
use crate::opcount::{NoCount, OpCounter};

/// `(sum r conj(phi) w, sum |phi|^2 w)` for one atom.
#[inline]
fn projection_parts(
    residual: &[Complex64],
    atom: &[Complex64],
    weight: &[f64],
) -> (Complex64, f64) {
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for ((r, phi), &w) in residual.iter().zip(atom).zip(weight) {
        num += r * phi.conj() * w;
        den += phi.norm_sqr() * w;
    }
    (num, den)
}

/// Weighted energy `sum conj(phi) w phi` of one atom.
#[inline]
pub(crate) fn atom_energy(atom: &[Complex64], weight: &[f64]) -> f64 {
    atom.iter()
        .zip(weight)
        .map(|(phi, &w)| phi.norm_sqr() * w)
        .sum()
}

/// Weighted projection `p_k` of `residual` onto atom `k`.
pub fn weighted_projection(
    residual: &Field2D,
    dict: &Dictionary,
    k: usize,
    weight: &WeightField,
) -> Result<Complex64> {
    check_shape(dict.shape(), residual.shape())?;
    check_shape(dict.shape(), weight.shape())?;
    if k >= dict.len() {
        return Err(Error::Parameter(format!("atom index {k} out of range")));
    }
    let (num, den) = projection_parts(residual.values(), dict.atom(k).samples(), weight.values());
    if den <= 0.0 {
        return Err(Error::DegenerateAtom(k));
    }
    Ok(num / den)
}

/// Index maximizing `|p_k|^2 * sum conj(phi_k) w phi_k`.
///
/// Atom energies are recomputed here; atoms with negligible energy are
/// skipped and ties go to the lowest index.
pub fn se_select(
    projections: &[Complex64],
    dict: &Dictionary,
    weight: &WeightField,
) -> Result<usize> {
    check_shape(dict.shape(), weight.shape())?;
    if projections.len() != dict.len() {
        return Err(Error::Parameter(format!(
            "{} projections for {} atoms",
            projections.len(),
            dict.len()
        )));
    }
    select_counted(projections, dict, weight.values(), 0.0, &mut NoCount).map(|(u, _)| u)
}

fn select_counted<C: OpCounter>(
    projections: &[Complex64],
    dict: &Dictionary,
    weight: &[f64],
    tie_margin: f64,
    counter: &mut C,
) -> Result<(usize, f64)> {
    let energies: Vec<f64> = dict
        .atoms()
        .par_iter()
        .map(|a| atom_energy(a.samples(), weight))
        .collect();
    let mn = weight.len() as u64;
    let d = dict.len() as u64;
    counter.mul(2 * mn * d);
    counter.add(mn * d);

    let floor = degeneracy_threshold(energies.iter().copied());
    let mut best = Argmax::squared(tie_margin);
    for (k, (p, e)) in projections.iter().zip(&energies).enumerate() {
        // |p|, the product with the energy, and the comparison
        counter.other(2);
        counter.mul(1);
        if *e > floor {
            best.offer(k, p.norm_sqr() * e);
        }
    }
    let u = best.winner().ok_or(Error::NoSelectableAtom)?;
    Ok((u, best.best_amplitude().unwrap_or(0.0)))
}

/// Runs `cfg.iterations` iterations of selective extrapolation.
pub fn se_extrapolate(
    signal: &Field2D,
    mask: &LossMask,
    dict: &Dictionary,
    cfg: &ExtrapConfig,
) -> Result<(SparseModel, IterationTrace)> {
    se_extrapolate_with(signal, mask, dict, cfg, &mut NoCount, |_, _| {})
}

/// [`se_extrapolate`] with an operation counter and a hook that sees the
/// residual after every iteration.
pub fn se_extrapolate_with<C, F>(
    signal: &Field2D,
    mask: &LossMask,
    dict: &Dictionary,
    cfg: &ExtrapConfig,
    counter: &mut C,
    inspect: F,
) -> Result<(SparseModel, IterationTrace)>
where
    C: OpCounter,
    F: FnMut(usize, &Field2D),
{
    cfg.validate()?;
    check_shape(dict.shape(), mask.shape())?;
    let weight = build_weight_field(mask, cfg.rho_hat)?;
    se_extrapolate_weighted(
        signal,
        &weight,
        dict,
        cfg.gamma,
        cfg.iterations,
        counter,
        inspect,
    )
}

/// Core loop on an explicit weight field.
pub fn se_extrapolate_weighted<C, F>(
    signal: &Field2D,
    weight: &WeightField,
    dict: &Dictionary,
    gamma: f64,
    iterations: usize,
    counter: &mut C,
    mut inspect: F,
) -> Result<(SparseModel, IterationTrace)>
where
    C: OpCounter,
    F: FnMut(usize, &Field2D),
{
    check_shape(dict.shape(), signal.shape())?;
    check_shape(dict.shape(), weight.shape())?;
    if iterations == 0 {
        return Err(Error::Parameter(
            "iteration count must be at least 1".into(),
        ));
    }
    let w = weight.values();
    let mn = w.len() as u64;

    let mut residual = signal.clone();
    let mut model = SparseModel::empty(dict.rows(), dict.cols())?;
    let mut trace = IterationTrace::default();
    let mut tie_margin = 0.0;
    counter.begin_iterations();

    for nu in 1..=iterations {
        let parts: Vec<(Complex64, f64)> = dict
            .atoms()
            .par_iter()
            .map(|a| projection_parts(residual.values(), a.samples(), w))
            .collect();
        counter.mul(4 * mn * dict.len() as u64);
        counter.add(2 * mn * dict.len() as u64);

        let floor = degeneracy_threshold(parts.iter().map(|p| p.1));
        let projections: Vec<Complex64> = parts
            .iter()
            .map(|&(num, den)| {
                if den > floor {
                    counter.div(1);
                    num / den
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();

        let (u, best) = select_counted(&projections, dict, w, tie_margin, counter)?;
        if nu == 1 {
            tie_margin = tie_floor(best);
        }
        let coefficient = projections[u] * gamma;
        counter.mul(1);

        model.push(
            Term {
                index: u,
                coeff: coefficient,
            },
            dict,
        )?;
        for (r, phi) in residual.values_mut().iter_mut().zip(dict.atom(u).samples()) {
            *r -= coefficient * phi;
        }
        counter.mul(2 * mn);
        counter.add(2 * mn);

        trace.records.push(IterationRecord {
            iteration: nu,
            index: u,
            projection: projections[u],
            coefficient,
        });
        inspect(nu, &residual);
    }
    Ok((model, trace))
}
