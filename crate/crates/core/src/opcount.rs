//! Operation counting for model generation.
//!
//! Complex multiplications and additions each count as one event; every
//! other operation (division, comparison, absolute value, square root,
//! conjugation) lands in a shared `other` bucket.
//!
//! The extrapolation routines are generic over [`OpCounter`]. [`NoCount`]
//! compiles to nothing; [`Tally`] records events and also tracks divisions
//! performed inside the iteration loop separately.

use std::fmt;
use std::str::FromStr;

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::fase::fase_extrapolate_with;
use crate::gram::{build_gram_tables, GramTable};
use crate::grid::{build_weight_field, ExtrapConfig, Field2D, LossMask};
use crate::model::{IterationTrace, SparseModel};
use crate::se::se_extrapolate_with;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct OpCounts {
    pub mul: u64,
    pub add: u64,
    pub other: u64,
}

impl OpCounts {
    pub fn total(&self) -> u64 {
        self.mul + self.add + self.other
    }
}

impl fmt::Display for OpCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mul {} add {} other {}", self.mul, self.add, self.other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Se,
    Fase,
    TableGen,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Se => "se",
            Algorithm::Fase => "fase",
            Algorithm::TableGen => "table_gen",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "se" => Ok(Algorithm::Se),
            "fase" => Ok(Algorithm::Fase),
            "table_gen" | "tables" => Ok(Algorithm::TableGen),
            other => Err(Error::Parameter(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Closed-form operation counts for an `M x N` area, `dict_size` atoms and
/// `iters` iterations. `iters` is ignored for [`Algorithm::TableGen`].
pub fn predict_op_counts(
    algo: Algorithm,
    rows: u64,
    cols: u64,
    dict_size: u64,
    iters: u64,
) -> Result<OpCounts> {
    if rows == 0 || cols == 0 || dict_size == 0 || (iters == 0 && algo != Algorithm::TableGen) {
        return Err(Error::Parameter(
            "operation-count parameters must be at least 1".into(),
        ));
    }
    let (mn, d, i) = (
        rows as u128 * cols as u128,
        dict_size as u128,
        iters as u128,
    );
    // d <= 2^64 and mn < 2^128; the small sums below are checked too.
    let two_mn = mn.checked_mul(2);
    let counts = match algo {
        Algorithm::Se => (|| {
            let per_atom = mn.checked_mul(6)?.checked_mul(d)?;
            let mul = i.checked_mul(
                per_atom
                    .checked_add(d)?
                    .checked_add(two_mn?)?
                    .checked_add(1)?,
            )?;
            let add = i.checked_mul(mn.checked_mul(3)?.checked_mul(d)?.checked_add(two_mn?)?)?;
            Some((mul, add, i.checked_mul(3 * d)?))
        })(),
        Algorithm::Fase => (|| {
            let setup = mn.checked_mul(d)?;
            let mul = setup
                .checked_mul(2)?
                .checked_add(i.checked_mul((2 * d).checked_add(mn)?.checked_add(1)?)?)?;
            let add = setup.checked_add(i.checked_mul(d.checked_add(mn)?)?)?;
            Some((mul, add, i.checked_mul(2 * d)?))
        })(),
        Algorithm::TableGen => (|| {
            let products = d.checked_mul(d)?.checked_add(d)?.checked_mul(mn)?;
            Some((products, products / 2, products / 2 + d))
        })(),
    };
    let (mul, add, other) = counts.ok_or(Error::Overflow)?;
    let narrow = |v: u128| u64::try_from(v).map_err(|_| Error::Overflow);
    Ok(OpCounts {
        mul: narrow(mul)?,
        add: narrow(add)?,
        other: narrow(other)?,
    })
}

pub trait OpCounter {
    fn mul(&mut self, n: u64);
    fn add(&mut self, n: u64);
    fn other(&mut self, n: u64);
    /// A division; also counted in `other`.
    fn div(&mut self, n: u64);
    /// Marks the end of setup work and the start of the iteration loop.
    fn begin_iterations(&mut self);
}

/// Counter that records nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoCount;

impl OpCounter for NoCount {
    #[inline(always)]
    fn mul(&mut self, _: u64) {}
    #[inline(always)]
    fn add(&mut self, _: u64) {}
    #[inline(always)]
    fn other(&mut self, _: u64) {}
    #[inline(always)]
    fn div(&mut self, _: u64) {}
    #[inline(always)]
    fn begin_iterations(&mut self) {}
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub counts: OpCounts,
    pub divisions: u64,
    pub loop_divisions: u64,
    in_loop: bool,
}

impl Tally {
    pub fn new() -> Self {
        Self::default()
    }
}

impl OpCounter for Tally {
    fn mul(&mut self, n: u64) {
        self.counts.mul += n;
    }

    fn add(&mut self, n: u64) {
        self.counts.add += n;
    }

    fn other(&mut self, n: u64) {
        self.counts.other += n;
    }

    fn div(&mut self, n: u64) {
        self.counts.other += n;
        self.divisions += n;
        if self.in_loop {
            self.loop_divisions += n;
        }
    }

    fn begin_iterations(&mut self) {
        self.in_loop = true;
    }
}

/// Output of [`counted_run`].
#[derive(Debug, Clone)]
pub struct CountedRun {
    pub model: SparseModel,
    pub trace: IterationTrace,
    pub tally: Tally,
}

/// Runs SE or FaSE with a [`Tally`] attached. FaSE builds its tables first
/// when none are given; table construction is not counted.
pub fn counted_run(
    algo: Algorithm,
    signal: &Field2D,
    mask: &LossMask,
    dict: &Dictionary,
    tables: Option<&GramTable>,
    cfg: &ExtrapConfig,
) -> Result<CountedRun> {
    let mut tally = Tally::new();
    let (model, trace) = match algo {
        Algorithm::Se => se_extrapolate_with(signal, mask, dict, cfg, &mut tally, |_, _| {})?,
        Algorithm::Fase => {
            let built;
            let tables = match tables {
                Some(t) => t,
                None => {
                    built = build_gram_tables(dict, &build_weight_field(mask, cfg.rho_hat)?)?;
                    &built
                }
            };
            fase_extrapolate_with(signal, mask, dict, tables, cfg, &mut tally, |_| {})?
        }
        Algorithm::TableGen => {
            return Err(Error::Parameter(
                "table generation is not an extrapolation run".into(),
            ))
        }
    };
    Ok(CountedRun {
        model,
        trace,
        tally,
    })
}
