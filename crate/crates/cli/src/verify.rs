//! Side-by-side SE and FaSE runs on seeded random signals.

use std::path::PathBuf;

use fase_core::fase::fase_extrapolate_with;
use fase_core::opcount::NoCount;
use fase_core::se::se_extrapolate_with;
use fase_core::{
    build_gram_tables, build_weight_field, initial_scalar_products, Complex64, ExtrapConfig,
    Field2D, GramTable, LossMask,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::spec::{DictSpec, Size};

pub const REPORT_SCHEMA: &str = "fase-verify";
pub const REPORT_VERSION: u32 = 1;
/// Largest tolerated normwise deviation.
pub const TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_AREA: usize = 4096;
pub const DEFAULT_MAX_ATOMS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    Random,
    Zero,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub size: Size,
    pub dict: DictSpec,
    /// Central lost block.
    pub loss: Size,
    pub config: ExtrapConfig,
    pub trials: usize,
    pub seed: u64,
    pub signal: SignalKind,
    pub tables: Option<PathBuf>,
    pub max_area: usize,
    pub max_atoms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub selections_equal: bool,
    /// First iteration where the selections differ.
    pub first_divergence: Option<usize>,
    /// Max |c_SE - c_FaSE| over max |c_SE|.
    pub coefficient_deviation: f64,
    /// Max |R_k - direct| over max |R_k^0|, across all iterations.
    pub recursion_deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema: &'static str,
    pub version: u32,
    pub width: usize,
    pub height: usize,
    pub dictionary: String,
    pub dict_size: usize,
    pub loss: String,
    pub iterations: usize,
    pub gamma: f64,
    pub rho_hat: f64,
    pub tolerance: f64,
    pub trials: Vec<TrialReport>,
    pub passed: usize,
    pub all_pass: bool,
}

pub fn verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    opts.config.validate()?;
    let (rows, cols) = (opts.size.height, opts.size.width);
    if rows * cols > opts.max_area {
        return Err(CliError::Usage(format!(
            "area of {} samples exceeds the cap of {}",
            rows * cols,
            opts.max_area
        )));
    }
    if opts.loss.width > cols || opts.loss.height > rows {
        return Err(CliError::Usage(format!(
            "loss {} does not fit area {}",
            opts.loss, opts.size
        )));
    }
    let dict = opts.dict.build(rows, cols)?;
    if dict.len() > opts.max_atoms {
        return Err(CliError::Usage(format!(
            "{} atoms exceed the cap of {}",
            dict.len(),
            opts.max_atoms
        )));
    }
    let mask = LossMask::central_block(rows, cols, opts.loss.height, opts.loss.width)?;
    let weight = build_weight_field(&mask, opts.config.rho_hat)?;
    let tables = match &opts.tables {
        Some(path) => GramTable::load(path)?,
        None => build_gram_tables(&dict, &weight)?,
    };
    tables.ensure_matches(&dict, &weight)?;

    let mut trials = Vec::with_capacity(opts.trials);
    for trial in 0..opts.trials {
        let seed = opts.seed.wrapping_add(trial as u64);
        let signal = match opts.signal {
            SignalKind::Zero => Field2D::zeros(rows, cols)?,
            SignalKind::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Field2D::from_fn(rows, cols, |_, _| {
                    Complex64::new(rng.gen_range(0.0..255.0), 0.0)
                })?
            }
        };

        let mut residuals = Vec::new();
        let (_, se) =
            se_extrapolate_with(&signal, &mask, &dict, &opts.config, &mut NoCount, |_, r| {
                residuals.push(r.clone())
            })?;
        let mut products = Vec::new();
        let (_, fase) = fase_extrapolate_with(
            &signal,
            &mask,
            &dict,
            &tables,
            &opts.config,
            &mut NoCount,
            |p| products.push(p.values.clone()),
        )?;

        let first_divergence = se
            .records
            .iter()
            .zip(&fase.records)
            .position(|(a, b)| a.index != b.index)
            .map(|i| i + 1);
        let coefficient_deviation = normwise(
            se.records
                .iter()
                .zip(&fase.records)
                .map(|(a, b)| (a.coefficient, b.coefficient)),
        );

        let initial = initial_scalar_products(&signal, &weight, &dict)?;
        let scale = initial.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for (residual, recursive) in residuals.iter().zip(&products) {
            let direct = initial_scalar_products(residual, &weight, &dict)?;
            for (d, r) in direct.values.iter().zip(recursive) {
                worst = worst.max((d - r).norm());
            }
        }
        let recursion_deviation = if scale > 0.0 { worst / scale } else { worst };

        let pass = first_divergence.is_none()
            && coefficient_deviation <= TOLERANCE
            && recursion_deviation <= TOLERANCE;
        trials.push(TrialReport {
            trial,
            seed,
            selections_equal: first_divergence.is_none(),
            first_divergence,
            coefficient_deviation,
            recursion_deviation,
            pass,
        });
    }

    let passed = trials.iter().filter(|t| t.pass).count();
    Ok(VerifyReport {
        schema: REPORT_SCHEMA,
        version: REPORT_VERSION,
        width: cols,
        height: rows,
        dictionary: opts.dict.to_string(),
        dict_size: dict.len(),
        loss: opts.loss.to_string(),
        iterations: opts.config.iterations,
        gamma: opts.config.gamma,
        rho_hat: opts.config.rho_hat,
        tolerance: TOLERANCE,
        all_pass: passed == trials.len(),
        passed,
        trials,
    })
}

fn normwise(pairs: impl Iterator<Item = (Complex64, Complex64)>) -> f64 {
    let (mut dev, mut scale) = (0.0f64, 0.0f64);
    for (a, b) in pairs {
        dev = dev.max((a - b).norm());
        scale = scale.max(a.norm());
    }
    if scale > 0.0 {
        dev / scale
    } else {
        dev
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn options() -> VerifyOptions {
        VerifyOptions {
            size: Size::square(8),
            dict: "dct".parse().unwrap(),
            loss: Size::square(4),
            config: ExtrapConfig::new(50, 0.5, 0.8).unwrap(),
            trials: 20,
            seed: 1,
            signal: SignalKind::Random,
            tables: None,
            max_area: DEFAULT_MAX_AREA,
            max_atoms: DEFAULT_MAX_ATOMS,
        }
    }

    #[test]
    fn dct_trials_pass() {
        let report = verify(&options()).unwrap();
        assert_eq!(report.trials.len(), 20);
        assert!(
            report.all_pass,
            "{:?}",
            report.trials.iter().find(|t| !t.pass)
        );
    }

    #[test]
    fn zero_signal_single_iteration() {
        let mut opts = options();
        opts.signal = SignalKind::Zero;
        opts.config.iterations = 1;
        opts.trials = 1;
        let report = verify(&opts).unwrap();
        assert!(report.all_pass);
        assert_eq!(report.trials[0].coefficient_deviation, 0.0);
    }

    #[test]
    fn caps_are_enforced() {
        let mut opts = options();
        opts.size = Size::square(128);
        assert!(matches!(verify(&opts), Err(CliError::Usage(_))));
        let mut opts = options();
        opts.max_atoms = 63;
        assert!(matches!(verify(&opts), Err(CliError::Usage(_))));
    }
}
