//! FFT shortcuts for DFT atoms.
//!
//! For `phi_k = exp(j 2 pi (mu_k m / M + eta_k n / N))` the weighted product
//! with a signal is a coefficient of the forward DFT (negative exponent, no
//! normalization) of `s * w`, and the Gram entry of two such atoms is the DFT
//! of `w` at the frequency difference:
//!
//! ```text
//! sum s conj(phi_k) w       = DFT{s w}[mu_k, eta_k]
//! sum conj(phi_k) w phi_l   = DFT{w}[(mu_k - mu_l) mod M, (eta_k - eta_l) mod N]
//! ```

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::dictionary::Dictionary;
use crate::error::{check_shape, Error, Result};
use crate::fase::{weighted_product, ResidualProducts};
use crate::gram::{provenance_hash, GramTable};
use crate::grid::{Field2D, WeightField};

/// Below this many tagged atoms the direct sums are used instead of an FFT.
pub const DEFAULT_FFT_THRESHOLD: usize = 64;

/// Unnormalized forward 2D DFT of a row-major grid.
pub fn fft2(values: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    assert_eq!(values.len(), rows * cols);
    let mut planner = FftPlanner::<f64>::new();
    let mut data = values.to_vec();

    let row_fft = planner.plan_fft_forward(cols);
    row_fft.process(&mut data);

    let col_fft = planner.plan_fft_forward(rows);
    let mut column = vec![Complex64::new(0.0, 0.0); rows];
    for n in 0..cols {
        for m in 0..rows {
            column[m] = data[m * cols + n];
        }
        col_fft.process(&mut column);
        for m in 0..rows {
            data[m * cols + n] = column[m];
        }
    }
    data
}

/// Initial products with the default activation threshold.
pub fn fft_initial_products(
    signal: &Field2D,
    weight: &WeightField,
    dict: &Dictionary,
) -> Result<ResidualProducts> {
    fft_initial_products_with_threshold(signal, weight, dict, DEFAULT_FFT_THRESHOLD)
}

/// Initial products where frequency-tagged atoms read their value from one
/// FFT of `s * w`, provided at least `threshold` atoms are tagged. Untagged
/// atoms, or all atoms below the threshold, use direct summation.
pub fn fft_initial_products_with_threshold(
    signal: &Field2D,
    weight: &WeightField,
    dict: &Dictionary,
    threshold: usize,
) -> Result<ResidualProducts> {
    check_shape(dict.shape(), signal.shape())?;
    check_shape(dict.shape(), weight.shape())?;
    let (rows, cols) = dict.shape();
    let spectrum = if dict.tagged_count() >= threshold.max(1) {
        let weighted: Vec<Complex64> = signal
            .values()
            .iter()
            .zip(weight.values())
            .map(|(s, &w)| s * w)
            .collect();
        Some(fft2(&weighted, rows, cols))
    } else {
        None
    };
    let values = dict
        .atoms()
        .par_iter()
        .map(|atom| match (atom.freq(), &spectrum) {
            (Some(tag), Some(spec)) => spec[tag.mu * cols + tag.eta],
            _ => weighted_product(signal.values(), atom.samples(), weight.values()),
        })
        .collect();
    Ok(ResidualProducts {
        values,
        iteration: 0,
    })
}

/// Gram table of a pure DFT dictionary from a single FFT of the weights.
pub fn fft_gram_table(weight: &WeightField, dict: &Dictionary) -> Result<GramTable> {
    check_shape(dict.shape(), weight.shape())?;
    let tags: Vec<_> = dict
        .atoms()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            a.freq().ok_or_else(|| {
                Error::UnsupportedDictionary(format!("atom {k} has no frequency tag"))
            })
        })
        .collect::<Result<_>>()?;
    let (rows, cols) = dict.shape();
    let weights: Vec<Complex64> = weight
        .values()
        .iter()
        .map(|&w| Complex64::new(w, 0.0))
        .collect();
    let spectrum = fft2(&weights, rows, cols);
    let dc = Complex64::new(spectrum[0].re, 0.0);

    let n = dict.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n * n];
    c.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
        let a = tags[k];
        row[k] = dc;
        for (l, entry) in row.iter_mut().enumerate().skip(k + 1) {
            let b = tags[l];
            let dm = (a.mu + rows - b.mu) % rows;
            let dn = (a.eta + cols - b.eta) % cols;
            *entry = spectrum[dm * cols + dn];
        }
    });
    for k in 0..n {
        for l in k + 1..n {
            c[l * n + k] = c[k * n + l].conj();
        }
    }
    Ok(GramTable::from_matrix(n, c, provenance_hash(dict, weight)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{generate_dictionary, union_dictionaries, TransformKind};
    use crate::fase::initial_scalar_products;
    use crate::gram::build_gram_tables;
    use crate::grid::{build_weight_field, LossMask};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_rel(a: &[Complex64], b: &[Complex64]) -> f64 {
        let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
            / scale
    }

    /// Direct DFT by definition.
    fn dft_oracle(values: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
        for mu in 0..rows {
            for eta in 0..cols {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..rows {
                    for n in 0..cols {
                        let phase = -2.0
                            * std::f64::consts::PI
                            * ((mu * m) as f64 / rows as f64 + (eta * n) as f64 / cols as f64);
                        acc += values[m * cols + n] * Complex64::new(0.0, phase).exp();
                    }
                }
                out[mu * cols + eta] = acc;
            }
        }
        out
    }

    #[test]
    fn fft2_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v: Vec<Complex64> = (0..6 * 10)
            .map(|_| Complex64::new(rng.gen(), rng.gen()))
            .collect();
        assert!(max_rel(&fft2(&v, 6, 10), &dft_oracle(&v, 6, 10)) < 1e-12);
    }

    #[test]
    fn unit_weight_gives_plain_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = Field2D::from_fn(8, 8, |_, _| Complex64::new(rng.gen(), 0.0)).unwrap();
        let dict = generate_dictionary(TransformKind::Dft, 8, 8).unwrap();
        let w = WeightField::from_values(8, 8, vec![1.0; 64]).unwrap();
        let r = fft_initial_products(&s, &w, &dict).unwrap();
        assert!(max_rel(&r.values, &dft_oracle(s.values(), 8, 8)) < 1e-12);
    }

    #[test]
    fn delta_gives_ones() {
        let dict = generate_dictionary(TransformKind::Dft, 8, 8).unwrap();
        let w = WeightField::from_values(8, 8, vec![1.0; 64]).unwrap();
        let mut delta = Field2D::zeros(8, 8).unwrap();
        delta.set(0, 0, Complex64::new(1.0, 0.0));
        for threshold in [1, 1000] {
            let r = fft_initial_products_with_threshold(&delta, &w, &dict, threshold).unwrap();
            assert!(r
                .values
                .iter()
                .all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-14));
        }
    }

    #[test]
    fn masked_products_match_direct_sums() {
        for (rows, cols, seed) in [(16, 16, 0), (12, 20, 1), (64, 64, 2)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = Field2D::from_fn(rows, cols, |_, _| {
                Complex64::new(rng.gen_range(0.0..255.0), 0.0)
            })
            .unwrap();
            let dict = generate_dictionary(TransformKind::Dft, rows, cols).unwrap();
            let w = build_weight_field(
                &LossMask::central_block(rows, cols, rows / 4, cols / 4).unwrap(),
                0.8,
            )
            .unwrap();
            let fast = fft_initial_products_with_threshold(&s, &w, &dict, 1).unwrap();
            let direct = initial_scalar_products(&s, &w, &dict).unwrap();
            assert!(max_rel(&fast.values, &direct.values) <= 1e-9);
        }
    }

    #[test]
    fn mixed_dictionary_falls_back_for_untagged_atoms() {
        let dft = generate_dictionary(TransformKind::Dft, 8, 8).unwrap();
        let dct = generate_dictionary(TransformKind::Dct, 8, 8).unwrap();
        let dict = union_dictionaries(&[dft, dct]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = Field2D::from_fn(8, 8, |_, _| Complex64::new(rng.gen(), 0.0)).unwrap();
        let w = build_weight_field(&LossMask::central_block(8, 8, 2, 2).unwrap(), 0.9).unwrap();
        let fast = fft_initial_products(&s, &w, &dict).unwrap();
        let direct = initial_scalar_products(&s, &w, &dict).unwrap();
        assert!(max_rel(&fast.values, &direct.values) <= 1e-12);
        assert!(matches!(
            fft_gram_table(&w, &dict),
            Err(Error::UnsupportedDictionary(_))
        ));
    }

    #[test]
    fn unit_weight_table_is_scaled_identity() {
        let dict = generate_dictionary(TransformKind::Dft, 4, 8).unwrap();
        let w = WeightField::from_values(4, 8, vec![1.0; 32]).unwrap();
        let t = fft_gram_table(&w, &dict).unwrap();
        for k in 0..32 {
            for l in 0..32 {
                let expected = if k == l { 32.0 } else { 0.0 };
                assert!((t.c(k, l) - Complex64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
        t.verify_invariants().unwrap();
    }

    #[test]
    fn diagonal_is_total_weight() {
        let dict = generate_dictionary(TransformKind::Dft, 8, 8).unwrap();
        let w = build_weight_field(&LossMask::central_block(8, 8, 4, 4).unwrap(), 0.8).unwrap();
        let t = fft_gram_table(&w, &dict).unwrap();
        for k in 0..64 {
            assert!((t.c(k, k).re - w.total()).abs() < 1e-12 * w.total());
            assert_eq!(t.c(k, k).im, 0.0);
        }
    }

    #[test]
    fn table_matches_direct_build() {
        for (rows, cols) in [(8, 8), (6, 10), (16, 16)] {
            let dict = generate_dictionary(TransformKind::Dft, rows, cols).unwrap();
            let w = build_weight_field(
                &LossMask::central_block(rows, cols, rows / 2, cols / 2).unwrap(),
                0.8,
            )
            .unwrap();
            let fast = fft_gram_table(&w, &dict).unwrap();
            let direct = build_gram_tables(&dict, &w).unwrap();
            assert_eq!(fast.provenance(), direct.provenance());
            assert!(max_rel(fast.matrix(), direct.matrix()) <= 1e-9);
            for (a, b) in fast.d().iter().zip(direct.d()) {
                assert!((a - b).abs() <= 1e-9 * b);
            }
            fast.verify_invariants().unwrap();
        }
    }

    #[test]
    fn entries_depend_only_on_frequency_difference() {
        let (rows, cols) = (4, 6);
        let dict = generate_dictionary(TransformKind::Dft, rows, cols).unwrap();
        let w =
            build_weight_field(&LossMask::central_block(rows, cols, 2, 3).unwrap(), 0.6).unwrap();
        let t = build_gram_tables(&dict, &w).unwrap();
        let n = dict.len();
        for k in 0..n {
            for l in 0..n {
                let (a, b) = (dict.atom(k).freq().unwrap(), dict.atom(l).freq().unwrap());
                // shift both frequencies by (1, 2)
                let k2 = ((a.mu + 1) % rows) * cols + (a.eta + 2) % cols;
                let l2 = ((b.mu + 1) % rows) * cols + (b.eta + 2) % cols;
                assert!((t.c(k, l) - t.c(k2, l2)).norm() < 1e-12);
            }
        }
    }
}
