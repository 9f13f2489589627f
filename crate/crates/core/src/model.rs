//! Sparse models, iteration traces and the shared selection rule.

use num_complex::Complex64;

use crate::dictionary::Dictionary;
use crate::error::{check_shape, Error, Result};
use crate::grid::{Field2D, LossMask};

/// Relative margin inside which two selection metrics count as tied.
///
/// Metrics are scanned in ascending atom order and a later atom replaces the
/// current best only if it beats it by more than the margin, so exact and
/// rounding-level ties both resolve to the lowest index. The margin applies
/// to the amplitude-scale metric `|R_k| D_k`.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// Absolute part of the tie margin, as a fraction of the largest metric of
/// the first iteration.
///
/// Rounding error in tabulated residual products stays at the scale of the
/// initial products while the residual itself keeps shrinking, so a purely
/// relative margin stops covering it once the residual is small. Duplicate
/// atoms (a constant atom shared by two transforms, say) tie exactly and
/// would otherwise be split by noise.
pub const TIE_FLOOR_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub index: usize,
    pub coeff: Complex64,
}

/// Selected atoms with their coefficients, plus the model field
/// `g = sum coeff * phi_index` accumulated while iterating.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseModel {
    terms: Vec<Term>,
    field: Field2D,
}

impl SparseModel {
    pub(crate) fn empty(rows: usize, cols: usize) -> Result<Self> {
        Ok(Self {
            terms: Vec::new(),
            field: Field2D::zeros(rows, cols)?,
        })
    }

    /// Builds a model from terms, materializing the field from `dict`.
    pub fn from_terms(terms: Vec<Term>, dict: &Dictionary) -> Result<Self> {
        let mut model = Self::empty(dict.rows(), dict.cols())?;
        for t in terms {
            model.push(t, dict)?;
        }
        Ok(model)
    }

    pub(crate) fn push(&mut self, term: Term, dict: &Dictionary) -> Result<()> {
        if term.index >= dict.len() {
            return Err(Error::Parameter(format!(
                "term index {} outside dictionary of {} atoms",
                term.index,
                dict.len()
            )));
        }
        check_shape(self.field.shape(), dict.shape())?;
        for (g, phi) in self
            .field
            .values_mut()
            .iter_mut()
            .zip(dict.atom(term.index).samples())
        {
            *g += term.coeff * phi;
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn field(&self) -> &Field2D {
        &self.field
    }

    pub fn shape(&self) -> (usize, usize) {
        self.field.shape()
    }

    /// Re-evaluates `sum coeff * phi_index` from scratch.
    pub fn materialize(&self, dict: &Dictionary) -> Result<Field2D> {
        check_shape(self.field.shape(), dict.shape())?;
        let mut g = Field2D::zeros(dict.rows(), dict.cols())?;
        for t in &self.terms {
            if t.index >= dict.len() {
                return Err(Error::Parameter(format!(
                    "term index {} out of range",
                    t.index
                )));
            }
            for (v, phi) in g.values_mut().iter_mut().zip(dict.atom(t.index).samples()) {
                *v += t.coeff * phi;
            }
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub iteration: usize,
    pub index: usize,
    /// Weighted projection of the residual onto the selected atom.
    pub projection: Complex64,
    pub coefficient: Complex64,
}

/// Per-iteration record shared by both algorithms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn selections(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.index).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Result of replacing the lost samples with the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Concealed {
    pub field: Field2D,
    /// Largest `|Im g|` over the loss area.
    pub max_imag: f64,
}

/// Keeps the support samples of `signal` and fills the loss area with the
/// real part of the model field.
pub fn apply_model(signal: &Field2D, model: &SparseModel, mask: &LossMask) -> Result<Concealed> {
    check_shape(signal.shape(), mask.shape())?;
    check_shape(signal.shape(), model.shape())?;
    let mut out = signal.clone();
    let mut max_imag: f64 = 0.0;
    for ((s, g), &lost) in out
        .values_mut()
        .iter_mut()
        .zip(model.field().values())
        .zip(mask.flags())
    {
        if lost {
            *s = Complex64::new(g.re, 0.0);
            max_imag = max_imag.max(g.im.abs());
        }
    }
    Ok(Concealed {
        field: out,
        max_imag,
    })
}

/// Running argmax with the lowest-index tie rule.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Argmax {
    squared: bool,
    floor: f64,
    best: Option<(usize, f64)>,
}

impl Argmax {
    /// For metrics on the amplitude scale. `floor` is the absolute tie
    /// margin on that scale.
    pub(crate) fn amplitude(floor: f64) -> Self {
        Self {
            squared: false,
            floor,
            best: None,
        }
    }

    /// For metrics on the squared scale; `floor` is still on the amplitude
    /// scale.
    pub(crate) fn squared(floor: f64) -> Self {
        Self {
            squared: true,
            floor,
            best: None,
        }
    }

    #[inline]
    pub(crate) fn offer(&mut self, index: usize, metric: f64) {
        let value = if self.squared { metric.sqrt() } else { metric };
        let replace = match self.best {
            Some((_, best)) => value - best > (best * TIE_TOLERANCE).max(self.floor),
            None => true,
        };
        if replace {
            self.best = Some((index, value));
        }
    }

    pub(crate) fn winner(&self) -> Option<usize> {
        self.best.map(|(k, _)| k)
    }

    /// Winning metric on the amplitude scale.
    pub(crate) fn best_amplitude(&self) -> Option<f64> {
        self.best.map(|(_, v)| v)
    }
}

/// Absolute tie margin for every iteration after the first.
pub(crate) fn tie_floor(first_best_amplitude: f64) -> f64 {
    TIE_FLOOR_RATIO * first_best_amplitude
}

/// Atoms whose weighted energy is at most this fraction of the largest
/// energy are treated as degenerate and never selected.
pub const DEGENERACY_RATIO: f64 = 1e-12;

pub(crate) fn degeneracy_threshold(energies: impl Iterator<Item = f64>) -> f64 {
    DEGENERACY_RATIO * energies.fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{generate_dictionary, TransformKind};

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        let mut a = Argmax::amplitude(0.0);
        for (k, m) in [
            (0, 0.0),
            (1, 2.0),
            (2, 2.0),
            (3, 2.0 * (1.0 + 1e-13)),
            (4, 1.0),
        ] {
            a.offer(k, m);
        }
        assert_eq!(a.winner(), Some(1));
        assert_eq!(a.best_amplitude(), Some(2.0));

        let mut a = Argmax::squared(0.0);
        for (k, m) in [(0, 1.0), (1, 1.5)] {
            a.offer(k, m);
        }
        assert_eq!(a.winner(), Some(1));
        assert_eq!(Argmax::amplitude(0.0).winner(), None);
    }

    #[test]
    fn absolute_floor_widens_ties_for_small_metrics() {
        let mut a = Argmax::amplitude(1e-9);
        a.offer(0, 1e-4);
        a.offer(1, 1e-4 + 5e-10);
        assert_eq!(a.winner(), Some(0));
        a.offer(2, 1e-4 + 2e-9);
        assert_eq!(a.winner(), Some(2));

        let mut a = Argmax::squared(1e-9);
        a.offer(0, 1e-8);
        a.offer(1, (1e-4 + 5e-10) * (1e-4 + 5e-10));
        assert_eq!(a.winner(), Some(0));
    }

    #[test]
    fn empty_model_only_touches_the_loss() {
        let dict = generate_dictionary(TransformKind::Dct, 4, 4).unwrap();
        let model = SparseModel::from_terms(vec![], &dict).unwrap();
        let signal =
            Field2D::from_fn(4, 4, |m, n| Complex64::new((m + 2 * n) as f64, 0.0)).unwrap();
        let mask = LossMask::central_block(4, 4, 2, 2).unwrap();
        let out = apply_model(&signal, &model, &mask).unwrap();
        for m in 0..4 {
            for n in 0..4 {
                let expected = if mask.is_lost(m, n) {
                    Complex64::new(0.0, 0.0)
                } else {
                    signal.get(m, n)
                };
                assert_eq!(out.field.get(m, n), expected);
            }
        }
        assert_eq!(out.max_imag, 0.0);

        let untouched = LossMask::full_support(4, 4).unwrap();
        assert_eq!(
            apply_model(&signal, &model, &untouched).unwrap().field,
            signal
        );
    }

    #[test]
    fn real_dictionary_model_has_no_imaginary_part() {
        let dict = generate_dictionary(TransformKind::Dct, 4, 4).unwrap();
        let terms = vec![
            Term {
                index: 3,
                coeff: Complex64::new(2.5, 0.0),
            },
            Term {
                index: 7,
                coeff: Complex64::new(-1.0, 0.0),
            },
        ];
        let model = SparseModel::from_terms(terms, &dict).unwrap();
        let mask = LossMask::central_block(4, 4, 2, 2).unwrap();
        let out = apply_model(&Field2D::zeros(4, 4).unwrap(), &model, &mask).unwrap();
        assert!(out.max_imag <= 1e-12);
        assert_eq!(out.field.get(0, 0), Complex64::new(0.0, 0.0));
        assert_eq!(out.field.get(1, 1).re, model.field().get(1, 1).re);
    }

    #[test]
    fn conjugate_dft_pair_is_real() {
        let (rows, cols) = (8, 8);
        let dict = generate_dictionary(TransformKind::Dft, rows, cols).unwrap();
        let (mu, eta) = (2, 3);
        let k = mu * cols + eta;
        let k_conj = ((rows - mu) % rows) * cols + (cols - eta) % cols;
        let c = Complex64::new(1.5, -0.75);
        let model = SparseModel::from_terms(
            vec![
                Term { index: k, coeff: c },
                Term {
                    index: k_conj,
                    coeff: c.conj(),
                },
            ],
            &dict,
        )
        .unwrap();
        let mask = LossMask::central_block(rows, cols, 4, 4).unwrap();
        let out = apply_model(&Field2D::zeros(rows, cols).unwrap(), &model, &mask).unwrap();
        assert!(out.max_imag < 1e-12, "{}", out.max_imag);
    }

    #[test]
    fn materialize_matches_accumulated_field() {
        let dict = generate_dictionary(TransformKind::Dft, 4, 4).unwrap();
        let terms: Vec<Term> = (0..10)
            .map(|i| Term {
                index: (i * 7) % 16,
                coeff: Complex64::new(i as f64, 1.0 - i as f64),
            })
            .collect();
        let model = SparseModel::from_terms(terms, &dict).unwrap();
        assert_eq!(&model.materialize(&dict).unwrap(), model.field());
        assert!(SparseModel::from_terms(
            vec![Term {
                index: 16,
                coeff: Complex64::new(1.0, 0.0)
            }],
            &dict
        )
        .is_err());
    }
}
