//! Selective extrapolation of missing 2D signal regions.
//!
//! A signal known on a support area is modelled as a sparse weighted sum of
//! dictionary atoms, chosen greedily one per iteration; the model then fills
//! the loss area. Two routes produce the same model:
//!
//! * [`se`]: the reference algorithm, re-projecting an explicit residual
//!   onto every atom in every iteration.
//! * [`fase`]: the fast reformulation, iterating on tabulated atom-pair
//!   products ([`gram`]) so that one iteration costs `O(|D|)`.
//!
//! [`accel`] builds initial products and Gram tables of DFT atoms with FFTs,
//! and [`opcount`] counts operations of both routes.

pub mod accel;
pub mod dictionary;
pub mod error;
pub mod fase;
pub mod gram;
pub mod grid;
pub mod model;
pub mod opcount;
pub mod se;

pub use accel::{fft_gram_table, fft_initial_products};
pub use dictionary::{
    generate_dictionary, load_dictionary, union_dictionaries, Atom, Dictionary, Family, FreqTag,
    TransformKind,
};
pub use error::{Error, Result};
pub use fase::{fase_extrapolate, fase_iterate, initial_scalar_products, ResidualProducts};
pub use gram::{build_gram_tables, provenance_hash, GramTable};
pub use grid::{
    build_weight_field, psnr_over_region, ExtrapConfig, Field2D, LossMask, WeightField,
};
pub use model::{apply_model, Concealed, IterationRecord, IterationTrace, SparseModel, Term};
pub use num_complex::Complex64;
pub use opcount::{counted_run, predict_op_counts, Algorithm, OpCounts};
pub use se::{se_extrapolate, se_select, weighted_projection};
