//! Tabulated weighted atom-pair products.
//!
//! `C(k, l) = sum conj(phi_k) w phi_l` and `D_k = 1 / sqrt(C(k, k))` depend
//! only on the dictionary and the weight field, so they are computed once and
//! shared by every extrapolation that uses the same loss pattern.
//!
//! FGRM file layout (all integers and floats little-endian):
//!
//! ```text
//! "FGRM v1\n"            8 bytes
//! |D|                    u64
//! provenance hash        u64
//! C                      |D|^2 pairs of f64 (re, im), row-major
//! D                      |D| f64
//! ```

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::dictionary::Dictionary;
use crate::error::{check_shape, Error, Result};
use crate::grid::WeightField;
use crate::model::degeneracy_threshold;
use crate::se::atom_energy;

const FGRM_MAGIC: &[u8; 8] = b"FGRM v1\n";

/// Hash binding a table to the dictionary and weight field it was built for.
pub fn provenance_hash(dict: &Dictionary, weight: &WeightField) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"fase-gram");
    hasher.update(dict.content_hash().to_le_bytes());
    hasher.update((weight.rows() as u64).to_le_bytes());
    hasher.update((weight.cols() as u64).to_le_bytes());
    for w in weight.values() {
        hasher.update(w.to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramTable {
    size: usize,
    c: Vec<Complex64>,
    d: Vec<f64>,
    provenance: u64,
}

impl GramTable {
    /// Assembles a table from a full Hermitian matrix, deriving `D`.
    pub(crate) fn from_matrix(size: usize, c: Vec<Complex64>, provenance: u64) -> Self {
        debug_assert_eq!(c.len(), size * size);
        let floor = degeneracy_threshold((0..size).map(|k| c[k * size + k].re));
        let d = (0..size)
            .map(|k| {
                let ckk = c[k * size + k].re;
                if ckk > floor {
                    1.0 / ckk.sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            size,
            c,
            d,
            provenance,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn provenance(&self) -> u64 {
        self.provenance
    }

    #[inline]
    pub fn c(&self, k: usize, l: usize) -> Complex64 {
        self.c[k * self.size + l]
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.c
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn is_degenerate(&self, k: usize) -> bool {
        self.d[k] == 0.0
    }

    /// Fails unless the table was built for exactly this dictionary and weight.
    pub fn ensure_matches(&self, dict: &Dictionary, weight: &WeightField) -> Result<()> {
        let inputs = provenance_hash(dict, weight);
        if inputs != self.provenance || dict.len() != self.size {
            return Err(Error::StaleTable {
                table: self.provenance,
                inputs,
            });
        }
        Ok(())
    }

    /// Checks exact Hermitian symmetry, a real nonnegative diagonal and
    /// `D_k^2 C(k,k) = 1` (within `1e-12`) for nondegenerate atoms.
    pub fn verify_invariants(&self) -> Result<()> {
        let n = self.size;
        for k in 0..n {
            let ckk = self.c(k, k);
            if ckk.im != 0.0 || ckk.re.is_nan() || ckk.re < 0.0 {
                return Err(Error::Parameter(format!("diagonal entry {k} is {ckk}")));
            }
            for l in k + 1..n {
                if self.c(l, k) != self.c(k, l).conj() {
                    return Err(Error::Parameter(format!(
                        "entries ({k},{l}) and ({l},{k}) are not conjugate"
                    )));
                }
            }
            let dk = self.d[k];
            if dk != 0.0 && (dk * dk * ckk.re - 1.0).abs() > 1e-12 {
                return Err(Error::Parameter(format!(
                    "D_{k}^2 C({k},{k}) = {}",
                    dk * dk * ckk.re
                )));
            }
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        out.write_all(FGRM_MAGIC)?;
        out.write_all(&(self.size as u64).to_le_bytes())?;
        out.write_all(&self.provenance.to_le_bytes())?;
        for v in &self.c {
            out.write_all(&v.re.to_le_bytes())?;
            out.write_all(&v.im.to_le_bytes())?;
        }
        for v in &self.d {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(std::fs::File::create(path)?)
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let mut input = BufReader::new(input);
        let mut magic = [0u8; 8];
        read_exact(&mut input, &mut magic, "header")?;
        if &magic != FGRM_MAGIC {
            return Err(fgrm_err("bad magic".into()));
        }
        let mut word = [0u8; 8];
        read_exact(&mut input, &mut word, "size")?;
        let size = usize::try_from(u64::from_le_bytes(word))
            .ok()
            .filter(|&s| {
                s > 0
                    && s.checked_mul(s)
                        .is_some_and(|s2| s2 <= isize::MAX as usize / 16)
            })
            .ok_or_else(|| fgrm_err("implausible table size".into()))?;
        read_exact(&mut input, &mut word, "provenance")?;
        let provenance = u64::from_le_bytes(word);

        let mut c = Vec::with_capacity(size * size);
        let mut row = vec![0u8; size * 16];
        for k in 0..size {
            read_exact(&mut input, &mut row, &format!("row {k} of C"))?;
            c.extend(row.chunks_exact(16).map(|b| {
                Complex64::new(
                    f64::from_le_bytes(b[..8].try_into().unwrap()),
                    f64::from_le_bytes(b[8..].try_into().unwrap()),
                )
            }));
        }
        let mut dbytes = vec![0u8; size * 8];
        read_exact(&mut input, &mut dbytes, "D")?;
        let d = dbytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(fgrm_err("trailing bytes".into()));
        }
        let table = Self {
            size,
            c,
            d,
            provenance,
        };
        table
            .verify_invariants()
            .map_err(|e| fgrm_err(format!("table invariants violated: {e}")))?;
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

fn fgrm_err(reason: String) -> Error {
    Error::Format {
        what: "FGRM",
        reason,
    }
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    input
        .read_exact(buf)
        .map_err(|_| fgrm_err(format!("truncated while reading {what}")))
}

/// Direct evaluation of the upper triangle, mirrored into the lower one.
///
/// `(|D|^2 + |D|) / 2` weighted products are computed; rows run in parallel.
pub fn build_gram_tables(dict: &Dictionary, weight: &WeightField) -> Result<GramTable> {
    check_shape(dict.shape(), weight.shape())?;
    let n = dict.len();
    let w = weight.values();

    let weighted_conj: Vec<Vec<Complex64>> = dict
        .atoms()
        .par_iter()
        .map(|a| {
            a.samples()
                .iter()
                .zip(w)
                .map(|(phi, &w)| phi.conj() * w)
                .collect()
        })
        .collect();

    let mut c = vec![Complex64::new(0.0, 0.0); n * n];
    c.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
        let left = &weighted_conj[k];
        row[k] = Complex64::new(atom_energy(dict.atom(k).samples(), w), 0.0);
        for (l, entry) in row.iter_mut().enumerate().skip(k + 1) {
            *entry = dot(left, dict.atom(l).samples());
        }
    });
    for k in 0..n {
        for l in k + 1..n {
            c[l * n + k] = c[k * n + l].conj();
        }
    }
    Ok(GramTable::from_matrix(n, c, provenance_hash(dict, weight)))
}

#[inline]
fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    // Split accumulators let the compiler vectorize the real arithmetic.
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re - x.im * y.im;
        im += x.re * y.im + x.im * y.re;
    }
    Complex64::new(re, im)
}
