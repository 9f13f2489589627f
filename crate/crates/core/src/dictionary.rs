//! Basis-function dictionaries.
//!
//! Transform families are generated with the atom order `k = mu * N + eta`
//! (row frequency major). Numerically defined atoms are read from FDIC files:
//!
//! ```text
//! FDIC v1 <M> <N> <K> <complex|real>\n
//! K * M * N pairs of little-endian f64 (re, im), atom-major then row-major
//! ```
//!
//! `real` declares that every imaginary part is zero; the pair layout is the
//! same for both kinds.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Field2D;

const FDIC_MAGIC: &str = "FDIC";
const FDIC_VERSION: &str = "v1";

/// Where an atom came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Dft,
    Dct,
    Wht,
    Bdft,
    Custom,
}

/// Generated transform families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformKind {
    Dft,
    Dct,
    Wht,
    /// DFT atoms with real and imaginary parts mapped through `sign`.
    Bdft,
}

impl TransformKind {
    pub fn family(self) -> Family {
        match self {
            TransformKind::Dft => Family::Dft,
            TransformKind::Dct => Family::Dct,
            TransformKind::Wht => Family::Wht,
            TransformKind::Bdft => Family::Bdft,
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformKind::Dft => "dft",
            TransformKind::Dct => "dct",
            TransformKind::Wht => "wht",
            TransformKind::Bdft => "bdft",
        })
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dft" => Ok(TransformKind::Dft),
            "dct" => Ok(TransformKind::Dct),
            "wht" => Ok(TransformKind::Wht),
            "bdft" => Ok(TransformKind::Bdft),
            other => Err(Error::Parameter(format!(
                "unknown transform kind `{other}`"
            ))),
        }
    }
}

/// Vertical (`mu`) and horizontal (`eta`) frequency of a DFT atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FreqTag {
    pub mu: usize,
    pub eta: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    values: Field2D,
    freq: Option<FreqTag>,
    family: Family,
}

impl Atom {
    pub fn new(values: Field2D, family: Family) -> Self {
        Self {
            values,
            freq: None,
            family,
        }
    }

    pub fn with_freq(values: Field2D, family: Family, freq: FreqTag) -> Self {
        Self {
            values,
            freq: Some(freq),
            family,
        }
    }

    pub fn values(&self) -> &Field2D {
        &self.values
    }

    pub fn samples(&self) -> &[Complex64] {
        self.values.values()
    }

    pub fn freq(&self) -> Option<FreqTag> {
        self.freq
    }

    pub fn family(&self) -> Family {
        self.family
    }
}

/// An ordered, nonempty set of same-shaped atoms.
#[derive(Debug)]
pub struct Dictionary {
    rows: usize,
    cols: usize,
    atoms: Vec<Atom>,
    hash: OnceLock<u64>,
}

impl Clone for Dictionary {
    fn clone(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            atoms: self.atoms.clone(),
            hash: self.hash.clone(),
        }
    }
}

impl PartialEq for Dictionary {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.atoms == other.atoms
    }
}

impl Dictionary {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let first = atoms
            .first()
            .ok_or_else(|| Error::Parameter("dictionary needs at least one atom".into()))?;
        let (rows, cols) = first.values.shape();
        for (k, atom) in atoms.iter().enumerate() {
            crate::error::check_shape((rows, cols), atom.values.shape())?;
            if atom
                .samples()
                .iter()
                .all(|v| *v == Complex64::new(0.0, 0.0))
            {
                return Err(Error::Parameter(format!("atom {k} is identically zero")));
            }
            if let Some(tag) = atom.freq {
                if tag.mu >= rows || tag.eta >= cols {
                    return Err(Error::Parameter(format!(
                        "atom {k} frequency ({}, {}) out of range for {rows}x{cols}",
                        tag.mu, tag.eta
                    )));
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            atoms,
            hash: OnceLock::new(),
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

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, k: usize) -> &Atom {
        &self.atoms[k]
    }

    pub fn tagged_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.freq.is_some()).count()
    }

    /// True when no atom has a nonzero imaginary part.
    pub fn is_real(&self) -> bool {
        self.atoms
            .iter()
            .all(|a| a.samples().iter().all(|v| v.im == 0.0))
    }

    /// SHA-256 of shape and atom samples, truncated to 64 bits. Families and
    /// frequency tags do not contribute.
    pub fn content_hash(&self) -> u64 {
        *self.hash.get_or_init(|| {
            let mut hasher = Sha256::new();
            hasher.update((self.rows as u64).to_le_bytes());
            hasher.update((self.cols as u64).to_le_bytes());
            hasher.update((self.atoms.len() as u64).to_le_bytes());
            for atom in &self.atoms {
                for v in atom.samples() {
                    hasher.update(v.re.to_le_bytes());
                    hasher.update(v.im.to_le_bytes());
                }
            }
            let digest = hasher.finalize();
            u64::from_le_bytes(digest[..8].try_into().unwrap())
        })
    }

    pub fn write_fdic<W: Write>(&self, mut out: W) -> Result<()> {
        let kind = if self.is_real() { "real" } else { "complex" };
        writeln!(
            out,
            "{FDIC_MAGIC} {FDIC_VERSION} {} {} {} {kind}",
            self.rows,
            self.cols,
            self.atoms.len()
        )?;
        let mut buf = Vec::with_capacity(self.rows * self.cols * 16);
        for atom in &self.atoms {
            buf.clear();
            for v in atom.samples() {
                buf.extend_from_slice(&v.re.to_le_bytes());
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
            out.write_all(&buf)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_fdic(std::io::BufWriter::new(file))
    }

    pub fn read_fdic<R: Read>(input: R) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let mut header = String::new();
        reader
            .read_line(&mut header)
            .map_err(|e| fdic_err(format!("unreadable header: {e}")))?;
        if !header.ends_with('\n') {
            return Err(fdic_err("header is not newline terminated".into()));
        }
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != FDIC_MAGIC || fields[1] != FDIC_VERSION {
            return Err(fdic_err(format!("bad header `{}`", header.trim_end())));
        }
        let parse = |s: &str, name: &str| -> Result<usize> {
            s.parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| fdic_err(format!("{name} `{s}` is not a positive integer")))
        };
        let rows = parse(fields[2], "M")?;
        let cols = parse(fields[3], "N")?;
        let count = parse(fields[4], "K")?;
        let real = match fields[5] {
            "real" => true,
            "complex" => false,
            other => return Err(fdic_err(format!("unknown sample kind `{other}`"))),
        };
        let samples = rows
            .checked_mul(cols)
            .ok_or_else(|| fdic_err("M*N overflows".into()))?;

        let mut atoms = Vec::with_capacity(count);
        let mut buf = vec![0u8; samples * 16];
        for k in 0..count {
            reader
                .read_exact(&mut buf)
                .map_err(|_| fdic_err(format!("payload truncated in atom {k} of {count}")))?;
            let values: Vec<Complex64> = buf
                .chunks_exact(16)
                .map(|c| {
                    Complex64::new(
                        f64::from_le_bytes(c[..8].try_into().unwrap()),
                        f64::from_le_bytes(c[8..].try_into().unwrap()),
                    )
                })
                .collect();
            if values
                .iter()
                .any(|v| !v.re.is_finite() || !v.im.is_finite())
            {
                return Err(fdic_err(format!("atom {k} contains non-finite samples")));
            }
            if real && values.iter().any(|v| v.im != 0.0) {
                return Err(fdic_err(format!(
                    "atom {k} has imaginary parts in a `real` dictionary"
                )));
            }
            if values.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
                return Err(fdic_err(format!("atom {k} is identically zero")));
            }
            atoms.push(Atom::new(Field2D::new(rows, cols, values)?, Family::Custom));
        }
        let mut rest = [0u8; 1];
        if reader.read(&mut rest)? != 0 {
            return Err(fdic_err(format!("trailing bytes after {count} atoms")));
        }
        Self::new(atoms)
    }
}

fn fdic_err(reason: String) -> Error {
    Error::Format {
        what: "FDIC",
        reason,
    }
}

/// Reads an FDIC dictionary file. Atoms come back as [`Family::Custom`]
/// without frequency tags.
pub fn load_dictionary(path: impl AsRef<Path>) -> Result<Dictionary> {
    let file = std::fs::File::open(path)?;
    Dictionary::read_fdic(file)
}

/// All `rows * cols` atoms of a 2D transform.
pub fn generate_dictionary(kind: TransformKind, rows: usize, cols: usize) -> Result<Dictionary> {
    if rows == 0 || cols == 0 {
        return Err(Error::Parameter(format!(
            "dictionary dimensions {rows}x{cols} must be positive"
        )));
    }
    if kind == TransformKind::Wht && !(rows.is_power_of_two() && cols.is_power_of_two()) {
        return Err(Error::Parameter(format!(
            "Walsh-Hadamard atoms need power-of-two dimensions, got {rows}x{cols}"
        )));
    }
    let family = kind.family();
    let atoms: Result<Vec<Atom>> = (0..rows * cols)
        .into_par_iter()
        .map(|k| {
            let (mu, eta) = (k / cols, k % cols);
            let values = match kind {
                TransformKind::Dft => {
                    Field2D::from_fn(rows, cols, |m, n| dft_sample(mu, eta, m, n, rows, cols))?
                }
                TransformKind::Bdft => {
                    Field2D::from_fn(rows, cols, |m, n| bdft_sample(mu, eta, m, n, rows, cols))?
                }
                TransformKind::Dct => {
                    let vert = dct_basis(mu, rows);
                    let horiz = dct_basis(eta, cols);
                    Field2D::from_fn(rows, cols, |m, n| Complex64::new(vert[m] * horiz[n], 0.0))?
                }
                TransformKind::Wht => Field2D::from_fn(rows, cols, |m, n| {
                    Complex64::new(hadamard(mu, m) * hadamard(eta, n), 0.0)
                })?,
            };
            Ok(if kind == TransformKind::Dft {
                Atom::with_freq(values, family, FreqTag { mu, eta })
            } else {
                Atom::new(values, family)
            })
        })
        .collect();
    Dictionary::new(atoms?)
}

/// Concatenates dictionaries in order.
pub fn union_dictionaries(parts: &[Dictionary]) -> Result<Dictionary> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Parameter("union of zero dictionaries".into()))?;
    for part in &parts[1..] {
        crate::error::check_shape(first.shape(), part.shape())?;
    }
    Dictionary::new(parts.iter().flat_map(|p| p.atoms.iter().cloned()).collect())
}

/// Phase index `p` such that the DFT atom sample is `exp(j 2 pi p / (M N))`.
fn dft_phase(mu: usize, eta: usize, m: usize, n: usize, rows: usize, cols: usize) -> u64 {
    let period = (rows * cols) as u64;
    let vertical = (mu as u64 * m as u64 % rows as u64) * cols as u64;
    let horizontal = (eta as u64 * n as u64 % cols as u64) * rows as u64;
    (vertical + horizontal) % period
}

fn dft_sample(mu: usize, eta: usize, m: usize, n: usize, rows: usize, cols: usize) -> Complex64 {
    let period = (rows * cols) as u64;
    let p = dft_phase(mu, eta, m, n, rows, cols);
    // Quarter turns are exact.
    if (4 * p).is_multiple_of(period) {
        return match 4 * p / period {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    let angle = 2.0 * PI * p as f64 / period as f64;
    Complex64::new(angle.cos(), angle.sin())
}

/// Signs of the real and imaginary parts of [`dft_sample`], decided on the
/// integer phase so that exact zeros stay zero.
fn bdft_sample(mu: usize, eta: usize, m: usize, n: usize, rows: usize, cols: usize) -> Complex64 {
    let period = (rows * cols) as u64;
    let p = dft_phase(mu, eta, m, n, rows, cols);
    let quarter = 4 * p;
    let re = if quarter == period || quarter == 3 * period {
        0.0
    } else if quarter < period || quarter > 3 * period {
        1.0
    } else {
        -1.0
    };
    let im = if p == 0 || 2 * p == period {
        0.0
    } else if 2 * p < period {
        1.0
    } else {
        -1.0
    };
    Complex64::new(re, im)
}

/// Orthonormal type-II DCT basis vector of frequency `u` and length `len`.
fn dct_basis(u: usize, len: usize) -> Vec<f64> {
    let scale = if u == 0 {
        (1.0 / len as f64).sqrt()
    } else {
        (2.0 / len as f64).sqrt()
    };
    (0..len)
        .map(|i| scale * (PI * (2 * i + 1) as f64 * u as f64 / (2 * len) as f64).cos())
        .collect()
}

/// Entry `(row, col)` of the Sylvester Hadamard matrix.
fn hadamard(row: usize, col: usize) -> f64 {
    if (row & col).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}
