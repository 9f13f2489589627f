//! Parsing of dictionary specs and `WxH` sizes.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use fase_core::{
    generate_dictionary, load_dictionary, union_dictionaries, Dictionary, TransformKind,
};

use crate::error::{CliError, Result};

/// `dft`, `dct`, `wht`, `bdft`, `union:a+b[+c...]` or `file:path`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DictSpec {
    Transform(TransformKind),
    Union(Vec<DictSpec>),
    File(PathBuf),
}

impl DictSpec {
    /// Builds the dictionary for a `rows x cols` area.
    pub fn build(&self, rows: usize, cols: usize) -> Result<Dictionary> {
        match self {
            DictSpec::Transform(kind) => Ok(generate_dictionary(*kind, rows, cols)?),
            DictSpec::Union(parts) => {
                let dicts = parts
                    .iter()
                    .map(|p| p.build(rows, cols))
                    .collect::<Result<Vec<_>>>()?;
                Ok(union_dictionaries(&dicts)?)
            }
            DictSpec::File(path) => {
                let dict = load_dictionary(path)?;
                if dict.shape() != (rows, cols) {
                    return Err(CliError::Usage(format!(
                        "{} holds {}x{} atoms, the area is {cols}x{rows}",
                        path.display(),
                        dict.cols(),
                        dict.rows()
                    )));
                }
                Ok(dict)
            }
        }
    }

    pub fn is_pure_dft(&self) -> bool {
        matches!(self, DictSpec::Transform(TransformKind::Dft))
    }
}

impl FromStr for DictSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err(CliError::DictSpec(s.into()));
            }
            return Ok(DictSpec::File(path.into()));
        }
        if let Some(rest) = s.strip_prefix("union:") {
            let parts = rest
                .split('+')
                .map(|p| match p.parse()? {
                    DictSpec::Union(_) => Err(CliError::DictSpec(s.into())),
                    part => Ok(part),
                })
                .collect::<Result<Vec<_>>>()?;
            if parts.len() < 2 {
                return Err(CliError::DictSpec(s.into()));
            }
            return Ok(DictSpec::Union(parts));
        }
        s.parse::<TransformKind>()
            .map(DictSpec::Transform)
            .map_err(|_| CliError::DictSpec(s.into()))
    }
}

impl fmt::Display for DictSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DictSpec::Transform(kind) => write!(f, "{kind}"),
            DictSpec::Union(parts) => {
                f.write_str("union:")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("+")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            DictSpec::File(path) => write!(f, "file:{}", path.display()),
        }
    }
}

/// A `WxH` pair: width (columns) first, then height (rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Size {
    pub width: usize,
    pub height: usize,
}

impl Size {
    pub fn square(n: usize) -> Self {
        Self {
            width: n,
            height: n,
        }
    }
}

impl FromStr for Size {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CliError::Usage(format!("expected WxH, got `{s}`"));
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let width: usize = w.trim().parse().map_err(|_| bad())?;
        let height: usize = h.trim().parse().map_err(|_| bad())?;
        if width == 0 || height == 0 {
            return Err(bad());
        }
        Ok(Self { width, height })
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}
