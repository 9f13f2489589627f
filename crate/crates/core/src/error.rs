use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    Shape {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid mask: {0}")]
    Mask(String),

    #[error("malformed {what} file: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("atom {0} has zero weighted energy")]
    DegenerateAtom(usize),

    #[error("no atom has nonzero weighted energy on the support area")]
    NoSelectableAtom,

    #[error("stale Gram table: built for provenance {table:#018x}, inputs hash to {inputs:#018x}")]
    StaleTable { table: u64, inputs: u64 },

    #[error("dictionary not supported here: {0}")]
    UnsupportedDictionary(String),

    #[error("operation count overflows 64 bits")]
    Overflow,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_shape(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Shape {
            expected_rows: expected.0,
            expected_cols: expected.1,
            rows: actual.0,
            cols: actual.1,
        })
    }
}
