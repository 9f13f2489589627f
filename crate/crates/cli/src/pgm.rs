//! Binary (P5) 8-bit PGM images.

use std::fs;
use std::path::Path;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u8,
    /// Row-major samples.
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(CliError::Pgm(format!(
                "{} samples for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            maxval: 255,
            pixels,
        })
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        if bytes.get(..2) != Some(b"P5") {
            return Err(CliError::Pgm("missing P5 magic".into()));
        }
        pos += 2;
        let mut fields = [0usize; 3];
        for (i, field) in fields.iter_mut().enumerate() {
            skip_space_and_comments(bytes, &mut pos);
            let start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            if start == pos {
                return Err(CliError::Pgm(format!(
                    "header field {} is not a number",
                    i + 1
                )));
            }
            *field = std::str::from_utf8(&bytes[start..pos])
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CliError::Pgm("header number out of range".into()))?;
        }
        let [width, height, maxval] = fields;
        if !(1..=255).contains(&maxval) {
            return Err(CliError::Pgm(format!(
                "maxval {maxval} is not an 8-bit depth"
            )));
        }
        match bytes.get(pos) {
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            _ => return Err(CliError::Pgm("no whitespace after header".into())),
        }
        let len = width
            .checked_mul(height)
            .ok_or_else(|| CliError::Pgm("image dimensions overflow".into()))?;
        let data = &bytes[pos..];
        if data.len() != len {
            return Err(CliError::Pgm(format!(
                "expected {len} samples for {width}x{height}, found {}",
                data.len()
            )));
        }
        let mut img = Self::new(width, height, data.to_vec())?;
        img.maxval = maxval as u8;
        if let Some(&v) = img.pixels.iter().find(|&&v| v > img.maxval) {
            return Err(CliError::Pgm(format!("sample {v} exceeds maxval {maxval}")));
        }
        Ok(img)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| CliError::File {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|source| CliError::File {
            path: path.display().to_string(),
            source,
        })
    }
}

fn skip_space_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            b if b.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
}
