//! Regular-grid block loss masks.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, Result};
use crate::pgm::GrayImage;
use crate::spec::Size;

pub const LOST: u8 = 0;
pub const KEPT: u8 = 255;

#[derive(Debug, Clone)]
pub struct GridLoss {
    pub image: Size,
    pub block: Size,
    /// Distance between the corners of neighbouring blocks.
    pub period: Size,
    /// Corner of the first block.
    pub offset: (usize, usize),
    /// Keep only this many grid blocks, chosen with `seed`.
    pub count: Option<usize>,
    pub seed: u64,
}

impl GridLoss {
    /// Blocks every `2 * block`, starting half a block in.
    pub fn new(image: Size, block: Size) -> Self {
        Self {
            image,
            block,
            period: Size {
                width: 2 * block.width,
                height: 2 * block.height,
            },
            offset: (block.width / 2, block.height / 2),
            count: None,
            seed: 0,
        }
    }

    pub fn corners(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut y = self.offset.1;
        while y + self.block.height <= self.image.height {
            let mut x = self.offset.0;
            while x + self.block.width <= self.image.width {
                out.push((x, y));
                x += self.period.width;
            }
            y += self.period.height;
        }
        out
    }

    pub fn render(&self) -> Result<GrayImage> {
        if self.period.width < self.block.width || self.period.height < self.block.height {
            return Err(CliError::Usage(format!(
                "period {} is smaller than block {}",
                self.period, self.block
            )));
        }
        let mut corners = self.corners();
        if let Some(count) = self.count {
            if count > corners.len() {
                return Err(CliError::Usage(format!(
                    "{count} blocks requested, the grid has {}",
                    corners.len()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            let mut picked = sample(&mut rng, corners.len(), count).into_vec();
            picked.sort_unstable();
            corners = picked.into_iter().map(|i| corners[i]).collect();
        }
        let (w, h) = (self.image.width, self.image.height);
        let mut pixels = vec![KEPT; w * h];
        for (x0, y0) in corners {
            for y in y0..y0 + self.block.height {
                pixels[y * w + x0..y * w + x0 + self.block.width].fill(LOST);
            }
        }
        GrayImage::new(w, h, pixels)
    }
}
