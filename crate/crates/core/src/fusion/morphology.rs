//! Binary erosion, dilation and opening with an arbitrary structuring element.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::BinaryMask;

/// A binary neighborhood with odd sides, anchored at its center.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u8>>", into = "Vec<Vec<u8>>")]
pub struct StructuringElement {
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl StructuringElement {
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        let invalid = |why: &str| Error::Config(format!("structuring element {why}"));
        if height == 0 || width == 0 {
            return Err(invalid("is empty"));
        }
        if rows.iter().any(|r| r.len() != width) {
            return Err(invalid("rows differ in length"));
        }
        if width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(invalid("needs odd width and height"));
        }
        if rows.iter().flatten().any(|&v| v > 1) {
            return Err(invalid("must contain only 0 and 1"));
        }
        let cells: Vec<bool> = rows.into_iter().flatten().map(|v| v == 1).collect();
        if !cells[(height / 2) * width + width / 2] {
            return Err(invalid("must have its center set"));
        }
        Ok(StructuringElement { width, height, cells })
    }

    /// `size`×`size` all-ones square; `size` must be odd.
    pub fn square(size: usize) -> Result<Self> {
        Self::new(vec![vec![1; size]; size])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Offsets `(dx, dy)` of the set cells relative to the center.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let (cx, cy) = ((self.width / 2) as isize, (self.height / 2) as isize);
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (x, y)))
            .filter(|&(x, y)| self.cells[y * self.width + x])
            .map(|(x, y)| (x as isize - cx, y as isize - cy))
            .collect()
    }

    /// Point reflection through the center.
    pub fn reflected(&self) -> Self {
        let mut cells = self.cells.clone();
        cells.reverse();
        StructuringElement {
            width: self.width,
            height: self.height,
            cells,
        }
    }
}

impl Default for StructuringElement {
    fn default() -> Self {
        Self::square(3).unwrap()
    }
}

impl TryFrom<Vec<Vec<u8>>> for StructuringElement {
    type Error = Error;

    fn try_from(rows: Vec<Vec<u8>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<StructuringElement> for Vec<Vec<u8>> {
    fn from(se: StructuringElement) -> Self {
        se.cells
            .chunks(se.width)
            .map(|row| row.iter().map(|&c| c as u8).collect())
            .collect()
    }
}

/// Value assumed for pixels outside the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    Zero,
    One,
}

/// Combines, for every offset, the image shifted by `sign * offset` into
/// `acc` with `op`; out-of-image samples take `pad`.
fn accumulate(
    image: &BinaryMask,
    offsets: &[(isize, isize)],
    sign: isize,
    init: u8,
    pad: u8,
    op: fn(u8, u8) -> u8,
) -> BinaryMask {
    let (w, h) = (image.width() as isize, image.height() as isize);
    let src = image.values();
    let mut acc = vec![init; src.len()];
    for &(dx, dy) in offsets {
        let (dx, dy) = (sign * dx, sign * dy);
        // columns x whose sample x + dx is inside the image
        let x_lo = (-dx).clamp(0, w) as usize;
        let x_hi = (w - dx).clamp(0, w) as usize;
        for y in 0..h {
            let row = &mut acc[(y * w) as usize..((y + 1) * w) as usize];
            let sy = y + dy;
            if sy < 0 || sy >= h {
                row.iter_mut().for_each(|v| *v = op(*v, pad));
                continue;
            }
            let srow = &src[(sy * w) as usize..((sy + 1) * w) as usize];
            row[..x_lo].iter_mut().for_each(|v| *v = op(*v, pad));
            row[x_hi.max(x_lo)..].iter_mut().for_each(|v| *v = op(*v, pad));
            if x_lo < x_hi {
                let shifted = &srow[(x_lo as isize + dx) as usize..(x_hi as isize + dx) as usize];
                row[x_lo..x_hi]
                    .iter_mut()
                    .zip(shifted)
                    .for_each(|(v, &s)| *v = op(*v, s));
            }
        }
    }
    BinaryMask::new(image.width(), image.height(), acc).expect("binary by construction")
}

/// Erosion: a pixel stays set iff every set cell of `se`, centered on it,
/// covers a set pixel. Outside pixels read as `padding`.
pub fn erode_with_padding(image: &BinaryMask, se: &StructuringElement, padding: Padding) -> BinaryMask {
    let pad = (padding == Padding::One) as u8;
    accumulate(image, &se.offsets(), 1, 1, pad, |a, b| a & b)
}

/// Erosion with zero padding.
pub fn erode(image: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    erode_with_padding(image, se, Padding::Zero)
}

/// Dilation: a pixel is set iff some set cell of the reflected `se`,
/// centered on it, covers a set pixel.
pub fn dilate(image: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    accumulate(image, &se.offsets(), -1, 0, 0, |a, b| a | b)
}

/// Opening: erosion followed by dilation. Removes every object that no
/// translate of `se` fits inside.
pub fn open(image: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    dilate(&erode(image, se), se)
}
