//! Raster value types and their on-disk formats.
//!
//! * [`BandRaster`]: one band of source imagery, raw or normalized.
//! * [`ProbabilityMask`]: per-pixel deforestation probability in `[0, 1]`.
//! * [`BinaryMask`]: per-pixel class, `1` = deforested.
//!
//! Source tiles are read from TIFF ([`read_tiff`]), probability masks are
//! exchanged as FGPM files ([`read_raw`], [`write_raw`]) and fused outputs are
//! written as 8-bit grayscale PNG ([`write_mask_png`]).

mod fgpm;
mod png_io;
mod tiff_io;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use fgpm::{decode_raw, encode_raw, read_raw, write_raw, FGPM_HEADER_LEN, FGPM_MAGIC, FGPM_VERSION};
pub use png_io::{read_mask_png, write_mask_png};
pub use tiff_io::{read_label_tiff, read_tiff, write_tiff_f32, write_tiff_u16, write_tiff_u8, MAX_TIFF_SIDE};

/// Side length of every tile after preprocessing.
pub const TILE_SIZE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Satellite {
    Sentinel1,
    Sentinel2,
    Landsat8,
}

impl Satellite {
    pub const ALL: [Satellite; 3] = [Satellite::Sentinel1, Satellite::Sentinel2, Satellite::Landsat8];

    pub fn name(self) -> &'static str {
        match self {
            Satellite::Sentinel1 => "Sentinel1",
            Satellite::Sentinel2 => "Sentinel2",
            Satellite::Landsat8 => "Landsat8",
        }
    }

    /// Optical sensors carry the NIR/SWIR/RED bands the spectral indices need.
    pub fn is_optical(self) -> bool {
        !matches!(self, Satellite::Sentinel1)
    }
}

impl fmt::Display for Satellite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Satellite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Sentinel1" => Ok(Satellite::Sentinel1),
            "Sentinel2" => Ok(Satellite::Sentinel2),
            "Landsat8" => Ok(Satellite::Landsat8),
            "Landsat5" => Err(Error::ExcludedCollection {
                name: s.to_string(),
                collection: s.to_string(),
            }),
            other => Err(Error::UnknownCollection {
                name: s.to_string(),
                collection: other.to_string(),
            }),
        }
    }
}

/// A validated calendar date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Date {
    pub year: i32,
    pub month: u32,
    pub day: u32,
}

impl Date {
    pub fn new(year: i32, month: u32, day: u32) -> Result<Self> {
        chrono::NaiveDate::from_ymd_opt(year, month, day)
            .map(|_| Date { year, month, day })
            .ok_or(Error::InvalidDate { year, month, day })
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

/// A grid coordinate in degrees, kept together with its source text.
///
/// Tiles sit on a fixed grid and are addressed by the literal coordinate
/// strings in their filenames, so equality, ordering and hashing use the text.
#[derive(Debug, Clone)]
pub struct GridCoord {
    text: String,
    degrees: f64,
}

impl GridCoord {
    pub fn longitude(text: &str) -> Result<Self> {
        Self::parse_bounded(text, 180.0)
    }

    pub fn latitude(text: &str) -> Result<Self> {
        Self::parse_bounded(text, 90.0)
    }

    fn parse_bounded(text: &str, limit: f64) -> Result<Self> {
        let invalid = |reason: &str| Error::InvalidCoordinate {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed != text {
            return Err(invalid("empty or padded"));
        }
        let degrees: f64 = text.parse().map_err(|_| invalid("not a number"))?;
        if !degrees.is_finite() {
            return Err(invalid("not finite"));
        }
        if degrees.abs() > limit {
            return Err(invalid("out of range"));
        }
        Ok(GridCoord {
            text: text.to_string(),
            degrees,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn degrees(&self) -> f64 {
        self.degrees
    }
}

impl PartialEq for GridCoord {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl Eq for GridCoord {}

impl std::hash::Hash for GridCoord {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.text.hash(state);
    }
}

impl PartialOrd for GridCoord {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GridCoord {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.text.cmp(&other.text)
    }
}

impl fmt::Display for GridCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Serialize for GridCoord {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for GridCoord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        // Axis-specific bounds are checked by the owning record.
        GridCoord::parse_bounded(&text, 180.0).map_err(serde::de::Error::custom)
    }
}

/// Where and when a band raster was acquired.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BandMeta {
    pub satellite: Satellite,
    pub band: String,
    pub lon: GridCoord,
    pub lat: GridCoord,
    pub date: Date,
}

/// One band of imagery, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRaster {
    width: usize,
    height: usize,
    values: Vec<f32>,
    pub meta: Option<BandMeta>,
}

impl BandRaster {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        check_len(width, height, values.len())?;
        Ok(BandRaster {
            width,
            height,
            values,
            meta: None,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn with_meta(mut self, meta: BandMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }
}

/// Per-pixel deforestation probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMask {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl ProbabilityMask {
    /// Rejects NaN and anything outside `[0, 1]`.
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        check_len(width, height, values.len())?;
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::ValueOutOfRange {
                index,
                value: value as f64,
            });
        }
        Ok(ProbabilityMask {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    pub fn is_tile(&self) -> bool {
        self.width == TILE_SIZE && self.height == TILE_SIZE
    }
}

/// Per-pixel class mask with values in `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, values: Vec<u8>) -> Result<Self> {
        check_len(width, height, values.len())?;
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| **v > 1) {
            return Err(Error::NotBinary { index, value });
        }
        Ok(BinaryMask {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            values: vec![0; width * height],
        }
    }

    pub fn ones(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            values: vec![1; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y) as u8);
            }
        }
        BinaryMask {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.values[y * self.width + x] == 1
    }

    pub fn count_ones(&self) -> usize {
        self.values.iter().map(|&v| v as usize).sum()
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| 1 - v).collect(),
        }
    }

    /// Pixel-wise `self ⊆ other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(&a, &b)| a <= b)
    }

    pub fn to_probability(&self) -> ProbabilityMask {
        ProbabilityMask {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| v as f32).collect(),
        }
    }
}

fn check_len(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 || width.checked_mul(height) != Some(len) {
        return Err(Error::InvalidDimensions { width, height, len });
    }
    Ok(())
}
