//! Band selection, resampling to the tile grid, normalization and stacking.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::TileRecord;
use crate::error::{Error, Result};
use crate::raster::{read_tiff, BandMeta, BandRaster, Date, GridCoord, Satellite, TILE_SIZE};

const SENTINEL1_BANDS: [&str; 2] = ["VV", "VH"];
const SENTINEL2_BANDS: [&str; 5] = ["B4", "B7", "B8", "B11", "B12"];
const LANDSAT8_BANDS: [&str; 4] = ["B4", "B5", "B6", "B7"];

/// The bands kept for a satellite, in stack channel order.
pub fn select_bands(satellite: Satellite) -> &'static [&'static str] {
    match satellite {
        Satellite::Sentinel1 => &SENTINEL1_BANDS,
        Satellite::Sentinel2 => &SENTINEL2_BANDS,
        Satellite::Landsat8 => &LANDSAT8_BANDS,
    }
}

/// [`select_bands`] keyed by collection name; Landsat 5 and anything unknown
/// is rejected.
pub fn select_bands_for(collection: &str) -> Result<&'static [&'static str]> {
    collection.parse::<Satellite>().map(select_bands)
}

/// Band roles for the spectral indices: `(nir, swir, red)` channel indices.
pub fn optical_roles(satellite: Satellite) -> Option<(usize, usize, usize)> {
    match satellite {
        // B8, B11, B4
        Satellite::Sentinel2 => Some((2, 3, 0)),
        // B5, B6, B4
        Satellite::Landsat8 => Some((1, 2, 0)),
        Satellite::Sentinel1 => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

/// Physical value range mapped onto `[0, 1]`, per satellite and band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<Satellite, BTreeMap<String, Range>>")]
#[serde(into = "BTreeMap<Satellite, BTreeMap<String, Range>>")]
pub struct NormalizationTable {
    ranges: BTreeMap<Satellite, BTreeMap<String, Range>>,
}

impl Default for NormalizationTable {
    /// Reflectance bands scaled by 10 000; SAR backscatter in dB over [-30, 0].
    fn default() -> Self {
        let mut ranges: BTreeMap<Satellite, BTreeMap<String, Range>> = BTreeMap::new();
        for satellite in Satellite::ALL {
            let range = match satellite {
                Satellite::Sentinel1 => Range { lo: -30.0, hi: 0.0 },
                _ => Range { lo: 0.0, hi: 10_000.0 },
            };
            let bands = ranges.entry(satellite).or_default();
            for band in select_bands(satellite) {
                bands.insert(band.to_string(), range);
            }
        }
        NormalizationTable { ranges }
    }
}

impl TryFrom<BTreeMap<Satellite, BTreeMap<String, Range>>> for NormalizationTable {
    type Error = Error;

    fn try_from(ranges: BTreeMap<Satellite, BTreeMap<String, Range>>) -> Result<Self> {
        for (satellite, bands) in &ranges {
            for (band, r) in bands {
                if !(r.lo.is_finite() && r.hi.is_finite() && r.hi > r.lo) {
                    return Err(Error::Config(format!(
                        "normalization range for {satellite} {band} needs finite lo < hi"
                    )));
                }
            }
        }
        Ok(NormalizationTable { ranges })
    }
}

impl From<NormalizationTable> for BTreeMap<Satellite, BTreeMap<String, Range>> {
    fn from(t: NormalizationTable) -> Self {
        t.ranges
    }
}

impl NormalizationTable {
    pub fn get(&self, satellite: Satellite, band: &str) -> Option<Range> {
        self.ranges.get(&satellite)?.get(band).copied()
    }

    /// Overlays `other`'s entries on top of this table.
    pub fn merged(mut self, other: &NormalizationTable) -> Self {
        for (satellite, bands) in &other.ranges {
            let mine = self.ranges.entry(*satellite).or_default();
            for (band, r) in bands {
                mine.insert(band.clone(), *r);
            }
        }
        self
    }

    /// Every selected band must have a range.
    pub fn check_complete(&self) -> Result<()> {
        for satellite in Satellite::ALL {
            for band in select_bands(satellite) {
                if self.get(satellite, band).is_none() {
                    return Err(missing_range(satellite, band));
                }
            }
        }
        Ok(())
    }
}

fn missing_range(satellite: Satellite, band: &str) -> Error {
    Error::MissingNormalization {
        satellite: satellite.to_string(),
        band: band.to_string(),
    }
}

/// Corner-aligned bilinear resampling: output corners sample input corners.
pub fn resize_bilinear(raster: &BandRaster, width: usize, height: usize) -> Result<BandRaster> {
    let (w, h) = (raster.width(), raster.height());
    if w < 2 || h < 2 {
        return Err(Error::RasterTooSmall { width: w, height: h });
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height, len: 0 });
    }
    if (w, h) == (width, height) {
        return Ok(raster.clone());
    }
    let taps = |n_in: usize, n_out: usize| -> Vec<(usize, f64)> {
        let scale = if n_out > 1 {
            (n_in - 1) as f64 / (n_out - 1) as f64
        } else {
            0.0
        };
        (0..n_out)
            .map(|i| {
                let s = i as f64 * scale;
                let i0 = (s.floor() as usize).min(n_in - 2);
                (i0, s - i0 as f64)
            })
            .collect()
    };
    let xs = taps(w, width);
    let ys = taps(h, height);
    let src = raster.values();
    let mut out = Vec::with_capacity(width * height);
    for &(y0, fy) in &ys {
        let row0 = &src[y0 * w..(y0 + 1) * w];
        let row1 = &src[(y0 + 1) * w..(y0 + 2) * w];
        for &(x0, fx) in &xs {
            let (a, b) = (row0[x0] as f64, row0[x0 + 1] as f64);
            let (c, d) = (row1[x0] as f64, row1[x0 + 1] as f64);
            let top = a + (b - a) * fx;
            let bottom = c + (d - c) * fx;
            out.push((top + (bottom - top) * fy) as f32);
        }
    }
    let mut resized = BandRaster::new(width, height, out)?;
    resized.meta = raster.meta.clone();
    Ok(resized)
}

/// Affine map of `[lo, hi]` onto `[0, 1]`, clamped; non-finite pixels become 0.
pub fn normalize_value(v: f32, range: Range) -> f32 {
    if !v.is_finite() {
        return 0.0;
    }
    ((v as f64 - range.lo) / (range.hi - range.lo)).clamp(0.0, 1.0) as f32
}

pub fn normalize(raster: &BandRaster, table: &NormalizationTable) -> Result<BandRaster> {
    let meta = raster.meta.as_ref().ok_or_else(|| Error::MissingNormalization {
        satellite: "unknown".into(),
        band: "unknown".into(),
    })?;
    let range = table
        .get(meta.satellite, &meta.band)
        .ok_or_else(|| missing_range(meta.satellite, &meta.band))?;
    let values = raster.values().iter().map(|&v| normalize_value(v, range)).collect();
    Ok(BandRaster::new(raster.width(), raster.height(), values)?.with_meta(meta.clone()))
}

/// Normalized, tile-sized channels of one acquisition in selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageStack {
    pub satellite: Satellite,
    pub lon: GridCoord,
    pub lat: GridCoord,
    pub date: Date,
    channels: Vec<BandRaster>,
}

impl ImageStack {
    /// Checks channel count, order, tile size and value range.
    pub fn new(
        satellite: Satellite,
        lon: GridCoord,
        lat: GridCoord,
        date: Date,
        channels: Vec<BandRaster>,
    ) -> Result<Self> {
        let bands = select_bands(satellite);
        if channels.len() != bands.len() {
            return Err(Error::Config(format!(
                "{satellite} stack needs {} channels, got {}",
                bands.len(),
                channels.len()
            )));
        }
        for (band, ch) in bands.iter().zip(&channels) {
            if (ch.width(), ch.height()) != (TILE_SIZE, TILE_SIZE) {
                return Err(Error::DimensionMismatch {
                    expected: (TILE_SIZE, TILE_SIZE),
                    actual: (ch.width(), ch.height()),
                });
            }
            if let Some((index, &value)) = ch
                .values()
                .iter()
                .enumerate()
                .find(|(_, v)| !(0.0..=1.0).contains(*v))
            {
                return Err(Error::ValueOutOfRange {
                    index,
                    value: value as f64,
                });
            }
            if let Some(meta) = &ch.meta {
                if meta.band != *band {
                    return Err(Error::UnexpectedBand {
                        satellite: satellite.to_string(),
                        band: meta.band.clone(),
                    });
                }
            }
        }
        Ok(ImageStack {
            satellite,
            lon,
            lat,
            date,
            channels,
        })
    }

    pub fn channels(&self) -> &[BandRaster] {
        &self.channels
    }

    pub fn bands(&self) -> &'static [&'static str] {
        select_bands(self.satellite)
    }

    pub fn channel(&self, band: &str) -> Option<&BandRaster> {
        self.bands()
            .iter()
            .position(|b| *b == band)
            .map(|i| &self.channels[i])
    }

    /// `{Satellite}_{lon}_{lat}_{yyyy}_{mm}_{dd}`
    pub fn stem(&self) -> String {
        format!(
            "{}_{}_{}_{:04}_{:02}_{:02}",
            self.satellite, self.lon, self.lat, self.date.year, self.date.month, self.date.day
        )
    }
}

/// Builds a stack from raw rasters carrying metadata: checks the band set,
/// resizes anything off the tile grid, then normalizes.
pub fn assemble_stack(rasters: Vec<BandRaster>, table: &NormalizationTable) -> Result<ImageStack> {
    let first = rasters
        .first()
        .and_then(|r| r.meta.clone())
        .ok_or(Error::Empty("stack without band metadata"))?;
    let satellite = first.satellite;
    let bands = select_bands(satellite);
    let mut slots: Vec<Option<BandRaster>> = vec![None; bands.len()];
    for raster in rasters {
        let meta = raster.meta.as_ref().ok_or(Error::Empty("stack without band metadata"))?;
        if (meta.satellite, &meta.lon, &meta.lat, meta.date) != (satellite, &first.lon, &first.lat, first.date) {
            return Err(Error::MixedTiles {
                detail: format!(
                    "{} {} {} {} vs {} {} {} {}",
                    satellite, first.lon, first.lat, first.date, meta.satellite, meta.lon, meta.lat, meta.date
                ),
            });
        }
        let slot = bands
            .iter()
            .position(|b| *b == meta.band)
            .ok_or_else(|| Error::UnexpectedBand {
                satellite: satellite.to_string(),
                band: meta.band.clone(),
            })?;
        if slots[slot].is_some() {
            return Err(Error::DuplicateBand {
                satellite: satellite.to_string(),
                band: meta.band.clone(),
            });
        }
        slots[slot] = Some(raster);
    }
    let mut channels = Vec::with_capacity(bands.len());
    for (band, slot) in bands.iter().zip(slots) {
        let raster = slot.ok_or_else(|| Error::MissingBand {
            satellite: satellite.to_string(),
            band: band.to_string(),
        })?;
        let raster = if (raster.width(), raster.height()) == (TILE_SIZE, TILE_SIZE) {
            raster
        } else {
            resize_bilinear(&raster, TILE_SIZE, TILE_SIZE)?
        };
        channels.push(normalize(&raster, table)?);
    }
    ImageStack::new(satellite, first.lon, first.lat, first.date, channels)
}

/// Reads the tiles of a band-complete record set and assembles the stack.
pub fn load_stack(records: &[TileRecord], table: &NormalizationTable) -> Result<ImageStack> {
    let rasters = records
        .iter()
        .map(|r| {
            let (Some(satellite), Some(band), Some(date)) = (r.satellite, r.band.clone(), r.date()) else {
                return Err(Error::MixedTiles {
                    detail: format!("{} is not an imagery tile", r.path.display()),
                });
            };
            Ok(read_tiff(&r.path)?.with_meta(BandMeta {
                satellite,
                band,
                lon: r.lon.clone(),
                lat: r.lat.clone(),
                date,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_stack(rasters, table)
}

// Stack files: "FGST", version u32, width u32, height u32, channels u32,
// then channel-major f32 LE samples; metadata lives in a JSON sidecar.
const FGST_MAGIC: &[u8; 4] = b"FGST";
const FGST_VERSION: u32 = 1;
const FGST_HEADER_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackSidecar {
    pub satellite: Satellite,
    pub bands: Vec<String>,
    pub lon: GridCoord,
    pub lat: GridCoord,
    pub year: i32,
    pub month: u32,
    pub day: u32,
}

/// Writes `{stem}.fgst` and `{stem}.json` into `dir`; returns the data path.
pub fn write_stack(stack: &ImageStack, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let stem = stack.stem();
    let data_path = dir.join(format!("{stem}.fgst"));
    let n = TILE_SIZE * TILE_SIZE;
    let mut bytes = Vec::with_capacity(FGST_HEADER_LEN + 4 * n * stack.channels.len());
    bytes.extend_from_slice(FGST_MAGIC);
    for word in [FGST_VERSION, TILE_SIZE as u32, TILE_SIZE as u32, stack.channels.len() as u32] {
        bytes.extend_from_slice(&word.to_le_bytes());
    }
    for ch in &stack.channels {
        for v in ch.values() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(&data_path, bytes).map_err(|e| Error::io(&data_path, e))?;
    let sidecar = StackSidecar {
        satellite: stack.satellite,
        bands: stack.bands().iter().map(|b| b.to_string()).collect(),
        lon: stack.lon.clone(),
        lat: stack.lat.clone(),
        year: stack.date.year,
        month: stack.date.month,
        day: stack.date.day,
    };
    let json_path = dir.join(format!("{stem}.json"));
    let json = serde_json::to_vec_pretty(&sidecar).expect("sidecar serializes");
    fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    Ok(data_path)
}

/// Reads a stack written by [`write_stack`], sidecar included.
pub fn read_stack(path: impl AsRef<Path>) -> Result<ImageStack> {
    let path = path.as_ref();
    let json_path = path.with_extension("json");
    let text = fs::read(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let sidecar: StackSidecar = serde_json::from_slice(&text).map_err(|e| Error::Json {
        path: json_path.clone(),
        reason: e.to_string(),
    })?;
    let lon = GridCoord::longitude(sidecar.lon.as_str())?;
    let lat = GridCoord::latitude(sidecar.lat.as_str())?;
    let date = Date::new(sidecar.year, sidecar.month, sidecar.day)?;
    let bands = select_bands(sidecar.satellite);
    if sidecar.bands != bands {
        return Err(Error::Json {
            path: json_path,
            reason: format!("band list {:?} differs from {:?}", sidecar.bands, bands),
        });
    }

    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < FGST_HEADER_LEN || &bytes[..4] != FGST_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
        });
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as u64;
    if word(4) != FGST_VERSION as u64 {
        return Err(Error::UnsupportedVersion {
            path: path.to_path_buf(),
            version: word(4) as u32,
        });
    }
    let (width, height, count) = (word(8), word(12), word(16));
    let expected = FGST_HEADER_LEN as u64 + 4 * width * height * count;
    if bytes.len() as u64 != expected {
        return Err(Error::LengthMismatch {
            path: path.to_path_buf(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    let plane = (width * height) as usize;
    let channels = bytes[FGST_HEADER_LEN..]
        .chunks_exact(4 * plane.max(1))
        .zip(bands)
        .map(|(chunk, band)| {
            let values = chunk
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Ok(BandRaster::new(width as usize, height as usize, values)?.with_meta(BandMeta {
                satellite: sidecar.satellite,
                band: band.to_string(),
                lon: lon.clone(),
                lat: lat.clone(),
                date,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    ImageStack::new(sidecar.satellite, lon, lat, date, channels)
}
