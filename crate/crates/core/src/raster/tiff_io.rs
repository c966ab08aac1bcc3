use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use tiff::decoder::{Decoder, DecodingResult};
use tiff::encoder::{colortype, TiffEncoder};
use tiff::ColorType;

use super::{BandRaster, BinaryMask};
use crate::error::{Error, Result};

/// Largest accepted tile side.
pub const MAX_TIFF_SIDE: u32 = 1024;

struct Decoded {
    width: usize,
    height: usize,
    samples: usize,
    values: Vec<f32>,
}

fn unreadable(path: &Path, reason: impl ToString) -> Error {
    Error::Unreadable {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

fn decode(path: &Path, max_samples: u16) -> Result<Decoded> {
    let file = File::open(path).map_err(|e| unreadable(path, e))?;
    let len = file.metadata().map_err(|e| unreadable(path, e))?.len();
    if len == 0 {
        return Err(unreadable(path, "empty file"));
    }
    let mut decoder = Decoder::new(BufReader::new(file)).map_err(|e| unreadable(path, e))?;
    let (width, height) = decoder.dimensions().map_err(|e| unreadable(path, e))?;
    if width > MAX_TIFF_SIDE || height > MAX_TIFF_SIDE {
        return Err(Error::RasterTooLarge {
            path: path.to_path_buf(),
            width,
            height,
            max: MAX_TIFF_SIDE,
        });
    }
    let colortype = decoder.colortype().map_err(|e| unreadable(path, e))?;
    let (bits, samples) = match colortype {
        ColorType::Gray(bits) => (bits, 1),
        ColorType::Multiband {
            bit_depth,
            num_samples,
        } => (bit_depth, num_samples),
        ColorType::GrayA(bits) => (bits, 2),
        ColorType::RGB(_) | ColorType::YCbCr(_) | ColorType::Lab(_) => {
            return Err(Error::MultiBand {
                path: path.to_path_buf(),
                samples: 3,
            })
        }
        ColorType::RGBA(_) | ColorType::CMYK(_) => {
            return Err(Error::MultiBand {
                path: path.to_path_buf(),
                samples: 4,
            })
        }
        other => {
            return Err(Error::UnsupportedSampleFormat {
                path: path.to_path_buf(),
                detail: format!("{other:?}"),
            })
        }
    };
    if samples > max_samples {
        return Err(Error::MultiBand {
            path: path.to_path_buf(),
            samples,
        });
    }
    if !matches!(bits, 8 | 16 | 32 | 64) {
        return Err(Error::UnsupportedSampleFormat {
            path: path.to_path_buf(),
            detail: format!("{bits}-bit samples"),
        });
    }
    let values: Vec<f32> = match decoder.read_image().map_err(|e| unreadable(path, e))? {
        DecodingResult::U8(v) => v.into_iter().map(f32::from).collect(),
        DecodingResult::U16(v) => v.into_iter().map(f32::from).collect(),
        DecodingResult::U32(v) => v.into_iter().map(|x| x as f32).collect(),
        DecodingResult::U64(v) => v.into_iter().map(|x| x as f32).collect(),
        DecodingResult::I8(v) => v.into_iter().map(f32::from).collect(),
        DecodingResult::I16(v) => v.into_iter().map(f32::from).collect(),
        DecodingResult::I32(v) => v.into_iter().map(|x| x as f32).collect(),
        DecodingResult::I64(v) => v.into_iter().map(|x| x as f32).collect(),
        DecodingResult::F16(v) => v.into_iter().map(|x| x.to_f32()).collect(),
        DecodingResult::F32(v) => v,
        DecodingResult::F64(v) => v.into_iter().map(|x| x as f32).collect(),
    };
    let (width, height, samples) = (width as usize, height as usize, samples as usize);
    if values.len() != width * height * samples {
        return Err(unreadable(path, "decoded sample count does not match dimensions"));
    }
    Ok(Decoded {
        width,
        height,
        samples,
        values,
    })
}

/// Reads a single-band TIFF tile with its raw sample values.
///
/// Metadata is left unset; the catalog fills it from the filename.
pub fn read_tiff(path: impl AsRef<Path>) -> Result<BandRaster> {
    let path = path.as_ref();
    let decoded = decode(path, 1)?;
    BandRaster::new(decoded.width, decoded.height, decoded.values)
}

/// Reads a label tile as a binary mask (non-zero = deforested).
///
/// Two-sample labels carry the deforestation plane in sample 1.
pub fn read_label_tiff(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let decoded = decode(path, 2)?;
    let plane = decoded.samples - 1;
    let values = decoded
        .values
        .chunks_exact(decoded.samples)
        .map(|px| (px[plane] != 0.0) as u8)
        .collect();
    BinaryMask::new(decoded.width, decoded.height, values)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn encode_err(path: &Path, e: tiff::TiffError) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

pub fn write_tiff_f32(raster: &BandRaster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut encoder = TiffEncoder::new(create(path)?).map_err(|e| encode_err(path, e))?;
    encoder
        .write_image::<colortype::Gray32Float>(
            raster.width() as u32,
            raster.height() as u32,
            raster.values(),
        )
        .map_err(|e| encode_err(path, e))
}

pub fn write_tiff_u16(width: usize, height: usize, values: &[u16], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut encoder = TiffEncoder::new(create(path)?).map_err(|e| encode_err(path, e))?;
    encoder
        .write_image::<colortype::Gray16>(width as u32, height as u32, values)
        .map_err(|e| encode_err(path, e))
}

pub fn write_tiff_u8(width: usize, height: usize, values: &[u8], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut encoder = TiffEncoder::new(create(path)?).map_err(|e| encode_err(path, e))?;
    encoder
        .write_image::<colortype::Gray8>(width as u32, height as u32, values)
        .map_err(|e| encode_err(path, e))
}
