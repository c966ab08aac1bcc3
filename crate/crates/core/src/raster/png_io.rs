use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::BinaryMask;
use crate::error::{Error, Result};

fn png_err(path: &Path, reason: impl ToString) -> Error {
    Error::Png {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

/// Writes an 8-bit grayscale PNG: 255 where the mask is 1, 0 elsewhere.
pub fn write_mask_png(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), mask.width() as u32, mask.height() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(|e| png_err(path, e))?;
    let data: Vec<u8> = mask.values().iter().map(|&v| v * 255).collect();
    writer.write_image_data(&data).map_err(|e| png_err(path, e))?;
    writer.finish().map_err(|e| png_err(path, e))
}

/// Reads a mask written by [`write_mask_png`]; any pixel other than 0 or 255
/// is an error.
pub fn read_mask_png(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = png::Decoder::new(BufReader::new(file))
        .read_info()
        .map_err(|e| png_err(path, e))?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or_else(|| png_err(path, "image too large"))?];
    let info = reader.next_frame(&mut buf).map_err(|e| png_err(path, e))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(png_err(path, "expected 8-bit grayscale"));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let values = buf[..width * height]
        .iter()
        .enumerate()
        .map(|(index, &v)| match v {
            0 => Ok(0),
            255 => Ok(1),
            value => Err(Error::NotBinary { index, value }),
        })
        .collect::<Result<Vec<u8>>>()?;
    BinaryMask::new(width, height, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decode_gray(path: &Path) -> Vec<u8> {
        let mut reader = png::Decoder::new(BufReader::new(File::open(path).unwrap()))
            .read_info()
            .unwrap();
        let mut buf = vec![0; reader.output_buffer_size().unwrap()];
        let info = reader.next_frame(&mut buf).unwrap();
        assert_eq!(info.color_type, png::ColorType::Grayscale);
        assert_eq!(info.bit_depth, png::BitDepth::Eight);
        buf.truncate(info.buffer_size());
        buf
    }

    #[test]
    fn ones_and_zeros_decode_to_255_and_0() {
        let dir = tempfile::tempdir().unwrap();
        let ones = dir.path().join("ones.png");
        let zeros = dir.path().join("zeros.png");
        write_mask_png(&BinaryMask::ones(256, 256), &ones).unwrap();
        write_mask_png(&BinaryMask::zeros(256, 256), &zeros).unwrap();
        assert!(decode_gray(&ones).iter().all(|&v| v == 255));
        assert!(decode_gray(&zeros).iter().all(|&v| v == 0));
    }

    #[test]
    fn checkerboard_decodes_to_scaled_mask() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checker.png");
        let mask = BinaryMask::from_fn(256, 256, |x, y| (x + y) % 2 == 0);
        write_mask_png(&mask, &path).unwrap();
        let decoded = decode_gray(&path);
        let expected: Vec<u8> = mask.values().iter().map(|&v| 255 * v).collect();
        assert_eq!(decoded, expected);
        assert_eq!(read_mask_png(&path).unwrap(), mask);
    }
}
