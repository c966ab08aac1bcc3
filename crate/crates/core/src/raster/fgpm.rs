//! FGPM: the probability-mask exchange format.
//!
//! ```text
//! 0..4    magic "FGPM"
//! 4..8    version, u32 LE (1)
//! 8..12   width, u32 LE
//! 12..16  height, u32 LE
//! 16..    width*height f32 LE, row-major
//! ```

use std::fs;
use std::path::Path;

use super::ProbabilityMask;
use crate::error::{Error, Result};

pub const FGPM_MAGIC: &[u8; 4] = b"FGPM";
pub const FGPM_VERSION: u32 = 1;
pub const FGPM_HEADER_LEN: usize = 16;

pub fn encode_raw(mask: &ProbabilityMask) -> Vec<u8> {
    let mut out = Vec::with_capacity(FGPM_HEADER_LEN + 4 * mask.values().len());
    out.extend_from_slice(FGPM_MAGIC);
    out.extend_from_slice(&FGPM_VERSION.to_le_bytes());
    out.extend_from_slice(&(mask.width() as u32).to_le_bytes());
    out.extend_from_slice(&(mask.height() as u32).to_le_bytes());
    for v in mask.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes an FGPM byte buffer; `path` only labels errors.
pub fn decode_raw(bytes: &[u8], path: &Path) -> Result<ProbabilityMask> {
    if bytes.len() < 4 || &bytes[..4] != FGPM_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
        });
    }
    if bytes.len() < FGPM_HEADER_LEN {
        return Err(Error::LengthMismatch {
            path: path.to_path_buf(),
            expected: FGPM_HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(4);
    if version != FGPM_VERSION {
        return Err(Error::UnsupportedVersion {
            path: path.to_path_buf(),
            version,
        });
    }
    let (width, height) = (word(8) as u64, word(12) as u64);
    let expected = FGPM_HEADER_LEN as u64 + 4 * width * height;
    if bytes.len() as u64 != expected {
        return Err(Error::LengthMismatch {
            path: path.to_path_buf(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    let values = bytes[FGPM_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ProbabilityMask::new(width as usize, height as usize, values)
}

pub fn read_raw(path: impl AsRef<Path>) -> Result<ProbabilityMask> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_raw(&bytes, path)
}

pub fn write_raw(mask: &ProbabilityMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_raw(mask)).map_err(|e| Error::io(path, e))
}
