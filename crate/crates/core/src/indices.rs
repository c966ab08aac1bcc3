//! Normalized-difference spectral indices.

use crate::error::{Error, Result};
use crate::raster::BandRaster;

/// `(a - b) / (a + b)`, defined as 0 when both inputs are 0.
#[inline]
pub fn normalized_difference(a: f64, b: f64) -> f64 {
    let sum = a + b;
    if sum == 0.0 {
        0.0
    } else {
        (a - b) / sum
    }
}

/// Normalized Burn Ratio: close to 1 over closed canopy, low or negative
/// over cleared ground.
#[inline]
pub fn nbr(nir: f64, swir: f64) -> f64 {
    normalized_difference(nir, swir)
}

/// Normalized Difference Vegetation Index.
#[inline]
pub fn ndvi(nir: f64, red: f64) -> f64 {
    normalized_difference(nir, red)
}

fn lift(a: &BandRaster, b: &BandRaster, f: impl Fn(f64, f64) -> f64) -> Result<BandRaster> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::DimensionMismatch {
            expected: (a.width(), a.height()),
            actual: (b.width(), b.height()),
        });
    }
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| f(x as f64, y as f64) as f32)
        .collect();
    BandRaster::new(a.width(), a.height(), values)
}

pub fn nbr_raster(nir: &BandRaster, swir: &BandRaster) -> Result<BandRaster> {
    lift(nir, swir, nbr)
}

pub fn ndvi_raster(nir: &BandRaster, red: &BandRaster) -> Result<BandRaster> {
    lift(nir, red, ndvi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn worked_values() {
        assert_relative_eq!(nbr(0.5, 0.1), 0.4 / 0.6, epsilon = 1e-15);
        assert_relative_eq!(ndvi(0.6, 0.2), 0.5, epsilon = 1e-15);
        assert_eq!(nbr(0.0, 0.0), 0.0);
        assert_eq!(ndvi(0.0, 3.0), -1.0);
        for x in [1e-9, 0.3, 7.0, 1e6] {
            assert_eq!(nbr(x, x), 0.0);
        }
    }

    #[test]
    fn raster_lift() {
        let nir = BandRaster::new(2, 1, vec![0.5, 0.0]).unwrap();
        let swir = BandRaster::new(2, 1, vec![0.1, 0.0]).unwrap();
        let out = nbr_raster(&nir, &swir).unwrap();
        assert!((out.values()[0] - 0.666_666_7).abs() < 1e-6);
        assert_eq!(out.values()[1], 0.0);
        let other = BandRaster::new(1, 2, vec![0.1, 0.0]).unwrap();
        assert!(ndvi_raster(&nir, &other).is_err());
    }
}
