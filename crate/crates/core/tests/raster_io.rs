use fg_core::raster::{
    decode_raw, encode_raw, read_label_tiff, read_mask_png, read_raw, read_tiff, write_mask_png, write_raw,
    write_tiff_f32, write_tiff_u16, write_tiff_u8,
};
use fg_core::{BandRaster, BinaryMask, ProbabilityMask};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_prob(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ProbabilityMask {
    let values = (0..w * h)
        .map(|i| match i % 17 {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random::<f32>(),
        })
        .collect();
    ProbabilityMask::new(w, h, values).unwrap()
}

#[test]
fn fgpm_round_trips_bit_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let (w, h) = (rng.random_range(1..40), rng.random_range(1..40));
        let m = random_prob(&mut rng, w, h);
        let back = decode_raw(&encode_raw(&m), std::path::Path::new("mem")).unwrap();
        assert_eq!(back.dims(), m.dims());
        assert!(back.values().iter().zip(m.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn fgpm_and_tiff_chain_preserves_values() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..100 {
        let m = random_prob(&mut rng, 256, 256);
        let raw = dir.path().join(format!("{i}.fgpm"));
        write_raw(&m, &raw).unwrap();
        let back = read_raw(&raw).unwrap();
        let tif = dir.path().join(format!("{i}.tiff"));
        write_tiff_f32(&BandRaster::new(256, 256, back.values().to_vec()).unwrap(), &tif).unwrap();
        let r = read_tiff(&tif).unwrap();
        assert!(r.values().iter().zip(m.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn integer_tiffs_decode_to_their_values() {
    let dir = tempfile::tempdir().unwrap();
    let dn: Vec<u16> = (0..85 * 85).map(|i| (i * 7 % 10_001) as u16).collect();
    let path = dir.path().join("l8.tiff");
    write_tiff_u16(85, 85, &dn, &path).unwrap();
    let r = read_tiff(&path).unwrap();
    assert_eq!((r.width(), r.height()), (85, 85));
    assert!(r.values().iter().zip(&dn).all(|(&a, &b)| a == b as f32));

    let labels: Vec<u8> = (0..64).map(|i| [0, 1, 255][i % 3]).collect();
    let path = dir.path().join("label.tiff");
    write_tiff_u8(8, 8, &labels, &path).unwrap();
    let mask = read_label_tiff(&path).unwrap();
    assert!(mask.values().iter().zip(&labels).all(|(&m, &l)| m == (l != 0) as u8));
}

#[test]
fn png_round_trip_of_random_masks() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for i in 0..20 {
        let m = BinaryMask::from_fn(256, 256, |_, _| rng.random_bool(0.3));
        let path = dir.path().join(format!("{i}.png"));
        write_mask_png(&m, &path).unwrap();
        assert_eq!(read_mask_png(&path).unwrap(), m);
    }
}

#[test]
fn probability_mask_rejects_out_of_range() {
    assert!(ProbabilityMask::new(1, 1, vec![1.0001]).is_err());
    assert!(ProbabilityMask::new(1, 1, vec![-0.0001]).is_err());
    assert!(ProbabilityMask::new(1, 1, vec![f32::NAN]).is_err());
    assert!(ProbabilityMask::new(2, 1, vec![0.0, 1.0]).is_ok());
}
