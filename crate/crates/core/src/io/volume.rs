use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pnm::{decode_pgm, encode_pgm, Graymap};
use super::write_atomic;
use crate::domain::{Slice, Volume};
use crate::error::{Error, Result};

pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeMeta {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub bit_depth: u8,
}

pub fn slice_file_name(layer: usize) -> String {
    format!("slice_{layer:04}.pgm")
}

fn is_slice_file(name: &str) -> bool {
    name.strip_prefix("slice_")
        .and_then(|s| s.strip_suffix(".pgm"))
        .is_some_and(|d| d.len() >= 4 && d.bytes().all(|b| b.is_ascii_digit()))
}

/// 8-bit quantization used on write.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn to_graymap(slice: &Slice) -> Graymap {
    Graymap {
        width: slice.cols(),
        height: slice.rows(),
        maxval: 255,
        samples: slice.as_slice().iter().map(|&v| quantize(v) as u16).collect(),
    }
}

fn from_graymap(map: Graymap) -> Result<Slice> {
    let scale = map.maxval as f64;
    Slice::new(
        map.height,
        map.width,
        map.samples.into_iter().map(|v| v as f64 / scale).collect(),
    )
}

/// Writes one slice as an 8-bit P5 file.
pub fn write_slice(slice: &Slice, path: &Path) -> Result<()> {
    write_atomic(path, &encode_pgm(&to_graymap(slice)))
}

/// Reads one P5 file into `[0, 1]` intensities.
pub fn read_slice(path: &Path) -> Result<Slice> {
    let bytes = std::fs::read(path)?;
    from_graymap(decode_pgm(path, &bytes)?)
}

/// Writes a slice stack and its metadata into `dir`, creating it if needed.
pub fn write_volume(volume: &Volume, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (l, slice) in volume.slices().iter().enumerate() {
        write_slice(slice, &dir.join(slice_file_name(l)))?;
    }
    let meta = VolumeMeta {
        n1: volume.n1(),
        n2: volume.n2(),
        n3: volume.n3(),
        bit_depth: 8,
    };
    write_atomic(&dir.join(META_FILE), &serde_json::to_vec_pretty(&meta)?)
}

pub fn read_meta(dir: &Path) -> Result<VolumeMeta> {
    let path = dir.join(META_FILE);
    let meta: VolumeMeta = serde_json::from_slice(&std::fs::read(&path)?)?;
    if meta.bit_depth != 8 && meta.bit_depth != 16 {
        return Err(Error::MalformedHeader {
            path,
            reason: format!("bit_depth {} is neither 8 nor 16", meta.bit_depth),
        });
    }
    Ok(meta)
}

/// Reads a stack written by [`write_volume`] (or any conformant stack).
pub fn read_volume(dir: &Path) -> Result<Volume> {
    let meta = read_meta(dir)?;
    let mut found = 0;
    for entry in std::fs::read_dir(dir)? {
        if is_slice_file(&entry?.file_name().to_string_lossy()) {
            found += 1;
        }
    }
    if found != meta.n3 {
        return Err(Error::SliceCountMismatch {
            expected: meta.n3,
            found,
        });
    }
    let maxval = if meta.bit_depth == 8 { 255 } else { u16::MAX };
    let mut slices = Vec::with_capacity(meta.n3);
    for l in 0..meta.n3 {
        let path: PathBuf = dir.join(slice_file_name(l));
        if !path.exists() {
            return Err(Error::SliceCountMismatch {
                expected: meta.n3,
                found: l,
            });
        }
        let map = decode_pgm(&path, &std::fs::read(&path)?)?;
        if map.maxval != maxval {
            return Err(Error::MalformedHeader {
                path,
                reason: format!("maxval {} does not match bit_depth {}", map.maxval, meta.bit_depth),
            });
        }
        if (map.height, map.width) != (meta.n1, meta.n2) {
            return Err(Error::DimensionMismatch(format!(
                "{}: {}x{} slice in a {}x{} stack",
                path.display(),
                map.height,
                map.width,
                meta.n1,
                meta.n2
            )));
        }
        slices.push(from_graymap(map)?);
    }
    Volume::new(slices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use crate::domain::{RngSeed, Stream};

    fn random_volume(n1: usize, n2: usize, n3: usize, seed: u64) -> Volume {
        let mut rng = RngSeed(seed).stream(Stream::Phantom);
        Volume::new(
            (0..n3)
                .map(|_| Slice::from_fn(n1, n2, |_, _| rng.random_range(0..=255u8) as f64 / 255.0))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_slice_file_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let v = Volume::new(vec![Slice::zeros(2, 2)]).unwrap();
        write_volume(&v, dir.path()).unwrap();
        let bytes = std::fs::read(dir.path().join("slice_0000.pgm")).unwrap();
        assert_eq!(bytes, b"P5\n2 2\n255\n\0\0\0\0");
        let meta: VolumeMeta = serde_json::from_slice(&std::fs::read(dir.path().join(META_FILE)).unwrap()).unwrap();
        assert_eq!(
            meta,
            VolumeMeta {
                n1: 2,
                n2: 2,
                n3: 1,
                bit_depth: 8
            }
        );
    }

    #[test]
    fn eight_bit_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let v = random_volume(5, 7, 3, 1);
        write_volume(&v, dir.path()).unwrap();
        let back = read_volume(dir.path()).unwrap();
        assert_eq!(back, v);
        let again = tempfile::tempdir().unwrap();
        write_volume(&back, again.path()).unwrap();
        for l in 0..3 {
            let name = slice_file_name(l);
            assert_eq!(
                std::fs::read(dir.path().join(&name)).unwrap(),
                std::fs::read(again.path().join(&name)).unwrap()
            );
        }
    }

    #[test]
    fn missing_slice_is_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write_volume(&random_volume(3, 3, 2, 2), dir.path()).unwrap();
        let meta = VolumeMeta {
            n1: 3,
            n2: 3,
            n3: 3,
            bit_depth: 8,
        };
        std::fs::write(dir.path().join(META_FILE), serde_json::to_vec(&meta).unwrap()).unwrap();
        assert!(matches!(
            read_volume(dir.path()),
            Err(Error::SliceCountMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn wrong_slice_shape_is_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write_volume(&random_volume(3, 3, 1, 3), dir.path()).unwrap();
        write_slice(&Slice::zeros(3, 4), &dir.path().join(slice_file_name(0))).unwrap();
        assert!(matches!(read_volume(dir.path()), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn sixteen_bit_stack_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let map = Graymap {
            width: 2,
            height: 1,
            maxval: 65535,
            samples: vec![0, 65535],
        };
        std::fs::write(dir.path().join(slice_file_name(0)), encode_pgm(&map)).unwrap();
        let meta = VolumeMeta {
            n1: 1,
            n2: 2,
            n3: 1,
            bit_depth: 16,
        };
        std::fs::write(dir.path().join(META_FILE), serde_json::to_vec(&meta).unwrap()).unwrap();
        let v = read_volume(dir.path()).unwrap();
        assert_eq!(v.slice(0).as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn quantization_rounds_and_clamps() {
        assert_eq!(quantize(0.5), 128);
        assert_eq!(quantize(-0.2), 0);
        assert_eq!(quantize(1.7), 255);
        assert_eq!(quantize(1.0 / 255.0), 1);
    }
}
