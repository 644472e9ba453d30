//! Binary Netpbm codecs: P5 graymaps and P4 bitmaps.
//!
//! Headers are `magic width height [maxval]` separated by whitespace, with
//! `#` comments allowed between tokens, followed by exactly one whitespace
//! byte and the raster. Rows are stored top to bottom, so image row `r`,
//! column `c` is linear index `r * width + c`.

use std::path::Path;

use crate::error::{Error, Result};

/// Decoded P5 raster. `samples` hold raw values in `0..=maxval`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

/// Decoded P4 raster, `true` for a set (black) pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

struct HeaderReader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn malformed(&self, reason: impl Into<String>) -> Error {
        Error::MalformedHeader {
            path: self.path.to_path_buf(),
            reason: reason.into(),
        }
    }

    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.malformed(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.malformed(format!("{what} out of range")))
    }

    /// Consumes the single whitespace byte that ends the header.
    fn end(&mut self) -> Result<&'a [u8]> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(&self.bytes[self.pos + 1..]),
            _ => Err(self.malformed("header not terminated by whitespace")),
        }
    }
}

fn check_magic(path: &Path, bytes: &[u8], expected: &'static str) -> Result<()> {
    if bytes.len() < 2 || &bytes[..2] != expected.as_bytes() {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected,
            found: String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned(),
        });
    }
    Ok(())
}

fn check_payload(path: &Path, raster: &[u8], expected: usize) -> Result<()> {
    if raster.len() < expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected,
            found: raster.len(),
        });
    }
    Ok(())
}

/// Parses a P5 file. Samples are one byte for `maxval < 256` and two
/// big-endian bytes otherwise.
pub fn decode_pgm(path: &Path, bytes: &[u8]) -> Result<Graymap> {
    check_magic(path, bytes, "P5")?;
    let mut h = HeaderReader { path, bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval == 0 || maxval > u16::MAX as usize {
        return Err(h.malformed(format!("maxval {maxval} outside 1..=65535")));
    }
    let raster = h.end()?;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| h.malformed("image dimensions overflow"))?;
    let samples: Vec<u16> = if maxval < 256 {
        check_payload(path, raster, n)?;
        raster[..n].iter().map(|&b| b as u16).collect()
    } else {
        check_payload(path, raster, 2 * n)?;
        raster[..2 * n]
            .chunks_exact(2)
            .map(|p| u16::from_be_bytes([p[0], p[1]]))
            .collect()
    };
    if let Some(v) = samples.iter().find(|&&v| v as usize > maxval) {
        return Err(h.malformed(format!("sample {v} exceeds maxval {maxval}")));
    }
    Ok(Graymap {
        width,
        height,
        maxval: maxval as u16,
        samples,
    })
}

pub fn encode_pgm(map: &Graymap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", map.width, map.height, map.maxval).into_bytes();
    if map.maxval < 256 {
        out.extend(map.samples.iter().map(|&v| v as u8));
    } else {
        for &v in &map.samples {
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

/// Parses a P4 file; rows are packed MSB first and padded to whole bytes.
pub fn decode_pbm(path: &Path, bytes: &[u8]) -> Result<Bitmap> {
    check_magic(path, bytes, "P4")?;
    let mut h = HeaderReader { path, bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let raster = h.end()?;
    let row_bytes = width.div_ceil(8);
    check_payload(path, raster, row_bytes * height)?;
    let mut bits = Vec::with_capacity(width * height);
    for r in 0..height {
        let row = &raster[r * row_bytes..(r + 1) * row_bytes];
        bits.extend((0..width).map(|c| row[c / 8] & (0x80 >> (c % 8)) != 0));
    }
    Ok(Bitmap { width, height, bits })
}

pub fn encode_pbm(map: &Bitmap) -> Vec<u8> {
    let mut out = format!("P4\n{} {}\n", map.width, map.height).into_bytes();
    let row_bytes = map.width.div_ceil(8);
    for r in 0..map.height {
        let mut row = vec![0u8; row_bytes];
        for c in 0..map.width {
            if map.bits[r * map.width + c] {
                row[c / 8] |= 0x80 >> (c % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    out
}
