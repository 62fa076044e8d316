//! Netpbm graymap (PGM) reading and writing, plain (P2) and raw (P5).

use super::{GridDensity, GridGeometry};
use crate::{Error, Result};

/// A decoded graymap. Pixels are row-major, row 0 at the top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

/// A density decoded from an image, with a flag for the all-zero fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageDensity {
    pub density: GridDensity,
    /// The inverted image carried no mass and the uniform density was used instead.
    pub uniform_fallback: bool,
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len()
                    && self.bytes[self.pos] != b'\n'
                    && self.bytes[self.pos] != b'\r'
                {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedPgm(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedPgm(format!("{what} out of range")))
    }
}

pub fn parse_pgm(bytes: &[u8]) -> Result<PgmImage> {
    if bytes.len() < 2 || bytes[0] != b'P' || !(bytes[1] == b'2' || bytes[1] == b'5') {
        return Err(Error::MalformedPgm("missing P2/P5 magic number".into()));
    }
    let raw = bytes[1] == b'5';
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")? as usize;
    let height = h.number("height")? as usize;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedPgm("zero image size".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedPgm(format!(
            "maxval {maxval} not in 1..=65535"
        )));
    }
    let maxval = maxval as u16;
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::MalformedPgm("image too large".into()))?;
    let mut pixels = Vec::with_capacity(count);
    if raw {
        // exactly one whitespace byte separates the header from the raster
        if h.pos >= bytes.len() || !bytes[h.pos].is_ascii_whitespace() {
            return Err(Error::MalformedPgm(
                "missing whitespace after maxval".into(),
            ));
        }
        let data = &bytes[h.pos + 1..];
        let bpp = if maxval < 256 { 1 } else { 2 };
        if data.len() < count * bpp {
            return Err(Error::MalformedPgm(format!(
                "raster truncated: {} of {} bytes",
                data.len(),
                count * bpp
            )));
        }
        for i in 0..count {
            let v = if bpp == 1 {
                data[i] as u16
            } else {
                u16::from_be_bytes([data[2 * i], data[2 * i + 1]])
            };
            pixels.push(v);
        }
    } else {
        for _ in 0..count {
            let v = h.number("pixel")?;
            if v > 65535 {
                return Err(Error::MalformedPgm(format!("pixel value {v} too large")));
            }
            pixels.push(v as u16);
        }
    }
    if let Some(v) = pixels.iter().find(|&&v| v > maxval) {
        return Err(Error::MalformedPgm(format!(
            "pixel {v} exceeds maxval {maxval}"
        )));
    }
    Ok(PgmImage {
        width,
        height,
        maxval,
        pixels,
    })
}

/// Encodes a raw (P5) graymap.
pub fn write_pgm(img: &PgmImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    for &p in &img.pixels {
        if img.maxval < 256 {
            out.push(p as u8);
        } else {
            out.extend_from_slice(&p.to_be_bytes());
        }
    }
    out
}

/// Dark pixels carry mass: cell value `maxval - pixel`, normalized on `[0,1]^2`.
///
/// Cell `(col, row)` of the grid is pixel `(col, row)`, so axis 1 points down as in image
/// coordinates. An image with no dark pixels maps to the uniform density.
pub fn grid_from_image(bytes: &[u8]) -> Result<ImageDensity> {
    let img = parse_pgm(bytes)?;
    let geometry = GridGeometry::rect([0.0, 0.0], [1.0, 1.0], [img.width, img.height])?;
    let values: Vec<f64> = img
        .pixels
        .iter()
        .map(|&p| f64::from(img.maxval - p))
        .collect();
    if values.iter().all(|&v| v == 0.0) {
        return Ok(ImageDensity {
            density: GridDensity::uniform(geometry),
            uniform_fallback: true,
        });
    }
    Ok(ImageDensity {
        density: GridDensity::normalized(geometry, values)?,
        uniform_fallback: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_with_comments() {
        let src = b"P2\n# a comment\n3 2 # trailing\n10\n0 5 10\n1 2 3\n";
        let img = parse_pgm(src).unwrap();
        assert_eq!((img.width, img.height, img.maxval), (3, 2, 10));
        assert_eq!(img.pixels, vec![0, 5, 10, 1, 2, 3]);
    }

    #[test]
    fn raw_round_trip_8_and_16_bit() {
        for maxval in [255u16, 1000] {
            let img = PgmImage {
                width: 2,
                height: 2,
                maxval,
                pixels: vec![0, 1, maxval - 1, maxval],
            };
            assert_eq!(parse_pgm(&write_pgm(&img)).unwrap(), img);
        }
    }

    #[test]
    fn raw_raster_may_start_with_whitespace_byte() {
        let mut bytes = b"P5 2 1 255\n".to_vec();
        bytes.extend_from_slice(&[b'\n', 7]);
        assert_eq!(parse_pgm(&bytes).unwrap().pixels, vec![10, 7]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse_pgm(b"P3\n1 1\n255\n0").is_err());
        assert!(parse_pgm(b"P2\n2 2\n255\n0 1 2").is_err());
        assert!(parse_pgm(b"P2\n1 1\n10\n11").is_err());
        assert!(parse_pgm(b"P2\n1 1\n70000\n1").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\x01").is_err());
        assert!(parse_pgm(b"").is_err());
    }

    #[test]
    fn image_to_density() {
        let one = grid_from_image(b"P2 1 1 255 128").unwrap();
        assert_eq!(one.density.values(), &[1.0]);
        let two = grid_from_image(b"P2 2 1 255 0 255").unwrap();
        assert_eq!(two.density.masses(), vec![1.0, 0.0]);
        assert!(!two.uniform_fallback);
        let flat = grid_from_image(b"P2 2 2 9 4 4 4 4").unwrap();
        assert!(flat
            .density
            .masses()
            .iter()
            .all(|&m| (m - 0.25).abs() < 1e-15));
        let white = grid_from_image(b"P2 2 2 9 9 9 9 9").unwrap();
        assert!(white.uniform_fallback);
        assert_eq!(white.density, flat.density);
    }
}
