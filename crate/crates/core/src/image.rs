//! Grayscale PGM (P2/P5) reading and P5 writing, pixels in `[0, 1]`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub height: usize,
    pub width: usize,
    /// Row-major pixels.
    pub pixels: Vec<f64>,
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Header tokens separated by whitespace, skipping `#` comments.
struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn token(&mut self) -> Option<&str> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).ok()
    }

    fn number(&mut self, path: &Path, what: &str) -> Result<usize> {
        let tok = self
            .token()
            .ok_or_else(|| malformed(path, format!("missing {what}")))?;
        tok.parse()
            .map_err(|_| malformed(path, format!("bad {what} `{tok}`")))
    }
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes, path)
}

pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let mut h = Header { bytes, pos: 0 };
    let magic = h.token().ok_or_else(|| malformed(path, "empty file"))?.to_string();
    if magic != "P2" && magic != "P5" {
        return Err(malformed(path, format!("unsupported magic `{magic}`")));
    }
    let width = h.number(path, "width")?;
    let height = h.number(path, "height")?;
    let maxval = h.number(path, "maxval")?;
    if width == 0 || height == 0 {
        return Err(malformed(path, "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(malformed(path, format!("maxval {maxval} outside 1..=65535")));
    }
    let count = width * height;
    let scale = maxval as f64;
    let mut pixels = Vec::with_capacity(count);
    if magic == "P2" {
        for _ in 0..count {
            let tok = h.token().ok_or_else(|| Error::Truncated {
                path: path.to_path_buf(),
            })?;
            let v: usize = tok
                .parse()
                .map_err(|_| malformed(path, format!("bad pixel `{tok}`")))?;
            if v > maxval {
                return Err(malformed(path, format!("pixel {v} exceeds maxval")));
            }
            pixels.push(v as f64 / scale);
        }
    } else {
        // exactly one whitespace byte separates the header from the raster
        let start = h.pos + 1;
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        if bytes.len() < start + need {
            return Err(Error::Truncated {
                path: path.to_path_buf(),
            });
        }
        let data = &bytes[start..start + need];
        if wide {
            for p in data.chunks_exact(2) {
                pixels.push(u16::from_be_bytes([p[0], p[1]]) as f64 / scale);
            }
        } else {
            pixels.extend(data.iter().map(|&v| v as f64 / scale));
        }
    }
    Ok(GrayImage {
        height,
        width,
        pixels,
    })
}

/// Quantize to 8 bits: values are clamped to `[0, 1]` and rounded half away
/// from zero.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.pixels.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn write_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    if img.pixels.len() != img.height * img.width {
        return Err(Error::LengthMismatch {
            expected: img.height * img.width,
            got: img.pixels.len(),
        });
    }
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn parse(s: &[u8]) -> Result<GrayImage> {
        parse_pgm(s, Path::new("mem.pgm"))
    }

    #[test]
    fn ascii_example() {
        let img = parse(b"P2\n2 2\n255\n0 255 255 0").unwrap();
        assert_eq!((img.height, img.width), (2, 2));
        assert_eq!(img.pixels, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn comments_and_16_bit() {
        let img = parse(b"P2 # c\n# more\n1 2\n1000\n500\n1000\n").unwrap();
        assert_eq!(img.pixels, vec![0.5, 1.0]);
        let mut raw = b"P5\n2 1\n65535\n".to_vec();
        raw.extend_from_slice(&[0xFF, 0xFF, 0x00, 0x00]);
        assert_eq!(parse(&raw).unwrap().pixels, vec![1.0, 0.0]);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(parse(b"P2\n2 2\n0\n0 0 0 0"), Err(Error::MalformedHeader { .. })));
        assert!(matches!(parse(b"P3\n1 1\n255\n0"), Err(Error::MalformedHeader { .. })));
        assert!(matches!(parse(b"P2\n2 2\n70000\n0 0 0 0"), Err(Error::MalformedHeader { .. })));
        assert!(matches!(parse(b"P2\n2 2\n255\n0 0 0"), Err(Error::Truncated { .. })));
        assert!(matches!(parse(b"P5\n2 2\n255\n\x00\x01"), Err(Error::Truncated { .. })));
    }

    #[test]
    fn roundtrip_error_is_half_a_level() {
        let mut rng = SplitMix64::new(11);
        let pixels: Vec<f64> = (0..35 * 17).map(|_| rng.uniform()).collect();
        let img = GrayImage {
            height: 35,
            width: 17,
            pixels,
        };
        let back = parse(&encode_pgm(&img)).unwrap();
        for (a, b) in img.pixels.iter().zip(&back.pixels) {
            assert!((a - b).abs() <= 1.0 / 510.0 + 1e-15);
        }
    }

    #[test]
    fn rounds_half_away_from_zero() {
        let img = GrayImage {
            height: 1,
            width: 2,
            pixels: vec![0.5 / 255.0, 1.5 / 255.0],
        };
        let bytes = encode_pgm(&img);
        assert_eq!(&bytes[bytes.len() - 2..], &[1, 2]);
    }
}
