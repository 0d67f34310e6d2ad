//! Binary Netpbm: P6 (RGB) frames and P5 (8-bit gray) masks.
//!
//! Writers always emit `P6\n{w} {h}\n255\n` / `P5\n{w} {h}\n255\n` followed by
//! raw samples. Readers accept any whitespace and `#` comments in the header.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub fn encode_ppm(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    encode("P6", width, height, rgb)
}

pub fn encode_pgm(width: usize, height: usize, gray: &[u8]) -> Vec<u8> {
    encode("P5", width, height, gray)
}

fn encode(magic: &str, width: usize, height: usize, samples: &[u8]) -> Vec<u8> {
    let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(samples);
    out
}

/// Decoded image: `(width, height, samples)`.
pub type Raster = (usize, usize, Vec<u8>);

pub fn decode_ppm(bytes: &[u8], path: &Path) -> Result<Raster> {
    decode(bytes, b"P6", 3, path)
}

pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<Raster> {
    decode(bytes, b"P5", 1, path)
}

fn decode(bytes: &[u8], magic: &[u8; 2], channels: usize, path: &Path) -> Result<Raster> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(Error::format(
            path,
            format!("expected magic {}", String::from_utf8_lossy(magic)),
        ));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // skip whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            let name = ["width", "height", "maxval"][i];
            return Err(Error::format(path, format!("malformed header: missing {name}")));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(path, "malformed header: number out of range"))?;
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(path, format!("unsupported maxval {maxval}")));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::format(path, "malformed header: no separator before raster"));
    }
    pos += 1;
    let expected = width * height * channels;
    let raster = &bytes[pos..];
    if raster.len() != expected {
        return Err(Error::format(
            path,
            format!("expected {expected} raster bytes, found {}", raster.len()),
        ));
    }
    Ok((width, height, raster.to_vec()))
}

pub fn read_ppm(path: &Path) -> Result<Raster> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes, path)
}

pub fn read_pgm(path: &Path) -> Result<Raster> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, path)
}

pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    fs::write(path, encode_ppm(width, height, rgb)).map_err(|e| Error::io(path, e))
}

pub fn write_pgm(path: &Path, width: usize, height: usize, gray: &[u8]) -> Result<()> {
    fs::write(path, encode_pgm(width, height, gray)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_exact() {
        let bytes = encode_ppm(2, 1, &[1, 2, 3, 4, 5, 6]);
        assert_eq!(&bytes[..11], b"P6\n2 1\n255\n");
        assert_eq!(&bytes[11..], &[1, 2, 3, 4, 5, 6]);
        assert_eq!(&encode_pgm(1, 1, &[9])[..], b"P5\n1 1\n255\n\x09");
    }

    #[test]
    fn reads_comments_and_odd_whitespace() {
        let bytes = b"P5 # made by hand\n3\t1 # dims\n 255\n\x01\x02\x03";
        let (w, h, px) = decode_pgm(bytes, Path::new("x.pgm")).unwrap();
        assert_eq!((w, h, px), (3, 1, vec![1, 2, 3]));
    }

    #[test]
    fn rejects_malformed() {
        let p = Path::new("masks/00001.pgm");
        assert!(decode_pgm(b"P6\n1 1\n255\n\x00\x00\x00", p).is_err());
        assert!(decode_pgm(b"P5\n1\n", p).is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\x00", p).is_err());
        assert!(decode_pgm(b"P5\n1 1\n65535\n\x00\x00", p).is_err());
        let err = decode_pgm(b"P5\n2 2\n255\n\x00", p).unwrap_err();
        assert!(err.to_string().contains("masks/00001.pgm"));
    }
}
