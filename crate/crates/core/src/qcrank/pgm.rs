//! Binary PGM (`P5`, maxval 255) images.

use std::path::Path;

use super::QCrankError;

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageGray {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageGray {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, QCrankError> {
        if width == 0 || height == 0 {
            return Err(QCrankError::Image(format!("empty image {width}x{height}")));
        }
        if width.checked_mul(height) != Some(pixels.len()) {
            return Err(QCrankError::Image(format!("{width}x{height} image given {} pixels", pixels.len())));
        }
        Ok(ImageGray { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self, QCrankError> {
        let bad = |m: &str| QCrankError::Image(format!("bad PGM: {m}"));
        if !bytes.starts_with(b"P5") {
            return Err(bad("missing P5 signature"));
        }
        let mut pos = 2;
        let mut fields = [0usize; 3];
        for f in fields.iter_mut() {
            // whitespace and comments between header fields
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
            *f = std::str::from_utf8(&bytes[start..pos])
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("expected a number in the header"))?;
        }
        if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(bad("header not terminated by whitespace"));
        }
        pos += 1;
        let [w, h, maxval] = fields;
        if maxval != 255 {
            return Err(bad(&format!("maxval {maxval}, only 255 is supported")));
        }
        let n = w.checked_mul(h).ok_or_else(|| bad("dimensions overflow"))?;
        let data = bytes.get(pos..pos + n).ok_or_else(|| bad("pixel data truncated"))?;
        ImageGray::new(w, h, data.to_vec())
    }

    pub fn read(path: &Path) -> Result<Self, QCrankError> {
        Self::from_pgm(&std::fs::read(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), QCrankError> {
        Ok(std::fs::write(path, self.to_pgm())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let img = ImageGray::new(3, 2, vec![0, 1, 2, 253, 254, 255]).unwrap();
        let bytes = img.to_pgm();
        assert_eq!(&bytes[..11], b"P5\n3 2\n255\n");
        assert_eq!(ImageGray::from_pgm(&bytes).unwrap(), img);
    }

    #[test]
    fn header_comments() {
        let mut bytes = b"P5 # made by hand\n2 # width\n1\n255\n".to_vec();
        bytes.extend([7, 9]);
        assert_eq!(ImageGray::from_pgm(&bytes).unwrap().pixels(), &[7, 9]);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(ImageGray::from_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(ImageGray::from_pgm(b"P5\n2 2\n255\n\0\0").is_err());
        assert!(ImageGray::from_pgm(b"P5\n1 1\n65535\n\0\0").is_err());
        assert!(ImageGray::new(2, 2, vec![0; 3]).is_err());
    }
}
