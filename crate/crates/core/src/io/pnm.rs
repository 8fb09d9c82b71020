//! Binary PGM (`P5`) and PPM (`P6`) with 8-bit samples.

use crate::error::{Error, Result};
use crate::tensor::ImageTensor;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(start as u64, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| Error::format(start as u64, format!("{what} out of range")))
    }
}

/// Decodes a P5 or P6 image to a 1- or 3-band tensor scaled by 1/255.
pub fn decode(bytes: &[u8]) -> Result<ImageTensor> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(Error::format(0, "bad magic, expected P5 or P6")),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    cur.skip_space_and_comments();
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(Error::format(
            maxval_at as u64,
            format!("only 8-bit maxval 255 is supported, got {maxval}"),
        ));
    }
    if width == 0 || height == 0 {
        return Err(Error::format(2, "zero image dimension"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::format(cur.pos as u64, "missing whitespace before raster")),
    }
    let n = width * height * channels;
    let raster = bytes
        .get(cur.pos..cur.pos + n)
        .ok_or_else(|| Error::format(bytes.len() as u64, format!("raster truncated, expected {n} bytes")))?;
    let plane = width * height;
    let mut data = vec![0.0f32; n];
    for (i, &v) in raster.iter().enumerate() {
        let (pixel, c) = (i / channels, i % channels);
        data[c * plane + pixel] = v as f32 / 255.0;
    }
    ImageTensor::from_vec(channels, height, width, data)
}

/// Encodes a 1-band tensor as P5 or a 3-band tensor as P6, rounding to 8 bits.
pub fn encode(t: &ImageTensor) -> Result<Vec<u8>> {
    let (c, h, w) = t.shape();
    let magic = match c {
        1 => "P5",
        3 => "P6",
        _ => {
            return Err(Error::ShapeError(format!(
                "PNM holds 1 or 3 bands, got {c}"
            )))
        }
    };
    let mut out = format!("{magic}\n{w} {h}\n255\n").into_bytes();
    let plane = h * w;
    for p in 0..plane {
        for ch in 0..c {
            let v = t.data()[ch * plane + p].clamp(0.0, 1.0);
            out.push((v * 255.0).round() as u8);
        }
    }
    Ok(out)
}
