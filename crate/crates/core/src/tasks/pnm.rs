//! Netpbm grayscale/color images (P2, P3, P5, P6).
//!
//! Header grammar: magic, then whitespace-separated width, height and
//! maxval, with `#` comments running to end of line allowed anywhere before
//! maxval. Raw formats take exactly one whitespace byte after maxval, then
//! the samples (one byte each if maxval < 256, else two bytes big-endian).

use std::fs;
use std::path::Path;

use crate::error::{Result, TecuError};
use crate::problem::Mat;

pub const MAX_MAXVAL: u32 = 65535;

/// Interleaved pixel buffer with samples in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// 1 (gray) or 3 (RGB).
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(TecuError::invalid(format!("image must have 1 or 3 channels, got {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(TecuError::invalid(format!(
                "image buffer has {} samples, expected {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    /// Single-channel image from a `height × width` matrix.
    pub fn from_gray(m: &Mat) -> Self {
        let (h, w) = m.shape();
        let data = (0..h).flat_map(|i| (0..w).map(move |j| m[(i, j)])).collect();
        Image {
            width: w,
            height: h,
            channels: 1,
            data,
        }
    }

    pub fn sample(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    pub fn channel(&self, ch: usize) -> Mat {
        Mat::from_fn(self.height, self.width, |i, j| self.sample(i, j, ch))
    }

    /// Per-pixel maximum over channels.
    pub fn max_channel(&self) -> Mat {
        Mat::from_fn(self.height, self.width, |i, j| {
            (0..self.channels).map(|c| self.sample(i, j, c)).fold(f64::NEG_INFINITY, f64::max)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PnmFormat {
    /// ASCII samples (P2/P3) instead of binary (P5/P6).
    pub plain: bool,
    pub maxval: u32,
}

impl Default for PnmFormat {
    fn default() -> Self {
        PnmFormat {
            plain: false,
            maxval: 255,
        }
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> TecuError {
        TecuError::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_space(&mut self, comments: bool) {
        while self.pos < self.buf.len() {
            let b = self.buf[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if comments && b == b'#' {
                while self.pos < self.buf.len() && self.buf[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str, comments: bool) -> Result<u32> {
        self.skip_space(comments);
        let start = self.pos;
        while self.pos < self.buf.len() && self.buf[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            if self.pos >= self.buf.len() {
                return Err(self.err(format!("unexpected end of data reading {what}")));
            }
            return Err(self.err(format!("expected digit for {what}, found byte 0x{:02x}", self.buf[self.pos])));
        }
        let text = std::str::from_utf8(&self.buf[start..self.pos]).expect("ascii digits");
        text.parse::<u32>().map_err(|_| TecuError::Parse {
            offset: start,
            message: format!("{what} out of range: {text}"),
        })
    }
}

/// Decodes an in-memory PNM file.
pub fn decode_pnm(buf: &[u8]) -> Result<Image> {
    let mut cur = Cursor { buf, pos: 0 };
    if buf.len() < 2 || buf[0] != b'P' {
        return Err(cur.err("missing 'P' magic"));
    }
    let magic = std::str::from_utf8(&buf[..2]).unwrap_or("P?");
    let (plain, channels) = match buf[1] {
        b'2' => (true, 1),
        b'3' => (true, 3),
        b'5' => (false, 1),
        b'6' => (false, 3),
        _ => return Err(cur.err(format!("unsupported magic {magic}"))),
    };
    cur.pos = 2;
    if cur.pos < buf.len() && !buf[cur.pos].is_ascii_whitespace() && buf[cur.pos] != b'#' {
        return Err(cur.err("expected whitespace after magic"));
    }
    let width = cur.number("width", true)? as usize;
    let height = cur.number("height", true)? as usize;
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval", true)?;
    if maxval == 0 || maxval > MAX_MAXVAL {
        return Err(TecuError::Parse {
            offset: maxval_at,
            message: format!("maxval must lie in [1, {MAX_MAXVAL}], got {maxval}"),
        });
    }
    if width == 0 || height == 0 {
        return Err(cur.err("image dimensions must be positive"));
    }
    let count = width
        .checked_mul(height)
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| cur.err("image dimensions overflow"))?;
    let scale = maxval as f64;
    let mut data = Vec::with_capacity(count);
    if plain {
        for _ in 0..count {
            let v = cur.number("sample", false)?;
            if v > maxval {
                return Err(cur.err(format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(v as f64 / scale);
        }
    } else {
        if cur.pos >= buf.len() || !buf[cur.pos].is_ascii_whitespace() {
            return Err(cur.err("expected single whitespace byte after maxval"));
        }
        cur.pos += 1;
        let width_bytes = if maxval < 256 { 1 } else { 2 };
        let need = count * width_bytes;
        if buf.len() - cur.pos < need {
            cur.pos = buf.len();
            return Err(cur.err(format!("truncated payload: expected {need} bytes")));
        }
        for k in 0..count {
            let at = cur.pos + k * width_bytes;
            let v = if width_bytes == 1 {
                buf[at] as u32
            } else {
                u16::from_be_bytes([buf[at], buf[at + 1]]) as u32
            };
            if v > maxval {
                cur.pos = at;
                return Err(cur.err(format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(v as f64 / scale);
        }
    }
    Ok(Image {
        width,
        height,
        channels,
        data,
    })
}

/// Encodes an image. Samples are clamped to `[0, 1]` and rounded.
pub fn encode_pnm(img: &Image, format: PnmFormat) -> Result<Vec<u8>> {
    if format.maxval == 0 || format.maxval > MAX_MAXVAL {
        return Err(TecuError::invalid(format!("maxval must lie in [1, {MAX_MAXVAL}]")));
    }
    let magic = match (format.plain, img.channels) {
        (true, 1) => "P2",
        (true, 3) => "P3",
        (false, 1) => "P5",
        (false, 3) => "P6",
        (_, c) => return Err(TecuError::invalid(format!("cannot encode {c}-channel image"))),
    };
    let scale = format.maxval as f64;
    let quant = |v: f64| (v.clamp(0.0, 1.0) * scale).round() as u32;
    let mut out = format!("{magic}\n{} {}\n{}\n", img.width, img.height, format.maxval).into_bytes();
    if format.plain {
        let row_len = img.width * img.channels;
        for row in img.data.chunks(row_len.max(1)) {
            let line: Vec<String> = row.iter().map(|v| quant(*v).to_string()).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    } else if format.maxval < 256 {
        out.extend(img.data.iter().map(|v| quant(*v) as u8));
    } else {
        for v in &img.data {
            out.extend_from_slice(&(quant(*v) as u16).to_be_bytes());
        }
    }
    Ok(out)
}

pub fn read_image_pnm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|e| TecuError::io(path, e))?;
    decode_pnm(&buf)
}

/// Writes binary PGM/PPM at maxval 255.
pub fn write_image_pnm(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    write_image_pnm_with(path, img, PnmFormat::default())
}

pub fn write_image_pnm_with(path: impl AsRef<Path>, img: &Image, format: PnmFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pnm(img, format)?;
    fs::write(path, bytes).map_err(|e| TecuError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_white_pixel() {
        let img = decode_pnm(b"P2\n1 1\n255\n255\n").unwrap();
        assert_eq!(img.channel(0), Mat::from_element(1, 1, 1.0));
    }

    #[test]
    fn comments_before_maxval() {
        let img = decode_pnm(b"P2 # gray\n# size next\n2 1 # w h\n4\n0 2\n").unwrap();
        assert_eq!(img.data, vec![0.0, 0.5]);
    }

    #[test]
    fn p7_rejected_by_name() {
        let err = decode_pnm(b"P7\nWIDTH 1\n").unwrap_err();
        assert!(err.to_string().contains("P7"), "{err}");
    }

    #[test]
    fn truncated_raw_payload() {
        match decode_pnm(b"P5\n2 2\n255\n\x00\x01\x02").unwrap_err() {
            TecuError::Parse { offset, .. } => assert_eq!(offset, 14),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sixteen_bit_big_endian() {
        let img = decode_pnm(b"P5\n1 1\n65535\n\x80\x00").unwrap();
        assert!((img.data[0] - 32768.0 / 65535.0).abs() < 1e-15);
    }

    #[test]
    fn malformed_dimension_reports_offset() {
        match decode_pnm(b"P2\n1 x\n255\n0\n").unwrap_err() {
            TecuError::Parse { offset, .. } => assert_eq!(offset, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn plain_color_round_trip() {
        let img = Image::new(2, 1, 3, vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]).unwrap();
        let fmt = PnmFormat {
            plain: true,
            maxval: 1000,
        };
        let back = decode_pnm(&encode_pnm(&img, fmt).unwrap()).unwrap();
        for (a, b) in img.data.iter().zip(&back.data) {
            assert!((a - b).abs() <= 0.5 / 1000.0);
        }
    }
}
