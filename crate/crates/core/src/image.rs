//! 8-bit RGB rasters and the handful of operations the pipeline needs on them.

use std::fs;
use std::io::{BufWriter, Cursor, Write};
use std::path::Path;

use crate::{Error, Result};

/// Row-major 8-bit RGB image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions(format!(
                "image must be non-empty, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidDimensions(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Image filled with a single color.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        self.pixels[y * self.width + x] = rgb;
    }

    /// Bilinear resize with half-pixel-center sampling.
    pub fn resize(&self, width: usize, height: usize) -> Result<Image> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions(format!(
                "resize target must be non-zero, got {width}x{height}"
            )));
        }
        if width == self.width && height == self.height {
            return Ok(self.clone());
        }
        let xs = sample_positions(self.width, width);
        let ys = sample_positions(self.height, height);
        let mut pixels = Vec::with_capacity(width * height);
        for &(y0, y1, fy) in &ys {
            for &(x0, x1, fx) in &xs {
                let p00 = self.get(x0, y0);
                let p10 = self.get(x1, y0);
                let p01 = self.get(x0, y1);
                let p11 = self.get(x1, y1);
                let mut out = [0u8; 3];
                for c in 0..3 {
                    let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
                    let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
                    let v = top * (1.0 - fy) + bottom * fy;
                    out[c] = v.round().clamp(0.0, 255.0) as u8;
                }
                pixels.push(out);
            }
        }
        Image::new(width, height, pixels)
    }

    /// Lossless rotation by a multiple of 90° (counterclockwise as displayed).
    pub fn rotate(&self, rotation: Rotation) -> Image {
        let (w, h) = (self.width, self.height);
        match rotation {
            Rotation::R0 => Ok(self.clone()),
            // out(x, y) = in(w - 1 - y, x)
            Rotation::R90 => Image::from_fn(h, w, |x, y| self.get(w - 1 - y, x)),
            Rotation::R180 => Image::from_fn(w, h, |x, y| self.get(w - 1 - x, h - 1 - y)),
            Rotation::R270 => Image::from_fn(h, w, |x, y| self.get(y, h - 1 - x)),
        }
        .expect("rotation preserves a valid shape")
    }
}

/// For each output coordinate: the two source samples and the blend weight.
fn sample_positions(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, s - lo as f64)
        })
        .collect()
}

/// Right-angle rotations; anything else would need resampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Rotation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn from_degrees(deg: i64) -> Result<Self> {
        match deg.rem_euclid(360) {
            0 => Ok(Rotation::R0),
            90 => Ok(Rotation::R90),
            180 => Ok(Rotation::R180),
            270 => Ok(Rotation::R270),
            _ => Err(Error::UnsupportedRotation(deg)),
        }
    }

    pub fn degrees(self) -> u32 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    /// Applying `self` and then `other`.
    pub fn then(self, other: Rotation) -> Rotation {
        Rotation::from_degrees(i64::from(self.degrees() + other.degrees())).expect("right angle")
    }
}

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Loads a binary PPM (P6, maxval 255) or an 8-bit RGB PNG.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

/// Decodes an in-memory PPM or PNG file, sniffing the format from its magic bytes.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P6") {
        decode_ppm(bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && (b'1'..=b'7').contains(&bytes[1]) {
        Err(Error::UnsupportedFormat(format!(
            "netpbm variant P{} (only binary RGB P6 is accepted)",
            bytes[1] as char
        )))
    } else {
        Err(Error::UnsupportedFormat(
            "not a PPM (P6) or PNG file".to_string(),
        ))
    }
}

/// Writes PNG when the extension is `.png`, PPM (P6) otherwise.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png {
        encode_png(img)?
    } else {
        encode_ppm(img)
    };
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn encode_ppm(img: &Image) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + img.pixels.len() * 3);
    out.extend_from_slice(header.as_bytes());
    for p in &img.pixels {
        out.extend_from_slice(p);
    }
    out
}

fn decode_ppm(bytes: &[u8]) -> Result<Image> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (k, field) in fields.iter_mut().enumerate() {
        // whitespace and comments
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
            return Err(Error::MalformedImage(format!(
                "expected {} in PPM header",
                ["width", "height", "maxval"][k]
            )));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::MalformedImage(format!("header value {text:?} out of range")))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(Error::MalformedImage(
                "missing whitespace after maxval".to_string(),
            ))
        }
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!(
            "PPM maxval {maxval} (only 8-bit, maxval 255, is accepted)"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::MalformedImage(format!(
            "zero-sized image {width}x{height}"
        )));
    }
    let needed = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| Error::MalformedImage("image dimensions overflow".to_string()))?;
    let payload = &bytes[pos..];
    if payload.len() < needed {
        return Err(Error::MalformedImage(format!(
            "truncated pixel data: expected {needed} bytes, found {}",
            payload.len()
        )));
    }
    let pixels = payload[..needed]
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    Image::new(width, height, pixels)
}

fn decode_png(bytes: &[u8]) -> Result<Image> {
    let malformed = |e: png::DecodingError| Error::MalformedImage(e.to_string());
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(malformed)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::MalformedImage("PNG too large".to_string()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(malformed)?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!(
            "PNG {:?}/{:?} (only 8-bit RGB is accepted)",
            info.color_type, info.bit_depth
        )));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let pixels = buf[..info.buffer_size()]
        .chunks_exact(info.line_size)
        .flat_map(|row| row[..w * 3].chunks_exact(3).map(|c| [c[0], c[1], c[2]]))
        .collect();
    Image::new(w, h, pixels)
}

fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let to_err = |e: png::EncodingError| Error::UnsupportedFormat(e.to_string());
    {
        let mut encoder = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header().map_err(to_err)?;
        let data: Vec<u8> = img.pixels.iter().flatten().copied().collect();
        writer.write_image_data(&data).map_err(to_err)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ppm(w: usize, h: usize, data: &[u8]) -> Vec<u8> {
        let mut v = format!("P6\n{w} {h}\n255\n").into_bytes();
        v.extend_from_slice(data);
        v
    }

    #[test]
    fn decodes_black_2x2() {
        let img = decode_image(&ppm(2, 2, &[0; 12])).unwrap();
        assert_eq!(img, Image::filled(2, 2, [0, 0, 0]).unwrap());
    }

    #[test]
    fn decodes_single_red_pixel() {
        let img = decode_image(&ppm(1, 1, &[255, 0, 0])).unwrap();
        assert_eq!(img.pixels(), &[[255, 0, 0]]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P6 # made by hand\n1 # w\n1\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        assert_eq!(decode_image(&bytes).unwrap().pixels(), &[[1, 2, 3]]);
    }

    #[test]
    fn truncated_payload_is_malformed() {
        let err = decode_image(&ppm(2, 2, &[0; 11])).unwrap_err();
        assert!(matches!(err, Error::MalformedImage(_)), "{err}");
    }

    #[test]
    fn bad_header_is_malformed() {
        let err = decode_image(b"P6\n2 x\n255\n").unwrap_err();
        assert!(matches!(err, Error::MalformedImage(_)), "{err}");
    }

    #[test]
    fn other_formats_are_unsupported() {
        for bytes in [
            &b"P3\n1 1\n255\n0 0 0\n"[..],
            b"GIF89a",
            b"P6\n1 1\n65535\n",
        ] {
            let err = decode_image(bytes).unwrap_err();
            assert!(matches!(err, Error::UnsupportedFormat(_)), "{err}");
        }
    }

    #[test]
    fn missing_file_is_not_found() {
        let err = load_image("/definitely/not/here.ppm").unwrap_err();
        assert!(matches!(err, Error::NotFound(_)), "{err}");
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let img = Image::filled(1, 1, [0, 0, 0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        // a directory cannot be opened for writing
        let err = save_image(&img, dir.path()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }

    #[test]
    fn png_round_trip() {
        let img = Image::from_fn(5, 3, |x, y| [x as u8 * 40, y as u8 * 70, 9]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        save_image(&img, &path).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);
    }

    #[test]
    fn resize_same_size_is_identity() {
        let img = Image::from_fn(7, 5, |x, y| [(x * 30) as u8, (y * 50) as u8, 200]).unwrap();
        assert_eq!(img.resize(7, 5).unwrap(), img);
    }

    #[test]
    fn resize_checkerboard_averages() {
        let img = Image::from_fn(2, 2, |x, y| {
            if (x + y) % 2 == 0 {
                [0, 0, 0]
            } else {
                [255, 255, 255]
            }
        })
        .unwrap();
        let out = img.resize(1, 1).unwrap();
        for c in out.get(0, 0) {
            assert!(c > 0 && c < 255);
        }
    }

    #[test]
    fn resize_dimensions() {
        let img = Image::filled(256, 256, [10, 20, 30]).unwrap();
        let out = img.resize(128, 128).unwrap();
        assert_eq!(out.pixels().len(), 16384);
        assert!(matches!(img.resize(0, 4), Err(Error::InvalidDimensions(_))));
    }

    #[test]
    fn rotate_90_index_permutation() {
        let img = Image::from_fn(3, 2, |x, y| [x as u8, y as u8, 0]).unwrap();
        let r = img.rotate(Rotation::R90);
        assert_eq!((r.width(), r.height()), (2, 3));
        for y in 0..3 {
            for x in 0..2 {
                assert_eq!(r.get(x, y), img.get(3 - 1 - y, x));
            }
        }
        // top-right corner moves to the top-left
        assert_eq!(r.get(0, 0), img.get(2, 0));
    }

    #[test]
    fn rotations_compose() {
        let img = Image::from_fn(4, 3, |x, y| [(x * 7 + y) as u8, 1, 2]).unwrap();
        let r90 = img.rotate(Rotation::R90);
        assert_eq!(r90.rotate(Rotation::R90), img.rotate(Rotation::R180));
        assert_eq!(r90.rotate(Rotation::R180), img.rotate(Rotation::R270));
        assert_eq!(img.rotate(Rotation::R270).rotate(Rotation::R90), img);
    }

    #[test]
    fn rotation_degrees() {
        assert_eq!(Rotation::from_degrees(-90).unwrap(), Rotation::R270);
        assert_eq!(Rotation::from_degrees(360).unwrap(), Rotation::R0);
        assert!(matches!(
            Rotation::from_degrees(45),
            Err(Error::UnsupportedRotation(45))
        ));
    }
}
