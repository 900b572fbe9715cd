//! Tensor files and PNG import/export.
//!
//! # The `.ten3` container
//!
//! ```text
//! offset  size  field
//!      0     4  magic "TEN3"
//!      4     4  u32 version = 1
//!      8     1  u8 dtype: 1 = f64, 2 = f32, 3 = u8
//!      9     3  reserved, zero
//!     12    12  u32 n1, n2, n3
//!     24     -  payload, n1*n2*n3 values, mode-1 fastest
//! ```
//!
//! Every integer and float is little-endian. Masks are stored as `u8`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::prox::SupportMask;
use crate::tensor::{Dims, Tensor3};

pub const TEN3_MAGIC: &[u8; 4] = b"TEN3";
pub const TEN3_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dtype {
    F64 = 1,
    F32 = 2,
    U8 = 3,
}

impl Dtype {
    fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(Dtype::F64),
            2 => Ok(Dtype::F32),
            3 => Ok(Dtype::U8),
            c => Err(Error::MalformedFile(format!("unknown dtype code {c}"))),
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F64 => 8,
            Dtype::F32 => 4,
            Dtype::U8 => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Ten3Payload {
    F64(Vec<f64>),
    F32(Vec<f32>),
    U8(Vec<u8>),
}

impl Ten3Payload {
    pub fn dtype(&self) -> Dtype {
        match self {
            Ten3Payload::F64(_) => Dtype::F64,
            Ten3Payload::F32(_) => Dtype::F32,
            Ten3Payload::U8(_) => Dtype::U8,
        }
    }

    fn len(&self) -> usize {
        match self {
            Ten3Payload::F64(v) => v.len(),
            Ten3Payload::F32(v) => v.len(),
            Ten3Payload::U8(v) => v.len(),
        }
    }
}

/// In-memory form of a `.ten3` file.
#[derive(Clone, Debug, PartialEq)]
pub struct Ten3File {
    pub dims: Dims,
    pub payload: Ten3Payload,
}

impl Ten3File {
    pub fn new(dims: Dims, payload: Ten3Payload) -> Result<Self> {
        if payload.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {dims} tensor",
                payload.len()
            )));
        }
        Ok(Self { dims, payload })
    }

    pub fn from_tensor(t: &Tensor3) -> Self {
        Self {
            dims: t.dims(),
            payload: Ten3Payload::F64(t.as_slice().to_vec()),
        }
    }

    pub fn from_mask(m: &SupportMask) -> Self {
        Self {
            dims: m.dims(),
            payload: Ten3Payload::U8(m.as_slice().iter().map(|&f| f as u8).collect()),
        }
    }

    /// Converts any dtype to a real tensor.
    pub fn to_tensor(&self) -> Result<Tensor3> {
        let data: Vec<f64> = match &self.payload {
            Ten3Payload::F64(v) => v.clone(),
            Ten3Payload::F32(v) => v.iter().map(|&x| f64::from(x)).collect(),
            Ten3Payload::U8(v) => v.iter().map(|&x| f64::from(x)).collect(),
        };
        let Dims { n1, n2, n3 } = self.dims;
        Tensor3::from_vec(n1, n2, n3, data)
    }

    /// Nonzero entries become observed.
    pub fn to_mask(&self) -> Result<SupportMask> {
        let flags: Vec<bool> = match &self.payload {
            Ten3Payload::F64(v) => v.iter().map(|&x| x != 0.0).collect(),
            Ten3Payload::F32(v) => v.iter().map(|&x| x != 0.0).collect(),
            Ten3Payload::U8(v) => v.iter().map(|&x| x != 0).collect(),
        };
        let Dims { n1, n2, n3 } = self.dims;
        SupportMask::from_vec(n1, n2, n3, flags)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut header = Vec::with_capacity(HEADER_LEN);
        header.extend_from_slice(TEN3_MAGIC);
        header.extend_from_slice(&TEN3_VERSION.to_le_bytes());
        header.push(self.payload.dtype() as u8);
        header.extend_from_slice(&[0, 0, 0]);
        for n in [self.dims.n1, self.dims.n2, self.dims.n3] {
            let n = u32::try_from(n)
                .map_err(|_| Error::InvalidParameter(format!("dimension {n} exceeds u32")))?;
            header.extend_from_slice(&n.to_le_bytes());
        }
        w.write_all(&header)?;
        let mut body = Vec::with_capacity(self.dims.len() * self.payload.dtype().size());
        match &self.payload {
            Ten3Payload::F64(v) => v.iter().for_each(|x| body.extend_from_slice(&x.to_le_bytes())),
            Ten3Payload::F32(v) => v.iter().for_each(|x| body.extend_from_slice(&x.to_le_bytes())),
            Ten3Payload::U8(v) => body.extend_from_slice(v),
        }
        w.write_all(&body)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|e| Error::MalformedFile(format!("short header: {e}")))?;
        if &header[0..4] != TEN3_MAGIC {
            return Err(Error::MalformedFile("missing TEN3 magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != TEN3_VERSION {
            return Err(Error::MalformedFile(format!("unsupported version {version}")));
        }
        let dtype = Dtype::from_code(header[8])?;
        if header[9..12] != [0, 0, 0] {
            return Err(Error::MalformedFile("reserved bytes are not zero".into()));
        }
        let dims = Dims::new(u32_at(12) as usize, u32_at(16) as usize, u32_at(20) as usize)
            .map_err(|e| Error::MalformedFile(e.to_string()))?;
        let mut body = vec![0u8; dims.len() * dtype.size()];
        r.read_exact(&mut body)
            .map_err(|e| Error::MalformedFile(format!("short payload: {e}")))?;
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::MalformedFile("trailing bytes after payload".into()));
        }
        let payload = match dtype {
            Dtype::F64 => Ten3Payload::F64(
                body.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            Dtype::F32 => Ten3Payload::F32(
                body.chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            Dtype::U8 => Ten3Payload::U8(body),
        };
        Ok(Self { dims, payload })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor3> {
    Ten3File::read(path)?.to_tensor()
}

pub fn save_tensor(path: impl AsRef<Path>, t: &Tensor3) -> Result<()> {
    Ten3File::from_tensor(t).write(path)
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<SupportMask> {
    Ten3File::read(path)?.to_mask()
}

pub fn save_mask(path: impl AsRef<Path>, m: &SupportMask) -> Result<()> {
    Ten3File::from_mask(m).write(path)
}

fn unreadable(path: &Path, reason: impl ToString) -> Error {
    Error::UnreadableImage {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

/// Channels of one decoded image scaled to `[0, 1]`, each column-major
/// `height x width`.
struct Decoded {
    height: usize,
    width: usize,
    channels: Vec<Vec<f64>>,
}

fn decode(path: &Path) -> Result<Decoded> {
    let img = image::open(path).map_err(|e| unreadable(path, e))?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let color = img.color();
    let gray = !color.has_color();
    let sixteen = color.bytes_per_pixel() / color.channel_count() as u8 >= 2;
    let nch = if gray { 1 } else { 3 };
    let mut channels = vec![vec![0.0; width * height]; nch];
    let mut put = |x: u32, y: u32, c: usize, v: f64| {
        channels[c][y as usize + height * x as usize] = v;
    };
    match (gray, sixteen) {
        (true, false) => {
            for (x, y, p) in img.to_luma8().enumerate_pixels() {
                put(x, y, 0, f64::from(p.0[0]) / 255.0);
            }
        }
        (true, true) => {
            for (x, y, p) in img.to_luma16().enumerate_pixels() {
                put(x, y, 0, f64::from(p.0[0]) / 65535.0);
            }
        }
        (false, false) => {
            for (x, y, p) in img.to_rgb8().enumerate_pixels() {
                for c in 0..3 {
                    put(x, y, c, f64::from(p.0[c]) / 255.0);
                }
            }
        }
        (false, true) => {
            for (x, y, p) in img.to_rgb16().enumerate_pixels() {
                for c in 0..3 {
                    put(x, y, c, f64::from(p.0[c]) / 65535.0);
                }
            }
        }
    }
    Ok(Decoded {
        height,
        width,
        channels,
    })
}

fn png_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| unreadable(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("png"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(unreadable(dir, "directory contains no PNG files"));
    }
    Ok(files)
}

/// Loads a PNG (one slice if grayscale, three if color) or a directory of
/// equally sized PNGs (one slice per file, in lexicographic order; color
/// frames are converted to luma). Values are divided by the bit-depth maximum.
pub fn load_image_stack(path: impl AsRef<Path>) -> Result<Tensor3> {
    let path = path.as_ref();
    let (height, width, slices) = if path.is_dir() {
        let mut slices = Vec::new();
        let mut shape = None;
        for file in png_files(path)? {
            let mut d = decode(&file)?;
            if shape.is_some_and(|s| s != (d.height, d.width)) {
                return Err(Error::InconsistentDims(format!(
                    "{} is {}x{}, earlier frames are {:?}",
                    file.display(),
                    d.height,
                    d.width,
                    shape.unwrap()
                )));
            }
            shape = Some((d.height, d.width));
            let frame = if d.channels.len() == 1 {
                d.channels.remove(0)
            } else {
                // Rec. 601 luma.
                (0..d.height * d.width)
                    .map(|o| {
                        0.299 * d.channels[0][o] + 0.587 * d.channels[1][o] + 0.114 * d.channels[2][o]
                    })
                    .collect()
            };
            slices.push(frame);
        }
        let (h, w) = shape.expect("at least one frame");
        (h, w, slices)
    } else {
        let d = decode(path)?;
        (d.height, d.width, d.channels)
    };
    let n3 = slices.len();
    Tensor3::from_vec(height, width, n3, slices.concat())
}

/// Round-half-up quantization of a `[0, 1]` value to `0..=max`, after
/// clamping.
pub fn quantize(v: f64, max: u32) -> u32 {
    (v.clamp(0.0, 1.0) * f64::from(max) + 0.5).floor() as u32
}

/// Writes an 8-bit PNG for one- or three-slice tensors when `path` ends in
/// `.png`; otherwise `path` is a directory that receives one grayscale
/// `frame_NNNN.png` per slice.
pub fn save_image_stack(t: &Tensor3, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let Dims { n1, n2, n3 } = t.dims();
    let fail = |p: &Path, e: &dyn std::fmt::Display| Error::WriteFailure {
        path: p.to_path_buf(),
        reason: e.to_string(),
    };
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let q = |v: f64| quantize(v, 255) as u8;
    let (w, h) = (n2 as u32, n1 as u32);
    let gray = |k: usize| -> GrayImage {
        ImageBuffer::from_fn(w, h, |x, y| Luma([q(t[(y as usize, x as usize, k)])]))
    };
    if is_png {
        let img = match n3 {
            1 => DynamicImage::ImageLuma8(gray(0)),
            3 => DynamicImage::ImageRgb8(RgbImage::from_fn(w, h, |x, y| {
                let (i, j) = (y as usize, x as usize);
                Rgb([q(t[(i, j, 0)]), q(t[(i, j, 1)]), q(t[(i, j, 2)])])
            })),
            _ => {
                return Err(fail(
                    path,
                    &format!("a single PNG holds 1 or 3 slices, tensor has {n3}"),
                ))
            }
        };
        img.save(path).map_err(|e| fail(path, &e))
    } else {
        fs::create_dir_all(path).map_err(|e| fail(path, &e))?;
        for k in 0..n3 {
            let file = path.join(format!("frame_{k:04}.png"));
            gray(k).save(&file).map_err(|e| fail(&file, &e))?;
        }
        Ok(())
    }
}

/// Loads a mask image: observed wherever any channel is nonzero. Returns
/// `(height, width, flags)` with flags column-major.
pub fn load_binary_mask(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<bool>)> {
    let d = decode(path.as_ref())?;
    let flags = (0..d.height * d.width)
        .map(|o| d.channels.iter().any(|c| c[o] != 0.0))
        .collect();
    Ok((d.height, d.width, flags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_tensor;

    #[test]
    fn header_layout() {
        let t = Tensor3::from_vec(1, 2, 1, vec![1.5, -2.0]).unwrap();
        let mut buf = Vec::new();
        Ten3File::from_tensor(&t).write_to(&mut buf).unwrap();
        assert_eq!(&buf[0..4], b"TEN3");
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(buf[8], 1);
        assert_eq!(&buf[9..12], &[0, 0, 0]);
        assert_eq!(&buf[12..16], &1u32.to_le_bytes());
        assert_eq!(&buf[16..20], &2u32.to_le_bytes());
        assert_eq!(&buf[20..24], &1u32.to_le_bytes());
        assert_eq!(&buf[24..32], &1.5f64.to_le_bytes());
        assert_eq!(buf.len(), 24 + 16);
    }

    #[test]
    fn round_trip_all_dtypes() {
        let t = random_tensor(3, 4, 2, 1);
        let dims = t.dims();
        let files = [
            Ten3File::from_tensor(&t),
            Ten3File::new(dims, Ten3Payload::F32(t.as_slice().iter().map(|&v| v as f32).collect()))
                .unwrap(),
            Ten3File::new(dims, Ten3Payload::U8((0..24).map(|v| (v * 11) as u8).collect())).unwrap(),
        ];
        for f in files {
            let mut buf = Vec::new();
            f.write_to(&mut buf).unwrap();
            assert_eq!(Ten3File::read_from(buf.as_slice()).unwrap(), f);
        }
    }

    #[test]
    fn rejects_malformed() {
        let t = random_tensor(2, 2, 2, 2);
        let mut buf = Vec::new();
        Ten3File::from_tensor(&t).write_to(&mut buf).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(Ten3File::read_from(bad.as_slice()), Err(Error::MalformedFile(_))));
        let mut bad = buf.clone();
        bad[8] = 9;
        assert!(Ten3File::read_from(bad.as_slice()).is_err());
        let mut bad = buf.clone();
        bad.pop();
        assert!(Ten3File::read_from(bad.as_slice()).is_err());
        let mut bad = buf.clone();
        bad.push(0);
        assert!(Ten3File::read_from(bad.as_slice()).is_err());
    }

    #[test]
    fn mask_round_trip() {
        let mut m = SupportMask::filled(Dims::new(2, 3, 2).unwrap(), false);
        m.set(1, 2, 1, true);
        m.set(0, 0, 0, true);
        let f = Ten3File::from_mask(&m);
        assert_eq!(f.payload.dtype(), Dtype::U8);
        assert_eq!(f.to_mask().unwrap(), m);
    }

    #[test]
    fn quantization_rounds_half_up_and_clips() {
        assert_eq!(quantize(0.5 / 255.0, 255), 1);
        assert_eq!(quantize(1.5, 255), 255);
        assert_eq!(quantize(-0.1, 255), 0);
        assert_eq!(quantize(128.0 / 255.0, 255), 128);
    }
}
