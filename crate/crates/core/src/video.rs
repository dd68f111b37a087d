//! Dense video tensors and lossless I/O.
//!
//! A [`VideoTensor`] stores `C·H·W·T` reals in `[0, 1]`, nested as
//! `(c, t, h, w)` with `w` fastest. The same nesting is used on disk by the
//! PIOV binary format:
//!
//! ```text
//! "PIOV" | u32 version=1 | u32 C | u32 H | u32 W | u32 T | u8 dtype (1 = f32) | C·H·W·T × f32
//! ```
//!
//! All integers and floats are little-endian.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const PIOV_MAGIC: &[u8; 4] = b"PIOV";
pub const PIOV_VERSION: u32 = 1;
pub const DTYPE_F32: u8 = 1;
const HEADER_LEN: usize = 4 + 4 * 5 + 1;

#[derive(Debug, Error)]
pub enum VideoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value at flat index {index}")]
    NonFiniteData { index: usize },
    #[error("value {value} at flat index {index} is outside [0, 1]")]
    ValueOutOfRange { index: usize, value: f64 },
    #[error("tensor is empty")]
    EmptyTensor,
    #[error("brightness scale {0} is outside (0, 1]")]
    InvalidLambda(f64),
    #[error("image decode failed for {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

pub type Result<T> = std::result::Result<T, VideoError>;

/// Video signal `V(c; h, w, t)` with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoTensor {
    channels: usize,
    height: usize,
    width: usize,
    frames: usize,
    data: Vec<f64>,
}

impl VideoTensor {
    /// Builds a tensor from `(c, t, h, w)`-nested data.
    ///
    /// Zero-sized dimensions are allowed here; operations that need a
    /// non-empty signal report [`VideoError::EmptyTensor`] themselves.
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        frames: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        let expected = channels * height * width * frames;
        if data.len() != expected {
            return Err(VideoError::DimensionMismatch(format!(
                "data has {} values, dims {channels}x{height}x{width}x{frames} need {expected}",
                data.len()
            )));
        }
        validate_values(&data)?;
        Ok(Self {
            channels,
            height,
            width,
            frames,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize, frames: usize) -> Self {
        Self {
            channels,
            height,
            width,
            frames,
            data: vec![0.0; channels * height * width * frames],
        }
    }

    /// Builds a tensor by evaluating `f(c, h, w, t)` at every sample.
    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        frames: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(channels * height * width * frames);
        for c in 0..channels {
            for t in 0..frames {
                for h in 0..height {
                    for w in 0..width {
                        data.push(f(c, h, w, t));
                    }
                }
            }
        }
        Self::new(channels, height, width, frames, data)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    /// `(C, H, W, T)`.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.channels, self.height, self.width, self.frames)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn index(&self, c: usize, h: usize, w: usize, t: usize) -> usize {
        ((c * self.frames + t) * self.height + h) * self.width + w
    }

    #[inline]
    pub fn get(&self, c: usize, h: usize, w: usize, t: usize) -> f64 {
        self.data[self.index(c, h, w, t)]
    }

    /// One frame of one channel, `H·W` values row-major.
    pub fn frame_slice(&self, c: usize, t: usize) -> &[f64] {
        let start = self.index(c, 0, 0, t);
        &self.data[start..start + self.height * self.width]
    }

    /// `out(c; h, w, t) = v(c; (h+dh) mod H, (w+dw) mod W, (t+dt) mod T)`.
    pub fn circular_shift(&self, dh: i64, dw: i64, dt: i64) -> Self {
        if self.is_empty() {
            return self.clone();
        }
        let (hh, ww, tt) = (self.height as i64, self.width as i64, self.frames as i64);
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.channels {
            for t in 0..self.frames {
                let st = (t as i64 + dt).rem_euclid(tt) as usize;
                for h in 0..self.height {
                    let sh = (h as i64 + dh).rem_euclid(hh) as usize;
                    let row = self.index(c, sh, 0, st);
                    for w in 0..self.width {
                        let sw = (w as i64 + dw).rem_euclid(ww) as usize;
                        data.push(self.data[row + sw]);
                    }
                }
            }
        }
        Self {
            data,
            ..*self
        }
    }

    /// Multiplies every sample by `lambda ∈ (0, 1]`.
    pub fn scale_brightness(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(VideoError::InvalidLambda(lambda));
        }
        Ok(Self {
            data: self.data.iter().map(|x| x * lambda).collect(),
            ..*self
        })
    }
}

fn validate_values(data: &[f64]) -> Result<()> {
    for (index, &value) in data.iter().enumerate() {
        if !value.is_finite() {
            return Err(VideoError::NonFiniteData { index });
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(VideoError::ValueOutOfRange { index, value });
        }
    }
    Ok(())
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> VideoError + '_ {
    move |source| VideoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Loads a PIOV file or a directory of lossless raster frames.
pub fn load_video(path: impl AsRef<Path>) -> Result<VideoTensor> {
    let path = path.as_ref();
    let meta = fs::metadata(path).map_err(io_err(path))?;
    if meta.is_dir() {
        load_raster_dir(path)
    } else {
        let bytes = fs::read(path).map_err(io_err(path))?;
        decode_piov(&bytes)
    }
}

/// Writes `v` as PIOV. Values are stored as f32.
pub fn save_video(v: &VideoTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_piov(v)?;
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(&bytes).map_err(io_err(path))?;
    Ok(())
}

pub fn encode_piov(v: &VideoTensor) -> Result<Vec<u8>> {
    if v.is_empty() {
        return Err(VideoError::EmptyTensor);
    }
    // Tensors built through `new` are already validated, but the payload is
    // the contract, so check again before anything reaches disk.
    if let Some(index) = v.data.iter().position(|x| !x.is_finite()) {
        return Err(VideoError::NonFiniteData { index });
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * v.len());
    out.extend_from_slice(PIOV_MAGIC);
    out.extend_from_slice(&PIOV_VERSION.to_le_bytes());
    for d in [v.channels, v.height, v.width, v.frames] {
        let d = u32::try_from(d)
            .map_err(|_| VideoError::DimensionMismatch(format!("dimension {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.push(DTYPE_F32);
    for &x in &v.data {
        out.extend_from_slice(&(x as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_piov(bytes: &[u8]) -> Result<VideoTensor> {
    let mut cursor = bytes;
    let mut magic = [0u8; 4];
    cursor
        .read_exact(&mut magic)
        .map_err(|_| VideoError::MalformedHeader("file shorter than magic".into()))?;
    if &magic != PIOV_MAGIC {
        return Err(VideoError::MalformedHeader(format!(
            "bad magic {:?}",
            String::from_utf8_lossy(&magic)
        )));
    }
    let mut fields = [0u32; 5];
    for f in fields.iter_mut() {
        let mut buf = [0u8; 4];
        cursor
            .read_exact(&mut buf)
            .map_err(|_| VideoError::MalformedHeader("truncated header".into()))?;
        *f = u32::from_le_bytes(buf);
    }
    let [version, c, h, w, t] = fields;
    if version != PIOV_VERSION {
        return Err(VideoError::MalformedHeader(format!(
            "unsupported version {version}"
        )));
    }
    let mut dtype = [0u8; 1];
    cursor
        .read_exact(&mut dtype)
        .map_err(|_| VideoError::MalformedHeader("truncated header".into()))?;
    if dtype[0] != DTYPE_F32 {
        return Err(VideoError::MalformedHeader(format!(
            "unsupported dtype code {}",
            dtype[0]
        )));
    }
    let (c, h, w, t) = (c as usize, h as usize, w as usize, t as usize);
    let n = c
        .checked_mul(h)
        .and_then(|x| x.checked_mul(w))
        .and_then(|x| x.checked_mul(t))
        .ok_or_else(|| VideoError::MalformedHeader("dimension product overflows".into()))?;
    if cursor.len() != 4 * n {
        return Err(VideoError::DimensionMismatch(format!(
            "payload has {} bytes, header declares {n} f32 values",
            cursor.len()
        )));
    }
    let data: Vec<f64> = cursor
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    VideoTensor::new(c, h, w, t, data)
}

fn load_raster_dir(dir: &Path) -> Result<VideoTensor> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_lossless_raster(p))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(VideoError::EmptyTensor);
    }

    let mut frames: Vec<(usize, u32, u32, Vec<f64>)> = Vec::with_capacity(paths.len());
    for p in &paths {
        let img = image::open(p).map_err(|source| VideoError::Image {
            path: p.clone(),
            source,
        })?;
        let (w, h) = (img.width(), img.height());
        let frame = if img.color().has_color() {
            let rgb = img.to_rgb8();
            let mut planes = vec![0.0; 3 * (w * h) as usize];
            let plane = (w * h) as usize;
            for (i, px) in rgb.pixels().enumerate() {
                for ch in 0..3 {
                    planes[ch * plane + i] = px.0[ch] as f64 / 255.0;
                }
            }
            (3, w, h, planes)
        } else {
            let gray = img.to_luma8();
            (1, w, h, gray.pixels().map(|p| p.0[0] as f64 / 255.0).collect())
        };
        if let Some(first) = frames.first() {
            if (first.0, first.1, first.2) != (frame.0, frame.1, frame.2) {
                return Err(VideoError::DimensionMismatch(format!(
                    "{} is {}x{} with {} channels, first frame is {}x{} with {}",
                    p.display(),
                    frame.1,
                    frame.2,
                    frame.0,
                    first.1,
                    first.2,
                    first.0
                )));
            }
        }
        frames.push(frame);
    }

    let (c, w, h) = (frames[0].0, frames[0].1 as usize, frames[0].2 as usize);
    let t = frames.len();
    let plane = h * w;
    let mut data = vec![0.0; c * t * plane];
    for (ti, f) in frames.iter().enumerate() {
        for ch in 0..c {
            let dst = (ch * t + ti) * plane;
            data[dst..dst + plane].copy_from_slice(&f.3[ch * plane..(ch + 1) * plane]);
        }
    }
    VideoTensor::new(c, h, w, t, data)
}

fn is_lossless_raster(p: &Path) -> bool {
    matches!(
        p.extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref(),
        Some("png" | "bmp" | "tif" | "tiff" | "pgm" | "ppm" | "pnm")
    )
}
