//! Raster types, lossless PNG I/O, and the deterministic base filters every
//! other module consumes.
//!
//! Windowed filters use clamp-to-edge borders throughout: the window indices
//! are clamped to the raster, so edge pixels are counted multiple times. This
//! avoids phantom dark borders that would corrupt entropy and JND maps.

use std::path::Path;

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// 8-bit-per-channel RGB raster with explicit dimensions, the universal
/// carrier. Data is row-major with three interleaved samples per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl ImageBuffer {
    /// Wraps raw RGB data; `data.len()` must equal `width * height * 3`.
    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam("image dimensions must be >= 1".into()));
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(Error::InvalidParam(format!(
                "expected {expected} samples for {width}x{height} RGB, got {}",
                data.len()
            )));
        }
        Ok(ImageBuffer {
            width,
            height,
            data,
        })
    }

    /// A constant-color image.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..width as usize * height as usize {
            data.extend_from_slice(&rgb);
        }
        ImageBuffer {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 3
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = self.offset(x, y);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = self.offset(x, y);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn same_dims(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Row-major 8-bit luma raster, the working format for entropy and JND.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayBuffer {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayBuffer {
    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam("image dimensions must be >= 1".into()));
        }
        if data.len() != width as usize * height as usize {
            return Err(Error::InvalidParam(format!(
                "expected {} samples for {width}x{height} luma, got {}",
                width as usize * height as usize,
                data.len()
            )));
        }
        Ok(GrayBuffer {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        GrayBuffer {
            width,
            height,
            data: vec![value; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        self.data[y as usize * self.width as usize + x as usize] = value;
    }

    /// Sample with clamp-to-edge semantics for signed coordinates.
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> u8 {
        let cx = x.clamp(0, self.width as i64 - 1) as u32;
        let cy = y.clamp(0, self.height as i64 - 1) as u32;
        self.get(cx, cy)
    }
}

/// Tight bounding rectangle of a mask's true pixels. An empty mask carries
/// the designated empty rectangle (all fields zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Bbox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Bbox {
    pub const EMPTY: Bbox = Bbox {
        x: 0,
        y: 0,
        w: 0,
        h: 0,
    };

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }
}

/// Binary raster of payload pixels plus bounding box and payload identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayloadMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
    bbox: Bbox,
    payload_id: String,
}

impl PayloadMask {
    /// Builds a mask from raw bits; the bbox is computed from the true pixels.
    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>, payload_id: &str) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam("mask dimensions must be >= 1".into()));
        }
        if bits.len() != width as usize * height as usize {
            return Err(Error::InvalidParam(format!(
                "expected {} bits for {width}x{height} mask, got {}",
                width as usize * height as usize,
                bits.len()
            )));
        }
        let bbox = compute_bbox(width, height, &bits);
        Ok(PayloadMask {
            width,
            height,
            bits,
            bbox,
            payload_id: payload_id.to_string(),
        })
    }

    /// Builds a mask by evaluating a predicate at every pixel.
    pub fn from_fn(
        width: u32,
        height: u32,
        payload_id: &str,
        mut f: impl FnMut(u32, u32) -> bool,
    ) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        PayloadMask::from_bits(width, height, bits, payload_id).expect("dimensions are consistent")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bbox(&self) -> Bbox {
        self.bbox
    }

    pub fn payload_id(&self) -> &str {
        &self.payload_id
    }

    #[inline]
    pub fn bit(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    /// Number of payload pixels.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.bbox.is_empty()
    }

    /// Re-rasters the mask onto an `img_w` x `img_h` canvas with the bbox
    /// top-left corner at `origin`. Fails if the bbox does not fit.
    pub fn place(&self, img_w: u32, img_h: u32, origin: (u32, u32)) -> Result<PayloadMask> {
        let (ox, oy) = origin;
        if self.is_empty() {
            return Err(Error::EmptyMask);
        }
        if ox + self.bbox.w > img_w || oy + self.bbox.h > img_h {
            return Err(Error::OutOfBounds {
                x: ox,
                y: oy,
                width: img_w,
                height: img_h,
            });
        }
        let mut bits = vec![false; img_w as usize * img_h as usize];
        for dy in 0..self.bbox.h {
            for dx in 0..self.bbox.w {
                if self.bit(self.bbox.x + dx, self.bbox.y + dy) {
                    bits[(oy + dy) as usize * img_w as usize + (ox + dx) as usize] = true;
                }
            }
        }
        PayloadMask::from_bits(img_w, img_h, bits, &self.payload_id)
    }
}

fn compute_bbox(width: u32, height: u32, bits: &[bool]) -> Bbox {
    let mut min_x = u32::MAX;
    let mut min_y = u32::MAX;
    let mut max_x = 0u32;
    let mut max_y = 0u32;
    let mut any = false;
    for y in 0..height {
        let row = y as usize * width as usize;
        for x in 0..width {
            if bits[row + x as usize] {
                any = true;
                min_x = min_x.min(x);
                min_y = min_y.min(y);
                max_x = max_x.max(x);
                max_y = max_y.max(y);
            }
        }
    }
    if !any {
        return Bbox::EMPTY;
    }
    Bbox {
        x: min_x,
        y: min_y,
        w: max_x - min_x + 1,
        h: max_y - min_y + 1,
    }
}

// ---------------------------------------------------------------------------
// PNG I/O
// ---------------------------------------------------------------------------

fn open_png(path: &Path) -> Result<image::DynamicImage> {
    let reader = image::ImageReader::open(path)
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?
        .with_guessed_format()
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    if reader.format() != Some(image::ImageFormat::Png) {
        return Err(Error::Decode {
            path: path.to_path_buf(),
            reason: "not a PNG file".into(),
        });
    }
    reader.decode().map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Decodes an 8-bit PNG into an [`ImageBuffer`]. Grayscale is replicated to
/// three channels and alpha is discarded; any non-8-bit depth is rejected.
pub fn load_png(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let decoded = open_png(path)?;
    let (width, height) = (decoded.width(), decoded.height());
    let data = match decoded {
        image::DynamicImage::ImageRgb8(buf) => buf.into_raw(),
        image::DynamicImage::ImageRgba8(buf) => buf
            .pixels()
            .flat_map(|p| [p.0[0], p.0[1], p.0[2]])
            .collect(),
        image::DynamicImage::ImageLuma8(buf) => buf.pixels().flat_map(|p| [p.0[0]; 3]).collect(),
        image::DynamicImage::ImageLumaA8(buf) => buf.pixels().flat_map(|p| [p.0[0]; 3]).collect(),
        _ => {
            return Err(Error::UnsupportedBitDepth {
                path: path.to_path_buf(),
            })
        }
    };
    ImageBuffer::from_raw(width, height, data)
}

/// Writes an [`ImageBuffer`] as an 8-bit RGB PNG. `load_png` of the written
/// file reproduces the buffer byte for byte.
pub fn save_png(image: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    image::save_buffer_with_format(
        path,
        image.data(),
        image.width(),
        image.height(),
        image::ExtendedColorType::Rgb8,
        image::ImageFormat::Png,
    )
    .map_err(|e| match e {
        image::ImageError::IoError(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Decode {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })
}

/// Loads an 8-bit grayscale PNG as a payload mask: values strictly above 127
/// are payload pixels. The payload id is the file stem.
pub fn load_mask(path: impl AsRef<Path>) -> Result<PayloadMask> {
    let path = path.as_ref();
    let decoded = open_png(path)?;
    let (width, height) = (decoded.width(), decoded.height());
    let luma: Vec<u8> = match decoded {
        image::DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        image::DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        image::DynamicImage::ImageLuma16(_) | image::DynamicImage::ImageLumaA16(_) => {
            return Err(Error::UnsupportedBitDepth {
                path: path.to_path_buf(),
            })
        }
        _ => {
            return Err(Error::NotGrayscale {
                path: path.to_path_buf(),
            })
        }
    };
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let bits = luma.iter().map(|&v| v > 127).collect();
    PayloadMask::from_bits(width, height, bits, &id)
}

/// Writes a payload mask as an 8-bit grayscale PNG (255 = payload pixel).
pub fn save_mask(mask: &PayloadMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let data: Vec<u8> = mask
        .bits()
        .iter()
        .map(|&b| if b { 255 } else { 0 })
        .collect();
    image::save_buffer_with_format(
        path,
        &data,
        mask.width(),
        mask.height(),
        image::ExtendedColorType::L8,
        image::ImageFormat::Png,
    )
    .map_err(|e| match e {
        image::ImageError::IoError(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Decode {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })
}

// ---------------------------------------------------------------------------
// Filters
// ---------------------------------------------------------------------------

/// BT.601 luma with round-half-up: `round(0.299 R + 0.587 G + 0.114 B)`.
pub fn to_luma(image: &ImageBuffer) -> GrayBuffer {
    let mut data = Vec::with_capacity(image.width() as usize * image.height() as usize);
    for px in image.data().chunks_exact(3) {
        let y = 0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]);
        data.push((y + 0.5).floor().clamp(0.0, 255.0) as u8);
    }
    GrayBuffer {
        width: image.width(),
        height: image.height(),
        data,
    }
}

/// Median filter over a `(2*radius+1)^2` clamp-to-edge window.
///
/// Huang's sliding-histogram algorithm with a running median pointer: per
/// pixel, one column leaves and one enters the histogram, and the median
/// drifts from its previous position instead of being rescanned. `radius = 0`
/// is the identity.
pub fn median_filter(gray: &GrayBuffer, radius: u32) -> GrayBuffer {
    if radius == 0 {
        return gray.clone();
    }
    let w = gray.width() as i64;
    let h = gray.height() as i64;
    let r = radius as i64;
    let side = 2 * r + 1;
    // Window population is constant because clamped duplicates still count.
    let target = (side * side) as u32 / 2 + 1;

    let mut out = vec![0u8; (w * h) as usize];
    let mut hist = [0u32; 256];

    for y in 0..h {
        hist.fill(0);
        // Seed with the window centered at x = 0.
        for cx in -r..=r {
            for cy in y - r..=y + r {
                hist[gray.get_clamped(cx, cy) as usize] += 1;
            }
        }
        // median = smallest value whose cumulative count reaches the target;
        // `below` counts samples strictly under it.
        let mut median = 0usize;
        let mut below = 0u32;
        let row = (y * w) as usize;
        for x in 0..w {
            while below + hist[median] < target {
                below += hist[median];
                median += 1;
            }
            while below >= target {
                median -= 1;
                below -= hist[median];
            }
            out[row + x as usize] = median as u8;
            if x + 1 < w {
                for cy in y - r..=y + r {
                    let gone = gray.get_clamped(x - r, cy) as usize;
                    hist[gone] -= 1;
                    if gone < median {
                        below -= 1;
                    }
                    let come = gray.get_clamped(x + 1 + r, cy) as usize;
                    hist[come] += 1;
                    if come < median {
                        below += 1;
                    }
                }
            }
        }
    }

    GrayBuffer {
        width: gray.width(),
        height: gray.height(),
        data: out,
    }
}

/// Nearest-neighbor rescale of the mask's bbox content so the output bbox
/// width equals `target_width`, preserving aspect ratio. Scaling to the
/// current bbox width is the identity.
pub fn scale_mask(mask: &PayloadMask, target_width: u32) -> Result<PayloadMask> {
    if target_width < 8 {
        return Err(Error::InvalidParam(format!(
            "target payload width {target_width} is degenerate (must be >= 8)"
        )));
    }
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let bbox = mask.bbox();
    if target_width == bbox.w {
        return Ok(mask.clone());
    }
    // round(h * target / w) with integer arithmetic, half rounded up.
    let out_w = target_width;
    let out_h =
        (((2 * bbox.h as u64 * out_w as u64) + bbox.w as u64) / (2 * bbox.w as u64)).max(1) as u32;
    let mut bits = Vec::with_capacity(out_w as usize * out_h as usize);
    for y in 0..out_h {
        // src = floor((dst + 0.5) * src_len / dst_len), done in integers
        let sy = ((2 * y as u64 + 1) * bbox.h as u64 / (2 * out_h as u64)) as u32;
        for x in 0..out_w {
            let sx = ((2 * x as u64 + 1) * bbox.w as u64 / (2 * out_w as u64)) as u32;
            bits.push(mask.bit(bbox.x + sx, bbox.y + sy));
        }
    }
    PayloadMask::from_bits(out_w, out_h, bits, mask.payload_id())
}
