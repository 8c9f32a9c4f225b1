//! RGB rasters and hole masks.
//!
//! Pixels are stored as `f32` in `[0, 1]`, row-major `(y, x, c)`. Quantization
//! to 8 bits happens only when encoding to disk.

use std::io::Cursor;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, GrayImage, ImageEncoder, ImageFormat, RgbImage};

use crate::error::{Error, Result};

pub const CHANNELS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!("empty image {height}x{width}")));
        }
        if data.len() != height * width * CHANNELS {
            return Err(Error::Dimension(format!(
                "{height}x{width} RGB image needs {} values, got {}",
                height * width * CHANNELS,
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, rgb: [f32; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(height * width * CHANNELS).collect();
        Self::new(height, width, data).expect("non-empty constant image")
    }

    /// Builds an image by evaluating `f(y, x)` at every pixel.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend(f(y, x));
            }
        }
        Self::new(height, width, data).expect("generator produced a valid image")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize) -> usize {
        (y * self.width + x) * CHANNELS
    }

    #[inline]
    pub fn pixel(&self, y: usize, x: usize) -> [f32; 3] {
        let i = self.index(y, x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, y: usize, x: usize, rgb: [f32; 3]) {
        let i = self.index(y, x);
        self.data[i..i + CHANNELS].copy_from_slice(&rgb);
    }

    /// Rec. 601 luma, one value per pixel.
    pub fn luminance(&self) -> Vec<f32> {
        self.data
            .chunks_exact(CHANNELS)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect()
    }

    pub fn clamp_unit(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    pub fn from_rgb8(rgb: &RgbImage) -> Self {
        let (w, h) = rgb.dimensions();
        let data = rgb.as_raw().iter().map(|&b| f32::from(b) / 255.0).collect();
        Self::new(h as usize, w as usize, data).expect("decoded image is non-empty")
    }

    pub fn to_rgb8(&self) -> RgbImage {
        let raw = self.data.iter().map(|&v| quantize(v)).collect();
        RgbImage::from_raw(self.width as u32, self.height as u32, raw).expect("buffer size matches")
    }

    /// Builds an image from interleaved RGBA bytes, dropping alpha.
    pub fn from_rgba8(height: usize, width: usize, rgba: &[u8]) -> Result<Self> {
        if rgba.len() != height * width * 4 {
            return Err(Error::Dimension(format!(
                "{height}x{width} RGBA buffer needs {} bytes, got {}",
                height * width * 4,
                rgba.len()
            )));
        }
        let data = rgba
            .chunks_exact(4)
            .flat_map(|p| [p[0], p[1], p[2]])
            .map(|b| f32::from(b) / 255.0)
            .collect();
        Self::new(height, width, data)
    }

    pub fn to_rgba8(&self) -> Vec<u8> {
        self.data
            .chunks_exact(CHANNELS)
            .flat_map(|p| [quantize(p[0]), quantize(p[1]), quantize(p[2]), 255])
            .collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let decoded = image::open(path.as_ref())?;
        Ok(Self::from_rgb8(&decoded.to_rgb8()))
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = Cursor::new(Vec::new());
        DynamicImage::ImageRgb8(self.to_rgb8()).write_to(&mut out, ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    /// Factor-2 reduction by area averaging. Odd trailing rows/columns average
    /// over the pixels that exist.
    pub fn downsample2(&self) -> Image {
        let h = self.height.div_ceil(2);
        let w = self.width.div_ceil(2);
        Image::from_fn(h, w, |y, x| {
            let mut acc = [0.0f32; 3];
            let mut n = 0.0f32;
            for sy in 2 * y..(2 * y + 2).min(self.height) {
                for sx in 2 * x..(2 * x + 2).min(self.width) {
                    let p = self.pixel(sy, sx);
                    for c in 0..CHANNELS {
                        acc[c] += p[c];
                    }
                    n += 1.0;
                }
            }
            acc.map(|v| v / n)
        })
    }

    /// Bilinear resampling to an arbitrary size using pixel-center alignment
    /// with edge clamping.
    pub fn resize_bilinear(&self, height: usize, width: usize) -> Image {
        let sy = self.height as f32 / height as f32;
        let sx = self.width as f32 / width as f32;
        let max_y = (self.height - 1) as f32;
        let max_x = (self.width - 1) as f32;
        Image::from_fn(height, width, |y, x| {
            let fy = ((y as f32 + 0.5) * sy - 0.5).clamp(0.0, max_y);
            let fx = ((x as f32 + 0.5) * sx - 0.5).clamp(0.0, max_x);
            let y0 = fy.floor() as usize;
            let x0 = fx.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let x1 = (x0 + 1).min(self.width - 1);
            let ty = fy - y0 as f32;
            let tx = fx - x0 as f32;
            let (a, b) = (self.pixel(y0, x0), self.pixel(y0, x1));
            let (c, d) = (self.pixel(y1, x0), self.pixel(y1, x1));
            let mut out = [0.0; 3];
            for ch in 0..CHANNELS {
                let top = a[ch] + (b[ch] - a[ch]) * tx;
                let bottom = c[ch] + (d[ch] - c[ch]) * tx;
                out[ch] = top + (bottom - top) * ty;
            }
            out
        })
    }
}

fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Binary hole mask: `true` marks a pixel inside the hole.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(height: usize, width: usize, data: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!("empty mask {height}x{width}")));
        }
        if data.len() != height * width {
            return Err(Error::Dimension(format!(
                "{height}x{width} mask needs {} cells, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self::new(height, width, vec![false; height * width]).expect("non-empty mask")
    }

    pub fn full(height: usize, width: usize) -> Self {
        Self::new(height, width, vec![true; height * width]).expect("non-empty mask")
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self::new(height, width, data).expect("generator produced a valid mask")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, hole: bool) {
        self.data[y * self.width + x] = hole;
    }

    pub fn hole_count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn has_hole(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    pub fn has_boundary(&self) -> bool {
        self.data.iter().any(|&b| !b)
    }

    pub fn check_matches(&self, image: &Image) -> Result<()> {
        if self.dims() != image.dims() {
            return Err(Error::Dimension(format!(
                "mask is {}x{} but image is {}x{}",
                self.height, self.width, image.height, image.width
            )));
        }
        Ok(())
    }

    /// Factor-2 reduction: a coarse pixel is in the hole if any of the pixels
    /// it covers is.
    pub fn downsample2(&self) -> Mask {
        let h = self.height.div_ceil(2);
        let w = self.width.div_ceil(2);
        Mask::from_fn(h, w, |y, x| {
            (2 * y..(2 * y + 2).min(self.height))
                .any(|sy| (2 * x..(2 * x + 2).min(self.width)).any(|sx| self.get(sy, sx)))
        })
    }

    /// Chebyshev distance from every pixel to the nearest pixel of the opposite
    /// class (`usize::MAX` when the opposite class is empty).
    pub(crate) fn distance_to_opposite(&self) -> Vec<usize> {
        let inside = chebyshev_distance(self.height, self.width, |i| !self.data[i]);
        let outside = chebyshev_distance(self.height, self.width, |i| self.data[i]);
        self.data
            .iter()
            .enumerate()
            .map(|(i, &hole)| if hole { inside[i] } else { outside[i] })
            .collect()
    }

    pub fn to_gray8(&self) -> GrayImage {
        let raw = self.data.iter().map(|&b| if b { 255 } else { 0 }).collect();
        GrayImage::from_raw(self.width as u32, self.height as u32, raw).expect("buffer size matches")
    }

    pub fn from_gray8(gray: &GrayImage) -> Self {
        let (w, h) = gray.dimensions();
        let data = gray.as_raw().iter().map(|&v| v > 127).collect();
        Self::new(h as usize, w as usize, data).expect("decoded mask is non-empty")
    }

    /// Reads a PNG or binary PGM; any value above 127 marks the hole.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let decoded = image::open(path.as_ref())?;
        Ok(Self::from_gray8(&decoded.to_luma8()))
    }

    pub fn encode(&self, format: MaskFormat) -> Result<Vec<u8>> {
        let gray = self.to_gray8();
        match format {
            MaskFormat::Png => {
                let mut out = Cursor::new(Vec::new());
                DynamicImage::ImageLuma8(gray).write_to(&mut out, ImageFormat::Png)?;
                Ok(out.into_inner())
            }
            MaskFormat::Pgm => {
                let mut out = Vec::new();
                PnmEncoder::new(&mut out)
                    .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
                    .write_image(gray.as_raw(), gray.width(), gray.height(), ExtendedColorType::L8)?;
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskFormat {
    Png,
    Pgm,
}

impl MaskFormat {
    /// `.pgm`/`.pnm` select PGM, everything else PNG.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
            Some(ext) if ext == "pgm" || ext == "pnm" => MaskFormat::Pgm,
            _ => MaskFormat::Png,
        }
    }
}

/// Two-pass chamfer transform with unit costs on all eight neighbours, which
/// is exact for the Chebyshev metric.
fn chebyshev_distance(height: usize, width: usize, is_seed: impl Fn(usize) -> bool) -> Vec<usize> {
    const FAR: usize = usize::MAX / 2;
    let mut dist: Vec<usize> = (0..height * width).map(|i| if is_seed(i) { 0 } else { FAR }).collect();
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            let mut d = dist[i];
            if x > 0 {
                d = d.min(dist[i - 1] + 1);
            }
            if y > 0 {
                d = d.min(dist[i - width] + 1);
                if x > 0 {
                    d = d.min(dist[i - width - 1] + 1);
                }
                if x + 1 < width {
                    d = d.min(dist[i - width + 1] + 1);
                }
            }
            dist[i] = d;
        }
    }
    for y in (0..height).rev() {
        for x in (0..width).rev() {
            let i = y * width + x;
            let mut d = dist[i];
            if x + 1 < width {
                d = d.min(dist[i + 1] + 1);
            }
            if y + 1 < height {
                d = d.min(dist[i + width] + 1);
                if x + 1 < width {
                    d = d.min(dist[i + width + 1] + 1);
                }
                if x > 0 {
                    d = d.min(dist[i + width - 1] + 1);
                }
            }
            dist[i] = d;
        }
    }
    dist.into_iter().map(|d| if d >= FAR { usize::MAX } else { d }).collect()
}
