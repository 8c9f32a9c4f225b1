//! Feature maps used for matching.
//!
//! The built-in extractor stacks, for each scale level, Gaussian-smoothed RGB
//! and the absolute horizontal/vertical Sobel responses of the smoothed
//! luminance. Everything is computed at full resolution and then area-averaged
//! onto the stride grid, so the grid-to-pixel mapping is the same one used for
//! externally computed CNN activations.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fmap::{load_fmap, FeatureMap};
use crate::image::{Image, CHANNELS};

pub const CHANNELS_PER_LEVEL: usize = 5;
const VARIANCE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureKind {
    Builtin,
    /// Precomputed activations stored as an FMAP file.
    External(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    pub kind: FeatureKind,
    pub levels: usize,
    pub stride: usize,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self {
            kind: FeatureKind::Builtin,
            levels: 3,
            stride: 4,
        }
    }
}

impl FeatureSpec {
    pub fn external(path: impl Into<PathBuf>) -> Self {
        Self {
            kind: FeatureKind::External(path.into()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::invalid("feature levels", "must be at least 1"));
        }
        if ![1, 2, 4, 8].contains(&self.stride) {
            return Err(Error::invalid("feature stride", format!("{} is not one of 1, 2, 4, 8", self.stride)));
        }
        Ok(())
    }

    /// Extracts or loads the feature map for `image` according to `kind`.
    pub fn features_for(&self, image: &Image) -> Result<FeatureMap> {
        match &self.kind {
            FeatureKind::Builtin => extract_builtin_features(image, self),
            FeatureKind::External(path) => load_external_features(path, image),
        }
    }
}

pub fn extract_builtin_features(image: &Image, spec: &FeatureSpec) -> Result<FeatureMap> {
    let mut map = raw_builtin_features(image, spec)?;
    standardize_channels(&mut map);
    Ok(map)
}

/// Built-in features before per-channel standardization.
pub(crate) fn raw_builtin_features(image: &Image, spec: &FeatureSpec) -> Result<FeatureMap> {
    spec.validate()?;
    let (h, w) = image.dims();
    let stride = spec.stride;
    if h < 2 * stride || w < 2 * stride {
        return Err(Error::Size(format!(
            "{h}x{w} image is smaller than two feature cells at stride {stride}"
        )));
    }
    let (fh, fw) = (h.div_ceil(stride), w.div_ceil(stride));
    let planes: Vec<Vec<f32>> = (0..CHANNELS)
        .map(|c| image.data().iter().skip(c).step_by(CHANNELS).copied().collect())
        .collect();

    let mut data = Vec::with_capacity(CHANNELS_PER_LEVEL * spec.levels * fh * fw);
    for level in 0..spec.levels {
        let sigma = (1u32 << level) as f32;
        let kernel = gaussian_kernel(sigma);
        let smoothed: Vec<Vec<f32>> = planes.iter().map(|p| blur(p, h, w, &kernel)).collect();
        let luma: Vec<f32> = (0..h * w)
            .map(|i| 0.299 * smoothed[0][i] + 0.587 * smoothed[1][i] + 0.114 * smoothed[2][i])
            .collect();
        let (gx, gy) = sobel_abs(&luma, h, w);
        for plane in smoothed.iter().chain([&gx, &gy]) {
            data.extend(area_average(plane, h, w, stride, fh, fw));
        }
    }
    FeatureMap::new(CHANNELS_PER_LEVEL * spec.levels, fh, fw, stride, data)
}

/// Loads an FMAP file and checks that its grid covers `image`.
pub fn load_external_features(path: impl AsRef<Path>, image: &Image) -> Result<FeatureMap> {
    let map = load_fmap(path)?;
    map.check_geometry(image.height(), image.width())?;
    Ok(map)
}

/// Shifts every channel to zero mean and unit variance. Channels whose
/// variance falls below the floor become all zeros.
pub fn standardize_channels(map: &mut FeatureMap) {
    let n = map.height() * map.width();
    for plane in map.data_mut().chunks_exact_mut(n) {
        let mean = plane.iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64;
        let var = plane.iter().map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n as f64;
        if var < VARIANCE_FLOOR {
            plane.fill(0.0);
        } else {
            let inv = 1.0 / var.sqrt();
            for v in plane.iter_mut() {
                *v = ((f64::from(*v) - mean) * inv) as f32;
            }
        }
    }
}

fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil() as i32;
    let mut k: Vec<f32> = (-radius..=radius)
        .map(|d| (-(d * d) as f32 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f32 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Separable convolution with edge replication.
fn blur(plane: &[f32], h: usize, w: usize, kernel: &[f32]) -> Vec<f32> {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0f32; h * w];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..w {
            tmp[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(t, k)| k * row[clamp_index(x as isize + t as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0f32; h * w];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(t, k)| k * tmp[clamp_index(y as isize + t as isize - r, h) * w + x])
                .sum();
        }
    }
    out
}

/// Absolute 3x3 Sobel responses `(|d/dx|, |d/dy|)` with edge replication.
fn sobel_abs(plane: &[f32], h: usize, w: usize) -> (Vec<f32>, Vec<f32>) {
    let at = |y: isize, x: isize| plane[clamp_index(y, h) * w + clamp_index(x, w)];
    let mut gx = vec![0.0f32; h * w];
    let mut gy = vec![0.0f32; h * w];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let dx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
            let dy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
            let i = y as usize * w + x as usize;
            gx[i] = dx.abs();
            gy[i] = dy.abs();
        }
    }
    (gx, gy)
}

/// Mean over each `stride x stride` block, clipped at the image edge.
fn area_average(plane: &[f32], h: usize, w: usize, stride: usize, fh: usize, fw: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(fh * fw);
    for i in 0..fh {
        let ys = i * stride..((i + 1) * stride).min(h);
        for j in 0..fw {
            let xs = j * stride..((j + 1) * stride).min(w);
            let mut sum = 0.0f64;
            for y in ys.clone() {
                sum += plane[y * w + xs.start..y * w + xs.end].iter().map(|&v| f64::from(v)).sum::<f64>();
            }
            out.push((sum / (ys.len() * xs.len()) as f64) as f32);
        }
    }
    out
}
