//! Evaluation metrics: mean absolute error, SSIM, and a masked feature-space
//! distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmap::{FeatureMap, FeatureMask};
use crate::image::{Image, Mask};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const DEFAULT_OVERLAP_BOOST: f64 = 5.0;

fn same_dims(a: &Image, b: &Image) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!("images {:?} and {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

/// Mean absolute difference over all pixels and channels, in percent.
pub fn mean_l1(a: &Image, b: &Image) -> Result<f64> {
    same_dims(a, b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (f64::from(x) - f64::from(y)).abs())
        .sum();
    Ok(100.0 * sum / a.data().len() as f64)
}

/// Gaussian-window SSIM on Rec. 601 luminance with dynamic range 1.
///
/// Window statistics near the border use symmetric (half-sample) reflection,
/// so the SSIM map is defined at every pixel. The result is the mean of the
/// map over the whole image, or over hole pixels when `mask` is given.
pub fn ssim(a: &Image, b: &Image, mask: Option<&Mask>) -> Result<f64> {
    same_dims(a, b)?;
    let (h, w) = a.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::Size(format!("{h}x{w} image is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")));
    }
    if let Some(m) = mask {
        m.check_matches(a)?;
        if !m.has_hole() {
            return Err(Error::invalid("ssim mask", "selects no pixels"));
        }
    }
    let map = ssim_map(a, b);
    let (sum, n) = match mask {
        Some(m) => map
            .iter()
            .zip(m.data())
            .filter(|(_, &sel)| sel)
            .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1)),
        None => (map.iter().sum(), map.len()),
    };
    Ok(sum / n as f64)
}

pub(crate) fn ssim_map(a: &Image, b: &Image) -> Vec<f64> {
    let (h, w) = a.dims();
    let x: Vec<f64> = a.luminance().into_iter().map(f64::from).collect();
    let y: Vec<f64> = b.luminance().into_iter().map(f64::from).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();

    let kernel = ssim_kernel();
    let [mx, my, exx, eyy, exy] = [&x, &y, &xx, &yy, &xy].map(|p| gaussian_filter(p, h, w, &kernel));

    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    (0..h * w)
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = exx[i] - ux * ux;
            let vy = eyy[i] - uy * uy;
            let cxy = exy[i] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
        })
        .collect()
}

fn ssim_kernel() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as isize;
    let k: Vec<f64> = (-r..=r)
        .map(|d| (-((d * d) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Half-sample symmetric reflection: `-1 -> 0`, `n -> n - 1`.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

fn gaussian_filter(plane: &[f64], h: usize, w: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0f64; h * w];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(t, k)| k * plane[y * w + reflect(x as isize + t as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0f64; h * w];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(t, k)| k * tmp[reflect(y as isize + t as isize - r, h) * w + x])
                .sum();
        }
    }
    out
}

/// Per-cell non-negative weights over a feature grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMask {
    pub height: usize,
    pub width: usize,
    pub weights: Vec<f64>,
}

impl WeightedMask {
    pub fn new(height: usize, width: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != height * width {
            return Err(Error::Dimension(format!(
                "{height}x{width} weighted mask needs {} weights, got {}",
                height * width,
                weights.len()
            )));
        }
        if let Some(bad) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("mask weight", format!("{bad} is not a finite non-negative number")));
        }
        Ok(Self { height, width, weights })
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Weight 1 inside the hole, `overlap_boost` on hole cells 4-adjacent to a
/// known cell, 0 elsewhere.
pub fn build_weighted_mask(fmask: &FeatureMask, overlap_boost: f64) -> Result<WeightedMask> {
    if !(overlap_boost >= 1.0) {
        return Err(Error::invalid("overlap boost", format!("{overlap_boost} must be at least 1")));
    }
    let (h, w) = fmask.dims();
    let known = |y: isize, x: isize| {
        y >= 0 && x >= 0 && (y as usize) < h && (x as usize) < w && !fmask.get(y as usize, x as usize)
    };
    let weights = (0..h * w)
        .map(|i| {
            let (y, x) = ((i / w) as isize, (i % w) as isize);
            if !fmask.data()[i] {
                0.0
            } else if known(y - 1, x) || known(y + 1, x) || known(y, x - 1) || known(y, x + 1) {
                overlap_boost
            } else {
                1.0
            }
        })
        .collect();
    WeightedMask::new(h, w, weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
}

/// Size-normalized distance between two feature maps.
///
/// With weights, L1 is `sum w |a - b| / sum w` and L2 is
/// `sqrt(sum w (a - b)^2 / sum w)`, summing over cells and channels with the
/// cell's weight. Without weights every element has weight 1, so L2 is the
/// root-mean-square difference.
pub fn perceptual_distance(fa: &FeatureMap, fb: &FeatureMap, weights: Option<&WeightedMask>, norm: Norm) -> Result<f64> {
    if fa.dims() != fb.dims() {
        return Err(Error::Shape(format!("feature maps {:?} and {:?}", fa.dims(), fb.dims())));
    }
    let (c, h, w) = fa.dims();
    if let Some(m) = weights {
        if (m.height, m.width) != (h, w) {
            return Err(Error::Shape(format!(
                "weighted mask {}x{} vs feature map {h}x{w}",
                m.height, m.width
            )));
        }
        if m.total() <= 0.0 {
            return Err(Error::invalid("weighted mask", "has no positive weight"));
        }
    }
    let cell_weight = |i: usize| weights.map_or(1.0, |m| m.weights[i]);
    let mut acc = 0.0f64;
    for ch in 0..c {
        for (i, (&x, &y)) in fa.plane(ch).iter().zip(fb.plane(ch)).enumerate() {
            let wgt = cell_weight(i);
            if wgt == 0.0 {
                continue;
            }
            let d = f64::from(x) - f64::from(y);
            acc += wgt
                * match norm {
                    Norm::L1 => d.abs(),
                    Norm::L2 => d * d,
                };
        }
    }
    let total = weights.map_or((c * h * w) as f64, WeightedMask::total);
    let mean = acc / total;
    Ok(match norm {
        Norm::L1 => mean,
        Norm::L2 => mean.sqrt(),
    })
}

/// The numbers printed by the `metrics` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mean_l1_pct: f64,
    pub ssim: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ssim_hole: Option<f64>,
}

pub fn evaluate(a: &Image, b: &Image, mask: Option<&Mask>) -> Result<MetricsReport> {
    Ok(MetricsReport {
        mean_l1_pct: mean_l1(a, b)?,
        ssim: ssim(a, b, None)?,
        ssim_hole: mask.map(|m| ssim(a, b, Some(m))).transpose()?,
    })
}
