//! Procedural test images: stripes, checkerboards, sinusoidal plaids, noise.

use std::f32::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::Image;

pub type Rgb = [f32; 3];

const DARK: Rgb = [0.12, 0.18, 0.35];
const LIGHT: Rgb = [0.92, 0.78, 0.42];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Texture {
    /// Two-colour square wave across the direction `angle_deg` (0 = vertical bars).
    Stripes { period: usize, angle_deg: f32 },
    /// Squares of side `period / 2`.
    Checker { period: usize },
    /// Sum of a horizontal and a vertical sinusoid.
    Plaid { period_y: usize, period_x: usize },
}

impl fmt::Display for Texture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Texture::Stripes { period, angle_deg } => write!(f, "stripes-p{period}-a{angle_deg}"),
            Texture::Checker { period } => write!(f, "checker-p{period}"),
            Texture::Plaid { period_y, period_x } => write!(f, "plaid-{period_y}x{period_x}"),
        }
    }
}

fn mix(a: Rgb, b: Rgb, t: f32) -> Rgb {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t]
}

impl Texture {
    pub fn render(&self, height: usize, width: usize) -> Image {
        self.render_with(height, width, DARK, LIGHT)
    }

    pub fn render_with(&self, height: usize, width: usize, dark: Rgb, light: Rgb) -> Image {
        Image::from_fn(height, width, |y, x| mix(dark, light, self.level(y, x)))
    }

    /// Blend weight of the light colour at a pixel, in `[0, 1]`.
    pub fn level(&self, y: usize, x: usize) -> f32 {
        match *self {
            Texture::Stripes { period, angle_deg } => {
                // Snap trig round-off so axis-aligned stripes stay exactly periodic.
                let (sin, cos) = f64::from(angle_deg).to_radians().sin_cos();
                let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
                let t = (x as f64 * snap(cos) + y as f64 * snap(sin)) / period as f64;
                if t.rem_euclid(1.0) < 0.5 {
                    0.0
                } else {
                    1.0
                }
            }
            Texture::Checker { period } => {
                let half = (period / 2).max(1);
                if (y / half + x / half) % 2 == 0 {
                    0.0
                } else {
                    1.0
                }
            }
            Texture::Plaid { period_y, period_x } => {
                let sy = (2.0 * PI * y as f32 / period_y as f32).sin();
                let sx = (2.0 * PI * x as f32 / period_x as f32).sin();
                0.5 + 0.25 * (sy + sx)
            }
        }
    }
}

/// Twenty periodic or structured textures of varying period, orientation and
/// palette.
pub fn structured_suite() -> Vec<(String, Texture, Rgb, Rgb)> {
    let palettes: [(Rgb, Rgb); 4] = [
        (DARK, LIGHT),
        ([0.05, 0.05, 0.05], [0.95, 0.95, 0.95]),
        ([0.55, 0.10, 0.10], [0.95, 0.85, 0.70]),
        ([0.10, 0.40, 0.20], [0.80, 0.95, 0.60]),
    ];
    let textures = [
        Texture::Stripes { period: 8, angle_deg: 0.0 },
        Texture::Stripes { period: 12, angle_deg: 90.0 },
        Texture::Stripes { period: 16, angle_deg: 0.0 },
        Texture::Stripes { period: 10, angle_deg: 90.0 },
        Texture::Stripes { period: 20, angle_deg: 45.0 },
        Texture::Stripes { period: 14, angle_deg: 30.0 },
        Texture::Stripes { period: 24, angle_deg: 60.0 },
        Texture::Checker { period: 8 },
        Texture::Checker { period: 16 },
        Texture::Checker { period: 24 },
        Texture::Checker { period: 12 },
        Texture::Checker { period: 32 },
        Texture::Checker { period: 20 },
        Texture::Plaid { period_y: 16, period_x: 16 },
        Texture::Plaid { period_y: 12, period_x: 20 },
        Texture::Plaid { period_y: 24, period_x: 8 },
        Texture::Plaid { period_y: 32, period_x: 12 },
        Texture::Plaid { period_y: 10, period_x: 10 },
        Texture::Plaid { period_y: 18, period_x: 28 },
        Texture::Plaid { period_y: 40, period_x: 24 },
    ];
    textures
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let (dark, light) = palettes[i % palettes.len()];
            (t.to_string(), t, dark, light)
        })
        .collect()
}

/// Uniform i.i.d. noise in `[0, 1)`.
pub fn noise(height: usize, width: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(height, width, |_, _| [rng.random(), rng.random(), rng.random()])
}
