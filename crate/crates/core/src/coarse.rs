//! Coarse hole prediction by harmonic (Laplace) diffusion from the hole
//! boundary.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{Image, Mask, CHANNELS};

const SWEEP_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionSettings {
    /// Stop once no pixel moves by more than this in a sweep.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for DiffusionSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            max_iterations: 10_000,
        }
    }
}

impl DiffusionSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("diffusion tolerance", format!("{} must be positive", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("diffusion max_iterations", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionReport {
    pub iterations: usize,
    /// Largest per-pixel change in the final sweep.
    pub residual: f64,
    pub converged: bool,
}

pub fn diffusion_fill(image: &Image, mask: &Mask, settings: &DiffusionSettings) -> Result<Image> {
    diffusion_fill_with_report(image, mask, settings).map(|(img, _)| img)
}

/// Jacobi iteration of the discrete Laplace equation over the hole, seeded
/// with the mean colour of the boundary ring. Known pixels are untouched.
pub fn diffusion_fill_with_report(
    image: &Image,
    mask: &Mask,
    settings: &DiffusionSettings,
) -> Result<(Image, DiffusionReport)> {
    mask.check_matches(image)?;
    settings.validate()?;
    if !mask.has_boundary() {
        return Err(Error::NoBoundary);
    }
    let (h, w) = image.dims();
    let holes: Vec<usize> = (0..h * w).filter(|&i| mask.data()[i]).collect();
    if holes.is_empty() {
        return Ok((
            image.clone(),
            DiffusionReport {
                iterations: 0,
                residual: 0.0,
                converged: true,
            },
        ));
    }

    let neighbours: Vec<([usize; 4], u8)> = holes
        .iter()
        .map(|&i| {
            let (y, x) = (i / w, i % w);
            let mut n = [0usize; 4];
            let mut k = 0u8;
            let mut push = |j: usize| {
                n[k as usize] = j;
                k += 1;
            };
            if y > 0 {
                push(i - w);
            }
            if y + 1 < h {
                push(i + w);
            }
            if x > 0 {
                push(i - 1);
            }
            if x + 1 < w {
                push(i + 1);
            }
            (n, k)
        })
        .collect();

    let ring_mean = boundary_ring_mean(image, mask, &holes, &neighbours);

    let mut field: Vec<f64> = image.data().iter().map(|&v| f64::from(v)).collect();
    for &i in &holes {
        field[i * CHANNELS..(i + 1) * CHANNELS].copy_from_slice(&ring_mean);
    }

    let mut next = vec![0.0f64; holes.len() * CHANNELS];
    let mut report = DiffusionReport {
        iterations: 0,
        residual: f64::INFINITY,
        converged: false,
    };
    while report.iterations < settings.max_iterations {
        let worst = next
            .par_chunks_mut(CHANNELS * SWEEP_CHUNK)
            .zip(neighbours.par_chunks(SWEEP_CHUNK))
            .zip(holes.par_chunks(SWEEP_CHUNK))
            .map(|((out, nbrs), idx)| {
                let mut worst = 0.0f64;
                for ((px, (n, k)), &i) in out.chunks_exact_mut(CHANNELS).zip(nbrs).zip(idx) {
                    let inv = 1.0 / f64::from(*k);
                    for c in 0..CHANNELS {
                        let sum: f64 = n[..*k as usize].iter().map(|&j| field[j * CHANNELS + c]).sum();
                        px[c] = sum * inv;
                        worst = worst.max((px[c] - field[i * CHANNELS + c]).abs());
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max);

        for (&i, px) in holes.iter().zip(next.chunks_exact(CHANNELS)) {
            field[i * CHANNELS..(i + 1) * CHANNELS].copy_from_slice(px);
        }
        report.iterations += 1;
        report.residual = worst;
        if worst <= settings.tolerance {
            report.converged = true;
            break;
        }
    }

    let mut out = image.clone();
    let data = out.data_mut();
    for &i in &holes {
        for c in 0..CHANNELS {
            data[i * CHANNELS + c] = field[i * CHANNELS + c] as f32;
        }
    }
    Ok((out, report))
}

/// Mean colour of known pixels 4-adjacent to the hole.
fn boundary_ring_mean(image: &Image, mask: &Mask, holes: &[usize], neighbours: &[([usize; 4], u8)]) -> [f64; 3] {
    let mut on_ring = vec![false; mask.data().len()];
    for (_, (n, k)) in holes.iter().zip(neighbours) {
        for &j in &n[..*k as usize] {
            if !mask.data()[j] {
                on_ring[j] = true;
            }
        }
    }
    let mut acc = [0.0f64; 3];
    let mut count = 0usize;
    for (j, _) in on_ring.iter().enumerate().filter(|(_, &r)| r) {
        for c in 0..CHANNELS {
            acc[c] += f64::from(image.data()[j * CHANNELS + c]);
        }
        count += 1;
    }
    // A mask with both classes always has a non-empty ring.
    acc.map(|v| v / count as f64)
}
