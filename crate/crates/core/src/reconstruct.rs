//! Image-space reconstruction from a patch assignment.
//!
//! Each matched feature patch maps to a `(k * stride)^2` pixel block through
//! the stride grid. Source blocks are pasted onto query blocks, overlaps are
//! averaged, and only hole pixels are ever overwritten.

use log::warn;

use crate::error::{Error, Result};
use crate::fmap::check_grid;
use crate::image::{Image, Mask, CHANNELS};
use crate::patch_match::PatchAssignment;

/// Outcome of [`align_color`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlignOutcome {
    /// Per-channel offset added to the hole.
    Shifted([f64; 3]),
    /// No known pixels near the hole; the image was returned as is.
    EmptyRing,
}

/// Pastes the image blocks behind each source patch onto the matching query
/// block. Pixels outside the hole are returned bit-exactly; hole pixels no
/// block reaches keep their `coarse` value.
pub fn paste_reconstruct(coarse: &Image, assignment: &PatchAssignment, stride: usize, mask: &Mask) -> Result<Image> {
    mask.check_matches(coarse)?;
    if let Some(src) = assignment.source_dims {
        if src != assignment.dims {
            return Err(Error::Shape(format!(
                "assignment sources index a {src:?} map; use a separate source image"
            )));
        }
    }
    paste_from(coarse, coarse, assignment, stride, mask)
}

/// Like [`paste_reconstruct`], but source blocks are read from `source`,
/// whose stride grid is described by `assignment.source_dims` (or
/// `assignment.dims` when absent).
pub fn paste_from(target: &Image, source: &Image, assignment: &PatchAssignment, stride: usize, mask: &Mask) -> Result<Image> {
    mask.check_matches(target)?;
    let [_, qh, qw] = assignment.dims;
    let [_, sh, sw] = assignment.source_dims.unwrap_or(assignment.dims);
    check_grid(qh, qw, stride, target.height(), target.width())?;
    check_grid(sh, sw, stride, source.height(), source.width())?;

    let k = assignment.patch_size;
    let half = k / 2;
    let block = k * stride;
    let (h, w) = target.dims();
    let (src_h, src_w) = source.dims();
    let mut sum = vec![0.0f64; h * w * CHANNELS];
    let mut count = vec![0u32; h * w];

    for rec in &assignment.records {
        let [qi, qj] = rec.query;
        let [ui, uj] = rec.source;
        if qi < half || qj < half || ui < half || uj < half {
            return Err(Error::Shape(format!("record {:?} -> {:?} lacks full support", rec.query, rec.source)));
        }
        let (ty, tx) = ((qi - half) * stride, (qj - half) * stride);
        let (sy, sx) = ((ui - half) * stride, (uj - half) * stride);
        for dy in 0..block {
            let (y, v) = (ty + dy, sy + dy);
            if y >= h || v >= src_h {
                break;
            }
            for dx in 0..block {
                let (x, u) = (tx + dx, sx + dx);
                if x >= w || u >= src_w {
                    break;
                }
                if !mask.get(y, x) {
                    continue;
                }
                let p = source.pixel(v, u);
                let i = y * w + x;
                for c in 0..CHANNELS {
                    sum[i * CHANNELS + c] += f64::from(p[c]);
                }
                count[i] += 1;
            }
        }
    }

    let mut out = target.clone();
    let data = out.data_mut();
    for (i, &n) in count.iter().enumerate() {
        if n > 0 {
            for c in 0..CHANNELS {
                data[i * CHANNELS + c] = (sum[i * CHANNELS + c] / f64::from(n)) as f32;
            }
        }
    }
    Ok(out)
}

/// Shifts hole pixels by the mean `reference - image` difference measured on
/// known pixels within `band` (Chebyshev) of the hole.
pub fn align_color(image: &Image, reference: &Image, mask: &Mask, band: usize) -> Result<(Image, AlignOutcome)> {
    mask.check_matches(image)?;
    mask.check_matches(reference)?;
    if band == 0 {
        return Err(Error::invalid("alignment band", "must be at least 1 pixel"));
    }
    let dist = mask.distance_to_opposite();
    let ring: Vec<bool> = mask
        .data()
        .iter()
        .zip(&dist)
        .map(|(&hole, &d)| !hole && d <= band)
        .collect();
    match mean_difference(image, reference, &ring) {
        Some(delta) => Ok((shift(image, mask.data(), delta), AlignOutcome::Shifted(delta))),
        None => {
            warn!("colour alignment skipped: no known pixels within {band} px of the hole");
            Ok((image.clone(), AlignOutcome::EmptyRing))
        }
    }
}

/// Shifts the whole image by its mean difference to `reference`.
pub fn align_color_global(image: &Image, reference: &Image) -> Result<(Image, [f64; 3])> {
    if image.dims() != reference.dims() {
        return Err(Error::Dimension(format!(
            "image {:?} vs reference {:?}",
            image.dims(),
            reference.dims()
        )));
    }
    let everywhere = vec![true; image.height() * image.width()];
    let delta = mean_difference(image, reference, &everywhere).expect("non-empty image");
    Ok((shift(image, &everywhere, delta), delta))
}

fn mean_difference(image: &Image, reference: &Image, region: &[bool]) -> Option<[f64; 3]> {
    let mut acc = [0.0f64; 3];
    let mut n = 0usize;
    for (i, _) in region.iter().enumerate().filter(|(_, &r)| r) {
        for c in 0..CHANNELS {
            acc[c] += f64::from(reference.data()[i * CHANNELS + c]) - f64::from(image.data()[i * CHANNELS + c]);
        }
        n += 1;
    }
    (n > 0).then(|| acc.map(|v| v / n as f64))
}

fn shift(image: &Image, apply: &[bool], delta: [f64; 3]) -> Image {
    let mut out = image.clone();
    let data = out.data_mut();
    for (i, _) in apply.iter().enumerate().filter(|(_, &a)| a) {
        for c in 0..CHANNELS {
            let v = &mut data[i * CHANNELS + c];
            *v = (f64::from(*v) + delta[c]).clamp(0.0, 1.0) as f32;
        }
    }
    out
}

/// Puts `output` into the hole of `input`. Hole pixels within `blend_width`
/// of the known region fade linearly from `input` to `output` with their
/// Chebyshev distance `d` to it, using weight `d / (blend_width + 1)`. Known
/// pixels always come from `input`.
pub fn composite(output: &Image, input: &Image, mask: &Mask, blend_width: usize) -> Result<Image> {
    mask.check_matches(output)?;
    mask.check_matches(input)?;
    let dist = mask.distance_to_opposite();
    let mut out = input.clone();
    let data = out.data_mut();
    let ramp = (blend_width + 1) as f32;
    for (i, (&hole, &d)) in mask.data().iter().zip(&dist).enumerate() {
        if !hole {
            continue;
        }
        let px = i * CHANNELS..(i + 1) * CHANNELS;
        if d > blend_width {
            data[px.clone()].copy_from_slice(&output.data()[px]);
        } else {
            let alpha = d as f32 / ramp;
            for j in px {
                data[j] = (alpha * output.data()[j] + (1.0 - alpha) * input.data()[j]).clamp(0.0, 1.0);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patch_match::MatchRecord;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(h: usize, w: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(h, w, |_, _| [rng.random(), rng.random(), rng.random()])
    }

    fn assignment(k: usize, dims: [usize; 3], records: &[([usize; 2], [usize; 2])]) -> PatchAssignment {
        PatchAssignment {
            patch_size: k,
            dims,
            source_dims: None,
            records: records
                .iter()
                .map(|&(query, source)| MatchRecord { query, source, score: 1.0 })
                .collect(),
        }
    }

    #[test]
    fn empty_assignment_is_identity() {
        let img = noise(16, 16, 1);
        let mask = Mask::from_fn(16, 16, |y, x| y > 4 && x > 4 && y < 10 && x < 10);
        let out = paste_reconstruct(&img, &assignment(3, [5, 4, 4], &[]), 4, &mask).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn single_paste_copies_block_inside_hole() {
        let img = noise(40, 40, 2);
        let mask = Mask::from_fn(40, 40, |y, x| (6..18).contains(&y) && (4..14).contains(&x));
        // Query cell (2,2) covers pixels [4,16)^2; source cell (7,7) covers [24,36)^2.
        let a = assignment(3, [5, 10, 10], &[([2, 2], [7, 7])]);
        let out = paste_reconstruct(&img, &a, 4, &mask).unwrap();
        for y in 0..40 {
            for x in 0..40 {
                let in_block = (4..16).contains(&y) && (4..16).contains(&x);
                let expected = if in_block && mask.get(y, x) {
                    img.pixel(y + 20, x + 20)
                } else {
                    img.pixel(y, x)
                };
                assert_eq!(out.pixel(y, x), expected, "({y},{x})");
            }
        }
    }

    #[test]
    fn overlapping_pastes_average() {
        let img = Image::from_fn(24, 24, |y, _| if y < 12 { [0.0; 3] } else { [1.0; 3] });
        let mask = Mask::full(24, 24);
        // Two k=1 patches onto the same cell, one from each half.
        let a = assignment(1, [5, 6, 6], &[([0, 0], [0, 5]), ([0, 0], [5, 5])]);
        let out = paste_reconstruct(&img, &a, 4, &mask).unwrap();
        assert_eq!(out.pixel(0, 0), [0.5; 3]);
        assert_eq!(out.pixel(5, 5), [0.0; 3]);
    }

    #[test]
    fn stride_mismatch_is_a_geometry_error() {
        let img = noise(16, 16, 3);
        let mask = Mask::empty(16, 16);
        let a = assignment(3, [5, 4, 4], &[]);
        assert!(matches!(paste_reconstruct(&img, &a, 2, &mask), Err(Error::Dimension(_))));
    }

    #[test]
    fn align_identical_is_noop() {
        let img = noise(12, 12, 4);
        let mask = Mask::from_fn(12, 12, |y, x| (4..8).contains(&y) && (4..8).contains(&x));
        let (out, outcome) = align_color(&img, &img, &mask, 2).unwrap();
        assert_eq!(out, img);
        assert_eq!(outcome, AlignOutcome::Shifted([0.0; 3]));
    }

    #[test]
    fn align_constant_offset() {
        let reference = Image::filled(12, 12, [0.5, 0.6, 0.7]);
        let image = Image::filled(12, 12, [0.4, 0.5, 0.6]);
        let mask = Mask::from_fn(12, 12, |y, x| (4..8).contains(&y) && (4..8).contains(&x));
        let (out, outcome) = align_color(&image, &reference, &mask, 1).unwrap();
        let AlignOutcome::Shifted(delta) = outcome else { panic!() };
        for d in delta {
            assert!((d - 0.1).abs() < 1e-6);
        }
        assert!((out.pixel(5, 5)[0] - 0.5).abs() < 1e-6);
        assert_eq!(out.pixel(0, 0), image.pixel(0, 0));
    }

    #[test]
    fn align_matches_hand_computed_ring_mean() {
        let image = noise(10, 10, 5);
        let reference = noise(10, 10, 6);
        let mask = Mask::from_fn(10, 10, |y, x| (4..6).contains(&y) && (3..7).contains(&x));
        // Ring at band 1: the 4x6 box [3,7)x[2,8) minus the hole.
        let mut expected = [0.0f64; 3];
        let mut n = 0.0;
        for y in 3..7 {
            for x in 2..8 {
                if !mask.get(y, x) {
                    for c in 0..3 {
                        expected[c] += f64::from(reference.pixel(y, x)[c] - image.pixel(y, x)[c]);
                    }
                    n += 1.0;
                }
            }
        }
        assert_eq!(n, 16.0);
        let (_, outcome) = align_color(&image, &reference, &mask, 1).unwrap();
        let AlignOutcome::Shifted(delta) = outcome else { panic!() };
        for c in 0..3 {
            assert!((delta[c] - expected[c] / n).abs() < 1e-6);
        }
    }

    #[test]
    fn align_empty_ring_and_bad_band() {
        let img = noise(6, 6, 7);
        let (out, outcome) = align_color(&img, &img, &Mask::full(6, 6), 3).unwrap();
        assert_eq!(outcome, AlignOutcome::EmptyRing);
        assert_eq!(out, img);
        assert!(align_color(&img, &img, &Mask::full(6, 6), 0).is_err());
    }

    #[test]
    fn hard_composite() {
        let input = noise(10, 10, 8);
        let output = noise(10, 10, 9);
        let mask = Mask::from_fn(10, 10, |y, x| (2..7).contains(&y) && (3..9).contains(&x));
        let out = composite(&output, &input, &mask, 0).unwrap();
        for y in 0..10 {
            for x in 0..10 {
                let src = if mask.get(y, x) { &output } else { &input };
                assert_eq!(out.pixel(y, x), src.pixel(y, x));
            }
        }
        assert_eq!(composite(&input, &input, &mask, 3).unwrap(), input);
    }

    #[test]
    fn blend_ramp_values() {
        let input = Image::filled(12, 12, [0.0; 3]);
        let output = Image::filled(12, 12, [1.0; 3]);
        let mask = Mask::from_fn(12, 12, |y, x| (2..10).contains(&y) && (2..10).contains(&x));
        let out = composite(&output, &input, &mask, 2).unwrap();
        for y in 0..12usize {
            for x in 0..12usize {
                let v = out.pixel(y, x)[0];
                if !mask.get(y, x) {
                    assert_eq!(v, 0.0);
                    continue;
                }
                let d = (y - 1).min(10 - y).min(x - 1).min(10 - x);
                let expected = match d {
                    1 => 1.0 / 3.0,
                    2 => 2.0 / 3.0,
                    _ => 1.0,
                };
                assert!((v - expected).abs() < 1e-6, "({y},{x}) d={d}: {v}");
            }
        }
    }
}
