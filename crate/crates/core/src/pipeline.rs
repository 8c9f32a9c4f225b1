//! Infer, match, translate.
//!
//! 1. **Infer**: a coarse fill of the hole (diffusion, or the upsampled result
//!    of the previous scale).
//! 2. **Match**: features of the coarse image are patch-matched, hole against
//!    boundary.
//! 3. **Translate**: the matched source blocks are pasted back in image space,
//!    tone-aligned to the surrounding pixels and composited into the input.

use log::{debug, info};

use crate::coarse::{diffusion_fill, DiffusionSettings};
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureSpec};
use crate::fmap::downsample_mask;
use crate::image::{Image, Mask};
use crate::patch_match::{check_patch_size, cross_map_swap, Matcher, PatchAssignment};
use crate::reconstruct::{align_color, align_color_global, composite, paste_from, paste_reconstruct};

/// Coarsest pyramid level keeps its shorter side at or above this.
pub const MIN_SCALE_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct InpaintConfig {
    pub patch_size: usize,
    pub scales: usize,
    pub matcher: Matcher,
    pub features: FeatureSpec,
    pub diffusion: DiffusionSettings,
    pub blend_width: usize,
    pub align_band: usize,
    /// Feature → match → paste passes per scale.
    pub iterations: usize,
    pub seed: u64,
}

impl Default for InpaintConfig {
    fn default() -> Self {
        Self {
            patch_size: 3,
            scales: 2,
            matcher: Matcher::Conv,
            features: FeatureSpec::default(),
            diffusion: DiffusionSettings::default(),
            blend_width: 4,
            align_band: 4,
            iterations: 1,
            seed: 0,
        }
    }
}

impl InpaintConfig {
    pub fn validate(&self) -> Result<()> {
        check_patch_size(self.patch_size)?;
        if self.scales == 0 {
            return Err(Error::invalid("scales", "must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations", "must be at least 1"));
        }
        if self.align_band == 0 {
            return Err(Error::invalid("alignment band", "must be at least 1 pixel"));
        }
        self.features.validate()?;
        self.diffusion.validate()
    }
}

/// What happened at one pyramid level.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleReport {
    pub height: usize,
    pub width: usize,
    pub hole_pixels: usize,
    pub queries: usize,
}

/// Intermediate products of a run, finest scale last.
#[derive(Debug, Clone, Default)]
pub struct InpaintTrace {
    pub scales: Vec<ScaleReport>,
    /// Coarse fill that fed the finest scale.
    pub coarse: Option<Image>,
    /// Assignment of the last pass at the finest scale.
    pub assignment: Option<PatchAssignment>,
}

pub fn inpaint_single_scale(image: &Image, mask: &Mask, cfg: &InpaintConfig, coarse: Option<&Image>) -> Result<Image> {
    let mut trace = InpaintTrace::default();
    single_scale(image, mask, cfg, coarse, &mut trace)
}

fn single_scale(
    image: &Image,
    mask: &Mask,
    cfg: &InpaintConfig,
    coarse: Option<&Image>,
    trace: &mut InpaintTrace,
) -> Result<Image> {
    cfg.validate()?;
    mask.check_matches(image)?;
    let mut report = ScaleReport {
        height: image.height(),
        width: image.width(),
        hole_pixels: mask.hole_count(),
        queries: 0,
    };
    if !mask.has_hole() {
        trace.scales.push(report);
        trace.coarse = Some(image.clone());
        trace.assignment = None;
        return Ok(image.clone());
    }
    if !mask.has_boundary() {
        return Err(Error::NoBoundary);
    }
    let coarse = match coarse {
        Some(c) => {
            mask.check_matches(c)?;
            c.clone()
        }
        None => diffusion_fill(image, mask, &cfg.diffusion)?,
    };

    let mut current = coarse.clone();
    let mut assignment = None;
    for pass in 0..cfg.iterations {
        let features = cfg.features.features_for(&current)?;
        let fmask = downsample_mask(mask, features.stride(), features.height(), features.width())?;
        let matched = cfg.matcher.run(&features, &fmask, cfg.patch_size)?;
        debug!(
            "{}x{} pass {pass}: {} queries over a {:?} map",
            image.height(),
            image.width(),
            matched.len(),
            matched.dims
        );
        report.queries = matched.len();
        let pasted = paste_reconstruct(&current, &matched, features.stride(), mask)?;
        let (aligned, _) = align_color(&pasted, image, mask, cfg.align_band)?;
        current = composite(&aligned, image, mask, cfg.blend_width)?;
        assignment = Some(matched);
    }
    trace.scales.push(report);
    trace.coarse = Some(coarse);
    trace.assignment = assignment;
    Ok(current)
}

/// Number of pyramid levels actually used for a `height x width` image.
pub fn effective_scales(height: usize, width: usize, requested: usize) -> usize {
    let mut scales = 1;
    let mut side = height.min(width);
    while scales < requested {
        side = side.div_ceil(2);
        if side < MIN_SCALE_DIM {
            break;
        }
        scales += 1;
    }
    scales
}

pub fn inpaint_multiscale(image: &Image, mask: &Mask, cfg: &InpaintConfig) -> Result<Image> {
    inpaint_multiscale_traced(image, mask, cfg).map(|(img, _)| img)
}

/// Coarse-to-fine inpainting over a factor-2 pyramid. Only the coarsest level
/// is diffusion-filled; each finer level starts from the bilinearly upsampled
/// result below it with known pixels restored.
pub fn inpaint_multiscale_traced(image: &Image, mask: &Mask, cfg: &InpaintConfig) -> Result<(Image, InpaintTrace)> {
    cfg.validate()?;
    mask.check_matches(image)?;
    let scales = effective_scales(image.height(), image.width(), cfg.scales);
    if scales < cfg.scales {
        info!("using {scales} of {} requested scales for a {:?} image", cfg.scales, image.dims());
    }

    let mut pyramid = vec![(image.clone(), mask.clone())];
    for _ in 1..scales {
        let (img, m) = pyramid.last().unwrap();
        pyramid.push((img.downsample2(), m.downsample2()));
    }

    // Externally supplied features describe the full-resolution image only.
    let coarse_cfg = InpaintConfig {
        features: FeatureSpec {
            kind: FeatureKind::Builtin,
            ..cfg.features.clone()
        },
        ..cfg.clone()
    };

    let mut trace = InpaintTrace::default();
    let mut result: Option<Image> = None;
    for (level, (img, m)) in pyramid.iter().enumerate().rev() {
        let level_cfg = if level == 0 { cfg } else { &coarse_cfg };
        let coarse = result.as_ref().map(|prev| {
            let mut up = prev.resize_bilinear(img.height(), img.width());
            for y in 0..img.height() {
                for x in 0..img.width() {
                    if !m.get(y, x) {
                        up.set_pixel(y, x, img.pixel(y, x));
                    }
                }
            }
            up
        });
        result = Some(single_scale(img, m, level_cfg, coarse.as_ref(), &mut trace)?);
    }
    Ok((result.expect("at least one scale"), trace))
}

/// Re-renders `content` with patches of `style`: every content feature patch
/// takes its best match in the style map, the corresponding style pixels are
/// pasted over the whole frame, and the result is shifted to the content's
/// mean colour.
pub fn style_transfer(content: &Image, style: &Image, cfg: &InpaintConfig) -> Result<Image> {
    style_transfer_traced(content, style, cfg).map(|(img, _)| img)
}

pub fn style_transfer_traced(content: &Image, style: &Image, cfg: &InpaintConfig) -> Result<(Image, PatchAssignment)> {
    cfg.validate()?;
    if cfg.features.kind != FeatureKind::Builtin {
        return Err(Error::invalid(
            "features",
            "style transfer extracts features from both images and needs the built-in extractor",
        ));
    }
    let stride = cfg.features.stride;
    for (name, img) in [("content", content), ("style", style)] {
        if img.height() < 2 * stride || img.width() < 2 * stride {
            return Err(Error::Size(format!("{name} image {:?} is smaller than two feature cells", img.dims())));
        }
    }
    let fc = cfg.features.features_for(content)?;
    let fs = cfg.features.features_for(style)?;
    let (_, assignment) = cross_map_swap(&fc, &fs, cfg.patch_size, cfg.matcher)?;
    let full = Mask::full(content.height(), content.width());
    let pasted = paste_from(content, style, &assignment, stride, &full)?;
    let (aligned, _) = align_color_global(&pasted, content)?;
    Ok((aligned, assignment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hole::{rasterize_hole, HoleSpec};
    use crate::metrics::ssim;
    use crate::synth::Texture;

    #[test]
    fn scale_clamping() {
        assert_eq!(effective_scales(512, 512, 2), 2);
        assert_eq!(effective_scales(512, 512, 5), 4);
        assert_eq!(effective_scales(100, 300, 3), 1);
        assert_eq!(effective_scales(128, 300, 3), 2);
        assert_eq!(effective_scales(40, 40, 1), 1);
    }

    #[test]
    fn empty_hole_returns_input() {
        let img = Texture::Checker { period: 8 }.render(64, 64);
        let out = inpaint_multiscale(&img, &Mask::empty(64, 64), &InpaintConfig::default()).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn full_hole_is_rejected() {
        let img = Texture::Checker { period: 8 }.render(64, 64);
        let err = inpaint_single_scale(&img, &Mask::full(64, 64), &InpaintConfig::default(), None).unwrap_err();
        assert!(matches!(err, Error::NoBoundary));
    }

    #[test]
    fn single_scale_beats_diffusion_on_stripes() {
        let truth = Texture::Stripes { period: 12, angle_deg: 0.0 }.render(128, 128);
        let mask = rasterize_hole(HoleSpec::Center(48), 128, 128, 0).unwrap();
        let cfg = InpaintConfig {
            scales: 1,
            ..InpaintConfig::default()
        };
        let out = inpaint_single_scale(&truth, &mask, &cfg, None).unwrap();
        let baseline = diffusion_fill(&truth, &mask, &cfg.diffusion).unwrap();
        let ours = ssim(&out, &truth, Some(&mask)).unwrap();
        let base = ssim(&baseline, &truth, Some(&mask)).unwrap();
        assert!(ours > base, "ours {ours} vs diffusion {base}");
    }

    #[test]
    fn one_scale_equals_single_scale() {
        let img = Texture::Plaid { period_y: 10, period_x: 14 }.render(96, 80);
        let mask = rasterize_hole(HoleSpec::Rect { y: 30, x: 20, h: 24, w: 30 }, 96, 80, 0).unwrap();
        let cfg = InpaintConfig {
            scales: 1,
            ..InpaintConfig::default()
        };
        assert_eq!(
            inpaint_multiscale(&img, &mask, &cfg).unwrap(),
            inpaint_single_scale(&img, &mask, &cfg, None).unwrap()
        );
    }

    #[test]
    fn multiscale_geometry() {
        let img = Texture::Checker { period: 16 }.render(512, 512);
        let mask = rasterize_hole(HoleSpec::Center(224), 512, 512, 0).unwrap();
        let (out, trace) = inpaint_multiscale_traced(&img, &mask, &InpaintConfig::default()).unwrap();
        assert_eq!(trace.scales.len(), 2);
        assert_eq!((trace.scales[0].height, trace.scales[0].width), (256, 256));
        assert_eq!(trace.scales[0].hole_pixels, 112 * 112);
        assert_eq!(trace.scales[1].hole_pixels, 224 * 224);
        assert!(trace.scales[1].queries >= trace.scales[0].queries);
        for y in 0..512 {
            for x in 0..512 {
                if !mask.get(y, x) {
                    assert_eq!(out.pixel(y, x), img.pixel(y, x));
                }
            }
        }
    }

    #[test]
    fn iterations_run_and_preserve_known_pixels() {
        let img = Texture::Stripes { period: 9, angle_deg: 30.0 }.render(96, 96);
        let mask = rasterize_hole(HoleSpec::Center(32), 96, 96, 0).unwrap();
        let cfg = InpaintConfig {
            scales: 1,
            iterations: 3,
            ..InpaintConfig::default()
        };
        let out = inpaint_multiscale(&img, &mask, &cfg).unwrap();
        for y in 0..96 {
            for x in 0..96 {
                if !mask.get(y, x) {
                    assert_eq!(out.pixel(y, x), img.pixel(y, x));
                }
            }
        }
    }

    #[test]
    fn style_identity() {
        let img = crate::synth::noise(48, 40, 5);
        let out = style_transfer(&img, &img, &InpaintConfig::default()).unwrap();
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((a - b).abs() <= 1.0 / 255.0, "{a} vs {b}");
        }
    }

    #[test]
    fn style_flat_content_uses_one_source() {
        let content = Image::filled(32, 32, [0.3, 0.5, 0.7]);
        let style = crate::synth::noise(40, 44, 6);
        let (_, a) = style_transfer_traced(&content, &style, &InpaintConfig::default()).unwrap();
        let first = a.records[0].source;
        assert!(a.records.iter().all(|r| r.source == first));
        assert_eq!(first, [1, 1]);
        let [_, sh, sw] = a.source_dims.unwrap();
        assert!(a.records.iter().all(|r| r.source[0] + 1 < sh && r.source[1] + 1 < sw));
    }

    #[test]
    fn style_rejects_external_features() {
        let img = Image::filled(32, 32, [0.5; 3]);
        let cfg = InpaintConfig {
            features: FeatureSpec::external("x.fmap"),
            ..InpaintConfig::default()
        };
        assert!(style_transfer(&img, &img, &cfg).is_err());
    }
}
