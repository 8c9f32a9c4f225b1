//! The demo operations on raw RGBA buffers, independent of the JS bindings.

use swapfill::metrics::ssim;
use swapfill::pipeline::{inpaint_multiscale_traced, style_transfer_traced};
use swapfill::synth::Texture;
use swapfill::{diffusion_fill, rasterize_hole, DiffusionSettings, HoleSpec, Image, InpaintConfig, Matcher, Result};

pub struct Rgba {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Rgba {
    fn from_image(img: &Image) -> Self {
        Rgba {
            width: img.width(),
            height: img.height(),
            pixels: img.to_rgba8(),
        }
    }
}

pub struct Rect {
    pub y: usize,
    pub x: usize,
    pub h: usize,
    pub w: usize,
}

pub struct Completion {
    pub output: Rgba,
    pub coarse: Rgba,
    pub ssim_output: f64,
    pub ssim_diffusion: f64,
    /// `[qy, qx, sy, sx]` per matched patch, in pixel coordinates of the
    /// finest scale.
    pub links: Vec<u32>,
}

pub fn texture(kind: &str, period: usize, size: usize) -> Option<Rgba> {
    let period = period.max(2);
    let t = match kind {
        "stripes" => Texture::Stripes { period, angle_deg: 0.0 },
        "diagonal" => Texture::Stripes { period, angle_deg: 45.0 },
        "checker" => Texture::Checker { period },
        "plaid" => Texture::Plaid {
            period_y: period,
            period_x: period + period / 2,
        },
        _ => return None,
    };
    Some(Rgba::from_image(&t.render(size, size)))
}

pub fn inpaint(input: &Rgba, hole: &Rect, scales: usize, patch_size: usize, matcher: Matcher) -> Result<Completion> {
    let image = Image::from_rgba8(input.height, input.width, &input.pixels)?;
    let spec = HoleSpec::Rect {
        y: hole.y,
        x: hole.x,
        h: hole.h,
        w: hole.w,
    };
    let mask = rasterize_hole(spec, input.height, input.width, 0)?;
    let cfg = InpaintConfig {
        scales,
        patch_size,
        matcher,
        ..InpaintConfig::default()
    };
    let (out, trace) = inpaint_multiscale_traced(&image, &mask, &cfg)?;
    let baseline = diffusion_fill(&image, &mask, &DiffusionSettings::default())?;
    let coarse = trace.coarse.unwrap_or_else(|| image.clone());
    let stride = cfg.features.stride;
    let links = trace
        .assignment
        .map(|a| {
            a.records
                .iter()
                .flat_map(|r| {
                    let px = |c: usize| (c * stride + stride / 2) as u32;
                    [px(r.query[0]), px(r.query[1]), px(r.source[0]), px(r.source[1])]
                })
                .collect()
        })
        .unwrap_or_default();
    Ok(Completion {
        ssim_output: ssim(&out, &image, Some(&mask))?,
        ssim_diffusion: ssim(&baseline, &image, Some(&mask))?,
        output: Rgba::from_image(&out),
        coarse: Rgba::from_image(&coarse),
        links,
    })
}

pub fn stylize(content: &Rgba, style: &Rgba, patch_size: usize) -> Result<Rgba> {
    let c = Image::from_rgba8(content.height, content.width, &content.pixels)?;
    let s = Image::from_rgba8(style.height, style.width, &style.pixels)?;
    let cfg = InpaintConfig {
        patch_size,
        ..InpaintConfig::default()
    };
    let (out, _) = style_transfer_traced(&c, &s, &cfg)?;
    Ok(Rgba::from_image(&out))
}
