//! WebAssembly bindings for the in-browser demo (see `www/index.html`).

pub mod ops;

use swapfill::Matcher;
use wasm_bindgen::prelude::*;

use crate::ops::{Rect, Rgba};

fn js_err(e: swapfill::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

#[wasm_bindgen]
impl Frame {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    /// RGBA bytes, ready for `ImageData`.
    pub fn pixels(&self) -> Vec<u8> {
        self.pixels.clone()
    }
}

impl From<Rgba> for Frame {
    fn from(r: Rgba) -> Self {
        Frame {
            width: r.width,
            height: r.height,
            pixels: r.pixels,
        }
    }
}

#[wasm_bindgen]
pub struct Completion {
    inner: ops::Completion,
}

#[wasm_bindgen]
impl Completion {
    pub fn output(&self) -> Vec<u8> {
        self.inner.output.pixels.clone()
    }

    pub fn coarse(&self) -> Vec<u8> {
        self.inner.coarse.pixels.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn ssim_output(&self) -> f64 {
        self.inner.ssim_output
    }

    #[wasm_bindgen(getter)]
    pub fn ssim_diffusion(&self) -> f64 {
        self.inner.ssim_diffusion
    }

    /// Flat `[qy, qx, sy, sx, ...]` pixel coordinates of each patch match.
    pub fn links(&self) -> Vec<u32> {
        self.inner.links.clone()
    }
}

#[wasm_bindgen]
pub fn texture(kind: &str, period: usize, size: usize) -> Result<Frame, JsError> {
    ops::texture(kind, period, size)
        .map(Frame::from)
        .ok_or_else(|| JsError::new(&format!("unknown texture `{kind}`")))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn inpaint(
    pixels: Vec<u8>,
    width: usize,
    height: usize,
    hole_y: usize,
    hole_x: usize,
    hole_h: usize,
    hole_w: usize,
    scales: usize,
    patch_size: usize,
    matcher: &str,
) -> Result<Completion, JsError> {
    let matcher: Matcher = matcher.parse().map_err(js_err)?;
    let input = Rgba { width, height, pixels };
    let hole = Rect {
        y: hole_y,
        x: hole_x,
        h: hole_h,
        w: hole_w,
    };
    let inner = ops::inpaint(&input, &hole, scales, patch_size, matcher).map_err(js_err)?;
    Ok(Completion { inner })
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn stylize(
    content: Vec<u8>,
    width: usize,
    height: usize,
    style: Vec<u8>,
    style_width: usize,
    style_height: usize,
    patch_size: usize,
) -> Result<Frame, JsError> {
    let content = Rgba {
        width,
        height,
        pixels: content,
    };
    let style = Rgba {
        width: style_width,
        height: style_height,
        pixels: style,
    };
    ops::stylize(&content, &style, patch_size).map(Frame::from).map_err(js_err)
}
