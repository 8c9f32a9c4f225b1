//! Exemplar-based image completion by neural-patch swapping.
//!
//! The engine fills a hole in an image in three steps:
//!
//! * a coarse guess of the hole ([`coarse::diffusion_fill`], or the result of a
//!   coarser pyramid level),
//! * a swap in feature space where every feature patch touching the hole is
//!   replaced by its most correlated patch from the known region
//!   ([`patch_match`]),
//! * a translation back to pixels that pastes the matched source blocks and
//!   blends them into the input ([`reconstruct`]).
//!
//! [`pipeline`] wires the steps together, optionally over an image pyramid,
//! and also offers a patch-based style transfer mode. Features come either
//! from a built-in classical extractor or from precomputed CNN activations in
//! the `FMAP` format ([`fmap`]).

pub mod coarse;
pub mod error;
pub mod features;
pub mod fmap;
pub mod hole;
pub mod image;
pub mod metrics;
pub mod patch_match;
pub mod pipeline;
pub mod reconstruct;
pub mod synth;

pub use crate::coarse::{diffusion_fill, DiffusionSettings};
pub use crate::error::{Error, ErrorClass, Result};
pub use crate::features::{extract_builtin_features, load_external_features, FeatureKind, FeatureSpec};
pub use crate::fmap::{downsample_mask, read_fmap, write_fmap, FeatureMap, FeatureMask};
pub use crate::hole::{rasterize_hole, HoleSpec};
pub use crate::image::{Image, Mask};
pub use crate::metrics::{mean_l1, perceptual_distance, ssim};
pub use crate::patch_match::{
    cross_map_swap, match_brute_force, match_convolutional, patch_swap, Matcher, PatchAssignment,
};
pub use crate::pipeline::{inpaint_multiscale, inpaint_single_scale, style_transfer, InpaintConfig};
pub use crate::reconstruct::{align_color, composite, paste_reconstruct};
