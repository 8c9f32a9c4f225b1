use rayon::prelude::*;

use super::{extract_into, match_in_map, ncc_slices, select_best, Center, Matcher, PatchAssignment};
use crate::error::Result;
use crate::fmap::{FeatureMap, FeatureMask};

/// Exhaustive matcher: scores every `(query, candidate)` pair with [`super::ncc`]
/// from scratch.
pub fn match_brute_force(map: &FeatureMap, fmask: &FeatureMask, k: usize) -> Result<PatchAssignment> {
    match_in_map(Matcher::Brute, map, fmask, k)
}

pub(super) fn best_sources(
    target: &FeatureMap,
    queries: &[Center],
    source: &FeatureMap,
    candidates: &[Center],
    k: usize,
) -> Vec<(usize, f64)> {
    let gather = |map: &FeatureMap, center: Center| {
        let mut v = Vec::with_capacity(k * k * map.channels());
        extract_into(map, center, k, |x| v.push(x));
        v
    };
    let sources: Vec<Vec<f32>> = candidates.iter().map(|&c| gather(source, c)).collect();
    queries
        .par_iter()
        .map(|&q| {
            let query = gather(target, q);
            let scores: Vec<f64> = sources.iter().map(|s| ncc_slices(&query, s)).collect();
            select_best(&scores)
        })
        .collect()
}
