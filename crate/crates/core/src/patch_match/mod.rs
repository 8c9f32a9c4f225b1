//! Neural-patch matching and patch swap.
//!
//! Every `k x k` patch of a feature map that overlaps the hole is compared
//! against every patch lying entirely outside it using normalized
//! cross-correlation (cosine similarity of the flattened `k*k*C` vectors).
//! The best-scoring source replaces the query and overlapping replacements are
//! averaged.
//!
//! Two matchers produce identical assignments:
//!
//! * [`match_brute_force`] scores each `(query, candidate)` pair independently
//!   and serves as the reference.
//! * [`match_convolutional`] normalizes the candidates once, stacks them into a
//!   filter bank and evaluates all scores as a blocked matrix product over
//!   im2col-expanded queries.
//!
//! Ties (scores within [`TIE_TOLERANCE`] of the best) go to the earliest
//! candidate in row-major order, which keeps both matchers in agreement
//! despite their different rounding.

mod brute;
mod conv;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmap::{FeatureMap, FeatureMask};

pub use brute::match_brute_force;
pub use conv::match_convolutional;

/// Two scores closer than this are considered equal.
pub const TIE_TOLERANCE: f64 = 1e-5;
/// Patches with a smaller Euclidean norm score 0 against everything.
pub const NORM_EPSILON: f64 = 1e-12;

pub type Center = (usize, usize);

/// A `k x k x C` block of a feature map, flattened in `(c, dy, dx)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub center: Center,
    pub size: usize,
    pub values: Vec<f32>,
}

impl Patch {
    /// Reads the patch centred at `center`; cells outside the map read as zero.
    pub fn extract(map: &FeatureMap, center: Center, size: usize) -> Result<Self> {
        check_patch_size(size)?;
        let mut values = Vec::with_capacity(size * size * map.channels());
        extract_into(map, center, size, |v| values.push(v));
        Ok(Self { center, size, values })
    }

    pub fn channels(&self) -> usize {
        self.values.len() / (self.size * self.size)
    }
}

/// Streams the values of a zero-padded patch in `(c, dy, dx)` order.
#[inline]
pub(crate) fn extract_into(map: &FeatureMap, (cy, cx): Center, size: usize, mut sink: impl FnMut(f32)) {
    let half = (size / 2) as isize;
    let (h, w) = (map.height() as isize, map.width() as isize);
    for c in 0..map.channels() {
        let plane = map.plane(c);
        for dy in -half..=half {
            let y = cy as isize + dy;
            for dx in -half..=half {
                let x = cx as isize + dx;
                if (0..h).contains(&y) && (0..w).contains(&x) {
                    sink(plane[(y * w + x) as usize]);
                } else {
                    sink(0.0);
                }
            }
        }
    }
}

/// Normalized cross-correlation `<p, q> / (|p| |q|)`, accumulated in `f64`.
pub fn ncc(p: &Patch, q: &Patch) -> Result<f64> {
    if p.size != q.size || p.values.len() != q.values.len() {
        return Err(Error::Shape(format!(
            "patches of size {}x{}x{} and {}x{}x{}",
            p.size,
            p.size,
            p.channels(),
            q.size,
            q.size,
            q.channels()
        )));
    }
    Ok(ncc_slices(&p.values, &q.values))
}

pub(crate) fn ncc_slices(p: &[f32], q: &[f32]) -> f64 {
    let (mut dot, mut pp, mut qq) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in p.iter().zip(q) {
        let (a, b) = (f64::from(a), f64::from(b));
        dot += a * b;
        pp += a * a;
        qq += b * b;
    }
    let (np, nq) = (pp.sqrt(), qq.sqrt());
    if np < NORM_EPSILON || nq < NORM_EPSILON {
        0.0
    } else {
        dot / (np * nq)
    }
}

/// Index and score of the winning candidate: the earliest one scoring within
/// [`TIE_TOLERANCE`] of the maximum.
pub(crate) fn select_best(scores: &[f64]) -> (usize, f64) {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let idx = scores
        .iter()
        .position(|&s| s >= best - TIE_TOLERANCE)
        .expect("at least one candidate");
    (idx, scores[idx])
}

pub(crate) fn check_patch_size(k: usize) -> Result<()> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::invalid("patch size", format!("{k} must be odd and at least 1")));
    }
    Ok(())
}

/// Counts of hole cells over every `k x k` footprint with full support,
/// indexed by centre.
struct FootprintCounts {
    height: usize,
    width: usize,
    integral: Vec<usize>,
}

impl FootprintCounts {
    fn new(fmask: &FeatureMask) -> Self {
        let (h, w) = fmask.dims();
        let mut integral = vec![0usize; (h + 1) * (w + 1)];
        for y in 0..h {
            let mut row = 0usize;
            for x in 0..w {
                row += usize::from(fmask.get(y, x));
                integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + row;
            }
        }
        Self {
            height: h,
            width: w,
            integral,
        }
    }

    /// Full-support centres in row-major order paired with their hole counts.
    fn centers(&self, k: usize) -> impl Iterator<Item = (Center, usize)> + '_ {
        let half = k / 2;
        let stride = self.width + 1;
        let ys = if self.height >= k { half..self.height - half } else { 0..0 };
        ys.flat_map(move |y| {
            let xs = if self.width >= k { half..self.width - half } else { 0..0 };
            xs.map(move |x| {
                let (y0, x0, y1, x1) = (y - half, x - half, y + half + 1, x + half + 1);
                let n = self.integral[y1 * stride + x1] + self.integral[y0 * stride + x0]
                    - self.integral[y0 * stride + x1]
                    - self.integral[y1 * stride + x0];
                ((y, x), n)
            })
        })
    }
}

/// Centres of full-support patches whose footprint touches the hole.
pub fn enumerate_query_patches(fmask: &FeatureMask, k: usize) -> Result<Vec<Center>> {
    check_patch_size(k)?;
    Ok(FootprintCounts::new(fmask)
        .centers(k)
        .filter(|&(_, n)| n > 0)
        .map(|(c, _)| c)
        .collect())
}

/// Centres of full-support patches lying entirely outside the hole.
pub fn enumerate_candidate_patches(fmask: &FeatureMask, k: usize) -> Result<Vec<Center>> {
    check_patch_size(k)?;
    let found: Vec<Center> = FootprintCounts::new(fmask)
        .centers(k)
        .filter(|&(_, n)| n == 0)
        .map(|(c, _)| c)
        .collect();
    if found.is_empty() {
        return Err(Error::NoCandidates {
            patch_size: k,
            height: fmask.height(),
            width: fmask.width(),
        });
    }
    Ok(found)
}

/// Every full-support centre of a `height x width` grid, row-major.
pub(crate) fn all_centers(height: usize, width: usize, k: usize) -> Vec<Center> {
    let half = k / 2;
    if height < k || width < k {
        return Vec::new();
    }
    (half..height - half)
        .flat_map(|y| (half..width - half).map(move |x| (y, x)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    Brute,
    #[default]
    Conv,
}

impl fmt::Display for Matcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Matcher::Brute => "brute",
            Matcher::Conv => "conv",
        })
    }
}

impl FromStr for Matcher {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" => Ok(Matcher::Brute),
            "conv" => Ok(Matcher::Conv),
            other => Err(Error::invalid("matcher", format!("{other:?}; expected brute or conv"))),
        }
    }
}

impl Matcher {
    pub fn run(self, map: &FeatureMap, fmask: &FeatureMask, k: usize) -> Result<PatchAssignment> {
        match self {
            Matcher::Brute => match_brute_force(map, fmask, k),
            Matcher::Conv => match_convolutional(map, fmask, k),
        }
    }

    /// Best source among `candidates` of `source` for each of `queries` of `target`.
    pub(crate) fn match_sets(
        self,
        target: &FeatureMap,
        queries: &[Center],
        source: &FeatureMap,
        candidates: &[Center],
        k: usize,
    ) -> Vec<(usize, f64)> {
        match self {
            Matcher::Brute => brute::best_sources(target, queries, source, candidates, k),
            Matcher::Conv => conv::best_sources(target, queries, source, candidates, k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    #[serde(rename = "q")]
    pub query: [usize; 2],
    #[serde(rename = "s")]
    pub source: [usize; 2],
    pub score: f64,
}

/// Result of matching: one record per query centre, in row-major query order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchAssignment {
    pub patch_size: usize,
    /// `[C, H, W]` of the map the queries index into.
    pub dims: [usize; 3],
    /// `[C, H, W]` of the map the sources index into, when it differs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_dims: Option<[usize; 3]>,
    pub records: Vec<MatchRecord>,
}

impl PatchAssignment {
    pub fn empty(map: &FeatureMap, k: usize) -> Self {
        let (c, h, w) = map.dims();
        Self {
            patch_size: k,
            dims: [c, h, w],
            source_dims: None,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn check_dims(&self, map: &FeatureMap) -> Result<()> {
        let (c, h, w) = map.dims();
        if self.dims != [c, h, w] {
            return Err(Error::Shape(format!(
                "assignment built for {:?} applied to a {c}x{h}x{w} map",
                self.dims
            )));
        }
        Ok(())
    }
}

pub(crate) fn assemble(
    map: &FeatureMap,
    k: usize,
    queries: &[Center],
    candidates: &[Center],
    best: Vec<(usize, f64)>,
) -> PatchAssignment {
    let mut out = PatchAssignment::empty(map, k);
    out.records = queries
        .iter()
        .zip(best)
        .map(|(&(qy, qx), (idx, score))| {
            let (sy, sx) = candidates[idx];
            MatchRecord {
                query: [qy, qx],
                source: [sy, sx],
                score,
            }
        })
        .collect();
    out
}

/// Shared front half of both matchers: validate, enumerate, and hand the
/// query/candidate sets to `matcher`.
pub(crate) fn match_in_map(
    matcher: Matcher,
    map: &FeatureMap,
    fmask: &FeatureMask,
    k: usize,
) -> Result<PatchAssignment> {
    fmask.check_matches(map)?;
    let queries = enumerate_query_patches(fmask, k)?;
    let candidates = enumerate_candidate_patches(fmask, k)?;
    if queries.is_empty() {
        return Ok(PatchAssignment::empty(map, k));
    }
    let best = matcher.match_sets(map, &queries, map, &candidates, k);
    Ok(assemble(map, k, &queries, &candidates, best))
}

/// Replaces every query footprint with its source patch and averages where
/// footprints overlap. Cells outside all footprints keep their values.
pub fn patch_swap(map: &FeatureMap, assignment: &PatchAssignment) -> Result<FeatureMap> {
    assignment.check_dims(map)?;
    if let Some(src) = assignment.source_dims {
        if src != assignment.dims {
            return Err(Error::Shape(format!(
                "assignment sources index a {src:?} map, not this {:?} one",
                assignment.dims
            )));
        }
    }
    swap_from(map, map, assignment)
}

fn swap_from(target: &FeatureMap, source: &FeatureMap, assignment: &PatchAssignment) -> Result<FeatureMap> {
    let k = assignment.patch_size;
    check_patch_size(k)?;
    let half = k / 2;
    let (c, h, w) = target.dims();
    let (_, sh, sw) = source.dims();
    let in_grid = |[y, x]: [usize; 2], h: usize, w: usize| y >= half && x >= half && y + half < h && x + half < w;

    let mut sum = vec![0.0f64; c * h * w];
    let mut count = vec![0u32; h * w];
    for rec in &assignment.records {
        if !in_grid(rec.query, h, w) || !in_grid(rec.source, sh, sw) {
            return Err(Error::Shape(format!(
                "record {:?} -> {:?} does not fit {k}x{k} patches",
                rec.query, rec.source
            )));
        }
        let (qy, qx) = (rec.query[0] - half, rec.query[1] - half);
        let (sy, sx) = (rec.source[0] - half, rec.source[1] - half);
        for dy in 0..k {
            for dx in 0..k {
                count[(qy + dy) * w + qx + dx] += 1;
            }
        }
        for ch in 0..c {
            let src = source.plane(ch);
            let dst = &mut sum[ch * h * w..(ch + 1) * h * w];
            for dy in 0..k {
                for dx in 0..k {
                    dst[(qy + dy) * w + qx + dx] += f64::from(src[(sy + dy) * sw + sx + dx]);
                }
            }
        }
    }

    let mut out = target.clone();
    let data = out.data_mut();
    for ch in 0..c {
        for i in 0..h * w {
            if count[i] > 0 {
                data[ch * h * w + i] = (sum[ch * h * w + i] / f64::from(count[i])) as f32;
            }
        }
    }
    Ok(out)
}

/// Swaps every full-support patch of `content` for its best match among the
/// full-support patches of `style`. Sources in the returned assignment index
/// into `style`.
pub fn cross_map_swap(
    content: &FeatureMap,
    style: &FeatureMap,
    k: usize,
    matcher: Matcher,
) -> Result<(FeatureMap, PatchAssignment)> {
    check_patch_size(k)?;
    if content.channels() != style.channels() {
        return Err(Error::Shape(format!(
            "content has {} channels, style has {}",
            content.channels(),
            style.channels()
        )));
    }
    let candidates = all_centers(style.height(), style.width(), k);
    if candidates.is_empty() {
        return Err(Error::NoCandidates {
            patch_size: k,
            height: style.height(),
            width: style.width(),
        });
    }
    let queries = all_centers(content.height(), content.width(), k);
    let best = matcher.match_sets(content, &queries, style, &candidates, k);
    let mut assignment = assemble(content, k, &queries, &candidates, best);
    let (c, h, w) = style.dims();
    assignment.source_dims = Some([c, h, w]);
    let swapped = swap_from(content, style, &assignment)?;
    Ok((swapped, assignment))
}

#[cfg(test)]
mod tests;
