//! Filter-bank matcher.
//!
//! Candidate patches are normalized to unit length and stacked as the rows of
//! a filter bank `B` (`n_cand x k*k*C`). Queries are expanded im2col-style into
//! a block `Q` (`n_block x k*k*C`) and all scores for the block come out of a
//! single `Q * B^T` product, which is then divided row-wise by the query norms.
//! Query blocks have a fixed size and are processed independently, so results
//! do not depend on the number of worker threads.

use rayon::prelude::*;

use super::{extract_into, match_in_map, select_best, Center, Matcher, PatchAssignment, NORM_EPSILON};
use crate::error::Result;
use crate::fmap::{FeatureMap, FeatureMask};

const QUERY_BLOCK: usize = 64;

/// Same contract as [`super::match_brute_force`], computed as a batched
/// correlation against a normalized filter bank.
pub fn match_convolutional(map: &FeatureMap, fmask: &FeatureMask, k: usize) -> Result<PatchAssignment> {
    match_in_map(Matcher::Conv, map, fmask, k)
}

pub(super) fn best_sources(
    target: &FeatureMap,
    queries: &[Center],
    source: &FeatureMap,
    candidates: &[Center],
    k: usize,
) -> Vec<(usize, f64)> {
    let dim = k * k * source.channels();
    let n_cand = candidates.len();
    let bank = filter_bank(source, candidates, k);

    queries
        .par_chunks(QUERY_BLOCK)
        .flat_map_iter(|block| {
            let (cols, norms) = im2col(target, block, k);
            let mut scores = vec![0.0f64; block.len() * n_cand];
            // SAFETY: `cols` is block.len() x dim row-major, `bank` is
            // n_cand x dim row-major and read transposed via its strides,
            // `scores` is block.len() x n_cand row-major; all buffers are
            // sized accordingly and do not alias.
            unsafe {
                matrixmultiply::dgemm(
                    block.len(),
                    dim,
                    n_cand,
                    1.0,
                    cols.as_ptr(),
                    dim as isize,
                    1,
                    bank.as_ptr(),
                    1,
                    dim as isize,
                    0.0,
                    scores.as_mut_ptr(),
                    n_cand as isize,
                    1,
                );
            }
            scores
                .chunks_exact_mut(n_cand)
                .zip(norms)
                .map(|(row, norm)| {
                    if norm < NORM_EPSILON {
                        row.fill(0.0);
                    } else {
                        row.iter_mut().for_each(|s| *s /= norm);
                    }
                    select_best(row)
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Unit-norm candidate patches, one per row. Degenerate patches become zero rows.
fn filter_bank(map: &FeatureMap, candidates: &[Center], k: usize) -> Vec<f64> {
    let dim = k * k * map.channels();
    let mut bank = vec![0.0f64; candidates.len() * dim];
    bank.par_chunks_mut(dim).zip(candidates).for_each(|(row, &center)| {
        let mut i = 0;
        extract_into(map, center, k, |v| {
            row[i] = f64::from(v);
            i += 1;
        });
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < NORM_EPSILON {
            row.fill(0.0);
        } else {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    });
    bank
}

/// Query patches as matrix rows plus their Euclidean norms.
fn im2col(map: &FeatureMap, centers: &[Center], k: usize) -> (Vec<f64>, Vec<f64>) {
    let dim = k * k * map.channels();
    let mut cols = Vec::with_capacity(centers.len() * dim);
    let mut norms = Vec::with_capacity(centers.len());
    for &center in centers {
        let mut sq = 0.0f64;
        extract_into(map, center, k, |v| {
            let v = f64::from(v);
            sq += v * v;
            cols.push(v);
        });
        norms.push(sq.sqrt());
    }
    (cols, norms)
}
