use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn map_from_fn(c: usize, h: usize, w: usize, f: impl Fn(usize, usize, usize) -> f32) -> FeatureMap {
    let mut data = Vec::with_capacity(c * h * w);
    for ch in 0..c {
        for y in 0..h {
            for x in 0..w {
                data.push(f(ch, y, x));
            }
        }
    }
    FeatureMap::new(c, h, w, 4, data).unwrap()
}

fn random_map(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> FeatureMap {
    let data = (0..c * h * w).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    FeatureMap::new(c, h, w, 4, data).unwrap()
}

fn rect_mask(h: usize, w: usize, y0: usize, x0: usize, rh: usize, rw: usize) -> FeatureMask {
    FeatureMask::from_fn(h, w, |y, x| (y0..y0 + rh).contains(&y) && (x0..x0 + rw).contains(&x))
}

/// Footprint test by direct enumeration of the k*k cells.
fn footprint_hits(fmask: &FeatureMask, (y, x): Center, k: usize) -> usize {
    let half = k / 2;
    let mut n = 0;
    for yy in y - half..=y + half {
        for xx in x - half..=x + half {
            n += usize::from(fmask.get(yy, xx));
        }
    }
    n
}

fn patch(values: Vec<f32>) -> Patch {
    Patch {
        center: (0, 0),
        size: 1,
        values,
    }
}

#[test]
fn ncc_reference_values() {
    let p = patch(vec![0.3, -1.2, 2.0, 0.5]);
    assert!((ncc(&p, &p).unwrap() - 1.0).abs() < 1e-12);
    let neg = patch(p.values.iter().map(|v| -v).collect());
    assert!((ncc(&p, &neg).unwrap() + 1.0).abs() < 1e-12);
    let e0 = patch(vec![1.0, 0.0, 0.0, 0.0]);
    let e1 = patch(vec![0.0, 1.0, 0.0, 0.0]);
    assert_eq!(ncc(&e0, &e1).unwrap(), 0.0);
    let zero = patch(vec![0.0; 4]);
    assert_eq!(ncc(&p, &zero).unwrap(), 0.0);
    assert!(matches!(ncc(&p, &patch(vec![1.0; 3])), Err(Error::Shape(_))));
}

#[test]
fn patch_extraction_zero_pads() {
    let map = map_from_fn(2, 3, 3, |c, y, x| (c * 100 + y * 10 + x) as f32 + 1.0);
    let p = Patch::extract(&map, (0, 0), 3).unwrap();
    assert_eq!(p.values.len(), 18);
    assert_eq!(&p.values[..9], &[0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 11.0, 12.0]);
    assert_eq!(p.channels(), 2);
    assert!(Patch::extract(&map, (1, 1), 2).is_err());
}

#[test]
fn query_enumeration() {
    assert!(enumerate_query_patches(&FeatureMask::empty(10, 10), 3).unwrap().is_empty());

    let single = FeatureMask::from_fn(20, 20, |y, x| (y, x) == (5, 5));
    let q = enumerate_query_patches(&single, 3).unwrap();
    let expected: Vec<Center> = (4..=6).flat_map(|y| (4..=6).map(move |x| (y, x))).collect();
    assert_eq!(q, expected);

    let block = rect_mask(64, 64, 16, 16, 32, 32);
    let q = enumerate_query_patches(&block, 3).unwrap();
    let brute: Vec<Center> = all_centers(64, 64, 3)
        .into_iter()
        .filter(|&c| footprint_hits(&block, c, 3) > 0)
        .collect();
    assert_eq!(brute.len(), 1156);
    assert_eq!(q, brute);
}

#[test]
fn candidate_enumeration() {
    assert_eq!(enumerate_candidate_patches(&FeatureMask::empty(8, 8), 3).unwrap().len(), 36);
    let full = FeatureMask::from_fn(8, 8, |_, _| true);
    assert!(matches!(enumerate_candidate_patches(&full, 3), Err(Error::NoCandidates { .. })));

    let block = rect_mask(64, 64, 16, 16, 32, 32);
    let cands = enumerate_candidate_patches(&block, 3).unwrap();
    let brute: Vec<Center> = all_centers(64, 64, 3)
        .into_iter()
        .filter(|&c| footprint_hits(&block, c, 3) == 0)
        .collect();
    // 62^2 full-support centres, of which 34^2 have a footprint touching the hole.
    assert_eq!(brute.len(), 62 * 62 - 34 * 34);
    assert_eq!(cands, brute);

    assert!(enumerate_candidate_patches(&FeatureMask::empty(2, 9), 3).is_err());
    assert!(enumerate_query_patches(&FeatureMask::empty(8, 8), 4).is_err());
}

#[test]
fn constant_map_resolves_ties_to_first_candidate() {
    let map = map_from_fn(3, 12, 12, |_, _, _| 0.7);
    let fmask = rect_mask(12, 12, 5, 6, 3, 2);
    let first = enumerate_candidate_patches(&fmask, 3).unwrap()[0];
    for matcher in [Matcher::Brute, Matcher::Conv] {
        let a = matcher.run(&map, &fmask, 3).unwrap();
        assert!(!a.is_empty());
        for r in &a.records {
            assert!((r.score - 1.0).abs() < 1e-12);
            assert_eq!(r.source, [first.0, first.1]);
        }
    }
}

#[test]
fn unique_exact_match_is_found() {
    // One-hot cells: the hole cell (4,4) carries channel 5, and exactly one
    // known cell does too. Every other known cell is orthogonal to it.
    let c = 8;
    let map = map_from_fn(c, 9, 9, |ch, y, x| {
        let hot = if (y, x) == (4, 4) || (y, x) == (7, 2) { 5 } else { (y * 9 + x) % 5 };
        f32::from(u8::from(ch == hot))
    });
    let fmask = FeatureMask::from_fn(9, 9, |y, x| (y, x) == (4, 4));
    for matcher in [Matcher::Brute, Matcher::Conv] {
        let a = matcher.run(&map, &fmask, 1).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a.records[0].query, [4, 4]);
        assert_eq!(a.records[0].source, [7, 2]);
        assert!((a.records[0].score - 1.0).abs() < 1e-12);
    }
}

/// Columns cycle through four linearly independent channel vectors.
fn stripes(h: usize, w: usize) -> FeatureMap {
    map_from_fn(4, h, w, |ch, _, x| if ch == x % 4 { 1.0 } else { 0.1 * ch as f32 })
}

#[test]
fn periodic_map_matches_in_phase_and_swap_is_identity() {
    let map = stripes(20, 24);
    let fmask = rect_mask(20, 24, 7, 9, 6, 7);
    let brute = match_brute_force(&map, &fmask, 3).unwrap();
    for r in &brute.records {
        let q = Patch::extract(&map, (r.query[0], r.query[1]), 3).unwrap();
        let s = Patch::extract(&map, (r.source[0], r.source[1]), 3).unwrap();
        assert_eq!(q.values, s.values, "{r:?}");
    }
    let swapped = patch_swap(&map, &brute).unwrap();
    for (a, b) in swapped.data().iter().zip(map.data()) {
        assert!((a - b).abs() <= 1e-6);
    }
    let conv = match_convolutional(&map, &fmask, 3).unwrap();
    for (b, c) in brute.records.iter().zip(&conv.records) {
        assert_eq!((b.query, b.source), (c.query, c.source));
        assert!((b.score - c.score).abs() <= 1e-12);
    }
}

#[test]
fn swap_empty_and_single() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let map = random_map(&mut rng, 2, 10, 10);
    assert_eq!(patch_swap(&map, &PatchAssignment::empty(&map, 3)).unwrap(), map);

    let mut a = PatchAssignment::empty(&map, 3);
    a.records.push(MatchRecord {
        query: [2, 2],
        source: [7, 6],
        score: 0.5,
    });
    let out = patch_swap(&map, &a).unwrap();
    for c in 0..2 {
        for y in 0..10 {
            for x in 0..10 {
                let expected = if (1..=3).contains(&y) && (1..=3).contains(&x) {
                    map.get(c, y + 5, x + 4)
                } else {
                    map.get(c, y, x)
                };
                assert_eq!(out.get(c, y, x), expected);
            }
        }
    }

    let other = random_map(&mut rng, 2, 9, 10);
    assert!(matches!(patch_swap(&other, &a), Err(Error::Shape(_))));
    a.records[0].source = [9, 6];
    assert!(matches!(patch_swap(&map, &a), Err(Error::Shape(_))));
}

#[test]
fn swap_stays_in_candidate_hull() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let map = random_map(&mut rng, 3, 16, 16);
    let fmask = rect_mask(16, 16, 5, 4, 5, 6);
    let a = match_convolutional(&map, &fmask, 3).unwrap();
    let out = patch_swap(&map, &a).unwrap();
    let cands = enumerate_candidate_patches(&fmask, 3).unwrap();
    for c in 0..3 {
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        for &(y, x) in &cands {
            for yy in y - 1..=y + 1 {
                for xx in x - 1..=x + 1 {
                    lo = lo.min(map.get(c, yy, xx));
                    hi = hi.max(map.get(c, yy, xx));
                }
            }
        }
        for y in 0..16 {
            for x in 0..16 {
                if out.get(c, y, x) != map.get(c, y, x) {
                    let v = out.get(c, y, x);
                    assert!(v >= lo - 1e-6 && v <= hi + 1e-6);
                }
            }
        }
    }
}

#[test]
fn cross_map_identity_style() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let content = random_map(&mut rng, 4, 11, 13);
    for matcher in [Matcher::Brute, Matcher::Conv] {
        let (out, a) = cross_map_swap(&content, &content, 3, matcher).unwrap();
        for r in &a.records {
            assert_eq!(r.query, r.source);
        }
        for (x, y) in out.data().iter().zip(content.data()) {
            assert!((x - y).abs() <= 1e-6);
        }
        assert_eq!(a.source_dims, Some([4, 11, 13]));
    }
}

#[test]
fn cross_map_forced_match() {
    let content = map_from_fn(1, 3, 3, |_, y, x| (y * 3 + x) as f32);
    let style = map_from_fn(1, 3, 3, |_, y, x| 10.0 - (y + x) as f32);
    let (out, a) = cross_map_swap(&content, &style, 3, Matcher::Conv).unwrap();
    assert_eq!(a.len(), 1);
    assert_eq!(out.data(), style.data());
}

#[test]
fn cross_map_matches_exhaustive_enumeration() {
    let content = map_from_fn(3, 7, 8, |ch, y, x| f32::from(u8::from(ch == (y + 2 * x) % 3)));
    let style = map_from_fn(3, 6, 9, |ch, y, x| {
        if ch == (2 * y + x) % 3 {
            1.0
        } else {
            0.2 * ((y * 7 + x * 3 + ch) % 4) as f32
        }
    });
    let (_, a) = cross_map_swap(&content, &style, 3, Matcher::Conv).unwrap();
    let cands = all_centers(6, 9, 3);
    for r in &a.records {
        let q = Patch::extract(&content, (r.query[0], r.query[1]), 3).unwrap();
        let scores: Vec<f64> = cands
            .iter()
            .map(|&c| ncc(&q, &Patch::extract(&style, c, 3).unwrap()).unwrap())
            .collect();
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let first = scores.iter().position(|&s| s >= best - TIE_TOLERANCE).unwrap();
        assert_eq!(r.source, [cands[first].0, cands[first].1]);
        assert!((r.score - scores[first]).abs() <= 1e-9);
    }
}

#[test]
fn cross_map_errors() {
    let a = map_from_fn(2, 5, 5, |_, _, _| 1.0);
    let b = map_from_fn(3, 5, 5, |_, _, _| 1.0);
    assert!(matches!(cross_map_swap(&a, &b, 3, Matcher::Conv), Err(Error::Shape(_))));
    let tiny = map_from_fn(2, 2, 5, |_, _, _| 1.0);
    assert!(matches!(cross_map_swap(&a, &tiny, 3, Matcher::Conv), Err(Error::NoCandidates { .. })));
}

#[test]
fn assignment_json_shape() {
    let map = map_from_fn(2, 6, 6, |c, y, x| (c + y * x) as f32);
    let fmask = rect_mask(6, 6, 2, 2, 1, 1);
    let a = match_convolutional(&map, &fmask, 1).unwrap();
    let json: serde_json::Value = serde_json::to_value(&a).unwrap();
    assert_eq!(json["patch_size"], 1);
    assert_eq!(json["dims"], serde_json::json!([2, 6, 6]));
    assert_eq!(json["records"][0]["q"], serde_json::json!([2, 2]));
    assert!(json["records"][0]["s"].is_array());
    assert!(json["records"][0]["score"].is_number());
    assert!(json.get("source_dims").is_none());
    let back: PatchAssignment = serde_json::from_value(json).unwrap();
    assert_eq!(back, a);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let map = random_map(&mut rng, 16, 30, 30);
    let fmask = rect_mask(30, 30, 8, 10, 12, 9);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| match_convolutional(&map, &fmask, 3).unwrap())
    };
    let one = run(1);
    assert_eq!(run(3), one);
    assert_eq!(run(8), one);
}

fn arb_case() -> impl Strategy<Value = (FeatureMap, FeatureMask, usize)> {
    (
        prop::sample::select(vec![1usize, 2, 5]),
        6usize..20,
        6usize..20,
        prop::sample::select(vec![1usize, 3, 5]),
        any::<u64>(),
    )
        .prop_map(|(c, h, w, k, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let map = random_map(&mut rng, c, h, w);
            let rh = rng.random_range(1..=h / 3);
            let rw = rng.random_range(1..=w / 3);
            let y0 = rng.random_range(0..=h - rh);
            let x0 = rng.random_range(0..=w - rw);
            (map, rect_mask(h, w, y0, x0, rh, rw), k)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv_equals_brute((map, fmask, k) in arb_case()) {
        let brute = match_brute_force(&map, &fmask, k);
        let conv = match_convolutional(&map, &fmask, k);
        match (brute, conv) {
            (Ok(b), Ok(c)) => {
                prop_assert_eq!(b.records.len(), c.records.len());
                for (rb, rc) in b.records.iter().zip(&c.records) {
                    prop_assert_eq!(rb.query, rc.query);
                    prop_assert_eq!(rb.source, rc.source);
                    prop_assert!((rb.score - rc.score).abs() <= 1e-5);
                    prop_assert!(rb.score.abs() <= 1.0 + 1e-5);
                    let [sy, sx] = rb.source;
                    prop_assert_eq!(footprint_hits(&fmask, (sy, sx), k), 0);
                }
            }
            (Err(Error::NoCandidates { .. }), Err(Error::NoCandidates { .. })) => {}
            (b, c) => prop_assert!(false, "diverging outcomes: {:?} / {:?}", b.err(), c.err()),
        }
    }
}
