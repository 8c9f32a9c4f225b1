//! Hole generation for experiments: centered squares, explicit rectangles and
//! seeded random rectangles.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoleSpec {
    /// `side x side` square centered in the image.
    Center(usize),
    /// Explicit rectangle with top-left `(y, x)` and size `h x w`.
    Rect { y: usize, x: usize, h: usize, w: usize },
    /// `count` rectangles with heights and widths drawn from `[min_side, max_side]`.
    Random { min_side: usize, max_side: usize, count: usize },
}

impl fmt::Display for HoleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            HoleSpec::Center(s) => write!(f, "center:{s}"),
            HoleSpec::Rect { y, x, h, w } => write!(f, "rect:{y},{x},{h},{w}"),
            HoleSpec::Random {
                min_side,
                max_side,
                count,
            } => write!(f, "random:{min_side},{max_side},{count}"),
        }
    }
}

impl FromStr for HoleSpec {
    type Err = Error;

    /// Parses `center:N`, `rect:Y,X,H,W` or `random:MIN,MAX,COUNT`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid("hole spec", format!("{s:?}; expected center:N, rect:Y,X,H,W or random:MIN,MAX,COUNT"));
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums = args
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        match (kind.trim(), nums.as_slice()) {
            ("center", &[side]) => Ok(HoleSpec::Center(side)),
            ("rect", &[y, x, h, w]) => Ok(HoleSpec::Rect { y, x, h, w }),
            ("random", &[min_side, max_side, count]) => Ok(HoleSpec::Random {
                min_side,
                max_side,
                count,
            }),
            _ => Err(bad()),
        }
    }
}

/// Rasterizes `spec` into a `height x width` mask. Random holes depend only on
/// `seed`.
pub fn rasterize_hole(spec: HoleSpec, height: usize, width: usize, seed: u64) -> Result<Mask> {
    let mut mask = Mask::empty(height, width);
    let mut paint = |y: usize, x: usize, h: usize, w: usize| -> Result<()> {
        if y + h > height || x + w > width {
            return Err(Error::Bounds(format!(
                "{h}x{w} hole at ({y}, {x}) exceeds {height}x{width} image"
            )));
        }
        for yy in y..y + h {
            for xx in x..x + w {
                mask.set(yy, xx, true);
            }
        }
        Ok(())
    };

    match spec {
        HoleSpec::Center(side) => {
            if side > height || side > width {
                return Err(Error::Bounds(format!("center hole {side} exceeds {height}x{width} image")));
            }
            paint((height - side) / 2, (width - side) / 2, side, side)?;
        }
        HoleSpec::Rect { y, x, h, w } => paint(y, x, h, w)?,
        HoleSpec::Random {
            min_side,
            max_side,
            count,
        } => {
            if min_side > max_side {
                return Err(Error::invalid(
                    "hole spec",
                    format!("min side {min_side} exceeds max side {max_side}"),
                ));
            }
            if min_side == 0 {
                return Err(Error::invalid("hole spec", "min side must be at least 1"));
            }
            if max_side > height || max_side > width {
                return Err(Error::Bounds(format!(
                    "random holes up to {max_side} do not fit a {height}x{width} image"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..count {
                let h = rng.random_range(min_side..=max_side);
                let w = rng.random_range(min_side..=max_side);
                let y = rng.random_range(0..=height - h);
                let x = rng.random_range(0..=width - w);
                paint(y, x, h, w)?;
            }
        }
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_224_on_512() {
        let mask = rasterize_hole(HoleSpec::Center(224), 512, 512, 0).unwrap();
        for y in 0..512 {
            for x in 0..512 {
                let inside = (144..368).contains(&y) && (144..368).contains(&x);
                assert_eq!(mask.get(y, x), inside);
            }
        }
    }

    #[test]
    fn full_image_center_hole() {
        let mask = rasterize_hole(HoleSpec::Center(64), 64, 64, 0).unwrap();
        assert_eq!(mask.hole_count(), 64 * 64);
        assert!(!mask.has_boundary());
    }

    #[test]
    fn random_is_deterministic_and_in_range() {
        let spec = HoleSpec::Random {
            min_side: 32,
            max_side: 128,
            count: 1,
        };
        let a = rasterize_hole(spec, 256, 256, 7).unwrap();
        assert_eq!(a, rasterize_hole(spec, 256, 256, 7).unwrap());
        let n = a.hole_count();
        assert!((32 * 32..=128 * 128).contains(&n));
        let other = (0..20).any(|s| rasterize_hole(spec, 256, 256, s).unwrap() != a);
        assert!(other);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            rasterize_hole(HoleSpec::Rect { y: 10, x: 10, h: 8, w: 8 }, 16, 16, 0),
            Err(Error::Bounds(_))
        ));
        assert!(matches!(rasterize_hole(HoleSpec::Center(17), 16, 16, 0), Err(Error::Bounds(_))));
        assert!(matches!(
            rasterize_hole(
                HoleSpec::Random {
                    min_side: 9,
                    max_side: 8,
                    count: 1
                },
                16,
                16,
                0
            ),
            Err(Error::Invalid { .. })
        ));
    }

    #[test]
    fn parse_and_display() {
        for s in ["center:224", "rect:1,2,3,4", "random:32,128,3"] {
            assert_eq!(s.parse::<HoleSpec>().unwrap().to_string(), s);
        }
        assert!("center:".parse::<HoleSpec>().is_err());
        assert!("blob:3".parse::<HoleSpec>().is_err());
        assert!("rect:1,2,3".parse::<HoleSpec>().is_err());
    }
}
