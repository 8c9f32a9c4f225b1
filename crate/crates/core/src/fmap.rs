//! Feature maps, their hole masks, and the `FMAP` interchange format.
//!
//! An `FMAP` file is a 24-byte little-endian header followed by the payload:
//!
//! ```text
//! offset  size  field
//!      0     4  magic  "FMAP"
//!      4     4  version (u32, always 1)
//!      8     4  channels C (u32)
//!     12     4  height H (u32)
//!     16     4  width W (u32)
//!     20     4  stride (u32, image pixels per cell)
//!     24  4CHW  f32 values, channel-major (c, y, x)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Mask;

pub const FMAP_MAGIC: [u8; 4] = *b"FMAP";
pub const FMAP_VERSION: u32 = 1;
pub const FMAP_HEADER_LEN: usize = 24;

/// A `C x H x W` tensor of real features laid out channel-major, tied to an
/// image through an integer stride.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    stride: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, stride: usize, data: Vec<f32>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Dimension(format!(
                "feature map {channels}x{height}x{width} has an empty axis"
            )));
        }
        if stride == 0 {
            return Err(Error::invalid("stride", "must be at least 1"));
        }
        if data.len() != channels * height * width {
            return Err(Error::Dimension(format!(
                "{channels}x{height}x{width} map needs {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            channels,
            height,
            width,
            stride,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize, stride: usize) -> Result<Self> {
        Self::new(channels, height, width, stride, vec![0.0; channels * height * width])
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// `(C, H, W)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    /// Checks that the grid covers a `height x width` image at this stride,
    /// i.e. `|cells * stride - pixels| < stride` on both axes.
    pub fn check_geometry(&self, height: usize, width: usize) -> Result<()> {
        check_grid(self.height, self.width, self.stride, height, width)
    }
}

pub(crate) fn check_grid(cells_h: usize, cells_w: usize, stride: usize, height: usize, width: usize) -> Result<()> {
    if stride == 0 {
        return Err(Error::invalid("stride", "must be at least 1"));
    }
    if (cells_h * stride).abs_diff(height) >= stride || (cells_w * stride).abs_diff(width) >= stride {
        return Err(Error::Dimension(format!(
            "{cells_h}x{cells_w} grid at stride {stride} does not cover a {height}x{width} image"
        )));
    }
    Ok(())
}

/// Hole region projected onto a feature grid (`true` = cell in the hole).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl FeatureMask {
    pub fn new(height: usize, width: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::Dimension(format!(
                "{height}x{width} feature mask needs {} cells, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self::new(height, width, vec![false; height * width]).expect("length matches")
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let data = (0..height * width).map(|i| f(i / width, i % width)).collect();
        Self::new(height, width, data).expect("length matches")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn check_matches(&self, map: &FeatureMap) -> Result<()> {
        if self.dims() != (map.height(), map.width()) {
            return Err(Error::Dimension(format!(
                "feature mask is {}x{} but feature map is {}x{}",
                self.height,
                self.width,
                map.height(),
                map.width()
            )));
        }
        Ok(())
    }
}

/// Projects an image hole onto a feature grid. A cell is in the hole when any
/// pixel of its `stride x stride` block (clipped to the image) is.
pub fn downsample_mask(mask: &Mask, stride: usize, fm_height: usize, fm_width: usize) -> Result<FeatureMask> {
    check_grid(fm_height, fm_width, stride, mask.height(), mask.width())?;
    Ok(FeatureMask::from_fn(fm_height, fm_width, |i, j| {
        let ys = (i * stride).min(mask.height())..((i + 1) * stride).min(mask.height());
        let xs = (j * stride).min(mask.width())..((j + 1) * stride).min(mask.width());
        ys.into_iter().any(|y| xs.clone().any(|x| mask.get(y, x)))
    }))
}

/// Serializes `map`, returning the number of bytes written.
pub fn write_fmap<W: Write>(map: &FeatureMap, mut sink: W) -> Result<u64> {
    let mut offset = 0u64;
    let mut put = |bytes: &[u8], offset: &mut u64| -> Result<()> {
        sink.write_all(bytes).map_err(|source| Error::Io { offset: *offset, source })?;
        *offset += bytes.len() as u64;
        Ok(())
    };

    let mut header = [0u8; FMAP_HEADER_LEN];
    header[0..4].copy_from_slice(&FMAP_MAGIC);
    for (slot, value) in [FMAP_VERSION, map.channels as u32, map.height as u32, map.width as u32, map.stride as u32]
        .into_iter()
        .enumerate()
    {
        header[4 + 4 * slot..8 + 4 * slot].copy_from_slice(&value.to_le_bytes());
    }
    put(&header, &mut offset)?;

    let mut buf = Vec::with_capacity(4 * 4096);
    for chunk in map.data.chunks(4096) {
        buf.clear();
        buf.extend(chunk.iter().flat_map(|v| v.to_le_bytes()));
        put(&buf, &mut offset)?;
    }
    sink.flush().map_err(|source| Error::Io { offset, source })?;
    Ok(offset)
}

pub fn read_fmap<R: Read>(mut source: R) -> Result<FeatureMap> {
    let mut header = Vec::with_capacity(FMAP_HEADER_LEN);
    (&mut source)
        .take(FMAP_HEADER_LEN as u64)
        .read_to_end(&mut header)
        .map_err(|source| Error::Io { offset: 0, source })?;
    if header.len() >= 4 && header[0..4] != FMAP_MAGIC {
        let mut found = [0u8; 4];
        found.copy_from_slice(&header[0..4]);
        return Err(Error::BadMagic { found });
    }
    if header.len() < FMAP_HEADER_LEN {
        return Err(Error::Truncated {
            expected: FMAP_HEADER_LEN as u64,
            actual: header.len() as u64,
        });
    }
    let field = |slot: usize| u32::from_le_bytes(header[4 + 4 * slot..8 + 4 * slot].try_into().unwrap());
    let version = field(0);
    if version != FMAP_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let (channels, height, width, stride) = (field(1) as usize, field(2) as usize, field(3) as usize, field(4) as usize);

    let count = channels
        .checked_mul(height)
        .and_then(|n| n.checked_mul(width))
        .ok_or_else(|| Error::Dimension(format!("{channels}x{height}x{width} overflows")))?;
    let expected = 4 * count as u64;
    let mut payload = Vec::new();
    (&mut source)
        .take(expected)
        .read_to_end(&mut payload)
        .map_err(|source| Error::Io {
            offset: FMAP_HEADER_LEN as u64,
            source,
        })?;
    if (payload.len() as u64) < expected {
        return Err(Error::Truncated {
            expected: FMAP_HEADER_LEN as u64 + expected,
            actual: (FMAP_HEADER_LEN + payload.len()) as u64,
        });
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    FeatureMap::new(channels, height, width, stride, data)
}

pub fn save_fmap(map: &FeatureMap, path: impl AsRef<Path>) -> Result<u64> {
    let file = File::create(path.as_ref()).map_err(|source| Error::Io { offset: 0, source })?;
    write_fmap(map, BufWriter::new(file))
}

pub fn load_fmap(path: impl AsRef<Path>) -> Result<FeatureMap> {
    let file = File::open(path.as_ref()).map_err(|source| Error::Io { offset: 0, source })?;
    read_fmap(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn encode(map: &FeatureMap) -> Vec<u8> {
        let mut bytes = Vec::new();
        write_fmap(map, &mut bytes).unwrap();
        bytes
    }

    #[test]
    fn single_value_layout() {
        let map = FeatureMap::new(1, 1, 1, 4, vec![0.5]).unwrap();
        let bytes = encode(&map);
        assert_eq!(bytes.len(), 28);
        assert_eq!(&bytes[0..4], b"FMAP");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[20..24], &4u32.to_le_bytes());
        assert_eq!(&bytes[24..28], &0.5f32.to_le_bytes());
    }

    #[test]
    fn relu3_1_sized_payload() {
        let map = FeatureMap::zeros(256, 64, 64, 4).unwrap();
        let written = write_fmap(&map, std::io::sink()).unwrap();
        assert_eq!(written - FMAP_HEADER_LEN as u64, 4_194_304);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode(&FeatureMap::zeros(1, 2, 2, 1).unwrap());
        bytes[0] = b'X';
        assert!(matches!(read_fmap(&bytes[..]), Err(Error::BadMagic { found }) if &found == b"XMAP"));
    }

    #[test]
    fn bad_version() {
        let mut bytes = encode(&FeatureMap::zeros(1, 2, 2, 1).unwrap());
        bytes[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(read_fmap(&bytes[..]), Err(Error::UnsupportedVersion(2))));
    }

    #[test]
    fn truncated_payload() {
        let bytes = encode(&FeatureMap::zeros(2, 3, 3, 1).unwrap());
        let err = read_fmap(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(matches!(err, Error::Truncated { expected: 96, actual: 95 }), "{err}");
        assert!(matches!(read_fmap(&bytes[..10]), Err(Error::Truncated { .. })));
    }

    #[test]
    fn non_finite_payload_reports_index() {
        let mut bytes = encode(&FeatureMap::zeros(1, 2, 2, 1).unwrap());
        bytes[24 + 8..24 + 12].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(read_fmap(&bytes[..]), Err(Error::NonFinite { index: 2 })));
    }

    #[test]
    fn write_failure_reports_offset() {
        struct Limited(usize);
        impl Write for Limited {
            fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
                if self.0 == 0 {
                    return Err(std::io::Error::other("full"));
                }
                let n = buf.len().min(self.0);
                self.0 -= n;
                Ok(n)
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        let map = FeatureMap::zeros(1, 4, 4, 1).unwrap();
        let err = write_fmap(&map, Limited(30)).unwrap_err();
        assert!(matches!(err, Error::Io { offset: 24, .. }), "{err}");
    }

    #[test]
    fn downsample_empty_mask() {
        let fm = downsample_mask(&Mask::empty(16, 16), 4, 4, 4).unwrap();
        assert_eq!(fm.count(), 0);
    }

    #[test]
    fn downsample_centered_hole() {
        // Enumerate which 4x4 blocks intersect [64, 192)^2: cells 16..48.
        let mask = Mask::from_fn(256, 256, |y, x| (64..192).contains(&y) && (64..192).contains(&x));
        let fm = downsample_mask(&mask, 4, 64, 64).unwrap();
        for i in 0..64 {
            for j in 0..64 {
                let expected = (0..4).any(|d| (64..192).contains(&(4 * i + d)))
                    && (0..4).any(|d| (64..192).contains(&(4 * j + d)));
                assert_eq!(fm.get(i, j), expected);
            }
        }
        assert_eq!(fm.count(), 32 * 32);
        assert!(fm.get(16, 16) && fm.get(47, 47) && !fm.get(15, 16) && !fm.get(48, 47));
    }

    #[test]
    fn downsample_single_pixel() {
        let mut mask = Mask::empty(16, 16);
        mask.set(0, 0, true);
        let fm = downsample_mask(&mask, 4, 4, 4).unwrap();
        assert_eq!(fm.count(), 1);
        assert!(fm.get(0, 0));
    }

    #[test]
    fn downsample_partial_blocks_and_geometry_check() {
        let mut mask = Mask::empty(10, 10);
        mask.set(9, 9, true);
        let fm = downsample_mask(&mask, 4, 3, 3).unwrap();
        assert!(fm.get(2, 2));
        assert_eq!(fm.count(), 1);
        assert!(matches!(downsample_mask(&mask, 4, 1, 3), Err(Error::Dimension(_))));
        // Two cells reach 8 of 10 pixels, which is still within one stride.
        assert!(downsample_mask(&mask, 4, 2, 3).is_ok());
        assert!(matches!(downsample_mask(&mask, 4, 4, 3), Err(Error::Dimension(_))));
    }

    fn arb_map() -> impl Strategy<Value = FeatureMap> {
        (1usize..4, 1usize..6, 1usize..6, 1usize..9).prop_flat_map(|(c, h, w, s)| {
            prop::collection::vec(-1e6f32..1e6, c * h * w)
                .prop_map(move |data| FeatureMap::new(c, h, w, s, data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(map in arb_map()) {
            let bytes = encode(&map);
            prop_assert_eq!(bytes.len(), 24 + 4 * map.data().len());
            let back = read_fmap(&bytes[..]).unwrap();
            prop_assert_eq!(&back, &map);
            prop_assert_eq!(encode(&back), bytes);
        }

        #[test]
        fn downsample_is_monotone(
            bits in prop::collection::vec(any::<bool>(), 13 * 11),
            extra in prop::collection::vec(any::<bool>(), 13 * 11),
            stride in 1usize..5,
        ) {
            let a = Mask::new(13, 11, bits.clone()).unwrap();
            let b = Mask::new(13, 11, bits.iter().zip(&extra).map(|(x, y)| *x || *y).collect()).unwrap();
            let (fh, fw) = (13usize.div_ceil(stride), 11usize.div_ceil(stride));
            let fa = downsample_mask(&a, stride, fh, fw).unwrap();
            let fb = downsample_mask(&b, stride, fh, fw).unwrap();
            for (x, y) in fa.data().iter().zip(fb.data()) {
                prop_assert!(!*x || *y);
            }
        }
    }
}
