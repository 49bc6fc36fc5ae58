//! Motion-blur synthesis with normalized box kernels.
//!
//! Intensity levels MB1..MB3 map to box kernels of 6x1, 18x6 and 45x12 taps
//! (width x height); MB0 is the 1x1 identity. Borders are mirrored without
//! repeating the edge sample (`dcb|abcd|cba`), the window is anchored at
//! `floor(tap / 2)`, and every output sample is the exact integer window sum
//! divided by the tap count with round-half-up.
//!
//! [`apply_blur`] is the separable sliding-window implementation used
//! everywhere; [`reference::naive_blur`] is the direct per-pixel double loop
//! that defines the expected output bit for bit.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Result};

/// An 8-bit raster, row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage("width and height must be positive"));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage("channel count must be 1 or 3"));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or(Error::InvalidImage("dimensions overflow"))?;
        if samples.len() != expected {
            return Err(Error::InvalidImage("sample count does not match dimensions"));
        }
        Ok(Self {
            width,
            height,
            channels,
            samples,
        })
    }

    /// Image with every sample set to `value`.
    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        let len = width.saturating_mul(height).saturating_mul(channels);
        Self::new(width, height, channels, vec![value; len])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    /// Sample at column `x`, row `y`, channel `c`.
    ///
    /// Panics if out of bounds.
    #[inline]
    pub fn sample(&self, x: usize, y: usize, c: usize) -> u8 {
        assert!(x < self.width && y < self.height && c < self.channels);
        self.samples[(y * self.width + x) * self.channels + c]
    }

    /// Extracts one channel as a grayscale image.
    pub fn channel(&self, c: usize) -> Image {
        assert!(c < self.channels, "channel {c} out of range");
        let samples = self
            .samples
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect();
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            samples,
        }
    }

    /// Interleaves three equally sized grayscale planes.
    pub fn from_planes(planes: &[Image; 3]) -> Result<Image> {
        let (w, h) = (planes[0].width, planes[0].height);
        if planes
            .iter()
            .any(|p| p.channels != 1 || p.width != w || p.height != h)
        {
            return Err(Error::InvalidImage("planes must be 1-channel and equally sized"));
        }
        let mut samples = Vec::with_capacity(w * h * 3);
        for i in 0..w * h {
            samples.extend(planes.iter().map(|p| p.samples[i]));
        }
        Image::new(w, h, 3, samples)
    }
}

/// Additional motion-blur intensity, ordered MB0 < MB1 < MB2 < MB3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlurLevel {
    Mb0,
    Mb1,
    Mb2,
    Mb3,
}

impl BlurLevel {
    pub const ALL: [BlurLevel; 4] = [BlurLevel::Mb0, BlurLevel::Mb1, BlurLevel::Mb2, BlurLevel::Mb3];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<BlurLevel> {
        Self::ALL.get(i).copied()
    }

    /// Token used in file formats: `MB0`..`MB3`.
    pub fn as_str(self) -> &'static str {
        match self {
            BlurLevel::Mb0 => "MB0",
            BlurLevel::Mb1 => "MB1",
            BlurLevel::Mb2 => "MB2",
            BlurLevel::Mb3 => "MB3",
        }
    }

    /// Box-kernel taps as (width, height).
    pub fn taps(self) -> (usize, usize) {
        match self {
            BlurLevel::Mb0 => (1, 1),
            BlurLevel::Mb1 => (6, 1),
            BlurLevel::Mb2 => (18, 6),
            BlurLevel::Mb3 => (45, 12),
        }
    }
}

impl fmt::Display for BlurLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BlurLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        BlurLevel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::UnknownLevel(t.into()))
    }
}

/// Normalized box kernel; every tap weighs `1 / (tap_width * tap_height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlurKernel {
    tap_width: usize,
    tap_height: usize,
    anchor_x: usize,
    anchor_y: usize,
}

impl BlurKernel {
    /// Box kernel anchored at `floor(tap / 2)` in each direction. Returns
    /// `None` for a zero tap count.
    pub fn new(tap_width: usize, tap_height: usize) -> Option<Self> {
        if tap_width == 0 || tap_height == 0 {
            return None;
        }
        Some(Self {
            tap_width,
            tap_height,
            anchor_x: tap_width / 2,
            anchor_y: tap_height / 2,
        })
    }

    pub fn tap_width(&self) -> usize {
        self.tap_width
    }

    pub fn tap_height(&self) -> usize {
        self.tap_height
    }

    pub fn anchor_x(&self) -> usize {
        self.anchor_x
    }

    pub fn anchor_y(&self) -> usize {
        self.anchor_y
    }

    pub fn tap_count(&self) -> usize {
        self.tap_width * self.tap_height
    }

    /// Tap weight as the exact fraction `(1, tap_count)`.
    pub fn weight(&self) -> (u32, u32) {
        (1, self.tap_count() as u32)
    }

    fn check_fits(&self, img: &Image) -> Result<()> {
        if self.tap_width > img.width || self.tap_height > img.height {
            return Err(Error::KernelTooLarge {
                kernel: (self.tap_width, self.tap_height),
                image: (img.width, img.height),
            });
        }
        Ok(())
    }
}

pub fn make_kernel(level: BlurLevel) -> BlurKernel {
    let (w, h) = level.taps();
    BlurKernel::new(w, h).expect("level taps are non-zero")
}

/// Mirror `pos` into `[0, len)` without repeating the edge sample.
#[inline]
pub(crate) fn reflect_101(pos: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let mut p = pos.rem_euclid(period);
    if p >= len as isize {
        p = period - p;
    }
    p as usize
}

/// Integer mean with round-half-up.
#[inline]
pub(crate) fn rounded_mean(sum: u32, count: u32) -> u8 {
    ((2 * sum + count) / (2 * count)) as u8
}

/// Blurs `img` with `kernel` using separable running sums.
///
/// A horizontal pass accumulates exact row sums over a mirrored row, then a
/// vertical pass slides a window of `tap_height` row sums down each column.
/// Both passes stay in integers so the result matches
/// [`reference::naive_blur`] exactly.
pub fn apply_blur(img: &Image, kernel: &BlurKernel) -> Result<Image> {
    kernel.check_fits(img)?;
    let (w, h, ch) = (img.width, img.height, img.channels);
    let (kw, kh) = (kernel.tap_width, kernel.tap_height);
    let (ax, ay) = (kernel.anchor_x as isize, kernel.anchor_y as isize);

    // Horizontal pass.
    let padded_w = w + kw - 1;
    let col_src: Vec<usize> = (0..padded_w)
        .map(|j| reflect_101(j as isize - ax, w))
        .collect();
    let mut row_sums = vec![0u32; w * h * ch];
    let mut padded = vec![0u32; padded_w * ch];
    for y in 0..h {
        let src = &img.samples[y * w * ch..(y + 1) * w * ch];
        for (j, &sx) in col_src.iter().enumerate() {
            for c in 0..ch {
                padded[j * ch + c] = src[sx * ch + c] as u32;
            }
        }
        let dst = &mut row_sums[y * w * ch..(y + 1) * w * ch];
        for c in 0..ch {
            let mut acc: u32 = (0..kw).map(|i| padded[i * ch + c]).sum();
            dst[c] = acc;
            for x in 1..w {
                acc += padded[(x + kw - 1) * ch + c];
                acc -= padded[(x - 1) * ch + c];
                dst[x * ch + c] = acc;
            }
        }
    }

    // Vertical pass.
    let row_len = w * ch;
    let row_src: Vec<usize> = (0..h + kh - 1)
        .map(|j| reflect_101(j as isize - ay, h))
        .collect();
    let count = kernel.tap_count() as u32;
    let mut acc = vec![0u32; row_len];
    for &sy in &row_src[..kh] {
        let row = &row_sums[sy * row_len..(sy + 1) * row_len];
        acc.iter_mut().zip(row).for_each(|(a, &v)| *a += v);
    }
    let mut out = vec![0u8; w * h * ch];
    for y in 0..h {
        let dst = &mut out[y * row_len..(y + 1) * row_len];
        dst.iter_mut()
            .zip(&acc)
            .for_each(|(d, &s)| *d = rounded_mean(s, count));
        if y + 1 < h {
            let add = row_src[y + kh] * row_len;
            let sub = row_src[y] * row_len;
            for i in 0..row_len {
                acc[i] += row_sums[add + i];
                acc[i] -= row_sums[sub + i];
            }
        }
    }
    Image::new(w, h, ch, out)
}

/// All four intensity variants of `img`; the MB0 entry is the input itself.
pub fn blur_variants(img: &Image) -> Result<BTreeMap<BlurLevel, Image>> {
    make_kernel(BlurLevel::Mb3).check_fits(img)?;
    let mut out = BTreeMap::new();
    out.insert(BlurLevel::Mb0, img.clone());
    for level in [BlurLevel::Mb1, BlurLevel::Mb2, BlurLevel::Mb3] {
        out.insert(level, apply_blur(img, &make_kernel(level))?);
    }
    Ok(out)
}

pub mod reference {
    //! Direct evaluation of the box filter, one output sample at a time.

    use super::{reflect_101, rounded_mean, BlurKernel, Image};
    use crate::Result;
    use alloc::vec::Vec;

    /// `O(w * h * c * kw * kh)` box blur. Slow; used to check
    /// [`super::apply_blur`].
    pub fn naive_blur(img: &Image, kernel: &BlurKernel) -> Result<Image> {
        kernel.check_fits(img)?;
        let (w, h, ch) = (img.width(), img.height(), img.channels());
        let mut out = Vec::with_capacity(w * h * ch);
        for y in 0..h {
            for x in 0..w {
                for c in 0..ch {
                    let mut sum = 0u32;
                    for j in 0..kernel.tap_height() {
                        let sy = reflect_101(
                            y as isize + j as isize - kernel.anchor_y() as isize,
                            h,
                        );
                        for i in 0..kernel.tap_width() {
                            let sx = reflect_101(
                                x as isize + i as isize - kernel.anchor_x() as isize,
                                w,
                            );
                            sum += img.sample(sx, sy, c) as u32;
                        }
                    }
                    out.push(rounded_mean(sum, kernel.tap_count() as u32));
                }
            }
        }
        Image::new(w, h, ch, out)
    }
}
