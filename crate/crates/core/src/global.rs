//! Global color bias: per-channel value-frequency histograms over every
//! pixel of every image on each side, and their normalized difference.
//!
//! Binning is fixed per channel: R, G, B use 256 unit bins over [0, 255];
//! L* uses 101 unit bins over [0, 100] with round-to-nearest; a* and b* use
//! 256 unit bins over [-128, 128) with floor. Counts are 64-bit because a
//! full dataset run exceeds 32-bit pixel counts. Accumulation is integer
//! addition, so histograms are identical under any merge order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{rgb_to_lab, Channel};
use crate::dataset::{ImagePair, Raster};

/// Per-channel histogram of pixel values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelHistogram {
    pub channel: Channel,
    pub counts: Vec<u64>,
    pub total: u64,
}

/// Number of bins for a histogram channel.
pub fn bin_count(channel: Channel) -> usize {
    match channel {
        Channel::R | Channel::G | Channel::B => 256,
        Channel::LStar => 101,
        Channel::AStar | Channel::BStar => 256,
        Channel::Saturation => panic!("saturation is not a histogram channel"),
    }
}

/// The channel value represented by a bin index (the bin's left edge for the
/// floor-binned channels, the rounded value for L*).
pub fn bin_value(channel: Channel, index: usize) -> f64 {
    match channel {
        Channel::R | Channel::G | Channel::B => index as f64,
        Channel::LStar => index as f64,
        Channel::AStar | Channel::BStar => index as f64 - 128.0,
        Channel::Saturation => panic!("saturation is not a histogram channel"),
    }
}

fn lab_bin(v: f64) -> usize {
    (v.floor() + 128.0).clamp(0.0, 255.0) as usize
}

impl ChannelHistogram {
    pub fn empty(channel: Channel) -> Self {
        Self { channel, counts: vec![0; bin_count(channel)], total: 0 }
    }
}

/// The six per-channel histograms for one side (original or colorized).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramSet {
    pub histograms: Vec<ChannelHistogram>,
}

impl Default for HistogramSet {
    fn default() -> Self {
        Self {
            histograms: Channel::HISTOGRAM
                .iter()
                .map(|&c| ChannelHistogram::empty(c))
                .collect(),
        }
    }
}

impl HistogramSet {
    /// Count every pixel of the raster into all six channels. Lab values are
    /// computed per pixel via the reference conversion.
    pub fn add_raster(&mut self, raster: &Raster) {
        let (left, right) = self.histograms.split_at_mut(3);
        let (hr, hg, hb) = match left {
            [a, b, c] => (a, b, c),
            _ => unreachable!(),
        };
        let (hl, ha, hbs) = match right {
            [a, b, c] => (a, b, c),
            _ => unreachable!(),
        };
        for &p in &raster.pixels {
            hr.counts[p.r as usize] += 1;
            hg.counts[p.g as usize] += 1;
            hb.counts[p.b as usize] += 1;
            let lab = rgb_to_lab(p);
            hl.counts[lab.l_star.round().clamp(0.0, 100.0) as usize] += 1;
            ha.counts[lab_bin(lab.a_star)] += 1;
            hbs.counts[lab_bin(lab.b_star)] += 1;
        }
        let n = raster.pixel_count() as u64;
        for h in &mut self.histograms {
            h.total += n;
        }
    }

    pub fn merge(&mut self, other: &HistogramSet) {
        for (a, b) in self.histograms.iter_mut().zip(&other.histograms) {
            debug_assert_eq!(a.channel, b.channel);
            for (x, y) in a.counts.iter_mut().zip(&b.counts) {
                *x += y;
            }
            a.total += b.total;
        }
    }

    pub fn channel(&self, channel: Channel) -> &ChannelHistogram {
        self.histograms
            .iter()
            .find(|h| h.channel == channel)
            .expect("histogram channel")
    }
}

/// Per-bin difference of normalized frequencies, colorized minus original.
/// Positive means the value occurs more often in the colorized images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDelta {
    pub channel: Channel,
    pub delta: Vec<f64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GlobalError {
    #[error("channel mismatch: {0} vs {1}")]
    ChannelMismatch(Channel, Channel),
    #[error("cannot normalize an empty histogram ({side} side has zero total)")]
    ZeroTotal { side: &'static str },
}

/// Normalized frequency difference between two histograms over the same
/// channel and binning.
pub fn histogram_delta(
    original: &ChannelHistogram,
    colorized: &ChannelHistogram,
) -> Result<ChannelDelta, GlobalError> {
    if original.channel != colorized.channel {
        return Err(GlobalError::ChannelMismatch(original.channel, colorized.channel));
    }
    if original.total == 0 {
        return Err(GlobalError::ZeroTotal { side: "original" });
    }
    if colorized.total == 0 {
        return Err(GlobalError::ZeroTotal { side: "colorized" });
    }
    let ot = original.total as f64;
    let ct = colorized.total as f64;
    let delta = original
        .counts
        .iter()
        .zip(&colorized.counts)
        .map(|(&o, &c)| c as f64 / ct - o as f64 / ot)
        .collect();
    Ok(ChannelDelta { channel: original.channel, delta })
}

/// Accumulate both sides' histograms over a pair stream.
pub fn accumulate_histograms<'a>(
    pairs: impl IntoIterator<Item = &'a ImagePair>,
) -> (HistogramSet, HistogramSet) {
    let mut original = HistogramSet::default();
    let mut colorized = HistogramSet::default();
    for pair in pairs {
        original.add_raster(&pair.original);
        colorized.add_raster(&pair.colorized);
    }
    (original, colorized)
}
