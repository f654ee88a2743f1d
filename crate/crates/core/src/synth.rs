//! Synthetic bias injection: parametric color transforms with known ground
//! truth, plus a seeded corpus generator. Together with the naive reference
//! metrics in [`crate::oracle`] these let the tests plant a bias, measure it
//! through the pipeline, and verify both against each other.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::color::{hsv_to_rgb, rgb_to_hsv, Channel, Hsv, Rgb8};
use crate::dataset::{Category, Raster};
use crate::local::MudImage;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("channel offset only applies to R, G, or B (got {0})")]
    NonRgbChannel(Channel),
    #[error("saturation factor {0} outside [0, 2]")]
    SaturationFactorRange(f64),
    #[error("blend alpha {0} outside [0, 1]")]
    AlphaRange(f64),
}

/// Pixelwise transform with a known parametric effect.
#[derive(Debug, Clone)]
pub enum SyntheticTransform {
    Identity,
    /// Add `amount` to one RGB channel, clamping to [0, 255].
    ChannelOffset { channel: Channel, amount: i16 },
    /// Scale HSV saturation by `factor` in [0, 2], clamping S to [0, 100].
    SaturationScale { factor: f64 },
    /// Blend each pixel toward its cell's mud color in RGB;
    /// alpha 1.0 lands exactly on the mud color.
    MudBlend { alpha: f64, mud: MudImage },
}

impl SyntheticTransform {
    pub fn channel_offset(channel: Channel, amount: i16) -> Result<Self, SynthError> {
        match channel {
            Channel::R | Channel::G | Channel::B => Ok(Self::ChannelOffset { channel, amount }),
            other => Err(SynthError::NonRgbChannel(other)),
        }
    }

    pub fn saturation_scale(factor: f64) -> Result<Self, SynthError> {
        if !(0.0..=2.0).contains(&factor) {
            return Err(SynthError::SaturationFactorRange(factor));
        }
        Ok(Self::SaturationScale { factor })
    }

    pub fn mud_blend(alpha: f64, mud: MudImage) -> Result<Self, SynthError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(SynthError::AlphaRange(alpha));
        }
        Ok(Self::MudBlend { alpha, mud })
    }
}

/// Cell row/column of a pixel center under the grid partition
/// (used to pick the mud color a pixel blends toward).
fn cell_of(coord: usize, extent: usize, grid: usize) -> usize {
    // center of pixel `coord` is (coord + 0.5); cell = floor(center * g / extent)
    (((2 * coord + 1) * grid) / (2 * extent)).min(grid - 1)
}

/// Apply a transform pixelwise. Deterministic; identity is byte-exact.
pub fn apply_transform(raster: &Raster, transform: &SyntheticTransform) -> Raster {
    match transform {
        SyntheticTransform::Identity => raster.clone(),
        SyntheticTransform::ChannelOffset { channel, amount } => {
            let offset = |v: u8| (v as i32 + *amount as i32).clamp(0, 255) as u8;
            let pixels = raster
                .pixels
                .iter()
                .map(|&p| match channel {
                    Channel::R => Rgb8::new(offset(p.r), p.g, p.b),
                    Channel::G => Rgb8::new(p.r, offset(p.g), p.b),
                    Channel::B => Rgb8::new(p.r, p.g, offset(p.b)),
                    _ => unreachable!("validated at construction"),
                })
                .collect();
            Raster { width: raster.width, height: raster.height, pixels }
        }
        SyntheticTransform::SaturationScale { factor } => {
            let pixels = raster
                .pixels
                .iter()
                .map(|&p| {
                    let hsv = rgb_to_hsv(p);
                    hsv_to_rgb(Hsv { h: hsv.h, s: (hsv.s * factor).clamp(0.0, 100.0), v: hsv.v })
                })
                .collect();
            Raster { width: raster.width, height: raster.height, pixels }
        }
        SyntheticTransform::MudBlend { alpha, mud } => {
            let g = mud.grid.size();
            let blend = |v: u8, target: f64| -> u8 {
                ((1.0 - alpha) * v as f64 + alpha * target).round().clamp(0.0, 255.0) as u8
            };
            let mut pixels = Vec::with_capacity(raster.pixels.len());
            for y in 0..raster.height {
                let i = cell_of(y, raster.height, g);
                for x in 0..raster.width {
                    let j = cell_of(x, raster.width, g);
                    let target = mud.grid.get(i, j);
                    let p = raster.pixels[y * raster.width + x];
                    pixels.push(Rgb8::new(
                        blend(p.r, target[0]),
                        blend(p.g, target[1]),
                        blend(p.b, target[2]),
                    ));
                }
            }
            Raster { width: raster.width, height: raster.height, pixels }
        }
    }
}

/// Options for the seeded test-corpus generator. Each image gets a dominant
/// hue with per-pixel jitter, so cells stay saturated and image palettes are
/// well separated from the corpus average.
#[derive(Debug, Clone)]
pub struct CorpusOptions {
    pub count: usize,
    pub seed: u64,
    pub min_dim: usize,
    pub max_dim: usize,
    /// Cap pixel values at 245 so channel offsets up to +10 cannot clamp.
    pub value_headroom: bool,
    /// Additionally generate this many 128x128 images carrying one
    /// near-clamp pixel (B = 250) in every cell of their own partition, so
    /// dataset-mean blue shifts stay strictly below the injected offset.
    pub clamp_coverage_images: usize,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self {
            count: 20,
            seed: 7,
            min_dim: 64,
            max_dim: 512,
            value_headroom: true,
            clamp_coverage_images: 0,
        }
    }
}

const CORPUS_CATEGORIES: [Category; 5] = [
    Category::Urban,
    Category::NatureLandscape,
    Category::Workplace,
    Category::Cultural,
    Category::Industrial,
];

fn generate_image(rng: &mut ChaCha8Rng, width: usize, height: usize, headroom: bool) -> Raster {
    let base_hue: f64 = rng.gen_range(0.0..360.0);
    let base_sat: f64 = rng.gen_range(45.0..85.0);
    let base_val: f64 = rng.gen_range(35.0..80.0);
    let v_cap = if headroom { 96.0 } else { 100.0 };
    let pixels = (0..width * height)
        .map(|_| {
            let h = (base_hue + rng.gen_range(-25.0..25.0)).rem_euclid(360.0);
            let s = (base_sat + rng.gen_range(-15.0..15.0)).clamp(25.0, 100.0);
            let v = (base_val + rng.gen_range(-18.0..18.0)).clamp(10.0, v_cap);
            hsv_to_rgb(Hsv { h, s, v })
        })
        .collect();
    Raster { width, height, pixels }
}

/// Generate a deterministic synthetic corpus: `count` images of mixed sizes
/// and aspect ratios plus the requested clamp-coverage images, with
/// categories assigned round-robin.
pub fn generate_corpus(options: &CorpusOptions) -> Vec<(Raster, Category)> {
    assert!(options.min_dim >= 1 && options.max_dim >= options.min_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut out = Vec::with_capacity(options.count + options.clamp_coverage_images);
    for k in 0..options.count {
        let width = rng.gen_range(options.min_dim..=options.max_dim);
        let height = rng.gen_range(options.min_dim..=options.max_dim);
        let raster = generate_image(&mut rng, width, height, options.value_headroom);
        out.push((raster, CORPUS_CATEGORIES[k % CORPUS_CATEGORIES.len()]));
    }
    for k in 0..options.clamp_coverage_images {
        let mut raster = generate_image(&mut rng, 128, 128, true);
        // one near-clamp blue pixel per 2x2 cell block
        for i in 0..64 {
            for j in 0..64 {
                raster.pixels[(2 * i) * 128 + 2 * j].b = 250;
            }
        }
        out.push((raster, CORPUS_CATEGORIES[(options.count + k) % CORPUS_CATEGORIES.len()]));
    }
    out
}

/// Write a corpus and its transformed counterpart to disk as PNGs under
/// `originals/` and `colorized/`, plus a `manifest.csv` pairing them.
/// Returns the manifest path.
pub fn write_corpus(
    corpus: &[(Raster, Category)],
    transform: &SyntheticTransform,
    dir: &std::path::Path,
) -> std::io::Result<std::path::PathBuf> {
    use std::io::Write;

    let originals = dir.join("originals");
    let colorized = dir.join("colorized");
    std::fs::create_dir_all(&originals)?;
    std::fs::create_dir_all(&colorized)?;

    let mut manifest = String::from("original,colorized,category\n");
    for (k, (raster, category)) in corpus.iter().enumerate() {
        let name = format!("{k:05}.png");
        crate::dataset::save_raster(raster, &originals.join(&name))
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        let transformed = apply_transform(raster, transform);
        crate::dataset::save_raster(&transformed, &colorized.join(&name))
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        manifest.push_str(&format!("originals/{name},colorized/{name},{category}\n"));
    }
    let manifest_path = dir.join("manifest.csv");
    let mut f = std::fs::File::create(&manifest_path)?;
    f.write_all(manifest.as_bytes())?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::aggregate_to_cells;
    use crate::local::compute_mud;

    fn patterned(w: usize, h: usize, salt: u64) -> Raster {
        let pixels = (0..w * h)
            .map(|k| {
                let v = (k as u64).wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(salt);
                Rgb8::new((v >> 16) as u8, (v >> 32) as u8, (v >> 48) as u8)
            })
            .collect();
        Raster { width: w, height: h, pixels }
    }

    #[test]
    fn identity_is_byte_exact() {
        let r = patterned(31, 17, 5);
        assert_eq!(apply_transform(&r, &SyntheticTransform::Identity), r);
    }

    #[test]
    fn channel_offset_adds_and_clamps() {
        let r = Raster {
            width: 2,
            height: 1,
            pixels: vec![Rgb8::new(0, 0, 250), Rgb8::new(5, 5, 100)],
        };
        let t = SyntheticTransform::channel_offset(Channel::B, 10).unwrap();
        let out = apply_transform(&r, &t);
        assert_eq!(out.pixels[0], Rgb8::new(0, 0, 255), "clamped at 255");
        assert_eq!(out.pixels[1], Rgb8::new(5, 5, 110));

        let t = SyntheticTransform::channel_offset(Channel::R, -10).unwrap();
        let out = apply_transform(&r, &t);
        assert_eq!(out.pixels[0].r, 0, "clamped at 0");

        assert_eq!(
            SyntheticTransform::channel_offset(Channel::LStar, 1).unwrap_err(),
            SynthError::NonRgbChannel(Channel::LStar)
        );
    }

    #[test]
    fn saturation_scale_halves_saturation() {
        let r = Raster { width: 1, height: 1, pixels: vec![Rgb8::new(200, 100, 100)] };
        let t = SyntheticTransform::saturation_scale(0.5).unwrap();
        let out = apply_transform(&r, &t);
        let s_before = rgb_to_hsv(r.pixels[0]).s;
        let s_after = rgb_to_hsv(out.pixels[0]).s;
        assert!(
            (s_after - s_before / 2.0).abs() < 1.0,
            "{s_before} -> {s_after}"
        );

        assert!(SyntheticTransform::saturation_scale(2.5).is_err());
        assert!(SyntheticTransform::saturation_scale(-0.1).is_err());
    }

    #[test]
    fn full_mud_blend_lands_on_the_mud_colors() {
        let reference = patterned(64, 64, 3);
        let mud = compute_mud([&reference], 64).unwrap();
        let r = patterned(128, 128, 77);
        let t = SyntheticTransform::mud_blend(1.0, mud.clone()).unwrap();
        let out = apply_transform(&r, &t);
        for y in 0..128 {
            for x in 0..128 {
                let cell = mud.grid.get(y / 2, x / 2);
                let want = Rgb8::new(
                    cell[0].round() as u8,
                    cell[1].round() as u8,
                    cell[2].round() as u8,
                );
                assert_eq!(out.pixels[y * 128 + x], want, "pixel ({x},{y})");
            }
        }

        assert!(SyntheticTransform::mud_blend(1.5, mud).is_err());
    }

    #[test]
    fn corpus_is_deterministic_and_sized() {
        let opts = CorpusOptions { count: 6, seed: 42, clamp_coverage_images: 2, ..Default::default() };
        let a = generate_corpus(&opts);
        let b = generate_corpus(&opts);
        assert_eq!(a.len(), 8);
        for ((ra, ca), (rb, cb)) in a.iter().zip(&b) {
            assert_eq!(ra, rb);
            assert_eq!(ca, cb);
            assert!(ra.width >= 64 && ra.width <= 512);
            assert!(ra.height >= 64 && ra.height <= 512);
        }
        // coverage images carry the near-clamp marker in every cell
        let coverage = &a[6].0;
        assert_eq!((coverage.width, coverage.height), (128, 128));
        for i in 0..64 {
            for j in 0..64 {
                assert_eq!(coverage.pixels[(2 * i) * 128 + 2 * j].b, 250);
            }
        }
    }

    #[test]
    fn headroom_corpus_keeps_blue_below_246() {
        let opts = CorpusOptions { count: 4, seed: 9, ..Default::default() };
        for (raster, _) in generate_corpus(&opts) {
            assert!(raster.pixels.iter().all(|p| p.b <= 245));
        }
    }

    #[test]
    fn corpus_cells_stay_saturated() {
        // the per-image dominant hue keeps cell means clearly chromatic,
        // which the desaturation and mud experiments rely on
        let opts = CorpusOptions { count: 8, seed: 11, ..Default::default() };
        for (raster, _) in generate_corpus(&opts) {
            let cells = aggregate_to_cells(&raster, 64);
            for cell in cells.cells() {
                let s = crate::color::rgb_to_hsv_f64(*cell).s;
                assert!(s > 10.0, "cell saturation {s} too low for bias experiments");
            }
        }
    }
}
