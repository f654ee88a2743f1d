//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (run with `--nocapture` to see them). Every tolerance is
//! pinned here, in code.

use std::time::Instant;

use colorbias::color::{rgb_to_lab, Channel, Rgb8};
use colorbias::dataset::{Category, ImagePair, Raster};
use colorbias::grid::aggregate_to_cells;
use colorbias::local::{cell_lab_distance_grid, compute_mud, mean_shift_grid, mud_distance_delta};
use colorbias::oracle;
use colorbias::pipeline::{run, RunConfig};
use colorbias::regional::{all_masks, make_mask, regional_scores, top_n, MaskKind, RankBy};
use colorbias::synth::{
    apply_transform, generate_corpus, write_corpus, CorpusOptions, SyntheticTransform,
};

fn pass(criterion: u32, message: &str) {
    println!("acceptance {criterion}: PASS - {message}");
}

fn desk_pairs(rasters: Vec<Raster>, transform: &SyntheticTransform) -> Vec<ImagePair> {
    rasters
        .into_iter()
        .map(|original| {
            let colorized = apply_transform(&original, transform);
            ImagePair { original, colorized, category: Category::Other, converted_from_non_rgb: false }
        })
        .collect()
}

/// Criterion 1: with colorized == original over a 100-image desk corpus of
/// mixed sizes and aspect ratios, every metric is exactly zero, in under
/// ten seconds.
#[test]
fn criterion_1_identity_suite_is_exactly_zero() {
    let dir = tempfile::TempDir::new().unwrap();
    let corpus = generate_corpus(&CorpusOptions {
        count: 100,
        seed: 20260810,
        min_dim: 64,
        max_dim: 512,
        ..Default::default()
    });
    assert_eq!(corpus.len(), 100);
    let manifest = write_corpus(&corpus, &SyntheticTransform::Identity, dir.path()).unwrap();

    let config = RunConfig::new(&manifest, dir.path().join("out"));
    let started = Instant::now();
    let outcome = run(&config).unwrap();
    let elapsed = started.elapsed();

    let report = outcome.report;
    assert_eq!(report.pairs.processed, 100);
    assert_eq!(report.pairs.skipped, 0);

    assert_eq!(report.global.len(), 6);
    for delta in &report.global {
        assert!(
            delta.delta.iter().all(|&v| v == 0.0),
            "channel {} delta must be exactly zero",
            delta.channel
        );
    }
    assert!(!report.local.is_empty());
    for shift in &report.local {
        assert!(
            shift.grid.cells().iter().all(|&v| v == 0.0),
            "shift grid {} / {:?} must be exactly zero",
            shift.channel,
            shift.category
        );
    }
    let mud = report.mud.as_ref().expect("mud analysis ran");
    assert!(mud.delta.cells().iter().all(|&v| v == 0.0), "mud delta must be exactly zero");
    let regional = report.regional.as_ref().expect("regional analysis ran");
    assert_eq!(regional.scores.len(), 100 * 11);
    for score in &regional.scores {
        assert_eq!(score.absolute, 0.0, "absolute score of pair {}", score.pair_id);
        assert_eq!(score.relative, 0.0, "relative score of pair {}", score.pair_id);
    }

    assert!(
        elapsed.as_secs_f64() < 10.0,
        "identity suite took {:.2}s, budget is 10s",
        elapsed.as_secs_f64()
    );
    pass(1, &format!("identity corpus metrics all exactly zero in {:.2}s", elapsed.as_secs_f64()));
}

/// Independent CIE-formula route for criterion 2: the sRGB matrix is derived
/// at runtime from the chromaticity coordinates by solving a 3x3 system, and
/// the Lab formulas are written out from their rational constants.
mod lab_reference {
    pub const WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

    #[allow(clippy::needless_range_loop)]
    fn solve3(mut a: [[f64; 4]; 3]) -> [f64; 3] {
        for col in 0..3 {
            let pivot = (col..3)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, pivot);
            for row in 0..3 {
                if row != col {
                    let f = a[row][col] / a[col][col];
                    for k in col..4 {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
        [a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]]
    }

    pub fn derived_matrix() -> [[f64; 3]; 3] {
        let primaries = [(0.64, 0.33), (0.30, 0.60), (0.15, 0.06)];
        let xyz_cols: Vec<[f64; 3]> = primaries
            .iter()
            .map(|&(x, y)| [x / y, 1.0, (1.0 - x - y) / y])
            .collect();
        let scale = solve3([
            [xyz_cols[0][0], xyz_cols[1][0], xyz_cols[2][0], WHITE[0]],
            [xyz_cols[0][1], xyz_cols[1][1], xyz_cols[2][1], WHITE[1]],
            [xyz_cols[0][2], xyz_cols[1][2], xyz_cols[2][2], WHITE[2]],
        ]);
        let mut m = [[0.0; 3]; 3];
        for (c, col) in xyz_cols.iter().enumerate() {
            for r in 0..3 {
                m[r][c] = scale[c] * col[r];
            }
        }
        m
    }

    pub fn lab(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
        let decode = |v: u8| {
            let c = v as f64 / 255.0;
            if c <= 0.04045 {
                c / 12.92
            } else {
                ((c + 0.055) / 1.055).powf(2.4)
            }
        };
        let (rl, gl, bl) = (decode(r), decode(g), decode(b));
        let m = derived_matrix();
        let xyz = [
            m[0][0] * rl + m[0][1] * gl + m[0][2] * bl,
            m[1][0] * rl + m[1][1] * gl + m[1][2] * bl,
            m[2][0] * rl + m[2][1] * gl + m[2][2] * bl,
        ];
        let f = |t: f64| {
            if t > 216.0 / 24389.0 {
                t.cbrt()
            } else {
                (24389.0 / 27.0 * t + 16.0) / 116.0
            }
        };
        let (fx, fy, fz) = (f(xyz[0] / WHITE[0]), f(xyz[1] / WHITE[1]), f(xyz[2] / WHITE[2]));
        (116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
    }
}

/// Criterion 2: the Lab conversion matches the independently derived CIE
/// route within 0.01 per component on a 17^3 lattice; white, black, and the
/// gray axis are neutral to 1e-6.
#[test]
fn criterion_2_conversion_anchors() {
    let lattice: Vec<u8> = (0..17).map(|k| ((k * 255 + 8) / 16) as u8).collect();
    let mut max_err = 0.0f64;
    for &r in &lattice {
        for &g in &lattice {
            for &b in &lattice {
                let got = rgb_to_lab(Rgb8::new(r, g, b));
                let (wl, wa, wb) = lab_reference::lab(r, g, b);
                for (x, y) in [(got.l_star, wl), (got.a_star, wa), (got.b_star, wb)] {
                    let err = (x - y).abs();
                    max_err = max_err.max(err);
                    assert!(err <= 0.01, "({r},{g},{b}): {x} vs {y}");
                }
            }
        }
    }

    let white = rgb_to_lab(Rgb8::new(255, 255, 255));
    assert!((white.l_star - 100.0).abs() < 1e-6);
    assert!(white.a_star.abs() < 1e-6 && white.b_star.abs() < 1e-6);
    let black = rgb_to_lab(Rgb8::new(0, 0, 0));
    assert!(black.l_star.abs() < 1e-6 && black.a_star.abs() < 1e-6 && black.b_star.abs() < 1e-6);
    for k in 0..=255u16 {
        let gray = rgb_to_lab(Rgb8::new(k as u8, k as u8, k as u8));
        assert!(gray.a_star.abs() < 1e-6, "gray {k} a* = {}", gray.a_star);
        assert!(gray.b_star.abs() < 1e-6, "gray {k} b* = {}", gray.b_star);
    }
    pass(2, &format!("Lab matches the derived CIE route on the 17^3 lattice (max err {max_err:.2e})"));
}

/// Criterion 3: a +10 blue offset on a corpus with under 1% of pixels near
/// clamp reads back as a dataset-mean B shift in [9.0, 10.0] in every cell,
/// and the pipeline agrees with the naive oracle to 1e-6 per cell.
#[test]
fn criterion_3_synthetic_blue_shift() {
    let corpus: Vec<Raster> = generate_corpus(&CorpusOptions {
        count: 90,
        seed: 303,
        min_dim: 64,
        max_dim: 512,
        value_headroom: true,
        clamp_coverage_images: 10,
    })
    .into_iter()
    .map(|(r, _)| r)
    .collect();

    // budget check: the corpus itself must keep near-clamp pixels under 1%
    let total: usize = corpus.iter().map(|r| r.pixels.len()).sum();
    let near_clamp: usize = corpus
        .iter()
        .flat_map(|r| &r.pixels)
        .filter(|p| p.b >= 245)
        .count();
    let fraction = near_clamp as f64 / total as f64;
    assert!(fraction < 0.01, "near-clamp fraction {fraction:.4} must stay under 1%");
    assert!(near_clamp > 0, "coverage images must contribute near-clamp pixels");

    let transform = SyntheticTransform::channel_offset(Channel::B, 10).unwrap();
    let pairs = desk_pairs(corpus.clone(), &transform);

    let shift = mean_shift_grid(pairs.iter(), Channel::B, None, 64);
    assert_eq!(shift.sample_count, 100);
    for (k, &v) in shift.grid.cells().iter().enumerate() {
        assert!(
            (9.0..=10.0).contains(&v),
            "cell {k}: dataset-mean B shift {v} outside [9.0, 10.0]"
        );
    }

    let colorized: Vec<Raster> = pairs.iter().map(|p| p.colorized.clone()).collect();
    let reference = oracle::mean_shift(&corpus, &colorized, Channel::B, 64);
    for (k, (&got, &want)) in shift.grid.cells().iter().zip(&reference).enumerate() {
        assert!(
            (got - want).abs() <= 1e-6,
            "cell {k}: pipeline {got} vs oracle {want}"
        );
    }
    pass(3, &format!(
        "+10 blue offset measured in [9.0, 10.0] everywhere ({}% pixels near clamp), oracle agreement 1e-6",
        (fraction * 100.0 * 100.0).round() / 100.0
    ));
}

/// Criterion 4: halving saturation lowers the mean S shift in every cell,
/// and the pipeline agrees with the naive oracle to 1e-6 per cell.
#[test]
fn criterion_4_synthetic_desaturation() {
    let corpus: Vec<Raster> = generate_corpus(&CorpusOptions {
        count: 60,
        seed: 404,
        min_dim: 64,
        max_dim: 384,
        ..Default::default()
    })
    .into_iter()
    .map(|(r, _)| r)
    .collect();

    let transform = SyntheticTransform::saturation_scale(0.5).unwrap();
    let pairs = desk_pairs(corpus.clone(), &transform);

    let shift = mean_shift_grid(pairs.iter(), Channel::Saturation, None, 64);
    for (k, &v) in shift.grid.cells().iter().enumerate() {
        assert!(v <= 0.0, "cell {k}: S shift {v} must be <= 0 after desaturation");
    }

    let colorized: Vec<Raster> = pairs.iter().map(|p| p.colorized.clone()).collect();
    let reference = oracle::mean_shift(&corpus, &colorized, Channel::Saturation, 64);
    for (k, (&got, &want)) in shift.grid.cells().iter().zip(&reference).enumerate() {
        assert!(
            (got - want).abs() <= 1e-6,
            "cell {k}: pipeline {got} vs oracle {want}"
        );
    }
    let mean = shift.grid.cells().iter().sum::<f64>() / 4096.0;
    pass(4, &format!("saturation halving reads <= 0 in every cell (mean {mean:.2}), oracle agreement 1e-6"));
}

/// Criterion 5: blending halfway toward a computed mud image pulls every
/// cell strictly toward mud, and the pipeline agrees with the naive oracle
/// to 1e-6 per cell.
#[test]
fn criterion_5_mud_pull() {
    let corpus: Vec<Raster> = generate_corpus(&CorpusOptions {
        count: 60,
        seed: 505,
        min_dim: 64,
        max_dim: 384,
        ..Default::default()
    })
    .into_iter()
    .map(|(r, _)| r)
    .collect();

    let mud = compute_mud(corpus.iter(), 64).unwrap();
    let transform = SyntheticTransform::mud_blend(0.5, mud.clone()).unwrap();
    let pairs = desk_pairs(corpus.clone(), &transform);

    let delta = mud_distance_delta(pairs.iter(), &mud).unwrap();
    for (k, &v) in delta.cells().iter().enumerate() {
        assert!(v < 0.0, "cell {k}: mud-distance delta {v} must be strictly negative");
    }

    let colorized: Vec<Raster> = pairs.iter().map(|p| p.colorized.clone()).collect();
    let oracle_mud = oracle::mud(&corpus, 64);
    let reference = oracle::mud_delta(&corpus, &colorized, &oracle_mud, 64);
    for (k, (&got, &want)) in delta.cells().iter().zip(&reference).enumerate() {
        assert!(
            (got - want).abs() <= 1e-6,
            "cell {k}: pipeline {got} vs oracle {want}"
        );
    }
    let mean = delta.cells().iter().sum::<f64>() / 4096.0;
    pass(5, &format!("half mud blend pulls every cell toward mud (mean delta {mean:.2}), oracle agreement 1e-6"));
}

/// Criterion 6: mask geometry matches the closed-form boundary recomputation.
#[test]
fn criterion_6_mask_geometry() {
    let thirds: Vec<usize> = [MaskKind::ThirdsTop, MaskKind::ThirdsHcenter, MaskKind::ThirdsBottom]
        .iter()
        .map(|&k| make_mask(k, 64).cell_count)
        .collect();
    assert_eq!(thirds, vec![1344, 1408, 1344]);
    assert_eq!(make_mask(MaskKind::GoldenBandV, 64).cell_count, 1024);
    assert_eq!(make_mask(MaskKind::GoldenBandH, 64).cell_count, 1024);
    assert_eq!(make_mask(MaskKind::Center, 64).cell_count, 484);

    // partitions
    for kinds in [
        [MaskKind::ThirdsTop, MaskKind::ThirdsHcenter, MaskKind::ThirdsBottom],
        [MaskKind::ThirdsLeft, MaskKind::ThirdsVcenter, MaskKind::ThirdsRight],
    ] {
        let masks: Vec<_> = kinds.iter().map(|&k| make_mask(k, 64)).collect();
        assert_eq!(masks.iter().map(|m| m.cell_count).sum::<usize>(), 4096);
        for idx in 0..4096 {
            assert_eq!(masks.iter().filter(|m| m.mask.cells()[idx]).count(), 1);
        }
    }

    // closed-form recomputation: round(64/3) = 21, round(128/3) = 43,
    // round(64/2.618) = 24, round(64*1.618/2.618) = 40
    let t1 = (64.0f64 / 3.0).round() as usize;
    let t2 = (128.0f64 / 3.0).round() as usize;
    let g1 = (64.0f64 / 2.618).round() as usize;
    let g2 = (64.0 * 1.618f64 / 2.618).round() as usize;
    assert_eq!((t1, t2, g1, g2), (21, 43, 24, 40));
    assert_eq!(make_mask(MaskKind::ThirdsTop, 64).cell_count, t1 * 64);
    assert_eq!(make_mask(MaskKind::ThirdsHcenter, 64).cell_count, (t2 - t1) * 64);
    assert_eq!(make_mask(MaskKind::GoldenBandV, 64).cell_count, (g2 - g1) * 64);
    assert_eq!(make_mask(MaskKind::Center, 64).cell_count, (t2 - t1) * (t2 - t1));

    // every mask agrees with the independent membership predicate
    for kind in MaskKind::ALL {
        let mask = make_mask(kind, 64);
        for i in 0..64 {
            for j in 0..64 {
                assert_eq!(
                    *mask.mask.get(i, j),
                    oracle::in_mask(kind, i, j, 64),
                    "{kind} disagrees at ({i},{j})"
                );
            }
        }
    }
    pass(6, "thirds {1344, 1408, 1344} partition the grid; golden band 1024; center 484");
}

/// Criterion 7: a shift confined to the center region ranks first by
/// relative score for the center mask, while uniform-shift images score
/// relative = 0 for every mask.
#[test]
fn criterion_7_regional_planting() {
    let masks = all_masks(64);
    let center = make_mask(MaskKind::Center, 64);

    // pair 0: shift confined exactly to the center cells (256/64 = 4 px per cell)
    let planted_orig = Raster {
        width: 256,
        height: 256,
        pixels: vec![Rgb8::new(90, 120, 90); 256 * 256],
    };
    let mut planted_col = planted_orig.clone();
    for i in 0..64 {
        for j in 0..64 {
            if *center.mask.get(i, j) {
                for dy in 0..4 {
                    for dx in 0..4 {
                        let p = &mut planted_col.pixels[(i * 4 + dy) * 256 + j * 4 + dx];
                        p.r = p.r.saturating_add(60);
                    }
                }
            }
        }
    }

    // pairs 1..4: uniform color changes (uniform shift-magnitude fields)
    let uniform_pairs: Vec<(Raster, Raster)> = [(40u8, 70u8), (200, 180), (120, 140)]
        .iter()
        .map(|&(a, b)| {
            (
                Raster { width: 128, height: 96, pixels: vec![Rgb8::new(a, a, a); 128 * 96] },
                Raster { width: 128, height: 96, pixels: vec![Rgb8::new(b, b, b); 128 * 96] },
            )
        })
        .collect();

    let mut scores_center = Vec::new();
    let mut all_pairs = vec![(planted_orig, planted_col)];
    all_pairs.extend(uniform_pairs);
    for (pair_id, (orig, col)) in all_pairs.iter().enumerate() {
        let magnitudes = cell_lab_distance_grid(
            &aggregate_to_cells(orig, 64),
            &aggregate_to_cells(col, 64),
        );
        for mask in &masks {
            let score = regional_scores(pair_id, &magnitudes, mask).unwrap();
            if pair_id > 0 {
                assert_eq!(
                    score.relative, 0.0,
                    "uniform-shift pair {pair_id} must score relative = 0 for {}",
                    mask.kind
                );
            }
            if mask.kind == MaskKind::Center {
                scores_center.push(score);
            }
        }
    }

    let ranked = top_n(&scores_center, 4, RankBy::Relative);
    assert_eq!(ranked[0].pair_id, 0, "the planted pair must rank first for the center region");
    assert!(ranked[0].relative > 0.0);
    pass(7, &format!(
        "center-planted pair ranks first (relative {:.2}); uniform fields score exactly 0",
        ranked[0].relative
    ));
}

/// Criterion 8: report.json is byte-identical across repeated runs and
/// across thread counts.
#[test]
fn criterion_8_determinism() {
    let dir = tempfile::TempDir::new().unwrap();
    let corpus = generate_corpus(&CorpusOptions {
        count: 24,
        seed: 808,
        min_dim: 48,
        max_dim: 160,
        ..Default::default()
    });
    let transform = SyntheticTransform::channel_offset(Channel::B, 7).unwrap();
    let manifest = write_corpus(&corpus, &transform, dir.path()).unwrap();

    let mut bytes = Vec::new();
    for (name, threads) in [("t1_a", 1), ("t1_b", 1), ("t4", 4), ("t8", 8)] {
        let mut config = RunConfig::new(&manifest, dir.path().join(name));
        config.threads = threads;
        let outcome = run(&config).unwrap();
        bytes.push(std::fs::read(outcome.report_path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1], "two single-threaded runs must match");
    assert_eq!(bytes[0], bytes[2], "1 vs 4 threads must match");
    assert_eq!(bytes[0], bytes[3], "1 vs 8 threads must match");
    pass(8, "report.json byte-identical across reruns and across 1/4/8 threads");
}

/// Criterion 9: the full-scale reference figures require external model
/// inference over the full datasets and are runbook material, not desk
/// tests; the runbook must exist and carry the reference numbers.
#[test]
fn criterion_9_runbook_documents_full_scale_reproduction() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/REPRODUCING.md");
    let text = std::fs::read_to_string(path).expect("docs/REPRODUCING.md must exist");
    for needle in [
        "ADE20K",
        "DeOldify",
        "grayscale",
        "1.885", // urban mean cell distance
        "4.128", // workplace
        "4.331", // cultural
        "131, 128, 119", // mud anchor cell 1
        "126, 111, 95",  // mud anchor cell 2
    ] {
        assert!(text.contains(needle), "runbook is missing {needle:?}");
    }
    pass(9, "full-scale figures documented as a reproduction runbook; desk criteria are 1-8");
}
