//! Color space math: ITU-R 601-2 luma, sRGB <-> CIELAB (CIE 1976, D65),
//! sRGB <-> HSV, and CIE76 distance.
//!
//! Everything here is pure and double precision. The Lab and HSV channel
//! extractors also accept real-valued RGB in [0, 255] so they can be applied
//! to averaged cell colors, not just raw 8-bit pixels.

use serde::{Deserialize, Serialize};

/// 8-bit sRGB color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb8 {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb8 {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    /// Channel values as reals in [0, 255].
    pub fn to_f64(self) -> [f64; 3] {
        [self.r as f64, self.g as f64, self.b as f64]
    }
}

impl From<[u8; 3]> for Rgb8 {
    fn from(v: [u8; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// CIELAB color. `l_star` is in [0, 100] for sRGB inputs; `a_star` and
/// `b_star` stay within the nominal [-128, 128) range for the sRGB gamut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lab {
    pub l_star: f64,
    pub a_star: f64,
    pub b_star: f64,
}

/// HSV color with hue in degrees [0, 360) and saturation/value scaled to
/// [0, 100].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

/// sRGB -> XYZ matrix for D65, derived from the IEC 61966-2-1 primaries and
/// the (0.95047, 1.0, 1.08883) white point. Row sums reproduce the white
/// point to the last f64 bit, which is what keeps white at exactly
/// L* = 100, a* = b* = 0.
#[allow(clippy::excessive_precision)]
const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.41245643908969210, 0.35757607764390897, 0.18043748326639893],
    [0.21267285140562249, 0.71515215528781794, 0.07217499330655957],
    [0.019333895582329317, 0.11919202588130299, 0.95030407853636769],
];

/// D65 reference white.
pub const WHITE_POINT: [f64; 3] = [0.95047, 1.0, 1.08883];

/// (6/29)^3, the CIE 1976 linear-segment threshold.
const LAB_EPSILON: f64 = 216.0 / 24389.0;
const LAB_KAPPA: f64 = 24389.0 / 27.0;

/// ITU-R 601-2 luma, exact integer arithmetic with truncating division.
pub fn luma_grayscale(c: Rgb8) -> u8 {
    let y = 299 * c.r as u32 + 587 * c.g as u32 + 114 * c.b as u32;
    (y / 1000) as u8
}

/// Piecewise sRGB transfer function inverse: encoded [0,1] -> linear [0,1].
fn srgb_inv_gamma(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// Linearization table for 8-bit inputs. Each entry is `srgb_inv_gamma`
/// evaluated at the same point the real-valued path would use, so the u8
/// fast path is bit-identical to the formula path.
fn linear_of_u8(v: u8) -> f64 {
    static TABLE: std::sync::OnceLock<[f64; 256]> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(|k| srgb_inv_gamma(k as f64 / 255.0)))[v as usize]
}

fn lab_f(t: f64) -> f64 {
    if t > LAB_EPSILON {
        t.cbrt()
    } else {
        (LAB_KAPPA * t + 16.0) / 116.0
    }
}

fn lab_from_linear(lin: [f64; 3]) -> Lab {
    let mut xyz = [0.0f64; 3];
    for (i, row) in SRGB_TO_XYZ.iter().enumerate() {
        xyz[i] = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
    }
    let fx = lab_f(xyz[0] / WHITE_POINT[0]);
    let fy = lab_f(xyz[1] / WHITE_POINT[1]);
    let fz = lab_f(xyz[2] / WHITE_POINT[2]);
    Lab {
        l_star: 116.0 * fy - 16.0,
        a_star: 500.0 * (fx - fy),
        b_star: 200.0 * (fy - fz),
    }
}

/// CIELAB of a real-valued sRGB triple with channels in [0, 255].
pub fn rgb_to_lab_f64(rgb: [f64; 3]) -> Lab {
    lab_from_linear([
        srgb_inv_gamma(rgb[0] / 255.0),
        srgb_inv_gamma(rgb[1] / 255.0),
        srgb_inv_gamma(rgb[2] / 255.0),
    ])
}

/// CIELAB of an 8-bit sRGB color (CIE 1976, D65).
pub fn rgb_to_lab(c: Rgb8) -> Lab {
    lab_from_linear([linear_of_u8(c.r), linear_of_u8(c.g), linear_of_u8(c.b)])
}

/// HSV of a real-valued sRGB triple with channels in [0, 255].
pub fn rgb_to_hsv_f64(rgb: [f64; 3]) -> Hsv {
    let r = rgb[0] / 255.0;
    let g = rgb[1] / 255.0;
    let b = rgb[2] / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;

    let v = max * 100.0;
    let s = if max <= 0.0 { 0.0 } else { delta / max * 100.0 };
    let h = if delta <= 0.0 {
        0.0
    } else if max == r {
        60.0 * (((g - b) / delta).rem_euclid(6.0))
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    // rem_euclid(6.0) can land exactly on 6.0 when (g-b)/delta is a tiny
    // negative; keep hue in [0, 360).
    let h = if h >= 360.0 { h - 360.0 } else { h };
    Hsv { h, s, v }
}

/// Standard hexcone HSV of an 8-bit sRGB color; s and v scaled to [0, 100].
pub fn rgb_to_hsv(c: Rgb8) -> Hsv {
    rgb_to_hsv_f64(c.to_f64())
}

/// Hexcone HSV back to real-valued sRGB channels in [0, 255].
pub fn hsv_to_rgb_f64(hsv: Hsv) -> [f64; 3] {
    let s = hsv.s / 100.0;
    let v = hsv.v / 100.0;
    if s <= 0.0 {
        let c = v * 255.0;
        return [c, c, c];
    }
    let hp = hsv.h.rem_euclid(360.0) / 60.0;
    let chroma = v * s;
    let x = chroma * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    let m = v - chroma;
    [(r1 + m) * 255.0, (g1 + m) * 255.0, (b1 + m) * 255.0]
}

/// HSV back to 8-bit sRGB with round-to-nearest channels.
pub fn hsv_to_rgb(hsv: Hsv) -> Rgb8 {
    let [r, g, b] = hsv_to_rgb_f64(hsv);
    Rgb8::new(
        r.round().clamp(0.0, 255.0) as u8,
        g.round().clamp(0.0, 255.0) as u8,
        b.round().clamp(0.0, 255.0) as u8,
    )
}

/// CIE76 color difference: Euclidean distance in CIELAB.
pub fn lab_distance(p: Lab, q: Lab) -> f64 {
    let dl = p.l_star - q.l_star;
    let da = p.a_star - q.a_star;
    let db = p.b_star - q.b_star;
    (dl * dl + da * da + db * db).sqrt()
}

/// Measurement channel. Histograms use the first six; per-cell shift grids
/// additionally support the HSV saturation channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    R,
    G,
    B,
    #[serde(rename = "L_star")]
    LStar,
    #[serde(rename = "a_star")]
    AStar,
    #[serde(rename = "b_star")]
    BStar,
    #[serde(rename = "S")]
    Saturation,
}

impl Channel {
    /// The six histogram channels, in report order.
    pub const HISTOGRAM: [Channel; 6] = [
        Channel::R,
        Channel::G,
        Channel::B,
        Channel::LStar,
        Channel::AStar,
        Channel::BStar,
    ];

    /// All shift channels, in report order.
    pub const SHIFT: [Channel; 7] = [
        Channel::R,
        Channel::G,
        Channel::B,
        Channel::LStar,
        Channel::AStar,
        Channel::BStar,
        Channel::Saturation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::R => "R",
            Channel::G => "G",
            Channel::B => "B",
            Channel::LStar => "L_star",
            Channel::AStar => "a_star",
            Channel::BStar => "b_star",
            Channel::Saturation => "S",
        }
    }

    /// Channel value of a real-valued RGB triple in [0, 255].
    pub fn extract(self, rgb: [f64; 3]) -> f64 {
        match self {
            Channel::R => rgb[0],
            Channel::G => rgb[1],
            Channel::B => rgb[2],
            Channel::LStar => rgb_to_lab_f64(rgb).l_star,
            Channel::AStar => rgb_to_lab_f64(rgb).a_star,
            Channel::BStar => rgb_to_lab_f64(rgb).b_star,
            Channel::Saturation => rgb_to_hsv_f64(rgb).s,
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
