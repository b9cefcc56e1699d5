//! Named color palette shared by the renderer and the color annotator.

/// `(label, rgb)` pairs; labels match the `visualValue` of the color classes
/// in the built-in ontology.
pub const PALETTE: [(&str, [u8; 3]); 11] = [
    ("black", [20, 20, 20]),
    ("white", [235, 235, 235]),
    ("gray", [128, 128, 128]),
    ("red", [200, 30, 30]),
    ("orange", [230, 130, 20]),
    ("yellow", [230, 210, 30]),
    ("green", [40, 160, 50]),
    ("cyan", [40, 190, 200]),
    ("blue", [30, 60, 190]),
    ("magenta", [180, 40, 160]),
    ("brown", [120, 70, 30]),
];

pub fn rgb_of(label: &str) -> Option<[u8; 3]> {
    PALETTE.iter().find(|(l, _)| *l == label).map(|(_, c)| *c)
}

pub fn labels() -> impl Iterator<Item = &'static str> {
    PALETTE.iter().map(|(l, _)| *l)
}

pub fn distance(a: [f64; 3], b: [u8; 3]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - *y as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Palette label closest to `rgb` in RGB space; ties go to the earlier entry.
pub fn nearest(rgb: [f64; 3]) -> &'static str {
    let mut best = PALETTE[0];
    let mut best_d = f64::INFINITY;
    for entry in PALETTE {
        let d = distance(rgb, entry.1);
        if d < best_d {
            best_d = d;
            best = entry;
        }
    }
    best.0
}

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
pub fn to_hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let hue = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let sat = if max == 0.0 { 0.0 } else { delta / max };
    (hue, sat, max)
}

pub const HUE_BINS: usize = 12;
pub const GRAY_BINS: usize = 4;
pub const HISTOGRAM_BINS: usize = HUE_BINS + GRAY_BINS;

/// Histogram bin of one pixel: 12 hue bins of 30° centred on 0°, 30°, ...
/// for saturated pixels, 4 brightness bins for unsaturated ones.
pub fn histogram_bin(rgb: [u8; 3]) -> usize {
    let (h, s, v) = to_hsv(rgb);
    if s < 0.2 {
        HUE_BINS + ((v * GRAY_BINS as f64) as usize).min(GRAY_BINS - 1)
    } else {
        (((h + 15.0) / 30.0) as usize) % HUE_BINS
    }
}

/// Normalized histogram over `pixels`; all zeros when empty.
pub fn histogram(pixels: impl IntoIterator<Item = [u8; 3]>) -> Vec<f64> {
    let mut bins = vec![0.0; HISTOGRAM_BINS];
    let mut n = 0usize;
    for p in pixels {
        bins[histogram_bin(p)] += 1.0;
        n += 1;
    }
    if n > 0 {
        bins.iter_mut().for_each(|b| *b /= n as f64);
    }
    bins
}

/// `1 - Σ min(a_i, b_i)` for normalized histograms.
pub fn intersection_distance(a: &[f64], b: &[f64]) -> f64 {
    let overlap: f64 = a.iter().zip(b).map(|(x, y)| x.min(*y)).sum();
    (1.0 - overlap).clamp(0.0, 1.0)
}
