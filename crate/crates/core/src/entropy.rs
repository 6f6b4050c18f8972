//! Shannon entropy over luma histograms, entropy maps, and low-entropy
//! placement selection.
//!
//! Entropy is computed on the 256-bin luma histogram with log base 2, so all
//! values fall in [0, 8] bits. Smooth backgrounds score near 0 and dense
//! noise approaches 8; payloads only survive downstream editing when placed
//! where the score is low.

use serde::{Deserialize, Serialize};

use crate::config::EntropyConfig;
use crate::error::{Error, Result};
use crate::imaging::GrayBuffer;

/// Per-tile entropies over a tiling of the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyMap {
    pub tile_size: u32,
    pub cols: u32,
    pub rows: u32,
    /// Row-major per-tile entropy in bits.
    pub values: Vec<f64>,
}

/// Outcome of the placement scan for a payload of a given size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementDecision {
    /// Top-left pixel for the payload bbox.
    pub origin: (u32, u32),
    /// Entropy of the chosen window in bits.
    pub window_entropy: f64,
    /// True when the window entropy is at or below the feasibility threshold.
    pub feasible: bool,
}

/// Shannon entropy of the luma histogram in bits: `H = -sum p(v) log2 p(v)`.
/// Zero-probability bins contribute nothing.
pub fn shannon_entropy(gray: &GrayBuffer) -> f64 {
    let mut hist = [0u64; 256];
    for &v in gray.data() {
        hist[v as usize] += 1;
    }
    entropy_of_histogram(&hist, gray.data().len() as u64)
}

pub(crate) fn entropy_of_histogram(hist: &[u64; 256], total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let mut h = 0.0;
    for &count in hist {
        if count > 0 {
            let p = count as f64 / total;
            h -= p * p.log2();
        }
    }
    h
}

fn region_entropy(gray: &GrayBuffer, x0: u32, y0: u32, w: u32, h: u32) -> f64 {
    let mut hist = [0u64; 256];
    for y in y0..y0 + h {
        for x in x0..x0 + w {
            hist[gray.get(x, y) as usize] += 1;
        }
    }
    entropy_of_histogram(&hist, u64::from(w) * u64::from(h))
}

/// Per-tile entropy over a `tile_size` tiling; edge tiles are clipped to the
/// image bounds.
pub fn entropy_map(gray: &GrayBuffer, tile_size: u32) -> Result<EntropyMap> {
    if tile_size < 8 {
        return Err(Error::InvalidParam(format!(
            "tile size {tile_size} is too small (must be >= 8)"
        )));
    }
    let cols = gray.width().div_ceil(tile_size);
    let rows = gray.height().div_ceil(tile_size);
    let mut values = Vec::with_capacity(cols as usize * rows as usize);
    for ty in 0..rows {
        for tx in 0..cols {
            let x0 = tx * tile_size;
            let y0 = ty * tile_size;
            let w = tile_size.min(gray.width() - x0);
            let h = tile_size.min(gray.height() - y0);
            values.push(region_entropy(gray, x0, y0, w, h));
        }
    }
    Ok(EntropyMap {
        tile_size,
        cols,
        rows,
        values,
    })
}

/// Slides a `(w, h)` window over the image at stride `tile_size` and returns
/// the window with minimal luma-histogram entropy. Ties break toward the
/// smallest y, then the smallest x. The decision is feasible when the window
/// entropy is at or below `cfg.threshold_bits`.
pub fn select_placement(
    gray: &GrayBuffer,
    payload_bbox: (u32, u32),
    tile_size: u32,
    cfg: &EntropyConfig,
) -> Result<PlacementDecision> {
    let (w, h) = payload_bbox;
    if tile_size < 8 {
        return Err(Error::InvalidParam(format!(
            "tile size {tile_size} is too small (must be >= 8)"
        )));
    }
    if w == 0 || h == 0 {
        return Err(Error::InvalidParam("payload bbox must be non-empty".into()));
    }
    if w > gray.width() || h > gray.height() {
        return Err(Error::OutOfBounds {
            x: 0,
            y: 0,
            width: gray.width(),
            height: gray.height(),
        });
    }

    let mut best: Option<(f64, u32, u32)> = None;
    let mut y = 0;
    while y + h <= gray.height() {
        let mut x = 0;
        while x + w <= gray.width() {
            let e = region_entropy(gray, x, y, w, h);
            // Strict less-than keeps the first (smallest y, then x) minimum.
            if best.is_none_or(|(be, _, _)| e < be) {
                best = Some((e, x, y));
            }
            x += tile_size;
        }
        y += tile_size;
    }

    let (entropy, x, y) = best.expect("at least the (0, 0) window is scanned");
    Ok(PlacementDecision {
        origin: (x, y),
        window_entropy: entropy,
        feasible: entropy <= cfg.threshold_bits,
    })
}
