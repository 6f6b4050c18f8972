//! Just-noticeable-difference model and the visibility ratio used to decide
//! whether an injected payload is perceptible to a human observer.
//!
//! The per-pixel threshold is the maximum of a luminance-adaptation term and
//! a texture-masking term. The luminance term is a piecewise function of the
//! 5x5 local mean luma: high in dark regions, at its floor from mid-gray, and
//! slowly rising toward white. The masking term is proportional to the
//! maximum Sobel gradient magnitude in the 5x5 neighborhood. Residuals below
//! the threshold are invisible.

use serde::{Deserialize, Serialize};

use crate::config::JndConfig;
use crate::embed::{embed_payload, InjectionSpec};
use crate::error::{Error, Result};
use crate::imaging::{to_luma, GrayBuffer, ImageBuffer, PayloadMask};

/// Per-pixel minimum perceptible luma change.
#[derive(Debug, Clone, PartialEq)]
pub struct JndMap {
    width: u32,
    height: u32,
    thresholds: Vec<f64>,
}

impl JndMap {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.thresholds[y as usize * self.width as usize + x as usize]
    }
}

/// Classification of a payload's visibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Invisible,
    Borderline,
    Visible,
}

/// Outcome of a visibility evaluation over one payload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityReport {
    /// Fraction of payload pixels whose luma change stays below the local
    /// JND threshold.
    pub jnd_ratio: f64,
    pub verdict: Verdict,
    pub pixels_evaluated: usize,
}

fn verdict_for(ratio: f64, cfg: &JndConfig) -> Verdict {
    if ratio >= cfg.invisible_cutoff {
        Verdict::Invisible
    } else if ratio <= cfg.visible_cutoff {
        Verdict::Visible
    } else {
        Verdict::Borderline
    }
}

/// Luminance-adaptation threshold as a function of local mean luma.
fn luminance_term(bg: f64, cfg: &JndConfig) -> f64 {
    if bg <= 127.0 {
        cfg.t_mid + (cfg.t_dark - cfg.t_mid) * (1.0 - (bg / 127.0).sqrt())
    } else {
        cfg.t_mid + cfg.white_slope * (bg - 128.0).max(0.0)
    }
}

/// Per-pixel JND thresholds for an image (its luma plane).
pub fn jnd_map(gray: &GrayBuffer, cfg: &JndConfig) -> JndMap {
    let w = gray.width() as i64;
    let h = gray.height() as i64;
    let n = (w * h) as usize;

    // Sobel gradient magnitude with clamp-to-edge borders.
    let mut grad = vec![0.0f64; n];
    for y in 0..h {
        for x in 0..w {
            let s = |dx: i64, dy: i64| f64::from(gray.get_clamped(x + dx, y + dy));
            let gx = -s(-1, -1) + s(1, -1) - 2.0 * s(-1, 0) + 2.0 * s(1, 0) - s(-1, 1) + s(1, 1);
            let gy = -s(-1, -1) - 2.0 * s(0, -1) - s(1, -1) + s(-1, 1) + 2.0 * s(0, 1) + s(1, 1);
            grad[(y * w + x) as usize] = (gx * gx + gy * gy).sqrt() / 4.0;
        }
    }

    let mut thresholds = vec![0.0f64; n];
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0.0f64;
            let mut max_grad = 0.0f64;
            for dy in -2..=2 {
                for dx in -2..=2 {
                    let cx = (x + dx).clamp(0, w - 1);
                    let cy = (y + dy).clamp(0, h - 1);
                    sum += f64::from(gray.get(cx as u32, cy as u32));
                    max_grad = max_grad.max(grad[(cy * w + cx) as usize]);
                }
            }
            let bg = sum / 25.0;
            let lum = luminance_term(bg, cfg);
            let masking = cfg.masking_slope * max_grad;
            thresholds[(y * w + x) as usize] = lum.max(masking);
        }
    }

    JndMap {
        width: gray.width(),
        height: gray.height(),
        thresholds,
    }
}

/// Fraction of payload pixels whose absolute luma change stays strictly below
/// the clean image's JND threshold, with the verdict derived from the
/// configured cutoffs. The mask must be placed (image-sized) and non-empty.
pub fn jnd_ratio(
    clean: &ImageBuffer,
    injected: &ImageBuffer,
    mask: &PayloadMask,
    cfg: &JndConfig,
) -> Result<VisibilityReport> {
    if !clean.same_dims(injected) {
        return Err(Error::dims(
            clean.width(),
            clean.height(),
            injected.width(),
            injected.height(),
        ));
    }
    let clean_luma = to_luma(clean);
    let map = jnd_map(&clean_luma, cfg);
    jnd_ratio_with(&map, &clean_luma, injected, mask, cfg)
}

/// [`jnd_ratio`] against a precomputed threshold map and clean luma plane.
/// The map depends only on the clean image, so corpus runs compute it once
/// per image and share it across every payload and strength.
pub fn jnd_ratio_with(
    map: &JndMap,
    clean_luma: &GrayBuffer,
    injected: &ImageBuffer,
    mask: &PayloadMask,
    cfg: &JndConfig,
) -> Result<VisibilityReport> {
    if clean_luma.width() != injected.width() || clean_luma.height() != injected.height() {
        return Err(Error::dims(
            clean_luma.width(),
            clean_luma.height(),
            injected.width(),
            injected.height(),
        ));
    }
    if mask.width() != injected.width() || mask.height() != injected.height() {
        return Err(Error::dims(
            mask.width(),
            mask.height(),
            injected.width(),
            injected.height(),
        ));
    }
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }

    let mut below = 0usize;
    let mut total = 0usize;
    let bbox = mask.bbox();
    for y in bbox.y..bbox.y + bbox.h {
        for x in bbox.x..bbox.x + bbox.w {
            if !mask.bit(x, y) {
                continue;
            }
            total += 1;
            let px = injected.pixel(x, y);
            let injected_luma = (0.299 * f64::from(px[0])
                + 0.587 * f64::from(px[1])
                + 0.114 * f64::from(px[2])
                + 0.5)
                .floor()
                .clamp(0.0, 255.0);
            let delta = (f64::from(clean_luma.get(x, y)) - injected_luma).abs();
            if delta < map.get(x, y) {
                below += 1;
            }
        }
    }

    let ratio = below as f64 / total as f64;
    Ok(VisibilityReport {
        jnd_ratio: ratio,
        verdict: verdict_for(ratio, cfg),
        pixels_evaluated: total,
    })
}

/// Embeds the placed mask at each strength and reports the visibility of
/// every variant. Ratios are non-increasing in strength when nothing clips.
pub fn classify_strength_sweep(
    clean: &ImageBuffer,
    mask: &PayloadMask,
    strengths: &[u8],
    cfg: &JndConfig,
) -> Result<Vec<VisibilityReport>> {
    if strengths.is_empty() {
        return Err(Error::InvalidParam(
            "strengths list must be non-empty".into(),
        ));
    }
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let bbox = mask.bbox();
    let mut reports = Vec::with_capacity(strengths.len());
    for &strength in strengths {
        let spec = InjectionSpec::at_origin(mask.clone(), (bbox.x, bbox.y), strength);
        let (injected, _) = embed_payload(clean, &spec)?;
        reports.push(jnd_ratio(clean, &injected, mask, cfg)?);
    }
    Ok(reports)
}
