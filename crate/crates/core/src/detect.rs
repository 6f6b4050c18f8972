//! Machine-level detection oracle: recovers payload residuals with and
//! without the clean reference and matches them against a payload library.
//!
//! Paired detection is an exact diff. Blind detection estimates the
//! background with a median filter, keeps residuals inside a small band
//! (genuine edges overshoot it, noise mostly misses it), opens the result to
//! drop speckle, and requires a connected component of meaningful area.

use serde::{Deserialize, Serialize};

use crate::config::DetectConfig;
use crate::embed::residual_of;
use crate::error::{Error, Result};
use crate::imaging::{median_filter, scale_mask, to_luma, ImageBuffer, PayloadMask};
use crate::morph::{connected_components, open3x3};

/// Named payload masks at canonical scale.
#[derive(Debug, Clone)]
pub struct PayloadLibrary {
    entries: Vec<(String, PayloadMask)>,
}

impl PayloadLibrary {
    /// Builds a library; ids must be unique and every mask non-empty.
    pub fn new(entries: Vec<(String, PayloadMask)>) -> Result<Self> {
        for (i, (id, mask)) in entries.iter().enumerate() {
            if mask.is_empty() {
                return Err(Error::EmptyMask);
            }
            if entries[..i].iter().any(|(other, _)| other == id) {
                return Err(Error::InvalidParam(format!("duplicate payload id {id:?}")));
            }
        }
        Ok(PayloadLibrary { entries })
    }

    /// A library with no entries; detection still works, matching never
    /// claims an identity.
    pub fn empty() -> Self {
        PayloadLibrary {
            entries: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[(String, PayloadMask)] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<&PayloadMask> {
        self.entries.iter().find(|(i, _)| i == id).map(|(_, m)| m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionMethod {
    Paired,
    Blind,
}

/// Outcome of a detection run.
#[derive(Debug, Clone)]
pub struct DetectionReport {
    pub detected: bool,
    pub recovered: PayloadMask,
    /// Library identity claimed for the recovered mask, if any; the score is
    /// present exactly when the identity is.
    pub best_match: Option<String>,
    pub match_score: Option<f64>,
    pub method: DetectionMethod,
}

/// Exact paired detection: diff against the clean reference, gate on area,
/// then match.
pub fn detect_paired(
    clean: &ImageBuffer,
    suspect: &ImageBuffer,
    library: &PayloadLibrary,
    cfg: &DetectConfig,
) -> Result<DetectionReport> {
    let recovered = residual_of(clean, suspect)?;
    let detected = recovered.count() >= cfg.min_area;
    let (best_match, match_score) = if detected {
        match_fields(&recovered, library, cfg)
    } else {
        (None, None)
    };
    Ok(DetectionReport {
        detected,
        recovered,
        best_match,
        match_score,
        method: DetectionMethod::Paired,
    })
}

/// Recovers the blind residual mask: band-passed difference against the
/// median background, opened, with small components dropped. An empty result
/// means nothing was detected.
pub fn recover_blind(suspect: &ImageBuffer, cfg: &DetectConfig) -> PayloadMask {
    let luma = to_luma(suspect);
    let background = median_filter(&luma, cfg.median_radius);
    let w = suspect.width();
    let h = suspect.height();

    let band: Vec<bool> = luma
        .data()
        .iter()
        .zip(background.data())
        .map(|(&v, &b)| {
            let d = (i16::from(v) - i16::from(b)).unsigned_abs() as u8;
            d >= cfg.blind_min && d <= cfg.blind_max
        })
        .collect();

    let opened = open3x3(&band, w, h);
    let comps = connected_components(&opened, w, h);

    let keep: Vec<bool> = (0..comps.count)
        .map(|label| comps.areas[label as usize] >= cfg.min_area)
        .collect();
    let bits: Vec<bool> = comps
        .labels
        .iter()
        .map(|&l| l != 0 && keep[(l - 1) as usize])
        .collect();

    PayloadMask::from_bits(w, h, bits, "residual").expect("dimensions are consistent")
}

/// Blind detection without the clean reference.
pub fn detect_blind(
    suspect: &ImageBuffer,
    library: &PayloadLibrary,
    cfg: &DetectConfig,
) -> DetectionReport {
    let recovered = recover_blind(suspect, cfg);
    let detected = !recovered.is_empty();
    let (best_match, match_score) = if detected {
        match_fields(&recovered, library, cfg)
    } else {
        (None, None)
    };
    DetectionReport {
        detected,
        recovered,
        best_match,
        match_score,
        method: DetectionMethod::Blind,
    }
}

fn match_fields(
    recovered: &PayloadMask,
    library: &PayloadLibrary,
    cfg: &DetectConfig,
) -> (Option<String>, Option<f64>) {
    match match_payload(recovered, library, cfg) {
        Ok((Some(id), score)) => (Some(id), Some(score)),
        _ => (None, None),
    }
}

/// Matches a recovered mask against the library: each entry is scaled to the
/// recovered bbox width and compared by IoU with the contents aligned by
/// centroid (a small local offset search absorbs the bbox drift caused by a
/// few lost edge pixels). Returns the argmax entry and its IoU, or `None`
/// when the best IoU stays below the identity threshold. Ties break by
/// library order.
pub fn match_payload(
    recovered: &PayloadMask,
    library: &PayloadLibrary,
    cfg: &DetectConfig,
) -> Result<(Option<String>, f64)> {
    if recovered.is_empty() {
        return Err(Error::EmptyMask);
    }
    let rb = recovered.bbox();
    let packed = PackedMask::from_bbox(recovered);

    let mut best: Option<(usize, f64)> = None;
    for (i, (_, entry)) in library.entries.iter().enumerate() {
        // Recovery only ever loses pixels, so the true payload width is at
        // least the recovered bbox width; probe a couple of wider rescales.
        let mut iou = 0.0f64;
        for target in [rb.w, rb.w + 2, rb.w + 4] {
            let scaled = scale_mask(entry, target)?;
            iou = iou.max(best_aligned_iou(&packed, &PackedMask::from_bbox(&scaled)));
        }
        if best.is_none_or(|(_, b)| iou > b) {
            best = Some((i, iou));
        }
    }
    match best {
        None => Ok((None, 0.0)),
        Some((i, iou)) if iou >= cfg.iou_threshold => Ok((Some(library.entries[i].0.clone()), iou)),
        Some((_, iou)) => Ok((None, iou)),
    }
}

/// Bbox content of a mask packed into row-major u64 words for popcount
/// intersection counting.
struct PackedMask {
    width: i64,
    height: i64,
    words_per_row: usize,
    rows: Vec<u64>,
    count: usize,
    centroid: (f64, f64),
}

impl PackedMask {
    fn from_bbox(mask: &PayloadMask) -> PackedMask {
        let b = mask.bbox();
        let words_per_row = (b.w as usize).div_ceil(64);
        let mut rows = vec![0u64; b.h as usize * words_per_row];
        let mut count = 0usize;
        let mut sum_x = 0u64;
        let mut sum_y = 0u64;
        for y in 0..b.h {
            for x in 0..b.w {
                if mask.bit(b.x + x, b.y + y) {
                    rows[y as usize * words_per_row + (x / 64) as usize] |= 1u64 << (x % 64);
                    count += 1;
                    sum_x += u64::from(x);
                    sum_y += u64::from(y);
                }
            }
        }
        let n = count.max(1) as f64;
        PackedMask {
            width: i64::from(b.w),
            height: i64::from(b.h),
            words_per_row,
            rows,
            count,
            centroid: (sum_x as f64 / n, sum_y as f64 / n),
        }
    }

    /// 64 bits of a row starting at bit `start`; out-of-range bits are zero.
    #[inline]
    fn read64(&self, row: &[u64], start: i64) -> u64 {
        let n_bits = self.words_per_row as i64 * 64;
        if start <= -64 || start >= n_bits {
            return 0;
        }
        let word = start.div_euclid(64);
        let off = start.rem_euclid(64) as u32;
        let at = |w: i64| -> u64 {
            if w >= 0 && (w as usize) < row.len() {
                row[w as usize]
            } else {
                0
            }
        };
        if off == 0 {
            at(word)
        } else {
            (at(word) >> off) | (at(word + 1) << (64 - off))
        }
    }

    /// Intersection size with `other` translated by `(dx, dy)`: bit (x, y)
    /// of self is matched against bit (x + dx, y + dy) of other.
    fn intersection(&self, other: &PackedMask, dx: i64, dy: i64) -> usize {
        let mut inter = 0u32;
        for y in 0..self.height {
            let oy = y + dy;
            if oy < 0 || oy >= other.height {
                continue;
            }
            let row = &self.rows[y as usize * self.words_per_row..][..self.words_per_row];
            let orow = &other.rows[oy as usize * other.words_per_row..][..other.words_per_row];
            for (i, &w) in row.iter().enumerate() {
                if w == 0 {
                    continue;
                }
                // Mask off self bits beyond the bbox width.
                let valid = if (i + 1) * 64 > self.width as usize {
                    w & (!0u64 >> (64 - (self.width as usize - i * 64)))
                } else {
                    w
                };
                inter += (valid & other.read64(orow, i as i64 * 64 + dx)).count_ones();
            }
        }
        inter as usize
    }
}

/// Best IoU between two packed masks. Offsets within +-3 px of two anchors
/// are tried: the bbox-aligned origin and the centroid difference.
/// Asymmetric pixel loss breaks one anchor or the other, rarely both.
fn best_aligned_iou(recovered: &PackedMask, entry: &PackedMask) -> f64 {
    if recovered.count == 0 || entry.count == 0 {
        return 0.0;
    }
    let cent_dx = (entry.centroid.0 - recovered.centroid.0).round() as i64;
    let cent_dy = (entry.centroid.1 - recovered.centroid.1).round() as i64;

    let mut offsets = Vec::with_capacity(98);
    for ddy in -3..=3i64 {
        for ddx in -3..=3i64 {
            offsets.push((ddx, ddy));
            let shifted = (cent_dx + ddx, cent_dy + ddy);
            if !offsets.contains(&shifted) {
                offsets.push(shifted);
            }
        }
    }

    let mut best = 0.0f64;
    for (dx, dy) in offsets {
        let inter = recovered.intersection(entry, dx, dy);
        let union = recovered.count + entry.count - inter;
        let iou = inter as f64 / union as f64;
        if iou > best {
            best = iou;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{embed_payload, InjectionSpec};
    use crate::imaging::GrayBuffer;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> DetectConfig {
        DetectConfig::default()
    }

    /// Thin-stroke ring with three spokes, a stand-in for a star-in-circle
    /// logo. Stroke width 3.5: the median background suppresses it at every
    /// orientation (diagonal runs tolerate less than axis-aligned ones) while
    /// the 3x3 opening still keeps it.
    fn star_mask(side: u32, id: &str) -> PayloadMask {
        let c = side as f64 / 2.0;
        let r_mid = side as f64 * 0.45;
        let half = 1.75;
        PayloadMask::from_fn(side, side, id, |x, y| {
            let dx = x as f64 + 0.5 - c;
            let dy = y as f64 + 0.5 - c;
            let d = (dx * dx + dy * dy).sqrt();
            if (d - r_mid).abs() < half {
                return true;
            }
            if d < r_mid - half {
                for angle in [90.0f64, 210.0, 330.0] {
                    let a = angle.to_radians();
                    let (ux, uy) = (a.cos(), a.sin());
                    let along = dx * ux + dy * uy;
                    let perp = (dx * -uy + dy * ux).abs();
                    if along >= 0.0 && perp < half {
                        return true;
                    }
                }
            }
            false
        })
    }

    fn ring_mask(side: u32, id: &str) -> PayloadMask {
        let c = side as f64 / 2.0;
        let r_mid = side as f64 * 0.45;
        PayloadMask::from_fn(side, side, id, |x, y| {
            let dx = x as f64 + 0.5 - c;
            let dy = y as f64 + 0.5 - c;
            let d = (dx * dx + dy * dy).sqrt();
            (d - r_mid).abs() < 1.75
        })
    }

    fn library() -> PayloadLibrary {
        PayloadLibrary::new(vec![
            ("benz".into(), star_mask(256, "benz")),
            ("ring".into(), ring_mask(256, "ring")),
        ])
        .unwrap()
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let e = PayloadLibrary::new(vec![
            ("a".into(), ring_mask(64, "a")),
            ("a".into(), star_mask(64, "a")),
        ]);
        assert!(e.is_err());
    }

    #[test]
    fn paired_detects_an_exact_embed_with_score_one() {
        let image = ImageBuffer::filled(512, 512, [140, 140, 140]);
        let lib = library();
        let mask = lib.get("benz").unwrap().clone();
        let spec = InjectionSpec::at_origin(mask, (100, 100), 2);
        let (suspect, record) = embed_payload(&image, &spec).unwrap();
        assert_eq!(record.clipped_pixels, 0);
        let report = detect_paired(&image, &suspect, &lib, &cfg()).unwrap();
        assert!(report.detected);
        assert_eq!(report.best_match.as_deref(), Some("benz"));
        assert_eq!(report.match_score, Some(1.0));
    }

    #[test]
    fn paired_ignores_identical_images() {
        let image = ImageBuffer::filled(64, 64, [10, 20, 30]);
        let report = detect_paired(&image, &image, &library(), &cfg()).unwrap();
        assert!(!report.detected);
        assert!(report.best_match.is_none());
        assert!(report.match_score.is_none());
    }

    #[test]
    fn paired_area_gate_rejects_scattered_flips() {
        let image = ImageBuffer::filled(64, 64, [50, 50, 50]);
        let mut suspect = image.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x = rng.gen_range(0..64);
            let y = rng.gen_range(0..64);
            suspect.set_pixel(x, y, [53, 53, 53]);
        }
        let report = detect_paired(&image, &suspect, &library(), &cfg()).unwrap();
        assert!(
            !report.detected,
            "10 pixels sit below the 64-pixel area gate"
        );
    }

    #[test]
    fn blind_recovers_a_strength_two_logo_on_flat_background() {
        let image = ImageBuffer::filled(768, 768, [128, 128, 128]);
        let lib = library();
        let mask = lib.get("benz").unwrap().clone();
        let spec = InjectionSpec::at_origin(mask, (200, 180), 2);
        let (suspect, _) = embed_payload(&image, &spec).unwrap();
        let report = detect_blind(&suspect, &lib, &cfg());
        assert!(report.detected);
        assert_eq!(report.best_match.as_deref(), Some("benz"));
        assert!(
            report.match_score.unwrap() >= 0.8,
            "match score {:?}",
            report.match_score
        );
    }

    #[test]
    fn blind_fails_on_a_noise_background() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data: Vec<u8> = (0..768 * 768 * 3).map(|_| rng.gen()).collect();
        let image = ImageBuffer::from_raw(768, 768, data).unwrap();
        let lib = library();
        let mask = lib.get("benz").unwrap().clone();
        let spec = InjectionSpec::at_origin(mask, (200, 180), 2);
        let (suspect, _) = embed_payload(&image, &spec).unwrap();
        let report = detect_blind(&suspect, &lib, &cfg());
        assert!(!report.detected, "median residual of noise swamps offset 2");
    }

    #[test]
    fn blind_ignores_clean_flat_images() {
        let image = ImageBuffer::filled(256, 256, [77, 90, 120]);
        let report = detect_blind(&image, &library(), &cfg());
        assert!(!report.detected);
        assert!(report.recovered.is_empty());
    }

    #[test]
    fn blind_residual_band_excludes_strong_edges() {
        // A high-contrast disk is a genuine image feature; its edges overshoot
        // the band and its interior matches the local median.
        let mut image = ImageBuffer::filled(256, 256, [60, 60, 60]);
        for y in 0..256u32 {
            for x in 0..256u32 {
                let dx = x as f64 - 128.0;
                let dy = y as f64 - 128.0;
                if dx * dx + dy * dy < 60.0 * 60.0 {
                    image.set_pixel(x, y, [200, 200, 200]);
                }
            }
        }
        let report = detect_blind(&image, &library(), &cfg());
        assert!(!report.detected);
    }

    #[test]
    fn match_identical_mask_scores_one() {
        let lib = library();
        let recovered = lib.get("ring").unwrap().place(512, 512, (40, 60)).unwrap();
        let (id, score) = match_payload(&recovered, &lib, &cfg()).unwrap();
        assert_eq!(id.as_deref(), Some("ring"));
        assert_eq!(score, 1.0);
    }

    #[test]
    fn match_with_half_the_pixels_erased_sits_at_the_boundary() {
        // A solid block with a checkerboard erase keeps the bbox intact, so
        // the alignment is exact: intersection is half the entry, union is
        // the full entry, IoU is exactly 0.5.
        let block = PayloadMask::from_fn(64, 64, "block", |_, _| true);
        let lib = PayloadLibrary::new(vec![("block".into(), block)]).unwrap();
        let half = PayloadMask::from_fn(64, 64, "half", |x, y| (x + y) % 2 == 0);
        let (id, score) = match_payload(&half, &lib, &cfg()).unwrap();
        assert_eq!(score, 0.5, "score {score}");
        // Exactly at the threshold still claims the identity.
        assert_eq!(id.as_deref(), Some("block"));
    }

    #[test]
    fn match_disjoint_shape_claims_nothing() {
        let lib = library();
        // A solid block in the top-left corner of its bbox overlaps the ring
        // library entries only marginally after alignment.
        let blob = PayloadMask::from_fn(256, 256, "blob", |x, y| x < 40 && y < 40);
        let (id, _) = match_payload(&blob, &lib, &cfg()).unwrap();
        assert_eq!(id, None);
    }

    #[test]
    fn match_empty_mask_is_an_error() {
        let empty = PayloadMask::from_fn(8, 8, "none", |_, _| false);
        assert!(matches!(
            match_payload(&empty, &library(), &cfg()),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn blind_detection_is_soundness_checked_against_gray_ramps() {
        // Smooth gradients quantize into steps; the median background absorbs
        // them, so a clean ramp must not trigger detection.
        let mut image = ImageBuffer::filled(512, 512, [0, 0, 0]);
        for y in 0..512u32 {
            for x in 0..512u32 {
                let v = 60 + (x * 48 / 512) as u8;
                image.set_pixel(x, y, [v, v, v]);
            }
        }
        let report = detect_blind(&image, &library(), &cfg());
        assert!(!report.detected, "clean gradient must not be detected");
    }

    #[test]
    fn median_suppresses_thin_strokes_only() {
        // Strokes of width 4 vanish from the median background (and are
        // therefore recoverable); width 5 survives it and is lost. This pins
        // the geometry the payload shapes rely on.
        let mut gray = GrayBuffer::filled(64, 64, 100);
        for y in 0..64u32 {
            for x in 10..14u32 {
                gray.set(x, y, 102);
            }
            for x in 40..45u32 {
                gray.set(x, y, 102);
            }
        }
        let bg = median_filter(&gray, 4);
        assert_eq!(bg.get(12, 32), 100, "4-wide stroke suppressed");
        assert_eq!(bg.get(42, 32), 102, "5-wide stroke preserved");
    }
}
