//! Built-in payload shapes.
//!
//! Six thin-stroke drawings at canonical 256x256 scale: four stand-ins for
//! well-known marks (apple, benz, chanel, mcdonalds) and two custom patterns
//! (flower, fuji). All strokes are ~3.4 px wide, the operating point where
//! the radius-4 median background suppresses the stroke at every orientation
//! while the 3x3 morphological opening still preserves it.

use faintmark::detect::PayloadLibrary;
use faintmark::imaging::PayloadMask;

/// Canonical canvas side for the built-in shapes.
pub const CANONICAL_SIDE: u32 = 256;

/// Default embedded payload width used by the sweeps.
pub const DEFAULT_PAYLOAD_WIDTH: u32 = 256;

const STROKE_HALF: f64 = 1.7;

fn dist_to_segment(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let dx = bx - ax;
    let dy = by - ay;
    let len_sq = dx * dx + dy * dy;
    let t = if len_sq == 0.0 {
        0.0
    } else {
        ((px - ax) * dx + (py - ay) * dy) / len_sq
    }
    .clamp(0.0, 1.0);
    let cx = ax + t * dx;
    let cy = ay + t * dy;
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

fn near_polyline(px: f64, py: f64, points: &[(f64, f64)]) -> bool {
    points
        .windows(2)
        .any(|p| dist_to_segment(px, py, p[0].0, p[0].1, p[1].0, p[1].1) < STROKE_HALF)
}

fn ring(px: f64, py: f64, cx: f64, cy: f64, r_mid: f64) -> bool {
    let d = ((px - cx).powi(2) + (py - cy).powi(2)).sqrt();
    (d - r_mid).abs() < STROKE_HALF
}

/// Ellipse outline: radial distance to the ellipse along the pixel's
/// direction from the center, adequate for mildly eccentric shapes.
fn ellipse_ring(px: f64, py: f64, cx: f64, cy: f64, rx: f64, ry: f64) -> bool {
    let dx = px - cx;
    let dy = py - cy;
    let dist = (dx * dx + dy * dy).sqrt();
    if dist < 1e-9 {
        return false;
    }
    let (ux, uy) = (dx / dist, dy / dist);
    let r_dir = 1.0 / ((ux / rx).powi(2) + (uy / ry).powi(2)).sqrt();
    (dist - r_dir).abs() < STROKE_HALF
}

fn apple() -> PayloadMask {
    PayloadMask::from_fn(CANONICAL_SIDE, CANONICAL_SIDE, "apple", |x, y| {
        let px = x as f64 + 0.5;
        let py = y as f64 + 0.5;
        // Bite taken out of the upper-right of the body outline.
        let bite = ((px - 212.0).powi(2) + (py - 96.0).powi(2)).sqrt() < 36.0;
        let body = ellipse_ring(px, py, 128.0, 140.0, 120.0, 102.0) && !bite;
        let stem = near_polyline(px, py, &[(126.0, 40.0), (132.0, 14.0)]);
        body || stem
    })
}

fn benz() -> PayloadMask {
    PayloadMask::from_fn(CANONICAL_SIDE, CANONICAL_SIDE, "benz", |x, y| {
        let px = x as f64 + 0.5;
        let py = y as f64 + 0.5;
        let dx = px - 128.0;
        let dy = py - 128.0;
        let d = (dx * dx + dy * dy).sqrt();
        let r_mid = 124.0;
        if (d - r_mid).abs() < STROKE_HALF {
            return true;
        }
        if d < r_mid - STROKE_HALF {
            // Three spokes: up, lower-left, lower-right.
            for angle in [270.0f64, 30.0, 150.0] {
                let a = angle.to_radians();
                let along = dx * a.cos() + dy * a.sin();
                let perp = (-dx * a.sin() + dy * a.cos()).abs();
                if along >= 0.0 && perp < STROKE_HALF {
                    return true;
                }
            }
        }
        false
    })
}

fn chanel() -> PayloadMask {
    PayloadMask::from_fn(CANONICAL_SIDE, CANONICAL_SIDE, "chanel", |x, y| {
        let px = x as f64 + 0.5;
        let py = y as f64 + 0.5;
        ring(px, py, 77.0, 128.0, 72.0) || ring(px, py, 179.0, 128.0, 72.0)
    })
}

fn mcdonalds() -> PayloadMask {
    PayloadMask::from_fn(CANONICAL_SIDE, CANONICAL_SIDE, "mcdonalds", |x, y| {
        let px = x as f64 + 0.5;
        let py = y as f64 + 0.5;
        if py > 188.0 {
            return false;
        }
        // Two arches sharing the baseline.
        (ring(px, py, 68.0, 188.0, 62.0) || ring(px, py, 188.0, 188.0, 62.0)) && py <= 188.0
    })
}

fn flower() -> PayloadMask {
    PayloadMask::from_fn(CANONICAL_SIDE, CANONICAL_SIDE, "flower", |x, y| {
        let px = x as f64 + 0.5;
        let py = y as f64 + 0.5;
        if ring(px, py, 128.0, 128.0, 24.0) {
            return true;
        }
        for k in 0..6 {
            let a = (60.0 * k as f64).to_radians();
            let cx = 128.0 + 88.0 * a.cos();
            let cy = 128.0 + 88.0 * a.sin();
            if ring(px, py, cx, cy, 36.0) {
                return true;
            }
        }
        false
    })
}

fn fuji() -> PayloadMask {
    PayloadMask::from_fn(CANONICAL_SIDE, CANONICAL_SIDE, "fuji", |x, y| {
        let px = x as f64 + 0.5;
        let py = y as f64 + 0.5;
        // Flat-topped volcano silhouette. The base stays open: a closed
        // corner would form a wedge wider than the median window tolerates,
        // and losing bbox corners breaks the match alignment downstream.
        let outline = near_polyline(
            px,
            py,
            &[(6.0, 238.0), (98.0, 66.0), (158.0, 66.0), (250.0, 238.0)],
        );
        // Snow line: a shallow zig-zag spanning slope to slope. Obtuse
        // joints keep the junction wedges below the median window, and the
        // slope connections keep every fragment in one large component.
        let snow = near_polyline(
            px,
            py,
            &[
                (82.0, 96.0),
                (105.0, 110.0),
                (128.0, 96.0),
                (151.0, 110.0),
                (174.0, 96.0),
            ],
        );
        outline || snow
    })
}

/// All six built-in payloads in canonical library order.
pub fn builtin_library() -> PayloadLibrary {
    PayloadLibrary::new(vec![
        ("apple".into(), apple()),
        ("benz".into(), benz()),
        ("chanel".into(), chanel()),
        ("mcdonalds".into(), mcdonalds()),
        ("flower".into(), flower()),
        ("fuji".into(), fuji()),
    ])
    .expect("built-in payloads are unique and non-empty")
}

/// Ids of the built-in payloads, in library order.
pub fn builtin_ids() -> Vec<String> {
    builtin_library()
        .entries()
        .iter()
        .map(|(id, _)| id.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use faintmark::config::DetectConfig;
    use faintmark::detect::{detect_blind, match_payload, recover_blind};
    use faintmark::embed::{embed_payload, InjectionSpec};
    use faintmark::imaging::ImageBuffer;

    #[test]
    fn six_payloads_with_substantial_area() {
        let lib = builtin_library();
        assert_eq!(lib.entries().len(), 6);
        for (id, mask) in lib.entries() {
            assert!(
                mask.count() >= 1000,
                "{id} has only {} pixels",
                mask.count()
            );
            let bbox = mask.bbox();
            assert!(bbox.w >= 200, "{id} bbox too narrow: {:?}", bbox);
        }
    }

    #[test]
    fn every_payload_survives_blind_recovery_on_flat_background() {
        let lib = builtin_library();
        let cfg = DetectConfig::default();
        let image = ImageBuffer::filled(768, 768, [135, 135, 135]);
        for (id, mask) in lib.entries() {
            let spec = InjectionSpec::at_origin(mask.clone(), (220, 200), 2);
            let (suspect, record) = embed_payload(&image, &spec).unwrap();
            assert_eq!(record.clipped_pixels, 0, "{id} clipped");
            let report = detect_blind(&suspect, &lib, &cfg);
            assert!(report.detected, "{id} not detected");
            assert_eq!(
                report.best_match.as_deref(),
                Some(id.as_str()),
                "{id} mismatched"
            );
            assert!(
                report.match_score.unwrap() >= 0.8,
                "{id} score {:?}",
                report.match_score
            );
        }
    }

    #[test]
    fn payloads_match_themselves_best() {
        let lib = builtin_library();
        let cfg = DetectConfig::default();
        let image = ImageBuffer::filled(768, 768, [150, 150, 150]);
        for (id, mask) in lib.entries() {
            let spec = InjectionSpec::at_origin(mask.clone(), (100, 120), 2);
            let (suspect, _) = embed_payload(&image, &spec).unwrap();
            let recovered = recover_blind(&suspect, &cfg);
            let (best, _) = match_payload(&recovered, &lib, &cfg).unwrap();
            assert_eq!(best.as_deref(), Some(id.as_str()));
        }
    }
}
