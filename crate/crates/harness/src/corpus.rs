//! Deterministic synthetic corpora.
//!
//! Each image is a seeded background (flat, gradient, or salt-noise) plus a
//! few simple high-contrast foreground shapes with exact ground-truth alpha.
//! The same spec and seed always produce byte-identical corpora. Flat and
//! gradient backgrounds keep their base luma inside the range where the JND
//! visibility boundary of the studied strengths is sharp.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use faintmark::imaging::{load_mask, load_png, save_mask, save_png, ImageBuffer, PayloadMask};

/// Background families. The salt fraction is the probability that a pixel is
/// replaced by a uniformly random color; 1.0 is full noise, small fractions
/// produce intermediate entropies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Background {
    Flat,
    Gradient { span: u8 },
    Noise { fraction: f64 },
}

impl Background {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Background::Flat => "flat",
            Background::Gradient { .. } => "gradient",
            Background::Noise { .. } => "noise",
        }
    }
}

/// Which backgrounds a corpus draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackgroundMix {
    /// All images flat.
    Flat,
    /// All images gradient (random moderate span).
    Gradient,
    /// All images full uniform noise.
    Noise,
    /// Flat, small-span gradients, and a graded ladder of noise fractions so
    /// measured global entropies cover the whole [0, 8]-bit axis.
    Mixed,
}

/// Noise fractions used by the mixed corpus; spaced so measured entropies
/// fill every 1-bit bucket.
const MIXED_NOISE_FRACTIONS: [f64; 12] = [
    0.01, 0.03, 0.06, 0.10, 0.16, 0.24, 0.34, 0.46, 0.60, 0.75, 0.90, 1.0,
];

/// Corpus recipe; same spec + seed gives a byte-identical corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub count: u32,
    /// Square image side.
    pub size: u32,
    pub background: BackgroundMix,
    /// Number of foreground shapes per image.
    pub shapes_min: u32,
    pub shapes_max: u32,
    /// Shape radius range in pixels (half-side for rectangles).
    pub shape_r_min: u32,
    pub shape_r_max: u32,
    pub seed: u64,
}

impl CorpusSpec {
    pub fn new(count: u32, background: BackgroundMix, seed: u64) -> Self {
        CorpusSpec {
            count,
            size: 768,
            background,
            shapes_min: 2,
            shapes_max: 3,
            shape_r_min: 40,
            shape_r_max: 70,
            seed,
        }
    }
}

/// One synthesized image with its ground truth.
#[derive(Debug, Clone)]
pub struct CorpusImage {
    pub id: String,
    pub image: ImageBuffer,
    /// Ground-truth foreground alpha (true = foreground shape pixel).
    pub alpha: Vec<bool>,
    pub background: Background,
    pub base_luma: u8,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    id: String,
    file: String,
    alpha: String,
    background: Background,
    base_luma: u8,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    spec: CorpusSpec,
    images: Vec<ManifestEntry>,
}

/// Picks a color whose BT.601 luma lands in `[luma_lo, luma_hi]` with mild
/// chroma spread.
fn pick_color(rng: &mut ChaCha8Rng, luma_lo: u8, luma_hi: u8) -> ([u8; 3], u8) {
    loop {
        let target = rng.gen_range(u32::from(luma_lo)..=u32::from(luma_hi)) as f64;
        let dr = rng.gen_range(-18.0..=18.0);
        let dg = rng.gen_range(-18.0..=18.0);
        let db = rng.gen_range(-18.0..=18.0);
        let r = (target + dr).round();
        let g = (target + dg).round();
        let b = (target + db).round();
        if !(0.0..=255.0).contains(&r) || !(0.0..=255.0).contains(&g) || !(0.0..=255.0).contains(&b)
        {
            continue;
        }
        let luma = (0.299 * r + 0.587 * g + 0.114 * b + 0.5).floor();
        if luma >= f64::from(luma_lo) && luma <= f64::from(luma_hi) {
            return ([r as u8, g as u8, b as u8], luma as u8);
        }
    }
}

fn background_for(mix: BackgroundMix, index: u32, rng: &mut ChaCha8Rng) -> Background {
    match mix {
        BackgroundMix::Flat => Background::Flat,
        BackgroundMix::Gradient => Background::Gradient {
            span: rng.gen_range(24..=48),
        },
        BackgroundMix::Noise => Background::Noise { fraction: 1.0 },
        BackgroundMix::Mixed => match index % 8 {
            0 => Background::Flat,
            4 => Background::Gradient {
                span: rng.gen_range(3..=5),
            },
            _ => {
                let slot = index - index / 8 * 2 - u32::from(index % 8 > 4);
                Background::Noise {
                    fraction: MIXED_NOISE_FRACTIONS[slot as usize % MIXED_NOISE_FRACTIONS.len()],
                }
            }
        },
    }
}

fn synth_image(spec: &CorpusSpec, index: u32, seed: u64) -> CorpusImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = spec.size;
    let background = background_for(spec.background, index, &mut rng);
    let (base, base_luma) = pick_color(&mut rng, 104, 200);

    let mut image = ImageBuffer::filled(side, side, base);

    match background {
        Background::Flat => {}
        Background::Gradient { span } => {
            // Linear luma ramp along a random direction, equal on all
            // channels so chroma stays constant. The quantization is
            // dithered: undithered ramps form coherent staircase step-lines
            // that read as structure rather than as a smooth gradient.
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let (ux, uy) = (angle.cos(), angle.sin());
            let s = f64::from(side - 1);
            let lo = (s * ux).min(0.0) + (s * uy).min(0.0);
            let hi = (s * ux).max(0.0) + (s * uy).max(0.0);
            for y in 0..side {
                for x in 0..side {
                    let t = (f64::from(x) * ux + f64::from(y) * uy - lo) / (hi - lo);
                    let jitter: f64 = rng.gen();
                    let delta = (t * f64::from(span) + jitter).floor() - f64::from(span) / 2.0;
                    let px = [
                        (f64::from(base[0]) + delta).clamp(0.0, 255.0) as u8,
                        (f64::from(base[1]) + delta).clamp(0.0, 255.0) as u8,
                        (f64::from(base[2]) + delta).clamp(0.0, 255.0) as u8,
                    ];
                    image.set_pixel(x, y, px);
                }
            }
        }
        Background::Noise { .. } => {}
    }

    // Foreground shapes: interior disks and rectangles with luma far enough
    // from the base that their edges overshoot the blind residual band.
    let mut alpha = vec![false; (side * side) as usize];
    let n_shapes = rng.gen_range(spec.shapes_min..=spec.shapes_max);
    for _ in 0..n_shapes {
        let r = rng.gen_range(spec.shape_r_min.max(4)..=spec.shape_r_max.max(4)) as i64;
        let margin = r + (side / 32).max(8) as i64;
        let cx = rng.gen_range(margin..side as i64 - margin);
        let cy = rng.gen_range(margin..side as i64 - margin);
        let dark = rng.gen_bool(0.5);
        let (lo, hi) = if dark { (30u8, 56u8) } else { (235u8, 252u8) };
        let (color, _) = pick_color(&mut rng, lo, hi);
        let is_disk = rng.gen_bool(0.5);
        for y in (cy - r).max(0)..(cy + r + 1).min(side as i64) {
            for x in (cx - r).max(0)..(cx + r + 1).min(side as i64) {
                let inside = if is_disk {
                    let dx = x - cx;
                    let dy = y - cy;
                    dx * dx + dy * dy <= r * r
                } else {
                    true
                };
                if inside {
                    image.set_pixel(x as u32, y as u32, color);
                    alpha[(y * side as i64 + x) as usize] = true;
                }
            }
        }
    }

    // Salt noise goes over everything, shapes included: a busy image is busy
    // everywhere, leaving no flat island for the placement scan to exploit.
    if let Background::Noise { fraction } = background {
        for y in 0..side {
            for x in 0..side {
                if rng.gen_bool(fraction) {
                    image.set_pixel(x, y, [rng.gen(), rng.gen(), rng.gen()]);
                }
            }
        }
    }

    CorpusImage {
        id: format!("img_{index:04}"),
        image,
        alpha,
        background,
        base_luma,
    }
}

/// Synthesizes a corpus in memory. Deterministic under the spec seed; images
/// are generated in parallel from per-image seeds.
pub fn synth_corpus(spec: &CorpusSpec) -> Result<Vec<CorpusImage>> {
    if spec.count == 0 {
        bail!("corpus count must be >= 1");
    }
    if spec.size < 64 {
        bail!("corpus image size must be >= 64");
    }
    if spec.shape_r_min > spec.shape_r_max {
        bail!("shape radius range is inverted");
    }
    let margin = spec.shape_r_max + (spec.size / 32).max(8);
    if 2 * margin + 2 > spec.size {
        bail!(
            "shape radius {} does not fit a {}px image with its margin",
            spec.shape_r_max,
            spec.size
        );
    }
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let seeds: Vec<u64> = (0..spec.count).map(|_| master.gen()).collect();
    use rayon::prelude::*;
    Ok(seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| synth_image(spec, i as u32, s))
        .collect())
}

/// Writes a corpus directory: one PNG and one ground-truth alpha PNG per
/// image plus `manifest.json`.
pub fn write_corpus(dir: &Path, spec: &CorpusSpec, corpus: &[CorpusImage]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut entries = Vec::new();
    for img in corpus {
        let file = format!("{}.png", img.id);
        let alpha_file = format!("{}_alpha.png", img.id);
        save_png(&img.image, dir.join(&file))?;
        let alpha_mask = PayloadMask::from_bits(
            img.image.width(),
            img.image.height(),
            img.alpha.clone(),
            "alpha",
        )?;
        save_mask(&alpha_mask, dir.join(&alpha_file))?;
        entries.push(ManifestEntry {
            id: img.id.clone(),
            file,
            alpha: alpha_file,
            background: img.background,
            base_luma: img.base_luma,
        });
    }
    let manifest = Manifest {
        spec: *spec,
        images: entries,
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

/// Loads a corpus directory written by [`write_corpus`].
pub fn load_corpus(dir: &Path) -> Result<Vec<CorpusImage>> {
    let manifest_path = dir.join("manifest.json");
    let manifest: Manifest = serde_json::from_str(
        &fs::read_to_string(&manifest_path)
            .with_context(|| format!("reading {}", manifest_path.display()))?,
    )?;
    let mut corpus = Vec::with_capacity(manifest.images.len());
    for entry in manifest.images {
        let image = load_png(dir.join(&entry.file))?;
        let alpha = load_mask(dir.join(&entry.alpha))?;
        corpus.push(CorpusImage {
            id: entry.id,
            alpha: alpha.bits().to_vec(),
            image,
            background: entry.background,
            base_luma: entry.base_luma,
        });
    }
    Ok(corpus)
}
