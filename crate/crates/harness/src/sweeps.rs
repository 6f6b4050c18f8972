//! Experiment runners: strength, entropy, size, and mitigation sweeps.
//!
//! Every sweep walks independent (image, payload, strength) cells, computes
//! per-cell records in parallel, and aggregates them in a fixed order, so the
//! CSV output is byte-identical across runs and thread schedules. Embedding
//! always targets the minimum-entropy window; when that window is infeasible
//! the embed still happens, which is exactly how the attack degrades on busy
//! backgrounds.

use anyhow::{bail, Result};
use rayon::prelude::*;

use faintmark::config::Config;
use faintmark::detect::{detect_blind, detect_paired, recover_blind, PayloadLibrary};
use faintmark::embed::{embed_payload, InjectionRecord, InjectionSpec};
use faintmark::entropy::{select_placement, shannon_entropy};
use faintmark::imaging::{scale_mask, to_luma, ImageBuffer, PayloadMask};
use faintmark::jnd::{jnd_map, jnd_ratio_with, Verdict};
use faintmark::scrub::scrub;

use crate::corpus::CorpusImage;
use crate::payloads::DEFAULT_PAYLOAD_WIDTH;
use crate::records::{fmt_f64, records_csv, ExperimentRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Strength,
    Entropy,
    Size,
    Mitigation,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Strength => "strength",
            SweepKind::Entropy => "entropy",
            SweepKind::Size => "size",
            SweepKind::Mitigation => "mitigation",
        }
    }
}

/// A finished sweep: the aggregate table, the row-level records, and both
/// rendered as CSV.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub kind: SweepKind,
    pub summary_csv: String,
    pub records_csv: String,
    pub records: Vec<ExperimentRecord>,
}

pub const STRENGTH_HEADER: &str =
    "payload,strength,images,invisible_fraction,mean_jnd_ratio,blind_detect_rate";
pub const ENTROPY_HEADER: &str = "bucket_lo,bucket_hi,images,blind_detect_rate";
pub const SIZE_HEADER: &str = "payload,width,images,blind_detect_rate";
pub const MITIGATION_HEADER: &str = "payload,strength,images,mitigation_rate,mean_foreground_mad";

/// Embeds one payload at the image's minimum-entropy window.
fn embed_cell(
    image: &ImageBuffer,
    mask: &PayloadMask,
    strength: u8,
    cfg: &Config,
) -> Result<(ImageBuffer, InjectionRecord, PayloadMask)> {
    let luma = to_luma(image);
    let bbox = mask.bbox();
    let decision = select_placement(&luma, (bbox.w, bbox.h), cfg.entropy.tile_size, &cfg.entropy)?;
    let spec = InjectionSpec::at_decision(mask.clone(), decision, strength);
    let (injected, record) = embed_payload(image, &spec)?;
    let placed = mask.place(image.width(), image.height(), decision.origin)?;
    Ok((injected, record, placed))
}

/// Per (payload, strength): invisibility fraction, mean JND ratio, and blind
/// detection rate over the corpus. Rows are sorted by payload then strength.
pub fn run_strength_sweep(
    corpus: &[CorpusImage],
    library: &PayloadLibrary,
    strengths: &[u8],
    cfg: &Config,
) -> Result<SweepOutput> {
    if corpus.is_empty() {
        bail!("corpus must be non-empty");
    }
    if strengths.is_empty() {
        bail!("strengths list must be non-empty");
    }

    let masks: Vec<(String, PayloadMask)> = library
        .entries()
        .iter()
        .map(|(id, entry)| Ok((id.clone(), scale_mask(entry, DEFAULT_PAYLOAD_WIDTH)?)))
        .collect::<Result<_>>()?;

    // One unit of parallel work per image: the luma plane, JND map, and
    // per-payload placement are shared across that image's cells.
    let per_image: Vec<Vec<ExperimentRecord>> = corpus
        .par_iter()
        .map(|img| {
            let luma = to_luma(&img.image);
            let entropy = shannon_entropy(&luma);
            let map = jnd_map(&luma, &cfg.jnd);
            let mut rows = Vec::new();
            for (payload_id, mask) in &masks {
                let bbox = mask.bbox();
                let decision =
                    select_placement(&luma, (bbox.w, bbox.h), cfg.entropy.tile_size, &cfg.entropy)?;
                let placed = mask.place(img.image.width(), img.image.height(), decision.origin)?;
                for &strength in strengths {
                    let spec = InjectionSpec::at_decision(mask.clone(), decision, strength);
                    let (injected, _) = embed_payload(&img.image, &spec)?;
                    let vis = jnd_ratio_with(&map, &luma, &injected, &placed, &cfg.jnd)?;
                    // Only the boolean feeds the records; recover_blind
                    // skips the matcher, which detect_blind would run on
                    // every detected cell.
                    let blind = !recover_blind(&injected, &cfg.detect).is_empty();
                    let paired = detect_paired(&img.image, &injected, library, &cfg.detect)?;
                    rows.push(ExperimentRecord {
                        image_id: img.id.clone(),
                        payload_id: payload_id.clone(),
                        strength,
                        background_entropy: entropy,
                        jnd_ratio: Some(vis.jnd_ratio),
                        verdict: Some(vis.verdict),
                        blind_detected: Some(blind),
                        paired_score: paired.match_score,
                        scrubbed_detected: None,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let mut records: Vec<ExperimentRecord> = per_image.into_iter().flatten().collect();
    records.sort_by(|a, b| {
        (&a.payload_id, a.strength, &a.image_id).cmp(&(&b.payload_id, b.strength, &b.image_id))
    });

    let mut summary = String::from(STRENGTH_HEADER);
    summary.push('\n');
    let mut payload_ids: Vec<String> = library.entries().iter().map(|(id, _)| id.clone()).collect();
    payload_ids.sort();
    for payload_id in &payload_ids {
        for &strength in strengths {
            let cells: Vec<&ExperimentRecord> = records
                .iter()
                .filter(|r| &r.payload_id == payload_id && r.strength == strength)
                .collect();
            let n = cells.len();
            let invisible = cells
                .iter()
                .filter(|r| r.verdict == Some(Verdict::Invisible))
                .count();
            let mean_ratio = cells.iter().filter_map(|r| r.jnd_ratio).sum::<f64>() / n as f64;
            let detected = cells
                .iter()
                .filter(|r| r.blind_detected == Some(true))
                .count();
            summary.push_str(&format!(
                "{payload_id},{strength},{n},{},{},{}\n",
                fmt_f64(invisible as f64 / n as f64),
                fmt_f64(mean_ratio),
                fmt_f64(detected as f64 / n as f64),
            ));
        }
    }

    Ok(SweepOutput {
        kind: SweepKind::Strength,
        summary_csv: summary,
        records_csv: records_csv(&records),
        records,
    })
}

/// Blind-detection rate at the default strength, bucketed by the clean
/// image's global entropy (bucket width 1 bit). Payloads rotate through the
/// library so every image carries exactly one.
pub fn run_entropy_sweep(
    corpus: &[CorpusImage],
    library: &PayloadLibrary,
    cfg: &Config,
) -> Result<SweepOutput> {
    if corpus.is_empty() {
        bail!("corpus must be non-empty");
    }
    let kinds: std::collections::HashSet<&str> =
        corpus.iter().map(|i| i.background.kind_name()).collect();
    for required in ["flat", "gradient", "noise"] {
        if !kinds.contains(required) {
            bail!("entropy sweep needs a mixed corpus; missing {required} backgrounds");
        }
    }
    if library.entries().is_empty() {
        bail!("payload library must be non-empty");
    }

    let strength = cfg.embed.default_strength;
    let records: Vec<ExperimentRecord> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, img)| {
            let (payload_id, entry) = &library.entries()[i % library.entries().len()];
            let mask = scale_mask(entry, DEFAULT_PAYLOAD_WIDTH)?;
            let entropy = shannon_entropy(&to_luma(&img.image));
            let (injected, _, _) = embed_cell(&img.image, &mask, strength, cfg)?;
            let blind = !recover_blind(&injected, &cfg.detect).is_empty();
            Ok(ExperimentRecord {
                image_id: img.id.clone(),
                payload_id: payload_id.clone(),
                strength,
                background_entropy: entropy,
                jnd_ratio: None,
                verdict: None,
                blind_detected: Some(blind),
                paired_score: None,
                scrubbed_detected: None,
            })
        })
        .collect::<Result<_>>()?;

    let mut summary = String::from(ENTROPY_HEADER);
    summary.push('\n');
    for bucket in 0..8u32 {
        let cells: Vec<&ExperimentRecord> = records
            .iter()
            .filter(|r| {
                let b = (r.background_entropy.floor() as u32).min(7);
                b == bucket
            })
            .collect();
        if cells.is_empty() {
            continue;
        }
        let detected = cells
            .iter()
            .filter(|r| r.blind_detected == Some(true))
            .count();
        summary.push_str(&format!(
            "{bucket},{},{},{}\n",
            bucket + 1,
            cells.len(),
            fmt_f64(detected as f64 / cells.len() as f64),
        ));
    }

    Ok(SweepOutput {
        kind: SweepKind::Entropy,
        summary_csv: summary,
        records_csv: records_csv(&records),
        records,
    })
}

/// Blind-detection rate per payload width at the default strength. Widths
/// are reported in the given order.
pub fn run_size_sweep(
    corpus: &[CorpusImage],
    library: &PayloadLibrary,
    widths: &[u32],
    cfg: &Config,
) -> Result<SweepOutput> {
    if corpus.is_empty() {
        bail!("corpus must be non-empty");
    }
    if widths.is_empty() {
        bail!("widths list must be non-empty");
    }
    if let Some(w) = widths.iter().find(|&&w| w < 8) {
        bail!("payload width {w} is degenerate (must be >= 8)");
    }

    let strength = cfg.embed.default_strength;
    let per_image: Vec<Vec<ExperimentRecord>> = corpus
        .par_iter()
        .map(|img| {
            let entropy = shannon_entropy(&to_luma(&img.image));
            let mut rows = Vec::new();
            for (payload_id, entry) in library.entries() {
                for &width in widths {
                    let mask = scale_mask(entry, width)?;
                    let (injected, _, _) = embed_cell(&img.image, &mask, strength, cfg)?;
                    let blind = !recover_blind(&injected, &cfg.detect).is_empty();
                    rows.push(ExperimentRecord {
                        image_id: img.id.clone(),
                        // Width rides in the payload id so the records stay
                        // one-row-per-cell without a schema change.
                        payload_id: format!("{payload_id}@{width}"),
                        strength,
                        background_entropy: entropy,
                        jnd_ratio: None,
                        verdict: None,
                        blind_detected: Some(blind),
                        paired_score: None,
                        scrubbed_detected: None,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let records: Vec<ExperimentRecord> = per_image.into_iter().flatten().collect();

    let mut summary = String::from(SIZE_HEADER);
    summary.push('\n');
    let mut payload_ids: Vec<String> = library.entries().iter().map(|(id, _)| id.clone()).collect();
    payload_ids.sort();
    for payload_id in &payload_ids {
        for &width in widths {
            let key = format!("{payload_id}@{width}");
            let cells: Vec<&ExperimentRecord> =
                records.iter().filter(|r| r.payload_id == key).collect();
            let detected = cells
                .iter()
                .filter(|r| r.blind_detected == Some(true))
                .count();
            summary.push_str(&format!(
                "{payload_id},{width},{},{}\n",
                cells.len(),
                fmt_f64(detected as f64 / cells.len() as f64),
            ));
        }
    }

    Ok(SweepOutput {
        kind: SweepKind::Size,
        summary_csv: summary,
        records_csv: records_csv(&records),
        records,
    })
}

/// An embedded corpus cell ready for mitigation.
pub struct EmbeddedImage {
    pub image_id: String,
    pub clean: ImageBuffer,
    pub injected: ImageBuffer,
    pub record: InjectionRecord,
    pub background_entropy: f64,
}

/// Embeds every (image, payload, strength) cell of a corpus.
pub fn embed_corpus(
    corpus: &[CorpusImage],
    library: &PayloadLibrary,
    strengths: &[u8],
    cfg: &Config,
) -> Result<Vec<EmbeddedImage>> {
    if corpus.is_empty() {
        bail!("corpus must be non-empty");
    }
    if strengths.is_empty() {
        bail!("strengths list must be non-empty");
    }
    let per_image: Vec<Vec<EmbeddedImage>> = corpus
        .par_iter()
        .map(|img| {
            let entropy = shannon_entropy(&to_luma(&img.image));
            let mut out = Vec::new();
            for (_, entry) in library.entries() {
                let mask = scale_mask(entry, DEFAULT_PAYLOAD_WIDTH)?;
                for &strength in strengths {
                    let (injected, record, _) = embed_cell(&img.image, &mask, strength, cfg)?;
                    out.push(EmbeddedImage {
                        image_id: img.id.clone(),
                        clean: img.image.clone(),
                        injected,
                        record,
                        background_entropy: entropy,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_image.into_iter().flatten().collect())
}

/// Scrubs an embedded corpus and reports, per (payload, strength), the
/// mitigation rate and the mean foreground change.
pub fn run_mitigation_eval(
    embedded: &[EmbeddedImage],
    library: &PayloadLibrary,
    cfg: &Config,
) -> Result<SweepOutput> {
    if embedded.is_empty() {
        bail!("embedded corpus must be non-empty");
    }

    struct Cell {
        record: ExperimentRecord,
        foreground_mad: f64,
    }

    let cells: Vec<Cell> = embedded
        .par_iter()
        .map(|cell| {
            let report = scrub(&cell.injected, cfg);
            let destroyed = report.payload_destroyed;
            // Consistency: the public detector agrees with the scrub verdict.
            debug_assert_eq!(
                !detect_blind(&report.cleaned, library, &cfg.detect).detected,
                destroyed
            );
            Cell {
                record: ExperimentRecord {
                    image_id: cell.image_id.clone(),
                    payload_id: cell.record.payload_id.clone(),
                    strength: cell.record.strength,
                    background_entropy: cell.background_entropy,
                    jnd_ratio: None,
                    verdict: None,
                    blind_detected: None,
                    paired_score: None,
                    scrubbed_detected: Some(!destroyed),
                },
                foreground_mad: report.foreground_mad,
            }
        })
        .collect();

    let mut records: Vec<ExperimentRecord> = cells.iter().map(|c| c.record.clone()).collect();
    records.sort_by(|a, b| {
        (&a.payload_id, a.strength, &a.image_id).cmp(&(&b.payload_id, b.strength, &b.image_id))
    });

    let mut keys: Vec<(String, u8)> = cells
        .iter()
        .map(|c| (c.record.payload_id.clone(), c.record.strength))
        .collect();
    keys.sort();
    keys.dedup();

    let mut summary = String::from(MITIGATION_HEADER);
    summary.push('\n');
    for (payload_id, strength) in keys {
        let group: Vec<&Cell> = cells
            .iter()
            .filter(|c| c.record.payload_id == payload_id && c.record.strength == strength)
            .collect();
        let n = group.len();
        let destroyed = group
            .iter()
            .filter(|c| c.record.scrubbed_detected == Some(false))
            .count();
        let mad = group.iter().map(|c| c.foreground_mad).sum::<f64>() / n as f64;
        summary.push_str(&format!(
            "{payload_id},{strength},{n},{},{}\n",
            fmt_f64(destroyed as f64 / n as f64),
            fmt_f64(mad),
        ));
    }

    Ok(SweepOutput {
        kind: SweepKind::Mitigation,
        summary_csv: summary,
        records_csv: records_csv(&records),
        records,
    })
}
