//! Cross-cutting sweep properties: concatenation closure, baseline
//! consistency between sweeps, and record/manifest integrity.

use faintmark::Config;
use faintmark_cli::corpus::{synth_corpus, BackgroundMix, CorpusSpec};
use faintmark_cli::payloads::builtin_library;
use faintmark_cli::sweeps::{
    embed_corpus, run_entropy_sweep, run_mitigation_eval, run_size_sweep, run_strength_sweep,
};

fn flat_corpus(count: u32, seed: u64) -> Vec<faintmark_cli::corpus::CorpusImage> {
    synth_corpus(&CorpusSpec {
        count,
        size: 512,
        background: BackgroundMix::Flat,
        shapes_min: 1,
        shapes_max: 2,
        shape_r_min: 28,
        shape_r_max: 46,
        seed,
    })
    .unwrap()
}

/// payload -> strength/width -> (images, rate) from a summary CSV.
fn parse_rates(summary: &str, rate_col: usize) -> Vec<(String, String, u32, f64)> {
    summary
        .lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            (
                f[0].to_string(),
                f[1].to_string(),
                f[2].parse().unwrap(),
                f[rate_col].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn pooled_rate_is_the_weighted_mean_of_subcorpus_rates() {
    let cfg = Config::default();
    let library = builtin_library();
    let a = flat_corpus(3, 11);
    let b = flat_corpus(5, 12);
    let mut pooled = a.clone();
    pooled.extend(b.iter().cloned());

    let strengths = [2u8];
    let ra = parse_rates(
        &run_strength_sweep(&a, &library, &strengths, &cfg)
            .unwrap()
            .summary_csv,
        5,
    );
    let rb = parse_rates(
        &run_strength_sweep(&b, &library, &strengths, &cfg)
            .unwrap()
            .summary_csv,
        5,
    );
    let rp = parse_rates(
        &run_strength_sweep(&pooled, &library, &strengths, &cfg)
            .unwrap()
            .summary_csv,
        5,
    );

    for ((pa, sa, na, va), ((_, _, nb, vb), (_, _, np, vp))) in
        ra.iter().zip(rb.iter().zip(rp.iter()))
    {
        let expected = (va * f64::from(*na) + vb * f64::from(*nb)) / f64::from(*np);
        assert!(
            (vp - expected).abs() < 1e-9,
            "{pa}@{sa}: pooled {vp} vs weighted mean {expected}"
        );
        assert_eq!(*np, na + nb);
    }
}

#[test]
fn size_sweep_at_canonical_width_matches_the_strength_baseline() {
    let cfg = Config::default();
    let library = builtin_library();
    let corpus = flat_corpus(4, 21);

    let strength = parse_rates(
        &run_strength_sweep(&corpus, &library, &[cfg.embed.default_strength], &cfg)
            .unwrap()
            .summary_csv,
        5,
    );
    let size = parse_rates(
        &run_size_sweep(&corpus, &library, &[256], &cfg)
            .unwrap()
            .summary_csv,
        3,
    );

    for ((p1, _, _, blind_rate), (p2, w, _, size_rate)) in strength.iter().zip(size.iter()) {
        assert_eq!(p1, p2);
        assert_eq!(w, "256");
        assert_eq!(
            blind_rate, size_rate,
            "{p1}: strength-sweep baseline {blind_rate} vs size-sweep {size_rate}"
        );
    }
}

#[test]
fn degenerate_sweep_inputs_are_rejected() {
    let cfg = Config::default();
    let library = builtin_library();
    let corpus = flat_corpus(2, 41);
    assert!(run_strength_sweep(&corpus, &library, &[], &cfg).is_err());
    assert!(run_strength_sweep(&[], &library, &[2], &cfg).is_err());
    assert!(run_size_sweep(&corpus, &library, &[4], &cfg).is_err());
    assert!(run_size_sweep(&corpus, &library, &[], &cfg).is_err());
    // The entropy sweep needs all three background families.
    assert!(run_entropy_sweep(&corpus, &library, &cfg).is_err());
    assert!(embed_corpus(&corpus, &library, &[], &cfg).is_err());
    assert!(run_mitigation_eval(&[], &library, &cfg).is_err());
}

#[test]
fn high_strength_mitigation_never_beats_the_operating_point() {
    // Mitigation is hardest when the payload is strong enough that its
    // stroke edges fail the smoothness bound and escape segmentation;
    // rate(10) <= rate(2) + 0.05.
    let cfg = Config::default();
    let library = builtin_library();
    let corpus = flat_corpus(4, 51);
    let embedded = embed_corpus(&corpus, &library, &[2, 10], &cfg).unwrap();
    let sweep = run_mitigation_eval(&embedded, &library, &cfg).unwrap();
    let rows = parse_rates(&sweep.summary_csv, 3);
    for chunk in rows.chunks(2) {
        let (ref payload, _, _, rate2) = chunk[0];
        let (_, _, _, rate10) = chunk[1];
        assert_eq!(chunk[0].1, "2");
        assert_eq!(chunk[1].1, "10");
        assert!(
            rate10 <= rate2 + 0.05,
            "{payload}: rate(10) = {rate10} vs rate(2) = {rate2}"
        );
    }
}

#[test]
fn every_record_references_a_corpus_image() {
    let cfg = Config::default();
    let library = builtin_library();
    let corpus = flat_corpus(3, 31);
    let ids: std::collections::HashSet<&str> = corpus.iter().map(|i| i.id.as_str()).collect();
    let sweep = run_strength_sweep(&corpus, &library, &[1, 2], &cfg).unwrap();
    assert_eq!(sweep.records.len(), 3 * 6 * 2, "one record per cell");
    for record in &sweep.records {
        assert!(
            ids.contains(record.image_id.as_str()),
            "{} unknown",
            record.image_id
        );
    }
    // Header integrity of the records CSV.
    let mut lines = sweep.records_csv.lines();
    assert_eq!(lines.next(), Some(faintmark_cli::records::RECORDS_HEADER));
    assert_eq!(lines.count(), sweep.records.len());
}
