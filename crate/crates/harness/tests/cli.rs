//! End-to-end CLI checks: exit codes, emitted files, and the embed ->
//! detect -> scrub round trip through the binary.

use std::path::Path;
use std::process::{Command, Output};

fn faintmark(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_faintmark"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = faintmark(&["--help"], dir.path());
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("faintmark"));
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&faintmark(&[], dir.path())), 1);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&faintmark(&["synth", "--bogus"], dir.path())), 1);
}

#[test]
fn conflicting_payload_flags_are_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = faintmark(&["embed", "--image", "x.png"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--payload or --mask"));
}

#[test]
fn missing_input_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = faintmark(
        &["embed", "--image", "absent.png", "--payload", "benz"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_config_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "entropy = \"nope\"").unwrap();
    let out = faintmark(
        &["--config", "bad.toml", "synth", "--count", "1"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_payload_id_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    // The image must exist so we get past input loading.
    let img = faintmark::imaging::ImageBuffer::filled(64, 64, [100, 100, 100]);
    faintmark::imaging::save_png(&img, dir.path().join("img.png")).unwrap();
    let out = faintmark(
        &["embed", "--image", "img.png", "--payload", "acme"],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn synth_embed_detect_scrub_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let img = faintmark::imaging::ImageBuffer::filled(640, 640, [150, 148, 152]);
    faintmark::imaging::save_png(&img, dir.path().join("base.png")).unwrap();

    // Embed at the default operating point.
    let out = faintmark(
        &["embed", "--image", "base.png", "--payload", "chanel"],
        dir.path(),
    );
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("out/base_embedded.png").exists());
    let record: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/base_embedded.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(record["payload_id"], "chanel");
    assert_eq!(record["strength"], 2);
    assert_eq!(record["clipped_pixels"], 0);

    // Blind detection recovers it.
    let out = faintmark(
        &["detect", "--suspect", "out/base_embedded.png"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/base_embedded_detection.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["method"], "blind");
    assert_eq!(report["detected"], true);
    assert_eq!(report["best_match"], "chanel");

    // Paired detection against the clean image agrees.
    let out = faintmark(
        &[
            "detect",
            "--suspect",
            "out/base_embedded.png",
            "--clean",
            "base.png",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);

    // Scrubbing destroys the payload.
    let out = faintmark(&["scrub", "--image", "out/base_embedded.png"], dir.path());
    assert_eq!(code(&out), 0);
    let scrub: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/base_embedded_scrub.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(scrub["payload_destroyed"], true);
    assert_eq!(scrub["foreground_mad"], 0.0);

    // And the cleaned image no longer detects.
    let out = faintmark(
        &["detect", "--suspect", "out/base_embedded_cleaned.png"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/base_embedded_cleaned_detection.json"))
            .unwrap(),
    )
    .unwrap();
    assert_eq!(report["detected"], false);
}

#[test]
fn synth_sweep_plot_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = faintmark(
        &[
            "synth",
            "--count",
            "2",
            "--size",
            "512",
            "--background",
            "flat",
            "--dir",
            "corpus",
            "--seed",
            "5",
        ],
        dir.path(),
    );
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("corpus/manifest.json").exists());
    assert!(dir.path().join("corpus/img_0000.png").exists());
    assert!(dir.path().join("corpus/img_0000_alpha.png").exists());

    let out = faintmark(
        &[
            "sweep",
            "strength",
            "--corpus",
            "corpus",
            "--strengths",
            "2",
            "--plots",
        ],
        dir.path(),
    );
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = std::fs::read_to_string(dir.path().join("out/strength_summary.csv")).unwrap();
    assert!(summary.starts_with("payload,strength,images,"));
    assert_eq!(summary.lines().count(), 1 + 6, "one row per payload");
    assert!(dir.path().join("out/strength_records.csv").exists());
    assert!(dir.path().join("out/strength_apple.svg").exists());

    // plot on the written CSV reproduces the same SVGs.
    let out = faintmark(
        &[
            "plot",
            "--csv",
            "out/strength_summary.csv",
            "--out",
            "plots2",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let a = std::fs::read(dir.path().join("out/strength_apple.svg")).unwrap();
    let b = std::fs::read(dir.path().join("plots2/strength_apple.svg")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn embed_prints_the_augmented_prompt() {
    let dir = tempfile::tempdir().unwrap();
    let img = faintmark::imaging::ImageBuffer::filled(512, 512, [120, 120, 120]);
    faintmark::imaging::save_png(&img, dir.path().join("img.png")).unwrap();
    let out = faintmark(
        &[
            "embed",
            "--image",
            "img.png",
            "--payload",
            "apple",
            "--prompt",
            "a dog",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with(
        "a dog, minimalist composition, objects in the corner of the image, \
         vast empty space, no clutter in the middle, solid background\n"
    ));
}

#[test]
fn detect_over_a_corpus_directory_writes_one_row_per_image() {
    let dir = tempfile::tempdir().unwrap();
    let out = faintmark(
        &[
            "synth", "--count", "3", "--size", "512", "--dir", "corpus", "--seed", "9",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);

    // Blind scan of the clean corpus: nothing should be detected.
    let out = faintmark(&["detect", "--suspect", "corpus"], dir.path());
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("out/detections.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("image_id,method,detected,best_match,score")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert!(row.contains(",blind,false,,"), "unexpected row: {row}");
    }

    // Paired scan against itself: also clean.
    let out = faintmark(
        &[
            "detect",
            "--suspect",
            "corpus",
            "--clean",
            "corpus",
            "--out",
            "paired",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("paired/detections.csv")).unwrap();
    assert!(csv.contains(",paired,false,,"));
}

#[test]
fn analyze_reports_visibility_against_a_clean_reference() {
    let dir = tempfile::tempdir().unwrap();
    let img = faintmark::imaging::ImageBuffer::filled(512, 512, [140, 140, 140]);
    faintmark::imaging::save_png(&img, dir.path().join("base.png")).unwrap();
    let out = faintmark(
        &[
            "embed",
            "--image",
            "base.png",
            "--payload",
            "fuji",
            "--strength",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let out = faintmark(
        &[
            "analyze",
            "--image",
            "out/base_embedded.png",
            "--clean",
            "base.png",
        ],
        dir.path(),
    );
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let analysis: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/base_embedded_analysis.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(analysis["visibility"]["jnd_ratio"], 1.0);
    assert_eq!(analysis["visibility"]["verdict"], "invisible");
}

#[test]
fn plot_rejects_malformed_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("junk.csv"), "a,b\n1\n").unwrap();
    assert_eq!(
        code(&faintmark(&["plot", "--csv", "junk.csv"], dir.path())),
        2
    );
}

#[test]
fn synth_is_deterministic_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["c1", "c2"] {
        let out = faintmark(
            &[
                "synth", "--count", "1", "--size", "256", "--dir", name, "--seed", "7",
            ],
            dir.path(),
        );
        assert_eq!(code(&out), 0);
    }
    let a = std::fs::read(dir.path().join("c1/img_0000.png")).unwrap();
    let b = std::fs::read(dir.path().join("c2/img_0000.png")).unwrap();
    assert_eq!(a, b, "same seed must give identical corpus bytes");
}
