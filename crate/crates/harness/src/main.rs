//! faintmark CLI: embed, analyze, detect, scrub, synth, sweep, plot.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors (missing or
//! malformed inputs, infeasible placements, I/O failures).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use faintmark::config::Config;
use faintmark::detect::{detect_blind, detect_paired, DetectionReport};
use faintmark::embed::{
    augment_prompt, embed_payload, residual_of, InjectionSpec, Placement, Sign,
};
use faintmark::entropy::{entropy_map, select_placement, shannon_entropy};
use faintmark::imaging::{
    load_mask, load_png, save_mask, save_png, scale_mask, to_luma, PayloadMask,
};
use faintmark::jnd::{jnd_map, jnd_ratio};
use faintmark::scrub::{scrub, ScrubSummary};

use faintmark_cli::configio::load_config;
use faintmark_cli::corpus::{load_corpus, synth_corpus, write_corpus, BackgroundMix, CorpusSpec};
use faintmark_cli::payloads::{builtin_ids, builtin_library, DEFAULT_PAYLOAD_WIDTH};
use faintmark_cli::plots::emit_plots;
use faintmark_cli::sweeps::{
    embed_corpus, run_entropy_sweep, run_mitigation_eval, run_size_sweep, run_strength_sweep,
    SweepOutput,
};

#[derive(Parser)]
#[command(
    name = "faintmark",
    version,
    about = "Embed, measure, detect, and scrub near-invisible logo payloads"
)]
struct Cli {
    /// Plain-text TOML config file; missing keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for corpus synthesis.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackgroundArg {
    Flat,
    Gradient,
    Noise,
    Mixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Positive,
    Negative,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepArg {
    Strength,
    Entropy,
    Size,
    Mitigation,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a seeded corpus of backgrounds plus foreground shapes.
    Synth {
        #[arg(long, default_value_t = 20)]
        count: u32,
        /// Square image side in pixels.
        #[arg(long, default_value_t = 768)]
        size: u32,
        #[arg(long, value_enum, default_value_t = BackgroundArg::Flat)]
        background: BackgroundArg,
        /// Corpus directory; defaults to <out>/corpus.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Embed a payload into an image and write the injection record.
    Embed {
        #[arg(long)]
        image: PathBuf,
        /// Built-in payload id (see `--list-payloads`).
        #[arg(long)]
        payload: Option<String>,
        /// Grayscale PNG payload mask (alternative to --payload).
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Per-channel offset; defaults to the configured operating point.
        #[arg(long)]
        strength: Option<u8>,
        #[arg(long, value_enum, default_value_t = SignArg::Positive)]
        sign: SignArg,
        /// Explicit top-left origin "x,y"; otherwise the minimum-entropy
        /// window is used.
        #[arg(long)]
        origin: Option<String>,
        /// Rescale the payload bbox to this width before embedding.
        #[arg(long)]
        width: Option<u32>,
        /// Fail instead of embedding into an infeasible (busy) window.
        #[arg(long)]
        require_feasible: bool,
        /// Generation prompt to augment with the layout-steering suffix;
        /// the augmented prompt is printed to stdout.
        #[arg(long)]
        prompt: Option<String>,
        /// List the built-in payload ids and exit.
        #[arg(long)]
        list_payloads: bool,
    },
    /// Entropy map, global entropy, JND statistics, and placement for an image.
    Analyze {
        #[arg(long)]
        image: PathBuf,
        /// Tile size override for the entropy map.
        #[arg(long)]
        tile: Option<u32>,
        /// Payload bbox width used for the placement scan.
        #[arg(long, default_value_t = DEFAULT_PAYLOAD_WIDTH)]
        payload_width: u32,
        /// Clean reference: also report the visibility of the residual
        /// between the clean image and --image.
        #[arg(long)]
        clean: Option<PathBuf>,
    },
    /// Recover a payload: paired when --clean is given, blind otherwise.
    /// A corpus directory as --suspect scans every image into one CSV.
    Detect {
        #[arg(long)]
        suspect: PathBuf,
        #[arg(long)]
        clean: Option<PathBuf>,
    },
    /// Segment and regenerate the background, destroying hidden payloads.
    Scrub {
        #[arg(long)]
        image: PathBuf,
    },
    /// Run an experiment sweep over a synthesized corpus directory.
    Sweep {
        #[arg(value_enum)]
        kind: SweepArg,
        #[arg(long)]
        corpus: PathBuf,
        /// Strength levels for the strength and mitigation sweeps.
        #[arg(long, default_value = "1,2,5,10")]
        strengths: String,
        /// Payload bbox widths for the size sweep.
        #[arg(long, default_value = "256,128,64,32")]
        widths: String,
        /// Also render the summary as SVG charts.
        #[arg(long)]
        plots: bool,
    },
    /// Render a sweep summary CSV as SVG charts.
    Plot {
        #[arg(long)]
        csv: PathBuf,
    },
}

enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

impl From<faintmark::Error> for CliError {
    fn from(e: faintmark::Error) -> Self {
        CliError::Data(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    let items: Result<Vec<T>, _> = s.split(',').map(|p| p.trim().parse::<T>()).collect();
    match items {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::Usage(format!("invalid {what} list: {s:?}"))),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.into()))?;
    fs::write(path, text)
        .map_err(|e| CliError::Data(anyhow::anyhow!("writing {}: {e}", path.display())))
}

fn ensure_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(anyhow::anyhow!("creating {}: {e}", dir.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

#[derive(Serialize)]
struct DetectionSummary<'a> {
    method: &'a str,
    detected: bool,
    best_match: &'a Option<String>,
    match_score: &'a Option<f64>,
    recovered_pixels: usize,
}

fn detection_summary(report: &DetectionReport) -> DetectionSummary<'_> {
    DetectionSummary {
        method: match report.method {
            faintmark::detect::DetectionMethod::Paired => "paired",
            faintmark::detect::DetectionMethod::Blind => "blind",
        },
        detected: report.detected,
        best_match: &report.best_match,
        match_score: &report.match_score,
        recovered_pixels: report.recovered.count(),
    }
}

/// Scans a corpus directory and writes one detection CSV row per image.
fn detect_corpus(
    suspect_dir: &Path,
    clean_dir: Option<&Path>,
    out: &Path,
    cfg: &Config,
) -> Result<(), CliError> {
    use rayon::prelude::*;
    let library = builtin_library();
    let suspects = load_corpus(suspect_dir)?;
    let cleans = match clean_dir {
        Some(dir) => Some(load_corpus(dir)?),
        None => None,
    };

    let rows: Vec<String> = suspects
        .par_iter()
        .map(|img| {
            let report = match &cleans {
                Some(clean_corpus) => {
                    let clean = clean_corpus
                        .iter()
                        .find(|c| c.id == img.id)
                        .ok_or_else(|| anyhow::anyhow!("{} missing from clean corpus", img.id))?;
                    detect_paired(&clean.image, &img.image, &library, &cfg.detect)?
                }
                None => detect_blind(&img.image, &library, &cfg.detect),
            };
            let method = match report.method {
                faintmark::detect::DetectionMethod::Paired => "paired",
                faintmark::detect::DetectionMethod::Blind => "blind",
            };
            Ok(format!(
                "{},{},{},{},{}",
                img.id,
                method,
                report.detected,
                report.best_match.as_deref().unwrap_or_default(),
                report
                    .match_score
                    .map(|s| format!("{s:.6}"))
                    .unwrap_or_default(),
            ))
        })
        .collect::<anyhow::Result<_>>()?;

    ensure_out(out)?;
    let mut csv = String::from("image_id,method,detected,best_match,score\n");
    for row in &rows {
        csv.push_str(row);
        csv.push('\n');
    }
    let path = out.join("detections.csv");
    std::fs::write(&path, csv)
        .map_err(|e| CliError::Data(anyhow::anyhow!("writing {}: {e}", path.display())))?;
    println!("wrote {} detection rows to {}", rows.len(), path.display());
    Ok(())
}

fn write_sweep(out: &Path, sweep: &SweepOutput, plots: bool) -> Result<(), CliError> {
    ensure_out(out)?;
    let name = sweep.kind.name();
    let summary_path = out.join(format!("{name}_summary.csv"));
    fs::write(&summary_path, &sweep.summary_csv)
        .map_err(|e| CliError::Data(anyhow::anyhow!("writing summary: {e}")))?;
    fs::write(out.join(format!("{name}_records.csv")), &sweep.records_csv)
        .map_err(|e| CliError::Data(anyhow::anyhow!("writing records: {e}")))?;
    println!("wrote {}", summary_path.display());
    if plots {
        for (file, svg) in emit_plots(&sweep.summary_csv)? {
            fs::write(out.join(&file), svg)
                .map_err(|e| CliError::Data(anyhow::anyhow!("writing {file}: {e}")))?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg: Config = load_config(cli.config.as_deref())?;
    let out = cli.out.clone();

    match cli.command {
        Command::Synth {
            count,
            size,
            background,
            dir,
        } => {
            if count == 0 {
                return Err(CliError::Usage("--count must be >= 1".into()));
            }
            let mix = match background {
                BackgroundArg::Flat => BackgroundMix::Flat,
                BackgroundArg::Gradient => BackgroundMix::Gradient,
                BackgroundArg::Noise => BackgroundMix::Noise,
                BackgroundArg::Mixed => BackgroundMix::Mixed,
            };
            let spec = CorpusSpec {
                count,
                size,
                background: mix,
                shapes_min: 2,
                shapes_max: 3,
                shape_r_min: (size / 19).max(8),
                shape_r_max: (size / 11).max(size / 19).max(9),
                seed: cli.seed,
            };
            let corpus = synth_corpus(&spec)?;
            let dir = dir.unwrap_or_else(|| out.join("corpus"));
            write_corpus(&dir, &spec, &corpus)?;
            println!("wrote {} images to {}", corpus.len(), dir.display());
        }

        Command::Embed {
            image,
            payload,
            mask,
            strength,
            sign,
            origin,
            width,
            require_feasible,
            prompt,
            list_payloads,
        } => {
            if list_payloads {
                for id in builtin_ids() {
                    println!("{id}");
                }
                return Ok(());
            }
            if let Some(text) = &prompt {
                println!("{}", augment_prompt(text)?);
            }
            let mut payload_mask: PayloadMask = match (&payload, &mask) {
                (Some(id), None) => builtin_library()
                    .get(id)
                    .cloned()
                    .ok_or_else(|| CliError::Usage(format!("unknown payload id {id:?}")))?,
                (None, Some(path)) => load_mask(path)?,
                _ => {
                    return Err(CliError::Usage(
                        "exactly one of --payload or --mask is required".into(),
                    ))
                }
            };
            let img = load_png(&image)?;
            if let Some(w) = width {
                payload_mask = scale_mask(&payload_mask, w)?;
            }
            let placement = match origin {
                Some(text) => {
                    let coords: Vec<u32> = parse_list(&text, "origin")?;
                    if coords.len() != 2 {
                        return Err(CliError::Usage("--origin expects \"x,y\"".into()));
                    }
                    Placement::Origin(coords[0], coords[1])
                }
                None => {
                    let bbox = payload_mask.bbox();
                    let decision = select_placement(
                        &to_luma(&img),
                        (bbox.w, bbox.h),
                        cfg.entropy.tile_size,
                        &cfg.entropy,
                    )?;
                    Placement::Decision(decision)
                }
            };
            let spec = InjectionSpec {
                strength: strength.unwrap_or(cfg.embed.default_strength),
                sign: match sign {
                    SignArg::Positive => Sign::Positive,
                    SignArg::Negative => Sign::Negative,
                },
                placement,
                mask: payload_mask,
                require_feasible,
            };
            let (injected, record) = embed_payload(&img, &spec)?;
            ensure_out(&out)?;
            let base = stem(&image);
            let png_path = out.join(format!("{base}_embedded.png"));
            save_png(&injected, &png_path)?;
            write_json(&out.join(format!("{base}_embedded.json")), &record)?;
            println!(
                "embedded {} at ({}, {}) strength {} ({} clipped) -> {}",
                record.payload_id,
                record.origin.0,
                record.origin.1,
                record.strength,
                record.clipped_pixels,
                png_path.display()
            );
        }

        Command::Analyze {
            image,
            tile,
            payload_width,
            clean,
        } => {
            let img = load_png(&image)?;
            let luma = to_luma(&img);
            let tile_size = tile.unwrap_or(cfg.entropy.tile_size);
            let map = entropy_map(&luma, tile_size)?;
            let global = shannon_entropy(&luma);
            let jnd = jnd_map(&luma, &cfg.jnd);
            let (mut t_min, mut t_max, mut t_sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
            for &t in jnd.thresholds() {
                t_min = t_min.min(t);
                t_max = t_max.max(t);
                t_sum += t;
            }
            let side = payload_width.min(img.width()).min(img.height());
            let placement = select_placement(&luma, (side, side), tile_size, &cfg.entropy)?;

            // With a clean reference, grade the visibility of whatever
            // residual separates the two images.
            let visibility = match &clean {
                None => None,
                Some(clean_path) => {
                    let clean_img = load_png(clean_path)?;
                    let residual = residual_of(&clean_img, &img)?;
                    if residual.is_empty() {
                        None
                    } else {
                        Some(jnd_ratio(&clean_img, &img, &residual, &cfg.jnd)?)
                    }
                }
            };

            #[derive(Serialize)]
            struct Analysis {
                global_entropy: f64,
                entropy_map: faintmark::entropy::EntropyMap,
                jnd_min: f64,
                jnd_mean: f64,
                jnd_max: f64,
                placement: faintmark::entropy::PlacementDecision,
                #[serde(skip_serializing_if = "Option::is_none")]
                visibility: Option<faintmark::jnd::VisibilityReport>,
            }
            ensure_out(&out)?;
            let path = out.join(format!("{}_analysis.json", stem(&image)));
            write_json(
                &path,
                &Analysis {
                    global_entropy: global,
                    jnd_min: t_min,
                    jnd_mean: t_sum / jnd.thresholds().len() as f64,
                    jnd_max: t_max,
                    entropy_map: map,
                    placement,
                    visibility,
                },
            )?;
            println!(
                "global entropy {global:.3} bits; placement {:?} (feasible: {}) -> {}",
                placement.origin,
                placement.feasible,
                path.display()
            );
        }

        Command::Detect { suspect, clean } => {
            if suspect.is_dir() {
                return detect_corpus(&suspect, clean.as_deref(), &out, &cfg);
            }
            let suspect_img = load_png(&suspect)?;
            let library = builtin_library();
            let report = match clean {
                Some(clean_path) => {
                    let clean_img = load_png(&clean_path)?;
                    detect_paired(&clean_img, &suspect_img, &library, &cfg.detect)?
                }
                None => detect_blind(&suspect_img, &library, &cfg.detect),
            };
            ensure_out(&out)?;
            let base = stem(&suspect);
            write_json(
                &out.join(format!("{base}_detection.json")),
                &detection_summary(&report),
            )?;
            if !report.recovered.is_empty() {
                save_mask(&report.recovered, out.join(format!("{base}_recovered.png")))?;
            }
            println!(
                "detected: {} match: {} score: {}",
                report.detected,
                report.best_match.as_deref().unwrap_or("-"),
                report
                    .match_score
                    .map(|s| format!("{s:.3}"))
                    .unwrap_or_else(|| "-".into())
            );
        }

        Command::Scrub { image } => {
            let img = load_png(&image)?;
            let report = scrub(&img, &cfg);
            ensure_out(&out)?;
            let base = stem(&image);
            let png_path = out.join(format!("{base}_cleaned.png"));
            save_png(&report.cleaned, &png_path)?;
            write_json(
                &out.join(format!("{base}_scrub.json")),
                &ScrubSummary::from(&report),
            )?;
            println!(
                "coverage {:.3}, payload destroyed: {} -> {}",
                report.background.coverage(),
                report.payload_destroyed,
                png_path.display()
            );
        }

        Command::Sweep {
            kind,
            corpus,
            strengths,
            widths,
            plots,
        } => {
            let corpus_images = load_corpus(&corpus)?;
            let library = builtin_library();
            let sweep = match kind {
                SweepArg::Strength => {
                    let levels: Vec<u8> = parse_list(&strengths, "strengths")?;
                    run_strength_sweep(&corpus_images, &library, &levels, &cfg)?
                }
                SweepArg::Entropy => run_entropy_sweep(&corpus_images, &library, &cfg)?,
                SweepArg::Size => {
                    let w: Vec<u32> = parse_list(&widths, "widths")?;
                    run_size_sweep(&corpus_images, &library, &w, &cfg)?
                }
                SweepArg::Mitigation => {
                    let levels: Vec<u8> = parse_list(&strengths, "strengths")?;
                    let embedded = embed_corpus(&corpus_images, &library, &levels, &cfg)?;
                    run_mitigation_eval(&embedded, &library, &cfg)?
                }
            };
            write_sweep(&out, &sweep, plots)?;
        }

        Command::Plot { csv } => {
            let text = fs::read_to_string(&csv)
                .map_err(|e| CliError::Data(anyhow::anyhow!("reading {}: {e}", csv.display())))?;
            let rendered = emit_plots(&text)?;
            ensure_out(&out)?;
            for (file, svg) in &rendered {
                fs::write(out.join(file), svg)
                    .map_err(|e| CliError::Data(anyhow::anyhow!("writing {file}: {e}")))?;
            }
            println!("wrote {} chart(s) to {}", rendered.len(), out.display());
        }
    }
    Ok(())
}
