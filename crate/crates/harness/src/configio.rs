//! Config file loading: a plain-text TOML file whose keys mirror the
//! [`Config`] structure; missing keys keep their defaults.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use faintmark::Config;

pub fn load_config(path: Option<&Path>) -> Result<Config> {
    let cfg = match path {
        None => Config::default(),
        Some(p) => {
            let text =
                fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &Config) -> Result<()> {
    if cfg.entropy.tile_size < 8 {
        bail!("entropy.tile_size must be >= 8");
    }
    if !(0.0..=8.0).contains(&cfg.entropy.threshold_bits) {
        bail!("entropy.threshold_bits must be within [0, 8]");
    }
    if cfg.detect.blind_min > cfg.detect.blind_max {
        bail!("detect.blind_min must not exceed detect.blind_max");
    }
    if cfg.detect.min_area == 0 {
        bail!("detect.min_area must be >= 1");
    }
    for (name, v) in [
        ("jnd.invisible_cutoff", cfg.jnd.invisible_cutoff),
        ("jnd.visible_cutoff", cfg.jnd.visible_cutoff),
        ("detect.iou_threshold", cfg.detect.iou_threshold),
    ] {
        if !(0.0..=1.0).contains(&v) {
            bail!("{name} must be within [0, 1]");
        }
    }
    if cfg.jnd.visible_cutoff > cfg.jnd.invisible_cutoff {
        bail!("jnd.visible_cutoff must not exceed jnd.invisible_cutoff");
    }
    if cfg.scrub.sigma_max < 0.0 || cfg.scrub.noise_std < 0.0 {
        bail!("scrub parameters must be non-negative");
    }
    Ok(())
}
